from datetime import datetime, timezone

import pytest

from src import kgraph
from src.cascade import (
    DEFAULT_THRESHOLDS,
    AllocationResult,
    CascadeConfig,
    CascadeResources,
    allocate,
    allocate_batch,
    dumps_results,
    read_results_log,
    write_results_log,
)
from src.concept_kb import ConceptEdge, ConceptKB
from src.embeddings import ContextProfile, centroid_distance
from src.errors import ConfigError, MalformedRow
from src.external_linker import ExternalSkillRecord, ingest_external
from src.kgraph import Allocation, KnowledgeGraph, upsert_allocation
from src.ner import GazetteerTagger
from src.preprocess import OrphanEntity
from src.verdict import ModuleVerdict, Provenance

AS_OF = '2024-01-01T00:00:00+00:00'
FASTPATH, CONCEPT, ASSOCIATION, NER, EXTERNAL = (
    Provenance.FASTPATH, Provenance.CONCEPT, Provenance.ASSOCIATION, Provenance.NER, Provenance.EXTERNAL)


@pytest.fixture
def make_resources(store, normalizer):
    def build(kb_edges=(), gazetteer=None):
        kb = ConceptKB(ConceptEdge('RelatedTo', s, e, w) for s, e, w in kb_edges)
        return CascadeResources(store, kb, GazetteerTagger(gazetteer or {}), normalizer)
    return build


def config(**overrides):
    overrides.setdefault('as_of', AS_OF)
    return CascadeConfig(**overrides)


def stages(result):
    return [(stage, verdict.accepted) for stage, verdict in result.trace]


def external(kg, skill, category):
    when = datetime(2024, 3, 1, tzinfo=timezone.utc)
    ingest_external(kg, [ExternalSkillRecord(skill, category, 'esco', when)])


def test_fastpath_hit(doc_factory, make_resources, store):
    doc = doc_factory('r1', 'python code developer')
    kg = upsert_allocation(KnowledgeGraph(), Allocation('python', 'programming', CONCEPT, 0.1), created_at=AS_OF)
    before = kg.edges()
    result = allocate('python', doc, [doc], kg, make_resources(), config())
    assert stages(result) == [(FASTPATH, True), (EXTERNAL, False)]
    assert (result.allocated, result.destination, result.module) == (True, 'programming', FASTPATH)
    assert result.distance == pytest.approx(centroid_distance(store, 'programming', ['code', 'developer']))
    assert kg.edges() == before


def test_concept_hit(doc_factory, make_resources):
    doc = doc_factory('r1', 'python code developer')
    kg = KnowledgeGraph()
    resources = make_resources(kb_edges=[('python', 'programming', 2.0), ('python', 'snake', 1.0)])
    result = allocate('python', doc, [doc], kg, resources, config())
    assert stages(result) == [(FASTPATH, False), (CONCEPT, True), (EXTERNAL, False)]
    assert result.trace[0][1] == ModuleVerdict.decline()
    assert (result.destination, result.module) == ('programming', CONCEPT)
    [edge] = kg.edges()
    assert (edge.source, edge.destination, edge.provenance, edge.created_at) == (
        'python', 'programming', CONCEPT, AS_OF)
    assert edge.weight == pytest.approx(1 - result.distance / 2)


def test_association_hit(doc_factory, make_resources, store, normalizer):
    corpus = [
        doc_factory('r1', 'python code developer'),
        doc_factory('r2', 'python code software'),
        doc_factory('r3', 'python code programming'),
    ]
    result = allocate('python', corpus[0], corpus, KnowledgeGraph(), make_resources(), config())
    assert stages(result) == [(FASTPATH, False), (CONCEPT, False), (ASSOCIATION, True), (EXTERNAL, False)]
    ctx = normalizer.extract_context(corpus[0], 'python', 5)
    expected = ContextProfile(store, ctx.words).best(['code', 'developer', 'programming', 'software'])
    assert (result.destination, result.distance) == (expected[0], pytest.approx(expected[1]))
    assert result.module == ASSOCIATION


def test_ner_hit(doc_factory, make_resources):
    doc = doc_factory('r1', 'statistics analysis report')
    kg = upsert_allocation(KnowledgeGraph(), Allocation('analysis', 'science', CONCEPT, 0.2), created_at=AS_OF)
    resources = make_resources(gazetteer={'statistics': 'SKILL'})
    result = allocate('cobol', doc, [doc], kg, resources, config())
    assert stages(result) == [(FASTPATH, False), (CONCEPT, False), (ASSOCIATION, False), (NER, True),
                              (EXTERNAL, False)]
    assert (result.destination, result.module) == ('analysis', NER)
    assert kg.edge('cobol', 'analysis', NER) is not None


def test_external_only_hit(doc_factory, make_resources):
    doc = doc_factory('r1', 'fortran')
    kg = KnowledgeGraph()
    external(kg, 'fortran', 'programming language')
    result = allocate('Fortran', doc, [doc], kg, make_resources(), config())
    assert stages(result) == [(FASTPATH, False), (CONCEPT, False), (ASSOCIATION, False), (NER, False),
                              (EXTERNAL, True)]
    assert (result.destination, result.module, result.distance) == ('programming language', EXTERNAL, 0.0)
    assert len(kg.edges()) == 1


def test_full_decline(doc_factory, make_resources):
    doc = doc_factory('r1', 'nothing useful here')
    kg = KnowledgeGraph()
    result = allocate('zzz', doc, [doc], kg, make_resources(), config())
    assert not result.allocated
    assert result.destination is None and result.module is None
    assert [stage for stage, _ in result.trace] == [FASTPATH, CONCEPT, ASSOCIATION, NER, EXTERNAL]
    assert not any(verdict.accepted for _, verdict in result.trace)
    assert kg.nodes() == []


def test_external_override_switch(doc_factory, make_resources):
    doc = doc_factory('r1', 'python code developer')
    resources = make_resources(kb_edges=[('python', 'programming', 2.0)])

    kg = KnowledgeGraph()
    external(kg, 'python', 'programming language')
    overridden = allocate('python', doc, [doc], kg, resources, config(thresholds={FASTPATH: 0.0}))
    assert stages(overridden) == [(FASTPATH, False), (CONCEPT, True), (EXTERNAL, True)]
    assert (overridden.destination, overridden.module) == ('programming language', EXTERNAL)

    kg = KnowledgeGraph()
    external(kg, 'python', 'programming language')
    kept = allocate('python', doc, [doc], kg, resources,
                    config(thresholds={FASTPATH: 0.0}, external_overrides=False))
    assert (kept.destination, kept.module) == ('programming', CONCEPT)


def test_stage_order_changes_destination(doc_factory, make_resources):
    doc = doc_factory('r1', 'python statistics')
    resources = make_resources(kb_edges=[('python', 'programming', 1.0)], gazetteer={'statistics': 'SKILL'})
    permissive = {stage: 2.0 for stage in DEFAULT_THRESHOLDS}

    def run(order):
        kg = upsert_allocation(KnowledgeGraph(), Allocation('analysis', 'science', CONCEPT, 0.2), created_at=AS_OF)
        return allocate('python', doc, [doc], kg, resources, config(stage_order=order, thresholds=permissive))

    default_order = run((FASTPATH, CONCEPT, ASSOCIATION, NER))
    ner_first = run((FASTPATH, NER, CONCEPT, ASSOCIATION))
    assert default_order.destination != ner_first.destination
    assert [stage for stage, _ in ner_first.trace] == [FASTPATH, NER, EXTERNAL]


def test_empty_orphan_is_unallocated(doc_factory, make_resources):
    doc = doc_factory('r1', 'python')
    result = allocate('!!!', doc, [doc], KnowledgeGraph(), make_resources(), config())
    assert not result.allocated
    assert result.trace == []


def test_batch_couples_through_graph(doc_factory, make_resources):
    corpus = [doc_factory('r1', 'python code developer'), doc_factory('r2', 'python software code')]
    resources = make_resources(kb_edges=[('python', 'programming', 2.0)])
    kg = KnowledgeGraph()
    orphans = [OrphanEntity('python', 'r1'), OrphanEntity('python', 'r2')]
    first, second = allocate_batch(orphans, corpus, kg, resources, config())
    assert first.module == CONCEPT
    assert (second.module, second.destination) == (FASTPATH, 'programming')
    assert [stage for stage, _ in second.trace] == [FASTPATH, EXTERNAL]


def test_batch_equals_fold_and_grows_monotonically(doc_factory, make_resources):
    corpus = [doc_factory('r1', 'python code developer'), doc_factory('r2', 'snake zoo reptile python')]
    resources = make_resources(kb_edges=[('python', 'programming', 2.0), ('python', 'snake', 1.0)],
                               gazetteer={'zoo': 'ORG'})
    orphans = [OrphanEntity('python', 'r1'), OrphanEntity('java', 'r1'), OrphanEntity('python', 'r2'),
               OrphanEntity('reptile', 'r2')]

    batch_kg = KnowledgeGraph()
    batch = allocate_batch(orphans, corpus, batch_kg, resources, config())

    fold_kg = KnowledgeGraph()
    sizes = []
    folded = []
    documents = {doc.id: doc for doc in corpus}
    for orphan in orphans:
        folded.append(allocate(orphan.surface, documents[orphan.resume_id], corpus, fold_kg, resources, config()))
        sizes.append((len(fold_kg.nodes()), len(fold_kg.edges())))

    assert dumps_results(batch) == dumps_results(folded)
    assert batch_kg == fold_kg
    assert sizes == sorted(sizes)


def test_batch_edge_cases(doc_factory, make_resources):
    assert allocate_batch([], [], KnowledgeGraph(), make_resources(), config()) == []
    [result] = allocate_batch([OrphanEntity('python', 'missing')], [doc_factory('r1', 'python')],
                              KnowledgeGraph(), make_resources(), config())
    assert result.resume_id == 'missing'
    assert not result.allocated


def test_batch_is_reproducible(doc_factory, make_resources):
    corpus = [doc_factory('r1', 'python code developer'), doc_factory('r2', 'statistics python data')]
    resources = make_resources(kb_edges=[('python', 'programming', 2.0)], gazetteer={'statistics': 'SKILL'})
    orphans = [OrphanEntity('python', 'r1'), OrphanEntity('python', 'r2'), OrphanEntity('data', 'r2')]

    def run():
        kg = KnowledgeGraph()
        results = allocate_batch(orphans, corpus, kg, resources, config())
        return dumps_results(results), kgraph.export(kg, 'json')

    assert run() == run()


def test_batch_without_as_of_stamps_graph_clock(doc_factory, make_resources):
    corpus = [doc_factory('r1', 'python code developer'), doc_factory('r2', 'statistics python data')]
    resources = make_resources(kb_edges=[('python', 'programming', 2.0), ('data', 'science', 1.0)])
    orphans = [OrphanEntity('python', 'r1'), OrphanEntity('data', 'r2')]

    def run():
        kg = KnowledgeGraph()
        external(kg, 'fortran', 'programming language')
        allocate_batch(orphans, corpus, kg, resources, CascadeConfig())
        return kg

    kg = run()
    committed = [edge for edge in kg.edges() if edge.provenance is CONCEPT]
    assert len(committed) == 2
    assert {edge.created_at for edge in committed} == {'2024-03-01T00:00:00+00:00'}
    assert kgraph.export(kg, 'json') == kgraph.export(run(), 'json')


def test_results_log_round_trip(tmp_path, doc_factory, make_resources):
    doc = doc_factory('r1', 'python code developer')
    resources = make_resources(kb_edges=[('python', 'programming', 2.0)])
    results = allocate_batch([OrphanEntity('python', 'r1'), OrphanEntity('zzz', 'r1')], [doc],
                             KnowledgeGraph(), resources, config())
    path = tmp_path / 'results.ndjson'
    write_results_log(results, path)
    lines = path.read_text(encoding='utf-8').splitlines()
    assert len(lines) == 2
    assert lines[0].startswith('{"orphan": "python", "resume_id": "r1", "outcome": "Allocated"')
    assert read_results_log(path) == results


def test_results_log_rejects_garbage(write_file):
    with pytest.raises(MalformedRow) as exc:
        read_results_log(write_file('r.ndjson', '{"orphan": "a"}\n'))
    assert exc.value.line_no == 1


def test_allocation_result_dict_keys():
    result = AllocationResult('python', 'r1', False, trace=[(FASTPATH, ModuleVerdict.decline())])
    assert list(result.to_dict()) == ['orphan', 'resume_id', 'outcome', 'destination', 'module', 'distance', 'trace']
    assert result.to_dict()['trace'] == [
        {'stage': 'FastPath', 'outcome': 'Declined', 'destination': None, 'distance': None}]


@pytest.mark.parametrize('overrides', [
    {'stage_order': (FASTPATH, CONCEPT, CONCEPT, NER)},
    {'stage_order': (FASTPATH, CONCEPT, NER)},
    {'stage_order': (FASTPATH, CONCEPT, ASSOCIATION, NER, EXTERNAL)},
    {'thresholds': {CONCEPT: 2.5}},
    {'radius': 0},
    {'min_support': 0},
    {'bigram_mode': 'trigram'},
    {'aggregation': 'median'},
])
def test_config_validation(overrides):
    with pytest.raises(ConfigError):
        CascadeConfig(**overrides)


def test_config_accepts_stage_names_and_partial_thresholds():
    cfg = CascadeConfig(stage_order=('ner', 'Concept', 'fast_path', 'association'), thresholds={'concept': 0.4})
    assert cfg.stage_order == (NER, CONCEPT, FASTPATH, ASSOCIATION)
    assert cfg.thresholds[CONCEPT] == 0.4
    assert cfg.thresholds[NER] == 0.50
    assert cfg.association_params().threshold == 0.60
