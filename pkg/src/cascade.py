"""The allocation cascade.

Stages run in the configured order until one accepts. The external
existence check always runs afterwards; when it accepts it fills a
failure, and it replaces an earlier acceptance when `external_overrides`
is set. Accepted allocations are committed to the graph, except fast-path
ones, which only confirm an edge the graph already has.
"""
import json
import logging
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

from .assoc_miner import BIGRAM_MODES, MERGED, AssociationParams, allocate_association
from .concept_kb import ConceptKB
from .concept_miner import allocate_concept
from .embeddings import AGGREGATIONS, CENTROID, EmbeddingStore
from .errors import ConfigError, MalformedRow, decoding
from .external_linker import external_lookup
from .kgraph import Allocation, KnowledgeGraph, fastpath_allocate, graph_clock, upsert_allocation
from .ner import allocate_ner
from .preprocess import OrphanEntity, PreprocessedDocument, TextNormalizer
from .tagger_client import BaseTagger
from .verdict import ModuleVerdict, Provenance

logger = logging.getLogger(__name__)

STAGES = (Provenance.FASTPATH, Provenance.CONCEPT, Provenance.ASSOCIATION, Provenance.NER)

DEFAULT_THRESHOLDS = {
    Provenance.FASTPATH: 0.50,
    Provenance.CONCEPT: 0.55,
    Provenance.ASSOCIATION: 0.60,
    Provenance.NER: 0.50,
}


@dataclass(frozen=True)
class CascadeConfig:
    stage_order: Tuple[Provenance, ...] = STAGES
    thresholds: Dict[Provenance, float] = field(default_factory=lambda: dict(DEFAULT_THRESHOLDS))
    radius: int = 5
    concept_limit: int = 50
    concept_relations: Tuple[str, ...] = ()
    min_support: float = 0.05
    min_confidence: float = 0.3
    min_lift: float = 1.0
    max_itemset_size: Optional[int] = 3
    bigram_mode: str = MERGED
    ner_labels: Tuple[str, ...] = ()
    aggregation: str = CENTROID
    external_overrides: bool = True
    as_of: Optional[str] = None

    def __post_init__(self):
        order = tuple(Provenance.parse(stage) for stage in self.stage_order)
        if len(set(order)) != len(order):
            raise ConfigError(f"stage order has duplicates: {[s.value for s in order]}")
        if set(order) != set(STAGES):
            raise ConfigError(f"stage order must be a permutation of {[s.value for s in STAGES]}")
        object.__setattr__(self, 'stage_order', order)

        thresholds = {Provenance.parse(stage): float(value) for stage, value in self.thresholds.items()}
        for stage in STAGES:
            value = thresholds.setdefault(stage, DEFAULT_THRESHOLDS[stage])
            if not 0.0 <= value <= 2.0:
                raise ConfigError(f"{stage.value} threshold must lie in [0, 2], got {value}")
        object.__setattr__(self, 'thresholds', thresholds)

        if self.radius < 1:
            raise ConfigError(f"radius must be >= 1, got {self.radius}")
        if self.concept_limit < 1:
            raise ConfigError(f"concept limit must be >= 1, got {self.concept_limit}")
        if not 0 < self.min_support <= 1:
            raise ConfigError(f"min_support must lie in (0, 1], got {self.min_support}")
        if not 0 < self.min_confidence <= 1:
            raise ConfigError(f"min_confidence must lie in (0, 1], got {self.min_confidence}")
        if self.min_lift < 0:
            raise ConfigError(f"min_lift must be >= 0, got {self.min_lift}")
        if self.max_itemset_size is not None and self.max_itemset_size < 1:
            raise ConfigError(f"max itemset size must be >= 1, got {self.max_itemset_size}")
        if self.bigram_mode not in BIGRAM_MODES:
            raise ConfigError(f"bigram mode must be one of {BIGRAM_MODES}, got '{self.bigram_mode}'")
        if self.aggregation not in AGGREGATIONS:
            raise ConfigError(f"aggregation must be one of {AGGREGATIONS}, got '{self.aggregation}'")

    def association_params(self) -> AssociationParams:
        return AssociationParams(
            radius=self.radius,
            min_support=self.min_support,
            min_confidence=self.min_confidence,
            min_lift=self.min_lift,
            threshold=self.thresholds[Provenance.ASSOCIATION],
            max_itemset_size=self.max_itemset_size,
            bigram_mode=self.bigram_mode,
            aggregation=self.aggregation,
        )


@dataclass
class CascadeResources:
    store: EmbeddingStore
    concept_kb: ConceptKB
    tagger: BaseTagger
    normalizer: TextNormalizer = field(default_factory=TextNormalizer)


@dataclass
class AllocationResult:
    orphan: str
    resume_id: str
    allocated: bool
    destination: Optional[str] = None
    module: Optional[Provenance] = None
    distance: Optional[float] = None
    trace: List[Tuple[Provenance, ModuleVerdict]] = field(default_factory=list)

    def to_dict(self):
        return {
            'orphan': self.orphan,
            'resume_id': self.resume_id,
            'outcome': 'Allocated' if self.allocated else 'Unallocated',
            'destination': self.destination,
            'module': self.module.value if self.module else None,
            'distance': self.distance,
            'trace': [{'stage': stage.value, **verdict.to_dict()} for stage, verdict in self.trace],
        }

    @classmethod
    def from_dict(cls, data):
        module = data.get('module')
        return cls(
            orphan=data['orphan'],
            resume_id=data['resume_id'],
            allocated=data['outcome'] == 'Allocated',
            destination=data.get('destination'),
            module=Provenance(module) if module else None,
            distance=data.get('distance'),
            trace=[(Provenance(entry['stage']), ModuleVerdict.from_dict(entry)) for entry in data.get('trace', [])],
        )


def _run_stage(stage, orphan, doc, ctx, corpus, kg, resources, cfg) -> ModuleVerdict:
    threshold = cfg.thresholds[stage]
    if stage is Provenance.FASTPATH:
        return fastpath_allocate(kg, orphan, ctx, resources.store, threshold, cfg.aggregation)
    if stage is Provenance.CONCEPT:
        return allocate_concept(orphan, ctx, resources.concept_kb, resources.store, threshold,
                                cfg.concept_limit, cfg.concept_relations, cfg.aggregation)
    if stage is Provenance.ASSOCIATION:
        return allocate_association(orphan, ctx, corpus, resources.store, cfg.association_params(),
                                    resources.normalizer)
    return allocate_ner(orphan, doc, kg, resources.store, resources.tagger, threshold, cfg.ner_labels)


def allocate(orphan: str, doc: PreprocessedDocument, corpus: Sequence[PreprocessedDocument], kg: KnowledgeGraph,
             resources: CascadeResources, cfg: CascadeConfig) -> AllocationResult:
    normalizer = resources.normalizer
    surface = normalizer.term(orphan)
    if not surface:
        logger.warning(f"⚠️ '{orphan}' ({doc.id}): nothing left after normalization, skipped")
        return AllocationResult(orphan, doc.id, False)

    ctx = normalizer.extract_context(doc, surface, cfg.radius)
    trace = []
    accepted = None
    for stage in cfg.stage_order:
        verdict = _run_stage(stage, surface, doc, ctx, corpus, kg, resources, cfg)
        trace.append((stage, verdict))
        logger.debug(f"{surface} ({doc.id}) {stage.value}: {verdict}")
        if verdict.accepted:
            accepted = (stage, verdict)
            break

    external = external_lookup(kg, surface, normalizer)
    trace.append((Provenance.EXTERNAL, external))
    if external.accepted and (accepted is None or cfg.external_overrides):
        accepted = (Provenance.EXTERNAL, external)

    if accepted is None:
        logger.info(f"⚠️ {surface} ({doc.id}): unallocated after {len(trace)} checks")
        return AllocationResult(surface, doc.id, False, trace=trace)

    stage, verdict = accepted
    if stage is not Provenance.FASTPATH:
        upsert_allocation(kg, Allocation(surface, verdict.destination, stage, verdict.distance, doc.id),
                          created_at=cfg.as_of)
    logger.info(f"✅ {surface} ({doc.id}) -> {verdict.destination} via {stage.value} ({verdict.distance:.4f})")
    return AllocationResult(surface, doc.id, True, verdict.destination, stage, verdict.distance, trace)


def allocate_batch(orphans: Sequence[OrphanEntity], corpus: Sequence[PreprocessedDocument], kg: KnowledgeGraph,
                   resources: CascadeResources, cfg: CascadeConfig) -> List[AllocationResult]:
    """Allocate in input order; each allocation sees every edge committed before it."""
    if cfg.as_of is None:
        cfg = replace(cfg, as_of=graph_clock(kg))
        logger.info(f"Stamping committed edges with {cfg.as_of}")
    documents = {doc.id: doc for doc in corpus}
    results = []
    for orphan in orphans:
        doc = documents.get(orphan.resume_id)
        if doc is None:
            logger.warning(f"Resume '{orphan.resume_id}' not in corpus, allocating '{orphan.surface}' without context")
            doc = PreprocessedDocument(orphan.resume_id)
        results.append(allocate(orphan.surface, doc, corpus, kg, resources, cfg))

    allocated = sum(1 for result in results if result.allocated)
    logger.info(f"Batch finished: {allocated} of {len(results)} orphans allocated")
    return results


# results log: one JSON document per line, fields in the order of AllocationResult.to_dict

def dumps_results(results: Sequence[AllocationResult]) -> str:
    return ''.join(json.dumps(result.to_dict(), ensure_ascii=False) + '\n' for result in results)


def write_results_log(results: Sequence[AllocationResult], path):
    with open(path, 'w', encoding='utf-8') as f:
        f.write(dumps_results(results))
    logger.info(f"Wrote {len(results)} results to {path}")


def read_results_log(path) -> List[AllocationResult]:
    results = []
    with decoding(path), open(path, 'r', encoding='utf-8') as f:
        for line_no, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                results.append(AllocationResult.from_dict(json.loads(line)))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
                raise MalformedRow(path, line_no, str(e)) from e
    return results
