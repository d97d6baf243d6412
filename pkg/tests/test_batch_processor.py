import pytest

from src.batch_processor import BatchProcessor, load_orphans, write_token_files
from src.errors import IoFailure, MalformedRow
from src.manager import TaggerService
from src.ner import GazetteerTagger
from src.preprocess import OrphanEntity, RawDocument


def test_normalize_corpus_keeps_input_order(normalizer):
    documents = [RawDocument(f"r{i:02d}", f"python developer number {i}") for i in range(25)]
    with BatchProcessor(normalizer, max_workers=4) as processor:
        corpus = processor.normalize_corpus(documents)
    assert [doc.id for doc in corpus] == [doc.id for doc in documents]
    assert corpus == [normalizer.normalize(doc) for doc in documents]


def test_load_corpus_reads_txt_files(tmp_path, normalizer):
    (tmp_path / 'b.txt').write_text('Excel reports', encoding='utf-8')
    (tmp_path / 'a.txt').write_text('Python code', encoding='utf-8')
    (tmp_path / 'notes.md').write_text('ignored', encoding='utf-8')
    with BatchProcessor(normalizer, max_workers=2) as processor:
        corpus = processor.load_corpus(tmp_path)
    assert [doc.id for doc in corpus] == ['a', 'b']
    assert corpus[0].surfaces == ['python', 'code']


def test_missing_corpus_folder_is_empty(tmp_path, normalizer):
    with BatchProcessor(normalizer) as processor:
        assert processor.load_corpus(tmp_path / 'missing') == []


def test_prefetch_fills_the_tag_cache(doc_factory, normalizer):
    corpus = [doc_factory('r1', 'excel reports'), doc_factory('r2', 'excel models')]
    service = TaggerService(GazetteerTagger({'excel': 'TOOL'}))
    with BatchProcessor(normalizer, max_workers=2) as processor:
        processor.prefetch_tags(service, corpus, {'r2'})
    assert set(service._cache) == {'r2'}


def test_write_token_files(tmp_path, doc_factory):
    corpus = [doc_factory('r1', 'Python and the data'), doc_factory('r2', '')]
    paths = write_token_files(corpus, tmp_path / 'tokens')
    assert [p.rsplit('/', 1)[-1] for p in paths] == ['r1.tsv', 'r2.tsv']
    lines = (tmp_path / 'tokens' / 'r1.tsv').read_text(encoding='utf-8').splitlines()
    assert lines == ['python\tpython\tpython\t0', 'data\tdata\tdata\t3']
    assert (tmp_path / 'tokens' / 'r2.tsv').read_text(encoding='utf-8') == ''


def test_load_orphans(write_file):
    path = write_file('orphans.tsv', '# orphan\tresume\nPython\tr1\n\nmachine learning\tr2\n')
    assert load_orphans(path) == [OrphanEntity('Python', 'r1'), OrphanEntity('machine learning', 'r2')]


@pytest.mark.parametrize('row', ['python\n', 'python\tr1\textra\n', '\tr1\n', 'python\t \n'])
def test_load_orphans_rejects_bad_rows(write_file, row):
    with pytest.raises(MalformedRow) as exc:
        load_orphans(write_file('orphans.tsv', 'excel\tr1\n' + row))
    assert exc.value.line_no == 2


def test_load_orphans_rejects_undecodable_file(tmp_path):
    path = tmp_path / 'orphans.tsv'
    path.write_bytes(b'python\tr1\ncaf\xe9\tr2\n')
    with pytest.raises(IoFailure, match='orphans.tsv'):
        load_orphans(path)


def test_undecodable_resume_names_the_file(tmp_path, normalizer):
    (tmp_path / 'r1.txt').write_bytes(b'python \xff\xfe developer')
    with BatchProcessor(normalizer) as processor, pytest.raises(IoFailure, match='r1.txt'):
        processor.load_corpus(tmp_path)
