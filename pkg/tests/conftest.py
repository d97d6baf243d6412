import hypothesis
import numpy as np
import pytest

from src.embeddings import EmbeddingStore
from src.preprocess import RawDocument, TextNormalizer

hypothesis.settings.register_profile("fast", max_examples=10)
hypothesis.settings.register_profile("debugger", report_multiple_bugs=False)

# Axes: programming, data, animals, business
VOCABULARY = {
    'programming': [1.0, 0.0, 0.0, 0.0],
    'software': [0.9, 0.1, 0.0, 0.0],
    'code': [1.0, 0.05, 0.0, 0.0],
    'developer': [0.95, 0.0, 0.0, 0.05],
    'language': [0.8, 0.1, 0.1, 0.0],
    'python': [0.6, 0.3, 0.4, 0.0],
    'java': [0.9, 0.0, 0.0, 0.1],
    'data': [0.2, 1.0, 0.0, 0.0],
    'analysis': [0.1, 1.0, 0.0, 0.1],
    'statistics': [0.0, 1.0, 0.0, 0.1],
    'machine': [0.3, 0.8, 0.0, 0.0],
    'learning': [0.2, 0.9, 0.0, 0.0],
    'science': [0.1, 0.9, 0.1, 0.0],
    'reptile': [0.0, 0.0, 1.0, 0.0],
    'snake': [0.0, 0.0, 1.0, 0.05],
    'zoo': [0.0, 0.0, 0.9, 0.2],
    'animal': [0.0, 0.05, 0.95, 0.0],
    'sales': [0.0, 0.0, 0.0, 1.0],
    'marketing': [0.0, 0.1, 0.0, 1.0],
    'business': [0.1, 0.0, 0.0, 1.0],
    'excel': [0.1, 0.4, 0.0, 0.8],
}

STOPWORDS = {'a', 'an', 'and', 'at', 'for', 'in', 'of', 'on', 'the', 'to', 'with'}


def make_store(vocabulary=None):
    vocabulary = VOCABULARY if vocabulary is None else vocabulary
    vectors = {}
    for word, values in vocabulary.items():
        vector = np.array(values, dtype=np.float64)
        vector.setflags(write=False)
        vectors[word] = vector
    dimension = len(next(iter(vectors.values()))) if vectors else 0
    return EmbeddingStore(dimension, vectors)


def embeddings_text(vocabulary=None):
    vocabulary = VOCABULARY if vocabulary is None else vocabulary
    return ''.join(f"{word} {' '.join(repr(value) for value in values)}\n" for word, values in vocabulary.items())


@pytest.fixture
def store():
    return make_store()


@pytest.fixture
def normalizer():
    return TextNormalizer(STOPWORDS)


@pytest.fixture
def doc_factory(normalizer):
    def build(doc_id, text):
        return normalizer.normalize(RawDocument(doc_id, text))
    return build


@pytest.fixture
def write_file(tmp_path):
    def write(name, content):
        path = tmp_path / name
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(content, encoding='utf-8')
        return path
    return write
