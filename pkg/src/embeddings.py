"""Pre-trained word vectors and cosine-distance queries.

The store is loaded once and never mutated afterwards, so any number of
threads may query it without locking.
"""
import logging
import math
from typing import Dict, Iterable, Optional, Sequence, Tuple

import numpy as np

from .errors import EmptyFile, InconsistentDimension, MalformedRow, ZeroVector, decoding

logger = logging.getLogger(__name__)

CENTROID = 'centroid'
PAIRWISE_MIN = 'pairwise_min'
AGGREGATIONS = (CENTROID, PAIRWISE_MIN)


class EmbeddingStore:
    def __init__(self, dimension: int, vectors: Dict[str, np.ndarray]):
        self.dimension = dimension
        self._vectors = vectors

    def __contains__(self, word):
        return word in self._vectors

    def __len__(self):
        return len(self._vectors)

    def words(self):
        return sorted(self._vectors)

    def vector(self, word: str) -> Optional[np.ndarray]:
        return self._vectors.get(word)

    def lookup(self, term: str) -> Optional[np.ndarray]:
        """Vector for a word, or the mean of the in-vocabulary words of a phrase."""
        found = self._vectors.get(term)
        if found is not None:
            return found

        parts = term.split()
        if len(parts) < 2:
            return None
        known = [self._vectors[part] for part in parts if part in self._vectors]
        if not known:
            return None
        mean = np.mean(known, axis=0)
        if not np.any(mean):
            return None
        return mean


def load_embeddings(path, vocab_filter: Optional[Iterable[str]] = None) -> EmbeddingStore:
    """Read a GloVe-style text file: `word v1 v2 ... vd`, one row per word, no header."""
    wanted = {word.lower() for word in vocab_filter} if vocab_filter is not None else None
    vectors = {}
    dimension = None
    rows = 0

    with decoding(path), open(path, 'r', encoding='utf-8') as f:
        for line_no, line in enumerate(f, 1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) < 2:
                raise MalformedRow(path, line_no, 'a word needs at least one component')

            try:
                values = [float(part) for part in parts[1:]]
            except ValueError:
                raise MalformedRow(path, line_no, 'non-numeric component')
            if not all(math.isfinite(value) for value in values):
                raise MalformedRow(path, line_no, 'NaN or infinite component')

            if dimension is None:
                dimension = len(values)
            elif len(values) != dimension:
                raise InconsistentDimension(path, line_no, dimension, len(values))
            rows += 1

            word = parts[0].lower()
            if wanted is not None and word not in wanted:
                continue
            if word in vectors:
                logger.debug(f"{path}:{line_no}: duplicate word '{word}', keeping the first row")
                continue

            vector = np.array(values, dtype=np.float64)
            if not np.any(vector):
                logger.warning(f"{path}:{line_no}: zero vector for '{word}' treated as out-of-vocabulary")
                continue
            vector.setflags(write=False)
            vectors[word] = vector

    if rows == 0:
        raise EmptyFile(path)

    logger.info(f"Loaded {len(vectors)} vectors of dimension {dimension} from {path}")
    return EmbeddingStore(dimension, vectors)


def cosine_distance(u, v) -> float:
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")

    norm_u = np.linalg.norm(u)
    norm_v = np.linalg.norm(v)
    if norm_u == 0 or norm_v == 0:
        raise ZeroVector("cosine distance is undefined for a zero vector")

    distance = 1.0 - float(np.dot(u, v) / (norm_u * norm_v))
    return min(2.0, max(0.0, distance))


def nearest(store: EmbeddingStore, query: str, candidates: Sequence[str]) -> Optional[Tuple[str, float]]:
    query_vector = store.lookup(query)
    if query_vector is None:
        return None

    best = None
    for word in candidates:
        vector = store.lookup(word)
        if vector is None:
            continue
        scored = (cosine_distance(query_vector, vector), word)
        if best is None or scored < best:
            best = scored
    return None if best is None else (best[1], best[0])


class ContextProfile:
    """The in-vocabulary vectors of a context, with the centroid computed once."""

    def __init__(self, store: EmbeddingStore, context: Iterable[str], aggregation: str = CENTROID):
        if aggregation not in AGGREGATIONS:
            raise ValueError(f"unknown aggregation '{aggregation}'")
        self.store = store
        self.aggregation = aggregation
        self.vectors = [v for v in (store.lookup(word) for word in context) if v is not None]
        self.centroid = np.mean(self.vectors, axis=0) if self.vectors else None
        if self.centroid is not None and not np.any(self.centroid):
            self.centroid = None

    @property
    def empty(self):
        if self.aggregation == PAIRWISE_MIN:
            return not self.vectors
        return self.centroid is None

    def distance(self, candidate: str) -> Optional[float]:
        if self.empty:
            return None
        vector = self.store.lookup(candidate)
        if vector is None:
            return None
        if self.aggregation == PAIRWISE_MIN:
            return min(cosine_distance(vector, other) for other in self.vectors)
        return cosine_distance(vector, self.centroid)

    def best(self, candidates: Iterable[str]) -> Optional[Tuple[str, float]]:
        """Closest candidate to the context; ties go to the lexicographically smaller word."""
        best = None
        for word in candidates:
            distance = self.distance(word)
            if distance is None:
                continue
            if best is None or (distance, word) < best:
                best = (distance, word)
        return None if best is None else (best[1], best[0])


def centroid_distance(store: EmbeddingStore, candidate: str, context: Iterable[str],
                      aggregation: str = CENTROID) -> Optional[float]:
    return ContextProfile(store, context, aggregation).distance(candidate)
