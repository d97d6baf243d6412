"""File-backed ConceptNet-style knowledge base answering related-term queries."""
import logging
import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, List, Optional

from .errors import MalformedRow, decoding

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ConceptEdge:
    relation: str
    start: str
    end: str
    weight: float


@dataclass(frozen=True)
class ConceptCandidate:
    term: str
    relation: str
    weight: float


def normalize_term(value: str) -> str:
    """Lowercase a term; ConceptNet URIs (/c/en/machine_learning/n) reduce to 'machine learning'."""
    value = value.strip()
    if value.startswith('/c/'):
        parts = value.split('/')
        value = parts[3] if len(parts) > 3 else ''
    return ' '.join(value.replace('_', ' ').lower().split())


def normalize_relation(value: str) -> str:
    value = value.strip()
    if value.startswith('/r/'):
        value = value[3:]
    return value


class ConceptKB:
    """Edges indexed by both endpoints; multi-edges allowed."""

    def __init__(self, edges: Iterable[ConceptEdge] = ()):
        self.edges: List[ConceptEdge] = []
        self._index = defaultdict(list)
        for edge in edges:
            self.add(edge)

    def __len__(self):
        return len(self.edges)

    def add(self, edge: ConceptEdge):
        self.edges.append(edge)
        self._index[edge.start].append(edge)
        if edge.end != edge.start:
            self._index[edge.end].append(edge)

    def related(self, term: str, limit: int = 50, relations: Optional[Iterable[str]] = None) -> List[ConceptCandidate]:
        if limit < 1:
            raise ValueError(f"limit must be >= 1, got {limit}")
        term = normalize_term(term)
        allowed = {normalize_relation(relation).lower() for relation in relations} if relations else None

        best = {}
        for edge in self._index.get(term, ()):
            if allowed is not None and edge.relation.lower() not in allowed:
                continue
            other = edge.end if edge.start == term else edge.start
            if other == term:
                continue
            current = best.get(other)
            if current is None or (-edge.weight, edge.relation) < (-current.weight, current.relation):
                best[other] = ConceptCandidate(other, edge.relation, edge.weight)

        ranked = sorted(best.values(), key=lambda c: (-c.weight, c.term))
        return ranked[:limit]


def related(kb: ConceptKB, term: str, limit: int = 50, relations: Optional[Iterable[str]] = None) -> List[ConceptCandidate]:
    return kb.related(term, limit, relations)


def load_concept_kb(path) -> ConceptKB:
    """TSV `relation<TAB>start<TAB>end<TAB>weight`, '#' comments allowed."""
    kb = ConceptKB()
    with decoding(path), open(path, 'r', encoding='utf-8') as f:
        for line_no, line in enumerate(f, 1):
            line = line.rstrip('\r\n')
            if not line.strip() or line.lstrip().startswith('#'):
                continue

            parts = line.split('\t')
            if len(parts) != 4:
                raise MalformedRow(path, line_no, f"expected 4 fields, found {len(parts)}")
            relation = normalize_relation(parts[0])
            start = normalize_term(parts[1])
            end = normalize_term(parts[2])
            if not relation or not start or not end:
                raise MalformedRow(path, line_no, 'empty relation or term')
            try:
                weight = float(parts[3])
            except ValueError:
                raise MalformedRow(path, line_no, 'weight is not a number')
            if not math.isfinite(weight) or weight < 0:
                raise MalformedRow(path, line_no, 'weight must be a nonnegative real')

            kb.add(ConceptEdge(relation, start, end, weight))

    logger.info(f"Loaded {len(kb)} concept edges from {path}")
    return kb
