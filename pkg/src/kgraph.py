"""The knowledge graph: provenance-labeled directed edges, persistence, exports
and the fast-path allocator for orphans already present in the graph.

Edges are stored directed (orphan -> destination) in a networkx
MultiDiGraph keyed by provenance, which makes (source, destination,
provenance) unique. Neighborhood queries ignore direction.

Single writer, many readers: every mutation and every read holds the
graph's lock, so readers always observe whole mutation batches.
"""
import json
import logging
import math
import os
import tempfile
import threading
from contextlib import contextmanager
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Dict, List, Optional, Tuple

import networkx as nx
import pydot

from .embeddings import CENTROID, ContextProfile, EmbeddingStore
from .errors import IoFailure, SchemaViolation, SelfLoop, decoding
from .preprocess import ContextWindow
from .verdict import ModuleVerdict, Provenance, check_threshold, gate

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
EXPORT_FORMATS = ('dot', 'graphml', 'json')
# edge fields that metadata keys may not shadow
RESERVED_META = frozenset({'s', 'd', 'prov', 'w', 't'})
EPOCH = '1970-01-01T00:00:00+00:00'


def _instant(value: str) -> Optional[datetime]:
    try:
        moment = datetime.fromisoformat(value)
    except ValueError:
        return None
    return moment if moment.tzinfo else moment.replace(tzinfo=timezone.utc)


def graph_clock(kg: 'KnowledgeGraph') -> str:
    """The newest edge timestamp in the graph, or the epoch for a graph without dated edges."""
    instants = [moment for moment in (_instant(edge.created_at) for edge in kg.edges()) if moment is not None]
    if not instants:
        return EPOCH
    return max(instants).astimezone(timezone.utc).isoformat()


@dataclass(frozen=True)
class Allocation:
    orphan: str
    destination: str
    module: Provenance
    distance: float
    resume_id: str = ''


@dataclass(frozen=True)
class Edge:
    source: str
    destination: str
    provenance: Provenance
    weight: float
    created_at: str
    meta: Dict[str, str] = field(default_factory=dict, compare=True, hash=False)

    def __post_init__(self):
        clash = RESERVED_META.intersection(self.meta)
        if clash:
            raise ValueError(f"edge metadata may not use reserved keys {sorted(clash)}")

    def to_dict(self):
        entry = {
            's': self.source,
            'd': self.destination,
            'prov': self.provenance.value,
            'w': self.weight,
            't': self.created_at,
        }
        if self.meta:
            entry['meta'] = dict(sorted(self.meta.items()))
        return entry


class KnowledgeGraph:
    def __init__(self):
        self._graph = nx.MultiDiGraph()
        self._lock = threading.RLock()

    @contextmanager
    def writer(self):
        """Exclusive mutation batch; integrity is re-checked when the batch ends."""
        with self._lock:
            yield self
            self.check_integrity()

    def check_integrity(self):
        with self._lock:
            for source, destination in self._graph.edges():
                if source == destination:
                    raise SchemaViolation(f"self-loop on '{source}'")

    # reads

    def __len__(self):
        return self.number_of_nodes()

    def __eq__(self, other):
        if not isinstance(other, KnowledgeGraph):
            return NotImplemented
        return self.nodes() == other.nodes() and self.edges() == other.edges()

    def number_of_nodes(self):
        with self._lock:
            return self._graph.number_of_nodes()

    def number_of_edges(self):
        with self._lock:
            return self._graph.number_of_edges()

    def nodes(self) -> List[str]:
        with self._lock:
            return sorted(self._graph.nodes())

    def has_node(self, node: str) -> bool:
        with self._lock:
            return self._graph.has_node(node)

    def edges(self) -> List[Edge]:
        with self._lock:
            edges = [self._edge(s, d, key, data) for s, d, key, data in self._graph.edges(keys=True, data=True)]
        return sorted(edges, key=lambda e: (e.source, e.destination, e.provenance.value))

    def edge(self, source: str, destination: str, provenance: Provenance) -> Optional[Edge]:
        with self._lock:
            data = self._graph.get_edge_data(source, destination, key=provenance.value)
            if data is None:
                return None
            return self._edge(source, destination, provenance.value, data)

    @staticmethod
    def _edge(source, destination, key, data) -> Edge:
        return Edge(source, destination, Provenance(key), data['w'], data['t'], dict(data.get('meta', {})))

    def neighbors(self, node: str) -> List[str]:
        with self._lock:
            if not self._graph.has_node(node):
                return []
            found = set(self._graph.successors(node)) | set(self._graph.predecessors(node))
        found.discard(node)
        return sorted(found)

    def external_skills(self) -> Dict[str, Tuple[str, str]]:
        """skill -> (category, retrieved_at) over External edges; newest edge wins, then smallest category."""
        by_skill = {}
        with self._lock:
            for source, destination, key, data in self._graph.edges(keys=True, data=True):
                if key == Provenance.EXTERNAL.value:
                    by_skill.setdefault(source, []).append((destination, data['t']))

        chosen = {}
        for skill, entries in by_skill.items():
            entries.sort()
            # max() keeps the first maximum, i.e. the smallest category among the newest
            chosen[skill] = max(entries, key=lambda entry: entry[1])
        return chosen

    # writes (callers hold writer())

    def add_node(self, node: str):
        with self._lock:
            self._graph.add_node(node)

    def add_edge(self, edge: Edge) -> bool:
        if edge.source == edge.destination:
            raise SelfLoop(edge.source)
        with self._lock:
            if self._graph.has_edge(edge.source, edge.destination, key=edge.provenance.value):
                return False
            attributes = {'w': edge.weight, 't': edge.created_at}
            if edge.meta:
                attributes['meta'] = dict(edge.meta)
            self._graph.add_edge(edge.source, edge.destination, key=edge.provenance.value, **attributes)
            return True

    def replace_edge(self, edge: Edge):
        with self._lock:
            if self._graph.has_edge(edge.source, edge.destination, key=edge.provenance.value):
                self._graph.remove_edge(edge.source, edge.destination, key=edge.provenance.value)
            self.add_edge(edge)


def upsert_allocation(kg: KnowledgeGraph, alloc: Allocation, created_at: Optional[str] = None) -> KnowledgeGraph:
    if not alloc.orphan or not alloc.destination:
        raise ValueError('allocation needs a non-empty orphan and destination')
    if alloc.orphan == alloc.destination:
        raise SelfLoop(alloc.orphan)

    weight = 1.0 - alloc.distance / 2.0
    edge = Edge(alloc.orphan, alloc.destination, Provenance(alloc.module), weight, created_at or graph_clock(kg))
    with kg.writer():
        if kg.add_edge(edge):
            logger.debug(f"graph: {alloc.orphan} -> {alloc.destination} [{edge.provenance.value}]")
    return kg


def neighbors(kg: KnowledgeGraph, node: str) -> List[str]:
    return kg.neighbors(node)


def fastpath_allocate(kg: KnowledgeGraph, orphan: str, ctx: ContextWindow, store: EmbeddingStore,
                      threshold: float, aggregation: str = CENTROID) -> ModuleVerdict:
    """Allocate an orphan already in the graph to its neighbor closest to the context."""
    check_threshold(threshold)
    candidates = kg.neighbors(orphan)
    if not candidates:
        return ModuleVerdict.decline()
    best = ContextProfile(store, ctx.words, aggregation).best(candidates)
    return gate(best, threshold)


# persistence

def to_document(kg: KnowledgeGraph) -> dict:
    return {
        'version': SCHEMA_VERSION,
        'nodes': kg.nodes(),
        'edges': [edge.to_dict() for edge in kg.edges()],
    }


def _dumps(document) -> str:
    return json.dumps(document, indent=2, ensure_ascii=False) + '\n'


def save(kg: KnowledgeGraph, path):
    payload = _dumps(to_document(kg))
    folder = os.path.dirname(os.path.abspath(path))
    tmp_path = None
    try:
        os.makedirs(folder, exist_ok=True)
        fd, tmp_path = tempfile.mkstemp(prefix='.graph-', suffix='.json', dir=folder)
        with os.fdopen(fd, 'w', encoding='utf-8') as f:
            f.write(payload)
        os.replace(tmp_path, path)
    except OSError as e:
        if tmp_path and os.path.exists(tmp_path):
            os.unlink(tmp_path)
        raise IoFailure(f"cannot write graph to {path}: {e}") from e
    logger.info(f"Saved graph with {kg.number_of_nodes()} nodes and {kg.number_of_edges()} edges to {path}")


def load(path) -> KnowledgeGraph:
    try:
        with decoding(path), open(path, 'r', encoding='utf-8') as f:
            raw = f.read()
    except OSError as e:
        raise IoFailure(f"cannot read graph from {path}: {e}") from e

    try:
        document = json.loads(raw)
    except json.JSONDecodeError as e:
        raise SchemaViolation(f"{path}: invalid JSON ({e.msg} at line {e.lineno})") from e

    kg = from_document(document)
    logger.info(f"Loaded graph with {kg.number_of_nodes()} nodes and {kg.number_of_edges()} edges from {path}")
    return kg


def from_document(document) -> KnowledgeGraph:
    if not isinstance(document, dict):
        raise SchemaViolation('top level must be an object')
    if document.get('version') != SCHEMA_VERSION:
        raise SchemaViolation(f"unsupported version {document.get('version')!r}")
    nodes = document.get('nodes')
    edges = document.get('edges')
    if not isinstance(nodes, list) or not isinstance(edges, list):
        raise SchemaViolation("'nodes' and 'edges' must be lists")

    kg = KnowledgeGraph()
    for node in nodes:
        if not isinstance(node, str) or not node:
            raise SchemaViolation(f"invalid node {node!r}")
        if kg.has_node(node):
            raise SchemaViolation(f"duplicate node '{node}'")
        kg.add_node(node)

    for index, entry in enumerate(edges):
        edge = _parse_edge(index, entry)
        if not kg.has_node(edge.source) or not kg.has_node(edge.destination):
            raise SchemaViolation(f"edge {index} references an unknown node")
        if edge.source == edge.destination:
            raise SchemaViolation(f"edge {index} is a self-loop")
        if not kg.add_edge(edge):
            raise SchemaViolation(f"edge {index} duplicates ({edge.source}, {edge.destination}, {edge.provenance.value})")
    return kg


def _parse_edge(index, entry) -> Edge:
    if not isinstance(entry, dict):
        raise SchemaViolation(f"edge {index} must be an object")
    missing = {'s', 'd', 'prov', 'w', 't'} - set(entry)
    if missing:
        raise SchemaViolation(f"edge {index} lacks {sorted(missing)}")

    source, destination, created_at = entry['s'], entry['d'], entry['t']
    if not all(isinstance(value, str) and value for value in (source, destination, created_at)):
        raise SchemaViolation(f"edge {index} has a non-string endpoint or timestamp")
    weight = entry['w']
    if isinstance(weight, bool) or not isinstance(weight, (int, float)) or not math.isfinite(weight):
        raise SchemaViolation(f"edge {index} has an invalid weight")
    try:
        provenance = Provenance(entry['prov'])
    except ValueError:
        raise SchemaViolation(f"edge {index} has unknown provenance {entry['prov']!r}")
    meta = entry.get('meta', {})
    if not isinstance(meta, dict) or not all(isinstance(k, str) and isinstance(v, str) for k, v in meta.items()):
        raise SchemaViolation(f"edge {index} has invalid metadata")
    clash = RESERVED_META.intersection(meta)
    if clash:
        raise SchemaViolation(f"edge {index} metadata shadows reserved keys {sorted(clash)}")
    return Edge(source, destination, provenance, weight, created_at, dict(meta))


# exports

def export(kg: KnowledgeGraph, fmt: str) -> bytes:
    if fmt == 'json':
        return _dumps(to_document(kg)).encode('utf-8')
    if fmt == 'dot':
        return _to_dot(kg).encode('utf-8')
    if fmt == 'graphml':
        return _to_graphml(kg).encode('utf-8')
    raise ValueError(f"unknown export format '{fmt}', expected one of {EXPORT_FORMATS}")


def _quote(text) -> str:
    return '"' + str(text).replace('\\', '\\\\').replace('"', '\\"') + '"'


def _to_dot(kg: KnowledgeGraph) -> str:
    dot = pydot.Dot('knowledge_graph', graph_type='digraph')
    for node in kg.nodes():
        dot.add_node(pydot.Node(_quote(node)))
    for edge in kg.edges():
        dot.add_edge(pydot.Edge(_quote(edge.source), _quote(edge.destination),
                                prov=_quote(edge.provenance.value), w=_quote(repr(edge.weight)),
                                t=_quote(edge.created_at)))
    return dot.to_string()


def _to_graphml(kg: KnowledgeGraph) -> str:
    ordered = nx.MultiDiGraph()
    ordered.add_nodes_from(kg.nodes())
    for edge in kg.edges():
        attributes = {'prov': edge.provenance.value, 'w': float(edge.weight), 't': edge.created_at}
        attributes.update(edge.meta)
        ordered.add_edge(edge.source, edge.destination, key=edge.provenance.value, **attributes)
    return '\n'.join(nx.generate_graphml(ordered)) + '\n'
