import logging
from typing import Dict, Iterable, List, Optional

from .embeddings import EmbeddingStore, cosine_distance
from .errors import MalformedRow, decoding
from .kgraph import KnowledgeGraph
from .preprocess import PreprocessedDocument
from .tagger_client import BaseTagger, TaggedEntity
from .verdict import ModuleVerdict, check_threshold, gate

logger = logging.getLogger(__name__)


def gazetteer_tag(doc: PreprocessedDocument, gazetteer: Dict[str, str]) -> List[TaggedEntity]:
    """Longest match first, scanning left to right; a match consumes its tokens."""
    phrases = {}
    for surface, label in gazetteer.items():
        key = tuple(surface.split())
        if key:
            phrases[key] = label
    if not phrases:
        return []

    longest = max(len(key) for key in phrases)
    surfaces = doc.surfaces
    entities = []
    i = 0
    while i < len(surfaces):
        for width in range(min(longest, len(surfaces) - i), 0, -1):
            label = phrases.get(tuple(surfaces[i:i + width]))
            if label is not None:
                entities.append(TaggedEntity(' '.join(surfaces[i:i + width]), label, i, i + width))
                i += width
                break
        else:
            i += 1
    return entities


class GazetteerTagger(BaseTagger):
    def __init__(self, gazetteer: Dict[str, str]):
        self.gazetteer = dict(gazetteer)

    def tag(self, doc):
        return gazetteer_tag(doc, self.gazetteer)


def load_gazetteer(path) -> Dict[str, str]:
    """TSV `surface<TAB>label`; '#' comment lines and blank lines ignored."""
    gazetteer = {}
    with decoding(path), open(path, 'r', encoding='utf-8') as f:
        for line_no, line in enumerate(f, 1):
            line = line.rstrip('\r\n')
            if not line.strip() or line.lstrip().startswith('#'):
                continue
            parts = line.split('\t')
            if len(parts) != 2:
                raise MalformedRow(path, line_no, 'expected surface<TAB>label')
            surface = ' '.join(parts[0].lower().split())
            label = parts[1].strip()
            if not surface or not label:
                raise MalformedRow(path, line_no, 'empty surface or label')
            gazetteer[surface] = label
    logger.info(f"Loaded {len(gazetteer)} gazetteer entries from {path}")
    return gazetteer


def allocate_ner(orphan: str, doc: PreprocessedDocument, kg: KnowledgeGraph, store: EmbeddingStore,
                 tagger: BaseTagger, threshold: float, labels: Optional[Iterable[str]] = None) -> ModuleVerdict:
    """Pick the existing graph node closest to any entity tagged in the resume.

    Each node scores its minimum distance to the tagged entities; the orphan
    itself is never a candidate, so the destination is always an existing
    node other than the orphan.
    """
    check_threshold(threshold)
    allowed = set(labels) if labels else None
    entities = [
        entity for entity in tagger.tag(doc)
        if entity.surface != orphan and (allowed is None or entity.label in allowed)
    ]
    entity_vectors = [store.lookup(entity.surface) for entity in entities]
    entity_vectors = [vector for vector in entity_vectors if vector is not None]
    if not entity_vectors:
        logger.debug(f"ner: no in-vocabulary entities for '{orphan}' in '{doc.id}'")
        return ModuleVerdict.decline()

    best = None
    for node in kg.nodes():
        if node == orphan:
            continue
        node_vector = store.lookup(node)
        if node_vector is None:
            continue
        distance = min(cosine_distance(node_vector, vector) for vector in entity_vectors)
        if best is None or (distance, node) < best:
            best = (distance, node)

    if best is None:
        return ModuleVerdict.decline()
    return gate((best[1], best[0]), threshold)
