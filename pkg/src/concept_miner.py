import logging
from typing import Iterable, Optional

from .concept_kb import ConceptKB
from .embeddings import CENTROID, ContextProfile, EmbeddingStore
from .preprocess import ContextWindow
from .verdict import ModuleVerdict, check_threshold, gate

logger = logging.getLogger(__name__)


def allocate_concept(orphan: str, ctx: ContextWindow, kb: ConceptKB, store: EmbeddingStore, threshold: float,
                     limit: int = 50, relations: Optional[Iterable[str]] = None,
                     aggregation: str = CENTROID) -> ModuleVerdict:
    """Score the orphan's related KB terms by embedding distance to its context.

    KB weights only decide which candidates survive the `limit` cut; the
    score itself is the distance alone.
    """
    check_threshold(threshold)
    candidates = kb.related(orphan, limit, relations)
    if not candidates:
        logger.debug(f"concept: no related terms for '{orphan}'")
        return ModuleVerdict.decline()

    profile = ContextProfile(store, ctx.words, aggregation)
    best = profile.best(candidate.term for candidate in candidates)
    verdict = gate(best, threshold)
    logger.debug(f"concept: '{orphan}' over {len(candidates)} candidates -> {verdict}")
    return verdict
