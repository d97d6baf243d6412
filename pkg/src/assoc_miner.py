"""Corpus-level association mining around an orphan.

Each resume mentioning the orphan contributes one transaction made of its
context words (uni-grams), the adjacent pairs of those words (bi-grams,
rendered "w1 w2") and the orphan itself. Apriori finds the frequent
itemsets, rules are filtered on support, confidence and lift, and the words
appearing in rules that involve the orphan become allocation candidates.
"""
import logging
from collections import Counter
from dataclasses import dataclass
from itertools import combinations
from typing import FrozenSet, Iterable, List, Optional, Sequence, Set

from .embeddings import CENTROID, ContextProfile, EmbeddingStore
from .errors import EmptyCorpus
from .preprocess import ContextWindow, PreprocessedDocument, TextNormalizer
from .verdict import ModuleVerdict, check_threshold, gate

logger = logging.getLogger(__name__)

MERGED = 'merged'
SEPARATE = 'separate'
BIGRAM_MODES = (MERGED, SEPARATE)

UNIGRAMS = 'unigrams'
BIGRAMS = 'bigrams'

Transaction = FrozenSet[str]


@dataclass(frozen=True)
class ItemsetSupport:
    itemset: FrozenSet[str]
    support: float


@dataclass(frozen=True)
class AssociationRule:
    antecedent: FrozenSet[str]
    consequent: FrozenSet[str]
    support: float
    confidence: float
    lift: float


@dataclass(frozen=True)
class AssociationParams:
    radius: int = 5
    min_support: float = 0.05
    min_confidence: float = 0.3
    min_lift: float = 1.0
    threshold: float = 0.60
    max_itemset_size: Optional[int] = 3
    bigram_mode: str = MERGED
    aggregation: str = CENTROID


def build_transactions(corpus: Sequence[PreprocessedDocument], orphan: str, radius: int,
                       normalizer: Optional[TextNormalizer] = None, include: str = MERGED) -> List[Transaction]:
    if not corpus:
        raise EmptyCorpus("cannot build transactions over an empty corpus")
    if radius < 1:
        raise ValueError(f"radius must be >= 1, got {radius}")
    normalizer = normalizer or TextNormalizer()
    orphan_item = normalizer.term(orphan)

    transactions = []
    for doc in corpus:
        window = normalizer.extract_context(doc, orphan, radius, fallback=False)
        if window.occurrences == 0:
            continue
        words = list(window.words)
        items = {orphan_item}
        if include != BIGRAMS:
            items.update(words)
        if include != UNIGRAMS:
            items.update(f"{left} {right}" for left, right in zip(words, words[1:]))
        transactions.append(frozenset(items))
    return transactions


def apriori(transactions: Iterable[Iterable[str]], min_support: float,
            max_size: Optional[int] = None) -> List[ItemsetSupport]:
    """Frequent itemsets, level by level, ordered by (size, sorted items)."""
    if not min_support > 0:
        raise ValueError(f"min_support must be > 0, got {min_support}")
    transactions = [frozenset(t) for t in transactions]
    total = len(transactions)
    if total == 0:
        return []

    counts = Counter(item for transaction in transactions for item in transaction)
    level = {frozenset([item]): count for item, count in counts.items() if count / total >= min_support}
    frequent = dict(level)

    size = 2
    while level and (max_size is None or size <= max_size):
        candidates = _join_and_prune(level, size)
        counted = {candidate: sum(1 for t in transactions if candidate <= t) for candidate in candidates}
        level = {itemset: count for itemset, count in counted.items() if count / total >= min_support}
        frequent.update(level)
        size += 1

    result = [ItemsetSupport(itemset, count / total) for itemset, count in frequent.items()]
    result.sort(key=lambda entry: (len(entry.itemset), sorted(entry.itemset)))
    return result


def _join_and_prune(level, size) -> Set[FrozenSet[str]]:
    previous = sorted(tuple(sorted(itemset)) for itemset in level)
    candidates = set()
    for i, left in enumerate(previous):
        for right in previous[i + 1:]:
            if left[:size - 2] != right[:size - 2]:
                break
            candidate = frozenset(left) | frozenset(right)
            if all(frozenset(subset) in level for subset in combinations(candidate, size - 1)):
                candidates.add(candidate)
    return candidates


def derive_rules(frequent: Iterable[ItemsetSupport], min_confidence: float, min_lift: float) -> List[AssociationRule]:
    if not 0 < min_confidence <= 1:
        raise ValueError(f"min_confidence must lie in (0, 1], got {min_confidence}")
    if min_lift < 0:
        raise ValueError(f"min_lift must be >= 0, got {min_lift}")

    frequent = list(frequent)
    support_of = {entry.itemset: entry.support for entry in frequent}
    rules = []
    for entry in frequent:
        if len(entry.itemset) < 2:
            continue
        items = sorted(entry.itemset)
        for size in range(1, len(items)):
            for picked in combinations(items, size):
                antecedent = frozenset(picked)
                consequent = entry.itemset - antecedent
                antecedent_support = support_of.get(antecedent)
                consequent_support = support_of.get(consequent)
                if antecedent_support is None or consequent_support is None:
                    continue
                confidence = entry.support / antecedent_support
                lift = confidence / consequent_support
                if confidence >= min_confidence and lift >= min_lift:
                    rules.append(AssociationRule(antecedent, consequent, entry.support, confidence, lift))

    rules.sort(key=lambda r: (-r.support, -r.confidence, sorted(r.antecedent), sorted(r.consequent)))
    return rules


def rule_candidates(rules: Iterable[AssociationRule], orphan_item: str) -> Set[str]:
    """Words of every rule touching the orphan; bi-gram items contribute both words."""
    excluded = set(orphan_item.split())
    words = set()
    for rule in rules:
        if orphan_item not in rule.antecedent and orphan_item not in rule.consequent:
            continue
        for item in rule.antecedent | rule.consequent:
            if item != orphan_item:
                words.update(item.split())
    return words - excluded


def allocate_association(orphan: str, ctx: ContextWindow, corpus: Sequence[PreprocessedDocument],
                         store: EmbeddingStore, params: AssociationParams = AssociationParams(),
                         normalizer: Optional[TextNormalizer] = None) -> ModuleVerdict:
    check_threshold(params.threshold)
    if not corpus:
        logger.debug(f"association: empty corpus, declining '{orphan}'")
        return ModuleVerdict.decline()
    normalizer = normalizer or TextNormalizer()
    orphan_item = normalizer.term(orphan)

    runs = [MERGED] if params.bigram_mode == MERGED else [UNIGRAMS, BIGRAMS]
    candidates = set()
    for include in runs:
        transactions = build_transactions(corpus, orphan, params.radius, normalizer, include)
        if not transactions:
            continue
        frequent = apriori(transactions, params.min_support, params.max_itemset_size)
        rules = derive_rules(frequent, params.min_confidence, params.min_lift)
        candidates |= rule_candidates(rules, orphan_item)
        logger.debug(f"association: '{orphan}' {include}: {len(transactions)} transactions, "
                     f"{len(frequent)} frequent itemsets, {len(rules)} rules")

    if not candidates:
        return ModuleVerdict.decline()

    best = ContextProfile(store, ctx.words, params.aggregation).best(sorted(candidates))
    return gate(best, params.threshold)
