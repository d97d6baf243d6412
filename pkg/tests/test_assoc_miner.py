from itertools import combinations

import pytest
from hypothesis import given, settings, strategies as st

from src.assoc_miner import (
    BIGRAMS,
    SEPARATE,
    UNIGRAMS,
    AssociationParams,
    allocate_association,
    apriori,
    build_transactions,
    derive_rules,
    rule_candidates,
)
from src.embeddings import ContextProfile, centroid_distance
from src.errors import EmptyCorpus
from src.preprocess import ContextWindow, RawDocument, TextNormalizer
from tests.conftest import make_store

transactions_strategy = st.lists(
    st.sets(st.sampled_from('abcdefghij'), max_size=10),
    min_size=1, max_size=20,
)
support_strategy = st.sampled_from([0.05, 0.1, 0.2, 0.3, 0.5, 0.75, 1.0])


def brute_force(transactions, min_support):
    total = len(transactions)
    items = sorted(set().union(*transactions))
    frequent = {}
    for size in range(1, len(items) + 1):
        for combo in combinations(items, size):
            itemset = frozenset(combo)
            count = sum(1 for t in transactions if itemset <= t)
            if count / total >= min_support:
                frequent[itemset] = count / total
    return frequent


@settings(max_examples=50, deadline=None)
@given(transactions=transactions_strategy, min_support=support_strategy)
def test_apriori_matches_brute_force(transactions, min_support):
    found = apriori(transactions, min_support)
    assert {entry.itemset: entry.support for entry in found} == brute_force(transactions, min_support)
    assert [(len(e.itemset), sorted(e.itemset)) for e in found] == sorted(
        (len(e.itemset), sorted(e.itemset)) for e in found)


@settings(max_examples=50, deadline=None)
@given(
    transactions=transactions_strategy,
    min_support=support_strategy,
    min_confidence=st.sampled_from([0.1, 0.3, 0.6, 1.0]),
    min_lift=st.sampled_from([0.0, 0.5, 1.0, 1.5]),
)
def test_rule_arithmetic(transactions, min_support, min_confidence, min_lift):
    frequent = apriori(transactions, min_support)
    support = {entry.itemset: entry.support for entry in frequent}
    for rule in derive_rules(frequent, min_confidence, min_lift):
        union = rule.antecedent | rule.consequent
        assert not rule.antecedent & rule.consequent
        assert abs(rule.confidence * support[rule.antecedent] - support[union]) <= 1e-9
        assert abs(rule.lift * support[rule.consequent] - rule.confidence) <= 1e-9
        assert rule.confidence >= min_confidence
        assert rule.lift >= min_lift


def test_apriori_hand_example():
    transactions = [{'a', 'b'}, {'a', 'c'}, {'a', 'b', 'c'}, {'b'}]
    found = {tuple(sorted(e.itemset)): e.support for e in apriori(transactions, 0.5)}
    assert found == {('a',): 0.75, ('b',): 0.75, ('c',): 0.5, ('a', 'b'): 0.5, ('a', 'c'): 0.5}


def test_apriori_max_size_and_edge_cases():
    transactions = [{'a', 'b', 'c'}] * 3
    assert max(len(e.itemset) for e in apriori(transactions, 0.5, max_size=2)) == 2
    assert apriori([], 0.5) == []
    with pytest.raises(ValueError):
        apriori(transactions, 0)


def test_rule_values_by_hand():
    transactions = [{'a', 'b'}, {'a', 'c'}, {'a', 'b', 'c'}, {'b'}]
    rules = derive_rules(apriori(transactions, 0.5), 0.5, 0.0)
    by_pair = {(tuple(sorted(r.antecedent)), tuple(sorted(r.consequent))): r for r in rules}
    c_to_a = by_pair[(('c',), ('a',))]
    assert c_to_a.support == pytest.approx(0.5)
    assert c_to_a.confidence == pytest.approx(1.0)
    assert c_to_a.lift == pytest.approx(1 / 0.75)
    assert (('a',), ('b',)) in by_pair
    assert by_pair[(('a',), ('b',))].confidence == pytest.approx(2 / 3)


def test_derive_rules_validates_parameters():
    with pytest.raises(ValueError):
        derive_rules([], 0, 1.0)
    with pytest.raises(ValueError):
        derive_rules([], 0.5, -1)


@pytest.fixture
def corpus(doc_factory):
    return [
        doc_factory('r1', 'python code developer'),
        doc_factory('r2', 'python code software'),
        doc_factory('r3', 'python code programming'),
        doc_factory('r4', 'snake zoo reptile'),
    ]


def test_build_transactions(corpus, normalizer):
    merged = build_transactions(corpus, 'python', 2, normalizer)
    assert merged[0] == frozenset({'python', 'code', 'developer', 'code developer'})
    assert len(merged) == 3
    assert build_transactions(corpus, 'python', 2, normalizer, UNIGRAMS)[0] == frozenset(
        {'python', 'code', 'developer'})
    assert build_transactions(corpus, 'python', 2, normalizer, BIGRAMS)[0] == frozenset(
        {'python', 'code developer'})


def test_build_transactions_needs_corpus(normalizer):
    with pytest.raises(EmptyCorpus):
        build_transactions([], 'python', 2, normalizer)


def test_rule_candidates_split_bigrams():
    rules = derive_rules(apriori([{'python', 'code developer', 'zoo'}, {'python', 'code developer'}], 0.5), 0.3, 0.0)
    assert rule_candidates(rules, 'python') == {'code', 'developer', 'zoo'}


def test_association_allocation(corpus, normalizer, store):
    ctx = normalizer.extract_context(corpus[0], 'python', 5)
    verdict = allocate_association('python', ctx, corpus, store, normalizer=normalizer)
    expected = ContextProfile(store, ctx.words).best(['code', 'developer', 'programming', 'software'])
    assert verdict.accepted
    assert (verdict.destination, verdict.distance) == (expected[0], pytest.approx(expected[1]))


def test_association_allocation_separate_mode(corpus, normalizer, store):
    ctx = normalizer.extract_context(corpus[0], 'python', 5)
    merged = allocate_association('python', ctx, corpus, store, normalizer=normalizer)
    separate = allocate_association('python', ctx, corpus, store, AssociationParams(bigram_mode=SEPARATE),
                                    normalizer)
    assert separate == merged


def test_association_allocation_declines(corpus, normalizer, store):
    ctx = ContextWindow('cobol', ('code',), 5, 0)
    assert not allocate_association('cobol', ctx, corpus, store, normalizer=normalizer).accepted
    assert not allocate_association('python', ctx, [], store, normalizer=normalizer).accepted
    strict = AssociationParams(min_support=0.9, min_lift=1.5)
    assert allocate_association('python', ctx, corpus, store, strict, normalizer).best is None


vector = st.lists(st.floats(min_value=-1, max_value=1), min_size=3, max_size=3).filter(
    lambda v: sum(x * x for x in v) > 1e-4)
WORDS = list('bcdefgh')


@settings(max_examples=75, deadline=None)
@given(
    table=st.fixed_dictionaries({word: vector for word in WORDS}),
    texts=st.lists(st.lists(st.sampled_from(WORDS + ['orphan']), min_size=1, max_size=8), min_size=1, max_size=6),
    context=st.lists(st.sampled_from(WORDS), max_size=4),
    min_support=support_strategy,
    bounds=st.tuples(st.floats(min_value=0, max_value=2), st.floats(min_value=0, max_value=2)).map(sorted),
)
def test_association_allocation_is_sound_and_monotone(table, texts, context, min_support, bounds):
    store = make_store(table)
    normalizer = TextNormalizer()
    corpus = [normalizer.normalize(RawDocument(f"r{i}", ' '.join(words))) for i, words in enumerate(texts)]
    ctx = ContextWindow('orphan', tuple(context), 2, 1)
    low, high = bounds
    strict = allocate_association('orphan', ctx, corpus, store,
                                  AssociationParams(radius=2, min_support=min_support, threshold=low), normalizer)
    loose = allocate_association('orphan', ctx, corpus, store,
                                 AssociationParams(radius=2, min_support=min_support, threshold=high), normalizer)

    assert strict.best == loose.best
    if strict.best is None:
        assert not strict.accepted and not loose.accepted
        return

    nearby = set()
    for transaction in build_transactions(corpus, 'orphan', 2, normalizer):
        for item in transaction:
            nearby.update(item.split())
    assert strict.destination in nearby - {'orphan'}
    assert strict.distance == pytest.approx(centroid_distance(store, strict.destination, context))
    for threshold, verdict in ((low, strict), (high, loose)):
        assert verdict.accepted == (verdict.distance <= threshold)
    if strict.accepted:
        assert loose.accepted and loose.destination == strict.destination
