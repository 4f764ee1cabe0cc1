"""Retrieval metrics against a brute-force reading of their definitions."""

import random

import cir_retrieval as cr


def brute_recall(ranking, gold, k):
    return 1.0 if set(ranking[:k]) & set(gold) else 0.0


def brute_ap(ranking, gold, k):
    total = 0.0
    for pos in range(min(k, len(ranking))):
        if ranking[pos] in gold:
            prefix = ranking[: pos + 1]
            total += sum(1 for x in prefix if x in gold) / len(prefix)
    return total / min(len(gold), k)


def brute_subset_recall(ranking, gold, subset, k):
    return brute_recall([x for x in ranking if x in subset], gold, k)


def test_random_rankings_match():
    rng = random.Random(13)
    for _ in range(200):
        n = rng.randint(1, 20)
        ids = [f"c{i}" for i in range(n)]
        scores = [float(rng.randint(0, 7)) for _ in ids]
        ranking = [i for i, _ in cr.rank_scores(ids, scores, n)]
        # Independent tie rule: descending score, then ascending id.
        assert ranking == sorted(ids, key=lambda i: (-scores[ids.index(i)], i))
        gold = rng.sample(ids, rng.randint(1, min(4, n)))
        subset = gold + [i for i in ids if i not in gold and rng.random() < 0.5]
        for k in (1, 2, 3, 5, 10, 50):
            assert cr.recall_at_k(ranking, gold, k) == brute_recall(ranking, gold, k)
            assert abs(cr.map_at_k(ranking, gold, k) - brute_ap(ranking, gold, k)) < 1e-12
            assert cr.subset_recall_at_k(ranking, gold, subset, k) == brute_subset_recall(
                ranking, gold, subset, k
            )


def test_hand_examples():
    assert cr.recall_at_k(["c3", "c1", "c2"], ["c1"], 1) == 0.0
    assert cr.recall_at_k(["c3", "c1", "c2"], ["c1"], 2) == 1.0
    assert abs(cr.map_at_k(["g1", "x", "g2"], ["g1", "g2"], 3) - 5 / 6) < 1e-12
