import math
import random

import pytest

from coder_reviewer.degeneracy import make_degenerate
from coder_reviewer.evaluation import (
    EvalConfig,
    accuracy_vs_samples,
    alpha_sweep,
    bootstrap_accuracy,
    char_bleu4,
    degenerate_mrr,
)
from coder_reviewer.rerankers import RankerSpec
from conftest import scored_candidate


def make_pools(n_tasks=3, pool_size=8, correct_fraction=0.5):
    pools = {}
    for t in range(n_tasks):
        task_id = f"task-{t}"
        pools[task_id] = [
            scored_candidate(
                i,
                coder=-1.0 - 0.1 * i,
                reviewer=-1.0 - 0.05 * i,
                correct=i < pool_size * correct_fraction,
                task_id=task_id,
            )
            for i in range(pool_size)
        ]
    return pools


def test_all_correct_gives_mean_one_stderr_zero():
    pools = make_pools(correct_fraction=1.0)
    result = bootstrap_accuracy(
        RankerSpec("coder"), pools, EvalConfig(pool_size=8, subsample_size=4, bootstrap_trials=20)
    )
    assert result.mean == 1.0
    assert result.stderr == 0.0


def test_same_seed_same_report():
    pools = make_pools()
    config = EvalConfig(pool_size=8, subsample_size=4, bootstrap_trials=25, seed=7)
    a = bootstrap_accuracy(RankerSpec("random", seed=1), pools, config)
    b = bootstrap_accuracy(RankerSpec("random", seed=1), pools, config)
    assert a == b


def test_pool_too_small_is_an_error():
    pools = make_pools(pool_size=3)
    with pytest.raises(ValueError):
        bootstrap_accuracy(
            RankerSpec("coder"), pools, EvalConfig(pool_size=8, subsample_size=5)
        )


def test_missing_verdict_is_an_error():
    pools = make_pools()
    pools["task-0"][0].correct = None
    with pytest.raises(ValueError):
        bootstrap_accuracy(
            RankerSpec("coder"), pools, EvalConfig(pool_size=8, subsample_size=4)
        )


def test_bootstrap_matches_enumerated_expectation():
    # pool of 4, exactly one correct and always preferred by the ranker when
    # drawn: expectation over C(4,2)=6 subsamples is C(3,1)/C(4,2) = 0.5
    pool = [
        scored_candidate(0, coder=-1.0, correct=True, task_id="only"),
        scored_candidate(1, coder=-5.0, correct=False, task_id="only"),
        scored_candidate(2, coder=-6.0, correct=False, task_id="only"),
        scored_candidate(3, coder=-7.0, correct=False, task_id="only"),
    ]
    config = EvalConfig(pool_size=4, subsample_size=2, bootstrap_trials=10_000, seed=13)
    result = bootstrap_accuracy(RankerSpec("coder"), {"only": pool}, config)
    assert abs(result.mean - 0.5) < 0.02


def test_random_method_converges_to_correct_fraction():
    pools = make_pools(n_tasks=4, pool_size=10, correct_fraction=0.4)
    config = EvalConfig(pool_size=10, subsample_size=10, bootstrap_trials=400, seed=3)
    result = bootstrap_accuracy(RankerSpec("random", seed=5), pools, config)
    assert abs(result.mean - 0.4) <= 3 * max(result.stderr, 1e-9) + 0.05


def test_mrr_construct_ranked_first(fn_task):
    pools = {"t1": [scored_candidate(i, coder=-50.0 - i, task_id="t1") for i in range(5)]}
    constructs = {
        "t1": {
            kind: _scored_construct(fn_task, kind, coder=-1.0 - j)
            for j, kind in enumerate(("ReturnOnly", "Repetitive", "CopyPrompt"))
        }
    }
    mrr = degenerate_mrr(RankerSpec("coder"), pools, constructs)
    assert mrr["ReturnOnly"] == 1.0


def _scored_construct(task, kind, coder=-1.0, reviewer=-5.0):
    cand = make_degenerate(kind, task)
    cand.scores = scored_candidate(0, coder=coder, reviewer=reviewer).scores
    return cand


def test_mrr_known_ranks(fn_task):
    # construct ranked 4th on one task and 2nd on the other -> (1/4 + 1/2)/2
    pools = {}
    constructs = {}
    for task_id, above in (("a", 3), ("b", 1)):
        pools[task_id] = [
            scored_candidate(i, coder=-1.0 - i if i < above else -90.0 - i, task_id=task_id)
            for i in range(5)
        ]
        constructs[task_id] = {
            kind: _scored_construct(fn_task, kind, coder=-50.0 - j)
            for j, kind in enumerate(("ReturnOnly", "Repetitive", "CopyPrompt"))
        }
    mrr = degenerate_mrr(RankerSpec("coder"), pools, constructs)
    assert mrr["ReturnOnly"] == pytest.approx((1 / 4 + 1 / 2) / 2)


def test_mrr_invariant_under_pool_index_permutation(fn_task):
    rng = random.Random(4)
    base = [scored_candidate(i, coder=rng.uniform(-80, -10), task_id="t1") for i in range(8)]
    constructs = {
        "t1": {
            kind: _scored_construct(fn_task, kind, coder=-40.0 - j)
            for j, kind in enumerate(("ReturnOnly", "Repetitive", "CopyPrompt"))
        }
    }
    before = degenerate_mrr(RankerSpec("coder"), {"t1": base}, constructs)
    shuffled = list(base)
    rng.shuffle(shuffled)
    relabeled = [
        scored_candidate(i, coder=c.scores.coder_logp, task_id="t1")
        for i, c in enumerate(shuffled)
    ]
    after = degenerate_mrr(RankerSpec("coder"), {"t1": relabeled}, constructs)
    assert before == after


def test_mrr_ignores_rejection_flags(fn_task):
    pools = {"t1": [scored_candidate(i, coder=-1.0 - i, task_id="t1") for i in range(4)]}
    for c in pools["t1"].copy():
        c.rejection = "trivial"
    constructs = {
        "t1": {
            kind: _scored_construct(fn_task, kind, coder=-50.0 - j)
            for j, kind in enumerate(("ReturnOnly", "Repetitive", "CopyPrompt"))
        }
    }
    mrr = degenerate_mrr(RankerSpec("coder"), pools, constructs)
    assert mrr["ReturnOnly"] == pytest.approx(1 / 5)


def test_accuracy_vs_samples_one_row_per_size():
    pools = make_pools(pool_size=10)
    config = EvalConfig(pool_size=10, subsample_size=10, bootstrap_trials=10)
    rows = accuracy_vs_samples(RankerSpec("coder"), pools, [1, 2, 5], config)
    assert [r[0] for r in rows] == [1, 2, 5]


def test_size_one_random_matches_pool_fraction():
    pools = make_pools(n_tasks=5, pool_size=10, correct_fraction=0.3)
    config = EvalConfig(pool_size=10, subsample_size=10, bootstrap_trials=500, seed=2)
    ((_, mean, stderr),) = accuracy_vs_samples(RankerSpec("random", seed=1), pools, [1], config)
    assert abs(mean - 0.3) <= 3 * max(stderr, 1e-9) + 0.05


def test_alpha_sweep_covers_grid():
    pools = make_pools(pool_size=6)
    config = EvalConfig(pool_size=6, subsample_size=4, bootstrap_trials=5)
    rows = alpha_sweep("weighted_mmi", pools, config)
    assert [a for a, _, _ in rows] == [round(0.1 * k, 1) for k in range(1, 10)]


def test_char_bleu4_identity_and_empty():
    assert char_bleu4("print(x)", "print(x)") == pytest.approx(1.0)
    assert char_bleu4("", "anything") == 0.0
    assert char_bleu4("ab", "ab") == pytest.approx(1.0)


def test_char_bleu4_no_shared_fourgrams():
    assert char_bleu4("aaaa", "bbbb") == 0.0


def test_char_bleu4_brevity_penalty():
    full = char_bleu4("abcdefgh", "abcdefgh")
    short = char_bleu4("abcd", "abcdefgh")
    assert short < full
    assert short == pytest.approx(math.exp(1 - 8 / 4) * char_bleu4("abcd", "abcd"))
