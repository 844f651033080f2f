"""Bootstrap evaluation over scripted execution outcomes.

A mock executor supplies execution results and correctness verdicts, so
this runs without any interpreter sandbox.  We report bootstrap accuracy
for several methods, the accuracy-vs-sample-count curve, and the alpha
sweep for the weighted interpolation objective.

Run with:  python3 demos/03_bootstrap_evaluation.py
"""

from pathlib import Path

from coder_reviewer import (
    EvalConfig,
    Gateway,
    MockBackend,
    MockExecutor,
    RankerSpec,
    SamplingParams,
    accuracy_vs_samples,
    alpha_sweep,
    bootstrap_accuracy,
    load_corpus,
    reject_and_score_pool,
    run_pool,
    sample_task,
)

FIXTURES = Path(__file__).resolve().parent.parent / "tests" / "fixtures"

tasks = load_corpus(FIXTURES / "dryrun_corpus.jsonl")
gateway = Gateway(MockBackend(base_seed=3))
executor = MockExecutor.from_file(FIXTURES / "dryrun_exec.json")

pools = {}
for task in tasks:
    pool = sample_task(gateway, task, SamplingParams(n=40, seed=0))
    reject_and_score_pool(gateway, task, pool)
    run_pool(executor, pool, task)
    for cand in pool:
        cand.correct = False if cand.rejection else executor.correct(cand)
    pools[task.task_id] = pool

config = EvalConfig(pool_size=40, subsample_size=25, bootstrap_trials=50, seed=0)

print("bootstrap accuracy (25 of 40 samples, 50 trials)")
for method in ("random", "coder", "coder_reviewer", "mbr_exec"):
    result = bootstrap_accuracy(RankerSpec(method), pools, config)
    print(f"  {method:>16}: {result.mean:.3f} +/- {result.stderr:.3f}")

print("\naccuracy vs sample count, coder_reviewer")
for size, mean, stderr in accuracy_vs_samples(
    RankerSpec("coder_reviewer"), pools, [1, 2, 5, 10, 25], config
):
    print(f"  {size:>3} samples: {mean:.3f} +/- {stderr:.3f}")

print("\nalpha sweep, weighted interpolation")
for alpha, mean, _ in alpha_sweep("weighted_mmi", pools, config):
    print(f"  alpha={alpha}: {mean:.3f}")
