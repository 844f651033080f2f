"""Sample a candidate pool from the mock backend and rank it every way.

Run with:  python3 demos/01_rank_a_candidate_pool.py
"""

from coder_reviewer import (
    Gateway,
    MockBackend,
    RankerSpec,
    SamplingParams,
    TaskInstance,
    rank,
    reject_and_score_pool,
    sample_task,
)

task = TaskInstance(
    task_id="demo-1",
    instruction="return the decimal part of the input number",
    context="import math\ndef decimal_part(number):\n",
    visible_test="decimal_part(3.5)",
)

gateway = Gateway(MockBackend(base_seed=7))
pool = sample_task(gateway, task, SamplingParams(n=12, seed=0))
reject_and_score_pool(gateway, task, pool)

print(f"pool of {len(pool)} candidates, "
      f"{sum(1 for c in pool if c.rejection)} rejected\n")

for method in ("coder", "n_coder", "reviewer", "coder_reviewer", "n_coder_reviewer"):
    ranking = rank(RankerSpec(method), pool)
    best = next(c for c in pool if c.index == ranking.selected)
    print(f"{method:>18}: picks #{ranking.selected} "
          f"(score {ranking.scores[ranking.selected]:.2f})")
    print("                    " + best.body_text.strip().splitlines()[0])
