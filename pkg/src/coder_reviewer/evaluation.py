"""Evaluation protocols: bootstrap accuracy, degenerate-probe MRR,
sample-count curves, the alpha sweep, and character-level BLEU-4.

All report numbers are deterministic functions of (pools, config, seed);
tasks are always iterated in sorted task-id order so reductions are stable.
"""

from __future__ import annotations

import math
import random
import statistics
from collections import Counter
from dataclasses import dataclass, field, replace

from .corpus import Candidate
from .degeneracy import DEGENERATE_KINDS
from .executor import executability_filter
from .rerankers import RankerSpec, rank


@dataclass(slots=True)
class EvalConfig:
    pool_size: int = 125
    subsample_size: int = 25
    bootstrap_trials: int = 50
    seed: int = 0
    alpha_grid: list[float] = field(
        default_factory=lambda: [round(0.1 * k, 1) for k in range(1, 10)]
    )

    def validate(self) -> None:
        if self.subsample_size > self.pool_size:
            raise ValueError("subsample_size must be <= pool_size")
        if self.bootstrap_trials < 1:
            raise ValueError("bootstrap_trials must be >= 1")


@dataclass(slots=True)
class BootstrapResult:
    mean: float
    stderr: float
    fallback_tasks: int = 0


def _trial_rng(seed: int, trial: int) -> random.Random:
    return random.Random(seed * 1_000_003 + trial)


def bootstrap_accuracy(
    spec: RankerSpec,
    pools: dict[str, list[Candidate]],
    config: EvalConfig,
    exec_filter: bool = False,
) -> BootstrapResult:
    """Mean top-1 correctness over repeated subsamples drawn without
    replacement, with the standard error over trials."""
    config.validate()
    task_ids = sorted(pools)
    if not task_ids:
        raise ValueError("no pools to evaluate")
    for task_id in task_ids:
        if len(pools[task_id]) < config.subsample_size:
            raise ValueError(
                f"pool for {task_id} has {len(pools[task_id])} candidates, "
                f"need >= {config.subsample_size}"
            )
        for cand in pools[task_id]:
            if cand.correct is None:
                raise ValueError(f"candidate {task_id}/{cand.index} lacks a correct verdict")

    fallback_tasks: set[str] = set()
    trial_accuracies: list[float] = []
    for trial in range(config.bootstrap_trials):
        rng = _trial_rng(config.seed, trial)
        hits = 0
        for task_id in task_ids:
            pool = pools[task_id]
            picks = rng.sample(range(len(pool)), config.subsample_size)
            subpool = sorted((pool[i] for i in picks), key=lambda c: c.index)
            effective = [c for c in subpool if c.rejection is None]
            if not effective:
                continue  # nothing selectable: counts as a miss
            if exec_filter:
                effective, fell_back = executability_filter(effective)
                if fell_back:
                    fallback_tasks.add(task_id)
            trial_spec = replace(spec, seed=spec.seed + trial) if spec.method == "random" else spec
            ranking = rank(trial_spec, effective)
            selected = next(c for c in effective if c.index == ranking.selected)
            if selected.correct:
                hits += 1
        trial_accuracies.append(hits / len(task_ids))

    mean = statistics.fmean(trial_accuracies)
    stderr = (
        statistics.stdev(trial_accuracies) / math.sqrt(len(trial_accuracies))
        if len(trial_accuracies) > 1
        else 0.0
    )
    return BootstrapResult(mean=mean, stderr=stderr, fallback_tasks=len(fallback_tasks))


def degenerate_mrr(
    spec: RankerSpec,
    pools: dict[str, list[Candidate]],
    constructs: dict[str, dict[str, Candidate]],
) -> dict[str, float]:
    """Mean reciprocal rank of each injected degenerate construct.

    No rejection filters are applied: the analysis probes the raw bias of
    the ranking method, so injected constructs and pool candidates are
    ranked as-is.
    """
    task_ids = sorted(pools)
    ranks: dict[str, list[int]] = {kind: [] for kind in DEGENERATE_KINDS}
    for task_id in task_ids:
        pool = [replace(c, rejection=None) for c in pools[task_id]]
        next_index = max((c.index for c in pool), default=-1) + 1
        kind_index: dict[str, int] = {}
        for kind in DEGENERATE_KINDS:
            if kind not in constructs.get(task_id, {}):
                raise ValueError(f"task {task_id} is missing the {kind} construct")
            construct = replace(constructs[task_id][kind], index=next_index, rejection=None)
            kind_index[kind] = next_index
            pool.append(construct)
            next_index += 1
        ranking = rank(spec, pool)
        for kind, idx in kind_index.items():
            ranks[kind].append(ranking.rank_of(idx))
    return {
        kind: statistics.fmean(1.0 / r for r in kind_ranks)
        for kind, kind_ranks in ranks.items()
    }


def accuracy_vs_samples(
    spec: RankerSpec,
    pools: dict[str, list[Candidate]],
    sizes: list[int],
    config: EvalConfig,
    exec_filter: bool = False,
) -> list[tuple[int, float, float]]:
    """Bootstrap accuracy at each subsample size, one row per size."""
    rows = []
    for size in sizes:
        result = bootstrap_accuracy(
            spec, pools, replace(config, subsample_size=size), exec_filter=exec_filter
        )
        rows.append((size, result.mean, result.stderr))
    return rows


def alpha_sweep(
    method: str,
    pools: dict[str, list[Candidate]],
    config: EvalConfig,
    exec_filter: bool = False,
) -> list[tuple[float, float, float]]:
    """Bootstrap accuracy of an alpha-weighted method over the alpha grid."""
    rows = []
    for alpha in config.alpha_grid:
        result = bootstrap_accuracy(
            RankerSpec(method=method, alpha=alpha), pools, config, exec_filter=exec_filter
        )
        rows.append((alpha, result.mean, result.stderr))
    return rows


def _char_ngrams(text: str, n: int) -> Counter:
    return Counter(text[i : i + n] for i in range(len(text) - n + 1))


def char_bleu4(hypothesis: str, reference: str) -> float:
    """Character-level BLEU with orders 1..4, clipped counts, geometric
    mean, and brevity penalty.

    Orders for which neither string has any n-grams are skipped so that
    identical short strings score 1.0; an empty hypothesis scores 0.
    """
    if not hypothesis:
        return 0.0
    log_precisions: list[float] = []
    for n in range(1, 5):
        hyp_counts = _char_ngrams(hypothesis, n)
        ref_counts = _char_ngrams(reference, n)
        total = sum(hyp_counts.values())
        if total == 0:
            if sum(ref_counts.values()) == 0:
                continue
            return 0.0
        clipped = sum(min(count, ref_counts[gram]) for gram, count in hyp_counts.items())
        if clipped == 0:
            return 0.0
        log_precisions.append(math.log(clipped / total))
    if not log_precisions:
        return 0.0
    score = math.exp(sum(log_precisions) / len(log_precisions))
    if len(hypothesis) < len(reference):
        score *= math.exp(1.0 - len(reference) / len(hypothesis))
    return score
