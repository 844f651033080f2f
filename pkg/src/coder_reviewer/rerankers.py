"""Selection objectives over a candidate pool.

Every method is a pure function of (spec, pool).  Ties are broken by
ascending candidate index so rankings are reproducible.
"""

from __future__ import annotations

import math
import random
import re
from dataclasses import dataclass, field

from .corpus import Candidate, ExecutionOutcome

METHODS = (
    "random",
    "coder",
    "n_coder",
    "reviewer",
    "n_reviewer",
    "coder_reviewer",
    "n_coder_reviewer",
    "weighted_mmi",
    "alternate",
    "n_alternate",
    "mbr_exec",
)

# CLI spelling <-> internal method tag (dashes on the command line).
def normalize_method(name: str) -> str:
    tag = name.strip().replace("-", "_").replace(".", "_").lower()
    if tag not in METHODS:
        raise ValueError(f"unknown method {name!r}; expected one of {METHODS}")
    return tag


class MissingScoreError(ValueError):
    """Candidate lacks a score channel required by the ranking method."""


@dataclass(slots=True)
class RankerSpec:
    method: str
    alpha: float = 0.5
    seed: int = 0

    def validate(self) -> None:
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if self.method in ("weighted_mmi", "alternate", "n_alternate"):
            if not 0.0 < self.alpha < 1.0:
                raise ValueError(f"alpha {self.alpha} outside (0, 1)")


@dataclass(slots=True)
class Ranking:
    order: list[int]  # candidate indices, best first
    scores: dict[int, float] = field(default_factory=dict)

    @property
    def selected(self) -> int:
        return self.order[0]

    def rank_of(self, index: int) -> int:
        """1-based position of a candidate in the ranking."""
        return self.order.index(index) + 1


def _require(value: float | int | None, channel: str) -> float:
    if value is None:
        raise MissingScoreError(f"score bundle is missing the {channel} channel")
    return float(value)


def score(spec: RankerSpec, candidate: Candidate) -> float:
    """Scalar objective value for one candidate under the given method."""
    bundle = candidate.scores
    if bundle is None:
        raise MissingScoreError(f"candidate {candidate.index} has no scores")
    m = spec.method
    if m == "coder":
        return _require(bundle.coder_logp, "coder")
    if m == "n_coder":
        return _require(bundle.coder_logp, "coder") / _require(bundle.coder_len, "coder")
    if m == "reviewer":
        return _require(bundle.reviewer_logp, "reviewer")
    if m == "n_reviewer":
        return _require(bundle.reviewer_logp, "reviewer") / _require(
            bundle.reviewer_len, "reviewer"
        )
    if m == "coder_reviewer":
        return _require(bundle.coder_logp, "coder") + _require(bundle.reviewer_logp, "reviewer")
    if m == "n_coder_reviewer":
        return _require(bundle.coder_logp, "coder") / _require(
            bundle.coder_len, "coder"
        ) + _require(bundle.reviewer_logp, "reviewer") / _require(bundle.reviewer_len, "reviewer")
    if m == "weighted_mmi":
        return (1 - spec.alpha) * _require(bundle.coder_logp, "coder") + spec.alpha * _require(
            bundle.reviewer_logp, "reviewer"
        )
    if m == "alternate":
        return _require(bundle.coder_logp, "coder") - spec.alpha * _require(
            bundle.prior_logp, "prior"
        )
    if m == "n_alternate":
        return _require(bundle.coder_logp, "coder") / _require(
            bundle.coder_len, "coder"
        ) - spec.alpha * _require(bundle.prior_logp, "prior") / _require(
            bundle.prior_len, "prior"
        )
    raise ValueError(f"method {m!r} has no pointwise score; use rank()")


def _eligible(pool: list[Candidate]) -> list[Candidate]:
    return [c for c in pool if c.rejection is None]


def rank(spec: RankerSpec, pool: list[Candidate]) -> Ranking:
    """Total order over the non-rejected candidates, best first."""
    spec.validate()
    eligible = _eligible(pool)
    if not eligible:
        raise ValueError("no candidates remain after rejection")
    if spec.method == "random":
        indices = sorted(c.index for c in eligible)
        rng = random.Random(spec.seed)
        rng.shuffle(indices)
        return Ranking(order=indices)
    if spec.method == "mbr_exec":
        return mbr_exec_select(pool)
    values = {c.index: score(spec, c) for c in eligible}
    order = sorted(values, key=lambda i: (-values[i], i))
    return Ranking(order=order, scores=values)


_NUM = re.compile(r"-?\d+(?:\.\d+)?(?:[eE][+-]?\d+)?")


def outputs_equivalent(a: str, b: str, rel_tol: float = 1e-6) -> bool:
    """Exact string match after comparing numeric tokens at relative tolerance."""
    if a == b:
        return True
    parts_a = _NUM.split(a)
    parts_b = _NUM.split(b)
    if parts_a != parts_b:
        return False
    nums_a = _NUM.findall(a)
    nums_b = _NUM.findall(b)
    if len(nums_a) != len(nums_b):
        return False
    return all(
        math.isclose(float(x), float(y), rel_tol=rel_tol) for x, y in zip(nums_a, nums_b)
    )


def _agreement(a: ExecutionOutcome, b: ExecutionOutcome) -> bool:
    if a.status != "ok" or b.status != "ok":
        return False
    return outputs_equivalent(a.output or "", b.output or "")


def mbr_exec_select(pool: list[Candidate]) -> Ranking:
    """Rank by how many candidates produce an equivalent execution output.

    Error and timeout outcomes form singleton groups: they agree only with
    themselves.  This maximizes pairwise output agreement, equivalently
    minimizing the expected disagreement risk over the pool.
    """
    eligible = _eligible(pool)
    if not eligible:
        raise ValueError("no candidates remain after rejection")
    for c in eligible:
        if c.execution is None:
            raise MissingScoreError(f"candidate {c.index} has no execution outcome")
    counts: dict[int, float] = {}
    for c in eligible:
        counts[c.index] = 1 + sum(
            1 for other in eligible if other is not c and _agreement(c.execution, other.execution)
        )
    order = sorted(counts, key=lambda i: (-counts[i], i))
    return Ranking(order=order, scores=counts)
