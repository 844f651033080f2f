"""Stage orchestration shared by the CLI and the test harnesses.

Stages communicate through on-disk pool files so the expensive sampling
step is reused across ranker ablations.
"""

from __future__ import annotations

from dataclasses import dataclass

from .corpus import Candidate, ScoreBundle, TaskInstance
from .degeneracy import RejectionConfig, apply_rejections
from .gateway import Gateway, SampleRequest, aggregate_span
from .prompts import build_coder_prompt, build_prior_prompt, build_reviewer_prompt


@dataclass(slots=True)
class SamplingParams:
    temperature: float = 0.4
    max_tokens: int = 300
    n: int = 125
    seed: int = 0


def sample_task(gateway: Gateway, task: TaskInstance, params: SamplingParams) -> list[Candidate]:
    """Sample a candidate pool for one task under the coder prompt."""
    prompt = build_coder_prompt(task)
    request = SampleRequest(
        prompt=prompt.text,
        temperature=params.temperature,
        max_tokens=params.max_tokens,
        n=params.n,
        stop_sequences=prompt.stop_sequences,
        seed=params.seed,
    )
    completions = gateway.sample(request)
    return [
        Candidate(task_id=task.task_id, index=i, raw_text=scored.text)
        for i, scored in enumerate(completions)
    ]


def score_candidate(
    gateway: Gateway,
    task: TaskInstance,
    candidate: Candidate,
    with_prior: bool = False,
) -> None:
    """Populate the coder (and reviewer/prior) channels of one candidate.

    Rejected candidates are skipped entirely: they are excluded from every
    ranking, so spending reviewer queries on them would be waste.
    """
    if candidate.rejection is not None:
        return
    bundle = candidate.scores or ScoreBundle()

    if bundle.coder_logp is None:
        coder_prompt = build_coder_prompt(task)
        scored = gateway.score_continuation(coder_prompt.text, candidate.raw_text)
        bundle.coder_logp = scored.total_logprob()
        bundle.coder_len = len(scored.tokens)

    if bundle.reviewer_logp is None:
        pkg = build_reviewer_prompt(task, candidate)
        scored = gateway.score_whole(pkg.text, pkg.text[pkg.scored_span[0] :])
        logp, count = aggregate_span(scored, pkg.scored_span)
        bundle.reviewer_logp = logp
        bundle.reviewer_len = count

    if with_prior and bundle.prior_logp is None:
        prior_prompt = build_prior_prompt(task)
        scored = gateway.score_continuation(prior_prompt.text, candidate.raw_text)
        bundle.prior_logp = scored.total_logprob()
        bundle.prior_len = len(scored.tokens)

    candidate.scores = bundle


def reject_and_score_pool(
    gateway: Gateway,
    task: TaskInstance,
    pool: list[Candidate],
    rejection_config: RejectionConfig = RejectionConfig(),
    with_prior: bool = False,
) -> None:
    for candidate in pool:
        if candidate.canonical_text is None:
            apply_rejections(candidate, task, rejection_config)
        score_candidate(gateway, task, candidate, with_prior=with_prior)
