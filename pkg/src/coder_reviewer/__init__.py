"""Coder-Reviewer reranking for sampled code candidates."""

from .corpus import (
    Candidate,
    DemoExample,
    ExecutionOutcome,
    ScoreBundle,
    TaskInstance,
    load_corpus,
    load_pool,
    save_corpus,
    save_pool,
)
from .degeneracy import (
    DEGENERATE_KINDS,
    RejectionConfig,
    apply_rejections,
    canonicalize,
    make_degenerate,
)
from .evaluation import (
    EvalConfig,
    accuracy_vs_samples,
    alpha_sweep,
    bootstrap_accuracy,
    char_bleu4,
    degenerate_mrr,
)
from .executor import MockExecutor, SandboxRunner, executability_filter, run_pool
from .gateway import Gateway, HTTPBackend, MockBackend, SampleRequest, ScoredText, aggregate_span
from .pipeline import SamplingParams, reject_and_score_pool, sample_task, score_candidate
from .prompts import PromptPackage, build_coder_prompt, build_prior_prompt, build_reviewer_prompt
from .rerankers import RankerSpec, Ranking, mbr_exec_select, rank, score

__all__ = [
    "Candidate",
    "DEGENERATE_KINDS",
    "DemoExample",
    "EvalConfig",
    "ExecutionOutcome",
    "Gateway",
    "HTTPBackend",
    "MockBackend",
    "MockExecutor",
    "PromptPackage",
    "RankerSpec",
    "Ranking",
    "RejectionConfig",
    "SampleRequest",
    "SamplingParams",
    "SandboxRunner",
    "ScoreBundle",
    "ScoredText",
    "TaskInstance",
    "accuracy_vs_samples",
    "aggregate_span",
    "alpha_sweep",
    "apply_rejections",
    "bootstrap_accuracy",
    "build_coder_prompt",
    "build_prior_prompt",
    "build_reviewer_prompt",
    "canonicalize",
    "char_bleu4",
    "degenerate_mrr",
    "executability_filter",
    "load_corpus",
    "load_pool",
    "make_degenerate",
    "mbr_exec_select",
    "rank",
    "reject_and_score_pool",
    "run_pool",
    "sample_task",
    "save_corpus",
    "save_pool",
    "score",
    "score_candidate",
]
