"""Task corpora and candidate pools, stored as UTF-8 JSON-lines files.

A corpus file holds one task object per line; a pool file holds one
candidate object per line.  Loading validates invariants and never mutates
text content, so (save, load) round-trips are field-for-field identities.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

LANGUAGES = ("python-function", "tagged-generic")
PROMPT_STYLES = ("function-completion", "tagged")
REJECTIONS = ("empty", "trivial", "repetitive")
EXEC_STATUSES = ("ok", "runtime_error", "timeout", "sandbox_failure")


class CorpusError(ValueError):
    """Malformed corpus or pool file, with the offending line when known."""


@dataclass(slots=True)
class DemoExample:
    """One demonstration triple for few-shot prompting."""

    context: str
    instruction: str
    program: str


@dataclass(slots=True)
class ScoreBundle:
    """Token-level log-likelihood aggregates for the three scoring channels."""

    coder_logp: float | None = None
    coder_len: int | None = None
    reviewer_logp: float | None = None
    reviewer_len: int | None = None
    prior_logp: float | None = None
    prior_len: int | None = None

    def validate(self) -> None:
        for name in ("coder", "reviewer", "prior"):
            logp = getattr(self, f"{name}_logp")
            length = getattr(self, f"{name}_len")
            if logp is not None:
                if length is None or length < 1:
                    raise ValueError(f"{name} channel set without a token count >= 1")
                if logp != logp or logp in (float("inf"), float("-inf")):
                    raise ValueError(f"{name}_logp is not finite")


@dataclass(slots=True)
class ExecutionOutcome:
    """Result of running one candidate against its visible test."""

    status: str
    output: str | None = None
    duration_ms: int = 0
    detail: str | None = None

    def validate(self) -> None:
        if self.status not in EXEC_STATUSES:
            raise ValueError(f"unknown execution status {self.status!r}")
        if (self.output is not None) != (self.status == "ok"):
            raise ValueError("output must be present iff status is ok")


@dataclass(slots=True)
class TaskInstance:
    """One code-generation problem."""

    task_id: str
    instruction: str
    context: str = ""
    demos: list[DemoExample] = field(default_factory=list)
    language: str = "python-function"
    prompt_style: str = "function-completion"
    visible_test: str | None = None
    hidden_tests: list[str] = field(default_factory=list)

    def validate(self) -> None:
        if not self.task_id:
            raise CorpusError("task_id must be non-empty")
        if self.language not in LANGUAGES:
            raise CorpusError(f"task {self.task_id}: unknown language {self.language!r}")
        if self.prompt_style not in PROMPT_STYLES:
            raise CorpusError(
                f"task {self.task_id}: unknown prompt_style {self.prompt_style!r}"
            )
        if self.prompt_style == "function-completion":
            headers = [
                line
                for line in self.context.splitlines()
                if line.startswith("def ") or line.startswith("async def ")
            ]
            if len(headers) != 1:
                raise CorpusError(
                    f"task {self.task_id}: function-completion context must contain "
                    f"exactly one function header, found {len(headers)}"
                )


@dataclass(slots=True)
class Candidate:
    """One sampled program for a task."""

    task_id: str
    index: int
    raw_text: str
    canonical_text: str | None = None
    rejection: str | None = None
    scores: ScoreBundle | None = None
    execution: ExecutionOutcome | None = None
    correct: bool | None = None

    @property
    def body_text(self) -> str:
        """Program text used for prompting: canonical when available."""
        return self.canonical_text if self.canonical_text else self.raw_text

    def validate(self) -> None:
        if self.index < 0:
            raise CorpusError(f"candidate index must be >= 0, got {self.index}")
        if self.rejection is not None and self.rejection not in REJECTIONS:
            raise CorpusError(f"unknown rejection kind {self.rejection!r}")
        if self.scores is not None:
            self.scores.validate()
        if self.execution is not None:
            self.execution.validate()


def _task_to_record(task: TaskInstance) -> dict:
    return {
        "task_id": task.task_id,
        "instruction": task.instruction,
        "context": task.context,
        "demos": [
            {"context": d.context, "instruction": d.instruction, "program": d.program}
            for d in task.demos
        ],
        "language": task.language,
        "prompt_style": task.prompt_style,
        "visible_test": task.visible_test,
        "hidden_tests": task.hidden_tests,
    }


def _task_from_record(record: dict) -> TaskInstance:
    demos = [
        DemoExample(d["context"], d["instruction"], d["program"])
        for d in record.get("demos", [])
    ]
    return TaskInstance(
        task_id=record["task_id"],
        instruction=record["instruction"],
        context=record.get("context", ""),
        demos=demos,
        language=record.get("language", "python-function"),
        prompt_style=record.get("prompt_style", "function-completion"),
        visible_test=record.get("visible_test"),
        hidden_tests=record.get("hidden_tests", []),
    )


def load_corpus(path: str | Path) -> list[TaskInstance]:
    """Load and validate a task corpus; duplicate task ids are an error."""
    tasks: list[TaskInstance] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                task = _task_from_record(record)
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise CorpusError(f"{path}:{lineno}: malformed task record: {exc}") from exc
            task.validate()
            if task.task_id in seen:
                raise CorpusError(f"{path}:{lineno}: duplicate task_id {task.task_id!r}")
            seen.add(task.task_id)
            tasks.append(task)
    return tasks


def save_corpus(tasks: list[TaskInstance], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for task in tasks:
            fh.write(json.dumps(_task_to_record(task), ensure_ascii=False) + "\n")


def _drop_none(record: dict) -> dict:
    return {k: v for k, v in record.items() if v is not None}


def candidate_to_record(cand: Candidate) -> dict:
    record: dict = {
        "task_id": cand.task_id,
        "index": cand.index,
        "raw_text": cand.raw_text,
        "canonical_text": cand.canonical_text,
        "rejection": cand.rejection,
        "correct": cand.correct,
    }
    if cand.scores is not None:
        record["scores"] = _drop_none(
            {
                "coder_logp": cand.scores.coder_logp,
                "coder_len": cand.scores.coder_len,
                "reviewer_logp": cand.scores.reviewer_logp,
                "reviewer_len": cand.scores.reviewer_len,
                "prior_logp": cand.scores.prior_logp,
                "prior_len": cand.scores.prior_len,
            }
        )
    if cand.execution is not None:
        record["execution"] = _drop_none(
            {
                "status": cand.execution.status,
                "output": cand.execution.output,
                "duration_ms": cand.execution.duration_ms,
                "detail": cand.execution.detail,
            }
        )
    return _drop_none(record)


def candidate_from_record(record: dict) -> Candidate:
    scores = None
    if "scores" in record:
        scores = ScoreBundle(**record["scores"])
    execution = None
    if "execution" in record:
        execution = ExecutionOutcome(**record["execution"])
    return Candidate(
        task_id=record["task_id"],
        index=record["index"],
        raw_text=record["raw_text"],
        canonical_text=record.get("canonical_text"),
        rejection=record.get("rejection"),
        scores=scores,
        execution=execution,
        correct=record.get("correct"),
    )


def save_pool(candidates: list[Candidate], path: str | Path) -> None:
    """Write a candidate pool; round-trip loading yields an equal pool."""
    seen: set[tuple[str, int]] = set()
    for cand in candidates:
        cand.validate()
        key = (cand.task_id, cand.index)
        if key in seen:
            raise CorpusError(f"duplicate candidate key {key}")
        seen.add(key)
    with open(path, "w", encoding="utf-8") as fh:
        for cand in candidates:
            fh.write(json.dumps(candidate_to_record(cand), ensure_ascii=False) + "\n")


def load_pool(path: str | Path) -> list[Candidate]:
    candidates: list[Candidate] = []
    seen: set[tuple[str, int]] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                cand = candidate_from_record(json.loads(line))
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise CorpusError(
                    f"{path}:{lineno}: malformed candidate record: {exc}"
                ) from exc
            cand.validate()
            key = (cand.task_id, cand.index)
            if key in seen:
                raise CorpusError(f"{path}:{lineno}: duplicate candidate key {key}")
            seen.add(key)
            candidates.append(cand)
    return candidates


def group_by_task(candidates: list[Candidate]) -> dict[str, list[Candidate]]:
    pools: dict[str, list[Candidate]] = {}
    for cand in candidates:
        pools.setdefault(cand.task_id, []).append(cand)
    for pool in pools.values():
        pool.sort(key=lambda c: c.index)
    return pools
