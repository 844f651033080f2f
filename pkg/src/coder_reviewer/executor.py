"""Sandboxed candidate execution for executability filtering and MBR-Exec.

The orchestrator speaks a one-shot JSON protocol with a runner child
process: one request object on stdin, one outcome object on stdout.  A
fixture-driven mock executor lets the whole primary test suite run without
spawning interpreter children.
"""

from __future__ import annotations

import json
import subprocess
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .corpus import Candidate, ExecutionOutcome, TaskInstance

DEFAULT_TIMEOUT_MS = 10_000


class SandboxRunner:
    """Spawns one runner child process per execution."""

    def __init__(self, command: list[str]):
        if not command:
            raise ValueError("runner command must be non-empty")
        self.command = list(command)

    def execute(
        self, candidate: Candidate, task: TaskInstance, timeout_ms: int = DEFAULT_TIMEOUT_MS
    ) -> ExecutionOutcome:
        if task.visible_test is None:
            raise ValueError(f"task {task.task_id} has no visible test")
        request = {
            "context": task.context,
            "body": candidate.body_text,
            "test": task.visible_test,
            "timeout_ms": timeout_ms,
        }
        started = time.monotonic()
        try:
            proc = subprocess.run(
                self.command,
                input=json.dumps(request).encode("utf-8"),
                capture_output=True,
                timeout=(timeout_ms + 10_000) / 1000.0,
            )
        except (OSError, subprocess.TimeoutExpired) as exc:
            return ExecutionOutcome(
                status="sandbox_failure",
                duration_ms=int((time.monotonic() - started) * 1000),
                detail=f"runner spawn/backstop failure: {exc}",
            )
        if proc.returncode != 0:
            return ExecutionOutcome(
                status="sandbox_failure",
                duration_ms=int((time.monotonic() - started) * 1000),
                detail=f"runner exited {proc.returncode}: {proc.stderr.decode(errors='replace')[:500]}",
            )
        try:
            payload = json.loads(proc.stdout.decode("utf-8"))
            outcome = ExecutionOutcome(
                status=payload["status"],
                output=payload.get("output"),
                duration_ms=int(payload.get("duration_ms", 0)),
                detail=payload.get("detail"),
            )
            outcome.validate()
        except (ValueError, KeyError, TypeError) as exc:
            return ExecutionOutcome(
                status="sandbox_failure",
                duration_ms=int((time.monotonic() - started) * 1000),
                detail=f"malformed runner output: {exc}",
            )
        return outcome


class MockExecutor:
    """Maps candidate index to a scripted outcome from a fixture file.

    Fixture shape::

        {
          "default_cycle": [{"status": "ok", "output": "1", "correct": true}, ...],
          "tasks": {"task-id": {"cycle": [...]}}
        }

    The outcome for candidate i is ``cycle[i % len(cycle)]``; entries may
    carry a ``correct`` verdict consumed by the evaluation stage.
    """

    def __init__(self, fixture: dict):
        self.fixture = fixture

    @classmethod
    def from_file(cls, path: str | Path) -> "MockExecutor":
        with open(path, encoding="utf-8") as fh:
            return cls(json.load(fh))

    def _entry(self, candidate: Candidate) -> dict:
        task_entry = self.fixture.get("tasks", {}).get(candidate.task_id, {})
        cycle = task_entry.get("cycle") or self.fixture.get("default_cycle")
        if not cycle:
            raise ValueError(f"mock executor fixture has no entry for {candidate.task_id}")
        return cycle[candidate.index % len(cycle)]

    def execute(
        self, candidate: Candidate, task: TaskInstance, timeout_ms: int = DEFAULT_TIMEOUT_MS
    ) -> ExecutionOutcome:
        entry = self._entry(candidate)
        status = entry.get("status", "ok")
        return ExecutionOutcome(
            status=status,
            output=entry.get("output", "0") if status == "ok" else None,
            duration_ms=int(entry.get("duration_ms", 1)),
            detail=entry.get("detail"),
        )

    def correct(self, candidate: Candidate) -> bool:
        return bool(self._entry(candidate).get("correct", False))


def run_pool(
    executor,
    pool: list[Candidate],
    task: TaskInstance,
    timeout_ms: int = DEFAULT_TIMEOUT_MS,
    max_workers: int | None = None,
) -> None:
    """Populate execution outcomes for every non-rejected candidate."""
    todo = [c for c in pool if c.rejection is None and c.execution is None]
    if not todo:
        return
    with ThreadPoolExecutor(max_workers=max_workers) as tp:
        outcomes = list(tp.map(lambda c: executor.execute(c, task, timeout_ms), todo))
    for cand, outcome in zip(todo, outcomes):
        cand.execution = outcome


def executability_filter(pool: list[Candidate]) -> tuple[list[Candidate], bool]:
    """Keep candidates that ran cleanly on the visible test.

    Timeouts and errors are filtered.  When nothing survives, the full
    non-rejected pool is returned unchanged and the fallback flag is set,
    so a selection is still made for every task.
    """
    if not pool:
        return [], False
    eligible = [c for c in pool if c.rejection is None]
    kept = [c for c in eligible if c.execution is not None and c.execution.status == "ok"]
    if kept:
        return kept, False
    return eligible, True
