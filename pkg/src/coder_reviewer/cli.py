"""Command-line pipeline: sample -> score -> rerank -> evaluate.

Each stage reads and writes files in a run directory, so any stage can be
re-run (idempotently, via the response cache and pool files) and the run
directory alone is enough to regenerate every report.
"""

from __future__ import annotations

import csv
import json
import shlex
from dataclasses import replace
from pathlib import Path

import click

from . import corpus as corpus_mod
from .corpus import Candidate, group_by_task
from .degeneracy import DEGENERATE_KINDS, RejectionConfig, make_degenerate
from .evaluation import EvalConfig, accuracy_vs_samples, alpha_sweep, bootstrap_accuracy, degenerate_mrr
from .executor import MockExecutor, SandboxRunner, executability_filter, run_pool
from .gateway import Gateway, HTTPBackend, MockBackend
from .pipeline import SamplingParams, reject_and_score_pool, sample_task, score_candidate
from .rerankers import RankerSpec, normalize_method, rank

DEFAULT_METHODS = (
    "random",
    "coder",
    "n_coder",
    "reviewer",
    "coder_reviewer",
    "n_coder_reviewer",
    "weighted_mmi",
)

COMMANDS = ("sample", "score", "rerank", "evaluate")


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


@click.group()
@click.option("--config", type=click.Path(exists=True), default=None,
              help="JSON file mirroring the command flags; flags override it.")
@click.pass_context
def main(ctx: click.Context, config: str | None) -> None:
    cfg = _load_config(config)
    ctx.default_map = {cmd: dict(cfg) for cmd in COMMANDS}


def _run_dir(path: str) -> Path:
    run_dir = Path(path)
    run_dir.mkdir(parents=True, exist_ok=True)
    return run_dir


def _make_gateway(backend: str | None, mock: str | None, run_dir: Path, seed: int) -> Gateway:
    if mock:
        be = MockBackend.from_file(mock, base_seed=seed)
    elif backend:
        be = HTTPBackend(endpoint=backend)
    else:
        raise click.UsageError("either --backend URL or --mock FIXTURE is required")
    return Gateway(be, cache_dir=run_dir / "cache")


def _make_executor(mock_exec: str | None, runner: str | None):
    if mock_exec:
        return MockExecutor.from_file(mock_exec)
    if runner:
        return SandboxRunner(shlex.split(runner))
    return None


def _pool_path(run_dir: Path) -> Path:
    return run_dir / "pool.jsonl"


def _load_existing_pool(run_dir: Path) -> list[Candidate]:
    path = _pool_path(run_dir)
    return corpus_mod.load_pool(path) if path.exists() else []


def _corpus_path(run_dir: Path, corpus: str | None) -> str:
    if corpus:
        return corpus
    manifest = run_dir / "manifest.json"
    if manifest.exists():
        recorded = json.loads(manifest.read_text()).get("corpus")
        if recorded:
            return recorded
    raise click.UsageError("--corpus is required (not recorded in the run manifest)")


@main.command()
@click.option("--corpus", required=True, type=click.Path(exists=True))
@click.option("--backend", default=None, help="Completion endpoint URL.")
@click.option("--mock", default=None, type=click.Path(exists=True),
              help="Mock backend fixture file.")
@click.option("--n-samples", default=125, show_default=True)
@click.option("--temperature", default=0.4, show_default=True)
@click.option("--max-tokens", default=300, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--run-dir", required=True, type=click.Path())
def sample(corpus, backend, mock, n_samples, temperature, max_tokens, seed, run_dir):
    """Sample candidate pools for every task in the corpus."""
    run_dir = _run_dir(run_dir)
    tasks = corpus_mod.load_corpus(corpus)
    gateway = _make_gateway(backend, mock, run_dir, seed)
    params = SamplingParams(temperature=temperature, max_tokens=max_tokens, n=n_samples, seed=seed)

    existing = _load_existing_pool(run_dir)
    done = {c.task_id for c in existing}
    pool = list(existing)
    sampled = 0
    for task in tasks:
        if task.task_id in done:
            continue
        pool.extend(sample_task(gateway, task, params))
        sampled += 1
    corpus_mod.save_pool(pool, _pool_path(run_dir))
    manifest = {
        "corpus": str(corpus),
        "backend": gateway.backend.identity,
        "seed": seed,
        "temperature": temperature,
        "max_tokens": max_tokens,
        "n_samples": n_samples,
    }
    (run_dir / "manifest.json").write_text(json.dumps(manifest, indent=2))
    click.echo(f"sampled {sampled} new task pools ({len(pool)} candidates total)")


@main.command()
@click.option("--corpus", default=None, type=click.Path(exists=True))
@click.option("--backend", default=None)
@click.option("--mock", default=None, type=click.Path(exists=True))
@click.option("--method", "methods", multiple=True,
              help="Methods that will be ranked later; decides whether the prior channel is scored.")
@click.option("--compress-threshold", default=4.0, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--run-dir", required=True, type=click.Path(exists=True))
def score(corpus, backend, mock, methods, compress_threshold, seed, run_dir):
    """Canonicalize, set rejection flags, and populate score channels."""
    run_dir = _run_dir(run_dir)
    tasks = {t.task_id: t for t in corpus_mod.load_corpus(_corpus_path(run_dir, corpus))}
    gateway = _make_gateway(backend, mock, run_dir, seed)
    pool = _load_existing_pool(run_dir)
    if not pool:
        raise click.UsageError("no pool file in the run directory; run `sample` first")
    with_prior = any(normalize_method(m) in ("alternate", "n_alternate") for m in methods)
    config = RejectionConfig(compress_ratio_threshold=compress_threshold)
    for task_id, task_pool in group_by_task(pool).items():
        reject_and_score_pool(gateway, tasks[task_id], task_pool, config, with_prior=with_prior)
    corpus_mod.save_pool(pool, _pool_path(run_dir))
    rejected = sum(1 for c in pool if c.rejection is not None)
    click.echo(f"scored {len(pool)} candidates ({rejected} rejected)")


def _ensure_executions(pools, tasks, executor, timeout_ms):
    if executor is None:
        raise click.UsageError("--mock-exec or --runner is required for execution-based steps")
    for task_id, task_pool in pools.items():
        run_pool(executor, task_pool, tasks[task_id], timeout_ms)


@main.command()
@click.option("--corpus", default=None, type=click.Path(exists=True))
@click.option("--method", "methods", multiple=True, required=True)
@click.option("--alpha", default=0.5, show_default=True)
@click.option("--exec-filter", is_flag=True, default=False)
@click.option("--mock-exec", default=None, type=click.Path(exists=True))
@click.option("--runner", default=None, help="Sandbox runner command line.")
@click.option("--timeout-ms", default=10_000, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--run-dir", required=True, type=click.Path(exists=True))
def rerank(corpus, methods, alpha, exec_filter, mock_exec, runner, timeout_ms, seed, run_dir):
    """Select one candidate per task under each requested method."""
    run_dir = _run_dir(run_dir)
    tasks = {t.task_id: t for t in corpus_mod.load_corpus(_corpus_path(run_dir, corpus))}
    try:
        method_tags = [normalize_method(m) for m in methods]
    except ValueError as exc:
        raise click.BadParameter(str(exc), param_hint="--method")
    pool = _load_existing_pool(run_dir)
    pools = group_by_task(pool)

    needs_exec = exec_filter or "mbr_exec" in method_tags
    if needs_exec:
        _ensure_executions(pools, tasks, _make_executor(mock_exec, runner), timeout_ms)
        corpus_mod.save_pool(pool, _pool_path(run_dir))

    selections = []
    for task_id in sorted(pools):
        task_pool = pools[task_id]
        for method in method_tags:
            effective = [c for c in task_pool if c.rejection is None]
            fallback = False
            if exec_filter and effective:
                effective, fallback = executability_filter(effective)
            spec = RankerSpec(method=method, alpha=alpha, seed=seed)
            ranking = rank(spec, effective)
            selections.append(
                {
                    "task_id": task_id,
                    "method": method,
                    "selected_index": ranking.selected,
                    "score": ranking.scores.get(ranking.selected),
                    "fallback": fallback,
                }
            )
    (run_dir / "selections.json").write_text(json.dumps(selections, indent=2))
    click.echo(f"wrote {len(selections)} selections for {len(method_tags)} methods")


def _ensure_verdicts(pools, tasks, mock_exec, runner, timeout_ms):
    """Fill hidden-test verdicts.  Only this evaluation path reads hidden tests."""
    mock = MockExecutor.from_file(mock_exec) if mock_exec else None
    live = SandboxRunner(shlex.split(runner)) if runner else None
    for task_id, task_pool in pools.items():
        task = tasks[task_id]
        for cand in task_pool:
            if cand.correct is not None:
                continue
            if cand.rejection is not None:
                cand.correct = False
                continue
            if mock is not None:
                cand.correct = mock.correct(cand)
            elif live is not None:
                verdict = True
                for test in task.hidden_tests:
                    probe = replace(task, visible_test=test)
                    outcome = live.execute(cand, probe, timeout_ms)
                    if outcome.status != "ok":
                        verdict = False
                        break
                cand.correct = verdict
            else:
                raise click.UsageError(
                    "candidates lack correctness verdicts; provide --mock-exec or --runner"
                )


@main.command()
@click.option("--corpus", default=None, type=click.Path(exists=True))
@click.option("--backend", default=None)
@click.option("--mock", default=None, type=click.Path(exists=True))
@click.option("--method", "methods", multiple=True)
@click.option("--alpha", default=0.5, show_default=True)
@click.option("--exec-filter", is_flag=True, default=False)
@click.option("--mock-exec", default=None, type=click.Path(exists=True))
@click.option("--runner", default=None)
@click.option("--timeout-ms", default=10_000, show_default=True)
@click.option("--subsample", default=25, show_default=True)
@click.option("--trials", default=50, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--sizes", default="1,2,5,10,25", show_default=True,
              help="Comma-separated subsample sizes for the accuracy curve.")
@click.option("--run-dir", required=True, type=click.Path(exists=True))
def evaluate(corpus, backend, mock, methods, alpha, exec_filter, mock_exec, runner,
             timeout_ms, subsample, trials, seed, sizes, run_dir):
    """Bootstrap accuracy, degenerate-probe MRR, sample curve, alpha sweep."""
    run_dir = _run_dir(run_dir)
    tasks = {t.task_id: t for t in corpus_mod.load_corpus(_corpus_path(run_dir, corpus))}
    pool = _load_existing_pool(run_dir)
    pools = group_by_task(pool)
    method_tags = [normalize_method(m) for m in (methods or DEFAULT_METHODS)]

    if exec_filter or "mbr_exec" in method_tags:
        _ensure_executions(pools, tasks, _make_executor(mock_exec, runner), timeout_ms)
    _ensure_verdicts(pools, tasks, mock_exec, runner, timeout_ms)
    corpus_mod.save_pool(pool, _pool_path(run_dir))

    pool_size = min(len(p) for p in pools.values())
    config = EvalConfig(
        pool_size=pool_size,
        subsample_size=min(subsample, pool_size),
        bootstrap_trials=trials,
        seed=seed,
    )

    bootstrap_section = {}
    for method in method_tags:
        result = bootstrap_accuracy(
            RankerSpec(method=method, alpha=alpha), pools, config, exec_filter=exec_filter
        )
        bootstrap_section[method] = {
            "mean": result.mean,
            "stderr": result.stderr,
            "fallback_tasks": result.fallback_tasks,
        }

    mrr_section = {}
    fn_tasks = {tid: t for tid, t in tasks.items() if t.prompt_style == "function-completion"}
    if fn_tasks and (backend or mock):
        gateway = _make_gateway(backend, mock, run_dir, seed)
        mrr_pools = {}
        constructs = {}
        for task_id, task in sorted(fn_tasks.items()):
            base = [c for c in pools[task_id][:25]]
            mrr_pools[task_id] = base
            per_kind = {}
            next_index = max(c.index for c in pools[task_id]) + 1
            for offset, kind in enumerate(DEGENERATE_KINDS):
                construct = make_degenerate(kind, task, index=next_index + offset)
                score_candidate(gateway, task, construct)
                per_kind[kind] = construct
            constructs[task_id] = per_kind
        for method in method_tags:
            if method in ("mbr_exec",):
                continue  # execution-based; the probe targets likelihood rankers
            mrr_section[method] = degenerate_mrr(
                RankerSpec(method=method, alpha=alpha), mrr_pools, constructs
            )

    curve_sizes = [int(s) for s in str(sizes).split(",") if s.strip()]
    curve_sizes = [s for s in curve_sizes if s <= pool_size]
    curve_section = {}
    for method in method_tags:
        rows = accuracy_vs_samples(
            RankerSpec(method=method, alpha=alpha), pools, curve_sizes, config,
            exec_filter=exec_filter,
        )
        curve_section[method] = [
            {"size": size, "mean": mean, "stderr": stderr} for size, mean, stderr in rows
        ]

    sweep_rows = alpha_sweep("weighted_mmi", pools, config, exec_filter=exec_filter)
    sweep_section = [
        {"alpha": a, "mean": mean, "stderr": stderr} for a, mean, stderr in sweep_rows
    ]

    report = {
        "config": {
            "subsample_size": config.subsample_size,
            "bootstrap_trials": config.bootstrap_trials,
            "seed": config.seed,
            "alpha": alpha,
            "exec_filter": exec_filter,
        },
        "bootstrap": bootstrap_section,
        "mrr": mrr_section,
        "samples_curve": curve_section,
        "alpha_sweep": sweep_section,
    }
    (run_dir / "report.json").write_text(json.dumps(report, indent=2))

    with open(run_dir / "report.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["section", "method", "key", "value"])
        for method, row in bootstrap_section.items():
            for key, value in row.items():
                writer.writerow(["bootstrap", method, key, value])
        for method, kinds in mrr_section.items():
            for kind, value in kinds.items():
                writer.writerow(["mrr", method, kind, value])
        for method, rows in curve_section.items():
            for row in rows:
                writer.writerow(["samples_curve", method, row["size"], row["mean"]])
        for row in sweep_section:
            writer.writerow(["alpha_sweep", "weighted_mmi", row["alpha"], row["mean"]])

    click.echo(f"report written to {run_dir / 'report.json'}")


if __name__ == "__main__":
    main()
