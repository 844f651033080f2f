import json

import pytest
from click.testing import CliRunner

from coder_reviewer import corpus as corpus_mod
from coder_reviewer.cli import main
from coder_reviewer.gateway import Gateway, MockBackend
from coder_reviewer.pipeline import score_candidate
from conftest import FIXTURES

CORPUS = f"{FIXTURES}/dryrun_corpus.jsonl"
EXEC_FIXTURE = f"{FIXTURES}/dryrun_exec.json"


@pytest.fixture
def mock_fixture(tmp_path):
    path = tmp_path / "backend.json"
    path.write_text(json.dumps({"rules": [], "completions": []}))
    return str(path)


def invoke(args):
    runner = CliRunner()
    result = runner.invoke(main, args, catch_exceptions=False)
    return result


def run_sample(run_dir, mock_fixture, n=6, seed=0):
    result = invoke([
        "sample", "--corpus", CORPUS, "--mock", mock_fixture,
        "--n-samples", str(n), "--seed", str(seed), "--run-dir", str(run_dir),
    ])
    assert result.exit_code == 0, result.output
    return result


def run_score(run_dir, mock_fixture, methods=()):
    args = ["score", "--mock", mock_fixture, "--run-dir", str(run_dir)]
    for m in methods:
        args += ["--method", m]
    result = invoke(args)
    assert result.exit_code == 0, result.output
    return result


def test_sample_writes_pool_and_manifest(tmp_path, mock_fixture):
    run_dir = tmp_path / "run"
    run_sample(run_dir, mock_fixture)
    pool = corpus_mod.load_pool(run_dir / "pool.jsonl")
    assert len(pool) == 10 * 6
    manifest = json.loads((run_dir / "manifest.json").read_text())
    assert manifest["corpus"] == CORPUS
    assert manifest["n_samples"] == 6


def test_sample_is_resumable(tmp_path, mock_fixture):
    run_dir = tmp_path / "run"
    run_sample(run_dir, mock_fixture)
    first = (run_dir / "pool.jsonl").read_bytes()
    result = run_sample(run_dir, mock_fixture)
    assert "sampled 0 new task pools" in result.output
    assert (run_dir / "pool.jsonl").read_bytes() == first


def test_score_populates_channels(tmp_path, mock_fixture):
    run_dir = tmp_path / "run"
    run_sample(run_dir, mock_fixture)
    run_score(run_dir, mock_fixture)
    pool = corpus_mod.load_pool(run_dir / "pool.jsonl")
    for cand in pool:
        assert cand.canonical_text is not None
        if cand.rejection is None:
            assert cand.scores.coder_logp is not None
            assert cand.scores.reviewer_logp is not None
            assert cand.scores.prior_logp is None


def test_score_adds_prior_channel_for_alternate(tmp_path, mock_fixture):
    run_dir = tmp_path / "run"
    run_sample(run_dir, mock_fixture)
    run_score(run_dir, mock_fixture, methods=["alternate"])
    pool = corpus_mod.load_pool(run_dir / "pool.jsonl")
    kept = [c for c in pool if c.rejection is None]
    assert kept and all(c.scores.prior_logp is not None for c in kept)


def test_rejected_candidates_are_never_scored(fn_task):
    backend = MockBackend()
    gateway = Gateway(backend)
    from coder_reviewer.corpus import Candidate

    cand = Candidate("t1", 0, "    return\n", rejection="trivial")
    before = backend.call_count
    score_candidate(gateway, fn_task, cand)
    assert backend.call_count == before
    assert cand.scores is None


def test_rerank_writes_selections(tmp_path, mock_fixture):
    run_dir = tmp_path / "run"
    run_sample(run_dir, mock_fixture)
    run_score(run_dir, mock_fixture)
    result = invoke([
        "rerank", "--method", "coder", "--method", "coder-reviewer",
        "--run-dir", str(run_dir),
    ])
    assert result.exit_code == 0, result.output
    selections = json.loads((run_dir / "selections.json").read_text())
    assert len(selections) == 10 * 2
    assert {s["method"] for s in selections} == {"coder", "coder_reviewer"}
    for s in selections:
        assert isinstance(s["selected_index"], int)


def test_rerank_unknown_method_is_usage_error(tmp_path, mock_fixture):
    run_dir = tmp_path / "run"
    run_sample(run_dir, mock_fixture)
    result = CliRunner().invoke(
        main, ["rerank", "--method", "made-up", "--run-dir", str(run_dir)]
    )
    assert result.exit_code != 0
    assert "made-up" in result.output


def test_rerank_exec_filter_selects_only_executable(tmp_path, mock_fixture):
    run_dir = tmp_path / "run"
    run_sample(run_dir, mock_fixture)
    run_score(run_dir, mock_fixture)
    result = invoke([
        "rerank", "--method", "coder", "--exec-filter",
        "--mock-exec", EXEC_FIXTURE, "--run-dir", str(run_dir),
    ])
    assert result.exit_code == 0, result.output
    pool = corpus_mod.load_pool(run_dir / "pool.jsonl")
    by_task = {}
    for cand in pool:
        by_task.setdefault(cand.task_id, {})[cand.index] = cand
    # the fixture makes candidate 4 of every task error, so the filter is live
    assert any(c.execution.status != "ok" for c in pool if c.execution)
    for s in json.loads((run_dir / "selections.json").read_text()):
        if not s["fallback"]:
            assert by_task[s["task_id"]][s["selected_index"]].execution.status == "ok"


def test_mbr_method_requires_executor(tmp_path, mock_fixture):
    run_dir = tmp_path / "run"
    run_sample(run_dir, mock_fixture)
    run_score(run_dir, mock_fixture)
    result = CliRunner().invoke(
        main, ["rerank", "--method", "mbr-exec", "--run-dir", str(run_dir)]
    )
    assert result.exit_code != 0
    assert "--mock-exec" in result.output or "--runner" in result.output


def run_full_pipeline(run_dir, mock_fixture, seed=0):
    run_sample(run_dir, mock_fixture, seed=seed)
    run_score(run_dir, mock_fixture)
    result = invoke([
        "evaluate", "--mock", mock_fixture, "--mock-exec", EXEC_FIXTURE,
        "--trials", "10", "--seed", str(seed), "--run-dir", str(run_dir),
    ])
    assert result.exit_code == 0, result.output
    return json.loads((run_dir / "report.json").read_text())


def test_evaluate_report_sections(tmp_path, mock_fixture):
    report = run_full_pipeline(tmp_path / "run", mock_fixture)
    assert set(report) == {"config", "bootstrap", "mrr", "samples_curve", "alpha_sweep"}
    assert set(report["bootstrap"]) == {
        "random", "coder", "n_coder", "reviewer",
        "coder_reviewer", "n_coder_reviewer", "weighted_mmi",
    }
    for row in report["bootstrap"].values():
        assert 0.0 <= row["mean"] <= 1.0
        assert row["stderr"] >= 0.0
    assert len(report["alpha_sweep"]) == 9
    assert [r["alpha"] for r in report["alpha_sweep"]] == pytest.approx(
        [0.1 * k for k in range(1, 10)]
    )
    for rows in report["samples_curve"].values():
        assert [r["size"] for r in rows] == [1, 2, 5]
    assert report["mrr"], "degenerate-probe section should be populated"
    for kinds in report["mrr"].values():
        assert set(kinds) == {"ReturnOnly", "Repetitive", "CopyPrompt"}


def test_evaluate_csv_mirrors_report(tmp_path, mock_fixture):
    run_dir = tmp_path / "run"
    report = run_full_pipeline(run_dir, mock_fixture)
    lines = (run_dir / "report.csv").read_text().strip().splitlines()
    assert lines[0] == "section,method,key,value"
    sections = {line.split(",")[0] for line in lines[1:]}
    assert sections == {"bootstrap", "mrr", "samples_curve", "alpha_sweep"}
    bootstrap_rows = [l for l in lines[1:] if l.startswith("bootstrap,")]
    assert len(bootstrap_rows) == 3 * len(report["bootstrap"])


def test_evaluate_is_reproducible(tmp_path, mock_fixture):
    a = run_full_pipeline(tmp_path / "a", mock_fixture, seed=7)
    b = run_full_pipeline(tmp_path / "b", mock_fixture, seed=7)
    assert a == b


def test_config_file_supplies_defaults(tmp_path, mock_fixture):
    config = tmp_path / "config.json"
    config.write_text(json.dumps({"n_samples": 3, "seed": 5}))
    run_dir = tmp_path / "run"
    result = invoke([
        "--config", str(config), "sample",
        "--corpus", CORPUS, "--mock", mock_fixture, "--run-dir", str(run_dir),
    ])
    assert result.exit_code == 0, result.output
    pool = corpus_mod.load_pool(run_dir / "pool.jsonl")
    assert len(pool) == 10 * 3
    assert json.loads((run_dir / "manifest.json").read_text())["seed"] == 5


def test_score_without_pool_is_usage_error(tmp_path, mock_fixture):
    run_dir = tmp_path / "empty"
    run_dir.mkdir()
    result = CliRunner().invoke(
        main, ["score", "--corpus", CORPUS, "--mock", mock_fixture,
               "--run-dir", str(run_dir)]
    )
    assert result.exit_code != 0
    assert "sample" in result.output
