"""Show why a single likelihood channel is fooled by degenerate programs.

Three constructed probes are injected into a scored pool with no rejection
filters, and we report the mean reciprocal rank each ranking method assigns
them.  The coder channel loves the bare-return probe; the reviewer channel
loves the instruction-copying probe; their sum demotes both.

Run with:  python3 demos/02_degenerate_probes.py
"""

from pathlib import Path

from coder_reviewer import (
    DEGENERATE_KINDS,
    Gateway,
    MockBackend,
    RankerSpec,
    SamplingParams,
    apply_rejections,
    degenerate_mrr,
    load_corpus,
    make_degenerate,
    sample_task,
    score_candidate,
)

FIXTURES = Path(__file__).resolve().parent.parent / "tests" / "fixtures"

tasks = load_corpus(FIXTURES / "degeneracy_corpus.jsonl")
gateway = Gateway(MockBackend.from_file(FIXTURES / "degeneracy_backend.json"))

pools, constructs = {}, {}
for task in tasks:
    pool = sample_task(gateway, task, SamplingParams(n=25, seed=1))
    for cand in pool:
        score_candidate(gateway, task, cand)
    pools[task.task_id] = pool
    constructs[task.task_id] = {}
    for offset, kind in enumerate(DEGENERATE_KINDS):
        probe = make_degenerate(kind, task, index=25 + offset)
        score_candidate(gateway, task, probe)
        constructs[task.task_id][kind] = probe

print(f"{'method':>16} " + " ".join(f"{k:>12}" for k in DEGENERATE_KINDS))
for method in ("coder", "reviewer", "coder_reviewer"):
    mrr = degenerate_mrr(RankerSpec(method), pools, constructs)
    print(f"{method:>16} " + " ".join(f"{mrr[k]:12.3f}" for k in DEGENERATE_KINDS))

print("\nand the rejection filters catch all three outright:")
for kind in DEGENERATE_KINDS:
    probe = apply_rejections(make_degenerate(kind, tasks[0]), tasks[0])
    print(f"  {kind:>12} -> rejected as {probe.rejection!r}")
