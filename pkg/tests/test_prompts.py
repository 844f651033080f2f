import pytest

from coder_reviewer.corpus import Candidate
from coder_reviewer.prompts import (
    REVIEWER_CUE,
    PromptError,
    build_coder_prompt,
    build_prior_prompt,
    build_reviewer_prompt,
    strip_docstring,
)


def make_candidate(body="    return number - int(number)\n", task_id="t1"):
    return Candidate(task_id=task_id, index=0, raw_text=body)


def test_zero_shot_function_prompt_is_header_plus_docstring(fn_task):
    pkg = build_coder_prompt(fn_task)
    assert pkg.text.startswith(fn_task.context)
    assert f'"""{fn_task.instruction}"""' in pkg.text
    assert pkg.scored_span is None
    assert pkg.channel == "coder"


def test_coder_prompt_deterministic(fn_task):
    assert build_coder_prompt(fn_task).text == build_coder_prompt(fn_task).text


def test_function_completion_with_demos_unsupported(fn_task, tagged_task):
    fn_task.demos = tagged_task.demos
    with pytest.raises(PromptError):
        build_coder_prompt(fn_task)


def test_tagged_coder_prompt_has_demo_blocks_before_test_block(tagged_task):
    pkg = build_coder_prompt(tagged_task)
    blocks = pkg.text.split("\n\n")
    assert len(blocks) == 4
    for demo, block in zip(tagged_task.demos, blocks[:3]):
        assert block.index(f"<text>{demo.instruction}</text>") < block.index(
            f"<code>{demo.program}</code>"
        )
    assert blocks[3].endswith("<code>")
    assert pkg.stop_sequences == ["</code>"]


def test_tagged_zero_demos_allowed(tagged_task):
    tagged_task.demos = []
    pkg = build_coder_prompt(tagged_task)
    assert pkg.text.count("<info>") == 1


def test_reviewer_function_prompt_layout(fn_task):
    cand = make_candidate()
    pkg = build_reviewer_prompt(fn_task, cand)
    assert pkg.text.index(cand.raw_text) < pkg.text.index('"""')
    assert REVIEWER_CUE in pkg.text
    start, end = pkg.scored_span
    assert pkg.text[start:end] == fn_task.instruction


def test_reviewer_tagged_prompt_inverts_every_example(tagged_task):
    cand = make_candidate(body="wc -l log.txt", task_id="t2")
    pkg = build_reviewer_prompt(tagged_task, cand)
    blocks = pkg.text.split("\n\n")
    assert len(blocks) == 4
    for block in blocks:
        assert block.index("<code>") < block.index("<text>")
    start, end = pkg.scored_span
    assert pkg.text[start:end] == tagged_task.instruction


def test_reviewer_rejects_rejected_or_empty_candidates(fn_task):
    rejected = make_candidate()
    rejected.rejection = "trivial"
    with pytest.raises(PromptError):
        build_reviewer_prompt(fn_task, rejected)
    with pytest.raises(PromptError):
        build_reviewer_prompt(fn_task, make_candidate(body="   \n"))


def test_inversion_is_layout_only(tagged_task):
    cand = make_candidate(body="wc -l log.txt", task_id="t2")
    coder = build_coder_prompt(tagged_task)
    reviewer = build_reviewer_prompt(tagged_task, cand)
    for demo in tagged_task.demos:
        for text in (demo.context, demo.instruction, demo.program):
            assert text in coder.text and text in reviewer.text
    assert tagged_task.instruction in coder.text and tagged_task.instruction in reviewer.text


def test_no_prompt_contains_hidden_tests(fn_task):
    cand = make_candidate()
    for pkg in (
        build_coder_prompt(fn_task),
        build_reviewer_prompt(fn_task, cand),
        build_prior_prompt(fn_task),
    ):
        for hidden in fn_task.hidden_tests:
            assert hidden not in pkg.text


def test_prior_prompt_strips_docstring(fn_task):
    fn_task.context = 'def decimal_part(number):\n    """old docstring"""\n'
    pkg = build_prior_prompt(fn_task)
    assert pkg.text == "def decimal_part(number):\n"


def test_prior_prompt_unchanged_without_docstring(fn_task):
    pkg = build_prior_prompt(fn_task)
    assert pkg.text == fn_task.context


def test_prior_prompt_rejects_tagged_tasks(tagged_task):
    with pytest.raises(PromptError):
        build_prior_prompt(tagged_task)


def test_strip_docstring_handles_multiline():
    ctx = 'def f():\n    """line one\n    line two\n    """\n    pass\n'
    assert strip_docstring(ctx) == "def f():\n    pass\n"
