import pytest

from coder_reviewer.corpus import Candidate, DemoExample, ScoreBundle, TaskInstance

FIXTURES = __file__.rsplit("/", 1)[0] + "/fixtures"


@pytest.fixture
def fn_task():
    return TaskInstance(
        task_id="t1",
        instruction="return decimal part of the input number",
        context="import math\ndef decimal_part(number):\n",
        visible_test="decimal_part(3.5)",
        hidden_tests=["assert decimal_part(3.5) == 0.5"],
    )


@pytest.fixture
def tagged_task():
    demos = [
        DemoExample(context="c1", instruction="list files", program="ls"),
        DemoExample(context="c2", instruction="show date", program="date"),
        DemoExample(context="c3", instruction="print home", program="echo $HOME"),
    ]
    return TaskInstance(
        task_id="t2",
        instruction="count lines in log.txt",
        context="cwd is /var",
        demos=demos,
        language="tagged-generic",
        prompt_style="tagged",
    )


def scored_candidate(index, coder=-10.0, coder_len=10, reviewer=-5.0, reviewer_len=5,
                     prior=None, prior_len=None, correct=None, task_id="t1"):
    return Candidate(
        task_id=task_id,
        index=index,
        raw_text=f"    return {index}\n",
        scores=ScoreBundle(
            coder_logp=coder, coder_len=coder_len,
            reviewer_logp=reviewer, reviewer_len=reviewer_len,
            prior_logp=prior, prior_len=prior_len,
        ),
        correct=correct,
    )
