"""Deterministic prompt assembly for the coder, reviewer, and prior channels.

The reviewer prompt inverts the order of instruction and program so that the
backend can score the likelihood of the instruction given the program.  For
reviewer prompts the package records the exact character span of the
instruction; the channel score is aggregated over tokens in that span.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .corpus import Candidate, TaskInstance

REVIEWER_CUE = "# write the docstring for the above function"

# Dedent-to-column-0 markers ending a generated function body.
FUNCTION_STOPS = ["\ndef ", "\nclass ", "\n@", "\nif __name__", "\nprint("]


class PromptError(ValueError):
    """Unsupported task/candidate combination for a prompt channel."""


@dataclass(slots=True)
class TagConfig:
    """Tag vocabulary for tagged-generic prompts (html-like block tags)."""

    context_tag: str = "info"
    instruction_tag: str = "text"
    program_tag: str = "code"


DEFAULT_TAGS = TagConfig()


@dataclass(slots=True)
class PromptPackage:
    text: str
    channel: str
    scored_span: tuple[int, int] | None = None
    stop_sequences: list[str] = field(default_factory=list)

    def validate(self) -> None:
        if self.channel not in ("coder", "reviewer", "prior"):
            raise ValueError(f"unknown channel {self.channel!r}")
        if self.channel == "reviewer":
            if self.scored_span is None:
                raise ValueError("reviewer prompts must carry a scored span")
            start, end = self.scored_span
            if not (0 <= start < end <= len(self.text)):
                raise ValueError(f"scored span {self.scored_span} out of range")
        elif self.scored_span is not None:
            raise ValueError(f"{self.channel} prompts carry no scored span")


def _with_newline(text: str) -> str:
    return text if text.endswith("\n") or not text else text + "\n"


def _docstring_block(instruction: str) -> tuple[str, int]:
    """Docstring line embedding the instruction verbatim.

    Returns the block and the offset of the instruction within it, so the
    scored span can slice to exactly the instruction string.
    """
    prefix = '    """'
    return prefix + instruction + '"""\n', len(prefix)


def _tag_block(tag: str, content: str) -> str:
    return f"<{tag}>{content}</{tag}>"


def build_coder_prompt(task: TaskInstance, tags: TagConfig = DEFAULT_TAGS) -> PromptPackage:
    """Prompt under which candidate programs are sampled and scored."""
    if task.prompt_style == "function-completion":
        if task.demos:
            raise PromptError(
                "function-completion prompts do not support demonstration examples"
            )
        block, _ = _docstring_block(task.instruction)
        text = _with_newline(task.context) + block
        return PromptPackage(text=text, channel="coder", stop_sequences=list(FUNCTION_STOPS))

    parts: list[str] = []
    for demo in task.demos:
        parts.append(
            "\n".join(
                [
                    _tag_block(tags.context_tag, demo.context),
                    _tag_block(tags.instruction_tag, demo.instruction),
                    _tag_block(tags.program_tag, demo.program),
                ]
            )
        )
    parts.append(
        "\n".join(
            [
                _tag_block(tags.context_tag, task.context),
                _tag_block(tags.instruction_tag, task.instruction),
                f"<{tags.program_tag}>",
            ]
        )
    )
    text = "\n\n".join(parts)
    return PromptPackage(
        text=text, channel="coder", stop_sequences=[f"</{tags.program_tag}>"]
    )


def build_reviewer_prompt(
    task: TaskInstance, candidate: Candidate, tags: TagConfig = DEFAULT_TAGS
) -> PromptPackage:
    """Inverted prompt: program first, then the instruction to be scored."""
    if candidate.rejection is not None:
        raise PromptError(f"candidate {candidate.index} is rejected ({candidate.rejection})")
    body = candidate.body_text
    if not body.strip():
        raise PromptError("candidate body is empty")

    if task.prompt_style == "function-completion":
        header = _with_newline(task.context)
        block, offset = _docstring_block(task.instruction)
        prefix = header + _with_newline(body) + REVIEWER_CUE + "\n" + header
        text = prefix + block
        start = len(prefix) + offset
        span = (start, start + len(task.instruction))
        pkg = PromptPackage(
            text=text, channel="reviewer", scored_span=span,
            stop_sequences=['\n"""', "\ndef "],
        )
    else:
        parts: list[str] = []
        for demo in task.demos:
            parts.append(
                "\n".join(
                    [
                        _tag_block(tags.context_tag, demo.context),
                        _tag_block(tags.program_tag, demo.program),
                        _tag_block(tags.instruction_tag, demo.instruction),
                    ]
                )
            )
        prefix_last = "\n".join(
            [
                _tag_block(tags.context_tag, task.context),
                _tag_block(tags.program_tag, body),
                f"<{tags.instruction_tag}>",
            ]
        )
        prefix = "\n\n".join(parts + [prefix_last])
        text = prefix + task.instruction + f"</{tags.instruction_tag}>"
        span = (len(prefix), len(prefix) + len(task.instruction))
        pkg = PromptPackage(
            text=text, channel="reviewer", scored_span=span,
            stop_sequences=[f"</{tags.instruction_tag}>"],
        )

    assert pkg.text[pkg.scored_span[0] : pkg.scored_span[1]] == task.instruction
    return pkg


def strip_docstring(context: str) -> str:
    """Remove the first standalone triple-quoted literal from a code block."""
    lines = context.splitlines(keepends=True)
    out: list[str] = []
    i = 0
    removed = False
    while i < len(lines):
        stripped = lines[i].lstrip()
        if not removed and (stripped.startswith('"""') or stripped.startswith("'''")):
            quote = stripped[:3]
            rest = stripped[3:]
            if quote in rest:
                i += 1
            else:
                i += 1
                while i < len(lines) and quote not in lines[i]:
                    i += 1
                i += 1
            removed = True
            continue
        out.append(lines[i])
        i += 1
    return "".join(out)


def build_prior_prompt(task: TaskInstance) -> PromptPackage:
    """Unconditional prompt for p(program): the header without its docstring."""
    if task.prompt_style != "function-completion":
        raise PromptError("prior prompts are only defined for function completion")
    text = _with_newline(strip_docstring(task.context))
    return PromptPackage(text=text, channel="prior", stop_sequences=list(FUNCTION_STOPS))
