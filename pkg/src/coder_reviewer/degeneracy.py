"""Rejection of degenerate candidates and source canonicalization.

Three degenerate constructs (ReturnOnly, Repetitive, CopyPrompt) are used to
probe ranker bias; three matching rejection procedures flag them in real
pools: an empty/trivial check on the canonical text, a compression-ratio
check on the raw text, and canonicalization that strips comments,
docstrings, and print/assert message strings.
"""

from __future__ import annotations

import re
import zlib
from dataclasses import dataclass

from .corpus import Candidate, TaskInstance

CANONICAL_FN_NAME = "candidate_fn"

DEGENERATE_KINDS = ("ReturnOnly", "Repetitive", "CopyPrompt")


@dataclass(slots=True)
class RejectionConfig:
    compress_ratio_threshold: float = 4.0
    trivial_patterns_enabled: bool = True

    def validate(self) -> None:
        if self.compress_ratio_threshold <= 1:
            raise ValueError("compression threshold must be > 1")


class LexError(ValueError):
    """Source text could not be tokenized by the lightweight lexer."""


_NAME = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_NUMBER = re.compile(r"\d[\w.]*(?:[eE][+-]?\d+)?")
_STRING_PREFIX = re.compile(r"(?i)(?:rb|br|fr|rf|[rbfu])?$")


def _lex(source: str) -> list[tuple[str, str]]:
    """Tokenize into (kind, text) pairs whose texts concatenate to source.

    Kinds: ws, nl, comment, string, name, number, op.  String tokens keep
    their prefix and quotes; triple-quoted strings are single tokens.
    """
    tokens: list[tuple[str, str]] = []
    i = 0
    n = len(source)
    while i < n:
        ch = source[i]
        if ch == "\n":
            tokens.append(("nl", ch))
            i += 1
        elif ch in " \t\r\f":
            j = i
            while j < n and source[j] in " \t\r\f":
                j += 1
            tokens.append(("ws", source[i:j]))
            i = j
        elif ch == "#":
            j = source.find("\n", i)
            j = n if j == -1 else j
            tokens.append(("comment", source[i:j]))
            i = j
        elif ch in "\"'":
            start = i
            quote = source[i : i + 3] if source[i : i + 3] in ('"""', "'''") else ch
            j = i + len(quote)
            closed = False
            while j < n:
                if source[j] == "\\":
                    j += 2
                    continue
                if source.startswith(quote, j):
                    j += len(quote)
                    closed = True
                    break
                if len(quote) == 1 and source[j] == "\n":
                    break
                j += 1
            if not closed:
                raise LexError(f"unterminated string starting at offset {start}")
            text = source[start:j]
            if tokens and tokens[-1][0] == "name" and _STRING_PREFIX.fullmatch(tokens[-1][1]):
                text = tokens.pop()[1] + text
            tokens.append(("string", text))
            i = j
        elif ch.isdigit():
            m = _NUMBER.match(source, i)
            tokens.append(("number", m.group()))
            i = m.end()
        elif ch.isalpha() or ch == "_":
            m = _NAME.match(source, i)
            tokens.append(("name", m.group()))
            i = m.end()
        else:
            tokens.append(("op", ch))
            i += 1
    return tokens


def _drop_comments(tokens: list[tuple[str, str]]) -> list[tuple[str, str]]:
    out: list[tuple[str, str]] = []
    for kind, text in tokens:
        if kind == "comment":
            # drop trailing whitespace left behind on the line
            while out and out[-1][0] == "ws":
                out.pop()
            continue
        out.append((kind, text))
    return out


def _drop_bare_strings(tokens: list[tuple[str, str]]) -> list[tuple[str, str]]:
    """Remove statements that consist of a single string literal."""
    out: list[tuple[str, str]] = []
    i = 0
    n = len(tokens)
    while i < n:
        kind, _ = tokens[i]
        at_line_start = not out or out[-1][0] == "nl"
        if at_line_start:
            j = i
            while j < n and tokens[j][0] == "ws":
                j += 1
            if j < n and tokens[j][0] == "string":
                k = j + 1
                while k < n and tokens[k][0] == "ws":
                    k += 1
                if k >= n or tokens[k][0] == "nl":
                    i = k + 1 if k < n else k  # drop the whole line incl. newline
                    continue
        out.append(tokens[i])
        i += 1
    return out


def _blank_print_and_assert_strings(tokens: list[tuple[str, str]]) -> list[tuple[str, str]]:
    out = list(tokens)
    i = 0
    n = len(out)
    while i < n:
        kind, text = out[i]
        if kind == "name" and text == "print":
            j = i + 1
            while j < n and out[j][0] == "ws":
                j += 1
            if j < n and out[j] == ("op", "("):
                depth = 0
                while j < n:
                    if out[j] == ("op", "("):
                        depth += 1
                    elif out[j] == ("op", ")"):
                        depth -= 1
                        if depth == 0:
                            break
                    elif out[j][0] == "string":
                        out[j] = ("string", '""')
                    j += 1
                i = j
        elif kind == "name" and text == "assert":
            depth = 0
            j = i + 1
            past_comma = False
            while j < n and out[j][0] != "nl":
                if out[j][0] == "op":
                    if out[j][1] in "([{":
                        depth += 1
                    elif out[j][1] in ")]}":
                        depth -= 1
                    elif out[j][1] == "," and depth == 0:
                        past_comma = True
                    elif out[j][1] == ";" and depth == 0:
                        break
                elif past_comma and out[j][0] == "string":
                    out[j] = ("string", '""')
                j += 1
            i = j
        i += 1
    return out


def _rename_defined_functions(tokens: list[tuple[str, str]]) -> list[tuple[str, str]]:
    defined: list[str] = []
    for i, (kind, text) in enumerate(tokens):
        if kind == "name" and text == "def":
            j = i + 1
            while j < len(tokens) and tokens[j][0] == "ws":
                j += 1
            if j < len(tokens) and tokens[j][0] == "name":
                defined.append(tokens[j][1])
    if not defined:
        return tokens
    target = defined[0]
    return [
        ("name", CANONICAL_FN_NAME) if kind == "name" and text == target else (kind, text)
        for kind, text in tokens
    ]


def canonicalize(source: str, task: TaskInstance) -> str:
    """Strip comments/docstrings, blank print and assert message strings.

    For function-completion tasks the first defined function name (if the
    candidate re-emits a definition) is rewritten to a fixed canonical name.
    Idempotent; on lexing failure the source is returned unchanged so the
    candidate stays rankable on its raw text.
    """
    try:
        tokens = _lex(source)
    except LexError:
        return source
    tokens = _drop_comments(tokens)
    tokens = _drop_bare_strings(tokens)
    tokens = _blank_print_and_assert_strings(tokens)
    if task.prompt_style == "function-completion":
        tokens = _rename_defined_functions(tokens)
    return "".join(text for _, text in tokens)


_TRIVIAL_BODY = re.compile(r"\s*(return|pass)\s*")


def reject_empty_or_trivial(candidate: Candidate, task: TaskInstance) -> str | None:
    """Flag whitespace-only bodies, and bare return/pass bodies for
    function-completion corpora."""
    text = candidate.canonical_text if candidate.canonical_text is not None else candidate.raw_text
    if not text.strip():
        return "empty"
    if task.prompt_style == "function-completion" and _TRIVIAL_BODY.fullmatch(text):
        return "trivial"
    return None


def compression_ratio(text: str) -> float:
    raw = text.encode("utf-8")
    if not raw:
        return 0.0
    return len(raw) / len(zlib.compress(raw))


def reject_repetitive(candidate: Candidate, config: RejectionConfig = RejectionConfig()) -> str | None:
    """Flag candidates whose DEFLATE-compressed form is more than
    ``compress_ratio_threshold`` times shorter than the raw text."""
    config.validate()
    if compression_ratio(candidate.raw_text) > config.compress_ratio_threshold:
        return "repetitive"
    return None


def apply_rejections(
    candidate: Candidate,
    task: TaskInstance,
    config: RejectionConfig = RejectionConfig(),
) -> Candidate:
    """Canonicalize, then flag: empty/trivial on the canonical text,
    repetitive on the raw text.  Mutates and returns the candidate."""
    candidate.canonical_text = canonicalize(candidate.raw_text, task)
    rejection = None
    if config.trivial_patterns_enabled or task.prompt_style != "function-completion":
        rejection = reject_empty_or_trivial(candidate, task)
    elif not candidate.canonical_text.strip():
        rejection = "empty"
    if rejection is None:
        rejection = reject_repetitive(candidate, config)
    candidate.rejection = rejection
    return candidate


def make_degenerate(kind: str, task: TaskInstance, index: int = 0) -> Candidate:
    """Construct one of the three probe candidates for a function task."""
    if task.prompt_style != "function-completion":
        raise ValueError("degenerate constructs are defined for function-completion tasks")
    if kind == "ReturnOnly":
        body = "    return\n"
    elif kind == "Repetitive":
        body = "".join(f"    print({i})\n" for i in range(1, 51))
    elif kind == "CopyPrompt":
        instruction = " ".join(task.instruction.split())
        body = f"    # {instruction}\n"
    else:
        raise ValueError(f"unknown degenerate kind {kind!r}")
    return Candidate(task_id=task.task_id, index=index, raw_text=body)
