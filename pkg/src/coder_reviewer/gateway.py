"""Completion backends, token-level scoring, and a persistent response cache.

Two backends are provided: an OpenAI-completions-compatible HTTP backend and
a deterministic mock backend driven by an optional fixture file.  All token
spans come from the backend; nothing here implements a tokenizer beyond the
mock's whitespace chunking.
"""

from __future__ import annotations

import hashlib
import json
import os
import random
import re
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path

import requests

Token = tuple[str, int, int, float]  # (text, char_start, char_end, logprob)


class BackendError(RuntimeError):
    """Transport or protocol failure talking to a completion backend."""


@dataclass(slots=True)
class SampleRequest:
    prompt: str
    temperature: float = 0.4
    max_tokens: int = 300
    n: int = 1
    stop_sequences: list[str] = field(default_factory=list)
    seed: int | None = None

    def validate(self) -> None:
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError(f"temperature {self.temperature} outside [0, 2]")
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be >= 1")


@dataclass(slots=True)
class ScoredText:
    text: str
    tokens: list[Token]

    def validate(self) -> None:
        joined = "".join(t[0] for t in self.tokens)
        if joined != self.text:
            raise ValueError("token texts do not concatenate to text")
        pos = self.tokens[0][1] if self.tokens else 0
        for tok, start, end, logprob in self.tokens:
            if start != pos or end - start != len(tok):
                raise ValueError("token char spans are not contiguous")
            if logprob > 0:
                raise ValueError(f"positive logprob {logprob} for token {tok!r}")
            pos = end

    def total_logprob(self) -> float:
        return sum(t[3] for t in self.tokens)


def aggregate_span(scored: ScoredText, span: tuple[int, int]) -> tuple[float, int]:
    """Sum logprobs of tokens whose char_start lies in [start, end).

    A token belongs to the span iff its start offset does; tokens straddling
    the left boundary are excluded, so partitions of the text add up exactly.
    """
    start, end = span
    picked = [t for t in scored.tokens if start <= t[1] < end]
    if not picked:
        raise ValueError(f"span {span} selects no tokens")
    return sum(t[3] for t in picked), len(picked)


def _truncate_at_stops(text: str, stops: list[str]) -> str:
    cut = len(text)
    for stop in stops:
        pos = text.find(stop)
        if pos != -1:
            cut = min(cut, pos)
    return text[:cut]


_CHUNK = re.compile(r"\S+\s*|\s+")


def _mock_tokenize(text: str) -> list[tuple[str, int, int]]:
    spans = []
    for m in _CHUNK.finditer(text):
        spans.append((m.group(), m.start(), m.end()))
    return spans


def _digest(*parts: object) -> str:
    payload = json.dumps(parts, sort_keys=True, default=str).encode()
    return hashlib.sha256(payload).hexdigest()


class MockBackend:
    """Deterministic backend: a pure function of (request, seed, fixture).

    The optional fixture provides canned completions matched by prompt
    substring and scoring rules matched against the scored text and the
    continuation.  Unmatched tokens get a stable hash-derived logprob.

    Fixture shape::

        {
          "completions": [{"prompt_contains": "...", "texts": ["...", ...]}],
          "rules": [
            {"text_contains": "...",             # or a list: all must occur
             "continuation_contains": "...",
             "continuation_matches": "regex (fullmatch)",
             "logprob_per_token": -0.05}
          ]
        }
    """

    supports_echo = True

    def __init__(
        self,
        rules: list[dict] | None = None,
        completions: list[dict] | None = None,
        base_seed: int = 0,
    ):
        self.rules = rules or []
        self.completions = completions or []
        self.base_seed = base_seed
        self.call_count = 0

    @classmethod
    def from_file(cls, path: str | Path, base_seed: int = 0) -> "MockBackend":
        with open(path, encoding="utf-8") as fh:
            fixture = json.load(fh)
        return cls(
            rules=fixture.get("rules"),
            completions=fixture.get("completions"),
            base_seed=fixture.get("base_seed", base_seed),
        )

    @property
    def identity(self) -> str:
        return f"mock:{self.base_seed}:{_digest(self.rules, self.completions)[:12]}"

    def _rule_logprob(self, text: str, continuation: str | None) -> float | None:
        for rule in self.rules:
            needles = rule.get("text_contains")
            if needles is not None:
                if isinstance(needles, str):
                    needles = [needles]
                if not all(n in text for n in needles):
                    continue
            needle = rule.get("continuation_contains")
            if needle is not None and (continuation is None or needle not in continuation):
                continue
            pattern = rule.get("continuation_matches")
            if pattern is not None and (
                continuation is None or re.fullmatch(pattern, continuation, re.DOTALL) is None
            ):
                continue
            return float(rule["logprob_per_token"])
        return None

    def _hash_logprob(self, token: str, position: int) -> float:
        h = hashlib.sha256(f"{self.base_seed}:{position}:{token}".encode()).digest()
        return -1.0 - 2.0 * h[0] / 255.0

    def score_text(self, text: str, continuation: str | None = None) -> ScoredText:
        self.call_count += 1
        fixed = self._rule_logprob(text, continuation)
        tokens: list[Token] = []
        for tok, start, end in _mock_tokenize(text):
            logprob = fixed if fixed is not None else self._hash_logprob(tok, start)
            tokens.append((tok, start, end, logprob))
        return ScoredText(text=text, tokens=tokens)

    def _canned_texts(self, prompt: str) -> list[str] | None:
        for entry in self.completions:
            if entry.get("prompt_contains", "") in prompt:
                return list(entry["texts"])
        return None

    def _generate_text(self, prompt: str, seed: int | None, index: int) -> str:
        rng = random.Random(_digest("gen", self.base_seed, seed, prompt, index))
        lines = []
        n_lines = rng.randint(1, 4)
        for k in range(n_lines):
            a, b = rng.randint(0, 99), rng.randint(0, 99)
            lines.append(f"    v{k} = {a} + {b} * x{rng.randint(0, 9)}")
        lines.append(f"    return v{rng.randint(0, n_lines - 1)}")
        return "\n".join(lines) + "\n"

    def complete(self, request: SampleRequest) -> list[ScoredText]:
        request.validate()
        self.call_count += 1
        canned = self._canned_texts(request.prompt)
        out: list[ScoredText] = []
        for i in range(request.n):
            if canned is not None:
                text = canned[i % len(canned)]
            else:
                text = self._generate_text(request.prompt, request.seed, i)
            text = _truncate_at_stops(text, request.stop_sequences)
            spans = _mock_tokenize(text)[: request.max_tokens]
            text = text[: spans[-1][2]] if spans else ""
            fixed = self._rule_logprob(request.prompt + text, text)
            tokens: list[Token] = [
                (tok, start, end, fixed if fixed is not None else self._hash_logprob(tok, start))
                for tok, start, end in spans
            ]
            out.append(ScoredText(text=text, tokens=tokens))
        return out


class HTTPBackend:
    """OpenAI-completions-compatible HTTP backend.

    Auth token is read from the environment variable named by ``auth_env``.
    Transport errors are retried with exponential backoff; the operation is
    idempotent on the server side.
    """

    supports_echo = True

    def __init__(
        self,
        endpoint: str,
        model: str | None = None,
        auth_env: str = "COMPLETION_API_KEY",
        max_retries: int = 3,
        timeout_s: float = 120.0,
    ):
        self.endpoint = endpoint
        self.model = model
        self.auth_env = auth_env
        self.max_retries = max_retries
        self.timeout_s = timeout_s

    @property
    def identity(self) -> str:
        return f"http:{self.endpoint}:{self.model or ''}"

    def _post(self, body: dict) -> dict:
        headers = {"Content-Type": "application/json"}
        token = os.environ.get(self.auth_env)
        if token:
            headers["Authorization"] = f"Bearer {token}"
        if self.model:
            body = {"model": self.model, **body}
        delay = 1.0
        last_exc: Exception | None = None
        for attempt in range(self.max_retries):
            try:
                resp = requests.post(
                    self.endpoint, json=body, headers=headers, timeout=self.timeout_s
                )
                if resp.status_code >= 500 or resp.status_code == 429:
                    raise BackendError(f"backend returned {resp.status_code}")
                resp.raise_for_status()
                return resp.json()
            except (requests.RequestException, BackendError) as exc:
                last_exc = exc
                if attempt + 1 < self.max_retries:
                    time.sleep(delay)
                    delay *= 2
        raise BackendError(f"backend unreachable after {self.max_retries} attempts: {last_exc}")

    @staticmethod
    def _choice_to_scored(choice: dict, base_offset: int = 0) -> ScoredText:
        text = choice.get("text", "")
        logprobs = choice.get("logprobs") or {}
        token_texts = logprobs.get("tokens")
        if token_texts is None:
            return ScoredText(text=text, tokens=[])
        token_logprobs = logprobs.get("token_logprobs", [])
        offsets = logprobs.get("text_offset", [])
        tokens: list[Token] = []
        for tok, lp, off in zip(token_texts, token_logprobs, offsets):
            start = off - base_offset
            tokens.append((tok, start, start + len(tok), lp if lp is not None else 0.0))
        return ScoredText(text=text, tokens=tokens)

    def complete(self, request: SampleRequest) -> list[ScoredText]:
        request.validate()
        body = {
            "prompt": request.prompt,
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
            "n": request.n,
            "logprobs": 1,
            "echo": False,
        }
        if request.stop_sequences:
            body["stop"] = request.stop_sequences[:4]
        data = self._post(body)
        out = [self._choice_to_scored(c) for c in data.get("choices", [])]
        return [
            ScoredText(
                text=_truncate_at_stops(s.text, request.stop_sequences),
                tokens=[t for t in s.tokens if t[1] < len(_truncate_at_stops(s.text, request.stop_sequences))],
            )
            for s in out
        ]

    def score_text(self, text: str, continuation: str | None = None) -> ScoredText:
        body = {
            "prompt": text,
            "temperature": 0.0,
            "max_tokens": 0,
            "logprobs": 1,
            "echo": True,
        }
        data = self._post(body)
        choices = data.get("choices", [])
        if not choices:
            raise BackendError("echo scoring returned no choices")
        return self._choice_to_scored(choices[0])


class ResponseCache:
    """Content-addressed on-disk cache; writers use atomic rename."""

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)

    def _path(self, key: str) -> Path:
        return self.directory / key[:2] / f"{key}.json"

    def get(self, key: str) -> object | None:
        path = self._path(key)
        if not path.exists():
            return None
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)

    def put(self, key: str, value: object) -> None:
        path = self._path(key)
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                json.dump(value, fh)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise


def _scored_to_json(scored: ScoredText) -> dict:
    return {"text": scored.text, "tokens": [list(t) for t in scored.tokens]}


def _scored_from_json(data: dict) -> ScoredText:
    return ScoredText(
        text=data["text"],
        tokens=[(t[0], t[1], t[2], t[3]) for t in data["tokens"]],
    )


class Gateway:
    """Backend access point with transparent caching.

    With caching on or off all returned values are identical; the cache key
    binds the backend identity, so switching backends never aliases entries.
    """

    def __init__(self, backend, cache_dir: str | Path | None = None):
        self.backend = backend
        self.cache = ResponseCache(cache_dir) if cache_dir else None

    def sample(self, request: SampleRequest) -> list[ScoredText]:
        key = _digest(
            "sample",
            self.backend.identity,
            request.prompt,
            request.temperature,
            request.max_tokens,
            request.n,
            request.stop_sequences,
            request.seed,
        )
        if self.cache is not None:
            hit = self.cache.get(key)
            if hit is not None:
                return [_scored_from_json(d) for d in hit]
        result = self.backend.complete(request)
        if self.cache is not None:
            self.cache.put(key, [_scored_to_json(s) for s in result])
        return result

    def score_whole(self, text: str, continuation_hint: str | None = None) -> ScoredText:
        """Echo-score a full prompt; logprobs cover every token in it."""
        key = _digest("echo", self.backend.identity, text, continuation_hint)
        if self.cache is not None:
            hit = self.cache.get(key)
            if hit is not None:
                return _scored_from_json(hit)
        result = self.backend.score_text(text, continuation_hint)
        if self.cache is not None:
            self.cache.put(key, _scored_to_json(result))
        return result

    def score_continuation(self, prompt: str, continuation: str) -> ScoredText:
        """Score exactly the continuation tokens, conditioned on the prompt."""
        if not continuation:
            raise ValueError("continuation must be non-empty")
        scored = self.score_whole(prompt + continuation, continuation)
        boundary = len(prompt)
        picked = [t for t in scored.tokens if t[1] >= boundary]
        if not picked:
            raise ValueError("continuation selects no tokens")
        start = picked[0][1]
        tokens = [(tok, s - start, e - start, lp) for tok, s, e, lp in picked]
        return ScoredText(text=scored.text[start:], tokens=tokens)
