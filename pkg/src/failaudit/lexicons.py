"""Identifier vocabularies that drive the rule triggers.

Every lexicon is a flat word list. Matching is case-insensitive and works on
identifier word boundaries: ``skipValidation``, ``SKIP_VALIDATION`` and
``skip_validation`` all decompose to the words ``skip validation``, and a
multi-word lexicon entry like ``record_event`` matches when its words appear
as a contiguous run. Defaults ship below and can be replaced per scan from a
flat key -> word-list document (JSON or YAML).
"""

from __future__ import annotations

import json
import re
from pathlib import Path

import yaml

DEFAULT_LEXICONS: dict[str, tuple[str, ...]] = {
    # audit / evidence surfaces whose failure must not be absorbed
    "audit": ("audit", "evidence", "journal", "ledger", "record_event", "log_event"),
    # flags that switch safeguards off
    "bypass": ("skip_validation", "force", "bypass", "no_verify", "disable", "unsafe"),
    # environment discriminators that gate relaxed behavior
    "environment": ("env", "environment", "node_env", "debug", "dev", "staging"),
    # calls that enforce something
    "guard": ("validate", "verify", "auth", "authenticate", "check"),
    # nondeterminism sources
    "random": ("random", "randint", "randrange", "choice", "choices", "shuffle",
               "sample", "uniform", "rand", "randn", "normal"),
    # calls that pin nondeterminism down
    "seed": ("seed", "set_seed", "manual_seed", "seed_everything"),
    # retry wrappers and decorators
    "retry": ("retry", "retries", "retrying", "backoff"),
    # loop counters that indicate a retry loop
    "attempt": ("attempt", "attempts", "tries", "retry", "retries"),
    # pause / backoff calls inside retry loops
    "sleep": ("sleep", "wait", "backoff", "delay"),
    # effectful operations that need idempotency under retry
    "write": ("post", "put", "insert", "update", "write", "send", "publish"),
    # evidence that retried writes are deduplicated
    "idempotency": ("idempotency", "idempotent", "dedup", "deduplicate", "request_id"),
    # logging machinery (classifies log-only handler bodies)
    "logging": ("log", "logger", "logging", "print", "console", "warn", "warning",
                "error", "info", "debug", "exception", "critical", "trace"),
    # fire-and-forget task creation
    "task_spawn": ("create_task", "ensure_future", "start_new_thread",
                   "run_in_executor", "submit", "spawn", "start_soon", "defer"),
    # identifiers whose value stands in for a real result
    "fallback_source": ("fallback", "cached", "cache", "default", "backup", "stale"),
    # disclosure keys that make a degraded result honest
    "confidence_posture": ("confidence", "degraded", "partial", "stale", "fallback"),
    # conditional tests that mark an error path
    "error_branch": ("error", "err", "fail", "failed", "failure", "exception",
                     "invalid", "missing"),
    # assertion patterns that exercise failure paths in tests
    "failure_assert": ("raises", "assert_raises", "rejects", "throws", "to_throw",
                       "throw_error"),
}

_WORD_RE = re.compile(r"[A-Z]+(?=[A-Z][a-z])|[A-Z]?[a-z0-9]+|[A-Z]+|[0-9]+")


def split_words(text: str) -> tuple[str, ...]:
    """Decompose identifier-ish text into lowercase words.

    Splits on non-alphanumeric characters and camelCase humps, so
    ``NODE_ENV``, ``nodeEnv`` and ``node-env`` all yield ``("node", "env")``.
    """
    return tuple(w.lower() for w in _WORD_RE.findall(text))


def _phrase(entry: str) -> tuple[str, ...]:
    return split_words(entry)


class Lexicons:
    """Lexicon set with word-boundary phrase matching."""

    def __init__(self, overrides: dict[str, list[str]] | None = None):
        merged: dict[str, tuple[str, ...]] = dict(DEFAULT_LEXICONS)
        if overrides:
            for key, words in overrides.items():
                if not isinstance(words, (list, tuple)) or not all(
                    isinstance(w, str) for w in words
                ):
                    raise ValueError(f"lexicon {key!r} must map to a list of words")
                merged[key] = tuple(words)
        self._phrases: dict[str, tuple[tuple[str, ...], ...]] = {
            key: tuple(_phrase(w) for w in words) for key, words in merged.items()
        }
        self.tables = merged

    @classmethod
    def from_file(cls, path: str | Path) -> "Lexicons":
        """Load overrides from a flat key -> word-list JSON/YAML document."""
        raw = Path(path).read_text(encoding="utf-8")
        try:
            data = json.loads(raw)
        except json.JSONDecodeError:
            data = yaml.safe_load(raw)
        if not isinstance(data, dict):
            raise ValueError(f"lexicon file {path} must contain a mapping")
        return cls(overrides=data)

    def match_words(self, category: str, words: tuple[str, ...]) -> bool:
        """True when any lexicon phrase occurs as a contiguous word run."""
        for phrase in self._phrases.get(category, ()):
            n = len(phrase)
            if n == 0:
                continue
            if n == 1:
                if phrase[0] in words:
                    return True
                continue
            for i in range(len(words) - n + 1):
                if words[i : i + n] == phrase:
                    return True
        return False

    def match(self, category: str, text: str) -> bool:
        return self.match_words(category, split_words(text))


DEFAULT = Lexicons()
