"""Source fixtures shared across the suite.

Two kinds: the canonical pair (a handler that conceals a persistence failure
vs. a guard that propagates it), and a template pool that a seeded generator
assembles into synthetic corpora covering every automated check at every
severity it can emit.
"""

from __future__ import annotations

import random
from pathlib import Path

CONCEALING_HANDLER = '''def process(data):
    try:
        result = persist(data)
        return {"status": "ok"}
    except Exception:
        log.warning("persist failed")
        return {"status": "ok"}
'''

PROPAGATING_GUARD = '''def process(data):
    result = persist(data)
    if not result:
        raise PersistenceError("persist returned empty")
    return {"status": "ok"}
'''

BROKEN_MIDFILE = '''def first():
    try:
        risky()
    except Exception:
        pass

def broken(:
    pass

def salvage(data):
    try:
        other(data)
    except:
        pass
'''

# path suffix -> (source, {check: severity} expectations used by generator tests)
TEMPLATES: dict[str, tuple[str, dict[str, str]]] = {
    "success_handler.py": (
        '''def submit(payload):
    try:
        gateway.send(payload)
        return "ok"
    except Exception:
        return "ok"
''',
        {"C01": "HIGH", "C03": "MEDIUM"},
    ),
    "audit_writer.py": (
        '''def persist_audit(event):
    try:
        ledger.record_event(event)
    except Exception:
        logger.warning("audit write failed")
''',
        {"C02": "HIGH", "C03": "MEDIUM"},
    ),
    "cleanup.py": (
        '''def cleanup(session):
    try:
        session.close()
    except Exception:
        pass
''',
        {"C03": "HIGH"},
    ),
    "refresh.py": (
        '''def refresh(cache):
    try:
        cache.reload()
    except Exception:
        logger.exception("reload failed")
''',
        {"C03": "MEDIUM"},
    ),
    "options.py": (
        '''def merge(base, extra):
    combined = dict(base)
    combined.update(extra or {})
    timeout = base.get("timeout", 30)
    return combined
''',
        {"C04": "LOW"},
    ),
    "apply_change.py": (
        '''def apply_change(change, force=False):
    if force:
        return commit(change)
    validate(change)
    return commit(change)
''',
        {"C05": "HIGH"},
    ),
    "lookup.py": (
        '''def lookup(table, key):
    if key in table:
        return table[key]
    if is_error(table):
        return None
    return table.fetch(key)
''',
        {"C06": "MEDIUM"},
    ),
    "scheduler.py": (
        '''def schedule(loop, work):
    loop.create_task(work())
''',
        {"C08": "MEDIUM"},
    ),
    "env_guard.py": (
        '''def guard(request, environment):
    if environment == "staging":
        return handle(request)
    verify(request)
    return handle(request)
''',
        {"C09": "HIGH"},
    ),
    "boot.py": (
        '''def init(app):
    try:
        app.connect()
    except Exception:
        logger.error("connect failed during init")
''',
        {"C10": "HIGH", "C03": "MEDIUM"},
    ),
    "jitter.py": (
        '''import random


def jitter(base):
    return base * random.uniform(0.5, 1.5)
''',
        {"C11": "HIGH"},
    ),
    "profile_cache.py": (
        '''def read_profile(store, user):
    try:
        return store.fetch(user)
    except ConnectionError:
        return cached_profile
''',
        {"C13": "MEDIUM"},
    ),
    "delivery.py": (
        '''import time


def deliver(message):
    for attempt in range(5):
        try:
            queue.publish(message)
            return True
        except Exception:
            time.sleep(attempt)
    raise RuntimeError(message)
''',
        {"C15": "HIGH"},
    ),
    "sync_state.js": (
        '''function saveState(state) {
  try {
    api.post('/state', state);
    return { status: 'ok' };
  } catch (err) {
    console.error('save failed', err);
    return { status: 'ok' };
  }
}
''',
        {"C01": "HIGH", "C03": "MEDIUM"},
    ),
    "poller.js": (
        '''function refresh(store) {
  fetchData().then((data) => store.apply(data));
}
''',
        {"C08": "MEDIUM"},
    ),
    "entries.ts": (
        '''export function parseEntry(raw: string) {
  try {
    return JSON.parse(raw);
  } catch (err) {
    return null;
  }
}
''',
        {"C03": "MEDIUM", "C06": "MEDIUM"},
    ),
    "plain_math.py": (
        '''def add(a, b):
    return a + b


def scale(values, factor):
    return [v * factor for v in values]
''',
        {},
    ),
    "formatting.py": (
        '''def label(name, value):
    return f"{name}={value}"
''',
        {},
    ),
}

# test-file templates live under a tests/ directory segment
TEST_TEMPLATES: dict[str, tuple[str, dict[str, str]]] = {
    "test_totals.py": (
        '''def test_one():
    assert total([1]) == 1


def test_two():
    assert total([1, 1]) == 2


def test_three():
    assert total([1, 2]) == 3


def test_four():
    assert total([]) == 0
''',
        {"C14": "HIGH"},
    ),
    "test_ratio.py": (
        '''import pytest


def test_a():
    assert parse("1") == 1


def test_b():
    assert parse("2") == 2


def test_c():
    assert parse("3") == 3


def test_d():
    assert parse("4") == 4


def test_e():
    assert parse("5") == 5


def test_rejects_garbage():
    with pytest.raises(ValueError):
        parse("zzz")
''',
        {"C14": "MEDIUM"},
    ),
    "test_balanced.py": (
        '''import pytest


def test_round_trip():
    assert decode(encode("x")) == "x"


def test_rejects_empty():
    with pytest.raises(ValueError):
        decode("")
''',
        {},
    ),
    "broken_module.py": (BROKEN_MIDFILE, {"C03": "HIGH"}),
}

_DIRS = ("app", "core", "web", "lib", "svc")


def build_fixture_corpus(root: Path) -> Path:
    """Write the fixed mixed-language corpus used by CLI and acceptance tests."""
    files = {
        "app/process.py": CONCEALING_HANDLER,
        "app/pipeline.py": PROPAGATING_GUARD,
        "app/broken.py": BROKEN_MIDFILE,
        "vendor/vendored.py": "def x():\n    try:\n        a()\n    except Exception:\n        pass\n",
        "docs/readme.md": "# notes\n",
    }
    for name, (source, _) in TEMPLATES.items():
        files[f"app/{name}"] = source
    for name, (source, _) in TEST_TEMPLATES.items():
        files[f"tests/{name}"] = source
    for rel, content in files.items():
        path = root / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(content, encoding="utf-8")
    return root


def synthetic_corpus(count: int, seed: int) -> list[tuple[str, str]]:
    """(path, source) pairs: forced full-template coverage, then seeded picks."""
    rng = random.Random(seed)
    entries: list[tuple[str, str]] = []
    forced = list(TEMPLATES.items()) + list(TEST_TEMPLATES.items())
    for index, (name, (source, _)) in enumerate(forced):
        prefix = "tests" if name.startswith("test_") else _DIRS[index % len(_DIRS)]
        entries.append((f"{prefix}/{index:03d}_{name}", source))
    pool = forced
    while len(entries) < count:
        name, (source, _) = rng.choice(pool)
        index = len(entries)
        prefix = "tests" if name.startswith("test_") else rng.choice(_DIRS)
        entries.append((f"{prefix}/{index:03d}_{name}", source))
    return entries[:count]


def expected_severities() -> dict[str, set[str]]:
    """Severity sets the full template pool is guaranteed to produce."""
    out: dict[str, set[str]] = {}
    for _, (_, expected) in list(TEMPLATES.items()) + list(TEST_TEMPLATES.items()):
        for check, severity in expected.items():
            out.setdefault(check, set()).add(severity)
    return out
