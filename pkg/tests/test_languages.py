from __future__ import annotations

import pytest

from failaudit.languages import (
    JAVASCRIPT,
    JSX_TSX,
    PYTHON,
    TYPESCRIPT,
    UNSUPPORTED,
    detect_language,
    is_startup_path,
    is_test_path,
    iter_source_files,
)


@pytest.mark.parametrize(
    "path,expected",
    [
        ("a/b.py", PYTHON),
        ("src/x.tsx", JSX_TSX),
        ("README.md", UNSUPPORTED),
        ("lib/mod.js", JAVASCRIPT),
        ("lib/mod.mjs", JAVASCRIPT),
        ("lib/mod.ts", TYPESCRIPT),
        ("lib/mod.jsx", JSX_TSX),
        ("Makefile", UNSUPPORTED),
        ("weird.PY", PYTHON),
    ],
)
def test_detect_language(path, expected):
    assert detect_language(path) == expected


def test_detect_language_rejects_empty_path():
    with pytest.raises(ValueError):
        detect_language("")


def test_test_path_rules():
    assert is_test_path("tests/test_x.py")
    assert is_test_path("pkg/__tests__/thing.js")
    assert is_test_path("src/app.spec.ts")
    assert is_test_path("src/widget.test.js")
    assert not is_test_path("src/contest.py")
    assert not is_test_path("src/latest.js")


def test_startup_path_rules():
    assert is_startup_path("svc/startup.py")
    assert is_startup_path("app/bootstrap.ts")
    assert not is_startup_path("app/main_loop.py")


def test_walk_honors_ignores(tmp_path):
    (tmp_path / "src").mkdir()
    (tmp_path / "src" / "a.py").write_text("x = 1\n")
    (tmp_path / "node_modules").mkdir()
    (tmp_path / "node_modules" / "dep.js").write_text("var x = 1;\n")
    (tmp_path / "src" / "bundle.min.js").write_text("var x=1;\n")
    (tmp_path / "src" / "notes.txt").write_text("hello\n")

    found = iter_source_files(tmp_path)
    assert [p.name for p in found] == ["a.py"]

    unfiltered = iter_source_files(tmp_path, use_default_ignores=False)
    assert {p.name for p in unfiltered} == {"a.py", "dep.js", "bundle.min.js"}

    extra = iter_source_files(tmp_path, extra_ignore=("a.py",))
    assert found and [p.name for p in extra] == []


def test_walk_single_file(tmp_path):
    target = tmp_path / "one.py"
    target.write_text("x = 1\n")
    assert iter_source_files(target) == [target]
    readme = tmp_path / "readme.md"
    readme.write_text("hi\n")
    assert iter_source_files(readme) == []
