"""Language detection and source-file discovery.

A file's language is decided purely by its extension; anything the scanner
does not parse maps to ``UNSUPPORTED`` and is excluded from scans and from
per-file denominators. Directory walks honor an ignore list for vendored,
minified, and generated paths; the defaults below can be extended or
disabled per scan.
"""

from __future__ import annotations

import fnmatch
from pathlib import Path

PYTHON = "python"
JAVASCRIPT = "javascript"
TYPESCRIPT = "typescript"
JSX_TSX = "jsx_tsx"
UNSUPPORTED = "unsupported"

LANGUAGES = (PYTHON, JAVASCRIPT, TYPESCRIPT, JSX_TSX)

_EXTENSION_MAP = {
    ".py": PYTHON,
    ".pyw": PYTHON,
    ".js": JAVASCRIPT,
    ".mjs": JAVASCRIPT,
    ".cjs": JAVASCRIPT,
    ".ts": TYPESCRIPT,
    ".mts": TYPESCRIPT,
    ".cts": TYPESCRIPT,
    ".jsx": JSX_TSX,
    ".tsx": JSX_TSX,
}

# Directory names that are skipped wholesale during a walk.
DEFAULT_IGNORE_DIRS = (
    ".git",
    ".hg",
    ".svn",
    ".tox",
    ".venv",
    "venv",
    "node_modules",
    "bower_components",
    "__pycache__",
    "dist",
    "build",
    "vendor",
    "vendored",
    "third_party",
    "site-packages",
    ".mypy_cache",
    ".pytest_cache",
)

# File glob patterns for minified / generated artifacts.
DEFAULT_IGNORE_FILES = (
    "*.min.js",
    "*.min.mjs",
    "*.bundle.js",
    "*-min.js",
    "*.generated.*",
    "*_pb2.py",
    "*.d.ts",
)


def detect_language(relative_path: str) -> str:
    """Map a path to a language id by extension; unknown extensions are unsupported."""
    if not relative_path:
        raise ValueError("path must be non-empty")
    suffix = Path(relative_path).suffix.lower()
    return _EXTENSION_MAP.get(suffix, UNSUPPORTED)


def is_test_path(relative_path: str) -> bool:
    """True when the path looks like test code (directory segment or naming)."""
    parts = Path(relative_path).parts
    for segment in parts[:-1]:
        if segment.lower() in ("test", "tests", "testing", "__tests__", "spec", "specs"):
            return True
    name = parts[-1].lower() if parts else ""
    stem = name.split(".")[0]
    if stem.startswith("test_") or stem.endswith("_test") or stem == "test":
        return True
    return ".test." in name or ".spec." in name


def is_startup_path(relative_path: str) -> bool:
    """True when the file basename itself names a startup / bootstrap surface."""
    stem = Path(relative_path).stem.lower()
    return "startup" in stem or "bootstrap" in stem


def iter_source_files(
    root: str | Path,
    extra_ignore: tuple[str, ...] = (),
    use_default_ignores: bool = True,
) -> list[Path]:
    """Walk ``root`` and return supported source files in sorted order.

    ``extra_ignore`` entries are matched with fnmatch against both directory
    names and file names.
    """
    root = Path(root)
    if root.is_file():
        return [root] if detect_language(root.name) != UNSUPPORTED else []

    ignore_dirs = set(DEFAULT_IGNORE_DIRS) if use_default_ignores else set()
    file_patterns = list(DEFAULT_IGNORE_FILES) if use_default_ignores else []
    file_patterns.extend(extra_ignore)

    found: list[Path] = []
    stack = [root]
    while stack:
        current = stack.pop()
        try:
            entries = sorted(current.iterdir())
        except OSError:
            continue
        for entry in entries:
            name = entry.name
            if entry.is_dir():
                if name in ignore_dirs:
                    continue
                if any(fnmatch.fnmatch(name, pat) for pat in extra_ignore):
                    continue
                stack.append(entry)
                continue
            if any(fnmatch.fnmatch(name, pat) for pat in file_patterns):
                continue
            if detect_language(name) != UNSUPPORTED:
                found.append(entry)
    return sorted(found)
