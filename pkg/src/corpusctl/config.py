"""Plain-text key-value configuration.

Grammar, one setting per line::

    # full-line comment
    key = value
    diarize.tau_asd = 0.55        # dotted keys namespace settings
    snippet.pause_ms = 250
    fetch.concurrency = 4
    review.host = "127.0.0.1"

Values parse as ``true``/``false``, integers, floats, or strings (quotes
optional). The HTTP cache directory comes from the ``CORPUSCTL_CACHE``
environment variable.
"""

from __future__ import annotations

import os
from pathlib import Path

from .errors import ParseError

__all__ = ["load_config", "cache_dir"]


def _parse_value(raw: str):
    raw = raw.strip()
    if len(raw) >= 2 and raw[0] == raw[-1] and raw[0] in "\"'":
        return raw[1:-1]
    low = raw.lower()
    if low == "true":
        return True
    if low == "false":
        return False
    try:
        return int(raw)
    except ValueError:
        pass
    try:
        return float(raw)
    except ValueError:
        pass
    return raw


def load_config(path: str | Path) -> dict:
    """Parse a config file into a flat {dotted.key: value} dict."""
    settings: dict[str, object] = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ParseError(f"expected 'key = value', got {stripped!r}", line=lineno)
        key, _, value = stripped.partition("=")
        value = value.split("#", 1)[0] if not value.strip().startswith(("\"", "'")) else value
        settings[key.strip()] = _parse_value(value)
    return settings


def cache_dir() -> str | None:
    return os.environ.get("CORPUSCTL_CACHE")
