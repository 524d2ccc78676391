"""Canonical value formatting shared by the map document and text formats.

Every real number written to a document goes through :func:`fmt_real`, which
prints 9 significant digits.  A decimal with at most 15 significant digits
converts to the nearest double and back without change, so re-parsing and
re-serializing a canonical document is byte-stable.
"""

from __future__ import annotations

import hashlib
import json
import math
from typing import Any


def fmt_real(value: float) -> str:
    """Format a real number with 9 significant digits."""
    if math.isnan(value) or math.isinf(value):
        raise ValueError("non-finite real in canonical output")
    if value == 0.0:
        return "0"  # normalizes -0.0
    return format(float(value), ".9g")


def canonical_dumps(value: Any) -> str:
    """Serialize a JSON-compatible tree deterministically.

    Keys are sorted, reals use :func:`fmt_real`, and no insignificant
    whitespace is emitted.
    """
    parts: list[str] = []
    _write(value, parts)
    return "".join(parts)


def _write(value: Any, out: list[str]) -> None:
    if value is None:
        out.append("null")
    elif value is True:
        out.append("true")
    elif value is False:
        out.append("false")
    elif isinstance(value, str):
        out.append(json.dumps(value, ensure_ascii=False))
    elif isinstance(value, int):
        out.append(str(value))
    elif isinstance(value, float):
        out.append(fmt_real(value))
    elif isinstance(value, (list, tuple)):
        out.append("[")
        for i, item in enumerate(value):
            if i:
                out.append(",")
            _write(item, out)
        out.append("]")
    elif isinstance(value, dict):
        out.append("{")
        for i, key in enumerate(sorted(value)):
            if not isinstance(key, str):
                raise TypeError(f"non-string key in canonical output: {key!r}")
            if i:
                out.append(",")
            out.append(json.dumps(key, ensure_ascii=False))
            out.append(":")
            _write(value[key], out)
        out.append("}")
    else:
        raise TypeError(f"unserializable value of type {type(value).__name__}")


def content_digest(text: str) -> str:
    """SHA-256 hex digest of UTF-8 encoded text."""
    return hashlib.sha256(text.encode("utf-8")).hexdigest()
