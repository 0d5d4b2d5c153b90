"""Deterministic artifact writing: 9-significant-digit floats, atomic files.

Identical inputs must produce byte-identical artifacts; all floats are
rounded to 9 significant digits before serialization and files are
written via a temporary name plus rename.
"""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

import numpy as np

__all__ = ["fmt9", "round9", "write_json", "write_csv", "atomic_write_text"]


def fmt9(x) -> str:
    """Format a float with 9 significant digits (stable across runs)."""
    x = float(x)
    if x == 0.0:
        x = 0.0  # normalize -0.0
    return f"{x:.9g}"


def round9(obj):
    """Recursively round floats to their 9-significant-digit value."""
    if isinstance(obj, bool):
        return obj
    if isinstance(obj, (float, np.floating)):
        return float(fmt9(obj))
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [round9(v) for v in obj]
    if isinstance(obj, dict):
        return {str(k): round9(v) for k, v in obj.items()}
    return obj


def atomic_write_text(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path, payload: dict) -> None:
    text = json.dumps(round9(payload), indent=2) + "\n"
    atomic_write_text(path, text)


def write_csv(path, header, rows) -> None:
    """Rows of mixed strings/numbers; numbers formatted to 9 digits."""
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(v if isinstance(v, str) else fmt9(v) for v in row))
    atomic_write_text(path, "\n".join(lines) + "\n")
