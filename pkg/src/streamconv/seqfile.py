"""Plain-text sequence files: one decimal float per line.

UTF-8; blank lines and ``#`` comments (whole-line or trailing) are
ignored. Trivially diffable and easy for external oracles to produce.
"""

from __future__ import annotations

import numpy as np

from .errors import SequenceFormatError


def read_sequence(path: str) -> np.ndarray:
    values = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            text = raw.split("#", 1)[0].strip()
            if not text:
                continue
            try:
                values.append(float(text))
            except ValueError as exc:
                raise SequenceFormatError(
                    f"expected one decimal float, got {text!r}", path, lineno
                ) from exc
    return np.asarray(values, dtype=np.float64)


def write_sequence(values, path: str, header: str = "") -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if header:
            for line in header.splitlines():
                fh.write(f"# {line}\n")
        for v in values:
            fh.write(repr(float(v)) + "\n")
