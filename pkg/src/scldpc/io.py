"""Format sniffing for matrix files (shift-matrix text or alist)."""

from __future__ import annotations

from pathlib import Path

from .alist import loads_alist
from .errors import MatrixFormatError
from .qc import ShiftMatrix


def read_matrix(path):
    """Load a ShiftMatrix (6-integer header) or an alist file (2-integer header)."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise MatrixFormatError(f"cannot read {path}: {exc.strerror}") from exc
    for line in text.splitlines():
        if line.strip():
            n = len(line.split())
            break
    else:
        raise MatrixFormatError("empty matrix file", line=1)
    if n == 6:
        return ShiftMatrix.loads(text)
    if n == 2:
        return loads_alist(text)
    raise MatrixFormatError(f"unrecognised header with {n} fields", line=1)
