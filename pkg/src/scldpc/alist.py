"""alist reader/writer (MacKay's plain-text sparse matrix format, 1-based indices)."""

from __future__ import annotations

from pathlib import Path

from .errors import InconsistentMatrixError, MatrixFormatError
from .sparse import SparseBinaryMatrix


def dumps_alist(H: SparseBinaryMatrix) -> str:
    col_adj = H.col_adjacency
    row_adj = H.row_adjacency
    max_c = max((len(a) for a in col_adj), default=0)
    max_r = max((len(a) for a in row_adj), default=0)

    def pad(idx, width):
        vals = [str(i + 1) for i in idx] + ["0"] * (width - len(idx))
        return " ".join(vals)

    lines = [
        f"{H.n_cols} {H.n_rows}",
        f"{max_c} {max_r}",
        " ".join(str(len(a)) for a in col_adj),
        " ".join(str(len(a)) for a in row_adj),
    ]
    lines.extend(pad(a, max_c) for a in col_adj)
    lines.extend(pad(a, max_r) for a in row_adj)
    return "\n".join(lines) + "\n"


def write_alist(H: SparseBinaryMatrix, destination) -> None:
    text = dumps_alist(H)
    if isinstance(destination, (str, Path)):
        Path(destination).write_text(text)
    else:
        destination.write(text)


class _Lines:
    def __init__(self, text):
        self.lines = text.splitlines()
        self.pos = 0

    def take(self, section, count=None):
        while self.pos < len(self.lines) and not self.lines[self.pos].strip():
            self.pos += 1
        if self.pos >= len(self.lines):
            raise MatrixFormatError(f"unexpected end of file: missing {section}", line=self.pos + 1)
        lineno = self.pos + 1
        parts = self.lines[self.pos].split()
        self.pos += 1
        values = []
        for col, tok in enumerate(parts, start=1):
            try:
                values.append(int(tok))
            except ValueError:
                raise MatrixFormatError(f"{section}: not an integer: {tok!r}", line=lineno, column=col) from None
        if count is not None and len(values) != count:
            raise MatrixFormatError(f"{section}: expected {count} values, found {len(values)}", line=lineno)
        return values, lineno


def loads_alist(text: str) -> SparseBinaryMatrix:
    src = _Lines(text)
    (n_cols, n_rows), _ = src.take("dimensions", 2)
    (max_c, max_r), _ = src.take("maximum degrees", 2)
    col_deg, ln_c = src.take("column degrees", n_cols)
    row_deg, ln_r = src.take("row degrees", n_rows)
    if any(d < 0 or d > max_c for d in col_deg):
        raise MatrixFormatError("column degree outside [0, max_col_degree]", line=ln_c)
    if any(d < 0 or d > max_r for d in row_deg):
        raise MatrixFormatError("row degree outside [0, max_row_degree]", line=ln_r)

    def block(section, n, width, degrees, bound):
        out = []
        for k in range(n):
            vals, lineno = src.take(f"{section} {k + 1}")
            # some writers omit the zero padding
            if len(vals) not in (width, degrees[k]):
                raise MatrixFormatError(f"{section} {k + 1}: expected {width} entries", line=lineno)
            idx, pad = vals[: degrees[k]], vals[degrees[k]:]
            if any(v != 0 for v in pad):
                raise MatrixFormatError(f"{section} {k + 1}: nonzero padding", line=lineno)
            for col, v in enumerate(idx, start=1):
                if not 1 <= v <= bound:
                    raise MatrixFormatError(f"{section} {k + 1}: index {v} out of range", line=lineno, column=col)
            out.append(sorted(v - 1 for v in idx))
        return out

    cols = block("column list", n_cols, max_c, col_deg, n_rows)
    rows = block("row list", n_rows, max_r, row_deg, n_cols)
    from_cols = {(r, c) for c, rs in enumerate(cols) for r in rs}
    from_rows = {(r, c) for r, cs in enumerate(rows) for c in cs}
    if len(from_cols) != sum(col_deg) or len(from_rows) != sum(row_deg):
        raise InconsistentMatrixError("repeated index inside an adjacency list")
    if from_cols != from_rows:
        diff = sorted(from_cols ^ from_rows)[0]
        raise InconsistentMatrixError(
            f"row and column lists disagree at entry (row {diff[0] + 1}, column {diff[1] + 1})"
        )
    return SparseBinaryMatrix.from_adjacency(n_rows, cols)


def read_alist(source) -> SparseBinaryMatrix:
    if isinstance(source, (str, Path)):
        return loads_alist(Path(source).read_text())
    return loads_alist(source.read())
