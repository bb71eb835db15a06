"""Quasi-cyclic lifting of the coupled protograph with reuse period T."""

from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InvalidParamsError, MatrixFormatError, SearchExhaustedError
from .protograph import CoupledProtograph, ProtoParams, Slot, build_coupled_protograph
from .sparse import SparseBinaryMatrix


@dataclass(frozen=True)
class Circulant:
    """M x M permutation matrix with row r's one at column (r + shift) mod M."""

    shift: int
    M: int

    def __post_init__(self):
        if self.M < 1 or not 0 <= self.shift < self.M:
            raise InvalidParamsError(f"invalid circulant shift={self.shift}, M={self.M}")

    def column_of(self, r):
        return (np.asarray(r) + self.shift) % self.M

    def to_dense(self) -> np.ndarray:
        A = np.zeros((self.M, self.M), dtype=np.uint8)
        r = np.arange(self.M)
        A[r, self.column_of(r)] = 1
        return A


def period_key(slot: Slot, T: int, n_b: int) -> tuple[int, int]:
    """Key of the reused circulant: (row offset, column inside the period)."""
    return slot.offset, (slot.bit_group % T) * n_b + slot.member


@dataclass(frozen=True)
class ShiftMatrix:
    """Compact QC SC-LDPC description.

    ``base_shifts`` maps (row_offset, period_col) to a shift, where
    period_col = (bit_group mod T) * n_b + member. Every protograph slot reads
    its circulant through that key, which is the reuse law.
    """

    params: ProtoParams
    M: int
    T: int
    base_shifts: dict
    seed: int | None = None

    def __post_init__(self):
        check_period(self.params, self.T)
        expected = {(j, c) for j in range(self.params.d_l) for c in range(self.n_period_cols)}
        if set(self.base_shifts) != expected:
            raise InvalidParamsError("base_shifts keys do not cover the reuse period")
        if any(not 0 <= s < self.M for s in self.base_shifts.values()):
            raise InvalidParamsError("shift outside [0, M)")

    @property
    def n_period_cols(self) -> int:
        return min(self.T, self.params.L) * self.params.n_b

    @property
    def protograph(self) -> CoupledProtograph:
        return build_coupled_protograph(self.params)

    @property
    def n_distinct_slots(self) -> int:
        return len(self.base_shifts)

    def key(self, slot: Slot) -> tuple[int, int]:
        return period_key(slot, self.T, self.params.n_b)

    def shift(self, slot: Slot) -> int:
        return self.base_shifts[self.key(slot)]

    @property
    def slots(self) -> dict:
        return {s: Circulant(self.shift(s), self.M) for s in self.protograph.edge_slots}

    def slot_arrays(self):
        """(rows, cols, shifts, class ids) over all protograph slots, in slot order."""
        proto = self.protograph
        keys = sorted(self.base_shifts)
        index = {k: i for i, k in enumerate(keys)}
        rows = np.array([s.row for s in proto.edge_slots], dtype=np.int64)
        cols = np.array([s.col for s in proto.edge_slots], dtype=np.int64)
        cls = np.array([index[self.key(s)] for s in proto.edge_slots], dtype=np.int64)
        shifts = np.array([self.base_shifts[k] for k in keys], dtype=np.int64)[cls]
        return rows, cols, shifts, cls

    @property
    def period_divides_L(self) -> bool:
        return self.params.L % self.T == 0

    # -- serialization -----------------------------------------------------

    def dumps(self) -> str:
        p = self.params
        seed = -1 if self.seed is None else self.seed
        lines = [f"{p.d_l} {p.d_r} {p.L} {self.M} {self.T} {seed}"]
        for (j, c) in sorted(self.base_shifts, key=lambda k: (k[1], k[0])):
            lines.append(f"{j} {c} {self.base_shifts[(j, c)]}")
        return "\n".join(lines) + "\n"

    def write(self, destination) -> None:
        _write_text(destination, self.dumps())

    @classmethod
    def loads(cls, text: str) -> "ShiftMatrix":
        lines = text.splitlines()
        if not lines:
            raise MatrixFormatError("empty shift-matrix file: missing header", line=1)
        head = _ints(lines[0], 1, 6, "header")
        d_l, d_r, L, M, T, seed = head
        try:
            params = ProtoParams(d_l, d_r, L)
        except InvalidParamsError as exc:
            raise MatrixFormatError(f"header parameters invalid: {exc}", line=1) from exc
        if not 1 <= T <= L:
            raise MatrixFormatError(f"reuse period T={T} outside [1, {L}]", line=1)
        n = d_l * min(T, L) * params.n_b
        body = lines[1:]
        if len(body) < n:
            raise MatrixFormatError(
                f"shift section truncated: expected {n} shift lines, found {len(body)}", line=len(lines) + 1
            )
        shifts = {}
        for i, line in enumerate(body[:n], start=2):
            j, c, s = _ints(line, i, 3, "shift line")
            if (j, c) in shifts:
                raise MatrixFormatError(f"duplicate shift entry ({j}, {c})", line=i)
            shifts[(j, c)] = s
        if any(line.strip() for line in body[n:]):
            raise MatrixFormatError("unexpected trailing content", line=n + 2)
        try:
            return cls(params, M, T, shifts, None if seed < 0 else seed)
        except InvalidParamsError as exc:
            raise MatrixFormatError(str(exc)) from exc

    @classmethod
    def read(cls, source) -> "ShiftMatrix":
        return cls.loads(_read_text(source))


def _ints(line, lineno, count, what):
    parts = line.split()
    if len(parts) != count:
        raise MatrixFormatError(f"{what}: expected {count} integers, got {len(parts)}", line=lineno)
    out = []
    for col, tok in enumerate(parts, start=1):
        try:
            out.append(int(tok))
        except ValueError:
            raise MatrixFormatError(f"{what}: not an integer: {tok!r}", line=lineno, column=col) from None
    return out


def _write_text(destination, text):
    if isinstance(destination, (str, Path)):
        Path(destination).write_text(text)
    else:
        destination.write(text)


def _read_text(source):
    if isinstance(source, (str, Path)):
        return Path(source).read_text()
    if isinstance(source, io.IOBase) or hasattr(source, "read"):
        return source.read()
    raise TypeError(f"cannot read from {source!r}")


def check_period(params: ProtoParams, T: int) -> None:
    if not isinstance(T, (int, np.integer)) or not 1 <= T <= params.L:
        raise InvalidParamsError(f"reuse period T={T} must lie in [1, L={params.L}]")


def four_cycle_templates(proto: CoupledProtograph) -> np.ndarray:
    """Slot-index quadruples (a, b, c, d) with a,b in row x1 and c,d in row x2,
    a,d in column l1 and b,c in column l2: every length-4 alternating block path."""
    by_cell = {(s.row, s.col): i for i, s in enumerate(proto.edge_slots)}
    cols = {}
    for s in proto.edge_slots:
        cols.setdefault(s.col, set()).add(s.row)
    out = []
    col_ids = sorted(cols)
    for i, l1 in enumerate(col_ids):
        for l2 in col_ids[i + 1:]:
            shared = sorted(cols[l1] & cols[l2])
            for a_i in range(len(shared)):
                for b_i in range(a_i + 1, len(shared)):
                    x1, x2 = shared[a_i], shared[b_i]
                    out.append((by_cell[x1, l1], by_cell[x1, l2], by_cell[x2, l2], by_cell[x2, l1]))
    return np.array(out, dtype=np.int64).reshape(-1, 4)


def assign_shifts(proto: CoupledProtograph, M: int, T: int, seed: int = 0, max_attempts: int = 1000) -> ShiftMatrix:
    """Random period-T shift assignment whose expansion has no 4-cycles.

    Shifts are drawn uniformly; each round, one participating circulant of every
    violated 4-cycle is redrawn. Gives up after ``max_attempts`` rounds.
    """
    params = proto.params
    check_period(params, T)
    if not isinstance(M, (int, np.integer)) or M < 1:
        raise InvalidParamsError(f"circulant size M must be >= 1, got {M!r}")
    n_b = params.n_b
    keys = sorted({period_key(s, T, n_b) for s in proto.edge_slots})
    index = {k: i for i, k in enumerate(keys)}
    cls = np.array([index[period_key(s, T, n_b)] for s in proto.edge_slots], dtype=np.int64)
    quads = cls[four_cycle_templates(proto)]

    rng = np.random.default_rng(seed)
    values = rng.integers(0, M, size=len(keys))
    for _ in range(max_attempts):
        p = values[quads]
        bad = ((p[:, 0] - p[:, 1] + p[:, 2] - p[:, 3]) % M) == 0
        if not bad.any():
            shifts = {k: int(values[i]) for k, i in index.items()}
            return ShiftMatrix(params, int(M), int(T), shifts, seed)
        violated = quads[bad]
        pick = violated[np.arange(len(violated)), rng.integers(0, 4, size=len(violated))]
        pick = np.unique(pick)
        values[pick] = rng.integers(0, M, size=pick.size)
    raise SearchExhaustedError(
        f"no 4-cycle-free shift assignment found after {max_attempts} rounds (M={M} may be too small)"
    )


def expand(sm: ShiftMatrix) -> SparseBinaryMatrix:
    """Replace every protograph slot by its M x M circulant."""
    M = sm.M
    proto_rows, proto_cols, shifts, _ = sm.slot_arrays()
    r = np.arange(M)
    rows = (proto_rows[:, None] * M + r[None, :]).ravel()
    cols = (proto_cols[:, None] * M + (r[None, :] + shifts[:, None]) % M).ravel()
    proto = sm.protograph
    return SparseBinaryMatrix(proto.n_rows * M, proto.n_cols * M, rows, cols)
