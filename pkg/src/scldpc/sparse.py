"""Sparse binary parity-check matrices and small GF(2) helpers."""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .errors import DimensionMismatchError


class SparseBinaryMatrix:
    """Binary matrix held as both CSC (column-major) and CSR (row-major) index arrays.

    Duplicate coordinates are rejected; entries are the set of (row, col) pairs.
    """

    def __init__(self, n_rows, n_cols, rows, cols):
        rows = np.asarray(rows, dtype=np.int64).ravel()
        cols = np.asarray(cols, dtype=np.int64).ravel()
        if rows.shape != cols.shape:
            raise DimensionMismatchError("rows and cols must have equal length")
        if rows.size and (rows.min() < 0 or rows.max() >= n_rows or cols.min() < 0 or cols.max() >= n_cols):
            raise DimensionMismatchError("entry outside matrix bounds")
        self.n_rows = int(n_rows)
        self.n_cols = int(n_cols)

        order = np.lexsort((rows, cols))
        c_rows, c_cols = rows[order], cols[order]
        if c_rows.size > 1:
            dup = (np.diff(c_rows) == 0) & (np.diff(c_cols) == 0)
            if dup.any():
                raise DimensionMismatchError("duplicate entries in binary matrix")
        self.col_indptr = np.concatenate(([0], np.cumsum(np.bincount(c_cols, minlength=self.n_cols))))
        self.col_indices = c_rows

        order = np.lexsort((cols, rows))
        self.row_indptr = np.concatenate(([0], np.cumsum(np.bincount(rows[order], minlength=self.n_rows))))
        self.row_indices = cols[order]
        for a in (self.col_indptr, self.col_indices, self.row_indptr, self.row_indices):
            a.setflags(write=False)

    @classmethod
    def from_dense(cls, A):
        A = np.asarray(A)
        r, c = np.nonzero(A % 2)
        return cls(A.shape[0], A.shape[1], r, c)

    @classmethod
    def from_adjacency(cls, n_rows, col_adjacency):
        cols = [c for c, rs in enumerate(col_adjacency) for _ in rs]
        rows = [r for rs in col_adjacency for r in rs]
        return cls(n_rows, len(col_adjacency), rows, cols)

    @property
    def shape(self):
        return (self.n_rows, self.n_cols)

    @property
    def nnz(self) -> int:
        return int(self.col_indices.size)

    def coo(self):
        """(rows, cols) of every entry in column-major order."""
        cols = np.repeat(np.arange(self.n_cols), np.diff(self.col_indptr))
        return self.col_indices, cols

    @property
    def col_adjacency(self) -> list[list[int]]:
        p, ix = self.col_indptr, self.col_indices.tolist()
        return [ix[p[c]:p[c + 1]] for c in range(self.n_cols)]

    @property
    def row_adjacency(self) -> list[list[int]]:
        p, ix = self.row_indptr, self.row_indices.tolist()
        return [ix[p[r]:p[r + 1]] for r in range(self.n_rows)]

    def col_degrees(self) -> np.ndarray:
        return np.diff(self.col_indptr)

    def row_degrees(self) -> np.ndarray:
        return np.diff(self.row_indptr)

    def to_dense(self) -> np.ndarray:
        A = np.zeros(self.shape, dtype=np.uint8)
        r, c = self.coo()
        A[r, c] = 1
        return A

    def __eq__(self, other):
        if not isinstance(other, SparseBinaryMatrix):
            return NotImplemented
        return (
            self.shape == other.shape
            and np.array_equal(self.col_indptr, other.col_indptr)
            and np.array_equal(self.col_indices, other.col_indices)
        )

    __hash__ = None

    def __repr__(self):
        return f"SparseBinaryMatrix({self.n_rows}x{self.n_cols}, nnz={self.nnz})"


def _pack_rows(A: np.ndarray) -> np.ndarray:
    return np.packbits(np.asarray(A, dtype=np.uint8) & 1, axis=1)


def gf2_rank(H) -> int:
    """Rank over GF(2) by elimination on bit-packed rows."""
    A = H.to_dense() if isinstance(H, SparseBinaryMatrix) else np.asarray(H, dtype=np.uint8)
    n_rows, n_cols = A.shape
    P = _pack_rows(A)
    rank = 0
    for c in range(n_cols):
        byte, bit = divmod(c, 8)
        mask = np.uint8(0x80 >> bit)
        col = (P[rank:, byte] & mask) != 0
        hits = np.flatnonzero(col)
        if hits.size == 0:
            continue
        piv = rank + hits[0]
        if piv != rank:
            P[[rank, piv]] = P[[piv, rank]]
        below = rank + 1 + np.flatnonzero((P[rank + 1:, byte] & mask) != 0)
        P[below] ^= P[rank]
        rank += 1
        if rank == n_rows:
            break
    return rank


def actual_rate(H: SparseBinaryMatrix) -> Fraction:
    """1 - rank(H)/N: the true dimension ratio, never below the design rate 1 - rows/N."""
    return 1 - Fraction(gf2_rank(H), H.n_cols)


def gf2_nullspace(H) -> np.ndarray:
    """Basis of {x : Hx = 0} over GF(2), one basis vector per row."""
    A = H.to_dense() if isinstance(H, SparseBinaryMatrix) else np.asarray(H, dtype=np.uint8)
    A = A.copy() & 1
    n_rows, n_cols = A.shape
    pivots = []
    r = 0
    for c in range(n_cols):
        if r == n_rows:
            break
        hits = np.flatnonzero(A[r:, c])
        if hits.size == 0:
            continue
        p = r + hits[0]
        A[[r, p]] = A[[p, r]]
        others = np.flatnonzero(A[:, c])
        others = others[others != r]
        A[others] ^= A[r]
        pivots.append(c)
        r += 1
    free = [c for c in range(n_cols) if c not in set(pivots)]
    basis = np.zeros((len(free), n_cols), dtype=np.uint8)
    for i, f in enumerate(free):
        basis[i, f] = 1
        for row, pc in enumerate(pivots):
            basis[i, pc] = A[row, f]
    return basis


def syndrome(H: SparseBinaryMatrix, bits) -> np.ndarray:
    """H @ bits over GF(2). ``bits`` may be 1-D (N,) or 2-D (frames, N)."""
    bits = np.asarray(bits)
    if bits.shape[-1] != H.n_cols:
        raise DimensionMismatchError(f"expected {H.n_cols} bits, got {bits.shape[-1]}")
    b = (bits & 1).astype(np.uint8)
    gathered = b[..., H.row_indices]
    if gathered.shape[-1] == 0:
        return np.zeros(bits.shape[:-1] + (H.n_rows,), dtype=np.uint8)
    starts = H.row_indptr[:-1]
    out = np.zeros(bits.shape[:-1] + (H.n_rows,), dtype=np.uint8)
    nonempty = np.diff(H.row_indptr) > 0
    out[..., nonempty] = np.bitwise_xor.reduceat(gathered, starts[nonempty], axis=-1)
    return out
