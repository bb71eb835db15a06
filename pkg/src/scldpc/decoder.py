"""Log-domain sum-product decoding with a flooding schedule."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, InvalidParamsError
from .sparse import SparseBinaryMatrix, syndrome

__all__ = ["DecodeResult", "SumProductDecoder", "boxplus", "sp_decode", "syndrome"]

# Check-side padding value. a [+] _PAD == a exactly for |a| <= clip since exp(-970) underflows.
_PAD = 1000.0


def boxplus(a, b):
    """Exact pairwise check-node combination 2 atanh(tanh(a/2) tanh(b/2))."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    s = np.sign(a) * np.sign(b)
    m = np.minimum(np.abs(a), np.abs(b))
    return s * m + np.log1p(np.exp(-np.abs(a + b))) - np.log1p(np.exp(-np.abs(a - b)))


@dataclass
class DecodeResult:
    hard_decision: np.ndarray
    success: bool
    iterations_used: int
    posterior: np.ndarray


class SumProductDecoder:
    """Reusable decoder bound to one parity-check matrix.

    Messages are kept on edges in row-major order. Each call allocates its own
    buffers, so one instance may be shared between threads.
    """

    def __init__(self, H: SparseBinaryMatrix, clip: float = 30.0):
        if clip <= 0 or clip >= _PAD / 2:
            raise InvalidParamsError(f"clip must lie in (0, {_PAD / 2})")
        self.H = H
        self.clip = float(clip)
        E = H.nnz
        self.n_edges = E
        self.edge_col = H.row_indices.astype(np.int64)

        row_deg = H.row_degrees()
        self.dr = int(row_deg.max()) if E else 0
        k = np.arange(self.dr)
        self.check_mask = k[None, :] < row_deg[:, None]
        self.check_idx = np.full((H.n_rows, self.dr), E, dtype=np.int64)
        self.check_idx[self.check_mask] = np.arange(E)

        # column-major listing of the same edges, padded with the dummy slot E
        order = np.lexsort((np.repeat(np.arange(H.n_rows), row_deg), self.edge_col))
        col_deg = H.col_degrees()
        self.dc = int(col_deg.max()) if E else 0
        mask = np.arange(self.dc)[None, :] < col_deg[:, None]
        self.bit_idx = np.full((H.n_cols, self.dc), E, dtype=np.int64)
        self.bit_idx[mask] = order

    def _check_update(self, v2c):
        B = v2c.shape[0]
        ext = np.concatenate([v2c, np.full((B, 1), _PAD)], axis=1)
        X = ext[:, self.check_idx]  # (B, R, d)
        d = self.dr
        fwd = [X[..., 0]]
        for k in range(1, d - 1):
            fwd.append(boxplus(fwd[-1], X[..., k]))
        bwd = [X[..., d - 1]]
        for k in range(d - 2, 0, -1):
            bwd.append(boxplus(bwd[-1], X[..., k]))
        bwd.reverse()  # bwd[k] combines X[k+1 .. d-1]
        out = np.empty_like(X)
        out[..., 0] = bwd[0]
        out[..., d - 1] = fwd[d - 2]
        for k in range(1, d - 1):
            out[..., k] = boxplus(fwd[k - 1], bwd[k])
        return out[:, self.check_mask]

    def _posterior(self, llr, c2v):
        B = c2v.shape[0]
        ext = np.concatenate([c2v, np.zeros((B, 1))], axis=1)
        total = llr.copy()
        for k in range(self.dc):
            total += ext[:, self.bit_idx[:, k]]
        return total

    def decode_batch(self, llrs, max_iterations: int = 1000):
        """Decode frames independently. Returns (hard, success, iterations, posterior)."""
        llrs = np.asarray(llrs, dtype=np.float64)
        if llrs.ndim != 2 or llrs.shape[1] != self.H.n_cols:
            raise DimensionMismatchError(f"expected frames x {self.H.n_cols} LLRs, got {llrs.shape}")
        if max_iterations < 1:
            raise InvalidParamsError("max_iterations must be >= 1")
        n_frames = llrs.shape[0]
        llr = np.clip(llrs, -self.clip, self.clip)
        posterior = llr.copy()
        hard = (llr < 0).astype(np.uint8)
        iterations = np.zeros(n_frames, dtype=np.int64)
        success = ~syndrome(self.H, hard).any(axis=1)

        active = np.flatnonzero(~success)
        if active.size == 0 or self.n_edges == 0 or self.dr < 2:
            return hard, success, iterations, posterior
        a_llr = llr[active]
        v2c = a_llr[:, self.edge_col]
        for it in range(1, max_iterations + 1):
            c2v = self._check_update(v2c)
            total = self._posterior(a_llr, c2v)
            v2c = np.clip(total[:, self.edge_col] - c2v, -self.clip, self.clip)
            a_hard = (total < 0).astype(np.uint8)
            ok = ~syndrome(self.H, a_hard).any(axis=1)
            done = ok | (it == max_iterations)
            if done.any():
                idx = active[done]
                hard[idx] = a_hard[done]
                posterior[idx] = total[done]
                success[idx] = ok[done]
                iterations[idx] = it
                keep = ~done
                active, a_llr, v2c = active[keep], a_llr[keep], v2c[keep]
                if active.size == 0:
                    break
        return hard, success, iterations, posterior

    def decode(self, llr, max_iterations: int = 1000) -> DecodeResult:
        llr = np.asarray(llr, dtype=np.float64)
        if llr.ndim != 1 or llr.shape[0] != self.H.n_cols:
            raise DimensionMismatchError(f"expected {self.H.n_cols} LLRs, got shape {llr.shape}")
        hard, ok, its, post = self.decode_batch(llr[None, :], max_iterations)
        return DecodeResult(hard[0], bool(ok[0]), int(its[0]), post[0])


def sp_decode(H: SparseBinaryMatrix, channel_llrs, max_iterations: int = 1000, clip: float = 30.0) -> DecodeResult:
    """Sum-product decode one frame (positive LLR means bit 0)."""
    return SumProductDecoder(H, clip).decode(channel_llrs, max_iterations)
