"""Quantized density evolution for protograph ensembles on the BI-AWGN channel.

Densities live on the LLR grid {-K*step, ..., K*step}. Variable nodes convolve
densities (FFT, tails saturated at +-llr_max). Check nodes apply the quantized
boxplus table R(m, n) = round(boxplus(m*step, n*step) / step) to pairs of
densities; R is monotone in each argument, so the output tail mass at level k
is a sum over m of (input-1 mass at m) x (input-2 tail above a threshold index
G[k, m]), and G[k, m] stops depending on m once m is far above k. Magnitude and
sign are carried as s = P(+m) + P(-m) and d = P(+m) - P(-m); both propagate by
the same bilinear rule.

Edges with identical structural role share a density ("edge class"): in a
coupled chain with n_c = 1 the n_b parallel edges of a bit group behave alike.
"""

from __future__ import annotations

import json
import logging
import math
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numba
import numpy as np
from scipy import fft as sfft
from scipy.special import ndtr

from .errors import BracketError, InvalidParamsError
from .protograph import CoupledProtograph, ProtoParams, build_coupled_protograph

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class DEGrid:
    step: float = 0.05
    llr_max: float = 30.0

    def __post_init__(self):
        if not (self.step > 0 and self.llr_max > 0 and self.llr_max / self.step >= 4):
            raise InvalidParamsError("invalid density-evolution grid")

    @property
    def K(self) -> int:
        return int(round(self.llr_max / self.step))

    @property
    def x(self) -> np.ndarray:
        return (np.arange(2 * self.K + 1) - self.K) * self.step


@dataclass
class EdgeDensity:
    """Probability mass over the symmetric LLR grid with spacing ``step``."""

    step: float
    llr_max: float
    mass: np.ndarray

    @property
    def K(self) -> int:
        return (len(self.mass) - 1) // 2

    def total(self) -> float:
        return float(self.mass.sum())

    def error_probability(self) -> float:
        return float(self.mass[: self.K].sum() + 0.5 * self.mass[self.K])

    def symmetry_defect(self, floor: float = 1e-12) -> float:
        """max |ln(P(x)/P(-x)) - x| over grid points where both masses exceed ``floor``."""
        K, m = self.K, self.mass
        pos, neg = m[K + 1 :], m[K - 1 :: -1]
        x = np.arange(1, K + 1) * self.step
        ok = (pos > floor) & (neg > floor)
        if not ok.any():
            return 0.0
        return float(np.max(np.abs(np.log(pos[ok] / neg[ok]) - x[ok])))


@dataclass(frozen=True)
class ThresholdResult:
    sigma_star: float
    ebno_star_db: float
    iterations_at_threshold: int
    converged: bool
    tolerance: float
    grid_step: float
    bracket: tuple = field(default=(0.0, 0.0))


@dataclass(frozen=True)
class ClassGraph:
    """Edge-class structure: each node type lists (class, multiplicity) pairs."""

    n_classes: int
    checks: tuple
    bits: tuple
    bit_weights: tuple
    rate: float
    label: tuple = ()
    # optional involutions (classes, checks, bits) under which densities are invariant
    mirror: tuple | None = None


def class_graph(proto: CoupledProtograph) -> ClassGraph:
    p = proto.params
    label = (p.d_l, p.d_r, p.L)
    if p.n_c == 1:
        def cid(t, j):
            return t * p.d_l + j

        checks = tuple(
            tuple((cid(c - j, j), p.n_b) for j in range(p.d_l) if 0 <= c - j < p.L)
            for c in range(p.n_check_groups)
        )
        bits = tuple(tuple((cid(t, j), 1) for j in range(p.d_l)) for t in range(p.L))
        # reversing the chain maps bit group t -> L-1-t and offset j -> d_l-1-j
        mirror = (
            tuple(cid(p.L - 1 - t, p.d_l - 1 - j) for t in range(p.L) for j in range(p.d_l)),
            tuple(p.n_check_groups - 1 - c for c in range(p.n_check_groups)),
            tuple(p.L - 1 - t for t in range(p.L)),
        )
        return ClassGraph(p.L * p.d_l, checks, bits, (p.n_b,) * p.L, float(p.design_rate), label, mirror)
    checks = [[] for _ in range(proto.n_rows)]
    bits = [[] for _ in range(proto.n_cols)]
    for i, s in enumerate(proto.edge_slots):
        checks[s.row].append((i, 1))
        bits[s.col].append((i, 1))
    return ClassGraph(len(proto.edge_slots), tuple(map(tuple, checks)), tuple(map(tuple, bits)),
                      (1,) * proto.n_cols, float(p.design_rate), label)


def uncoupled_graph(d_l: int, d_r: int) -> ClassGraph:
    """The (d_l, d_r)-regular block ensemble: a single edge class."""
    if d_l < 2 or d_r <= d_l:
        raise InvalidParamsError("uncoupled ensemble needs 2 <= d_l < d_r")
    return ClassGraph(1, (((0, d_r),),), (((0, d_l),),), (1,), 1.0 - d_l / d_r, (d_l, d_r, 0))


def as_class_graph(target) -> ClassGraph:
    if isinstance(target, ClassGraph):
        return target
    if isinstance(target, CoupledProtograph):
        return class_graph(target)
    if isinstance(target, ProtoParams):
        return class_graph(build_coupled_protograph(target))
    raise TypeError(f"unsupported density-evolution target {type(target).__name__}")


def boxplus_table(grid: DEGrid):
    """Quantized check rule on magnitudes: R[m, n] = round(boxplus(m*step, n*step) / step)."""
    K, h = grid.K, grid.step
    a = np.arange(K + 1) * h
    A, B = np.meshgrid(a, a, indexing="ij")
    v = np.minimum(A, B) + np.log1p(np.exp(-(A + B))) - np.log1p(np.exp(-np.abs(A - B)))
    R = np.floor(np.maximum(v, 0.0) / h + 0.5 + 1e-9).astype(np.int64)
    return np.minimum(R, np.minimum(np.arange(K + 1)[:, None], np.arange(K + 1)[None, :]))


def threshold_tables(R: np.ndarray):
    """G[k, m] = min{n : R[m, n] >= k}, with the band where it still varies in m."""
    K1 = R.shape[0]
    G = np.empty((K1, K1), dtype=np.int64)
    ks = np.arange(K1)
    for m in range(K1):
        G[:, m] = np.searchsorted(R[m], ks, side="left")
    const = G[:, -1].copy()
    band_end = np.empty(K1, dtype=np.int64)
    for k in range(K1):
        diff = np.flatnonzero(G[k, k:] != const[k])
        band_end[k] = k + diff[-1] if diff.size else k - 1
    return G, band_end, const


@numba.njit(cache=True)
def _pair(s1, d1, s2, d2, G, band_end, const, out_s, out_d):
    K1 = s1.shape[0]
    ts1 = np.zeros(K1 + 1)
    td1 = np.zeros(K1 + 1)
    ts2 = np.zeros(K1 + 1)
    td2 = np.zeros(K1 + 1)
    for i in range(K1 - 1, -1, -1):
        ts1[i] = ts1[i + 1] + s1[i]
        td1[i] = td1[i + 1] + d1[i]
        ts2[i] = ts2[i + 1] + s2[i]
        td2[i] = td2[i + 1] + d2[i]
    tail_s = np.zeros(K1 + 1)
    tail_d = np.zeros(K1 + 1)
    for k in range(K1):
        acc_s = 0.0
        acc_d = 0.0
        for m in range(k, band_end[k] + 1):
            g = G[k, m]
            acc_s += s1[m] * ts2[g]
            acc_d += d1[m] * td2[g]
        rest = band_end[k] + 1
        c = const[k]
        acc_s += ts1[rest] * ts2[c]
        acc_d += td1[rest] * td2[c]
        tail_s[k] = acc_s
        tail_d[k] = acc_d
    for k in range(K1):
        out_s[k] = tail_s[k] - tail_s[k + 1]
        out_d[k] = tail_d[k] - tail_d[k + 1]
    out_d[0] = 0.0


@numba.njit(cache=True)
def _check_nodes(S, D, node_ptr, members, first, G, band_end, const, out_S, out_D):
    """Extrinsic check outputs. members lists one entry per edge copy; first marks
    the copy whose output is written back to its class."""
    K1 = S.shape[1]
    for c in range(node_ptr.shape[0] - 1):
        lo = node_ptr[c]
        n = node_ptr[c + 1] - lo
        pre_s = np.empty((n, K1))
        pre_d = np.empty((n, K1))
        suf_s = np.empty((n, K1))
        suf_d = np.empty((n, K1))
        pre_s[0] = S[members[lo]]
        pre_d[0] = D[members[lo]]
        for i in range(1, n):
            _pair(pre_s[i - 1], pre_d[i - 1], S[members[lo + i]], D[members[lo + i]], G, band_end, const,
                  pre_s[i], pre_d[i])
        suf_s[n - 1] = S[members[lo + n - 1]]
        suf_d[n - 1] = D[members[lo + n - 1]]
        for i in range(n - 2, 0, -1):
            _pair(suf_s[i + 1], suf_d[i + 1], S[members[lo + i]], D[members[lo + i]], G, band_end, const,
                  suf_s[i], suf_d[i])
        for i in range(n):
            if not first[lo + i]:
                continue
            cls = members[lo + i]
            if i == 0:
                out_S[cls] = suf_s[1]
                out_D[cls] = suf_d[1]
            elif i == n - 1:
                out_S[cls] = pre_s[n - 2]
                out_D[cls] = pre_d[n - 2]
            else:
                _pair(pre_s[i - 1], pre_d[i - 1], suf_s[i + 1], suf_d[i + 1], G, band_end, const,
                      out_S[cls], out_D[cls])


class DensityEvolution:
    """Flooding density evolution over a class graph; reusable across channel parameters."""

    def __init__(self, target, grid: DEGrid = DEGrid(), use_symmetry: bool = True):
        self.graph = g = as_class_graph(target)
        self.grid = grid
        self.K = K = grid.K
        self.nx = 2 * K + 1
        self.G, self.band_end, self.const = threshold_tables(boxplus_table(grid))

        checks, bits, weights = list(g.checks), list(g.bits), list(g.bit_weights)
        canon = list(range(g.n_classes))
        if use_symmetry and g.mirror is not None:
            cm, km, bm = g.mirror
            canon = [min(c, cm[c]) for c in canon]
            checks = [n for i, n in enumerate(g.checks) if i <= km[i]]
            keep = [i for i in range(len(g.bits)) if i <= bm[i]]
            bits = [g.bits[i] for i in keep]
            weights = [g.bit_weights[i] * (1 if bm[i] == i else 2) for i in keep]
            bits = [tuple((canon[c], m) for c, m in b) for b in bits]

        ptr, members, first = [0], [], []
        for node in checks:
            for cls, mult in node:
                members.extend([canon[cls]] * mult)
                first.extend([True] + [False] * (mult - 1))
            ptr.append(len(members))
        if min(np.diff(ptr)) < 2:
            raise InvalidParamsError("every check node needs degree >= 2")
        self.node_ptr = np.asarray(ptr, dtype=np.int64)
        self.members = np.asarray(members, dtype=np.int64)
        self.first = np.asarray(first, dtype=np.bool_)
        self.written = np.unique(self.members[self.first])

        D = max(len(b) for b in bits)
        self.bit_cls = np.full((len(bits), D), -1, dtype=np.int64)
        self.bit_mult = np.zeros((len(bits), D), dtype=np.int64)
        for i, b in enumerate(bits):
            for k, (cls, m) in enumerate(b):
                self.bit_cls[i, k], self.bit_mult[i, k] = cls, m
        self.bit_deg = self.bit_mult.sum(axis=1)
        self.Sx = sfft.next_fast_len(2 * K * (int(self.bit_deg.max()) + 1) + 1, real=True)
        w = np.asarray(weights, dtype=np.float64)
        self.bit_weight = w / w.sum()
        self.overflow_events = 0

    # -- densities ---------------------------------------------------------------

    def channel_density(self, sigma: float) -> np.ndarray:
        """Channel LLR ~ N(2/sigma^2, 4/sigma^2) for the all-zero word, binned by CDF."""
        mu, sd = 2.0 / sigma**2, 2.0 / sigma
        edges = (np.arange(self.nx + 1) - self.K - 0.5) * self.grid.step
        cdf = ndtr((edges - mu) / sd)
        cdf[0], cdf[-1] = 0.0, 1.0
        return np.diff(cdf)

    def check_update(self, V: np.ndarray) -> np.ndarray:
        K = self.K
        S = np.empty((V.shape[0], K + 1))
        Dd = np.empty_like(S)
        S[:, 0] = V[:, K]
        Dd[:, 0] = 0.0
        pos, neg = V[:, K + 1 :], V[:, K - 1 :: -1]
        S[:, 1:] = pos + neg
        Dd[:, 1:] = pos - neg
        out_S = np.zeros_like(S)
        out_D = np.zeros_like(S)
        _check_nodes(S, Dd, self.node_ptr, self.members, self.first, self.G, self.band_end, self.const,
                     out_S, out_D)
        U = np.empty_like(V)
        U[:, K] = out_S[:, 0]
        U[:, K + 1 :] = 0.5 * (out_S[:, 1:] + out_D[:, 1:])
        U[:, K - 1 :: -1] = 0.5 * (out_S[:, 1:] - out_D[:, 1:])
        rows = self.written
        U[rows] = np.maximum(U[rows], 0.0)
        U[rows] /= U[rows].sum(axis=1, keepdims=True)
        return U

    def bit_update(self, U: np.ndarray, channel: np.ndarray):
        """Returns (new bit-to-check densities, per-bit-type error probability)."""
        K, S = self.K, self.Sx
        F = sfft.rfft(U, n=S, axis=-1)
        Fc = sfft.rfft(channel, n=S)
        n_bits, width = self.bit_cls.shape
        valid = self.bit_cls >= 0
        Fm = np.ones((n_bits, width, F.shape[-1]), dtype=F.dtype)
        own = np.ones_like(Fm)
        for k in range(width):
            for m in np.unique(self.bit_mult[valid[:, k], k]):
                sel = valid[:, k] & (self.bit_mult[:, k] == m)
                base = F[self.bit_cls[sel, k]]
                Fm[sel, k] = base**m
                if m > 1:
                    own[sel, k] = base ** (m - 1)
        out = np.empty_like(Fm)
        acc = np.broadcast_to(Fc, Fm[:, 0].shape).copy()
        for k in range(width):
            out[:, k] = acc
            acc = acc * Fm[:, k]
        total = acc
        acc = np.ones_like(total)
        for k in range(width - 1, -1, -1):
            out[:, k] *= acc * own[:, k]
            acc = acc * Fm[:, k]
        V = np.empty_like(U)
        y = sfft.irfft(out[valid], n=S, axis=-1)
        V[self.bit_cls[valid]] = self._fold(y, np.repeat(self.bit_deg, valid.sum(axis=1)))
        P = self._fold(sfft.irfft(total, n=S, axis=-1), self.bit_deg + 1)
        return V, P[:, :K].sum(axis=1) + 0.5 * P[:, K]

    def _fold(self, y, n_terms):
        """Cut a linear convolution of n_terms grid densities back to the grid; tails saturate."""
        K, nx = self.K, self.nx
        y = np.maximum(y, 0.0)
        csum = np.cumsum(y, axis=1)
        out = np.empty((y.shape[0], nx))
        for n in np.unique(n_terms):
            sel = np.flatnonzero(n_terms == n)
            c0 = (n - 1) * K
            block = y[sel, c0 : c0 + nx].copy()
            if c0 > 0:
                block[:, 0] += csum[sel, c0 - 1]
            block[:, -1] += csum[sel, -1] - csum[sel, c0 + nx - 1]
            out[sel] = block
        out /= out.sum(axis=1, keepdims=True)
        return out

    # -- iteration ----------------------------------------------------------------

    def run(self, sigma: float, max_iters: int = 5000, target_error: float = 1e-6,
            stall_window: int = 100, stall_tol: float = 1e-6):
        """Iterate from the channel density. Returns (converged, iterations, final bit error).

        Gives up early once the error has not improved by a relative ``stall_tol``
        for ``stall_window`` iterations (a fixed point above target).
        """
        if not sigma > 0:
            raise InvalidParamsError("sigma must be positive")
        ch = self.channel_density(sigma)
        V = np.tile(ch, (self.graph.n_classes, 1))
        best, since, err = 1.0, 0, 1.0
        for it in range(1, max_iters + 1):
            U = self.check_update(V)
            V, errs = self.bit_update(U, ch)
            err = float(errs @ self.bit_weight)
            if err < target_error:
                self._note_overflow(V)
                return True, it, err
            if err < best * (1.0 - stall_tol):
                best, since = err, 0
            else:
                since += 1
                if since >= stall_window:
                    break
        self._note_overflow(V)
        return False, it, err

    def _note_overflow(self, V, level: float = 0.5):
        # saturation at +llr_max is expected when decoding succeeds; the warning
        # is about a grid too short to separate "reliable" from "certain"
        if np.any(V[:, -1] > level) and self.grid.llr_max < 20:
            self.overflow_events += 1
            log.warning("density mass accumulating at llr_max=%g", self.grid.llr_max)


def de_iterate(proto, channel_sigma: float, max_iters: int = 5000, target_error: float = 1e-6,
               grid: DEGrid = DEGrid()) -> bool:
    """True iff the average bit error probability falls below ``target_error`` within ``max_iters``."""
    return DensityEvolution(proto, grid).run(channel_sigma, max_iters, target_error)[0]


def ebno_db(sigma: float, rate: float) -> float:
    return 10.0 * math.log10(1.0 / (2.0 * rate * sigma**2))


def find_threshold(proto, tolerance: float = 1e-3, grid: DEGrid = DEGrid(), bracket=(0.5, 1.2),
                   max_iters: int = 5000, target_error: float = 1e-6) -> ThresholdResult:
    """Bisection on sigma until the bracket is at most ``tolerance`` wide."""
    if not tolerance > 0:
        raise InvalidParamsError("tolerance must be positive")
    lo, hi = map(float, bracket)
    if not 0 < lo < hi:
        raise InvalidParamsError("bracket must satisfy 0 < lo < hi")
    de = DensityEvolution(proto, grid)
    ok_lo, it_lo, _ = de.run(lo, max_iters, target_error)
    ok_hi, _, _ = de.run(hi, max_iters, target_error)
    if not ok_lo or ok_hi:
        raise BracketError(f"no convergence change inside sigma bracket [{lo}, {hi}]")
    while hi - lo > tolerance:
        mid = 0.5 * (lo + hi)
        ok, its, err = de.run(mid, max_iters, target_error)
        log.info("sigma=%.6f converged=%s iterations=%d err=%.3g", mid, ok, its, err)
        if ok:
            lo, it_lo = mid, its
        else:
            hi = mid
    return ThresholdResult(lo, ebno_db(lo, de.graph.rate), it_lo, True, tolerance, grid.step, (lo, hi))


class ThresholdCache:
    """JSON file of thresholds keyed by ensemble and every numerical setting."""

    def __init__(self, path):
        self.path = Path(path)
        self.data = json.loads(self.path.read_text()) if self.path.exists() else {}

    @staticmethod
    def key(target, tolerance, grid, bracket, max_iters, target_error) -> str:
        g = as_class_graph(target)
        kind = "uncoupled" if g.label and g.label[2] == 0 else "coupled"
        return json.dumps([kind, list(g.label), tolerance, grid.step, grid.llr_max, list(bracket), max_iters,
                           target_error])

    def get_or_compute(self, target, tolerance=1e-3, grid: DEGrid = DEGrid(), bracket=(0.5, 1.2),
                       max_iters=5000, target_error=1e-6) -> ThresholdResult:
        k = self.key(target, tolerance, grid, bracket, max_iters, target_error)
        if k in self.data:
            d = dict(self.data[k])
            d["bracket"] = tuple(d["bracket"])
            return ThresholdResult(**d)
        res = find_threshold(target, tolerance, grid, bracket, max_iters, target_error)
        self.data[k] = asdict(res)
        tmp = self.path.with_name(self.path.name + ".tmp")
        tmp.write_text(json.dumps(self.data, indent=1, sort_keys=True))
        os.replace(tmp, self.path)
        return res
