"""Cycle analysis of QC SC-LDPC codes.

Two independent routes are provided. The algebraic route works on the base
(block) graph: a closed alternating block path lifts to a cycle iff its
alternating shift sum vanishes mod M. The graph route runs truncated BFS on the
expanded Tanner graph. Block paths may revisit a block as long as consecutive
blocks differ; that is what the inevitable 12-cycles of a 3x2 all-ones
submatrix need.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .errors import HypothesisNotMetError, InvalidParamsError, MalformedPathError
from .protograph import CoupledProtograph
from .qc import ShiftMatrix, check_period, period_key
from .sparse import SparseBinaryMatrix


@dataclass(frozen=True)
class CirculantPath:
    """Closed alternating block path P_0..P_{2i-1}; the closing step P_{2i-1} -> P_0 is implied.

    Even steps (P_0 -> P_1, P_2 -> P_3, ...) stay in a block row, odd steps stay
    in a block column.
    """

    positions: tuple
    shifts: tuple

    def __post_init__(self):
        object.__setattr__(self, "positions", tuple(tuple(int(v) for v in p) for p in self.positions))
        object.__setattr__(self, "shifts", tuple(int(s) for s in self.shifts))
        validate_path(self.positions)
        if len(self.shifts) != len(self.positions):
            raise MalformedPathError("one shift per position required")

    def __len__(self):
        return len(self.positions)

    @property
    def is_simple(self) -> bool:
        return len(set(self.positions)) == len(self.positions)

    def alternating_sum(self) -> int:
        return sum(s if k % 2 == 0 else -s for k, s in enumerate(self.shifts))


def validate_path(positions) -> None:
    n = len(positions)
    if n < 4 or n % 2:
        raise MalformedPathError(f"path length must be even and >= 4, got {n}")
    for k in range(n):
        (x0, l0), (x1, l1) = positions[k], positions[(k + 1) % n]
        if k % 2 == 0:
            if x0 != x1 or l0 == l1:
                raise MalformedPathError(f"step {k}: expected a move along block row {x0}")
        else:
            if l0 != l1 or x0 == x1:
                what = "closing step" if k == n - 1 else f"step {k}"
                raise MalformedPathError(f"{what}: expected a move along block column {l0}")


def cycle_exists(path: CirculantPath, M: int) -> bool:
    """True iff the alternating shift sum of the closed path is 0 mod M."""
    if M < 1:
        raise InvalidParamsError("M must be >= 1")
    validate_path(path.positions)
    return path.alternating_sum() % M == 0


def lift_path(path: CirculantPath, M: int, start: int = 0):
    """Follow the path through the expanded graph from bit ``start`` of block column l_0.

    Returns the node sequence as ("bit", column) / ("check", row) pairs, first
    node repeated at the end when the walk closes.
    """
    nodes = []
    (x, l) = path.positions[0]
    u = start % M
    nodes.append(("bit", l * M + u))
    for k, ((x, l), p) in enumerate(zip(path.positions, path.shifts)):
        if k % 2 == 0:
            r = (u - p) % M  # bit -> check through block (x, l)
            nodes.append(("check", x * M + r))
        else:
            u = (r + p) % M  # check -> bit
            nodes.append(("bit", l * M + u))
    return nodes


@dataclass(frozen=True)
class CycleWitness:
    path: CirculantPath
    length: int
    M: int
    equalities: tuple = ()
    expanded_instance: tuple | None = None

    def __post_init__(self):
        if self.path.alternating_sum() % self.M:
            raise MalformedPathError("witness path does not close mod M")

    def certificate(self) -> str:
        lines = [f"cycle length: {self.length}", f"circulant size M: {self.M}", "block positions (row, col, shift, sign):"]
        for k, ((x, l), p) in enumerate(zip(self.path.positions, self.path.shifts)):
            lines.append(f"  {x} {l} {p} {'+' if k % 2 == 0 else '-'}")
        lines.append(f"alternating sum: {self.path.alternating_sum()} (= 0 mod {self.M})")
        if self.equalities:
            lines.append("shift equalities forced by reuse:")
            for a, b in self.equalities:
                pa, pb = self.path.positions[a], self.path.positions[b]
                lines.append(f"  p{pa} = p{pb}")
        if self.expanded_instance:
            seq = " ".join(f"{'v' if kind == 'bit' else 'c'}{i}" for kind, i in self.expanded_instance)
            lines.append(f"expanded node sequence: {seq}")
        return "\n".join(lines) + "\n"


# -- graph route ---------------------------------------------------------------


@dataclass(frozen=True)
class GirthResult:
    """Exact girth when a cycle of length <= cap exists, otherwise ``value`` is None."""

    value: int | None
    cap: int

    @property
    def lower_bound(self) -> int:
        return self.value if self.value is not None else self.cap + 2

    def at_most(self, g: int) -> bool:
        return self.value is not None and self.value <= g

    def __str__(self):
        return str(self.value) if self.value is not None else f">{self.cap}"


def _tanner_adjacency(H: SparseBinaryMatrix):
    N = H.n_cols
    adj = [a for a in H.col_adjacency]
    adj = [[N + r for r in a] for a in adj] + H.row_adjacency
    return adj


def girth(H: SparseBinaryMatrix, cap: int = 16, sources=None) -> GirthResult:
    """Shortest cycle of the Tanner graph by truncated BFS from bit nodes.

    ``sources`` restricts the BFS roots; pass one bit per orbit when the graph
    has a known automorphism (e.g. one bit per block column of a QC matrix).
    """
    if cap < 4 or cap % 2:
        raise InvalidParamsError("cap must be an even integer >= 4")
    adj = _tanner_adjacency(H)
    n_nodes = len(adj)
    best = cap + 2
    dist = [-1] * n_nodes
    parent = [-1] * n_nodes
    roots = range(H.n_cols) if sources is None else sources
    for s in roots:
        touched = [s]
        dist[s] = 0
        frontier = [s]
        depth = 0
        found = False
        while frontier and 2 * depth + 2 < best and not found:
            nxt = []
            for u in frontier:
                pu = parent[u]
                for w in adj[u]:
                    if w == pu:
                        continue
                    if dist[w] < 0:
                        dist[w] = depth + 1
                        parent[w] = u
                        touched.append(w)
                        nxt.append(w)
                    else:
                        length = dist[u] + dist[w] + 1
                        if length < best:
                            best = length
                        found = True
            frontier = nxt
            depth += 1
        for w in touched:
            dist[w] = -1
            parent[w] = -1
    return GirthResult(best if best <= cap else None, cap)


def qc_girth(sm: ShiftMatrix, cap: int = 16, H: SparseBinaryMatrix | None = None) -> GirthResult:
    """Girth of expand(sm); one BFS root per block column suffices by cyclic symmetry."""
    from .qc import expand

    H = expand(sm) if H is None else H
    n_cols = sm.protograph.n_cols
    return girth(H, cap, sources=[l * sm.M for l in range(n_cols)])


def enumerate_cycles(H: SparseBinaryMatrix, length: int):
    """Yield each cycle of the given length once, as a tuple of Tanner node ids
    (bits 0..N-1, checks N..N+m-1), starting at its smallest bit."""
    if length not in (4, 6, 8, 10):
        raise InvalidParamsError(f"cycle counting supports lengths 4..10, got {length}")
    adj = _tanner_adjacency(H)
    N = H.n_cols
    for s in range(N):
        path = [s]
        on_path = {s}

        def dfs(u):
            depth = len(path)
            for w in adj[u]:
                if depth == length:
                    if w == s:
                        # each cycle is seen in both directions; keep one
                        if path[1] < path[-1]:
                            yield tuple(path)
                    continue
                if w in on_path or (w < N and w < s):
                    continue
                path.append(w)
                on_path.add(w)
                yield from dfs(w)
                path.pop()
                on_path.discard(w)

        yield from dfs(s)


def count_cycles(H: SparseBinaryMatrix, length: int) -> int:
    return sum(1 for _ in enumerate_cycles(H, length))


def cycle_participation(H: SparseBinaryMatrix, length: int) -> np.ndarray:
    """Number of cycles of the given length through each column."""
    counts = np.zeros(H.n_cols, dtype=np.int64)
    for cyc in enumerate_cycles(H, length):
        for v in cyc:
            if v < H.n_cols:
                counts[v] += 1
    return counts


# -- algebraic route -------------------------------------------------------------


def _block_graph(rows, cols):
    same_row = (rows[:, None] == rows[None, :]) & (cols[:, None] != cols[None, :])
    same_col = (cols[:, None] == cols[None, :]) & (rows[:, None] != rows[None, :])
    return same_row, same_col


def eq3_min_cycle(sm: ShiftMatrix, max_length: int = 12):
    """Shortest closed block path with zero alternating sum mod M, by dynamic
    programming over (position, partial sum). Returns (length, CirculantPath)
    or (None, None) if nothing up to ``max_length`` closes."""
    rows, cols, shifts, _ = sm.slot_arrays()
    M = sm.M
    n = len(rows)
    same_row, same_col = _block_graph(rows, cols)
    steps = [same_row.astype(np.float32), same_col.astype(np.float32)]
    m_idx = np.arange(M)
    layers = []
    cur = np.zeros((n, n, M), dtype=bool)
    cur[np.arange(n), np.arange(n), shifts % M] = True
    layers.append(cur)
    for k in range(1, max_length):
        A = steps[(k - 1) % 2]
        moved = np.einsum("sam,ab->sbm", cur.astype(np.float32), A) > 0
        sign = 1 if k % 2 == 0 else -1
        idx = (m_idx[None, :] - sign * shifts[:, None]) % M
        cur = moved[:, np.arange(n)[:, None], idx]
        layers.append(cur)
        if k % 2 == 1 and k >= 3:
            closing = cur[:, :, 0] & same_col.T  # same_col[b, s] for end b, start s
            hits = np.argwhere(closing)
            if hits.size:
                s, b = hits[0]
                path = _backtrack(layers, steps, shifts, M, s, b)
                positions = [(int(rows[i]), int(cols[i])) for i in path]
                return k + 1, CirculantPath(positions, [int(shifts[i]) for i in path])
    return None, None


def _backtrack(layers, steps, shifts, M, s, b):
    path = [b]
    m = 0
    for k in range(len(layers) - 1, 0, -1):
        sign = 1 if k % 2 == 0 else -1
        m_prev = (m - sign * shifts[b]) % M
        A = steps[(k - 1) % 2]
        prev = np.flatnonzero(layers[k - 1][s, :, m_prev] & (A[:, b] > 0))
        b, m = int(prev[0]), m_prev
        path.append(b)
    path.reverse()
    assert path[0] == s
    return path


def find_symbolic_cycle(rows, cols, classes, max_length: int, min_length: int = 4, simple: bool = False):
    """Shortest closed block path whose alternating sum cancels for *every*
    shift assignment, i.e. each class appears equally often with + and - sign.

    With ``simple`` the path must lift to a simple cycle of exactly its own
    length under a generic shift assignment. Blocks may repeat (the reuse-3
    10-cycle passes one block twice with opposite signs).
    Returns a list of slot indices or None.
    """
    rows = np.asarray(rows)
    cols = np.asarray(cols)
    classes = np.asarray(classes)
    same_row, same_col = _block_graph(rows, cols)
    row_nb = [np.flatnonzero(same_row[i]).tolist() for i in range(len(rows))]
    col_nb = [np.flatnonzero(same_col[i]).tolist() for i in range(len(rows))]
    cls = classes.tolist()
    accept = None
    if simple:
        generic = np.random.default_rng(12345).integers(0, _GENERIC_M, size=int(classes.max()) + 1)

        def accept(path):
            cp = CirculantPath([(rows[i], cols[i]) for i in path], [generic[cls[i]] for i in path])
            nodes = lift_path(cp, _GENERIC_M)
            return nodes[0] == nodes[-1] and len(set(nodes[:-1])) == len(path)

    for length in range(max(4, min_length), max_length + 1, 2):
        for s in range(len(rows)):
            found = _symbolic_dfs(s, length, row_nb, col_nb, cls, accept)
            if found is not None:
                return found
    return None


_GENERIC_M = 2_147_483_647


def _symbolic_dfs(s, length, row_nb, col_nb, cls, accept=None):
    counts = Counter({cls[s]: 1})
    imbalance = [1]
    path = [s]
    closers = set(col_nb[s])

    def bump(c, d):
        before = abs(counts[c])
        counts[c] += d
        imbalance[0] += abs(counts[c]) - before

    def dfs():
        k = len(path) - 1  # index of last position
        if k == length - 1:
            return imbalance[0] == 0 and path[-1] in closers and (accept is None or accept(path))
        nbrs = row_nb[path[-1]] if k % 2 == 0 else col_nb[path[-1]]
        sign = 1 if (k + 1) % 2 == 0 else -1
        remaining = length - k - 2
        for w in nbrs:
            if w < s:
                continue
            bump(cls[w], sign)
            if imbalance[0] <= remaining:
                path.append(w)
                if dfs():
                    return True
                path.pop()
            bump(cls[w], -sign)
        return False

    return list(path) if dfs() else None


REUSE_BOUND = {1: 6, 2: 8, 3: 10}


def find_inevitable_cycle(proto: CoupledProtograph, T: int, max_length: int = 12, window: int | None = None,
                          min_length: int = 4, simple: bool = False):
    """Shortest block path that closes for every period-T shift assignment.

    Only bit groups [0, window) are searched. Returns a list of slots or None.
    """
    p = proto.params
    check_period(p, T)
    window = p.L if window is None else min(window, p.L)
    slots = [s for s in proto.edge_slots if s.bit_group < window]
    keys = {}
    cls = [keys.setdefault(period_key(s, T, p.n_b), len(keys)) for s in slots]
    rows = [s.row for s in slots]
    cols = [s.col for s in slots]
    found = find_symbolic_cycle(rows, cols, cls, max_length, min_length=min_length, simple=simple)
    return None if found is None else [slots[i] for i in found]


def _check_reuse_hypothesis(sm: ShiftMatrix) -> int:
    p, T = sm.params, sm.T
    if T not in REUSE_BOUND:
        raise HypothesisNotMetError(f"reuse-inevitable witnesses cover T in {{1,2,3}}, got T={T}")
    need = 3 if T == 1 else 4
    if p.d_l < need:
        raise HypothesisNotMetError(f"T={T} needs d_l >= {need}, got d_l={p.d_l}")
    if p.L < T + p.d_l - 1:
        raise HypothesisNotMetError(f"L={p.L} < T + d_l - 1 = {T + p.d_l - 1}: reused blocks absent")
    return REUSE_BOUND[T]


def _witness(sm: ShiftMatrix, slots) -> CycleWitness:
    positions = [(s.row, s.col) for s in slots]
    shifts = [sm.shift(s) for s in slots]
    path = CirculantPath(positions, shifts)
    if not cycle_exists(path, sm.M):
        raise AssertionError("symbolic witness failed the mod-M check")
    keys = [sm.key(s) for s in slots]
    equalities = []
    used = set()
    for a in range(len(keys)):
        for b in range(a + 1, len(keys)):
            if a in used or b in used:
                continue
            if keys[a] == keys[b] and (a - b) % 2 == 1:
                equalities.append((a, b))
                used.update((a, b))
    nodes = tuple(lift_path(path, sm.M))
    return CycleWitness(path, len(positions), sm.M, tuple(equalities), nodes)


def find_reuse_inevitable_cycle(sm: ShiftMatrix) -> CycleWitness:
    """Reuse-forced cycle of length 6 (T=1), 8 (T=2) or 10 (T=3).

    The witness is a block path of exactly that length that lifts to a simple
    cycle for generic shifts and closes for every shift choice. For T=3 a
    shorter reuse-forced cycle can also exist; see
    :func:`shortest_reuse_inevitable_cycle`.
    """
    target = _check_reuse_hypothesis(sm)
    p = sm.params
    slots = find_inevitable_cycle(sm.protograph, sm.T, max_length=target, min_length=target,
                                  window=sm.T + p.d_l, simple=True)
    if slots is None:
        raise HypothesisNotMetError(f"no reuse-{sm.T} inevitable cycle of length {target} found")
    return _witness(sm, slots)


def shortest_reuse_inevitable_cycle(sm: ShiftMatrix, max_length: int = 12) -> CycleWitness | None:
    """Shortest cycle forced by the reuse pattern alone (None if none up to max_length)."""
    p = sm.params
    slots = find_inevitable_cycle(sm.protograph, sm.T, max_length=max_length,
                                  window=min(p.L, sm.T + p.d_l), simple=True)
    return None if slots is None else _witness(sm, slots)


def detect_p12(proto: CoupledProtograph) -> bool:
    """True iff the base matrix has a 3x2 all-ones submatrix (forces girth <= 12)."""
    B = proto.base_matrix().astype(np.int64)
    overlap = B.T @ B
    np.fill_diagonal(overlap, 0)
    return bool((overlap >= 3).any())
