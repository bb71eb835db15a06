"""Progressive edge growth, standard and band-restricted (spatially coupled)."""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np

from .errors import InfeasibleDegreeError, InvalidParamsError
from .protograph import CoupledProtograph
from .sparse import SparseBinaryMatrix


def _frontier_levels(v, bit_adj, check_adj):
    """Yield the cumulative set of checks reached from bit v, one BFS level at a time."""
    seen_bits = {v}
    reached = set(bit_adj[v])
    frontier = set(reached)
    yield frozenset(reached)
    while frontier:
        bits = set()
        for c in frontier:
            bits.update(check_adj[c])
        bits -= seen_bits
        seen_bits |= bits
        new = set()
        for b in bits:
            new.update(bit_adj[b])
        new -= reached
        if not new:
            return
        reached |= new
        frontier = new
        yield frozenset(reached)


def _pick(candidates, degree, rank):
    return min(candidates, key=lambda c: (degree[c], rank[c]))


def _pair_cycles(a, b, bit_adj):
    k = len(bit_adj[a] & bit_adj[b])
    return k * (k - 1) // 2


def _cycles_at(v, bit_adj, check_adj):
    """4-cycles through bit v."""
    others = set()
    for c in bit_adj[v]:
        others.update(check_adj[c])
    others.discard(v)
    return sum(_pair_cycles(v, u, bit_adj) for u in others)


def _break_four_cycles(bit_adj, check_adj, group, rng, max_rounds=20):
    """Degree-preserving swaps (v,c),(u,d) -> (v,d),(u,c) with group[c] == group[d]
    that strictly lower the number of 4-cycles. Late PEG bits are often forced
    onto the few checks with spare capacity; this repairs what that costs."""
    n_bits = len(bit_adj)
    for _ in range(max_rounds):
        improved = False
        for v in range(n_bits):
            if _cycles_at(v, bit_adj, check_adj) == 0:
                continue
            for c in sorted(bit_adj[v]):
                if not any(len(bit_adj[v] & bit_adj[w]) > 1 for w in check_adj[c] if w != v):
                    continue
                options = [d for d in range(len(check_adj)) if group[d] == group[c] and d not in bit_adj[v]]
                for d in rng.permutation(options).tolist() if options else []:
                    for u in sorted(check_adj[d]):
                        if c in bit_adj[u]:
                            continue
                        before = (_cycles_at(v, bit_adj, check_adj) + _cycles_at(u, bit_adj, check_adj)
                                  - _pair_cycles(u, v, bit_adj))
                        _swap(bit_adj, check_adj, v, c, u, d)
                        after = (_cycles_at(v, bit_adj, check_adj) + _cycles_at(u, bit_adj, check_adj)
                                 - _pair_cycles(u, v, bit_adj))
                        if after < before:
                            improved = True
                            break
                        _swap(bit_adj, check_adj, v, d, u, c)
                    else:
                        continue
                    break
                if improved:
                    break
        if not improved:
            return


def _swap(bit_adj, check_adj, v, c, u, d):
    bit_adj[v].remove(c)
    bit_adj[u].remove(d)
    check_adj[c].remove(v)
    check_adj[d].remove(u)
    bit_adj[v].add(d)
    bit_adj[u].add(c)
    check_adj[d].add(v)
    check_adj[c].add(u)


def _peg(n_bits, n_checks, capacity, requests, seed, group=None):
    """``requests[v]`` lists, per edge of bit v, the pool of checks that edge may use."""
    rng = np.random.default_rng(seed)
    rank = rng.permutation(n_checks).tolist()
    degree = [0] * n_checks
    bit_adj = [[] for _ in range(n_bits)]
    check_adj = [[] for _ in range(n_checks)]
    for v in range(n_bits):
        for pool in requests[v]:
            allowed = [c for c in pool if degree[c] < capacity[c] and c not in bit_adj[v]]
            if not allowed:
                raise InfeasibleDegreeError(f"bit {v}: no check left with spare degree")
            if bit_adj[v]:
                allowed_set = set(allowed)
                previous = set()
                for reached in _frontier_levels(v, bit_adj, check_adj):
                    if allowed_set <= reached:
                        break
                    previous = reached
                else:
                    previous = reached
                candidates = [c for c in allowed if c not in previous]
            else:
                candidates = allowed
            c = _pick(candidates, degree, rank)
            bit_adj[v].append(c)
            check_adj[c].append(v)
            degree[c] += 1
    bit_sets = [set(a) for a in bit_adj]
    check_sets = [set(a) for a in check_adj]
    _break_four_cycles(bit_sets, check_sets, group or [0] * n_checks, rng)
    return SparseBinaryMatrix.from_adjacency(n_checks, [sorted(a) for a in bit_sets])


def peg_construct(target, N: int, seed: int = 0) -> SparseBinaryMatrix:
    """Build a parity-check matrix by progressive edge growth.

    ``target`` is either a ``(d_l, d_r)`` pair (standard regular code) or a
    :class:`CoupledProtograph`, in which case every bit takes exactly one check
    from each base row its protograph column touches, so all edges stay inside
    the coupling band. Ties between equally distant checks go to the lowest
    current degree, then to a seeded random rank. A final pass of
    degree-preserving edge swaps removes 4-cycles where it can.
    """
    if isinstance(target, CoupledProtograph):
        p = target.params
        if N % (p.n_b * p.L):
            raise InvalidParamsError(f"N={N} is not a multiple of n_b*L={p.n_b * p.L}")
        M = N // (p.n_b * p.L)
        rows_of_col = [[] for _ in range(target.n_cols)]
        row_deg = [0] * target.n_rows
        for s in target.edge_slots:
            rows_of_col[s.col].append(s.row)
            row_deg[s.row] += 1
        n_checks = target.n_rows * M
        capacity = [row_deg[c // M] for c in range(n_checks)]
        requests = []
        for v in range(N):
            l = v // M
            requests.append([range(x * M, (x + 1) * M) for x in sorted(rows_of_col[l])])
        return _peg(N, n_checks, capacity, requests, seed, group=[c // M for c in range(n_checks)])

    if not isinstance(target, Sequence) or len(target) != 2:
        raise InvalidParamsError("target must be (d_l, d_r) or a CoupledProtograph")
    d_l, d_r = target
    if N < 1 or (N * d_l) % d_r:
        raise InfeasibleDegreeError(f"N*d_l = {N * d_l} is not divisible by d_r = {d_r}")
    n_checks = N * d_l // d_r
    if n_checks < d_l:
        raise InfeasibleDegreeError(f"{n_checks} checks cannot host column weight {d_l}")
    everything = range(n_checks)
    return _peg(N, n_checks, [d_r] * n_checks, [[everything] * d_l for _ in range(N)], seed)
