"""Coupled chain of regular (d_l, d_r) protographs and its design parameters."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd
from typing import NamedTuple

import numpy as np

from .errors import ConstructionUndefinedError, DegenerateRateError, InvalidParamsError


@dataclass(frozen=True)
class ProtoParams:
    d_l: int
    d_r: int
    L: int

    def __post_init__(self):
        for name in ("d_l", "d_r", "L"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or isinstance(value, bool):
                raise InvalidParamsError(f"{name} must be an integer, got {value!r}")
        if self.d_l < 2 or self.d_r < 2:
            raise InvalidParamsError("d_l and d_r must both be >= 2")
        if self.L < 1:
            raise InvalidParamsError("L must be >= 1")
        if gcd(self.d_r, self.d_l) == 1:
            raise ConstructionUndefinedError(
                f"gcd(d_r={self.d_r}, d_l={self.d_l}) = 1: coupled chain is undefined"
            )
        if self.L < self.d_l:
            raise DegenerateRateError(f"L={self.L} < d_l={self.d_l} gives a degenerate design rate")
        if self.design_rate <= 0:
            raise DegenerateRateError(f"design rate {self.design_rate} is not positive")

    @property
    def n_b(self) -> int:
        return self.d_r // gcd(self.d_r, self.d_l)

    @property
    def n_c(self) -> int:
        return self.d_l // gcd(self.d_r, self.d_l)

    @property
    def n_check_groups(self) -> int:
        return self.L + self.d_l - 1

    @property
    def design_rate(self) -> Fraction:
        n_b, n_c = self.n_b, self.n_c
        return Fraction(n_b * self.L - n_c * (self.L + self.d_l - 1), n_b * self.L)

    @property
    def uncoupled_rate(self) -> Fraction:
        return Fraction(self.n_b - self.n_c, self.n_b)


class Slot(NamedTuple):
    """One protograph edge.

    ``row``/``col`` index the base matrix; ``check_group``/``bit_group`` are the
    chain positions; ``offset`` = check_group - bit_group; ``member`` is the
    bit's index inside its group.
    """

    row: int
    col: int
    check_group: int
    bit_group: int
    offset: int
    member: int


def slot_row(params: ProtoParams, bit_group: int, offset: int, member: int) -> int:
    # n_c > 1: the k-th edge entering a check group goes to check k mod n_c,
    # with k = offset * n_b + member. This keeps interior check degrees at d_r.
    n_c = params.n_c
    return (bit_group + offset) * n_c + (offset * params.n_b + member) % n_c


@dataclass(frozen=True)
class CoupledProtograph:
    params: ProtoParams
    edge_slots: tuple[Slot, ...] = field(repr=False)

    @property
    def n_rows(self) -> int:
        return self.params.n_check_groups * self.params.n_c

    @property
    def n_cols(self) -> int:
        return self.params.L * self.params.n_b

    def base_matrix(self) -> np.ndarray:
        B = np.zeros((self.n_rows, self.n_cols), dtype=np.int8)
        for s in self.edge_slots:
            B[s.row, s.col] = 1
        return B

    def check_group_degrees(self) -> list[int]:
        deg = [0] * self.params.n_check_groups
        for s in self.edge_slots:
            deg[s.check_group] += 1
        return deg


def build_coupled_protograph(params: ProtoParams) -> CoupledProtograph:
    """Chain L copies of the (d_l, d_r) protograph; bit group t reaches check groups t..t+d_l-1."""
    slots = []
    for t in range(params.L):
        for b in range(params.n_b):
            col = t * params.n_b + b
            for j in range(params.d_l):
                slots.append(Slot(slot_row(params, t, j, b), col, t + j, t, j, b))
    return CoupledProtograph(params, tuple(slots))


def code_params(params: ProtoParams, M: int) -> tuple[int, Fraction]:
    """Code length N = n_b * M * L and the exact design rate."""
    if not isinstance(M, (int, np.integer)) or M < 1:
        raise InvalidParamsError(f"circulant size M must be an integer >= 1, got {M!r}")
    return params.n_b * M * params.L, params.design_rate
