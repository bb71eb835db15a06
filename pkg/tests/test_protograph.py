from fractions import Fraction
from math import gcd

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from scldpc.errors import ConstructionUndefinedError, DegenerateRateError, InvalidParamsError
from scldpc.protograph import ProtoParams, build_coupled_protograph, code_params


@st.composite
def valid_params(draw, max_L=40):
    g = draw(st.integers(2, 4))
    n_c = draw(st.integers(1, 3))
    n_b = draw(st.integers(n_c + 1, 5))
    d_l, d_r = g * n_c, g * n_b
    if gcd(d_l, d_r) == 1:
        d_l, d_r = 2 * d_l, 2 * d_r
    L = draw(st.integers(d_l, max_L))
    try:
        return ProtoParams(d_l, d_r, L)
    except DegenerateRateError:
        return ProtoParams(d_l, d_r, max_L * 4)


def test_36_L5_band():
    proto = build_coupled_protograph(ProtoParams(3, 6, 5))
    assert proto.params.n_check_groups == 7
    assert proto.n_cols == 5 * 2
    for t in range(5):
        groups = sorted({s.check_group for s in proto.edge_slots if s.bit_group == t})
        assert groups == [t, t + 1, t + 2]


def test_smallest_L():
    p = ProtoParams(3, 6, 3)
    assert p.n_check_groups == 5
    assert p.design_rate == Fraction(1, 6)
    assert code_params(p, 1) == (6, Fraction(1, 6))


def test_48_L129_groups_counted_directly():
    proto = build_coupled_protograph(ProtoParams(4, 8, 129))
    assert len({s.check_group for s in proto.edge_slots}) == 132
    assert proto.params.n_check_groups == 132


def test_code_params_full_size():
    N, r = code_params(ProtoParams(4, 8, 129), 400)
    assert N == 103200
    assert r == Fraction(126, 258)
    assert round(float(r), 3) == 0.488


def test_rate_loss_vanishes():
    _, r = code_params(ProtoParams(3, 6, 1000), 1)
    assert r == Fraction(998, 2000)


@pytest.mark.parametrize("dl,dr,L,exc", [
    (3, 5, 10, ConstructionUndefinedError),
    (3, 6, 2, DegenerateRateError),
    (4, 6, 4, DegenerateRateError),
    (1, 6, 10, InvalidParamsError),
    (3, 6, 0, InvalidParamsError),
])
def test_rejections(dl, dr, L, exc):
    with pytest.raises(exc):
        ProtoParams(dl, dr, L)


@given(valid_params())
def test_structure_invariants(p):
    proto = build_coupled_protograph(p)
    assert len(proto.edge_slots) == p.L * p.n_b * p.d_l
    deg = proto.check_group_degrees()
    assert len(deg) == p.L + p.d_l - 1
    assert sum(deg) == len(proto.edge_slots)
    # interior groups are full, boundary groups are not
    full = p.n_c * p.d_r
    assert all(d == full for d in deg[p.d_l - 1 : p.L])
    assert all(d < full for d in deg[: p.d_l - 1] + deg[p.L :])
    B = proto.base_matrix()
    assert np.all(B.sum(axis=0) == p.d_l)
    for t in range(p.L):
        groups = sorted({s.check_group for s in proto.edge_slots if s.bit_group == t})
        assert groups == list(range(t, t + p.d_l))


@given(valid_params())
def test_rate_below_uncoupled_and_increasing(p):
    r = p.design_rate
    assert 0 < r < p.uncoupled_rate
    bigger = ProtoParams(p.d_l, p.d_r, p.L + 1)
    assert r < bigger.design_rate
    assert r == Fraction(p.n_b * p.L - p.n_c * (p.L + p.d_l - 1), p.n_b * p.L)


@given(valid_params(), st.integers(1, 50))
def test_code_length(p, M):
    N, r = code_params(p, M)
    assert N == p.n_b * M * p.L
    assert r == p.design_rate
