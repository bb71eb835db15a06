import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from scldpc.errors import InvalidParamsError
from scldpc.protograph import ProtoParams, build_coupled_protograph
from scldpc.qc import ShiftMatrix, assign_shifts, expand
from scldpc.simulate import (CSV_FIELDS, BerRecord, SimConfig, awgn_llr, ber_greater, ber_indistinguishable,
                             ber_std_error, frame_stream, noise_sigma, records_from_csv, records_to_csv, run_ber,
                             storage_report, wer_interval)

SM = assign_shifts(build_coupled_protograph(ProtoParams(3, 6, 6)), 16, 3, seed=0)


def test_noise_sigma_rate_half_0db():
    assert noise_sigma(0.0, 0.5) == pytest.approx(1.0)
    assert noise_sigma(10 * math.log10(2), 0.5) == pytest.approx(2 ** -0.5)
    with pytest.raises(InvalidParamsError):
        noise_sigma(1.0, 1.0)


def test_llr_statistics():
    sigma = noise_sigma(1.0, 0.5)
    llr = awgn_llr(1.0, 0.5, 200_000, frame_stream(3, 0, 0))
    # LLR ~ N(2/s^2, 4/s^2) for the all-zero word
    assert llr.mean() == pytest.approx(2 / sigma**2, rel=0.01)
    assert llr.std() == pytest.approx(2 / sigma, rel=0.01)


def test_streams_replay_and_separate():
    a = frame_stream(5, 1, 7).standard_normal(8)
    assert np.array_equal(a, frame_stream(5, 1, 7).standard_normal(8))
    for other in [(5, 1, 8), (5, 2, 7), (6, 1, 7)]:
        assert not np.array_equal(a, frame_stream(*other).standard_normal(8))


def test_worker_count_does_not_change_results():
    base = dict(matrix_source=SM, snr_points=[1.0, 2.0], max_iterations=30, min_word_errors=20,
                max_frames=400, master_seed=9)
    one = run_ber(SimConfig(**base, workers=1))
    two = run_ber(SimConfig(**base, workers=2))
    assert records_to_csv(one) == records_to_csv(two)


def test_stops_at_exact_error_target():
    rec, = run_ber(SimConfig(SM, [0.0], max_iterations=20, min_word_errors=15, max_frames=5000, master_seed=1))
    assert rec.word_errors == 15 and not rec.censored
    assert rec.wer == 15 / rec.frames


def test_censored_point():
    rec, = run_ber(SimConfig(SM, [8.0], max_iterations=50, min_word_errors=5, max_frames=40))
    assert rec.censored and rec.frames == 40 and rec.word_errors < 5


def test_snr_order_independent_of_listing():
    a = run_ber(SimConfig(SM, [2.0, 1.0], max_iterations=20, min_word_errors=5, max_frames=64))
    assert [r.snr_db for r in a] == [1.0, 2.0]


def test_accepts_expanded_matrix():
    H = expand(SM)
    rec, = run_ber(SimConfig(H, [1.0], max_iterations=20, min_word_errors=5, max_frames=64, rate=0.5))
    assert rec.frames <= 64


@pytest.mark.parametrize("kw", [dict(snr_points=[]), dict(min_word_errors=0), dict(max_frames=0),
                                dict(max_iterations=0), dict(workers=0)])
def test_config_validation(kw):
    args = dict(matrix_source=SM, snr_points=[1.0]) | kw
    with pytest.raises(InvalidParamsError):
        SimConfig(**args)


def test_csv_round_trip():
    recs = run_ber(SimConfig(SM, [0.5, 1.5], max_iterations=20, min_word_errors=10, max_frames=200))
    text = records_to_csv(recs)
    assert text.splitlines()[0] == ",".join(CSV_FIELDS)
    back = records_from_csv(text)
    for a, b in zip(recs, back):
        assert (a.snr_db, a.frames, a.bit_errors, a.word_errors, a.ber, a.wer, a.avg_iterations, a.censored) == \
               (b.snr_db, b.frames, b.bit_errors, b.word_errors, b.ber, b.wer, b.avg_iterations, b.censored)


def rec(frames, words, bits=0, sq=0, n=100):
    return BerRecord(1.0, frames, bits, words, bits / (frames * n), words / frames, 1.0, False, n, sq)


@given(st.integers(1, 500), st.data())
def test_wer_interval_contains_estimate(n, data):
    k = data.draw(st.integers(0, n))
    lo, hi = wer_interval(rec(n, k))
    assert 0 <= lo <= k / n <= hi <= 1


def test_wer_interval_matches_scipy():
    lo, hi = wer_interval(rec(1000, 37))
    ci = stats.binomtest(37, 1000).proportion_ci(0.95, method="exact")
    assert (lo, hi) == pytest.approx((ci.low, ci.high))


def test_ber_comparisons():
    a = rec(1000, 300, bits=3000, sq=3000 * 10)     # 300 frames with 10 errors each
    b = rec(1000, 100, bits=1000, sq=1000 * 10)
    assert ber_greater(a, b) and not ber_greater(b, a)
    assert ber_indistinguishable(a, a)
    assert not ber_indistinguishable(a, b)


def test_ber_std_error_by_frames():
    r = rec(4, 2, bits=20, sq=2 * 10**2)  # errors per frame: 10, 10, 0, 0
    assert ber_std_error(r) == pytest.approx(np.std([10, 10, 0, 0], ddof=1) / 2 / 100)


@pytest.mark.parametrize("T", [1, 2, 3])
def test_storage_reuse_counts(T):
    sm = assign_shifts(build_coupled_protograph(ProtoParams(3, 6, 12)), 31, T, seed=0)
    assert storage_report(sm).shift_count == 6 * T


def test_storage_ratio_43():
    P = build_coupled_protograph(ProtoParams(4, 8, 129))
    full = assign_shifts(P, 400, 129, seed=0)
    reuse = assign_shifts(P, 400, 3, seed=0)
    assert storage_report(full).shift_count == 1032
    assert storage_report(reuse).shift_count == 24
    assert storage_report(full).shift_count / storage_report(reuse).shift_count == 43


def test_storage_bits():
    r = storage_report(SM)
    assert r.shift_bits == r.shift_count * 4  # M = 16
    assert r.explicit_bits == expand(SM).nnz * (max(r.N, r.n_rows) - 1).bit_length()
    plain = storage_report(expand(SM))
    assert plain.shift_count is None and plain.ratio is None and plain.explicit_bits == r.explicit_bits


def test_storage_single_lift():
    p = ProtoParams(2, 4, 4)
    sm = ShiftMatrix(p, 1, 1, {(j, b): 0 for j in range(2) for b in range(p.n_b)}, 0)
    r = storage_report(sm)
    assert r.shift_bits == 0 and r.ratio == math.inf
