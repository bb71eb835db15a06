"""End-to-end acceptance checks; a PASS/FAIL line per criterion is printed in the terminal summary."""

import math
import os
import subprocess
import sys
import timeit
from fractions import Fraction

import numpy as np
import pytest

from oracles import codewords, dense_syndrome, small_code
from scldpc.cycles import cycle_exists, eq3_min_cycle, find_reuse_inevitable_cycle, girth, qc_girth
from scldpc.decoder import SumProductDecoder
from scldpc.density import ebno_db
from scldpc.protograph import ProtoParams, build_coupled_protograph, code_params
from scldpc.qc import ShiftMatrix, assign_shifts, expand
from scldpc.simulate import SimConfig, ber_greater, ber_indistinguishable, run_ber, storage_report
from threshold_sweep import LARGE_L, SWEEP_L, TOL, thresholds


def report(n, ok, detail=""):
    print(f"criterion {n}: {'PASS' if ok else 'FAIL'} {detail}".rstrip())
    assert ok, detail


# -- 1 -------------------------------------------------------------------------


@pytest.mark.criterion(1)
def test_parameter_fidelity():
    p = ProtoParams(4, 8, 129)
    N, r = code_params(p, 400)
    seconds = min(timeit.repeat(lambda: code_params(p, 400), number=100, repeat=5)) / 100
    report(1, N == 103200 and r == Fraction(126, 258) and round(float(r), 3) == 0.488 and seconds < 1e-3,
           f"N={N} r={r} ({seconds * 1e6:.1f} us)")


# -- 2 -------------------------------------------------------------------------

REUSE_BOUNDS = [(1, 3, 6, 6), (2, 4, 8, 8), (3, 4, 8, 10)]  # (T, d_l, d_r, girth bound)


@pytest.mark.criterion(2)
@pytest.mark.slow
@pytest.mark.parametrize("T,dl,dr,bound", REUSE_BOUNDS)
def test_reuse_girth_bounds(T, dl, dr, bound):
    failures = []
    for seed in range(100):
        rng = np.random.default_rng([T, seed])
        L = int(rng.integers(max(dl, 2 * T) + 1, 17))
        M = int(rng.integers(16, 65))
        sm = assign_shifts(build_coupled_protograph(ProtoParams(dl, dr, L)), M, T, seed=seed)
        H = expand(sm)
        g = qc_girth(sm, cap=bound, H=H)
        w = find_reuse_inevitable_cycle(sm)
        edges = {(r, c) for c, rows in enumerate(H.col_adjacency) for r in rows}
        nodes = w.expanded_instance
        walk_ok = all(((b, a) if ka == "bit" else (a, b)) in edges for (ka, a), (_, b) in zip(nodes, nodes[1:]))
        ok = (g.at_most(bound) and w.length <= bound and w.path.alternating_sum() % M == 0
              and cycle_exists(w.path, M) and nodes[0] == nodes[-1] and walk_ok)
        if not ok:
            failures.append((seed, L, M, str(g), w.length))
    report(2, not failures, f"T={T} d_l={dl}: {100 - len(failures)}/100 seeds within girth {bound}")


# -- 3 -------------------------------------------------------------------------


def small_instances(draws=3):
    for dl, dr in ((3, 6), (4, 8)):
        for L in range(dl, 9):
            p = ProtoParams(dl, dr, L)
            for M in range(1, 17):
                for T in sorted({1, 2, 3, L}):
                    if T > L:
                        continue
                    for k in range(draws):
                        rng = np.random.default_rng([dl, L, M, T, k])
                        keys = sorted((j, c) for j in range(dl) for c in range(T * p.n_b))
                        yield ShiftMatrix(p, M, T, {key: int(rng.integers(M)) for key in keys}, k)


@pytest.mark.criterion(3)
@pytest.mark.slow
def test_oracle_equivalence_sweep():
    total, mismatches = 0, []
    for sm in small_instances():
        total += 1
        bfs = girth(expand(sm), cap=12).value
        eq3 = eq3_min_cycle(sm, max_length=12)[0]
        if bfs != eq3:
            mismatches.append((sm.params, sm.M, sm.T, bfs, eq3))
    report(3, not mismatches, f"{total - len(mismatches)}/{total} instances agree")


# -- 4 -------------------------------------------------------------------------

C4_SNR_DB = 1.75
C4_ITERS = 200
C4_ERRORS = 200
C4_SEED = 2024


@pytest.fixture(scope="module")
def ber_by_period():
    P = build_coupled_protograph(ProtoParams(3, 6, 16))
    out = {}
    for T in (1, 2, 3, 16):
        cfg = SimConfig(assign_shifts(P, 64, T, seed=0), [C4_SNR_DB], max_iterations=C4_ITERS,
                        min_word_errors=C4_ERRORS, max_frames=10**6, master_seed=C4_SEED)
        out[T], = run_ber(cfg)
        assert out[T].word_errors >= C4_ERRORS
    return out


@pytest.mark.criterion(4)
@pytest.mark.slow
def test_ber_reuse1_worse_than_reuse3(ber_by_period):
    a, b = ber_by_period[1], ber_by_period[3]
    report(4, ber_greater(a, b), f"BER(T=1)={a.ber:.3e} > BER(T=3)={b.ber:.3e}")


@pytest.mark.criterion(4)
@pytest.mark.slow
def test_ber_reuse2_worse_than_reuse3(ber_by_period):
    a, b = ber_by_period[2], ber_by_period[3]
    report(4, ber_greater(a, b), f"BER(T=2)={a.ber:.3e} > BER(T=3)={b.ber:.3e}")


@pytest.mark.criterion(4)
@pytest.mark.slow
def test_ber_reuse3_matches_unconstrained(ber_by_period):
    a, b = ber_by_period[3], ber_by_period[16]
    report(4, ber_indistinguishable(a, b), f"BER(T=3)={a.ber:.3e} ~ BER(T=L)={b.ber:.3e}")


# -- 5 -------------------------------------------------------------------------


@pytest.fixture(scope="module")
def sweep():
    return thresholds()


def ebno_slack(sigma):
    # an Eb/N0 difference the sigma bisection tolerance cannot resolve
    return 20 * math.log10((sigma + TOL) / sigma)


@pytest.mark.criterion(5)
@pytest.mark.slow
def test_coupling_gain_needs_long_chains(sweep):
    """Rate-normalised reading: Eb/N0*(L) improves with L and beats the uncoupled code from L = 33 on."""
    base = sweep[(3, 6, "uncoupled")].ebno_star_db
    Ls = sorted(SWEEP_L + (LARGE_L,))
    eb = [sweep[(3, 6, L)].ebno_star_db for L in Ls]
    slack = ebno_slack(min(sweep[(3, 6, L)].sigma_star for L in Ls))
    improving = all(b <= a + slack for a, b in zip(eb, eb[1:]))
    long_ok = all(e < base for L, e in zip(Ls, eb) if L >= 33)
    short_fails = any(e >= base for L, e in zip(Ls, eb) if L <= 10)
    table = " ".join(f"L={L}:{e:.3f}" for L, e in zip(Ls, eb))
    report(5, improving and long_ok and short_fails, f"uncoupled {base:.3f} dB; {table}")


@pytest.mark.criterion(5)
@pytest.mark.slow
def test_larger_variable_degree_improves_threshold(sweep):
    a, b = sweep[(4, 8, LARGE_L)], sweep[(3, 6, LARGE_L)]
    report(5, a.sigma_star >= b.sigma_star and a.ebno_star_db <= b.ebno_star_db,
           f"sigma*(4,8)={a.sigma_star:.4f} vs sigma*(3,6)={b.sigma_star:.4f}")


@pytest.mark.criterion(5)
@pytest.mark.slow
@pytest.mark.xfail(strict=True, reason="in raw sigma, rate loss makes short chains look best")
def test_sigma_threshold_nondecreasing_in_L(sweep):
    base = sweep[(3, 6, "uncoupled")].sigma_star
    Ls = sorted(SWEEP_L + (LARGE_L,))
    sig = [sweep[(3, 6, L)].sigma_star for L in Ls]
    assert all(b >= a - TOL for a, b in zip(sig, sig[1:]))
    assert any(s <= base for L, s in zip(Ls, sig) if L < 33)


# -- 6 -------------------------------------------------------------------------


@pytest.mark.criterion(6)
def test_storage_model():
    counts = [storage_report(assign_shifts(build_coupled_protograph(ProtoParams(3, 6, 12)), 31, T)).shift_count
              for T in (1, 2, 3)]
    P = build_coupled_protograph(ProtoParams(4, 8, 129))
    full, reuse = assign_shifts(P, 400, 129), assign_shifts(P, 400, 3)
    seconds = min(timeit.repeat(lambda: storage_report(full), number=100, repeat=5)) / 100
    ratio = Fraction(storage_report(full).shift_count, storage_report(reuse).shift_count)
    report(6, counts == [6, 12, 18] and ratio == 43 and storage_report(full).shift_count == 1032
           and seconds < 1e-3, f"counts={counts} ratio={ratio} ({seconds * 1e6:.1f} us)")


# -- 7 -------------------------------------------------------------------------


@pytest.mark.criterion(7)
def test_decoder_against_exhaustive_ml():
    H = small_code()
    D = H.to_dense()
    C = codewords(D)
    k = int(math.log2(len(C)))
    rng = np.random.default_rng(7)
    sigma, frames = 0.5, 10_000
    words = C[rng.integers(len(C), size=frames)]
    llr = 2 * ((1 - 2.0 * words) + sigma * rng.standard_normal(words.shape)) / sigma**2
    hard, ok, _, _ = SumProductDecoder(H).decode_batch(llr, 100)
    ml = C[np.argmin(llr @ C.T.astype(np.float64), axis=1)]
    agree = float((hard == ml).all(axis=1).mean())
    flag_ok = bool(np.array_equal(ok, ~dense_syndrome(D, hard).any(axis=1)))
    report(7, k <= 12 and agree >= 0.99 and flag_ok,
           f"k={k} agreement={agree:.4f} over {frames} frames, flag==zero-syndrome: {flag_ok}")


# -- 8 -------------------------------------------------------------------------


def cli(args, cwd):
    env = dict(os.environ, PYTHONHASHSEED="random")
    res = subprocess.run([sys.executable, "-m", "scldpc", *args], cwd=cwd, env=env, capture_output=True)
    assert res.returncode == 0, res.stderr.decode()
    return res.stdout


def snapshot(d):
    return {p.name: p.read_bytes() for p in sorted(d.iterdir())}


@pytest.mark.criterion(8)
@pytest.mark.slow
def test_cli_reproducibility(tmp_path):
    runs = []
    for name, workers in (("a", "1"), ("b", "1"), ("c", "2"), ("d", "3")):
        d = tmp_path / name
        d.mkdir()
        out = cli(["construct", "--dl", "3", "--dr", "6", "-L", "8", "-M", "16", "-T", "3", "--seed", "4",
                   "--out", "code"], d)
        out += cli(["analyze", "--in", "code.shift", "--count", "6", "--witness", "--out", "report.txt"], d)
        out += cli(["storage", "--in", "code.shift", "--out", "storage.txt"], d)
        out += cli(["simulate", "--in", "code.alist", "--snr", "1:0.5:2", "--max-iters", "30",
                    "--min-word-errors", "10", "--max-frames", "256", "--seed", "9", "--workers", workers,
                    "--out", "ber.csv"], d)
        out += cli(["threshold", "--dl", "3", "--dr", "6", "--uncoupled", "--tol", "0.01",
                    "--bracket", "0.7", "1.0", "--out", "de.csv"], d)
        runs.append((out, snapshot(d)))
    same = all(r == runs[0] for r in runs[1:])
    report(8, same, f"{len(runs[0][1])} files identical across 4 runs (workers 1, 1, 2, 3)")
