"""BI-AWGN Monte Carlo BER/WER harness and the parity-check storage model."""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats

from .decoder import SumProductDecoder
from .errors import InvalidParamsError, MatrixFormatError
from .qc import ShiftMatrix, expand
from .sparse import SparseBinaryMatrix

CSV_FIELDS = ["snr_db", "frames", "bit_errors", "word_errors", "ber", "wer", "avg_iterations", "censored"]

# Frames are decoded in fixed blocks so that floating-point work per frame does
# not depend on the worker count.
CHUNK_FRAMES = 32


def noise_sigma(snr_db: float, rate: float) -> float:
    """Noise std for BPSK at the given Eb/N0 (dB) and code rate."""
    if not 0 < rate < 1:
        raise InvalidParamsError(f"code rate must lie in (0, 1), got {rate}")
    if not math.isfinite(snr_db):
        raise InvalidParamsError(f"Eb/N0 must be finite, got {snr_db}")
    return (2.0 * rate * 10.0 ** (snr_db / 10.0)) ** -0.5


def frame_stream(master_seed: int, snr_index: int, frame_index: int) -> np.random.Generator:
    """Counter-based RNG stream for one frame."""
    ss = np.random.SeedSequence(entropy=master_seed, spawn_key=(snr_index, frame_index))
    return np.random.Generator(np.random.PCG64(ss))


def awgn_llr(snr_db: float, rate: float, n_bits: int, stream: np.random.Generator) -> np.ndarray:
    """Channel LLRs for the all-zero codeword sent as +1 over BI-AWGN.

    Gaussian samples come from numpy's ziggurat sampler.
    """
    if n_bits < 0:
        raise InvalidParamsError("n_bits must be >= 0")
    sigma = noise_sigma(snr_db, rate)
    y = 1.0 + sigma * stream.standard_normal(n_bits)
    return 2.0 * y / sigma**2


@dataclass
class SimConfig:
    matrix_source: object  # ShiftMatrix, SparseBinaryMatrix, or a path
    snr_points: list
    max_iterations: int = 1000
    min_word_errors: int = 50
    max_frames: int = 100_000
    master_seed: int = 0
    workers: int = 1
    rate: float | None = None

    def __post_init__(self):
        self.snr_points = [float(s) for s in self.snr_points]
        if not self.snr_points:
            raise InvalidParamsError("snr_points must not be empty")
        if self.min_word_errors < 1:
            raise InvalidParamsError("min_word_errors must be >= 1")
        if self.max_frames < 1:
            raise InvalidParamsError("max_frames must be >= 1")
        if self.max_iterations < 1:
            raise InvalidParamsError("max_iterations must be >= 1")
        if self.workers < 1:
            raise InvalidParamsError("workers must be >= 1")


@dataclass
class BerRecord:
    snr_db: float
    frames: int
    bit_errors: int
    word_errors: int
    ber: float
    wer: float
    avg_iterations: float
    censored: bool
    n_bits: int = field(default=0, repr=False)
    bit_errors_sq: int = field(default=0, repr=False)  # sum over frames of (bit errors)^2

    def as_row(self) -> list:
        return [repr(self.snr_db), self.frames, self.bit_errors, self.word_errors,
                repr(self.ber), repr(self.wer), repr(self.avg_iterations), int(self.censored)]


def load_matrix(source):
    """Return (H, design rate) for a ShiftMatrix, SparseBinaryMatrix, or file path."""
    from .io import read_matrix

    if isinstance(source, (str, Path)):
        source = read_matrix(source)
    if isinstance(source, ShiftMatrix):
        return expand(source), float(source.params.design_rate)
    if isinstance(source, SparseBinaryMatrix):
        if source.n_cols == 0:
            raise MatrixFormatError("matrix has no columns")
        return source, 1.0 - source.n_rows / source.n_cols
    raise TypeError(f"unsupported matrix source {type(source).__name__}")


_WORKER = {}


def _init_worker(H, clip):
    _WORKER["dec"] = SumProductDecoder(H, clip)


def _run_chunk(args):
    snr_db, rate, seed, snr_index, start, stop, max_iterations = args
    dec = _WORKER["dec"]
    n = dec.H.n_cols
    llrs = np.empty((stop - start, n))
    for row, f in enumerate(range(start, stop)):
        llrs[row] = awgn_llr(snr_db, rate, n, frame_stream(seed, snr_index, f))
    hard, ok, its, _ = dec.decode_batch(llrs, max_iterations)
    bit_err = hard.sum(axis=1).astype(np.int64)
    word_err = (~ok) | (bit_err > 0)
    return bit_err, word_err, its


def _simulate_point(run_chunk, cfg, snr_index, snr_db, rate, n_bits, submit_many):
    bit_err, word_err, its = [], [], []
    n_word = 0
    start = 0
    while start < cfg.max_frames and n_word < cfg.min_word_errors:
        jobs = []
        for _ in range(cfg.workers):
            if start >= cfg.max_frames:
                break
            stop = min(start + CHUNK_FRAMES, cfg.max_frames)
            jobs.append((snr_db, rate, cfg.master_seed, snr_index, start, stop, cfg.max_iterations))
            start = stop
        for b, w, i in submit_many(jobs):
            bit_err.append(b)
            word_err.append(w)
            its.append(i)
            n_word += int(w.sum())
    b = np.concatenate(bit_err)
    w = np.concatenate(word_err)
    i = np.concatenate(its)
    cum = np.cumsum(w)
    censored = True
    if cum.size and cum[-1] >= cfg.min_word_errors:
        # keep exactly the frame prefix that reaches the target
        stop = int(np.searchsorted(cum, cfg.min_word_errors)) + 1
        b, w, i = b[:stop], w[:stop], i[:stop]
        censored = False
    frames = int(b.size)
    bit_errors = int(b.sum())
    word_errors = int(w.sum())
    return BerRecord(
        snr_db=snr_db,
        frames=frames,
        bit_errors=bit_errors,
        word_errors=word_errors,
        ber=bit_errors / (frames * n_bits),
        wer=word_errors / frames,
        avg_iterations=float(i.sum()) / frames,
        censored=censored,
        n_bits=n_bits,
        bit_errors_sq=int((b * b).sum()),
    )


def run_ber(cfg: SimConfig, clip: float = 30.0) -> list[BerRecord]:
    """Simulate every SNR point until ``min_word_errors`` or ``max_frames``.

    Frame f at SNR index i always uses stream (master_seed, i, f), and the
    result is the shortest frame prefix reaching the word-error target, so the
    output does not depend on ``workers``.
    """
    H, design_rate = load_matrix(cfg.matrix_source)
    rate = cfg.rate if cfg.rate is not None else design_rate
    if not 0 < rate < 1:
        raise InvalidParamsError(f"code rate {rate} is not in (0, 1)")
    order = sorted(range(len(cfg.snr_points)), key=lambda k: cfg.snr_points[k])
    records = []
    if cfg.workers == 1:
        _init_worker(H, clip)
        submit = lambda jobs: [_run_chunk(j) for j in jobs]  # noqa: E731
        for k in order:
            records.append(_simulate_point(_run_chunk, cfg, k, cfg.snr_points[k], rate, H.n_cols, submit))
        return records
    with ProcessPoolExecutor(cfg.workers, initializer=_init_worker, initargs=(H, clip)) as pool:
        submit = lambda jobs: list(pool.map(_run_chunk, jobs))  # noqa: E731
        for k in order:
            records.append(_simulate_point(_run_chunk, cfg, k, cfg.snr_points[k], rate, H.n_cols, submit))
    return records


def records_to_csv(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for r in sorted(records, key=lambda r: r.snr_db):
        w.writerow(r.as_row())
    return buf.getvalue()


def records_from_csv(text: str) -> list[BerRecord]:
    rows = list(csv.DictReader(io.StringIO(text)))
    out = []
    for row in rows:
        out.append(BerRecord(float(row["snr_db"]), int(row["frames"]), int(row["bit_errors"]),
                             int(row["word_errors"]), float(row["ber"]), float(row["wer"]),
                             float(row["avg_iterations"]), bool(int(row["censored"]))))
    return out


# -- statistics -----------------------------------------------------------------


def wer_interval(rec: BerRecord, confidence: float = 0.95) -> tuple[float, float]:
    """Clopper-Pearson interval for the word error rate."""
    k, n = rec.word_errors, rec.frames
    a = 1 - confidence
    lo = 0.0 if k == 0 else stats.beta.ppf(a / 2, k, n - k + 1)
    hi = 1.0 if k == n else stats.beta.ppf(1 - a / 2, k + 1, n - k)
    return float(lo), float(hi)


def ber_std_error(rec: BerRecord) -> float:
    """Standard error of the BER with frames as the independent unit.

    Bit errors inside a failed frame come in bursts, so a per-bit binomial
    variance would be far too optimistic.
    """
    f = rec.frames
    mean = rec.bit_errors / f
    var = max(rec.bit_errors_sq / f - mean * mean, 0.0) * f / max(f - 1, 1)
    return math.sqrt(var / f) / rec.n_bits


def ber_greater(a: BerRecord, b: BerRecord, confidence: float = 0.95) -> bool:
    """One-sided test that BER(a) > BER(b)."""
    se = math.hypot(ber_std_error(a), ber_std_error(b))
    diff = a.ber - b.ber
    if se == 0:
        return diff > 0
    return diff / se > stats.norm.ppf(confidence)


def ber_indistinguishable(a: BerRecord, b: BerRecord, confidence: float = 0.95) -> bool:
    """Two-sided test fails to separate BER(a) and BER(b)."""
    se = math.hypot(ber_std_error(a), ber_std_error(b))
    if se == 0:
        return a.ber == b.ber
    return abs(a.ber - b.ber) / se <= stats.norm.ppf(1 - (1 - confidence) / 2)


# -- storage model ----------------------------------------------------------------


@dataclass(frozen=True)
class StorageReport:
    N: int
    n_rows: int
    ones: int
    shift_count: int | None
    shift_bits: int | None
    explicit_bits: int
    M: int | None = None

    @property
    def ratio(self) -> float | None:
        if self.shift_bits is None:
            return None
        if self.shift_bits == 0:
            return math.inf
        return self.explicit_bits / self.shift_bits

    def lines(self) -> list[str]:
        out = [f"N={self.N}", f"rows={self.n_rows}", f"ones={self.ones}"]
        if self.shift_count is not None:
            out += [f"M={self.M}", f"shift_count={self.shift_count}", f"shift_bits={self.shift_bits}"]
        out.append(f"explicit_bits={self.explicit_bits}")
        if self.ratio is not None:
            out.append(f"ratio={self.ratio:.6g}")
        return out


def _index_bits(n: int) -> int:
    return max(int(n) - 1, 0).bit_length()  # ceil(log2 n)


def storage_report(source) -> StorageReport:
    """Bits to store the shift values versus explicit adjacency indices."""
    if isinstance(source, ShiftMatrix):
        p = source.params
        M = source.M
        N = p.n_b * p.L * M
        rows = p.n_check_groups * p.n_c * M
        ones = N * p.d_l
        count = min(source.T, p.L) * p.n_b * p.d_l
        return StorageReport(N, rows, ones, count, count * _index_bits(M),
                             ones * _index_bits(max(N, rows)), M)
    if isinstance(source, SparseBinaryMatrix):
        N, rows = source.n_cols, source.n_rows
        return StorageReport(N, rows, source.nnz, None, None, source.nnz * _index_bits(max(N, rows)))
    raise TypeError(f"unsupported input {type(source).__name__}")
