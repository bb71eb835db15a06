"""Command-line front end: construct, analyze, simulate, threshold, storage.

Every file written is produced atomically (temp file + rename) and paired with
a ``.manifest`` of sorted ``key=value`` lines: command, parameters, derived
seeds, tool version and sha256 checksums of inputs and outputs.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import logging
import os
import sys
import tempfile
from fractions import Fraction
from pathlib import Path

from . import __version__
from .errors import HypothesisNotMetError, InvalidParamsError, SCLDPCError

EXIT_USAGE = 2


# -- helpers ------------------------------------------------------------------


def derive_seed(seed: int, label: str) -> int:
    """Subordinate seed for one named consumer of the master seed."""
    digest = hashlib.sha256(f"{label}:{seed}".encode()).digest()
    return int.from_bytes(digest[:8], "big") >> 1


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def parse_snr_grid(text: str) -> list[float]:
    """``start:step:stop`` (inclusive), a comma list, or a single value."""
    text = text.strip()
    if not text:
        raise argparse.ArgumentTypeError("empty SNR grid")
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise argparse.ArgumentTypeError(f"expected start:step:stop, got {text!r}")
        try:
            start, step, stop = (Fraction(p.strip()) for p in parts)
        except ValueError as exc:
            raise argparse.ArgumentTypeError(f"bad SNR grid {text!r}") from exc
        if step <= 0 or stop < start:
            raise argparse.ArgumentTypeError("SNR grid needs step > 0 and stop >= start")
        n = int((stop - start) / step)
        return [float(start + k * step) for k in range(n + 1)]
    try:
        return [float(p) for p in text.split(",")]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad SNR list {text!r}") from exc


def parse_lengths(text: str) -> list[int]:
    """``a..b[:step]``, a comma list, or a single integer."""
    try:
        if ".." in text:
            span, _, step = text.partition(":")
            a, b = (int(v) for v in span.split(".."))
            step = int(step) if step else 1
            if step <= 0 or b < a:
                raise ValueError
            return list(range(a, b + 1, step))
        return [int(v) for v in text.split(",")]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad coupling length(s) {text!r}") from exc


def positive_float(text: str) -> float:
    try:
        v = float(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from exc
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be > 0, got {text!r}")
    return v


def positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from exc
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {text!r}")
    return v


def int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad integer list {text!r}") from exc


class Outputs:
    """Collect output files, then publish them (and a manifest) all at once."""

    def __init__(self, command: str, params: dict):
        self.command = command
        self.params = params
        self.inputs: dict[str, Path] = {}
        self.files: list[tuple[Path, bytes]] = []

    def add(self, path, data: str | bytes):
        self.files.append((Path(path), data.encode() if isinstance(data, str) else data))

    def manifest_text(self) -> str:
        entries = {"command": self.command, "tool_version": __version__}
        for k, v in self.params.items():
            entries[f"param.{k}"] = v
        for k, p in self.inputs.items():
            entries[f"input.{k}"] = p.name
            entries[f"input.{k}.sha256"] = sha256_file(p)
        for p, data in self.files:
            entries[f"output.{p.name}.sha256"] = hashlib.sha256(data).hexdigest()
        return "".join(f"{k}={entries[k]}\n" for k in sorted(entries))

    def publish(self, manifest_path):
        staged = self.files + [(Path(manifest_path), self.manifest_text().encode())]
        temps = []
        try:
            for path, data in staged:
                path.parent.mkdir(parents=True, exist_ok=True)
                fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
                with os.fdopen(fd, "wb") as fh:
                    fh.write(data)
                temps.append((tmp, path))
            for tmp, path in temps:
                os.replace(tmp, path)
        except BaseException:
            for tmp, _ in temps:
                if os.path.exists(tmp):
                    os.unlink(tmp)
            raise


def _fmt_rate(r: Fraction) -> str:
    return f"r={float(r):.6f} ({r.numerator}/{r.denominator})"


# -- commands -------------------------------------------------------------------


def cmd_construct(args) -> int:
    from .alist import dumps_alist
    from .peg import peg_construct
    from .protograph import ProtoParams, build_coupled_protograph, code_params
    from .qc import assign_shifts, expand

    params = ProtoParams(args.dl, args.dr, args.L)
    if args.M < 1:
        raise InvalidParamsError("M must be >= 1")
    proto = build_coupled_protograph(params)
    N, rate = code_params(params, args.M)
    manifest = {"d_l": args.dl, "d_r": args.dr, "L": args.L, "M": args.M, "seed": args.seed}
    prefix = Path(args.out)
    lines = [f"N={N} {_fmt_rate(rate)}"]
    if args.peg:
        peg_seed = derive_seed(args.seed, "construct.peg")
        manifest.update(method="peg", peg_seed=peg_seed)
        H = peg_construct(proto, N, seed=peg_seed)
        out = Outputs("construct", manifest)
    else:
        if args.T is None:
            raise InvalidParamsError("-T is required unless --peg is given")
        shift_seed = derive_seed(args.seed, "construct.shifts")
        manifest.update(method="qc", T=args.T, shift_seed=shift_seed, max_attempts=args.max_attempts)
        sm = assign_shifts(proto, args.M, args.T, seed=shift_seed, max_attempts=args.max_attempts)
        H = expand(sm)
        out = Outputs("construct", manifest)
        out.add(Path(str(prefix) + ".shift"), sm.dumps())
        lines.append(f"shift_count={sm.n_distinct_slots}")
        if not sm.period_divides_L:
            lines.append(f"note: L={args.L} is not a multiple of T={args.T}; the last period is partial")
    if args.rank:
        from .sparse import actual_rate

        lines.append(f"actual_rate={float(actual_rate(H)):.6f}")
    out.add(Path(str(prefix) + ".alist"), dumps_alist(H))
    out.publish(Path(str(prefix) + ".manifest"))
    print("\n".join(lines))
    return 0


def _load(path):
    from .io import read_matrix

    return read_matrix(path)


def cmd_analyze(args) -> int:
    from .cycles import count_cycles, find_reuse_inevitable_cycle, girth, qc_girth, shortest_reuse_inevitable_cycle
    from .qc import ShiftMatrix, expand

    src = _load(args.input)
    is_qc = isinstance(src, ShiftMatrix)
    H = expand(src) if is_qc else src
    g = qc_girth(src, cap=args.girth_cap, H=H) if is_qc else girth(H, cap=args.girth_cap)
    lines = [f"girth={g}"]
    for length in args.count:
        lines.append(f"cycles_{length}={count_cycles(H, length)}")
    if args.witness:
        if not is_qc:
            lines.append("witness: none (explicit matrix, no circulant structure)")
        else:
            try:
                w = find_reuse_inevitable_cycle(src)
            except HypothesisNotMetError as exc:
                lines.append(f"witness: outside the reuse bounds ({exc})")
                w = shortest_reuse_inevitable_cycle(src)
                if w is None:
                    lines.append("witness: no reuse-forced cycle up to length 12")
            if w is not None:
                lines.append(w.certificate().rstrip("\n"))
    text = "\n".join(lines) + "\n"
    if args.out:
        out = Outputs("analyze", {"girth_cap": args.girth_cap, "count": ",".join(map(str, args.count)),
                                  "witness": int(args.witness)})
        out.inputs["matrix"] = Path(args.input)
        out.add(args.out, text)
        out.publish(Path(str(args.out) + ".manifest"))
    sys.stdout.write(text)
    return 0


def cmd_simulate(args) -> int:
    from .simulate import SimConfig, records_to_csv, run_ber

    seed = derive_seed(args.seed, "simulate.frames")
    cfg = SimConfig(args.input, args.snr, args.max_iters, args.min_word_errors, args.max_frames, seed,
                    args.workers)
    text = records_to_csv(run_ber(cfg, clip=args.clip))
    if args.out:
        # workers is left out on purpose: it cannot change the output
        out = Outputs("simulate", {
            "snr": ",".join(repr(s) for s in args.snr), "snr_axis": "EbN0_dB", "max_iters": args.max_iters,
            "min_word_errors": args.min_word_errors, "max_frames": args.max_frames, "seed": args.seed,
            "frame_seed": seed, "clip": args.clip, "codeword": "all-zero", "modulation": "BPSK",
        })
        out.inputs["matrix"] = Path(args.input)
        out.add(args.out, text)
        out.publish(Path(str(args.out) + ".manifest"))
    else:
        sys.stdout.write(text)
    return 0


THRESHOLD_FIELDS = ["d_l", "d_r", "L", "sigma_star", "ebno_star_db", "tolerance", "grid_step"]


def cmd_threshold(args) -> int:
    from .density import DEGrid, ThresholdCache, find_threshold, uncoupled_graph
    from .protograph import ProtoParams

    grid = DEGrid(args.step, args.llr_max)
    cache = ThresholdCache(args.cache) if args.cache else None
    targets = [(None, uncoupled_graph(args.dl, args.dr))] if args.uncoupled else [
        (L, ProtoParams(args.dl, args.dr, L)) for L in args.L]
    if not args.uncoupled and not args.L:
        raise InvalidParamsError("-L is required unless --uncoupled is given")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(THRESHOLD_FIELDS)
    for L, target in targets:
        kwargs = dict(tolerance=args.tol, grid=grid, bracket=tuple(args.bracket), max_iters=args.max_iters,
                      target_error=args.target_error)
        res = cache.get_or_compute(target, **kwargs) if cache else find_threshold(target, **kwargs)
        w.writerow([args.dl, args.dr, "" if L is None else L, repr(res.sigma_star), repr(res.ebno_star_db),
                    repr(args.tol), repr(grid.step)])
        logging.getLogger(__name__).info("L=%s sigma*=%.6f", L, res.sigma_star)
    text = buf.getvalue()
    if args.out:
        out = Outputs("threshold", {
            "d_l": args.dl, "d_r": args.dr, "L": "uncoupled" if args.uncoupled else ",".join(map(str, args.L)),
            "tol": args.tol, "step": args.step, "llr_max": args.llr_max, "bracket": f"{args.bracket[0]}:{args.bracket[1]}",
            "max_iters": args.max_iters, "target_error": args.target_error,
        })
        out.add(args.out, text)
        out.publish(Path(str(args.out) + ".manifest"))
    else:
        sys.stdout.write(text)
    return 0


def cmd_storage(args) -> int:
    from .simulate import storage_report

    text = "\n".join(storage_report(_load(args.input)).lines()) + "\n"
    if args.out:
        out = Outputs("storage", {})
        out.inputs["matrix"] = Path(args.input)
        out.add(args.out, text)
        out.publish(Path(str(args.out) + ".manifest"))
    sys.stdout.write(text)
    return 0


# -- parser ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="scldpc", description="Reuse-periodic QC spatially coupled LDPC toolkit.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="progress messages on stderr")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("construct", help="build a QC SC-LDPC (or coupled PEG) code")
    c.add_argument("--dl", type=int, required=True)
    c.add_argument("--dr", type=int, required=True)
    c.add_argument("-L", type=int, required=True)
    c.add_argument("-M", type=int, required=True, help="circulant size (PEG: lifting factor)")
    c.add_argument("-T", type=int, help="reuse period")
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--peg", action="store_true", help="coupled PEG instead of circulants")
    c.add_argument("--max-attempts", type=positive_int, default=1000)
    c.add_argument("--rank", action="store_true", help="also report 1 - rank(H)/N (dense GF(2) elimination)")
    c.add_argument("--out", default="code", help="output prefix (default: code)")
    c.set_defaults(func=cmd_construct)

    a = sub.add_parser("analyze", help="girth, cycle counts, reuse witnesses")
    a.add_argument("--in", dest="input", required=True)
    a.add_argument("--girth-cap", type=positive_int, default=16)
    a.add_argument("--count", type=int_list, default=[], help="cycle lengths to count, e.g. 6,8")
    a.add_argument("--witness", action="store_true")
    a.add_argument("--out")
    a.set_defaults(func=cmd_analyze)

    s = sub.add_parser("simulate", help="Monte Carlo BER/WER over BI-AWGN")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--snr", type=parse_snr_grid, required=True, help="Eb/N0 grid in dB, start:step:stop")
    s.add_argument("--max-iters", type=positive_int, default=1000)
    s.add_argument("--min-word-errors", type=positive_int, default=50)
    s.add_argument("--max-frames", type=positive_int, default=100_000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--workers", type=positive_int, default=1)
    s.add_argument("--clip", type=positive_float, default=30.0)
    s.add_argument("--out")
    s.set_defaults(func=cmd_simulate)

    t = sub.add_parser("threshold", help="density-evolution BP thresholds")
    t.add_argument("--dl", type=int, required=True)
    t.add_argument("--dr", type=int, required=True)
    t.add_argument("-L", type=parse_lengths, default=[], help="length, list, or sweep a..b[:step]")
    t.add_argument("--uncoupled", action="store_true")
    t.add_argument("--tol", type=positive_float, default=1e-3)
    t.add_argument("--step", type=positive_float, default=0.05, help="LLR grid step")
    t.add_argument("--llr-max", type=positive_float, default=30.0)
    t.add_argument("--bracket", type=positive_float, nargs=2, default=[0.5, 1.2], metavar=("LO", "HI"))
    t.add_argument("--max-iters", type=positive_int, default=5000)
    t.add_argument("--target-error", type=positive_float, default=1e-6)
    t.add_argument("--cache", help="JSON file of previously computed thresholds")
    t.add_argument("--out")
    t.set_defaults(func=cmd_threshold)

    st = sub.add_parser("storage", help="shift-value vs explicit storage cost")
    st.add_argument("--in", dest="input", required=True)
    st.add_argument("--out")
    st.set_defaults(func=cmd_storage)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except SCLDPCError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
