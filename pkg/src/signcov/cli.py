"""Command-line interface: ``signcov {test, nulldist, power, simulate}``.

Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical-precision
failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from typing import Sequence, TextIO

import numpy as np

from . import __version__
from .estimator import InsufficientSampleError, PairedSample
from .inference import (
    DegenerateMarginalError,
    MarginalSpec,
    PowerRequest,
    critical_value,
    power_normal_approx,
    sample_size,
    test_asymptotic,
    test_permutation,
)
from .nulldist import NullDistribution, PrecisionError
from .simulate import (
    BivariateNormal,
    DiscreteGrid,
    GridPattern,
    Independent,
    MixedMeanShift,
    convergence_study,
    power_study,
    tau_star_curve,
    to_csv,
    to_json,
)
from .spectrum import (
    DEFAULT_EPS,
    DiscreteMarginal,
    EigenSolverError,
    InvalidMarginalError,
    spectrum_continuous,
    spectrum_discrete,
    spectrum_mixed,
)

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_PRECISION = 0, 2, 3, 4
SCHEMA = 1


class DataError(Exception):
    """Unreadable or malformed input data."""


class UsageError(Exception):
    """Invalid combination or value of options."""


# -- input ------------------------------------------------------------------

def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def read_pairs(stream: TextIO) -> PairedSample:
    """Parse two numeric columns; a non-numeric first line is a header.

    Blank lines are skipped.  Raises :class:`DataError` naming the first
    offending line.
    """
    xs, ys = [], []
    for lineno, row in enumerate(csv.reader(stream), start=1):
        if not row or all(not c.strip() for c in row):
            continue
        cells = [c.strip() for c in row]
        if lineno == 1 and not all(_is_number(c) for c in cells):
            continue
        if len(cells) != 2:
            raise DataError(f"line {lineno}: expected 2 columns, found {len(cells)}")
        try:
            x, y = float(cells[0]), float(cells[1])
        except ValueError:
            raise DataError(f"line {lineno}: non-numeric value") from None
        if not (math.isfinite(x) and math.isfinite(y)):
            raise DataError(f"line {lineno}: non-finite value")
        xs.append(x)
        ys.append(y)
    return PairedSample(np.array(xs), np.array(ys))


def write_pairs(sample: PairedSample, stream: TextIO, header: bool = True) -> None:
    """Write a sample as two-column CSV (values in shortest round-trip form)."""
    if header:
        stream.write("x,y\n")
    for x, y in zip(sample.xs, sample.ys):
        stream.write(f"{float(x)!r},{float(y)!r}\n")


def _load(path: str) -> PairedSample:
    if path == "-":
        return read_pairs(sys.stdin)
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            return read_pairs(fh)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from None
    except UnicodeDecodeError:
        raise DataError(f"{path} is not UTF-8 text") from None


def _parse_pmf(text: str | None, name: str) -> DiscreteMarginal:
    if not text:
        raise UsageError(f"--{name} is required for a discrete axis")
    try:
        masses = [float(v) for v in text.split(",")]
    except ValueError:
        raise UsageError(f"--{name}: not a comma-separated list of numbers") from None
    try:
        return DiscreteMarginal.from_masses(masses)
    except InvalidMarginalError as exc:
        raise UsageError(f"--{name}: {exc}") from None


def _parse_list(text: str, kind=float) -> list:
    try:
        return [kind(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"cannot parse list {text!r}") from None


# -- output -----------------------------------------------------------------

def _emit(doc: dict, fmt: str, out: TextIO) -> None:
    doc = {"schema": SCHEMA, "version": __version__, **doc}
    if fmt == "json":
        out.write(json.dumps(doc, indent=2, sort_keys=True) + "\n")
        return
    flat = _flatten(doc)
    if fmt == "csv":
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(list(flat.keys()))
        writer.writerow(["" if v is None else v for v in flat.values()])
    else:
        for k, v in flat.items():
            out.write(f"{k}: {v}\n")


def _flatten(d: dict, prefix: str = "") -> dict:
    out = {}
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        elif isinstance(v, (list, tuple)):
            out[key] = ";".join(str(x) for x in v)
        else:
            out[key] = v
    return out


# -- subcommands ------------------------------------------------------------

def cmd_test(args, out: TextIO) -> int:
    if not 0 < args.alpha < 1:
        raise UsageError("--alpha must lie in (0, 1)")
    sample = _load(args.input)
    if sample.n < 4:
        raise InsufficientSampleError(f"insufficient sample: n = {sample.n} < 4")
    spec = MarginalSpec.from_code(args.marginals)
    try:
        if args.method == "asymptotic":
            res = test_asymptotic(sample, spec, eps=args.eps)
        else:
            res = test_permutation(sample, B=args.permutations, seed=args.seed, spec=spec)
    except InvalidMarginalError as exc:
        raise DataError(str(exc)) from None
    body = res.to_dict()
    body["reject"] = res.p_value <= args.alpha
    body["tail_bound"] = None if res.spectrum_summary is None else res.spectrum_summary["tail_bound"]
    _emit({"config": _config(args), "seed": args.seed, **body}, args.format, out)
    return EXIT_OK


def _spectrum_from_args(args):
    code = args.marginals
    if code == "cc":
        return spectrum_continuous(args.eps)
    if code == "dd":
        return spectrum_discrete(_parse_pmf(args.pmf_x, "pmf-x"), _parse_pmf(args.pmf_y, "pmf-y"))
    if code == "dc":
        return spectrum_mixed(_parse_pmf(args.pmf_x, "pmf-x"), args.eps)
    return spectrum_mixed(_parse_pmf(args.pmf_y, "pmf-y"), args.eps)


def cmd_nulldist(args, out: TextIO) -> int:
    spec = _spectrum_from_args(args)
    null = NullDistribution(spec)
    if args.eval == "quantile":
        if not 0 < args.at < 1:
            raise UsageError("quantile level must lie in (0, 1)")
        value = null.quantile(args.at)
    elif args.eval == "cdf":
        value = null.cdf(args.at)
    else:
        value = null.density(args.at)
    summary = spec.summary()
    _emit(
        {"config": _config(args), "seed": None, "eval": args.eval, "at": args.at, "value": value,
         "spectrum": summary, "tail_bound": summary["tail_bound"]},
        args.format,
        out,
    )
    return EXIT_OK


def cmd_power(args, out: TextIO) -> int:
    try:
        req = PowerRequest(args.tau_star, args.sigma1sq_bound, args.alpha, args.beta)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    doc = {
        "config": _config(args),
        "seed": None,
        "critical_value": critical_value(req.spectrum, req.alpha),
        "tail_bound": req.spectrum.tail_bound,
    }
    if args.n is not None:
        doc["n"] = args.n
        doc["power_bound"] = power_normal_approx(req, args.n)
    else:
        doc["sample_size"] = sample_size(req)
    _emit(doc, args.format, out)
    return EXIT_OK


_SCENARIOS = {
    "continuous": lambda level: Independent.continuous(),
    "discrete": lambda level: Independent.discrete_example(),
    "mixed": lambda level: Independent.mixed_example(),
    "normal": lambda level: BivariateNormal(level),
    "grid-diagonal": lambda level: DiscreteGrid(GridPattern.DIAGONAL, level),
    "grid-permutation": lambda level: DiscreteGrid(GridPattern.PERMUTATION, level),
    "grid-lshape": lambda level: DiscreteGrid(GridPattern.LSHAPE, level),
    "bernoulli-shift": MixedMeanShift.bernoulli,
    "uniform6-shift": MixedMeanShift.uniform_six,
}


def cmd_simulate(args, out: TextIO) -> int:
    family = _SCENARIOS[args.scenario]
    if args.reps < 1:
        raise UsageError("--reps must be at least 1")
    if args.study == "curve":
        levels = _parse_list(args.levels) if args.levels else [round(0.1 * k, 1) for k in range(11)]
        result = tau_star_curve(levels, args.n, args.reps, args.seed)
    elif args.study == "convergence":
        sizes = _parse_list(args.sizes, int) if args.sizes else [10, 15, 20, 25, 30, 40, 50, 60, 70, 80]
        if any(n < 4 for n in sizes):
            raise UsageError("sizes must be at least 4")
        level = _parse_list(args.levels)[0] if args.levels else 0.0
        result = convergence_study(family(level), sizes, args.reps, args.seed, eps=args.eps)
    else:
        if args.reps < 100:
            raise UsageError("power studies need --reps >= 100")
        levels = _parse_list(args.levels) if args.levels else [round(0.1 * k, 1) for k in range(11)]
        result = power_study(family, levels, args.n, args.reps, args.alpha, args.seed, eps=args.eps,
                             name=args.scenario)
    meta = {"version": __version__, "config": _config(args), "seed": args.seed}
    if args.study != "convergence":
        meta["tail_bound"] = family(0.0).null_spectrum(args.eps).tail_bound
    text = to_json(result, meta) + "\n" if args.format == "json" else to_csv(result, meta)
    if args.out and args.out != "-":
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        out.write(text)
    return EXIT_OK


def _config(args) -> dict:
    # the output location does not affect results; leaving it out keeps reruns byte-identical
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "out")}


# -- parser -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="signcov", description="Sign-covariance independence tests.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, fmt_choices=("json", "csv", "plain"), default="json"):
        sp.add_argument("--format", choices=fmt_choices, default=default)
        sp.add_argument("--eps", type=float, default=DEFAULT_EPS,
                        help="truncation budget for infinite spectra (omitted weight sum)")

    t = sub.add_parser("test", help="test independence of two columns in a CSV file")
    t.add_argument("input", help="CSV path, or - for stdin")
    t.add_argument("--marginals", choices=["auto", "cc", "dd", "dc", "cd"], default="auto")
    t.add_argument("--method", choices=["asymptotic", "permutation"], default="asymptotic")
    t.add_argument("--alpha", type=float, default=0.05)
    t.add_argument("--permutations", type=int, default=999)
    t.add_argument("--seed", type=int, default=0)
    common(t)
    t.set_defaults(func=cmd_test)

    nd = sub.add_parser("nulldist", help="evaluate the asymptotic null law of n*t*")
    nd.add_argument("--marginals", choices=["cc", "dd", "dc", "cd"], default="cc")
    nd.add_argument("--pmf-x", help="comma-separated masses of a discrete x")
    nd.add_argument("--pmf-y", help="comma-separated masses of a discrete y")
    nd.add_argument("--eval", choices=["cdf", "quantile", "density"], default="cdf")
    nd.add_argument("--at", type=float, required=True)
    common(nd)
    nd.set_defaults(func=cmd_nulldist)

    pw = sub.add_parser("power", help="sample size or power bound from a normal approximation")
    pw.add_argument("--tau-star", type=float, required=True)
    pw.add_argument("--sigma1sq-bound", type=float, default=0.25)
    pw.add_argument("--alpha", type=float, default=0.05)
    pw.add_argument("--beta", type=float, default=0.8)
    pw.add_argument("--n", type=int, help="report the power bound at this n instead of a sample size")
    pw.add_argument("--format", choices=["json", "csv", "plain"], default="json")
    pw.set_defaults(func=cmd_power)

    sm = sub.add_parser("simulate", help="run a simulation study")
    sm.add_argument("--study", choices=["curve", "convergence", "power"], default="convergence")
    sm.add_argument("--scenario", choices=sorted(_SCENARIOS), default="continuous")
    sm.add_argument("--sizes", help="comma-separated sample sizes (convergence)")
    sm.add_argument("--levels", help="comma-separated parameter levels (curve, power)")
    sm.add_argument("--n", type=int, default=300, help="sample size (curve, power)")
    sm.add_argument("--reps", type=int, default=2000)
    sm.add_argument("--alpha", type=float, default=0.05)
    sm.add_argument("--seed", type=int, default=0)
    sm.add_argument("--out", help="output path (default stdout)")
    common(sm, ("json", "csv"), "csv")
    sm.set_defaults(func=cmd_simulate)
    return p


def main(argv: Sequence[str] | None = None, out: TextIO | None = None, err: TextIO | None = None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        return args.func(args, out)
    except (UsageError, InvalidMarginalError, ValueError) as exc:
        if isinstance(exc, (InsufficientSampleError, DegenerateMarginalError)):
            err.write(f"signcov: data error: {exc}\n")
            return EXIT_DATA
        err.write(f"signcov: error: {exc}\n")
        return EXIT_USAGE
    except DataError as exc:
        err.write(f"signcov: data error: {exc}\n")
        return EXIT_DATA
    except (PrecisionError, EigenSolverError) as exc:
        err.write(f"signcov: numerical error: {exc}\n")
        return EXIT_PRECISION


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
