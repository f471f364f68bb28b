"""Command-line interface.

Exit codes: 0 ok, 2 configuration error, 3 dimension error, 4 impossible
post-selection, 5 verification failure. Errors are reported on stderr as a
single line ``qxcorr: error=<Type> exit=<code> msg=<text>``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys

from .errors import (
    BadDimension,
    ImpossiblePostselection,
    OracleScaleExceeded,
    QXCorrError,
)
from .experiments import (
    SWEEP_AXES,
    ExperimentConfig,
    run_correlate,
    run_filter,
    run_phase_flip_demo,
    run_sweep,
    sweep_columns,
)
from .verify import run_verify

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIMENSION = 3
EXIT_POSTSELECT = 4
EXIT_VERIFY = 5


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, (BadDimension, OracleScaleExceeded)):
        return EXIT_DIMENSION
    if isinstance(exc, ImpossiblePostselection):
        return EXIT_POSTSELECT
    return EXIT_CONFIG


def _num(x):
    if isinstance(x, float):
        return float(f"{x:.12g}")
    return x


def render(rows: list[dict], columns, fmt: str) -> str:
    """Render rows as ``json`` (object for one row, list otherwise), ``csv`` or ``table``."""
    rows = [{c: _num(r.get(c)) for c in columns} for r in rows]
    if fmt == "json":
        payload = rows[0] if len(rows) == 1 else rows
        return json.dumps(payload) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n")
        writer.writeheader()
        for r in rows:
            writer.writerow({k: "" if v is None else v for k, v in r.items()})
        return buf.getvalue()
    if len(rows) == 1:
        width = max(len(c) for c in columns)
        return "".join(f"{c:<{width}}  {_cell(rows[0][c])}".rstrip() + "\n" for c in columns)
    cells = [[_cell(r[c]) for c in columns] for r in rows]
    widths = [max(len(c), *(len(row[i]) for row in cells)) for i, c in enumerate(columns)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(columns, widths))]
    lines += ["  ".join(v.ljust(w) for v, w in zip(row, widths)) for row in cells]
    return "\n".join(line.rstrip() for line in lines) + "\n"


def _cell(v) -> str:
    if v is None:
        return "-"
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)


def _add_common(p: argparse.ArgumentParser) -> None:
    size = p.add_mutually_exclusive_group()
    size.add_argument("--dim", type=int, help="signal dimension N")
    size.add_argument("--n-qubits", type=int, help="number of qubits n (N = 2**n)")
    p.add_argument("--signal", default="uniform",
                   help="state file or builtin: uniform, basis[:K], random")
    p.add_argument("--reference", default=None, help="state file or builtin (default: the signal)")
    p.add_argument("--noise", default="collective-phase-flip",
                   help="collective-phase-flip, identity, inline JSON or a JSON file")
    p.add_argument("--p", type=float, default=0.5, help="signal weight in the mixture")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tolerance", type=float, default=1e-9)
    _add_output(p)


def _add_output(p: argparse.ArgumentParser) -> None:
    p.add_argument("--output", choices=("table", "json", "csv"), default="table")
    p.add_argument("--out", default=None, help="write to FILE instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qxcorr", description="Quantum noise filtering by cross-correlation and post-selection.")
    sub = parser.add_subparsers(dest="command", required=True)

    _add_common(sub.add_parser("correlate", help="correlation coefficient and per-lag overlaps"))
    _add_common(sub.add_parser("filter", help="filter a signal+noise mixture"))

    demo = sub.add_parser("phase-flip-demo", help="uniform signal under collective phase flip")
    demo.add_argument("--n-qubits", type=int, default=2)
    demo.add_argument("--p", type=float, default=0.5)
    demo.add_argument("--tolerance", type=float, default=1e-9)
    _add_output(demo)

    sweep = sub.add_parser("sweep", help="repeat the filter over a parameter grid")
    _add_common(sweep)
    sweep.add_argument("--axis", choices=SWEEP_AXES, required=True)
    sweep.add_argument("--values", required=True, help="comma-separated values")

    verify = sub.add_parser("verify", help="run the invariant suite")
    verify.add_argument("--scale", choices=("quick", "full"), default="quick")
    verify.add_argument("--seed", type=int, default=20240101)
    _add_output(verify)
    return parser


def _config(args) -> ExperimentConfig:
    return ExperimentConfig(
        signal=args.signal,
        reference=args.reference,
        noise=args.noise,
        p=args.p,
        dim=args.dim,
        n_qubits=args.n_qubits,
        seed=args.seed,
        tolerance=args.tolerance,
        output=args.output,
    )


def _parse_values(text: str, axis: str) -> list:
    parts = [t.strip() for t in text.split(",") if t.strip()]
    if not parts:
        raise ValueError("sweep needs at least one value")
    conv = int if axis == "n" else float
    return [conv(t) for t in parts]


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _run(args) -> int:
    if args.command == "verify":
        summary = run_verify(args.scale, seed=args.seed)
        cols = ("property", "passed", "max_deviation", "tolerance", "cases", "detail")
        _emit(render(summary.rows(), cols, args.output), args.out)
        return EXIT_OK if summary.passed else EXIT_VERIFY

    if args.command == "phase-flip-demo":
        report = run_phase_flip_demo(args.n_qubits, args.p)
        tolerance = args.tolerance
        rows, cols = [report.to_dict()], tuple(report.to_dict())
    elif args.command == "correlate":
        res = run_correlate(_config(args))
        if args.output == "json":
            _emit(json.dumps({"dim": res["dim"], "C": _num(res["C"]),
                              "lags": [{k: _num(v) for k, v in lag.items()} for lag in res["lags"]]})
                  + "\n", args.out)
            return EXIT_OK
        text = render([{"dim": res["dim"], "C": res["C"]}], ("dim", "C"), args.output)
        if args.output == "table":
            text += "\n" + render(res["lags"], ("lag", "re", "im", "weight"), "table")
        else:
            text = render(res["lags"], ("lag", "re", "im", "weight"), "csv")
        _emit(text, args.out)
        return EXIT_OK
    elif args.command == "filter":
        config = _config(args)
        report = run_filter(config)
        tolerance = config.tolerance
        rows, cols = [report.to_dict()], tuple(report.to_dict())
    else:  # sweep
        config = _config(args)
        values = _parse_values(args.values, args.axis)
        rows = run_sweep(config, args.axis, values)
        _emit(render(rows, sweep_columns(args.axis), args.output), args.out)
        return EXIT_OK

    _emit(render(rows, cols, args.output), args.out)
    if not report.bound_holds(tolerance):
        print(f"qxcorr: warning=BoundViolated F_after={report.F_after!r} "
              f"bound_rhs={report.bound_rhs!r}", file=sys.stderr)
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _run(args)
    except (QXCorrError, ValueError, OSError) as exc:
        code = exit_code_for(exc)
        msg = str(exc).replace("\n", " ")
        print(f"qxcorr: error={type(exc).__name__} exit={code} msg={msg}", file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
