"""Command-line front end: validate, simulate, compare.

    formsim validate <config>
    formsim simulate <config> --out <path> [--controller bc|fabc]
    formsim compare  <config> --out <dir>

CSV schema: `t, x_l, y_l, th_l` then per follower
`x, y, th, ex_hat, ey_hat, eth_hat, v, w, wL, wR, k1, k2, k3, w_d, th_d,
V1, V2, l_actual`.  With several followers the per-follower columns are
prefixed `<name>.`.  Values are written in plain decimal notation with
12 significant digits, ',' delimiter and '\\n' line endings, so repeated
runs of the same scenario are byte-identical.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional

import numpy as np

from .config import ConfigResult, load_config
from .sim import ComparisonReport, FollowerTrace, Trace, compare, run, settling_time

__all__ = ["main", "write_csv", "csv_header", "format_value"]

FOLLOWER_COLUMNS = (
    "x", "y", "th",
    "ex_hat", "ey_hat", "eth_hat",
    "v", "w", "wL", "wR",
    "k1", "k2", "k3",
    "w_d", "th_d", "V1", "V2", "l_actual",
)

_SIGNIFICANT_DIGITS = 12


def format_value(value: float) -> str:
    """Plain decimal notation (no exponent) with 12 significant digits."""
    return np.format_float_positional(
        value, precision=_SIGNIFICANT_DIGITS, unique=False, fractional=False, trim="-"
    )


def csv_header(trace: Trace) -> list[str]:
    columns = ["t", "x_l", "y_l", "th_l"]
    multi = len(trace.followers) > 1
    for f in trace.followers:
        prefix = f"{f.name}." if multi else ""
        columns.extend(prefix + c for c in FOLLOWER_COLUMNS)
    return columns


def _follower_matrix(f: FollowerTrace) -> np.ndarray:
    return np.column_stack(
        [
            f.x, f.y, f.theta,
            f.ex_hat, f.ey_hat, f.etheta_hat,
            f.v, f.omega, f.wheel_left, f.wheel_right,
            f.k1, f.k2, f.k3,
            f.omega_d, f.theta_d, f.v1, f.v2, f.l_actual,
        ]
    )


def write_csv(trace: Trace, path: Path) -> None:
    """Serialize a trace; one row per step, deterministic formatting."""
    matrix = np.column_stack(
        [trace.t, trace.leader_x, trace.leader_y, trace.leader_theta]
        + [_follower_matrix(f) for f in trace.followers]
    )
    fmt = format_value
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(",".join(csv_header(trace)) + "\n")
        for row in matrix:
            handle.write(",".join([fmt(v) for v in row]) + "\n")


def _print_diagnostics(result: ConfigResult) -> None:
    for d in result.diagnostics:
        print(str(d), file=sys.stderr if d.severity == "error" else sys.stdout)


def _load_or_fail(path: str) -> Optional[ConfigResult]:
    result = load_config(path)
    _print_diagnostics(result)
    if not result.ok:
        return None
    return result


def _summarize(trace: Trace) -> None:
    for f in trace.followers:
        settle = settling_time(f, trace.t)
        norm = f.error_norm()
        print(f"follower {f.name} ({f.controller}):")
        print(
            "  settling time: "
            + (f"{settle:.3f} s" if settle is not None else "not reached")
        )
        print(f"  final error norm: {norm[-1]:.6g}")
        print(f"  max |v|: {np.abs(f.v).max():.6g} m/s")
        print(f"  max |w|: {np.abs(f.omega).max():.6g} rad/s")
        print(
            f"  max wheel speeds: left {np.abs(f.wheel_left).max():.6g}, "
            f"right {np.abs(f.wheel_right).max():.6g} rad/s"
        )
        if f.controller == "fabc":
            coupled = bool(np.array_equal(f.k2, f.k3))
            lo, hi = f.k1.min(), f.k1.max()
            print(f"  adaptive k1 range: [{lo:.4g}, {hi:.4g}]")
            print(f"  adaptive k2 range: [{f.k2.min():.4g}, {f.k2.max():.4g}]")
            print(f"  k2 == k3 at every step: {'yes' if coupled else 'NO'}")


def _report_text(report: ComparisonReport) -> str:
    lines = []
    for f in report.followers:
        lines.append(f"follower {f.name}:")
        lines.append(
            f"  max |left wheel|:  bc {f.max_wheel_left_bc:.6g}  "
            f"fabc {f.max_wheel_left_fabc:.6g}  "
            f"decrease {f.pct_decrease_left:.1f}%"
        )
        lines.append(
            f"  max |right wheel|: bc {f.max_wheel_right_bc:.6g}  "
            f"fabc {f.max_wheel_right_fabc:.6g}  "
            f"decrease {f.pct_decrease_right:.1f}%"
        )
        lines.append(
            f"  max |v|:  bc {f.max_v_bc:.6g}  fabc {f.max_v_fabc:.6g}"
        )
        lines.append(
            f"  max |w|:  bc {f.max_omega_bc:.6g}  fabc {f.max_omega_fabc:.6g}"
        )

        def fmt_settle(value: Optional[float]) -> str:
            return f"{value:.3f} s" if value is not None else "not reached"

        lines.append(
            f"  settling time: bc {fmt_settle(f.settling_time_bc)}  "
            f"fabc {fmt_settle(f.settling_time_fabc)}"
        )
    return "\n".join(lines) + "\n"


def _cmd_validate(args: argparse.Namespace) -> int:
    result = load_config(args.config)
    _print_diagnostics(result)
    if result.ok:
        print(f"{args.config}: OK")
        return 0
    return 1


def _cmd_simulate(args: argparse.Namespace) -> int:
    result = _load_or_fail(args.config)
    if result is None:
        return 1
    scenario = result.scenario
    if args.controller is not None:
        scenario = scenario.with_controller(args.controller)
    try:
        trace = run(scenario)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    write_csv(trace, Path(args.out))
    print(f"wrote {trace.t.size} rows to {args.out}")
    _summarize(trace)
    return 0


def _cmd_compare(args: argparse.Namespace) -> int:
    result = _load_or_fail(args.config)
    if result is None:
        return 1
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        trace_bc = run(result.scenario.with_controller("bc"))
        trace_fabc = run(result.scenario.with_controller("fabc"))
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    write_csv(trace_bc, out_dir / "trace_bc.csv")
    write_csv(trace_fabc, out_dir / "trace_fabc.csv")
    report = compare(trace_bc, trace_fabc)
    text = _report_text(report)
    (out_dir / "report.txt").write_text(text, encoding="utf-8")
    (out_dir / "report.json").write_text(
        json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8"
    )
    print(text, end="")
    print(f"traces and report written to {out_dir}")
    return 0


def main(argv: Optional[list[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="formsim",
        description="Leader-follower formation control simulator for wheeled robots.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_validate = sub.add_parser("validate", help="check a scenario config file")
    p_validate.add_argument("config")
    p_validate.set_defaults(func=_cmd_validate)

    p_simulate = sub.add_parser("simulate", help="run a scenario and write a CSV trace")
    p_simulate.add_argument("config")
    p_simulate.add_argument("--out", required=True, help="output CSV path")
    p_simulate.add_argument(
        "--controller",
        choices=("bc", "fabc"),
        default=None,
        help="override the controller kind for every follower",
    )
    p_simulate.set_defaults(func=_cmd_simulate)

    p_compare = sub.add_parser(
        "compare", help="run both controllers on one scenario and compare"
    )
    p_compare.add_argument("config")
    p_compare.add_argument("--out", required=True, help="output directory")
    p_compare.set_defaults(func=_cmd_compare)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
