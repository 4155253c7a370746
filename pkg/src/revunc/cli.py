"""Command-line interface: ``revunc {sweep,audit,figure,state}``.

Exit codes: 0 success, 1 usage error, 2 certified-property violation, 3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from .audit import run_audit
from .dmmodel import (
    DMParams,
    TemperatureError,
    build_hamiltonian,
    closed_form_diagnostic,
    concurrence_closed,
    energy_levels,
    mixedness_closed,
    partition_function,
    partition_function_closed,
    thermal_state,
)
from .qstate import concurrence_wootters, mixedness
from .sweep import (
    CertificationError,
    SpecError,
    SweepSpec,
    emit_figure_data,
    parse_observables,
    parse_range,
    range_values,
    run_sweep,
)

EXIT_OK, EXIT_USAGE, EXIT_VIOLATION, EXIT_IO = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_grid(p, defaults=("1", "1", "1")):
    p.add_argument("--j", default=defaults[0], help="coupling range a:b:n or a single value")
    p.add_argument("--d", default=defaults[1], help="DM strength range a:b:n or a single value")
    p.add_argument("--t", default=defaults[2], help="temperature range a:b:n or a single value")


def _add_model(p):
    p.add_argument("--q", default="sx,sz", help="observables on A: sx,sy,sz or polar:azimuth tokens")
    p.add_argument("--o", default=None, help="control observables on C (default: same as --q; 'optimal' allowed)")
    p.add_argument("--bound", default=None, choices=["eq8", "eq9", "eq10", "mondal"])
    p.add_argument("--m-mode", default="zero", choices=["zero", "experimental"])
    p.add_argument("--theta-grid", type=int, default=64)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="revunc", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("sweep", help="evaluate the conditional reverse relation over a (J, D, T) grid")
    _add_grid(p)
    _add_model(p)
    p.add_argument("--out", required=True)

    p = sub.add_parser("audit", help="randomised property audit")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--dims", default="2x2", help="comma list of splits such as 2x2,2x3,3x3")
    p.add_argument("--experimental", action="store_true", help="also audit the experimental M mode")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default=None)

    p = sub.add_parser("figure", help="emit the data tables behind one figure")
    p.add_argument("--fig", type=int, required=True, choices=range(2, 10))
    p.add_argument("--j", default=None)
    p.add_argument("--d", default=None)
    p.add_argument("--t", default=None)
    _add_model(p)
    p.add_argument("--out", default=".", help="output directory")

    p = sub.add_parser("state", help="dump H, its spectrum and rho(T) for one parameter point")
    p.add_argument("--j", type=float, default=1.0)
    p.add_argument("--d", type=float, default=1.0)
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--out", default=None)
    return parser


def _model_overrides(args) -> dict:
    ov = {
        "q": parse_observables(args.q),
        "m_mode": args.m_mode,
        "theta_grid": args.theta_grid,
        "seed": args.seed,
        "workers": args.workers,
    }
    if args.o is not None:
        ov["o"] = parse_observables(args.o)
    if args.bound is not None:
        ov["bound_mode"] = args.bound
    return ov


def _cmd_sweep(args) -> int:
    spec = SweepSpec(
        j_values=parse_range(args.j),
        d_values=parse_range(args.d),
        t_values=parse_range(args.t),
        output_path=args.out,
        **_model_overrides(args),
    ).validate()
    rows = run_sweep(spec)
    slacks = [r.slack for r in rows]
    print(f"{len(rows)} rows -> {args.out}; slack min {min(slacks):.6g} max {max(slacks):.6g}")
    return EXIT_OK


def _parse_dims(text: str) -> list[tuple[int, int]]:
    out = []
    for tok in text.split(","):
        try:
            a, c = (int(x) for x in tok.lower().split("x"))
        except ValueError:
            raise UsageError(f"bad split {tok!r}, expected AxC") from None
        if a < 1 or c < 1:
            raise UsageError(f"bad split {tok!r}")
        out.append((a, c))
    return out


def _cmd_audit(args) -> int:
    if args.trials < 1:
        raise UsageError("--trials must be at least 1")
    report = run_audit(args.seed, args.trials, _parse_dims(args.dims), args.experimental, args.workers)
    print("\n".join(report.summary_lines()))
    if args.out:
        report.write(args.out)
    return EXIT_OK if report.ok else EXIT_VIOLATION


def _cmd_figure(args) -> int:
    ov = _model_overrides(args)
    for key, flag in (("j_values", args.j), ("d_values", args.d), ("t_values", args.t)):
        if flag is not None:
            ov[key] = parse_range(flag)
    if "t_values" in ov and min(range_values(ov["t_values"])) <= 0:
        raise SpecError("temperatures must be positive")
    res = emit_figure_data(args.fig, ov, args.out)
    for path in res.paths:
        print(path)
    for panel, diag in res.diagnostics.items():
        for k, v in diag.items():
            print(f"{panel}: {k} = {v:.6g}")
    return EXIT_OK


def _complex_rows(m) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(m)]


def _cmd_state(args) -> int:
    p = DMParams(args.j, args.d, args.t)
    rho = thermal_state(p)
    info = {
        "params": {"j": p.j, "d": p.d, "t": p.t, "beta": p.beta, "delta": p.delta},
        "hamiltonian": _complex_rows(build_hamiltonian(p).mat),
        "spectrum": energy_levels(p).tolist(),
        "partition_function": partition_function(p),
        "partition_function_closed": partition_function_closed(p),
        "rho": _complex_rows(rho.mat),
        "concurrence": concurrence_wootters(rho),
        "concurrence_closed": concurrence_closed(p),
        "gamma": mixedness(rho).gamma,
        "gamma_closed": mixedness_closed(p),
        "closed_form_max_deviation": closed_form_diagnostic(p, rho),
    }
    text = json.dumps(info, indent=2, sort_keys=True)
    if args.out:
        with open(args.out, "w", encoding="ascii") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return EXIT_OK


COMMANDS = {"sweep": _cmd_sweep, "audit": _cmd_audit, "figure": _cmd_figure, "state": _cmd_state}


_RANGE_FLAGS = ("--j", "--d", "--t")


def _join_negative_values(argv: list[str]) -> list[str]:
    """Rewrite ``--j -2:2:9`` as ``--j=-2:2:9`` so argparse does not read the value as a flag."""
    out, i = [], 0
    while i < len(argv):
        if argv[i] in _RANGE_FLAGS and i + 1 < len(argv) and argv[i + 1][:1] == "-" and argv[i + 1][1:2].isdigit():
            out.append(f"{argv[i]}={argv[i + 1]}")
            i += 2
        else:
            out.append(argv[i])
            i += 1
    return out


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(_join_negative_values(argv))
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (UsageError, SpecError, TemperatureError) as exc:
        print(f"revunc: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CertificationError as exc:
        print(f"revunc: certified property violated: {exc}", file=sys.stderr)
        print(json.dumps(exc.counterexample, sort_keys=True), file=sys.stderr)
        return EXIT_VIOLATION
    except OSError as exc:
        print(f"revunc: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
