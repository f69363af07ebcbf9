"""``jetsym`` command line.

Exit codes: 0 PASS-proven (or success), 2 PASS-numeric, 1 FAIL, 3 no
surviving generator, 64 unreadable or invalid input.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .checker import Aggregate, CheckOptions, check_nonobservability, check_symmetry
from .determining import Ansatz, discover, preset
from .errors import JetsymError, SimulationError, SpecError
from .expr import DEFAULT_SEED
from .parser import parse
from .sim import indist_experiment, residual_check, simulate, stability_advisory
from .specfile import load

EXIT_OK, EXIT_FAIL, EXIT_NUMERIC, EXIT_NONE, EXIT_USAGE = 0, 1, 2, 3, 64

_AGG_EXIT = {Aggregate.PASS_PROVEN: EXIT_OK, Aggregate.PASS_NUMERIC: EXIT_NUMERIC,
             Aggregate.FAIL: EXIT_FAIL}


class _Usage(Exception):
    pass


class _ArgumentParser(argparse.ArgumentParser):
    # argparse exits with 2, which here means PASS-numeric
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _seed(text):
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return v


def _parser():
    p = _ArgumentParser(prog="jetsym", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"jetsym {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("spec", help="spec file (TOML)")
        sp.add_argument("--seed", type=_seed, default=DEFAULT_SEED,
                        help="zero-test RNG seed (default 0x6A657473)")

    def checks(sp):
        sp.add_argument("--extended-reduction", action="store_true",
                        help="also substitute x_zt and x_tt (first differential consequences)")
        sp.add_argument("--reduce-output", action="store_true",
                        help="reduce the output residual modulo the evolution equations")
        sp.add_argument("--boundary-pivots", action="store_true",
                        help="solve boundary conditions for their declared pivots")

    sp = sub.add_parser("check", help="non-observability test for the generator in the spec file")
    common(sp)
    checks(sp)
    sp = sub.add_parser("symmetry", help="symmetry-group test for the generator in the spec file")
    common(sp)
    checks(sp)
    sp = sub.add_parser("determine", help="discover generators from an ansatz")
    common(sp)
    checks(sp)
    sp.add_argument("--strategy", choices=("coefficient-collection", "sampling"),
                    default="coefficient-collection")
    sp.add_argument("--basis", help="preset name (poly2, trig2) or ';'-separated expressions")
    sp = sub.add_parser("simulate", help="method-of-lines simulation")
    common(sp)
    sp.add_argument("--out", help="write the trajectory CSV here")
    sp.add_argument("--stride", type=int, default=1, help="keep every n-th time sample in the CSV")
    sp = sub.add_parser("indist", help="indistinguishability experiment")
    common(sp)
    checks(sp)
    sp.add_argument("--eps", type=float, nargs="+", help="flow parameters (default: sim.eps in the spec file)")
    sp.add_argument("--override", action="store_true",
                    help="run even if the generator fails the check")
    sp.add_argument("--out", help="directory for output-series CSV files")
    return p


def _options(args, doc) -> CheckOptions:
    return CheckOptions(extended_reduction=getattr(args, "extended_reduction", False),
                        reduce_output=getattr(args, "reduce_output", False),
                        pivots=doc.pivots if getattr(args, "boundary_pivots", False) else {},
                        seed=args.seed)


def _flags(args) -> dict:
    skip = {"command", "spec", "seed"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _need(doc, what):
    if getattr(doc, what) is None:
        raise _Usage(f"{doc.path}: the [{ 'sim' if what in ('sim', 'init') else what}] "
                     f"section is required for this command")


def cmd_check(args, doc):
    _need(doc, "generator")
    if doc.has_vu and not doc.generator.vu.is_zero_literal():
        raise _Usage(f"{doc.path}: [generator] non-observability needs v_u = 0")
    report = check_nonobservability(doc.system, doc.generator, _options(args, doc))
    return _AGG_EXIT[report.aggregate], report.to_dict()


def cmd_symmetry(args, doc):
    _need(doc, "generator")
    report = check_symmetry(doc.system, doc.generator, _options(args, doc))
    return _AGG_EXIT[report.aggregate], report.to_dict()


def _basis(args, doc) -> Ansatz:
    if args.basis:
        if args.basis in ("poly2", "trig2"):
            return preset(args.basis, doc.system.n_x)
        try:
            exprs = [parse(b, doc.context) for b in args.basis.split(";") if b.strip()]
        except JetsymError as exc:
            raise _Usage(f"--basis: {exc}") from None
        return Ansatz.uniform(exprs, doc.system.n_x)
    if doc.ansatz is None:
        raise _Usage(f"{doc.path}: no [ansatz] section and no --basis given")
    return doc.ansatz


def cmd_determine(args, doc):
    ansatz = _basis(args, doc)
    ds, basis, survivors = discover(doc.system, ansatz, args.strategy, _options(args, doc))
    result = {"ansatz": {"name": ansatz.name, "unknowns": ansatz.size},
              "system": ds.to_dict(), "null_space_dimension": len(basis),
              "survivors": [s.to_dict() for s in survivors]}
    if not ds.exact:
        result["float_mode"] = True
    return (EXIT_OK if survivors else EXIT_NONE), result


def cmd_simulate(args, doc):
    _need(doc, "sim")
    _need(doc, "init")
    try:
        traj = simulate(doc.system, doc.init, doc.sim)
    except SimulationError as exc:
        return EXIT_FAIL, {"error": str(exc), "node": exc.node, "step": exc.step, "time": exc.time}
    if args.out:
        traj.write_csv(args.out, max(1, args.stride))
    res = residual_check(doc.system, traj)
    result = {"samples": len(traj.t), "nodes": len(traj.z),
              "output_node": traj.output_node, "snap_distance": traj.snap_distance,
              "y_min": float(np.min(traj.y)), "y_max": float(np.max(traj.y)),
              "y_abs_max": float(np.max(np.abs(traj.y))),
              "residual": {"value": res.value, "node": res.node, "sample": res.sample},
              "advisory": stability_advisory(doc.system, doc.sim),
              "warnings": traj.warnings}
    if args.out:
        result["csv"] = args.out
    return EXIT_OK, result


def cmd_indist(args, doc):
    _need(doc, "generator")
    _need(doc, "sim")
    _need(doc, "init")
    eps = args.eps if args.eps else doc.eps
    if not eps:
        raise _Usage("no flow parameters: pass --eps or set sim.eps")
    try:
        exp = indist_experiment(doc.system, doc.generator, doc.init, doc.sim, eps,
                                override=args.override, options=_options(args, doc))
    except SimulationError as exc:
        return EXIT_FAIL, {"error": str(exc), "node": exc.node, "step": exc.step, "time": exc.time}
    result = exp.to_dict()
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        exp.write_series(Path(args.out) / "outputs.csv")
        result["csv"] = str(Path(args.out) / "outputs.csv")
    return (EXIT_OK if exp.passed else EXIT_FAIL), result


COMMANDS = {"check": cmd_check, "symmetry": cmd_symmetry, "determine": cmd_determine,
            "simulate": cmd_simulate, "indist": cmd_indist}


def render_report(args, doc, code, result) -> str:
    report = {"tool": "jetsym", "version": __version__, "command": args.command,
              "spec": str(args.spec), "spec_sha256": doc.digest if doc else None,
              "seed": args.seed, "flags": _flags(args), "exit_code": code, "result": result}
    return json.dumps(report, sort_keys=True, indent=2, default=str) + "\n"


def main(argv=None) -> int:
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:  # --help, --version, usage errors
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    doc = None
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            doc = load(args.spec)
            code, result = COMMANDS[args.command](args, doc)
        except (SpecError, _Usage) as exc:
            code, result = EXIT_USAGE, {"error": str(exc)}
        except JetsymError as exc:
            code, result = EXIT_USAGE, {"error": f"{type(exc).__name__}: {exc}"}
    if caught and isinstance(result, dict):
        result.setdefault("warnings", [])
        result["warnings"] = list(result["warnings"]) + [str(w.message) for w in caught
                                                          if str(w.message) not in result["warnings"]]
    out = render_report(args, doc, code, result)
    sys.stdout.write(out)
    if code == EXIT_USAGE:
        sys.stderr.write(f"jetsym: {result['error']}\n")
    if args.command == "indist" and args.out and Path(args.out).is_dir():
        (Path(args.out) / "report.json").write_text(out)
    return code


if __name__ == "__main__":
    sys.exit(main())
