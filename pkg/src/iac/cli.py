"""Command-line entry point: ``iac <command> ...``.

Exit codes: 0 pass, 1 domain failure (infeasible tuple or failed
verification), 2 bad input, 3 graph construction exhausted, 4 numerical
failure. Default verifier tolerances can be overridden with
``IAC_TOL_ALIGNMENT``, ``IAC_TOL_ZERO_FORCING``, ``IAC_TOL_SIGMA_MIN`` and
``IAC_TOL_RANK``.
"""

import argparse
import json
import logging
import os
import sys
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from importlib import metadata

import numpy as np

from .design import Design, run_design
from .errors import (ConstructionExhausted, InfeasibleConfig, InvalidConfig, MissingPoint,
                     NumericalError)
from .feasibility import check_feasibility, enumerate_optimal_tuples
from .simulator import SimParams, estimate_dof_slope, snr_sweep
from .system_model import SystemConfig, compute_overhead
from .verifier import Tolerances

EXIT_OK = 0
EXIT_DOMAIN = 1
EXIT_INPUT = 2
EXIT_CONSTRUCTION = 3
EXIT_NUMERIC = 4

SIGMA_ROUNDTRIP_TOL = 1e-12

log = logging.getLogger("iac")


def tool_version():
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


def _now():
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


@dataclass
class RunManifest:
    """Everything needed to reproduce a command's output files."""

    command: list
    config: dict = None
    channel_seed: int = None
    graph_seed: int = None
    tolerances: dict = None
    tool_version: str = field(default_factory=tool_version)
    started: str = field(default_factory=_now)
    finished: str = None
    sigma_min: list = None
    outputs: list = field(default_factory=list)

    def write(self, path):
        self.finished = _now()
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(asdict(self), fh, indent=2)
            fh.write("\n")


def load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise InvalidConfig(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise InvalidConfig(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(doc, dict):
        raise InvalidConfig(f"{path}: config must be a JSON object with M and d")
    return SystemConfig.from_dict(doc)


def load_bundle(path):
    try:
        return Design.load(path)
    except OSError as exc:
        raise InvalidConfig(f"cannot read {path}: {exc.strerror}") from exc


def parse_snr(spec):
    """``"lo:step:hi"`` (inclusive) or a single value."""
    parts = spec.split(":")
    try:
        vals = [float(p) for p in parts]
    except ValueError as exc:
        raise InvalidConfig(f"bad --snr {spec!r}") from exc
    if len(vals) == 1:
        return [vals[0]]
    if len(vals) != 3 or vals[1] <= 0 or vals[2] < vals[0]:
        raise InvalidConfig(f"--snr expects lo:step:hi with step > 0 and hi >= lo, got {spec!r}")
    lo, step, hi = vals
    n = int(np.floor((hi - lo) / step + 1e-9)) + 1
    return [lo + i * step for i in range(n)]


def _emit(doc):
    json.dump(doc, sys.stdout, indent=2)
    sys.stdout.write("\n")


def cmd_feasibility(args):
    config = load_config(args.config)
    verdict = check_feasibility(config)
    _emit({
        "config": config.to_dict(),
        "feasible": verdict.feasible,
        "k_iac": verdict.k_iac,
        "overhead": compute_overhead(config),
        "failed_inequalities": [q.to_dict() for q in verdict.failed_inequalities],
    })
    return EXIT_OK if verdict.feasible else EXIT_DOMAIN


def cmd_design(args):
    config = load_config(args.config)
    tol = Tolerances.from_env(os.environ)
    manifest = RunManifest(command=list(args.argv), config=config.to_dict(),
                           channel_seed=args.channel_seed, graph_seed=args.graph_seed,
                           tolerances=asdict(tol))
    try:
        design = run_design(config, args.channel_seed, args.graph_seed,
                            optimal=args.optimal, retry_budget=args.retry_budget,
                            tolerances=tol)
    except InfeasibleConfig as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    design.save(args.out)
    manifest.sigma_min = [r.sigma_min_effective for r in design.report.per_receiver]
    manifest.outputs = [args.out]
    manifest.write(args.out + ".manifest.json")
    _emit(design.report.to_dict() if args.full_report else {
        "pass": design.report.passed,
        "k_iac": design.report.k_iac,
        "overhead_packets": design.report.overhead_packets,
        "total_dof_claimed": design.report.total_dof_claimed,
        "equations": len(design.equations),
        "construction": design.trace.method if design.trace else None,
        "restarts": design.trace.restarts if design.trace else None,
        "failures": design.report.failures,
    })
    return EXIT_OK if design.report.passed else EXIT_DOMAIN


def _check_roundtrip(design):
    """Re-evaluate sigma_min on the loaded bundle against the stored report."""
    from .verifier import verify_design
    fresh = verify_design(design.channels, design.precoders, design.receivers,
                          design.equations, design.config)
    for old, new in zip(design.report.per_receiver, fresh.per_receiver):
        if abs(old.sigma_min_effective - new.sigma_min_effective) > SIGMA_ROUNDTRIP_TOL:
            print(f"warning: receiver {old.k} sigma_min changed on reload "
                  f"({old.sigma_min_effective!r} -> {new.sigma_min_effective!r})",
                  file=sys.stderr)


def cmd_simulate(args):
    design = load_bundle(args.bundle)
    _check_roundtrip(design)
    params = SimParams(parse_snr(args.snr), args.trials, symbols=args.symbols,
                       cancellation=args.cancellation, seed=args.seed)
    sweep = snr_sweep(design.channels, design, design.config, params)
    text = sweep.to_json() + "\n" if args.json else sweep.to_csv()
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    snrs = sorted(r["snr_db"] for r in sweep.rows)
    if len(snrs) < 2:
        print("dof slope: omitted (need at least two SNR points)", file=sys.stderr)
    else:
        slope = estimate_dof_slope(sweep, snrs[-2], snrs[-1])
        print(f"dof slope {snrs[-2]:g}->{snrs[-1]:g} dB: {slope:.4f} "
              f"(claimed {design.report.total_dof_claimed})", file=sys.stderr)
    return EXIT_OK


def cmd_enumerate_optimal(args):
    if args.m < 1 or args.k < 2:
        raise InvalidConfig("need --m >= 1 and --k >= 2")
    _emit([list(d) for d in enumerate_optimal_tuples(args.m, args.k)])
    return EXIT_OK


def cmd_graph_export(args):
    design = load_bundle(args.bundle)
    text = design.graph.to_dot() if args.dot else json.dumps(design.graph.to_dict(), indent=2) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="iac", description="Closed-form IAC transceiver design")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("feasibility", help="check whether a stream tuple can be served")
    s.add_argument("config", help="JSON file with M and d (K optional)")
    s.set_defaults(func=cmd_feasibility)

    s = sub.add_parser("design", help="build, solve and verify a design")
    s.add_argument("config")
    s.add_argument("--channel-seed", type=int, default=0)
    s.add_argument("--graph-seed", type=int, default=0)
    s.add_argument("--optimal", action="store_true",
                   help="use the 2M construction when the tuple qualifies")
    s.add_argument("--retry-budget", type=int, default=64)
    s.add_argument("--out", default="bundle.json")
    s.add_argument("--full-report", action="store_true",
                   help="print the complete verifier report")
    s.set_defaults(func=cmd_design)

    s = sub.add_parser("simulate", help="SNR sweep over a saved design")
    s.add_argument("bundle")
    s.add_argument("--snr", default="40:10:60", help="lo:step:hi in dB, or one value")
    s.add_argument("--trials", type=int, default=50)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--symbols", choices=["GAUSSIAN", "QPSK"], default="GAUSSIAN")
    s.add_argument("--cancellation", choices=["GENIE", "DETECTED"], default="GENIE")
    s.add_argument("--json", action="store_true", help="write JSON with per-stream detail")
    s.add_argument("--out", help="output file (default stdout)")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("enumerate-optimal", help="list tuples reaching 2M streams")
    s.add_argument("--m", type=int, required=True)
    s.add_argument("--k", type=int, required=True)
    s.set_defaults(func=cmd_enumerate_optimal)

    s = sub.add_parser("graph-export", help="export the IAC graph of a bundle")
    s.add_argument("bundle")
    s.add_argument("--dot", action="store_true", help="Graphviz DOT instead of JSON")
    s.add_argument("--out")
    s.set_defaults(func=cmd_graph_export)
    return p


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    args.argv = argv
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (InvalidConfig, MissingPoint) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ConstructionExhausted as exc:
        print(f"construction exhausted at receiver {exc.receiver}: {exc}", file=sys.stderr)
        return EXIT_CONSTRUCTION
    except NumericalError as exc:
        print(f"numerical failure ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
