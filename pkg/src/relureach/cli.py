"""Command-line entry point: verify, export, eval and check.

Exit codes: 0 a verdict was produced, 2 usage/input error, 3 reachable with
--fail-on-reachable, 4 the oracles disagree with the main search.
"""

import argparse
import hashlib
import json
import logging
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .bounds import UnboundedInputError, count_unstable, propagate
from .encoder import EmptyInputSetError, Mode, encode_problem
from .lpfile import export_lp_file
from .milp import Limits, Verdict, VerdictKind, decide, validate_witness
from .network import NetworkFormatError, load_network
from .numerics import BINARY_INPUT_EPS_BUDGET, DimensionError, Tolerances
from .oracle import ENUMERATION_CAP, enumerate_decide, sample_decide
from .propspec import PropertySyntaxError, extract_box, load_property, negate_output

log = logging.getLogger("relureach")

EXIT_OK, EXIT_ERROR, EXIT_REACHABLE, EXIT_DISAGREE = 0, 2, 3, 4


class UsageError(Exception):
    pass


@dataclass
class RunReport:
    verdict: str
    witness: list = None
    output: list = None
    eps_sum: float = None
    reason: str = ""
    num_variables: int = 0
    num_continuous: int = 0
    num_binaries: int = 0
    num_constraints: int = 0
    unstable_relus: int = 0
    nodes: int = 0
    lp_solves: int = 0
    timings: dict = field(default_factory=dict)
    eps_budget: float = None
    mode: str = ""
    seed: int = 0
    tool_version: str = __version__
    network_sha256: str = ""
    property_sha256: str = ""


def _digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _tolerances(args) -> Tolerances:
    budget = BINARY_INPUT_EPS_BUDGET if args.binary_input_tolerance else args.tolerance
    return Tolerances(eps_budget=budget)


def _big_m(value: str):
    if value == "auto":
        return None
    try:
        m = float(value)
    except ValueError:
        raise argparse.ArgumentTypeError("--big-m takes 'auto' or a positive number") from None
    if not m > 0:
        raise argparse.ArgumentTypeError("--big-m must be positive")
    return m


def _load(args):
    net = load_network(args.network)
    spec = load_property(args.property, net.input_dim, net.output_dim)
    if getattr(args, "negate_output", False):
        try:
            spec = negate_output(spec)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
    return net, spec


def _pipeline(args, net, spec):
    """bounds -> encode -> decide -> replay; returns (RunReport, Verdict)."""
    timings = {}
    tol = _tolerances(args)
    mode = Mode.EXACT if args.exact else Mode.EPSILON
    report = RunReport(verdict="", eps_budget=tol.eps_budget if mode is Mode.EPSILON else 0.0, mode=mode.value, seed=args.seed)
    report.network_sha256 = _digest(args.network)
    report.property_sha256 = _digest(args.property)

    t = time.perf_counter()
    box = extract_box(spec.input_constraints, net.input_dim)
    if box.is_empty:
        report.verdict = VerdictKind.UNREACHABLE.value
        report.reason = "input box is empty"
        return report, Verdict(VerdictKind.UNREACHABLE, reason=report.reason)
    bounds = propagate(net, box.lo, box.hi)
    timings["bounds"] = time.perf_counter() - t
    report.unstable_relus = count_unstable(bounds)

    t = time.perf_counter()
    problem = encode_problem(net, spec, bounds, tol, mode, args.big_m)
    timings["encode"] = time.perf_counter() - t
    if args.big_m is not None:
        needed = max((max(-lb.pre_lo.min(), lb.pre_hi.max()) for lb in bounds if lb.relu), default=0.0)
        if args.big_m < needed:
            log.warning("--big-m %g is below the interval bound %g; the encoding may be unsound", args.big_m, needed)
    report.num_variables = len(problem.variables)
    report.num_continuous = problem.num_continuous
    report.num_binaries = problem.num_binaries
    report.num_constraints = problem.num_rows

    t = time.perf_counter()
    verdict = decide(problem, net, spec, Limits(args.node_cap, args.timeout), tol)
    timings["search"] = time.perf_counter() - t
    report.nodes = verdict.stats.nodes
    report.lp_solves = verdict.stats.lp_solves
    report.verdict = verdict.kind.value
    report.reason = verdict.reason
    if verdict.reachable:
        t = time.perf_counter()
        rep = validate_witness(net, spec, verdict.witness)
        timings["validate"] = time.perf_counter() - t
        report.witness = [float(v) for v in verdict.witness]
        report.output = [float(v) for v in rep.output]
        report.eps_sum = verdict.eps_sum
    report.timings = timings
    return report, verdict


def _print_report(report: RunReport, as_json: bool):
    if as_json:
        print(json.dumps(asdict(report), indent=2))
        return
    print(f"verdict: {report.verdict}" + (f" ({report.reason})" if report.reason else ""))
    if report.witness is not None:
        print(f"witness: {' '.join(repr(v) for v in report.witness)}")
        print(f"output:  {' '.join(repr(v) for v in report.output)}")
        print(f"eps_sum: {report.eps_sum!r} (budget {report.eps_budget!r})")
    print(
        f"vars: {report.num_variables} ({report.num_continuous} continuous, {report.num_binaries} binary), "
        f"rows: {report.num_constraints}, nodes: {report.nodes}, LP solves: {report.lp_solves}"
    )
    print("time: " + ", ".join(f"{k} {v:.3f}s" for k, v in report.timings.items()))


def cmd_verify(args) -> int:
    net, spec = _load(args)
    report, verdict = _pipeline(args, net, spec)
    _print_report(report, args.json)
    if args.fail_on_reachable and verdict.reachable:
        return EXIT_REACHABLE
    return EXIT_OK


def cmd_export(args) -> int:
    net, spec = _load(args)
    mode = Mode.EXACT if args.exact else Mode.EPSILON
    problem = encode_problem(net, spec, None, _tolerances(args), mode, args.big_m)
    Path(args.output).write_text(export_lp_file(problem), encoding="utf-8")
    print(
        f"wrote {args.output}: {len(problem.variables)} variables "
        f"({problem.num_continuous} continuous, {problem.num_binaries} binary), {problem.num_rows} rows"
    )
    return EXIT_OK


def _parse_vector(text: str) -> np.ndarray:
    try:
        return np.array([float(tok) for tok in text.replace(",", " ").split()], dtype=np.float64)
    except ValueError:
        raise UsageError(f"cannot parse input vector {text!r}") from None


def cmd_eval(args) -> int:
    net = load_network(args.network)
    x = _parse_vector(args.input)
    if x.shape[0] != net.input_dim:
        raise UsageError(f"network expects {net.input_dim} inputs, got {x.shape[0]}")
    y = net.forward(x)
    if args.json:
        print(json.dumps({"input": x.tolist(), "output": y.tolist()}))
    else:
        print(" ".join(repr(float(v)) for v in y))
    return EXIT_OK


def cmd_check(args) -> int:
    net, spec = _load(args)
    report, verdict = _pipeline(args, net, spec)
    result = {"verify": report.verdict, "enumeration": None, "sampling": None, "agree": True}

    box = extract_box(spec.input_constraints, net.input_dim)
    if report.unstable_relus <= ENUMERATION_CAP and not box.is_empty:
        oracle = enumerate_decide(net, spec)
        result["enumeration"] = oracle.kind.value
        if verdict.kind is not VerdictKind.INCONCLUSIVE and oracle.kind is not verdict.kind:
            result["agree"] = False
    else:
        result["enumeration_skipped"] = f"{report.unstable_relus} unstable ReLUs exceed cap {ENUMERATION_CAP}"

    if box.is_finite and not box.is_empty:
        sample = sample_decide(net, spec, args.samples, args.seed)
        result["sampling"] = "found" if sample.found else "none_found"
        if sample.found:
            result["sample_witness"] = sample.witness.tolist()
            if not verdict.reachable:
                result["agree"] = False
    result["report"] = asdict(report)

    if args.json:
        print(json.dumps(result, indent=2))
    else:
        print(f"verify:      {result['verify']}")
        print(f"enumeration: {result['enumeration'] or result.get('enumeration_skipped')}")
        print(f"sampling:    {result['sampling'] or 'skipped (unbounded inputs)'}")
        print("agreement:   " + ("yes" if result["agree"] else "NO"))
    return EXIT_OK if result["agree"] else EXIT_DISAGREE


def _add_query_flags(p):
    p.add_argument("--network", required=True, metavar="PATH", help="network JSON file")
    p.add_argument("--property", required=True, metavar="PROP", help="property text file")
    p.add_argument("--tolerance", type=float, default=1e-6, metavar="T", help="slack budget t (default 1e-6)")
    p.add_argument(
        "--binary-input-tolerance",
        action="store_true",
        help=f"use the larger budget {BINARY_INPUT_EPS_BUDGET:g} for binary-valued inputs",
    )
    p.add_argument("--exact", action="store_true", help="encode without slack variables")
    p.add_argument("--big-m", type=_big_m, default=None, metavar="{auto|VALUE}", help="big-M constant (default: auto from interval bounds)")
    p.add_argument("--negate-output", action="store_true", help="flip a single <=/>= output constraint")
    p.add_argument("--json", action="store_true", help="machine-readable output")


def _add_search_flags(p):
    p.add_argument("--timeout", type=float, default=600.0, metavar="SECONDS")
    p.add_argument("--node-cap", type=int, default=100_000, metavar="N")
    p.add_argument("--seed", type=int, default=0, metavar="S")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="relureach", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="decide whether the output set is reachable")
    _add_query_flags(p)
    _add_search_flags(p)
    p.add_argument("--fail-on-reachable", action="store_true", help="exit 3 when a witness is found")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("export", help="write the encoding as an LP file")
    _add_query_flags(p)
    p.add_argument("--output", "-o", required=True, metavar="PATH")
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("eval", help="evaluate the network at one input")
    p.add_argument("--network", required=True, metavar="PATH")
    p.add_argument("--input", required=True, metavar="X", help="comma- or space-separated values")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("check", help="compare the search against the brute-force oracles")
    _add_query_flags(p)
    _add_search_flags(p)
    p.add_argument("--samples", type=int, default=10_000, metavar="N")
    p.set_defaults(func=cmd_check)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_ERROR if exc.code else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (
        OSError,
        NetworkFormatError,
        PropertySyntaxError,
        DimensionError,
        UnboundedInputError,
        EmptyInputSetError,
        UsageError,
        ValueError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
