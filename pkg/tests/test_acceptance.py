"""Acceptance criteria, one test per criterion.

Each test records a PASS/FAIL line; the lines are printed in the pytest
terminal summary and also when this file is run directly:

    python3 tests/test_acceptance.py
"""

import functools
import sys
import time

import numpy as np
import pytest

from relureach.bounds import propagate
from relureach.encoder import Mode, encode_problem
from relureach.generate import random_halfspace_property, random_instance
from relureach.lpfile import export_lp_file, parse_lp_file
from relureach.milp import Limits, VerdictKind, validate_witness, verify
from relureach.network import Activation, Layer, Network, random_network
from relureach.numerics import BINARY_INPUT_EPS_BUDGET, Tolerances
from relureach.oracle import enumerate_decide, sample_decide
from relureach.propspec import LinConstraint, Relation, box_property

RESULTS = {}

SUITE_NETWORKS = 200
PROPS_PER_NETWORK = 3


def record(name, ok, detail):
    RESULTS[name] = (bool(ok), detail)
    assert ok, f"{name}: {detail}"


@functools.lru_cache(maxsize=None)
def suite():
    """Random instances with their search verdicts under both slack budgets."""
    rng = np.random.default_rng(7)
    cases = []
    t0 = time.perf_counter()
    for _ in range(SUITE_NETWORKS):
        net, lo, hi = random_instance(rng, max_unstable=12)
        for _ in range(PROPS_PER_NETWORK):
            spec = random_halfspace_property(rng, net, lo, hi)
            verdict, _ = verify(net, spec)
            cases.append((net, spec, verdict))
    return cases, time.perf_counter() - t0


def test_oracle_equivalence():
    cases, search_time = suite()
    t0 = time.perf_counter()
    disagree = 0
    for net, spec, verdict in cases:
        if enumerate_decide(net, spec).kind is not verdict.kind:
            disagree += 1
    total = search_time + time.perf_counter() - t0
    reach = sum(v.reachable for _, _, v in cases)
    record(
        "oracle equivalence",
        disagree == 0 and total < 300,
        f"{len(cases)} instances ({reach} reachable), {disagree} disagreements, {total:.1f}s",
    )


@functools.lru_cache(maxsize=None)
def binary_preset_runs():
    tol = Tolerances(eps_budget=BINARY_INPUT_EPS_BUDGET)
    return [(net, spec, verify(net, spec, tol)[0]) for net, spec, _ in suite()[0]]


def test_witness_soundness():
    runs = list(suite()[0]) + binary_preset_runs() + scale_runs()
    failures, checked = 0, 0
    for net, spec, verdict in runs:
        if verdict.reachable:
            checked += 1
            rep = validate_witness(net, spec, verdict.witness, tol=1e-5, input_tol=0.0)
            failures += not rep.ok
    record("witness soundness", failures == 0 and checked > 0, f"{checked} witnesses replayed, {failures} failures")


def test_sampling_one_sided():
    violations, found = 0, 0
    for net, spec, verdict in suite()[0]:
        res = sample_decide(net, spec, 10_000, seed=0)
        if res.found:
            found += 1
            violations += not verdict.reachable
    record("sampling one-sidedness", violations == 0, f"{found} sampled witnesses, {violations} violations")


def test_relu_range():
    rng = np.random.default_rng(11)
    wrong = 0
    for _ in range(50):
        in_dim = int(rng.integers(1, 4))
        widths = [in_dim] + [int(rng.integers(2, 7)) for _ in range(int(rng.integers(1, 4)))] + [int(rng.integers(1, 3))]
        net = random_network(rng, widths, Activation.RELU)
        lo = rng.uniform(-2, 0, in_dim)
        hi = lo + rng.uniform(0.1, 2, in_dim)
        spec = box_property(lo, hi, (LinConstraint(((0, 1.0),), Relation.LE, -0.1),))
        wrong += verify(net, spec)[0].kind is not VerdictKind.UNREACHABLE
    record("ReLU range", wrong == 0, f"50 networks, {wrong} not Unreachable")


def test_count_contract():
    details, ok = [], True
    for n in (1, 5, 16):
        signs = np.where(np.arange(n) % 2, -1.0, 1.0)
        net = Network(1, [Layer((signs * np.linspace(0.5, 2.0, n))[:, None], np.zeros(n), Activation.RELU)])
        problem = encode_problem(net, box_property([-1.0], [1.0]), mode=Mode.EXACT)
        layer_rows = [r for r in problem.rows if r.name.startswith("L")]
        ok &= len(layer_rows) == 4 * n and problem.num_binaries == n
        details.append(f"n={n}: {len(layer_rows)} rows, {problem.num_binaries} binaries")
    record("encoding-count contract", ok, "; ".join(details))


def test_eps_budget():
    worst = {}
    ok = True
    for budget, runs in ((1e-6, suite()[0]), (BINARY_INPUT_EPS_BUDGET, binary_preset_runs())):
        sums = [v.eps_sum for _, _, v in runs if v.reachable]
        worst[budget] = max(sums)
        ok &= all(s <= budget for s in sums)
    record("eps budget", ok, ", ".join(f"t={t:g}: max eps_sum {w:.3g}" for t, w in worst.items()))


# operating box of a 4-input pendulum controller, inputs (x, v, theta, omega)
SCALE_LO = np.array([-0.5, -0.2, -5 * np.pi / 180, -0.1])
SCALE_HI = np.array([0.5, 0.2, -4 * np.pi / 180, 0.1])


@functools.lru_cache(maxsize=None)
def _scale_cases():
    out = []
    for seed in (0, 1):
        rng = np.random.default_rng(seed)
        net = random_network(rng, [4, 16, 16, 16, 2], Activation.LINEAR)
        X = rng.uniform(SCALE_LO, SCALE_HI, (2000, 4))
        diff = np.array([net.forward(x) @ [-1.0, 1.0] for x in X])
        for margin in (diff.max() + 0.01, diff.max() - 0.01):
            spec = box_property(SCALE_LO, SCALE_HI, (LinConstraint(((1, 1.0), (0, -1.0)), Relation.GE, float(margin)),))
            t0 = time.perf_counter()
            verdict, problem = verify(net, spec, limits=Limits(time_cap=60.0))
            out.append((net, spec, verdict, problem, time.perf_counter() - t0))
    return out


def scale_runs():
    return [(net, spec, verdict) for net, spec, verdict, _, _ in _scale_cases()]


def test_scale():
    cases = _scale_cases()
    slowest = max(t for *_, t in cases)
    most_bin = max(p.num_binaries for _, _, _, p, _ in cases)
    decided = all(v.kind is not VerdictKind.INCONCLUSIVE for _, _, v, _, _ in cases)
    kinds = "/".join(v.kind.value for _, _, v, _, _ in cases)
    record(
        "scale 4-16-16-16-2",
        decided and slowest < 10.0 and most_bin <= 48,
        f"{len(cases)} queries ({kinds}), slowest {slowest:.2f}s, at most {most_bin} binaries",
    )


def test_lp_round_trip():
    rng = np.random.default_rng(5)
    mismatches = 0
    for k in range(20):
        net, lo, hi = random_instance(rng)
        mode = Mode.EXACT if k % 2 else Mode.EPSILON
        p = encode_problem(net, random_halfspace_property(rng, net, lo, hi), mode=mode)
        again = parse_lp_file(export_lp_file(p))
        same = (
            again == p
            and again.num_binaries == p.num_binaries
            and again.num_rows == p.num_rows
            and [(v.lb, v.ub) for v in again.variables] == [(v.lb, v.ub) for v in p.variables]
        )
        mismatches += not same
    record("LP export round-trip", mismatches == 0, f"20 problems, {mismatches} mismatches")


def test_big_m_soundness():
    rng = np.random.default_rng(3)
    violations = 0
    for _ in range(1000):
        widths = [int(rng.integers(1, 5))] + [int(rng.integers(1, 7)) for _ in range(int(rng.integers(1, 4)))] + [2]
        net = random_network(rng, widths)
        lo = rng.uniform(-2, 1, widths[0])
        hi = lo + rng.uniform(0, 2, widths[0])
        x = rng.uniform(lo, hi)
        for lb, layer in zip(propagate(net, lo, hi), net.layers):
            pre = layer.weights @ x + layer.bias
            violations += int(np.sum(pre < lb.pre_lo) + np.sum(pre > lb.pre_hi))
            x = np.maximum(pre, 0.0) if layer.is_relu else pre
    record("big-M soundness", violations == 0, f"1000 triples, {violations} violations")


def format_results():
    return [f"{'PASS' if ok else 'FAIL'}  {name}: {detail}" for name, (ok, detail) in RESULTS.items()]


if __name__ == "__main__":
    tests = [v for k, v in list(globals().items()) if k.startswith("test_")]
    for test in tests:
        try:
            test()
        except AssertionError:
            pass
    print("\n".join(format_results()))
    sys.exit(0 if all(ok for ok, _ in RESULTS.values()) else 1)
