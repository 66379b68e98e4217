"""Random networks and properties for stress suites and demos."""

import numpy as np

from .bounds import count_unstable, propagate
from .network import Activation, Network, random_network
from .propspec import LinConstraint, PropertySpec, Relation, box_property


def random_box(rng: np.random.Generator, dim: int, center_scale: float = 1.0, max_halfwidth: float = 1.0):
    center = rng.uniform(-center_scale, center_scale, dim)
    half = rng.uniform(0.05, max_halfwidth, dim)
    return center - half, center + half


def random_halfspace_property(rng: np.random.Generator, net: Network, lo, hi, n_probe: int = 256) -> PropertySpec:
    """Box input plus one output halfspace whose threshold straddles the sampled output range.

    Thresholds are drawn from slightly beyond the probed min/max of the
    projected outputs, so both reachable and unreachable instances appear.
    """
    a = rng.normal(size=net.output_dim)
    a[np.abs(a) < 1e-3] = 1e-3
    X = rng.uniform(lo, hi, size=(n_probe, net.input_dim))
    vals = np.array([a @ net.forward(x) for x in X])
    span = max(vals.max() - vals.min(), 1e-3)
    rel = Relation.GE if rng.random() < 0.5 else Relation.LE
    if rel is Relation.GE:
        thr = vals.max() + rng.uniform(-0.5, 0.3) * span
    else:
        thr = vals.min() - rng.uniform(-0.5, 0.3) * span
    con = LinConstraint(tuple((j, float(c)) for j, c in enumerate(a)), rel, float(thr))
    return box_property(lo, hi, (con,))


def random_instance(rng: np.random.Generator, max_unstable: int = 12, max_tries: int = 200):
    """(network, box) with 1-3 ReLU layers of width 2-6, a linear output and at most `max_unstable` unstable ReLUs."""
    for _ in range(max_tries):
        in_dim = int(rng.integers(1, 4))
        hidden = [int(rng.integers(2, 7)) for _ in range(int(rng.integers(1, 4)))]
        out_dim = int(rng.integers(1, 3))
        net = random_network(rng, [in_dim] + hidden + [out_dim], Activation.LINEAR)
        lo, hi = random_box(rng, in_dim)
        if count_unstable(propagate(net, lo, hi)) <= max_unstable:
            return net, lo, hi
    raise RuntimeError("could not draw an instance under the unstable-neuron cap")
