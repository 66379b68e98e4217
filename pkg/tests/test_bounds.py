import numpy as np
import pytest

from relureach.bounds import M_FLOOR, LayerBounds, Phase, UnboundedInputError, big_m_for, propagate
from relureach.network import Activation, Layer, Network, random_network

REL = 1e-12


def _single(W, b):
    return Network(len(W[0]), [Layer(W, b)])


def test_propagate_unstable_sum():
    (lb,) = propagate(_single([[1.0, 1.0]], [0.0]), [-1.0, -1.0], [1.0, 1.0])
    # hand interval arithmetic: [-1 - 1, 1 + 1]
    assert lb.pre_lo[0] == pytest.approx(-2.0, rel=REL)
    assert lb.pre_hi[0] == pytest.approx(2.0, rel=REL)
    assert lb.phases == (Phase.UNSTABLE,)
    assert lb.post_lo[0] == 0.0


def test_propagate_forced_active():
    (lb,) = propagate(_single([[1.0]], [5.0]), [-1.0], [1.0])
    assert (lb.pre_lo[0], lb.pre_hi[0]) == pytest.approx((4.0, 6.0), rel=REL)
    assert lb.phases == (Phase.ACTIVE,)


def test_propagate_forced_inactive():
    (lb,) = propagate(_single([[-1.0]], [-5.0]), [0.0], [1.0])
    assert (lb.pre_lo[0], lb.pre_hi[0]) == pytest.approx((-6.0, -5.0), rel=REL)
    assert lb.phases == (Phase.INACTIVE,)
    assert lb.post_hi[0] == 0.0


def test_big_m_examples():
    (lb,) = propagate(_single([[1.0, 1.0]], [0.0]), [-1.0, -1.0], [1.0, 1.0])
    assert big_m_for(lb, 0) == pytest.approx((2.0, 2.0), rel=REL)
    z = np.zeros(1)
    asym = LayerBounds(np.array([-3.0]), np.array([1.0]), z, np.array([1.0]), (Phase.UNSTABLE,), True)
    assert big_m_for(asym, 0) == (3.0, 1.0)
    flat = LayerBounds(z, z, z, z, (Phase.ACTIVE,), True)
    assert big_m_for(flat, 0) == (M_FLOOR, M_FLOOR) == (1e-6, 1e-6)


def test_unbounded_inputs_flagged():
    net = _single([[1.0, 1.0]], [0.0])
    (lb,) = propagate(net, [-np.inf, -1.0], [1.0, 1.0])
    assert not lb.is_finite
    with pytest.raises(UnboundedInputError, match="bound every network input"):
        big_m_for(lb, 0)


def test_zero_weight_on_unbounded_input_stays_finite():
    (lb,) = propagate(_single([[0.0, 1.0]], [0.0]), [-np.inf, -1.0], [np.inf, 1.0])
    assert lb.is_finite


def _pre_activations(net, x):
    pres = []
    for layer in net.layers:
        pre = layer.weights @ x + layer.bias
        pres.append(pre)
        x = np.maximum(pre, 0.0) if layer.is_relu else pre
    return pres


def test_soundness_sampling(rng):
    violations = 0
    for _ in range(1000):
        widths = [int(rng.integers(1, 5))] + [int(rng.integers(1, 7)) for _ in range(int(rng.integers(1, 4)))] + [2]
        net = random_network(rng, widths)
        lo = rng.uniform(-2, 1, widths[0])
        hi = lo + rng.uniform(0, 2, widths[0])
        bounds = propagate(net, lo, hi)
        x = rng.uniform(lo, hi)
        for lb, pre in zip(bounds, _pre_activations(net, x)):
            violations += int(np.sum(pre < lb.pre_lo) + np.sum(pre > lb.pre_hi))
    assert violations == 0


def test_shrinking_box_never_widens(rng):
    for _ in range(200):
        net = random_network(rng, [3, 5, 4, 1])
        lo = rng.uniform(-2, 0, 3)
        hi = lo + rng.uniform(0, 2, 3)
        t = rng.uniform(0, 1, 3)
        s = rng.uniform(0, 1, 3)
        inner_lo = lo + (hi - lo) * np.minimum(t, s)
        inner_hi = lo + (hi - lo) * np.maximum(t, s)
        for outer, inner in zip(propagate(net, lo, hi), propagate(net, inner_lo, inner_hi)):
            assert np.all(inner.pre_lo >= outer.pre_lo) and np.all(inner.pre_hi <= outer.pre_hi)


def test_phase_fixing_conservative(rng):
    for _ in range(100):
        net = random_network(rng, [2, 6, 6, 1], Activation.RELU)
        lo = rng.uniform(-1, 0.5, 2)
        hi = lo + rng.uniform(0, 0.5, 2)
        bounds = propagate(net, lo, hi)
        for x in rng.uniform(lo, hi, (50, 2)):
            for lb, pre in zip(bounds, _pre_activations(net, x)):
                for j, phase in enumerate(lb.phases):
                    if phase is Phase.ACTIVE:
                        assert pre[j] >= 0.0
                    elif phase is Phase.INACTIVE:
                        assert pre[j] <= 0.0
