"""Interval bound propagation: sound pre-activation ranges, big-M constants and phase fixing."""

import enum
from dataclasses import dataclass

import numpy as np

from .network import Network

M_FLOOR = 1e-6


class Phase(enum.Enum):
    ACTIVE = "active"  # pre-activation >= 0 on the whole input box
    INACTIVE = "inactive"  # pre-activation <= 0 on the whole input box
    UNSTABLE = "unstable"


class UnboundedInputError(ValueError):
    """Big-M constants need finite bounds on every input feeding a ReLU layer."""


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo <= self.hi:
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")

    @property
    def is_finite(self) -> bool:
        return bool(np.isfinite(self.lo) and np.isfinite(self.hi))


@dataclass(frozen=True)
class LayerBounds:
    """Per-neuron ranges of one layer; arrays are indexed by neuron."""

    pre_lo: np.ndarray
    pre_hi: np.ndarray
    post_lo: np.ndarray
    post_hi: np.ndarray
    phases: tuple
    relu: bool

    @property
    def width(self) -> int:
        return len(self.pre_lo)

    def pre_act(self, j: int) -> Interval:
        return Interval(float(self.pre_lo[j]), float(self.pre_hi[j]))

    def post_act(self, j: int) -> Interval:
        return Interval(float(self.post_lo[j]), float(self.post_hi[j]))

    @property
    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.pre_lo)) and np.all(np.isfinite(self.pre_hi)))

    @property
    def unstable(self) -> list:
        return [j for j, p in enumerate(self.phases) if p is Phase.UNSTABLE]


def _affine_bounds(W, b, lo, hi):
    """Interval image of {W x + b : lo <= x <= hi}.

    Zero weights contribute nothing even on infinite inputs, so 0 * inf never
    appears.
    """
    pos = np.clip(W, 0.0, None)
    neg = np.clip(W, None, 0.0)
    with np.errstate(invalid="ignore"):
        up = np.where(pos != 0, pos * hi, 0.0) + np.where(neg != 0, neg * lo, 0.0)
        down = np.where(pos != 0, pos * lo, 0.0) + np.where(neg != 0, neg * hi, 0.0)
    lo_sum, hi_sum = down.sum(axis=1) + b, up.sum(axis=1) + b
    # outward pad covering float rounding of the forward dot products
    mag = np.maximum(np.abs(lo), np.abs(hi))
    with np.errstate(invalid="ignore"):
        scale = np.where(W != 0, np.abs(W) * mag, 0.0).sum(axis=1) + np.abs(b)
    pad = (W.shape[1] + 2) * np.finfo(np.float64).eps * scale
    return lo_sum - pad, hi_sum + pad


def propagate(net: Network, lo, hi) -> list:
    """Interval bounds for every non-input layer, given the input box [lo, hi].

    Infinite box sides are allowed; the resulting intervals are then infinite
    and `LayerBounds.is_finite` is False, which the encoder rejects for ReLU
    layers.
    """
    lo = np.asarray(lo, dtype=np.float64)
    hi = np.asarray(hi, dtype=np.float64)
    if lo.shape != (net.input_dim,) or hi.shape != (net.input_dim,):
        raise ValueError(f"input box must have dimension {net.input_dim}")
    if np.any(lo > hi):
        raise ValueError("input box is empty")
    result = []
    for layer in net.layers:
        pre_lo, pre_hi = _affine_bounds(layer.weights, layer.bias, lo, hi)
        if layer.is_relu:
            phases = tuple(
                Phase.ACTIVE if l >= 0 else Phase.INACTIVE if h <= 0 else Phase.UNSTABLE
                for l, h in zip(pre_lo, pre_hi)
            )
            post_lo = np.maximum(pre_lo, 0.0)
            post_hi = np.maximum(pre_hi, 0.0)
        else:
            phases = tuple(Phase.ACTIVE for _ in pre_lo)
            post_lo, post_hi = pre_lo, pre_hi
        result.append(LayerBounds(pre_lo, pre_hi, post_lo, post_hi, phases, layer.is_relu))
        lo, hi = post_lo, post_hi
    return result


def big_m_for(bounds: LayerBounds, j: int) -> tuple:
    """(M_lo, M_hi) for neuron j.

    M_lo multiplies the binary in ``x <= W x + b + M_lo * d`` and must cover the
    most negative pre-activation; M_hi bounds the active output in
    ``x <= M_hi * (1 - d)``.
    """
    lo, hi = float(bounds.pre_lo[j]), float(bounds.pre_hi[j])
    if not (np.isfinite(lo) and np.isfinite(hi)):
        raise UnboundedInputError(
            f"neuron {j} has unbounded pre-activation [{lo}, {hi}]; bound every network input in the property"
        )
    return max(M_FLOOR, -lo), max(M_FLOOR, hi)


def count_unstable(bounds) -> int:
    return sum(len(lb.unstable) for lb in bounds if lb.relu)
