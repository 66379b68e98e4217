"""Dense vector/matrix helpers and the tolerance constants shared by the solver stack."""

from dataclasses import dataclass

import numpy as np


class DimensionError(ValueError):
    """Raised when two operands have incompatible shapes."""


class NonFiniteError(ValueError):
    """Raised when a vector or matrix contains NaN or infinite entries."""


@dataclass(frozen=True)
class Tolerances:
    """Numeric tolerances for one verification query.

    feas_tol:   row/bound violation accepted by the LP engine.
    int_tol:    distance from 0/1 at which a relaxed binary counts as integral.
    eps_budget: upper bound on the sum of layer-link slack variables.
    """

    feas_tol: float = 1e-7
    int_tol: float = 1e-6
    eps_budget: float = 1e-6

    def __post_init__(self):
        for name in ("feas_tol", "int_tol", "eps_budget"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be a positive finite number, got {value!r}")
        if self.int_tol >= 0.5:
            raise ValueError(f"int_tol must be below 0.5, got {self.int_tol!r}")


DEFAULT_TOLERANCES = Tolerances()
# budget used when inputs are binary-valued
BINARY_INPUT_EPS_BUDGET = 1e-4


def as_vec(values, name: str = "vector") -> np.ndarray:
    """Copy `values` into a read-only 1-d float64 array, rejecting empty or non-finite input."""
    arr = np.atleast_1d(np.array(values, dtype=np.float64))
    if arr.ndim != 1:
        raise DimensionError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.size == 0:
        raise DimensionError(f"{name} must have at least one entry")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(f"{name} contains non-finite entries")
    arr.setflags(write=False)
    return arr


def as_mat(values, name: str = "matrix") -> np.ndarray:
    arr = np.array(values, dtype=np.float64)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be two-dimensional, got shape {arr.shape}")
    if arr.shape[0] == 0 or arr.shape[1] == 0:
        raise DimensionError(f"{name} must be non-empty, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(f"{name} contains non-finite entries")
    arr.setflags(write=False)
    return arr


def mat_vec(W: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Return W @ x, accumulating each row in ascending column order.

    The explicit loop order keeps the result bit-for-bit reproducible
    independent of the BLAS build, which witness replay relies on.
    """
    W = np.asarray(W, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if W.ndim != 2 or x.ndim != 1 or W.shape[1] != x.shape[0]:
        raise DimensionError(
            f"cannot multiply matrix with {W.shape[-1] if W.ndim else 0} columns "
            f"by vector of dimension {x.shape[0] if x.ndim else 0}"
        )
    out = np.zeros(W.shape[0], dtype=np.float64)
    for j in range(W.shape[1]):
        out += W[:, j] * x[j]
    return out


def relu_vec(x) -> np.ndarray:
    return np.maximum(np.asarray(x, dtype=np.float64), 0.0)
