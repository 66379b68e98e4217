"""Reachability checking for feed-forward ReLU networks via a big-M MILP encoding."""

__version__ = "0.1.0"

from .encoder import EncodedProblem, Mode, encode_problem
from .milp import Limits, Verdict, VerdictKind, decide, validate_witness, verify
from .network import Layer, Network, forward, load_network
from .numerics import Tolerances
from .propspec import PropertySpec, parse_property

__all__ = [
    "EncodedProblem",
    "Layer",
    "Limits",
    "Mode",
    "Network",
    "PropertySpec",
    "Tolerances",
    "Verdict",
    "VerdictKind",
    "decide",
    "encode_problem",
    "forward",
    "load_network",
    "parse_property",
    "validate_witness",
    "verify",
]
