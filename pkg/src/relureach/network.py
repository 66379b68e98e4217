"""Feed-forward ReLU network model, JSON loader and the reference forward evaluation."""

import enum
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .numerics import DimensionError, NonFiniteError, as_mat, as_vec, mat_vec, relu_vec


class Activation(str, enum.Enum):
    RELU = "relu"
    LINEAR = "linear"


class NetworkFormatError(ValueError):
    """Raised for malformed network files; `location` names the offending field."""

    def __init__(self, message: str, location: str = ""):
        self.location = location
        super().__init__(f"{location}: {message}" if location else message)


class ShapeMismatchError(NetworkFormatError):
    pass


@dataclass(frozen=True)
class Layer:
    weights: np.ndarray
    bias: np.ndarray
    activation: Activation = Activation.RELU

    def __post_init__(self):
        object.__setattr__(self, "weights", as_mat(self.weights, "weights"))
        object.__setattr__(self, "bias", as_vec(self.bias, "bias"))
        object.__setattr__(self, "activation", Activation(self.activation))
        if self.weights.shape[0] != self.bias.shape[0]:
            raise DimensionError(
                f"weights have {self.weights.shape[0]} rows but bias has {self.bias.shape[0]} entries"
            )

    @property
    def in_dim(self) -> int:
        return self.weights.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weights.shape[0]

    @property
    def is_relu(self) -> bool:
        return self.activation is Activation.RELU


def layer_forward(layer: Layer, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != layer.in_dim:
        raise DimensionError(f"layer expects input of dimension {layer.in_dim}, got {x.shape}")
    pre = mat_vec(layer.weights, x) + layer.bias
    return relu_vec(pre) if layer.is_relu else pre


@dataclass(frozen=True)
class Network:
    """Layers 2..k of a network whose first layer is the `input_dim`-wide input."""

    input_dim: int
    layers: tuple

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        if self.input_dim < 1:
            raise DimensionError("input_dim must be at least 1")
        if not self.layers:
            raise DimensionError("a network needs at least one non-input layer")
        width = self.input_dim
        for idx, layer in enumerate(self.layers):
            if layer.in_dim != width:
                prev = "input layer" if idx == 0 else f"layer {idx + 1}"
                raise ShapeMismatchError(
                    f"layer {idx + 2} has {layer.in_dim} weight columns but {prev} has width {width}",
                    location=f"layers[{idx}].weights",
                )
            width = layer.out_dim

    @property
    def num_layers(self) -> int:
        """Layer count k, input layer included."""
        return len(self.layers) + 1

    @property
    def output_dim(self) -> int:
        return self.layers[-1].out_dim

    @property
    def widths(self) -> list:
        return [self.input_dim] + [layer.out_dim for layer in self.layers]

    def forward(self, x) -> np.ndarray:
        return forward(self, x)

    def to_dict(self) -> dict:
        return {
            "input_dim": self.input_dim,
            "layers": [
                {
                    "weights": layer.weights.tolist(),
                    "bias": layer.bias.tolist(),
                    "activation": layer.activation.value,
                }
                for layer in self.layers
            ],
        }


def forward(net: Network, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != net.input_dim:
        raise DimensionError(f"network expects input of dimension {net.input_dim}, got {x.shape}")
    for layer in net.layers:
        x = layer_forward(layer, x)
    return x


def network_from_dict(doc) -> Network:
    if not isinstance(doc, dict):
        raise NetworkFormatError("top level must be a JSON object")
    if "input_dim" not in doc:
        raise NetworkFormatError("missing field", location="input_dim")
    input_dim = doc["input_dim"]
    if isinstance(input_dim, bool) or not isinstance(input_dim, int) or input_dim < 1:
        raise NetworkFormatError(f"must be a positive integer, got {input_dim!r}", location="input_dim")
    raw_layers = doc.get("layers")
    if not isinstance(raw_layers, list) or not raw_layers:
        raise NetworkFormatError("must be a non-empty list", location="layers")

    layers = []
    for idx, raw in enumerate(raw_layers):
        where = f"layers[{idx}]"
        if not isinstance(raw, dict):
            raise NetworkFormatError("must be an object", location=where)
        for key in ("weights", "bias"):
            if key not in raw:
                raise NetworkFormatError("missing field", location=f"{where}.{key}")
        act = raw.get("activation", "relu")
        if act not in ("relu", "linear"):
            raise NetworkFormatError(f"unknown activation {act!r}", location=f"{where}.activation")
        weights = raw["weights"]
        if (
            not isinstance(weights, list)
            or not weights
            or not all(isinstance(row, list) for row in weights)
            or len({len(row) for row in weights}) != 1
        ):
            raise NetworkFormatError("must be a non-empty rectangular list of rows", location=f"{where}.weights")
        try:
            layer = Layer(weights, raw["bias"], Activation(act))
        except NonFiniteError as exc:
            raise NetworkFormatError(str(exc), location=where) from exc
        except DimensionError as exc:
            raise ShapeMismatchError(str(exc), location=where) from exc
        except (TypeError, ValueError) as exc:
            raise NetworkFormatError(f"non-numeric entry ({exc})", location=where) from exc
        layers.append(layer)
    return Network(input_dim, layers)


def _reject_constant(token):
    raise ValueError(f"non-finite literal {token}")


def load_network(path) -> Network:
    """Read a network from a JSON file (see README for the schema)."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise NetworkFormatError(exc.msg, location=f"line {exc.lineno} column {exc.colno}") from exc
    except ValueError as exc:
        raise NetworkFormatError(str(exc)) from exc
    return network_from_dict(doc)


def save_network(net: Network, path) -> None:
    Path(path).write_text(json.dumps(net.to_dict(), indent=1), encoding="utf-8")


def random_network(rng: np.random.Generator, widths, output_activation=Activation.LINEAR, scale=None) -> Network:
    """Gaussian weights/biases for a network with the given layer widths (input first)."""
    layers = []
    for idx, (fan_in, fan_out) in enumerate(zip(widths[:-1], widths[1:])):
        std = scale if scale is not None else 1.0 / np.sqrt(fan_in)
        act = output_activation if idx == len(widths) - 2 else Activation.RELU
        layers.append(Layer(rng.normal(0.0, std, (fan_out, fan_in)), rng.normal(0.0, 0.5, fan_out), act))
    return Network(widths[0], layers)
