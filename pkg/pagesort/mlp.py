"""
The 5-5-3 feed-forward network: logistic sigmoid on both layers, trained
by online backpropagation on squared error. The three outputs carry a
3-bit class code; each output is read as 1 when it is at least 0.50.
"""
import logging
from dataclasses import dataclass
from typing import List, Sequence, Tuple, Union

import numpy as np

from .errors import EmptyDatasetError, TrainingDivergedError
from .models import ClassLabel, FeatureVector, TrainConfig, TrainReport

logger = logging.getLogger(__name__)

N_INPUT, N_HIDDEN, N_OUTPUT = 5, 5, 3
ARCHITECTURE = (N_INPUT, N_HIDDEN, N_OUTPUT)
THRESHOLD = 0.50

PARAM_NAMES = ("w_ih", "b_h", "w_ho", "b_o")
PARAM_SHAPES = {
    "w_ih": (N_INPUT, N_HIDDEN),
    "b_h": (N_HIDDEN,),
    "w_ho": (N_HIDDEN, N_OUTPUT),
    "b_o": (N_OUTPUT,),
}

# Second generator stream for epoch shuffles, so init and shuffling never share draws.
_SHUFFLE_STREAM = 1

Input = Union[FeatureVector, Sequence[float], np.ndarray]
Sample = Tuple[FeatureVector, ClassLabel]


@dataclass(frozen=True, eq=False)
class Network:
    """
    Weights and biases. ``w_ih[i, j]`` connects input i to hidden unit j,
    ``w_ho[j, k]`` hidden unit j to output k. Arrays are copied and made
    read-only on construction.
    """

    w_ih: np.ndarray
    b_h: np.ndarray
    w_ho: np.ndarray
    b_o: np.ndarray

    def __post_init__(self):
        for name in PARAM_NAMES:
            array = np.array(getattr(self, name), dtype=np.float64)
            if array.shape != PARAM_SHAPES[name]:
                raise ValueError(f"{name} must have shape {PARAM_SHAPES[name]}, got {array.shape}")
            if not np.all(np.isfinite(array)):
                raise ValueError(f"{name} contains non-finite values")
            array.flags.writeable = False
            object.__setattr__(self, name, array)

    def params(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        return self.w_ih, self.b_h, self.w_ho, self.b_o

    def __eq__(self, other) -> bool:
        # Bit-level equality: -0.0 and 0.0 differ, as they would in a model file.
        if not isinstance(other, Network):
            return NotImplemented
        return all(a.tobytes() == b.tobytes() for a, b in zip(self.params(), other.params()))

    __hash__ = None


@dataclass(frozen=True)
class Gradients:
    """dE/dparam for every parameter, same shapes as Network."""

    w_ih: np.ndarray
    b_h: np.ndarray
    w_ho: np.ndarray
    b_o: np.ndarray

    def params(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        return self.w_ih, self.b_h, self.w_ho, self.b_o


def sigmoid(z: np.ndarray) -> np.ndarray:
    """Logistic function, evaluated without overflow for large |z|."""
    e = np.exp(-np.abs(z))
    return np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def encode_label(label: ClassLabel) -> Tuple[float, float, float]:
    b0, b1, b2 = label.bits
    return float(b0), float(b1), float(b2)


def decode_output(raw: Sequence[float]) -> ClassLabel:
    return ClassLabel.from_bits([1 if value >= THRESHOLD else 0 for value in raw])


def init_network(config: TrainConfig) -> Network:
    """Uniform weights in [-init_scale, init_scale] from a generator seeded by config.seed."""
    rng = np.random.default_rng(config.seed)
    scale = config.init_scale
    return Network(**{name: rng.uniform(-scale, scale, size=PARAM_SHAPES[name]) for name in PARAM_NAMES})


def _as_input(x: Input) -> np.ndarray:
    if isinstance(x, FeatureVector):
        x = x.as_list()
    array = np.asarray(x, dtype=np.float64)
    if array.shape != (N_INPUT,):
        raise ValueError(f"input must have {N_INPUT} components, got shape {array.shape}")
    return array


def _forward(w_ih, b_h, w_ho, b_o, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    hidden = sigmoid(x @ w_ih + b_h)
    output = sigmoid(hidden @ w_ho + b_o)
    return hidden, output


def _backward(w_ih, b_h, w_ho, b_o, x: np.ndarray, target: np.ndarray):
    hidden, output = _forward(w_ih, b_h, w_ho, b_o, x)
    error = output - target
    delta_o = error * output * (1.0 - output)
    delta_h = (w_ho @ delta_o) * hidden * (1.0 - hidden)
    grads = (np.outer(x, delta_h), delta_h, np.outer(hidden, delta_o), delta_o)
    return grads, float(error @ error)


def forward(net: Network, x: Input) -> Tuple[np.ndarray, np.ndarray]:
    """
    Run the network.

    Returns:
        (hidden activations, 5 values; outputs, 3 values in (0, 1))
    """
    return _forward(*net.params(), _as_input(x))


def sample_error(net: Network, x: Input, target: Sequence[float]) -> float:
    """E = 1/2 * sum_k (target_k - output_k)^2 for one sample."""
    _, output = forward(net, x)
    diff = np.asarray(target, dtype=np.float64) - output
    return 0.5 * float(diff @ diff)


def gradients(net: Network, x: Input, target: Sequence[float]) -> Gradients:
    grads, _ = _backward(*net.params(), _as_input(x), np.asarray(target, dtype=np.float64))
    return Gradients(*grads)


def backprop_step(net: Network, x: Input, target: Sequence[float], lr: float) -> Tuple[Network, float]:
    """
    One online gradient step on a single sample.

    Returns:
        (updated network, squared error sum_k (target_k - output_k)^2 before the update)
    """
    grads, squared_error = _backward(*net.params(), _as_input(x), np.asarray(target, dtype=np.float64))
    updated = Network(*(param - lr * grad for param, grad in zip(net.params(), grads)))
    return updated, squared_error


def train(net: Network, data: Sequence[Sample], config: TrainConfig) -> Tuple[Network, TrainReport]:
    """
    Online backpropagation over seeded per-epoch shuffles.

    Stops after config.epochs epochs, or earlier once the epoch mean of the
    per-sample squared errors drops to config.target_mse.
    """
    if not data:
        raise EmptyDatasetError("empty training set")

    xs = np.array([_as_input(x) for x, _ in data])
    targets = np.array([encode_label(label) for _, label in data])
    params = [param.copy() for param in net.params()]
    rng = np.random.default_rng([config.seed, _SHUFFLE_STREAM])
    lr = config.learning_rate

    history: List[float] = []
    for epoch in range(1, config.epochs + 1):
        total = 0.0
        for i in rng.permutation(len(data)):
            grads, squared_error = _backward(*params, xs[i], targets[i])
            for param, grad in zip(params, grads):
                param -= lr * grad
            total += squared_error
        mse = total / len(data)
        history.append(mse)

        if not all(np.all(np.isfinite(param)) for param in params):
            raise TrainingDivergedError(f"non-finite weights after epoch {epoch} (mse={mse})")
        if epoch % 100 == 0:
            logger.info("epoch %d: mse=%.6f", epoch, mse)
        if mse <= config.target_mse:
            logger.info("Reached target mse %.6f at epoch %d", config.target_mse, epoch)
            break

    report = TrainReport(epochs_run=len(history), final_mse=history[-1], mse_history=tuple(history))
    return Network(*params), report


def predict(net: Network, x: Input) -> Tuple[ClassLabel, Tuple[float, float, float]]:
    _, output = forward(net, x)
    raw = (float(output[0]), float(output[1]), float(output[2]))
    return decode_output(raw), raw
