"""
Fully-connected feedforward networks in NumPy.

An ``L x N`` network maps R^d -> R^J through L + 1 activated layers of width N
followed by a bias-free linear readout:

    Psi(y) = W_{L+1} rho(W_L rho(... rho(W_0 y + b_0) ...) + b_L)

The activated output of the last hidden layer is the network's dictionary
(penultimate features); the readout rows are its coefficients. Training
minimizes the weighted least-squares loss

    (1/m) sum_i w_i |Psi(y_i) - f(y_i)|^2

with full-batch Adam and an exponentially decaying learning rate. Gradients are
computed exactly by reverse accumulation through the layer recursion.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
from scipy import linalg

from .errors import DimensionMismatchError, TrainingDivergenceError

logger = logging.getLogger(__name__)

INIT_STD = 0.1  # variance 0.01


class Activation(Enum):
    """Component-wise activation shared by every hidden layer."""
    RELU = "relu"
    TANH = "tanh"
    ELU = "elu"


def activate(activation: Activation, x: np.ndarray) -> np.ndarray:
    if activation is Activation.RELU:
        return np.maximum(x, 0.0)
    if activation is Activation.TANH:
        return np.tanh(x)
    return np.where(x > 0, x, np.expm1(np.minimum(x, 0.0)))


def activation_derivative(activation: Activation, x: np.ndarray) -> np.ndarray:
    """Derivative of ``activation`` at ``x``; the ReLU kink at 0 gets slope 0."""
    if activation is Activation.RELU:
        return (x > 0).astype(x.dtype)
    if activation is Activation.TANH:
        return 1.0 - np.tanh(x) ** 2
    return np.where(x > 0, 1.0, np.exp(np.minimum(x, 0.0))).astype(x.dtype)


@dataclass(frozen=True)
class Architecture:
    """Shape of a rho L x N network with input dimension d and output dimension J."""
    input_dim: int
    depth: int
    width: int
    output_dim: int = 1
    activation: Activation = Activation.TANH

    def __post_init__(self):
        if self.input_dim < 1 or self.width < 1 or self.output_dim < 1:
            raise ValueError("input_dim, width and output_dim must be positive")
        if self.depth < 0:
            raise ValueError(f"depth must be non-negative, got {self.depth}")
        if not isinstance(self.activation, Activation):
            object.__setattr__(self, "activation", Activation(self.activation))

    @property
    def layer_sizes(self) -> Tuple[int, ...]:
        """N_0 = d, N_1 = ... = N_{L+1} = N, N_{L+2} = J."""
        return (self.input_dim,) + (self.width,) * (self.depth + 1) + (self.output_dim,)

    @property
    def hidden_layers(self) -> int:
        return self.depth + 1

    def to_dict(self) -> Dict[str, Any]:
        return {
            "input_dim": self.input_dim,
            "depth": self.depth,
            "width": self.width,
            "output_dim": self.output_dim,
            "activation": self.activation.value,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Architecture":
        return cls(
            input_dim=int(data["input_dim"]),
            depth=int(data["depth"]),
            width=int(data["width"]),
            output_dim=int(data["output_dim"]),
            activation=Activation(data["activation"]),
        )


@dataclass
class NetworkParams:
    """Weights W_0..W_{L+1} and biases b_0..b_L; the readout has no bias."""
    architecture: Architecture
    weights: List[np.ndarray]
    biases: List[np.ndarray]

    def __post_init__(self):
        sizes = self.architecture.layer_sizes
        if len(self.weights) != len(sizes) - 1 or len(self.biases) != len(sizes) - 2:
            raise DimensionMismatchError(
                f"expected {len(sizes) - 1} weight matrices and {len(sizes) - 2} bias vectors"
            )
        for l, W in enumerate(self.weights):
            if W.shape != (sizes[l + 1], sizes[l]):
                raise DimensionMismatchError(f"W_{l} has shape {W.shape}, expected {(sizes[l + 1], sizes[l])}")
        for l, b in enumerate(self.biases):
            if b.shape != (sizes[l + 1],):
                raise DimensionMismatchError(f"b_{l} has shape {b.shape}, expected {(sizes[l + 1],)}")

    @property
    def dtype(self) -> np.dtype:
        return self.weights[0].dtype

    @property
    def readout(self) -> np.ndarray:
        """W_{L+1}, shape J x N."""
        return self.weights[-1]

    def arrays(self) -> List[np.ndarray]:
        """All parameter arrays in layer order: weights, then biases."""
        return list(self.weights) + list(self.biases)

    def with_arrays(self, arrays: List[np.ndarray]) -> "NetworkParams":
        count = len(self.weights)
        return NetworkParams(self.architecture, list(arrays[:count]), list(arrays[count:]))

    def copy(self) -> "NetworkParams":
        return self.with_arrays([a.copy() for a in self.arrays()])

    def zeros_like(self) -> "NetworkParams":
        return self.with_arrays([np.zeros_like(a) for a in self.arrays()])


def init_params(
    arch: Architecture,
    seed: Union[int, np.random.Generator],
    dtype=np.float64,
) -> NetworkParams:
    """Every weight and bias entry i.i.d. N(0, 0.01)."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    sizes = arch.layer_sizes
    weights = [rng.normal(0.0, INIT_STD, size=(sizes[l + 1], sizes[l])).astype(dtype) for l in range(len(sizes) - 1)]
    biases = [rng.normal(0.0, INIT_STD, size=sizes[l + 1]).astype(dtype) for l in range(len(sizes) - 2)]
    return NetworkParams(arch, weights, biases)


def _as_batch(params: NetworkParams, y: np.ndarray) -> Tuple[np.ndarray, bool]:
    y = np.asarray(y, dtype=params.dtype)
    single = y.ndim == 1
    batch = y.reshape(1, -1) if single else y
    if batch.ndim != 2 or batch.shape[1] != params.architecture.input_dim:
        raise DimensionMismatchError(
            f"network expects inputs of dimension {params.architecture.input_dim}, got shape {y.shape}"
        )
    return batch, single


def _hidden_pass(params: NetworkParams, Y: np.ndarray) -> Tuple[List[np.ndarray], List[np.ndarray]]:
    """Pre-activations Z_l and activations A_l of every hidden layer."""
    activation = params.architecture.activation
    pre, post = [], []
    A = Y
    for W, b in zip(params.weights[:-1], params.biases):
        Z = A @ W.T + b
        A = activate(activation, Z)
        pre.append(Z)
        post.append(A)
    return pre, post


def penultimate_features(params: NetworkParams, y: np.ndarray) -> np.ndarray:
    """Dictionary values psi_1..psi_N at ``y``: shape (N,) or (M, N)."""
    batch, single = _as_batch(params, y)
    _, post = _hidden_pass(params, batch)
    features = post[-1]
    if not np.all(np.isfinite(features)):
        raise TrainingDivergenceError("non-finite penultimate features")
    return features[0] if single else features


def forward(params: NetworkParams, y: np.ndarray) -> np.ndarray:
    """Network output at ``y``: shape (J,) or (M, J)."""
    batch, single = _as_batch(params, y)
    _, post = _hidden_pass(params, batch)
    out = post[-1] @ params.readout.T
    if not np.all(np.isfinite(out)):
        raise TrainingDivergenceError("non-finite network output")
    return out[0] if single else out


@dataclass
class TrainingData:
    """Points (m x d), targets (m x J) and positive weights (m,)."""
    points: np.ndarray
    targets: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points))
        targets = np.asarray(self.targets)
        self.targets = targets[:, None] if targets.ndim == 1 else targets
        self.weights = np.asarray(self.weights).ravel()
        m = self.points.shape[0]
        if self.targets.shape[0] != m or self.weights.shape[0] != m:
            raise DimensionMismatchError(
                f"points ({m}), targets ({self.targets.shape[0]}) and weights ({self.weights.shape[0]}) differ in length"
            )
        if np.any(self.weights <= 0):
            raise ValueError("training weights must be positive")

    def __len__(self) -> int:
        return self.points.shape[0]


def _prepare(params: NetworkParams, points, targets, weights) -> TrainingData:
    data = points if isinstance(points, TrainingData) else TrainingData(points, targets, weights)
    if data.targets.shape[1] != params.architecture.output_dim:
        raise DimensionMismatchError(
            f"targets have {data.targets.shape[1]} components, network outputs {params.architecture.output_dim}"
        )
    dtype = params.dtype
    return TrainingData(data.points.astype(dtype), data.targets.astype(dtype), data.weights.astype(dtype))


def weighted_loss(params: NetworkParams, points, targets=None, weights=None) -> float:
    """(1/m) sum_i w_i sum_k (Psi(y_i)_k - t_ik)^2."""
    data = _prepare(params, points, targets, weights)
    residual = forward(params, data.points) - data.targets
    return float(np.sum(data.weights * np.sum(residual ** 2, axis=1)) / len(data))


def loss_and_gradient(params: NetworkParams, points, targets=None, weights=None) -> Tuple[float, NetworkParams]:
    """Weighted loss and its exact gradient with respect to every parameter."""
    data = _prepare(params, points, targets, weights)
    m = len(data)
    activation = params.architecture.activation

    pre, post = _hidden_pass(params, data.points)
    out = post[-1] @ params.readout.T
    if not np.all(np.isfinite(out)):
        raise TrainingDivergenceError("non-finite network output")
    residual = out - data.targets
    loss = float(np.sum(data.weights * np.sum(residual ** 2, axis=1)) / m)

    G = (2.0 / m) * data.weights[:, None] * residual
    weight_grads = [None] * len(params.weights)
    bias_grads = [None] * len(params.biases)
    weight_grads[-1] = G.T @ post[-1]
    dA = G @ params.readout
    inputs = [data.points] + post[:-1]
    for l in range(len(params.biases) - 1, -1, -1):
        dZ = dA * activation_derivative(activation, pre[l])
        weight_grads[l] = dZ.T @ inputs[l]
        bias_grads[l] = dZ.sum(axis=0)
        dA = dZ @ params.weights[l]

    return loss, NetworkParams(params.architecture, weight_grads, bias_grads)


def gradient(params: NetworkParams, points, targets=None, weights=None) -> NetworkParams:
    return loss_and_gradient(params, points, targets, weights)[1]


@dataclass
class AdamState:
    """First/second moment accumulators shaped like the parameters."""
    first: List[np.ndarray]
    second: List[np.ndarray]
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    @classmethod
    def fresh(cls, params: NetworkParams, beta1: float = 0.9, beta2: float = 0.999, epsilon: float = 1e-8) -> "AdamState":
        zeros = [np.zeros_like(a) for a in params.arrays()]
        return cls([z.copy() for z in zeros], zeros, 0, beta1, beta2, epsilon)

    def copy(self) -> "AdamState":
        return AdamState(
            [a.copy() for a in self.first],
            [a.copy() for a in self.second],
            self.step,
            self.beta1,
            self.beta2,
            self.epsilon,
        )


def adam_step(
    state: AdamState,
    params: NetworkParams,
    grads: NetworkParams,
    lr: float,
) -> Tuple[AdamState, NetworkParams]:
    """One bias-corrected Adam update; returns new state and parameters."""
    grad_arrays = grads.arrays()
    param_arrays = params.arrays()
    if len(grad_arrays) != len(param_arrays) or any(g.shape != p.shape for g, p in zip(grad_arrays, param_arrays)):
        raise DimensionMismatchError("gradient shapes do not match parameter shapes")
    if not all(np.all(np.isfinite(g)) for g in grad_arrays):
        raise TrainingDivergenceError("non-finite gradient", epoch=state.step)

    t = state.step + 1
    b1, b2, eps = state.beta1, state.beta2, state.epsilon
    first, second, updated = [], [], []
    for p, g, m, v in zip(param_arrays, grad_arrays, state.first, state.second):
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * g * g
        m_hat = m / (1.0 - b1 ** t)
        v_hat = v / (1.0 - b2 ** t)
        updated.append((p - lr * m_hat / (np.sqrt(v_hat) + eps)).astype(p.dtype))
        first.append(m.astype(p.dtype))
        second.append(v.astype(p.dtype))

    return AdamState(first, second, t, b1, b2, eps), params.with_arrays(updated)


@dataclass(frozen=True)
class LearningRateSchedule:
    """Exponential decay lr(e) = initial * decay^e in the global epoch e."""
    initial: float = 1e-3
    decay: float = 1.0

    def __post_init__(self):
        if self.initial <= 0:
            raise ValueError(f"initial learning rate must be positive, got {self.initial}")
        if not 0 < self.decay <= 1:
            raise ValueError(f"decay must lie in (0, 1], got {self.decay}")

    @classmethod
    def over_budget(cls, initial: float, total_epochs: int, drop: float = 10.0) -> "LearningRateSchedule":
        """Decay so the rate falls by ``drop`` over ``total_epochs``."""
        if total_epochs <= 0:
            return cls(initial, 1.0)
        return cls(initial, float(drop ** (-1.0 / total_epochs)))

    def __call__(self, epoch: int) -> float:
        return self.initial * self.decay ** epoch


@dataclass
class TrainingResult:
    params: NetworkParams
    state: AdamState
    losses: np.ndarray = field(default_factory=lambda: np.empty(0))

    @property
    def final_loss(self) -> float:
        return float(self.losses[-1]) if self.losses.size else float("nan")


def train(
    params: NetworkParams,
    state: AdamState,
    data: TrainingData,
    epochs: int,
    schedule: LearningRateSchedule,
) -> TrainingResult:
    """
    Full-batch Adam for ``epochs`` steps. The learning rate is taken at the
    optimizer's global step, so warm-started calls continue the decay.
    """
    if epochs < 0:
        raise ValueError(f"epochs must be non-negative, got {epochs}")
    losses = np.empty(epochs)
    for epoch in range(epochs):
        try:
            loss, grads = loss_and_gradient(params, data)
        except TrainingDivergenceError as e:
            raise TrainingDivergenceError(str(e.args[0]), epoch=epoch) from e
        if not np.isfinite(loss):
            raise TrainingDivergenceError("non-finite training loss", epoch=epoch)
        losses[epoch] = loss
        try:
            state, params = adam_step(state, params, grads, schedule(state.step))
        except TrainingDivergenceError as e:
            raise TrainingDivergenceError(str(e.args[0]), epoch=epoch) from e

    if epochs:
        logger.debug(f"Trained {epochs} epochs: loss {losses[0]:.3e} -> {losses[-1]:.3e}")
    return TrainingResult(params, state, losses)


def fit_readout(params: NetworkParams, data: TrainingData) -> NetworkParams:
    """
    Replace W_{L+1} by the minimum-norm weighted least-squares fit over the
    penultimate dictionary, keeping the hidden layers frozen.
    """
    data = _prepare(params, data, None, None)
    features = penultimate_features(params, data.points).astype(np.float64)
    scale = np.sqrt(data.weights.astype(np.float64) / len(data))[:, None]
    coefficients, *_ = linalg.lstsq(scale * features, scale * data.targets.astype(np.float64), check_finite=False)
    weights = list(params.weights)
    weights[-1] = coefficients.T.astype(params.dtype)
    return NetworkParams(params.architecture, weights, list(params.biases))


def dictionary_ranking(params: NetworkParams, grid_points: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Order dictionary elements by |c_i| / ||psi_i||, the coefficient magnitude
    times the reciprocal grid L2 norm. Returns (order, scores).
    """
    features = penultimate_features(params, grid_points).astype(np.float64)
    norms = np.sqrt(np.mean(features ** 2, axis=0))
    magnitudes = np.linalg.norm(params.readout.astype(np.float64), axis=0)
    scores = np.zeros_like(norms)
    nonzero = norms > 0
    scores[nonzero] = magnitudes[nonzero] / norms[nonzero]
    order = np.argsort(-scores, kind="stable")
    return order, scores
