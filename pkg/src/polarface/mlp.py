"""Feed-forward tansig network trained by full-batch backpropagation with momentum.

Weights of layer l form an (n_l, n_{l-1}) matrix, so a_l = tansig(W_l a_{l-1} + b_l).
The loss is E = 1/2 * sum over examples of |t - o|^2 and targets are one-hot
in {-1, +1}.
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

log = logging.getLogger(__name__)

REJECT = -1
DEFAULT_HIDDEN = (100, 60, 30)


class DivergenceError(ArithmeticError):
    def __init__(self, epoch: int):
        super().__init__(f"training diverged (non-finite loss) at epoch {epoch}")
        self.epoch = epoch


def tansig(x):
    return np.tanh(x)


@dataclass(frozen=True, eq=False)
class MlpNetwork:
    layer_sizes: tuple[int, ...]
    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]
    activation: str = "tansig"

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.layer_sizes)
        object.__setattr__(self, "layer_sizes", sizes)
        object.__setattr__(self, "weights", tuple(np.asarray(w, dtype=np.float64) for w in self.weights))
        object.__setattr__(self, "biases", tuple(np.asarray(b, dtype=np.float64) for b in self.biases))
        if len(self.weights) != len(sizes) - 1 or len(self.biases) != len(sizes) - 1:
            raise ValueError("need one weight matrix and bias vector per non-input layer")
        for l, (w, b) in enumerate(zip(self.weights, self.biases), start=1):
            if w.shape != (sizes[l], sizes[l - 1]) or b.shape != (sizes[l],):
                raise ValueError(f"layer {l}: weights {w.shape}, biases {b.shape} "
                                 f"do not match sizes {sizes[l - 1]}->{sizes[l]}")
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise ValueError(f"layer {l} has non-finite parameters")

    @property
    def n_inputs(self) -> int:
        return self.layer_sizes[0]

    @property
    def n_outputs(self) -> int:
        return self.layer_sizes[-1]


@dataclass
class TrainConfig:
    learning_rate: float = 0.02
    momentum: float = 0.9
    max_epochs: int = 5000
    target_mse: float = 1e-3
    rng_seed: int = 0
    init: str = "uniform_inv_sqrt_fan_in"

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")
        if not 0.0 <= self.momentum <= 1.0:
            raise ValueError(f"momentum must be in [0, 1], got {self.momentum}")
        if self.max_epochs < 0:
            raise ValueError(f"max_epochs must be >= 0, got {self.max_epochs}")
        if self.target_mse < 0:
            raise ValueError(f"target_mse must be >= 0, got {self.target_mse}")


@dataclass
class Gradient:
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def __add__(self, other: "Gradient") -> "Gradient":
        return Gradient([a + b for a, b in zip(self.weights, other.weights)],
                        [a + b for a, b in zip(self.biases, other.biases)])

    def flat(self) -> np.ndarray:
        return np.concatenate([a.ravel() for pair in zip(self.weights, self.biases) for a in pair])


@dataclass
class TrainState:
    prev_delta: Gradient
    epoch: int = 0
    mse_history: list[float] = field(default_factory=list)
    final_mse: float = float("nan")

    @classmethod
    def zeros_like(cls, net: MlpNetwork) -> "TrainState":
        return cls(Gradient([np.zeros_like(w) for w in net.weights],
                            [np.zeros_like(b) for b in net.biases]))


def init_network(layer_sizes: Sequence[int], seed: int = 0) -> MlpNetwork:
    """Weights uniform in +-1/sqrt(fan_in), biases zero."""
    sizes = tuple(int(s) for s in layer_sizes)
    if len(sizes) < 2 or min(sizes) < 1:
        raise ValueError(f"need >= 2 layers of size >= 1, got {layer_sizes}")
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return MlpNetwork(sizes, tuple(weights), tuple(biases))


def _check_input(net: MlpNetwork, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != net.n_inputs:
        raise ValueError(f"input has length {x.shape[-1]}, network expects {net.n_inputs}")
    return x


def _rowwise(A: np.ndarray, M: np.ndarray) -> np.ndarray:
    # stacked (n, 1, k) @ (k, m): each row is computed by the same kernel whatever n is,
    # unlike a single (n, k) @ (k, m) GEMM, so batch results equal per-example results bit for bit
    return np.matmul(A[:, None, :], M)[:, 0, :]


def forward(net: MlpNetwork, x) -> tuple[np.ndarray, list[np.ndarray]]:
    """Output activations and the list of every layer's activations (input first).

    ``x`` may be a single vector or a batch with one example per row.
    """
    a = _check_input(net, x)
    single = a.ndim == 1
    a = np.atleast_2d(a)
    acts = [a]
    for w, b in zip(net.weights, net.biases):
        a = tansig(_rowwise(a, w.T) + b)
        acts.append(a)
    if single:
        acts = [v[0] for v in acts]
    return acts[-1], acts


def _batch(net: MlpNetwork, inputs, targets):
    X = _check_input(net, inputs)
    T = np.asarray(targets, dtype=np.float64)
    if X.ndim != 2 or len(X) == 0:
        raise ValueError("batch must be a non-empty list of input vectors")
    if T.shape != (len(X), net.n_outputs):
        raise ValueError(f"targets shape {T.shape} does not match {len(X)} examples "
                         f"x {net.n_outputs} outputs")
    return X, T


def _ordered_sum(terms: np.ndarray) -> np.ndarray:
    # reduction over the leading axis adds examples strictly in order
    return np.add.reduce(terms, axis=0)


def _outer_sum(delta: np.ndarray, a: np.ndarray, chunk: int = 256) -> np.ndarray:
    acc = None
    for s in range(0, len(delta), chunk):
        prods = delta[s:s + chunk, :, None] * a[s:s + chunk, None, :]
        if acc is not None:
            prods = np.concatenate([acc[None], prods])
        acc = _ordered_sum(prods)
    return acc


def loss_and_gradient(net: MlpNetwork, inputs, targets) -> tuple[float, Gradient]:
    """Sum-of-squares loss and its gradient, summed over examples in batch order."""
    X, T = _batch(net, inputs, targets)
    out, acts = forward(net, X)
    err = out - T
    delta = err * (1.0 - out * out)
    gw, gb = [], []
    for l in range(len(net.weights) - 1, -1, -1):
        gw.append(_outer_sum(delta, acts[l]))
        gb.append(_ordered_sum(delta))
        if l:
            delta = _rowwise(delta, net.weights[l]) * (1.0 - acts[l] * acts[l])
    return 0.5 * float(np.sum(err * err)), Gradient(gw[::-1], gb[::-1])


def batch_gradient(net: MlpNetwork, inputs, targets) -> Gradient:
    return loss_and_gradient(net, inputs, targets)[1]


def loss(net: MlpNetwork, inputs, targets) -> float:
    X, T = _batch(net, inputs, targets)
    out, _ = forward(net, X)
    return 0.5 * float(np.sum((T - out) ** 2))


def mse(net: MlpNetwork, inputs, targets) -> float:
    """Mean over examples and output units of the squared error."""
    X, T = _batch(net, inputs, targets)
    out, _ = forward(net, X)
    return float(np.mean((T - out) ** 2))


def momentum_step(net: MlpNetwork, grad: Gradient, state: TrainState,
                  cfg: TrainConfig) -> tuple[MlpNetwork, TrainState]:
    """dw = mc * dw_prev + (1 - mc) * lr * (-grad); w += dw. Same for biases."""
    mc = cfg.momentum
    step = (1.0 - mc) * cfg.learning_rate

    def delta(prev, g):
        return mc * prev + step * -g

    with np.errstate(over="ignore", invalid="ignore"):
        dw = [delta(p, g) for p, g in zip(state.prev_delta.weights, grad.weights)]
        db = [delta(p, g) for p, g in zip(state.prev_delta.biases, grad.biases)]
    if not all(np.all(np.isfinite(d)) for d in (*dw, *db)):
        raise DivergenceError(state.epoch + 1)
    new = MlpNetwork(net.layer_sizes,
                     tuple(w + d for w, d in zip(net.weights, dw)),
                     tuple(b + d for b, d in zip(net.biases, db)),
                     net.activation)
    return new, TrainState(Gradient(dw, db), state.epoch + 1, state.mse_history, state.final_mse)


def train(net: MlpNetwork, inputs, targets, cfg: TrainConfig,
          state: TrainState | None = None) -> tuple[MlpNetwork, TrainState]:
    """Full-batch training until ``max_epochs`` or until MSE <= ``target_mse``.

    ``mse_history[e]`` is the MSE of the weights in force at the start of
    epoch e; ``state.final_mse`` is the MSE of the returned network.
    """
    X, T = _batch(net, inputs, targets)
    n_values = T.size
    state = TrainState.zeros_like(net) if state is None else state
    while True:
        sse, grad = loss_and_gradient(net, X, T)
        if not np.isfinite(sse):
            raise DivergenceError(state.epoch)
        current = 2.0 * sse / n_values
        if current <= cfg.target_mse or state.epoch >= cfg.max_epochs:
            break
        state.mse_history.append(current)
        net, state = momentum_step(net, grad, state, cfg)
        if state.epoch % 500 == 0:
            log.debug("epoch %d mse %.6g", state.epoch, current)
    state.final_mse = current
    return net, state


def one_hot(labels: Sequence[int], n_classes: int) -> np.ndarray:
    """Targets with +1 at the true class and -1 elsewhere."""
    T = -np.ones((len(labels), n_classes))
    T[np.arange(len(labels)), np.asarray(labels, dtype=int)] = 1.0
    return T


def decide(outputs, reject_threshold: float | None = None) -> int:
    """Argmax with ties to the lowest index; REJECT if the winner falls below the threshold."""
    outputs = np.asarray(outputs)
    k = int(np.argmax(outputs))
    if reject_threshold is not None and outputs[k] < reject_threshold:
        return REJECT
    return k


def classify(net: MlpNetwork, x, reject_threshold: float | None = None) -> int:
    out, _ = forward(net, x)
    return decide(out, reject_threshold)


def constructive_search(inputs, targets, cfg: TrainConfig,
                        candidates: Sequence[Sequence[int]] = ((8, 6, 4), (16, 12, 8), (32, 24, 16),
                                                               (64, 40, 20), DEFAULT_HIDDEN),
                        seed: int = 0) -> tuple[MlpNetwork, TrainState]:
    """Train growing hidden-layer configurations until one reaches ``cfg.target_mse``.

    Returns the first (smallest) network that meets the target, or the last one
    tried if none do.
    """
    X = np.asarray(inputs, dtype=np.float64)
    T = np.asarray(targets, dtype=np.float64)
    result = None
    for hidden in candidates:
        sizes = (X.shape[1], *hidden, T.shape[1])
        result = train(init_network(sizes, seed), X, T, cfg)
        log.info("hidden %s -> mse %.6g after %d epochs", hidden, result[1].final_mse, result[1].epoch)
        if result[1].final_mse <= cfg.target_mse:
            break
    if result is None:
        raise ValueError("no candidate sizes given")
    return result


def model_to_json(net: MlpNetwork, cfg: TrainConfig | None = None,
                  final_mse: float | None = None) -> str:
    return json.dumps({
        "layer_sizes": list(net.layer_sizes),
        "weights": [w.tolist() for w in net.weights],
        "biases": [b.tolist() for b in net.biases],
        "activation": net.activation,
        "train_config": asdict(cfg) if cfg is not None else None,
        "final_mse": final_mse,
    })


def model_from_json(text: str) -> tuple[MlpNetwork, TrainConfig | None, float | None]:
    d = json.loads(text)
    if d.get("activation", "tansig") != "tansig":
        raise ValueError(f"unsupported activation {d['activation']!r}")
    net = MlpNetwork(tuple(d["layer_sizes"]),
                     tuple(np.asarray(w, dtype=np.float64).reshape(o, i) for w, o, i
                           in zip(d["weights"], d["layer_sizes"][1:], d["layer_sizes"][:-1])),
                     tuple(np.asarray(b, dtype=np.float64) for b in d["biases"]))
    cfg = TrainConfig(**d["train_config"]) if d.get("train_config") else None
    return net, cfg, d.get("final_mse")
