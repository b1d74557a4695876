"""Feed-forward, Elman and LSTM regressors with hand-written backprop and Adam.

Parameters live in plain ``dict[str, np.ndarray]`` so that the optimizer,
gradient checks and serialization all treat the three architectures alike.
Training runs on standardized targets; predictions are mapped back to raw
units.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

ACTIVATIONS = {
    "relu": (lambda z: np.maximum(z, 0.0), lambda z, a: (z > 0).astype(z.dtype)),
    "tanh": (np.tanh, lambda z, a: 1.0 - a * a),
    "identity": (lambda z: z, lambda z, a: np.ones_like(z)),
}

# Defaults for full-grid benchmark runs.
DEFAULT_HIDDEN = {"mlp": 500, "rnn": 500, "lstm": 200}
DEFAULT_LR = {"mlp": 0.01, "rnn": 0.0001, "lstm": 0.0005}
EPOCHS_BY_NDAYS = {
    "rnn": {1: 100, 2: 200, 5: 300, 10: 500, 20: 800, 30: 1000},
    "lstm": {1: 50, 2: 50, 5: 70, 10: 100, 20: 200, 30: 300},
}
MLP_EPOCHS = (100, 200, 500, 1000)
CLIP_NORM = 5.0


class NeuralError(ValueError):
    pass


class DivergenceError(ArithmeticError):
    pass


def sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


@dataclass
class DenseLayer:
    weights: np.ndarray  # (in, out)
    bias: np.ndarray  # (out,)
    activation: str = "identity"

    def __post_init__(self):
        self.weights = np.atleast_2d(np.asarray(self.weights, dtype=float))
        self.bias = np.atleast_1d(np.asarray(self.bias, dtype=float))
        if self.bias.shape != (self.weights.shape[1],):
            raise NeuralError(f"bias shape {self.bias.shape} does not match weights {self.weights.shape}")
        if self.activation not in ACTIVATIONS:
            raise NeuralError(f"unknown activation {self.activation!r}")


def forward_dense(layer: DenseLayer, x) -> np.ndarray:
    """``f(x . w + b)`` for a single vector or a batch of row vectors."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != layer.weights.shape[0]:
        raise NeuralError(f"input has {x.shape[-1]} values, layer expects {layer.weights.shape[0]}")
    f, _ = ACTIVATIONS[layer.activation]
    return f(x @ layer.weights + layer.bias)


def glorot(rng, fan_in, fan_out, shape=None):
    a = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-a, a, size=shape or (fan_in, fan_out))


# ---------------------------------------------------------------------------
# Adam


@dataclass
class AdamState:
    learning_rate: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adam_step(params: dict, grads: dict, state: AdamState):
    """One bias-corrected Adam update, in place. Returns ``(params, state)``."""
    state.step += 1
    t = state.step
    bc1 = 1.0 - state.beta1**t
    bc2 = 1.0 - state.beta2**t
    for name, p in params.items():
        g = grads[name]
        if g.shape != p.shape:
            raise NeuralError(f"gradient for {name} has shape {g.shape}, parameter {p.shape}")
        if name not in state.m:
            state.m[name] = np.zeros_like(p)
            state.v[name] = np.zeros_like(p)
        m, v = state.m[name], state.v[name]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        p -= state.learning_rate * (m / bc1) / (np.sqrt(v / bc2) + state.eps)
    return params, state


# ---------------------------------------------------------------------------
# architectures: init, forward, loss + gradient


def init_mlp(rng, n_in, hidden):
    return {
        "W1": glorot(rng, n_in, hidden),
        "b1": np.zeros(hidden),
        "W2": glorot(rng, hidden, 1, (hidden,)),
        "b2": np.zeros(1),
    }


def mlp_forward(params, X):
    z = X @ params["W1"] + params["b1"]
    a = np.maximum(z, 0.0)
    return a @ params["W2"] + params["b2"][0], (z, a)


def mlp_loss_grad(params, X, y):
    out, (z, a) = mlp_forward(params, X)
    diff = out - y
    loss = float(np.mean(diff * diff))
    d = 2.0 * diff / X.shape[0]
    dz = np.outer(d, params["W2"]) * (z > 0)
    grads = {
        "W1": X.T @ dz,
        "b1": dz.sum(axis=0),
        "W2": a.T @ d,
        "b2": np.array([d.sum()]),
    }
    return loss, grads


def init_rnn(rng, n_in, hidden):
    return {
        "Wx": glorot(rng, n_in, hidden),
        "Wh": glorot(rng, hidden, hidden),
        "b": np.zeros(hidden),
        "Wo": glorot(rng, hidden, 1, (hidden,)),
        "bo": np.zeros(1),
    }


def rnn_forward(params, X):
    """Elman recurrence from ``h_0 = 0``; returns readout and hidden states ``(T+1, B, H)``."""
    B, T, _ = X.shape
    H = params["Wh"].shape[0]
    hs = np.zeros((T + 1, B, H))
    xw = X.transpose(1, 0, 2) @ params["Wx"] + params["b"]
    for t in range(T):
        hs[t + 1] = np.tanh(xw[t] + hs[t] @ params["Wh"])
    return hs[T] @ params["Wo"] + params["bo"][0], hs


def rnn_loss_grad(params, X, y):
    out, hs = rnn_forward(params, X)
    B, T, D = X.shape
    H = hs.shape[2]
    diff = out - y
    loss = float(np.mean(diff * diff))
    d = 2.0 * diff / B
    dh = np.outer(d, params["Wo"])
    da_all = np.empty((T, B, H))
    for t in range(T - 1, -1, -1):
        da = dh * (1.0 - hs[t + 1] ** 2)
        da_all[t] = da
        dh = da @ params["Wh"].T
    da_flat = da_all.reshape(T * B, H)
    grads = {
        "Wx": X.transpose(1, 0, 2).reshape(T * B, D).T @ da_flat,
        "Wh": hs[:T].reshape(T * B, H).T @ da_flat,
        "b": da_flat.sum(axis=0),
        "Wo": hs[T].T @ d,
        "bo": np.array([d.sum()]),
    }
    return loss, grads


def init_lstm(rng, n_in, hidden):
    # gate blocks along the last axis: input, forget, output, candidate
    Wx = np.concatenate([glorot(rng, n_in, hidden) for _ in range(4)], axis=1)
    Wh = np.concatenate([glorot(rng, hidden, hidden) for _ in range(4)], axis=1)
    b = np.zeros(4 * hidden)
    b[hidden : 2 * hidden] = 1.0
    return {
        "Wx": Wx,
        "Wh": Wh,
        "b": b,
        "Wo": glorot(rng, hidden, 1, (hidden,)),
        "bo": np.zeros(1),
    }


def lstm_forward(params, X):
    """Returns readout plus a cache with gates, cell and hidden states."""
    B, T, _ = X.shape
    H = params["Wh"].shape[0]
    hs = np.zeros((T + 1, B, H))
    cs = np.zeros((T + 1, B, H))
    gates = np.empty((T, B, 4 * H))
    xw = X.transpose(1, 0, 2) @ params["Wx"] + params["b"]
    for t in range(T):
        pre = xw[t] + hs[t] @ params["Wh"]
        act = gates[t]
        act[:, : 3 * H] = sigmoid(pre[:, : 3 * H])
        act[:, 3 * H :] = np.tanh(pre[:, 3 * H :])
        i, f, o, g = act[:, :H], act[:, H : 2 * H], act[:, 2 * H : 3 * H], act[:, 3 * H :]
        cs[t + 1] = f * cs[t] + i * g
        hs[t + 1] = o * np.tanh(cs[t + 1])
    return hs[T] @ params["Wo"] + params["bo"][0], {"h": hs, "c": cs, "gates": gates}


def lstm_loss_grad(params, X, y):
    out, cache = lstm_forward(params, X)
    hs, cs, gates = cache["h"], cache["c"], cache["gates"]
    B, T, D = X.shape
    H = hs.shape[2]
    diff = out - y
    loss = float(np.mean(diff * diff))
    d = 2.0 * diff / B
    dh = np.outer(d, params["Wo"])
    dc = np.zeros((B, H))
    dpre_all = np.empty((T, B, 4 * H))
    WhT = params["Wh"].T.copy()
    for t in range(T - 1, -1, -1):
        act = gates[t]
        i, f, o, g = act[:, :H], act[:, H : 2 * H], act[:, 2 * H : 3 * H], act[:, 3 * H :]
        tc = np.tanh(cs[t + 1])
        dc = dc + dh * o * (1.0 - tc * tc)
        dpre = dpre_all[t]
        dpre[:, :H] = dc * g * i * (1.0 - i)
        dpre[:, H : 2 * H] = dc * cs[t] * f * (1.0 - f)
        dpre[:, 2 * H : 3 * H] = dh * tc * o * (1.0 - o)
        dpre[:, 3 * H :] = dc * i * (1.0 - g * g)
        dh = dpre @ WhT
        dc = dc * f
    dpre_flat = dpre_all.reshape(T * B, 4 * H)
    grads = {
        "Wx": X.transpose(1, 0, 2).reshape(T * B, D).T @ dpre_flat,
        "Wh": hs[:T].reshape(T * B, H).T @ dpre_flat,
        "b": dpre_flat.sum(axis=0),
        "Wo": hs[T].T @ d,
        "bo": np.array([d.sum()]),
    }
    return loss, grads


ARCH = {
    "mlp": (init_mlp, mlp_forward, mlp_loss_grad),
    "rnn": (init_rnn, rnn_forward, rnn_loss_grad),
    "lstm": (init_lstm, lstm_forward, lstm_loss_grad),
}


def loss_and_grads(kind, params, X, y):
    return ARCH[kind][2](params, np.asarray(X, dtype=float), np.asarray(y, dtype=float))


# ---------------------------------------------------------------------------
# training


@dataclass(frozen=True)
class TrainConfig:
    epochs: int
    batch_size: int = 32
    seed: int = 0
    learning_rate: float | None = None
    hidden: int | None = None
    clip_norm: float | None = None  # None: 5.0 for recurrent nets, off for the MLP


@dataclass
class NeuralModel:
    kind: str
    params: dict
    y_offset: float
    y_scale: float
    input_shape: tuple
    loss_history: list

    def predict(self, X):
        return predict_neural(self, X)


def _clip(grads, max_norm):
    total = math.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
    if total > max_norm:
        s = max_norm / total
        for g in grads.values():
            g *= s


def _fit(kind, X, y, config: TrainConfig) -> NeuralModel:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if X.shape[0] != y.shape[0] or X.shape[0] == 0:
        raise NeuralError(f"{X.shape[0]} inputs vs {y.shape[0]} targets")
    if config.epochs < 0 or config.batch_size < 1:
        raise NeuralError("epochs must be >= 0 and batch_size >= 1")
    init, _, loss_grad = ARCH[kind]
    hidden = config.hidden or DEFAULT_HIDDEN[kind]
    lr = config.learning_rate if config.learning_rate is not None else DEFAULT_LR[kind]
    clip = config.clip_norm if config.clip_norm is not None else (None if kind == "mlp" else CLIP_NORM)

    offset = float(y.mean())
    scale = float(y.std())
    if not scale > 0:
        scale = 1.0
    ys = (y - offset) / scale

    rng = np.random.default_rng(config.seed)
    params = init(rng, X.shape[-1], hidden)
    state = AdamState(learning_rate=lr)
    n = X.shape[0]
    history = [loss_grad(params, X, ys)[0]]
    for _ in range(config.epochs):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            loss, grads = loss_grad(params, X[idx], ys[idx])
            if not math.isfinite(loss):
                raise DivergenceError(f"{kind} training divergence (non-finite loss)")
            if clip is not None:
                _clip(grads, clip)
            adam_step(params, grads, state)
            total += loss * idx.shape[0]
        history.append(total / n)
    if not all(np.all(np.isfinite(p)) for p in params.values()):
        raise DivergenceError(f"{kind} training divergence (non-finite parameters)")
    return NeuralModel(kind, params, offset, scale, X.shape[1:], history)


def fit_mlp(X, y, config: TrainConfig) -> NeuralModel:
    """One hidden ReLU layer (500 units by default) and a linear output."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise NeuralError("fit_mlp expects a 2-D feature matrix")
    return _fit("mlp", X, y, config)


def fit_rnn(windows, y, config: TrainConfig) -> NeuralModel:
    """Elman tanh network read out from the last hidden state; full BPTT."""
    windows = np.asarray(windows, dtype=float)
    if windows.ndim != 3:
        raise NeuralError("fit_rnn expects (samples, ndays, features) windows")
    return _fit("rnn", windows, y, config)


def fit_lstm(windows, y, config: TrainConfig) -> NeuralModel:
    windows = np.asarray(windows, dtype=float)
    if windows.ndim != 3:
        raise NeuralError("fit_lstm expects (samples, ndays, features) windows")
    return _fit("lstm", windows, y, config)


def predict_neural(model: NeuralModel, X, batch_size: int = 1024) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.shape[1:] != tuple(model.input_shape):
        raise NeuralError(f"input shape {X.shape[1:]} does not match trained shape {tuple(model.input_shape)}")
    forward = ARCH[model.kind][1]
    out = np.empty(X.shape[0])
    for start in range(0, X.shape[0], batch_size):
        out[start : start + batch_size] = forward(model.params, X[start : start + batch_size])[0]
    return out * model.y_scale + model.y_offset


def epochs_for(kind: str, ndays: int, scale: float = 1.0) -> int:
    """Epoch budget for a recurrent net at a given lookback, optionally scaled."""
    try:
        base = EPOCHS_BY_NDAYS[kind][ndays]
    except KeyError:
        raise NeuralError(f"no epoch schedule for {kind} with ndays={ndays}") from None
    return max(1, int(round(base * scale)))
