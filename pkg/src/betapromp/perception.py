"""Feed-forward phase estimator.

A small tanh network maps the current time and a window of recent samples
to a phase estimate in [0, 1] (logistic output).  Classification with the
estimate evaluates every model's predictive density at the single
estimated phase instead of integrating over the phase prior.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .recognition import (
    MovementLibrary,
    RecognitionTrace,
    _check_obs,
    _decide,
    _observations,
    _velocity_ok,
)

FORMAT_VERSION = 1

ACTIVATIONS = {
    "tanh": (np.tanh, lambda a, z: 1.0 - a * a),
    "relu": (lambda z: np.maximum(z, 0.0), lambda a, z: (z > 0).astype(float)),
    "sigmoid": (lambda z: 0.5 * (1.0 + np.tanh(0.5 * z)), lambda a, z: a * (1.0 - a)),
}


def _logistic(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


@dataclass
class PhaseNetConfig:
    window: int = 20
    hidden_sizes: list = field(default_factory=lambda: [40, 20, 10])
    activation: str = "tanh"
    epochs: int = 800
    learning_rate: float = 5e-3
    seed: int = 0

    def __post_init__(self):
        if self.window < 1:
            raise ValueError("window must be >= 1")
        self.hidden_sizes = [int(h) for h in self.hidden_sizes]
        if not self.hidden_sizes or any(h < 1 for h in self.hidden_sizes):
            raise ValueError("hidden_sizes must be a non-empty list of positive integers")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")


class TrainingError(RuntimeError):
    pass


@dataclass(eq=False)
class PhaseNet:
    config: PhaseNetConfig
    weights: list  # W_l with shape (fan_in, fan_out)
    biases: list
    in_mean: np.ndarray
    in_std: np.ndarray
    history: list = field(default_factory=list)

    def forward(self, X: np.ndarray) -> np.ndarray:
        act, _ = ACTIVATIONS[self.config.activation]
        a = (np.atleast_2d(X) - self.in_mean) / self.in_std
        for W, b in zip(self.weights[:-1], self.biases[:-1]):
            a = act(a @ W + b)
        return _logistic(a @ self.weights[-1] + self.biases[-1])[:, 0]

    __call__ = forward

    def to_dict(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "config": asdict(self.config),
            "normalization": {"mean": self.in_mean.tolist(), "std": self.in_std.tolist()},
            "layers": [
                {"rows": W.shape[0], "cols": W.shape[1], "weights": W.ravel().tolist(), "bias": b.tolist()}
                for W, b in zip(self.weights, self.biases)
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PhaseNet":
        validate_net_dict(d)
        layers = d["layers"]
        return cls(
            PhaseNetConfig(**d["config"]),
            [np.asarray(L["weights"], float).reshape(L["rows"], L["cols"]) for L in layers],
            [np.asarray(L["bias"], float) for L in layers],
            np.asarray(d["normalization"]["mean"], float),
            np.asarray(d["normalization"]["std"], float),
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()) + "\n")

    @classmethod
    def load(cls, path) -> "PhaseNet":
        return cls.from_dict(json.loads(Path(path).read_text()))


def validate_net_dict(d: dict) -> None:
    for key in ("format_version", "config", "normalization", "layers"):
        if key not in d:
            raise ValueError(f"net document is missing '{key}'")
    if d["format_version"] != FORMAT_VERSION:
        raise ValueError(f"unsupported net format_version {d['format_version']!r}")
    prev = len(d["normalization"]["mean"])
    if len(d["normalization"]["std"]) != prev:
        raise ValueError("normalization mean/std lengths differ")
    for i, L in enumerate(d["layers"]):
        if L["rows"] != prev or len(L["weights"]) != L["rows"] * L["cols"] or len(L["bias"]) != L["cols"]:
            raise ValueError(f"layer {i} has inconsistent shapes")
        prev = L["cols"]
    if prev != 1:
        raise ValueError("the last layer must have a single output")


def window_input(t: float, recent: np.ndarray, window: int) -> np.ndarray:
    """``[t, y_{i-window+1}, ..., y_i]`` with the oldest sample repeated as padding."""
    recent = np.atleast_2d(np.asarray(recent, dtype=float))
    if recent.shape[0] >= window:
        rows = recent[-window:]
    else:
        pad = np.repeat(recent[:1], window - recent.shape[0], axis=0)
        rows = np.vstack([pad, recent])
    return np.concatenate([[t], rows.ravel()])


def _stream_inputs(t: np.ndarray, y: np.ndarray, window: int) -> np.ndarray:
    # all sliding windows of one stream at once
    padded = np.vstack([np.repeat(y[:1], window - 1, axis=0), y])
    idx = np.arange(len(t))[:, None] + np.arange(window)[None, :]
    return np.column_stack([t, padded[idx].reshape(len(t), -1)])


def build_training_pairs(demos, window: int = 20):
    """Inputs and phase targets for every time step of every demonstration.

    Returns ``(X, y)`` with one row per sample.
    """
    X, Y = [], []
    for d in demos:
        traj = d.trajectory
        t = traj.times
        X.append(_stream_inputs(t, traj.samples, window))
        Y.append(np.clip(d.profile.phase(t), 0.0, 1.0))
    return np.vstack(X), np.concatenate(Y)


def _init_params(sizes, rng):
    Ws, bs = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        Ws.append(rng.normal(0.0, 1.0 / np.sqrt(fan_in), (fan_in, fan_out)))
        bs.append(np.zeros(fan_out))
    return Ws, bs


def loss_and_grads(net: PhaseNet, Xn: np.ndarray, y: np.ndarray):
    """Mean squared error on normalized inputs and its exact gradients."""
    act, dact = ACTIVATIONS[net.config.activation]
    zs, acts = [], [Xn]
    a = Xn
    for W, b in zip(net.weights[:-1], net.biases[:-1]):
        z = a @ W + b
        a = act(z)
        zs.append(z)
        acts.append(a)
    out = _logistic(a @ net.weights[-1] + net.biases[-1])[:, 0]
    err = out - y
    n = y.size
    loss = float(np.mean(err**2))
    delta = ((2.0 / n) * err * out * (1.0 - out))[:, None]
    gW = [None] * len(net.weights)
    gb = [None] * len(net.biases)
    for layer in range(len(net.weights) - 1, -1, -1):
        gW[layer] = acts[layer].T @ delta
        gb[layer] = delta.sum(axis=0)
        if layer:
            delta = (delta @ net.weights[layer].T) * dact(acts[layer], zs[layer - 1])
    return loss, gW, gb


def train(pairs, config: PhaseNetConfig | None = None) -> PhaseNet:
    """Full-batch Adam on mean squared phase error; deterministic given ``config.seed``."""
    config = config or PhaseNetConfig()
    X, y = pairs
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.shape[0] < 10:
        raise ValueError("need at least 10 training pairs")
    rng = np.random.default_rng(config.seed)
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std = np.where(std > 1e-12, std, 1.0)
    Xn = (X - mean) / std
    sizes = [X.shape[1], *config.hidden_sizes, 1]
    Ws, bs = _init_params(sizes, rng)
    # start the logistic output at the target mean
    ybar = float(np.clip(y.mean(), 1e-3, 1 - 1e-3))
    bs[-1][:] = np.log(ybar / (1.0 - ybar))
    net = PhaseNet(config, Ws, bs, mean, std)

    params = net.weights + net.biases
    m = [np.zeros_like(p) for p in params]
    v = [np.zeros_like(p) for p in params]
    b1, b2, eps = 0.9, 0.999, 1e-8
    history = []
    best = (np.inf, None)
    for epoch in range(1, config.epochs + 1):
        loss, gW, gb = loss_and_grads(net, Xn, y)
        if not np.isfinite(loss):
            raise TrainingError(f"non-finite loss at epoch {epoch}")
        history.append(loss)
        if loss < best[0]:
            best = (loss, [p.copy() for p in params])
        for p, g, mi, vi in zip(params, gW + gb, m, v):
            mi *= b1
            mi += (1 - b1) * g
            vi *= b2
            vi += (1 - b2) * g * g
            mhat = mi / (1 - b1**epoch)
            vhat = vi / (1 - b2**epoch)
            p -= config.learning_rate * mhat / (np.sqrt(vhat) + eps)
    loss, _, _ = loss_and_grads(net, Xn, y)
    history.append(loss)
    if best[0] < loss:
        for p, q in zip(params, best[1]):
            p[...] = q
    net.history = history
    return net


def rmse(net: PhaseNet, pairs) -> float:
    X, y = pairs
    return float(np.sqrt(np.mean((net.forward(X) - np.asarray(y)) ** 2)))


def estimate_phase(net: PhaseNet, recent, t: float) -> float:
    """Phase estimate from the latest samples ``recent`` (oldest first) at time ``t``."""
    x = window_input(t, recent, net.config.window)
    return float(net.forward(x[None, :])[0])


def stream_phase(net: PhaseNet, t: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Causal phase estimates for every step of a stream."""
    return net.forward(_stream_inputs(t, y, net.config.window))


def classify_with_phase_estimate(library: MovementLibrary, observations, net) -> RecognitionTrace:
    """Streaming classification scoring each model at the estimated phase only.

    ``net`` is a :class:`PhaseNet` or any callable ``(times, samples) ->
    phases`` returning one phase per step (e.g. ground-truth profiles).
    """
    t, y = _observations(observations)
    if isinstance(net, PhaseNet):
        phi = stream_phase(net, t, y)
    else:
        phi = np.asarray(net(t, y), dtype=float)
    phi = np.clip(phi, 0.0, 1.0)
    K = len(library)
    inc = np.empty((K, t.size))
    for k, model in enumerate(library.models):
        _velocity_ok(model, y)
        rate = model.phase_prior.mean_rate(t) if model.basis.include_velocity else None
        H = model.observation_matrices(phi, rate)
        mean = H @ model.mu_w
        cov = H @ model.sigma_w @ np.swapaxes(H, -1, -2) + model.gamma * np.eye(H.shape[-2])
        r = _check_obs(y) - mean
        _, logdet = np.linalg.slogdet(cov)
        maha = np.einsum("ti,tij,tj->t", r, np.linalg.inv(cov), r)
        inc[k] = -0.5 * (maha + logdet + y.shape[1] * np.log(2.0 * np.pi))
    cum = np.cumsum(inc, axis=1)
    grid = np.linspace(0.0, 1.0, 200)
    post = np.zeros((t.size, grid.size))
    post[np.arange(t.size), np.abs(grid[None, :] - phi[:, None]).argmin(axis=1)] = 1.0
    return RecognitionTrace(t, library.labels, cum, inc, _decide(cum, library.priors, library.labels),
                            phi, post, grid)
