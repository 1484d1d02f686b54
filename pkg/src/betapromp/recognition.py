"""Streaming movement classification and per-sample phase estimation.

Each observation is scored against every model by integrating the
predictive density over phase, weighted by the model's time-indexed phase
prior.  Observations are treated as independent, so per-model scores add
up in the log domain.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .promp import ProMPModel

N_PHASE = 200
LOG_2PI = np.log(2.0 * np.pi)


@dataclass(eq=False)
class MovementLibrary:
    models: list
    priors: np.ndarray = None

    def __post_init__(self):
        if not self.models:
            raise ValueError("a library needs at least one model")
        labels = [m.label for m in self.models]
        if len(set(labels)) != len(labels):
            raise ValueError("model labels must be unique")
        p = np.array([m.prior_prob for m in self.models] if self.priors is None else self.priors, dtype=float)
        if np.any(p < 0) or p.sum() <= 0:
            raise ValueError("priors must be non-negative with a positive sum")
        self.priors = p / p.sum()

    @property
    def labels(self) -> list[str]:
        return [m.label for m in self.models]

    def __len__(self):
        return len(self.models)


@dataclass(eq=False)
class RecognitionTrace:
    times: np.ndarray
    labels: list[str]
    log_likelihoods: np.ndarray  # (K, T) accumulated
    increments: np.ndarray  # (K, T) per-step terms
    labels_over_time: list[str]
    phase_map_over_time: np.ndarray
    phase_posteriors: np.ndarray  # (T, G)
    phase_grid: np.ndarray

    @property
    def final_label(self) -> str:
        return self.labels_over_time[-1]

    def rows(self):
        for j, t in enumerate(self.times):
            yield [repr(float(t)), *(repr(float(v)) for v in self.log_likelihoods[:, j]),
                   self.labels_over_time[j], repr(float(self.phase_map_over_time[j]))]

    def header(self):
        return ["t", *(f"loglik_{lab}" for lab in self.labels), "predicted_label", "map_phase"]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(self.header())
            w.writerows(self.rows())


class _Predictive:
    """Per-model predictive Gaussians precomputed on a phase grid."""

    def __init__(self, model: ProMPModel, grid: np.ndarray, phi_dot=None):
        self.model = model
        self.grid = grid
        H = model.observation_matrices(grid, phi_dot)
        self.mean = H @ model.mu_w
        cov = H @ model.sigma_w @ np.swapaxes(H, -1, -2) + model.gamma * np.eye(H.shape[-2])
        L = np.linalg.cholesky(cov)
        self.logdet = 2.0 * np.log(np.diagonal(L, axis1=-2, axis2=-1)).sum(axis=-1)
        self.inv = np.linalg.inv(cov)

    def log_density(self, y: np.ndarray) -> np.ndarray:
        """``log N(y_j | mean_g, cov_g)`` for observations ``y`` (T, D) -> (T, G)."""
        r = y[:, None, :] - self.mean[None]
        maha = np.einsum("tgi,gij,tgj->tg", r, self.inv, r)
        return -0.5 * (maha + self.logdet[None] + y.shape[1] * LOG_2PI)


def _trapezoid_weights(grid):
    h = np.diff(grid)
    w = np.zeros_like(grid)
    w[:-1] += 0.5 * h
    w[1:] += 0.5 * h
    return w


def log_phase_prior(model: ProMPModel, t, grid) -> np.ndarray:
    """Log of the truncated normal phase prior, renormalized on ``grid`` (trapezoid)."""
    mu, sigma = model.phase_prior.at(np.atleast_1d(t))
    z = (grid[None, :] - mu[:, None]) / sigma[:, None]
    logp = -0.5 * z**2
    wq = _trapezoid_weights(grid)
    norm = logsumexp(logp, axis=1, b=wq[None, :])
    return logp - norm[:, None]


def _check_obs(y):
    y = np.atleast_2d(np.asarray(y, dtype=float))
    if not np.all(np.isfinite(y)):
        raise ValueError("observations must be finite")
    return y


def _velocity_ok(model, y):
    rows = model.dims * (2 if model.basis.include_velocity else 1)
    if y.shape[1] != rows:
        raise ValueError(f"observation has {y.shape[1]} values, model expects {rows}")


def _joint_log_terms(pred: _Predictive, y: np.ndarray, t: np.ndarray) -> np.ndarray:
    # log N(y | phi) + log p(phi | t) on the grid, (T, G)
    model = pred.model
    if model.basis.include_velocity:
        rate = model.phase_prior.mean_rate(t)
        # velocity rows depend on the phase rate, taken from the prior mean at t
        out = np.empty((len(t), pred.grid.size))
        for j, r in enumerate(rate):
            step = _Predictive(model, pred.grid, np.full(pred.grid.size, max(r, 0.0)))
            out[j] = step.log_density(y[j : j + 1])[0]
        return out + log_phase_prior(model, t, pred.grid)
    return pred.log_density(y) + log_phase_prior(model, t, pred.grid)


def log_obs_likelihood(model: ProMPModel, y_t, t, n_phase: int = N_PHASE, _pred=None):
    """Log of :func:`obs_likelihood`; vectorized over rows of ``y_t`` / entries of ``t``."""
    y = _check_obs(y_t)
    _velocity_ok(model, y)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    grid = np.linspace(0.0, 1.0, n_phase)
    pred = _pred or _Predictive(model, grid)
    terms = _joint_log_terms(pred, y, t)
    wq = _trapezoid_weights(pred.grid)
    out = logsumexp(terms, axis=1, b=wq[None, :])
    return float(out[0]) if np.ndim(y_t) == 1 else out


def obs_likelihood(model: ProMPModel, y_t, t, n_phase: int = N_PHASE) -> float:
    """Density of one observation under ``model`` with phase integrated out.

    Trapezoid rule over an ``n_phase`` grid on [0, 1]; the phase prior is the
    model's normal at time ``t`` truncated to [0, 1] and renormalized on the
    grid.
    """
    return np.exp(log_obs_likelihood(model, y_t, t, n_phase))


def _observations(observations):
    if isinstance(observations, tuple) and len(observations) == 2:
        t, y = observations
    else:
        obs = list(observations)
        if not obs:
            raise ValueError("no observations")
        t = [o[0] for o in obs]
        y = [np.atleast_1d(o[1]) for o in obs]
    t = np.asarray(t, dtype=float)
    y = _check_obs(np.asarray(y, dtype=float).reshape(len(t), -1))
    if t.size == 0:
        raise ValueError("no observations")
    if np.any(np.diff(t) < 0):
        raise ValueError("observations must be time-ordered")
    return t, y


def trajectory_observations(traj):
    """``(times, samples)`` pair suitable for :func:`classify_stream`."""
    return traj.times, traj.samples


def _decide(cum, priors, labels):
    score = cum + np.log(priors)[:, None]
    # argmax returns the first maximum: ties go to the lowest model index
    return [labels[k] for k in np.argmax(score, axis=0)]


def classify_stream(library: MovementLibrary, observations, n_phase: int = N_PHASE) -> RecognitionTrace:
    """Label every prefix of an observation stream.

    ``observations`` is either a sequence of ``(t, y_t)`` pairs or a
    ``(times, samples)`` tuple.
    """
    t, y = _observations(observations)
    grid = np.linspace(0.0, 1.0, n_phase)
    wq = _trapezoid_weights(grid)
    K = len(library)
    inc = np.empty((K, t.size))
    joint = np.empty((K, t.size, grid.size))
    for k, model in enumerate(library.models):
        _velocity_ok(model, y)
        terms = _joint_log_terms(_Predictive(model, grid), y, t)
        joint[k] = terms
        inc[k] = logsumexp(terms, axis=1, b=wq[None, :])
    cum = np.cumsum(inc, axis=1)
    post = _posterior_from_joint(joint, library.priors, wq)
    return RecognitionTrace(t, library.labels, cum, inc, _decide(cum, library.priors, library.labels),
                            grid[np.argmax(post, axis=1)], post, grid)


def _posterior_from_joint(joint, priors, wq):
    # mix models by prior, normalize on the grid: rows sum to 1
    logmix = logsumexp(joint + np.log(priors)[:, None, None], axis=0)
    logmix -= logmix.max(axis=1, keepdims=True)
    p = np.exp(logmix)
    return p / p.sum(axis=1, keepdims=True)


@dataclass(eq=False)
class PhasePosterior:
    grid: np.ndarray
    probs: np.ndarray  # (G,), sums to 1
    per_model: np.ndarray  # (K, G), each row sums to 1

    @property
    def map_phase(self) -> float:
        return float(self.grid[int(np.argmax(self.probs))])


def phase_posterior(library: MovementLibrary, y_t, t: float, n_phase: int = N_PHASE) -> PhasePosterior:
    """Posterior over the phase grid for a single observation.

    The library posterior mixes the per-model posteriors by model prior and
    evidence; it is normalized over the grid so the weights sum to 1.
    """
    y = _check_obs(y_t)
    grid = np.linspace(0.0, 1.0, n_phase)
    tt = np.atleast_1d(float(t))
    joint = np.stack([_joint_log_terms(_Predictive(m, grid), y, tt)[0] for m in library.models])
    per = np.exp(joint - joint.max(axis=1, keepdims=True))
    per /= per.sum(axis=1, keepdims=True)
    mix = _posterior_from_joint(joint[:, None, :], library.priors, None)[0]
    return PhasePosterior(grid, mix, per)


def export_traces(path, traces) -> None:
    """Write several traces into one CSV with a leading ``trial`` column."""
    traces = list(traces)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        head = traces[0].header()
        w.writerow(["trial", *head])
        for i, tr in enumerate(traces):
            for row in tr.rows():
                w.writerow([i, *row])


def accuracy_over_time(traces, true_labels, dt: float):
    """Fraction of still-running trials whose current label is right, per time step."""
    n = max(len(tr.times) for tr in traces)
    correct = np.zeros(n)
    active = np.zeros(n)
    for tr, lab in zip(traces, true_labels):
        hits = np.array([p == lab for p in tr.labels_over_time], dtype=float)
        correct[: hits.size] += hits
        active[: hits.size] += 1
    times = np.arange(n) * dt
    return times, active, correct / np.maximum(active, 1)
