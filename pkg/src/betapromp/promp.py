"""Probabilistic movement primitives over a beta phase.

A model is a Gaussian over stacked basis weights plus a time-indexed
Gaussian over phase.  Fitting is two-step: align the demonstrations to get
one phase profile each, project each onto the basis under its profile, then
take empirical moments.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .basis import BasisConfig, design_matrix, features
from .data import Trajectory
from .phase import AlignmentResult, AlignOptions, PhaseProfile, align, phase_distribution

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
COV_REG = 1e-6
COV_FLOOR = 1e-12
RIDGE_SCALE = 1e-8
OBS_NOISE = 1e-6


@dataclass(eq=False)
class PhasePrior:
    time_grid: np.ndarray
    mu: np.ndarray
    sigma: np.ndarray

    def at(self, t):
        """Mean and std of phase at time(s) ``t``; clamped outside the grid."""
        mu = np.interp(t, self.time_grid, self.mu)
        sigma = np.interp(t, self.time_grid, self.sigma)
        return mu, sigma

    def mean_rate(self, t):
        # d mu / dt by finite differences, for velocity observations
        return np.interp(t, self.time_grid, np.gradient(self.mu, self.time_grid))


@dataclass(eq=False)
class ProMPModel:
    label: str
    basis: BasisConfig
    mu_w: np.ndarray
    sigma_w: np.ndarray
    phase_prior: PhasePrior
    prior_prob: float = 1.0

    @property
    def dims(self) -> int:
        return self.mu_w.size // self.basis.n_features

    @property
    def gamma(self) -> float:
        """Isotropic nugget added to predictive covariances."""
        return max(COV_REG * float(np.mean(np.diag(self.sigma_w))), COV_FLOOR)

    def observation_matrices(self, phi, phi_dot=None) -> np.ndarray:
        """Stacked observation matrices, shape ``phi.shape + (rows, N*D)``."""
        values, derivs = features(self.basis, phi)
        eye = np.eye(self.dims)
        H = np.einsum("ij,...k->...ijk", eye, values).reshape(values.shape[:-1] + (self.dims, -1))
        if not self.basis.include_velocity:
            return H
        phi_dot = np.ones_like(np.asarray(phi, dtype=float)) if phi_dot is None else np.asarray(phi_dot)
        dv = derivs * phi_dot[..., None]
        V = np.einsum("ij,...k->...ijk", eye, dv).reshape(dv.shape[:-1] + (self.dims, -1))
        return np.concatenate([H, V], axis=-2)

    def mean_at(self, phi) -> np.ndarray:
        return self.observation_matrices(phi) @ self.mu_w

    def to_dict(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "label": self.label,
            "basis": self.basis.to_dict(),
            "mu_w": [_f17(v) for v in self.mu_w],
            "sigma_w": [_f17(v) for v in self.sigma_w.ravel()],
            "phase_prior": {
                "time_grid": [_f17(v) for v in self.phase_prior.time_grid],
                "mu": [_f17(v) for v in self.phase_prior.mu],
                "sigma": [_f17(v) for v in self.phase_prior.sigma],
            },
            "prior_prob": _f17(self.prior_prob),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ProMPModel":
        validate_model_dict(d)
        mu = np.asarray(d["mu_w"], dtype=float)
        pp = d["phase_prior"]
        return cls(
            label=d["label"],
            basis=BasisConfig.from_dict(d["basis"]),
            mu_w=mu,
            sigma_w=np.asarray(d["sigma_w"], dtype=float).reshape(mu.size, mu.size),
            phase_prior=PhasePrior(np.asarray(pp["time_grid"], float), np.asarray(pp["mu"], float),
                                   np.asarray(pp["sigma"], float)),
            prior_prob=float(d["prior_prob"]),
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n")

    @classmethod
    def load(cls, path) -> "ProMPModel":
        return cls.from_dict(json.loads(Path(path).read_text()))


def _f17(x) -> float:
    return float(f"{float(x):.17g}")


def validate_model_dict(d: dict) -> None:
    """Raise ValueError unless ``d`` is a well-formed version-1 model document."""
    required = {"format_version", "label", "basis", "mu_w", "sigma_w", "phase_prior", "prior_prob"}
    missing = required - set(d)
    if missing:
        raise ValueError(f"model document is missing {sorted(missing)}")
    if d["format_version"] != FORMAT_VERSION:
        raise ValueError(f"unsupported model format_version {d['format_version']!r}")
    basis = d["basis"]
    for key in ("n", "centers", "widths", "include_velocity"):
        if key not in basis:
            raise ValueError(f"model basis is missing '{key}'")
    n = int(basis["n"])
    m = len(d["mu_w"])
    if m == 0 or m % n:
        raise ValueError("mu_w length is not a multiple of the feature count")
    if len(d["sigma_w"]) != m * m:
        raise ValueError("sigma_w must hold len(mu_w)**2 row-major entries")
    pp = d["phase_prior"]
    if not len(pp["time_grid"]) == len(pp["mu"]) == len(pp["sigma"]) > 0:
        raise ValueError("phase_prior arrays must be non-empty and of equal length")
    if not 0.0 <= float(d["prior_prob"]) <= 1.0:
        raise ValueError("prior_prob must lie in [0, 1]")


@dataclass(eq=False)
class Demonstration:
    trajectory: Trajectory
    weights: np.ndarray
    profile: PhaseProfile


@dataclass(eq=False)
class Fit:
    model: ProMPModel
    demonstrations: list[Demonstration]
    alignment: AlignmentResult
    warnings: list[str] = field(default_factory=list)


def default_ridge(F: np.ndarray) -> float:
    return RIDGE_SCALE * float(np.sum(F * F)) / F.shape[1]


def project_weights(traj: Trajectory, profile: PhaseProfile, basis: BasisConfig, ridge: float | None = None) -> np.ndarray:
    """Regularized least-squares weights of ``traj`` under ``profile``.

    Solves ``(F^T F + ridge I) w = F^T y`` per dimension, where ``F`` stacks
    the position features at every sample's phase, via the equivalent
    augmented least-squares problem.  ``ridge=None`` picks a ridge scaled to
    ``trace(F^T F) / N``.  Returns the weights stacked dimension-major.
    """
    N = basis.n_features
    if len(traj) < N:
        raise ValueError("trajectory has fewer samples than features")
    F = design_matrix(basis, profile.phase(traj.times))
    lam = default_ridge(F) if ridge is None else float(ridge)
    if lam < 0:
        raise ValueError("ridge must be non-negative")
    if lam == 0.0:
        if np.linalg.matrix_rank(F) < N:
            raise np.linalg.LinAlgError("feature matrix is rank deficient; use a positive ridge")
        A, Y = F, traj.samples
    else:
        A = np.vstack([F, np.sqrt(lam) * np.eye(N)])
        Y = np.vstack([traj.samples, np.zeros((N, traj.dims))])
    W, *_ = np.linalg.lstsq(A, Y, rcond=None)
    return W.T.ravel()


def weights_covariance(W: np.ndarray) -> np.ndarray:
    """Unbiased covariance of the rows of ``W`` plus a small isotropic floor."""
    C = np.cov(W, rowvar=False, ddof=1).reshape(W.shape[1], W.shape[1])
    C = 0.5 * (C + C.T)
    gamma = max(COV_REG * float(np.mean(np.diag(C))), COV_FLOOR)
    return C + gamma * np.eye(C.shape[0])


def fit(trajectories, basis: BasisConfig | None = None, opts: AlignOptions | None = None,
        label: str | None = None, prior_prob: float = 1.0, ridge: float | None = None) -> Fit:
    basis = basis or BasisConfig()
    opts = opts or AlignOptions()
    if len(trajectories) < 2:
        raise ValueError("fitting needs at least two trajectories")
    result = align(trajectories, basis, opts)
    demos = [Demonstration(tr, project_weights(tr, p, basis, ridge), p) for tr, p in zip(trajectories, result.profiles)]
    W = np.stack([d.weights for d in demos])
    notes = []
    if W.shape[0] <= W.shape[1]:
        msg = (f"{W.shape[0]} demonstrations for {W.shape[1]} weights: "
               "covariance is rank deficient and relies on regularization")
        logger.warning(msg)
        notes.append(msg)
    dt = min(tr.dt for tr in trajectories)
    t_end = max(tr.duration for tr in trajectories)
    time_grid = np.arange(int(round(t_end / dt)) + 1) * dt
    mu_phi, sigma_phi = phase_distribution(result, time_grid, opts.sigma_floor)
    if label is None:
        labels = {tr.label for tr in trajectories}
        label = labels.pop() if len(labels) == 1 and None not in labels else "movement"
    model = ProMPModel(label, basis, W.mean(axis=0), weights_covariance(W),
                       PhasePrior(time_grid, mu_phi, sigma_phi), prior_prob)
    return Fit(model, demos, result, notes)


def fit_model(trajectories, basis: BasisConfig | None = None, opts: AlignOptions | None = None, **kw) -> ProMPModel:
    return fit(trajectories, basis, opts, **kw).model


def fit_library(trajectories, basis: BasisConfig | None = None, opts: AlignOptions | None = None) -> dict[str, Fit]:
    """One fit per label; priors proportional to the label counts."""
    groups: dict[str, list] = {}
    for tr in trajectories:
        if tr.label is None:
            raise ValueError("every trajectory needs a label to fit a library")
        groups.setdefault(tr.label, []).append(tr)
    total = len(trajectories)
    return {lab: fit(trs, basis, opts, label=lab, prior_prob=len(trs) / total) for lab, trs in sorted(groups.items())}


def condition(model: ProMPModel, phi_star: float, y_star, obs_noise: float = OBS_NOISE) -> ProMPModel:
    """Gaussian posterior of the weights given ``y(phi_star) = y_star``."""
    y_star = np.atleast_1d(np.asarray(y_star, dtype=float))
    if not 0.0 <= phi_star <= 1.0:
        raise ValueError("phi_star must lie in [0, 1]")
    H = model.observation_matrices(float(phi_star))
    if y_star.shape != (H.shape[0],):
        raise ValueError(f"via-point has {y_star.size} values, model observes {H.shape[0]}")
    if obs_noise < 0:
        raise ValueError("obs_noise must be non-negative")
    S = model.sigma_w
    SH = S @ H.T
    innov = H @ SH + obs_noise * np.eye(H.shape[0])
    if obs_noise == 0.0 and np.linalg.cond(innov) > 1e12:
        raise np.linalg.LinAlgError("innovation covariance is singular; use obs_noise > 0")
    gain = np.linalg.solve(innov, SH.T).T
    mu = model.mu_w + gain @ (y_star - H @ model.mu_w)
    sigma = S - gain @ SH.T
    sigma = 0.5 * (sigma + sigma.T)
    return replace(model, mu_w=mu, sigma_w=sigma)


def sample_weights(model: ProMPModel, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draws from N(mu_w, sigma_w) through a symmetric eigen-factorization."""
    vals, vecs = np.linalg.eigh(model.sigma_w)
    root = vecs * np.sqrt(np.clip(vals, 0.0, None))
    return model.mu_w + rng.standard_normal((n, model.mu_w.size)) @ root.T


def generate(model: ProMPModel, mode: str = "deterministic", seed: int = 0, time_grid=None,
             profile: PhaseProfile | None = None, n: int = 1) -> list[Trajectory]:
    """Trajectories ``Phi(phi(t)) w`` on ``time_grid`` under ``profile``.

    ``mode="deterministic"`` uses the mean weights; ``"stochastic"`` draws
    ``n`` weight vectors with a generator seeded by ``seed``.
    """
    grid = model.phase_prior.time_grid if time_grid is None else np.asarray(time_grid, dtype=float)
    if grid.size < 2 or np.any(np.diff(grid) <= 0):
        raise ValueError("time grid must be increasing with at least two points")
    profile = profile or PhaseProfile(0.0, 0.0, float(grid[-1]))
    H = model.observation_matrices(profile.phase(grid))[..., : model.dims, :]
    if mode == "deterministic":
        W = np.repeat(model.mu_w[None], n, axis=0)
    elif mode == "stochastic":
        W = sample_weights(model, n, np.random.default_rng(seed))
    else:
        raise ValueError(f"unknown mode {mode!r}")
    dt = float(grid[1] - grid[0])
    return [Trajectory(H @ w, dt, model.label, {"weights": w}) for w in W]
