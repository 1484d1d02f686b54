"""Beta-function phase profiles and the alignment of demonstrations.

A profile maps time to phase by integrating a beta(2, 2) density over an
affine window of normalized time ``[delta1, 1 + delta2]``; the result is
the smoothstep ``3x**2 - 2x**3`` of the window coordinate ``x``.

:func:`align` assigns one profile to every demonstration so that the
demonstrations, resampled in phase, agree as closely as possible with their
phase-domain average.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .basis import BasisConfig, design_matrix

logger = logging.getLogger(__name__)

SIGMA_FLOOR = 0.01


@dataclass(frozen=True)
class PhaseProfile:
    """Monotone map from time to phase for one trial of length ``duration``.

    ``shape="linear"`` gives ``phi = t / duration`` and ignores the deltas; it
    exists for comparisons against plain linear time scaling.
    """

    delta1: float = 0.0
    delta2: float = 0.0
    duration: float = 1.0
    shape: str = "beta"

    def __post_init__(self):
        if self.duration <= 0:
            raise ValueError("duration must be positive")
        if self.shape not in ("beta", "linear"):
            raise ValueError(f"unknown profile shape {self.shape!r}")
        if self.t_b <= self.t_a:
            raise ValueError("profile support is empty: need delta1 < 1 + delta2")

    @property
    def t_a(self) -> float:
        return 0.0 if self.shape == "linear" else self.delta1

    @property
    def t_b(self) -> float:
        return 1.0 if self.shape == "linear" else 1.0 + self.delta2

    def window(self, t) -> np.ndarray:
        tau = np.asarray(t, dtype=float) / self.duration
        return np.clip((tau - self.t_a) / (self.t_b - self.t_a), 0.0, 1.0)

    def phase(self, t) -> np.ndarray:
        x = self.window(t)
        if self.shape == "linear":
            return x
        return x * x * (3.0 - 2.0 * x)

    def velocity(self, t) -> np.ndarray:
        x = self.window(t)
        scale = (self.t_b - self.t_a) * self.duration
        inside = (x > 0.0) & (x < 1.0)
        if self.shape == "linear":
            return np.where(inside, 1.0 / scale, 0.0)
        return np.where(inside, 6.0 * x * (1.0 - x) / scale, 0.0)

    def time_at(self, phi) -> np.ndarray:
        """Earliest time with ``phase(t) == phi`` (may fall outside the trial)."""
        phi = np.clip(np.asarray(phi, dtype=float), 0.0, 1.0)
        x = phi if self.shape == "linear" else inverse_smoothstep(phi)
        return self.duration * (self.t_a + x * (self.t_b - self.t_a))


def inverse_smoothstep(phi):
    # closed-form root of 3x^2 - 2x^3 = phi on [0, 1]
    phi = np.clip(np.asarray(phi, dtype=float), 0.0, 1.0)
    return 0.5 - np.sin(np.arcsin(1.0 - 2.0 * phi) / 3.0)


def phase_at(profile: PhaseProfile, t):
    out = profile.phase(t)
    return float(out) if np.ndim(out) == 0 else out


def phase_velocity(profile: PhaseProfile, t):
    out = profile.velocity(t)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class AlignOptions:
    """Alignment controls.

    ``method`` selects how profiles are assigned: ``"beta"`` runs the
    alignment, ``"reference"`` gives every trial the fixed reference profile
    (delta1 = delta2 = 0), ``"linear"`` uses ``phi = t / T``.
    """

    method: str = "beta"
    grid_points: int = 21
    delta_bound: float = 0.3
    refine_tol: float = 1e-6
    tol: float = 1e-8
    max_iter: int = 50
    n_phase: int = 200
    project_mp: bool = False
    sigma_floor: float = SIGMA_FLOOR
    divergence_tol: float = 1e-2

    def __post_init__(self):
        if self.method not in ("beta", "reference", "linear"):
            raise ValueError(f"unknown alignment method {self.method!r}")


@dataclass
class AlignmentResult:
    profiles: list[PhaseProfile]
    phase_grid: np.ndarray
    mean_trajectory: np.ndarray
    iterations: int
    final_objective: float
    trace: list[float] = field(default_factory=list)


class AlignmentDiverged(RuntimeError):
    def __init__(self, message, trace):
        super().__init__(message)
        self.trace = list(trace)


class _Trial:
    """Cached view of one trajectory for fast phase-domain resampling."""

    def __init__(self, samples: np.ndarray, dt: float):
        self.y = samples
        self.dt = dt
        self.n = samples.shape[0]
        self.duration = (self.n - 1) * dt

    def at_times(self, t: np.ndarray) -> np.ndarray:
        # linear interpolation on the uniform grid, holding end values
        pos = np.clip(t / self.dt, 0.0, self.n - 1)
        i0 = np.minimum(np.floor(pos).astype(int), self.n - 2)
        frac = (pos - i0)[..., None]
        return self.y[i0] * (1.0 - frac) + self.y[i0 + 1] * frac


def _profile_times(trial: _Trial, d1, d2, xg):
    d1 = np.asarray(d1, dtype=float)[..., None]
    d2 = np.asarray(d2, dtype=float)[..., None]
    return trial.duration * (d1 + xg * (1.0 + d2 - d1))


def _check_inputs(trajectories, config: BasisConfig | None):
    if len(trajectories) < 2:
        raise ValueError("alignment needs at least two trajectories")
    dims = {t.dims for t in trajectories}
    if len(dims) != 1:
        raise ValueError("trajectories have differing dimensionality")
    if config is not None:
        short = [i for i, t in enumerate(trajectories) if len(t) < 2 * config.n_features]
        if short:
            raise ValueError(f"trajectories {short} have fewer than 2*N samples")


def resample_in_phase(traj, profile: PhaseProfile, phase_grid: np.ndarray) -> np.ndarray:
    """Values of ``traj`` at the times where ``profile`` reaches each grid phase."""
    trial = _Trial(np.asarray(traj.samples, dtype=float), traj.dt)
    return trial.at_times(profile.time_at(phase_grid))


def align(trajectories, config: BasisConfig | None = None, opts: AlignOptions | None = None) -> AlignmentResult:
    """Assign a beta phase profile to every trajectory.

    Alternates between averaging the trajectories in phase (profiles fixed)
    and re-fitting each trial's ``(delta1, delta2)`` against that average.
    The per-trial fit is a coarse grid search over the box
    ``[-delta_bound, delta_bound]**2`` followed by bounded Nelder-Mead.

    A common affine re-timing of all trials leaves the objective (nearly)
    unchanged, so after every sweep the profiles are re-expressed so that the
    mean delta1 and mean delta2 are zero; the average trajectory then lives
    on the reference profile ``delta1 = delta2 = 0``.
    """
    opts = opts or AlignOptions()
    _check_inputs(trajectories, config)
    if opts.project_mp and config is None:
        raise ValueError("project_mp requires a basis configuration")

    trials = [_Trial(np.asarray(t.samples, dtype=float), t.dt) for t in trajectories]
    grid = np.linspace(0.0, 1.0, opts.n_phase)
    xg = inverse_smoothstep(grid)
    wq = np.full(opts.n_phase, 1.0 / (opts.n_phase - 1))
    wq[[0, -1]] *= 0.5

    if opts.method != "beta":
        shape = "linear" if opts.method == "linear" else "beta"
        profiles = [PhaseProfile(0.0, 0.0, tr.duration, shape) for tr in trials]
        curves = np.stack([tr.at_times(p.time_at(grid)) for tr, p in zip(trials, profiles)])
        mean = curves.mean(axis=0)
        obj = float(np.sum(((curves - mean) ** 2).sum(axis=-1) @ wq))
        return AlignmentResult(profiles, grid, mean, 0, obj, [obj])

    design = design_matrix(config, grid) if opts.project_mp else None

    def curves_for(trial, d1, d2):
        if design is not None:
            return _project_phase_curves(trial, d1, d2, config, design)
        return trial.at_times(_profile_times(trial, d1, d2, xg))

    def objective_all(deltas):
        curves = np.stack([curves_for(tr, d[0], d[1]) for tr, d in zip(trials, deltas)])
        mean = curves.mean(axis=0)
        obj = float(np.sum(((curves - mean) ** 2).sum(axis=-1) @ wq))
        return obj, mean

    b = opts.delta_bound
    axis = np.linspace(-b, b, opts.grid_points)
    g1, g2 = np.meshgrid(axis, axis, indexing="ij")
    g1, g2 = g1.ravel(), g2.ravel()

    deltas = np.zeros((len(trials), 2))
    obj, mean = objective_all(deltas)
    trace = [obj]
    iterations = 0

    for iterations in range(1, opts.max_iter + 1):
        new = np.array([_fit_trial(tr, d, mean, curves_for, wq, g1, g2, opts) for tr, d in zip(trials, deltas)])
        new = _center_gauge(new)
        new_obj, new_mean = objective_all(new)
        if not np.isfinite(new_obj):
            raise AlignmentDiverged("alignment objective is not finite", trace + [new_obj])
        if new_obj > obj * (1.0 + 1e-9) + 1e-300:
            if new_obj > obj * (1.0 + opts.divergence_tol):
                raise AlignmentDiverged(
                    f"alignment objective increased from {obj:.6g} to {new_obj:.6g}", trace + [new_obj]
                )
            # re-centering cost more than the sweep gained: keep the previous state
            logger.debug("alignment stalled at iteration %d", iterations)
            break
        decrease = obj - new_obj
        deltas, obj, mean = new, new_obj, new_mean
        trace.append(obj)
        if decrease <= opts.tol * max(trace[0], 1e-300):
            break

    profiles = [PhaseProfile(float(d[0]), float(d[1]), tr.duration) for tr, d in zip(trials, deltas)]
    return AlignmentResult(profiles, grid, mean, iterations, obj, trace)


def _project_phase_curves(trial, d1, d2, config, grid_design):
    # basis reconstruction of the trial under each candidate profile, read off in phase
    d1 = np.atleast_1d(d1)
    d2 = np.atleast_1d(d2)
    t = np.arange(trial.n) * trial.dt
    out = np.empty((d1.size, grid_design.shape[0], trial.y.shape[1]))
    for k, (a, b) in enumerate(zip(d1, d2)):
        F = design_matrix(config, PhaseProfile(float(a), float(b), trial.duration).phase(t))
        w, *_ = np.linalg.lstsq(F, trial.y, rcond=None)
        out[k] = grid_design @ w
    return out[0] if out.shape[0] == 1 else out


def _fit_trial(trial, start, mean, curves_for, wq, g1, g2, opts):
    def cost(d1, d2):
        c = curves_for(trial, d1, d2)
        return ((c - mean) ** 2).sum(axis=-1) @ wq

    f_start = float(cost(start[0], start[1]))
    if f_start == 0.0:
        return np.array(start, dtype=float)
    costs = cost(g1, g2)
    k = int(np.argmin(costs))
    x0 = np.array([g1[k], g2[k]]) if costs[k] < f_start else np.array(start, dtype=float)
    f0 = min(float(costs[k]), f_start)
    if f0 == 0.0:
        return x0
    b = opts.delta_bound
    x0 = np.clip(x0, -b, b)
    res = minimize(
        lambda x: cost(x[0], x[1]) / f0,
        x0,
        method="Nelder-Mead",
        bounds=[(-b, b), (-b, b)],
        options={"xatol": 1e-7, "fatol": opts.refine_tol, "initial_simplex": x0 + np.array([[0, 0], [0.015, 0], [0, 0.015]])},
    )
    # never accept a worse point than the one we started from
    if res.fun * f0 <= f_start:
        return np.asarray(res.x, dtype=float)
    return np.array(start, dtype=float)


def _center_gauge(deltas: np.ndarray) -> np.ndarray:
    """Compose every profile with one affine re-timing so the deltas average to zero."""
    d1, d2 = deltas[:, 0], deltas[:, 1]
    span = 1.0 + d2 - d1
    m_span = span.mean()
    shift = -d1.mean() / m_span
    new_d1 = d1 + shift * span
    new_span = span / m_span
    return np.column_stack([new_d1, new_span - 1.0 + new_d1])


def phase_distribution(result: AlignmentResult, time_grid, sigma_floor: float = SIGMA_FLOOR):
    """Per-time mean and standard deviation of phase across the aligned trials.

    Past a trial's own end its phase counts as 1.
    """
    t = np.asarray(time_grid, dtype=float)
    if t.size == 0:
        raise ValueError("empty time grid")
    phases = np.stack([np.where(t > p.duration * (1.0 + 1e-9), 1.0, p.phase(t)) for p in result.profiles])
    mu = phases.mean(axis=0)
    sigma = phases.std(axis=0, ddof=1) if len(phases) > 1 else np.zeros_like(mu)
    return mu, np.maximum(sigma, sigma_floor)
