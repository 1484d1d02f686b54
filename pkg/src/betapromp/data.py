"""Trajectories, synthetic datasets and the CSV trajectory format.

File layout (one block per trajectory, blocks separated by a blank line)::

    # promp-trajectory v1, dt=0.01, dims=2, label=mov1
    0.0,0.0
    0.12,0.31
    ...
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .phase import PhaseProfile

DEFAULT_DT = 0.01


@dataclass(eq=False)
class Trajectory:
    samples: np.ndarray
    dt: float = DEFAULT_DT
    label: str | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        if s.ndim == 1:
            s = s[:, None]
        if s.ndim != 2 or s.shape[0] < 2:
            raise ValueError("a trajectory needs at least two samples")
        if not np.all(np.isfinite(s)):
            raise ValueError("trajectory samples must be finite")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        self.samples = s
        self.dt = float(self.dt)

    @classmethod
    def from_timestamps(cls, times, samples, label=None, rtol=1e-6) -> "Trajectory":
        """Build from explicit time stamps, which must be uniformly spaced."""
        times = np.asarray(times, dtype=float)
        steps = np.diff(times)
        if steps.size == 0 or np.any(steps <= 0):
            raise ValueError("time stamps must be strictly increasing")
        dt = float(steps.mean())
        if np.max(np.abs(steps - dt)) > rtol * dt:
            raise ValueError("non-uniform sampling: resample to a uniform grid first")
        return cls(samples, dt, label)

    def __len__(self) -> int:
        return self.samples.shape[0]

    @property
    def dims(self) -> int:
        return self.samples.shape[1]

    @property
    def duration(self) -> float:
        return (len(self) - 1) * self.dt

    @property
    def times(self) -> np.ndarray:
        return np.arange(len(self)) * self.dt


def min_jerk(s):
    s = np.clip(np.asarray(s, dtype=float), 0.0, 1.0)
    return s**3 * (10.0 - 15.0 * s + 6.0 * s**2)


def synthesize(template: Callable[[np.ndarray], np.ndarray], profile: PhaseProfile, dt: float = DEFAULT_DT,
               label: str | None = None) -> Trajectory:
    """Sample ``template(phase(t))`` on a uniform grid over ``profile.duration``.

    The duration is rounded to a whole number of samples; the profile is
    rebuilt on the rounded duration and stored in ``meta``.
    """
    n = int(round(profile.duration / dt)) + 1
    prof = PhaseProfile(profile.delta1, profile.delta2, (n - 1) * dt, profile.shape)
    t = np.arange(n) * dt
    y = np.asarray(template(prof.phase(t)), dtype=float)
    meta = {"delta1": prof.delta1, "delta2": prof.delta2, "duration": prof.duration}
    return Trajectory(y, dt, label, meta)


@dataclass
class BenchmarkSpec:
    """Planar reaching task: ``n_targets`` targets around one start point.

    Coordinates are screen pixels.
    """

    n_targets: int = 4
    reps_per_target: int = 25
    start: tuple[float, float] = (0.0, 0.0)
    targets: list = None
    duration_range: tuple[float, float] = (0.6, 1.2)
    timing_jitter: tuple[float, float] = (-0.15, 0.15)
    noise_sigma: float = 5.0
    curvature: float = 0.08
    dt: float = DEFAULT_DT
    seed: int = 0

    def __post_init__(self):
        if self.targets is None:
            angles = np.deg2rad(np.linspace(30.0, 150.0, self.n_targets))
            self.targets = [(300.0 * math.cos(a), 300.0 * math.sin(a)) for a in angles]
        self.targets = [tuple(float(v) for v in t) for t in self.targets]
        if len(self.targets) != self.n_targets:
            raise ValueError("number of targets does not match n_targets")
        if len(set(self.targets)) != len(self.targets):
            raise ValueError("targets must be distinct")
        if self.reps_per_target < 1:
            raise ValueError("reps_per_target must be >= 1")


def _draw_profile(rng, duration_range, jitter):
    lo, hi = jitter
    d1 = rng.uniform(lo, hi) if hi > lo else float(lo)
    d2 = rng.uniform(lo, hi) if hi > lo else float(lo)
    a, b = duration_range
    T = rng.uniform(a, b) if b > a else float(a)
    return PhaseProfile(d1, d2, T)


def _reach(rng, spec: BenchmarkSpec, k: int) -> Trajectory:
    start = np.asarray(spec.start)
    target = np.asarray(spec.targets[k])
    prof = _draw_profile(rng, spec.duration_range, spec.timing_jitter)
    end_err = rng.normal(0.0, spec.noise_sigma, 2)
    bend = spec.curvature * np.linalg.norm(target - start) + rng.normal(0.0, spec.noise_sigma)
    d = target + end_err - start
    normal = np.array([-d[1], d[0]]) / np.linalg.norm(d)

    def template(phi):
        s = min_jerk(phi)[:, None]
        return start + d * s + normal * bend * 4.0 * s * (1.0 - s)

    traj = synthesize(template, prof, spec.dt, label=f"mov{k + 1}")
    traj.meta.update(target=k, end_error=end_err.tolist())
    return traj


def gen_reaching(spec: BenchmarkSpec | None = None):
    """Train and test sets for the reaching benchmark.

    Each split holds ``reps_per_target`` trajectories per target, drawn from
    independent child streams of ``spec.seed``.
    """
    spec = spec or BenchmarkSpec()
    streams = np.random.SeedSequence(spec.seed).spawn(2)
    splits = []
    for ss in streams:
        rng = np.random.default_rng(ss)
        splits.append([_reach(rng, spec, k) for k in range(spec.n_targets) for _ in range(spec.reps_per_target)])
    return splits[0], splits[1]


def gen_parabolic(n: int, seed: int = 0, dt: float = DEFAULT_DT, duration_range=(0.6, 1.4),
                  timing_jitter: float = 0.15) -> list[Trajectory]:
    """Planar arches ``y = b + 0.5 * (1 - 4 (x - 1/2)^2)`` with ``x`` equal to phase.

    Offsets ``b`` are uniform on [0, 1]; distinct offsets never intersect.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    offsets = rng.uniform(0.0, 1.0, n)
    out = []
    for b in offsets:
        prof = _draw_profile(rng, duration_range, (-timing_jitter, timing_jitter))

        def template(phi, b=b):
            return np.column_stack([phi, b + 0.5 * (1.0 - 4.0 * (phi - 0.5) ** 2)])

        traj = synthesize(template, prof, dt, label="parabola")
        traj.meta["offset"] = float(b)
        out.append(traj)
    return out


def gen_jointspace(n_joints: int = 7, n_demos: int = 11, seed: int = 0, timing_jitter: float = 0.15,
                   spatial_noise: float = 0.02, dt: float = DEFAULT_DT, duration: float = 2.5) -> list[Trajectory]:
    """Joint-space demonstrations passing one fixed mid-movement pose.

    Every demonstration runs start pose -> pick-up pose (at phase 0.5) ->
    hand-over pose; only the hand-over pose varies spatially (normal with
    ``spatial_noise`` radians).  ``timing_jitter`` bounds both the profile
    deltas and the relative deviation of each trial's duration from
    ``duration``, so ``timing_jitter=0`` removes all timing variability.
    """
    if n_joints < 1:
        raise ValueError("n_joints must be >= 1")
    rng = np.random.default_rng(seed)
    q0 = rng.uniform(-1.0, 1.0, n_joints)
    qv = q0 + rng.uniform(-0.8, 0.8, n_joints)
    q1 = rng.uniform(-1.0, 1.0, n_joints)
    j = timing_jitter
    out = []
    for _ in range(n_demos):
        prof = _draw_profile(rng, (duration * (1 - j), duration * (1 + j)), (-j, j))
        end = q1 + rng.normal(0.0, spatial_noise, n_joints) if spatial_noise > 0 else q1

        def template(phi, end=end):
            s = min_jerk(phi)[:, None]
            bump = 16.0 * (phi * (1.0 - phi))[:, None] ** 2
            return q0 + (end - q0) * s + (qv - 0.5 * (q0 + end)) * bump

        out.append(synthesize(template, prof, dt, label="handover"))
    return out


class TrajectoryFormatError(ValueError):
    def __init__(self, message, line=None):
        super().__init__(f"line {line}: {message}" if line is not None else message)
        self.line = line


_HEADER = re.compile(r"^#\s*promp-trajectory\s+v1\s*,(.*)$")


def write_csv(path, trajectories: Sequence[Trajectory]) -> None:
    blocks = []
    for tr in trajectories:
        label = "" if tr.label is None else tr.label
        lines = [f"# promp-trajectory v1, dt={tr.dt!r}, dims={tr.dims}, label={label}"]
        lines += [",".join(f"{v:.17g}" for v in row) for row in tr.samples]
        blocks.append("\n".join(lines))
    Path(path).write_text("\n\n".join(blocks) + "\n")


def _parse_header(text, lineno):
    m = _HEADER.match(text)
    if not m:
        raise TrajectoryFormatError("expected '# promp-trajectory v1, ...' header", lineno)
    fields = {}
    rest = m.group(1)
    # label is last and may contain commas
    head, sep, label = rest.partition("label=")
    for part in head.split(","):
        part = part.strip()
        if not part:
            continue
        key, eq, value = part.partition("=")
        if not eq:
            raise TrajectoryFormatError(f"malformed header field {part!r}", lineno)
        fields[key.strip()] = value.strip()
    for key in ("dt", "dims"):
        if key not in fields:
            raise TrajectoryFormatError(f"header is missing '{key}'", lineno)
    try:
        dt = float(fields["dt"])
        dims = int(fields["dims"])
    except ValueError as exc:
        raise TrajectoryFormatError(f"bad header value: {exc}", lineno) from None
    label = label.strip() if sep else None
    return dt, dims, (label or None)


def read_csv(path) -> list[Trajectory]:
    out = []
    current = None

    def close():
        if current is None:
            return
        dt, dims, label, rows, lineno = current
        if len(rows) < 2:
            raise TrajectoryFormatError("trajectory has fewer than two samples", lineno)
        out.append(Trajectory(np.array(rows), dt, label))

    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line:
            close()
            current = None
            continue
        if line.startswith("#"):
            close()
            dt, dims, label = _parse_header(line, lineno)
            current = (dt, dims, label, [], lineno)
            continue
        if current is None:
            raise TrajectoryFormatError("sample row before any header", lineno)
        try:
            row = [float(v) for v in line.split(",")]
        except ValueError:
            raise TrajectoryFormatError(f"non-numeric value in {line!r}", lineno) from None
        if len(row) != current[1]:
            raise TrajectoryFormatError(f"expected {current[1]} values, got {len(row)}", lineno)
        current[3].append(row)
    close()
    return out
