"""Normalized bell-shaped features over phase.

Every feature is a Gaussian bump ``exp(-(phi - c_i)**2 / h_i)`` divided by
the sum over all bumps, so the feature vector is a partition of unity at
every phase value.  Multi-dimensional signals share one feature block per
dimension; the weight vector is the concatenation of the per-dimension
blocks.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

DEFAULT_WIDTH = 0.15


@dataclass(frozen=True)
class BasisConfig:
    """Feature centers and widths.

    ``widths`` divide the squared distance to the center, i.e. they act as
    squared length scales.
    """

    n_features: int = 9
    centers: tuple[float, ...] = field(default=())
    widths: tuple[float, ...] = field(default=())
    include_velocity: bool = False

    def __post_init__(self):
        n = int(self.n_features)
        if n < 2:
            raise ValueError(f"n_features must be >= 2, got {n}")
        centers = self.centers or tuple(k / (n - 1) for k in range(n))
        widths = self.widths or (DEFAULT_WIDTH,) * n
        centers = tuple(float(c) for c in centers)
        widths = tuple(float(h) for h in widths)
        if len(centers) != n or len(widths) != n:
            raise ValueError("centers and widths must both have n_features entries")
        if any(b <= a for a, b in zip(centers, centers[1:])):
            raise ValueError("centers must be strictly increasing")
        if any(h <= 0 for h in widths):
            raise ValueError("widths must be positive")
        object.__setattr__(self, "n_features", n)
        object.__setattr__(self, "centers", centers)
        object.__setattr__(self, "widths", widths)

    @property
    def c(self) -> np.ndarray:
        return np.asarray(self.centers)

    @property
    def h(self) -> np.ndarray:
        return np.asarray(self.widths)

    def to_dict(self) -> dict:
        return {
            "n": self.n_features,
            "centers": list(self.centers),
            "widths": list(self.widths),
            "include_velocity": self.include_velocity,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BasisConfig":
        return cls(
            n_features=int(d["n"]),
            centers=tuple(d["centers"]),
            widths=tuple(d["widths"]),
            include_velocity=bool(d.get("include_velocity", False)),
        )


class FeatureRow(NamedTuple):
    values: np.ndarray
    derivatives: np.ndarray


def features(config: BasisConfig, phi) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized feature evaluation.

    Parameters
    ----------
    config : BasisConfig
    phi : array_like
        Phase values in [0, 1], any shape ``S``.

    Returns
    -------
    values, derivatives : ndarray
        Arrays of shape ``S + (N,)``; ``derivatives`` is d(values)/d(phi).
    """
    phi = np.asarray(phi, dtype=float)
    if np.any(~np.isfinite(phi)) or np.any(phi < 0.0) or np.any(phi > 1.0):
        raise ValueError("phase values must lie in [0, 1]")
    d = phi[..., None] - config.c
    # shift by the per-row max exponent; cancels in the ratio
    expo = -(d**2) / config.h
    expo -= expo.max(axis=-1, keepdims=True)
    b = np.exp(expo)
    db = b * (-2.0 * d / config.h)
    s = b.sum(axis=-1, keepdims=True)
    ds = db.sum(axis=-1, keepdims=True)
    values = b / s
    derivatives = (db * s - b * ds) / s**2
    return values, derivatives


def eval_features(config: BasisConfig, phi: float) -> FeatureRow:
    phi = float(phi)
    if not 0.0 <= phi <= 1.0:
        raise ValueError(f"phase {phi!r} outside [0, 1]")
    values, derivatives = features(config, phi)
    return FeatureRow(values, derivatives)


def observation_matrix(config: BasisConfig, phi: float, phi_dot: float = 1.0, dims: int = 1) -> np.ndarray:
    """Map from the stacked weight vector to one observation.

    Returns a ``(D, N*D)`` block-diagonal matrix for position-only
    observations, or ``(2D, N*D)`` with the velocity rows below the position
    rows when ``config.include_velocity`` is set.  Velocity rows are the
    phase derivatives scaled by ``phi_dot`` (chain rule).
    """
    if phi_dot < 0:
        raise ValueError("phi_dot must be non-negative")
    row = eval_features(config, phi)
    eye = np.eye(dims)
    pos = np.kron(eye, row.values[None, :])
    if not config.include_velocity:
        return pos
    vel = np.kron(eye, (row.derivatives * phi_dot)[None, :])
    return np.vstack([pos, vel])


def design_matrix(config: BasisConfig, phi) -> np.ndarray:
    """Stack feature rows for a sequence of phases, shape ``(len(phi), N)``."""
    values, _ = features(config, np.atleast_1d(phi))
    return values
