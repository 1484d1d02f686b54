"""Independent reference computations used by several test modules."""

import numpy as np
from scipy.stats import truncnorm


def gaussian_bumps(centers, widths, phi):
    b = np.exp(-((phi[:, None] - centers[None]) ** 2) / widths[None])
    return b / b.sum(axis=1, keepdims=True)


def mc_obs_likelihood(model, y, t, n_draws, rng):
    """Monte Carlo estimate of the phase-marginal density of ``y`` at time ``t``.

    Phase is drawn from the continuous normal prior truncated to [0, 1];
    the predictive density is assembled block by block from the features.
    """
    mu_phi = np.interp(t, model.phase_prior.time_grid, model.phase_prior.mu)
    sd_phi = np.interp(t, model.phase_prior.time_grid, model.phase_prior.sigma)
    a, b = (0.0 - mu_phi) / sd_phi, (1.0 - mu_phi) / sd_phi
    phi = truncnorm.rvs(a, b, loc=mu_phi, scale=sd_phi, size=n_draws, random_state=rng)
    F = gaussian_bumps(np.asarray(model.basis.centers), np.asarray(model.basis.widths), phi)
    N = F.shape[1]
    D = model.mu_w.size // N
    mean = np.stack([F @ model.mu_w[d * N:(d + 1) * N] for d in range(D)], axis=1)
    cov = np.empty((n_draws, D, D))
    for i in range(D):
        for j in range(D):
            block = model.sigma_w[i * N:(i + 1) * N, j * N:(j + 1) * N]
            cov[:, i, j] = np.einsum("ni,ij,nj->n", F, block, F)
    cov += model.gamma * np.eye(D)
    r = y[None, :] - mean
    maha = np.einsum("ni,nij,nj->n", r, np.linalg.inv(cov), r)
    dens = np.exp(-0.5 * maha) / np.sqrt((2 * np.pi) ** D * np.linalg.det(cov))
    return dens.mean(), dens.std(ddof=1) / np.sqrt(n_draws)


def random_triples(library, n, rng):
    """In-distribution ``(model, y, t)`` triples: y is a draw from the model at a prior phase."""
    out = []
    for _ in range(n):
        model = library.models[rng.integers(len(library))]
        t = rng.uniform(0.0, model.phase_prior.time_grid[-1])
        mu, sd = model.phase_prior.at(t)
        phi = float(np.clip(rng.normal(mu, sd), 0.0, 1.0))
        w = rng.multivariate_normal(model.mu_w, model.sigma_w)
        y = model.observation_matrices(phi) @ w
        out.append((model, y, t))
    return out


def random_model(rng, dims=2, n_features=9, label="rand"):
    """A ProMP with random mean weights, a dense random covariance and a smooth phase prior."""
    from betapromp.basis import BasisConfig
    from betapromp.promp import PhasePrior, ProMPModel

    k = n_features * dims
    A = rng.normal(size=(k, k))
    sigma = A @ A.T / k * rng.uniform(0.5, 2.0)
    T = rng.uniform(0.8, 1.5)
    grid = np.linspace(0.0, T, 50)
    x = grid / T
    prior = PhasePrior(grid, 3 * x**2 - 2 * x**3, np.full(50, rng.uniform(0.03, 0.2)))
    return ProMPModel(label, BasisConfig(n_features), rng.normal(0.0, 3.0, k), sigma, prior)


def random_model_triples(n, rng):
    out = []
    for i in range(n):
        model = random_model(rng, label=f"m{i}")
        t = rng.uniform(0.0, model.phase_prior.time_grid[-1])
        mu, sd = model.phase_prior.at(t)
        phi = float(np.clip(rng.normal(mu, sd), 0.0, 1.0))
        y = model.observation_matrices(phi) @ rng.multivariate_normal(model.mu_w, model.sigma_w)
        out.append((model, y, t))
    return out
