import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from betapromp.basis import BasisConfig, design_matrix, eval_features, features, observation_matrix


def naive_features(cfg, phi):
    # independent oracle: direct formula, no stabilizing shift
    b = np.exp(-((phi - cfg.c) ** 2) / cfg.h)
    return b / b.sum()


def test_defaults():
    cfg = BasisConfig()
    assert cfg.n_features == 9
    np.testing.assert_allclose(cfg.c, np.linspace(0, 1, 9))
    np.testing.assert_allclose(cfg.h, 0.15)


@pytest.mark.parametrize("kw", [
    {"n_features": 1},
    {"n_features": 3, "centers": (0.0, 0.5, 0.5)},
    {"n_features": 3, "widths": (0.1, -0.1, 0.1)},
    {"n_features": 3, "centers": (0.0, 1.0)},
])
def test_config_rejects_bad_values(kw):
    with pytest.raises(ValueError):
        BasisConfig(**kw)


def test_config_dict_round_trip():
    cfg = BasisConfig(5, widths=(0.1, 0.2, 0.3, 0.2, 0.1), include_velocity=True)
    assert BasisConfig.from_dict(cfg.to_dict()) == cfg


def test_matches_naive_formula():
    cfg = BasisConfig()
    for phi in np.linspace(0, 1, 17):
        np.testing.assert_allclose(features(cfg, phi)[0], naive_features(cfg, phi), rtol=1e-12)


def test_partition_of_unity_on_fine_grid():
    values, derivs = features(BasisConfig(), np.linspace(0, 1, 1000))
    assert np.max(np.abs(values.sum(axis=1) - 1)) <= 1e-12
    assert np.max(np.abs(derivs.sum(axis=1))) <= 1e-10


def test_derivative_matches_central_differences():
    cfg = BasisConfig()
    phi = np.linspace(0.01, 0.99, 99)
    eps = 1e-6
    fd = (features(cfg, phi + eps)[0] - features(cfg, phi - eps)[0]) / (2 * eps)
    assert np.max(np.abs(features(cfg, phi)[1] - fd)) <= 1e-5


@pytest.mark.parametrize("phi", [-1e-3, 1.0 + 1e-3, np.nan])
def test_out_of_domain_phase(phi):
    with pytest.raises(ValueError):
        features(BasisConfig(), phi)


def test_eval_features_row():
    row = eval_features(BasisConfig(), 0.3)
    assert row.values.shape == (9,) and row.derivatives.shape == (9,)


def test_observation_matrix_blocks():
    cfg = BasisConfig()
    H = observation_matrix(cfg, 0.4, dims=3)
    assert H.shape == (3, 27)
    v = features(cfg, 0.4)[0]
    for d in range(3):
        np.testing.assert_allclose(H[d, 9 * d: 9 * d + 9], v)
        assert np.count_nonzero(H[d]) == 9


def test_observation_matrix_velocity_rows():
    cfg = BasisConfig(include_velocity=True)
    H = observation_matrix(cfg, 0.4, phi_dot=2.0, dims=2)
    assert H.shape == (4, 18)
    np.testing.assert_allclose(H[2, :9], 2.0 * features(cfg, 0.4)[1])
    with pytest.raises(ValueError):
        observation_matrix(cfg, 0.4, phi_dot=-1.0, dims=2)


def test_design_matrix_shape_and_conditioning():
    F = design_matrix(BasisConfig(), np.linspace(0, 1, 200))
    assert F.shape == (200, 9)
    # normalized bumps this wide are nearly collinear; projection must cope
    assert np.linalg.cond(F) > 1e4


@settings(max_examples=200, deadline=None)
@given(phi=st.floats(0.0, 1.0), n=st.integers(2, 25), width=st.floats(1e-3, 2.0))
def test_property_partition_and_nonnegativity(phi, n, width):
    cfg = BasisConfig(n, widths=(width,) * n)
    values, derivs = features(cfg, phi)
    assert np.all(values >= 0)
    assert abs(values.sum() - 1) <= 1e-12
    assert abs(derivs.sum()) <= 1e-8 * max(1.0, np.abs(derivs).max())
