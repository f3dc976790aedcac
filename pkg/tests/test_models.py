"""Conjugate-model and kinematics tests.

Oracles: quadrature for densities, Monte Carlo moments for samplers, and a
chain-rule route for the marginal likelihood (product of one-point
predictives must equal the closed form).
"""

import math

import numpy as np
import pytest
from scipy.stats import multivariate_normal

from bnptrack.models import (
    ClusterParams,
    GaussianNIW,
    KernelConfig,
    TargetState,
    ct_transition,
    ct_transition_matrix,
    cv_transition,
    gaussian_logpdf,
    kinematic_noise_matrix,
    niw_log_marginal,
    niw_posterior,
    niw_predictive,
    niw_rvs,
    param_walk,
    range_bearing_likelihood,
    range_bearing_measure,
)


# ------------------------------------------------------------------ NIW prior


def test_niw_validation():
    GaussianNIW(mu0=np.zeros(2), lam=0.0, nu=3.0, psi=np.eye(2))
    with pytest.raises(ValueError):
        GaussianNIW(mu0=np.zeros(2), lam=-1.0, nu=3.0, psi=np.eye(2))
    with pytest.raises(ValueError):
        GaussianNIW(mu0=np.zeros(2), lam=1.0, nu=1.0, psi=np.eye(2))  # nu <= dim-1
    with pytest.raises(ValueError):
        GaussianNIW(mu0=np.zeros(2), lam=1.0, nu=3.0, psi=-np.eye(2))
    with pytest.raises(ValueError):
        GaussianNIW(mu0=np.zeros(2), lam=1.0, nu=3.0, psi=np.eye(3))


def test_niw_posterior_lam_zero_single_point():
    prior = GaussianNIW(mu0=np.array([5.0, -3.0]), lam=0.0, nu=4.0, psi=np.eye(2))
    y = np.array([[1.25, 2.5]])
    post = niw_posterior(prior, y)
    np.testing.assert_array_equal(post.mu0, y[0])
    assert post.lam == 1.0
    assert post.nu == 5.0


def test_niw_posterior_empty_data_is_identity():
    prior = GaussianNIW(mu0=np.zeros(2), lam=2.0, nu=5.0, psi=np.eye(2))
    assert niw_posterior(prior, np.empty((0, 2))) is prior


def test_niw_posterior_mean_tracks_generating_gaussian():
    rng = np.random.default_rng(100)
    true_mean = np.array([2.0, -1.0])
    true_cov = np.array([[2.0, 0.6], [0.6, 1.0]])
    n = 10_000
    y = rng.multivariate_normal(true_mean, true_cov, size=n)
    post = niw_posterior(GaussianNIW(np.zeros(2), 1.0, 4.0, np.eye(2)), y)
    se = np.sqrt(np.diag(true_cov) / n)
    assert np.all(np.abs(post.mu0 - true_mean) < 3 * se)
    # E[cov] under the posterior should sit near the generating covariance
    expected_cov = post.psi / (post.nu - 2 - 1)
    assert np.all(np.abs(expected_cov - true_cov) < 0.1 * np.abs(true_cov) + 0.02)


def test_niw_posterior_psi_stays_positive_definite():
    rng = np.random.default_rng(8)
    prior = GaussianNIW(mu0=np.array([1.0, 1.0]), lam=0.5, nu=3.5, psi=np.eye(2) * 0.1)
    for _ in range(50):
        y = rng.standard_normal((rng.integers(1, 12), 2)) * rng.uniform(0.1, 30)
        post = niw_posterior(prior, y)
        np.linalg.cholesky(post.psi)  # raises if not PD


def test_niw_posterior_dimension_mismatch():
    prior = GaussianNIW(mu0=np.zeros(2), lam=1.0, nu=4.0, psi=np.eye(2))
    with pytest.raises(ValueError):
        niw_posterior(prior, np.ones((3, 3)))


# ----------------------------------------------------------------- predictive


def test_niw_predictive_integrates_to_one_1d():
    prior = GaussianNIW(mu0=np.array([1.0]), lam=2.0, nu=3.0, psi=np.array([[2.0]]))
    scale = math.sqrt(2.0 * (2.0 + 1.0) / (2.0 * 3.0))
    grid = np.linspace(1.0 - 60 * scale, 1.0 + 60 * scale, 400_001)
    dens = np.exp([niw_predictive(prior, np.array([g])) for g in grid])
    total = np.trapezoid(dens, grid)
    assert total == pytest.approx(1.0, abs=1e-3)


def test_niw_predictive_large_nu_matches_gaussian():
    nu = 1e6
    p = 2
    target_cov = np.diag([2.0, 3.0])
    lam = 1.0
    psi = target_cov * (lam * (nu - p + 1)) / (lam + 1.0)
    prior = GaussianNIW(mu0=np.array([0.5, -0.5]), lam=lam, nu=nu, psi=psi)
    got = niw_predictive(prior, prior.mu0)
    want = multivariate_normal.logpdf(prior.mu0, prior.mu0, target_cov)
    assert got == pytest.approx(want, abs=1e-4)


def test_niw_predictive_symmetry_about_mu0():
    prior = GaussianNIW(mu0=np.array([1.0, 2.0]), lam=0.7, nu=5.0, psi=np.eye(2) * 1.3)
    r = np.array([0.8, -1.1])
    assert niw_predictive(prior, prior.mu0 + r) == pytest.approx(
        niw_predictive(prior, prior.mu0 - r), abs=1e-12
    )


def test_niw_predictive_requires_positive_lam():
    prior = GaussianNIW(mu0=np.zeros(2), lam=0.0, nu=4.0, psi=np.eye(2))
    with pytest.raises(ValueError):
        niw_predictive(prior, np.zeros(2))


def test_niw_log_marginal_matches_chain_rule():
    # Dual route: closed form vs product of sequential one-point predictives.
    rng = np.random.default_rng(21)
    prior = GaussianNIW(mu0=np.array([0.5, -1.0]), lam=0.8, nu=4.5, psi=np.eye(2) * 2.0)
    y = rng.standard_normal((6, 2)) * 1.5
    sequential = 0.0
    running = prior
    for row in y:
        sequential += niw_predictive(running, row)
        running = niw_posterior(running, row[None, :])
    assert niw_log_marginal(prior, y) == pytest.approx(sequential, abs=1e-9)


def test_niw_log_marginal_empty_is_zero():
    prior = GaussianNIW(mu0=np.zeros(2), lam=1.0, nu=4.0, psi=np.eye(2))
    assert niw_log_marginal(prior, np.empty((0, 2))) == 0.0


# -------------------------------------------------------------------- niw_rvs


def test_niw_rvs_moments():
    rng = np.random.default_rng(77)
    prior = GaussianNIW(mu0=np.array([1.0, -2.0]), lam=4.0, nu=10.0, psi=np.diag([7.0, 14.0]))
    draws = [niw_rvs(prior, rng) for _ in range(4000)]
    means = np.array([d.mean for d in draws])
    covs = np.array([d.cov for d in draws])
    np.testing.assert_allclose(means.mean(axis=0), prior.mu0, atol=0.1)
    np.testing.assert_allclose(
        covs.mean(axis=0), prior.psi / (10.0 - 2 - 1), rtol=0.1, atol=0.05
    )


def test_niw_rvs_requires_positive_lam():
    prior = GaussianNIW(mu0=np.zeros(2), lam=0.0, nu=4.0, psi=np.eye(2))
    with pytest.raises(ValueError):
        niw_rvs(prior, np.random.default_rng(0))


# ----------------------------------------------------------------- param walk


def test_param_walk_zero_cov_is_identity():
    theta = ClusterParams(mean=np.array([3.0, 4.0]), cov=np.eye(2) * 2.0)
    cfg = KernelConfig(param_walk_cov=np.zeros((2, 2)))
    out = param_walk(theta, cfg, np.random.default_rng(0))
    np.testing.assert_array_equal(out.mean, theta.mean)
    assert out.cov is theta.cov


def test_param_walk_perturbs_mean_only():
    rng = np.random.default_rng(5)
    theta = ClusterParams(mean=np.zeros(2), cov=np.eye(2) * 9.0)
    cfg = KernelConfig(param_walk_cov=np.diag([0.25, 1.0]))
    walked = np.array([param_walk(theta, cfg, rng).mean for _ in range(20_000)])
    np.testing.assert_allclose(np.cov(walked.T), np.diag([0.25, 1.0]), rtol=0.05, atol=0.02)
    assert param_walk(theta, cfg, rng).cov is theta.cov


# ------------------------------------------------------------- motion kernels


def test_ct_matrix_zero_turn_equals_cv():
    dt = 1.0
    cv = np.array([[1, dt, 0, 0], [0, 1, 0, 0], [0, 0, 1, dt], [0, 0, 0, 1.0]])
    np.testing.assert_allclose(ct_transition_matrix(0.0, dt), cv, atol=1e-9, rtol=0)


def test_ct_matrix_continuous_at_switch_point():
    # The transitioned state must be continuous across the analytic-limit
    # switch: compare outputs just above and below it, relative to speed.
    vec = np.array([100.0, 7.0, -50.0, 3.0])
    above = ct_transition_matrix(1.001e-8, 1.0) @ vec
    below = ct_transition_matrix(0.999e-8, 1.0) @ vec
    assert np.max(np.abs(above - below)) / np.max(np.abs(vec)) < 1e-6


def test_ct_quarter_turn_rotates_velocity():
    # omega = pi/2, dt = 1, v = (1, 0): velocity becomes (0, 1) and the
    # position traces a quarter arc of radius 2/pi.
    s = TargetState(x=0.0, y=0.0, vx=1.0, vy=0.0, omega=math.pi / 2)
    out = ct_transition(s, KernelConfig(sigma_w=0.0, sigma_u=0.0), np.random.default_rng(0))
    assert out.vx == pytest.approx(0.0, abs=1e-12)
    assert out.vy == pytest.approx(1.0, abs=1e-12)
    assert out.x == pytest.approx(2 / math.pi, abs=1e-12)
    assert out.y == pytest.approx(2 / math.pi, abs=1e-12)


def test_cv_transition_zero_noise_is_linear_drift():
    s = TargetState(x=1.0, y=2.0, vx=3.0, vy=-1.0)
    out = cv_transition(s, KernelConfig(dt=2.0), np.random.default_rng(0))
    assert (out.x, out.y, out.vx, out.vy) == (7.0, 0.0, 3.0, -1.0)


def test_ct_transition_requires_turn_rate():
    with pytest.raises(ValueError):
        ct_transition(TargetState(0, 0, 1, 1), KernelConfig(), np.random.default_rng(0))


def test_ct_noise_covariance_monte_carlo():
    sigma_w, sigma_u = 15.0, math.pi / 180
    cfg = KernelConfig(sigma_w=sigma_w, sigma_u=sigma_u)
    s = TargetState(x=100.0, y=50.0, vx=5.0, vy=-2.0, omega=0.02)
    rng = np.random.default_rng(2024)
    n = 100_000
    draws = np.array(
        [
            [o.x, o.vx, o.y, o.vy, o.omega]
            for o in (ct_transition(s, cfg, rng) for _ in range(n))
        ]
    )
    sample_cov = np.cov(draws.T)
    b = kinematic_noise_matrix(1.0)
    want = np.zeros((5, 5))
    want[:4, :4] = sigma_w**2 * (b @ b.T)
    want[4, 4] = sigma_u**2
    nonzero = want != 0.0
    rel = np.abs(sample_cov[nonzero] - want[nonzero]) / np.abs(want[nonzero])
    assert rel.max() < 0.03
    zero_scale = 0.03 * np.sqrt(np.outer(np.diag(want), np.diag(want)))
    assert np.all(np.abs(sample_cov[~nonzero]) <= zero_scale[~nonzero] + 1e-12)


# --------------------------------------------------------------- sensor model


def test_range_bearing_measure_and_exact_mode_density():
    s = TargetState(x=3.0, y=4.0, vx=0.0, vy=0.0)
    z = range_bearing_measure(s)
    assert z[1] == pytest.approx(5.0)
    assert z[0] == pytest.approx(math.atan2(4.0, 3.0))
    sigma_r2, sigma_phi2 = 25.0, (math.pi / 180) ** 2
    got = range_bearing_likelihood(z, s, sigma_r2, sigma_phi2)
    want = -0.5 * math.log((2 * math.pi) ** 2 * sigma_r2 * sigma_phi2)
    assert got == pytest.approx(want, abs=1e-12)


def test_range_bearing_density_integrates_to_one():
    s = TargetState(x=300.0, y=200.0, vx=0.0, vy=0.0)
    sigma_r2, sigma_phi2 = 25.0, (math.pi / 180) ** 2
    center = range_bearing_measure(s)
    phis = center[0] + np.linspace(-5, 5, 801) * math.sqrt(sigma_phi2)
    rs = center[1] + np.linspace(-5, 5, 801) * math.sqrt(sigma_r2)
    dens = np.array(
        [
            [math.exp(range_bearing_likelihood(np.array([p, r]), s, sigma_r2, sigma_phi2)) for r in rs]
            for p in phis
        ]
    )
    total = np.trapezoid(np.trapezoid(dens, rs, axis=1), phis)
    assert total == pytest.approx(1.0, abs=1e-3)


def test_range_bearing_rejects_origin():
    with pytest.raises(ValueError):
        range_bearing_measure(TargetState(0.0, 0.0, 1.0, 1.0))


def test_bearing_residual_wraps():
    s = TargetState(x=-10.0, y=-1e-6, vx=0, vy=0)  # bearing just below -pi+eps
    z = range_bearing_measure(s).copy()
    z[0] += 2 * math.pi  # same angle, other representative
    assert range_bearing_likelihood(z, s, 25.0, 1e-4) == pytest.approx(
        range_bearing_likelihood(range_bearing_measure(s), s, 25.0, 1e-4), abs=1e-9
    )


# ------------------------------------------------------------ gaussian logpdf


def test_gaussian_logpdf_matches_scipy():
    rng = np.random.default_rng(9)
    mean = np.array([1.0, -2.0])
    cov = np.array([[2.0, 0.3], [0.3, 0.5]])
    pts = rng.standard_normal((7, 2))
    got = gaussian_logpdf(pts, mean, cov)
    want = multivariate_normal.logpdf(pts, mean, cov)
    np.testing.assert_allclose(got, want, atol=1e-10)
    assert gaussian_logpdf(pts[0], mean, cov) == pytest.approx(want[0], abs=1e-10)


def test_target_state_vector_roundtrip():
    s = TargetState(x=1.0, y=2.0, vx=3.0, vy=4.0, omega=0.1)
    assert TargetState.from_vector(s.as_vector()) == s
    s2 = TargetState(x=1.0, y=2.0, vx=3.0, vy=4.0)
    assert TargetState.from_vector(s2.as_vector()) == s2
    with pytest.raises(ValueError):
        TargetState.from_vector(np.zeros(3))
