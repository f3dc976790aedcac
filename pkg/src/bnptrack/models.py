"""Conjugate Gaussian cluster model and kinematic kernels.

The cluster model is Normal-inverse-Wishart (NIW): cluster parameters are a
(mean, covariance) pair, observations assigned to a cluster are Gaussian
around its mean.  Closed-form posterior updates, Student-t predictive
densities and marginal likelihoods live here, alongside the motion kernels
(coordinated turn and constant velocity) and the range-bearing sensor
density used by the radar-style scenarios.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.special import gammaln, multigammaln

__all__ = [
    "GaussianNIW",
    "ClusterParams",
    "TargetState",
    "KernelConfig",
    "niw_posterior",
    "niw_predictive",
    "niw_log_marginal",
    "niw_rvs",
    "param_walk",
    "ct_transition",
    "cv_transition",
    "ct_transition_matrix",
    "kinematic_noise_matrix",
    "range_bearing_measure",
    "range_bearing_likelihood",
    "gaussian_logpdf",
]

LOG_2PI = math.log(2.0 * math.pi)


# --------------------------------------------------------------------- types


@dataclass(frozen=True)
class GaussianNIW:
    """Normal-inverse-Wishart prior over a Gaussian's (mean, covariance).

    mu0    prior mean location
    lam    prior strength on the mean (>= 0; zero means the data alone set
           the posterior mean, but predictive densities then do not exist)
    nu     inverse-Wishart degrees of freedom (> dim - 1)
    psi    inverse-Wishart scale matrix (symmetric positive definite)
    """

    mu0: np.ndarray
    lam: float
    nu: float
    psi: np.ndarray

    def __post_init__(self) -> None:
        mu0 = np.atleast_1d(np.asarray(self.mu0, dtype=float))
        psi = np.asarray(self.psi, dtype=float)
        object.__setattr__(self, "mu0", mu0)
        object.__setattr__(self, "psi", psi)
        p = mu0.shape[0]
        if psi.shape != (p, p):
            raise ValueError(f"psi must be {p}x{p}, got {psi.shape}")
        if not np.allclose(psi, psi.T, atol=1e-10):
            raise ValueError("psi must be symmetric")
        try:
            np.linalg.cholesky(psi)
        except np.linalg.LinAlgError as err:
            raise ValueError("psi must be positive definite") from err
        if self.lam < 0.0:
            raise ValueError(f"lam must be nonnegative, got {self.lam}")
        if not self.nu > p - 1:
            raise ValueError(f"nu must exceed dim - 1 = {p - 1}, got {self.nu}")

    @property
    def dim(self) -> int:
        return self.mu0.shape[0]


@dataclass(frozen=True)
class ClusterParams:
    """A cluster's Gaussian parameters: location and spread."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "mean", np.atleast_1d(np.asarray(self.mean, dtype=float)))
        object.__setattr__(self, "cov", np.asarray(self.cov, dtype=float))
        p = self.mean.shape[0]
        if self.cov.shape != (p, p):
            raise ValueError(f"cov must be {p}x{p}, got {self.cov.shape}")


@dataclass(frozen=True)
class TargetState:
    """Planar kinematic state: position, velocity, optional turn rate."""

    x: float
    y: float
    vx: float
    vy: float
    omega: Optional[float] = None

    def as_vector(self) -> np.ndarray:
        """Kinematic vector in [x, vx, y, vy(, omega)] order."""
        base = [self.x, self.vx, self.y, self.vy]
        if self.omega is not None:
            base.append(self.omega)
        return np.array(base, dtype=float)

    @staticmethod
    def from_vector(vec: np.ndarray) -> "TargetState":
        v = np.asarray(vec, dtype=float).ravel()
        if v.shape[0] == 4:
            return TargetState(x=v[0], vx=v[1], y=v[2], vy=v[3])
        if v.shape[0] == 5:
            return TargetState(x=v[0], vx=v[1], y=v[2], vy=v[3], omega=v[4])
        raise ValueError(f"kinematic vector must have 4 or 5 entries, got {v.shape[0]}")

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y], dtype=float)


def _as_psd_matrix(value, dim: int) -> np.ndarray:
    mat = np.asarray(value, dtype=float)
    if mat.ndim == 0:
        mat = float(mat) * np.eye(dim)
    if mat.shape != (dim, dim):
        raise ValueError(f"expected a {dim}x{dim} matrix, got shape {mat.shape}")
    if not np.allclose(mat, mat.T, atol=1e-10):
        raise ValueError("covariance must be symmetric")
    if np.any(np.linalg.eigvalsh(mat) < -1e-10):
        raise ValueError("covariance must be positive semidefinite")
    return mat


@dataclass(frozen=True)
class KernelConfig:
    """Motion / parameter-evolution noise configuration.

    sigma_w         acceleration noise scale (distance / time^2)
    sigma_u         turn-rate noise scale (radians / time)
    dt              step duration (defaults to one time unit)
    param_walk_cov  covariance of the random walk applied to surviving
                    cluster means at each step (matrix, or scalar times I;
                    dimension equals the cluster-parameter dimension)
    """

    sigma_w: float = 0.0
    sigma_u: float = 0.0
    dt: float = 1.0
    param_walk_cov: np.ndarray = field(default_factory=lambda: np.zeros((2, 2)))

    def __post_init__(self) -> None:
        if self.sigma_w < 0.0 or self.sigma_u < 0.0:
            raise ValueError("noise scales must be nonnegative")
        if self.dt <= 0.0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        walk = np.asarray(self.param_walk_cov, dtype=float)
        if walk.ndim == 0:
            walk = float(walk) * np.eye(2)
        object.__setattr__(self, "param_walk_cov", _as_psd_matrix(walk, walk.shape[0]))


# ------------------------------------------------------------ NIW conjugacy


def _niw_posterior_params(
    prior: GaussianNIW, y: np.ndarray
) -> tuple[np.ndarray, float, float, np.ndarray]:
    """Posterior (mu, lam, nu, psi) as a plain tuple; y must be (n, p)."""
    n = y.shape[0]
    ybar = y.mean(axis=0)
    lam_n = prior.lam + n
    mu_n = (prior.lam * prior.mu0 + n * ybar) / lam_n
    centered = y - ybar
    scatter = centered.T @ centered
    shift = ybar - prior.mu0
    psi_n = prior.psi + scatter + (prior.lam * n / lam_n) * np.outer(shift, shift)
    return mu_n, lam_n, prior.nu + n, psi_n


def niw_posterior(prior: GaussianNIW, data: np.ndarray) -> GaussianNIW:
    """NIW posterior after observing the rows of ``data`` (may be empty)."""
    y = np.asarray(data, dtype=float)
    if y.size == 0:
        return prior
    y = np.atleast_2d(y)
    if y.shape[1] != prior.dim:
        raise ValueError(f"data dimension {y.shape[1]} does not match prior dimension {prior.dim}")
    mu_n, lam_n, nu_n, psi_n = _niw_posterior_params(prior, y)
    return GaussianNIW(mu0=mu_n, lam=lam_n, nu=nu_n, psi=psi_n)


def _student_t_logpdf(y: np.ndarray, df: float, loc: np.ndarray, scale: np.ndarray) -> float:
    p = loc.shape[0]
    chol = np.linalg.cholesky(scale)
    logdet = 2.0 * float(np.log(np.diag(chol)).sum())
    u = np.linalg.solve(chol, y - loc)
    quad = float(u @ u)
    return float(
        gammaln((df + p) / 2.0)
        - gammaln(df / 2.0)
        - 0.5 * p * math.log(df * math.pi)
        - 0.5 * logdet
        - 0.5 * (df + p) * math.log1p(quad / df)
    )


def niw_predictive(prior: GaussianNIW, y: np.ndarray) -> float:
    """Log predictive density of one observation under the NIW prior.

    This is a multivariate Student-t with nu - dim + 1 degrees of freedom;
    it requires lam > 0 (a vanishing mean-strength makes the predictive
    improper).
    """
    if prior.lam <= 0.0:
        raise ValueError("predictive density requires lam > 0")
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if y.shape[0] != prior.dim:
        raise ValueError(f"observation dimension {y.shape[0]} != prior dimension {prior.dim}")
    p = prior.dim
    df = prior.nu - p + 1.0
    scale = prior.psi * (prior.lam + 1.0) / (prior.lam * df)
    return _student_t_logpdf(y, df, prior.mu0, scale)


def niw_log_marginal(prior: GaussianNIW, data: np.ndarray) -> float:
    """Log marginal likelihood of a data block under the NIW prior."""
    if prior.lam <= 0.0:
        raise ValueError("marginal likelihood requires lam > 0")
    y = np.atleast_2d(np.asarray(data, dtype=float))
    if y.size == 0:
        return 0.0
    n, p = y.shape
    if p != prior.dim:
        raise ValueError(f"data dimension {p} does not match prior dimension {prior.dim}")
    post = niw_posterior(prior, y)
    sign, logdet_prior = np.linalg.slogdet(prior.psi)
    sign_n, logdet_post = np.linalg.slogdet(post.psi)
    if sign <= 0 or sign_n <= 0:
        raise ValueError("scale matrices must stay positive definite")
    return float(
        -0.5 * n * p * math.log(math.pi)
        + multigammaln(post.nu / 2.0, p)
        - multigammaln(prior.nu / 2.0, p)
        + 0.5 * prior.nu * logdet_prior
        - 0.5 * post.nu * logdet_post
        + 0.5 * p * (math.log(prior.lam) - math.log(post.lam))
    )


def _invwishart_rvs(nu: float, psi: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    # Bartlett construction: with psi = L L^T and A the Bartlett factor of a
    # Wishart(nu, I) draw, T = L solve(A)^T gives Sigma = T T^T ~ IW(nu, psi).
    p = psi.shape[0]
    if p == 2:
        # scalar fast path: same construction and draw order, no allocations
        l11 = math.sqrt(psi[0, 0])
        l21 = psi[1, 0] / l11
        l22 = math.sqrt(psi[1, 1] - l21 * l21)
        a11 = math.sqrt(rng.chisquare(nu))
        a22 = math.sqrt(rng.chisquare(nu - 1.0))
        a21 = rng.standard_normal()
        # rows of T = L @ inv(A)^T with A = [[a11, 0], [a21, a22]]
        t11 = l11 / a11
        t12 = -l11 * a21 / (a11 * a22)
        t21 = l21 / a11
        t22 = l21 * (-a21 / (a11 * a22)) + l22 / a22
        s11 = t11 * t11 + t12 * t12
        s12 = t11 * t21 + t12 * t22
        s22 = t21 * t21 + t22 * t22
        return np.array([[s11, s12], [s12, s22]])
    chol = np.linalg.cholesky(psi)
    bart = np.zeros((p, p))
    for i in range(p):
        bart[i, i] = math.sqrt(rng.chisquare(nu - i))
    if p > 1:
        idx = np.tril_indices(p, k=-1)
        bart[idx] = rng.standard_normal(len(idx[0]))
    inv_bart = np.linalg.inv(bart)
    t = chol @ inv_bart.T
    return t @ t.T


def _niw_rvs_params(
    mu0: np.ndarray, lam: float, nu: float, psi: np.ndarray, rng: np.random.Generator
) -> ClusterParams:
    cov = _invwishart_rvs(nu, psi, rng)
    p = mu0.shape[0]
    if p == 2:
        c = cov / lam
        l11 = math.sqrt(c[0, 0])
        l21 = c[1, 0] / l11
        l22 = math.sqrt(c[1, 1] - l21 * l21)
        g1, g2 = rng.standard_normal(2)
        mean = np.array([mu0[0] + l11 * g1, mu0[1] + l21 * g1 + l22 * g2])
    else:
        mean = mu0 + np.linalg.cholesky(cov / lam) @ rng.standard_normal(p)
    return ClusterParams(mean=mean, cov=cov)


def niw_rvs(prior: GaussianNIW, rng: np.random.Generator) -> ClusterParams:
    """Draw (mean, covariance) from the NIW distribution (needs lam > 0)."""
    if prior.lam <= 0.0:
        raise ValueError("sampling the mean requires lam > 0")
    return _niw_rvs_params(prior.mu0, prior.lam, prior.nu, prior.psi, rng)


def param_walk(theta: ClusterParams, cfg: KernelConfig, rng: np.random.Generator) -> ClusterParams:
    """Random-walk step on a cluster mean; covariance carried over untouched."""
    walk = cfg.param_walk_cov
    if walk.shape[0] != theta.mean.shape[0]:
        raise ValueError(
            f"walk covariance dimension {walk.shape[0]} != parameter dimension {theta.mean.shape[0]}"
        )
    if not walk.any():
        return ClusterParams(mean=theta.mean.copy(), cov=theta.cov)
    eigval, eigvec = np.linalg.eigh(walk)
    root = eigvec * np.sqrt(np.clip(eigval, 0.0, None))
    mean = theta.mean + root @ rng.standard_normal(walk.shape[0])
    return ClusterParams(mean=mean, cov=theta.cov)


# ------------------------------------------------------------ motion kernels


def ct_transition_matrix(omega: float, dt: float) -> np.ndarray:
    """Coordinated-turn transition matrix on [x, vx, y, vy].

    Uses the analytic omega -> 0 limit below 1e-8 so the zero-turn case is
    exactly the constant-velocity matrix.
    """
    wt = omega * dt
    if abs(omega) < 1e-8:
        s_over, c_over = dt, 0.0
        sin_wt, cos_wt = 0.0, 1.0
    else:
        sin_wt, cos_wt = math.sin(wt), math.cos(wt)
        s_over = sin_wt / omega
        c_over = (1.0 - cos_wt) / omega
    return np.array(
        [
            [1.0, s_over, 0.0, -c_over],
            [0.0, cos_wt, 0.0, -sin_wt],
            [0.0, c_over, 1.0, s_over],
            [0.0, sin_wt, 0.0, cos_wt],
        ]
    )


def kinematic_noise_matrix(dt: float) -> np.ndarray:
    """Maps a 2-vector of accelerations into [x, vx, y, vy] displacements."""
    half = 0.5 * dt * dt
    return np.array([[half, 0.0], [dt, 0.0], [0.0, half], [0.0, dt]])


def ct_transition(s: TargetState, cfg: KernelConfig, rng: np.random.Generator) -> TargetState:
    """One coordinated-turn step: rotate velocity by omega*dt, add process noise.

    Noise enters as white acceleration through the kinematic noise matrix
    (covariance sigma_w^2 B B^T) plus an independent turn-rate perturbation
    with standard deviation sigma_u.
    """
    if s.omega is None:
        raise ValueError("coordinated-turn transition needs a state with a turn rate")
    vec = np.array([s.x, s.vx, s.y, s.vy])
    mean = ct_transition_matrix(s.omega, cfg.dt) @ vec
    noise = cfg.sigma_w * (kinematic_noise_matrix(cfg.dt) @ rng.standard_normal(2))
    new_omega = s.omega + cfg.sigma_u * rng.standard_normal()
    out = mean + noise
    return TargetState(x=out[0], vx=out[1], y=out[2], vy=out[3], omega=new_omega)


def cv_transition(s: TargetState, cfg: KernelConfig, rng: np.random.Generator) -> TargetState:
    """One constant-velocity step with white-acceleration noise."""
    vec = np.array([s.x, s.vx, s.y, s.vy])
    mean = ct_transition_matrix(0.0, cfg.dt) @ vec
    noise = cfg.sigma_w * (kinematic_noise_matrix(cfg.dt) @ rng.standard_normal(2))
    out = mean + noise
    return TargetState(x=out[0], vx=out[1], y=out[2], vy=out[3], omega=s.omega)


# ------------------------------------------------------------- sensor model


def range_bearing_measure(s: TargetState) -> np.ndarray:
    """Noise-free (bearing, range) of a state seen from a sensor at the origin."""
    r = math.hypot(s.x, s.y)
    if r == 0.0:
        raise ValueError("bearing is undefined for a target at the sensor origin")
    return np.array([math.atan2(s.y, s.x), r])


def range_bearing_likelihood(
    z: np.ndarray, s: TargetState, sigma_r2: float, sigma_phi2: float
) -> float:
    """Log density of a (bearing, range) measurement given a target state.

    Independent Gaussian errors on each coordinate; the bearing residual is
    wrapped to (-pi, pi] before evaluation.
    """
    if sigma_r2 <= 0.0 or sigma_phi2 <= 0.0:
        raise ValueError("noise variances must be positive")
    z = np.asarray(z, dtype=float)
    if z.shape != (2,):
        raise ValueError(f"measurement must be a (bearing, range) pair, got shape {z.shape}")
    ideal = range_bearing_measure(s)
    dphi = math.remainder(z[0] - ideal[0], 2.0 * math.pi)
    dr = z[1] - ideal[1]
    return float(
        -0.5 * (LOG_2PI + math.log(sigma_phi2)) - 0.5 * dphi * dphi / sigma_phi2
        - 0.5 * (LOG_2PI + math.log(sigma_r2)) - 0.5 * dr * dr / sigma_r2
    )


def gaussian_logpdf(points: np.ndarray, mean: np.ndarray, cov: np.ndarray) -> np.ndarray:
    """Gaussian log density of one or many points (rows) under N(mean, cov)."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    try:
        chol = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as err:
        raise ValueError("covariance must be positive definite") from err
    logdet = 2.0 * float(np.log(np.diag(chol)).sum())
    u = np.linalg.solve(chol, (pts - mean).T)
    quad = np.einsum("ij,ij->j", u, u)
    out = -0.5 * (pts.shape[1] * LOG_2PI + logdet + quad)
    return out if np.asarray(points).ndim > 1 else float(out[0])
