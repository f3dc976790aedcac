"""Gibbs inference for the time-dependent mixture trackers.

Within a step, latent objects are clusters of measurements.  The sampler
alternates two moves:

  * a sweep that resamples every measurement's cluster assignment from the
    three-case prior mass times the measurement likelihood (log-sum-exp
    normalized); opening a fresh cluster weights by the base-measure
    predictive density and, on selection, draws parameters from the
    one-point posterior;
  * a refresh that redraws every cluster's parameters from its conjugate
    posterior given the measurements currently assigned to it.

Both trackers share one sweep implementation parameterized by the discount,
so the zero-discount Pitman-Yor sweep reproduces the Dirichlet-process
sweep exactly, draw for draw, under a shared generator.

Across steps, ``run_chain`` carries the last retained sample through the
survival/transition bookkeeping, fuses each surviving cluster's location
with a constant-velocity prediction of its kinematic state, and hands the
transitioned configuration to the next step's sampler as prior mass.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .ddp import ClusterState, TransitionedState, transition_step
from .models import (
    ClusterParams,
    GaussianNIW,
    KernelConfig,
    LOG_2PI,
    _niw_posterior_params,
    _niw_rvs_params,
    ct_transition_matrix,
    gaussian_logpdf,
    kinematic_noise_matrix,
    niw_posterior,
    niw_predictive,
    niw_rvs,
)
from .partitions import PYParams

__all__ = [
    "ChainConfig",
    "PosteriorSample",
    "StepSummary",
    "ChainResult",
    "TrackSet",
    "ddp_gibbs_sweep",
    "dpy_gibbs_sweep",
    "refresh_unique_params",
    "sample_alpha",
    "sample_step_posterior",
    "run_chain",
    "extract_tracks",
    "label_swap_rate",
]


@dataclass(frozen=True)
class ChainConfig:
    """Sweep schedule for one step's sampler.

    Sweeps 0..burn_in-1 are discarded; afterwards every ``thin``-th sweep is
    retained, so (n_sweeps - burn_in) // thin samples come out per step.
    """

    n_sweeps: int = 1500
    burn_in: int = 500
    thin: int = 2
    seed: Optional[int] = None

    def __post_init__(self) -> None:
        if not 0 <= self.burn_in < self.n_sweeps:
            raise ValueError("need 0 <= burn_in < n_sweeps")
        if self.thin < 1:
            raise ValueError("thin must be at least 1")

    @property
    def n_retained(self) -> int:
        return (self.n_sweeps - self.burn_in + self.thin - 1) // self.thin


@dataclass(frozen=True)
class PosteriorSample:
    """One retained clustering of a measurement frame."""

    assignments: np.ndarray
    uids: np.ndarray
    params: list[ClusterParams]
    sizes: np.ndarray
    origins: np.ndarray
    cardinality: int
    alpha: float

    def __post_init__(self) -> None:
        distinct = int(np.unique(self.assignments).size) if self.assignments.size else 0
        if distinct != self.cardinality or self.cardinality != len(self.params):
            raise ValueError("cardinality must equal the number of distinct clusters")


def _loglik_row(frame: np.ndarray, theta: ClusterParams) -> np.ndarray:
    """Log N(z; theta) for every frame row; fast closed form in dimension 2."""
    mean, cov = theta.mean, theta.cov
    if mean.shape[0] == 2:
        a, b, c = float(cov[0, 0]), float(cov[0, 1]), float(cov[1, 1])
        det = a * c - b * b
        if det <= 0.0 or a <= 0.0:
            raise ValueError("cluster covariance must be positive definite")
        dx = frame[:, 0] - mean[0]
        dy = frame[:, 1] - mean[1]
        quad = (c * dx * dx - 2.0 * b * dx * dy + a * dy * dy) / det
        return -0.5 * (2.0 * LOG_2PI + math.log(det) + quad)
    return np.atleast_1d(gaussian_logpdf(frame, mean, cov))


class _StepSampler:
    """Mutable within-step state: cluster lists plus likelihood caches."""

    def __init__(
        self,
        frame: np.ndarray,
        trans: TransitionedState,
        base: GaussianNIW,
        d: float,
        alpha: float,
        rng: np.random.Generator,
        uid_start: int,
    ):
        self.frame = frame
        self.trans = trans
        self.base = base
        self.d = d
        self.alpha = alpha
        self.rng = rng
        self.next_uid = uid_start
        m = frame.shape[0]
        self.assignments = np.full(m, -1, dtype=np.int64)
        self.params: list[ClusterParams] = []
        self.sizes: list[int] = []
        self.origins: list[int] = []
        self.uids: list[int] = []
        self.carried: list[float] = []  # surviving transitioned mass per cluster
        self.logliks: list[np.ndarray] = []
        self.selected: set[int] = set()
        self.alive_sources = [int(i) for i in np.flatnonzero(trans.alive)]
        self.source_logliks = {
            i: _loglik_row(frame, trans.params[i]) for i in self.alive_sources
        } if m else {}
        self.log_base_pred = (
            np.array([niw_predictive(base, z) for z in frame]) if m else np.empty(0)
        )

    # -- cluster bookkeeping -------------------------------------------------

    def _add_cluster(self, theta: ClusterParams, origin: int, uid: int) -> int:
        j = len(self.params)
        self.params.append(theta)
        self.sizes.append(1)
        self.origins.append(origin)
        self.uids.append(uid)
        if origin >= 0:
            self.selected.add(origin)
            self.carried.append(float(self.trans.sizes[origin]))
            self.logliks.append(self.source_logliks[origin])
        else:
            self.carried.append(0.0)
            self.logliks.append(_loglik_row(self.frame, theta))
        return j

    def _drop_cluster(self, j: int) -> None:
        origin = self.origins[j]
        if origin >= 0:
            self.selected.discard(origin)
        for lst in (self.params, self.sizes, self.origins, self.uids, self.carried, self.logliks):
            del lst[j]
        self.assignments[self.assignments > j] -= 1

    def _remove(self, i: int) -> None:
        j = int(self.assignments[i])
        if j < 0:
            return
        self.assignments[i] = -1
        self.sizes[j] -= 1
        if self.sizes[j] == 0:
            self._drop_cluster(j)

    # -- the three-case assignment move --------------------------------------

    def resample(self, i: int) -> None:
        self._remove(i)
        d, alpha = self.d, self.alpha
        n_cur = len(self.sizes)
        pool = [s for s in self.alive_sources if s not in self.selected]
        logw = []
        for j in range(n_cur):
            mass = self.carried[j] + float(self.sizes[j]) - d
            logw.append(math.log(mass) + float(self.logliks[j][i]))
        for s in pool:
            mass = float(self.trans.sizes[s]) - d
            logw.append(math.log(mass) + float(self.source_logliks[s][i]))
        new_mass = n_cur * d + alpha
        if new_mass <= 0.0:
            raise ValueError("nonpositive fresh-cluster mass; invalid parameters")
        logw.append(math.log(new_mass) + float(self.log_base_pred[i]))

        mx = max(logw)
        weights = [math.exp(v - mx) for v in logw]
        total = sum(weights)
        u = self.rng.random() * total
        acc = 0.0
        pick = len(weights) - 1
        for idx, w in enumerate(weights):
            acc += w
            if u <= acc:
                pick = idx
                break

        if pick < n_cur:
            j = pick
            self.sizes[j] += 1
        elif pick < n_cur + len(pool):
            s = pool[pick - n_cur]
            theta = self.trans.params[s]
            assert theta is not None
            j = self._add_cluster(theta, s, int(self.trans.uids[s]))
        else:
            theta = _niw_rvs_params(
                *_niw_posterior_params(self.base, self.frame[i : i + 1]), self.rng
            )
            j = self._add_cluster(theta, -1, self.next_uid)
            self.next_uid += 1
        self.assignments[i] = j

    def sweep(self) -> None:
        for i in range(self.frame.shape[0]):
            self.resample(i)

    def refresh(self) -> None:
        base = self.base
        for j in range(len(self.params)):
            members = self.frame[self.assignments == j]
            if members.size:
                self.params[j] = _niw_rvs_params(
                    *_niw_posterior_params(base, members), self.rng
                )
            else:
                self.params[j] = niw_rvs(base, self.rng)
            self.logliks[j] = _loglik_row(self.frame, self.params[j])

    # -- exports --------------------------------------------------------------

    def seed_from_state(self, state: ClusterState) -> None:
        """Load an existing clustering (assignments and params) into the workspace."""
        for j in range(state.n_clusters):
            theta = state.params[j]
            origin = int(state.origins[j])
            self.params.append(theta)
            self.sizes.append(int(state.sizes[j]))
            self.origins.append(origin)
            self.uids.append(int(state.uids[j]))
            if 0 <= origin < self.trans.alive.shape[0] and self.trans.alive[origin]:
                self.selected.add(origin)
                self.carried.append(float(self.trans.sizes[origin]))
            else:
                self.carried.append(0.0)
            self.logliks.append(_loglik_row(self.frame, theta))
        self.assignments = state.assignments.copy()
        self.next_uid = max(self.next_uid, int(state.uids.max()) + 1 if state.uids.size else 0)

    def to_cluster_state(self) -> ClusterState:
        return ClusterState(
            assignments=self.assignments.copy(),
            params=list(self.params),
            sizes=np.asarray(self.sizes, dtype=np.int64),
            origins=np.asarray(self.origins, dtype=np.int64),
            uids=np.asarray(self.uids, dtype=np.int64),
        )

    def to_sample(self) -> PosteriorSample:
        return PosteriorSample(
            assignments=self.assignments.copy(),
            uids=np.asarray(self.uids, dtype=np.int64),
            params=list(self.params),
            sizes=np.asarray(self.sizes, dtype=np.int64),
            origins=np.asarray(self.origins, dtype=np.int64),
            cardinality=len(self.params),
            alpha=self.alpha,
        )


def _one_sweep(
    state: ClusterState,
    frame: np.ndarray,
    trans: TransitionedState,
    d: float,
    alpha: float,
    base: GaussianNIW,
    rng: np.random.Generator,
) -> ClusterState:
    frame = np.atleast_2d(np.asarray(frame, dtype=float))
    ws = _StepSampler(frame, trans, base, d, alpha, rng, uid_start=0)
    ws.seed_from_state(state)
    ws.sweep()
    return ws.to_cluster_state()


def ddp_gibbs_sweep(
    state: ClusterState,
    frame: np.ndarray,
    trans: TransitionedState,
    alpha: float,
    base: GaussianNIW,
    rng: np.random.Generator,
) -> ClusterState:
    """One full assignment sweep under the Dirichlet-process three-case prior."""
    if alpha <= 0.0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    return _one_sweep(state, frame, trans, 0.0, alpha, base, rng)


def dpy_gibbs_sweep(
    state: ClusterState,
    frame: np.ndarray,
    trans: TransitionedState,
    p: PYParams,
    base: GaussianNIW,
    rng: np.random.Generator,
) -> ClusterState:
    """One full assignment sweep under the Pitman-Yor three-case prior.

    Shares the Dirichlet sweep's code path, so p.d == 0 reproduces
    ``ddp_gibbs_sweep`` exactly under a shared generator.
    """
    return _one_sweep(state, frame, trans, p.d, p.alpha, base, rng)


def refresh_unique_params(
    state: ClusterState,
    frame: np.ndarray,
    base: GaussianNIW,
    rng: np.random.Generator,
) -> ClusterState:
    """Redraw every cluster's parameters from its conjugate posterior.

    A cluster with no assigned measurements would draw from the base prior.
    """
    frame = np.atleast_2d(np.asarray(frame, dtype=float))
    params = []
    for j in range(state.n_clusters):
        members = frame[state.assignments == j]
        post = niw_posterior(base, members) if members.size else base
        params.append(niw_rvs(post, rng))
    return ClusterState(
        assignments=state.assignments.copy(),
        params=params,
        sizes=state.sizes.copy(),
        origins=state.origins.copy(),
        uids=state.uids.copy(),
        states=None if state.states is None else state.states.copy(),
    )


def sample_alpha(
    alpha: float,
    n_clusters: int,
    n_items: int,
    a: float,
    b: float,
    rng: np.random.Generator,
) -> float:
    """Auxiliary-variable concentration update under a Gamma(a, b) prior.

    Draws the auxiliary Beta variable, then mixes between the two Gamma
    branches of the conditional.  With no items the prior is returned as a
    fresh draw.
    """
    if a <= 0.0 or b <= 0.0:
        raise ValueError("gamma hyperparameters must be positive")
    if n_items <= 0:
        return float(rng.gamma(a, 1.0 / b))
    eta = float(rng.beta(alpha + 1.0, n_items))
    rate = b - math.log(eta)
    odds = (a + n_clusters - 1.0) / (n_items * rate)
    shape = a + n_clusters if rng.random() < odds / (1.0 + odds) else a + n_clusters - 1.0
    return float(rng.gamma(shape, 1.0 / rate))


def sample_step_posterior(
    frame: np.ndarray,
    trans: TransitionedState,
    base: GaussianNIW,
    cfg: ChainConfig,
    rng: np.random.Generator,
    *,
    d: float = 0.0,
    alpha: float = 1.0,
    alpha_prior: Optional[tuple[float, float]] = None,
    init: str = "sequential",
    uid_start: int = 0,
) -> tuple[list[PosteriorSample], float, int]:
    """Run one step's sampler on a measurement frame.

    init picks the starting configuration: "sequential" places measurements
    one by one from the prior-times-likelihood rule, "singletons" opens one
    cluster per measurement, "together" starts from a single shared cluster.
    Returns (retained samples, final concentration, next free track label).
    """
    frame = np.atleast_2d(np.asarray(frame, dtype=float)) if np.asarray(frame).size else np.empty((0, base.dim))
    ws = _StepSampler(frame, trans, base, d, alpha, rng, uid_start)
    m = frame.shape[0]

    if m:
        if init == "sequential":
            for i in range(m):
                ws.resample(i)
        elif init == "singletons":
            for i in range(m):
                theta = niw_rvs(niw_posterior(base, frame[i : i + 1]), rng)
                j = ws._add_cluster(theta, -1, ws.next_uid)
                ws.next_uid += 1
                ws.assignments[i] = j
        elif init == "together":
            theta = niw_rvs(niw_posterior(base, frame), rng)
            j = ws._add_cluster(theta, -1, ws.next_uid)
            ws.next_uid += 1
            ws.assignments[:] = j
            ws.sizes[j] = m
        else:
            raise ValueError(f"unknown init {init!r}")

    samples: list[PosteriorSample] = []
    for sweep_idx in range(cfg.n_sweeps):
        if m:
            ws.sweep()
            ws.refresh()
            if alpha_prior is not None:
                ws.alpha = sample_alpha(
                    ws.alpha, len(ws.params), m, alpha_prior[0], alpha_prior[1], rng
                )
        if sweep_idx >= cfg.burn_in and (sweep_idx - cfg.burn_in) % cfg.thin == 0:
            samples.append(ws.to_sample())
    return samples, ws.alpha, ws.next_uid


# --------------------------------------------------------------- multi-step


@dataclass(frozen=True)
class StepSummary:
    """Per-step tracker output: one row per reported cluster."""

    uids: np.ndarray
    positions: np.ndarray
    velocities: np.ndarray
    sizes: np.ndarray


@dataclass
class ChainResult:
    step_samples: list[list[PosteriorSample]]
    summaries: list[StepSummary]
    alphas: list[float]


@dataclass(frozen=True)
class TrackSet:
    """Extracted tracks: modal cardinalities plus per-step labeled positions."""

    cardinality: np.ndarray
    uids: list[np.ndarray]
    positions: list[np.ndarray]

    @property
    def tracks(self) -> dict[int, list[tuple[int, np.ndarray]]]:
        out: dict[int, list[tuple[int, np.ndarray]]] = {}
        for k, (uids, pos) in enumerate(zip(self.uids, self.positions)):
            for uid, row in zip(uids, pos):
                out.setdefault(int(uid), []).append((k, row))
        return out


def _member_location_stats(
    samples: Sequence[PosteriorSample], m: int, dim: int
) -> tuple[np.ndarray, np.ndarray]:
    """Per-measurement posterior location summary, invariant to label churn.

    For each measurement, averages over retained samples the mean (and
    covariance) of whichever cluster contains it in that sample.
    """
    mean_acc = np.zeros((m, dim))
    cov_acc = np.zeros((m, dim, dim))
    for s in samples:
        means = np.stack([th.mean for th in s.params])
        covs = np.stack([th.cov for th in s.params])
        mean_acc += means[s.assignments]
        cov_acc += covs[s.assignments]
    return mean_acc / len(samples), cov_acc / len(samples)


def run_chain(
    frames: Sequence[np.ndarray],
    *,
    base: GaussianNIW,
    cfg: ChainConfig,
    kernels: KernelConfig,
    p_survive: float = 0.95,
    d: float = 0.0,
    alpha: float = 1.0,
    alpha_prior: Optional[tuple[float, float]] = None,
    v0_var: float = 100.0,
    rng: Optional[np.random.Generator] = None,
) -> ChainResult:
    """Track through a sequence of measurement frames.

    Each step runs the within-step sampler seeded with the transitioned
    previous configuration (last retained sample).  For planar measurements
    every persistent label carries a constant-velocity Kalman filter
    (process noise from ``kernels.sigma_w``, observation noise from the
    cluster's posterior spread) whose updated state seeds the next
    transition; a label first seen this step starts at the cluster location
    with zero velocity and ``v0_var`` velocity variance.

    An explicit ``rng`` takes precedence over ``cfg.seed``, letting a
    caller drive several chains from spawned seed sequences.
    """
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    dim = base.dim
    planar = dim == 2
    if planar:
        F = ct_transition_matrix(0.0, kernels.dt)
        B = kinematic_noise_matrix(kernels.dt)
        Q = (kernels.sigma_w**2) * (B @ B.T)
        H = np.array([[1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0]])
        eye4 = np.eye(4)
    prev = ClusterState.empty(state_dim=4)
    kin: dict[int, tuple[np.ndarray, np.ndarray]] = {}  # uid -> (state, cov)
    next_uid = 0
    result = ChainResult(step_samples=[], summaries=[], alphas=[])

    for frame in frames:
        trans = transition_step(prev, p_survive, kernels, rng, motion="cv", recenter_on_states=True)
        samples, alpha, next_uid = sample_step_posterior(
            np.asarray(frame, dtype=float),
            trans,
            base,
            cfg,
            rng,
            d=d,
            alpha=alpha,
            alpha_prior=alpha_prior,
            uid_start=next_uid,
        )
        last = samples[-1]
        m = last.assignments.shape[0]
        if m:
            loc_bar, cov_bar = _member_location_stats(samples, m, dim)

        uids = last.uids
        n_clusters = uids.shape[0]
        positions = np.zeros((n_clusters, dim))
        velocities = np.zeros((n_clusters, dim))
        new_kin: dict[int, tuple[np.ndarray, np.ndarray]] = {}
        member_states = np.zeros((m, 4))
        # Carry smoothed parameters, not the final draw: a single covariance
        # draw from a one-member cluster varies enough to occasionally make
        # next step's revival weight lose to a fresh cluster.
        fwd_params = list(last.params)
        for j in range(n_clusters):
            uid = int(uids[j])
            rows = last.assignments == j
            theta_mean = loc_bar[rows].mean(axis=0)
            cluster_cov = cov_bar[rows].mean(axis=0)
            obs_cov = cluster_cov / max(int(last.sizes[j]), 1)
            fwd_params[j] = ClusterParams(mean=theta_mean, cov=cluster_cov)
            if not planar:
                positions[j] = theta_mean
                continue
            if uid in kin:
                s0, p0 = kin[uid]
                s_pred = F @ s0
                p_pred = F @ p0 @ F.T + Q
                innov = theta_mean - H @ s_pred
                gain = p_pred @ H.T @ np.linalg.inv(H @ p_pred @ H.T + obs_cov)
                s = s_pred + gain @ innov
                p = (eye4 - gain @ H) @ p_pred
            else:
                s = np.array([theta_mean[0], 0.0, theta_mean[1], 0.0])
                p = np.diag([obs_cov[0, 0], v0_var, obs_cov[1, 1], v0_var])
            positions[j] = s[[0, 2]]
            velocities[j] = s[[1, 3]]
            new_kin[uid] = (s, p)
            member_states[rows] = s

        kin = new_kin
        summary = StepSummary(
            uids=uids.copy(), positions=positions, velocities=velocities, sizes=last.sizes.copy()
        )
        result.step_samples.append(samples)
        result.summaries.append(summary)
        result.alphas.append(alpha)

        prev = ClusterState(
            assignments=last.assignments.copy(),
            params=fwd_params if m else list(last.params),
            sizes=last.sizes.copy(),
            origins=last.origins.copy(),
            uids=uids.copy(),
            states=member_states if planar else None,
        )
    return result


def extract_tracks(result: ChainResult) -> TrackSet:
    """Modal cardinality per step plus labeled position reports.

    The reported clusters at each step are those of the sample used to seed
    the next transition; their positions are the fused location estimates,
    which average cluster means across that step's retained samples.
    """
    cards = []
    for samples in result.step_samples:
        counts = np.bincount([s.cardinality for s in samples])
        cards.append(int(counts.argmax()))
    return TrackSet(
        cardinality=np.asarray(cards, dtype=np.int64),
        uids=[s.uids for s in result.summaries],
        positions=[s.positions for s in result.summaries],
    )


def label_swap_rate(tracks: TrackSet) -> float:
    """Diagnostic: how often neighbouring-step position matches change labels.

    For each consecutive step pair, positions are matched by minimum total
    distance; a swap is a matched pair whose labels differ even though both
    labels are present at both steps.  Returns swaps / matched pairs (0.0
    when nothing can be matched).
    """
    from scipy.optimize import linear_sum_assignment

    swaps = 0
    matched = 0
    for k in range(len(tracks.uids) - 1):
        u0, p0 = tracks.uids[k], tracks.positions[k]
        u1, p1 = tracks.uids[k + 1], tracks.positions[k + 1]
        if u0.size == 0 or u1.size == 0:
            continue
        cost = np.linalg.norm(p0[:, None, :] - p1[None, :, :], axis=2)
        rows, cols = linear_sum_assignment(cost)
        both = set(int(u) for u in u0) & set(int(u) for u in u1)
        for r, c in zip(rows, cols):
            matched += 1
            a, b = int(u0[r]), int(u1[c])
            if a != b and a in both and b in both:
                swaps += 1
    return swaps / matched if matched else 0.0
