"""Time-dependent Dirichlet-process mixture prior over object clusters.

Between steps, every object survives an independent Bernoulli trial and the
surviving cluster structure is carried forward: transitioned cluster sizes
act as prior mass for re-selecting a cluster, surviving-but-not-yet-selected
clusters can be revived, and fresh clusters are opened with mass alpha.
Placement of the next object therefore follows a three-case rule:

  case 1  join a cluster already selected this step
            mass = (transitioned size, if it survived) + (current size)
  case 2  revive a surviving cluster not yet selected this step
            mass = transitioned size
  case 3  open a fresh cluster, with parameters from the base measure
            mass = alpha

Probabilities are the masses divided by their actual total, so the vector
sums to one by construction.  With no surviving clusters the rule is the
usual Chinese-restaurant process.  The discounted (Pitman-Yor) variant in
``dpy`` shares the same kernel with a nonzero discount.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .models import (
    ClusterParams,
    GaussianNIW,
    KernelConfig,
    ct_transition_matrix,
    kinematic_noise_matrix,
    niw_rvs,
    param_walk,
)

__all__ = [
    "ClusterState",
    "TransitionedState",
    "CaseProbabilities",
    "transition_step",
    "ddp_case_probs",
    "ddp_draw_prior",
]


@dataclass
class ClusterState:
    """Clustered object configuration at one step.

    assignments  per-object cluster index (0..D-1)
    params       one ClusterParams per cluster
    sizes        per-cluster member count (must recount from assignments)
    origins      per-cluster index into the previous step's cluster list,
                 or -1 for clusters first selected this step
    uids         per-cluster persistent track label
    states       optional per-object state vectors, one row per object
    """

    assignments: np.ndarray
    params: list[ClusterParams]
    sizes: np.ndarray
    origins: np.ndarray
    uids: np.ndarray
    states: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        self.assignments = np.asarray(self.assignments, dtype=np.int64)
        self.sizes = np.asarray(self.sizes, dtype=np.int64)
        self.origins = np.asarray(self.origins, dtype=np.int64)
        self.uids = np.asarray(self.uids, dtype=np.int64)
        d = len(self.params)
        if not (self.sizes.shape == self.origins.shape == self.uids.shape == (d,)):
            raise ValueError("params, sizes, origins and uids must have equal length")
        recount = np.bincount(self.assignments, minlength=d) if self.assignments.size else np.zeros(d, dtype=np.int64)
        if recount.shape[0] > d or not np.array_equal(recount, self.sizes[: recount.shape[0]]) or np.any(self.sizes[recount.shape[0]:]):
            raise ValueError("sizes must recount exactly from assignments")
        if np.any(self.sizes < 1):
            raise ValueError("every cluster must have at least one member")
        if self.states is not None:
            self.states = np.asarray(self.states, dtype=float)
            if self.states.shape[0] != self.assignments.shape[0]:
                raise ValueError("states must have one row per object")

    @property
    def n_objects(self) -> int:
        return int(self.assignments.shape[0])

    @property
    def n_clusters(self) -> int:
        return len(self.params)

    @staticmethod
    def empty(state_dim: Optional[int] = None) -> "ClusterState":
        states = None if state_dim is None else np.empty((0, state_dim))
        return ClusterState(
            assignments=np.empty(0, dtype=np.int64),
            params=[],
            sizes=np.empty(0, dtype=np.int64),
            origins=np.empty(0, dtype=np.int64),
            uids=np.empty(0, dtype=np.int64),
            states=states,
        )


@dataclass
class TransitionedState:
    """Survival bookkeeping carried from step k-1 into step k.

    Cluster slots keep the previous step's indices: a cluster whose members
    all died keeps its slot with size 0, alive False and params None.

    survivors  per-object Bernoulli survival outcome
    sizes      per-cluster surviving member count
    alive      per-cluster flag, true iff the surviving count is positive
    params     walked cluster parameters (None for dead clusters)
    states     transitioned per-object state rows (NaN rows for the dead),
               or None when the previous state carried no object states
    uids       per-cluster persistent track labels, carried through
    """

    survivors: np.ndarray
    sizes: np.ndarray
    alive: np.ndarray
    params: list[Optional[ClusterParams]]
    uids: np.ndarray
    states: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        self.survivors = np.asarray(self.survivors, dtype=bool)
        self.sizes = np.asarray(self.sizes, dtype=np.int64)
        self.alive = np.asarray(self.alive, dtype=bool)
        self.uids = np.asarray(self.uids, dtype=np.int64)
        if not np.array_equal(self.alive, self.sizes > 0):
            raise ValueError("alive flags must mark exactly the clusters with survivors")
        for j, theta in enumerate(self.params):
            if (theta is None) == bool(self.alive[j]):
                raise ValueError("alive clusters need params, dead clusters need None")

    @property
    def n_alive(self) -> int:
        return int(self.alive.sum())

    @staticmethod
    def empty(state_dim: Optional[int] = None) -> "TransitionedState":
        states = None if state_dim is None else np.empty((0, state_dim))
        return TransitionedState(
            survivors=np.empty(0, dtype=bool),
            sizes=np.empty(0, dtype=np.int64),
            alive=np.empty(0, dtype=bool),
            params=[],
            uids=np.empty(0, dtype=np.int64),
            states=states,
        )


MotionSpec = Union[str, Callable[[np.ndarray, KernelConfig, np.random.Generator], np.ndarray]]


def _move_row(row: np.ndarray, motion: MotionSpec, cfg: KernelConfig, rng: np.random.Generator) -> np.ndarray:
    if callable(motion):
        return np.asarray(motion(row, cfg, rng), dtype=float)
    if motion == "none":
        return row.copy()
    if motion in ("cv", "ct"):
        omega = float(row[4]) if (motion == "ct" and row.shape[0] >= 5) else 0.0
        mean = ct_transition_matrix(omega, cfg.dt) @ row[:4]
        out = mean + cfg.sigma_w * (kinematic_noise_matrix(cfg.dt) @ rng.standard_normal(2))
        if row.shape[0] >= 5:
            return np.concatenate((out, [omega + cfg.sigma_u * rng.standard_normal()]))
        return out
    raise ValueError(f"unknown motion kernel {motion!r}")


def transition_step(
    prev: ClusterState,
    p_survive: float,
    cfg: KernelConfig,
    rng: np.random.Generator,
    motion: MotionSpec = "cv",
    recenter_on_states: bool = False,
) -> TransitionedState:
    """Thin objects by survival, move survivors, walk surviving cluster params.

    Each object survives independently with probability ``p_survive``.
    Survivors' state rows pass through the chosen motion kernel ("cv", "ct",
    "none", or a callable).  Each surviving cluster's parameters take one
    random-walk step on the mean; with ``recenter_on_states`` the walked mean
    is based at the transitioned position of the cluster's first surviving
    member (position block [x, y] for 4/5-dim kinematic rows, the full row
    otherwise), tying cluster locations to the motion prediction.
    """
    if not 0.0 <= p_survive <= 1.0:
        raise ValueError(f"p_survive must lie in [0, 1], got {p_survive}")
    n = prev.n_objects
    survivors = rng.random(n) < p_survive if n else np.empty(0, dtype=bool)
    d = prev.n_clusters
    sizes = (
        np.bincount(prev.assignments[survivors], minlength=d)
        if n
        else np.zeros(d, dtype=np.int64)
    )
    alive = sizes > 0

    states: Optional[np.ndarray] = None
    if prev.states is not None:
        states = np.full_like(prev.states, np.nan)
        for i in range(n):
            if survivors[i]:
                states[i] = _move_row(prev.states[i], motion, cfg, rng)

    params: list[Optional[ClusterParams]] = []
    for j in range(d):
        if not alive[j]:
            params.append(None)
            continue
        theta = prev.params[j]
        if recenter_on_states and states is not None:
            rep = int(np.nonzero(survivors & (prev.assignments == j))[0][0])
            row = states[rep]
            dim = theta.mean.shape[0]
            pos = row[[0, 2]] if row.shape[0] in (4, 5) else row[:dim]
            theta = ClusterParams(mean=pos, cov=theta.cov)
        params.append(param_walk(theta, cfg, rng))

    return TransitionedState(
        survivors=survivors,
        sizes=sizes,
        alive=alive,
        params=params,
        uids=prev.uids.copy(),
        states=states,
    )


@dataclass(frozen=True)
class CaseProbabilities:
    """Assignment probabilities for the next object, with option layout.

    ``probs`` concatenates: one entry per already-selected cluster (case 1,
    in current-cluster order), one per surviving-unselected cluster (case 2,
    in the order listed by ``case2_sources``), and a final fresh-cluster
    entry (case 3).
    """

    probs: np.ndarray
    n_current: int
    case2_sources: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))

    def __post_init__(self) -> None:
        if abs(float(self.probs.sum()) - 1.0) > 1e-12:
            raise ValueError("case probabilities must sum to 1")


def _case_masses(
    trans: TransitionedState,
    current_sizes: np.ndarray,
    current_origins: np.ndarray,
    d: float,
    alpha: float,
) -> tuple[np.ndarray, int, np.ndarray]:
    """Unnormalized three-case masses shared by the d = 0 and d > 0 priors."""
    n_current = len(current_sizes)
    selected = set(int(o) for o in current_origins if o >= 0)
    masses = np.empty(n_current + (trans.n_alive - len(selected)) + 1)
    for j in range(n_current):
        origin = int(current_origins[j])
        carried = float(trans.sizes[origin]) if origin >= 0 and trans.alive[origin] else 0.0
        masses[j] = carried + float(current_sizes[j]) - d
    case2_sources = np.array(
        [i for i in range(trans.sizes.shape[0]) if trans.alive[i] and i not in selected],
        dtype=np.int64,
    )
    for k, i in enumerate(case2_sources):
        masses[n_current + k] = float(trans.sizes[i]) - d
    masses[-1] = n_current * d + alpha
    if np.any(masses <= 0.0):
        raise ValueError("nonpositive case mass; parameters are outside the valid range")
    return masses, n_current, case2_sources


def ddp_case_probs(
    trans: TransitionedState, current: ClusterState, alpha: float
) -> CaseProbabilities:
    """Three-case assignment probabilities under the Dirichlet-process prior.

    Case 1 mass for a selected cluster is its current size plus its
    transitioned size (when its previous incarnation survived); case 2 mass
    for a surviving unselected cluster is its transitioned size; case 3 mass
    is alpha.  The normalizer is the actual total of the enumerated masses.
    """
    if alpha <= 0.0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    masses, n_current, case2 = _case_masses(trans, current.sizes, current.origins, 0.0, alpha)
    return CaseProbabilities(probs=masses / masses.sum(), n_current=n_current, case2_sources=case2)


def _draw_prior(
    trans: TransitionedState,
    n_objects: int,
    d: float,
    alpha: float,
    base: GaussianNIW,
    rng: np.random.Generator,
) -> ClusterState:
    if n_objects < 0:
        raise ValueError("n_objects must be nonnegative")
    dim = base.dim
    assignments = np.empty(n_objects, dtype=np.int64)
    states = np.empty((n_objects, dim))
    params: list[ClusterParams] = []
    sizes: list[int] = []
    origins: list[int] = []
    uids: list[int] = []
    next_uid = int(trans.uids.max()) + 1 if trans.uids.size else 0

    for i in range(n_objects):
        masses, n_current, case2 = _case_masses(
            trans, np.asarray(sizes), np.asarray(origins), d, alpha
        )
        cum = np.cumsum(masses)
        pick = int(np.searchsorted(cum, rng.random() * cum[-1], side="right"))
        pick = min(pick, masses.shape[0] - 1)
        if pick < n_current:  # case 1: join a selected cluster
            j = pick
            sizes[j] += 1
        elif pick < masses.shape[0] - 1:  # case 2: revive a surviving cluster
            src = int(case2[pick - n_current])
            j = len(params)
            theta = trans.params[src]
            assert theta is not None
            params.append(theta)
            sizes.append(1)
            origins.append(src)
            uids.append(int(trans.uids[src]))
        else:  # case 3: fresh cluster from the base measure
            j = len(params)
            params.append(niw_rvs(base, rng))
            sizes.append(1)
            origins.append(-1)
            uids.append(next_uid)
            next_uid += 1
        assignments[i] = j
        theta = params[j]
        states[i] = theta.mean + np.linalg.cholesky(theta.cov) @ rng.standard_normal(dim)

    return ClusterState(
        assignments=assignments,
        params=params,
        sizes=np.asarray(sizes, dtype=np.int64),
        origins=np.asarray(origins, dtype=np.int64),
        uids=np.asarray(uids, dtype=np.int64),
        states=states,
    )


def ddp_draw_prior(
    trans: TransitionedState,
    n_objects: int,
    alpha: float,
    base: GaussianNIW,
    rng: np.random.Generator,
) -> ClusterState:
    """Place ``n_objects`` sequentially by the three-case rule, drawing states.

    Objects joining a cluster draw their state from that cluster's Gaussian;
    fresh clusters first draw parameters from the base measure.  With an
    empty transitioned state this reduces to Chinese-restaurant sampling.
    """
    if alpha <= 0.0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    return _draw_prior(trans, n_objects, 0.0, alpha, base, rng)
