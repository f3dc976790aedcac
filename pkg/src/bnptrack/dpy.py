"""Time-dependent Pitman-Yor mixture prior over object clusters.

Same survival-and-revival structure as the Dirichlet-process version in
``ddp``, but with a discount d that shaves mass off every occupied cluster
and adds it to the fresh-cluster option:

  case 1  join a selected cluster:   (surviving transitioned size, if any)
                                       + current size - d
  case 2  revive a surviving cluster: transitioned size - d
  case 3  open a fresh cluster:       (number of selected clusters) * d + alpha

At d = 0 every mass equals its Dirichlet-process counterpart exactly, which
the two modules guarantee by sharing one kernel.  The heavier-than-log
cluster growth of the discounted process is what lets the tracker absorb
power-law numbers of objects.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .ddp import CaseProbabilities, ClusterState, TransitionedState, _case_masses, _draw_prior
from .models import ClusterParams, GaussianNIW
from .partitions import PYParams

__all__ = [
    "PYClusterState",
    "PosteriorMeasure",
    "dpy_case_probs",
    "dpy_draw_prior",
    "py_posterior_measure",
]


@dataclass
class PYClusterState(ClusterState):
    """ClusterState plus the Pitman-Yor parameters that produced it."""

    p: Optional[PYParams] = None

    def __post_init__(self) -> None:
        super().__post_init__()
        if self.p is None:
            raise ValueError("PYClusterState requires Pitman-Yor parameters")


@dataclass(frozen=True)
class PosteriorMeasure:
    """Stick-breaking summary of a Pitman-Yor posterior random measure.

    Point masses ``atom_weights[i]`` sit at the occupied cluster parameters
    ``atoms[i]``; the leftover ``residual_mass`` follows a fresh Pitman-Yor
    process with parameters ``residual_params`` around the base measure.
    """

    atom_weights: np.ndarray
    atoms: list[ClusterParams]
    residual_mass: float
    residual_params: PYParams

    def __post_init__(self) -> None:
        w = np.asarray(self.atom_weights, dtype=float)
        if np.any(w < 0.0) or not 0.0 <= self.residual_mass <= 1.0:
            raise ValueError("measure weights must be nonnegative")
        if abs(float(w.sum()) + self.residual_mass - 1.0) > 1e-9:
            raise ValueError("atom weights plus residual must total 1")


def dpy_case_probs(
    trans: TransitionedState, current: ClusterState, p: PYParams
) -> CaseProbabilities:
    """Three-case assignment probabilities under the Pitman-Yor prior.

    Every occupied option is discounted by d; the fresh-cluster mass grows
    with the number of distinct clusters already selected this step.  The
    normalizer is the actual total of the enumerated masses, and at d = 0
    the probabilities equal ``ddp_case_probs`` exactly.
    """
    masses, n_current, case2 = _case_masses(trans, current.sizes, current.origins, p.d, p.alpha)
    return CaseProbabilities(probs=masses / masses.sum(), n_current=n_current, case2_sources=case2)


def dpy_draw_prior(
    trans: TransitionedState,
    n_objects: int,
    p: PYParams,
    base: GaussianNIW,
    rng: np.random.Generator,
) -> PYClusterState:
    """Sequentially place ``n_objects`` under the discounted three-case rule.

    With an empty transitioned state the partition law is the Pitman-Yor
    Chinese restaurant; at d = 0 the draw matches ``ddp_draw_prior``
    bit for bit under a shared generator.
    """
    state = _draw_prior(trans, n_objects, p.d, p.alpha, base, rng)
    return PYClusterState(
        assignments=state.assignments,
        params=state.params,
        sizes=state.sizes,
        origins=state.origins,
        uids=state.uids,
        states=state.states,
        p=p,
    )


def py_posterior_measure(state: PYClusterState, rng: np.random.Generator) -> PosteriorMeasure:
    """Draw the posterior random measure given a clustered configuration.

    Splits unit mass into a Beta-distributed occupied share, spread over the
    occupied clusters by a discounted Dirichlet draw, and a residual share
    that continues as a fresh Pitman-Yor process with concentration grown by
    D * d.  Requires a strictly positive discount and at least one cluster.
    """
    p = state.p
    assert p is not None
    if p.d == 0.0:
        raise ValueError("the posterior-measure split requires a positive discount")
    n, d_clusters = state.n_objects, state.n_clusters
    if d_clusters == 0:
        raise ValueError("need at least one occupied cluster")
    occupied_share = float(rng.beta(n - d_clusters * p.d, p.alpha + d_clusters * p.d))
    pi = rng.dirichlet(state.sizes.astype(float) - p.d)
    return PosteriorMeasure(
        atom_weights=occupied_share * pi,
        atoms=list(state.params),
        residual_mass=1.0 - occupied_share,
        residual_params=PYParams(d=p.d, alpha=p.alpha + d_clusters * p.d),
    )
