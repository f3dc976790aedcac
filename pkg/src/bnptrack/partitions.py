"""Exchangeable random-partition primitives.

Stick-breaking weight construction, sequential (Chinese-restaurant style)
predictive rules, exchangeable partition probability functions (EPPFs) and
a small partition enumerator used as a test oracle.  All probabilities are
computed in log space with log-gamma so that cluster sizes in the hundreds
do not overflow; the ``eppf_*`` wrappers exponentiate at the end.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterator, Sequence

import numpy as np
from scipy.special import gammaln

__all__ = [
    "PYParams",
    "StickBreakingWeights",
    "stick_break_dp",
    "stick_break_py",
    "crp_predictive_dp",
    "crp_predictive_py",
    "log_eppf_dp",
    "eppf_dp",
    "log_eppf_py",
    "eppf_py",
    "partition_consistency_residual",
    "enumerate_partitions",
    "partition_sizes",
]

MAX_ENUMERATION_N = 12


@dataclass(frozen=True)
class PYParams:
    """Pitman-Yor parameter pair: discount ``d`` and concentration ``alpha``.

    Requires 0 <= d < 1 and alpha > -d; when d == 0 the process is a
    Dirichlet process and alpha must be strictly positive.
    """

    d: float
    alpha: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.d < 1.0:
            raise ValueError(f"discount must lie in [0, 1), got {self.d}")
        if not self.alpha > -self.d:
            raise ValueError(
                f"concentration must exceed -discount, got alpha={self.alpha} d={self.d}"
            )
        if self.d == 0.0 and self.alpha <= 0.0:
            raise ValueError("alpha must be positive when the discount is zero")


@dataclass(frozen=True)
class StickBreakingWeights:
    """Truncated stick-breaking weights plus the unbroken residual mass."""

    weights: np.ndarray
    residual: float

    def __post_init__(self) -> None:
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1:
            raise ValueError("weights must be a 1-d array")
        if np.any(w < 0.0) or self.residual < -1e-12:
            raise ValueError("weights and residual must be nonnegative")
        total = float(w.sum()) + self.residual
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"weights + residual must total 1, got {total}")


def _weights_from_fractions(v: np.ndarray) -> StickBreakingWeights:
    # w_j = v_j * prod_{i<j}(1 - v_i); residual = prod(1 - v_i)
    survive = np.cumprod(1.0 - v)
    prefix = np.concatenate(([1.0], survive[:-1]))
    weights = v * prefix
    residual = float(survive[-1]) if v.size else 1.0
    return StickBreakingWeights(weights=weights, residual=residual)


def stick_break_dp(alpha: float, k: int, rng: np.random.Generator) -> StickBreakingWeights:
    """Draw k stick-breaking weights of a Dirichlet process with concentration alpha."""
    if alpha <= 0.0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    if k < 0:
        raise ValueError("k must be nonnegative")
    v = np.asarray(rng.beta(1.0, alpha, size=k), dtype=float)
    return _weights_from_fractions(v)


def stick_break_py(p: PYParams, k: int, rng: np.random.Generator) -> StickBreakingWeights:
    """Draw k stick-breaking weights of a Pitman-Yor process.

    The j-th stick fraction (j = 1..k) is Beta(1 - d, alpha + j*d), so the
    d = 0 case reduces to the Dirichlet-process construction.
    """
    if k < 0:
        raise ValueError("k must be nonnegative")
    j = np.arange(1, k + 1, dtype=float)
    v = np.asarray(rng.beta(1.0 - p.d, p.alpha + j * p.d), dtype=float)
    return _weights_from_fractions(v)


def _check_sizes(sizes: Sequence[int]) -> np.ndarray:
    arr = np.asarray(sizes, dtype=float)
    if arr.ndim != 1:
        raise ValueError("cluster sizes must be a flat sequence")
    if arr.size and (np.any(arr < 1) or np.any(arr != np.floor(arr))):
        raise ValueError(f"cluster sizes must be positive integers, got {list(sizes)}")
    return arr


def crp_predictive_dp(sizes: Sequence[int], alpha: float) -> np.ndarray:
    """Predictive assignment probabilities for the next item under a DP.

    Returns a vector of length len(sizes) + 1: one entry per existing
    cluster (proportional to its size) and a final new-cluster entry
    (proportional to alpha).
    """
    if alpha <= 0.0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    arr = _check_sizes(sizes)
    masses = np.concatenate((arr, [alpha]))
    return masses / masses.sum()


def crp_predictive_py(sizes: Sequence[int], p: PYParams) -> np.ndarray:
    """Predictive assignment probabilities for the next item under a Pitman-Yor process.

    Existing cluster j gets mass (size_j - d); a new cluster gets
    (alpha + D*d) where D is the current number of clusters.
    """
    arr = _check_sizes(sizes)
    masses = np.concatenate((arr - p.d, [p.alpha + arr.size * p.d]))
    return masses / masses.sum()


def _log_rising(x: float, m: float) -> float:
    # log of x(x+1)...(x+m-1) for x > 0, m >= 0
    return float(gammaln(x + m) - gammaln(x))


def log_eppf_dp(sizes: Sequence[int], alpha: float) -> float:
    """Log EPPF of a Dirichlet process partition with the given block sizes."""
    if alpha <= 0.0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    arr = _check_sizes(sizes)
    n = float(arr.sum())
    d_blocks = arr.size
    if d_blocks == 0:
        return 0.0
    return (
        d_blocks * math.log(alpha)
        + float(gammaln(arr).sum())  # sum of log (V_j - 1)!
        - _log_rising(alpha, n)
    )


def eppf_dp(sizes: Sequence[int], alpha: float) -> float:
    return math.exp(log_eppf_dp(sizes, alpha))


def log_eppf_py(sizes: Sequence[int], p: PYParams, variant: str = "standard") -> float:
    """Log EPPF of a Pitman-Yor partition with the given block sizes.

    variant="standard" is the normalized two-parameter EPPF,

        prod_{j=1}^{D-1}(alpha + j d) / (alpha + 1)^{[n-1]}
            * prod_i (1 - d)^{[V_i - 1]},

    with x^{[m]} a rising factorial.  It sums to 1 over all partitions of n
    and reduces to the DP EPPF at d = 0.  variant="unnormalized" instead
    evaluates

        prod_{j=1}^{D}(alpha + j d) / alpha^{[n]} * prod_i (1 - d)^{[V_i]},

    an alternative product form that does NOT normalize (already at n = 1
    it gives (alpha + d)(1 - d)/alpha); it is kept for comparison and
    requires alpha > 0.
    """
    arr = _check_sizes(sizes)
    n = float(arr.sum())
    d_blocks = arr.size
    if d_blocks == 0:
        return 0.0
    d, alpha = p.d, p.alpha
    if variant == "standard":
        ridge = sum(math.log(alpha + j * d) for j in range(1, d_blocks))
        blocks = float(gammaln(arr - d).sum()) - d_blocks * float(gammaln(1.0 - d))
        return ridge + blocks - _log_rising(alpha + 1.0, n - 1.0)
    if variant == "unnormalized":
        if alpha <= 0.0:
            raise ValueError("the unnormalized variant requires alpha > 0")
        ridge = sum(math.log(alpha + j * d) for j in range(1, d_blocks + 1))
        blocks = float(gammaln(arr + (1.0 - d)).sum()) - d_blocks * float(gammaln(1.0 - d))
        return ridge + blocks - _log_rising(alpha, n)
    raise ValueError(f"unknown EPPF variant: {variant!r}")


def eppf_py(sizes: Sequence[int], p: PYParams, variant: str = "standard") -> float:
    return math.exp(log_eppf_py(sizes, p, variant))


def partition_consistency_residual(
    eppf: Callable[[Sequence[int]], float], sizes: Sequence[int]
) -> float:
    """Marginalization defect of an EPPF at a partition of n - 1 items.

    For a consistent EPPF, the probability of a partition of n - 1 items
    equals the sum over the n ways it can grow by one item: joining each
    existing block or opening a new one.  Returns the absolute difference;
    zero (to rounding) certifies consistency at this partition.
    """
    base = list(int(s) for s in _check_sizes(sizes))
    if not base:
        raise ValueError("need at least one block")
    grown = 0.0
    for j in range(len(base)):
        bumped = list(base)
        bumped[j] += 1
        grown += eppf(bumped)
    grown += eppf(base + [1])
    return abs(eppf(base) - grown)


def enumerate_partitions(n: int) -> Iterator[tuple[int, ...]]:
    """Yield every set partition of {0..n-1} as a restricted growth string.

    Element i's label is the index of its block; labels appear in first-use
    order, so each partition is produced exactly once (Bell(n) total).
    Capped at n = 12 to keep enumeration tractable.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if n > MAX_ENUMERATION_N:
        raise ValueError(f"enumeration is capped at n = {MAX_ENUMERATION_N}, got {n}")
    labels = [0] * n

    def grow(i: int, n_blocks: int) -> Iterator[tuple[int, ...]]:
        if i == n:
            yield tuple(labels)
            return
        for lab in range(n_blocks + 1):
            labels[i] = lab
            yield from grow(i + 1, n_blocks + (1 if lab == n_blocks else 0))

    yield from grow(1, 1)


def partition_sizes(rgs: Sequence[int]) -> tuple[int, ...]:
    """Block sizes of a partition given as a restricted growth string."""
    arr = np.asarray(rgs, dtype=int)
    if arr.size == 0:
        return ()
    return tuple(np.bincount(arr).tolist())
