"""Set-to-set tracking error: the OSPA metric and its decomposition.

For point sets X (size m) and Y (size n >= m),

    ospa^p = ( min over injective matchings  sum_i min(c, d_i)^p
               + (n - m) * c^p ) / n

so unmatched points cost the cutoff c.  The reported decomposition splits
the matched-distance term (localization) from the unmatched term
(cardinality); the p-th powers of the parts sum to the p-th power of the
total, so with p = 1 the parts add up exactly.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np
from scipy.optimize import linear_sum_assignment

__all__ = [
    "OspaConfig",
    "OspaResult",
    "ScoreSeries",
    "aggregate_mc",
    "aggregate_runs",
    "ospa",
    "ospa_series",
    "score_series",
    "write_score_csv",
]

SCORE_CSV_SCHEMA = "bnptrack-ospa/1"


@dataclass(frozen=True)
class OspaConfig:
    """Metric settings: order ``p`` (>= 1) and cutoff ``c`` (> 0)."""

    p: float = 1.0
    c: float = 100.0

    def __post_init__(self) -> None:
        if self.p < 1.0:
            raise ValueError(f"order p must be at least 1, got {self.p}")
        if self.c <= 0.0:
            raise ValueError(f"cutoff c must be positive, got {self.c}")

    def distance(self, x: np.ndarray, y: np.ndarray) -> "OspaResult":
        return ospa(x, y, p=self.p, c=self.c)


@dataclass(frozen=True)
class OspaResult:
    total: float
    loc: float
    card: float


def ospa(x: np.ndarray, y: np.ndarray, p: float = 1.0, c: float = 100.0) -> OspaResult:
    """OSPA distance between two point sets given as (n, dim) arrays."""
    if p < 1.0:
        raise ValueError(f"order p must be at least 1, got {p}")
    if c <= 0.0:
        raise ValueError(f"cutoff c must be positive, got {c}")
    x = np.asarray(x, dtype=float).reshape(-1, 2) if np.asarray(x).size else np.empty((0, 2))
    y = np.asarray(y, dtype=float).reshape(-1, 2) if np.asarray(y).size else np.empty((0, 2))
    m, n = x.shape[0], y.shape[0]
    if m > n:
        x, y, m, n = y, x, n, m
    if n == 0:
        return OspaResult(0.0, 0.0, 0.0)
    if m == 0:
        return OspaResult(c, 0.0, c)
    dist = np.linalg.norm(x[:, None, :] - y[None, :, :], axis=2)
    cost = np.minimum(dist, c) ** p
    rows, cols = linear_sum_assignment(cost)
    matched = float(cost[rows, cols].sum())
    loc = (matched / n) ** (1.0 / p)
    card = ((n - m) * c**p / n) ** (1.0 / p)
    total = ((matched + (n - m) * c**p) / n) ** (1.0 / p)
    return OspaResult(total, loc, card)


def ospa_series(
    estimates: Sequence[np.ndarray],
    truths: Sequence[np.ndarray],
    p: float = 1.0,
    c: float = 100.0,
) -> dict[str, np.ndarray]:
    """Per-step OSPA between parallel sequences of point sets."""
    if len(estimates) != len(truths):
        raise ValueError("estimate and truth sequences must have equal length")
    results = [ospa(e, t, p=p, c=c) for e, t in zip(estimates, truths)]
    return {
        "total": np.array([r.total for r in results]),
        "loc": np.array([r.loc for r in results]),
        "card": np.array([r.card for r in results]),
    }


def aggregate_runs(series: Sequence[np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    """Pointwise mean and standard error across Monte Carlo runs.

    Accepts equal-length 1-D arrays (one per run); the standard error is 0
    when only a single run is supplied.
    """
    stack = np.stack([np.asarray(s, dtype=float) for s in series])
    mean = stack.mean(axis=0)
    if stack.shape[0] == 1:
        return mean, np.zeros_like(mean)
    se = stack.std(axis=0, ddof=1) / np.sqrt(stack.shape[0])
    return mean, se


@dataclass(frozen=True)
class ScoreSeries:
    """Per-step tracking scores for one run or a Monte Carlo aggregate.

    ``se`` is the per-step standard error of ``total`` (all zeros for a
    single run); ``n_runs`` records how many runs went into the numbers.
    """

    total: np.ndarray
    loc: np.ndarray
    card: np.ndarray
    card_true: np.ndarray
    card_est: np.ndarray
    se: np.ndarray = field(default=None)  # type: ignore[assignment]
    n_runs: int = 1

    def __post_init__(self) -> None:
        if self.se is None:
            object.__setattr__(self, "se", np.zeros_like(np.asarray(self.total, dtype=float)))
        lengths = {
            len(self.total),
            len(self.loc),
            len(self.card),
            len(self.card_true),
            len(self.card_est),
            len(self.se),
        }
        if len(lengths) != 1:
            raise ValueError(f"score columns must share one length, got {sorted(lengths)}")

    @property
    def n_steps(self) -> int:
        return len(self.total)


def score_series(
    estimates: Sequence[np.ndarray],
    truths: Sequence[np.ndarray],
    cfg: OspaConfig = OspaConfig(),
    card_est: Optional[Sequence[int]] = None,
) -> ScoreSeries:
    """Score one run: per-step OSPA plus estimated and true cardinality.

    ``card_est`` overrides the reported cardinality (e.g. a posterior mode
    that can differ from the number of reported positions).
    """
    parts = ospa_series(estimates, truths, p=cfg.p, c=cfg.c)
    if card_est is None:
        card_est = [_set_size(e) for e in estimates]
    elif len(card_est) != len(estimates):
        raise ValueError("card_est length must match the number of steps")
    return ScoreSeries(
        total=parts["total"],
        loc=parts["loc"],
        card=parts["card"],
        card_true=np.array([_set_size(t) for t in truths], dtype=float),
        card_est=np.asarray(card_est, dtype=float),
    )


def _set_size(points: np.ndarray) -> int:
    arr = np.asarray(points, dtype=float)
    return arr.reshape(-1, 2).shape[0] if arr.size else 0


def aggregate_mc(runs: Sequence[ScoreSeries]) -> ScoreSeries:
    """Pointwise mean across runs, with the standard error of the total.

    Every input series must cover the same number of steps.
    """
    if not runs:
        raise ValueError("at least one run is required")
    steps = {r.n_steps for r in runs}
    if len(steps) != 1:
        raise ValueError(f"runs must share one step count, got {sorted(steps)}")
    totals = np.stack([r.total for r in runs])
    mean, se = aggregate_runs(totals)
    return ScoreSeries(
        total=mean,
        loc=np.stack([r.loc for r in runs]).mean(axis=0),
        card=np.stack([r.card for r in runs]).mean(axis=0),
        card_true=np.stack([r.card_true for r in runs]).mean(axis=0),
        card_est=np.stack([r.card_est for r in runs]).mean(axis=0),
        se=se,
        n_runs=sum(r.n_runs for r in runs),
    )


def write_score_csv(path: Union[str, Path], series: ScoreSeries) -> None:
    """Write the aggregate score table (schema comment + fixed columns)."""
    with open(path, "w", newline="") as fh:
        fh.write(f"# schema: {SCORE_CSV_SCHEMA}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            ["step", "ospa_total", "ospa_loc", "ospa_card", "card_true", "card_est_mean", "stderr"]
        )
        for k in range(series.n_steps):
            writer.writerow(
                [
                    k,
                    repr(float(series.total[k])),
                    repr(float(series.loc[k])),
                    repr(float(series.card[k])),
                    repr(float(series.card_true[k])),
                    repr(float(series.card_est[k])),
                    repr(float(series.se[k])),
                ]
            )
