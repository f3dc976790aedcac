"""Multi-object scenario simulation: truth trajectories and noisy frames.

A scenario is a table of objects (birth step, death step, initial kinematic
state) plus a motion kernel and a sensor description.  Truth states are
propagated birth-to-death; each step then emits one measurement per living
object plus Poisson clutter, shuffled so measurement order carries no
object information.

The signal-to-noise knob rescales the nominal sensor covariance so that the
quoted ratio holds between the mean squared per-step displacement of the
ideal (noise-free) object positions and the total measurement noise power.
Lower SNR therefore means noise comparable to how far objects actually move
between frames.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .models import ct_transition_matrix, kinematic_noise_matrix

__all__ = [
    "ScenarioConfig",
    "GroundTruth",
    "MeasurementFrame",
    "simulate_truth",
    "simulate_measurements",
    "simulate_scenario",
    "snr_noise_factor",
    "scenario_preset",
    "PRESET_NAMES",
]


@dataclass(frozen=True)
class ScenarioConfig:
    """Declarative scenario description.

    births/deaths are inclusive step indices: object i exists at step k iff
    births[i] <= k <= deaths[i].  init_states rows are [x, vx, y, vy] or
    [x, vx, y, vy, omega] (turn rate used by the "ct" motion kernel).
    sensor is "position" (Cartesian z = position + noise, covariance
    noise_cov) or "range_bearing" (z = (bearing, range) + noise with
    variances sigma_phi2/sigma_r2).  window bounds clutter and, for the
    radar sensor, the surveyed polar box ((phi_lo, phi_hi), (r_lo, r_hi));
    for the position sensor it is ((x_lo, x_hi), (y_lo, y_hi)).
    """

    name: str
    n_steps: int
    births: tuple[int, ...]
    deaths: tuple[int, ...]
    init_states: np.ndarray
    motion: str = "cv"
    dt: float = 1.0
    sigma_w: float = 0.0
    sigma_u: float = 0.0
    sensor: str = "position"
    noise_cov: np.ndarray = field(default_factory=lambda: 25.0 * np.eye(2))
    sigma_r2: float = 25.0
    sigma_phi2: float = (math.pi / 180.0) ** 2
    snr_db: Optional[float] = None
    clutter_rate: float = 0.0
    window: tuple[tuple[float, float], tuple[float, float]] = ((-600.0, 600.0), (-600.0, 600.0))

    def __post_init__(self) -> None:
        object.__setattr__(self, "init_states", np.asarray(self.init_states, dtype=float))
        object.__setattr__(self, "noise_cov", np.asarray(self.noise_cov, dtype=float))
        n = len(self.births)
        if len(self.deaths) != n or self.init_states.shape[0] != n:
            raise ValueError("births, deaths and init_states must describe the same objects")
        if self.n_steps < 0:
            raise ValueError("n_steps must be nonnegative")
        for b, e in zip(self.births, self.deaths):
            if not 0 <= b <= e:
                raise ValueError(f"bad lifetime [{b}, {e}]")
        if self.motion not in ("cv", "ct"):
            raise ValueError(f"unknown motion kernel {self.motion!r}")
        if self.sensor not in ("position", "range_bearing"):
            raise ValueError(f"unknown sensor {self.sensor!r}")
        if self.clutter_rate < 0:
            raise ValueError("clutter_rate must be nonnegative")

    @property
    def n_objects(self) -> int:
        return len(self.births)


@dataclass(frozen=True)
class GroundTruth:
    """Propagated truth: states[i, k] is NaN where object i does not exist."""

    alive: np.ndarray  # (n_objects, n_steps + 1) bool
    states: np.ndarray  # (n_objects, n_steps + 1, sdim)

    @property
    def n_steps(self) -> int:
        return self.alive.shape[1] - 1

    @property
    def cardinality(self) -> np.ndarray:
        return self.alive.sum(axis=0)

    def ids_at(self, k: int) -> np.ndarray:
        return np.flatnonzero(self.alive[:, k])

    def positions_at(self, k: int) -> np.ndarray:
        return self.states[self.alive[:, k], k][:, [0, 2]]


@dataclass(frozen=True)
class MeasurementFrame:
    """One step's sensor output.

    z is the raw measurement ((bearing, range) for the radar sensor,
    Cartesian otherwise); xy is always the Cartesian equivalent; sources
    holds the emitting object index, -1 for clutter.
    """

    z: np.ndarray
    xy: np.ndarray
    sources: np.ndarray

    @property
    def n(self) -> int:
        return self.z.shape[0]


def simulate_truth(cfg: ScenarioConfig, rng: np.random.Generator) -> GroundTruth:
    """Propagate every object from birth to death under the motion kernel."""
    n, K = cfg.n_objects, cfg.n_steps
    sdim = cfg.init_states.shape[1] if n else 4
    alive = np.zeros((n, K + 1), dtype=bool)
    states = np.full((n, K + 1, sdim), np.nan)
    B = kinematic_noise_matrix(cfg.dt)
    for i in range(n):
        b, e = cfg.births[i], min(cfg.deaths[i], K)
        if b > K:
            continue
        x = cfg.init_states[i].copy()
        for k in range(b, e + 1):
            alive[i, k] = True
            states[i, k] = x
            omega = float(x[4]) if (cfg.motion == "ct" and sdim >= 5) else 0.0
            kin = ct_transition_matrix(omega, cfg.dt) @ x[:4]
            if cfg.sigma_w:
                kin = kin + cfg.sigma_w * (B @ rng.standard_normal(2))
            if sdim >= 5:
                w = cfg.sigma_u * rng.standard_normal() if cfg.sigma_u else 0.0
                x = np.concatenate((kin, [x[4] + w]))
            else:
                x = kin
    return GroundTruth(alive=alive, states=states)


def _ideal_measurement(pos: np.ndarray, sensor: str) -> np.ndarray:
    if sensor == "range_bearing":
        return np.array([math.atan2(pos[1], pos[0]), math.hypot(pos[0], pos[1])])
    return pos.copy()


def snr_noise_factor(truth: GroundTruth, cfg: ScenarioConfig) -> float:
    """Covariance multiplier realizing the configured signal-to-noise ratio.

    Signal power is the mean squared per-step displacement of living
    objects' ideal positions; noise power is the trace of the nominal
    Cartesian measurement covariance (the polar covariance linearized at
    the mean object range for the radar sensor).  Returns 1.0 when no SNR
    is requested.
    """
    if cfg.snr_db is None:
        return 1.0
    disp2 = []
    for i in range(truth.alive.shape[0]):
        ks = np.flatnonzero(truth.alive[i])
        for k in ks[:-1]:
            if truth.alive[i, k + 1]:
                step = truth.states[i, k + 1, [0, 2]] - truth.states[i, k, [0, 2]]
                disp2.append(float(step @ step))
    p_signal = float(np.mean(disp2)) if disp2 else 0.0
    if p_signal <= 0.0:
        raise ValueError("cannot set an SNR for a scenario whose objects do not move")
    if cfg.sensor == "range_bearing":
        ranges = [
            math.hypot(*truth.states[i, k, [0, 2]])
            for i in range(truth.alive.shape[0])
            for k in np.flatnonzero(truth.alive[i])
        ]
        rbar2 = float(np.mean(ranges)) ** 2
        p_noise_nominal = cfg.sigma_r2 + rbar2 * cfg.sigma_phi2
    else:
        p_noise_nominal = float(np.trace(cfg.noise_cov))
    return p_signal * 10.0 ** (-cfg.snr_db / 10.0) / p_noise_nominal


def simulate_measurements(
    truth: GroundTruth, cfg: ScenarioConfig, rng: np.random.Generator
) -> list[MeasurementFrame]:
    """Emit per-step frames: one noisy return per living object plus clutter."""
    factor = snr_noise_factor(truth, cfg)
    frames = []
    (a_lo, a_hi), (b_lo, b_hi) = cfg.window
    if cfg.sensor == "range_bearing":
        noise_std = np.sqrt(factor * np.array([cfg.sigma_phi2, cfg.sigma_r2]))
    else:
        chol = np.linalg.cholesky(factor * cfg.noise_cov)
    for k in range(truth.n_steps + 1):
        ids = truth.ids_at(k)
        zs, srcs = [], []
        for i in ids:
            ideal = _ideal_measurement(truth.states[i, k, [0, 2]], cfg.sensor)
            if cfg.sensor == "range_bearing":
                zs.append(ideal + noise_std * rng.standard_normal(2))
            else:
                zs.append(ideal + chol @ rng.standard_normal(2))
            srcs.append(int(i))
        n_clutter = rng.poisson(cfg.clutter_rate) if cfg.clutter_rate else 0
        for _ in range(n_clutter):
            zs.append(np.array([rng.uniform(a_lo, a_hi), rng.uniform(b_lo, b_hi)]))
            srcs.append(-1)
        if zs:
            z = np.stack(zs)
            order = rng.permutation(z.shape[0])
            z = z[order]
            srcs = np.asarray(srcs, dtype=np.int64)[order]
        else:
            z = np.empty((0, 2))
            srcs = np.empty(0, dtype=np.int64)
        if cfg.sensor == "range_bearing":
            xy = np.stack([z[:, 1] * np.cos(z[:, 0]), z[:, 1] * np.sin(z[:, 0])], axis=1) if z.size else z.copy()
        else:
            xy = z.copy()
        frames.append(MeasurementFrame(z=z, xy=xy, sources=srcs))
    return frames


def simulate_scenario(
    cfg: ScenarioConfig, rng: np.random.Generator
) -> tuple[GroundTruth, list[MeasurementFrame]]:
    truth = simulate_truth(cfg, rng)
    return truth, simulate_measurements(truth, cfg, rng)


# ------------------------------------------------------------------ presets

PRESET_NAMES = ("linear5", "cars5", "radar10")


def _linear5() -> ScenarioConfig:
    # five constant-velocity objects on non-crossing lanes; pairwise
    # separation during shared lifetimes stays above ~60 m
    init = np.array(
        [
            [-300.0, 4.0, -250.0, 4.0],
            [250.0, -4.0, 300.0, -3.0],
            [-350.0, 3.0, 320.0, -6.0],
            [300.0, -5.0, -300.0, 2.0],
            [0.0, 4.5, 0.0, -4.5],
        ]
    )
    return ScenarioConfig(
        name="linear5",
        n_steps=100,
        births=(0, 5, 10, 20, 30),
        deaths=(70, 100, 100, 45, 80),
        init_states=init,
        motion="cv",
        sigma_w=0.0,
        sensor="position",
        noise_cov=25.0 * np.eye(2),
        window=((-600.0, 600.0), (-600.0, 600.0)),
    )


def _circle_object(
    cx: float, cy: float, radius: float, gamma: float, speed: float, clockwise: bool = False
) -> list[float]:
    """Kinematic row for an object turning on the circle centred at (cx, cy).

    All objects built from one circle keep their mutual distances exactly
    (they trace the same path with a phase offset).
    """
    x = cx + radius * math.cos(gamma)
    y = cy + radius * math.sin(gamma)
    omega = speed / radius
    vx, vy = -speed * math.sin(gamma), speed * math.cos(gamma)
    if clockwise:
        omega, vx, vy = -omega, -vx, -vy
    return [x, vx, y, vy, omega]


def _cars5() -> ScenarioConfig:
    # a convoy on a curving road: one shared circle, staggered phases, so
    # spacings are constant by construction
    init = [
        _circle_object(100.0, -200.0, 600.0, 1.2 - 0.15 * i, speed=6.0) for i in range(5)
    ]
    return ScenarioConfig(
        name="cars5",
        n_steps=100,
        births=(0, 5, 10, 20, 30),
        deaths=(70, 100, 100, 45, 80),
        init_states=np.asarray(init),
        motion="ct",
        sigma_w=0.0,
        sigma_u=0.0,
        sensor="position",
        noise_cov=25.0 * np.eye(2),
        window=((-800.0, 800.0), (-800.0, 800.0)),
    )


def _radar10() -> ScenarioConfig:
    # ten coordinated-turn objects observed in bearing and range over a half
    # plane; lifetimes follow the staggered existence table used throughout.
    # Each turning circle satisfies center_x > radius (bearings stay inside
    # +-90 degrees) and |center| + radius < 1850 (ranges stay in the window)
    births = (0, 10, 10, 10, 20, 40, 40, 40, 60, 60)
    deaths = (100, 100, 100, 60, 80, 100, 100, 80, 100, 100)
    init = np.array(
        [
            _circle_object(700.0, 500.0, 200.0, 0.5, speed=8.0),
            _circle_object(1300.0, 200.0, 250.0, 2.0, speed=7.0, clockwise=True),
            _circle_object(500.0, -500.0, 250.0, -1.0, speed=6.0),
            _circle_object(900.0, -300.0, 150.0, 1.0, speed=7.0, clockwise=True),
            _circle_object(1400.0, 700.0, 180.0, 2.5, speed=6.0),
            _circle_object(600.0, 1000.0, 200.0, -0.5, speed=7.0, clockwise=True),
            _circle_object(1000.0, -800.0, 220.0, 1.5, speed=8.0),
            _circle_object(1600.0, -200.0, 150.0, 0.0, speed=6.0, clockwise=True),
            _circle_object(800.0, 400.0, 160.0, 3.0, speed=9.0),
            _circle_object(1200.0, -500.0, 200.0, -2.0, speed=8.0, clockwise=True),
        ]
    )
    return ScenarioConfig(
        name="radar10",
        n_steps=100,
        births=births,
        deaths=deaths,
        init_states=init,
        motion="ct",
        sigma_w=0.1,
        sigma_u=5e-4,
        sensor="range_bearing",
        sigma_r2=25.0,
        sigma_phi2=(math.pi / 180.0) ** 2,
        window=((-math.pi / 2.0, math.pi / 2.0), (0.0, 2000.0)),
    )


def scenario_preset(name: str) -> ScenarioConfig:
    factories = {"linear5": _linear5, "cars5": _cars5, "radar10": _radar10}
    if name not in factories:
        raise KeyError(f"unknown preset {name!r}; available: {', '.join(PRESET_NAMES)}")
    return factories[name]()
