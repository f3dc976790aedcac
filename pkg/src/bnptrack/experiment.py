"""Experiment driver: config files, Monte Carlo execution, CSV/SVG artifacts.

An experiment is one scenario x one tracker x ``mc_runs`` replications.
Each replication simulates fresh measurements, runs the tracker, scores it
against the truth with OSPA, and writes a per-run checkpoint CSV; the
driver then aggregates checkpoints into top-level result tables and plots.
Replication i draws every random number from a stream spawned as child i
of the experiment seed, so results are identical no matter how many worker
processes execute the runs — and a re-run resumes from whatever
checkpoints already exist.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
import shutil
import subprocess
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from importlib import metadata as _importlib_metadata
from pathlib import Path
from typing import Any, Mapping, Optional, Sequence, Union

import numpy as np
import yaml

from .gibbs import ChainConfig, extract_tracks, run_chain
from .metrics import OspaConfig, ScoreSeries, aggregate_mc, score_series, write_score_csv
from .models import GaussianNIW, KernelConfig
from .simulate import PRESET_NAMES, ScenarioConfig, scenario_preset, simulate_scenario

__all__ = [
    "CONFIG_SCHEMA",
    "ConfigError",
    "ExperimentConfig",
    "ExperimentResult",
    "TrackerSettings",
    "config_hash",
    "default_experiment",
    "from_dict",
    "load_config",
    "plot_cardinality",
    "plot_ospa",
    "plot_tracks",
    "run_experiment",
    "save_config",
    "to_dict",
]

CONFIG_SCHEMA = "bnptrack-experiment/1"
TRACKER_KINDS = ("ddp-emm", "dpy-stp")
OUTPUT_DIR_ENV = "BNPTRACK_OUTPUT_DIR"

_RUN_CSV_SCHEMA = "bnptrack-run/1"
_RUN_COLUMNS = (
    "step",
    "card_true",
    "card_est",
    "ospa_total",
    "ospa_loc",
    "ospa_card",
    "base_total",
    "base_loc",
    "base_card",
)


class ConfigError(ValueError):
    """Invalid experiment configuration; ``field`` names the offending entry."""

    def __init__(self, field_name: str, message: str) -> None:
        self.field = field_name
        super().__init__(f"{field_name}: {message}")


# --------------------------------------------------------------- settings


@dataclass(frozen=True)
class TrackerSettings:
    """Tracker choice plus every prior and kernel hyperparameter.

    kind            "ddp-emm" (discount 0) or "dpy-stp"
    discount        Pitman-Yor discount in [0, 1); must be 0 for ddp-emm
    alpha           concentration (initial value when a hyperprior is set)
    alpha_prior     optional Gamma(a, b) hyperprior; None keeps alpha fixed
    p_survive       per-object step-survival probability
    mu0/lam/nu/psi_scale
                    Normal-inverse-Wishart base measure; the scale matrix
                    is psi_scale times the identity
    sigma_w         tracker-side acceleration noise (Kalman process noise)
    dt              step duration
    param_walk_var  variance (times I) of the cluster-mean random walk
    v0_var          velocity variance given to newborn tracks
    """

    kind: str = "ddp-emm"
    discount: float = 0.0
    alpha: float = 1.0
    alpha_prior: Optional[tuple[float, float]] = None
    p_survive: float = 0.995
    mu0: tuple[float, ...] = (0.0, 0.0)
    lam: float = 1e-4
    nu: float = 6.0
    psi_scale: float = 140.0
    sigma_w: float = 0.3
    dt: float = 1.0
    param_walk_var: float = 4.0
    v0_var: float = 100.0

    def __post_init__(self) -> None:
        if self.kind not in TRACKER_KINDS:
            raise ConfigError("tracker.kind", f"must be one of {TRACKER_KINDS}, got {self.kind!r}")
        if not 0.0 <= self.discount < 1.0:
            raise ConfigError("tracker.discount", f"must lie in [0, 1), got {self.discount}")
        if self.kind == "ddp-emm" and self.discount != 0.0:
            raise ConfigError("tracker.discount", "ddp-emm requires discount 0")
        if self.alpha <= -self.discount:
            raise ConfigError("tracker.alpha", f"must exceed -discount, got {self.alpha}")
        if self.alpha_prior is not None:
            a, b = self.alpha_prior
            if a <= 0 or b <= 0:
                raise ConfigError("tracker.alpha_prior", f"Gamma(a, b) needs a, b > 0, got {self.alpha_prior}")
            object.__setattr__(self, "alpha_prior", (float(a), float(b)))
        if not 0.0 <= self.p_survive <= 1.0:
            raise ConfigError("tracker.p_survive", f"must lie in [0, 1], got {self.p_survive}")
        object.__setattr__(self, "mu0", tuple(float(v) for v in self.mu0))
        if self.lam <= 0:
            raise ConfigError("tracker.lam", f"must be positive, got {self.lam}")
        if self.nu <= len(self.mu0) + 1:
            raise ConfigError("tracker.nu", f"must exceed dim + 1, got {self.nu}")
        if self.psi_scale <= 0:
            raise ConfigError("tracker.psi_scale", f"must be positive, got {self.psi_scale}")
        if self.param_walk_var < 0 or self.v0_var < 0:
            raise ConfigError("tracker.param_walk_var", "variances must be nonnegative")

    def base(self) -> GaussianNIW:
        dim = len(self.mu0)
        return GaussianNIW(
            mu0=np.asarray(self.mu0, dtype=float),
            lam=self.lam,
            nu=self.nu,
            psi=self.psi_scale * np.eye(dim),
        )

    def kernels(self) -> KernelConfig:
        dim = len(self.mu0)
        return KernelConfig(
            sigma_w=self.sigma_w,
            dt=self.dt,
            param_walk_cov=self.param_walk_var * np.eye(dim),
        )


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to reproduce one experiment byte for byte.

    ``scenario`` is a preset name, a mapping {"preset": name, **overrides}
    adjusting preset fields (e.g. snr_db), or a full inline scenario table
    mirroring ScenarioConfig's fields.
    """

    scenario: Union[str, Mapping[str, Any]] = "linear5"
    tracker: TrackerSettings = field(default_factory=TrackerSettings)
    chain: ChainConfig = field(default_factory=lambda: ChainConfig(n_sweeps=220, burn_in=100, thin=2))
    metrics: OspaConfig = field(default_factory=OspaConfig)
    mc_runs: int = 1
    seed: int = 0
    workers: int = 1
    output_dir: str = "results"

    def __post_init__(self) -> None:
        if self.mc_runs < 1:
            raise ConfigError("mc_runs", f"must be at least 1, got {self.mc_runs}")
        if self.workers < 1:
            raise ConfigError("workers", f"must be at least 1, got {self.workers}")
        try:
            scen = self.scenario_config()
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError("scenario", str(exc)) from exc
        dim = 2  # both sensors report planar positions
        if len(self.tracker.mu0) != dim:
            raise ConfigError(
                "tracker.mu0",
                f"dimension {len(self.tracker.mu0)} does not match the scenario's {dim}-d measurements",
            )
        if scen.n_steps < 0:  # pragma: no cover - ScenarioConfig already rejects this
            raise ConfigError("scenario.n_steps", "must be nonnegative")

    def scenario_config(self) -> ScenarioConfig:
        return _materialize_scenario(self.scenario)


def _materialize_scenario(spec: Union[str, Mapping[str, Any]]) -> ScenarioConfig:
    if isinstance(spec, str):
        if spec not in PRESET_NAMES:
            raise ConfigError("scenario", f"unknown preset {spec!r}; choose from {PRESET_NAMES}")
        return scenario_preset(spec)
    if not isinstance(spec, Mapping):
        raise ConfigError("scenario", f"expected a preset name or mapping, got {type(spec).__name__}")
    data = dict(spec)
    preset = data.pop("preset", None)
    if preset is not None:
        if preset not in PRESET_NAMES:
            raise ConfigError("scenario.preset", f"unknown preset {preset!r}; choose from {PRESET_NAMES}")
        base = scenario_preset(preset)
        allowed = {"n_steps", "snr_db", "clutter_rate", "sigma_w", "sigma_u", "dt"}
        unknown = set(data) - allowed
        if unknown:
            raise ConfigError(
                "scenario", f"preset overrides limited to {sorted(allowed)}, got {sorted(unknown)}"
            )
        return replace(base, **data)
    # inline scenario: tuples/arrays arrive as YAML lists
    for key in ("births", "deaths"):
        if key in data:
            data[key] = tuple(int(v) for v in data[key])
    if "window" in data:
        (a, b), (c, d) = data["window"]
        data["window"] = ((float(a), float(b)), (float(c), float(d)))
    try:
        return ScenarioConfig(**data)
    except TypeError as exc:
        raise ConfigError("scenario", str(exc)) from exc
    except ValueError as exc:
        raise ConfigError("scenario", str(exc)) from exc


# ------------------------------------------------------ config round-trip


def _take(section: Mapping[str, Any], allowed: Sequence[str], where: str) -> dict[str, Any]:
    if not isinstance(section, Mapping):
        raise ConfigError(where, f"expected a mapping, got {type(section).__name__}")
    unknown = set(section) - set(allowed)
    if unknown:
        raise ConfigError(where, f"unknown keys {sorted(unknown)}; allowed: {sorted(allowed)}")
    return dict(section)


def from_dict(data: Mapping[str, Any]) -> ExperimentConfig:
    """Build a validated config from plain parsed data (inverse of to_dict)."""
    top = _take(
        data,
        ("schema", "scenario", "tracker", "chain", "metrics", "mc_runs", "seed", "workers", "output_dir"),
        "config",
    )
    schema = top.pop("schema", CONFIG_SCHEMA)
    if schema != CONFIG_SCHEMA:
        raise ConfigError("schema", f"expected {CONFIG_SCHEMA!r}, got {schema!r}")

    tracker_data = _take(
        top.get("tracker", {}),
        tuple(TrackerSettings.__dataclass_fields__),
        "tracker",
    )
    if tracker_data.get("alpha_prior") is not None:
        prior = tracker_data["alpha_prior"]
        if not isinstance(prior, Sequence) or len(prior) != 2:
            raise ConfigError("tracker.alpha_prior", f"expected [a, b], got {prior!r}")
        tracker_data["alpha_prior"] = (float(prior[0]), float(prior[1]))
    if "mu0" in tracker_data:
        tracker_data["mu0"] = tuple(float(v) for v in tracker_data["mu0"])
    tracker = TrackerSettings(**tracker_data)

    chain_data = _take(top.get("chain", {}), ("n_sweeps", "burn_in", "thin", "seed"), "chain")
    try:
        chain = ChainConfig(**chain_data)
    except ValueError as exc:
        raise ConfigError("chain", str(exc)) from exc

    metrics_data = _take(top.get("metrics", {}), ("p", "c"), "metrics")
    try:
        ospa_cfg = OspaConfig(**metrics_data)
    except ValueError as exc:
        raise ConfigError("metrics", str(exc)) from exc

    kwargs: dict[str, Any] = {
        "scenario": top.get("scenario", "linear5"),
        "tracker": tracker,
        "chain": chain,
        "metrics": ospa_cfg,
    }
    for key in ("mc_runs", "seed", "workers"):
        if key in top:
            value = top[key]
            if not isinstance(value, int) or isinstance(value, bool):
                raise ConfigError(key, f"expected an integer, got {value!r}")
            kwargs[key] = value
    if "output_dir" in top:
        kwargs["output_dir"] = str(top["output_dir"])
    return ExperimentConfig(**kwargs)


def to_dict(cfg: ExperimentConfig) -> dict[str, Any]:
    """Plain nested data mirroring the config file layout."""
    tracker = {
        "kind": cfg.tracker.kind,
        "discount": cfg.tracker.discount,
        "alpha": cfg.tracker.alpha,
        "alpha_prior": list(cfg.tracker.alpha_prior) if cfg.tracker.alpha_prior else None,
        "p_survive": cfg.tracker.p_survive,
        "mu0": list(cfg.tracker.mu0),
        "lam": cfg.tracker.lam,
        "nu": cfg.tracker.nu,
        "psi_scale": cfg.tracker.psi_scale,
        "sigma_w": cfg.tracker.sigma_w,
        "dt": cfg.tracker.dt,
        "param_walk_var": cfg.tracker.param_walk_var,
        "v0_var": cfg.tracker.v0_var,
    }
    scenario: Any = cfg.scenario
    if isinstance(scenario, Mapping):
        scenario = {k: _plain(v) for k, v in scenario.items()}
    return {
        "schema": CONFIG_SCHEMA,
        "scenario": scenario,
        "tracker": tracker,
        "chain": {
            "n_sweeps": cfg.chain.n_sweeps,
            "burn_in": cfg.chain.burn_in,
            "thin": cfg.chain.thin,
            "seed": cfg.chain.seed,
        },
        "metrics": {"p": cfg.metrics.p, "c": cfg.metrics.c},
        "mc_runs": cfg.mc_runs,
        "seed": cfg.seed,
        "workers": cfg.workers,
        "output_dir": cfg.output_dir,
    }


def _plain(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, Mapping):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, np.generic):
        return value.item()
    return value


def load_config(path: Union[str, Path]) -> ExperimentConfig:
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh)
    except FileNotFoundError:
        raise ConfigError("config", f"no such file: {path}")
    except yaml.YAMLError as exc:
        raise ConfigError("config", f"not valid YAML: {exc}")
    if not isinstance(data, Mapping):
        raise ConfigError("config", "top level must be a mapping")
    return from_dict(data)


def save_config(cfg: ExperimentConfig, path: Union[str, Path]) -> None:
    with open(path, "w") as fh:
        yaml.safe_dump(to_dict(cfg), fh, sort_keys=False)


def config_hash(cfg: ExperimentConfig) -> str:
    canonical = json.dumps(to_dict(cfg), sort_keys=True)
    return hashlib.sha256(canonical.encode()).hexdigest()


# per-scenario tracker calibration; dpy-stp adds a discount on top
_PRESET_TRACKERS: dict[str, dict[str, Any]] = {
    "linear5": dict(alpha_prior=(1.0, 0.2), psi_scale=140.0, sigma_w=0.3),
    "cars5": dict(alpha_prior=(1.0, 0.3), psi_scale=140.0, sigma_w=0.3),
    "radar10": dict(alpha_prior=(1.0, 0.1), psi_scale=900.0, sigma_w=0.1),
}
_DPY_DISCOUNT = 0.25


def default_experiment(
    preset: str,
    kind: str = "ddp-emm",
    *,
    snr_db: Optional[float] = None,
    mc_runs: int = 10,
    seed: int = 0,
    workers: int = 1,
    output_dir: str = "results",
    chain: Optional[ChainConfig] = None,
) -> ExperimentConfig:
    """Calibrated starting point for a preset scenario and tracker kind."""
    if preset not in _PRESET_TRACKERS:
        raise ConfigError("scenario", f"unknown preset {preset!r}; choose from {PRESET_NAMES}")
    tracker = TrackerSettings(
        kind=kind,
        discount=_DPY_DISCOUNT if kind == "dpy-stp" else 0.0,
        **_PRESET_TRACKERS[preset],
    )
    scenario: Union[str, dict[str, Any]] = preset
    if snr_db is not None:
        scenario = {"preset": preset, "snr_db": float(snr_db)}
    return ExperimentConfig(
        scenario=scenario,
        tracker=tracker,
        chain=chain if chain is not None else ChainConfig(n_sweeps=220, burn_in=100, thin=2),
        mc_runs=mc_runs,
        seed=seed,
        workers=workers,
        output_dir=output_dir,
    )


# ------------------------------------------------------------- execution


@dataclass(frozen=True)
class ExperimentResult:
    output_dir: Path
    scores: ScoreSeries
    baseline: ScoreSeries
    manifest: dict[str, Any]


def _checkpoint_path(out_dir: Path, index: int) -> Path:
    return out_dir / "runs" / f"run_{index:04d}.csv"


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def _mc_run(cfg: ExperimentConfig, index: int) -> None:
    """Execute replication ``index`` and write its checkpoint CSV."""
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed).spawn(cfg.mc_runs)[index])
    scen = cfg.scenario_config()
    truth, frames = simulate_scenario(scen, rng)
    result = run_chain(
        [f.xy for f in frames],
        base=cfg.tracker.base(),
        cfg=cfg.chain,
        kernels=cfg.tracker.kernels(),
        p_survive=cfg.tracker.p_survive,
        d=cfg.tracker.discount,
        alpha=cfg.tracker.alpha,
        alpha_prior=cfg.tracker.alpha_prior,
        v0_var=cfg.tracker.v0_var,
        rng=rng,
    )
    tracks = extract_tracks(result)

    truths = [truth.positions_at(k) for k in range(truth.n_steps + 1)]
    est = score_series(list(tracks.positions), truths, cfg.metrics, card_est=list(tracks.cardinality))
    base = score_series([f.xy for f in frames], truths, cfg.metrics)

    lines = [f"# schema: {_RUN_CSV_SCHEMA}", ",".join(_RUN_COLUMNS)]
    for k in range(est.n_steps):
        lines.append(
            ",".join(
                [
                    str(k),
                    repr(float(est.card_true[k])),
                    repr(float(est.card_est[k])),
                    repr(float(est.total[k])),
                    repr(float(est.loc[k])),
                    repr(float(est.card[k])),
                    repr(float(base.total[k])),
                    repr(float(base.loc[k])),
                    repr(float(base.card[k])),
                ]
            )
        )
    out_dir = Path(cfg.output_dir)
    if index == 0:
        # before the checkpoint: its existence marks this run complete
        _write_exhibit(out_dir, truth, tracks)
    _atomic_write(_checkpoint_path(out_dir, index), "\n".join(lines) + "\n")


def _write_exhibit(out_dir: Path, truth, tracks) -> None:
    """Run 0 doubles as the plotted example: its truth and track reports."""
    rows = ["# schema: bnptrack-truth/1", "step,object,x,y"]
    for k in range(truth.n_steps + 1):
        ids = truth.ids_at(k)
        pos = truth.positions_at(k)
        for obj, (x, y) in zip(ids, pos):
            rows.append(f"{k},{int(obj)},{float(x)!r},{float(y)!r}")
    _atomic_write(out_dir / "runs" / "exhibit_truth.csv", "\n".join(rows) + "\n")

    rows = ["# schema: bnptrack-tracks/1", "step,track,x,y"]
    for k, (uids, pos) in enumerate(zip(tracks.uids, tracks.positions)):
        for uid, (x, y) in zip(uids, pos):
            rows.append(f"{k},{int(uid)},{float(x)!r},{float(y)!r}")
    _atomic_write(out_dir / "runs" / "exhibit_tracks.csv", "\n".join(rows) + "\n")


def _read_run_csv(path: Path) -> tuple[ScoreSeries, ScoreSeries]:
    with open(path) as fh:
        first = fh.readline().strip()
        if first != f"# schema: {_RUN_CSV_SCHEMA}":
            raise ValueError(f"{path} does not carry schema {_RUN_CSV_SCHEMA}")
        reader = csv.DictReader(fh)
        cols: dict[str, list[float]] = {name: [] for name in _RUN_COLUMNS}
        for row in reader:
            for name in _RUN_COLUMNS:
                cols[name].append(float(row[name]))
    est = ScoreSeries(
        total=np.array(cols["ospa_total"]),
        loc=np.array(cols["ospa_loc"]),
        card=np.array(cols["ospa_card"]),
        card_true=np.array(cols["card_true"]),
        card_est=np.array(cols["card_est"]),
    )
    base = ScoreSeries(
        total=np.array(cols["base_total"]),
        loc=np.array(cols["base_loc"]),
        card=np.array(cols["base_card"]),
        card_true=np.array(cols["card_true"]),
        card_est=np.array(cols["card_true"]),
    )
    return est, base


def _version_string() -> str:
    try:
        version = _importlib_metadata.version("bnptrack")
    except _importlib_metadata.PackageNotFoundError:  # pragma: no cover
        version = "0.0.0"
    try:
        described = subprocess.run(
            ["git", "describe", "--always", "--dirty", "--tags"],
            cwd=Path(__file__).resolve().parent,
            capture_output=True,
            text=True,
            timeout=10,
        )
        if described.returncode == 0 and described.stdout.strip():
            return f"{version}+g{described.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return version


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    """Run (or resume) every replication, then aggregate, plot and manifest."""
    start = time.monotonic()
    out_dir = Path(cfg.output_dir)
    (out_dir / "runs").mkdir(parents=True, exist_ok=True)

    todo = [i for i in range(cfg.mc_runs) if not _checkpoint_path(out_dir, i).exists()]
    if cfg.workers > 1 and len(todo) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            list(pool.map(_mc_run, [cfg] * len(todo), todo))
    else:
        for i in todo:
            _mc_run(cfg, i)

    est_runs, base_runs = [], []
    for i in range(cfg.mc_runs):
        est, base = _read_run_csv(_checkpoint_path(out_dir, i))
        est_runs.append(est)
        base_runs.append(base)
    scores = aggregate_mc(est_runs)
    baseline = aggregate_mc(base_runs)

    write_score_csv(out_dir / "ospa.csv", scores)
    _write_cardinality_csv(out_dir / "cardinality.csv", est_runs, scores)
    shutil.copyfile(out_dir / "runs" / "exhibit_truth.csv", out_dir / "truth.csv")
    shutil.copyfile(out_dir / "runs" / "exhibit_tracks.csv", out_dir / "tracks.csv")

    steps = np.arange(scores.n_steps)
    plot_ospa(out_dir / "ospa_vs_step.svg", steps, scores.total, scores.se, baseline=baseline.total)
    plot_cardinality(out_dir / "cardinality_vs_step.svg", steps, scores.card_true, scores.card_est)
    plot_tracks(
        out_dir / "xy_vs_step.svg",
        _read_points_csv(out_dir / "tracks.csv"),
        _read_points_csv(out_dir / "truth.csv"),
    )

    manifest = {
        "schema": "bnptrack-manifest/1",
        "config_hash": config_hash(cfg),
        "seed": cfg.seed,
        "mc_runs": cfg.mc_runs,
        "resumed_runs": cfg.mc_runs - len(todo),
        "version": _version_string(),
        "wall_clock_s": round(time.monotonic() - start, 3),
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return ExperimentResult(output_dir=out_dir, scores=scores, baseline=baseline, manifest=manifest)


def _write_cardinality_csv(path: Path, runs: Sequence[ScoreSeries], agg: ScoreSeries) -> None:
    est = np.stack([r.card_est for r in runs])
    true = runs[0].card_true
    match = (est == true[None, :]).mean(axis=0)
    se = (
        est.std(axis=0, ddof=1) / np.sqrt(est.shape[0])
        if est.shape[0] > 1
        else np.zeros(est.shape[1])
    )
    lines = ["# schema: bnptrack-cardinality/1", "step,card_true,card_est_mean,card_est_se,match_rate"]
    for k in range(agg.n_steps):
        lines.append(
            f"{k},{float(true[k])!r},{float(agg.card_est[k])!r},{float(se[k])!r},{float(match[k])!r}"
        )
    _atomic_write(path, "\n".join(lines) + "\n")


def _read_points_csv(path: Path) -> dict[int, list[tuple[int, float, float]]]:
    """Parse a truth/tracks table into id -> [(step, x, y), ...]."""
    series: dict[int, list[tuple[int, float, float]]] = {}
    with open(path) as fh:
        line = fh.readline()
        if not line.startswith("# schema:"):
            raise ValueError(f"{path} is missing its schema header")
        reader = csv.reader(fh)
        header = next(reader)
        for row in reader:
            step, ident = int(row[0]), int(row[1])
            series.setdefault(ident, []).append((step, float(row[2]), float(row[3])))
    return series


# ----------------------------------------------------------------- plots


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    matplotlib.rcParams["svg.hashsalt"] = "bnptrack"
    import matplotlib.pyplot as plt

    return plt


def plot_ospa(
    path: Union[str, Path],
    steps: np.ndarray,
    total: np.ndarray,
    se: Optional[np.ndarray] = None,
    baseline: Optional[np.ndarray] = None,
) -> None:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(steps, total, label="tracker", color="tab:blue")
    if se is not None:
        ax.fill_between(steps, total - se, total + se, alpha=0.3, color="tab:blue", linewidth=0)
    if baseline is not None:
        ax.plot(steps, baseline, label="raw measurements", color="tab:gray", linestyle="--")
    ax.set_xlabel("step")
    ax.set_ylabel("OSPA")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def plot_cardinality(
    path: Union[str, Path],
    steps: np.ndarray,
    card_true: np.ndarray,
    card_est: np.ndarray,
) -> None:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.step(steps, card_true, where="post", label="true", color="black")
    ax.plot(steps, card_est, label="estimated (mean)", color="tab:orange")
    ax.set_xlabel("step")
    ax.set_ylabel("number of objects")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def plot_tracks(
    path: Union[str, Path],
    tracks: Mapping[int, list[tuple[int, float, float]]],
    truth: Optional[Mapping[int, list[tuple[int, float, float]]]] = None,
) -> None:
    plt = _pyplot()
    fig, (ax_x, ax_y) = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    if truth:
        for rows in truth.values():
            steps = [r[0] for r in rows]
            ax_x.plot(steps, [r[1] for r in rows], color="black", linewidth=1)
            ax_y.plot(steps, [r[2] for r in rows], color="black", linewidth=1)
    for rows in tracks.values():
        steps = [r[0] for r in rows]
        ax_x.plot(steps, [r[1] for r in rows], linewidth=0.8, marker=".", markersize=2)
        ax_y.plot(steps, [r[2] for r in rows], linewidth=0.8, marker=".", markersize=2)
    ax_x.set_ylabel("x")
    ax_y.set_ylabel("y")
    ax_y.set_xlabel("step")
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
