"""Scenario configuration: JSON schema, defaults and validation.

Every validation error names the offending field as a dotted path, e.g.
``laws.k_e``, so the CLI can report it in machine-readable form.
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

PHASES = (
    "Z_IJ",
    "OMEGA_ZI",
    "S_CONSENSUS",
    "J_LLS",
    "J_CONSENSUS",
    "BRAKE",
    "ZC_OBSERVER",
    "VC_M",
    "M_CONSENSUS",
    "DONE",
)

# Durations of the timed schedule (s); starts are 0, 10, 20, 30, 40, 50, 80, 140, 180 and DONE at 200.
DEFAULT_DURATIONS = {
    "Z_IJ": 10.0,
    "OMEGA_ZI": 10.0,
    "S_CONSENSUS": 10.0,
    "J_LLS": 10.0,
    "J_CONSENSUS": 10.0,
    "BRAKE": 30.0,
    "ZC_OBSERVER": 60.0,
    "VC_M": 40.0,
    "M_CONSENSUS": 20.0,
}

DEFAULT_THRESHOLDS = {
    "dij_variance": 1e-3,
    "zi_residual": 1e-6,
    "consensus_spread": 1e-9,
    "J_variance": 2e-4,
    "speed": 0.05,
    "observer_innovation": 1e-3,
    "m_variance": 3e-5,
}


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path
        self.message = message

    def to_json(self) -> dict:
        return {"error": "invalid_config", "field": self.path, "message": self.message}


@dataclass
class LoadConfig:
    m: float = 50.0
    J: float = 86.89
    z_C: list = field(default_factory=lambda: [0.3, -0.2])
    radius: float = 1.5
    contacts: Any = None  # optional explicit body-frame offsets from the CoM
    theta0: float = 0.0
    p_C0: list = field(default_factory=lambda: [0.0, 0.0])
    v_C0: list = field(default_factory=lambda: [0.0, 0.0])
    omega0: float = 0.0


@dataclass
class ScheduleConfig:
    mode: str = "timed"
    durations: dict = field(default_factory=lambda: dict(DEFAULT_DURATIONS))
    thresholds: dict = field(default_factory=lambda: dict(DEFAULT_THRESHOLDS))


@dataclass
class LawConfig:
    k_z: float = 5.0
    k_e: float = 2.0
    b: float = 2.0
    f_star: list = field(default_factory=lambda: [8.0, 0.0])
    switch_period: float = 10.0
    switch_offset: float = 5.0
    freeze_threshold: float = 0.5
    spin_torque: float = 35.0
    spin_duration: float = 2.0
    observer_spin_torque: float = 19.0
    observer_spin_duration: float = 2.0


@dataclass
class EstimationConfig:
    dij_window: int = 50
    kappa: Any = "auto"
    gamma: Any = None
    J_window: float = 3.0
    m_window: float = 5.0
    S_settle: float = 2.0
    monitor_window: float = 1.0
    monitor_threshold: float = 1e-3


@dataclass
class OutputConfig:
    dir: str = "out"
    trace: str = "trace.csv"
    summary: str = "summary.json"


@dataclass
class ScenarioConfig:
    n: int = 10
    topology: Any = "line"
    sigma: float = 0.3
    seed: int = 0
    physics_dt: float = 0.001
    estimator_rate: float = 100.0
    load: LoadConfig = field(default_factory=LoadConfig)
    schedule: ScheduleConfig = field(default_factory=ScheduleConfig)
    laws: LawConfig = field(default_factory=LawConfig)
    estimation: EstimationConfig = field(default_factory=EstimationConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    hygiene_check: bool = False

    # -- derived -------------------------------------------------------
    @property
    def estimator_dt(self) -> float:
        return 1.0 / self.estimator_rate

    @property
    def substeps(self) -> int:
        return int(round(self.estimator_dt / self.physics_dt))

    @property
    def total_time(self) -> float:
        return math.fsum(self.schedule.durations[p] for p in PHASES[:-1])

    @property
    def rounds(self) -> int:
        return int(round(self.total_time * self.estimator_rate))

    @property
    def kappa(self) -> float:
        k = self.estimation.kappa
        if k == "auto":
            # noiseless sensing: trust each axis measurement completely
            return 1.0 if self.sigma == 0 else 0.05
        return float(k)

    def phase_starts(self) -> dict:
        t, out = 0.0, {}
        for p in PHASES[:-1]:
            out[p] = t
            t += self.schedule.durations[p]
        out["DONE"] = t
        return out

    def to_dict(self) -> dict:
        return asdict(self)

    def contact_offsets(self) -> np.ndarray:
        """Body-frame offsets of the contacts from the CoM."""
        if self.load.contacts is not None:
            return np.array(self.load.contacts, dtype=float)
        k = np.arange(self.n)
        ang = 2.0 * np.pi * k / self.n
        ring = self.load.radius * np.column_stack([np.cos(ang), np.sin(ang)])
        ring -= ring.mean(axis=0)
        return ring + np.asarray(self.load.z_C, dtype=float)


_SECTIONS = {
    "load": LoadConfig,
    "schedule": ScheduleConfig,
    "laws": LawConfig,
    "estimation": EstimationConfig,
    "output": OutputConfig,
}


def _num(path, v, positive=False, nonneg=False, integer=False):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(path, f"expected a number, got {v!r}")
    if not math.isfinite(v) and not (v == math.inf and not integer):
        raise ConfigError(path, f"expected a finite number, got {v!r}")
    if integer and int(v) != v:
        raise ConfigError(path, f"expected an integer, got {v!r}")
    if positive and not v > 0:
        raise ConfigError(path, f"must be positive, got {v!r}")
    if nonneg and v < 0:
        raise ConfigError(path, f"must be non-negative, got {v!r}")


def _vec2(path, v):
    if not isinstance(v, (list, tuple)) or len(v) != 2:
        raise ConfigError(path, f"expected a 2-element list, got {v!r}")
    for k, x in enumerate(v):
        _num(f"{path}[{k}]", x)
        if not math.isfinite(x):
            raise ConfigError(f"{path}[{k}]", "must be finite")


def _merge(section_cls, raw: dict, path: str):
    if not isinstance(raw, dict):
        raise ConfigError(path, f"expected an object, got {type(raw).__name__}")
    obj = section_cls()
    known = set(obj.__dataclass_fields__)
    for k, v in raw.items():
        if k not in known:
            raise ConfigError(f"{path}.{k}", "unknown field")
        if k in ("durations", "thresholds"):
            base = dict(getattr(obj, k))
            if not isinstance(v, dict):
                raise ConfigError(f"{path}.{k}", "expected an object")
            for kk in v:
                if kk not in base:
                    raise ConfigError(f"{path}.{k}.{kk}", "unknown entry")
            base.update(v)
            v = base
        setattr(obj, k, copy.deepcopy(v))
    return obj


def from_dict(raw: dict) -> ScenarioConfig:
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "configuration must be a JSON object")
    cfg = ScenarioConfig()
    for k, v in raw.items():
        if k in _SECTIONS:
            setattr(cfg, k, _merge(_SECTIONS[k], v, k))
        elif k in cfg.__dataclass_fields__:
            setattr(cfg, k, copy.deepcopy(v))
        else:
            raise ConfigError(k, "unknown field")
    validate(cfg)
    return cfg


def load_config(path) -> ScenarioConfig:
    p = Path(path)
    try:
        raw = json.loads(p.read_text())
    except FileNotFoundError:
        raise ConfigError("<file>", f"config file not found: {p}") from None
    except json.JSONDecodeError as e:
        raise ConfigError("<file>", f"invalid JSON in {p}: {e}") from None
    return from_dict(raw)


def validate(cfg: ScenarioConfig) -> ScenarioConfig:
    from .graph import build_topology  # local import keeps config importable on its own

    _num("n", cfg.n, integer=True)
    if cfg.n < 2:
        raise ConfigError("n", f"need at least 2 robots, got {cfg.n}")
    _num("sigma", cfg.sigma, nonneg=True)
    _num("seed", cfg.seed, integer=True, nonneg=True)
    _num("physics_dt", cfg.physics_dt, positive=True)
    _num("estimator_rate", cfg.estimator_rate, positive=True)
    ratio = 1.0 / (cfg.estimator_rate * cfg.physics_dt)
    if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
        raise ConfigError("estimator_rate", "estimator period must be a whole number of physics steps")

    L = cfg.load
    _num("load.m", L.m, positive=True)
    _num("load.J", L.J, positive=True)
    _vec2("load.z_C", L.z_C)
    _num("load.radius", L.radius, positive=True)
    _num("load.theta0", L.theta0)
    _vec2("load.p_C0", L.p_C0)
    _vec2("load.v_C0", L.v_C0)
    _num("load.omega0", L.omega0)
    if L.contacts is not None:
        if not isinstance(L.contacts, list) or len(L.contacts) != cfg.n:
            raise ConfigError("load.contacts", f"expected a list of {cfg.n} offsets")
        for i, c in enumerate(L.contacts):
            _vec2(f"load.contacts[{i}]", c)
    try:
        from .planar import LoadParams

        LoadParams(L.m, L.J, cfg.contact_offsets())
    except ValueError as e:
        raise ConfigError("load.contacts", str(e)) from None

    try:
        build_topology(cfg.topology, cfg.n)
    except (ValueError, TypeError) as e:
        raise ConfigError("topology", str(e)) from None

    S = cfg.schedule
    if S.mode not in ("timed", "adaptive"):
        raise ConfigError("schedule.mode", f"expected 'timed' or 'adaptive', got {S.mode!r}")
    for p in PHASES[:-1]:
        if p not in S.durations:
            raise ConfigError(f"schedule.durations.{p}", "missing")
        _num(f"schedule.durations.{p}", S.durations[p], positive=True)
        if not math.isfinite(S.durations[p]):
            raise ConfigError(f"schedule.durations.{p}", "must be finite")
    for k, v in S.thresholds.items():
        _num(f"schedule.thresholds.{k}", v, positive=True)

    W = cfg.laws
    for k in ("k_e", "b", "freeze_threshold", "switch_period", "spin_duration", "observer_spin_duration"):
        _num(f"laws.{k}", getattr(W, k), positive=True)
    _num("laws.k_z", W.k_z)
    if W.k_z == 0:
        raise ConfigError("laws.k_z", "must be non-zero")
    for k in ("switch_offset", "spin_torque", "observer_spin_torque"):
        _num(f"laws.{k}", getattr(W, k))
    _vec2("laws.f_star", W.f_star)
    if math.hypot(*W.f_star) == 0:
        raise ConfigError("laws.f_star", "must be non-zero")

    E = cfg.estimation
    _num("estimation.dij_window", E.dij_window, positive=True, integer=True)
    if E.kappa != "auto":
        _num("estimation.kappa", E.kappa, positive=True)
        if E.kappa > 1:
            raise ConfigError("estimation.kappa", "must be in (0, 1]")
    if E.gamma is not None:
        _num("estimation.gamma", E.gamma, positive=True)
        g = build_topology(cfg.topology, cfg.n)
        if not E.gamma * g.max_degree < 1:
            raise ConfigError("estimation.gamma", f"gain times max degree must be below 1 (max degree {g.max_degree})")
    for k in ("J_window", "m_window", "S_settle", "monitor_window", "monitor_threshold"):
        _num(f"estimation.{k}", getattr(E, k), positive=True)

    O = cfg.output
    for k in ("dir", "trace", "summary"):
        if not isinstance(getattr(O, k), str) or not getattr(O, k):
            raise ConfigError(f"output.{k}", "expected a non-empty string")
    if not isinstance(cfg.hygiene_check, bool):
        raise ConfigError("hygiene_check", "expected a boolean")
    return cfg
