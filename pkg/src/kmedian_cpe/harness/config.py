"""Experiment configuration: dataclass, presets and INI-style files.

Files are read with :mod:`configparser`. Section names are free-form and only
group keys; every key must be an :class:`ExperimentConfig` field name.
"""

from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Optional, Tuple

from ..recovery import Algorithm
from ..signal_models import ModelKind, ParametricModel, build_grid


class Experiment(str, Enum):
    SEPARATION = "SeparationSweep"
    DECAY = "DecaySweep"
    COMPRESSION = "CompressionSweep"
    SNR = "SnrSweep"
    SINGLE = "Single"


class DecayAxis(str, Enum):
    F_A = "f_a"
    R = "r"
    T = "t"


# stable integer codes used when deriving per-trial seeds
EXPERIMENT_CODES = {
    Experiment.SEPARATION: 1,
    Experiment.DECAY: 2,
    Experiment.COMPRESSION: 3,
    Experiment.SNR: 4,
    Experiment.SINGLE: 5,
}

_ALLOWED_ALGORITHMS = {Algorithm.CSP, Algorithm.BSP, Algorithm.KMEDIAN_ONLY}


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: Experiment
    axis: Tuple[float, ...]
    # model
    model: ModelKind = ModelKind.CHIRP_TDE
    N: int = 500
    T: float = 1e-6
    f_c: float = 1e6
    f_a: float = 20e6
    f_s: float = 50e6
    window: str = "hann"
    # grid
    theta_min: float = 0.0
    theta_max: float = 10e-6
    delta: float = 0.02e-6
    # scene
    K: int = 4
    zeta: float = 0.2e-6
    epsilon: float = 1e-6
    r: float = 1.0
    magnitude_mode: str = "unit"
    complex_phase: bool = True
    on_grid: bool = True
    # measurement
    operator: str = "gaussian"
    kappa: float = 1.0
    snr_db: float = float("inf")
    unit_rate_identity: bool = False
    # recovery
    algorithms: Tuple[Algorithm, ...] = (Algorithm.CSP, Algorithm.BSP)
    t: float = 0.0
    csp_t: Optional[float] = None
    nu: float = 0.001
    restarts: int = 5
    max_iter: int = 100
    max_outer_iter: int = 20
    # decay sweep
    decay_axis: DecayAxis = DecayAxis.F_A
    zeta_lo: float = 0.02e-6
    zeta_hi: float = 2e-6
    fit_floor: float = 0.0
    # run
    trials: int = 100
    seed: int = 0
    record_runtime: bool = False

    def __post_init__(self):
        object.__setattr__(self, "experiment", Experiment(self.experiment))
        object.__setattr__(self, "model", ModelKind(self.model))
        object.__setattr__(self, "decay_axis", DecayAxis(self.decay_axis))
        object.__setattr__(self, "axis", tuple(float(a) for a in self.axis))
        object.__setattr__(self, "algorithms",
                           tuple(Algorithm(a) for a in self.algorithms))
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if not self.axis:
            raise ValueError("sweep axis must be nonempty")
        if self.K < 1:
            raise ValueError("K must be positive")
        if not self.algorithms:
            raise ValueError("at least one algorithm is required")
        bad = set(self.algorithms) - _ALLOWED_ALGORITHMS
        if bad:
            raise ValueError(f"unsupported algorithms {sorted(a.value for a in bad)}")
        if not 0.0 <= self.nu <= 1.0:
            raise ValueError("nu must lie in [0, 1]")
        if self.t < 0 or (self.csp_t is not None and self.csp_t < 0):
            raise ValueError("thresholds must be nonnegative")
        if self.r < 1:
            raise ValueError("dynamic range r must be >= 1")
        if self.operator not in ("gaussian", "subsample"):
            raise ValueError(f"unknown operator {self.operator!r}")
        if self.experiment == Experiment.COMPRESSION and any(not 0 < k <= 1 for k in self.axis):
            raise ValueError("compression rates must lie in (0, 1]")
        if not 0 < self.kappa <= 1:
            raise ValueError("kappa must lie in (0, 1]")
        if self.experiment == Experiment.DECAY and self.model != ModelKind.CHIRP_TDE:
            raise ValueError("the decay sweep varies the chirp and needs the chirp model")
        if self.experiment == Experiment.DECAY and not 0 < self.zeta_lo < self.zeta_hi:
            raise ValueError("need 0 < zeta_lo < zeta_hi")
        # building the objects validates model and grid parameters
        self.build_model()
        self.build_grid()

    @property
    def threshold_for_csp(self) -> float:
        """Threshold used by CSP and the K-median estimator (``csp_t`` overrides ``t``)."""
        return self.t if self.csp_t is None else self.csp_t

    def build_model(self, **overrides) -> ParametricModel:
        if self.model == ModelKind.FOURIER_FE:
            return ParametricModel.fourier(N=self.N)
        kw = dict(N=self.N, T=self.T, f_c=self.f_c, f_a=self.f_a, f_s=self.f_s,
                  window=self.window)
        kw.update(overrides)
        return ParametricModel.chirp(**kw)

    def build_grid(self):
        return build_grid(self.theta_min, self.theta_max, self.delta)

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)


_TDE = dict(model=ModelKind.CHIRP_TDE, N=500, theta_min=0.0, theta_max=10e-6, epsilon=1e-6)
_FE = dict(model=ModelKind.FOURIER_FE, N=1000, theta_min=0.0, theta_max=500.0, epsilon=0.0)


def _fe_tde(model: str) -> dict:
    if model in ("tde", ModelKind.CHIRP_TDE):
        return dict(_TDE)
    if model in ("fe", ModelKind.FOURIER_FE):
        return dict(_FE)
    raise ValueError(f"unknown model {model!r} (use 'tde' or 'fe')")


def preset(experiment, model: str = "tde", decay_axis: str = "f_a") -> ExperimentConfig:
    """Desk-scale default configuration for one experiment and model."""
    experiment = Experiment(experiment)
    base = _fe_tde(model)
    fe = base["model"] == ModelKind.FOURIER_FE

    if experiment == Experiment.SEPARATION:
        base.update(algorithms=(Algorithm.KMEDIAN_ONLY,), on_grid=False,
                    complex_phase=False, t=0.0, restarts=20)
        if fe:
            base.update(delta=0.05, epsilon=50.0, axis=tuple(float(z) for z in range(35, 71, 5)))
        else:
            base.update(delta=0.005e-6, axis=tuple(k * 0.005e-6 for k in range(1, 21)))
        return ExperimentConfig(experiment=experiment, **base)

    if experiment == Experiment.DECAY:
        if fe:
            raise ValueError("the decay sweep is defined for the chirp model only")
        base.update(delta=0.02e-6, algorithms=(Algorithm.KMEDIAN_ONLY,), on_grid=False,
                    complex_phase=False, magnitude_mode="range", restarts=5,
                    decay_axis=DecayAxis(decay_axis), zeta_lo=0.02e-6, zeta_hi=2.6e-6)
        axis = DecayAxis(decay_axis)
        if axis == DecayAxis.F_A:
            base.update(axis=tuple(x * 1e6 for x in (2, 5, 8, 11, 14, 17, 20)), r=1.0, t=0.5)
        elif axis == DecayAxis.R:
            base.update(axis=(1.0, 1.5, 2.0, 2.5, 3.0, 4.0), f_a=10e6, t=0.9)
        else:
            base.update(axis=(0.1, 0.25, 0.4, 0.55, 0.7, 0.85), f_a=10e6, r=1.0)
        return ExperimentConfig(experiment=experiment, **base)

    if fe:
        base.update(delta=0.5, zeta=5.0, nu=0.2, t=0.0, csp_t=0.4)
    else:
        base.update(delta=0.02e-6, zeta=0.2e-6, nu=0.001, t=0.0)
    base.update(algorithms=(Algorithm.CSP, Algorithm.BSP), on_grid=True)
    if experiment == Experiment.COMPRESSION:
        base.update(axis=(0.4, 0.7, 1.0))
    elif experiment == Experiment.SNR:
        base.update(axis=(10.0, 30.0, 50.0), kappa=0.4)
    else:
        base.update(axis=(base["zeta"],), trials=1)
    return ExperimentConfig(experiment=experiment, **base)


_FIELDS = {f.name: f for f in dataclasses.fields(ExperimentConfig)}


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_value(name: str, text: str):
    if name in ("axis",):
        return tuple(float(x) for x in text.replace(",", " ").split())
    if name == "algorithms":
        return tuple(x.strip() for x in text.replace(",", " ").split())
    if name == "csp_t":
        return None if text.strip().lower() in ("", "none") else float(text)
    default = _FIELDS[name].default
    if isinstance(default, bool):
        return _parse_bool(text)
    if isinstance(default, int):
        return int(text)
    if isinstance(default, float):
        return float(text)
    return text.strip()


def parse_config(text: str) -> ExperimentConfig:
    """Build a configuration from INI text.

    A ``preset`` key (with optional ``preset_model`` and ``preset_axis``)
    starts from :func:`preset`; other keys override fields.
    """
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    parser.read_string(text)
    values = {}
    for section in parser.sections():
        for key, raw in parser.items(section):
            if key in values:
                raise ValueError(f"key {key!r} given twice")
            values[key] = raw
    start = {}
    if "preset" in values:
        cfg = preset(values.pop("preset"), values.pop("preset_model", "tde"),
                     values.pop("preset_axis", "f_a"))
        start = {f: getattr(cfg, f) for f in _FIELDS}
    unknown = set(values) - set(_FIELDS)
    if unknown:
        raise ValueError(f"unknown configuration keys: {sorted(unknown)}")
    start.update({k: _parse_value(k, v) for k, v in values.items()})
    missing = {"experiment", "axis"} - set(start)
    if missing:
        raise ValueError(f"missing required keys: {sorted(missing)}")
    return ExperimentConfig(**start)


def load_config(path) -> ExperimentConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"))


def dump_config(cfg: ExperimentConfig) -> str:
    """INI text that :func:`parse_config` maps back to ``cfg``."""
    lines = ["[experiment]"]
    for name in _FIELDS:
        value = getattr(cfg, name)
        if isinstance(value, Enum):
            text = value.value
        elif name == "axis":
            text = ", ".join(repr(v) for v in value)
        elif name == "algorithms":
            text = ", ".join(a.value for a in value)
        elif isinstance(value, bool):
            text = "true" if value else "false"
        elif isinstance(value, str):
            text = value
        elif value is None:
            text = "none"
        else:
            text = repr(value)
        lines.append(f"{name} = {text}")
    return "\n".join(lines) + "\n"
