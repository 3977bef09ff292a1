"""Scenario configuration files and the two built-in experiments.

A scenario is a JSON document::

    {
      "name": "fig1",
      "coefficients": {"omega": 0.785398..., "a1": {"mean": 3, "harmonics": [...]}, ...},
      "initial": {"x1": 0.5, "x2": 0.7, "x3": 1.0},
      "horizon": 100,
      "integrator": {"rtol": 1e-9, "atol": 1e-11},
      "output": {"samples_per_period": 64}
    }

Coefficients without their own ``omega`` inherit the section-level one.
"""
from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .coefficients import PeriodicCoefficient, check_positive
from .dynamics import COEFFICIENT_NAMES, CoefficientSet
from .exceptions import ConfigError, DomainError
from .integrator import IntegratorConfig

PRESET_PERIOD = math.pi / 4  # coefficients vary as sin(8t), cos(8t)


def _c(mean, sin=0.0, cos=0.0):
    hs = [] if sin == 0.0 and cos == 0.0 else [{"k": 1, "sin": sin, "cos": cos}]
    return {"mean": mean, "harmonics": hs}


_FIG1 = {
    "name": "fig1",
    "coefficients": {
        "omega": PRESET_PERIOD,
        "a1": _c(3.0, sin=1.0),
        "a2": _c(5.5, cos=-0.2),
        "a3": _c(0.4, cos=-0.3),
        "b11": _c(2.0, cos=1.0),
        "b22": _c(5.0, sin=0.4),
        "b12": _c(0.04, sin=-0.02),
        "b21": _c(0.15, cos=-0.1),
        "c1": _c(0.5, sin=-0.4),
        "c2": _c(0.4, sin=-0.3),
        "alpha": _c(0.03, cos=-0.02),
        "beta": _c(0.3, cos=0.2),
        "gamma": _c(2.0, sin=-1.0),
        "d1": _c(3.0, sin=2.0),
        "d2": _c(3.0, sin=-2.0),
    },
    "initial": {"x1": 0.5, "x2": 0.7, "x3": 1.0},
    "horizon": 100.0,
    "integrator": {"rtol": 1e-9, "atol": 1e-11},
    "output": {"samples_per_period": 64},
}

_FIG2 = copy.deepcopy(_FIG1)
_FIG2["name"] = "fig2"
_FIG2["coefficients"]["a3"] = _c(4.0, cos=-0.3)
_FIG2["coefficients"]["beta"] = _c(3.0, cos=0.2)

PRESETS = {"fig1": _FIG1, "fig2": _FIG2}


@dataclass
class ScenarioConfig:
    params: CoefficientSet
    initial: np.ndarray
    horizon: float = 100.0
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    samples_per_period: int = 64
    name: str = "custom"

    @property
    def period(self) -> float:
        return self.params.period

    def to_dict(self) -> dict:
        coeffs = {"omega": self.period}
        coeffs.update(self.params.to_dict())
        return {
            "name": self.name,
            "coefficients": coeffs,
            "initial": dict(zip(("x1", "x2", "x3"), map(float, self.initial))),
            "horizon": self.horizon,
            "integrator": {"rtol": self.integrator.rtol, "atol": self.integrator.atol},
            "output": {"samples_per_period": self.samples_per_period},
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        """Validate and build a scenario; errors name the offending field path."""
        coeffs = data.get("coefficients")
        if not isinstance(coeffs, dict):
            raise ConfigError("section missing or not an object", "coefficients")
        period = coeffs.get("omega")
        built = {}
        for name in COEFFICIENT_NAMES:
            path = f"coefficients.{name}"
            if name not in coeffs:
                raise ConfigError("missing coefficient", path)
            try:
                f = PeriodicCoefficient.from_dict(coeffs[name], period)
            except (DomainError, KeyError, TypeError, ValueError) as exc:
                raise ConfigError(f"invalid coefficient ({exc})", path) from None
            ok, where = check_positive(f)
            if not ok:
                raise ConfigError(f"must be strictly positive (fails near t={where:.6g})", path)
            built[name] = f
        try:
            params = CoefficientSet(**built)
        except DomainError as exc:
            raise ConfigError(str(exc), "coefficients") from None

        init = data.get("initial", {})
        x0 = []
        for key in ("x1", "x2", "x3"):
            v = init.get(key)
            if not isinstance(v, (int, float)) or not math.isfinite(v):
                raise ConfigError("must be a finite number", f"initial.{key}")
            if v < 0:
                raise ConfigError(f"must be nonnegative, got {v}", f"initial.{key}")
            x0.append(float(v))

        horizon = data.get("horizon", 100.0)
        if not isinstance(horizon, (int, float)) or not horizon > 0:
            raise ConfigError(f"must be positive, got {horizon!r}", "horizon")

        icfg = data.get("integrator", {})
        try:
            integrator = IntegratorConfig(rtol=float(icfg.get("rtol", 1e-9)),
                                          atol=float(icfg.get("atol", 1e-11)),
                                          max_steps=int(icfg.get("max_steps", 1_000_000)))
        except DomainError as exc:
            raise ConfigError(str(exc), "integrator") from None

        spp = data.get("output", {}).get("samples_per_period", 64)
        if not isinstance(spp, int) or spp < 1:
            raise ConfigError(f"must be a positive integer, got {spp!r}", "output.samples_per_period")
        return cls(params, np.array(x0), float(horizon), integrator, spp, data.get("name", "custom"))


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict) and k != "harmonics":
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def preset_dict(name: str) -> dict:
    try:
        return copy.deepcopy(PRESETS[name])
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}", "preset") from None


def preset(name: str) -> ScenarioConfig:
    return ScenarioConfig.from_dict(preset_dict(name))


def load(path: str | Path | None = None, preset_name: str | None = None) -> ScenarioConfig:
    """Load a scenario from a JSON file, a preset, or a file layered over a preset."""
    if path is None and preset_name is None:
        raise ConfigError("give a config file or a preset")
    data = preset_dict(preset_name) if preset_name else {}
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        try:
            data = _merge(data, json.loads(text))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}") from None
    return ScenarioConfig.from_dict(data)
