"""Run manifests: preset loading, overrides, sweep axes and scenario resolution.

A manifest is a JSON document::

    {
      "name": "feasibility-baseline",
      "base": "reported-device",          # optional preset to inherit from
      "scenario": {...},                  # see SCENARIO_KEYS
      "outputs": ["G0", "G"],             # optional column filter
      "sweep": [{"path": "scenario.alpha0_sq", "start": 1, "stop": 1e4,
                 "scale": "log", "points": 5}],
      "time_series": {"dt_s": ..., "n_steps": ...},
      "oracle": {"n_trajectories": ..., "dt_s": ..., "t_final_s": ..., "burn_in_s": ...},
      "tolerances": {...},
      "require_steady_state": true,
      "seed": 1234
    }

Frequencies and rates take either a ``_rad_per_s`` or a ``_Hz`` suffix; the
latter means ``2*pi x`` the number.  Inheritance deep-merges the child over
the base, and a ``null`` value deletes the inherited key.
"""

from __future__ import annotations

import copy
import itertools
import json
import math
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np

from .params import (
    EomDeviceParams, InvalidParameterError, ModeSpec, PumpConfig, angular_frequency,
    angular_from_wavelength, coupling_rate, detuning_for_mu, device_params_from_dict,
    pump_photon_number,
)
from .systems import Regime, ScenarioConfig

__all__ = ["ConfigError", "RunManifest", "SweepAxis", "ResolvedScenario", "load_preset",
           "apply_override", "resolve_scenario", "sweep_points", "preset_names"]

MAX_SWEEP_AXES = 2

TOP_KEYS = {"name", "base", "description", "scenario", "outputs", "sweep", "time_series",
            "oracle", "tolerances", "require_steady_state", "seed"}
SCENARIO_KEYS = {
    "regime", "g_rad_per_s", "g_Hz", "device", "optical", "microwave", "pump",
    "alpha_minus_sq", "alpha_plus_sq", "alpha0_sq", "alpha_sq", "cooperativity",
    "theta_plus_rad", "theta_minus_rad", "delta_rad_per_s", "delta_Hz", "mu",
    "include_microwave_bath", "sideband_occupations",
}
MODE_KEYS = {"omega_rad_per_s", "omega_Hz", "wavelength_m", "gamma_rad_per_s", "gamma_Hz",
             "bath_temperature_K", "occupation"}
PUMP_KEYS = {"power_W", "wavelength_m", "omega_rad_per_s", "omega_Hz", "detuning_rad_per_s",
             "detuning_Hz", "mu", "phase_rad"}
DEVICE_KEYS = {"n", "r_m_per_V", "l_m", "d_m", "tau_s", "C_F", "omega_a_rad_per_s",
               "omega_b_rad_per_s", "omega_b_Hz", "wavelength_m", "overlap_factor"}
TIME_SERIES_KEYS = {"dt_s", "n_steps"}
ORACLE_KEYS = {"n_trajectories", "dt_s", "t_final_s", "burn_in_s", "scheme"}
SWEEP_KEYS = {"path", "start", "stop", "scale", "points"}

_SCHEMA = {
    "scenario": SCENARIO_KEYS,
    "scenario.optical": MODE_KEYS,
    "scenario.microwave": MODE_KEYS,
    "scenario.pump": PUMP_KEYS,
    "scenario.device": DEVICE_KEYS,
    "time_series": TIME_SERIES_KEYS,
    "oracle": ORACLE_KEYS,
    "tolerances": None,  # free-form
}


class ConfigError(ValueError):
    """Manifest validation failure; ``field`` names the offending path."""

    def __init__(self, message: str, field: str | None = None):
        self.field = field
        super().__init__(f"{field}: {message}" if field else message)


def preset_names() -> list[str]:
    root = resources.files("cavity_eo") / "presets"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def _read_json(text: str, origin: str) -> dict:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}",
                          origin) from None
    if not isinstance(doc, dict):
        raise ConfigError("top level must be a JSON object", origin)
    return doc


def _merge(base: dict, child: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in child.items():
        if v is None:
            out.pop(k, None)
        elif isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _load_raw(name_or_path: str) -> tuple[dict, str]:
    path = Path(name_or_path)
    if path.suffix == ".json" and path.exists():
        return _read_json(path.read_text(), str(path)), str(path)
    res = resources.files("cavity_eo") / "presets" / f"{name_or_path}.json"
    if not res.is_file():
        raise ConfigError(f"no preset or file named {name_or_path!r} "
                          f"(available: {', '.join(preset_names())})", "--preset")
    return _read_json(res.read_text(), f"presets/{name_or_path}.json"), name_or_path


def load_preset(name_or_path: str, _seen: tuple = ()) -> dict:
    """Load a preset by name (bundled) or JSON path, resolving ``base`` chains."""
    if name_or_path in _seen:
        raise ConfigError(f"circular base chain {' -> '.join(_seen + (name_or_path,))}", "base")
    doc, origin = _load_raw(name_or_path)
    base = doc.pop("base", None)
    if base is not None:
        doc = _merge(load_preset(base, _seen + (name_or_path,)), doc)
    doc.setdefault("name", Path(origin).stem if origin.endswith(".json") else origin)
    validate_keys(doc)
    return doc


def validate_keys(doc: dict) -> None:
    unknown = set(doc) - TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown keys {sorted(unknown)}", "<manifest>")
    for block, allowed in _SCHEMA.items():
        node = _get(doc, block, missing=None)
        if node is None or allowed is None:
            continue
        if not isinstance(node, dict):
            raise ConfigError("must be an object", block)
        bad = set(node) - allowed
        # sub-objects are validated as their own blocks
        bad -= {k for k in bad if f"{block}.{k}" in _SCHEMA}
        if bad:
            raise ConfigError(f"unknown keys {sorted(bad)}; allowed: {sorted(allowed)}", block)


def _get(doc: dict, path: str, missing: Any = KeyError):
    node: Any = doc
    for part in path.split("."):
        if not isinstance(node, dict) or part not in node:
            if missing is KeyError:
                raise ConfigError("path does not exist", path)
            return missing
        node = node[part]
    return node


def _check_path(path: str) -> None:
    parts = path.split(".")
    block, leaf = ".".join(parts[:-1]), parts[-1]
    if not block:
        if leaf not in TOP_KEYS:
            raise ConfigError("not a manifest key", path)
        return
    allowed = _SCHEMA.get(block, ())
    if allowed is None:
        return
    if leaf not in allowed:
        raise ConfigError(f"unknown parameter; {block} accepts {sorted(allowed)}", path)


def apply_override(doc: dict, assignment: str) -> dict:
    """Apply ``path.to.key=value`` (value parsed as JSON, else kept as a string)."""
    if "=" not in assignment:
        raise ConfigError("override must look like path=value", assignment)
    path, raw = assignment.split("=", 1)
    path = path.strip()
    _check_path(path)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    out = copy.deepcopy(doc)
    node = out
    parts = path.split(".")
    for part in parts[:-1]:
        node = node.setdefault(part, {})
        if not isinstance(node, dict):
            raise ConfigError("cannot descend into a non-object", path)
    if value is None:
        node.pop(parts[-1], None)
    else:
        node[parts[-1]] = value
    return out


@dataclass(frozen=True)
class SweepAxis:
    path: str
    values: tuple[float, ...]


def parse_sweep(doc: dict) -> list[SweepAxis]:
    axes = doc.get("sweep") or []
    if not isinstance(axes, list):
        raise ConfigError("must be a list of axes", "sweep")
    if len(axes) > MAX_SWEEP_AXES:
        raise ConfigError(f"at most {MAX_SWEEP_AXES} sweep axes are supported", "sweep")
    out = []
    for k, ax in enumerate(axes):
        where = f"sweep[{k}]"
        if not isinstance(ax, dict) or set(ax) - SWEEP_KEYS or "path" not in ax:
            raise ConfigError(f"axis needs keys {sorted(SWEEP_KEYS)}", where)
        _check_path(ax["path"])
        try:
            start, stop, points = float(ax["start"]), float(ax["stop"]), int(ax["points"])
        except (KeyError, TypeError, ValueError):
            raise ConfigError("start, stop and points must be numbers", where) from None
        scale = ax.get("scale", "linear")
        if points < 1:
            raise ConfigError("points must be >= 1", where)
        if scale == "linear":
            vals = np.linspace(start, stop, points)
        elif scale == "log":
            if start <= 0 or stop <= 0:
                raise ConfigError("log sweep needs positive bounds", where)
            vals = np.geomspace(start, stop, points)
        else:
            raise ConfigError("scale must be 'linear' or 'log'", where)
        out.append(SweepAxis(ax["path"], tuple(float(v) for v in vals)))
    return out


def sweep_points(doc: dict) -> list[tuple[tuple[float, ...], dict]]:
    """Every grid point as (swept values, manifest with those values applied), in row-major order."""
    axes = parse_sweep(doc)
    if not axes:
        return [((), doc)]
    points = []
    for combo in itertools.product(*(ax.values for ax in axes)):
        d = doc
        for ax, v in zip(axes, combo):
            d = apply_override(d, f"{ax.path}={json.dumps(v)}")
        points.append((combo, d))
    return points


@dataclass(frozen=True)
class ResolvedScenario:
    config: ScenarioConfig
    alpha_sq: float  # pump photon number of the regime's driven field
    pump: PumpConfig | None
    device: EomDeviceParams | None


def _freq(node: dict, stem: str, where: str, required: bool = True) -> float | None:
    rad, hz = f"{stem}_rad_per_s", f"{stem}_Hz"
    if rad in node and hz in node:
        raise ConfigError(f"give only one of {rad} / {hz}", where)
    if rad in node:
        return _num(node[rad], f"{where}.{rad}")
    if hz in node:
        return angular_frequency(_num(node[hz], f"{where}.{hz}"))
    if required:
        raise ConfigError(f"missing {rad} (or {hz})", where)
    return None


def _num(v, where: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"expected a number, got {v!r}", where)
    return float(v)


def _mode(node: dict, where: str) -> ModeSpec:
    if "wavelength_m" in node:
        omega = angular_from_wavelength(_num(node["wavelength_m"], f"{where}.wavelength_m"))
    else:
        omega = _freq(node, "omega", where)
    gamma = _freq(node, "gamma", where)
    if "occupation" in node and "bath_temperature_K" in node:
        raise ConfigError("give only one of occupation / bath_temperature_K", where)
    if "occupation" in node:
        return ModeSpec.with_occupation(omega, gamma, _num(node["occupation"], f"{where}.occupation"))
    return ModeSpec(omega, gamma, _num(node.get("bath_temperature_K", 0.0), f"{where}.bath_temperature_K"))


_ALPHA_KEY = {
    Regime.COOLING: "alpha_minus_sq",
    Regime.PARAMETRIC_AMP: "alpha_plus_sq",
    Regime.PARASITIC_THREE_MODE: "alpha0_sq",
    Regime.BACK_ACTION_EVADING: "alpha_sq",
}


def resolve_scenario(doc: dict) -> ResolvedScenario:
    """Turn the ``scenario`` block of a manifest into a :class:`ScenarioConfig`.

    The driven-field photon number comes from, in priority order, an explicit
    ``alpha_*_sq`` key, a target ``cooperativity`` 4g^2|alpha|^2/(gamma_a gamma_b),
    or the ``pump`` block through the Lorentzian photon-number formula.
    """
    sc = doc.get("scenario")
    if not isinstance(sc, dict):
        raise ConfigError("missing scenario block", "scenario")
    try:
        return _resolve(sc)
    except InvalidParameterError as exc:
        raise ConfigError(str(exc), "scenario") from None


def _resolve(sc: dict) -> ResolvedScenario:
    try:
        regime = Regime(sc.get("regime"))
    except ValueError:
        raise ConfigError(f"regime must be one of {[r.value for r in Regime]}",
                          "scenario.regime") from None
    for block in ("optical", "microwave"):
        if not isinstance(sc.get(block), dict):
            raise ConfigError("missing mode block", f"scenario.{block}")
    optical = _mode(sc["optical"], "scenario.optical")
    microwave = _mode(sc["microwave"], "scenario.microwave")

    device = None
    if "device" in sc:
        try:
            device = device_params_from_dict(sc["device"])
        except (InvalidParameterError, TypeError, ValueError) as exc:
            raise ConfigError(str(exc), "scenario.device") from None
    g = _freq(sc, "g", "scenario", required=False)
    if g is None:
        if device is None:
            raise ConfigError("need g_rad_per_s, g_Hz or a device block", "scenario")
        g = coupling_rate(device)

    ga, gb = optical.gamma, microwave.gamma
    pump = None
    pump_detuning = None
    if isinstance(sc.get("pump"), dict):
        p = sc["pump"]
        where = "scenario.pump"
        if "wavelength_m" in p:
            omega_p = angular_from_wavelength(_num(p["wavelength_m"], f"{where}.wavelength_m"))
        else:
            omega_p = _freq(p, "omega", where)
        if "mu" in p:
            pump_detuning = detuning_for_mu(_num(p["mu"], f"{where}.mu"), ga)
        else:
            pump_detuning = _freq(p, "detuning", where, required=False) or 0.0
        pump = PumpConfig(_num(p.get("power_W", 0.0), f"{where}.power_W"), omega_p, pump_detuning,
                          _num(p.get("phase_rad", 0.0), f"{where}.phase_rad"))

    key = _ALPHA_KEY[regime]
    if key in sc:
        alpha_sq = _num(sc[key], f"scenario.{key}")
    elif "cooperativity" in sc:
        if g == 0:
            raise ConfigError("cooperativity needs g > 0", "scenario.cooperativity")
        alpha_sq = _num(sc["cooperativity"], "scenario.cooperativity") * ga * gb / (4.0 * g**2)
    elif pump is not None:
        alpha_sq = pump_photon_number(pump, ga)
    else:
        raise ConfigError(f"need {key}, cooperativity or a pump block", "scenario")
    if alpha_sq < 0:
        raise ConfigError("photon number must be >= 0", f"scenario.{key}")
    amp = math.sqrt(alpha_sq)

    delta = 0.0
    if regime is Regime.PARASITIC_THREE_MODE:
        if "mu" in sc:
            delta = detuning_for_mu(_num(sc["mu"], "scenario.mu"), ga)
        else:
            delta = _freq(sc, "delta", "scenario", required=False)
            if delta is None:
                if pump_detuning is None:
                    raise ConfigError("parasitic regime needs mu, delta or a detuned pump", "scenario")
                delta = pump_detuning
        if delta == 0:
            raise ConfigError("parasitic regime needs a nonzero detuning", "scenario.delta_rad_per_s")

    side = sc.get("sideband_occupations", [0.0, 0.0])
    if not (isinstance(side, list) and len(side) == 2):
        raise ConfigError("must be a two-element list", "scenario.sideband_occupations")
    kwargs = dict(
        regime=regime, g=g, optical=optical, microwave=microwave,
        theta_plus=_num(sc.get("theta_plus_rad", 0.0), "scenario.theta_plus_rad"),
        theta_minus=_num(sc.get("theta_minus_rad", 0.0), "scenario.theta_minus_rad"),
        delta=delta,
        include_microwave_bath=bool(sc.get("include_microwave_bath", False)),
        sideband_occupations=(float(side[0]), float(side[1])),
    )
    if regime is Regime.COOLING:
        kwargs["alpha_minus"] = amp
    elif regime is Regime.PARAMETRIC_AMP:
        kwargs["alpha_plus"] = amp
    elif regime is Regime.PARASITIC_THREE_MODE:
        kwargs["alpha0"] = amp
    else:
        kwargs["alpha_plus"] = kwargs["alpha_minus"] = amp
    return ResolvedScenario(ScenarioConfig(**kwargs), alpha_sq, pump, device)


@dataclass(frozen=True)
class RunManifest:
    """A validated manifest plus the command it is run under."""

    command: str
    doc: dict
    out_dir: Path
    seed: int
    jobs: int = 1
    fmt: str = "csv"

    @property
    def name(self) -> str:
        # file-name safe: dots would be taken for a suffix
        return re.sub(r"[^A-Za-z0-9_-]+", "_", str(self.doc.get("name", "run"))) or "run"

    @property
    def outputs(self) -> list[str] | None:
        outs = self.doc.get("outputs")
        return list(outs) if outs else None
