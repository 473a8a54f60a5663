"""Scenario files: flat ``key = value`` text with typed validation.

Every key is optional except ``name`` and ``gamma``; exactly one of
``delta_v`` (volume jump) and ``delta`` (velocity jump) selects the shock
strength.  Any key can be overridden from the environment as
``SHOCKSTAB_<KEY>`` (upper case, e.g. ``SHOCKSTAB_N_CELLS=16384``).
"""
from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

from .dynamics import PerturbationSpec, SHAPES, SimConfig
from .errors import ConfigError, ShockStabError
from .hugoniot import delta_v_from_delta
from .model import ModelParams

ENV_PREFIX = "SHOCKSTAB_"
CHECKS = ("identity", "contraction", "poincare", "probes")
SWEEPABLE = ("gamma", "delta_v", "delta", "amplitude_v", "amplitude_u", "width", "n_cells", "v_plus")
_SECTION = "scenario"


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _float_list(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.replace(",", " ").split())


def _checks(text: str) -> tuple[str, ...]:
    items = tuple(x.strip() for x in text.split(",") if x.strip())
    bad = [x for x in items if x not in CHECKS]
    if bad:
        raise ValueError(f"unknown checks {bad}; choose from {list(CHECKS)}")
    return items


# key -> (parser, default, help); default None means "required" or "unset"
KEYS = {
    "name": (str, None, "scenario name, nonempty"),
    "gamma": (float, None, "adiabatic exponent > 1"),
    "b": (float, 1.0, "pressure coefficient in p = b v^-gamma"),
    "mu": (float, 1.0, "viscosity; only the normalized value 1 is supported"),
    "v_plus": (float, 1.0, "right specific volume"),
    "u_plus": (float, 0.0, "right velocity"),
    "delta_v": (float, None, "volume jump v_+ - v_- (0.1 when delta is unset)"),
    "delta": (float, None, "velocity jump u_- - u_+ (alternative to delta_v)"),
    "x_min": (float, -400.0, "left end of the frame window"),
    "x_max": (float, 400.0, "right end of the frame window"),
    "n_cells": (int, 8192, "number of grid cells"),
    "cfl": (float, 0.5, "CFL number in (0, 1]"),
    "t_end": (float, 200.0, "final time"),
    "tick_interval": (float, 1.0, "diagnostics cadence"),
    "snapshot_interval": (float, 50.0, "snapshot cadence (0 disables)"),
    "perturbation_shape": (str, "gaussian-bump", f"one of {', '.join(SHAPES)}"),
    "amplitude_v": (float, 0.0043, "perturbation amplitude in v"),
    "amplitude_u": (float, 0.0, "perturbation amplitude in u"),
    "center": (float, 0.0, "perturbation center"),
    "width": (float, 4.0, "perturbation width"),
    "seed": (int, 0, "seed for randomized probes (u64)"),
    "checks": (_checks, CHECKS, "enabled checks, comma separated"),
    "identity_tol": (float, 1e-7, "max absolute energy identity residual"),
    "contraction_slack": (float, 1e-3, "allowed one-tick increase of aRE, relative to its initial value"),
    "well_balanced": (_bool, True, "evolve the perturbation around the discrete profile"),
    "profile_samples": (int, 4097, "samples for the standalone profile command"),
    "sweep_param": (str, None, f"parameter swept by the sweep command ({', '.join(SWEEPABLE)})"),
    "sweep_values": (_float_list, (), "values for sweep_param, comma separated"),
}


@dataclass(frozen=True)
class Scenario:
    name: str
    config: SimConfig
    values: dict = field(compare=False, repr=False)
    checks: tuple = CHECKS
    identity_tol: float = 1e-7
    contraction_slack: float = 1e-3
    profile_samples: int = 4097
    sweep_param: str | None = None
    sweep_values: tuple = ()
    out_dir: str | None = None

    @property
    def seed(self) -> int:
        return self.config.seed


def help_text() -> str:
    lines = []
    for k, (_, default, doc) in KEYS.items():
        if k in ("name", "gamma"):
            lines.append(f"  {k:<19} {doc} (required)")
        elif default in (None, ()):
            lines.append(f"  {k:<19} {doc}")
        else:
            lines.append(f"  {k:<19} {doc} (default {_emit_value(default)})")
    return "\n".join(lines)


def _emit_value(val) -> str:
    if val is None:
        return ""
    if isinstance(val, bool):
        return "true" if val else "false"
    if isinstance(val, float):
        return repr(val)
    if isinstance(val, tuple):
        return ", ".join(_emit_value(x) for x in val)
    return str(val)


def _read_raw(text: str, source: str) -> dict[str, str]:
    cp = configparser.ConfigParser(interpolation=None, strict=True, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(f"[{_SECTION}]\n" + text, source=source)
    except configparser.ParsingError as exc:
        lineno, line = exc.errors[0]
        raise ConfigError(f"{source}: line {lineno - 1}: cannot parse {line!r}") from None
    except configparser.DuplicateOptionError as exc:
        raise ConfigError(f"{source}: line {exc.lineno - 1}: duplicate key {exc.option!r}") from None
    except configparser.DuplicateSectionError as exc:
        raise ConfigError(f"{source}: line {exc.lineno - 1}: sections are not allowed") from None
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from None
    extra = [s for s in cp.sections() if s != _SECTION]
    if extra:
        raise ConfigError(f"{source}: sections are not allowed (found [{extra[0]}])")
    return dict(cp[_SECTION])


def _env_overrides(env) -> dict[str, str]:
    out = {}
    for k in KEYS:
        val = env.get(ENV_PREFIX + k.upper())
        if val is not None:
            out[k] = val
    return out


def build(raw: dict[str, str], source: str = "<scenario>") -> Scenario:
    """Validate raw string values into a :class:`Scenario`."""
    unknown = sorted(set(raw) - set(KEYS))
    if unknown:
        raise ConfigError(f"{source}: unknown key {unknown[0]!r}")
    vals = {}
    for k, (parse, default, _) in KEYS.items():
        if k in raw and raw[k].strip() != "":
            try:
                vals[k] = parse(raw[k].strip())
            except ValueError as exc:
                raise ConfigError(f"{source}: {k}: {exc}") from None
        else:
            vals[k] = default
    for k in ("name", "gamma"):
        if vals[k] in (None, ""):
            raise ConfigError(f"{source}: {k}: required key is missing")
    if vals["delta_v"] is not None and vals["delta"] is not None:
        raise ConfigError(f"{source}: delta: give only one of delta_v and delta")
    if vals["mu"] != 1.0:
        raise ConfigError(f"{source}: mu: only mu = 1 is supported")
    if vals["perturbation_shape"] not in SHAPES:
        raise ConfigError(f"{source}: perturbation_shape: expected one of {SHAPES}")
    if vals["seed"] < 0 or vals["seed"] >= 2 ** 64:
        raise ConfigError(f"{source}: seed: must be an unsigned 64-bit integer")
    if vals["sweep_param"] is not None and vals["sweep_param"] not in SWEEPABLE:
        raise ConfigError(f"{source}: sweep_param: expected one of {SWEEPABLE}")
    if vals["sweep_param"] is not None and not vals["sweep_values"]:
        raise ConfigError(f"{source}: sweep_values: required when sweep_param is set")
    for k in ("identity_tol", "contraction_slack"):
        if not vals[k] >= 0.0:
            raise ConfigError(f"{source}: {k}: must be nonnegative")
    if vals["profile_samples"] < 64:
        raise ConfigError(f"{source}: profile_samples: must be >= 64")
    try:
        params = ModelParams(gamma=vals["gamma"], b=vals["b"], mu=vals["mu"])
    except ShockStabError as exc:
        raise ConfigError(f"{source}: {str(exc).split()[0]}: {exc}") from None
    try:
        if vals["delta"] is not None:
            delta_v = delta_v_from_delta(params, vals["v_plus"], vals["delta"])
        else:
            delta_v = 0.1 if vals["delta_v"] is None else vals["delta_v"]
        pert = PerturbationSpec(vals["perturbation_shape"], vals["amplitude_v"], vals["amplitude_u"],
                                vals["center"], vals["width"])
        cfg = SimConfig(params=params, v_plus=vals["v_plus"], u_plus=vals["u_plus"], delta_v=delta_v,
                        x_min=vals["x_min"], x_max=vals["x_max"], n_cells=vals["n_cells"], cfl=vals["cfl"],
                        t_end=vals["t_end"], tick_interval=vals["tick_interval"],
                        snapshot_interval=vals["snapshot_interval"], perturbation=pert, seed=vals["seed"],
                        well_balanced=vals["well_balanced"])
        cfg.ends()
        cfg.grid()
    except ShockStabError as exc:
        key = "delta" if vals["delta"] is not None else "delta_v"
        raise ConfigError(f"{source}: {_guess_key(str(exc), key)}: {exc}") from None
    return Scenario(name=vals["name"], config=cfg, values=vals, checks=vals["checks"],
                    identity_tol=vals["identity_tol"], contraction_slack=vals["contraction_slack"],
                    profile_samples=vals["profile_samples"], sweep_param=vals["sweep_param"],
                    sweep_values=vals["sweep_values"])


def _guess_key(message: str, strength_key: str) -> str:
    """Name the scenario key an error message refers to."""
    first = message.split()[0] if message else ""
    if first in KEYS:
        return first
    if first == "perturbation":
        return "width" if "width" in message else "perturbation_shape"
    return strength_key


def resolve_path(path) -> Path:
    """A file path, or the name of a scenario shipped with the package."""
    p = Path(path)
    if p.exists():
        return p
    packaged = resources.files("shockstab") / "scenarios" / f"{path}.cfg"
    if packaged.is_file():
        return Path(str(packaged))
    raise ConfigError(f"{path}: no such scenario file")


def parse_config(path, env=None) -> Scenario:
    """Parse and validate a scenario file, applying ``SHOCKSTAB_*`` overrides."""
    p = resolve_path(path)
    raw = _read_raw(p.read_text(), str(p))
    raw.update(_env_overrides(os.environ if env is None else env))
    return build(raw, str(p))


def parse_text(text: str, env=None, source: str = "<string>") -> Scenario:
    raw = _read_raw(text, source)
    raw.update(_env_overrides({} if env is None else env))
    return build(raw, source)


def emit(scenario: Scenario) -> str:
    """Serialize back to the file format (parse of the output is a fixpoint)."""
    lines = []
    for k in KEYS:
        val = scenario.values.get(k)
        if val is None:
            continue
        lines.append(f"{k} = {_emit_value(val)}")
    return "\n".join(lines) + "\n"


def with_value(scenario: Scenario, key: str, value) -> Scenario:
    """Copy of ``scenario`` with one key replaced (used to expand sweeps)."""
    raw = {k: _emit_value(v) for k, v in scenario.values.items() if v is not None}
    if key in ("delta", "delta_v"):
        raw.pop("delta", None)
        raw.pop("delta_v", None)
    if key == "n_cells":
        value = int(value)
    raw[key] = _emit_value(value)
    raw["name"] = f"{scenario.name}-{key}-{_emit_value(value)}"
    raw.pop("sweep_param", None)
    raw.pop("sweep_values", None)
    return replace(build(raw, f"{scenario.name}[{key}={value}]"), out_dir=scenario.out_dir)


def refined(scenario: Scenario, k: int) -> Scenario:
    if k < 1:
        raise ConfigError(f"refine: must be a positive integer, got {k}")
    if k == 1:
        return scenario
    raw = {kk: _emit_value(v) for kk, v in scenario.values.items() if v is not None}
    raw["n_cells"] = str(scenario.config.n_cells * k)
    return replace(build(raw, scenario.name), out_dir=scenario.out_dir)


def with_seed(scenario: Scenario, seed: int) -> Scenario:
    raw = {kk: _emit_value(v) for kk, v in scenario.values.items() if v is not None}
    raw["seed"] = str(seed)
    return replace(build(raw, scenario.name), out_dir=scenario.out_dir)
