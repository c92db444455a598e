"""Experiment configuration files.

Flat INI sections with a versioned schema.  Every key is known in advance;
unknown sections or keys are errors, and validation collects all problems
before reporting.  Vectors are written ``4, 1, 1`` or ``[4, 1, 1]``.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .controller import ControllerConfig, validate_controller_constants
from .lyapunov import LyapunovCertificate, box_grid, example_certificate, load_certificate
from .plant import PLANTS
from .sim import SimConfig
from .timewarp import ForcingConfig, TimeWarp, validate_forcing, validate_warp

SCHEMA_VERSION = 1

_REQUIRED = object()

# section -> key -> (kind, default); kind is one of float, int, bool, str, vec, optfloat
SCHEMA = {
    "meta": {"schema": ("int", SCHEMA_VERSION), "name": ("str", "")},
    "plant": {
        "kind": ("str", _REQUIRED),
        "theta_a": ("float", None), "theta_b": ("float", None),
        "theta_c": ("float", None), "theta_d": ("float", None),
        "c_beta": ("float", None), "sigma": ("float", None),
    },
    "warp": {"T": ("float", _REQUIRED), "T_bar": ("float", None), "a0": ("float", _REQUIRED)},
    "forcing": {
        "c_gamma1": ("float", _REQUIRED), "c_tilde_gamma1": ("float", _REQUIRED),
        "c_gamma2": ("float", _REQUIRED), "c_tilde_gamma2": ("float", _REQUIRED),
    },
    "controller": {
        "zeta0": ("float", _REQUIRED), "zeta_floor": ("float", _REQUIRED),
        "c_theta": ("float", _REQUIRED), "c_theta1": ("float", _REQUIRED),
        "epsilon_r": ("float", _REQUIRED), "sign_smoothing": ("float", 0.0),
    },
    "certificate": {
        "kind": ("str", "example"), "a_tilde_c": ("float", None), "path": ("str", None),
        "P": ("vec", None), "gain_coeffs": ("vec", None),
        "nu_c": ("float", None), "nu_lower": ("float", None), "nu_upper": ("float", None),
    },
    "sim": {
        "d_tau": ("float", 1e-4), "tau_max": ("optfloat", None),
        "x0": ("vec", _REQUIRED), "z0": ("vec", _REQUIRED),
        "r0": ("float", 1.0), "theta_hat0": ("float", 1.0), "theta1_hat0": ("float", 0.0),
        "dead_zone": ("float", 0.0), "r_cap": ("optfloat", None), "record_stride": ("int", 1),
        "zero_control": ("bool", False), "engine": ("str", "auto"),
        "probe_t": ("optfloat", None), "x_threshold": ("optfloat", None),
    },
    "checks": {
        "grid_lo": ("float", -5.0), "grid_hi": ("float", 5.0), "grid_points": ("int", 21),
        "t_values": ("vec", [0.0]),
    },
    "output": {"dir": ("str", "out"), "plots": ("bool", False)},
}

PLANT_KEYS = {
    "example": ("theta_a", "theta_b", "theta_c", "theta_d", "c_beta", "sigma"),
    "second_order": ("theta_b", "theta_d", "c_beta", "sigma"),
    "chain": ("c_beta", "sigma"),
}


class ConfigError(ValueError):
    """All problems found in a config file, one per entry of ``errors``."""

    def __init__(self, errors, path=None):
        self.errors = list(errors)
        self.path = path
        where = f"{path}: " if path else ""
        super().__init__(where + "; ".join(self.errors))


@dataclass(eq=False)
class ExperimentConfig:
    name: str
    plant: object
    warp: TimeWarp
    forcing: ForcingConfig
    cert: LyapunovCertificate
    controller: ControllerConfig
    sim: SimConfig
    engine: str
    probe_t: float
    x_threshold: float
    grid: dict
    out_dir: Path
    plots: bool
    source: Path = None
    raw: dict = field(default_factory=dict)

    def samples(self):
        g = self.grid
        return box_grid(g["grid_lo"], g["grid_hi"], g["grid_points"], self.plant.n, tuple(g["t_values"]))


def parse_vector(text):
    s = text.strip()
    if s.startswith("[") and s.endswith("]"):
        s = s[1:-1]
    s = s.replace("[", " ").replace("]", " ")
    if not s.strip():
        return []
    return [float(v) for v in s.replace(";", ",").split(",") if v.strip()]


def _convert(kind, text):
    t = text.strip()
    if kind == "float":
        return float(t)
    if kind == "optfloat":
        return None if t.lower() in ("", "none", "off", "default") else float(t)
    if kind == "int":
        v = float(t)
        if v != int(v):
            raise ValueError(f"not an integer: {t!r}")
        return int(v)
    if kind == "bool":
        low = t.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {t!r}")
    if kind == "vec":
        return parse_vector(t)
    return t


def read_raw(path):
    """Parse the file into ``{section: {key: text}}`` with key case kept."""
    cp = configparser.ConfigParser(interpolation=None, strict=True, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        with open(path) as fh:
            cp.read_file(fh, source=str(path))
    except configparser.Error as exc:
        raise ConfigError([f"parse error: {exc}"], path) from exc
    return {sec: dict(cp.items(sec)) for sec in cp.sections()}


def apply_overrides(raw, overrides):
    """``overrides`` maps ``"section.key"`` to a text value."""
    errors = []
    out = {sec: dict(v) for sec, v in raw.items()}
    for dotted, value in (overrides or {}).items():
        if "." not in dotted:
            errors.append(f"override {dotted!r} must be section.key")
            continue
        sec, key = dotted.split(".", 1)
        if sec not in SCHEMA or key not in SCHEMA[sec]:
            errors.append(f"override {dotted!r} is not a schema key")
            continue
        out.setdefault(sec, {})[key] = value
    return out, errors


def load_config(path, overrides=None) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError([f"no such file: {path}"], path)
    raw, errors = apply_overrides(read_raw(path), overrides)
    cfg = build_config(raw, base_dir=path.parent, errors=errors)
    cfg.source = path
    return cfg


def build_config(raw, base_dir=Path("."), errors=None) -> ExperimentConfig:
    errors = list(errors or [])
    vals = {}
    for sec, keys in raw.items():
        if sec not in SCHEMA:
            errors.append(f"unknown section [{sec}]")
            continue
        for key in keys:
            if key not in SCHEMA[sec]:
                errors.append(f"unknown key {sec}.{key}")
    for sec, keys in SCHEMA.items():
        given = raw.get(sec, {})
        for key, (kind, default) in keys.items():
            if key in given:
                try:
                    vals[(sec, key)] = _convert(kind, given[key])
                except ValueError as exc:
                    errors.append(f"{sec}.{key}: {exc}")
                    vals[(sec, key)] = None
            elif default is _REQUIRED:
                errors.append(f"missing required key {sec}.{key}")
                vals[(sec, key)] = None
            else:
                vals[(sec, key)] = default

    def v(sec, key):
        return vals[(sec, key)]

    if v("meta", "schema") not in (None, SCHEMA_VERSION):
        errors.append(f"meta.schema {v('meta', 'schema')!r} not supported (expected {SCHEMA_VERSION})")

    # plant
    plant = None
    kind = v("plant", "kind")
    if kind is not None:
        if kind not in PLANTS:
            errors.append(f"plant.kind {kind!r} unknown (choose from {', '.join(PLANTS)})")
        else:
            allowed = PLANT_KEYS[kind]
            for key in SCHEMA["plant"]:
                if key != "kind" and key in raw.get("plant", {}) and key not in allowed:
                    errors.append(f"plant.{key} does not apply to plant kind {kind!r}")
            kwargs = {k: v("plant", k) for k in allowed if v("plant", k) is not None}
            try:
                plant = PLANTS[kind](**kwargs)
            except ValueError as exc:
                errors.append(f"plant: {exc}")

    # warp and forcing
    T, a0 = v("warp", "T"), v("warp", "a0")
    T_bar = v("warp", "T_bar") if v("warp", "T_bar") is not None else T
    warp = None
    if None not in (T, a0, T_bar):
        werr = validate_warp(T, T_bar, a0)
        errors += [f"warp: {e}" for e in werr]
        if not werr:
            warp = TimeWarp(T, T_bar, a0)
    fvals = [v("forcing", k) for k in ("c_gamma1", "c_tilde_gamma1", "c_gamma2", "c_tilde_gamma2")]
    forcing = None
    if None not in fvals:
        ferr = validate_forcing(*fvals)
        errors += [f"forcing: {e}" for e in ferr]
        if not ferr:
            forcing = ForcingConfig(*fvals)

    # certificate
    cert = None
    ckind = v("certificate", "kind")
    try:
        if ckind == "example":
            a = v("certificate", "a_tilde_c")
            if a is None:
                errors.append("certificate.a_tilde_c is required for kind 'example'")
            else:
                cert = example_certificate(a)
        elif ckind == "file":
            p = v("certificate", "path")
            if p is None:
                errors.append("certificate.path is required for kind 'file'")
            else:
                p = Path(p)
                cert = load_certificate(p if p.is_absolute() else base_dir / p)
        elif ckind == "inline":
            need = ("P", "gain_coeffs", "nu_c", "nu_lower", "nu_upper")
            missing = [k for k in need if v("certificate", k) is None]
            if missing:
                errors.append(f"certificate kind 'inline' needs {', '.join('certificate.' + k for k in missing)}")
            else:
                k = np.asarray(v("certificate", "gain_coeffs"))
                m = k.shape[0]
                Pflat = np.asarray(v("certificate", "P"))
                if Pflat.shape[0] != m * m:
                    errors.append(f"certificate.P needs {m * m} entries for {m} gains, got {Pflat.shape[0]}")
                else:
                    cert = LyapunovCertificate(m + 1, Pflat.reshape(m, m), k, v("certificate", "nu_c"),
                                               v("certificate", "nu_lower"), v("certificate", "nu_upper"))
        else:
            errors.append(f"certificate.kind {ckind!r} unknown (choose example, file or inline)")
    except (ValueError, OSError, KeyError) as exc:
        errors.append(f"certificate: {exc}")

    # controller
    cvals = [v("controller", k) for k in ("zeta0", "zeta_floor", "c_theta", "c_theta1", "epsilon_r", "sign_smoothing")]
    controller = None
    if None not in cvals:
        cerr = validate_controller_constants(*cvals)
        errors += [f"controller: {e}" for e in cerr]
        if not cerr and None not in (plant, warp, forcing, cert):
            try:
                controller = ControllerConfig(cert, warp, forcing, plant.bounds, *cvals)
            except ValueError as exc:
                errors.append(f"controller: {exc}")

    # sim
    sim = None
    x0, z0 = v("sim", "x0"), v("sim", "z0")
    if x0 is not None and z0 is not None:
        sim = SimConfig(x0=tuple(x0), z0=tuple(z0), d_tau=v("sim", "d_tau"), tau_max=v("sim", "tau_max"),
                        r0=v("sim", "r0"), theta_hat0=v("sim", "theta_hat0"),
                        theta1_hat0=v("sim", "theta1_hat0"), dead_zone=v("sim", "dead_zone"),
                        r_cap=v("sim", "r_cap"), record_stride=v("sim", "record_stride"),
                        zero_control=v("sim", "zero_control"))
        if warp is not None:
            errors += [f"sim: {e}" for e in sim.validate(
                warp, plant.n if plant else None, plant.nz if plant else None)]
    engine = v("sim", "engine")
    if engine not in ("auto", "kernel", "python"):
        errors.append(f"sim.engine {engine!r} unknown (choose auto, kernel or python)")
    xt = v("sim", "x_threshold")
    if xt is not None and not (xt > 0 and math.isfinite(xt)):
        errors.append(f"sim.x_threshold must be a positive number (got {xt!r})")

    grid = {k: v("checks", k) for k in SCHEMA["checks"]}
    if grid["grid_points"] is not None and grid["grid_points"] < 1:
        errors.append("checks.grid_points must be >= 1")
    if None not in (grid["grid_lo"], grid["grid_hi"]) and not grid["grid_hi"] >= grid["grid_lo"]:
        errors.append("checks.grid_hi must be >= checks.grid_lo")

    if errors:
        raise ConfigError(errors)

    probe_t = v("sim", "probe_t")
    if probe_t is None:
        probe_t = 0.975 * warp.T_prescribed
    return ExperimentConfig(
        name=v("meta", "name"), plant=plant, warp=warp, forcing=forcing, cert=cert,
        controller=controller, sim=sim, engine=engine, probe_t=probe_t, x_threshold=xt,
        grid=grid, out_dir=Path(v("output", "dir")), plots=v("output", "plots"), raw=raw,
    )
