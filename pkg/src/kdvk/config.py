"""Run configuration: INI files with fixed sections, presets and validation.

Every key has a default, files may ``extends = <preset>`` another preset,
and unknown sections or keys are errors.  ``resolve`` returns a plain dict
with every default materialised, which is what gets written to summaries.
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .bourgain import BourgainParams
from .evolution import IntegratorConfig
from .gevrey import DampingProfile, constant_damping, cosine_bump_damping, sine_damping
from .probe import ProbeConfig
from .spectral import EquationParams, Field, GridSpec, make_grid


class ConfigError(ValueError):
    """Invalid or unknown configuration entry."""


def _floats(text):
    return [float(x) for x in str(text).replace(",", " ").split()]


def _ints(text):
    return [int(x) for x in str(text).replace(",", " ").split()]


def _bool(text):
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _opt_float(text):
    t = str(text).strip().lower()
    return None if t in ("none", "") else float(t)


def _float_or_auto(text):
    t = str(text).strip().lower()
    return "auto" if t == "auto" else float(t)


def _sigma_list(text):
    out = []
    for item in str(text).replace(",", " ").split():
        out.append("auto" if item.lower() == "auto" else float(item))
    return out


# section -> key -> (parser, default)
SCHEMA = {
    "scenario": {
        "name": (str, "default"),
        "seed": (int, 42),
        "T": (float, 6.0),
    },
    "grid": {"n": (int, 1024), "L": (float, 64 * np.pi)},
    "equation": {"alpha": (float, 1.0), "beta": (float, 1.0), "mu": (float, 1.0), "lam": (float, 1.0)},
    "damping": {
        "kind": (str, "constant"),
        "value": (float, 1.0),
        "mean": (float, 1.0),
        "amplitude": (float, 0.5),
        "height": (float, 0.5),
        "wavenumber": (float, 1.0),
        "gamma": (_opt_float, None),
    },
    "initial": {
        "family": (str, "sech"),
        "amplitude": (float, 0.5),
        "center": (_float_or_auto, "auto"),
        "width": (float, 1.0),
        "wavenumber": (float, 1.0),
    },
    "integrator": {"dt": (float, 0.0025), "record_every": (int, 4), "cfl": (float, 0.5)},
    "monitor": {
        "sigmas": (_sigma_list, ["auto", 0.5]),
        "window_lo": (float, 2.0),
        "window_hi": (_opt_float, None),
    },
    "picard": {
        "sigma": (float, 0.5),
        "b": (float, 0.55),
        "b_prime": (float, 0.65),
        "delta": (float, 0.05),
        "margin": (float, 0.25),
        "nt": (int, 256),
        "n_iters": (int, 12),
        "tol": (float, 1e-11),
        "oracle_substeps": (int, 8),
    },
    "probe": {
        "n_samples": (int, 1000),
        "grid_sizes": (_ints, [64, 128, 256]),
        "period": (float, 8 * np.pi),
        "nt": (int, 256),
        "decay_spread": (float, 3.0),
        "band_limit": (_opt_float, 2.0),
        "sigma": (float, 0.5),
        "b": (float, 0.55),
        "b_prime": (float, 0.65),
        "delta": (float, 0.05),
        "margin": (float, 0.25),
        "omega_max": (float, 20.0),
        "damping_b": (float, 0.55),
        "damping_b_prime": (float, 0.0),
        "perturbation": (float, 1e-3),
        "lipschitz_dt": (float, 1e-3),
        "a_exp": (float, 1.0),
        "b_exp": (float, 1.0),
        "weight_extent": (float, 100.0),
        "weight_points": (int, 401),
        "triangle_sigma": (float, 1.0),
        "triangle_extent": (float, 64.0),
        "triangle_points": (int, 256),
    },
}

DAMPING_KINDS = ("constant", "sine", "cosine_bump")
INITIAL_FAMILIES = ("sech", "gaussian", "cosine", "zero")
PRESET_NAMES = (
    "default", "linear-decay", "no-damping", "variable-damping",
    "radius-sech", "radius-gaussian", "picard-small", "zero-field",
)


def preset_text(name: str) -> str:
    if name not in PRESET_NAMES:
        raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(PRESET_NAMES)}")
    return resources.files("kdvk").joinpath("presets", f"{name}.ini").read_text()


def _read(text: str, origin: str) -> configparser.ConfigParser:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text, source=origin)
    except configparser.Error as exc:
        raise ConfigError(f"{origin}: {exc}") from None
    return cp


def _layers(text: str, origin: str, seen=()) -> list[tuple[str, configparser.ConfigParser]]:
    cp = _read(text, origin)
    parent = cp.get("scenario", "extends", fallback=None)
    if parent is None:
        return [(origin, cp)]
    if parent in seen:
        raise ConfigError(f"circular extends chain through {parent!r}")
    cp.remove_option("scenario", "extends")
    return _layers(preset_text(parent), f"preset:{parent}", seen + (parent,)) + [(origin, cp)]


def resolve(text: str, origin: str = "<config>", seed: int | None = None) -> dict:
    """Merge defaults, the ``extends`` chain and ``text`` into a typed dict."""
    out = {sec: {k: d for k, (_, d) in keys.items()} for sec, keys in SCHEMA.items()}
    for src, cp in _layers(text, origin):
        for sec in cp.sections():
            if sec not in SCHEMA:
                raise ConfigError(f"{src}: unknown section [{sec}]")
            for key, raw in cp.items(sec):
                if key not in SCHEMA[sec]:
                    raise ConfigError(f"{src}: unknown key {key!r} in [{sec}]")
                parse = SCHEMA[sec][key][0]
                try:
                    out[sec][key] = parse(raw)
                except ValueError as exc:
                    raise ConfigError(f"{src}: bad value for [{sec}] {key} = {raw!r}: {exc}") from None
    if seed is not None:
        out["scenario"]["seed"] = int(seed)
    return out


def load(path: str | Path | None = None, preset: str | None = None, seed: int | None = None) -> "RunConfig":
    if path is not None and preset is not None:
        raise ConfigError("give either a config file or a preset, not both")
    if path is not None:
        p = Path(path)
        try:
            text = p.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {p}: {exc.strerror}") from None
        return RunConfig.from_dict(resolve(text, str(p), seed))
    name = preset or "default"
    return RunConfig.from_dict(resolve(preset_text(name), f"preset:{name}", seed))


@dataclass
class RunConfig:
    """Validated configuration; building it constructs every numerical object once."""

    raw: dict
    grid: GridSpec
    params: EquationParams
    damping: DampingProfile
    initial: Field
    integrator: IntegratorConfig
    bourgain: BourgainParams
    probe: ProbeConfig

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        try:
            grid = make_grid(d["grid"]["n"], d["grid"]["L"])
            eq = d["equation"]
            params = EquationParams(eq["alpha"], eq["beta"], eq["mu"], eq["lam"])
            damping = build_damping(grid, d["damping"])
            initial = build_initial(grid, d["initial"])
            ig = d["integrator"]
            integ = IntegratorConfig(dt=ig["dt"], record_every=ig["record_every"], cfl=ig["cfl"])
            pc = d["picard"]
            bp = BourgainParams(pc["sigma"], pc["b"], pc["b_prime"], pc["delta"], pc["margin"])
            pr = d["probe"]
            probe = ProbeConfig(
                n_samples=pr["n_samples"], seed=d["scenario"]["seed"], grid_sizes=tuple(pr["grid_sizes"]),
                period=pr["period"], nt=pr["nt"], decay_spread=pr["decay_spread"], band_limit=pr["band_limit"],
                sigma=pr["sigma"], b=pr["b"], b_prime=pr["b_prime"], delta=pr["delta"],
                cutoff_margin=pr["margin"], omega_max=pr["omega_max"], damping_b=pr["damping_b"],
                damping_b_prime=pr["damping_b_prime"], perturbation=pr["perturbation"],
            )
            for n in probe.grid_sizes:
                make_grid(n, probe.period)
            _check_run(d)
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        return cls(d, grid, params, damping, initial, integ, bp, probe)

    @property
    def name(self) -> str:
        return self.raw["scenario"]["name"]

    @property
    def seed(self) -> int:
        return self.raw["scenario"]["seed"]

    @property
    def T(self) -> float:
        return self.raw["scenario"]["T"]

    def window(self):
        m = self.raw["monitor"]
        hi = m["window_hi"] if m["window_hi"] is not None else self.grid.xi_max / 4
        return (m["window_lo"], hi)

    def to_json(self) -> dict:
        """The resolved config in a JSON-friendly shape."""
        return {sec: dict(vals) for sec, vals in self.raw.items()}


def _check_run(d: dict):
    T, dt = d["scenario"]["T"], d["integrator"]["dt"]
    if not T >= 0:
        raise ConfigError(f"T must be nonnegative, got {T}")
    steps = round(T / dt)
    if abs(steps * dt - T) > 1e-9 * max(1.0, T):
        raise ConfigError(f"T = {T} is not a whole number of steps of dt = {dt}")
    pc = d["picard"]
    if pc["nt"] < 8 or pc["nt"] % 2:
        raise ConfigError("picard nt must be an even integer >= 8")
    if pc["n_iters"] < 1 or pc["oracle_substeps"] < 1:
        raise ConfigError("picard n_iters and oracle_substeps must be positive")
    for s in d["monitor"]["sigmas"]:
        if s != "auto" and s < 0:
            raise ConfigError(f"monitor sigmas must be nonnegative, got {s}")


def build_damping(grid: GridSpec, spec: dict) -> DampingProfile:
    kind = spec["kind"]
    if kind == "constant":
        return constant_damping(grid, spec["value"], spec["gamma"])
    if kind == "sine":
        return sine_damping(grid, spec["mean"], spec["amplitude"], spec["wavenumber"], spec["gamma"])
    if kind == "cosine_bump":
        gamma = spec["gamma"] if spec["gamma"] is not None else spec["value"]
        return cosine_bump_damping(grid, gamma, spec["height"], spec["wavenumber"])
    raise ConfigError(f"unknown damping kind {kind!r}; choose from {', '.join(DAMPING_KINDS)}")


def build_initial(grid: GridSpec, spec: dict) -> Field:
    fam = spec["family"]
    c = grid.period / 2 if spec["center"] == "auto" else spec["center"]
    A, w = spec["amplitude"], spec["width"]
    if not w > 0:
        raise ConfigError(f"initial width must be positive, got {w}")
    s = (grid.x - c) / w
    if fam == "sech":
        vals = A / np.cosh(s)
    elif fam == "gaussian":
        vals = A * np.exp(-s * s)
    elif fam == "cosine":
        vals = A * np.cos(spec["wavenumber"] * grid.x)
    elif fam == "zero":
        vals = np.zeros(grid.n_points)
    else:
        raise ConfigError(f"unknown initial family {fam!r}; choose from {', '.join(INITIAL_FAMILIES)}")
    return Field.from_physical(grid, vals)
