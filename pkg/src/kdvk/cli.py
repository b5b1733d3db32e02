"""Command-line driver.

    kdvk simulate|radius|picard --config PATH --out DIR [--seed N]
    kdvk probe KIND --config PATH --out DIR [--seed N]

``--preset NAME`` can replace ``--config``.  Exit codes: 0 success, 1 bad
configuration or violated hypothesis, 2 numerical abort.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import __version__
from .bourgain import picard_iterate
from .config import PRESET_NAMES, ConfigError, RunConfig, build_damping, build_initial, load
from .evolution import BlowUpError, CFLError, State, evolve
from .gevrey import GevreyOverflowError, RadiusFitError, check_assumptions, estimate_radius
from .monitors import gevrey_decay_verdict, l2_decay_check, l2_identity_residual, make_monitor, radius_over_time
from .probe import (
    probe_bilinear,
    probe_damping_product,
    probe_exponential_triangle,
    probe_lipschitz_data_map,
    probe_trilinear,
    probe_weight_inequality,
)
from .spectral import make_grid

log = logging.getLogger("kdvk")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2
PROBE_KINDS = ("bilinear", "trilinear", "damping", "weight", "triangle", "lipschitz")


class NumericalAbort(RuntimeError):
    pass


# -- output ---------------------------------------------------------------------------


def _clean(obj):
    """Make ``obj`` JSON-safe: numpy scalars to Python, non-finite floats to None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def write_atomic(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path: Path, payload: dict):
    write_atomic(path, json.dumps(_clean(payload), indent=2, sort_keys=True, allow_nan=False) + "\n")


def fmt(x) -> str:
    x = float(x)
    return f"{x:.16e}" if math.isfinite(x) else "nan"


def write_csv(path: Path, header: list[str], rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) if not isinstance(v, str) else v for v in row])
    write_atomic(path, buf.getvalue())


def _envelope(cfg: RunConfig, command: str, **payload) -> dict:
    return {"command": command, "version": __version__, "config": cfg.to_json(), **payload}


def _label(s: float) -> str:
    return f"{s:.6g}"


# -- commands ---------------------------------------------------------------------------


def _monitor_sigmas(cfg: RunConfig):
    """Expand ``auto`` into sigma0, sigma0/2, sigma0/4, sigma0/8 with sigma0 the fitted initial radius."""
    sigma0, note = None, ""
    try:
        fit = estimate_radius(cfg.initial, cfg.window())
        if not fit.entire_beyond_window and fit.sigma_hat > 0:
            sigma0 = fit.sigma_hat
        else:
            note = "initial data decays faster than any exponential in the window"
    except RadiusFitError as exc:
        note = str(exc)
    sigmas = []
    for s in cfg.raw["monitor"]["sigmas"]:
        if s == "auto":
            if sigma0 is not None:
                sigmas += [sigma0, sigma0 / 2, sigma0 / 4, sigma0 / 8]
        else:
            sigmas.append(float(s))
    sigmas = sorted(set(sigmas), reverse=True)
    return sigmas, sigma0, note


def _run(cfg: RunConfig, monitors=None):
    try:
        return evolve(State(cfg.initial), cfg.T, cfg.params, cfg.damping, cfg.integrator, monitors), None
    except BlowUpError as exc:
        return exc.trajectory, str(exc)


def cmd_simulate(cfg: RunConfig, out: Path) -> int:
    sigmas, sigma0, note = _monitor_sigmas(cfg)
    traj, abort = _run(cfg, make_monitor(sigmas, cfg.window()))
    n = len(traj)
    resid = np.full(n, np.nan)
    if n >= 5:
        resid = l2_identity_residual(traj, cfg.damping)
    header = ["t", "l2"] + [f"gevrey_sigma_{_label(s)}" for s in sigmas] + [
        "radius_sigma_hat", "radius_residual", "l2_identity_residual"]
    rows = []
    for i, rec in enumerate(traj.records):
        fit = rec.radius
        rows.append([rec.t, rec.l2] + [rec.gevrey_norms[s] for s in sigmas] + [
            fit.sigma_hat if fit else np.nan, fit.residual if fit else np.nan, resid[i]])
    write_csv(out / "timeseries.csv", header, rows)

    gamma = cfg.damping.gamma
    verdict, verdict_note = None, ""
    if sigmas:
        try:
            verdict = gevrey_decay_verdict(traj, sigmas, gamma, sigma0=sigma0).as_dict()
        except ValueError as exc:
            verdict_note = str(exc)
    else:
        verdict_note = "no monitor sigmas"
    fits = [r.radius for r in traj.records if r.radius is not None and not r.radius.entire_beyond_window]
    summary = _envelope(
        cfg, "simulate",
        aborted=abort is not None,
        abort_message=abort or "",
        records=n,
        sigmas=sigmas,
        sigma0=sigma0,
        sigma_note=note,
        verdict=verdict,
        verdict_note=verdict_note,
        assumptions=check_assumptions(cfg.damping, sigma0 if sigma0 is not None else cfg.bourgain.sigma),
        l2_decay={k: v for k, v in l2_decay_check(traj, gamma).items() if k != "slack"},
        l2_identity_max_abs_residual=float(np.nanmax(np.abs(resid))) if n >= 5 else None,
        min_radius=min((f.sigma_hat for f in fits), default=None),
    )
    write_json(out / "summary.json", summary)
    if abort:
        raise NumericalAbort(abort)
    return EXIT_OK


def cmd_radius(cfg: RunConfig, out: Path) -> int:
    traj, abort = _run(cfg)
    if abort:
        raise NumericalAbort(abort)
    ro = radius_over_time(traj, cfg.window())
    rows = [[t, f.sigma_hat, f.intercept, f.residual, f.n_modes, "true" if f.entire_beyond_window else "false"]
            for t, f in zip(ro["times"], ro["fits"])]
    write_csv(out / "radius.csv", ["t", "sigma_hat", "intercept", "residual", "n_modes", "entire_beyond_window"], rows)
    summary = _envelope(
        cfg, "radius",
        window=list(cfg.window()),
        first=ro["fits"][0].as_dict(),
        min_sigma_hat=ro["min_sigma_hat"],
        all_entire=ro["all_entire"],
        records=len(traj),
    )
    write_json(out / "radius.json", summary)
    return EXIT_OK


def cmd_picard(cfg: RunConfig, out: Path) -> int:
    pc = cfg.raw["picard"]
    rep = picard_iterate(cfg.initial, cfg.params, cfg.damping, cfg.bourgain, n_iters=pc["n_iters"], nt=pc["nt"],
                         tol=pc["tol"], oracle_substeps=pc["oracle_substeps"])
    write_json(out / "picard.json", _envelope(cfg, "picard", report=rep.as_dict()))
    if rep.diverged:
        raise NumericalAbort("Picard iterates diverged")
    return EXIT_OK


def cmd_probe(kind: str, cfg: RunConfig, out: Path) -> int:
    pr = cfg.raw["probe"]
    pcfg = cfg.probe
    if kind == "bilinear":
        result = probe_bilinear(pcfg, cfg.params).as_dict()
    elif kind == "trilinear":
        result = probe_trilinear(pcfg, cfg.params).as_dict()
    elif kind == "damping":
        grid = make_grid(max(pcfg.grid_sizes), pcfg.period)
        result = probe_damping_product(pcfg, build_damping(grid, cfg.raw["damping"]), cfg.params).as_dict()
    elif kind == "weight":
        result = probe_weight_inequality(pr["a_exp"], pr["b_exp"], pr["weight_extent"], pr["weight_points"])
    elif kind == "triangle":
        result = probe_exponential_triangle(pr["triangle_sigma"], pr["triangle_extent"], pr["triangle_points"])
    elif kind == "lipschitz":
        grid = make_grid(max(pcfg.grid_sizes), pcfg.period)
        result = probe_lipschitz_data_map(pcfg, cfg.params, build_damping(grid, cfg.raw["damping"]),
                                          build_initial(grid, cfg.raw["initial"]), dt=pr["lipschitz_dt"]).as_dict()
    else:
        raise ConfigError(f"unknown probe kind {kind!r}; choose from {', '.join(PROBE_KINDS)}")
    write_json(out / f"probe_{kind}.json", _envelope(cfg, "probe", kind=kind, report=result))
    return EXIT_OK


# -- entry point -----------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="kdvk", description="Damped KdV-Kawahara simulator and estimate checks.")
    ap.add_argument("--version", action="version", version=f"kdvk {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        src = p.add_mutually_exclusive_group()
        src.add_argument("--config", type=Path, help="INI config file")
        src.add_argument("--preset", choices=PRESET_NAMES, help="built-in scenario")
        p.add_argument("--out", type=Path, required=True, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override the scenario seed")
        p.add_argument("-v", "--verbose", action="store_true")

    for name, text in (("simulate", "evolve and monitor a scenario"),
                       ("radius", "fit the analyticity radius along a run"),
                       ("picard", "iterate the Duhamel map")):
        common(sub.add_parser(name, help=text))
    pp = sub.add_parser("probe", help="randomised estimate probes")
    pp.add_argument("kind", choices=PROBE_KINDS)
    common(pp)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        cfg = load(args.config, args.preset, args.seed)
        if args.command == "simulate":
            return cmd_simulate(cfg, args.out)
        if args.command == "radius":
            return cmd_radius(cfg, args.out)
        if args.command == "picard":
            return cmd_picard(cfg, args.out)
        return cmd_probe(args.kind, cfg, args.out)
    except (NumericalAbort, BlowUpError, CFLError) as exc:
        # CFLError subclasses ValueError, so it must be caught first.
        print(f"numerical abort: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, GevreyOverflowError) as exc:
        # config errors, hypothesis violations, failed assumption checks, radius-fit failures
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
