"""Time integration of the damped KdV-Kawahara equation.

The linear part u_t + alpha u_5x + beta u_3x = 0 is propagated exactly in
Fourier space; N(u) = mu (u^2)_x + lambda (u^3)_x + a(x) u is integrated with
classical RK4 in the frame rotating with the linear flow (integrating-factor
RK4, a.k.a. Lawson RK4).  Internally the solver works on half spectra
(``rfft`` layout) with the Nyquist mode held at zero.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field as dc_field
from typing import Callable

import numpy as np
import scipy.fft as sfft

from .gevrey import DampingProfile
from .spectral import (
    SQRT_2PI,
    EquationParams,
    Field,
    GridSpec,
    dealiased_product_coeffs,
    dispersion_symbol,
    fft_workers,
    phase_factor,
)

log = logging.getLogger(__name__)

DEFAULT_CFL = 0.5


class CFLError(ValueError):
    """Time step exceeds the explicit stability bound for the nonlinear and damping terms."""


class BlowUpError(FloatingPointError):
    """Non-finite values appeared during integration."""

    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory


@dataclass(frozen=True)
class State:
    field: Field
    time: float = 0.0

    def __post_init__(self):
        if not self.field.real:
            raise ValueError("solver states must be real-valued")
        if not np.isfinite(self.time):
            raise ValueError("time must be finite")


@dataclass(frozen=True)
class IntegratorConfig:
    dt: float = 0.01
    scheme: str = "ifrk4"
    dealias: bool = True
    record_every: int = 1
    cfl: float = DEFAULT_CFL

    def __post_init__(self):
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise ValueError(f"dt must be positive, got {self.dt!r}")
        if self.scheme != "ifrk4":
            raise ValueError(f"unsupported scheme {self.scheme!r}; only 'ifrk4' is available")
        if int(self.record_every) != self.record_every or self.record_every < 1:
            raise ValueError(f"record_every must be a positive integer, got {self.record_every!r}")
        if not self.cfl > 0:
            raise ValueError("cfl must be positive")


def cfl_limit(grid: GridSpec, p: EquationParams, a: DampingProfile, umax: float, cfl: float = DEFAULT_CFL) -> float:
    """Largest admissible dt for the explicit treatment of N(u)."""
    rate = grid.xi_max * (2 * abs(p.mu) * umax + 3 * abs(p.lam) * umax**2) + a.sup_norm
    return np.inf if rate == 0 else cfl / rate


# -- array kernels -------------------------------------------------------------


class _Kernel:
    """Precomputed multipliers and padded damping samples for one (grid, p, a)."""

    def __init__(self, grid: GridSpec, p: EquationParams, a: DampingProfile, dealias: bool = True):
        if a.grid != grid:
            raise ValueError("damping profile lives on a different grid")
        self.grid, self.p, self.a = grid, p, a
        n = grid.n_points
        self.n = n
        self.nh = n // 2 + 1
        self.xi = grid.dxi * np.arange(self.nh)
        self.ik = 1j * self.xi
        self.ik[-1] = 0.0
        self.phi = dispersion_symbol(self.xi, p)
        self.m = 2 * n if dealias else n
        # physical = irfft(c_pad, m) * scale; coefficients = rfft(values) / scale
        self.scale = (self.m / n) * SQRT_2PI / grid.dx
        a_half = sfft.rfft(a.values) * (grid.dx / SQRT_2PI)
        a_half[-1] = 0.0
        self.a_pad = self.to_physical(a_half)
        self.damping_only = p.mu == 0 and p.lam == 0
        self.umax = 0.0

    def to_physical(self, c):
        pad = np.zeros(self.m // 2 + 1, dtype=complex)
        pad[: self.nh] = c
        return sfft.irfft(pad, self.m, workers=fft_workers()) * self.scale

    def to_spectral(self, v):
        out = sfft.rfft(v, workers=fft_workers())[: self.nh] / self.scale
        out[-1] = 0.0
        return out

    def propagator(self, t):
        return phase_factor(self.phi, t)

    def nonlinear(self, c):
        """N_hat(u) on the half spectrum."""
        u = self.to_physical(c)
        self.umax = float(np.max(np.abs(u)))
        damp = self.to_spectral(self.a_pad * u)
        if self.damping_only:
            return damp
        u2 = u * u
        flux = self.p.mu * u2 + self.p.lam * u2 * u
        return self.ik * self.to_spectral(flux) + damp

    def half_from_field(self, f: Field) -> np.ndarray:
        c = np.array(f.spectral[: self.nh], dtype=complex)
        c[-1] = 0.0
        return c

    def field_from_half(self, c) -> Field:
        full = np.empty(self.n, dtype=complex)
        full[: self.nh] = c
        full[self.nh:] = np.conj(c[1:-1][::-1])
        return Field(self.grid, full, "spectral", True)


def _ifrk4_step(kern: _Kernel, c, h, E_half, E_full):
    k1 = -kern.nonlinear(c)
    k2 = -kern.nonlinear(E_half * (c + 0.5 * h * k1))
    k3 = -kern.nonlinear(E_half * c + 0.5 * h * k2)
    k4 = -kern.nonlinear(E_full * c + h * E_half * k3)
    return E_full * c + (h / 6.0) * (E_full * k1 + 2.0 * E_half * (k2 + k3) + k4)


# -- public operations ------------------------------------------------------------


def linear_propagator(f: Field, t: float, p: EquationParams) -> Field:
    """S(t) f: multiply each coefficient by exp(-i t phi(xi)).

    For real fields the Nyquist coefficient is set to zero: phi is odd, so the
    shared +-n/2 mode has no real-valued rotation.
    """
    mult = phase_factor(dispersion_symbol(f.grid.wavenumbers, p), t)
    if f.real:
        mult[f.grid.nyquist_index] = 0.0
    return f.with_spectral(f.spectral * mult)


def nonlinearity(f: Field, p: EquationParams, a: DampingProfile) -> Field:
    """N(u) = mu (u^2)_x + lambda (u^3)_x + a u with dealiased products."""
    if a.grid != f.grid:
        raise ValueError("grid mismatch between field and damping profile")
    grid = f.grid
    ik = 1j * grid.wavenumbers
    ik[grid.nyquist_index] = 0.0
    u = f.spectral
    out = dealiased_product_coeffs([a.field.spectral, u], grid)
    if p.mu:
        out = out + p.mu * ik * dealiased_product_coeffs([u, u], grid)
    if p.lam:
        out = out + p.lam * ik * dealiased_product_coeffs([u, u, u], grid)
    return Field.from_spectral(grid, out)


def step(s: State, p: EquationParams, a: DampingProfile, cfg: IntegratorConfig) -> State:
    """Advance one integrating-factor RK4 step of size ``cfg.dt``."""
    kern = _Kernel(s.field.grid, p, a, cfg.dealias)
    c = kern.half_from_field(s.field)
    h = cfg.dt
    out = _ifrk4_step(kern, c, h, kern.propagator(h / 2), kern.propagator(h))
    if not np.all(np.isfinite(out)):
        raise BlowUpError(f"non-finite state at t = {s.time + h:g}")
    _check_cfl(kern, cfg)
    return State(kern.field_from_half(out), s.time + h)


def _check_cfl(kern: _Kernel, cfg: IntegratorConfig):
    limit = cfl_limit(kern.grid, kern.p, kern.a, kern.umax, cfg.cfl)
    if cfg.dt > limit:
        raise CFLError(f"dt = {cfg.dt:g} exceeds stability bound {limit:.4g} (max|u| = {kern.umax:.3g})")


@dataclass
class Trajectory:
    """Recorded states of one run plus per-record monitor output."""

    grid: GridSpec
    times: np.ndarray
    spectra: np.ndarray  # (n_records, n) complex, FFT order
    records: list = dc_field(default_factory=list)
    dt: float = 0.0
    aborted: bool = False
    message: str = ""

    def __len__(self):
        return len(self.times)

    def field(self, i: int) -> Field:
        return Field(self.grid, self.spectra[i], "spectral", True)

    def states(self):
        return [State(self.field(i), float(t)) for i, t in enumerate(self.times)]

    @property
    def final(self) -> State:
        return State(self.field(-1), float(self.times[-1]))

    @property
    def record_interval(self) -> float:
        return float(self.times[1] - self.times[0]) if len(self.times) > 1 else 0.0


def evolve(s0: State, T: float, p: EquationParams, a: DampingProfile, cfg: IntegratorConfig,
           monitors: Callable[[State], object] | None = None) -> Trajectory:
    """Integrate from ``s0`` for a duration ``T``, recording every ``record_every`` steps.

    ``T`` must be a whole number of steps.  ``monitors`` is called on every
    recorded state and its results are collected in ``Trajectory.records``.
    Non-finite values abort the run: the returned trajectory (attached to the
    raised BlowUpError) holds every record up to the last valid one.
    """
    if not T >= 0:
        raise ValueError(f"T must be nonnegative, got {T!r}")
    grid = s0.field.grid
    kern = _Kernel(grid, p, a, cfg.dealias)
    h = cfg.dt
    n_steps = int(round(T / h))
    if abs(n_steps * h - T) > 1e-9 * max(1.0, T):
        raise ValueError(f"T = {T:g} is not a multiple of dt = {h:g}")
    E_half, E_full = kern.propagator(h / 2), kern.propagator(h)
    c = kern.half_from_field(s0.field)
    times, spectra, records = [], [], []

    def record(c, t):
        f = kern.field_from_half(c)
        times.append(t)
        spectra.append(np.array(f.spectral))
        if monitors is not None:
            records.append(monitors(State(f, t)))

    record(c, s0.time)
    if n_steps:
        kern.umax = float(np.max(np.abs(kern.to_physical(c))))
        _check_cfl(kern, cfg)
    for i in range(1, n_steps + 1):
        with np.errstate(over="ignore", invalid="ignore"):  # blow-up is caught just below
            c_new = _ifrk4_step(kern, c, h, E_half, E_full)
        if not np.all(np.isfinite(c_new)):
            traj = Trajectory(grid, np.array(times), np.array(spectra), records, h, True,
                              f"non-finite state at t = {s0.time + i * h:g}")
            raise BlowUpError(traj.message, traj)
        if i == 1 or i % cfg.record_every == 0:
            _check_cfl(kern, cfg)
        c = c_new
        if i % cfg.record_every == 0 or i == n_steps:
            record(c, s0.time + i * h)
    return Trajectory(grid, np.array(times), np.array(spectra), records, h)


def l2_squared_series(traj: Trajectory) -> np.ndarray:
    return np.sum(np.abs(traj.spectra) ** 2, axis=1) * traj.grid.dxi
