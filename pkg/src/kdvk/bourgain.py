"""Windowed spacetime fields, analytic Bourgain norms, the Duhamel integral and
the Picard iteration of the cut-off Duhamel map.

Spacetime fields live on a symmetric time window [-delta, delta) sampled at
``nt`` points and are treated as periodic in time.  Every field handed to the
norm routines is expected to vanish near both window edges (apply the cutoff
first), so the periodic extension is smooth.
"""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np
import scipy.fft as sfft

from .evolution import IntegratorConfig, State, evolve
from .gevrey import DampingProfile, GevreyWeight, _as_sigma, a_sigma_norm, exp_weight, check_overflow
from .spectral import (
    SQRT_2PI,
    EquationParams,
    Field,
    GridSpec,
    dealiased_product_coeffs,
    dispersion_symbol,
    fft_workers,
)

MIN_TIME_SAMPLES = 128
RATIO_FLOOR = 1e-14


@dataclass(frozen=True)
class BourgainParams:
    sigma: float = 0.5
    b: float = 0.55
    b_prime: float = 0.65
    delta: float = 0.05
    cutoff_margin: float = 0.25

    def __post_init__(self):
        object.__setattr__(self, "sigma", _as_sigma(self.sigma))
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")
        if not 0 < self.delta <= 1:
            raise ValueError(f"delta must lie in (0, 1], got {self.delta}")
        if not 0 < self.cutoff_margin < 0.5:
            raise ValueError(f"cutoff_margin must lie in (0, 1/2), got {self.cutoff_margin}")

    def check_energy_window(self):
        """1/2 < b < b' < 1, the range of the linear energy estimate."""
        if not 0.5 < self.b < self.b_prime < 1:
            raise ValueError(f"need 1/2 < b < b' < 1, got b={self.b}, b'={self.b_prime}")

    def check_trilinear_window(self):
        self.check_energy_window()
        if not self.b < 0.7:
            raise ValueError(f"trilinear estimates need b < 7/10, got b={self.b}")

    @property
    def weight(self) -> GevreyWeight:
        return GevreyWeight(self.sigma)


# -- cutoff -------------------------------------------------------------------------


def _glue(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = np.exp(-1.0 / x[pos])
    return out


@dataclass(frozen=True)
class Cutoff:
    """Even C-infinity bump: 1 for |t| <= plateau, 0 for |t| >= support."""

    delta: float
    margin: float

    @property
    def plateau(self) -> float:
        return self.delta * (1 - 2 * self.margin)

    @property
    def support(self) -> float:
        return self.delta * (1 - self.margin)

    def __call__(self, t):
        s = (np.abs(np.asarray(t, dtype=float)) - self.plateau) / (self.support - self.plateau)
        s = np.clip(s, 0.0, 1.0)
        up, down = _glue(1.0 - s), _glue(s)
        return up / (up + down)


def make_cutoff(delta: float, margin: float) -> Cutoff:
    if not delta > 0:
        raise ValueError("delta must be positive")
    if not 0 < margin < 0.5:
        raise ValueError(f"margin must lie in (0, 1/2), got {margin}")
    return Cutoff(float(delta), float(margin))


def window_times(delta: float, nt: int) -> np.ndarray:
    """nt uniform samples of [-delta, delta); t = 0 is sample nt // 2."""
    if nt < 8 or nt % 2:
        raise ValueError("nt must be an even integer >= 8")
    return -delta + (2 * delta / nt) * np.arange(nt)


# -- spacetime fields ---------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SpaceTimeField:
    """Real samples u(x_m, t_j) on a uniform time grid, stored as (time, space)."""

    grid: GridSpec
    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values)
        if v.shape != (len(t), self.grid.n_points):
            raise ValueError(f"values must have shape {(len(t), self.grid.n_points)}, got {v.shape}")
        if np.iscomplexobj(v):
            if np.max(np.abs(v.imag)) > 1e-12 * max(1.0, np.max(np.abs(v.real))):
                raise ValueError("spacetime values must be real")
            v = v.real
        if len(t) < 2 or np.max(np.abs(np.diff(t) - (t[1] - t[0]))) > 1e-9 * abs(t[1] - t[0]):
            raise ValueError("times must be uniformly spaced")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", np.ascontiguousarray(v, dtype=float))

    @classmethod
    def from_spectra(cls, grid: GridSpec, times, spectra) -> "SpaceTimeField":
        vals = sfft.ifft(spectra, axis=-1, workers=fft_workers()).real * (SQRT_2PI / grid.dx)
        return cls(grid, times, vals)

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    @property
    def window(self) -> float:
        return self.dt * len(self.times)

    @property
    def spectra(self) -> np.ndarray:
        return sfft.fft(self.values, axis=-1, workers=fft_workers()) * (self.grid.dx / SQRT_2PI)

    def slice(self, j: int) -> Field:
        return Field.from_physical(self.grid, self.values[j])

    def tapered(self, cutoff) -> "SpaceTimeField":
        return SpaceTimeField(self.grid, self.times, self.values * cutoff(self.times)[:, None])

    def __sub__(self, other):
        return SpaceTimeField(self.grid, self.times, self.values - other.values)


def frequencies(u: SpaceTimeField) -> tuple[np.ndarray, np.ndarray]:
    """(xi, tau) axes of :func:`spacetime_transform`, both in FFT order."""
    tau = 2 * np.pi * np.fft.fftfreq(len(u.times), u.dt)
    return u.grid.wavenumbers, tau


def spacetime_transform(u: SpaceTimeField) -> np.ndarray:
    """u_tilde(xi, tau) = (2 pi)^-1 int int u exp(-i(x xi + t tau)) dx dt, returned as (tau, xi)."""
    _, tau = frequencies(u)
    coeffs = sfft.fft2(u.values, workers=fft_workers()) * (u.grid.dx * u.dt / (2 * np.pi))
    return coeffs * np.exp(-1j * tau * u.times[0])[:, None]


def spacetime_l2(u: SpaceTimeField) -> float:
    return float(np.sqrt(np.sum(u.values**2) * u.grid.dx * u.dt))


# Zero-padding factor for the time transform inside the X norm.  Without it
# tau is sampled at spacing pi/delta and the weighted sum underestimates the
# integral by several percent; the error falls off like 1/TIME_PAD^2.
TIME_PAD = 8


def _twisted_time_transform(spectra: np.ndarray, times: np.ndarray, phi: np.ndarray, dt: float,
                            pad: int = 1) -> np.ndarray:
    # v(xi, t) = exp(i t phi(xi)) u_hat(xi, t), transformed in t; |.| is all the norm needs.
    twisted = spectra * np.exp(1j * np.outer(times, phi))
    return sfft.fft(twisted, n=pad * len(times), axis=0, workers=fft_workers()) * (dt / SQRT_2PI)


def xsb_norm(u: SpaceTimeField, params: BourgainParams | None = None, p: EquationParams | None = None,
             sigma=None, b=None) -> float:
    """Discrete X_{sigma,b} norm with weight exp(2 sigma|xi|) (1 + |tau + phi(xi)|)^(2b).

    Evaluated in the frame of the linear flow: with v(t) = S(-t)u(t) the norm
    is the H^b_t G^sigma_x norm of v, which keeps the dispersive shift
    tau -> tau + phi(xi) exact on a coarse time grid.  The field is taken
    to vanish outside the sampled window.  ``sigma``/``b`` override the
    values in ``params``.
    """
    params = params or BourgainParams()
    p = p or EquationParams()
    s = params.sigma if sigma is None else _as_sigma(sigma)
    bb = params.b if b is None else float(b)
    return _xsb_from_spectra(u.spectra, u, p, s, bb)


def _xsb_from_spectra(spectra, u: SpaceTimeField, p: EquationParams, sigma: float, b: float) -> float:
    grid = u.grid
    phi = dispersion_symbol(grid.wavenumbers, p)
    m = TIME_PAD * len(u.times)
    vt = _twisted_time_transform(spectra, u.times, phi, u.dt, TIME_PAD)
    tau = 2 * np.pi * np.fft.fftfreq(m, u.dt)
    w_xi = exp_weight(grid, sigma) ** 2
    w_tau = (1.0 + np.abs(tau)) ** (2 * b)
    dtau = 2 * np.pi / (m * u.dt)
    return float(np.sqrt(np.sum(w_tau[:, None] * w_xi[None, :] * np.abs(vt) ** 2) * grid.dxi * dtau))


def sup_gevrey(u: SpaceTimeField, sigma: float, t_max: float | None = None, t_min: float = 0.0) -> float:
    """max over t_min <= t <= t_max of ||u(t)||_{G^sigma}."""
    w = exp_weight(u.grid, sigma)
    sel = u.times >= t_min - 1e-12
    if t_max is not None:
        sel &= u.times <= t_max + 1e-12
    spec = u.spectra[sel]
    norms = np.sqrt(np.sum(np.abs(spec * w) ** 2, axis=1) * u.grid.dxi)
    return float(norms.max()) if norms.size else 0.0


# -- Duhamel ------------------------------------------------------------------------


def duhamel_spectra(forcing_spectra: np.ndarray, times: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """Per-mode int_0^t exp(-i(t - t') phi) F(t') dt' on the sample times.

    The rotating-frame integrand exp(i t' phi) F(t') is integrated with the
    cumulative trapezoid rule outward from t = 0 (which must be a sample).
    """
    j0 = int(np.argmin(np.abs(times)))
    if abs(times[j0]) > 1e-12 * max(1.0, np.max(np.abs(times))):
        raise ValueError("t = 0 must be one of the sample times")
    h = times[1] - times[0]
    G = np.exp(1j * np.outer(times, phi)) * forcing_spectra
    W = np.zeros_like(G)
    half = 0.5 * h
    for j in range(j0 + 1, len(times)):
        W[j] = W[j - 1] + half * (G[j - 1] + G[j])
    for j in range(j0 - 1, -1, -1):
        W[j] = W[j + 1] - half * (G[j + 1] + G[j])
    return np.exp(-1j * np.outer(times, phi)) * W


def duhamel_integral(forcing: SpaceTimeField, p: EquationParams) -> SpaceTimeField:
    """t -> int_0^t S(t - t') forcing(t') dt' (negative t integrates backwards)."""
    phi = dispersion_symbol(forcing.grid.wavenumbers, p)
    out = duhamel_spectra(forcing.spectra, forcing.times, phi)
    return SpaceTimeField.from_spectra(forcing.grid, forcing.times, out)


# -- Picard iteration ------------------------------------------------------------------


@dataclass
class PicardReport:
    iterate_distances: list
    contraction_ratios: list
    xsb_distances: list
    final_vs_oracle: float
    converged: bool
    diverged: bool = False
    M: float = float("nan")
    a_norm: float = float("nan")
    xsb_final: float = float("nan")
    sup_gevrey_final: float = float("nan")
    params: dict = dc_field(default_factory=dict)

    @property
    def max_ratio(self) -> float:
        return max(self.contraction_ratios) if self.contraction_ratios else 0.0

    def as_dict(self) -> dict:
        return {
            "iterate_distances": self.iterate_distances,
            "contraction_ratios": self.contraction_ratios,
            "max_ratio": self.max_ratio,
            "xsb_distances": self.xsb_distances,
            "final_vs_oracle": self.final_vs_oracle,
            "converged": self.converged,
            "diverged": self.diverged,
            "M": self.M,
            "a_norm": self.a_norm,
            "xsb_final": self.xsb_final,
            "sup_gevrey_final": self.sup_gevrey_final,
            "params": self.params,
        }


def nonlinear_spectra(spectra: np.ndarray, grid: GridSpec, p: EquationParams, a: DampingProfile) -> np.ndarray:
    """N(u) for a stack of coefficient rows."""
    ik = 1j * grid.wavenumbers
    ik[grid.nyquist_index] = 0.0
    a_hat = np.broadcast_to(a.field.spectral, spectra.shape)
    out = dealiased_product_coeffs([a_hat, spectra], grid)
    if p.mu:
        out = out + p.mu * ik * dealiased_product_coeffs([spectra, spectra], grid)
    if p.lam:
        out = out + p.lam * ik * dealiased_product_coeffs([spectra, spectra, spectra], grid)
    return out


def free_evolution(u0: Field, times: np.ndarray, p: EquationParams) -> np.ndarray:
    """Rows S(t_j) u0 (real fields: Nyquist dropped)."""
    phi = dispersion_symbol(u0.grid.wavenumbers, p)
    out = np.exp(-1j * np.outer(times, phi)) * u0.spectral[None, :]
    out[:, u0.grid.nyquist_index] = 0.0
    return out


def picard_iterate(u0: Field, p: EquationParams, a: DampingProfile, params: BourgainParams | None = None,
                   n_iters: int = 12, nt: int = 256, tol: float = 1e-11, oracle_substeps: int = 8,
                   oracle: bool = True) -> PicardReport:
    """Iterate u -> psi(t) [S(t) u0 - int_0^t S(t - t') N(u(t')) dt'] from the free solution.

    Distances between successive iterates use sup over t in [0, delta(1 - margin)]
    of the G^sigma norm; X_{sigma,b} distances are recorded alongside.  The
    last iterate is compared on the cutoff plateau with a time-stepped
    solution (``oracle_substeps`` solver steps per time sample).
    """
    params = params or BourgainParams()
    if n_iters < 2:
        raise ValueError("n_iters must be >= 2")
    if nt < MIN_TIME_SAMPLES:
        raise ValueError(f"need at least {MIN_TIME_SAMPLES} time samples per window")
    grid = u0.grid
    sigma = params.sigma
    check_overflow(grid, sigma)
    times = window_times(params.delta, nt)
    cutoff = make_cutoff(params.delta, params.cutoff_margin)
    psi = cutoff(times)[:, None]
    phi = dispersion_symbol(grid.wavenumbers, p)
    free = free_evolution(u0, times, p)
    U = psi * free
    w = exp_weight(grid, sigma)
    work = (times >= -1e-12) & (times <= cutoff.support + 1e-12)
    shell = SpaceTimeField(grid, times, np.zeros((nt, grid.n_points)))

    def sup_norm(spec):
        return float(np.max(np.sqrt(np.sum(np.abs(spec[work] * w) ** 2, axis=1) * grid.dxi)))

    scale = max(sup_norm(U), 1.0)
    distances, ratios, xsb_d = [], [], []
    converged = diverged = False
    streak = 0
    for _ in range(n_iters):
        forcing = -nonlinear_spectra(U, grid, p, a)
        U_next = psi * (free + duhamel_spectra(forcing, times, phi))
        U_next[:, grid.nyquist_index] = 0.0
        diff = U_next - U
        d = sup_norm(diff)
        distances.append(d)
        xsb_d.append(_xsb_from_spectra(diff, shell, p, sigma, params.b))
        if len(distances) >= 2 and distances[-2] > max(RATIO_FLOOR, tol * scale):
            ratios.append(d / distances[-2])
            streak = streak + 1 if ratios[-1] > 1 else 0
        U = U_next
        if d <= tol * scale:
            converged = True
            break
        if streak >= 3:
            diverged = True
            break

    final_vs_oracle = float("nan")
    if oracle:
        final_vs_oracle = _oracle_distance(u0, U, times, cutoff, p, a, sigma, oracle_substeps)
    try:
        a_norm = a_sigma_norm(a, sigma) if sigma > 0 else a.sup_norm
    except Exception:
        a_norm = float("nan")
    xsb_final = _xsb_from_spectra(U, shell, p, sigma, params.b)
    return PicardReport(
        iterate_distances=distances,
        contraction_ratios=ratios,
        xsb_distances=xsb_d,
        final_vs_oracle=final_vs_oracle,
        converged=converged,
        diverged=diverged,
        M=a_norm + 2 * xsb_final + 2 * xsb_final**2,
        a_norm=a_norm,
        xsb_final=xsb_final,
        sup_gevrey_final=sup_norm(U),
        params={"sigma": sigma, "b": params.b, "b_prime": params.b_prime, "delta": params.delta,
                "cutoff_margin": params.cutoff_margin, "nt": nt},
    )


def _oracle_distance(u0, U, times, cutoff, p, a, sigma, substeps) -> float:
    grid = u0.grid
    h = times[1] - times[0]
    plateau = np.flatnonzero((times >= -1e-12) & (times <= cutoff.plateau + 1e-12))
    n_samples = len(plateau) - 1
    cfg = IntegratorConfig(dt=h / substeps, record_every=substeps)
    traj = evolve(State(u0, 0.0), n_samples * h, p, a, cfg)
    w = exp_weight(grid, sigma)
    ref = traj.spectra.copy()
    ref[:, grid.nyquist_index] = 0.0
    diff = U[plateau] - ref
    return float(np.max(np.sqrt(np.sum(np.abs(diff * w) ** 2, axis=1) * grid.dxi)))
