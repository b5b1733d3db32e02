"""Gevrey norms, the exponential weight operator, the A^sigma damping norm and
the radius-of-analyticity estimator."""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from math import lgamma, log

import numpy as np

from .spectral import Field, GridSpec, SQRT_2PI

OVERFLOW_EXPONENT = 700.0
NOISE_FLOOR = 1e-13
A_NORM_RTOL = 1e-10
DEFAULT_A_TERMS = 64
CONVEXITY_TOL = 0.5


class GevreyOverflowError(OverflowError):
    """The weight exp(sigma*|xi|) would overflow on the requested grid."""


class AssumptionError(ValueError):
    """The damping profile violates a standing hypothesis (floor or A^sigma summability)."""


class RadiusFitError(ValueError):
    """Not enough resolved Fourier modes to fit a decay rate."""


@dataclass(frozen=True)
class GevreyWeight:
    sigma: float

    def __post_init__(self):
        if not np.isfinite(self.sigma) or self.sigma < 0:
            raise ValueError(f"sigma must be a nonnegative real, got {self.sigma!r}")
        object.__setattr__(self, "sigma", float(self.sigma))

    def weights(self, grid: GridSpec) -> np.ndarray:
        return exp_weight(grid, self.sigma)


def _as_sigma(sigma) -> float:
    return sigma.sigma if isinstance(sigma, GevreyWeight) else float(sigma)


def check_overflow(grid: GridSpec, sigma: float):
    if abs(sigma) * grid.xi_max > OVERFLOW_EXPONENT:
        raise GevreyOverflowError(
            f"sigma*xi_max = {abs(sigma) * grid.xi_max:.1f} exceeds {OVERFLOW_EXPONENT:g}"
        )


def exp_weight(grid: GridSpec, sigma: float) -> np.ndarray:
    """exp(sigma*|xi|) on the grid, after the overflow guard."""
    check_overflow(grid, sigma)
    return np.exp(sigma * np.abs(grid.wavenumbers))


def gevrey_norm(f: Field, sigma, noise_floor: float = NOISE_FLOOR) -> float:
    """(sum_xi exp(2 sigma |xi|) |f_hat(xi)|^2 dxi)^(1/2).

    Coefficients below ``noise_floor`` times the largest one are left out:
    they are FFT roundoff, and exp(sigma |xi|) would otherwise blow them up
    at high wavenumbers.  The same coefficients are dropped for every sigma,
    so monotonicity in sigma and the interpolation inequality stay exact.
    Pass ``noise_floor=0`` for the raw sum.
    """
    s = _as_sigma(sigma)
    w = exp_weight(f.grid, s)
    c = np.abs(f.spectral)
    if noise_floor > 0:
        c = np.where(c > noise_floor * c.max(), c, 0.0)
    return float(np.sqrt(np.sum((w * c) ** 2) * f.grid.dxi))


def gevrey_norms(f: Field, sigmas, noise_floor: float = NOISE_FLOOR) -> list[float]:
    return [gevrey_norm(f, s, noise_floor) for s in sigmas]


def apply_lambda_sigma(f: Field, sigma) -> Field:
    """Multiply the Fourier coefficients by exp(sigma*|xi|).

    Negative ``sigma`` is accepted and gives the smoothing inverse operator.
    """
    s = _as_sigma(sigma)
    return f.with_spectral(f.spectral * exp_weight(f.grid, s))


def interpolation_gap(f: Field, sigma) -> float:
    """Relative slack in ||f||_{G^{s/2}}^2 <= ||f||_{L2} ||f||_{G^s}; negative means violated."""
    s = _as_sigma(sigma)
    lhs = gevrey_norm(f, s / 2) ** 2
    rhs = gevrey_norm(f, 0.0) * gevrey_norm(f, s)
    if rhs == 0:
        return 0.0
    return (rhs - lhs) / rhs


# -- damping coefficient -----------------------------------------------------


def _clean_spectrum(coeffs: np.ndarray, floor: float = NOISE_FLOOR) -> np.ndarray:
    # Roundoff coefficients would be amplified by |xi|^k in high derivatives.
    peak = np.max(np.abs(coeffs)) if coeffs.size else 0.0
    out = coeffs.copy()
    out[np.abs(out) < floor * peak] = 0.0
    return out


def derivative_sup_norms(a: Field, K: int) -> np.ndarray:
    """Grid maxima of |d^k a/dx^k| for k = 0..K via spectral differentiation."""
    coeffs = _clean_spectrum(a.spectral)
    xi = a.grid.wavenumbers
    out = np.empty(K + 1)
    out[0] = np.max(np.abs(a.physical))
    for k in range(1, K + 1):
        mult = (1j * xi) ** k
        if k % 2:
            mult[a.grid.nyquist_index] = 0.0
        deriv = np.fft.ifft(coeffs * mult) * (SQRT_2PI / a.grid.dx)
        out[k] = np.max(np.abs(deriv.real))
    return out


@dataclass(frozen=True, eq=False)
class DampingProfile:
    """Samples of a(x) with its floor gamma and derivative sup norms.

    ``kind``/``params`` record a named preset (used for closed-form checks and
    for config round trips); free-form profiles use ``kind="samples"``.
    """

    field: Field
    gamma: float
    derivative_sup_norms: np.ndarray
    kind: str = "samples"
    params: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        if not np.isfinite(self.gamma) or self.gamma < 0:
            raise ValueError(f"gamma must be a nonnegative real, got {self.gamma!r}")
        if not self.field.real:
            raise ValueError("damping coefficient must be real-valued")

    @classmethod
    def from_field(cls, a: Field, gamma: float, K: int = DEFAULT_A_TERMS, kind="samples", params=None):
        return cls(a, float(gamma), derivative_sup_norms(a, K), kind, dict(params or {}))

    @property
    def grid(self) -> GridSpec:
        return self.field.grid

    @property
    def values(self) -> np.ndarray:
        return self.field.physical

    @property
    def sup_norm(self) -> float:
        return float(self.derivative_sup_norms[0])

    @property
    def minimum(self) -> float:
        return float(np.min(self.values))

    @property
    def is_constant(self) -> bool:
        return bool(np.ptp(self.values) <= 1e-14 * max(1.0, self.sup_norm))

    @property
    def band_limit(self) -> float:
        """Largest |xi| carrying a coefficient above the noise floor."""
        coeffs = _clean_spectrum(self.field.spectral)
        live = np.abs(self.grid.wavenumbers)[coeffs != 0]
        return float(live.max()) if live.size else 0.0

    @property
    def coefficient_l1(self) -> float:
        """sum |a_hat| dxi / sqrt(2 pi): an upper bound for every sup norm of exp(i xi x) sums."""
        coeffs = _clean_spectrum(self.field.spectral)
        return float(np.sum(np.abs(coeffs)) * self.grid.dxi / SQRT_2PI)


def constant_damping(grid: GridSpec, value: float, gamma: float | None = None) -> DampingProfile:
    a = Field.from_physical(grid, np.full(grid.n_points, float(value)))
    gamma = float(value) if gamma is None else gamma
    return DampingProfile.from_field(a, gamma, kind="constant", params={"value": float(value)})


def sine_damping(grid: GridSpec, mean: float, amplitude: float, wavenumber: float = 1.0,
                 gamma: float | None = None) -> DampingProfile:
    """a(x) = mean + amplitude*sin(wavenumber*x); wavenumber must fit the period."""
    _check_periodic(grid, wavenumber)
    a = Field.from_physical(grid, mean + amplitude * np.sin(wavenumber * grid.x))
    gamma = mean - abs(amplitude) if gamma is None else gamma
    return DampingProfile.from_field(
        a, max(gamma, 0.0), kind="sine",
        params={"mean": float(mean), "amplitude": float(amplitude), "wavenumber": float(wavenumber)},
    )


def cosine_bump_damping(grid: GridSpec, gamma: float, height: float, wavenumber: float = 1.0) -> DampingProfile:
    """a(x) = gamma + height*(1 + cos(wavenumber*x)) >= gamma."""
    _check_periodic(grid, wavenumber)
    a = Field.from_physical(grid, gamma + height * (1.0 + np.cos(wavenumber * grid.x)))
    return DampingProfile.from_field(
        a, gamma, kind="cosine_bump",
        params={"gamma": float(gamma), "height": float(height), "wavenumber": float(wavenumber)},
    )


def _check_periodic(grid: GridSpec, wavenumber: float):
    m = wavenumber / grid.dxi
    if abs(m - round(m)) > 1e-9:
        raise ValueError(f"wavenumber {wavenumber} is not periodic on L = {grid.period}")


def a_sigma_terms(a: DampingProfile, sigma: float, K: int) -> np.ndarray:
    """Terms (k+1)^(1/4) sigma^k / k! ||d^k a||_inf for k = 0..K."""
    norms = a.derivative_sup_norms
    if len(norms) < K + 1:
        norms = derivative_sup_norms(a.field, K)
    k = np.arange(K + 1)
    with np.errstate(divide="ignore"):
        log_coef = np.array([0.25 * log(j + 1) + (j * log(sigma) if sigma > 0 else (0.0 if j == 0 else -np.inf))
                             - lgamma(j + 1) for j in k])
    return np.exp(log_coef) * norms[: K + 1]


def a_sigma_tail_bound(a: DampingProfile, sigma: float, K: int) -> float:
    """Upper bound on sum_{k > K} of the A^sigma terms.

    Uses ||d^k a||_inf <= S * R^k with S the coefficient l1 mass and R the band
    limit, then a geometric majorant once the term ratio drops below one.
    """
    R = a.band_limit
    if sigma == 0 or R == 0:
        return 0.0
    S = a.coefficient_l1
    x = sigma * R
    j = K + 1
    ratio = ((j + 2) / (j + 1)) ** 0.25 * x / (j + 1)
    if ratio >= 1:
        return np.inf
    first = np.exp(0.25 * log(j + 1) + j * log(x) - lgamma(j + 1)) * S
    return float(first / (1.0 - ratio))


def a_sigma_norm(a: DampingProfile, sigma, K: int = DEFAULT_A_TERMS) -> float:
    """sum_{k=0}^K (k+1)^(1/4) sigma^k/k! ||d^k a||_inf with a certified tail.

    Raises AssumptionError when the tail bound is not below 1e-10 of the partial sum.
    """
    s = _as_sigma(sigma)
    if K < 1:
        raise ValueError("K must be a positive integer")
    total = float(np.sum(a_sigma_terms(a, s, K)))
    tail = a_sigma_tail_bound(a, s, K)
    if not np.isfinite(total) or tail > A_NORM_RTOL * max(total, np.finfo(float).tiny):
        raise AssumptionError(
            f"A^sigma series not certified at sigma={s:g}, K={K}: partial sum {total:.6g}, tail bound {tail:.3g}"
        )
    return total


def check_assumptions(a: DampingProfile, sigma0, K: int = DEFAULT_A_TERMS) -> dict:
    """Report on the damping floor and A^{sigma0} summability of ``a``."""
    s = _as_sigma(sigma0)
    report = {
        "gamma": a.gamma,
        "grid_min": a.minimum,
        "floor_pass": bool(a.gamma > 0 and a.minimum >= a.gamma),
        "sigma0": s,
        "a_norm": None,
        "summability_pass": False,
    }
    try:
        report["a_norm"] = a_sigma_norm(a, s, K)
        report["summability_pass"] = True
    except (AssumptionError, GevreyOverflowError) as exc:
        report["summability_error"] = str(exc)
    return report


# -- radius of analyticity ----------------------------------------------------


@dataclass(frozen=True)
class RadiusFit:
    sigma_hat: float
    intercept: float
    residual: float
    window: tuple[float, float]
    n_modes: int
    entire_beyond_window: bool = False
    curvature: float = 0.0

    def as_dict(self) -> dict:
        return {
            "sigma_hat": self.sigma_hat,
            "intercept": self.intercept,
            "residual": self.residual,
            "window": list(self.window),
            "n_modes": self.n_modes,
            "entire_beyond_window": self.entire_beyond_window,
        }


def default_window(grid: GridSpec) -> tuple[float, float]:
    return (2.0, grid.xi_max / 4.0)


def estimate_radius(f: Field, window=None, noise_floor: float = NOISE_FLOOR, min_modes: int = 8) -> RadiusFit:
    """Fit log|f_hat| = c - sigma_hat*|xi| over the window.

    Modes whose modulus is below ``noise_floor`` times the largest coefficient
    are dropped.  A quadratic fit measures how much the decay rate drifts
    across the usable range; a drift above half the mean rate marks
    super-exponential decay and sets ``entire_beyond_window``.
    """
    lo, hi = default_window(f.grid) if window is None else window
    if not hi > lo >= 0:
        raise RadiusFitError(f"empty window [{lo}, {hi}]")
    coeffs = np.abs(f.spectral)
    peak = coeffs.max()
    if peak == 0:
        raise RadiusFitError("field is identically zero")
    absxi = np.abs(f.grid.wavenumbers)
    keep = (absxi >= lo) & (absxi <= hi) & (coeffs > noise_floor * peak)
    if f.real:
        keep &= f.grid.wavenumbers > 0
    if keep.sum() < min_modes:
        raise RadiusFitError(f"only {int(keep.sum())} usable modes in window [{lo:g}, {hi:g}]")
    xs = absxi[keep]
    ys = np.log(coeffs[keep])
    A = np.vstack([np.ones_like(xs), -xs]).T
    (c, s), *_ = np.linalg.lstsq(A, ys, rcond=None)
    resid = float(np.sqrt(np.mean((ys - A @ np.array([c, s])) ** 2)))
    q = 0.0
    entire = False
    if keep.sum() >= 3:
        q = float(np.polyfit(xs, ys, 2)[0])
        drift = -2.0 * q * (xs.max() - xs.min())
        entire = bool(drift > CONVEXITY_TOL * abs(s))
    return RadiusFit(float(s), float(c), resid, (float(lo), float(hi)), int(keep.sum()), entire, q)
