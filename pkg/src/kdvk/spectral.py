"""Periodic Fourier grid, transforms, spectral derivatives and dealiased products.

Conventions
-----------
Coefficients are stored in FFT order with wavenumbers

    xi_k = 2*pi*k/L,   k = 0, 1, ..., n/2, -n/2+1, ..., -1

so the Nyquist mode carries the *positive* wavenumber n/2.  The forward
transform is the unitary discretisation of the continuum transform,

    u_hat(xi) = dx / sqrt(2*pi) * sum_j u(x_j) exp(-i xi x_j),

which makes ``sum |u_hat|^2 * dxi`` equal ``sum |u|^2 * dx`` exactly.
"""
from __future__ import annotations

import os
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.fft as sfft

SQRT_2PI = np.sqrt(2.0 * np.pi)
MAX_DERIVATIVE_ORDER = 6
ROUNDTRIP_RTOL = 1e-12


def fft_workers() -> int:
    """Worker count for scipy.fft, capped by ``KDVK_THREADS``."""
    cap = os.environ.get("KDVK_THREADS")
    if cap:
        try:
            return max(1, int(cap))
        except ValueError:
            pass
    return 1


@dataclass(frozen=True)
class EquationParams:
    """Coefficients of u_t + alpha u_5x + beta u_3x + mu (u^2)_x + lambda (u^3)_x + a u = 0."""

    alpha: float = 1.0
    beta: float = 1.0
    mu: float = 1.0
    lam: float = 1.0

    def __post_init__(self):
        for name in ("alpha", "beta", "mu", "lam"):
            value = getattr(self, name)
            if not np.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value!r}")
            object.__setattr__(self, name, float(value))
        if self.alpha == 0:
            raise ValueError("alpha must be nonzero (fifth-order dispersion is required)")


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic grid on ``[0, period)``."""

    n_points: int
    period: float

    def __post_init__(self):
        n = self.n_points
        if not isinstance(n, (int, np.integer)) or n < 8 or n & (n - 1):
            raise ValueError(f"n_points must be a power of two >= 8, got {n!r}")
        if not np.isfinite(self.period) or self.period <= 0:
            raise ValueError(f"period must be positive, got {self.period!r}")
        object.__setattr__(self, "n_points", int(n))
        object.__setattr__(self, "period", float(self.period))

    @property
    def dx(self) -> float:
        return self.period / self.n_points

    @property
    def dxi(self) -> float:
        return 2.0 * np.pi / self.period

    @cached_property
    def x(self) -> np.ndarray:
        return np.arange(self.n_points) * self.dx

    @cached_property
    def mode_numbers(self) -> np.ndarray:
        n = self.n_points
        k = np.fft.fftfreq(n, 1.0 / n)
        k[n // 2] = n // 2
        return k.astype(np.int64)

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """Wavenumbers in FFT order (Nyquist positive)."""
        return self.dxi * self.mode_numbers

    @property
    def nyquist_index(self) -> int:
        return self.n_points // 2

    @property
    def xi_max(self) -> float:
        return self.dxi * (self.n_points // 2)

    def sorted_wavenumbers(self) -> np.ndarray:
        return np.sort(self.wavenumbers)


def make_grid(n: int, L: float) -> GridSpec:
    """Build a grid of ``n`` points (power of two, >= 8) with period ``L``."""
    return GridSpec(n, L)


def forward(values: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Array-level forward transform along the last axis."""
    return sfft.fft(values, axis=-1, workers=fft_workers()) * (grid.dx / SQRT_2PI)


def inverse(coeffs: np.ndarray, grid: GridSpec, real: bool = True) -> np.ndarray:
    out = sfft.ifft(coeffs, axis=-1, workers=fft_workers()) * (SQRT_2PI / grid.dx)
    return out.real.copy() if real else out


@dataclass(frozen=True, eq=False)
class Field:
    """A function on a periodic grid.

    Only the authoritative representation (``"physical"`` or ``"spectral"``)
    is stored at construction; the other one is computed on first access and
    cached.  Real fields keep real physical samples and conjugate-symmetric
    coefficients (the Nyquist coefficient is real).
    """

    grid: GridSpec
    data: np.ndarray
    authority: str = "physical"
    real: bool = True

    def __post_init__(self):
        if self.authority not in ("physical", "spectral"):
            raise ValueError(f"unknown representation {self.authority!r}")
        arr = np.asarray(self.data)
        if arr.shape != (self.grid.n_points,):
            raise ValueError(f"expected {self.grid.n_points} samples, got shape {arr.shape}")
        if self.authority == "physical":
            arr = arr.astype(float if self.real else complex)
        else:
            arr = arr.astype(complex)
        if not np.all(np.isfinite(arr)):
            raise FloatingPointError("field contains non-finite values")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @classmethod
    def from_physical(cls, grid: GridSpec, values) -> "Field":
        values = np.asarray(values)
        real = not np.iscomplexobj(values)
        return cls(grid, values, "physical", real)

    @classmethod
    def from_spectral(cls, grid: GridSpec, coeffs, real: bool = True) -> "Field":
        coeffs = np.asarray(coeffs, dtype=complex)
        if real:
            coeffs = enforce_real_spectrum(coeffs)
        return cls(grid, coeffs, "spectral", real)

    @classmethod
    def from_function(cls, grid: GridSpec, func) -> "Field":
        return cls.from_physical(grid, func(grid.x))

    @cached_property
    def physical(self) -> np.ndarray:
        if self.authority == "physical":
            return self.data
        out = inverse(self.data, self.grid, real=self.real)
        out.setflags(write=False)
        return out

    @cached_property
    def spectral(self) -> np.ndarray:
        if self.authority == "spectral":
            return self.data
        out = forward(self.data, self.grid)
        out.setflags(write=False)
        return out

    def with_spectral(self, coeffs) -> "Field":
        return Field.from_spectral(self.grid, coeffs, real=self.real)

    def __repr__(self):
        return f"Field(n={self.grid.n_points}, L={self.grid.period:g}, {self.authority}, real={self.real})"


def enforce_real_spectrum(coeffs: np.ndarray) -> np.ndarray:
    """Project coefficients onto the conjugate-symmetric subspace."""
    mirrored = np.conj(np.roll(coeffs[..., ::-1], 1, axis=-1))
    return 0.5 * (coeffs + mirrored)


def transform_forward(f: Field) -> Field:
    """Return ``f`` with its spectral representation populated."""
    f.spectral
    return f


def transform_inverse(f: Field) -> Field:
    f.physical
    return f


def l2_norm(f: Field) -> float:
    return float(np.sqrt(np.sum(np.abs(f.spectral) ** 2) * f.grid.dxi))


def inner_product(f: Field, g: Field) -> float:
    _check_same_grid(f, g)
    return float(np.real(np.vdot(f.spectral, g.spectral)) * f.grid.dxi)


def dispersion_symbol(xi, p) -> np.ndarray | float:
    """phi(xi) = alpha*xi^5 - beta*xi^3."""
    xi = np.asarray(xi, dtype=float)
    out = p.alpha * xi**5 - p.beta * xi**3
    return float(out) if out.ndim == 0 else out


# 2*pi split into pieces of 22 significant bits (plus an inexact tail), so
# n*piece is exact for |n| < 2**31 (Cody-Waite reduction).
def _truncate_bits(x: float, bits: int) -> float:
    m, e = np.frexp(x)
    return float(np.ldexp(np.floor(m * 2.0**bits), e - bits))


def _split_two_pi(bits: int = 22, pieces: int = 4) -> tuple:
    lo = 2.4492935982947064e-16  # 2*pi - float(2*pi)
    rest, out = 2 * np.pi, []
    for _ in range(pieces):
        c = _truncate_bits(rest, bits)
        out.append(c)
        rest -= c
    out.append(rest + lo)
    return tuple(out)


_TWO_PI_PIECES = _split_two_pi()
_MAX_TURNS = 2.0**31
_SPLIT = 134217729.0  # 2**27 + 1


def _two_prod(a, b):
    """p + e == a*b exactly (Dekker)."""
    p = a * b
    ca, cb = _SPLIT * a, _SPLIT * b
    ah, bh = ca - (ca - a), cb - (cb - b)
    al, bl = a - ah, b - bh
    e = ((ah * bh - p) + ah * bl + al * bh) + al * bl
    return p, e


def phase_factor(phi, t: float) -> np.ndarray:
    """exp(-i t phi) with t*phi formed exactly and reduced mod 2*pi in extra precision.

    Large phases (|t phi| ~ 1e6 at fine resolution) otherwise lose about
    |t phi| * eps in the argument, which breaks S(t1)S(t2) = S(t1+t2) at
    the 1e-10 level.
    """
    phi = np.asarray(phi, dtype=float)
    p, e = _two_prod(phi, np.float64(t))
    n = np.rint(p / (2 * np.pi))
    ok = np.abs(n) < _MAX_TURNS
    n = np.where(ok, n, 0.0)
    r = p
    for c in _TWO_PI_PIECES[:-1]:
        r = r - n * c
    r = (r + e) - n * _TWO_PI_PIECES[-1]
    r = np.where(ok, r, np.fmod(p, 2 * np.pi))
    return np.cos(r) - 1j * np.sin(r)


def derivative_multiplier(grid: GridSpec, order: int, zero_nyquist: bool = True) -> np.ndarray:
    if order < 0 or order > MAX_DERIVATIVE_ORDER:
        raise ValueError(f"derivative order must be in [0, {MAX_DERIVATIVE_ORDER}], got {order}")
    mult = (1j * grid.wavenumbers) ** order
    if order % 2 and zero_nyquist:
        mult[grid.nyquist_index] = 0.0
    return mult


def spatial_derivative(f: Field, order: int) -> Field:
    """Spectral derivative of the given order (Nyquist zeroed for odd orders of real fields)."""
    mult = derivative_multiplier(f.grid, order, zero_nyquist=f.real)
    return f.with_spectral(f.spectral * mult)


def _check_same_grid(f: Field, g: Field):
    if f.grid != g.grid:
        raise ValueError(f"grid mismatch: {f.grid} vs {g.grid}")


def _pad(coeffs: np.ndarray, n: int, m: int) -> np.ndarray:
    # The Nyquist coefficient is split between +-n/2 so that real data stays real.
    half = n // 2
    out = np.zeros(coeffs.shape[:-1] + (m,), dtype=complex)
    out[..., :half] = coeffs[..., :half]
    out[..., m - half + 1:] = coeffs[..., half + 1:]
    out[..., half] = 0.5 * coeffs[..., half]
    out[..., m - half] = 0.5 * coeffs[..., half]
    return out


def _truncate(coeffs: np.ndarray, n: int, m: int) -> np.ndarray:
    half = n // 2
    out = np.zeros(coeffs.shape[:-1] + (n,), dtype=complex)
    out[..., :half] = coeffs[..., :half]
    out[..., half + 1:] = coeffs[..., m - half + 1:]
    return out


def padded_size(n: int, degree: int) -> int:
    if degree == 2:
        return (3 * n) // 2
    if degree == 3:
        return 2 * n
    raise ValueError(f"degree must be 2 or 3, got {degree}")


def dealiased_power(coeffs: np.ndarray, grid: GridSpec, degree: int, real: bool = True) -> np.ndarray:
    """Coefficients of ``u**degree`` from the coefficients of ``u`` (last axis)."""
    return dealiased_product_coeffs([coeffs] * degree, grid, real=real)


def dealiased_product_coeffs(factors, grid: GridSpec, real: bool = True) -> np.ndarray:
    """Coefficients of the pointwise product of two or three fields.

    The factors are zero-padded to 3n/2 (two factors) or 2n (three factors),
    multiplied pointwise and truncated back to ``|k| < n/2``.  The Nyquist
    mode of the result is zero.
    """
    degree = len(factors)
    n = grid.n_points
    m = padded_size(n, degree)
    # Scaling: the unitary transform on the padded grid has dx' = dx*n/m.
    scale = (m / n) / (grid.dx / SQRT_2PI)
    prod = None
    for c in factors:
        phys = sfft.ifft(_pad(c, n, m), axis=-1, workers=fft_workers()) * scale
        if real:
            phys = phys.real
        prod = phys if prod is None else prod * phys
    out = sfft.fft(prod, axis=-1, workers=fft_workers()) / scale
    return _truncate(out, n, m)


def dealias_product(f: Field, g: Field, degree: int = 2, h: Field | None = None) -> Field:
    """Pointwise product ``f*g`` (``degree=2``) or ``f*g*h`` (``degree=3``), dealiased.

    For ``degree=3`` without ``h`` the third factor defaults to ``g``.
    """
    _check_same_grid(f, g)
    if degree == 2:
        factors = [f.spectral, g.spectral]
    elif degree == 3:
        h = g if h is None else h
        _check_same_grid(f, h)
        factors = [f.spectral, g.spectral, h.spectral]
    else:
        raise ValueError(f"degree must be 2 or 3, got {degree}")
    real = f.real and g.real and (h is None or h.real)
    coeffs = dealiased_product_coeffs(factors, f.grid, real=real)
    return Field.from_spectral(f.grid, coeffs, real=real)
