"""Conservation residuals, decay envelopes, commutator fields and radius tracking."""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .evolution import State, Trajectory
from .gevrey import (
    DampingProfile,
    RadiusFit,
    NOISE_FLOOR,
    RadiusFitError,
    _as_sigma,
    _clean_spectrum,
    estimate_radius,
    exp_weight,
    gevrey_norm,
)
from .spectral import Field, dealiased_product_coeffs, l2_norm

INTERPOLATION_RTOL = 1e-10
L2_DECAY_RTOL = 1e-4
ENVELOPE_CAP = 10.0


@dataclass
class MonitorRecord:
    t: float
    l2: float
    gevrey_norms: dict
    radius: RadiusFit | None = None
    radius_error: str = ""
    l2_identity_residual: float = float("nan")
    commutator_norms: tuple | None = None


@dataclass(frozen=True)
class CommutatorSet:
    delta: Field
    theta: Field
    gamma: Field

    def norms(self) -> tuple[float, float, float]:
        return l2_norm(self.delta), l2_norm(self.theta), l2_norm(self.gamma)


@dataclass
class DecayVerdict:
    sigma_star: float
    envelope_constant: float
    half_rate_pass: bool
    constants: dict = dc_field(default_factory=dict)
    passes: dict = dc_field(default_factory=dict)
    cap: float = 0.0
    interpolation_pass: bool = True
    min_interpolation_slack: float = 0.0
    induction: dict = dc_field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "sigma_star": self.sigma_star,
            "envelope_constant": self.envelope_constant,
            "half_rate_pass": self.half_rate_pass,
            "cap": self.cap,
            "constants": {repr(k): v for k, v in self.constants.items()},
            "passes": {repr(k): v for k, v in self.passes.items()},
            "interpolation_pass": self.interpolation_pass,
            "min_interpolation_slack": self.min_interpolation_slack,
            "induction": self.induction,
        }


def make_monitor(sigmas, window=None, damping: DampingProfile | None = None, commutator_sigma=None):
    """Build a per-record callback for :func:`kdvk.evolution.evolve`."""

    def monitor(state: State) -> MonitorRecord:
        f = state.field
        rec = MonitorRecord(state.time, l2_norm(f), {s: gevrey_norm(f, s) for s in sigmas})
        try:
            rec.radius = estimate_radius(f, window)
        except RadiusFitError as exc:
            rec.radius_error = str(exc)
        if commutator_sigma is not None and damping is not None:
            rec.commutator_norms = commutators(f, commutator_sigma, damping).norms()
        return rec

    return monitor


# -- L2 identity ---------------------------------------------------------------------

# Five-point fourth-order first-derivative stencils.
_CENTERED = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
_EDGE = np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / 12.0
_NEAR_EDGE = np.array([-3.0, -10.0, 18.0, -6.0, 1.0]) / 12.0


def time_derivative(values, h: float) -> np.ndarray:
    """Fourth-order finite-difference d/dt on a uniform record cadence."""
    v = np.asarray(values, dtype=float)
    if len(v) < 5:
        raise ValueError("need at least 5 records for a fourth-order derivative")
    out = np.empty(len(v))
    # np.correlate(v, k)[i] = sum_j v[i+j] k[j]
    out[2:-2] = np.correlate(v, _CENTERED, mode="valid")
    out[0] = _EDGE @ v[:5]
    out[1] = _NEAR_EDGE @ v[:5]
    tail = v[::-1][:5]
    out[-1] = -(_EDGE @ tail)
    out[-2] = -(_NEAR_EDGE @ tail)
    return out / h


def _uniform_interval(traj: Trajectory) -> float:
    t = np.asarray(traj.times)
    if len(t) < 5:
        raise ValueError("trajectory too sparse: need at least 5 records")
    h = np.diff(t)
    if np.max(np.abs(h - h[0])) > 1e-9 * max(1.0, abs(h[0])):
        raise ValueError("records are not uniformly spaced")
    return float(h[0])


def l2_identity_residual(traj: Trajectory, a: DampingProfile) -> np.ndarray:
    """d/dt int u^2 + 2 int a u^2 at every record."""
    h = _uniform_interval(traj)
    grid = traj.grid
    energy = np.empty(len(traj))
    weighted = np.empty(len(traj))
    for i in range(len(traj)):
        u = traj.field(i).physical
        energy[i] = np.sum(u * u) * grid.dx
        weighted[i] = np.sum(a.values * u * u) * grid.dx
    return time_derivative(energy, h) + 2.0 * weighted


def l2_decay_check(traj: Trajectory, gamma: float, rtol: float = L2_DECAY_RTOL) -> dict:
    """Check ||u(t)|| <= (1+rtol) ||u0|| exp(-gamma t) at every record."""
    l2 = np.sqrt(np.sum(np.abs(traj.spectra) ** 2, axis=1) * traj.grid.dxi)
    t = np.asarray(traj.times) - traj.times[0]
    bound = l2[0] * np.exp(-gamma * t)
    slack = bound - l2
    ok = bool(np.all(l2 <= (1.0 + rtol) * bound))
    rel = np.divide(slack, bound, out=np.zeros_like(slack), where=bound > 0)
    return {
        "pass": ok,
        "max_slack": float(np.max(slack)),
        "min_slack": float(np.min(slack)),
        "min_relative_slack": float(np.min(rel)),
        "slack": slack,
    }


# -- commutators -----------------------------------------------------------------------


def commutators(f: Field, sigma, a: DampingProfile, noise_floor: float = NOISE_FLOOR) -> CommutatorSet:
    """Delta, Theta and Gamma of the weighted equation, with dealiased products.

    Spectra are cleaned at ``noise_floor`` first, as in ``gevrey_norm``.
    """
    s = _as_sigma(sigma)
    if s < 0:
        raise ValueError(f"sigma must be nonnegative, got {s}")
    grid = f.grid
    w = exp_weight(grid, s)
    ik = 1j * grid.wavenumbers
    ik[grid.nyquist_index] = 0.0
    u = _clean_spectrum(f.spectral, noise_floor)
    u[grid.nyquist_index] = 0.0
    V = w * u
    a_hat = _clean_spectrum(a.field.spectral, noise_floor)

    def weighted(*factors):
        # roundoff in the unweighted product would be amplified by w
        return w * _clean_spectrum(dealiased_product_coeffs(list(factors), grid), noise_floor)

    delta = ik * (dealiased_product_coeffs([V, V], grid) - weighted(u, u))
    theta = ik * (dealiased_product_coeffs([V, V, V], grid) - weighted(u, u, u))
    gamma = dealiased_product_coeffs([a_hat, V], grid) - weighted(a_hat, u)
    return CommutatorSet(
        Field.from_spectral(grid, delta),
        Field.from_spectral(grid, theta),
        Field.from_spectral(grid, gamma),
    )


def _loglog_slope(x, y) -> float:
    x, y = np.asarray(x, float), np.asarray(y, float)
    ok = (x > 0) & (y > 0)
    if ok.sum() < 2:
        return float("nan")
    return float(np.polyfit(np.log(x[ok]), np.log(y[ok]), 1)[0])


def weight_defect_ratio(sigma: float, xi: np.ndarray, eta: np.ndarray, kappa: float = 1.0) -> np.ndarray:
    """(e^{s|xi-eta|} e^{s|eta|} - e^{s|xi|}) / (min(|xi-eta|,|eta|)^kappa s^kappa e^{s|xi-eta|} e^{s|eta|}).

    Computed as (1 - exp(-s*excess)) / (s*min)^kappa with excess >= 0 the
    triangle-inequality gap, which avoids overflow.  The ratio is at most 2
    for kappa = 1.
    """
    d = np.asarray(xi - eta)
    eta = np.asarray(eta)
    m = np.minimum(np.abs(d), np.abs(eta))
    # |d| + |eta| - |d + eta|, written without cancellation
    excess = np.where(d * eta < 0, 2.0 * m, 0.0)
    num = -np.expm1(-sigma * excess)
    den = (sigma * m) ** kappa
    return np.divide(num, den, out=np.zeros_like(num), where=den > 0)


def bracket_ratio(xi: np.ndarray, eta: np.ndarray) -> np.ndarray:
    """min(|xi-eta|,|eta|) * <xi> / (<xi-eta> <eta>), with <x> = 1+|x|."""
    a, b = np.abs(xi - eta), np.abs(eta)
    return np.minimum(a, b) * (1 + np.abs(xi)) / ((1 + a) * (1 + b))


def sigma_scaling_probe(f: Field, sigma_grid, a: DampingProfile, kappa: float = 1.0,
                        weight_grid: int = 128, weight_range: float = 50.0) -> dict:
    """Regress log ||Delta||, ||Theta||, ||Gamma|| on log sigma as sigma -> 0.

    Also measures the best constants in the pointwise weight-defect bound
    and the bracket bound on a ``weight_grid``^2 frequency grid.
    """
    sig = np.asarray(sigma_grid, dtype=float)
    if sig.size < 3 or np.any(sig <= 0) or sig.max() / sig.min() < 10:
        raise ValueError("sigma grid must hold >= 3 positive values spanning at least one decade")
    norms = np.array([commutators(f, s, a).norms() for s in sig])
    slopes = {name: _loglog_slope(sig, norms[:, i]) for i, name in enumerate(("delta", "theta", "gamma"))}
    order = np.argsort(sig)
    monotone = {
        name: bool(np.all(np.diff(norms[order, i]) >= -1e-14 * norms[:, i].max()))
        for i, name in enumerate(("delta", "theta", "gamma"))
    }
    ax = np.linspace(-weight_range, weight_range, weight_grid)
    XI, ETA = np.meshgrid(ax, ax, indexing="ij")
    defect = max(float(weight_defect_ratio(s, XI, ETA, kappa).max()) for s in sig)
    bracket = float(bracket_ratio(XI, ETA).max())
    return {
        "sigmas": sig.tolist(),
        "norms": {name: norms[:, i].tolist() for i, name in enumerate(("delta", "theta", "gamma"))},
        "slopes": slopes,
        "monotone": monotone,
        "defect_constant": defect,
        "bracket_constant": bracket,
        "bracket_pass": bool(bracket <= 2.0),
    }


# -- decay verdict and radius ------------------------------------------------------------


def interpolation_slacks(traj: Trajectory, sigmas) -> np.ndarray:
    """Relative slack of ||u||_{G^{s/2}}^2 <= ||u||_{L2} ||u||_{G^s} per record and sigma."""
    out = np.empty((len(traj), len(sigmas)))
    for i in range(len(traj)):
        f = traj.field(i)
        l2 = gevrey_norm(f, 0.0)
        for j, s in enumerate(sigmas):
            rhs = l2 * gevrey_norm(f, s)
            lhs = gevrey_norm(f, s / 2) ** 2
            out[i, j] = (rhs - lhs) / rhs if rhs > 0 else 0.0
    return out


def gevrey_decay_verdict(traj: Trajectory, sigma_list, gamma: float, sigma0: float | None = None,
                         cap_factor: float = ENVELOPE_CAP) -> DecayVerdict:
    """Fit the smallest C with ||u(t)||_{G^sigma} <= C exp(-gamma t / 2) for every sigma.

    ``sigma0`` sets the cap C <= cap_factor * ||u0||_{G^sigma0}; it defaults to
    the largest entry of ``sigma_list``.
    """
    t = np.asarray(traj.times) - traj.times[0]
    if len(t) < 2 or gamma * t[-1] < 3:
        raise ValueError(f"trajectory too short: gamma*T = {gamma * t[-1]:.3g} < 3")
    sigmas = sorted({float(s) for s in sigma_list}, reverse=True)
    sigma0 = max(sigmas) if sigma0 is None else float(sigma0)
    u0 = traj.field(0)
    cap = cap_factor * gevrey_norm(u0, sigma0)
    growth = np.exp(gamma * t / 2)
    constants, passes = {}, {}
    for s in sigmas:
        norms = np.array([gevrey_norm(traj.field(i), s) for i in range(len(traj))])
        constants[s] = float(np.max(norms * growth))
        passes[s] = bool(constants[s] <= cap)
    passing = [s for s in sigmas if passes[s]]
    sigma_star = max(passing) if passing else 0.0
    slack = interpolation_slacks(traj, [s for s in sigmas if s > 0])
    min_slack = float(slack.min()) if slack.size else 0.0
    verdict = DecayVerdict(
        sigma_star=sigma_star,
        envelope_constant=constants[sigma_star] if passing else float("inf"),
        half_rate_pass=bool(passing),
        constants=constants,
        passes=passes,
        cap=float(cap),
        interpolation_pass=bool(min_slack >= -INTERPOLATION_RTOL),
        min_interpolation_slack=min_slack,
    )
    if passing:
        verdict.induction = induction_bookkeeping(traj, sigma_star, gamma)
    return verdict


def induction_bookkeeping(traj: Trajectory, sigma: float, gamma: float, delta: float | None = None) -> dict:
    """Measured counterparts of the step-wise bound ||u(n d)||^2 <= ||u0||^2 + D_n ||u0||_L2^2.

    ``measured`` holds the smallest D_n that makes each inequality true at the
    recorded times t = n*delta; ``recursive`` runs D_{k+1} = D_k + exp(-2 k delta gamma)
    from the measured D_1.
    """
    t = np.asarray(traj.times) - traj.times[0]
    delta = traj.record_interval * max(1, len(t) // 20) if delta is None else delta
    idx = [i for i in range(len(t)) if abs(t[i] / delta - round(t[i] / delta)) < 1e-9 and t[i] > 0]
    u0 = traj.field(0)
    g0, l0 = gevrey_norm(u0, sigma) ** 2, l2_norm(u0) ** 2
    measured = [(gevrey_norm(traj.field(i), sigma) ** 2 - g0) / l0 for i in idx]
    recursive = []
    if measured:
        d = max(measured[0], 0.0)
        for k in range(1, len(measured) + 1):
            recursive.append(d)
            d += np.exp(-2 * k * delta * gamma)
    return {"delta": delta, "times": [float(t[i]) for i in idx], "measured": measured, "recursive": recursive}


def radius_over_time(traj: Trajectory, window=None) -> dict:
    """estimate_radius at every record; the minimum skips records flagged as entire."""
    fits = []
    for i in range(len(traj)):
        fits.append(estimate_radius(traj.field(i), window))
    usable = [f.sigma_hat for f in fits if not f.entire_beyond_window]
    return {
        "times": [float(t) for t in traj.times],
        "fits": fits,
        "min_sigma_hat": float(min(usable)) if usable else float("nan"),
        "all_entire": all(f.entire_beyond_window for f in fits),
    }
