"""Randomised measurement of the constants hidden in the multilinear,
product and weight inequalities.

Each probe draws seeded random fields, evaluates the ratio of the two sides
of an inequality, and summarises the ratios.  A probe "passes" when the
largest ratio is finite and grows by less than 10% per grid doubling; no
specific constant is ever asserted.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field as dc_field

import numpy as np

from .bourgain import BourgainParams, SpaceTimeField, _xsb_from_spectra, free_evolution, make_cutoff, window_times
from .evolution import IntegratorConfig, State, evolve
from .gevrey import DampingProfile, a_sigma_norm, check_assumptions, exp_weight, gevrey_norm
from .spectral import EquationParams, Field, GridSpec, dealiased_product_coeffs, make_grid

ZERO_GUARD = 1e-14
GROWTH_TOL = 0.10
MIN_REPORTED = 100  # fewer valid draws than this and the statistics are flagged


class HypothesisError(ValueError):
    """Parameters fall outside the range where the inequality is claimed."""


@dataclass(frozen=True)
class ProbeConfig:
    n_samples: int = 1000
    seed: int = 42
    grid_sizes: tuple = (64, 128, 256)
    period: float = 8 * np.pi
    nt: int = 256
    decay_spread: float = 3.0
    band_limit: float | None = 2.0
    sigma: float = 0.5
    b: float = 0.55
    b_prime: float = 0.65
    delta: float = 0.05
    cutoff_margin: float = 0.25
    omega_max: float = 20.0
    damping_b: float = 0.55
    damping_b_prime: float = 0.0
    perturbation: float = 1e-3
    workers: int | None = None

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValueError("n_samples must be positive")
        if self.decay_spread < 1:
            raise ValueError("decay_spread must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        object.__setattr__(self, "grid_sizes", tuple(int(n) for n in self.grid_sizes))

    @property
    def bourgain(self) -> BourgainParams:
        return BourgainParams(self.sigma, self.b, self.b_prime, self.delta, self.cutoff_margin)

    def as_dict(self) -> dict:
        d = asdict(self)
        d["grid_sizes"] = list(self.grid_sizes)
        return d


@dataclass
class ProbeReport:
    kind: str
    ratios: dict
    refinement_trend: list
    growth: list
    passed: bool
    n_valid: int
    extra: dict = dc_field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "kind": self.kind,
            "ratios": self.ratios,
            "refinement_trend": self.refinement_trend,
            "growth": self.growth,
            "pass": self.passed,
            "n_valid": self.n_valid,
            "reportable": self.n_valid >= MIN_REPORTED,
            "extra": self.extra,
        }


def summarize(ratios) -> dict:
    r = np.asarray([x for x in ratios if np.isfinite(x)], dtype=float)
    if r.size == 0:
        return {"max": float("nan"), "p99": float("nan"), "median": float("nan"), "count": 0}
    return {
        "max": float(r.max()),
        "p99": float(np.percentile(r, 99)),
        "median": float(np.median(r)),
        "count": int(r.size),
    }


def _workers(cfg: ProbeConfig) -> int:
    if cfg.workers:
        return int(cfg.workers)
    env = os.environ.get("KDVK_THREADS")
    return max(1, int(env)) if env and env.isdigit() else 1


def draw_streams(cfg: ProbeConfig, n: int | None = None) -> list[np.random.Generator]:
    """One independent generator per draw, spawned from the config seed."""
    n = cfg.n_samples if n is None else n
    return [np.random.Generator(np.random.PCG64(s)) for s in np.random.SeedSequence(cfg.seed).spawn(n)]


def _map(func, items, workers):
    if workers <= 1:
        return [func(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items))


# -- random fields ------------------------------------------------------------------------


@dataclass
class SpectrumDraw:
    """Mode amplitudes for k = 0..k_max, shared by every grid in a refinement study."""

    rate: float
    coeffs: np.ndarray  # complex, index = mode number k >= 0

    def on_grid(self, grid: GridSpec, band_limit: float | None = None) -> np.ndarray:
        n = grid.n_points
        half = n // 2
        k = np.arange(half)
        c = np.zeros(n, dtype=complex)
        take = min(half, len(self.coeffs))
        xi = grid.dxi * k[:take]
        amp = np.exp(-self.rate * xi) / (1 + xi)
        vals = self.coeffs[:take] * amp
        if band_limit is not None:
            vals[xi > band_limit] = 0.0
        vals[0] = vals[0].real
        c[:take] = vals
        c[n - take + 1:] = np.conj(vals[1:][::-1])
        return c


def draw_spectrum(rng: np.random.Generator, sigma: float, spread: float, k_max: int) -> SpectrumDraw:
    """Complex Gaussian amplitudes; decay rate uniform in [sigma, spread*sigma]."""
    rate = rng.uniform(sigma, spread * sigma)
    z = (rng.standard_normal(k_max) + 1j * rng.standard_normal(k_max)) / np.sqrt(2)
    return SpectrumDraw(rate, z)


@dataclass
class SpacetimeDraw:
    """u(x,t) = psi(t) [S(t) f + cos(omega t) g]."""

    free: SpectrumDraw
    forced: SpectrumDraw
    omega: float

    def spectra(self, grid, times, psi, p, band_limit=None) -> np.ndarray:
        f = Field.from_spectral(grid, self.free.on_grid(grid, band_limit))
        g = self.forced.on_grid(grid, band_limit)
        out = free_evolution(f, times, p) + np.cos(self.omega * times)[:, None] * g[None, :]
        out[:, grid.nyquist_index] = 0.0
        return psi[:, None] * out


def draw_spacetime(rng, cfg: ProbeConfig, k_max: int) -> SpacetimeDraw:
    f = draw_spectrum(rng, cfg.sigma, cfg.decay_spread, k_max)
    g = draw_spectrum(rng, cfg.sigma, cfg.decay_spread, k_max)
    return SpacetimeDraw(f, g, rng.uniform(0.0, cfg.omega_max))


class _Window:
    def __init__(self, cfg: ProbeConfig, n: int, p: EquationParams):
        self.grid = make_grid(n, cfg.period)
        self.times = window_times(cfg.delta, cfg.nt)
        self.psi = make_cutoff(cfg.delta, cfg.cutoff_margin)(self.times)
        self.shell = SpaceTimeField(self.grid, self.times, np.zeros((cfg.nt, n)))
        self.p = p
        ik = 1j * self.grid.wavenumbers
        ik[self.grid.nyquist_index] = 0.0
        self.ik = ik

    def xsb(self, spectra, sigma, b):
        return _xsb_from_spectra(spectra, self.shell, self.p, sigma, b)


def _refinement(kind, per_grid: dict, extra=None) -> ProbeReport:
    sizes = sorted(per_grid)
    stats = {n: summarize(per_grid[n]) for n in sizes}
    trend = [stats[n]["max"] for n in sizes]
    growth = [trend[i + 1] / trend[i] - 1 if trend[i] > 0 else float("nan") for i in range(len(trend) - 1)]
    finite = all(np.isfinite(trend))
    passed = bool(finite and all(g < GROWTH_TOL for g in growth if np.isfinite(g)))
    return ProbeReport(kind, {str(n): stats[n] for n in sizes}, trend, growth, passed,
                       min(s["count"] for s in stats.values()), extra or {})


def _ratio(num, den):
    return num / den if den > ZERO_GUARD else float("nan")


# -- multilinear probes ---------------------------------------------------------------


def bilinear_ratio(win: _Window, u, v, cfg: ProbeConfig) -> float:
    """||d_x(uv)||_{X_{sigma,b-1}} / (||u||_{X_{sigma,b'}} ||v||_{X_{sigma,b'}})."""
    prod = win.ik * dealiased_product_coeffs([u, v], win.grid)
    num = win.xsb(prod, cfg.sigma, cfg.b - 1)
    return _ratio(num, win.xsb(u, cfg.sigma, cfg.b_prime) * win.xsb(v, cfg.sigma, cfg.b_prime))


def trilinear_ratio(win: _Window, u1, u2, u3, cfg: ProbeConfig) -> float:
    prod = win.ik * dealiased_product_coeffs([u1, u2, u3], win.grid)
    num = win.xsb(prod, cfg.sigma, cfg.b - 1)
    den = win.xsb(u1, cfg.sigma, cfg.b_prime) * win.xsb(u2, cfg.sigma, cfg.b_prime) * win.xsb(u3, cfg.sigma, cfg.b_prime)
    return _ratio(num, den)


def _multilinear(kind, cfg: ProbeConfig, p: EquationParams, n_fields: int) -> ProbeReport:
    k_max = max(cfg.grid_sizes) // 2
    rngs = draw_streams(cfg)
    draws = [[draw_spacetime(r, cfg, k_max) for _ in range(n_fields)] for r in rngs]
    per_grid = {}
    for n in cfg.grid_sizes:
        win = _Window(cfg, n, p)

        def one(fields):
            specs = [d.spectra(win.grid, win.times, win.psi, p, cfg.band_limit) for d in fields]
            if n_fields == 2:
                return bilinear_ratio(win, *specs, cfg)
            return trilinear_ratio(win, *specs, cfg)

        per_grid[n] = _map(one, draws, _workers(cfg))
    return _refinement(kind, per_grid, {"config": cfg.as_dict()})


def probe_bilinear(cfg: ProbeConfig | None = None, p: EquationParams | None = None) -> ProbeReport:
    cfg = cfg or ProbeConfig()
    if not (cfg.b > 0.5 and cfg.b_prime > 0.5):
        raise HypothesisError(f"bilinear estimate needs b, b' > 1/2 (got b={cfg.b}, b'={cfg.b_prime})")
    return _multilinear("bilinear", cfg, p or EquationParams(), 2)


def probe_trilinear(cfg: ProbeConfig | None = None, p: EquationParams | None = None) -> ProbeReport:
    cfg = cfg or ProbeConfig()
    if not (0.5 < cfg.b < 0.7 and cfg.b_prime > 0.5):
        raise HypothesisError(f"trilinear estimate needs 1/2 < b < 7/10 and b' > 1/2 (got b={cfg.b}, b'={cfg.b_prime})")
    return _multilinear("trilinear", cfg, p or EquationParams(), 3)


def sweep_b(kind: str, cfg: ProbeConfig, bs=(0.51, 0.55, 0.6, 0.65, 0.69), p: EquationParams | None = None) -> dict:
    """Max ratio as b varies, for locating where the constants start to grow."""
    from dataclasses import replace

    func = probe_bilinear if kind == "bilinear" else probe_trilinear
    out = {}
    for b in bs:
        rep = func(replace(cfg, b=b, b_prime=max(cfg.b_prime, b + 0.05)), p)
        out[b] = rep.refinement_trend
    return out


# -- damping product -------------------------------------------------------------------


def _damping_on(a: DampingProfile, grid: GridSpec) -> DampingProfile | None:
    # Refinement regrids preset profiles; arbitrary samples only work on their own grid.
    from .gevrey import constant_damping, cosine_bump_damping, sine_damping

    if a.grid == grid:
        return a
    if a.kind == "constant":
        return constant_damping(grid, a.params["value"], a.gamma)
    if a.kind == "sine":
        return sine_damping(grid, gamma=a.gamma, **a.params)
    if a.kind == "cosine_bump":
        return cosine_bump_damping(grid, **a.params)
    return None


def probe_damping_product(cfg: ProbeConfig | None, a: DampingProfile, p: EquationParams | None = None) -> ProbeReport:
    """Ratios ||a u||_{G^s} / (||a||_{A^s} ||u||_{G^s}) and the X_{s,b'} / X_{s,b} variant."""
    cfg = cfg or ProbeConfig()
    p = p or EquationParams()
    if not (cfg.damping_b_prime <= 0 <= cfg.damping_b):
        raise HypothesisError("damping product estimate needs b' <= 0 <= b")
    report = check_assumptions(a, cfg.sigma)
    if not report["summability_pass"]:
        raise HypothesisError(f"damping profile fails A^sigma summability: {report.get('summability_error')}")
    k_max = max(cfg.grid_sizes) // 2
    rngs = draw_streams(cfg)
    draws = [(draw_spectrum(r, cfg.sigma, cfg.decay_spread, k_max), draw_spacetime(r, cfg, k_max)) for r in rngs]
    g_grid, x_grid = {}, {}
    for n in cfg.grid_sizes:
        win = _Window(cfg, n, p)
        an = _damping_on(a, win.grid)
        if an is None:
            raise ValueError("sampled damping profiles cannot be regridded; use a preset kind")
        A = a_sigma_norm(an, cfg.sigma)
        a_hat = an.field.spectral

        def one(draw):
            spec, st = draw
            u = Field.from_spectral(win.grid, spec.on_grid(win.grid, cfg.band_limit))
            au = Field.from_spectral(win.grid, dealiased_product_coeffs([a_hat, u.spectral], win.grid))
            g_ratio = _ratio(gevrey_norm(au, cfg.sigma), A * gevrey_norm(u, cfg.sigma))
            U = st.spectra(win.grid, win.times, win.psi, p, cfg.band_limit)
            aU = dealiased_product_coeffs([np.broadcast_to(a_hat, U.shape), U], win.grid)
            x_ratio = _ratio(win.xsb(aU, cfg.sigma, cfg.damping_b_prime), A * win.xsb(U, cfg.sigma, cfg.damping_b))
            return g_ratio, x_ratio

        res = _map(one, draws, _workers(cfg))
        g_grid[n] = [r[0] for r in res]
        x_grid[n] = [r[1] for r in res]
    g_rep = _refinement("damping", g_grid, {"config": cfg.as_dict()})
    x_rep = _refinement("damping-xsb", x_grid)
    g_rep.extra["xsb"] = x_rep.as_dict()
    g_rep.passed = g_rep.passed and x_rep.passed
    return g_rep


# -- elementary inequalities ---------------------------------------------------------------


def _bracket(x):
    return 1.0 + np.abs(x)


def weight_ratio(a_exp: float, b_exp: float, x, y, sign: int = 1) -> np.ndarray:
    """<x +- y>^b / (<x>^a <y>^b) with <z> = 1 + |z|."""
    return _bracket(x + sign * y) ** b_exp / (_bracket(x) ** a_exp * _bracket(y) ** b_exp)


def probe_weight_inequality(a_exp: float, b_exp: float, extent: float = 100.0, n: int = 401,
                            sign: int | None = None) -> dict:
    """Empirical C(a, b) on [-extent, extent]^2 and on the doubled range."""
    if not (a_exp >= b_exp and a_exp >= 0):
        raise HypothesisError(f"weight inequality needs a >= b and a >= 0 (got a={a_exp}, b={b_exp})")
    signs = (1, -1) if sign is None else (sign,)

    def max_on(ext):
        ax = np.linspace(-ext, ext, n)
        X, Y = np.meshgrid(ax, ax, indexing="ij")
        return max(float(weight_ratio(a_exp, b_exp, X, Y, s).max()) for s in signs)

    c1, c2 = max_on(extent), max_on(2 * extent)
    out = {"a": a_exp, "b": b_exp, "max_ratio": c1, "max_ratio_doubled": c2, "finite": bool(np.isfinite(c1))}
    if abs(b_exp) <= a_exp:
        out["range_stable"] = bool(c2 <= c1 * (1 + GROWTH_TOL))
    return out


def probe_exponential_triangle(sigma: float, extent: float = 64.0, n: int = 256) -> dict:
    """Check sigma|xi| <= sigma|xi - eta| + sigma|eta| on an n x n grid, with no tolerance.

    The grid spacing is a power of two so every |.| and sum is exact; the
    comparison is done on exponents, where rounding is monotone.
    """
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    step = 2.0 ** np.floor(np.log2(2 * extent / n))
    ax = (np.arange(n) - n // 2) * step
    XI, ETA = np.meshgrid(ax, ax, indexing="ij")
    lhs = sigma * np.abs(XI)
    rhs = sigma * (np.abs(XI - ETA) + np.abs(ETA))
    violations = int(np.count_nonzero(lhs > rhs))
    equal_at_zero = bool(np.all(lhs[:, n // 2] == rhs[:, n // 2]))
    return {"sigma": sigma, "grid": n, "violations": violations, "pass": violations == 0,
            "equality_eta_zero": equal_at_zero}


# -- Lipschitz dependence ----------------------------------------------------------------


def probe_lipschitz_data_map(cfg: ProbeConfig | None, p: EquationParams, a: DampingProfile, u0: Field | None = None,
                             T: float | None = None, dt: float = 1e-3, perturbations=None) -> ProbeReport:
    """sup_t ||u - v||_{G^s} / ||u0 - v0||_{G^s} for random perturbations of u0.

    The "refinement" axis here is the perturbation size: the max ratio
    must stay stable as the perturbation shrinks.
    """
    cfg = cfg or ProbeConfig(n_samples=100)
    grid = a.grid
    T = cfg.delta if T is None else T
    if u0 is None:
        u0 = Field.from_physical(grid, 0.1 / np.cosh(grid.x - grid.period / 2))
    perturbations = perturbations or (cfg.perturbation, cfg.perturbation / 10, cfg.perturbation / 100)
    integ = IntegratorConfig(dt=dt, record_every=max(1, int(round(0.01 / dt))))
    base = evolve(State(u0), T, p, a, integ)
    w = exp_weight(grid, cfg.sigma)
    k_max = grid.n_points // 2
    rngs = draw_streams(cfg)
    shapes = [draw_spectrum(r, cfg.sigma, cfg.decay_spread, k_max) for r in rngs]
    per_eps = {}
    for eps in perturbations:

        def one(shape):
            h = shape.on_grid(grid, cfg.band_limit)
            h[grid.nyquist_index] = 0.0
            hn = np.sqrt(np.sum(np.abs(h * w) ** 2) * grid.dxi)
            if hn <= ZERO_GUARD:
                return float("nan")
            v0 = Field.from_spectral(grid, u0.spectral + (eps / hn) * h)
            traj = evolve(State(v0), T, p, a, integ)
            diff = traj.spectra - base.spectra
            d = np.sqrt(np.sum(np.abs(diff * w) ** 2, axis=1) * grid.dxi).max()
            return _ratio(d, gevrey_norm(Field.from_spectral(grid, v0.spectral - u0.spectral), cfg.sigma))

        per_eps[eps] = _map(one, shapes, _workers(cfg))
    sizes = sorted(per_eps, reverse=True)
    stats = {repr(e): summarize(per_eps[e]) for e in sizes}
    trend = [stats[repr(e)]["max"] for e in sizes]
    growth = [trend[i + 1] / trend[i] - 1 for i in range(len(trend) - 1)]
    passed = bool(all(np.isfinite(trend)) and all(abs(g) < GROWTH_TOL for g in growth))
    return ProbeReport("lipschitz", stats, trend, growth, passed, min(s["count"] for s in stats.values()),
                       {"perturbations": list(sizes), "T": T, "dt": dt})
