"""Random-matrix Monte Carlo: GUE draws, the deformed ensemble, and the
centering algebra that reduces its edge law to a Tracy-Widom/Gaussian
convolution.

The deformed model is diag(y_1,...,y_n) + sqrt(2S) V with V a GUE matrix,
S = alpha^2 / n^{2/3}, and y_i i.i.d. from a centered diagonal law.  All the
centering quantities (w_c, the deterministic center, the diagonal fluctuation
statistic) are defined against the truncated diagonal law, cut off at
n^epsilon, and are tied together by one algebraic identity that every sampled
replica must satisfy to rounding accuracy.

Seed rule: replica i of base seed s uses PCG64(s + i); a follow-up run inside
the same experiment (the half-size trend run) starts at s + replicas.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.special import ndtr

from .empirical import ks_statistic
from .errors import AccuracyError, CutoffViolation, DomainError, ResourceError
from .quadrature import QuadratureRule
from .specfun import GumbelScaling, gumbel_cdf, gumbel_scaling

_TW_GRID_LO = -12.0
_TW_GRID_HI = 8.0
_TW_GRID_STEP = 0.05


def _rng_from(seed, rng):
    if rng is not None:
        return rng
    if seed is None:
        raise DomainError("need a seed or an explicit generator")
    if int(seed) < 0:
        raise DomainError("seed must be nonnegative")
    return np.random.Generator(np.random.PCG64(int(seed)))


@dataclass(frozen=True)
class DiagLaw:
    """Descriptor of the diagonal-entry law: mean 0, known variance, light tails."""

    kind: str
    sigma2: float

    def __post_init__(self):
        if self.kind not in ("gaussian", "point_mass"):
            raise DomainError(f"unknown diagonal law {self.kind!r}")
        if self.kind == "gaussian" and not self.sigma2 > 0:
            raise DomainError("gaussian diagonal law needs sigma2 > 0")
        if self.kind == "point_mass" and self.sigma2 != 0.0:
            raise DomainError("point mass law has zero variance")

    @classmethod
    def gaussian(cls, sigma2: float = 0.5) -> "DiagLaw":
        return cls(kind="gaussian", sigma2=float(sigma2))

    @classmethod
    def point_mass(cls) -> "DiagLaw":
        return cls(kind="point_mass", sigma2=0.0)

    def sample(self, rng, size: int) -> np.ndarray:
        if self.kind == "point_mass":
            return np.zeros(size)
        return rng.normal(0.0, math.sqrt(self.sigma2), size)

    def sample_truncated(self, rng, size: int, cutoff: float) -> np.ndarray:
        """I.i.d. draws conditioned on |y| <= cutoff: the truncated law itself."""
        if self.kind == "point_mass":
            return np.zeros(size)
        out = rng.normal(0.0, math.sqrt(self.sigma2), size)
        bad = np.abs(out) > cutoff
        while bad.any():
            out[bad] = rng.normal(0.0, math.sqrt(self.sigma2), int(bad.sum()))
            bad = np.abs(out) > cutoff
        return out


@dataclass(frozen=True)
class DeformedModel:
    """Parameters of the deformed ensemble diag(y) + sqrt(2S) GUE."""

    n: int
    alpha: float
    diag_law: DiagLaw = field(default_factory=DiagLaw.gaussian)
    epsilon: float = 0.15

    def __post_init__(self):
        if self.n < 2:
            raise DomainError("need n >= 2")
        if not self.alpha > 0:
            raise DomainError("alpha must be positive")
        if not 1.0 / 7.0 < self.epsilon < 1.0 / 6.0:
            raise DomainError("epsilon must lie strictly inside (1/7, 1/6)")

    @property
    def s(self) -> float:
        return self.alpha ** 2 / self.n ** (2.0 / 3.0)

    @property
    def cutoff(self) -> float:
        """Support radius of the truncated diagonal law."""
        return self.n ** self.epsilon

    def half(self) -> "DeformedModel":
        return DeformedModel(n=self.n // 2, alpha=self.alpha,
                             diag_law=self.diag_law, epsilon=self.epsilon)

    def _key(self):
        return (self.n, self.alpha, self.diag_law.kind,
                self.diag_law.sigma2, self.epsilon)


def _truncated_rule(model: DeformedModel, near_right: float | None) -> QuadratureRule:
    # Panels refine geometrically toward the right support end when the
    # integrand has a near-singularity just outside it (w close to cutoff).
    a = model.cutoff
    breaks = list(np.arange(-a, a - 1.0, 0.5)) if a > 1.0 else [-a]
    gap = 0.25 if near_right is None else max(min(near_right / 8.0, 0.25), 1e-13)
    edge = a - 1.0 if a > 1.0 else -a
    step = (a - edge) / 2.0
    while step > gap:
        breaks.append(a - step)
        step /= 2.0
    breaks.append(a)
    return QuadratureRule.panels(np.asarray(breaks), 12)


def _mu_expect(model: DeformedModel, f, near_right: float | None = None) -> float:
    """Integral of f against the truncated, renormalized diagonal law."""
    law = model.diag_law
    if law.kind == "point_mass":
        return float(f(np.asarray([0.0]))[0])
    rule = _truncated_rule(model, near_right)
    sig = math.sqrt(law.sigma2)
    dens = np.exp(-0.5 * (rule.nodes / sig) ** 2)
    mass = float(rule.weights @ dens)
    return float(rule.weights @ (dens * np.asarray(f(rule.nodes)))) / mass


def solve_wc(model: DeformedModel) -> float:
    """Root on (cutoff, infinity) of the edge-location equation.

    The defining equation balances the Stieltjes-transform derivative of the
    truncated diagonal law against -1/(alpha^2 n^{1/3}); for a point mass the
    root is alpha n^{1/6} in closed form.
    """
    from scipy.optimize import brentq

    n, alpha = model.n, model.alpha
    target = 1.0 / (alpha * alpha * n ** (1.0 / 3.0))
    if model.diag_law.kind == "point_mass":
        return alpha * n ** (1.0 / 6.0)

    a = model.cutoff

    def g(w: float) -> float:
        val = _mu_expect(model, lambda t: 1.0 / (w - t) ** 2, near_right=w - a)
        return target - val

    lo = a * (1.0 + 1e-2)
    tries = 0
    while g(lo) > 0.0:
        lo = a + (lo - a) / 4.0
        tries += 1
        if tries > 40:
            raise ResourceError("no bracket for the edge equation near the cutoff")
    hi = max(4.0 * alpha * n ** (1.0 / 6.0), 4.0 * a)
    tries = 0
    while g(hi) < 0.0:
        hi *= 2.0
        tries += 1
        if tries > 40:
            raise ResourceError("edge equation has no sign change; n too small "
                                "for this diagonal law")
    wc = float(brentq(g, lo, hi, xtol=1e-15, rtol=4.0 * np.finfo(float).eps))
    resid = abs(g(wc))
    # Residual in the equation's own units; the derivative near the root can
    # be large, so measure against it.
    if resid > 1e-10:
        raise AccuracyError(f"edge equation residual {resid:.3g} above 1e-10",
                            coarse=wc, fine=wc)
    return wc


_CENTER_CACHE: dict = {}


def _center_constants(model: DeformedModel):
    key = model._key()
    hit = _CENTER_CACHE.get(key)
    if hit is None:
        wc = solve_wc(model)
        mean_frac = _mu_expect(model, lambda t: t / (wc - t),
                               near_right=None if model.diag_law.kind == "point_mass"
                               else wc - model.cutoff)
        hit = (wc, mean_frac)
        _CENTER_CACHE[key] = hit
    return hit


def r_of_n(model: DeformedModel) -> float:
    """Deterministic centering constant of the edge law, about 2 alpha n^{1/6}."""
    wc, mean_frac = _center_constants(model)
    sn_over_wc = model.s * model.n / wc
    return wc + sn_over_wc * (1.0 + mean_frac)


@dataclass(frozen=True)
class CenteringData:
    """Per-replica centering quantities and their deterministic companions."""

    w_c: float
    v_c: float
    r_of_n: float
    s_n_value: float
    r_n_value: float

    def identity_residual(self, model: DeformedModel) -> float:
        return abs(self.v_c - self.r_of_n
                   - model.alpha / math.sqrt(model.n) * self.s_n_value)


def _centering_raw(model: DeformedModel, y: np.ndarray, wc: float,
                   mean_frac: float) -> CenteringData:
    n, alpha = model.n, model.alpha
    inv = 1.0 / (wc - y)
    v_c = wc + model.s * float(np.sum(inv))
    frac_sum = float(np.sum(y * inv))
    s_n = alpha / (wc * n ** (1.0 / 6.0)) * (frac_sum - n * mean_frac)
    r_n = float(np.sum(inv * inv)) - n / (alpha * alpha * n ** (1.0 / 3.0))
    big_r = wc + model.s * n / wc * (1.0 + mean_frac)
    return CenteringData(w_c=wc, v_c=v_c, r_of_n=big_r,
                         s_n_value=s_n, r_n_value=r_n)


def centering(model: DeformedModel, y) -> CenteringData:
    """Centering data for one sampled diagonal; requires all |y_i| < w_c."""
    y = np.asarray(y, dtype=float)
    if y.size != model.n:
        raise DomainError("diagonal length does not match the model")
    wc, mean_frac = _center_constants(model)
    bad = int(np.sum(np.abs(y) >= wc))
    if bad:
        raise CutoffViolation(
            f"{bad} diagonal entries at or beyond w_c = {wc:.6g}; "
            "re-draw the diagonal")
    return _centering_raw(model, y, wc, mean_frac)


def _gue_matrix(rng, n: int) -> np.ndarray:
    x = rng.standard_normal((n, n))
    y = rng.standard_normal((n, n))
    m = 0.5 * (x + 1j * y)
    return (m + m.conj().T) / math.sqrt(2.0)


def sample_gue_eigs(n: int, seed=None, rng=None) -> np.ndarray:
    """Eigenvalues of one GUE draw, dense path, sorted ascending.

    Entry normalization: diagonal N(0, 1/2), off-diagonal real and imaginary
    parts N(0, 1/4), so the spectrum edge sits near sqrt(2n).
    """
    if not 2 <= n <= 2000:
        raise DomainError("need 2 <= n <= 2000")
    rng = _rng_from(seed, rng)
    return np.linalg.eigvalsh(_gue_matrix(rng, n))


def gue_eigs_tridiag(n: int, seed=None, rng=None) -> np.ndarray:
    """Eigenvalues of one GUE draw via the tridiagonal reduction.

    Equal in law to the dense path (the classical beta = 2 tridiagonal model,
    rescaled to our entry normalization) at a fraction of the cost; the
    equality is enforced by a KS cross-check in the test suite.
    """
    if not 2 <= n <= 2000:
        raise DomainError("need 2 <= n <= 2000")
    rng = _rng_from(seed, rng)
    diag = rng.standard_normal(n) * math.sqrt(0.5)
    dof = 2 * np.arange(n - 1, 0, -1)
    off = np.sqrt(rng.chisquare(dof)) / 2.0
    return eigh_tridiagonal(diag, off, eigvals_only=True)


def edge_rescale(eigs, n: int) -> float:
    """Largest eigenvalue recentred at the spectral edge, fluctuation units."""
    eigs = np.asarray(eigs, dtype=float)
    return float(math.sqrt(2.0) * n ** (1.0 / 6.0)
                 * (np.max(eigs) - math.sqrt(2.0 * n)))


def sample_deformed_max(model: DeformedModel, seed=None, rng=None):
    """One draw of (largest eigenvalue, diagonal) from the deformed ensemble."""
    if model.n > 1000:
        raise DomainError("deformed sampling capped at n = 1000")
    rng = _rng_from(seed, rng)
    y = model.diag_law.sample(rng, model.n)
    h = np.diag(y).astype(complex) + math.sqrt(2.0 * model.s) * _gue_matrix(rng, model.n)
    lam = np.linalg.eigvalsh(h)
    return float(lam[-1]), y


_TW_TABLE: list = [None]


def _tw_interp():
    if _TW_TABLE[0] is None:
        from scipy.interpolate import PchipInterpolator

        from .fredholm import tracy_widom_cdf

        grid = np.arange(_TW_GRID_LO, _TW_GRID_HI + 0.5 * _TW_GRID_STEP,
                         _TW_GRID_STEP)
        vals = np.array([tracy_widom_cdf(float(t)) for t in grid])
        _TW_TABLE[0] = PchipInterpolator(grid, vals, extrapolate=False)
    return _TW_TABLE[0]


def _tw_cdf_clamped(t: np.ndarray) -> np.ndarray:
    interp = _tw_interp()
    t = np.asarray(t, dtype=float)
    out = np.empty(t.shape)
    lo = t <= _TW_GRID_LO
    hi = t >= _TW_GRID_HI
    mid = ~(lo | hi)
    out[lo] = 0.0
    out[hi] = 1.0
    out[mid] = interp(t[mid])
    return out


def tw_gauss_convolution_cdf(sigma_over_alpha: float, t):
    """CDF of (Tracy-Widom) + independent N(0, sigma_over_alpha^2).

    Gauss-Hermite quadrature against the tabulated Tracy-Widom CDF; the
    degenerate sigma = 0 case returns the table directly.
    """
    if sigma_over_alpha < 0:
        raise DomainError("sigma_over_alpha must be nonnegative")
    t = np.asarray(t, dtype=float)
    scalar = t.shape == ()
    tt = np.atleast_1d(t)
    if sigma_over_alpha == 0.0:
        out = _tw_cdf_clamped(tt)
    else:
        u, w = np.polynomial.hermite_e.hermegauss(121)
        w = w / w.sum()
        out = _tw_cdf_clamped(tt[:, None] - sigma_over_alpha * u[None, :]) @ w
    return float(out[0]) if scalar else out


@dataclass(frozen=True)
class DeformedEdgeReport:
    """Outcome of the deformed-edge fluctuation experiment."""

    n: int
    alpha: float
    sigma2: float
    replicas: int
    seed: int
    sigma_over_alpha: float
    ks_convolution: float
    ks_convolution_half: float
    ks_tracy_widom: float
    ks_gaussian: float
    identity_max: float
    var_s: float
    mean_r: float
    cutoff_violations: int
    cutoff_violations_half: int
    wc_crossings: int
    stats: np.ndarray
    stats_half: np.ndarray


def _deformed_run(model: DeformedModel, replicas: int, base_seed: int):
    wc, mean_frac = _center_constants(model)
    big_r = r_of_n(model)
    scale = model.alpha / math.sqrt(model.n)
    stats = np.empty(replicas)
    s_vals = np.empty(replicas)
    r_vals = np.empty(replicas)
    clean = np.empty(replicas, dtype=bool)
    ident = 0.0
    w_cross = 0
    for i in range(replicas):
        rng = np.random.Generator(np.random.PCG64(base_seed + i))
        lmax, y = sample_deformed_max(model, rng=rng)
        top = np.max(np.abs(y))
        clean[i] = top <= model.cutoff
        if top >= wc:
            w_cross += 1
        cd = _centering_raw(model, y, wc, mean_frac)
        ident = max(ident, cd.identity_residual(model))
        stats[i] = (lmax - big_r) / scale
        s_vals[i] = cd.s_n_value
        r_vals[i] = cd.r_n_value
    return stats, s_vals, r_vals, clean, ident, w_cross


def _deformed_run_chunked(model: DeformedModel, replicas: int, base_seed: int,
                          workers: int):
    """Split the replica range into contiguous chunks across processes.

    Replica i depends only on base_seed + i, so any split merged in order
    reproduces the serial run exactly.
    """
    if workers <= 1 or replicas < 2 * workers:
        return _deformed_run(model, replicas, base_seed)
    from concurrent.futures import ProcessPoolExecutor

    bounds = np.linspace(0, replicas, workers + 1).astype(int)
    counts = np.diff(bounds)
    with ProcessPoolExecutor(max_workers=workers) as ex:
        parts = list(ex.map(_deformed_run, [model] * workers, counts,
                            [base_seed + int(b) for b in bounds[:-1]]))
    stats = np.concatenate([p[0] for p in parts])
    s_vals = np.concatenate([p[1] for p in parts])
    r_vals = np.concatenate([p[2] for p in parts])
    clean = np.concatenate([p[3] for p in parts])
    ident = max(p[4] for p in parts)
    w_cross = sum(p[5] for p in parts)
    return stats, s_vals, r_vals, clean, ident, w_cross


def deformed_edge_experiment(model: DeformedModel, replicas: int,
                             seed: int, workers: int = 1) -> DeformedEdgeReport:
    """Monte-Carlo test of the edge fluctuation law of the deformed ensemble.

    Every replica is kept for the fluctuation statistic: diagonal draws
    beyond the truncation radius are counted, never discarded, and the
    centering identity is audited on each replica regardless.  The centering
    moments (var_s, mean_r) are taken over non-violating replicas only;
    conditioning on the cutoff is exactly the truncated law the moment
    statements are about, and the raw law has no finite moments for these
    statistics (the summands are singular at w_c).  The rescaled maxima are
    compared against the Tracy-Widom/Gaussian convolution at n and at n/2
    for the trend.
    """
    if replicas < 1000:
        raise DomainError("need at least 1000 replicas")
    sigma2 = model.diag_law.sigma2
    soa = math.sqrt(sigma2) / model.alpha
    stats, s_vals, r_vals, clean, ident, w_cross = _deformed_run_chunked(
        model, replicas, seed, workers)
    half = model.half()
    stats_h, _, _, clean_h, ident_h, _ = _deformed_run_chunked(
        half, replicas, seed + replicas, workers)

    enough = int(clean.sum()) >= 2
    conv = lambda u: tw_gauss_convolution_cdf(soa, u)
    gauss = (lambda u: ndtr(np.asarray(u) / soa)) if soa > 0 else None
    return DeformedEdgeReport(
        n=model.n, alpha=model.alpha, sigma2=sigma2, replicas=replicas,
        seed=seed, sigma_over_alpha=soa,
        ks_convolution=ks_statistic(stats, conv),
        ks_convolution_half=ks_statistic(stats_h, conv),
        ks_tracy_widom=ks_statistic(stats, lambda u: tw_gauss_convolution_cdf(0.0, u)),
        ks_gaussian=ks_statistic(stats, gauss) if gauss else 1.0,
        identity_max=max(ident, ident_h),
        var_s=float(np.var(s_vals[clean], ddof=1)) if enough else math.nan,
        mean_r=float(np.mean(r_vals[clean])) if enough else math.nan,
        cutoff_violations=int(replicas - clean.sum()),
        cutoff_violations_half=int(replicas - clean_h.sum()),
        wc_crossings=w_cross,
        stats=stats, stats_half=stats_h)


@dataclass(frozen=True)
class GumbelMaxReport:
    """KS summary for the classical maximum-of-Gaussians rescaling."""

    n_points: int
    replicas: int
    seed: int
    scaling: GumbelScaling
    ks: float
    rescaled_mean: float


def gumbel_max_experiment(n_points: int, replicas: int, seed: int) -> GumbelMaxReport:
    """Maximum of n_points i.i.d. N(0, 1/2) draws, rescaled and tested."""
    if n_points < 10:
        raise DomainError("need at least 10 points per replica")
    if replicas < 1:
        raise DomainError("need at least one replica")
    scaling = gumbel_scaling(n_points, "classical")
    maxima = np.empty(replicas)
    sig = math.sqrt(0.5)
    # Each replica owns its stream so worker splits reproduce the serial run.
    for i in range(replicas):
        rng = np.random.Generator(np.random.PCG64(seed + i))
        maxima[i] = np.max(rng.standard_normal(n_points)) * sig
    rescaled = scaling.apply(maxima)
    return GumbelMaxReport(
        n_points=n_points, replicas=replicas, seed=seed, scaling=scaling,
        ks=ks_statistic(rescaled, gumbel_cdf),
        rescaled_mean=float(np.mean(rescaled)))
