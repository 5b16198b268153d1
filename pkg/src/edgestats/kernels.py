"""Correlation kernels of the edge-statistics family.

Three families live here, all behind the same ``KernelHandle`` interface the
Fredholm engine consumes:

* Airy-type integral kernels: the soft-edge kernel and its Fermi-weighted
  interpolation ``fermi_airy_kernel`` (weight sigma(alpha*lambda) between the
  Airy pair), evaluated by panel Gauss-Legendre on a lambda grid whose
  truncation comes from the exponential weight bound on the left and the Airy
  decay envelope on the right.

* Spectral (sum) kernels over weighted Hermite functions: the finite-n GUE
  kernel and the grand-canonical ``fermi_hermite_kernel`` with logistic
  occupations, plus the bulk scaling kernel and its elementary approximation.

* The double-contour kernel of the additively deformed ensemble, in
  ``contour.py`` and re-exported here.

Raw kernel values are only meaningful up to conjugation; determinants of
``correlation_rho`` are the invariant quantities.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError
from .quadrature import QuadratureRule
from .specfun import HermiteBasis, _airy_eval, logistic_cdf, weighted_hermite_all

_DOMAIN_LEFT = -40.0
# Ai(x) beyond this contributes below every budget in the package (Ai(26) ~ 6e-42).
_AI_POS_CUT = 26.0
_ABS_AI_MAX = 0.5357  # global maximum of |Ai|


def _ai(args: np.ndarray) -> np.ndarray:
    out = np.zeros_like(args)
    m = args < _AI_POS_CUT
    if m.any():
        out[m] = _airy_eval(args[m].ravel()).reshape(args[m].shape)
    return out


@dataclass(frozen=True, eq=False)
class KernelHandle:
    """Uniform view of a symmetric correlation kernel.

    ``evaluate`` broadcasts over point arrays.  ``matrix`` (optional) builds
    the Gram matrix on a node set through whatever factored form the kernel
    has; the Fredholm engine prefers it when present.  ``decay_rate`` and
    ``envelope_log_amp`` bound the diagonal, K(x,x) <= exp(amp - rate*x),
    and drive interval truncation; ``resolution_scale`` is the finest feature
    width a Nystrom grid must resolve.
    """

    evaluate: Callable
    domain_left: float
    decay_rate: float
    label: Optional[str] = None
    envelope_log_amp: float = 0.0
    resolution_scale: float = 0.8
    matrix: Optional[Callable] = None
    trace_total: Optional[float] = None


# ----------------------------------------------------------------------------
# lambda grids for the Airy-type integrals


def _airy_tail_end(xmin: float, alpha: float, budget: float) -> float:
    """Upper lambda cut: (4/3)(xmin+L)^{3/2} - alpha*L >= budget."""

    def gap(L):
        return (4.0 / 3.0) * max(xmin + L, 0.0) ** 1.5 - alpha * L - budget

    lo = max(0.0, 1.0 - xmin)
    if gap(lo) >= 0.0:
        return lo
    hi = lo + 16.0
    while gap(hi) < 0.0:
        hi *= 1.7
    return brentq(gap, lo, hi, xtol=1e-6)


def _osc_panels(lam_lo: float, lam_hi: float, xmin: float, alpha: float | None):
    """Breakpoints resolving Airy oscillation and, if given, the Fermi step."""
    omega = math.sqrt(max(1.0, abs(xmin + lam_lo)))
    h = min(1.2, 5.0 / omega)
    pieces = []
    if alpha is not None and alpha > 0:
        half = 6.0 / alpha
        h_step = min(h, 0.75 / alpha)
        cuts = [lam_lo, max(lam_lo, min(-half, lam_hi)),
                max(lam_lo, min(half, lam_hi)), lam_hi]
        steps = [h, h_step, h]
    else:
        cuts = [lam_lo, lam_hi]
        steps = [h]
    breaks = [lam_lo]
    for a, b, hh in zip(cuts[:-1], cuts[1:], steps):
        if b - a <= 1e-12:
            continue
        k = max(1, int(math.ceil((b - a) / hh)))
        breaks.extend(np.linspace(a, b, k + 1)[1:].tolist())
    return np.asarray(breaks)


@functools.lru_cache(maxsize=256)
def _airy_grid(xmin_key: int, tol_exp: int):
    """Quadrature for int_0^inf Ai(x+l)Ai(y+l)dl with min(x,y) >= xmin."""
    xmin = xmin_key * 0.5
    budget = -tol_exp * math.log(10.0) + 3.0
    lam_hi = _airy_tail_end(xmin, 0.0, budget)
    rule = QuadratureRule.panels(_osc_panels(0.0, lam_hi, xmin, None), 12)
    return rule.nodes, rule.weights


@functools.lru_cache(maxsize=512)
def _fermi_airy_grid(alpha_key: float, xmin_key: int, tol_exp: int):
    """Quadrature for the Fermi-weighted pair integral; sigma folded into weights.

    Left cut from sigma(alpha l) <= e^{alpha l} against the global Airy bound,
    right cut from the superexponential Airy envelope beating e^{alpha l}.
    Panels resolve the local Airy oscillation; left of the logistic step their
    width grows like e^{alpha|l|/24}, trading per-panel accuracy against the
    decaying weight (12-node Gauss-Legendre error scales as the 24th power
    of the width, so the products stay below the tail budget).
    """
    alpha = float(alpha_key)
    xmin = xmin_key * 0.5
    tol = 10.0 ** tol_exp
    lam_lo = math.log(tol * alpha / (_ABS_AI_MAX ** 2)) / alpha
    lam_lo = min(lam_lo, -8.0 / alpha)
    budget = -tol_exp * math.log(10.0) + 3.0
    # sigma <= 1, so the right cut is the bare Airy envelope
    lam_hi = max(_airy_tail_end(xmin, 0.0, budget), lam_lo + 1.0)

    step_half = 6.0 / alpha
    breaks = [lam_hi]
    lam = lam_hi
    while lam > lam_lo + 1e-9:
        h = min(1.2, 5.0 / math.sqrt(max(1.0, abs(xmin + lam))))
        if abs(lam) <= step_half:
            h = min(h, 0.75 / alpha)
        elif lam < 0.0:
            h *= math.exp(min(alpha * (-lam - step_half), 29.0) / 24.0)
        nxt = lam - h
        # never straddle the logistic transition zone boundaries
        for edge in (step_half, -step_half):
            if lam > edge > nxt:
                nxt = edge
                break
        lam = max(nxt, lam_lo)
        breaks.append(lam)
    rule = QuadratureRule.panels(np.asarray(breaks[::-1]), 12)
    w = rule.weights * logistic_cdf(alpha, rule.nodes)
    return rule.nodes, w


def _pair_quad(x, y, nodes, weights, chunk: int = 2048):
    """sum_k w_k Ai(x+l_k) Ai(y+l_k) for broadcast point arrays."""
    X, Y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    xf = X.ravel()
    yf = Y.ravel()
    out = np.empty(xf.size)
    for i in range(0, xf.size, chunk):
        s = slice(i, i + chunk)
        a = _ai(xf[s, None] + nodes[None, :])
        b = _ai(yf[s, None] + nodes[None, :])
        out[s] = (a * b) @ weights
    return out.reshape(X.shape)


def _gram(xs, nodes, weights):
    """Factored Nystrom block A diag(w) A^T; PSD by construction."""
    xs = np.asarray(xs, dtype=float)
    a = _ai(xs[:, None] + nodes[None, :])
    return (a * weights) @ a.T


def _check_points(x, y):
    for arr in (np.asarray(x, dtype=float), np.asarray(y, dtype=float)):
        if arr.size and not np.all(np.isfinite(arr)):
            raise DomainError("kernel arguments must be finite")
        if arr.size and np.min(arr) < _DOMAIN_LEFT:
            raise DomainError(f"kernel arguments must be >= {_DOMAIN_LEFT}")


# ----------------------------------------------------------------------------
# Airy kernel and the Fermi-Airy interpolation


def airy_kernel(x, y, tol: float = 1e-12):
    """Soft-edge kernel int_0^inf Ai(x+l) Ai(y+l) dl."""
    _check_points(x, y)
    xmin = float(min(np.min(np.asarray(x, float)), np.min(np.asarray(y, float))))
    nodes, w = _airy_grid(math.floor(xmin / 0.5), round(math.log10(tol)))
    val = _pair_quad(x, y, nodes, w)
    return float(val) if val.shape == () else val


def airy_kernel_handle(tol: float = 1e-12) -> KernelHandle:
    def matrix(xs):
        xs = np.asarray(xs, dtype=float)
        nodes, w = _airy_grid(math.floor(float(xs.min()) / 0.5), round(math.log10(tol)))
        return _gram(xs, nodes, w)

    return KernelHandle(
        evaluate=lambda x, y: airy_kernel(x, y, tol=tol),
        domain_left=_DOMAIN_LEFT,
        decay_rate=1.0,
        label="airy",
        envelope_log_amp=0.0,
        resolution_scale=0.8,
        matrix=matrix,
    )


def exp_airy_identity_rhs(alpha: float, x, y):
    """Closed form of the exponentially weighted Airy pair integral:
    (4 pi alpha)^{-1/2} exp(-(x-y)^2/(4 alpha) - alpha (x+y)/2 + alpha^3/12).
    """
    if not alpha > 0:
        raise DomainError("alpha must be positive")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    val = np.exp(alpha ** 3 / 12.0 - (x - y) ** 2 / (4.0 * alpha)
                 - 0.5 * alpha * (x + y)) / math.sqrt(4.0 * math.pi * alpha)
    return float(val) if val.shape == () else val


def exp_airy_identity_lhs(alpha: float, x, y, tol: float = 1e-13):
    """Quadrature side of the same identity, int e^{alpha l} Ai(x+l)Ai(y+l) dl."""
    if not alpha > 0:
        raise DomainError("alpha must be positive")
    _check_points(x, y)
    xmin = float(min(np.min(np.asarray(x, float)), np.min(np.asarray(y, float))))
    lam_lo = math.log(tol * alpha / (_ABS_AI_MAX ** 2)) / alpha
    budget = -math.log(tol) + 3.0
    lam_hi = _airy_tail_end(xmin, alpha, budget)
    rule = QuadratureRule.panels(_osc_panels(lam_lo, lam_hi, xmin, None), 12)
    w = rule.weights * np.exp(alpha * rule.nodes)
    val = _pair_quad(x, y, rule.nodes, w)
    return float(val) if val.shape == () else val


def fermi_airy_kernel(alpha: float, x, y, tol: float = 1e-12):
    """Interpolating kernel: Airy pair integrated against sigma(alpha*lambda).

    alpha -> infinity recovers the Airy kernel, alpha -> 0 (after the Gumbel
    rescaling below) the exponential-density Poisson edge.
    """
    if not alpha > 0:
        raise DomainError("alpha must be positive")
    _check_points(x, y)
    xmin = float(min(np.min(np.asarray(x, float)), np.min(np.asarray(y, float))))
    nodes, w = _fermi_airy_grid(alpha, math.floor(xmin / 0.5), round(math.log10(tol)))
    val = _pair_quad(x, y, nodes, w)
    return float(val) if val.shape == () else val


def fermi_airy_log_f(alpha: float) -> float:
    """Centering f(alpha) = log(4 pi alpha^3)/(2 alpha) of the Gumbel frame."""
    if not alpha > 0:
        raise DomainError("alpha must be positive")
    return math.log(4.0 * math.pi * alpha ** 3) / (2.0 * alpha)


def fermi_airy_rescaled(alpha: float, u, v, tol: float = 1e-12):
    """Gumbel-frame kernel alpha^{-1} K(u/alpha - f, v/alpha - f).

    Valid for alpha in (0, 1]; its small-alpha limit on the diagonal is e^{-u}
    and off-diagonal values vanish.
    """
    if not 0 < alpha <= 1:
        raise DomainError("rescaled frame is defined for alpha in (0, 1]")
    f = fermi_airy_log_f(alpha)
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    val = fermi_airy_kernel(alpha, u / alpha - f, v / alpha - f, tol=tol) / alpha
    return float(val) if np.ndim(val) == 0 else val


def fermi_airy_handle(alpha: float, tol: float = 1e-12) -> KernelHandle:
    """Handle with the diagonal envelope and ridge width of the alpha kernel."""
    if not alpha > 0:
        raise DomainError("alpha must be positive")
    if alpha >= 1.0:
        rate, amp = 1.0, 0.0
    else:
        rate = alpha
        amp = alpha ** 3 / 12.0 - 0.5 * math.log(4.0 * math.pi * alpha)

    def matrix(xs):
        xs = np.asarray(xs, dtype=float)
        nodes, w = _fermi_airy_grid(alpha, math.floor(float(xs.min()) / 0.5),
                                    round(math.log10(tol)))
        return _gram(xs, nodes, w)

    return KernelHandle(
        evaluate=lambda x, y: fermi_airy_kernel(alpha, x, y, tol=tol),
        domain_left=_DOMAIN_LEFT,
        decay_rate=rate,
        label=f"fermi_airy:{alpha!r}",
        envelope_log_amp=amp,
        resolution_scale=min(0.8, 0.85 * math.sqrt(alpha)),
        matrix=matrix,
    )


# ----------------------------------------------------------------------------
# Spectral kernels over weighted Hermite functions


@dataclass(frozen=True, eq=False)
class SpectralKernel:
    """K(x,y) = beta * sum_n w_n phi_n(beta x) phi_n(beta y), w_n in [0, 1]."""

    weights: np.ndarray
    basis: HermiteBasis
    label: str = ""
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def truncation_index(self) -> int:
        return int(self.weights.size)

    def trace(self) -> float:
        return float(self.weights.sum())

    def _phi(self, pts: np.ndarray):
        key = (pts.tobytes(), pts.size)
        hit = self._cache.get("phi")
        if hit is not None and hit[0] == key:
            return hit[1]
        block = weighted_hermite_all(self.basis.beta * pts, self.weights.size - 1)
        self._cache["phi"] = (key, block)
        return block

    def matrix(self, xs, ys=None) -> np.ndarray:
        xs = np.asarray(xs, dtype=float).ravel()
        mx, ex = self._phi(xs)
        if ys is None:
            my, ey = mx, ex
            ny = xs.size
        else:
            ys = np.asarray(ys, dtype=float).ravel()
            my, ey = weighted_hermite_all(self.basis.beta * ys, self.weights.size - 1)
            ny = ys.size
        out = np.zeros((xs.size, ny))
        with np.errstate(under="ignore"):
            for n, wn in enumerate(self.weights):
                if wn == 0.0:
                    continue
                term = np.ldexp(np.outer(mx[n], my[n]), ex[n][:, None] + ey[n][None, :])
                out += wn * term
        return self.basis.beta * out

    def evaluate(self, x, y) -> np.ndarray:
        X, Y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        xf, yf = X.ravel(), Y.ravel()
        mx, ex = weighted_hermite_all(self.basis.beta * xf, self.weights.size - 1)
        my, ey = weighted_hermite_all(self.basis.beta * yf, self.weights.size - 1)
        out = np.zeros(xf.size)
        with np.errstate(under="ignore"):
            for n, wn in enumerate(self.weights):
                if wn == 0.0:
                    continue
                out += wn * np.ldexp(mx[n] * my[n], ex[n] + ey[n])
        val = (self.basis.beta * out).reshape(X.shape)
        return float(val) if val.shape == () else val

    def handle(self) -> KernelHandle:
        # Gaussian diagonal envelope; conservative rate 1 near the bulk edge.
        return KernelHandle(
            evaluate=self.evaluate,
            domain_left=-np.inf,
            decay_rate=1.0,
            label=self.label or None,
            matrix=lambda xs: self.matrix(xs),
            resolution_scale=min(0.8, math.pi / (2.0 * self.basis.beta
                                                 * math.sqrt(2.0 * self.weights.size))),
            trace_total=self.trace(),
        )


def fermi_hermite_kernel(q: float, lam: float,
                         truncation_tol: float = 1e-10) -> SpectralKernel:
    """Grand-canonical kernel with occupations lam q^{n+1/2}/(1 + lam q^{n+1/2}).

    Occupations are computed in the log domain (lam can be astronomically
    large); the truncation index keeps both the dropped occupation mass and
    the dropped kernel contribution below ``truncation_tol``.
    """
    if not 0 < q < 1:
        raise DomainError("q must lie in (0, 1)")
    if not lam > 0:
        raise DomainError("lam must be positive")
    if not 0 < truncation_tol < 1e-2:
        raise DomainError("truncation_tol out of range")
    mu = -math.log(q)
    log_lam = math.log(lam)
    # tail occupation sum <= lam q^{n+3/2}/(1-q) < tol
    n_cut = (log_lam - math.log(truncation_tol * (1.0 - q))) / mu - 0.5
    n_cut = max(1, int(math.ceil(n_cut)) + 1)
    n = np.arange(n_cut)
    w = logistic_cdf(1.0, log_lam - mu * (n + 0.5))
    return SpectralKernel(weights=w, basis=HermiteBasis.from_q(q),
                          label=f"fermi_hermite:q={q!r},lam={lam!r}")


def gue_spectral(n: int) -> SpectralKernel:
    if not 1 <= n <= 1000:
        raise DomainError("n must lie in [1, 1000]")
    return SpectralKernel(weights=np.ones(n), basis=HermiteBasis(1.0), label=f"gue:{n}")


def gue_kernel(n: int, x, y):
    """Finite-n Hermite kernel sum_{m<n} phi_m(x) phi_m(y)."""
    return gue_spectral(n).evaluate(x, y)


# ----------------------------------------------------------------------------
# Bulk scaling kernel


def bulk_kernel(c: float, x, y):
    """L(x,y) = int_0^inf cos(pi (x-y) u) / (lam^{-1} e^{u^2/c} + 1) du,
    lam = e^{1/c} - 1."""
    if not c > 0:
        raise DomainError("c must be positive")
    log_lam = math.log(math.expm1(1.0 / c))
    d = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    u_max = math.sqrt(max(c * (log_lam + 40.0), 1e-6)) + 1.0
    dmax = float(np.max(np.abs(d))) if d.size else 0.0
    h = min(0.35, 5.0 / max(math.pi * dmax, 1.0))
    rule = QuadratureRule.graded(0.0, u_max, h, 12)
    occ = logistic_cdf(1.0, log_lam - rule.nodes ** 2 / c)
    val = np.cos(math.pi * d[..., None] * rule.nodes) @ (rule.weights * occ)
    return float(val) if val.shape == () else val


def bulk_kernel_approx(c: float, x, y):
    """Elementary approximation (pi c/2) sin(pi d)/sinh(pi^2 c d/2), removable
    at d = 0 where the value is 1."""
    if not c > 0:
        raise DomainError("c must be positive")
    d = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    a = 0.5 * math.pi ** 2 * c
    small = np.abs(d) < 1e-4
    safe = np.where(small, 1.0, d)
    with np.errstate(over="ignore"):
        val = np.where(small,
                       1.0 - ((math.pi * d) ** 2 + (a * d) ** 2) / 6.0,
                       0.5 * math.pi * c * np.sin(math.pi * safe) / np.sinh(a * safe))
    return float(val) if val.shape == () else val


# ----------------------------------------------------------------------------
# rho functionals and the deformed-model kernel

from .contour import deformed_handle, deformed_kernel, deformed_kernel_matrix  # noqa: E402


def correlation_rho(handle: KernelHandle, points) -> float:
    """k-point correlation det[K(x_i, x_j)]; conjugation-invariant."""
    pts = np.atleast_1d(np.asarray(points, dtype=float))
    if pts.ndim != 1 or pts.size == 0:
        raise DomainError("points must be a nonempty 1-d collection")
    if handle.matrix is not None:
        k = np.asarray(handle.matrix(pts), dtype=float)
    else:
        k = np.asarray(handle.evaluate(pts[:, None], pts[None, :]), dtype=float)
    if pts.size == 1:
        return float(k.reshape(()) if k.size == 1 else k[0, 0])
    return float(np.linalg.det(k))
