"""Special functions underlying the edge-statistics kernels.

The Airy function is evaluated from scratch (Maclaurin pair plus asymptotic
expansions) rather than wrapped, because every kernel in this package reduces
to products of Airy or weighted Hermite values and their error budgets are the
budgets of everything downstream.  Weighted Hermite functions use a scaled
three-term recurrence that never forms the bare polynomial, so the Gaussian
weight cannot underflow out from under moderate-n values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

_LN2 = math.log(2.0)

# Ai(0) = 3^{-2/3}/Gamma(2/3), Ai'(0) = -3^{-1/3}/Gamma(1/3)
_AI0 = np.longdouble("0.3550280538878172392600631860041831763980")
_AIP0 = np.longdouble("-0.2588194037928067984051835601892039634791")

# Series/asymptotic switchovers; both branches agree to ~1e-14 here (the
# Maclaurin side runs in 80-bit arithmetic, so cancellation ~e^{2 zeta} eps_ld
# stays below 1e-13 up to |x| ~ 7.5).
_X_POS_SWITCH = 6.8
_X_NEG_SWITCH = 7.6
_X_FAST_LEFT = 30.0
_AIRY_RANGE = 200.0


def _airy_series(x: np.ndarray) -> np.ndarray:
    """Maclaurin pair in extended precision; valid to ~|x| = 7.6."""
    xl = x.astype(np.longdouble)
    x3 = xl * xl * xl
    f = np.ones_like(xl)
    g = xl.copy()
    tf = np.ones_like(xl)
    tg = xl.copy()
    for k in range(60):
        tf = tf * x3 / ((3 * k + 2) * (3 * k + 3))
        tg = tg * x3 / ((3 * k + 3) * (3 * k + 4))
        f += tf
        g += tg
    return (_AI0 * f + _AIP0 * g).astype(np.float64)


def _airy_asym_right(x: np.ndarray) -> np.ndarray:
    """Decaying expansion for x >= _X_POS_SWITCH, optimally truncated."""
    zeta = (2.0 / 3.0) * x ** 1.5
    s = np.ones_like(x)
    term = np.ones_like(x)
    prev = np.full_like(x, np.inf)
    alive = np.ones(x.shape, dtype=bool)
    for k in range(25):
        term = term * (-(6 * k + 5) * (6 * k + 3) * (6 * k + 1)) / (
            216.0 * (k + 1) * (2 * k + 1)) / zeta
        mag = np.abs(term)
        alive &= mag < prev
        s = np.where(alive, s + term, s)
        prev = np.where(alive, mag, prev)
    with np.errstate(under="ignore"):
        return np.exp(-zeta) / (2.0 * np.sqrt(np.pi) * x ** 0.25) * s


def _airy_asym_left(x: np.ndarray, fast: bool = False) -> np.ndarray:
    """Oscillatory expansion for x <= -_X_NEG_SWITCH.

    The phase is accumulated in extended precision: at x = -200 the argument
    of cos/sin is ~1886 rad and float64 phase error alone would cost 2e-13.
    With ``fast`` the phase stays in float64 (error ~zeta*eps, below 1e-12
    for |x| <= 400); longdouble trig dominates the cost of deep-grid kernel
    assembly, so bulk callers use the fast branch beyond _X_FAST_LEFT.
    """
    t = (-x) if fast else (-x).astype(np.longdouble)
    zeta = (2.0 / 3.0) * t ** 1.5
    zi = np.asarray(1.0 / zeta, dtype=np.float64)
    p = np.ones(x.shape)
    q = np.zeros(x.shape)
    term = np.ones(x.shape)
    prev = np.full(x.shape, np.inf)
    alive = np.ones(x.shape, dtype=bool)
    for k in range(24):
        term = term * ((6 * k + 5) * (6 * k + 3) * (6 * k + 1)) / (
            216.0 * (k + 1) * (2 * k + 1)) * zi
        mag = np.abs(term)
        alive &= mag < prev
        prev = np.where(alive, mag, prev)
        sign = -1.0 if ((k + 1) // 2) % 2 else 1.0
        add = np.where(alive, sign * term, 0.0)
        if (k + 1) % 2 == 0:
            p = p + add
        else:
            q = q + add
    phase = zeta - (np.pi if fast else np.longdouble(np.pi)) / 4
    c = np.cos(phase).astype(np.float64)
    s = np.sin(phase).astype(np.float64)
    tq = np.asarray(t, dtype=np.float64) ** 0.25
    return (c * p + s * q) / (np.sqrt(np.pi) * tq)


def _airy_eval(flat: np.ndarray) -> np.ndarray:
    """Branch dispatch without the public domain cap (kernel grids fold in
    tail nodes past +-200 whose weights are already below tolerance)."""
    out = np.empty_like(flat)
    right = flat > _X_POS_SWITCH
    deep = flat < -_X_FAST_LEFT
    left = (flat < -_X_NEG_SWITCH) & ~deep
    mid = ~(right | left | deep)
    if mid.any():
        out[mid] = _airy_series(flat[mid])
    if right.any():
        out[right] = _airy_asym_right(flat[right])
    if left.any():
        out[left] = _airy_asym_left(flat[left])
    if deep.any():
        out[deep] = _airy_asym_left(flat[deep], fast=True)
    return out


def airy_ai(x):
    """Airy function Ai on [-200, 200].

    Parameters
    ----------
    x : float or array_like
        Evaluation points, |x| <= 200.

    Returns
    -------
    float or ndarray
        Ai(x), absolute error below 1e-12 for |x| <= 30.
    """
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("airy_ai argument must be finite")
    if arr.size and np.max(np.abs(arr)) > _AIRY_RANGE:
        raise DomainError(f"airy_ai argument outside [-{_AIRY_RANGE:g}, {_AIRY_RANGE:g}]")
    out = _airy_eval(arr.ravel()).reshape(arr.shape)
    return float(out) if np.isscalar(x) or arr.shape == () else out


@dataclass(frozen=True)
class HermiteBasis:
    """Orthonormal weighted Hermite family psi_n(x) = sqrt(beta) h_n(beta x) e^{-(beta x)^2/2}."""

    beta: float

    def __post_init__(self):
        if not self.beta > 0:
            raise DomainError("beta must be positive")

    @classmethod
    def from_q(cls, q: float) -> "HermiteBasis":
        if not 0 < q < 1:
            raise DomainError("q must lie in (0, 1)")
        return cls(beta=math.sqrt((1 + q) / (1 - q)))


def weighted_hermite_all(u, nmax: int):
    """All weighted Hermite values phi_n(u) = h_n(u) e^{-u^2/2}, n = 0..nmax.

    Returns a pair ``(mant, ex)`` of shape ``(nmax+1,) + u.shape`` with
    phi_n(u) = ldexp(mant[n], ex[n]).  The split representation keeps the
    recurrence alive where the plain weight e^{-u^2/2} underflows but the
    weighted value at larger n does not.
    """
    if nmax < 0:
        raise DomainError("nmax must be nonnegative")
    u = np.atleast_1d(np.asarray(u, dtype=float))
    shape = u.shape
    mant = np.empty((nmax + 1,) + shape)
    ex = np.empty((nmax + 1,) + shape, dtype=np.int64)

    l0 = -0.5 * u * u - 0.25 * math.log(math.pi)
    e = np.floor(l0 / _LN2).astype(np.int64)
    cur = np.exp(l0 - e * _LN2)
    prv = np.zeros_like(cur)
    mant[0] = cur
    ex[0] = e
    for n in range(nmax):
        nxt = math.sqrt(2.0 / (n + 1)) * u * cur - math.sqrt(n / (n + 1.0)) * prv
        _, de = np.frexp(nxt)
        # near u = 0 the odd row is ~u and can land in the subnormals, where
        # frexp reports an exponent past -1024 and the sibling rescale would
        # overflow; anchor the shared exponent to the larger row instead and
        # let the tiny row ride as a subnormal mantissa
        de = np.maximum(de, -1000)
        with np.errstate(under="ignore"):
            prv = np.ldexp(cur, -de)
            cur = np.ldexp(nxt, -de)
        e = e + de
        mant[n + 1] = cur
        ex[n + 1] = e
    return mant, ex


def weighted_hermite_single(u, n: int):
    """phi_n(u) without storing the lower rows; same scaling as the block form."""
    if n < 0:
        raise DomainError("n must be nonnegative")
    u = np.atleast_1d(np.asarray(u, dtype=float))
    l0 = -0.5 * u * u - 0.25 * math.log(math.pi)
    e = np.floor(l0 / _LN2).astype(np.int64)
    cur = np.exp(l0 - e * _LN2)
    prv = np.zeros_like(cur)
    for m in range(n):
        nxt = math.sqrt(2.0 / (m + 1)) * u * cur - math.sqrt(m / (m + 1.0)) * prv
        _, de = np.frexp(nxt)
        de = np.maximum(de, -1000)  # same subnormal guard as the block form
        with np.errstate(under="ignore"):
            prv = np.ldexp(cur, -de)
            cur = np.ldexp(nxt, -de)
        e = e + de
    with np.errstate(under="ignore"):
        return np.ldexp(cur, e)


def hermite_psi(basis: HermiteBasis, n: int, x):
    """psi_n(x) in the given basis; stable through n ~ several hundred."""
    arr = np.asarray(x, dtype=float)
    vals = math.sqrt(basis.beta) * weighted_hermite_single(basis.beta * arr.ravel(), n)
    vals = vals.reshape(arr.shape)
    return float(vals) if arr.shape == () else vals


def mehler_closed_form(q: float, x, y):
    """Gaussian closed form of the q-weighted psi product sum.

    Equals sum_n q^{n+1/2} psi_n(x) psi_n(y) for the basis tied to q,
    evaluated without the sum.
    """
    if not 0 < q < 1:
        raise DomainError("q must lie in (0, 1)")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    pre = math.sqrt(q) / ((1.0 - q) * math.sqrt(math.pi))
    with np.errstate(under="ignore"):
        val = pre * np.exp(-0.5 * (x * x + y * y) - q * (x - y) ** 2 / (1.0 - q) ** 2)
    return float(val) if val.shape == () else val


def gumbel_cdf(x):
    x = np.asarray(x, dtype=float)
    with np.errstate(under="ignore", over="ignore"):
        val = np.exp(-np.exp(-x))
    return float(val) if val.shape == () else val


@dataclass(frozen=True)
class GumbelScaling:
    """Affine normalization (max - a)/b for an extreme-value limit."""

    a: float
    b: float

    def apply(self, values):
        return (np.asarray(values, dtype=float) - self.a) / self.b


def gumbel_scaling(n: int, variant: str = "classical", c: float | None = None) -> GumbelScaling:
    """Centering/scale constants for the maximum of n points.

    ``classical`` is the iid-Gaussian-type normalization; ``oscillator_edge``
    is the finite-ensemble variant whose centering absorbs the Fermi weight
    lambda = e^{1/c} - 1 of the grand-canonical oscillator model.
    """
    if n < 2:
        raise DomainError("need n >= 2")
    ln = math.log(n)
    root = math.sqrt(ln)
    b = 1.0 / (2.0 * root)
    if variant == "classical":
        a = root - math.log(4.0 * math.pi * ln) / (4.0 * root)
    elif variant == "oscillator_edge":
        if c is None or c <= 0:
            raise DomainError("oscillator_edge variant needs c > 0")
        lam = math.expm1(1.0 / c)
        a = root - math.log(4.0 * math.pi * ln / (lam * c) ** 2) / (4.0 * root)
    else:
        raise DomainError(f"unknown variant {variant!r}")
    return GumbelScaling(a=a, b=b)


def logistic_cdf(alpha: float, x):
    """CDF e^{alpha x}/(1 + e^{alpha x}), overflow-safe in both tails."""
    if not alpha > 0:
        raise DomainError("alpha must be positive")
    t = alpha * np.asarray(x, dtype=float)
    with np.errstate(under="ignore"):
        val = np.where(t >= 0,
                       1.0 / (1.0 + np.exp(-np.clip(t, 0, None))),
                       np.exp(np.clip(t, None, 0)) / (1.0 + np.exp(np.clip(t, None, 0))))
    return float(val) if val.shape == () else val
