"""Double-contour kernel of the additively deformed Gaussian ensemble.

The kernel at Gaussian variance ``s`` with external diagonal points ``y`` is
a z-circle / w-line double integral.  We evaluate it in a factorized gauge,
multiplying by exp((u^2 - v^2)/(2 s)): the gauged integrand splits as

    [e^{-z^2/2s} / prod(z - y_j)] * [e^{w^2/2s} prod(w - y_j)]
        * e^{z u / s} * e^{-w v / s} / (w - z),

so one precomputed matrix D over contour node pairs serves a whole column of
(u, v) evaluations through a bilinear form.

Contour placement.  The circle must enclose the poles y_j; the line only has
to avoid the circle.  Sliding the line across the circle leaves the value
unchanged (the crossing residue integrates an entire function over a closed
curve, hence vanishes), so each column puts its line through the Gaussian
saddle x0 = v, snapped to the nearest circle edge inside the standoff band.
That bounds the cancellation amplification by exp((2r + s^(1/2))^2 / 2s)
instead of the exp((x0 - v)^2 / 2s) blowup of a fixed right-hand line.

Gauge factors cancel in determinants, so rho-functionals and gap
probabilities are unaffected; raw off-diagonal values are gauge-dependent
and documented as such.  Orientation conventions (circle counterclockwise,
line upward) are pinned by the all-points-coincident reduction, which the
tests check against the scaled Hermite kernel.
"""

from __future__ import annotations

import functools
import math

import numpy as np

from .errors import ContourError, DomainError, ResourceError
from .quadrature import QuadratureRule

_N_MAX = 60
_LINE_TAIL = math.log(1e14)  # truncate the w-line where exp(-t^2/2s) < 1e-14
_LOG_GUARD = 600.0  # any factor beyond e^600 would swamp float64


def _validate(n: int, s: float, y: np.ndarray):
    if n != y.size:
        raise DomainError("n must equal len(y)")
    if n < 1:
        raise DomainError("need at least one diagonal point")
    if n > _N_MAX:
        raise ResourceError(f"double-contour quadrature is limited to n <= {_N_MAX}")
    if not s > 0:
        raise DomainError("s must be positive")
    if not np.all(np.isfinite(y)):
        raise DomainError("diagonal points must be finite")


@functools.lru_cache(maxsize=32)
def _circle(n: int, s: float, y_key: tuple, span: float):
    """Trapezoid z-nodes with weights and pole products; u-independent."""
    y = np.asarray(y_key, dtype=float)
    rs = math.sqrt(s)
    c0 = 0.5 * (y.max() + y.min())
    radius = 0.5 * (y.max() - y.min()) + 2.0 * rs
    # node count: pole standoff on the z-side is 2 sqrt(s); the w-line can
    # come within 0.5 sqrt(s); phase variation grows with span and radius
    m = int(min(8192, max(256,
                          96.0 * radius / rs,
                          10.0 * radius * (span + abs(c0) + radius) / s)))
    theta = 2.0 * math.pi * np.arange(m) / m
    z = c0 + radius * np.exp(1j * theta)
    cz = (2.0 * math.pi / m) * 1j * radius * np.exp(1j * theta)
    log_pz = (-z ** 2 / (2.0 * s)) - np.log(z[:, None] - y[None, :]).sum(axis=1)
    if np.max(log_pz.real) > _LOG_GUARD:
        raise ContourError("circle factors overflow float64 at these scales")
    return c0, radius, z, cz * np.exp(log_pz)


def _snap_line(v: float, c0: float, radius: float, rs: float) -> float:
    """Line abscissa for a column at v: the saddle, kept off the circle."""
    lo = c0 - radius - 0.5 * rs
    hi = c0 + radius + 0.5 * rs
    if lo <= v <= hi:
        return lo if (v - lo) <= (hi - v) else hi
    step = 0.5 * rs
    x0 = round(v / step) * step
    if lo < x0 < hi:
        x0 = lo if (v - lo) <= (hi - v) else hi
    return x0


@functools.lru_cache(maxsize=512)
def _column_matrix(n: int, s: float, y_key: tuple, span: float, x0: float):
    """Line nodes and the bilinear matrix D for one line abscissa."""
    y = np.asarray(y_key, dtype=float)
    rs = math.sqrt(s)
    c0, radius, z, fz = _circle(n, s, y_key, span)
    t_max = math.sqrt(2.0 * s * _LINE_TAIL)
    pole_rate = n / max(np.min(np.abs(x0 - y)), 0.3 * rs)
    h = min(0.4 * rs, 5.0 / pole_rate)
    line = QuadratureRule.graded(-t_max, t_max, h, 12)
    w = x0 + 1j * line.nodes
    log_pw = (w ** 2 / (2.0 * s)) + np.log(w[:, None] - y[None, :]).sum(axis=1)
    if np.max(log_pw.real) > _LOG_GUARD:
        raise ContourError("line factors overflow float64 at these scales")
    fw = (1j * line.weights) * np.exp(log_pw)
    pref = -1.0 / (4.0 * math.pi ** 2 * s)
    d = pref * fz[:, None] * fw[None, :] / (w[None, :] - z[:, None])
    return z, w, d


def _span_bucket(u_abs_max: float) -> float:
    return max(8.0, math.ceil(u_abs_max / 4.0) * 4.0)


def deformed_kernel_matrix(n: int, s: float, y, u, v=None) -> np.ndarray:
    """Gauged kernel on the grid u x v (v defaults to u).  Shape (len(u), len(v))."""
    y = np.asarray(y, dtype=float).ravel()
    _validate(n, s, y)
    u = np.atleast_1d(np.asarray(u, dtype=float))
    v = u if v is None else np.atleast_1d(np.asarray(v, dtype=float))
    if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
        raise DomainError("evaluation points must be finite")
    span = _span_bucket(max(np.abs(u).max(), np.abs(v).max()))
    if span * (span + abs(y).max()) / s > _LOG_GUARD:
        raise ContourError("evaluation points too far out for these scales")
    y_key = tuple(y.tolist())
    rs = math.sqrt(s)
    c0, radius, z, _ = _circle(n, s, y_key, span)
    ez = np.exp(np.multiply.outer(u, z) / s)
    out = np.empty((u.size, v.size))
    x0s = np.array([_snap_line(float(vj), c0, radius, rs) for vj in v])
    for x0 in np.unique(x0s):
        cols = np.nonzero(x0s == x0)[0]
        zc, w, d = _column_matrix(n, s, y_key, span, float(x0))
        ew = np.exp(np.multiply.outer(v[cols], -w) / s)
        out[:, cols] = np.real(ez @ d @ ew.T)
    return out


def deformed_kernel(n: int, s: float, y, u, v) -> float | np.ndarray:
    """Pointwise gauged kernel; diagonal values are the particle density.

    Off-diagonal values carry the gauge factor exp((u^2 - v^2)/(2 s)); use
    rho-functionals (determinants) for gauge-invariant quantities.  Array
    arguments broadcast as a grid.
    """
    full = deformed_kernel_matrix(n, s, y, u, v)
    if np.ndim(u) == 0 and np.ndim(v) == 0:
        return float(full[0, 0])
    return full


def deformed_density(n: int, s: float, y, points) -> np.ndarray:
    """rho_1 on a set of points: the gauge-invariant kernel diagonal."""
    pts = np.atleast_1d(np.asarray(points, dtype=float))
    return np.diag(deformed_kernel_matrix(n, s, y, pts))


def deformed_handle(n: int, s: float, y):
    """KernelHandle over the gauged kernel; density-scale resolution hint."""
    from .kernels import KernelHandle

    y_arr = np.asarray(y, dtype=float).ravel()
    _validate(n, s, y_arr)
    spacing = math.pi * math.sqrt(2.0 * s) / (2.0 * math.sqrt(2.0 * n))
    return KernelHandle(
        evaluate=lambda a, b: deformed_kernel(n, s, y_arr, a, b),
        domain_left=-np.inf,
        decay_rate=1.0,
        label=f"deformed:n={n},s={s!r}",
        resolution_scale=min(0.8, spacing),
        matrix=lambda xs: deformed_kernel_matrix(n, s, y_arr, xs),
        trace_total=float(n),
    )
