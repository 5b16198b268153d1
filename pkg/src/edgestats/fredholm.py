"""Fredholm determinants det(I - K) on a half line by the Nystrom method.

The operator on L^2(t, inf) is discretized on Gauss-Legendre nodes over
[t, t + L] with the symmetrized matrix sqrt(w_i) K(x_i, x_j) sqrt(w_j); its
determinant converges spectrally fast for the analytic kernels here.  L comes
from the kernel's own diagonal envelope (truncated where it falls below
1e-13), the node count from the kernel's resolution scale; both can be pinned
through NystromConfig.  With refine on, the node count is doubled and the two
values must agree to 1e-8, otherwise an AccuracyError carries both.

Distribution functions: the soft-edge law is det(I - K_Airy), the
interpolating family det(I - M_alpha); both are served from a lock-guarded
memo table keyed on (kernel label, t, config).
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass

import numpy as np

from .errors import AccuracyError, DomainError
from .kernels import KernelHandle, airy_kernel_handle, fermi_airy_handle
from .quadrature import QuadratureRule

_ENVELOPE_FLOOR = math.log(1e-13)
_REFINE_TOL = 1e-8
_T_MIN = -12.0


@dataclass(frozen=True)
class NystromConfig:
    node_count: int = 80
    interval_length: float = 30.0
    rule: str = "gauss_legendre"
    refine: bool = True

    def __post_init__(self):
        if self.node_count < 8:
            raise DomainError("node_count must be at least 8")
        if not self.interval_length > 0:
            raise DomainError("interval_length must be positive")
        if self.rule != "gauss_legendre":
            raise DomainError(f"unknown quadrature rule {self.rule!r}")


def auto_config(kernel: KernelHandle, t: float, refine: bool = True) -> NystromConfig:
    """Truncation from the diagonal envelope, node count from the resolution.

    Interval length satisfies amp - rate*(t+L) < log(1e-13); node count keeps
    the central Gauss-Legendre spacing pi*L/(2n) under the kernel's finest
    feature width.
    """
    rate = kernel.decay_rate
    L = (kernel.envelope_log_amp - _ENVELOPE_FLOOR) / rate - min(t, 0.0)
    L = float(np.clip(L, 10.0, 420.0))
    n = int(math.ceil(1.7 * L / kernel.resolution_scale))
    n = int(np.clip(n, 48, 3200))
    return NystromConfig(node_count=n, interval_length=L, refine=refine)


def _nystrom_value(kernel: KernelHandle, t: float, L: float, n: int) -> float:
    rule = QuadratureRule.on_interval(t, t + L, n)
    xs = rule.nodes
    if kernel.matrix is not None:
        k = np.asarray(kernel.matrix(xs), dtype=float)
    else:
        k = np.asarray(kernel.evaluate(xs[:, None], xs[None, :]), dtype=float)
    sw = np.sqrt(rule.weights)
    b = sw[:, None] * k * sw[None, :]
    sign, logdet = np.linalg.slogdet(np.eye(n) - b)
    return float(sign * np.exp(logdet))


def operator_spectrum(kernel: KernelHandle, t: float,
                      cfg: NystromConfig | None = None) -> np.ndarray:
    """Eigenvalues of the symmetrized Nystrom matrix on L^2(t, inf), ascending.

    For a correlation kernel of a determinantal process these must land in
    [0, 1] up to discretization error; the bound is what makes det(I - K)
    a probability.
    """
    if not np.isfinite(t):
        raise DomainError("t must be finite")
    if t < kernel.domain_left:
        raise DomainError(f"t below the kernel domain ({kernel.domain_left})")
    if cfg is None:
        cfg = auto_config(kernel, t)
    rule = QuadratureRule.on_interval(t, t + cfg.interval_length, cfg.node_count)
    xs = rule.nodes
    if kernel.matrix is not None:
        k = np.asarray(kernel.matrix(xs), dtype=float)
    else:
        k = np.asarray(kernel.evaluate(xs[:, None], xs[None, :]), dtype=float)
    sw = np.sqrt(rule.weights)
    return np.linalg.eigvalsh(sw[:, None] * k * sw[None, :])


def fredholm_det(kernel: KernelHandle, t: float, cfg: NystromConfig | None = None) -> float:
    """det(I - K) on L^2(t, inf); the gap probability of the kernel's process."""
    if not np.isfinite(t):
        raise DomainError("t must be finite")
    if t < kernel.domain_left:
        raise DomainError(f"t below the kernel domain ({kernel.domain_left})")
    if cfg is None:
        cfg = auto_config(kernel, t)
    coarse = _nystrom_value(kernel, t, cfg.interval_length, cfg.node_count)
    if not cfg.refine:
        return coarse
    fine = _nystrom_value(kernel, t, cfg.interval_length, 2 * cfg.node_count)
    if abs(fine - coarse) > _REFINE_TOL:
        raise AccuracyError(
            f"Nystrom doubling moved det(I-K) at t={t} by {abs(fine - coarse):.3e}",
            coarse=coarse, fine=fine)
    return fine


_memo: dict = {}
_memo_lock = threading.Lock()


def _memoized(label: str, t: float, cfg: NystromConfig | None, build) -> float:
    key = (label, round(t, 12), cfg)
    with _memo_lock:
        if key in _memo:
            return _memo[key]
    val = build()
    with _memo_lock:
        _memo[key] = val
    return val


def clear_cache():
    with _memo_lock:
        _memo.clear()


def tracy_widom_cdf(t: float, cfg: NystromConfig | None = None) -> float:
    """Soft-edge distribution det(I - K_Airy) on (t, inf); t >= -12.

    Raw determinant values may overshoot [0, 1] at roundoff level; clamping
    is left to reporting layers.
    """
    if t < _T_MIN:
        raise DomainError(f"t must be >= {_T_MIN}")
    handle = airy_kernel_handle()
    return _memoized("airy", t, cfg, lambda: fredholm_det(handle, t, cfg))


def fermi_airy_cdf(alpha: float, t: float, cfg: NystromConfig | None = None) -> float:
    """Interpolating-family distribution det(I - M_alpha) on (t, inf)."""
    if not alpha > 0:
        raise DomainError("alpha must be positive")
    if t < _T_MIN:
        raise DomainError(f"t must be >= {_T_MIN}")
    handle = fermi_airy_handle(alpha)
    return _memoized(handle.label, t, cfg, lambda: fredholm_det(handle, t, cfg))


def fermi_airy_cdf_rescaled(alpha: float, xi: float, cfg: NystromConfig | None = None) -> float:
    """Distribution of the last particle in the exponential-centering frame.

    Evaluates det(I - M_alpha) at t = xi/alpha - f(alpha), the frame whose
    alpha -> 0 limit is the double-exponential law.
    """
    from .kernels import fermi_airy_log_f

    t = xi / alpha - fermi_airy_log_f(alpha)
    return fermi_airy_cdf(alpha, t, cfg)


def expected_count(kernel: KernelHandle, t: float, cfg: NystromConfig | None = None) -> float:
    """Quadrature of the kernel diagonal over (t, inf): the mean particle count."""
    if not np.isfinite(t):
        raise DomainError("t must be finite")
    if t < kernel.domain_left:
        raise DomainError(f"t below the kernel domain ({kernel.domain_left})")
    if cfg is None:
        cfg = auto_config(kernel, t)
    rule = QuadratureRule.on_interval(t, t + cfg.interval_length, cfg.node_count)
    diag = np.asarray(kernel.evaluate(rule.nodes, rule.nodes), dtype=float)
    return float(rule.weights @ diag)
