"""Gauss-Legendre rules on intervals and panel unions.

Everything downstream (kernel integrals, Nystrom discretizations, expected
counts) consumes the flat ``nodes``/``weights`` arrays of a rule, so rules are
plain frozen containers with constructors for the three layouts we need:
a single interval, a union of equal-step panels, and a truncated half line.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

from .errors import DomainError


@functools.lru_cache(maxsize=128)
def _leggauss(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Nodes and weights for a fixed integration layout."""

    nodes: np.ndarray
    weights: np.ndarray

    def __len__(self) -> int:
        return self.nodes.size

    def integrate(self, f) -> float:
        return float(self.weights @ np.asarray(f(self.nodes), dtype=float))

    @classmethod
    def on_interval(cls, a: float, b: float, n: int) -> "QuadratureRule":
        if not b > a:
            raise DomainError(f"empty interval [{a}, {b}]")
        if n < 2:
            raise DomainError("need at least 2 nodes")
        x, w = _leggauss(n)
        half = 0.5 * (b - a)
        return cls(a + half * (x + 1.0), half * w)

    @classmethod
    def panels(cls, breaks, nodes_per_panel: int) -> "QuadratureRule":
        """Union of Gauss-Legendre panels over consecutive breakpoints."""
        breaks = np.asarray(breaks, dtype=float)
        if breaks.ndim != 1 or breaks.size < 2 or np.any(np.diff(breaks) <= 0):
            raise DomainError("breakpoints must be strictly increasing")
        x, w = _leggauss(nodes_per_panel)
        a = breaks[:-1][:, None]
        half = (0.5 * np.diff(breaks))[:, None]
        nodes = (a + half * (x[None, :] + 1.0)).ravel()
        weights = (half * w[None, :]).ravel()
        return cls(nodes, weights)

    @classmethod
    def graded(cls, a: float, b: float, max_step: float,
               nodes_per_panel: int = 12) -> "QuadratureRule":
        """Equal panels of length <= max_step covering [a, b]."""
        count = max(1, int(np.ceil((b - a) / max_step)))
        return cls.panels(np.linspace(a, b, count + 1), nodes_per_panel)

    @classmethod
    def half_line(cls, left: float, decay_rate: float, tol: float = 1e-13,
                  max_step: float = 1.0, nodes_per_panel: int = 12) -> "QuadratureRule":
        """Truncated (left, infinity) for integrands with envelope e^{-rate*x}.

        The truncation point puts the envelope tail below ``tol`` relative to
        its value at ``left``.
        """
        if decay_rate <= 0:
            raise DomainError("decay_rate must be positive")
        length = np.log(1.0 / tol) / decay_rate
        return cls.graded(left, left + length, max_step, nodes_per_panel)
