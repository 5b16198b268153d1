"""Convergence harness: every scaling limit becomes a decreasing-error table.

Each check evaluates one family of kernels or distribution functions along a
parameter ladder against its limiting object on a fixed grid, records the
sup-norm errors, and enforces the trend the theory predicts: the last error
must be strictly below the first.  Individual rows may wiggle (the statements
behind them are purely asymptotic), so no pairwise monotonicity is imposed.

Rows are independent pure functions of their ladder parameter; every check
accepts a ``map_fn`` (any order-preserving map, e.g. an executor's) so rows
can be computed in parallel with a deterministic assembly.

Tables serialize to CSV with a JSON sidecar holding the generating config and
a content hash, so any table can be regenerated and diffed byte for byte.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from functools import partial

import numpy as np

from .errors import DomainError, TrendFailure
from .fredholm import fermi_airy_cdf, fermi_airy_cdf_rescaled, tracy_widom_cdf
from .kernels import (airy_kernel, bulk_kernel, fermi_airy_kernel,
                      fermi_airy_rescaled, fermi_hermite_kernel, gue_kernel)
from .specfun import gumbel_cdf, gumbel_scaling

_SCHEMA = "convergence-v1"


@dataclass(frozen=True)
class ConvergenceTable:
    """Sup-norm errors along a parameter ladder, on one fixed grid."""

    label: str
    parameter_name: str
    parameters: tuple
    errors: tuple
    grid: str
    extras: tuple = field(default=())

    def __post_init__(self):
        if len(self.parameters) != len(self.errors) or not self.parameters:
            raise DomainError("parameters and errors must align and be nonempty")
        if not all(np.isfinite(self.errors)):
            raise DomainError("errors must be finite")

    def decreasing(self) -> bool:
        return self.errors[-1] < self.errors[0]

    def config(self) -> dict:
        return {"schema": _SCHEMA, "label": self.label,
                "parameter": self.parameter_name,
                "parameters": list(self.parameters), "grid": self.grid}

    def to_csv(self) -> str:
        lines = [f"# schema: {_SCHEMA}",
                 f"# label: {self.label}",
                 f"# grid: {self.grid}",
                 f"{self.parameter_name},sup_error"]
        for p, e in zip(self.parameters, self.errors):
            lines.append(f"{p!r},{e!r}")
        return "\n".join(lines) + "\n"

    def content_hash(self) -> str:
        return hashlib.sha256(self.to_csv().encode()).hexdigest()

    def sidecar(self) -> dict:
        doc = {"config": self.config(), "sha256": self.content_hash(),
               "rows": len(self.parameters)}
        if self.extras:
            doc["extras"] = list(self.extras)
        return doc

    def write(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_csv())
        with open(str(path) + ".json", "w") as fh:
            json.dump(self.sidecar(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    def rows(self):
        ex = self.extras if self.extras else ({},) * len(self.parameters)
        return tuple(zip(self.parameters, self.errors, ex))


def _finish(table: ConvergenceTable) -> ConvergenceTable:
    if not table.decreasing():
        raise TrendFailure(
            f"{table.label}: error did not decrease along "
            f"{table.parameter_name} = {table.parameters} "
            f"(errors {table.errors})", table=table)
    return table


def _assemble(rows, label, parameter_name, parameters, grid) -> ConvergenceTable:
    errors = tuple(r["error"] for r in rows)
    extras = tuple({k: v for k, v in r.items() if k != "error"} for r in rows)
    if not any(extras):
        extras = ()
    return _finish(ConvergenceTable(
        label=label, parameter_name=parameter_name, parameters=tuple(parameters),
        errors=errors, grid=grid, extras=extras))


def _pair_grid(lo: float, hi: float, m: int):
    g = np.linspace(lo, hi, m)
    return np.repeat(g, m), np.tile(g, m)


def _row_edge_airy(alpha: float) -> dict:
    x, y = _pair_grid(-3.0, 1.0, 9)
    err = np.max(np.abs(fermi_airy_kernel(alpha, x, y) - airy_kernel(x, y)))
    return {"error": float(err)}


def _row_edge_poisson(alpha: float) -> dict:
    xi = np.array([-1.0, 0.0, 1.0, 2.0])
    diag = fermi_airy_rescaled(alpha, xi, xi)
    diag_err = float(np.max(np.abs(diag - np.exp(-xi))))
    off = float(abs(fermi_airy_rescaled(alpha, 0.0, 1.0)))
    return {"error": max(diag_err, off), "diag_error": diag_err, "offdiag": off}


def _row_cdf_tracy_widom(alpha: float) -> dict:
    grid = np.linspace(-5.0, 3.0, 17)
    sup = max(abs(fermi_airy_cdf(alpha, float(t)) - tracy_widom_cdf(float(t)))
              for t in grid)
    return {"error": sup}


def _row_cdf_gumbel(alpha: float) -> dict:
    grid = np.linspace(-2.0, 4.0, 7)
    sup = max(abs(fermi_airy_cdf_rescaled(alpha, float(x)) - gumbel_cdf(float(x)))
              for x in grid)
    return {"error": sup}


def _row_finite_gue(mu: float, n: int) -> dict:
    x, y = _pair_grid(-3.0, 3.0, 13)
    k = fermi_hermite_kernel(math.exp(-mu), math.expm1(mu * n))
    err = np.max(np.abs(k.evaluate(x, y) - gue_kernel(n, x, y)))
    return {"error": float(err)}


def _row_finite_poisson(mu: float, n: int) -> dict:
    scale = n / math.sqrt(math.pi)
    k = fermi_hermite_kernel(math.exp(-mu), math.expm1(mu * n))
    off = float(k.evaluate(0.0, 1.0)) / scale
    ratio = float(k.evaluate(0.0, 0.0)) / scale
    return {"error": max(abs(off), abs(ratio - 1.0)),
            "offdiag_over_scale": off, "diag_ratio": ratio}


def _row_bulk(n: int, c: float) -> dict:
    x, y = _pair_grid(-2.0, 2.0, 9)
    mu = 1.0 / (c * n)
    scale = math.pi / (2.0 * n * math.sqrt(c))
    k = fermi_hermite_kernel(math.exp(-mu), math.expm1(1.0 / c))
    vals = scale * k.evaluate(scale * x, scale * y)
    return {"error": float(np.max(np.abs(vals - bulk_kernel(c, x, y))))}


def _row_poisson_edge(n: int, c: float, control_c: float | None) -> dict:
    xi = np.array([0.0, 1.0, 2.0])
    mu = 1.0 / (c * n)
    k = fermi_hermite_kernel(math.exp(-mu), math.expm1(1.0 / c))
    b = gumbel_scaling(n, "oscillator_edge", c=c).b

    def edge_err(a0: float) -> tuple:
        diag = np.array([b * k.evaluate(a0 + b * t, a0 + b * t) for t in xi])
        diag_err = float(np.max(np.abs(diag - np.exp(-xi))))
        off = float(b * k.evaluate(a0, a0 + b))
        return diag_err, off

    diag_err, off = edge_err(gumbel_scaling(n, "oscillator_edge", c=c).a)
    row = {"error": max(diag_err, abs(off)),
           "diag_error": diag_err, "offdiag": off}
    if control_c is not None:
        cd, co = edge_err(gumbel_scaling(n, "oscillator_edge", c=control_c).a)
        row["control_error"] = max(cd, abs(co))
    return row


def _row_crossover(n: int, alpha: float) -> dict:
    x, y = _pair_grid(-3.0, 2.0, 11)
    mu = alpha / n ** (1.0 / 3.0)
    k = fermi_hermite_kernel(math.exp(-mu), math.expm1(alpha * n ** (2.0 / 3.0)))
    center = math.sqrt(alpha) * n ** (1.0 / 3.0)
    scale = math.sqrt(alpha) / (2.0 * n ** (1.0 / 3.0))
    vals = scale * k.evaluate(center + scale * x, center + scale * y)
    return {"error": float(np.max(np.abs(vals - fermi_airy_kernel(alpha, x, y))))}


def check_edge_kernel_limits(direction: str, sequence=None,
                             map_fn=map) -> ConvergenceTable:
    """Crossover kernel against its two endpoint kernels.

    ``to_airy``: sup over [-3,1]^2 of the difference from the soft-edge
    kernel, along increasing slope values.  ``to_poisson``: rescaled kernel
    against the pure-exponential limit, diagonal values plus one off-diagonal
    probe, along decreasing slope values.
    """
    if direction == "to_airy":
        seq = tuple(sequence) if sequence is not None else (2.0, 6.0, 20.0)
        if any(a < 2 for a in seq) or list(seq) != sorted(seq):
            raise DomainError("to_airy needs an increasing sequence with min >= 2")
        return _assemble(list(map_fn(_row_edge_airy, seq)),
                         "edge kernel to soft edge", "alpha", seq,
                         "[-3,1]^2, 9x9")
    if direction == "to_poisson":
        seq = tuple(sequence) if sequence is not None else (0.4, 0.2, 0.1)
        if any(not 0 < a <= 0.5 for a in seq) or list(seq) != sorted(seq, reverse=True):
            raise DomainError("to_poisson needs a decreasing sequence in (0, 0.5]")
        return _assemble(list(map_fn(_row_edge_poisson, seq)),
                         "edge kernel to exponential limit", "alpha", seq,
                         "diagonal xi in {-1,0,1,2} plus off-diagonal (0,1)")
    raise DomainError(f"unknown direction {direction!r}")


def check_edge_cdf_limits(direction: str, sequence=None,
                          map_fn=map) -> ConvergenceTable:
    """Last-particle law against its two endpoint distributions."""
    if direction == "to_tracy_widom":
        seq = tuple(sequence) if sequence is not None else (2.0, 6.0, 16.0)
        return _assemble(list(map_fn(_row_cdf_tracy_widom, seq)),
                         "last-particle law to Tracy-Widom", "alpha", seq,
                         "t in [-5,3], step 0.5")
    if direction == "to_gumbel":
        seq = tuple(sequence) if sequence is not None else (0.4, 0.2, 0.1)
        return _assemble(list(map_fn(_row_cdf_gumbel, seq)),
                         "rescaled last-particle law to Gumbel", "alpha", seq,
                         "xi in [-2,4], step 1")
    raise DomainError(f"unknown direction {direction!r}")


def check_finite_kernel_limits(direction: str, sequence=None, n: int = 10,
                               map_fn=map) -> ConvergenceTable:
    """Finite-ensemble oscillator kernel between its two endpoints.

    The steepness parameter interpolates between the rank-n projection kernel
    (steep) and n independent Gaussians (flat): the former is compared in sup
    norm, the latter through the diagonal value and one off-diagonal probe.
    """
    if direction == "to_gue":
        seq = tuple(sequence) if sequence is not None else (2.0, 4.0, 8.0)
        return _assemble(list(map_fn(partial(_row_finite_gue, n=n), seq)),
                         f"oscillator kernel to rank-{n} projection", "mu",
                         seq, "[-3,3]^2, 13x13")
    if direction == "to_poisson_density":
        seq = tuple(sequence) if sequence is not None else (0.2, 0.1, 0.05)
        return _assemble(
            list(map_fn(partial(_row_finite_poisson, n=n), seq)),
            f"oscillator kernel to {n} independent Gaussians", "mu", seq,
            "diagonal at 0 plus off-diagonal (0,1), relative to n/sqrt(pi)")
    raise DomainError(f"unknown direction {direction!r}")


def check_bulk_scaling(c: float = 1.0, sequence=None,
                       map_fn=map) -> ConvergenceTable:
    """Center-of-spectrum rescaling against the thermal bulk kernel."""
    if not 0.05 <= c <= 5.0:
        raise DomainError("c must lie in [0.05, 5]")
    seq = tuple(sequence) if sequence is not None else (50, 100, 200)
    if max(seq) > 400:
        raise DomainError("bulk scaling capped at n = 400")
    return _assemble(list(map_fn(partial(_row_bulk, c=c), seq)),
                     f"bulk rescaling to thermal kernel, c={c:g}", "n", seq,
                     "[-2,2]^2, 9x9")


def check_poisson_edge_scaling(c: float = 1.0, sequence=None,
                               control_c: float | None = None,
                               map_fn=map) -> ConvergenceTable:
    """Extreme-value rescaling of the flat-regime kernel to the exponential
    edge process: diagonal toward e^{-xi}, off-diagonal toward zero.

    ``control_c`` recenters with the wrong parameter as a negative control;
    its errors land in the extras and are expected to be worse.
    """
    if not c > 0:
        raise DomainError("c must be positive")
    seq = tuple(sequence) if sequence is not None else (200, 400, 800)
    rows = list(map_fn(partial(_row_poisson_edge, c=c, control_c=control_c), seq))
    return _assemble(rows,
                     f"edge rescaling to exponential process, c={c:g}", "n",
                     seq, "diagonal xi in {0,1,2} plus off-diagonal (0,1)")


def check_crossover_edge_scaling(alpha: float = 1.0, sequence=None,
                                 map_fn=map) -> ConvergenceTable:
    """Finite-ensemble edge rescaling against the crossover kernel."""
    if not 0.5 <= alpha <= 4.0:
        raise DomainError("alpha must lie in [0.5, 4]")
    seq = tuple(sequence) if sequence is not None else (64, 216, 512)
    return _assemble(list(map_fn(partial(_row_crossover, alpha=alpha), seq)),
                     f"finite-ensemble edge to crossover kernel, alpha={alpha:g}",
                     "n", seq, "[-3,2]^2, 11x11")
