"""Exact samplers for the spectral determinantal models and their audits.

The grand-canonical sampler follows the standard two-stage spectral recipe:
independent Bernoulli(w_n) thinning of the basis indices, then sequential
conditional sampling of the resulting projection process.  The conditional
densities are bounded by the diagonal of the projection kernel, so rejection
sampling runs against a piecewise-constant envelope of that diagonal.

Seed discipline, used by every batch runner in the package: replica ``i`` of a
run with base seed ``s`` draws from ``PCG64(s + i)``.  Workers splitting a
replica range therefore reproduce the serial stream exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .empirical import poisson_binomial
from .errors import DomainError, ResourceError, SamplerError
from .kernels import SpectralKernel
from .rmt import gue_eigs_tridiag

_ENVELOPE_CELLS = 512
_ENVELOPE_REFINE = 8
_ENVELOPE_MARGIN = 1.25
_PROPOSAL_BATCH = 256
_STALL_TRIALS = 30_000


@dataclass(frozen=True)
class PointConfiguration:
    """One sampled configuration: sorted points plus its reproduction data."""

    points: tuple
    seed: int
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.size and not np.all(np.isfinite(pts)):
            raise DomainError("configuration contains non-finite points")
        if pts.size > 1 and np.any(np.diff(pts) < 0):
            raise DomainError("points must be sorted ascending")

    def __len__(self) -> int:
        return len(self.points)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.points, dtype=float)


@dataclass(frozen=True)
class CountDistribution:
    """Probability law of the particle count, finitely supported."""

    probabilities: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probabilities, dtype=float)
        if p.ndim != 1 or p.size == 0:
            raise DomainError("need a 1-d probability vector")
        if np.min(p) < -1e-15 or abs(p.sum() - 1.0) > 1e-12:
            raise DomainError("probabilities must be nonnegative and sum to 1")
        object.__setattr__(self, "probabilities", p)

    @classmethod
    def from_bernoulli(cls, probs) -> "CountDistribution":
        return cls(poisson_binomial(probs))

    @classmethod
    def from_counts(cls, counts) -> "CountDistribution":
        counts = np.asarray(counts, dtype=np.int64)
        if counts.size == 0:
            raise DomainError("empty count sample")
        law = np.bincount(counts) / counts.size
        return cls(law)

    def tv(self, other: "CountDistribution") -> float:
        from .empirical import tv_distance

        return tv_distance(self.probabilities, other.probabilities)

    def mean(self) -> float:
        p = self.probabilities
        return float(np.arange(p.size) @ p)


def _spectral_grid(spec: SpectralKernel):
    # Envelope support: the highest basis function lives inside
    # |beta x| <= sqrt(2 n) + 4, everything above decays super-exponentially.
    hit = spec._cache.get("dpp_grid")
    if hit is not None:
        return hit
    from .specfun import weighted_hermite_all

    nmax = spec.truncation_index - 1
    half = (math.sqrt(2.0 * nmax + 1.0) + 4.0) / spec.basis.beta
    edges = np.linspace(-half, half, _ENVELOPE_CELLS + 1)
    fine = np.linspace(-half, half, _ENVELOPE_REFINE * _ENVELOPE_CELLS)
    mant, ex = weighted_hermite_all(spec.basis.beta * fine, nmax)
    spec._cache["dpp_grid"] = (edges, fine, mant, ex)
    return spec._cache["dpp_grid"]


def _features(spec: SpectralKernel, sel: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Matrix of psi_n(x) for n in sel; shape (len(sel), len(x))."""
    from .specfun import weighted_hermite_all

    mant, ex = weighted_hermite_all(spec.basis.beta * x, int(sel.max()))
    with np.errstate(under="ignore"):
        phi = np.ldexp(mant[sel], ex[sel])
    return math.sqrt(spec.basis.beta) * phi


def sample_grand_canonical(spec: SpectralKernel, seed: int) -> PointConfiguration:
    """Draw one configuration of the determinantal process of ``spec``.

    Stage one thins the basis by independent Bernoulli(w_n); stage two samples
    the projection process of the surviving indices point by point, each
    conditional density dominated by the running projection diagonal.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    w = np.asarray(spec.weights, dtype=float)
    sel = np.flatnonzero(rng.random(w.size) < w)
    meta = {"kind": "grand_canonical", "label": spec.label,
            "indices": tuple(int(n) for n in sel)}
    if sel.size == 0:
        return PointConfiguration((), seed, meta)

    edges, fine, mant, ex = _spectral_grid(spec)
    with np.errstate(under="ignore"):
        phi_fine = np.ldexp(mant[sel], ex[sel])
    diag_fine = spec.basis.beta * np.sum(phi_fine * phi_fine, axis=0)
    cell_max = diag_fine.reshape(_ENVELOPE_CELLS, _ENVELOPE_REFINE).max(axis=1)
    # Dilating by one cell dominates arbitrarily steep monotone ramps (the
    # exponential tails of the top mode); the margin covers in-cell peaks.
    env = np.maximum(cell_max, np.maximum(np.roll(cell_max, 1),
                                          np.roll(cell_max, -1)))
    env[0] = max(cell_max[0], cell_max[1])
    env[-1] = max(cell_max[-1], cell_max[-2])
    env *= _ENVELOPE_MARGIN
    cell_prob = env / env.sum()
    cell_width = edges[1] - edges[0]

    k = sel.size
    basis_rows = np.zeros((k, k))
    points = np.empty(k)
    proposals = 0
    violations = 0
    for j in range(k):
        streak = 0
        while True:
            cells = rng.choice(_ENVELOPE_CELLS, size=_PROPOSAL_BATCH, p=cell_prob)
            xs = edges[cells] + cell_width * rng.random(_PROPOSAL_BATCH)
            u = rng.random(_PROPOSAL_BATCH)
            feats = _features(spec, sel, xs)
            dens = np.sum(feats * feats, axis=0)
            if j:
                proj = basis_rows[:j] @ feats
                dens = dens - np.sum(proj * proj, axis=0)
            proposals += _PROPOSAL_BATCH
            violations += int(np.sum(dens > env[cells] * (1.0 + 1e-9)))
            hits = np.flatnonzero(u * env[cells] < dens)
            if hits.size:
                pick = int(hits[0])
                points[j] = xs[pick]
                vec = feats[:, pick].copy()
                # Two Gram-Schmidt passes: one is not enough once the span
                # nearly contains the new feature vector.
                for _ in range(2):
                    vec -= basis_rows[:j].T @ (basis_rows[:j] @ vec)
                nrm = np.linalg.norm(vec)
                if nrm * nrm < 1e-20 * dens[pick]:
                    raise SamplerError(
                        f"degenerate conditional at point {j + 1}/{k}")
                basis_rows[j] = vec / nrm
                break
            streak += _PROPOSAL_BATCH
            if streak >= _STALL_TRIALS:
                raise SamplerError(
                    "rejection sampler stalled: acceptance below 1e-4 "
                    f"(point {j + 1}/{k}, {proposals} proposals, "
                    f"envelope mass {env.sum() * cell_width:.3g})")

    meta["proposals"] = proposals
    meta["envelope_violations"] = violations
    order = np.argsort(points)
    return PointConfiguration(tuple(float(t) for t in points[order]), seed, meta)


def sample_poisson_exp(t_min: float, seed: int) -> PointConfiguration:
    """Poisson process with intensity e^{-x} on (t_min, infinity)."""
    if not np.isfinite(t_min):
        raise DomainError("t_min must be finite")
    mean = math.exp(-t_min)
    if mean > 1e7:
        raise ResourceError(f"expected count {mean:.3g} too large to sample")
    rng = np.random.Generator(np.random.PCG64(seed))
    count = int(rng.poisson(mean))
    pts = t_min - np.log1p(-rng.random(count))
    pts.sort()
    meta = {"kind": "poisson_exp", "t_min": float(t_min)}
    return PointConfiguration(tuple(float(t) for t in pts), seed, meta)


def _shifted_airy_parts(alpha: float, gue_n: int, top_k: int, rng):
    eigs = gue_eigs_tridiag(gue_n, rng=rng)
    top = eigs[-top_k:][::-1]
    xi = math.sqrt(2.0) * gue_n ** (1.0 / 6.0) * (top - math.sqrt(2.0 * gue_n))
    u = rng.random(top_k)
    shifts = (np.log(u) - np.log1p(-u)) / alpha
    return xi, shifts


def sample_shifted_airy_max(alpha: float, approx: dict, seed: int) -> float:
    """Maximum of the logistic-shifted edge process, finite-matrix version.

    The top ``top_k`` edge-rescaled eigenvalues of one GUE(gue_n) draw stand in
    for the infinite edge configuration; each gets an independent logistic
    shift with slope ``alpha`` and the largest shifted point is returned.
    Points below the top group cannot reach the maximum because the shifts
    have exponential tails while the configuration marches to minus infinity.
    """
    if not alpha > 0:
        raise DomainError("alpha must be positive")
    gue_n = int(approx["gue_n"])
    top_k = int(approx["top_k"])
    if gue_n < 100:
        raise DomainError("need gue_n >= 100")
    if not 1 <= top_k <= 20:
        raise DomainError("need 1 <= top_k <= 20")
    rng = np.random.Generator(np.random.PCG64(seed))
    xi, shifts = _shifted_airy_parts(alpha, gue_n, top_k, rng)
    return float(np.max(xi + shifts))


@dataclass(frozen=True)
class Rho1Estimate:
    """Binned one-point density estimate with Monte-Carlo standard errors."""

    edges: np.ndarray
    density: np.ndarray
    stderr: np.ndarray
    n_samples: int

    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[:-1] + self.edges[1:])

    def coverage(self, target, n_sigma: float = 3.0) -> float:
        """Fraction of bins whose band contains the bin average of ``target``."""
        from .quadrature import QuadratureRule

        ok = 0
        widths = np.diff(self.edges)
        for i in range(widths.size):
            rule = QuadratureRule.on_interval(self.edges[i], self.edges[i + 1], 6)
            avg = rule.integrate(target) / widths[i]
            band = n_sigma * self.stderr[i]
            ok += abs(self.density[i] - avg) <= max(band, 1e-12)
        return ok / widths.size


def empirical_rho1(samples, bins) -> Rho1Estimate:
    """Estimate the one-point correlation from many configurations."""
    samples = list(samples)
    if len(samples) == 0:
        raise DomainError("empty sample collection")
    if len(samples) < 100:
        raise DomainError("need at least 100 configurations")
    edges = np.asarray(bins, dtype=float)
    if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0):
        raise DomainError("bins must be increasing edges")
    counts = np.empty((len(samples), edges.size - 1))
    for i, cfg in enumerate(samples):
        counts[i] = np.histogram(cfg.as_array(), bins=edges)[0]
    widths = np.diff(edges)
    n = len(samples)
    density = counts.mean(axis=0) / widths
    stderr = counts.std(axis=0, ddof=1) / math.sqrt(n) / widths
    return Rho1Estimate(edges=edges, density=density, stderr=stderr, n_samples=n)


def von_koch_check(matrix_a, matrix_b, tol: float = 1e-8) -> bool:
    """det(I+A) det(I+B) = det(I+A+B+AB) for truncated decaying matrices."""
    a = np.asarray(matrix_a, dtype=float)
    b = np.asarray(matrix_b, dtype=float)
    if a.shape != b.shape or a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DomainError("need two square matrices of equal size")
    eye = np.eye(a.shape[0])
    lhs = np.linalg.det(eye + a) * np.linalg.det(eye + b)
    rhs = np.linalg.det(eye + a + b + a @ b)
    return bool(abs(lhs - rhs) <= tol * max(1.0, abs(lhs), abs(rhs)))
