"""Command-line front door: tables, samples, convergence suites, identities.

Every run writes its outputs plus a manifest capturing the fully resolved
parameters, the seeds, and content hashes of each output file.  Manifests
contain no timestamps or machine state, so ``edgestats rerun manifest.json``
must reproduce every output byte for byte; that property is the contract the
reproducibility tests pin down.

Exit codes: 0 success, 1 assertion or trend failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
from functools import partial

import numpy as np
import scipy

from . import __version__
from .dpp import (sample_grand_canonical, sample_poisson_exp,
                  sample_shifted_airy_max, von_koch_check)
from .errors import (AccuracyError, ContourError, CutoffViolation, DomainError,
                     ResourceError, SamplerError, TrendFailure)
from .fredholm import fermi_airy_cdf, operator_spectrum, tracy_widom_cdf
from .kernels import (exp_airy_identity_lhs, exp_airy_identity_rhs,
                      fermi_airy_handle, fermi_hermite_kernel)
from .limits import (check_bulk_scaling, check_crossover_edge_scaling,
                     check_edge_cdf_limits, check_edge_kernel_limits,
                     check_finite_kernel_limits, check_poisson_edge_scaling)
from .quadrature import QuadratureRule
from .rmt import (DeformedModel, DiagLaw, deformed_edge_experiment,
                  edge_rescale, gue_eigs_tridiag, sample_gue_eigs)
from .specfun import HermiteBasis, gumbel_cdf, hermite_psi, logistic_cdf

_MANIFEST_SCHEMA = "manifest-v1"

_DIST_RANGES = {"tw": (-8.0, 4.0), "gumbel": (-4.0, 8.0), "falpha": (-8.0, 4.0)}
_CONVERGE = {
    "edge_kernel": check_edge_kernel_limits,
    "edge_cdf": check_edge_cdf_limits,
    "finite_kernel": check_finite_kernel_limits,
    "bulk": check_bulk_scaling,
    "poisson_edge": check_poisson_edge_scaling,
    "crossover_edge": check_crossover_edge_scaling,
}
_DIRECTIONS = {
    "edge_kernel": ("to_airy", "to_poisson"),
    "edge_cdf": ("to_tracy_widom", "to_gumbel"),
    "finite_kernel": ("to_gue", "to_poisson_density"),
}


def _pool_map(fn, items, workers: int):
    items = list(items)
    if workers <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    from concurrent.futures import ProcessPoolExecutor

    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as ex:
        return list(ex.map(fn, items))


def _chunk_bounds(total: int, workers: int):
    k = max(1, min(workers, total))
    bounds = np.linspace(0, total, k + 1).astype(int)
    return [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


# ---------------------------------------------------------------- dist

def _dist_chunk(job):
    which, alpha, ts = job
    if which == "tw":
        return [tracy_widom_cdf(t) for t in ts]
    if which == "gumbel":
        return [float(gumbel_cdf(t)) for t in ts]
    return [fermi_airy_cdf(alpha, t) for t in ts]


def _cmd_dist(params: dict, workers: int):
    which = params["which"]
    t0, t1, step = params["from"], params["to"], params["step"]
    count = int(round((t1 - t0) / step)) + 1
    grid = [t0 + k * step for k in range(count)]
    alpha = params.get("alpha")
    jobs = [(which, alpha, grid[a:b]) for a, b in _chunk_bounds(count, workers)]
    vals = [v for part in _pool_map(_dist_chunk, jobs, workers) for v in part]

    lines = [f"# schema: dist-v1", f"# which: {which}"]
    if alpha is not None:
        lines.append(f"# alpha: {alpha!r}")
    if which != "gumbel":
        lines.append("# quadrature: auto (envelope-truncated Gauss-Legendre,"
                     " node doubling checked at 1e-8)")
    lines.append("t,F")
    lines += [f"{t!r},{v!r}" for t, v in zip(grid, vals)]
    outputs = {f"dist_{which}.csv": "\n".join(lines) + "\n"}

    drops = sum(b - a < -1e-12 for a, b in zip(vals, vals[1:]))
    messages = [f"dist {which}: {count} rows on [{t0:g}, {t1:g}]"]
    code = 0
    if drops:
        messages.append(f"FAIL: distribution column decreases at {drops} steps")
        code = 1
    return outputs, messages, code


# ---------------------------------------------------------------- sample

def _config_rows(tag: int, points) -> list:
    if not points:
        return [f"{tag},0,"]
    return [f"{tag},{len(points)},{p!r}" for p in points]


def _sample_chunk(job):
    which, params, lo, hi = job
    seed = params["seed"]
    rows = []
    if which == "oscillator":
        spec = fermi_hermite_kernel(math.exp(-params["mu"]), params["lam"])
        for i in range(lo, hi):
            rows += _config_rows(i, sample_grand_canonical(spec, seed + i).points)
    elif which == "poisson":
        for i in range(lo, hi):
            rows += _config_rows(i, sample_poisson_exp(params["t_min"], seed + i).points)
    elif which == "shifted_airy":
        approx = {"gue_n": params["gue_n"], "top_k": params["top_k"]}
        for i in range(lo, hi):
            rows.append(f"{i},{sample_shifted_airy_max(params['alpha'], approx, seed + i)!r}")
    elif which == "gue":
        n = params["n"]
        for i in range(lo, hi):
            if params["dense"]:
                eigs = sample_gue_eigs(n, seed=seed + i)
            else:
                eigs = gue_eigs_tridiag(n, seed=seed + i)
            rows.append(f"{i},{float(eigs[-1])!r},{edge_rescale(eigs, n)!r}")
    else:
        raise DomainError(f"unknown sample kind {which!r}")
    return rows


def _deformed_model(params: dict) -> DeformedModel:
    law = DiagLaw.point_mass() if params["point_mass"] \
        else DiagLaw.gaussian(params["sigma2"])
    return DeformedModel(n=params["n"], alpha=params["alpha"], diag_law=law)


def _cmd_sample(params: dict, workers: int):
    which = params["which"]
    replicas = params["replicas"]
    if which == "deformed":
        report = deformed_edge_experiment(_deformed_model(params), replicas,
                                          params["seed"], workers=workers)
        lines = ["# schema: sample-deformed-v1",
                 f"# n: {report.n}", f"# alpha: {report.alpha!r}",
                 f"# sigma2: {report.sigma2!r}", f"# seed: {report.seed}",
                 "ensemble,replica,stat"]
        lines += [f"full,{i},{v!r}" for i, v in enumerate(report.stats)]
        lines += [f"half,{i},{v!r}" for i, v in enumerate(report.stats_half)]
        scalars = {k: getattr(report, k) for k in
                   ("n", "alpha", "sigma2", "replicas", "seed",
                    "sigma_over_alpha", "ks_convolution", "ks_convolution_half",
                    "ks_tracy_widom", "ks_gaussian", "identity_max", "var_s",
                    "mean_r", "cutoff_violations", "cutoff_violations_half",
                    "wc_crossings")}
        outputs = {
            "sample_deformed.csv": "\n".join(lines) + "\n",
            "sample_deformed_report.json":
                json.dumps(scalars, indent=2, sort_keys=True) + "\n",
        }
        messages = [f"deformed n={report.n} alpha={report.alpha:g} "
                    f"replicas={replicas}",
                    f"ks vs convolution: {report.ks_convolution:.4f} "
                    f"(half-size: {report.ks_convolution_half:.4f})",
                    f"identity residual max: {report.identity_max:.3e}"]
        return outputs, messages, 0

    jobs = [(which, params, lo, hi) for lo, hi in _chunk_bounds(replicas, workers)]
    rows = [r for part in _pool_map(_sample_chunk, jobs, workers) for r in part]
    header = {"oscillator": "replica,count,point",
              "poisson": "replica,count,point",
              "shifted_airy": "replica,max",
              "gue": "replica,lmax,edge_rescaled"}[which]
    lines = [f"# schema: sample-{which.replace('_', '-')}-v1"]
    for key in sorted(params):
        if key not in ("which",):
            lines.append(f"# {key}: {params[key]!r}")
    lines.append(header)
    outputs = {f"sample_{which}.csv": "\n".join(lines + rows) + "\n"}
    return outputs, [f"sample {which}: {replicas} replicas"], 0


# ---------------------------------------------------------------- converge

def _cmd_converge(params: dict, workers: int):
    which = params["which"]
    check = _CONVERGE[which]
    kwargs = {}
    if which in _DIRECTIONS:
        kwargs["direction"] = params["direction"]
    if params.get("sequence") is not None:
        kwargs["sequence"] = params["sequence"]
    if which == "finite_kernel":
        kwargs["n"] = params["n"]
    if which == "bulk":
        kwargs["c"] = params["c"]
    if which == "poisson_edge":
        kwargs["c"] = params["c"]
        kwargs["control_c"] = params.get("control_c")
    if which == "crossover_edge":
        kwargs["alpha"] = params["alpha"]

    code = 0
    try:
        if workers > 1:
            from concurrent.futures import ProcessPoolExecutor

            with ProcessPoolExecutor(max_workers=workers) as ex:
                table = check(map_fn=ex.map, **kwargs)
        else:
            table = check(**kwargs)
        verdict = "PASS"
    except TrendFailure as exc:
        if exc.table is None:
            raise
        table = exc.table
        verdict = "FAIL"
        code = 1

    name = f"converge_{which}.csv"
    outputs = {name: table.to_csv(),
               name + ".json": json.dumps(
                   table.sidecar(), indent=2, sort_keys=True) + "\n"}
    messages = [f"{table.label}:"]
    for p, e, _ in table.rows():
        messages.append(f"  {table.parameter_name}={p:g}  sup_error={e:.4e}")
    messages.append(f"trend (first vs last): {verdict}")
    return outputs, messages, code


# ---------------------------------------------------------------- verify

def _verify_airy_identity() -> dict:
    grid = np.linspace(-2.0, 2.0, 5)
    worst = 0.0
    for a in (0.5, 1.0, 2.0):
        for x in grid:
            for y in grid:
                lhs = exp_airy_identity_lhs(a, float(x), float(y))
                rhs = exp_airy_identity_rhs(a, float(x), float(y))
                worst = max(worst, abs(lhs - rhs) / abs(rhs))
    return {"check": "airy_identity", "tolerance": 1e-8,
            "max_relative_error": worst, "passed": bool(worst < 1e-8),
            "grid": "alpha in {0.5,1,2}; x,y in [-2,2], 5x5"}


def _mehler_truncated(q: float, x: float, y: float, terms: int) -> float:
    basis = HermiteBasis.from_q(q)
    return sum(q ** (n + 0.5) * hermite_psi(basis, n, x) * hermite_psi(basis, n, y)
               for n in range(terms))


def _verify_mehler() -> dict:
    from .specfun import mehler_closed_form

    points = ((0.0, 0.0), (0.7, -0.3), (1.5, 1.1), (-1.2, 0.4))
    worst = 0.0
    for q in (0.1, 0.5, 0.65):
        for x, y in points:
            err = abs(_mehler_truncated(q, x, y, 80) - mehler_closed_form(q, x, y))
            worst = max(worst, err)
    # Steep-weight regime needs more terms; checked separately, same bound.
    worst_steep = max(abs(_mehler_truncated(0.9, x, y, 400)
                          - mehler_closed_form(0.9, x, y)) for x, y in points)
    ok = worst < 1e-10 and worst_steep < 1e-10
    return {"check": "mehler", "tolerance": 1e-10, "max_error_80_terms": worst,
            "max_error_q09_400_terms": worst_steep, "passed": bool(ok)}


def _von_koch_pair(size: int):
    # Diagonal part: geometric occupation weights kept below 0.4 so the
    # determinants stay O(1); off-diagonal: rank one with geometric
    # amplitudes.  Both decay fast enough that truncation at 30 already
    # fixes the determinants to well under 1e-8.
    w = logistic_cdf(1.0, -(np.arange(size) + 0.5))
    v = 0.7 ** (np.arange(size) + 1.0)
    return -np.diag(w), np.outer(v, v)


def _verify_von_koch() -> dict:
    results = {}
    dets = {}
    for size in (30, 60):
        a, b = _von_koch_pair(size)
        results[size] = von_koch_check(a, b)
        eye = np.eye(size)
        dets[size] = float(np.linalg.det(eye + a + b + a @ b))
    a30, _ = _von_koch_pair(30)
    trivial = von_koch_check(a30, np.zeros((30, 30)))
    drift = abs(dets[30] - dets[60])
    ok = results[30] and results[60] and trivial and drift < 1e-8
    return {"check": "von_koch", "tolerance": 1e-8,
            "identity_at_30": results[30], "identity_at_60": results[60],
            "zero_matrix_case": trivial, "truncation_drift": drift,
            "passed": bool(ok)}


def _verify_operator_bounds() -> dict:
    lo, hi = 0.0, 1.0
    for alpha in (0.5, 1.0, 4.0):
        handle = fermi_airy_handle(alpha)
        for t in (-6.0, 0.0):
            ev = operator_spectrum(handle, t)
            lo = min(lo, float(ev[0]))
            hi = max(hi, float(ev[-1]))
    ok = lo >= -1e-8 and hi <= 1.0 + 1e-8
    return {"check": "operator_bounds", "tolerance": 1e-8,
            "min_eigenvalue": lo, "max_eigenvalue": hi, "passed": bool(ok),
            "grid": "alpha in {0.5,1,4}; t in {-6,0}"}


def _verify_orthonormality() -> dict:
    worst = 0.0
    nmax = 40
    for beta in (1.0, HermiteBasis.from_q(0.5).beta):
        half = (math.sqrt(2.0 * nmax + 1.0) + 6.0) / beta
        rule = QuadratureRule.on_interval(-half, half, 480)
        p = np.array([hermite_psi(HermiteBasis(beta), n, rule.nodes)
                      for n in range(nmax + 1)])
        gram = (p * rule.weights) @ p.T
        worst = max(worst, float(np.max(np.abs(gram - np.eye(nmax + 1)))))
    return {"check": "orthonormality", "tolerance": 1e-10,
            "max_gram_defect": worst, "passed": bool(worst < 1e-10),
            "grid": "psi_0..psi_40, two basis scales"}


_VERIFY = {
    "airy_identity": _verify_airy_identity,
    "mehler": _verify_mehler,
    "von_koch": _verify_von_koch,
    "operator_bounds": _verify_operator_bounds,
    "orthonormality": _verify_orthonormality,
}


def _cmd_verify(params: dict, workers: int):
    report = _VERIFY[params["which"]]()
    outputs = {f"verify_{params['which']}.json":
               json.dumps(report, indent=2, sort_keys=True) + "\n"}
    verdict = "PASS" if report["passed"] else "FAIL"
    return outputs, [f"verify {params['which']}: {verdict}"], 0 if report["passed"] else 1


# ---------------------------------------------------------------- plumbing

_RUNNERS = {"dist": _cmd_dist, "sample": _cmd_sample,
            "converge": _cmd_converge, "verify": _cmd_verify}


def _manifest(command: str, params: dict, outputs: dict) -> str:
    doc = {"schema": _MANIFEST_SCHEMA, "command": command, "params": params,
           "versions": {"edgestats": __version__,
                        "numpy": np.__version__, "scipy": scipy.__version__},
           "outputs": {name: hashlib.sha256(text.encode()).hexdigest()
                       for name, text in outputs.items()}}
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _write_all(out_dir: str, files: dict) -> None:
    os.makedirs(out_dir, exist_ok=True)
    for name, text in files.items():
        with open(os.path.join(out_dir, name), "w") as fh:
            fh.write(text)


def _parse_sequence(text: str | None):
    if text is None:
        return None
    vals = [float(p) for p in text.split(",") if p.strip()]
    return tuple(int(v) if v == int(v) else v for v in vals)


def _gen_seed() -> int:
    return int.from_bytes(os.urandom(4), "big")


def _canonical_params(args: argparse.Namespace) -> tuple:
    """Resolve CLI arguments to a self-contained parameter map.

    Everything a rerun needs must land here; flags that only steer execution
    (workers, output directory) stay out.
    """
    cmd = args.command
    if cmd == "dist":
        lo, hi = _DIST_RANGES[args.which]
        params = {"which": args.which,
                  "from": lo if args.t_from is None else args.t_from,
                  "to": hi if args.t_to is None else args.t_to,
                  "step": args.step}
        if args.which == "falpha":
            if args.alpha is None:
                raise DomainError("falpha needs --alpha")
            params["alpha"] = args.alpha
        if params["step"] <= 0 or params["to"] <= params["from"]:
            raise DomainError("need step > 0 and to > from")
        return cmd, params
    if cmd == "sample":
        params = {"which": args.which, "replicas": args.replicas,
                  "seed": _gen_seed() if args.seed is None else args.seed}
        if args.replicas < 1:
            raise DomainError("need replicas >= 1")
        if args.which == "oscillator":
            if args.mu is None or args.n_mean is None:
                raise DomainError("oscillator needs --mu and --n-mean")
            params["mu"] = args.mu
            params["n_mean"] = args.n_mean
            params["lam"] = math.expm1(args.mu * args.n_mean) \
                if args.lam is None else args.lam
        elif args.which == "poisson":
            params["t_min"] = args.t_min
        elif args.which == "shifted_airy":
            params.update(alpha=args.alpha, gue_n=args.gue_n, top_k=args.top_k)
        elif args.which == "gue":
            if args.n is None:
                raise DomainError("gue needs --n")
            params.update(n=args.n, dense=bool(args.dense))
        elif args.which == "deformed":
            if args.n is None:
                raise DomainError("deformed needs --n")
            params.update(n=args.n, alpha=args.alpha, sigma2=args.sigma2,
                          point_mass=bool(args.point_mass))
        return cmd, params
    if cmd == "converge":
        params = {"which": args.which,
                  "sequence": _parse_sequence(args.sequence)}
        if args.which in _DIRECTIONS:
            if args.direction is None:
                raise DomainError(f"{args.which} needs --direction "
                                  f"{_DIRECTIONS[args.which]}")
            if args.direction not in _DIRECTIONS[args.which]:
                raise DomainError(f"direction for {args.which} must be one of "
                                  f"{_DIRECTIONS[args.which]}")
            params["direction"] = args.direction
        if args.which == "finite_kernel":
            params["n"] = args.n if args.n is not None else 10
        if args.which in ("bulk", "poisson_edge"):
            params["c"] = args.c
        if args.which == "poisson_edge":
            params["control_c"] = args.control_c
        if args.which == "crossover_edge":
            params["alpha"] = args.alpha
        return cmd, params
    if cmd == "verify":
        return cmd, {"which": args.which}
    raise DomainError(f"unknown command {cmd!r}")


def _run(command: str, params: dict, out_dir: str, workers: int) -> int:
    outputs, messages, code = _RUNNERS[command](params, workers)
    manifest_name = f"{command}_{params['which']}.manifest.json"
    files = dict(outputs)
    files[manifest_name] = _manifest(command, params, outputs)
    _write_all(out_dir, files)
    for line in messages:
        print(line)
    for name in sorted(files):
        print(f"wrote {os.path.join(out_dir, name)}")
    return code


def _cmd_rerun(args: argparse.Namespace, out_dir: str, workers: int) -> int:
    with open(args.manifest) as fh:
        doc = json.load(fh)
    if doc.get("schema") != _MANIFEST_SCHEMA:
        raise DomainError(f"unsupported manifest schema {doc.get('schema')!r}")
    command, params = doc["command"], doc["params"]
    outputs, messages, code = _RUNNERS[command](params, workers)
    _write_all(out_dir, outputs)
    for line in messages:
        print(line)
    clean = True
    for name, want in sorted(doc["outputs"].items()):
        got = hashlib.sha256(outputs[name].encode()).hexdigest() \
            if name in outputs else None
        same = got == want
        clean = clean and same
        print(f"{name}: {'identical' if same else 'DIFFERS'}")
    if not clean:
        return 1
    return code


def _build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="edgestats",
        description="Edge statistics of determinantal and random-matrix "
                    "models: distribution tables, exact samplers, "
                    "convergence suites, identity checks.")
    top.add_argument("--out-dir", default=None,
                     help="output directory (default: $EDGESTATS_OUTPUT_DIR or .)")
    top.add_argument("--workers", type=int, default=1,
                     help="process count for replica/row parallelism")
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dist", help="tabulate a distribution function")
    p.add_argument("which", choices=("tw", "gumbel", "falpha"))
    p.add_argument("--from", dest="t_from", type=float, default=None)
    p.add_argument("--to", dest="t_to", type=float, default=None)
    p.add_argument("--step", type=float, default=0.1)
    p.add_argument("--alpha", type=float, default=None)

    p = sub.add_parser("sample", help="draw configurations or statistics")
    p.add_argument("which", choices=("oscillator", "poisson", "shifted_airy",
                                     "gue", "deformed"))
    p.add_argument("--replicas", type=int, default=100)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--mu", type=float, default=None)
    p.add_argument("--n-mean", dest="n_mean", type=int, default=None)
    p.add_argument("--lam", type=float, default=None)
    p.add_argument("--t-min", dest="t_min", type=float, default=0.0)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--gue-n", dest="gue_n", type=int, default=400)
    p.add_argument("--top-k", dest="top_k", type=int, default=10)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--dense", action="store_true")
    p.add_argument("--sigma2", type=float, default=0.5)
    p.add_argument("--point-mass", dest="point_mass", action="store_true")

    p = sub.add_parser("converge", help="run a scaling-limit ladder")
    p.add_argument("which", choices=tuple(_CONVERGE))
    p.add_argument("--direction", default=None)
    p.add_argument("--sequence", default=None,
                   help="comma-separated ladder override")
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--control-c", dest="control_c", type=float, default=None)
    p.add_argument("--alpha", type=float, default=1.0)

    p = sub.add_parser("verify", help="run one identity/bound check")
    p.add_argument("which", choices=tuple(_VERIFY))

    p = sub.add_parser("rerun", help="re-execute a manifest and compare hashes")
    p.add_argument("manifest")
    return top


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    out_dir = args.out_dir or os.environ.get("EDGESTATS_OUTPUT_DIR") or "."
    workers = max(1, args.workers)
    try:
        if args.command == "rerun":
            return _cmd_rerun(args, out_dir, workers)
        command, params = _canonical_params(args)
        return _run(command, params, out_dir, workers)
    except (DomainError, ResourceError, FileNotFoundError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (SamplerError, AccuracyError, ContourError, CutoffViolation,
            TrendFailure) as exc:
        print(f"failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
