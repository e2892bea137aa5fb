"""Command-line front end.

Every subcommand reads JSON inputs (a file path or inline JSON text),
runs one check and writes a JSON report, or with ``--format csv`` a flat
table.  The exit status is 0 when every certificate passes, 1 when one
fails and 2 when the input does not match its schema.
"""
from __future__ import annotations

import argparse
import csv
import io
import itertools
import math
import os
import sys
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import cooper, discrete, expspan, fell, gauss, wold
from .certificate import FAIL, PASS, Certificate
from .reps import DiscreteRep
from .serialize import (SchemaError, decode_complex, decode_cylinder, decode_expvector,
                        decode_fellpoint, decode_rep, decode_sequence, decode_vector, dumps,
                        loads)

EXIT_OK, EXIT_FAIL, EXIT_SCHEMA = 0, 1, 2
NESTED = {"fell": ("separate", "closure", "density")}


@dataclass
class RunConfig:
    command: str
    inputs: dict = field(default_factory=dict)
    tol: float = 1e-10
    out: str | None = None
    fmt: str = "json"


@dataclass
class Outcome:
    payload: dict
    certificates: list
    table: list | None = None


def _load(source: str | None, field: str):
    """Parse ``source`` as inline JSON if it looks like JSON, else read it as a path."""
    if source is None:
        raise SchemaError(field, "missing")
    text = source.strip()
    if not text or text[0] not in "{[":
        if not os.path.exists(source):
            try:
                return loads(text)
            except SchemaError:
                raise SchemaError(field, f"no such file {source!r}") from None
        with open(source, encoding="utf-8") as fh:
            text = fh.read()
    try:
        return loads(text)
    except SchemaError as exc:
        raise SchemaError(field, str(exc).split(": ", 1)[1]) from None


def _z(source, dim, field="--z"):
    """A number (broadcast to every coordinate) or one entry per coordinate.

    Entries are numbers or ``[re, im]`` pairs.
    """
    data = loads(source) if isinstance(source, str) else source
    values = data if isinstance(data, list) and (dim != 1 or isinstance(data[0], list)) else [data]
    z = [decode_complex(x, field) for x in values]
    if len(z) == 1:
        z = z * dim
    try:
        return expspan.half_plane_point(z, dim)
    except ValueError as exc:
        raise SchemaError(field, str(exc)) from None


def _positive(value, name):
    if not value > 0:
        raise SchemaError(name, "must be positive")
    return value


# -- subcommands --------------------------------------------------------------

def cmd_gram(cfg: RunConfig) -> Outcome:
    data = _load(cfg.inputs["vectors"], "--vectors")
    items = data["vectors"] if isinstance(data, dict) and "vectors" in data else data
    if not isinstance(items, list) or not items:
        raise SchemaError("--vectors", "expected a non-empty list of vectors")
    vs = [decode_expvector(v, f"vectors[{j}]") for j, v in enumerate(items)]
    if len({v.dim for v in vs}) > 1:
        raise SchemaError("vectors", "vectors have different dimensions")
    G = expspan.gram(vs)
    ev = np.linalg.eigvalsh(G)
    top = max(float(ev[-1]), 1e-300)
    cert = Certificate.bound("gram_psd", cfg.tol, max(0.0, -float(ev[0])) / top,
                             metadata={"min_eigenvalue": float(ev[0]), "max_eigenvalue": float(ev[-1])})
    return Outcome({"gram": G, "eigenvalues": ev, "certificate": cert}, [cert])


def cmd_cooper(cfg: RunConfig) -> Outcome:
    rep = decode_rep(_load(cfg.inputs["rep"], "--rep"))
    z = _z(cfg.inputs["z"], rep.dim)
    if cfg.inputs.get("vector") is not None:
        xi = decode_vector(_load(cfg.inputs["vector"], "--vector"), rep)
    elif isinstance(rep, DiscreteRep):
        N = cfg.inputs.get("truncation") or 20
        seed = discrete.kernel_of_adjoints(rep.isometry)
        if not seed:
            raise SchemaError("--rep", "representation has no wandering vector to build from")
        xi, _ = discrete.build_eigenvector(rep.isometry, seed[0], z, N)
    else:
        raise SchemaError("--vector", "missing")
    if cfg.inputs.get("pairs") is not None:
        pairs = _load(cfg.inputs["pairs"], "--pairs")
        if not isinstance(pairs, list) or not all(isinstance(p, list) and len(p) == 2 for p in pairs):
            raise SchemaError("--pairs", "expected a list of [s, t] pairs")
    else:
        grid = list(itertools.product(range(3), repeat=rep.dim))
        pairs = [(s, t) for s in grid for t in grid]
    bound = cfg.inputs.get("bound") or 1e-12
    cert = cooper.verify_cooper_gram(rep, xi, z, pairs, tol=cfg.inputs.get("eigen_tol") or 1e-8,
                                     bound=bound)
    return Outcome({"certificate": cert}, [cert])


def _wold_payload(result: wold.WoldResult, rep):
    comps = {",".join(map(str, sorted(a))) or "none": {"vector": w, "norm": rep.norm(w)}
             for a, w in sorted(result.components.items(), key=lambda kv: (len(kv[0]), sorted(kv[0])))}
    classes = {",".join(map(str, sorted(a))) or "none": lab
               for a, lab in sorted(result.classification.items(), key=lambda kv: (len(kv[0]), sorted(kv[0])))}
    return {"status": result.status, "components": comps, "classification": classes,
            "checks": result.checks, "limits": result.diagnostics}


def cmd_wold(cfg: RunConfig) -> Outcome:
    rep = decode_rep(_load(cfg.inputs["rep"], "--rep"))
    v = decode_vector(_load(cfg.inputs["vector"], "--vector"), rep)
    horizon = _positive(cfg.inputs.get("horizon") or 2.0**12, "--horizon")
    result = wold.wold_decompose(rep, v, tol=cfg.tol, horizon=horizon,
                                 exact=not cfg.inputs.get("iterate", False))
    cert = result.certificate()
    payload = _wold_payload(result, rep)
    payload["certificate"] = cert
    return Outcome(payload, [cert])


def cmd_wold_reconstruct(cfg: RunConfig) -> Outcome:
    rep = decode_rep(_load(cfg.inputs["rep"], "--rep"))
    if not isinstance(rep, DiscreteRep):
        raise SchemaError("--rep.kind", "wandering reconstruction needs a discrete representation")
    v = decode_vector(_load(cfg.inputs["vector"], "--vector"), rep)
    N = cfg.inputs.get("box")
    if N is None:
        N = max(v.support_bound(), 0)
    try:
        cert = wold.wandering_reconstruct(rep, v, N, tol=min(cfg.tol, 1e-12))
    except ValueError as exc:
        raise SchemaError("--box", str(exc)) from None
    return Outcome({"certificate": cert}, [cert])


def cmd_periodic(cfg: RunConfig) -> Outcome:
    data = _load(cfg.inputs["input"], "--input")
    if not isinstance(data, dict):
        raise SchemaError("--input", "expected an object")
    try:
        if "spectra" in data:
            T = cooper.PeriodicSemigroup.diagonal(data["spectra"])
        elif "generators" in data:
            gens = [np.array([[decode_complex(x, "generators") for x in row] for row in M])
                    for M in data["generators"]]
            T = cooper.PeriodicSemigroup(gens)
        else:
            raise SchemaError("--input.generators", "missing (or give spectra)")
    except SchemaError:
        raise
    except (ValueError, TypeError) as exc:
        raise SchemaError("--input.generators", str(exc)) from None
    n_range = data.get("n_range")
    if n_range is None:
        raise SchemaError("--input.n_range", "missing")
    quad = data.get("quad_points")
    try:
        modes = cooper.periodic_eigenmodes(T, n_range, quad)
    except cooper.AliasingError as exc:
        cert = Certificate("periodic_modes", cfg.tol, math.inf, FAIL,
                           metadata={"error": str(exc), "suggested_resolution": exc.suggested_resolution})
        return Outcome({"certificate": cert}, [cert])
    except ValueError as exc:
        raise SchemaError("--input", str(exc)) from None
    worst = max(modes.eigen_residual, modes.algebra_residual)
    status = PASS if modes.complete and worst <= 1e-9 * modes.metadata["scale"]**2 else FAIL
    cert = Certificate("periodic_modes", 1e-9, worst, status,
                       metadata={"total_rank": modes.total_rank, "dimension": modes.dimension,
                                 "resolution": modes.resolution})
    projections = {",".join(map(str, n)): P for n, P in modes.projections.items() if modes.ranks[n]}
    ranks = {",".join(map(str, n)): r for n, r in modes.ranks.items()}
    table = [{"n": k, "rank": r} for k, r in ranks.items()]
    return Outcome({"ranks": ranks, "projections": projections, "certificate": cert}, [cert], table)


def _points(cfg):
    P = decode_fellpoint(_load(cfg.inputs["P"], "--P"), "P")
    Q = decode_fellpoint(_load(cfg.inputs["Q"], "--Q"), "Q")
    if P.d != Q.d:
        raise SchemaError("Q.d", "points must share d")
    return P, Q


def cmd_fell_separate(cfg: RunConfig) -> Outcome:
    P, Q = _points(cfg)
    xi = None
    if cfg.inputs.get("vector") is not None:
        xi = decode_vector(_load(cfg.inputs["vector"], "--vector"), fell.ModelRep(P))
    try:
        w = fell.separation_witness(P, Q, xi)
    except ValueError as exc:
        raise SchemaError("--vector", str(exc)) from None
    if w is None:
        cert = Certificate("fell_separate", fell.SEPARATION_RADIUS, 0.0, PASS,
                           metadata={"witness": "NONE", "reason": "points coincide"})
        return Outcome({"witness": None, "certificate": cert}, [cert])
    ok = fell.replay_witness(P, Q, w)
    cert = Certificate("fell_separate", fell.SEPARATION_RADIUS, w.achieved, PASS if ok else FAIL,
                       witnesses=[w.to_dict()])
    return Outcome({"witness": w.to_dict(), "certificate": cert}, [cert])


def cmd_fell_closure(cfg: RunConfig) -> Outcome:
    P, Q = _points(cfg)
    cert = fell.closure_certificate(P, Q)
    return Outcome({"member": cert.passed, "certificate": cert}, [cert])


def cmd_fell_density(cfg: RunConfig) -> Outcome:
    try:
        dc = fell.density_certificate(cfg.inputs["lambda"], cfg.inputs["eps"], cfg.inputs["a"],
                                      cfg.inputs.get("grid") or 1000)
    except ValueError as exc:
        raise SchemaError("--eps" if "epsilon" in str(exc) else "--a", str(exc)) from None
    cert = dc.to_certificate()
    return Outcome({"delta": dc.delta, "g": dc.g, "max_deviation": dc.max_deviation,
                    "max_adjoint_deviation": dc.max_adjoint_deviation,
                    "formula_error": dc.formula_error, "certificate": cert}, [cert])


def _sequence(cfg, key, flag):
    return decode_sequence(_load(cfg.inputs[key], flag), flag.lstrip("-"))


def cmd_xmember(cfg: RunConfig) -> Outcome:
    if cfg.inputs.get("geometric") is not None:
        try:
            a = gauss.construct_X_sequence(cfg.inputs["geometric"], cfg.inputs.get("n_max") or 200)
        except ValueError as exc:
            raise SchemaError("--geometric", str(exc)) from None
    else:
        a = _sequence(cfg, "sequence", "--sequence")
    cert = gauss.x_membership(a, cfg.tol, cfg.inputs.get("n_max") or 200)
    return Outcome({"certificate": cert}, [cert])


def cmd_kakutani(cfg: RunConfig) -> Outcome:
    a = _sequence(cfg, "a", "--a")
    b = _sequence(cfg, "b", "--b")
    threshold = _positive(cfg.inputs.get("threshold") or 1e-6, "--threshold")
    report = gauss.kakutani_certify(a, b, cfg.inputs.get("n_max") or 200, threshold)
    decided = report.verdict != gauss.UNDECIDED and report.monotone
    cert = Certificate("kakutani", threshold, report.interval[1], PASS if decided else FAIL,
                       metadata={"verdict": report.verdict, "interval": list(report.interval),
                                 "crossing_n": report.crossing_n, "depth": report.depth})
    table = [{"n": n, "c": c, "c2_partial": s, "partial_product": p}
             for n, (c, s, p) in enumerate(zip(report.c, report.c2_partial, report.partial_products), 1)]
    return Outcome({"report": report.to_dict(), "certificate": cert}, [cert], table)


def _cylinders(cfg, key, flag, seed, count, dim):
    if cfg.inputs.get(key) is not None:
        data = _load(cfg.inputs[key], flag)
        if not isinstance(data, list):
            raise SchemaError(flag, "expected a list of cylinder vectors")
        return [decode_cylinder(v, f"vectors[{j}]") for j, v in enumerate(data)]
    return random_cylinders(np.random.default_rng(seed), count, dim)


def random_cylinders(rng, count: int, dim: int, terms: int = 2):
    """Deterministic random cylinder vectors on the first ``dim`` coordinates."""
    out = []
    for _ in range(count):
        v = gauss.GaussianCylinderVector()
        for _ in range(terms):
            support = [k for k in range(1, dim + 1) if rng.random() < 0.7] or [1]
            factors = {k: (complex(rng.normal(0, 0.5), rng.normal(0, 1.0)), float(rng.uniform(-1.5, 1.0)))
                       for k in support}
            v = v + gauss.GaussianCylinderVector.product(factors, complex(*rng.normal(0, 1, 2)))
        out.append(v)
    return out


def va_check(a: gauss.BoundarySequence, dim: int, vectors, ts=(0.3, 1.0, 2.5), purity_t: float = 40.0):
    """Isometry, double commutation and purity deviations of ``V^A`` on ``vectors``."""
    def nrm(w):
        return math.sqrt(max(gauss.cyl_inner(w, w, a).real, 0.0))

    iso = comm = pure = 0.0
    for v in vectors:
        scale = max(nrm(v), 1e-300)
        for i in range(1, dim + 1):
            for t in ts:
                iso = max(iso, abs(nrm(gauss.vA_apply(a, {i: t}, v)) - scale) / scale)
                for j in range(1, dim + 1):
                    if j == i:
                        continue
                    lhs = gauss.vA_apply(a, {i: t}, gauss.vA_adjoint(a, {j: t}, v))
                    rhs = gauss.vA_adjoint(a, {j: t}, gauss.vA_apply(a, {i: t}, v))
                    comm = max(comm, nrm(lhs - rhs) / scale)
            if a.value(i) > -math.inf:
                pure = max(pure, nrm(gauss.vA_adjoint(a, {i: purity_t}, v)) / scale)
    return {"isometry": iso, "double_commutation": comm, "purity": pure}


def cmd_va_check(cfg: RunConfig) -> Outcome:
    a = _sequence(cfg, "sequence", "--sequence")
    dim = cfg.inputs.get("dim") or 2
    vectors = _cylinders(cfg, "vectors", "--vectors", cfg.inputs.get("seed") or 0,
                         cfg.inputs.get("count") or 10, dim)
    devs = va_check(a, dim, vectors)
    cert = Certificate.bound("va_check", cfg.tol, max(devs.values()), metadata=devs)
    return Outcome({"deviations": devs, "certificate": cert}, [cert])


def cmd_restrict(cfg: RunConfig) -> Outcome:
    a = _sequence(cfg, "a", "--a")
    b = _sequence(cfg, "b", "--b")
    n = cfg.inputs.get("n") or 1
    grid = _load(cfg.inputs["grid"], "--grid") if cfg.inputs.get("grid") else \
        [[0.25 * k] * n for k in range(5)]
    if not isinstance(grid, list):
        raise SchemaError("--grid", "expected a list of points")
    vectors = _cylinders(cfg, "vectors", "--vectors", cfg.inputs.get("seed") or 0, 5, n)
    try:
        cert = gauss.finite_restriction_intertwiner(a, b, n, grid, vectors, tol=cfg.tol)
    except ValueError as exc:
        raise SchemaError("--grid", str(exc)) from None
    return Outcome({"certificate": cert}, [cert])


def cmd_wold_failure(cfg: RunConfig) -> Outcome:
    nu = _load(cfg.inputs.get("nu") or "[0.5, 0.5]", "--nu")
    if not isinstance(nu, list) or len(nu) != 2:
        raise SchemaError("--nu", "expected [nu0, nu1]")
    d = cfg.inputs.get("d") or 1
    try:
        res = gauss.wold_failure_masses(nu, d)
    except ValueError as exc:
        raise SchemaError("--nu" if "nu" in str(exc) else "--d", str(exc)) from None
    exact = float(res.masses.max()) == res.max_mass
    cert = Certificate("wold_failure", res.max_mass, float(res.masses.max()), PASS if exact else FAIL,
                       metadata={"d": d, "total_mass": float(math.fsum(res.masses))})
    table = [{"d": k, "max_mass": max(nu) ** k} for k in range(1, d + 1)]
    payload = {"max_mass": res.max_mass, "decay": table, "certificate": cert}
    if d <= 10:
        payload["masses"] = {format(g, f"0{d}b")[::-1]: m for g, m in enumerate(res.masses)}
    return Outcome(payload, [cert], table)


COMMANDS: dict[str, Callable[[RunConfig], Outcome]] = {
    "gram": cmd_gram,
    "cooper-verify": cmd_cooper,
    "wold": cmd_wold,
    "wold-reconstruct": cmd_wold_reconstruct,
    "periodic-modes": cmd_periodic,
    "fell-separate": cmd_fell_separate,
    "fell-closure": cmd_fell_closure,
    "fell-density": cmd_fell_density,
    "xmember": cmd_xmember,
    "kakutani": cmd_kakutani,
    "va-check": cmd_va_check,
    "restrict-equiv": cmd_restrict,
    "wold-failure": cmd_wold_failure,
}


# -- parsing and output -------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=float, default=1e-10, help="tolerance (default 1e-10)")
    common.add_argument("--out", help="write the report here instead of stdout")
    common.add_argument("--format", dest="fmt", choices=("json", "csv"), default="json")

    parser = argparse.ArgumentParser(prog="isomlab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("gram", parents=[common])
    p.add_argument("--vectors", required=True)
    p = sub.add_parser("cooper-verify", parents=[common])
    p.add_argument("--rep", required=True)
    p.add_argument("--vector")
    p.add_argument("--z", default="1")
    p.add_argument("--pairs")
    p.add_argument("--truncation", type=int)
    p.add_argument("--bound", type=float)
    p.add_argument("--eigen-tol", dest="eigen_tol", type=float)
    p = sub.add_parser("wold", parents=[common])
    p.add_argument("--rep", required=True)
    p.add_argument("--vector", required=True)
    p.add_argument("--horizon", type=float)
    p.add_argument("--iterate", action="store_true", help="ignore closed-form limits")
    p = sub.add_parser("wold-reconstruct", parents=[common])
    p.add_argument("--rep", required=True)
    p.add_argument("--vector", required=True)
    p.add_argument("--box", type=int)
    p = sub.add_parser("periodic-modes", parents=[common])
    p.add_argument("--input", required=True)
    for name in ("fell-separate", "fell-closure"):
        p = sub.add_parser(name, parents=[common])
        p.add_argument("--P", required=True)
        p.add_argument("--Q", required=True)
        if name == "fell-separate":
            p.add_argument("--vector")
    p = sub.add_parser("fell-density", parents=[common])
    p.add_argument("--lambda", dest="lambda", type=float, required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--grid", type=int)
    p = sub.add_parser("xmember", parents=[common])
    p.add_argument("--sequence")
    p.add_argument("--geometric", type=float)
    p.add_argument("--n-max", dest="n_max", type=int)
    p = sub.add_parser("kakutani", parents=[common])
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--n-max", dest="n_max", type=int)
    p.add_argument("--threshold", type=float)
    p = sub.add_parser("va-check", parents=[common])
    p.add_argument("--sequence", required=True)
    p.add_argument("--dim", type=int)
    p.add_argument("--vectors")
    p.add_argument("--count", type=int)
    p.add_argument("--seed", type=int)
    p = sub.add_parser("restrict-equiv", parents=[common])
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--n", type=int)
    p.add_argument("--grid")
    p.add_argument("--vectors")
    p.add_argument("--seed", type=int)
    p = sub.add_parser("wold-failure", parents=[common])
    p.add_argument("--nu")
    p.add_argument("--d", type=int)
    return parser


def _normalize_argv(argv):
    argv = list(argv)
    if len(argv) >= 2 and argv[0] in NESTED and argv[1] in NESTED[argv[0]]:
        argv = [f"{argv[0]}-{argv[1]}"] + argv[2:]
    return argv


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    inputs = {k: v for k, v in vars(ns).items() if k not in ("command", "tol", "out", "fmt")}
    return RunConfig(ns.command, inputs, ns.tol, ns.out, ns.fmt)


def _csv(outcome: Outcome) -> str:
    buf = io.StringIO()
    rows = outcome.table if outcome.table else [
        {"kind": c.kind, "status": c.status, "claimed_bound": c.claimed_bound, "achieved": c.achieved}
        for c in outcome.certificates]
    writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: format(v, ".17g") if isinstance(v, float) else v for k, v in row.items()})
    return buf.getvalue()


def run(cfg: RunConfig) -> tuple[int, str]:
    """Execute one command; returns the exit status and the rendered report."""
    if not cfg.tol > 0:
        raise SchemaError("--tol", "must be positive")
    for key in ("truncation", "n_max", "box", "n", "d", "dim", "grid", "count"):
        value = cfg.inputs.get(key)
        if isinstance(value, int) and value < (0 if key == "box" else 1):
            raise SchemaError(f"--{key.replace('_', '-')}", "must be at least 1")
    outcome = COMMANDS[cfg.command](cfg)
    body = {"command": cfg.command, **outcome.payload}
    text = _csv(outcome) if cfg.fmt == "csv" else dumps(body)
    status = EXIT_OK if all(c.passed for c in outcome.certificates) else EXIT_FAIL
    return status, text


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    parser = build_parser()
    ns = parser.parse_args(_normalize_argv(argv))
    cfg = config_from_args(ns)
    try:
        status, text = run(cfg)
    except SchemaError as exc:
        print(f"isomlab: schema error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return status


if __name__ == "__main__":
    sys.exit(main())
