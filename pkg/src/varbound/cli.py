"""Command line front end.

Loads measurement descriptions from line-delimited JSON problem files, runs
bound / region / witness / benchmark solves, and emits machine-checkable
results: JSONL result files carrying the full direction certificate, or CSV
with self-documenting header comments.  Exit code 0 means every solve
converged, 2 means a valid but unconverged bound, 1 means an error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from contextlib import nullcontext

import numpy as np

from .bound_solver import (DEFAULT_EPS, DEFAULT_MAX_STEPS, BoundResult,
                           SolveStatus, optimal_bound)
from .eigensolver import lowest_eigenpair
from .entanglement import evaluate_witness, region_trace
from .errors import CertificateError, ProblemFileError, VarBoundError
from .operators import (HermitianOperator, MomentPair, Povm, build_H,
                        depolarize, hermitian_from_matrix,
                        moment_pair_from_observable, moment_pair_from_povm,
                        scale, spin_component, sum_observable)

SCHEMA_VERSION = 1
RECHECK_TOL = 1e-8

BOUND_ROLES = ("A", "B")
WITNESS_ROLES = ("A1", "A2", "B1", "B2")


# ---------------------------------------------------------------- problem IO

def _number(v, where: str) -> float:
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return float(v)
    raise ProblemFileError(f"{where}: expected a number, got {v!r}")


def _entry(v, where: str) -> complex:
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return complex(v)
    if (isinstance(v, list) and len(v) == 2
            and all(isinstance(c, (int, float)) and not isinstance(c, bool) for c in v)):
        return complex(v[0], v[1])
    raise ProblemFileError(f"{where}: matrix entries must be numbers or [re, im] pairs")


def _matrix(rows, where: str) -> np.ndarray:
    if not isinstance(rows, list) or not rows or not all(isinstance(r, list) for r in rows):
        raise ProblemFileError(f"{where}: expected a list of matrix rows")
    if len({len(r) for r in rows}) != 1:
        raise ProblemFileError(f"{where}: matrix rows have unequal lengths")
    return np.array([[_entry(v, where) for v in row] for row in rows], dtype=complex)


def _build_pair(desc, where: str) -> MomentPair:
    if not isinstance(desc, dict):
        raise ProblemFileError(f"{where}: measurement descriptor must be an object")
    kind = desc.get("kind")
    if kind == "matrix":
        if "entries" not in desc:
            raise ProblemFileError(f"{where}: kind 'matrix' needs field 'entries'")
        return moment_pair_from_observable(hermitian_from_matrix(_matrix(desc["entries"], where)))
    if kind == "povm":
        if "outcomes" not in desc or "effects" not in desc:
            raise ProblemFileError(f"{where}: kind 'povm' needs fields 'outcomes' and 'effects'")
        if not isinstance(desc["outcomes"], list) or not isinstance(desc["effects"], list):
            raise ProblemFileError(f"{where}: 'outcomes' and 'effects' must be lists")
        outcomes = [_number(v, where) for v in desc["outcomes"]]
        effects = [_matrix(e, f"{where} effect {i}") for i, e in enumerate(desc["effects"])]
        return moment_pair_from_povm(Povm(outcomes, effects))
    if kind == "spin":
        if "s" not in desc or "phi" not in desc:
            raise ProblemFileError(f"{where}: kind 'spin' needs fields 's' and 'phi'")
        return moment_pair_from_observable(
            spin_component(_number(desc["s"], where), _number(desc["phi"], where)))
    if kind == "noisy":
        if "base" not in desc or "alpha" not in desc:
            raise ProblemFileError(f"{where}: kind 'noisy' needs fields 'base' and 'alpha'")
        return depolarize(_build_pair(desc["base"], f"{where}.base"),
                          _number(desc["alpha"], where))
    raise ProblemFileError(f"{where}: unknown measurement kind {kind!r}")


def load_problem(path: str, roles: tuple[str, ...]) -> dict[str, MomentPair]:
    """Parse a problem file and return the moment pair for each role."""
    out: dict[str, MomentPair] = {}
    seen_header = False
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ProblemFileError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            if not seen_header:
                if not isinstance(obj, dict) or obj.get("type") != "problem":
                    raise ProblemFileError(
                        f"{path}:{lineno}: first record must be the problem header")
                if obj.get("schema") != SCHEMA_VERSION:
                    raise ProblemFileError(
                        f"{path}:{lineno}: unsupported schema {obj.get('schema')!r}")
                seen_header = True
                continue
            if not isinstance(obj, dict):
                raise ProblemFileError(f"{path}:{lineno}: expected an object record")
            role = obj.get("role")
            if role not in roles:
                raise ProblemFileError(
                    f"{path}:{lineno}: unexpected role {role!r}; this command needs {list(roles)}")
            if role in out:
                raise ProblemFileError(f"{path}:{lineno}: duplicate role {role!r}")
            where = f"{path}:{lineno} role {role}"
            try:
                out[role] = _build_pair(obj, where)
            except ProblemFileError:
                raise
            except VarBoundError as exc:
                raise ProblemFileError(f"{where}: {type(exc).__name__}: {exc}") from exc
    if not seen_header:
        raise ProblemFileError(f"{path}: empty problem file")
    missing = [r for r in roles if r not in out]
    if missing:
        raise ProblemFileError(f"{path}: missing roles {missing}")
    return out


# ----------------------------------------------------------------- output IO

def _out_stream(path: str | None):
    return open(path, "w", encoding="utf-8") if path else nullcontext(sys.stdout)


def _jsonl(fh, obj) -> None:
    fh.write(json.dumps(obj) + "\n")


def _csv_cell(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _csv_row(fh, *cells) -> None:
    fh.write(",".join(_csv_cell(c) for c in cells) + "\n")


def _direction_lines(fh, solve: str, res: BoundResult, extra: dict | None = None) -> None:
    base = dict(extra) if extra else {}
    for r, h in res.directions:
        rec = {"type": "direction", "solve": solve, **base,
               "r": [r[0], r[1], r[2]], "h": h}
        _jsonl(fh, rec)


def _trace_lines(fh, solve: str, res: BoundResult) -> None:
    for t in res.trace:
        _jsonl(fh, {"type": "trace", "solve": solve, "step": t.step,
                    "vertices": t.vertex_count, "c_lower": t.c_lower,
                    "c_upper": t.c_upper})


# ------------------------------------------------------------------ commands

def cmd_bound(args) -> int:
    pairs = load_problem(args.problem, BOUND_ROLES)
    res = optimal_bound(pairs["A"], pairs["B"], args.eps, args.max_steps,
                        keep_polytope=args.export_mesh is not None)
    with _out_stream(args.out) as fh:
        _jsonl(fh, {"schema": SCHEMA_VERSION, "type": "result", "command": "bound",
                    "dim": pairs["A"].dim, "eps_target": args.eps,
                    "max_steps": args.max_steps, "c_lower": res.c_lower,
                    "c_upper": res.c_upper, "gap": res.gap, "steps": res.steps,
                    "status": res.status.value})
        _direction_lines(fh, "bound", res)
        if args.trace:
            _trace_lines(fh, "bound", res)
    if args.export_mesh:
        with open(args.export_mesh, "w", encoding="utf-8") as fh:
            fh.write(res.polytope.to_off())
    return 0 if res.status is SolveStatus.CONVERGED else 2


def cmd_witness(args) -> int:
    pairs = load_problem(args.problem, WITNESS_ROLES)
    alpha, beta = args.weights
    ok = True
    with _out_stream(args.out) as fh:
        for noise in args.noise:
            rep = evaluate_witness(pairs["A1"], pairs["A2"], pairs["B1"], pairs["B2"],
                                   alpha=alpha, beta=beta, alpha_noise=(noise, noise),
                                   eps_target=args.eps, max_steps=args.max_steps)
            statuses = {k: v.status.value for k, v in rep.solves.items()}
            ok = ok and all(s == SolveStatus.CONVERGED.value for s in statuses.values())
            _jsonl(fh, {"schema": SCHEMA_VERSION, "type": "result",
                        "command": "witness", "dim": pairs["A1"].dim,
                        "eps_target": args.eps, "max_steps": args.max_steps,
                        "weights": [alpha, beta],
                        "alpha_noise": [rep.alpha_noise[0], rep.alpha_noise[1]],
                        "c_sep": rep.c_sep, "c_global": rep.c_global,
                        "margin": rep.margin, "detects": rep.detects,
                        "gaps": rep.gaps, "statuses": statuses})
            extra = {"alpha_noise": [rep.alpha_noise[0], rep.alpha_noise[1]]}
            for name in ("alice", "bob", "global"):
                _direction_lines(fh, name, rep.solves[name], extra)
    return 0 if ok else 2


def cmd_region(args) -> int:
    pairs = load_problem(args.problem, BOUND_ROLES)
    mp_a, mp_b = pairs["A"], pairs["B"]
    if args.noise > 0.0:
        mp_a = depolarize(mp_a, args.noise)
        mp_b = depolarize(mp_b, args.noise)
    if args.theta_count < 1:
        raise ValueError("--theta-count must be at least 1")
    thetas = [0.5 * math.pi * (k + 1) / (args.theta_count + 1)
              for k in range(args.theta_count)]
    reg = region_trace(mp_a, mp_b, thetas,
                       eps_target=args.eps, max_steps=args.max_steps)
    with _out_stream(args.out) as fh:
        fh.write("# uncertainty region trace\n")
        fh.write(f"# theta_count={args.theta_count} noise={args.noise!r}"
                 f" eps_target={args.eps!r} max_steps={args.max_steps}\n")
        fh.write("# sample rows: sample,theta,c_lower,c_upper,steps,status\n")
        fh.write("# hull rows: hull,u,v\n")
        for s in reg.samples:
            _csv_row(fh, "sample", s.theta, s.c_lower, s.c_upper, s.steps, s.status)
        for u, v in reg.hull:
            _csv_row(fh, "hull", u, v)
    converged = all(s.status == SolveStatus.CONVERGED.value for s in reg.samples)
    return 0 if converged else 2


def haar_random_hermitian(rng: np.random.Generator, dim: int,
                          spectrum: str = "gaussian") -> HermitianOperator:
    """Random observable with Haar-distributed eigenvectors.

    Eigenvectors come from the QR decomposition of a complex Gaussian matrix
    with the phases of the R diagonal absorbed, which makes Q exactly Haar.
    The spectrum is drawn standard normal or uniform on [-1, 1].
    """
    if dim < 2:
        raise ValueError(f"dim must be at least 2, got {dim}")
    z = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r)
    q = q * (diag / np.abs(diag))
    if spectrum == "gaussian":
        w = rng.standard_normal(dim)
    elif spectrum == "uniform":
        w = rng.uniform(-1.0, 1.0, dim)
    else:
        raise ValueError(f"unknown spectrum {spectrum!r}")
    return HermitianOperator((q * w) @ q.conj().T)


def rescale_to_unit_interval(op: HermitianOperator) -> HermitianOperator:
    """Affine map of the spectrum onto [0, 1]; constant operators map to 0."""
    w = np.linalg.eigvalsh(op.entries)
    lo, hi = float(w[0]), float(w[-1])
    d = op.entries.shape[0]
    if hi - lo <= 0.0:
        return HermitianOperator(np.zeros((d, d)))
    return HermitianOperator((op.entries - lo * np.eye(d)) / (hi - lo))


def bench_random(dim: int, samples: int, seed: int,
                 eps_target: float = DEFAULT_EPS,
                 max_steps: int = DEFAULT_MAX_STEPS,
                 spectrum: str = "gaussian") -> list[BoundResult]:
    """Solve random projective pairs with Haar eigenvectors; fixed seed."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(samples):
        a = moment_pair_from_observable(haar_random_hermitian(rng, dim, spectrum))
        b = moment_pair_from_observable(haar_random_hermitian(rng, dim, spectrum))
        out.append(optimal_bound(a, b, eps_target, max_steps))
    return out


def bench_worstcase(spins, eps_target: float = DEFAULT_EPS,
                    max_steps: int = DEFAULT_MAX_STEPS,
                    ) -> list[tuple[float, BoundResult]]:
    """Orthogonal spin components rescaled to unit-interval spectra.

    The rotationally symmetric optimum makes the cutting plane circle the
    minimum, which is the slowest observed convergence mode; rescaling makes
    step counts comparable across spin lengths.
    """
    out = []
    for s in spins:
        a = rescale_to_unit_interval(spin_component(s, 0.0))
        b = rescale_to_unit_interval(spin_component(s, 0.5 * math.pi))
        res = optimal_bound(moment_pair_from_observable(a),
                            moment_pair_from_observable(b),
                            eps_target, max_steps)
        out.append((float(s), res))
    return out


def _bench_rows(fh, label: str, res: BoundResult) -> None:
    fh.write(f"# sample {label}: steps={res.steps} status={res.status.value}"
             f" c_lower={res.c_lower!r} c_upper={res.c_upper!r}\n")
    for t in res.trace:
        eps = t.c_upper - t.c_lower
        prec = -math.log10(eps) if eps > 0.0 else math.inf
        _csv_row(fh, label, t.step, t.vertex_count, t.c_lower, t.c_upper, eps, prec)


def cmd_bench(args) -> int:
    if args.samples < 1:
        raise ValueError("--samples must be at least 1")
    if args.mode == "random":
        results = [(str(i), r) for i, r in enumerate(
            bench_random(args.dim, args.samples, args.seed,
                         args.eps, args.max_steps, args.spectrum))]
        params = (f"mode=random dim={args.dim} samples={args.samples}"
                  f" seed={args.seed} spectrum={args.spectrum}")
    else:
        results = [(f"s={s:g}", r) for s, r in
                   bench_worstcase(args.spin, args.eps, args.max_steps)]
        params = f"mode=worstcase spin={','.join(f'{s:g}' for s in args.spin)}"
    with _out_stream(args.out) as fh:
        fh.write("# benchmark trace\n")
        fh.write(f"# {params} eps_target={args.eps!r} max_steps={args.max_steps}\n")
        fh.write("# columns: sample,step,vertices,c_lower,c_upper,eps,decimal_precision\n")
        for label, res in results:
            _bench_rows(fh, label, res)
    converged = all(r.status is SolveStatus.CONVERGED for _, r in results)
    return 0 if converged else 2


# ------------------------------------------------------------------- recheck

def _witness_pairs(pairs: dict[str, MomentPair], noise: tuple[float, float],
                   weights: tuple[float, float]) -> dict[str, tuple[MomentPair, MomentPair]]:
    na, nb = noise
    sa, sb = math.sqrt(weights[0]), math.sqrt(weights[1])
    a1, a2 = depolarize(pairs["A1"], na), depolarize(pairs["A2"], na)
    b1, b2 = depolarize(pairs["B1"], nb), depolarize(pairs["B2"], nb)
    return {
        "alice": (scale(a1, sa), scale(a2, sb)),
        "bob": (scale(b1, sa), scale(b2, sb)),
        "global": (scale(sum_observable(a1, b1), sa),
                   scale(sum_observable(a2, b2), sb)),
    }


def recheck_certificate(problem_path: str, result_path: str) -> float:
    """Independently revalidate every direction of a result file.

    Rebuilds each direction operator from the problem file and recomputes
    its smallest eigenvalue with a fresh solve; returns the largest
    deviation from the recorded offsets.  Raises CertificateError on files
    that carry no checkable certificate.
    """
    max_dev = 0.0
    checked = 0
    solve_pairs: dict[str, tuple[MomentPair, MomentPair]] = {}
    with open(result_path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CertificateError(
                    f"{result_path}:{lineno}: invalid JSON: {exc}") from exc
            if not isinstance(obj, dict):
                raise CertificateError(f"{result_path}:{lineno}: expected an object record")
            kind = obj.get("type")
            if kind == "result":
                command = obj.get("command")
                if command == "bound":
                    pairs = load_problem(problem_path, BOUND_ROLES)
                    solve_pairs = {"bound": (pairs["A"], pairs["B"])}
                elif command == "witness":
                    pairs = load_problem(problem_path, WITNESS_ROLES)
                    noise = tuple(obj.get("alpha_noise", (0.0, 0.0)))
                    weights = tuple(obj.get("weights", (1.0, 1.0)))
                    solve_pairs = _witness_pairs(pairs, noise, weights)
                else:
                    raise CertificateError(
                        f"{result_path}:{lineno}: no certificate for command {command!r}")
            elif kind == "direction":
                tag = obj.get("solve")
                if tag not in solve_pairs:
                    raise CertificateError(
                        f"{result_path}:{lineno}: direction for unknown solve {tag!r}")
                mp_a, mp_b = solve_pairs[tag]
                lam = lowest_eigenpair(build_H(mp_a, mp_b, obj["r"])).value
                dev = abs(lam - float(obj["h"]))
                if dev > max_dev:
                    max_dev = dev
                checked += 1
            elif kind != "trace":
                raise CertificateError(
                    f"{result_path}:{lineno}: unknown record type {kind!r}")
    if checked == 0:
        raise CertificateError(f"{result_path}: no direction records to check")
    return max_dev


def cmd_recheck(args) -> int:
    dev = recheck_certificate(args.problem, args.result)
    print(f"checked certificate: max offset deviation {dev!r}")
    return 0 if dev <= args.tol else 1


# -------------------------------------------------------------------- parser

def _add_solver_flags(sp) -> None:
    sp.add_argument("--eps", type=float, default=DEFAULT_EPS,
                    help="target certified gap (default %(default)g)")
    sp.add_argument("--max-steps", type=int, default=DEFAULT_MAX_STEPS,
                    help="cutting plane step limit (default %(default)s)")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="varbound",
        description="Certified lower bounds on variance sums of two measurements.")
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("bound", help="two-sided bound for one measurement pair")
    b.add_argument("problem", help="problem file with roles A and B")
    _add_solver_flags(b)
    b.add_argument("--out", help="result file path (default stdout)")
    b.add_argument("--trace", action="store_true", help="append per-step trace records")
    b.add_argument("--export-mesh", metavar="PATH",
                   help="write the final outer polytope as OFF text")
    b.set_defaults(func=cmd_bound)

    r = sub.add_parser("region", help="trace the attainable variance region")
    r.add_argument("problem", help="problem file with roles A and B")
    _add_solver_flags(r)
    r.add_argument("--theta-count", type=int, default=64,
                   help="number of uniform weight angles in (0, pi/2) (default %(default)s)")
    r.add_argument("--noise", type=float, default=0.0,
                   help="depolarizing strength applied to both measurements")
    r.add_argument("--out", help="CSV path (default stdout)")
    r.set_defaults(func=cmd_region)

    w = sub.add_parser("witness", help="entanglement witness from local bounds")
    w.add_argument("problem", help="problem file with roles A1, A2, B1, B2")
    _add_solver_flags(w)
    w.add_argument("--noise", type=float, nargs="+", default=[0.0],
                   help="depolarizing strengths to sweep (default 0)")
    w.add_argument("--weights", type=float, nargs=2, default=[1.0, 1.0],
                   metavar=("ALPHA", "BETA"), help="variance weights (default 1 1)")
    w.add_argument("--out", help="result file path (default stdout)")
    w.set_defaults(func=cmd_witness)

    n = sub.add_parser("bench", help="convergence benchmarks on generated instances")
    _add_solver_flags(n)
    n.add_argument("--mode", choices=("random", "worstcase"), default="random")
    n.add_argument("--dim", type=int, default=30, help="dimension for random mode")
    n.add_argument("--samples", type=int, default=1, help="instances in random mode")
    n.add_argument("--seed", type=int, default=0, help="RNG seed for random mode")
    n.add_argument("--spectrum", choices=("gaussian", "uniform"), default="gaussian")
    n.add_argument("--spin", type=float, nargs="+", default=[1.0, 5.0, 10.0],
                   help="spin lengths for worstcase mode")
    n.add_argument("--out", help="CSV path (default stdout)")
    n.set_defaults(func=cmd_bench)

    c = sub.add_parser("recheck", help="revalidate a result file certificate")
    c.add_argument("problem", help="problem file the result was computed from")
    c.add_argument("result", help="result file to check")
    c.add_argument("--tol", type=float, default=RECHECK_TOL,
                   help="allowed offset deviation (default %(default)g)")
    c.set_defaults(func=cmd_recheck)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except VarBoundError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
