"""Command-line front end.

Every command writes one JSON report with the inputs echoed, the outputs,
the wall time and the library version.  Exit status is 0 on success, 2 for
invalid input and 3 for numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
import time

import numpy as np

from . import __version__
from . import io
from .config import DEFAULT_SEED
from .grouped import PartitionError
from .msn import CenteringError, MsnInstance, solve_msn, solve_msn_sparsified
from .rng import stream
from .sampling import build_plan, distortion_probe, draw_sparsifier, exact_distortion_quadratic
from .sensitivity import sensitivities
from .solvers import blw_convert, compute_weights, overestimate_profile, resolve_algorithm

log = logging.getLogger("blocklewis")

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 2, 3


def _inner_arg(text):
    if text is None:
        return None
    parts = [float(v) for v in text.split(",")]
    return parts[0] if len(parts) == 1 else parts


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="blocklewis", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp, groups=True):
        sp.add_argument("--input", required=True, help="matrix A (Matrix Market)")
        if groups:
            sp.add_argument("--groups", required=True, help="group spec JSON")
        sp.add_argument("--p", type=float, help="outer exponent (overrides the group file)")
        sp.add_argument("--inner", type=str,
                        help="inner exponent, or a comma list with one value per group")
        sp.add_argument("--out", help="report path (default: stdout)")

    def sampling_args(sp):
        sp.add_argument("--eps", type=float, default=0.25)
        sp.add_argument("--delta", type=float, default=0.1)
        sp.add_argument("--c-sample", type=float, default=1.0)

    def weight_source(sp):
        sp.add_argument("--weights", help="weights JSON (computed on the fly when absent)")
        sp.add_argument("--alg", choices=["contractive", "averaging", "inner"], default=None)

    sp = sub.add_parser("weights", help="block Lewis weight overestimates and certificate")
    common(sp)
    sp.add_argument("--alg", choices=["contractive", "averaging", "inner"], default=None)
    sp.add_argument("--eps", type=float, default=0.1, help="contraction accuracy")
    sp.add_argument("--iters", type=int, default=None, help="override the iteration count")

    sp = sub.add_parser("certify", help="certified F* of a stored (lambda, w) pair")
    common(sp)
    sp.add_argument("--weights", required=True)

    sp = sub.add_parser("plan", help="sampling plan from a certificate")
    common(sp)
    sampling_args(sp)
    weight_source(sp)

    sp = sub.add_parser("sparsify", help="draw a reweighted sparsifier")
    common(sp)
    sampling_args(sp)
    weight_source(sp)
    sp.add_argument("--seed", type=int, default=DEFAULT_SEED)

    sp = sub.add_parser("verify", help="distortion of a stored sparsifier")
    common(sp)
    sp.add_argument("--sparsifier", required=True)
    sp.add_argument("--eps", type=float, default=0.25)
    sp.add_argument("--probes", type=int, default=64)
    sp.add_argument("--seed", type=int, default=DEFAULT_SEED)
    sp.add_argument("--csv", help="write per-probe plot data here")

    sp = sub.add_parser("sensitivities", help="l_p sensitivities of the rows of A")
    common(sp, groups=False)
    sp.add_argument("--method", choices=["exact", "lewis-lower-bound"], default="exact")

    sp = sub.add_parser("solve-msn", help="minimize a sum of Euclidean norms")
    common(sp)
    sp.add_argument("--rhs", help="offsets b (Matrix Market); else 'b' in the group file")
    sp.add_argument("--eps", type=float, default=1e-6)
    sp.add_argument("--sparsify", action="store_true")
    sp.add_argument("--delta", type=float, default=0.1)
    sp.add_argument("--c-sample", type=float, default=1.0)
    sp.add_argument("--seed", type=int, default=DEFAULT_SEED)
    return parser


def _grouped(args):
    return io.grouped_from_files(args.input, args.groups, args.p, _inner_arg(args.inner))


def _certificate(args, g):
    if getattr(args, "weights", None):
        doc = io.unwrap_report(io.read_json(args.weights), "weights")
        return io.certificate_from_dict(doc, g)
    weights, inner = compute_weights(g, args.alg or "auto")
    return blw_convert(g, weights, inner)


def cmd_weights(args) -> dict:
    g = _grouped(args)
    kwargs = {}
    alg = args.alg or resolve_algorithm(g)
    if args.iters is not None:
        kwargs["iterations" if alg == "contractive" else "t_iters"] = args.iters
    if alg == "contractive":
        kwargs["eps"] = args.eps
    weights, inner = compute_weights(g, alg, **kwargs)
    cert = blw_convert(g, weights, inner)
    doc = io.certificate_to_dict(cert)
    if inner is not None:
        doc["u"] = inner.u
    return {
        "weights": doc,
        "iterations": weights.iterations,
        "advertised_bound": weights.bound,
        "certified_regime": weights.certified_regime,
        "rounding_ok": cert.rounding_ok,
        "notes": cert.notes,
    }


def cmd_certify(args) -> dict:
    g = _grouped(args)
    doc = io.unwrap_report(io.read_json(args.weights), "weights")
    cert = io.certificate_from_dict(doc, g)
    profile = overestimate_profile(g, cert.lam, cert.w)
    return {"f_star": float(np.max(profile)), "stored_f_star": cert.f_star, "profile": profile}


def cmd_plan(args) -> dict:
    g = _grouped(args)
    cert = _certificate(args, g)
    plan = build_plan(cert, args.eps, args.delta, args.c_sample)
    return {"plan": io.plan_to_dict(plan), "f_star": cert.f_star}


def cmd_sparsify(args) -> dict:
    g = _grouped(args)
    cert = _certificate(args, g)
    plan = build_plan(cert, args.eps, args.delta, args.c_sample)
    s = draw_sparsifier(g, plan, stream(args.seed, "draws"))
    return {"sparsifier": io.sparsifier_to_dict(s), "plan": io.plan_to_dict(plan),
            "f_star": cert.f_star}


def cmd_verify(args) -> dict:
    g = _grouped(args)
    s = io.sparsifier_from_dict(io.unwrap_report(io.read_json(args.sparsifier), "sparsifier"), g)
    probe, samples = distortion_probe(g, s, args.probes, stream(args.seed, "probes"),
                                      return_samples=True)
    out = {"probe_distortion": probe, "num_probes": len(samples)}
    if g.outer_p == 2 and np.all(g.inner_p == 2):
        lo, hi = exact_distortion_quadratic(g, s)
        out["eigen_interval"] = [lo, hi]
        out["within_eps"] = bool(1 - args.eps <= lo and hi <= 1 + args.eps)
    else:
        out["within_eps"] = bool(probe <= args.eps)
    if args.csv:
        with open(args.csv, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["probe", "block_norm_p", "relative_deviation"])
            for i, (exact, dev) in enumerate(samples):
                writer.writerow([i, repr(exact), repr(dev)])
        out["csv"] = args.csv
    return out


def cmd_sensitivities(args) -> dict:
    if args.p is None:
        raise io.InputError("--p is required")
    sv = sensitivities(io.read_matrix(args.input), args.p, args.method)
    return {"s": sv.s, "p": sv.p, "method": sv.method, "is_bound": sv.is_bound,
            "total": float(np.sum(sv.s))}


def cmd_solve_msn(args) -> dict:
    a = io.read_matrix(args.input)
    spec = io.read_groups(args.groups)
    if args.rhs:
        b = io.read_vector(args.rhs)
    elif "b" in spec:
        b = spec["b"]
    else:
        raise io.InputError("offsets missing: give --rhs or 'b' in the group file")
    inst = MsnInstance(a, spec["groups"], b)
    if args.sparsify:
        sol = solve_msn_sparsified(inst, args.eps, args.delta, args.c_sample,
                                   stream(args.seed, "draws"))
    else:
        sol = solve_msn(inst, args.eps)
    return io.solution_to_dict(sol)


COMMANDS = {
    "weights": cmd_weights,
    "certify": cmd_certify,
    "plan": cmd_plan,
    "sparsify": cmd_sparsify,
    "verify": cmd_verify,
    "sensitivities": cmd_sensitivities,
    "solve-msn": cmd_solve_msn,
}


def _configure_logging():
    level = os.environ.get("BLW_LOG", "error").upper()
    logging.basicConfig(level=getattr(logging, level, logging.ERROR), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")


def run(argv=None) -> int:
    _configure_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    inputs = {k: v for k, v in vars(args).items() if k != "out"}
    start = time.perf_counter()
    status = EXIT_OK
    try:
        outputs = COMMANDS[args.command](args)
    except (PartitionError, io.InputError, ValueError) as exc:
        status, outputs = EXIT_VALIDATION, {"error": str(exc)}
    except (np.linalg.LinAlgError, CenteringError, FloatingPointError) as exc:
        status, outputs = EXIT_NUMERICAL, {"error": str(exc)}
    report = {
        "command": args.command,
        "version": __version__,
        "status": status,
        "inputs": inputs,
        "outputs": outputs,
        "wall_time_s": time.perf_counter() - start,
    }
    text = io.dumps(report)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if status != EXIT_OK:
        print(f"error: {outputs['error']}", file=sys.stderr)
    return status


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
