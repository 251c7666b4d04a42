"""Command-line front end.

Subcommands: ``generate`` (random problem files), ``solve`` (full pipeline,
JSON report), ``verify`` (per-estimate property checks on one problem or a
seeded suite, optional CSV sidecar), ``spectrum`` (eigenvalue and transfer
decay data).  Machine-readable output goes to stdout; the human summary of
``verify`` goes to stderr.

Exit codes are part of the stable interface:
    0  success / all checks passed
    1  a check or suite row failed
    2  bad flags or unreadable input
    3  the operator is not dissipative (or its negative block is not dominant)
    4  the regularization tail did not converge (report still emitted)

The environment variable KREIN_THREADS caps BLAS parallelism; it is applied
at package import, before numpy is loaded.
"""

from __future__ import annotations

import argparse
import sys


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kreinspace",
        description="Invariant subspaces of dissipative operators in Krein spaces",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write a random dissipative problem file")
    gen.add_argument("--p", type=int, required=True, help="dimension of H+")
    gen.add_argument("--m", type=int, required=True, help="dimension of H-")
    gen.add_argument("--margin", type=float, default=0.0, help="target dissipativity margin")
    gen.add_argument("--coupling", type=float, default=1.0, help="off-diagonal block scale")
    gen.add_argument("--decay", type=float, default=0.0, help="extra -i diag profile on A22")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", type=str, default=None, help="output path (default stdout)")

    slv = sub.add_parser("solve", help="run the solver on a problem file")
    slv.add_argument("problem", type=str)
    slv.add_argument("--out", type=str, default=None, help="also write the report here")

    ver = sub.add_parser("verify", help="property-check one problem or a seeded suite")
    ver.add_argument("problem", type=str, nargs="?", default=None)
    ver.add_argument("--suite", action="store_true")
    ver.add_argument("--seeds", type=int, default=10, help="suite size")
    ver.add_argument("--seed", type=int, default=0, help="first suite seed")
    ver.add_argument("--p", type=int, default=3)
    ver.add_argument("--m", type=int, default=3)
    ver.add_argument("--margin", type=float, default=0.5)
    ver.add_argument("--coupling", type=float, default=1.0)
    ver.add_argument("--decay", type=float, default=0.0)
    ver.add_argument("--csv", type=str, default=None, help="CSV sidecar path")
    ver.add_argument("--out", type=str, default=None, help="also write the JSON report here")

    spc = sub.add_parser("spectrum", help="eigenvalue data for a problem file")
    spc.add_argument("problem", type=str)
    spc.add_argument(
        "--profile",
        type=str,
        default=None,
        help="comma-separated increasing heights for the transfer decay profile",
    )
    return parser


def _emit(text: str, path: str | None) -> None:
    sys.stdout.write(text)
    if path:
        _atomic_write(path, text)


def _atomic_write(path: str, text: str) -> None:
    import os

    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _cmd_generate(args) -> int:
    from . import harness, serialize

    try:
        spec = harness.InstanceSpec(
            p=args.p,
            m=args.m,
            margin=args.margin,
            a22_decay=args.decay,
            coupling_scale=args.coupling,
            seed=args.seed,
        )
        a = harness.random_dissipative(spec)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    _emit(serialize.dump_json(serialize.problem_to_dict(a)), args.out)
    return 0


def _load(path: str):
    from . import serialize

    a, overrides = serialize.load_problem(path)
    cfg = serialize.config_from_overrides(overrides)
    return a, cfg


def _cmd_solve(args) -> int:
    from . import errors, serialize, solver

    try:
        a, cfg = _load(args.problem)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    norm_a = a.norm()
    try:
        rep = solver.solve_theorem(a, cfg)
    except (errors.NotDissipative, errors.ConditionIFailed) as exc:
        _emit(serialize.dump_json({"error": f"{type(exc).__name__}: {exc}"}), args.out)
        return 3
    except errors.NoCauchyConvergence as exc:
        doc = {"error": f"NoCauchyConvergence: {exc}"}
        if exc.report is not None:
            doc["report"] = serialize.report_to_dict(exc.report, norm_a, cfg)
        _emit(serialize.dump_json(doc), args.out)
        return 4
    except errors.KreinError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    doc = serialize.report_to_dict(rep, norm_a, cfg)
    _emit(serialize.dump_json(doc), args.out)
    return 0 if doc["acceptance"]["passed"] else 1


def _result_to_dict(r) -> dict:
    import math

    def num(x):
        x = float(x)
        return x if math.isfinite(x) else None

    return {
        "seed": r.seed,
        "p": r.p,
        "m": r.m,
        "margin": num(r.margin),
        "passed": bool(r.passed),
        "error": r.error,
        "K_norm": num(r.k_norm),
        "riccati_residual": num(r.riccati_residual),
        "invariance_residual": num(r.invariance_residual),
        "min_im_restriction": num(r.min_im_restriction),
        "estimate10_slack": num(r.estimate10_slack),
        "estimate11_slack": num(r.estimate11_slack),
        "g_bound_ratio": num(r.g_bound_ratio),
        "checks": {k: bool(v) for k, v in r.checks.items()},
    }


def _write_csv(path: str, results) -> None:
    from . import serialize

    lines = [serialize.CSV_HEADER]
    lines.extend(serialize.csv_row(r) for r in results)
    _atomic_write(path, "\n".join(lines) + "\n")


def _cmd_verify(args) -> int:
    from . import errors, harness, serialize

    if args.suite:
        try:
            specs = [
                harness.InstanceSpec(
                    p=args.p,
                    m=args.m,
                    margin=args.margin,
                    a22_decay=args.decay,
                    coupling_scale=args.coupling,
                    seed=s,
                )
                for s in range(args.seed, args.seed + args.seeds)
            ]
        except Exception as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        suite = harness.run_property_suite(specs)
        results = suite.results
        doc = {
            "passed": bool(suite.passed),
            "no_cauchy_count": suite.no_cauchy_count,
            "rows": [_result_to_dict(r) for r in results],
            "failure_artifacts": suite.failure_artifacts,
        }
        exit_code = 0 if suite.passed else 1
    elif args.problem:
        from . import solver

        try:
            a, cfg = _load(args.problem)
        except Exception as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        try:
            rep = solver.solve_theorem(a, cfg)
        except (errors.NotDissipative, errors.ConditionIFailed) as exc:
            _emit(serialize.dump_json({"error": f"{type(exc).__name__}: {exc}"}), args.out)
            return 3
        except errors.NoCauchyConvergence as exc:
            _emit(serialize.dump_json({"error": f"NoCauchyConvergence: {exc}"}), args.out)
            return 4
        except errors.KreinError as exc:
            print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
            return 2
        result = harness.check_instance(a, rep, cfg, seed=-1)
        results = [result]
        doc = {
            "passed": bool(result.passed),
            "no_cauchy_count": 0,
            "rows": [_result_to_dict(result)],
            "failure_artifacts": [],
        }
        exit_code = 0 if result.passed else 1
    else:
        print("error: supply a problem file or --suite", file=sys.stderr)
        return 2
    if args.csv:
        _write_csv(args.csv, results)
    _emit(serialize.dump_json(doc), args.out)
    n_pass = sum(1 for r in results if r.passed)
    print(f"verify: {n_pass}/{len(results)} instances passed", file=sys.stderr)
    return exit_code


def _cmd_spectrum(args) -> int:
    import numpy as np

    from . import blocks, projectors, serialize

    try:
        a, cfg = _load(args.problem)
        heights = None
        if args.profile:
            heights = [float(h) for h in args.profile.split(",")]
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    full = a.to_matrix()
    spectrum_a = serialize.spectrum_pairs(np.linalg.eigvals(full))
    try:
        rep = projectors.riesz_projector_exact(full, "upper_closed", tol=1e-9)
        restriction = serialize.spectrum_pairs(rep.enclosed_eigenvalues)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    radius = projectors.default_contour_radius(full)
    doc = {
        "spectrum_A": spectrum_a,
        "spectrum_restriction": restriction,
        "contour_used": {
            "kind": "semicircle_upper",
            "radius": radius,
            "nodes": cfg.contour_nodes,
            "rule": cfg.contour_rule,
        },
        "g_decay_profile": None,
    }
    if heights is not None:
        try:
            profile = blocks.g_decay_profile(a, heights)
        except Exception as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        doc["g_decay_profile"] = [[h, v] for h, v in profile.points]
    sys.stdout.write(serialize.dump_json(doc))
    return 0


def _thread_cap():
    """Apply the KREIN_THREADS cap to the BLAS pools when possible."""
    import contextlib
    import os

    raw = os.environ.get("KREIN_THREADS", "")
    if not raw.isdigit() or int(raw) < 1:
        return contextlib.nullcontext()
    try:
        from threadpoolctl import threadpool_limits
    except ImportError:  # pragma: no cover - env vars were set at import
        return contextlib.nullcontext()
    # the pools must exist before the limit is created
    import numpy  # noqa: F401
    import scipy.linalg  # noqa: F401

    return threadpool_limits(limits=int(raw))


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    handlers = {
        "generate": _cmd_generate,
        "solve": _cmd_solve,
        "verify": _cmd_verify,
        "spectrum": _cmd_spectrum,
    }
    with _thread_cap():
        return handlers[args.command](args)


def console_main() -> None:
    sys.exit(main())


if __name__ == "__main__":
    console_main()
