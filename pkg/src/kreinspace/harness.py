"""Random instance generation and the batch property suite.

Instances are drawn from a Ginibre-style model: JA = R + iH with Hermitian R
arbitrary and Hermitian H shifted so that lambda_min(H) equals the requested
margin exactly, hence A = J(R + iH) has that dissipativity margin by
construction.  The stream comes from a counter-based generator (Philox), so
a seed pins the matrices bit-for-bit on every platform.

The suite runs the full solver on each instance and re-checks the quantified
estimates (Rayleigh lower bound, restriction norm cap, uniform transfer
bound, factorization and perturbation identities, resolvent asymptotics), so
one call machine-checks everything on an ensemble.  Failures are data:
offending instances are kept in the report for replay, and the suite passes
only with zero failures.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .blocks import (
    BlockOperator,
    factorization_residual,
    g_resolvent_identity_residual,
    g_uniform_bound_check,
    resolvent_asymptotics_check,
    schur_perturbation_residuals,
)
from .errors import KreinError, NoCauchyConvergence
from .geometry import KreinStructure
from .solver import SolveReport, SolverConfig, solve_theorem

_IDENTITY_TOL = 1e-9
_ESTIMATE_TOL = 1e-8


@dataclass(frozen=True)
class InstanceSpec:
    """Parameters of one random dissipative instance.

    ``margin`` is the exact dissipativity margin of the result (negative
    targets intentionally produce non-dissipative instances for negative
    controls).  ``a22_decay`` adds -i times a positive diagonal profile to
    A22, making the negative block dominant; ``coupling_scale`` scales the
    off-diagonal blocks.
    """

    p: int
    m: int
    margin: float = 0.0
    a22_decay: float = 0.0
    coupling_scale: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.p < 1 or self.m < 1:
            raise KreinError(f"need p, m >= 1, got p={self.p}, m={self.m}")
        if self.coupling_scale < 0 or self.a22_decay < 0:
            raise KreinError("coupling_scale and a22_decay must be nonnegative")
        if self.seed < 0:
            raise KreinError("seed must be nonnegative")


def _hermitian_ginibre(rng, n: int) -> np.ndarray:
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return (g + g.conj().T) / (2.0 * math.sqrt(n))


def random_dissipative(spec: InstanceSpec) -> BlockOperator:
    """Draw the block operator described by ``spec`` (deterministic per seed)."""
    s = KreinStructure(spec.p, spec.m)
    rng = np.random.Generator(np.random.Philox(spec.seed))
    d = s.dim
    r_part = _hermitian_ginibre(rng, d)
    h_part = _hermitian_ginibre(rng, d)
    for block in (r_part, h_part):
        block[: s.p, s.p:] *= spec.coupling_scale
        block[s.p:, : s.p] *= spec.coupling_scale
    shift = spec.margin - float(np.linalg.eigvalsh(h_part)[0])
    h_part += shift * np.eye(d)
    a_mat = s.signature() @ (r_part + 1j * h_part)
    a11 = a_mat[: s.p, : s.p]
    a12 = a_mat[: s.p, s.p:]
    a21 = a_mat[s.p:, : s.p]
    a22 = a_mat[s.p:, s.p:]
    if spec.a22_decay > 0:
        profile = spec.a22_decay * (1.0 + np.arange(s.m)) / s.m
        a22 = a22 - 1j * np.diag(profile)
    return BlockOperator(s, a11, a12, a21, a22)


# ---------------------------------------------------------------------------
# property suite
# ---------------------------------------------------------------------------


@dataclass
class InstanceResult:
    seed: int
    p: int
    m: int
    margin: float
    passed: bool = False
    error: str | None = None
    k_norm: float = math.nan
    riccati_residual: float = math.nan
    invariance_residual: float = math.nan
    min_im_restriction: float = math.nan
    estimate10_slack: float = math.nan
    estimate11_slack: float = math.nan
    g_bound_ratio: float = math.nan
    factorization_worst: float = math.nan
    identity_worst: float = math.nan
    asymptotics_ratio: float = math.nan
    checks: dict = field(default_factory=dict)
    report: SolveReport | None = field(default=None, repr=False)


@dataclass
class SuiteReport:
    results: list[InstanceResult]
    passed: bool
    no_cauchy_count: int = 0
    failure_artifacts: list[dict] = field(default_factory=list)


def check_instance(
    a: BlockOperator,
    rep: SolveReport,
    cfg: SolverConfig,
    seed: int = -1,
    margin_label: float | None = None,
    rng=None,
) -> InstanceResult:
    """Re-check every quantified estimate on one solved instance."""
    if rng is None:
        rng = np.random.Generator(np.random.Philox(key=max(seed, 0), counter=1))
    norm_a = a.norm()
    res = InstanceResult(
        seed=seed,
        p=a.structure.p,
        m=a.structure.m,
        margin=rep.margin if margin_label is None else margin_label,
    )
    checks: dict[str, bool] = {}
    res.report = rep
    res.k_norm = rep.k_norm
    res.riccati_residual = rep.riccati_residual
    res.invariance_residual = rep.invariance_residual
    res.min_im_restriction = rep.min_im_restriction()
    checks["k_norm"] = rep.k_norm <= 1.0 + cfg.norm_slack
    checks["invariance"] = rep.invariance_residual <= cfg.invariance_tol * norm_a
    checks["spectrum"] = res.min_im_restriction >= -cfg.spec_slack
    checks["maximal"] = rep.maximal

    res.estimate10_slack = rep.estimate10.slack
    checks["estimate10"] = res.estimate10_slack >= -_ESTIMATE_TOL
    if rep.estimate11.holds is None:
        checks["estimate11"] = True
    else:
        res.estimate11_slack = rep.estimate11.bound - rep.estimate10.a_plus_norm
        checks["estimate11"] = bool(rep.estimate11.holds)

    margin = rep.margin
    if margin > 1e-8:
        radius = 2.0 * (1.0 + norm_a)
        lams = np.concatenate(
            [
                rng.uniform(-radius, radius, 25) + 1j * rng.uniform(0.0, radius, 25),
                rng.uniform(-radius, radius, 25),
            ]
        )
        g_rep = g_uniform_bound_check(a, margin, lams)
        res.g_bound_ratio = g_rep.max_ratio
        checks["g_bound"] = g_rep.passed
    else:
        res.g_bound_ratio = 0.0
        checks["g_bound"] = True  # the bound is vacuous without a uniform margin

    worst_fact = 0.0
    worst_id = 0.0
    for _ in range(3):
        mu = rng.uniform(-2, 2) + 1j * rng.uniform(0.5, 3.0)
        lam = rng.uniform(-2, 2) + 1j * rng.uniform(0.5, 3.0)
        eps = rng.uniform(1e-6, 1.0)
        worst_fact = max(worst_fact, factorization_residual(a, mu))
        worst_id = max(worst_id, g_resolvent_identity_residual(a, lam, mu))
        worst_id = max(worst_id, *schur_perturbation_residuals(a, mu, eps))
    res.factorization_worst = worst_fact
    res.identity_worst = worst_id
    checks["factorization"] = worst_fact <= _IDENTITY_TOL
    checks["identities"] = worst_id <= _IDENTITY_TOL

    if margin > 1e-8:
        r0 = 8.0 * (1.0 + norm_a)
        asym = resolvent_asymptotics_check(a, [r0, 2.0 * r0], seed=max(seed, 0))
        res.asymptotics_ratio = asym.stability_ratio
        checks["asymptotics"] = asym.passed
    else:
        checks["asymptotics"] = True

    cells = [t for t in rep.convergence_trace if t.ok]
    checks["cells"] = all(t.k_norm < 1.0 for t in cells) and all(
        t.l_bound_ok for t in cells
    )

    res.checks = checks
    res.passed = all(checks.values())
    return res


def run_property_suite(specs, cfg: SolverConfig | None = None) -> SuiteReport:
    """Generate, solve, and estimate-check every instance of ``specs``."""
    if cfg is None:
        cfg = SolverConfig()
    results: list[InstanceResult] = []
    artifacts: list[dict] = []
    no_cauchy = 0
    for spec in specs:
        a = random_dissipative(spec)
        base = InstanceResult(seed=spec.seed, p=spec.p, m=spec.m, margin=spec.margin)
        try:
            rep = solve_theorem(a, cfg)
        except NoCauchyConvergence as exc:
            no_cauchy += 1
            base.error = f"NoCauchyConvergence: {exc}"
            base.report = exc.report
            results.append(base)
            continue
        except KreinError as exc:
            base.error = f"{type(exc).__name__}: {exc}"
            results.append(base)
            continue
        rng = np.random.Generator(np.random.Philox(key=spec.seed, counter=1))
        results.append(
            check_instance(a, rep, cfg, seed=spec.seed, margin_label=spec.margin, rng=rng)
        )
    passed = all(r.passed for r in results)
    if not passed:
        from .serialize import problem_to_dict

        for spec, r in zip(specs, results):
            if not r.passed:
                artifacts.append(
                    {
                        "spec": {
                            "p": spec.p,
                            "m": spec.m,
                            "margin": spec.margin,
                            "a22_decay": spec.a22_decay,
                            "coupling_scale": spec.coupling_scale,
                            "seed": spec.seed,
                        },
                        "problem": problem_to_dict(random_dissipative(spec)),
                        "error": r.error,
                        "checks": {k: bool(v) for k, v in r.checks.items()},
                    }
                )
    return SuiteReport(results, passed, no_cauchy, artifacts)
