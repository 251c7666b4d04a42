"""Invariant-subspace solver for dissipative block operators.

The computational route follows the constructive double limit: compress the
positive component to growing Galerkin subspaces, add the regularization
i*eps*J which raises the dissipativity margin by exactly eps, solve each
regularized cell through its upper Riesz projector, read off the angle
operator K, and drive eps down a geometric schedule.  Every cell result is
recorded in a convergence trace; the accepted K is the small-eps limit,
finished off by a Newton step on the graph-invariance Riccati equation

    A21 + A22 K - K A11 - K A12 K = 0,

which is the shift-free form of L = K(S - mu + G L) with
L = A21 + (A22 - mu) K.  The residual of that equation vanishes exactly when
the graph of K is invariant, and the spectrum of the restriction to the
graph equals the spectrum of S + G L (= A11 + A12 K), independent of mu.

Pipeline cells are independent; the trace is assembled in schedule order so
reports are deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .blocks import (
    BlockOperator,
    SchurData,
    condition_i_margin,
    dissipativity_margin,
    imag_part,
    schur_data,
)
from .errors import (
    BoundaryEigenvalue,
    ConditionIFailed,
    ContourTooClose,
    DimensionMismatch,
    KreinError,
    NoCauchyConvergence,
    NotDissipative,
    NotMaximal,
    NotNonnegative,
    NotUniformlyDissipative,
    QuadratureNotConverged,
    RankAmbiguous,
    RankDeficientBasis,
    SingularShift,
)
from .geometry import (
    AngleOperator,
    KreinStructure,
    Subspace,
    angle_operator_from_subspace,
    maximality_witness,
)
from .numerics import operator_norm, orthonormalize, validate_matrix
from .projectors import (
    Contour,
    default_contour_radius,
    invariant_subspace_from_projector,
    riesz_projector_exact,
    riesz_projector_quadrature,
)

_DEFAULT_EPS_SCHEDULE = tuple(2.0 ** (-k) for k in range(15))


@dataclass(frozen=True)
class SolverConfig:
    """Knobs of the regularized Galerkin pipeline.

    ``mu`` fixes the transfer-function shift; None selects the smallest
    i*t with |G(i t + i eps)| < 1/2 across the whole schedule.  The epsilon
    schedule must decrease strictly and reach 1e-4 or below.
    """

    mu: complex | None = None
    eps_schedule: tuple[float, ...] = _DEFAULT_EPS_SCHEDULE
    galerkin_dims: tuple[int, ...] | None = None
    contour_nodes: int = 128
    contour_rule: str = "gauss_segments"
    riccati_tol: float = 1e-8
    invariance_tol: float = 1e-7
    norm_slack: float = 1e-8
    spec_slack: float = 1e-6
    cauchy_tol: float = 1e-6
    dissipativity_tol: float = 1e-10
    polish: bool = True

    def __post_init__(self):
        eps = tuple(float(e) for e in self.eps_schedule)
        if not eps:
            raise DimensionMismatch("eps schedule must be nonempty")
        if any(not 0.0 < e <= 1.0 for e in eps):
            raise DimensionMismatch("eps values must lie in (0, 1]")
        if any(e2 >= e1 for e1, e2 in zip(eps, eps[1:])):
            raise DimensionMismatch("eps schedule must decrease strictly")
        if eps[-1] > 1e-4:
            raise DimensionMismatch("eps schedule must reach 1e-4 or below")
        object.__setattr__(self, "eps_schedule", eps)
        if self.galerkin_dims is not None:
            dims = tuple(int(n) for n in self.galerkin_dims)
            if any(n < 1 for n in dims) or any(
                n2 <= n1 for n1, n2 in zip(dims, dims[1:])
            ):
                raise DimensionMismatch("galerkin dims must be strictly increasing")
            object.__setattr__(self, "galerkin_dims", dims)


@dataclass(frozen=True)
class Estimate10:
    """Lower bound on the indefinite Rayleigh quotient over the solution space."""

    eps: float
    a_plus_norm: float
    lower_bound: float
    min_rayleigh: float

    @property
    def slack(self) -> float:
        return self.min_rayleigh - self.lower_bound


@dataclass(frozen=True)
class Estimate11:
    """Norm cap on the restriction through the transfer data at mu.

    ``holds`` is None when gamma = |G(mu)| >= 1 and the cap is vacuous.
    """

    gamma: float
    s_norm: float
    bound: float
    holds: bool | None


@dataclass(frozen=True)
class CellTrace:
    n: int
    eps: float
    ok: bool
    error: str | None = None
    k_norm: float = math.nan
    l_norm: float = math.nan
    k_dist_prev: float | None = None
    restriction_min_im: float = math.nan
    projector_method: str = ""
    l_bound_ok: bool = True
    k_extended: np.ndarray | None = field(default=None, repr=False)


@dataclass
class SolveReport:
    k: AngleOperator
    l_op: np.ndarray = field(repr=False)
    riccati_residual: float = math.nan
    invariance_residual: float = math.nan
    restriction_spectrum: np.ndarray = field(default=None, repr=False)
    k_norm: float = math.nan
    estimate10: Estimate10 | None = None
    estimate11: Estimate11 | None = None
    convergence_trace: list[CellTrace] = field(default_factory=list)
    mu: complex = 0j
    margin: float = math.nan
    witness: np.ndarray | None = None
    projector_method: str = ""
    polish_method: str = "none"

    @property
    def maximal(self) -> bool:
        return self.witness is None

    def min_im_restriction(self) -> float:
        return float(np.min(self.restriction_spectrum.imag))


# ---------------------------------------------------------------------------
# elementary pipeline operations
# ---------------------------------------------------------------------------


def regularize(a: BlockOperator, eps: float) -> BlockOperator:
    """A + i eps J; the dissipativity margin grows by exactly eps."""
    eps = float(eps)
    if eps < 0:
        raise DimensionMismatch("eps must be nonnegative")
    s = a.structure
    return BlockOperator(
        s,
        a.a11 + 1j * eps * np.eye(s.p),
        a.a12,
        a.a21,
        a.a22 - 1j * eps * np.eye(s.m),
    )


def galerkin_truncate(a: BlockOperator, n: int, basis_plus=None) -> BlockOperator:
    """Compress the positive component to an n-dimensional subspace.

    ``basis_plus`` (p x n) is orthonormalized internally; the default is the
    span of the leading n coordinates of H+.  The negative component is kept
    whole, so the result acts on C^(n+m).
    """
    p = a.structure.p
    if not 1 <= n <= p:
        raise DimensionMismatch(f"need 1 <= n <= {p}, got {n}")
    if basis_plus is None:
        q = np.eye(p, dtype=np.complex128)[:, :n]
    else:
        b = validate_matrix(basis_plus, "basis_plus")
        if b.shape != (p, n):
            raise DimensionMismatch(f"basis_plus must be {p}x{n}, got {b.shape}")
        if operator_norm(b.conj().T @ b - np.eye(n)) <= 1e-10:
            q = b  # already orthonormal: keep the caller's coordinates
        else:
            _, rank = orthonormalize(b)
            if rank < n:
                raise RankDeficientBasis(f"basis has rank {rank} < {n}")
            q, r_fac = np.linalg.qr(b)
            phases = np.diag(r_fac) / np.abs(np.diag(r_fac))
            q = q * phases[np.newaxis, :]
    return BlockOperator(
        KreinStructure(n, a.structure.m),
        q.conj().T @ a.a11 @ q,
        q.conj().T @ a.a12,
        a.a21 @ q,
        a.a22,
    )


def graph_defect(a: BlockOperator, k_mat: np.ndarray) -> np.ndarray:
    """A21 + A22 K - K A11 - K A12 K; zero iff the graph of K is invariant."""
    return a.a21 + a.a22 @ k_mat - k_mat @ a.a11 - k_mat @ (a.a12 @ k_mat)


def _riccati_from_schur(
    a: BlockOperator, k_mat: np.ndarray, sd: SchurData
) -> tuple[float, np.ndarray]:
    l_op = a.a21 + (a.a22 - sd.mu * np.eye(a.structure.m)) @ k_mat
    rhs = k_mat @ (sd.s - sd.mu * np.eye(a.structure.p) + sd.g @ l_op)
    return operator_norm(l_op - rhs), l_op


def riccati_residual(
    a: BlockOperator, k: AngleOperator, mu: complex
) -> tuple[float, np.ndarray]:
    """Residual of L = K(S - mu + G L) together with L = A21 + (A22 - mu) K.

    The residual is independent of mu (it collapses to :func:`graph_defect`)
    and vanishes exactly on invariant graphs.
    """
    sd = schur_data(a, mu)
    return _riccati_from_schur(a, k.matrix, sd)


def restriction_matrix(a: BlockOperator, k: AngleOperator, mu: complex) -> np.ndarray:
    """S + G L, similar to the restriction of A to the graph of K."""
    sd = schur_data(a, mu)
    _, l_op = _riccati_from_schur(a, k.matrix, sd)
    return sd.s + sd.g @ l_op


def _select_mu(a: BlockOperator, eps_values, bound: float = 0.5) -> complex:
    """Smallest i*t (doubling t) with |G(i t + i eps)| < bound for all eps."""
    t = 1.0 + operator_norm(a.a22)
    for _ in range(64):
        mu = 1j * t
        try:
            worst = max(
                operator_norm(schur_data(a, mu + 1j * float(e)).g) for e in eps_values
            )
        except SingularShift:
            worst = math.inf
        if worst < bound:
            return mu
        t *= 2.0
    raise KreinError("no shift with small transfer coupling found")  # pragma: no cover


# ---------------------------------------------------------------------------
# single uniformly dissipative solve
# ---------------------------------------------------------------------------

_CELL_ERRORS = (
    ContourTooClose,
    QuadratureNotConverged,
    RankAmbiguous,
    BoundaryEigenvalue,
    NotMaximal,
    NotNonnegative,
    SingularShift,
    NotUniformlyDissipative,
)


def _upper_projector(full, margin, cfg: SolverConfig, projector: str):
    radius = default_contour_radius(full)
    if projector == "exact" or (projector == "auto" and margin < 2e-3 * radius):
        return riesz_projector_exact(full, "upper_open", tol=margin / 2.0)
    last_exc = None
    nodes = cfg.contour_nodes
    for _ in range(3):
        try:
            return riesz_projector_quadrature(
                full, Contour(radius, nodes, cfg.contour_rule)
            )
        except QuadratureNotConverged as exc:
            last_exc = exc
            nodes *= 2
        except ContourTooClose as exc:
            # a larger radius cannot cure axis proximity; only "auto" may
            # switch to the spectral split
            last_exc = exc
            break
    if projector == "auto":
        return riesz_projector_exact(full, "upper_open", tol=margin / 2.0)
    raise last_exc


def solve_uniformly_dissipative(
    a: BlockOperator,
    cfg: SolverConfig | None = None,
    mu: complex | None = None,
    projector: str = "quadrature",
) -> SolveReport:
    """Solve one strictly dissipative instance through its Riesz projector.

    With a positive margin the real axis belongs to the resolvent set and the
    upper spectrum is bounded, so the semicircular contour applies; the
    projector range is the maximal uniformly positive invariant subspace and
    its angle operator solves the Riccati equation up to projector accuracy.
    ``projector`` picks "quadrature" (node budget escalates on demand),
    "exact", or "auto" (quadrature with exact fallback near the axis).
    """
    if cfg is None:
        cfg = SolverConfig()
    margin = dissipativity_margin(a)
    scale = max(a.norm(), 1.0)
    if margin <= 1e-14 * scale:
        raise NotUniformlyDissipative(f"margin {margin:.3e} is not positive")
    if mu is None:
        mu = cfg.mu if cfg.mu is not None else _select_mu(a, (0.0,))
    full = a.to_matrix()
    rep = _upper_projector(full, margin, cfg, projector)
    subspace = invariant_subspace_from_projector(full, rep, a.structure)
    if subspace is None or subspace.dim != a.structure.p:
        got = 0 if subspace is None else subspace.dim
        raise NotMaximal(
            f"upper spectral subspace has dimension {got}, expected {a.structure.p}"
        )
    k = angle_operator_from_subspace(subspace)
    return _assemble_report(a, k, mu, margin, subspace, projector_method=rep.method)


def _assemble_report(
    a: BlockOperator,
    k: AngleOperator,
    mu: complex,
    margin: float,
    subspace: Subspace | None = None,
    projector_method: str = "",
    trace: list[CellTrace] | None = None,
    polish_method: str = "none",
) -> SolveReport:
    s = a.structure
    sd = schur_data(a, mu)
    res, l_op = _riccati_from_schur(a, k.matrix, sd)
    restriction = sd.s + sd.g @ l_op
    spectrum = np.linalg.eigvals(restriction)
    if subspace is None:
        stacked = np.vstack([np.eye(s.p, dtype=np.complex128), k.matrix])
        basis, _ = np.linalg.qr(stacked)
        subspace = Subspace(s, basis)
    b = subspace.basis
    full = a.to_matrix()
    ab = full @ b
    invariance = operator_norm(ab - b @ (b.conj().T @ ab))
    jb = b.copy()
    jb[s.p:] *= -1.0
    gram = b.conj().T @ jb
    min_rayleigh = float(np.linalg.eigvalsh(0.5 * (gram + gram.conj().T))[0])
    a_plus_norm = operator_norm(b.conj().T @ ab)
    lower = 2.0 * margin / (np.pi * a_plus_norm) if a_plus_norm > 0 else 0.0
    est10 = Estimate10(margin, a_plus_norm, lower, min_rayleigh)
    gamma = operator_norm(sd.g)
    s_norm = operator_norm(sd.s)
    if gamma < 1.0:
        bound = 2.0 * (s_norm + gamma / (1.0 - gamma) * (s_norm + abs(mu)))
        est11 = Estimate11(gamma, s_norm, bound, a_plus_norm <= bound + 1e-8)
    else:
        est11 = Estimate11(gamma, s_norm, math.inf, None)
    return SolveReport(
        k=k,
        l_op=l_op,
        riccati_residual=res,
        invariance_residual=invariance,
        restriction_spectrum=spectrum,
        k_norm=k.norm,
        estimate10=est10,
        estimate11=est11,
        convergence_trace=trace or [],
        mu=complex(mu),
        margin=margin,
        witness=maximality_witness(subspace),
        projector_method=projector_method,
        polish_method=polish_method,
    )


# ---------------------------------------------------------------------------
# Newton polish of the graph-invariance equation
# ---------------------------------------------------------------------------


def _newton_polish(
    a: BlockOperator, k0: np.ndarray, max_step: float = 0.1, max_iter: int = 30
) -> tuple[np.ndarray, float, bool]:
    """Refine K by Newton steps on the graph Riccati equation.

    Each step is one Sylvester solve.  The total correction is capped so the
    polish can only sharpen the branch the regularization already selected,
    never jump to another one.  Returns (best iterate, its defect norm,
    whether the entry point was improved).
    """
    scale = max(a.norm(), 1e-300)
    best = np.array(k0, dtype=np.complex128)
    res0 = operator_norm(graph_defect(a, best))
    best_res = res0
    k = best.copy()
    res = res0
    moved = 0.0
    for _ in range(max_iter):
        if res <= 1e-15 * scale:
            break
        try:
            delta = scipy.linalg.solve_sylvester(
                a.a22 - k @ a.a12, -(a.a11 + a.a12 @ k), -graph_defect(a, k)
            )
        except (np.linalg.LinAlgError, ValueError):
            break
        step = operator_norm(delta)
        if not np.isfinite(step) or moved + step > max_step:
            break
        k_next = k + delta
        res_next = operator_norm(graph_defect(a, k_next))
        if res_next >= res:
            break
        k, res = k_next, res_next
        moved += step
        if res < best_res:
            best, best_res = k.copy(), res
    return best, best_res, best_res < 0.999 * res0


# ---------------------------------------------------------------------------
# the full double-limit pipeline
# ---------------------------------------------------------------------------


def solve_theorem(a: BlockOperator, cfg: SolverConfig | None = None) -> SolveReport:
    """Compute a maximal nonnegative invariant subspace of a dissipative A.

    Requirements: dissipativity margin >= -tol and -A22 dissipative on H-.
    Iterates Galerkin dimension x epsilon cells, zero-extends each cell angle
    operator back to m x p through the fixed coordinate embedding, checks the
    epsilon tail for stabilization, and polishes the limit on the shift-free
    Riccati equation.  The convergence trace records every cell; when the
    tail misses the Cauchy tolerance and the assembled K also fails the
    a-posteriori Riccati certificate, :class:`NoCauchyConvergence` is raised
    with the partial report attached.
    """
    if cfg is None:
        cfg = SolverConfig()
    s = a.structure
    p = s.p
    margin0 = dissipativity_margin(a)
    scale = max(a.norm(), 1.0)
    if margin0 < -cfg.dissipativity_tol * scale:
        raise NotDissipative(f"margin {margin0:.3e} below tolerance")
    if condition_i_margin(a) < -cfg.dissipativity_tol * scale:
        raise ConditionIFailed("-A22 is not dissipative on the negative component")
    dims = cfg.galerkin_dims
    if dims is None:
        dims = tuple(sorted({math.ceil(p / 4), math.ceil(p / 2), p}))
    if dims[-1] != p:
        raise DimensionMismatch("the last Galerkin dimension must equal p")
    eps_all = (*cfg.eps_schedule, 0.0)
    if cfg.mu is not None:
        mu = complex(cfg.mu)
        worst = max(operator_norm(schur_data(a, mu + 1j * e).g) for e in eps_all)
        if worst >= 0.5:
            raise DimensionMismatch(
                f"fixed mu gives |G(mu + i eps)| = {worst:.3f} >= 1/2"
            )
    else:
        mu = _select_mu(a, eps_all)
    # continuity constant of i eps + S(mu + i eps) over the schedule
    c_const = max(
        operator_norm(1j * e * np.eye(p) + schur_data(a, mu + 1j * e).s)
        for e in eps_all
    )
    l_cap = 2.0 * (c_const + abs(mu))

    trace: list[CellTrace] = []
    final_ks: list[np.ndarray] = []
    final_eps: list[float] = []
    for n in dims:
        a_n = galerkin_truncate(a, n)
        embed = np.eye(p, dtype=np.complex128)[:, :n]
        prev = None
        for eps in cfg.eps_schedule:
            cell = regularize(a_n, eps)
            try:
                rep = solve_uniformly_dissipative(cell, cfg, mu=mu, projector="auto")
            except _CELL_ERRORS as exc:
                trace.append(
                    CellTrace(n, eps, ok=False, error=f"{type(exc).__name__}: {exc}")
                )
                break
            k_tilde = rep.k.matrix @ embed.conj().T
            dist = None if prev is None else operator_norm(k_tilde - prev)
            l_norm = operator_norm(rep.l_op)
            trace.append(
                CellTrace(
                    n,
                    eps,
                    ok=True,
                    k_norm=rep.k_norm,
                    l_norm=l_norm,
                    k_dist_prev=dist,
                    restriction_min_im=rep.min_im_restriction(),
                    projector_method=rep.projector_method,
                    l_bound_ok=l_norm <= l_cap * (1.0 + 1e-6),
                    k_extended=k_tilde,
                )
            )
            if n == p:
                final_ks.append(k_tilde)
                final_eps.append(eps)
            prev = k_tilde

    if not final_ks:
        raise NoCauchyConvergence("no full-dimension cell could be solved", report=None)
    diffs = [operator_norm(k2 - k1) for k1, k2 in zip(final_ks, final_ks[1:])]
    tail_converged = bool(diffs) and diffs[-1] <= cfg.cauchy_tol

    candidates = [final_ks[-1]]
    if len(final_ks) >= 2:
        r = final_eps[-1] / final_eps[-2]
        if r < 1.0:
            candidates.append((final_ks[-1] - r * final_ks[-2]) / (1.0 - r))
    k_best = min(candidates, key=lambda k: operator_norm(graph_defect(a, k)))
    polish_method = (
        "richardson" if len(candidates) > 1 and k_best is candidates[1] else "none"
    )
    if cfg.polish:
        k_polished, _, improved = _newton_polish(a, k_best)
        if improved:
            k_best, polish_method = k_polished, "newton"

    report = _assemble_report(
        a,
        AngleOperator(s, k_best),
        mu,
        margin0,
        trace=trace,
        polish_method=polish_method,
    )
    # a limit is accepted when the tail met the Cauchy tolerance or the
    # assembled K passes the a-posteriori Riccati certificate
    certified = report.riccati_residual <= cfg.riccati_tol * (
        operator_norm(schur_data(a, mu).s) + abs(mu)
    )
    if len(diffs) >= 2 and not tail_converged and not certified:
        raise NoCauchyConvergence(
            f"epsilon tail did not stabilize (last difference {diffs[-1]:.3e}) "
            f"and the limit candidate fails the Riccati certificate "
            f"(residual {report.riccati_residual:.3e})",
            report=report,
        )
    return report


# ---------------------------------------------------------------------------
# maximal dissipativity surrogate
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MaxDissReport:
    margin: float
    sampled_defect_min: float
    sampled_defect_max: float
    passed: bool


def maximal_dissipativity_check(
    a: BlockOperator, samples: int = 24, tol: float = 1e-10, seed: int = 7
) -> MaxDissReport:
    """Finite-dimensional maximality surrogate.

    In finite dimension a dissipative operator is automatically maximal, so
    the verdict is the margin criterion; sigma_min(JA - mu) at sampled upper
    shifts is reported as a diagnostic (the spectrum of a dissipative JA
    lies in the closed upper half-plane, so small defects there are
    expected, not failures).
    """
    ja = a.structure.signature() @ a.to_matrix()
    margin = float(np.linalg.eigvalsh(imag_part(ja))[0])
    rng = np.random.Generator(np.random.Philox(seed))
    radius = 2.0 * (1.0 + operator_norm(ja))
    mus = rng.uniform(-radius, radius, samples) + 1j * rng.uniform(
        1e-3, radius, samples
    )
    defects = [
        float(np.linalg.svd(ja - mu * np.eye(ja.shape[0]), compute_uv=False)[-1])
        for mu in mus
    ]
    return MaxDissReport(margin, min(defects), max(defects), margin >= -tol)
