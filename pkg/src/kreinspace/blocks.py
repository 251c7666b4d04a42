"""Block operator matrices and their Schur-complement transfer data.

An operator A on C^(p+m) is stored as the four blocks of

    A = [[A11, A12],
         [A21, A22]]

with respect to the splitting H+ (+) H-.  For a shift mu off the spectrum of
A22 the transfer data

    G(mu) = A12 (A22 - mu)^{-1}      (p x m)
    F(mu) = (A22 - mu)^{-1} A21      (m x p)
    S(mu) = A11 - A12 F(mu)          (p x p, the transfer function)

factor the whole operator as an exact block LDU identity,

    A = mu + [[1, G], [0, 1]] diag(S - mu, A22 - mu) [[1, 0], [F, 1]],

which underlies every resolvent formula used downstream.  This module also
houses the dissipativity margin, the finite checks of the four structural
conditions (dominant A22, bounded F/S, effectively-low-rank G), and the
quantitative resolvent estimates that the verification harness asserts on
random ensembles.

All functions here are pure; evaluation over shift samples is embarrassingly
parallel.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConditionIFailed, DimensionMismatch, NotUniformlyDissipative
from .geometry import KreinStructure
from .numerics import operator_norm, solve_shifted, validate_matrix

_EPS_A = 1e-6  # relative headroom on the half-norm constant a > 2|A P+|


@dataclass(frozen=True)
class BlockOperator:
    """The four complex blocks of an operator matrix on H+ (+) H-."""

    structure: KreinStructure
    a11: np.ndarray = field(repr=False)
    a12: np.ndarray = field(repr=False)
    a21: np.ndarray = field(repr=False)
    a22: np.ndarray = field(repr=False)

    def __post_init__(self):
        p, m = self.structure.p, self.structure.m
        shapes = {"a11": (p, p), "a12": (p, m), "a21": (m, p), "a22": (m, m)}
        for name, want in shapes.items():
            block = validate_matrix(getattr(self, name), name)
            if block.shape != want:
                raise DimensionMismatch(f"{name} must be {want}, got {block.shape}")
            object.__setattr__(self, name, block)

    def to_matrix(self) -> np.ndarray:
        return np.block([[self.a11, self.a12], [self.a21, self.a22]])

    def norm(self) -> float:
        return operator_norm(self.to_matrix())


def assemble(a11, a12, a21, a22) -> BlockOperator:
    """Build a :class:`BlockOperator` from four blocks (shapes fix p and m)."""
    a11 = validate_matrix(a11, "a11")
    a22 = validate_matrix(a22, "a22")
    if a11.shape[0] != a11.shape[1] or a22.shape[0] != a22.shape[1]:
        raise DimensionMismatch("diagonal blocks must be square")
    structure = KreinStructure(a11.shape[0], a22.shape[0])
    return BlockOperator(structure, a11, a12, a21, a22)


def decompose(a, structure: KreinStructure) -> BlockOperator:
    """Partition a (p+m) x (p+m) matrix into blocks; exact, lossless."""
    mat = validate_matrix(a, "A")
    d = structure.dim
    if mat.shape != (d, d):
        raise DimensionMismatch(f"A must be {d}x{d}, got {mat.shape}")
    p = structure.p
    return BlockOperator(
        structure, mat[:p, :p], mat[:p, p:], mat[p:, :p], mat[p:, p:]
    )


def imag_part(m) -> np.ndarray:
    """Hermitian imaginary part (M - M*) / (2i)."""
    a = validate_matrix(m)
    return (a - a.conj().T) / 2j


def dissipativity_margin(a: BlockOperator) -> float:
    """lambda_min of the Hermitian part (JA - (JA)*)/(2i).

    Positive iff A is uniformly dissipative in the indefinite metric with
    that constant; nonnegative iff dissipative.
    """
    ja = a.structure.signature() @ a.to_matrix()
    return float(np.linalg.eigvalsh(imag_part(ja))[0])


@dataclass(frozen=True)
class SchurData:
    """Transfer data S, F, G of a block operator at the shift mu."""

    mu: complex
    s: np.ndarray = field(repr=False)
    f: np.ndarray = field(repr=False)
    g: np.ndarray = field(repr=False)


def _resolvent_applied_left(a22: np.ndarray, mu: complex, b: np.ndarray) -> np.ndarray:
    """B (A22 - mu)^{-1} via a transposed solve."""
    x_t = solve_shifted(a22.T, mu, b.T)
    return x_t.T


def schur_data(a: BlockOperator, mu: complex) -> SchurData:
    """Compute S(mu), F(mu), G(mu); raises SingularShift near sigma(A22)."""
    f = solve_shifted(a.a22, mu, a.a21)
    g = _resolvent_applied_left(a.a22, mu, a.a12)
    s = a.a11 - a.a12 @ f
    return SchurData(complex(mu), s, f, g)


def factorization_residual(a: BlockOperator, mu: complex) -> float:
    """Relative defect of the block LDU identity at mu.

    The identity is exact for finite matrices, so the residual is at
    rounding level (contract: <= 1e-9) whenever mu clears sigma(A22).
    """
    sd = schur_data(a, mu)
    p, m = a.structure.p, a.structure.m
    eye_p = np.eye(p, dtype=np.complex128)
    eye_m = np.eye(m, dtype=np.complex128)
    upper = np.block([[eye_p, sd.g], [np.zeros((m, p)), eye_m]])
    diag = np.block(
        [
            [sd.s - mu * eye_p, np.zeros((p, m))],
            [np.zeros((m, p)), a.a22 - mu * eye_m],
        ]
    )
    lower = np.block([[eye_p, np.zeros((p, m))], [sd.f, eye_m]])
    recon = mu * np.eye(a.structure.dim) + upper @ diag @ lower
    denom = a.norm()
    if denom == 0.0:
        denom = 1.0
    return operator_norm(a.to_matrix() - recon) / denom


# ---------------------------------------------------------------------------
# structural condition checks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConditionCaps:
    """Optional caps for the structural condition report.

    ``f_cap``/``s_cap`` model families whose transfer data should stay
    bounded; ``g_rank_fraction``/``g_rank_tol`` quantify how concentrated
    the singular values of G(mu) are (all finite matrices are compact, so
    this is a report-only surrogate by default).
    """

    dissipative_tol: float = 1e-10
    f_cap: float | None = None
    s_cap: float | None = None
    g_rank_tol: float = 1e-2
    g_cap_fraction: float | None = None


@dataclass(frozen=True)
class ConditionItem:
    value: float
    passed: bool
    detail: str = ""


@dataclass(frozen=True)
class ConditionsReport:
    cond_i: ConditionItem
    cond_ii: ConditionItem
    cond_iii: ConditionItem
    cond_iv: ConditionItem
    g_singular_values: np.ndarray = field(repr=False, default=None)

    @property
    def all_passed(self) -> bool:
        return all(
            item.passed
            for item in (self.cond_i, self.cond_ii, self.cond_iii, self.cond_iv)
        )


def check_theorem_conditions(
    a: BlockOperator, mu: complex, caps: ConditionCaps | None = None
) -> ConditionsReport:
    """Finite-dimensional report of the four structural conditions.

    (i)   -A22 dissipative on H- (Euclidean sense), i.e. Im A22 <= tol;
    (ii)  |F(mu)| reported, optionally capped;
    (iii) singular-value concentration of G(mu) (report-only by default);
    (iv)  |S(mu)| reported, optionally capped.
    """
    if caps is None:
        caps = ConditionCaps()
    if mu.imag <= 0:
        raise DimensionMismatch("mu must lie in the open upper half-plane")
    im_a22_max = float(np.linalg.eigvalsh(imag_part(a.a22))[-1])
    cond_i = ConditionItem(
        value=-im_a22_max,
        passed=im_a22_max <= caps.dissipative_tol,
        detail="margin of -A22 in H-",
    )
    sd = schur_data(a, mu)
    f_norm = operator_norm(sd.f)
    cond_ii = ConditionItem(
        value=f_norm,
        passed=caps.f_cap is None or f_norm <= caps.f_cap,
        detail="|F(mu)|",
    )
    g_sv = np.linalg.svd(sd.g, compute_uv=False)
    if g_sv[0] > 0:
        effective = float(np.mean(g_sv / g_sv[0] > caps.g_rank_tol))
    else:
        effective = 0.0
    cond_iii = ConditionItem(
        value=effective,
        passed=caps.g_cap_fraction is None or effective <= caps.g_cap_fraction,
        detail="fraction of singular values of G above the decay threshold",
    )
    s_norm = operator_norm(sd.s)
    cond_iv = ConditionItem(
        value=s_norm,
        passed=caps.s_cap is None or s_norm <= caps.s_cap,
        detail="|S(mu)|",
    )
    return ConditionsReport(cond_i, cond_ii, cond_iii, cond_iv, g_singular_values=g_sv)


def condition_i_margin(a: BlockOperator) -> float:
    """Dissipativity margin of -A22 on H-: -lambda_max(Im A22)."""
    return -float(np.linalg.eigvalsh(imag_part(a.a22))[-1])


# ---------------------------------------------------------------------------
# decay and bound diagnostics for G
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DecayProfile:
    """Norms |G(i h)| along the imaginary axis.

    The resolvent bound |(A22 - i h)^{-1}| <= 1/h forces decay to zero, so
    the envelope checks assert last <= first and, past the horizon, a drop
    below the decay tolerance.
    """

    points: tuple[tuple[float, float], ...]
    last_le_first: bool
    tail_below_tol: bool
    decay_tol: float


def g_decay_profile(
    a: BlockOperator,
    heights,
    horizon: float = 100.0,
    decay_tol: float | None = None,
) -> DecayProfile:
    """Evaluate |G(i h)| for increasing heights h > 0."""
    hs = [float(h) for h in heights]
    if not hs or any(h <= 0 for h in hs) or any(
        h2 <= h1 for h1, h2 in zip(hs, hs[1:])
    ):
        raise DimensionMismatch("heights must be strictly increasing and positive")
    if condition_i_margin(a) < -1e-10:
        raise ConditionIFailed("-A22 is not dissipative; the profile is undefined")
    if decay_tol is None:
        decay_tol = 2.0 * operator_norm(a.a12) / max(horizon, 1.0)
    values = []
    for h in hs:
        g = _resolvent_applied_left(a.a22, 1j * h, a.a12)
        values.append((h, operator_norm(g)))
    last_le_first = values[-1][1] <= values[0][1] + 1e-14
    tail_below = values[-1][0] <= horizon or values[-1][1] <= decay_tol
    return DecayProfile(tuple(values), last_le_first, tail_below, decay_tol)


@dataclass(frozen=True)
class GBoundReport:
    a_const: float
    eps: float
    bound: float
    max_ratio: float
    worst_lambda: complex
    passed: bool


def half_range_norm(a: BlockOperator) -> float:
    """|A P+|, the norm of the first block column."""
    return operator_norm(np.vstack([a.a11, a.a21]))


def g_uniform_bound_check(a: BlockOperator, eps: float, sample_lambdas) -> GBoundReport:
    """Check |G(lambda)| <= 2 + 2a/eps on the closed upper half-plane.

    Requires the uniform margin ``eps`` > 0 (then A22 - lambda is invertible
    at every sample); a = 2 |A P+| (1 + 1e-6).
    """
    eps = float(eps)
    margin = dissipativity_margin(a)
    if eps <= 0 or margin < eps - 1e-12:
        raise NotUniformlyDissipative(
            f"need margin >= eps > 0, got margin={margin:.3e}, eps={eps:.3e}"
        )
    a_const = 2.0 * half_range_norm(a) * (1.0 + _EPS_A)
    bound = 2.0 + 2.0 * a_const / eps
    worst = 0.0
    worst_lam = 0j
    for lam in sample_lambdas:
        lam = complex(lam)
        if lam.imag < -1e-12:
            raise DimensionMismatch(f"sample {lam} is not in the closed upper half-plane")
        g = _resolvent_applied_left(a.a22, lam, a.a12)
        ratio = operator_norm(g) / bound
        if ratio > worst:
            worst, worst_lam = ratio, lam
    return GBoundReport(a_const, eps, bound, worst, worst_lam, worst <= 1.0 + 1e-9)


# ---------------------------------------------------------------------------
# resolvent asymptotics and algebraic identities
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AsymptoticsReport:
    radii: tuple[float, ...]
    constants: tuple[float, ...]
    stability_ratio: float
    eq_identity_defect: float
    passed: bool


def resolvent_asymptotics_check(
    a: BlockOperator,
    radii,
    samples_per_radius: int = 16,
    z_samples: int = 4,
    seed: int = 0,
    identity_tol: float = 1e-8,
    stability_factor: float = 4.0,
) -> AsymptoticsReport:
    """Probe (S(lambda) - lambda)^{-1} = -1/lambda + O(1/lambda^2).

    For each radius the constant C = max |lambda|^2 |(S-lambda)^{-1} +
    1/lambda| is fitted on an upper semicircle; C must be stable within
    ``stability_factor`` across the two largest radii.  The compression
    identity ((lambda - A)^{-1} z, z) = ((lambda - S(lambda))^{-1} z, z) for
    z in H+ is checked alongside (it is exact, so the defect stays at
    rounding level).
    """
    rs = sorted(float(r) for r in radii)
    if len(rs) < 2:
        raise DimensionMismatch("need at least two radii")
    if dissipativity_margin(a) <= 0:
        raise NotUniformlyDissipative("asymptotics probe needs a positive margin")
    p = a.structure.p
    rng = np.random.Generator(np.random.Philox(seed))
    zs = rng.standard_normal((z_samples, p)) + 1j * rng.standard_normal((z_samples, p))
    zs /= np.linalg.norm(zs, axis=1, keepdims=True)
    full = a.to_matrix()
    eye_p = np.eye(p, dtype=np.complex128)
    eye_full = np.eye(a.structure.dim, dtype=np.complex128)
    constants = []
    worst_identity = 0.0
    thetas = np.linspace(0.0, np.pi, samples_per_radius)
    for r in rs:
        c_fit = 0.0
        for theta in thetas:
            lam = r * np.exp(1j * theta)
            sd = schur_data(a, lam)
            shifted = sd.s - lam * eye_p
            inv_plus = np.linalg.solve(shifted, eye_p) + eye_p / lam
            c_fit = max(c_fit, abs(lam) ** 2 * operator_norm(inv_plus))
            resolvent = np.linalg.solve(lam * eye_full - full, eye_full)
            top_left = resolvent[:p, :p]
            s_res = np.linalg.solve(lam * eye_p - sd.s, eye_p)
            for z in zs:
                lhs = np.vdot(z, top_left @ z)
                rhs = np.vdot(z, s_res @ z)
                worst_identity = max(worst_identity, abs(lhs - rhs))
        constants.append(c_fit)
    c_hi, c_lo = max(constants[-2:]), min(constants[-2:])
    if c_hi < 1e-12:
        ratio = 1.0
    else:
        ratio = c_hi / max(c_lo, 1e-300)
    passed = ratio <= stability_factor and worst_identity <= identity_tol
    return AsymptoticsReport(tuple(rs), tuple(constants), ratio, worst_identity, passed)


def g_resolvent_identity_residual(a: BlockOperator, lam: complex, mu: complex) -> float:
    """Relative defect of G(lambda) = G(mu) + (lambda-mu) G(mu) (A22-lambda)^{-1}."""
    g_lam = _resolvent_applied_left(a.a22, lam, a.a12)
    g_mu = _resolvent_applied_left(a.a22, mu, a.a12)
    recon = g_mu + (complex(lam) - complex(mu)) * _resolvent_applied_left(
        a.a22, lam, g_mu
    )
    scale = max(operator_norm(g_lam), 1e-300)
    return operator_norm(g_lam - recon) / scale


def schur_perturbation_residuals(
    a: BlockOperator, mu: complex, eps: float
) -> tuple[float, float]:
    """Relative defects of the shift-perturbation identities

        G(mu + i eps) = G(mu) + i eps G(mu) (A22 - i eps - mu)^{-1}
        S(mu + i eps) = S(mu) - i eps G(mu + i eps) F(mu)

    Both are exact resolvent algebra, so the defects sit at rounding level.
    """
    eps = float(eps)
    mu_shift = complex(mu) + 1j * eps
    sd_mu = schur_data(a, mu)
    sd_up = schur_data(a, mu_shift)
    g_recon = sd_mu.g + 1j * eps * _resolvent_applied_left(a.a22, mu_shift, sd_mu.g)
    g_res = operator_norm(sd_up.g - g_recon) / max(operator_norm(sd_up.g), 1e-300)
    s_recon = sd_mu.s - 1j * eps * (sd_up.g @ sd_mu.f)
    s_res = operator_norm(sd_up.s - s_recon) / max(operator_norm(sd_up.s), 1e-300)
    return g_res, s_res
