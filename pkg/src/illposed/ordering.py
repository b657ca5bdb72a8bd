"""Orderings of linear operators by ill-posedness.

Everything is decided at a finite scale: singular values below the shared
numerical-rank cutoff (see :func:`illposed.linalg_core.default_rel_tol`)
count as zero, and the sigma-ordering verdict needs an explicit
``tolerance_budget`` because any two finite sequences are comparable with
some large constant.
"""

from dataclasses import dataclass, field
import math

import numpy as np
import scipy.linalg

from .errors import (
    DimensionMismatch,
    NonOrthonormalSubspace,
    RangeInclusionViolated,
    RankOrderViolation,
    RankZero,
    SolveFailure,
)
from .gallery import as_array
from .linalg_core import compute_svd, default_rel_tol, isometry_defect

A_PRIME_MORE = "A_prime_more_illposed"
A_MORE = "A_more_illposed"
EQUIVALENT = "equivalent"
NON_COMPARABLE = "non_comparable"

#: Default factorization tolerance (relative to sigma_max(A')) for douglas_factorize.
DOUGLAS_TOL = 1e-8


@dataclass
class OrderingVerdict:
    relation: str
    forward_constant: float
    backward_constant: float
    tolerance_budget: float
    constants_per_level: list = None
    backward_per_level: list = None
    compared_indices: int = 0
    note: str = "finite-scale surrogate: verdict depends on tolerance_budget"

    def as_dict(self):
        return {
            "relation": self.relation,
            "forward_constant": self.forward_constant,
            "backward_constant": self.backward_constant,
            "tolerance_budget": self.tolerance_budget,
            "constants_per_level": self.constants_per_level,
            "backward_per_level": self.backward_per_level,
            "compared_indices": self.compared_indices,
            "note": self.note,
        }


@dataclass
class ConnectingFactors:
    """Factors with ``A' ~ left @ A @ right``; ``residual`` is the max-norm misfit."""

    left_factor: np.ndarray
    right_factor: np.ndarray
    residual: float
    left_isometry_defect: float
    right_norm: float
    range_constant: float = None
    residual_2norm: float = None

    @property
    def left_norm(self):
        return float(np.linalg.norm(self.left_factor, 2)) if self.left_factor.size else 0.0

    def as_dict(self, include_matrices=False):
        out = {
            "residual": self.residual,
            "left_isometry_defect": self.left_isometry_defect,
            "right_norm": self.right_norm,
            "left_norm": self.left_norm,
            "range_constant": self.range_constant,
            "residual_2norm": self.residual_2norm,
        }
        if include_matrices:
            out["left_factor"] = self.left_factor.tolist()
            out["right_factor"] = self.right_factor.tolist()
        return out


@dataclass
class TikhonovReport:
    alpha_grid: np.ndarray
    per_solution_errors: list = field(default_factory=list)
    ordering_holds_empirically: bool = True
    spectral_criterion_margin: float = 0.0
    spectral_constant: float = 0.0

    def rows(self):
        """Flat ``(solution_id, alpha, err_A_prime, err_A)`` rows."""
        out = []
        for sid, errs in enumerate(self.per_solution_errors):
            for alpha, (e_prime, e) in zip(self.alpha_grid, errs):
                out.append((sid, float(alpha), float(e_prime), float(e)))
        return out

    def as_dict(self):
        return {
            "alpha_grid": [float(a) for a in self.alpha_grid],
            "ordering_holds_empirically": self.ordering_holds_empirically,
            "spectral_criterion_margin": self.spectral_criterion_margin,
            "spectral_constant": self.spectral_constant,
            "table": [list(r) for r in self.rows()],
        }


def _relation(forward, backward, budget):
    f_ok = forward <= budget
    b_ok = backward <= budget
    if f_ok and b_ok:
        return EQUIVALENT
    if f_ok:
        return A_PRIME_MORE
    if b_ok:
        return A_MORE
    return NON_COMPARABLE


def _ratio_max(num, den, r_num, r_den, count):
    # max_n num[n]/den[n] over n < count; infinite if num is alive where den is dead
    if r_num > r_den and r_den < count:
        return math.inf
    k = min(r_num, r_den, count)
    if k == 0:
        return 0.0
    return float(np.max(num[:k] / den[:k]))


def sigma_order(A_prime, A, tolerance_budget=10.0, n_max=None, rel_tol=None):
    """Compare singular values: best ``C`` with ``sigma_n(A') <= C sigma_n(A)`` and back.

    Indices up to ``n_max`` (default: all) are compared.  If one operator
    has more numerically non-zero singular values than the other inside that
    range, the constant in that direction is infinite.
    """
    Ap, Am = as_array(A_prime), as_array(A)
    sp, s = compute_svd(Ap), compute_svd(Am)
    rp, r = sp.rank(rel_tol), s.rank(rel_tol)
    if rp == 0 or r == 0:
        raise RankZero("operator is numerically zero")
    count = max(rp, r) if n_max is None else min(int(n_max), max(rp, r))
    forward = _ratio_max(sp.sigma, s.sigma, rp, r, count)
    backward = _ratio_max(s.sigma, sp.sigma, r, rp, count)
    return OrderingVerdict(
        relation=_relation(forward, backward, tolerance_budget),
        forward_constant=forward,
        backward_constant=backward,
        tolerance_budget=float(tolerance_budget),
        compared_indices=min(rp, r, count),
    )


def sigma_order_levels(build_prime, build, levels, tolerance_budget=10.0, n_max=None):
    """Run :func:`sigma_order` on a refinement ladder.

    ``build_prime`` and ``build`` map a grid level to an operator.  The
    returned verdict is the one at the finest level, with the constants of
    every level attached so that growth of ``C_N`` can be inspected.
    """
    verdicts = [sigma_order(build_prime(n), build(n), tolerance_budget, n_max) for n in levels]
    final = verdicts[-1]
    final.constants_per_level = [v.forward_constant for v in verdicts]
    final.backward_per_level = [v.backward_constant for v in verdicts]
    return final


def construct_connecting_factors(A_prime, A, rel_tol=None):
    """Build ``O`` and ``S`` with ``A' = O A S`` from the two singular systems.

    ``S = Phi diag(s'_i / s_i) Phi'^T`` and ``O = Psi' Psi^T``, summed over
    the numerically non-zero indices of ``A'``.  When both ranks agree ``O``
    is an isometry on the range of ``A``; otherwise it is a partial isometry
    and its defect is measured on the first ``rank(A')`` range directions.
    """
    Ap, Am = as_array(A_prime), as_array(A)
    sp, s = compute_svd(Ap), compute_svd(Am)
    rp, r = sp.rank(rel_tol), s.rank(rel_tol)
    if rp > r:
        raise RankOrderViolation(f"rank(A')={rp} exceeds rank(A)={r}")
    ratios = sp.sigma[:rp] / s.sigma[:rp]
    S = (s.V[:, :rp] * ratios) @ sp.V[:, :rp].T
    O = sp.U[:, :rp] @ s.U[:, :rp].T
    resid = Ap - O @ Am @ S
    basis = s.U[:, :rp]
    return ConnectingFactors(
        left_factor=O,
        right_factor=S,
        residual=float(np.max(np.abs(resid))),
        left_isometry_defect=isometry_defect(O, basis) if rp else 0.0,
        right_norm=float(ratios.max()) if rp else 0.0,
        residual_2norm=float(np.linalg.norm(resid, 2)),
    )


def norm_order_constant(A_prime, A, rel_tol=None, null_tol=DOUGLAS_TOL):
    """Smallest ``C`` with ``|A' x| <= C |A x|`` for all ``x``.

    Computed as ``|A' V_r diag(1/sigma_r)|_2`` over the numerical row space
    of ``A``.  Infinite when ``A'`` does not vanish on the numerical null
    space of ``A``, i.e. when ``|A' N|_2 > null_tol * sigma_max(A')``.
    """
    Ap, Am = as_array(A_prime), as_array(A)
    if Ap.shape[1] != Am.shape[1]:
        raise DimensionMismatch(f"column counts differ: {Ap.shape[1]} vs {Am.shape[1]}")
    s = compute_svd(Am)
    r = s.rank(rel_tol)
    n = Am.shape[1]
    ap_norm = float(np.linalg.norm(Ap, 2))
    if ap_norm == 0.0:
        return 0.0
    if r < n:
        null = _null_basis(Am, s, r)
        if np.linalg.norm(Ap @ null, 2) > null_tol * ap_norm:
            return math.inf
    if r == 0:
        return 0.0
    return float(np.linalg.norm(Ap @ (s.V[:, :r] / s.sigma[:r]), 2))


def _null_basis(M, svd, r):
    """Orthonormal basis of the numerical null space of ``M`` (right side)."""
    n = M.shape[1]
    if svd.V.shape[1] == n:
        return svd.V[:, r:]
    # wide matrix: thin SVD omits part of the null space
    full = scipy.linalg.null_space(svd.V[:, :r].T) if r else np.eye(n)
    return full


def douglas_factorize(A_prime, A, tol=DOUGLAS_TOL, rel_tol=None):
    """Range inclusion ``R(A') in R(A)`` via ``S = A^+ A'``.

    The factorization succeeds when ``|(I - A A^+) A'|_2 <= tol * sigma_max(A')``.
    ``range_constant`` is the least ``C`` with ``|A'^T y| <= C |A^T y|``,
    which equals ``|S|_2`` whenever the inclusion holds.

    Raises
    ------
    RangeInclusionViolated
        When ``A'`` has a component outside the numerical range of ``A``.
    """
    Ap, Am = as_array(A_prime), as_array(A)
    if Ap.shape[0] != Am.shape[0]:
        raise DimensionMismatch(f"row counts differ: {Ap.shape[0]} vs {Am.shape[0]}")
    s = compute_svd(Am)
    r = s.rank(rel_tol)
    Ur, sr, Vr = s.U[:, :r], s.sigma[:r], s.V[:, :r]
    coef = Ur.T @ Ap
    S = Vr @ (coef / sr[:, None])
    resid = Ap - Am @ S
    leak = float(np.linalg.norm(Ap - Ur @ coef, 2))
    ap_norm = float(np.linalg.norm(Ap, 2))
    c_hat = norm_order_constant(Ap.T, Am.T, rel_tol=rel_tol, null_tol=tol)
    if leak > tol * ap_norm:
        raise RangeInclusionViolated(
            f"range of A' not contained in range of A: leakage {leak:.3e} > {tol:.1e} * {ap_norm:.3e}",
            residual=float(np.max(np.abs(resid))),
            range_constant=c_hat,
        )
    return ConnectingFactors(
        left_factor=np.eye(Am.shape[0]),
        right_factor=S,
        residual=float(np.max(np.abs(resid))),
        left_isometry_defect=0.0,
        right_norm=float(np.linalg.norm(S, 2)),
        range_constant=c_hat,
        residual_2norm=float(np.linalg.norm(resid, 2)),
    )


def modulus_of_injectivity(A, subspace_family, delta=None, tol=1e-10):
    """``j_n = min |A x| / |x|`` over ``x in span(X_n)`` for a nested family.

    Returns a list of ``(j_n, omega_n)``; ``omega_n = delta / j_n`` when
    ``delta`` is given and ``None`` otherwise.
    """
    Am = as_array(A)
    out = []
    prev = None
    for k, X in enumerate(subspace_family):
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[:, None]
        if X.shape[0] != Am.shape[1]:
            raise DimensionMismatch(f"subspace {k} has {X.shape[0]} rows, A has {Am.shape[1]} columns")
        if np.max(np.abs(X.T @ X - np.eye(X.shape[1]))) > tol:
            raise NonOrthonormalSubspace(f"subspace {k} does not have orthonormal columns")
        if prev is not None and np.max(np.abs(prev - X @ (X.T @ prev))) > tol:
            raise NonOrthonormalSubspace(f"subspace {k} does not contain subspace {k - 1}")
        prev = X
        AX = Am @ X
        sv = np.linalg.svd(AX, compute_uv=False)
        j = float(sv[-1]) if X.shape[1] <= AX.shape[0] else 0.0
        omega = None
        if delta is not None:
            omega = math.inf if j == 0.0 else float(delta) / j
        out.append((j, omega))
    return out


def coordinate_family(n, dims=None):
    """Nested coordinate subspaces ``span(e_1..e_k)`` for ``k`` in ``dims`` (default 1..n)."""
    eye = np.eye(n)
    dims = range(1, n + 1) if dims is None else dims
    return [eye[:, :k] for k in dims]


def tikhonov_solution(A, y, alpha):
    """``(A^T A + alpha I)^{-1} A^T y`` by a symmetric positive-definite solve."""
    G = A.T @ A
    G[np.diag_indices_from(G)] += alpha
    try:
        return scipy.linalg.solve(G, A.T @ y, assume_a="pos", check_finite=False)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise SolveFailure(f"Tikhonov solve failed at alpha={alpha}: {exc}") from exc


def tikhonov_compare(A_prime, A, solutions, alpha_grid, slack=1e-12):
    """Tabulate Tikhonov errors for exact data on both operators.

    For every ``x_true`` and ``alpha`` the report stores
    ``(|x_{A',alpha} - x_true|, |x_{A,alpha} - x_true|)``.  The spectral
    criterion ``A'^T A' <=_norm A^T A`` is evaluated through
    :func:`norm_order_constant`; ``spectral_criterion_margin = 1 - C`` is
    non-negative exactly when the criterion holds.
    """
    Ap, Am = as_array(A_prime), as_array(A)
    if Ap.shape[1] != Am.shape[1]:
        raise DimensionMismatch(f"column counts differ: {Ap.shape[1]} vs {Am.shape[1]}")
    alphas = np.asarray(alpha_grid, dtype=np.float64)
    if np.any(alphas <= 0.0):
        raise SolveFailure("regularization parameters must be positive")
    table = []
    holds = True
    for x in solutions:
        x = np.asarray(x, dtype=np.float64)
        yp, y = Ap @ x, Am @ x
        errs = []
        for alpha in alphas:
            e_prime = float(np.linalg.norm(tikhonov_solution(Ap, yp, alpha) - x))
            e = float(np.linalg.norm(tikhonov_solution(Am, y, alpha) - x))
            holds &= e_prime >= e - slack
            errs.append((e_prime, e))
        table.append(errs)
    C = norm_order_constant(Ap.T @ Ap, Am.T @ Am)
    return TikhonovReport(
        alpha_grid=alphas,
        per_solution_errors=table,
        ordering_holds_empirically=bool(holds),
        spectral_criterion_margin=1.0 - C,
        spectral_constant=C,
    )
