"""Dense linear-algebra kernels: SVD with a fixed sign convention, truncated
pseudoinverse, polar decomposition and isometry diagnostics.

All routines are pure functions of their inputs.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DataError, DimensionMismatch, NumericalFailure

#: Relative cutoff per matrix dimension; the effective cutoff is this times
#: ``max(rows, cols)``.
RANK_CUTOFF_PER_DIM = 1e-12


def as_matrix(A, name="A"):
    """Return ``A`` as a finite 2-D float64 array (copying only if needed)."""
    M = np.asarray(A, dtype=np.float64)
    if M.ndim == 1:
        M = M[:, None]
    if M.ndim != 2 or M.shape[0] < 1 or M.shape[1] < 1:
        raise DimensionMismatch(f"{name} must be a non-empty 2-D matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise DataError(f"{name} has non-finite entries")
    return M


def default_rel_tol(shape):
    return RANK_CUTOFF_PER_DIM * max(shape)


@dataclass(frozen=True)
class SingularSystem:
    """Thin SVD ``A = U @ diag(sigma) @ V.T`` with non-increasing ``sigma``."""

    sigma: np.ndarray
    U: np.ndarray
    V: np.ndarray

    @property
    def shape(self):
        return (self.U.shape[0], self.V.shape[0])

    @property
    def sigma_max(self):
        return float(self.sigma[0]) if self.sigma.size else 0.0

    def cutoff(self, rel_tol=None):
        if rel_tol is None:
            rel_tol = default_rel_tol(self.shape)
        return rel_tol * self.sigma_max

    def rank(self, rel_tol=None):
        """Numerical rank: number of singular values above ``rel_tol * sigma_max``."""
        if self.sigma_max == 0.0:
            return 0
        return int(np.count_nonzero(self.sigma > self.cutoff(rel_tol)))

    def reconstruct(self):
        return (self.U * self.sigma) @ self.V.T


def _fix_signs(U, V):
    # first entry of largest magnitude in each column of U made non-negative
    idx = np.argmax(np.abs(U), axis=0)
    signs = np.sign(U[idx, np.arange(U.shape[1])])
    signs[signs == 0] = 1.0
    return U * signs, V * signs


def compute_svd(A):
    """Thin singular value decomposition with a deterministic sign convention.

    Parameters
    ----------
    A : (m, n) array_like
        Finite real matrix.

    Returns
    -------
    SingularSystem
        ``sigma`` of length ``min(m, n)``, ``U`` of shape ``(m, k)`` and ``V``
        of shape ``(n, k)``.  In each column of ``U`` the first entry of
        largest magnitude is non-negative; ``V`` is flipped along with it.

    Raises
    ------
    NumericalFailure
        If neither LAPACK driver converges.
    """
    A = as_matrix(A)
    try:
        U, s, Vt = scipy.linalg.svd(A, full_matrices=False, lapack_driver="gesdd", check_finite=False)
    except np.linalg.LinAlgError:
        try:
            U, s, Vt = scipy.linalg.svd(A, full_matrices=False, lapack_driver="gesvd", check_finite=False)
        except np.linalg.LinAlgError as exc:
            raise NumericalFailure(f"SVD did not converge: {exc}") from exc
    U, V = _fix_signs(U, Vt.T)
    return SingularSystem(sigma=s, U=np.ascontiguousarray(U), V=np.ascontiguousarray(V))


def singular_values(A):
    return compute_svd(A).sigma


def truncated_pinv(A, rel_tol=None, svd=None):
    """Moore-Penrose pseudoinverse keeping singular values above ``rel_tol * sigma_max``.

    ``rel_tol`` defaults to ``1e-12 * max(rows, cols)``.  A precomputed
    :class:`SingularSystem` may be passed as ``svd`` to avoid refactoring.
    """
    A = as_matrix(A)
    if rel_tol is None:
        rel_tol = default_rel_tol(A.shape)
    if not 0.0 < rel_tol < 1.0:
        raise DataError(f"rel_tol must lie in (0, 1), got {rel_tol}")
    ss = compute_svd(A) if svd is None else svd
    r = ss.rank(rel_tol)
    return (ss.V[:, :r] / ss.sigma[:r]) @ ss.U[:, :r].T


def polar_decompose(A, rel_tol=None):
    """Polar factors ``A = U_part @ P``.

    ``P = V diag(sigma) V^T`` is symmetric positive semi-definite and
    ``U_part = U_r V_r^T`` is a partial isometry built from the ``r``
    numerically non-zero singular triplets, so it is isometric on
    ``range(P)`` and vanishes on the numerical null space of ``A``.
    """
    A = as_matrix(A)
    ss = compute_svd(A)
    r = ss.rank(rel_tol)
    P = (ss.V * ss.sigma) @ ss.V.T
    P = 0.5 * (P + P.T)
    U_part = ss.U[:, :r] @ ss.V[:, :r].T
    return U_part, P


def isometry_defect(M, restricted_basis=None):
    """Max-norm distance of ``B^T M^T M B`` from the identity.

    ``B`` is ``restricted_basis`` (orthonormal columns) or the identity.
    Zero means ``M`` is an exact isometry on ``span(B)``.
    """
    M = as_matrix(M, "M")
    if restricted_basis is None:
        MB = M
    else:
        B = as_matrix(restricted_basis, "restricted_basis")
        if B.shape[0] != M.shape[1]:
            raise DimensionMismatch(
                f"basis has {B.shape[0]} rows but M has {M.shape[1]} columns"
            )
        MB = M @ B
    G = MB.T @ MB
    return float(np.max(np.abs(G - np.eye(G.shape[0]))))


def orthonormality_defect(X):
    X = as_matrix(X, "X")
    return float(np.max(np.abs(X.T @ X - np.eye(X.shape[1]))))
