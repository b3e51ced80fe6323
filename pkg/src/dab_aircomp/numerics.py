"""Dense complex linear algebra shared by the beamformer designs.

Eigenvalues and singular values are always returned in descending order.
Eigenbases are only unique up to rotation inside repeated eigenspaces, so
callers should compare projectors or distances, never raw basis entries.
"""

import numpy as np

__all__ = [
    "DimensionError",
    "hermitian_eig",
    "svd",
    "principal_eigenspace",
    "projector",
    "subspace_distance_p2",
    "is_orthonormal",
]

ORTHONORMAL_TOL = 1e-10
HERMITIAN_TOL = 1e-10


class DimensionError(ValueError):
    """Raised when matrix shapes are incompatible with an operation."""


def _as_matrix(M, name="M"):
    M = np.asarray(M)
    if M.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError(f"{name} has non-finite entries")
    return M


def hermitian_eig(M):
    """Eigendecomposition of a Hermitian matrix.

    Parameters
    ----------
    M : array_like, shape (n, n)
        Hermitian matrix. It is symmetrized as ``(M + M^H) / 2`` before
        decomposition to scrub round-off asymmetry.

    Returns
    -------
    eigenvalues : ndarray, shape (n,)
        Real eigenvalues, descending.
    eigenvectors : ndarray, shape (n, n)
        Orthonormal eigenvectors as columns, matching ``eigenvalues``.
    """
    M = _as_matrix(M)
    if M.shape[0] != M.shape[1]:
        raise DimensionError(f"hermitian_eig needs a square matrix, got {M.shape}")
    scale = max(np.linalg.norm(M), np.finfo(float).tiny)
    asym = np.linalg.norm(M - M.conj().T)
    if asym > HERMITIAN_TOL * scale:
        raise ValueError(f"matrix is not Hermitian (relative asymmetry {asym / scale:.3g})")
    w, V = np.linalg.eigh((M + M.conj().T) / 2)
    return w[::-1], V[:, ::-1]


def svd(M):
    """Economy SVD ``M = U diag(sigma) V^H`` with ``sigma`` descending.

    Note that ``V`` itself is returned, not ``V^H``.
    """
    M = _as_matrix(M)
    U, s, Vh = np.linalg.svd(M, full_matrices=False)
    return U, s, Vh.conj().T


def principal_eigenspace(M, d):
    """Orthonormal basis (n x d) for the ``d`` dominant eigenvectors of ``M``."""
    M = _as_matrix(M)
    if d > M.shape[0] or d < 0:
        raise DimensionError(f"cannot take {d} eigenvectors of a {M.shape[0]}-dim matrix")
    _, V = hermitian_eig(M)
    return V[:, :d]


def projector(B):
    """Orthogonal projector ``B B^H`` onto the column space of orthonormal ``B``."""
    B = np.asarray(B)
    return B @ B.conj().T


def subspace_distance_p2(A, B):
    """Projection 2-norm distance between the column spaces of ``A`` and ``B``.

    Both arguments must be orthonormal n x d bases. The value is the spectral
    norm of ``A A^H - B B^H``, i.e. the sine of the largest principal angle,
    and lies in ``[0, 1]``.
    """
    A = _as_matrix(A, "A")
    B = _as_matrix(B, "B")
    if A.shape != B.shape:
        raise DimensionError(f"basis shapes differ: {A.shape} vs {B.shape}")
    dist = np.linalg.norm(projector(A) - projector(B), 2)
    return float(min(dist, 1.0))


def is_orthonormal(B, tol=ORTHONORMAL_TOL):
    B = np.asarray(B)
    d = B.shape[1]
    return bool(np.linalg.norm(B.conj().T @ B - np.eye(d)) <= tol)
