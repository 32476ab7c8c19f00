"""QR decompositions used per tone.

Two routes produce the same factors on full-rank input: a Gram-Schmidt
recursion that keeps the zero-column convention for rank-deficient input,
and Givens triangularization accumulating a full unitary transform (the
form hardware implements). Regularized and augmented variants stack alpha*I
under the input; they never produce a singular R.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError

KIND_GS = "GS"
KIND_UT = "UT"
KIND_REGULARIZED = "REGULARIZED"
KIND_AUGMENTED = "AUGMENTED"
_KINDS = {KIND_GS, KIND_UT, KIND_REGULARIZED, KIND_AUGMENTED}

RANK_TOL = 1e-10
DIAG_CLAMP = 1e-12


@dataclass(frozen=True)
class QRFactors:
    """Q, R and optionally the orthogonal complement of Q.

    Nonzero columns of Q are orthonormal; R is upper triangular with real
    nonnegative diagonal; R = Q^H A for the matrix A that produced them.
    For the AUGMENTED kind Q holds the full stacked (P+M) x M factor.
    """

    Q: np.ndarray
    R: np.ndarray
    Q_perp: np.ndarray | None = None
    kind: str = KIND_UT
    alpha: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in _KINDS:
            raise ParameterError(f"unknown factor kind {self.kind!r}")


@dataclass(frozen=True)
class RankProfile:
    """Ordered column rank: largest k with the first k columns independent."""

    K: int
    tol: float


def _validate(A: np.ndarray, square_ok: bool = False) -> np.ndarray:
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2:
        raise ParameterError(f"expected a matrix, got shape {A.shape}")
    P, M = A.shape
    if P < M and not square_ok:
        raise ParameterError(f"need at least as many rows as columns, got {P}x{M}")
    return A


def gs_qr(A: np.ndarray, tol: float = RANK_TOL) -> QRFactors:
    """Gram-Schmidt QR with the zero-column convention.

    Column k is orthogonalized against the previous q_i and normalized;
    when the residual vanishes (relative to the largest column norm) q_k is
    the zero vector and row k of R follows as q_k^H A = 0. A rank-r input
    therefore yields M - r zero columns.
    """
    A = _validate(A)
    P, M = A.shape
    Q = np.zeros((P, M), dtype=complex)
    scale = max((np.linalg.norm(A[:, j]) for j in range(M)), default=0.0)
    threshold = tol * scale
    for k in range(M):
        y = A[:, k].copy()
        # classical projection against final q_i, repeated once: the second
        # pass removes the O(eps) residue the textbook recursion leaves when
        # columns are nearly dependent, without changing the exact-arithmetic
        # result
        for _ in range(2):
            if k:
                y -= Q[:, :k] @ (Q[:, :k].conj().T @ y)
        ny = np.linalg.norm(y)
        if ny > threshold:
            Q[:, k] = y / ny
    R = Q.conj().T @ A
    R[np.tril_indices(M, -1)] = 0.0
    # the diagonal is a residual norm, real by construction; drop the dust
    for k in range(M):
        R[k, k] = max(R[k, k].real, 0.0)
        if abs(R[k, k]) <= DIAG_CLAMP:
            R[k, k] = 0.0
    return QRFactors(Q=Q, R=R, kind=KIND_GS)


def _givens_triangularize(A: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Return (Theta, R_full) with Theta unitary, Theta @ A = R_full upper
    triangular with real nonnegative diagonal (phases absorbed)."""
    P, M = A.shape
    W = A.astype(complex).copy()
    Theta = np.eye(P, dtype=complex)
    for j in range(min(P, M)):
        for i in range(j + 1, P):
            f, g = W[j, j], W[i, j]
            if abs(g) == 0.0:
                continue
            n = np.hypot(abs(f), abs(g))
            if abs(f) == 0.0:
                c, s = 0.0, g.conjugate() / abs(g)
            else:
                c = abs(f) / n
                s = (f / abs(f)) * g.conjugate() / n
            rj = c * W[j] + s * W[i]
            ri = -s.conjugate() * W[j] + c * W[i]
            W[j], W[i] = rj, ri
            tj = c * Theta[j] + s * Theta[i]
            ti = -s.conjugate() * Theta[j] + c * Theta[i]
            Theta[j], Theta[i] = tj, ti
            W[i, j] = 0.0
    # rotate each pivot row so the diagonal is real nonnegative
    for k in range(min(P, M)):
        d = W[k, k]
        if abs(d) <= DIAG_CLAMP:
            W[k, k] = 0.0
            continue
        ph = (d / abs(d)).conjugate()
        W[k] *= ph
        Theta[k] *= ph
        W[k, k] = abs(d)
    return Theta, W


def givens_qr(A: np.ndarray) -> QRFactors:
    """Givens QR in standard form.

    Q always has exactly orthonormal columns (it is a slice of a unitary
    transform), whatever the rank of A; the complement Q_perp comes along
    for free when P > M.
    """
    A = _validate(A)
    P, M = A.shape
    Theta, W = _givens_triangularize(A)
    R = W[:M, :]
    Qbar = Theta.conj().T
    Q = Qbar[:, :M]
    Q_perp = Qbar[:, M:] if P > M else None
    return QRFactors(Q=Q, R=R, Q_perp=Q_perp, kind=KIND_UT)


def _stack(A: np.ndarray, alpha: float) -> np.ndarray:
    P, M = A.shape
    return np.vstack([A, float(alpha) * np.eye(M, dtype=complex)])


def regularized_qr(A: np.ndarray, alpha: float) -> QRFactors:
    """QR of A stacked over alpha*I, keeping only the top P rows of Q.

    A = Q R still holds to working precision even though Q^H Q < I; R is
    always nonsingular (R^H R = A^H A + alpha^2 I).
    """
    A = _validate(A)
    if alpha <= 0:
        raise ParameterError(f"alpha must be positive, got {alpha}")
    full = givens_qr(_stack(A, alpha))
    return QRFactors(
        Q=full.Q[: A.shape[0], :],
        R=full.R,
        kind=KIND_REGULARIZED,
        alpha=float(alpha),
    )


def augmented_qr(A: np.ndarray, alpha: float) -> QRFactors:
    """QR of A stacked over alpha*I with the full (P+M) x M factor retained.

    The bottom M rows of Q are needed when later reduction steps operate on
    the stacked matrix itself.
    """
    A = _validate(A)
    if alpha <= 0:
        raise ParameterError(f"alpha must be positive, got {alpha}")
    full = givens_qr(_stack(A, alpha))
    return QRFactors(Q=full.Q, R=full.R, kind=KIND_AUGMENTED, alpha=float(alpha))


def mmse_qr(H: np.ndarray, sigma_w: float, M_T: int | None = None) -> QRFactors:
    """Regularized QR with alpha = sqrt(M_T) * sigma_w.

    The scaling matches transmit symbols normalized to unit total power
    across M_T streams under noise variance sigma_w^2 per receive antenna.
    sigma_w = 0 degenerates to the plain decomposition; the returned alpha
    of 0.0 flags that case.
    """
    H = _validate(H)
    if sigma_w < 0:
        raise ParameterError(f"sigma_w must be nonnegative, got {sigma_w}")
    mt = H.shape[1] if M_T is None else int(M_T)
    alpha = float(np.sqrt(mt) * sigma_w)
    if alpha == 0.0:
        plain = givens_qr(H)
        return QRFactors(Q=plain.Q, R=plain.R, Q_perp=plain.Q_perp, kind=KIND_UT, alpha=0.0)
    return regularized_qr(H, alpha)


def ordered_column_rank(A: np.ndarray, tol: float = RANK_TOL) -> RankProfile:
    """Largest k such that columns 1..k of A are linearly independent.

    Incremental Gram-Schmidt; a residual norm at or below tol * ||A||_F
    stops the scan. K = 0 exactly when the first column is (numerically)
    zero.
    """
    A = _validate(A, square_ok=True)
    if tol <= 0:
        raise ParameterError(f"tol must be positive, got {tol}")
    P, M = A.shape
    threshold = tol * np.linalg.norm(A)
    Q = np.zeros((P, M), dtype=complex)
    K = 0
    for k in range(M):
        y = A[:, k].copy()
        for _ in range(2):
            if k:
                y -= Q[:, :k] @ (Q[:, :k].conj().T @ y)
        ny = np.linalg.norm(y)
        if ny <= threshold:
            break
        Q[:, k] = y / ny
        K = k + 1
    return RankProfile(K=K, tol=tol)
