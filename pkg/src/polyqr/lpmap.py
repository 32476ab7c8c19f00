"""Diagonal rescaling that turns per-tone QR factors into polynomial ones.

Plain Q(s), R(s) of a Laurent polynomial matrix are not polynomial in s
because of the normalizations inside the QR recursion. Scaling column k of
Q and row k of R by Delta_{k-1} [R]_{k,k}, with Delta_k the running product
of squared diagonal entries, cancels every division and square root: the
scaled factors interpolate with finite degrees. The inverse mapping reads
the scale factors back off the scaled diagonal, where [Rt]_{k,k} = Delta_k.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import MissingDataError, ParameterError
from .qr import KIND_UT, QRFactors, gs_qr

RANK_TOL = 1e-10
LOG_SCALE_TRIGGER = 1e30


@dataclass(frozen=True)
class MappedFactors:
    """Scaled factors for columns start_col..start_col+m-1 of an M-column
    system.

    Qtilde holds the scaled columns, Rtilde the scaled rows over the local
    column window (row i covers original columns start_col+i-1 onward; the
    zeros left of the window are implicit). delta[i] is Delta_{start_col+i}
    and delta_prefix is Delta_{start_col-1}, which equals 1 for a map that
    starts at the first column.
    """

    Qtilde: np.ndarray
    Rtilde: np.ndarray
    delta: np.ndarray
    start_col: int = 1
    delta_prefix: float = 1.0

    def __post_init__(self) -> None:
        if self.start_col < 1:
            raise ParameterError(f"start_col must be >= 1, got {self.start_col}")
        object.__setattr__(self, "Qtilde", np.asarray(self.Qtilde, dtype=complex))
        object.__setattr__(self, "Rtilde", np.asarray(self.Rtilde, dtype=complex))
        object.__setattr__(self, "delta", np.asarray(self.delta, dtype=float))
        if self.Qtilde.shape[1] != self.Rtilde.shape[0] or len(self.delta) != self.Rtilde.shape[0]:
            raise ParameterError("inconsistent mapped-factor shapes")

    @property
    def ncols(self) -> int:
        return self.Qtilde.shape[1]


def assemble(
    Qtilde: np.ndarray,
    Rtilde: np.ndarray,
    start_col: int = 1,
    delta_prefix: float = 1.0,
) -> MappedFactors:
    """Package scaled factors that arrived by interpolation rather than from
    map_forward; the delta sequence is read off the scaled diagonal."""
    Rtilde = np.asarray(Rtilde, dtype=complex)
    delta = np.real(np.diag(Rtilde)).copy()
    return MappedFactors(
        Qtilde=Qtilde,
        Rtilde=Rtilde,
        delta=delta,
        start_col=start_col,
        delta_prefix=delta_prefix,
    )


def _scale_chain(rdiag: np.ndarray, delta_prefix: float) -> tuple[np.ndarray, np.ndarray]:
    """Per-column scale factors Delta_{k-1} [R]_{k,k} and the deltas.

    Falls back to log-space accumulation when the squared diagonal is large
    enough for the direct running product to overflow double range.
    """
    r = np.asarray(rdiag, dtype=float)
    if np.any(r < 0):
        raise ParameterError("QR diagonal must be nonnegative")
    if r.size and np.max(r) ** 2 > LOG_SCALE_TRIGGER:
        scales = np.zeros_like(r)
        deltas = np.zeros_like(r)
        log_prev = np.log(delta_prefix) if delta_prefix > 0 else None
        for i, rk in enumerate(r):
            if log_prev is None or rk == 0.0:
                # a zero anywhere kills everything downstream
                break
            scales[i] = np.exp(log_prev + np.log(rk))
            log_prev = log_prev + 2.0 * np.log(rk)
            deltas[i] = np.exp(log_prev)
        return scales, deltas
    deltas = delta_prefix * np.cumprod(r * r)
    prev = np.concatenate(([delta_prefix], deltas[:-1]))
    return prev * r, deltas


def map_forward(
    factors: QRFactors, start_col: int = 1, delta_prefix: float = 1.0
) -> MappedFactors:
    """Scale QR factors into their interpolable form.

    ``factors`` may cover the full system (start_col = 1, delta_prefix = 1)
    or the reduced block of columns start_col..M produced by a reduction
    step, in which case delta_prefix supplies Delta_{start_col-1}. The first
    scaled column of a full map equals the first column of the original
    matrix, since Delta_0 [R]_{1,1} q_1 = a_1.
    """
    if start_col < 1:
        raise ParameterError(f"start_col must be >= 1, got {start_col}")
    if start_col == 1 and delta_prefix != 1.0:
        raise ParameterError("delta_prefix must be 1 when mapping from the first column")
    if delta_prefix < 0:
        raise ParameterError("delta_prefix must be nonnegative")
    R = np.asarray(factors.R, dtype=complex)
    Q = np.asarray(factors.Q, dtype=complex)
    diag = R.diagonal()
    if np.any(np.abs(diag.imag) > 1e-12):
        raise ParameterError("QR diagonal must be real")
    scales, deltas = _scale_chain(diag.real, float(delta_prefix))
    Qt = Q * scales[None, :]
    Rt = R * scales[:, None]
    return MappedFactors(
        Qtilde=Qt,
        Rtilde=Rt,
        delta=deltas,
        start_col=start_col,
        delta_prefix=float(delta_prefix),
    )


def _detect_rank(diag: np.ndarray, tol: float) -> int:
    """Length of the leading positive run of the scaled diagonal, judged
    against tol * max entry. Entries below -tol*max are rejected upstream."""
    if diag.size == 0:
        return 0
    scale = float(np.max(np.abs(diag)))
    if scale == 0.0:
        return 0
    thr = tol * scale
    k = 0
    for d in diag:
        if d <= thr:
            break
        k += 1
    return k


def map_inverse(
    mapped: MappedFactors,
    cols: tuple[int, int] | None = None,
    residual_matrix: np.ndarray | None = None,
    tol: float = RANK_TOL,
) -> QRFactors:
    """Undo the scaling, recovering ordinary QR factors.

    The scale factor for column k is (Delta_{k-1} [R]_{k,k})^{-1} =
    ([Rt]_{k-1,k-1} [Rt]_{k,k})^{-1/2}, read off the scaled diagonal. When
    the diagonal underflows the rank threshold at position K+1 the trailing
    factors are not recoverable from the mapped data alone: they are rebuilt
    by a fresh QR of A_{K+1..M} - Q_{1..K} R_{(K+1..M columns) rows 1..K},
    which needs the original trailing columns. Pass those (or the whole
    matrix) as ``residual_matrix``; without it a MissingDataError carrying
    the detected rank is raised.
    """
    if cols is not None:
        lo, hi = cols
        if not (mapped.start_col <= lo <= hi <= mapped.start_col + mapped.ncols - 1):
            raise ParameterError(f"cols {cols} outside mapped range")
        i0, i1 = lo - mapped.start_col, hi - mapped.start_col
        prefix = mapped.delta_prefix if i0 == 0 else float(mapped.delta[i0 - 1])
        mapped = MappedFactors(
            Qtilde=mapped.Qtilde[:, i0 : i1 + 1],
            Rtilde=mapped.Rtilde[i0 : i1 + 1, i0:],
            delta=mapped.delta[i0 : i1 + 1],
            start_col=lo,
            delta_prefix=prefix,
        )
    diag = np.real(np.diag(mapped.Rtilde))
    scale = float(np.max(np.abs(diag))) if diag.size else 0.0
    if np.any(diag < -tol * scale):
        raise ParameterError("scaled diagonal has a significantly negative entry")
    m = mapped.ncols
    K = _detect_rank(diag, tol)

    P = mapped.Qtilde.shape[0]
    width = mapped.Rtilde.shape[1]
    Q = np.zeros((P, m), dtype=complex)
    R = np.zeros((m, width), dtype=complex)
    prev = np.concatenate(([mapped.delta_prefix], diag[:-1]))
    for i in range(K):
        f = 1.0 / np.sqrt(prev[i] * diag[i])
        Q[:, i] = f * mapped.Qtilde[:, i]
        R[i, :] = f * mapped.Rtilde[i, :]
        R[i, i] = abs(R[i, i].real)  # exact value sqrt(Delta_k/Delta_{k-1})

    if K < m:
        if residual_matrix is None:
            err = MissingDataError(
                f"rank drop at column {mapped.start_col + K}: trailing factors need "
                f"the original columns {mapped.start_col + K}.. as residual_matrix"
            )
            err.rank = K
            raise err
        tail = np.asarray(residual_matrix, dtype=complex)
        if tail.shape[1] == width:
            tail = tail[:, K:]
        if tail.shape != (P, m - K):
            raise ParameterError(
                f"residual_matrix shape {tail.shape} does not cover trailing "
                f"{m - K} columns of a {P}-row system"
            )
        # subtract the part already explained by the recovered prefix; the
        # Gram-Schmidt route keeps the zero-column convention, so a still-
        # deficient residual stays valid for the assembled system
        resid = tail - Q[:, :K] @ R[:K, K : K + (m - K)] if K else tail.copy()
        # a residual column that is dust relative to the original column is a
        # dependent column; zero it here, because gs_qr judges smallness
        # against the residual block's own scale, not the system's
        ref = np.linalg.norm(tail, axis=0).max() if tail.size else 0.0
        dust = np.linalg.norm(resid, axis=0) <= tol * ref
        resid[:, dust] = 0.0
        sub = gs_qr(resid, tol=tol)
        Q[:, K:] = sub.Q
        R[K:, K:] = sub.R
    return QRFactors(Q=Q, R=R, kind=KIND_UT)
