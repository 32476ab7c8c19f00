"""Hard-output detectors fed by per-tone QR factors.

All three work on the triangularized statistic z = Q^H y and an upper-
triangular R: nulling-and-cancelling with per-layer slicing (sc_detect),
exhaustive maximum likelihood over the candidate grid (ml_tone_batch, the
oracle and the fast path for small stream counts), and a depth-first
sphere search with Schnorr-Euchner ordering (sphere_detect).
"""

from __future__ import annotations

import itertools

import numpy as np

from ..errors import ParameterError
from .modem import BITS_OF_INDEX, CONSTELLATION


def scaled_candidates(M_T: int) -> np.ndarray:
    """The per-stream transmit alphabet: unit-energy 16-QAM over sqrt(M_T),
    so a full candidate vector has expected energy 1."""
    return CONSTELLATION / np.sqrt(M_T)


def candidate_grid(M_T: int) -> np.ndarray:
    """(16^M_T, M_T) array of all transmit vectors, index-ordered so row i's
    stream bits are BITS_OF_INDEX of i's base-16 digits (stream 0 in the
    most significant digit)."""
    cands = scaled_candidates(M_T)
    cols = list(itertools.product(range(16), repeat=M_T))
    return cands[np.array(cols)]


def grid_index_to_bits(idx: np.ndarray, M_T: int) -> np.ndarray:
    """Candidate-grid row indices to bit arrays (..., M_T*4)."""
    idx = np.asarray(idx)
    digits = np.empty(idx.shape + (M_T,), dtype=np.int64)
    rest = idx
    for m in range(M_T - 1, -1, -1):
        digits[..., m] = rest % 16
        rest = rest // 16
    return BITS_OF_INDEX[digits].reshape(idx.shape + (M_T * 4,))


def symbols_to_grid_index(idx_per_stream: np.ndarray) -> np.ndarray:
    """Per-stream constellation indices (..., M_T) to candidate-grid rows."""
    idx = np.asarray(idx_per_stream)
    out = np.zeros(idx.shape[:-1], dtype=np.int64)
    for m in range(idx.shape[-1]):
        out = out * 16 + idx[..., m]
    return out


def sc_detect(R: np.ndarray, z: np.ndarray, M_T: int) -> tuple[np.ndarray, np.ndarray]:
    """Successive cancellation: back-substitution with slicing per layer.

    R is (..., M_T, M_T) upper triangular, z is (..., M_T); returns
    (per-stream constellation indices, flags) where flags marks layers whose
    diagonal entry is zero; those layers slice the interference-cancelled
    statistic as-is and carry no signal energy.
    """
    R = np.asarray(R, dtype=complex)
    z = np.asarray(z, dtype=complex)
    cands = scaled_candidates(M_T)
    shape = z.shape[:-1]
    idx = np.zeros(shape + (M_T,), dtype=np.int64)
    flags = np.zeros(shape + (M_T,), dtype=bool)
    est = np.zeros(shape, dtype=complex)
    for k in range(M_T - 1, -1, -1):
        acc = z[..., k].copy()
        for j in range(k + 1, M_T):
            acc -= R[..., k, j] * cands[idx[..., j]]
        rkk = R[..., k, k]
        zero = np.abs(rkk) == 0.0
        flags[..., k] = zero
        with np.errstate(divide="ignore", invalid="ignore"):
            est = np.where(zero, acc, acc / np.where(zero, 1.0, rkk))
        idx[..., k] = np.argmin(
            np.abs(est[..., None] - cands.reshape((1,) * est.ndim + (16,))), axis=-1
        )
    return idx, flags


def ml_tone_batch(
    R: np.ndarray, z: np.ndarray, M_T: int, chunk: int = 64
) -> np.ndarray:
    """Exhaustive ML over the candidate grid for a batch of tones.

    R is (T, M_T, M_T), z is (T, S, M_T) (S symbol vectors per tone);
    returns candidate-grid row indices (T, S). The per-tone expansion
    R @ grid is reused across the S symbols, and tones are processed in
    chunks to bound memory.
    """
    R = np.asarray(R, dtype=complex)
    z = np.asarray(z, dtype=complex)
    if R.ndim != 3 or z.ndim != 3 or R.shape[0] != z.shape[0]:
        raise ParameterError(
            f"expected (T, M, M) factors and (T, S, M) statistics, got "
            f"{R.shape} and {z.shape}"
        )
    grid = candidate_grid(M_T)  # (C, M)
    T, S, _ = z.shape
    out = np.empty((T, S), dtype=np.int64)
    for lo in range(0, T, chunk):
        hi = min(lo + chunk, T)
        Rc = np.einsum("tij,cj->tci", R[lo:hi], grid)  # (t, C, M)
        # ||z - Rc||^2 = ||z||^2 - 2 Re(z . conj(Rc)) + ||Rc||^2; the first
        # term is constant per (tone, symbol) and drops out of the argmin
        cross = np.einsum("tsm,tcm->tsc", z[lo:hi], Rc.conj()).real
        energy = np.einsum("tcm,tcm->tc", Rc, Rc.conj()).real
        out[lo:hi] = np.argmin(energy[:, None, :] - 2.0 * cross, axis=2)
    return out


def sphere_detect(R: np.ndarray, z: np.ndarray, M_T: int) -> np.ndarray:
    """Depth-first sphere search with Schnorr-Euchner child ordering.

    Returns the candidate-grid row index of the ML vector for one (R, z)
    pair. A level with an exactly zero diagonal entry contributes no
    distance information, so all 16 symbols there are enumerated in fixed
    order. Equivalent to the exhaustive search, just faster on average.
    """
    R = np.asarray(R, dtype=complex)
    z = np.asarray(z, dtype=complex)
    if R.shape != (M_T, M_T) or z.shape != (M_T,):
        raise ParameterError(f"shape mismatch: R {R.shape}, z {z.shape}")
    cands = scaled_candidates(M_T)
    best_d = np.inf
    best: np.ndarray | None = None
    idx = np.zeros(M_T, dtype=np.int64)

    def descend(k: int, partial: float) -> None:
        nonlocal best_d, best
        if partial >= best_d:
            return
        if k < 0:
            best_d = partial
            best = idx.copy()
            return
        acc = z[k] - np.dot(R[k, k + 1 :], cands[idx[k + 1 :]])
        rkk = R[k, k]
        if rkk == 0:
            order = range(16)
            dists = np.zeros(16)
        else:
            dists = np.abs(acc - rkk * cands) ** 2
            order = np.argsort(dists, kind="stable")
        for j in order:
            idx[k] = j
            descend(k - 1, partial + dists[j])

    descend(M_T - 1, 0.0)
    assert best is not None
    return symbols_to_grid_index(best)
