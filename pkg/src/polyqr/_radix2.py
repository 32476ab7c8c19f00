"""Counted radix-2 transforms for equidistant upsampling.

Everything here exists because the multiplication count is part of the
contract, not just the values: a hardware-style tally of one counted
multiplication per executed butterfly, including trivial twiddles. numpy's
FFT would give the values but not the count.

Upsampling a Laurent polynomial known on B equidistant points to the full
R*B grid runs a B-point inverse DFT (coefficient recovery), places the
coefficients into an N = R*B array with (R-1)*B zeros between the causal
and anticausal halves, and evaluates the big DFT with two structural
savings: the first log2(R) stages touch blocks holding at most one nonzero
coefficient each, so their butterflies collapse to copies with a per-block
linear phase that folds into the next stage's twiddles; and outputs on base
tones (frequency divisible by R) are never needed, which prunes one in R
butterflies from every remaining stage.

Counts: (B/2) log2 B for the inverse DFT plus (R-1)(B/2) per each of the
log2 B late stages.
"""

from __future__ import annotations

import numpy as np

from .errors import ParameterError, UnsupportedRegimeError


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def bit_reverse_indices(n: int) -> np.ndarray:
    """Permutation reversing the log2(n)-bit binary index."""
    if not _is_pow2(n):
        raise ParameterError(f"length {n} is not a power of two")
    bits = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=int)
    for _ in range(bits):
        rev = (rev << 1) | (idx & 1)
        idx >>= 1
    return rev


def ifft_counted(x: np.ndarray) -> tuple[np.ndarray, int]:
    """Radix-2 inverse DFT along axis 0 with a per-butterfly tally.

    Matches numpy.fft.ifft to rounding. The count is per sequence: trailing
    axes ride along without being tallied, since hardware would dedicate a
    transform per sequence.
    """
    x = np.asarray(x, dtype=complex)
    n = x.shape[0]
    if not _is_pow2(n):
        raise ParameterError(f"length {n} is not a power of two")
    y = x[bit_reverse_indices(n)].copy()
    count = 0
    stages = n.bit_length() - 1
    for t in range(1, stages + 1):
        span = 1 << t
        half = span >> 1
        i = np.arange(half)
        w = np.exp(2j * np.pi * i / span).reshape((half,) + (1,) * (y.ndim - 1))
        for bs in range(0, n, span):
            u = y[bs : bs + half].copy()  # slice views alias the write below
            v = y[bs + half : bs + span] * w
            y[bs : bs + half] = u + v
            y[bs + half : bs + span] = u - v
            count += half
    return y / n, count


def upsample_counted(
    base_samples: np.ndarray, v1: int, v2: int, ratio: int
) -> tuple[np.ndarray, int]:
    """Evaluate the degree-(v1, v2) interpolant of B equidistant samples at
    the N = ratio*B grid's non-base tones.

    Returns (targets, count): targets ordered by ascending tone index f,
    covering exactly the f with f mod ratio != 0; count is the per-sequence
    multiplication tally described in the module docstring.

    The phase-deferral trick requires every upper butterfly input at the
    first counted stage to carry no deferred phase, which pins the degree
    regime: 0 <= v1 <= B/2 and 0 <= v2 <= B/2 - 1, or v1 = 0 (purely causal,
    any v2 < B).
    """
    base = np.asarray(base_samples, dtype=complex)
    B = base.shape[0]
    R = int(ratio)
    if not _is_pow2(B):
        raise ParameterError(f"base count {B} is not a power of two")
    if R < 2 or not _is_pow2(R):
        raise ParameterError(f"ratio {R} must be a power of two >= 2")
    if v1 < 0 or v2 < 0:
        raise ParameterError("degrees must be nonnegative")
    if v1 + v2 + 1 > B:
        raise UnsupportedRegimeError(
            f"degrees ({v1},{v2}) need {v1 + v2 + 1} points, base has {B}"
        )
    if not (v1 == 0 or (v1 <= B // 2 and v2 <= B // 2 - 1)):
        raise UnsupportedRegimeError(
            f"degrees ({v1},{v2}) outside the phase-free seeding regime for B={B}"
        )
    N = B * R
    coeffs, count = ifft_counted(base)

    # each length-R block starts as the R-point DFT of one residue class of
    # the zero-padded coefficient array; with one nonzero per class that DFT
    # is a constant times a linear phase, and the phase is deferred
    revB = bit_reverse_indices(B)
    y = np.repeat(coeffs[revB], R, axis=0)
    defer = np.zeros(B, dtype=int)
    if v1 > 0:
        defer[B - v1 :] = R - 1  # anticausal coefficients sit at the block end
    defer_by_block = defer[revB]

    t_star = R.bit_length() - 1
    stages = N.bit_length() - 1
    for t in range(t_star + 1, stages + 1):
        span = 1 << t
        half = span >> 1
        i = np.arange(half)
        keep = i[(i % R) != 0]  # outputs on base tones are pruned
        w = np.exp(-2j * np.pi * keep / span)
        wcol = w.reshape((keep.size,) + (1,) * (y.ndim - 1))
        for bs in range(0, N, span):
            wloc = wcol
            if t == t_star + 1:
                e = defer_by_block[(bs + half) // R]
                if defer_by_block[bs // R] != 0:
                    raise AssertionError("deferred phase on an upper block")
                if e:
                    ph = np.exp(-2j * np.pi * keep * e / R)
                    wloc = wcol * ph.reshape(wcol.shape)
            idx_u = bs + keep
            idx_v = bs + half + keep
            u = y[idx_u]
            v = y[idx_v] * wloc
            y[idx_u] = u + v
            y[idx_v] = u - v
            count += keep.size
    f = np.arange(N)
    return y[f % R != 0], count
