"""Bit-level plumbing: Gray-labeled 16-QAM, the rate-1/2 constraint-7
convolutional code with hard-decision Viterbi decoding, and a seeded bit
interleaver.
"""

from __future__ import annotations

import numpy as np

from ..errors import ParameterError

# Per-axis Gray labeling: bit pair (hi, lo) -> level, 00 -> -3, 01 -> -1,
# 11 -> +1, 10 -> +3. Unit average energy via 1/sqrt(10); the all-zeros
# nibble therefore maps to (-3 - 3j)/sqrt(10).
_AXIS_LEVEL = np.array([-3.0, -1.0, 3.0, 1.0])  # indexed by 2*hi + lo
_QAM_SCALE = 1.0 / np.sqrt(10.0)

# Constellation indexed by the nibble value of (b0 b1 b2 b3): b0 b1 pick the
# real axis, b2 b3 the imaginary axis.
_n = np.arange(16)
CONSTELLATION = _QAM_SCALE * (
    _AXIS_LEVEL[_n >> 2] + 1j * _AXIS_LEVEL[_n & 3]
)
BITS_OF_INDEX = ((_n[:, None] >> np.array([3, 2, 1, 0])) & 1).astype(np.uint8)
del _n


def qam16_map(bits: np.ndarray) -> np.ndarray:
    """Map bits (..., 4) to unit-energy 16-QAM symbols."""
    b = np.asarray(bits)
    if b.shape[-1] != 4:
        raise ParameterError(f"need groups of 4 bits, got trailing {b.shape[-1]}")
    idx = (b[..., 0] << 3) | (b[..., 1] << 2) | (b[..., 2] << 1) | b[..., 3]
    return CONSTELLATION[idx]


def _slice_axis(x: np.ndarray) -> np.ndarray:
    """Nearest Gray level index (2*hi + lo) for real values in units of the
    unscaled grid (-3, -1, 1, 3)."""
    lvl = np.clip(np.rint((x + 3.0) / 2.0), 0, 3).astype(int)  # 0..3 for -3..3
    # level order -3,-1,1,3 -> axis index 0,1,3,2
    return np.array([0, 1, 3, 2])[lvl]


def qam16_slice(symbols: np.ndarray) -> np.ndarray:
    """Hard-decide symbols back to bits (..., 4)."""
    s = np.asarray(symbols) / _QAM_SCALE
    i_idx = _slice_axis(s.real)
    q_idx = _slice_axis(s.imag)
    nibble = (i_idx << 2) | q_idx
    return BITS_OF_INDEX[nibble]


# ---------------------------------------------------------------------------
# convolutional code, generators 133/171 (octal), constraint length 7

_G1 = np.array([1, 0, 1, 1, 0, 1, 1], dtype=np.uint8)  # 133 octal, MSB first
_G2 = np.array([1, 1, 1, 1, 0, 0, 1], dtype=np.uint8)  # 171 octal
_K = 7
_NSTATES = 1 << (_K - 1)
_TAIL = _K - 1


def conv_encode(bits: np.ndarray) -> np.ndarray:
    """Rate-1/2 terminated encoding: (..., k) info bits to (..., 2(k+6))
    coded bits, the two generator outputs interleaved per step."""
    b = np.asarray(bits, dtype=np.uint8)
    k = b.shape[-1]
    padded = np.concatenate(
        [b, np.zeros(b.shape[:-1] + (_TAIL,), dtype=np.uint8)], axis=-1
    )
    flat = padded.reshape(-1, k + _TAIL)
    out = np.empty((flat.shape[0], 2 * (k + _TAIL)), dtype=np.uint8)
    for g, off in ((_G1, 0), (_G2, 1)):
        acc = np.zeros_like(flat)
        for j, tap in enumerate(g):
            if tap:
                acc[:, j:] ^= flat[:, : flat.shape[1] - j]
        out[:, off::2] = acc
    return out.reshape(b.shape[:-1] + (2 * (k + _TAIL),))


def _trellis() -> tuple[np.ndarray, np.ndarray]:
    """Predecessor table and expected output pairs for the 64-state trellis.

    State is the shift register of the last 6 input bits, newest in the
    high bit, so the input causing a transition INTO state ns is ns's high
    bit, and ns's two predecessors differ only in their oldest bit.
    prev[ns, j] is the predecessor whose dropped oldest bit is j; outs[ns, j]
    is the coded pair (as 2*o1 + o2) emitted on that transition.
    """
    prev = np.empty((_NSTATES, 2), dtype=np.int64)
    outs = np.empty((_NSTATES, 2), dtype=np.int64)
    g1 = int("".join(map(str, _G1)), 2)
    g2 = int("".join(map(str, _G2)), 2)
    half = _NSTATES // 2
    for ns in range(_NSTATES):
        b = ns >> (_K - 2)
        for j in (0, 1):
            s = ((ns & (half - 1)) << 1) | j
            reg = (b << (_K - 1)) | s  # current input bit plus old register
            prev[ns, j] = s
            outs[ns, j] = 2 * (bin(reg & g1).count("1") & 1) + (
                bin(reg & g2).count("1") & 1
            )
    return prev, outs


_PREV, _OUTS = _trellis()


def viterbi_decode(coded: np.ndarray) -> np.ndarray:
    """Hard-decision Viterbi over the terminated trellis.

    coded has shape (..., 2(k+6)); returns (..., k) info bits. Batched over
    leading dimensions: path metrics are carried for all rows at once, so
    decoding many blocks together costs little more than one.
    """
    c = np.asarray(coded, dtype=np.uint8)
    if c.shape[-1] % 2:
        raise ParameterError("coded length must be even")
    steps = c.shape[-1] // 2
    k = steps - _TAIL
    if k < 0:
        raise ParameterError(f"coded block too short: {c.shape[-1]} bits")
    flat = c.reshape(-1, steps, 2)
    batch = flat.shape[0]
    received = 2 * flat[:, :, 0].astype(np.int64) + flat[:, :, 1]

    big = steps + 1
    pm = np.full((batch, _NSTATES), big, dtype=np.int64)
    pm[:, 0] = 0
    choice = np.empty((batch, steps, _NSTATES), dtype=np.uint8)
    # branch Hamming distances for all 4 possible pairs against each symbol
    ham = np.array([[bin(a ^ b).count("1") for b in range(4)] for a in range(4)])
    for t in range(steps):
        d = ham[received[:, t]]  # (batch, 4)
        cand = pm[:, _PREV] + d[:, _OUTS]  # (batch, 64, 2)
        pick = np.argmin(cand, axis=2).astype(np.uint8)
        pm = np.take_along_axis(cand, pick[:, :, None], axis=2)[:, :, 0]
        choice[:, t] = pick

    states = np.zeros(batch, dtype=np.int64)  # terminated: end in state 0
    bits = np.empty((batch, steps), dtype=np.uint8)
    rows = np.arange(batch)
    for t in range(steps - 1, -1, -1):
        bits[:, t] = (states >> (_K - 2)).astype(np.uint8)
        j = choice[rows, t, states]
        states = _PREV[states, j]
    return bits[:, :k].reshape(c.shape[:-1] + (k,))


# ---------------------------------------------------------------------------
# interleaving


def make_interleaver(n: int, rng: np.random.Generator) -> np.ndarray:
    """Fixed pseudo-random bit permutation of length n."""
    return rng.permutation(n)


def interleave(bits: np.ndarray, perm: np.ndarray) -> np.ndarray:
    return np.asarray(bits)[..., perm]


def deinterleave(bits: np.ndarray, perm: np.ndarray) -> np.ndarray:
    inv = np.empty_like(perm)
    inv[perm] = np.arange(len(perm))
    return np.asarray(bits)[..., inv]
