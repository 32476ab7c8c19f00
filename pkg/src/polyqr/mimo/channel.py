"""Random frequency-selective MIMO channels for the detection test bench."""

from __future__ import annotations

import numpy as np

from .. import lpmat
from ..algos import ToneSets
from ..errors import ParameterError


def draw_channel(
    M_T: int, M_R: int, L: int, rng: np.random.Generator
) -> lpmat.LaurentPolyMatrix:
    """i.i.d. Rayleigh taps, each entry CN(0, 1/(L+1)), as a causal
    transfer matrix of degrees (0, L). The per-tap variance makes every
    tone's entry unit-variance, so E[||H(s)||_F^2] = M_R * M_T.
    """
    if M_T < 1 or M_R < M_T or L < 0:
        raise ParameterError(f"bad channel dimensions ({M_T}, {M_R}, {L})")
    scale = np.sqrt(1.0 / (2 * (L + 1)))
    taps = scale * (
        rng.standard_normal((L + 1, M_R, M_T))
        + 1j * rng.standard_normal((L + 1, M_R, M_T))
    )
    return lpmat.from_coeffs(taps, 0, L)


def channel_samples(lp: lpmat.LaurentPolyMatrix, tones: ToneSets) -> np.ndarray:
    """Evaluate the transfer matrix at the grid's known tones, in the shape
    the pipeline entry points expect."""
    pts = [lpmat.tone_point(n, tones.N) for n in tones.known_tones]
    return lpmat.eval_many(lp, pts)


def tone_response(lp: lpmat.LaurentPolyMatrix, idx, N: int) -> np.ndarray:
    """Evaluate the transfer matrix at arbitrary tone indices."""
    pts = [lpmat.tone_point(int(n), N) for n in idx]
    return lpmat.eval_many(lp, pts)
