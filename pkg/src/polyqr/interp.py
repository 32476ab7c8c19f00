"""Interpolation engines for Laurent polynomial matrices.

Three ways to move samples from base points to target points:

* direct: build the target-by-base matrix T B^+ once, apply it to anything;
  works for arbitrary distinct unit-circle points.
* fft: for equidistant power-of-two grids, the counted pruned radix-2 route;
  same values, hardware multiplication tally attached.
* fir: for equidistant grids, the circulant structure of T B^+ collapses it
  to R-1 FIR filters defined by a single coefficient block F0, optionally
  truncated to the B' nearest base points per target (inexact below V+1).

The V1 optimizer picks the degree split of a truncated design by measuring
the reconstruction error it induces on the factors of random channels.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, NamedTuple, Sequence

import numpy as np

from . import lpmat
from ._radix2 import upsample_counted
from .errors import ConditioningError, ParameterError
from .lpmap import map_forward
from .qr import givens_qr

CHI_R = Fraction(1, 8)
CHI_C = Fraction(1, 4)

CONDITION_LIMIT = 1e12
PINV_RTOL = 1e-12

ENGINE_DIRECT = "direct"
ENGINE_FFT = "fft"
ENGINE_FIR = "fir"


@dataclass(frozen=True)
class EquidistantGrid:
    """Base tones 0, R, 2R, ... of an N = R*B tone grid, plus the targets.

    Targets default to every non-base tone; a subset is allowed (engines
    then return just those rows) but the base layout is always the full
    anchored stride.
    """

    B: int
    R: int
    N: int
    base: np.ndarray = field(repr=False)
    target: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        if self.N != self.B * self.R or self.R < 2 or self.B < 1:
            raise ParameterError(f"bad grid: B={self.B}, R={self.R}, N={self.N}")
        base = np.asarray(self.base, dtype=int)
        target = np.asarray(self.target, dtype=int)
        if not np.array_equal(base, np.arange(self.B) * self.R):
            raise ParameterError("base tones must be 0, R, 2R, ... (anchored stride)")
        if target.size:
            if target.min() < 0 or target.max() >= self.N:
                raise ParameterError("target tones outside the grid")
            if np.any(target % self.R == 0):
                raise ParameterError("target tones must be distinct from base tones")
            if len(np.unique(target)) != target.size:
                raise ParameterError("duplicate target tones")
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "target", target)

    @classmethod
    def upsampling(cls, B: int, R: int) -> "EquidistantGrid":
        """The canonical grid: all non-base tones are targets."""
        N = B * R
        f = np.arange(N)
        return cls(B=B, R=R, N=N, base=np.arange(B) * R, target=f[f % R != 0])

    def base_points(self) -> np.ndarray:
        return np.exp(2j * np.pi * self.base / self.N)

    def target_points(self) -> np.ndarray:
        return np.exp(2j * np.pi * self.target / self.N)


def point_matrices(
    base: Sequence, target: Sequence, v1: int, v2: int
) -> tuple[np.ndarray, np.ndarray]:
    """The base- and target-point sampling matrices for degrees (v1, v2).

    Rows are [s^{v1}, ..., s^{-v2}] per point; coefficients in ascending v
    multiply them left to right.
    """
    return lpmat.base_matrix(base, v1, v2), lpmat.base_matrix(target, v1, v2)


def interpolation_matrix(
    base: Sequence, target: Sequence, v1: int, v2: int
) -> np.ndarray:
    """T B^+ : applied to base samples it yields target samples, exactly for
    any matrix of the stated degrees when |base| >= v1+v2+1."""
    Bmat, Tmat = point_matrices(base, target, v1, v2)
    if Bmat.shape[0] < v1 + v2 + 1:
        raise ParameterError(
            f"need at least {v1 + v2 + 1} base points, got {Bmat.shape[0]}"
        )
    sv = np.linalg.svd(Bmat, compute_uv=False)
    if sv[0] == 0 or sv[-1] / sv[0] < 1.0 / CONDITION_LIMIT:
        raise ConditioningError("base-point matrix is numerically rank deficient")
    return Tmat @ np.linalg.pinv(Bmat, rcond=PINV_RTOL)


def upsample_fft(
    base_samples: np.ndarray, grid: EquidistantGrid, v1: int, v2: int
) -> tuple[np.ndarray, int]:
    """Counted pruned-FFT upsampling over an equidistant power-of-two grid.

    Returns samples at grid.target (ascending tone order) and the
    per-sequence full-multiplication tally, (B/2)log2 B for coefficient
    recovery plus (R-1)(B/2)log2 B for the pruned evaluation stages. The
    tally reflects the full non-base output set even if grid.target selects
    a subset, because the butterfly structure computes them all.
    """
    base = np.asarray(base_samples, dtype=complex)
    if base.shape[0] != grid.B:
        raise ParameterError(f"expected {grid.B} base samples, got {base.shape[0]}")
    values, count = upsample_counted(base, v1, v2, grid.R)
    full = np.arange(grid.N)
    full = full[full % grid.R != 0]
    if grid.target.size == full.size and np.array_equal(grid.target, full):
        return values, count
    pos = np.searchsorted(full, grid.target)
    return values[pos], count


@dataclass(frozen=True)
class InterpolationDesign:
    """A frozen interpolation plan, serializable for reuse.

    For the fir engine F0 holds the R-1 filter rows over all B base
    positions (zeros outside the B' support); mult_count_per_target is the
    dedicated-multiplier cost bookkeeping in full-multiplication units.
    """

    B: int
    R: int
    v1: int
    v2: int
    engine: str
    B_prime: int
    F0: np.ndarray | None
    mult_count_per_target: Fraction

    def to_json_dict(self) -> dict:
        f0 = None
        if self.F0 is not None:
            f0 = [[[float(z.real), float(z.imag)] for z in row] for row in self.F0]
        return {
            "B": self.B,
            "R": self.R,
            "v1": self.v1,
            "v2": self.v2,
            "engine": self.engine,
            "B_prime": self.B_prime,
            "F0": f0,
            "mult_count_per_target": [
                self.mult_count_per_target.numerator,
                self.mult_count_per_target.denominator,
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict())

    @classmethod
    def from_json_dict(cls, obj: dict) -> "InterpolationDesign":
        try:
            f0 = obj["F0"]
            F0 = None
            if f0 is not None:
                F0 = np.array(
                    [[complex(re, im) for re, im in row] for row in f0], dtype=complex
                )
            num, den = obj["mult_count_per_target"]
            return cls(
                B=int(obj["B"]),
                R=int(obj["R"]),
                v1=int(obj["v1"]),
                v2=int(obj["v2"]),
                engine=str(obj["engine"]),
                B_prime=int(obj["B_prime"]),
                F0=F0,
                mult_count_per_target=Fraction(int(num), int(den)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ParameterError(f"malformed design object: {exc}") from exc


def fir_support(B: int, B_prime: int) -> np.ndarray:
    """Base positions used by the truncated design: the B'/2 nearest base
    points on each side of the final target block (which sits between base
    B-1 and base 0). Midpoint ties break toward the lower tone index, which
    is what the floor in B'/2 on the upper side implements."""
    if B_prime == B:
        return np.arange(B)
    half = B_prime // 2
    return np.concatenate([np.arange(half), np.arange(B - half, B)])


def fir_design(
    grid: EquidistantGrid,
    v1: int,
    v2: int,
    B_prime: int | None = None,
    chi_r: Fraction = CHI_R,
    chi_c: Fraction = CHI_C,
) -> InterpolationDesign:
    """Build the circulant FIR interpolation bank for an equidistant grid.

    Only one coefficient block is needed: the rows interpolating the last
    target block from its B' nearest base points. Every other block reuses
    the same rows against a rotated view of the base sequence. With
    B' >= v1+v2+1 the design is exact; below that it solves the minimum-norm
    least squares fit on the reduced support and is deliberately inexact.
    """
    B, R, N = grid.B, grid.R, grid.N
    if B_prime is None:
        B_prime = B
    if B_prime % 2 != 0:
        raise ParameterError(f"B_prime must be even, got {B_prime}")
    if not 2 <= B_prime <= B:
        raise ParameterError(f"B_prime must be in [2, {B}], got {B_prime}")
    support = fir_support(B, B_prime)
    base_pts = np.exp(2j * np.pi * (support * R) / N)
    target_tones = (B - 1) * R + np.arange(1, R)
    target_pts = np.exp(2j * np.pi * target_tones / N)
    B0, T0 = point_matrices(base_pts, target_pts, v1, v2)
    core = T0 @ np.linalg.pinv(B0, rcond=PINV_RTOL)
    F0 = np.zeros((R - 1, B), dtype=complex)
    F0[:, support] = core
    chi = chi_r if v1 == v2 else chi_c
    return InterpolationDesign(
        B=B,
        R=R,
        v1=v1,
        v2=v2,
        engine=ENGINE_FIR,
        B_prime=B_prime,
        F0=F0,
        mult_count_per_target=Fraction(chi) * B_prime / 2,
    )


def fir_full_matrix(design: InterpolationDesign) -> np.ndarray:
    """Expand the filter bank to the full (R-1)B x B matrix mapping base
    samples to all non-base tones in ascending order. Row (R-1)k + r-1
    (target tone kR + r) reads base position j through F0[r-1, (j-k-1) mod B].
    """
    B, R = design.B, design.R
    if design.F0 is None:
        raise ParameterError("design has no FIR coefficients")
    M = np.zeros(((R - 1) * B, B), dtype=complex)
    j = np.arange(B)
    for k in range(B):
        M[(R - 1) * k : (R - 1) * (k + 1), j] = design.F0[:, (j - k - 1) % B]
    return M


def fir_apply(
    design: InterpolationDesign, base_samples: np.ndarray
) -> np.ndarray:
    """Apply the bank circulantly; returns all (R-1)B non-base-tone samples
    in ascending tone order, any trailing sample shape."""
    base = np.asarray(base_samples, dtype=complex)
    if base.shape[0] != design.B:
        raise ParameterError(f"expected {design.B} base samples, got {base.shape[0]}")
    M = fir_full_matrix(design)
    flat = base.reshape(design.B, -1)
    out = M @ flat
    return out.reshape((M.shape[0],) + base.shape[1:])


class V1Search(NamedTuple):
    """Result of the truncated-design degree search."""

    v1_star: int
    error_curve: dict[int, float]
    tie: bool


def _pack_mapped(Qt: np.ndarray, Rt: np.ndarray) -> np.ndarray:
    """Flatten scaled factors into the per-tone sequence vector: for each
    column k, the scaled q column then the scaled r row from the diagonal
    rightward."""
    M = Rt.shape[1]
    parts = []
    for k in range(M):
        parts.append(Qt[:, k])
        parts.append(Rt[k, k:])
    return np.concatenate(parts)


def _unpack_mapped(vec: np.ndarray, P: int, M: int) -> tuple[np.ndarray, np.ndarray]:
    Qt = np.zeros(vec.shape[:-1] + (P, M), dtype=complex)
    Rt = np.zeros(vec.shape[:-1] + (M, M), dtype=complex)
    pos = 0
    for k in range(M):
        Qt[..., :, k] = vec[..., pos : pos + P]
        pos += P
        Rt[..., k, k:] = vec[..., pos : pos + (M - k)]
        pos += M - k
    return Qt, Rt


def inexact_optimize_v1(
    grid: EquidistantGrid,
    B_prime: int,
    M_T: int,
    L: int,
    channel_sampler: Callable[[np.random.Generator], lpmat.LaurentPolyMatrix],
    trials: int,
    seed: int | None = 0,
    fixed_total_degree: bool = True,
) -> V1Search:
    """Search the anticausal degree V1 of a truncated FIR design.

    For each candidate V1 (V2 = 2*M_T*L - V1 when the total degree is held
    fixed, else V2 = M_T*L), the scaled factors of ``trials`` random
    channels are computed exactly at the base tones, pushed through the
    candidate design to every non-base tone, unscaled, and charged the
    squared Frobenius residual of Q^H(s) H(s) - R(s) summed over those
    tones. Scale products that interpolation error drove nonpositive are
    unscaled through their magnitude, which keeps the penalty finite and
    large instead of undefined.

    The tie flag reports that the runner-up candidate sits within two
    standard errors of the winner, meaning more trials would be needed to
    separate them.
    """
    if trials < 1:
        raise ParameterError("trials must be >= 1")
    if B_prime >= 2 * M_T * L + 1:
        raise ParameterError(
            f"B_prime={B_prime} supports exact interpolation of degree "
            f"{2 * M_T * L}; the optimum is V1 = {M_T * L} with nothing to search"
        )
    rng = np.random.default_rng(seed)
    B, R, N = grid.B, grid.R, grid.N
    base_pts = grid.base_points()
    f = np.arange(N)
    tgt_tones = f[f % R != 0]
    tgt_pts = np.exp(2j * np.pi * tgt_tones / N)

    packed = []
    h_target = []
    P = None
    for _ in range(trials):
        H = channel_sampler(rng)
        if H.cols != M_T or H.v1 != 0 or H.v2 != L:
            raise ParameterError(
                f"channel_sampler returned degrees ({H.v1},{H.v2}) with "
                f"{H.cols} columns; expected (0,{L}) with {M_T}"
            )
        P = H.rows
        Hb = lpmat.eval_many(H, base_pts)
        per_tone = []
        for n in range(B):
            mf = map_forward(givens_qr(Hb[n]))
            per_tone.append(_pack_mapped(mf.Qtilde, mf.Rtilde))
        packed.append(np.stack(per_tone))
        h_target.append(lpmat.eval_many(H, tgt_pts))
    packed_all = np.stack(packed, axis=-1)  # (B, J, trials)
    Bn, J, T = packed_all.shape
    packed_flat = packed_all.reshape(Bn, J * T)
    Ht = np.stack(h_target, axis=1)  # (targets, trials, P, M_T)

    candidates = list(range(1, M_T * L + 1))
    means: dict[int, float] = {}
    stderrs: dict[int, float] = {}
    for v1c in candidates:
        v2c = 2 * M_T * L - v1c if fixed_total_degree else M_T * L
        design = fir_design(grid, v1c, v2c, B_prime)
        Mfull = fir_full_matrix(design)
        interp = (Mfull @ packed_flat).reshape(len(tgt_tones), J, T)
        interp = np.moveaxis(interp, 1, -1)  # (targets, trials, J)
        Qt, Rt = _unpack_mapped(interp, P, M_T)
        d = np.real(np.einsum("...kk->...k", Rt))
        prev = np.concatenate([np.ones(d.shape[:-1] + (1,)), d[..., :-1]], axis=-1)
        fscale = 1.0 / np.sqrt(np.maximum(np.abs(prev * d), 1e-300))
        Q = Qt * fscale[..., None, :]
        Rm = Rt * fscale[..., :, None]
        resid = np.einsum("tnpk,tnpm->tnkm", Q.conj(), Ht) - Rm
        per_trial = np.sum(np.abs(resid) ** 2, axis=(0, 2, 3))
        means[v1c] = float(np.mean(per_trial))
        stderrs[v1c] = float(np.std(per_trial) / np.sqrt(T))

    v1_star = min(candidates, key=lambda c: means[c])
    others = [c for c in candidates if c != v1_star]
    tie = False
    if others:
        runner = min(others, key=lambda c: means[c])
        margin = 2.0 * (stderrs[v1_star] + stderrs[runner])
        tie = means[runner] - means[v1_star] <= margin
    return V1Search(v1_star=v1_star, error_curve=means, tie=tie)
