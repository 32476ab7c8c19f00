"""Laurent polynomial matrices on the unit circle.

A matrix ``A(s) = sum_{v=-V1}^{V2} A_v s^{-v}`` is stored by its coefficient
matrices in ascending ``v``. ``V1`` counts anticausal terms (positive powers
of ``s``), ``V2`` causal terms, and ``V = V1 + V2`` is the maximum degree.
On ``|s| = 1`` negative powers are conjugates, which is what makes sampling
on tone grids and recovering coefficients a pure DFT-type problem.
"""

from __future__ import annotations

import cmath
import json
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import ConditioningError, DegenerateGridError, ParameterError

CONDITION_LIMIT = 1e12
PINV_RTOL = 1e-12


@dataclass(frozen=True)
class UnitCirclePoint:
    """A point on the unit circle, optionally tagged as tone n of an N-grid.

    Attributes
    ----------
    value : complex
        The point itself, ``|value| = 1`` to 1e-12.
    tone_index : int or None
        When set, ``value == exp(2j*pi*tone_index/grid_size)``.
    grid_size : int or None
        The DFT grid the tone index refers to.
    """

    value: complex
    tone_index: int | None = None
    grid_size: int | None = None

    def __post_init__(self) -> None:
        if abs(abs(self.value) - 1.0) > 1e-12:
            raise ParameterError(f"point {self.value!r} is not on the unit circle")
        if (self.tone_index is None) != (self.grid_size is None):
            raise ParameterError("tone_index and grid_size must be given together")
        if self.tone_index is not None:
            ref = cmath.exp(2j * cmath.pi * self.tone_index / self.grid_size)
            if abs(self.value - ref) > 1e-12:
                raise ParameterError(
                    f"value {self.value!r} does not match tone {self.tone_index}/{self.grid_size}"
                )


def tone_point(n: int, N: int) -> UnitCirclePoint:
    """Tone ``n`` of the ``N``-point grid, ``exp(2j*pi*n/N)``.

    Raises ParameterError unless ``0 <= n < N``.
    """
    if N < 1:
        raise ParameterError(f"grid size must be positive, got {N}")
    if not 0 <= n < N:
        raise ParameterError(f"tone index {n} outside [0, {N})")
    return UnitCirclePoint(cmath.exp(2j * cmath.pi * n / N), tone_index=n, grid_size=N)


def _as_complex(point: UnitCirclePoint | complex) -> complex:
    if isinstance(point, UnitCirclePoint):
        return complex(point.value)
    value = complex(point)
    if abs(abs(value) - 1.0) > 1e-12:
        raise ParameterError(f"point {value!r} is not on the unit circle")
    return value


@dataclass(frozen=True)
class LaurentPolyMatrix:
    """Coefficient representation of a Laurent polynomial matrix.

    ``coeffs[i]`` is the P x M matrix attached to ``s^{-v}`` for
    ``v = -v1 + i``; the list runs from A_{-V1} up to A_{V2}.
    """

    v1: int
    v2: int
    rows: int
    cols: int
    coeffs: np.ndarray  # shape (v1+v2+1, rows, cols), complex

    def __post_init__(self) -> None:
        if self.v1 < 0 or self.v2 < 0:
            raise ParameterError("degrees must be nonnegative")
        arr = np.asarray(self.coeffs, dtype=complex)
        if arr.shape != (self.v1 + self.v2 + 1, self.rows, self.cols):
            raise ParameterError(
                f"coefficient array shape {arr.shape} does not match "
                f"({self.v1 + self.v2 + 1}, {self.rows}, {self.cols})"
            )
        object.__setattr__(self, "coeffs", arr)
        # freeze the buffer so shared instances stay immutable
        arr.setflags(write=False)

    @property
    def degree(self) -> int:
        return self.v1 + self.v2

    def coeff(self, v: int) -> np.ndarray:
        """Coefficient matrix A_v, v in [-v1, v2]."""
        if not -self.v1 <= v <= self.v2:
            raise ParameterError(f"v={v} outside [-{self.v1}, {self.v2}]")
        return self.coeffs[v + self.v1]

    def to_json_dict(self) -> dict:
        return {
            "v1": self.v1,
            "v2": self.v2,
            "rows": self.rows,
            "cols": self.cols,
            "coeffs": [
                [[[float(z.real), float(z.imag)] for z in row] for row in mat]
                for mat in self.coeffs
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict())

    @classmethod
    def from_json_dict(cls, obj: dict) -> "LaurentPolyMatrix":
        try:
            v1, v2 = int(obj["v1"]), int(obj["v2"])
            rows, cols = int(obj["rows"]), int(obj["cols"])
            raw = obj["coeffs"]
            coeffs = np.array(
                [[[complex(re, im) for re, im in r] for r in mat] for mat in raw],
                dtype=complex,
            ).reshape(v1 + v2 + 1, rows, cols)
        except (KeyError, TypeError, ValueError) as exc:
            raise ParameterError(f"malformed Laurent matrix object: {exc}") from exc
        return cls(v1=v1, v2=v2, rows=rows, cols=cols, coeffs=coeffs)

    @classmethod
    def from_json(cls, text: str) -> "LaurentPolyMatrix":
        return cls.from_json_dict(json.loads(text))


def from_coeffs(coeffs: Iterable[np.ndarray], v1: int, v2: int) -> LaurentPolyMatrix:
    """Build an LP matrix from coefficient matrices listed in ascending v."""
    arr = np.asarray(list(coeffs), dtype=complex)
    if arr.ndim == 1:  # scalar polynomial given as a flat list
        arr = arr.reshape(-1, 1, 1)
    return LaurentPolyMatrix(v1=v1, v2=v2, rows=arr.shape[1], cols=arr.shape[2], coeffs=arr)


def eval(lp: LaurentPolyMatrix, s: UnitCirclePoint | complex) -> np.ndarray:  # noqa: A001
    """Evaluate A(s) = sum_v A_v s^{-v} at a unit-circle point.

    Negative powers use the conjugate, so no division happens.
    """
    return eval_many(lp, [s])[0]


def eval_many(lp: LaurentPolyMatrix, points: Sequence[UnitCirclePoint | complex]) -> np.ndarray:
    """Evaluate at several points at once; returns shape (len(points), P, M)."""
    powers = base_matrix(points, lp.v1, lp.v2)
    return np.tensordot(powers, lp.coeffs, axes=(1, 0))


def base_matrix(points: Sequence[UnitCirclePoint | complex], v1: int, v2: int) -> np.ndarray:
    """Sampling matrix mapping coefficients (ascending v) to point samples.

    The row for point s is [s^{v1}, s^{v1-1}, ..., s^{-v2}]: the entry
    multiplying coefficient A_v is s^{-v}, so ascending v runs left to right.
    """
    zs = np.array([_as_complex(p) for p in points])
    vs = np.arange(-v1, v2 + 1)
    return np.conj(zs)[:, None] ** np.where(vs >= 0, vs, 0) * zs[:, None] ** np.where(
        vs < 0, -vs, 0
    )


def _check_distinct(zs: np.ndarray) -> None:
    # pairwise check is fine at these sizes (tens of points)
    n = len(zs)
    for i in range(n):
        d = np.abs(zs[i + 1 :] - zs[i])
        if d.size and d.min() < 1e-12:
            raise DegenerateGridError("interpolation points are not distinct")


def fit_from_samples(
    points: Sequence[UnitCirclePoint | complex],
    samples: np.ndarray,
    v1: int,
    v2: int,
) -> LaurentPolyMatrix:
    """Recover the LP matrix of degrees (v1, v2) from point samples.

    ``samples`` has shape (n_points, P, M) (or (n_points,) for scalars).
    With exactly V+1 distinct points this is interpolation; with more points
    it is the least-squares fit, which coincides with the interpolant when
    the samples are consistent.
    """
    zs = np.array([_as_complex(p) for p in points])
    _check_distinct(zs)
    n_coef = v1 + v2 + 1
    if len(zs) < n_coef:
        raise ParameterError(f"need at least {n_coef} points, got {len(zs)}")
    s = np.asarray(samples, dtype=complex)
    scalar = s.ndim == 1
    if scalar:
        s = s.reshape(-1, 1, 1)
    if s.shape[0] != len(zs):
        raise ParameterError("sample count does not match point count")
    B = base_matrix(zs, v1, v2)
    cond = np.linalg.cond(B)
    if not np.isfinite(cond) or cond > CONDITION_LIMIT:
        raise ConditioningError(f"base-point matrix condition {cond:.3e} above {CONDITION_LIMIT:.0e}")
    flat = s.reshape(len(zs), -1)
    coef, *_ = np.linalg.lstsq(B, flat, rcond=PINV_RTOL)
    coeffs = coef.reshape(n_coef, s.shape[1], s.shape[2])
    return LaurentPolyMatrix(v1=v1, v2=v2, rows=s.shape[1], cols=s.shape[2], coeffs=coeffs)


Degrees = tuple[int, int]


def degree_of_product(a: Degrees, b: Degrees) -> Degrees:
    """Degrees of A(s)B(s): componentwise sum."""
    return (a[0] + b[0], a[1] + b[1])


def degree_of_sum(a: Degrees, b: Degrees) -> Degrees:
    """Degrees of A(s)+B(s): componentwise max."""
    return (max(a[0], b[0]), max(a[1], b[1]))


def degree_of_hermitian(a: Degrees) -> Degrees:
    """Degrees of A^H(s): swapped, since s^{-v} conjugates to s^{v}."""
    return (a[1], a[0])


def hermitian(lp: LaurentPolyMatrix) -> LaurentPolyMatrix:
    """A^H(s): conjugate-transpose coefficients, reversed in v."""
    coeffs = np.conj(np.swapaxes(lp.coeffs[::-1], 1, 2))
    return LaurentPolyMatrix(v1=lp.v2, v2=lp.v1, rows=lp.cols, cols=lp.rows, coeffs=coeffs)
