"""Arithmetic-cost model for the interpolation-based QR pipelines.

Everything here is exact rational arithmetic (fractions.Fraction); floats
never enter, so totals and ratios are reproducible bit for bit. The unit
is one full complex multiplication. Rotation-based QR steps are charged
through closed forms that treat a Givens rotation pair as CORDIC-equivalent
work; interpolation is charged per target point through a configurable
weight c_IP, letting the same totals describe direct, FFT, or FIR engines.

Division and square roots are deliberately not counted, and neither are
memory traffic or wordwidth effects; the model ranks algorithms by their
dominant multiplier load, nothing more.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from decimal import ROUND_HALF_EVEN, Decimal
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .errors import InfeasibleError, ParameterError
from .instrument import demap_charge, map_charge, reduction_charge

CHI_R = Fraction(1, 8)
CHI_C = Fraction(1, 4)

KIND_ZF = "ZF"
KIND_MMSE_REG = "MMSE_REG"
KIND_MMSE_AUG = "MMSE_AUG"

ALGORITHMS = ("I", "II", "III", "I_MMSE", "II_MMSE", "III_MMSE")
TASKS = ("interp_H", "interp_QR", "qr", "map", "demap", "reduction")

RatioLike = int | Fraction


def j_k(m_r: int, m_t: int, k: int) -> int:
    """Entry count of the leading-k factor block: the k scaled columns plus
    the k scaled rows (each row j spanning columns j..M_T)."""
    if not 1 <= k <= m_t:
        raise ParameterError(f"k must lie in 1..{m_t}, got {k}")
    if m_r < m_t:
        raise ParameterError(f"need m_r >= m_t, got {m_r} < {m_t}")
    return m_r * k + m_t * k - (k - 1) * k // 2


def qr_cost(p: int, m: int, kind: str = KIND_ZF) -> Fraction:
    """Full-multiplication charge for one P x M decomposition.

    ZF is the plain rotation-based triangularization; MMSE_REG regularizes
    with an alpha*I block whose structure trims the count; MMSE_AUG keeps
    the full stacked orthogonal factor alive, which costs extra rotations
    applied to the augmented rows.
    """
    if m < 1 or p < m:
        raise ParameterError(f"need P >= M >= 1, got P={p}, M={m}")
    p2m = Fraction(3, 2) * (p * p * m + p * m * m)
    if kind == KIND_ZF:
        return p2m - m**3 - Fraction(p * p - p + m * m + m, 2)
    if kind == KIND_MMSE_REG:
        return p2m - Fraction(p * p, 2) + Fraction(p, 2)
    if kind == KIND_MMSE_AUG:
        reg = p2m - Fraction(p * p, 2) + Fraction(p, 2)
        return reg + Fraction(3, 2) * p * m * m + Fraction(p * m, 2)
    raise ParameterError(f"unknown qr cost kind {kind!r}")


def _next_pow2(n: int) -> int:
    return 1 << max(0, (n - 1).bit_length())


@dataclass(frozen=True)
class CostParams:
    """System size, tone budget, and per-target interpolation weights.

    c_ip_h prices one interpolated channel entry at one tone; c_ip_qr the
    same for a scaled-factor sequence. c_ip_qr_stages overrides the latter
    per pipeline stage (stage k prices sequences interpolated from the k-th
    base set), which is how a direct engine with stage-dependent base sizes
    is expressed. chi_r/chi_c are the dedicated-multiplier weights used
    when deriving c_ip values from FIR tap counts; they are carried here so
    sweeps can restate them per row.
    """

    m_t: int
    m_r: int
    L: int
    N: int
    D: int
    c_ip_h: RatioLike = Fraction(2)
    c_ip_qr: RatioLike | None = None
    c_ip_qr_stages: tuple[RatioLike, ...] | None = None
    chi_r: Fraction = CHI_R
    chi_c: Fraction = CHI_C
    schedule: str | tuple[int, ...] = "pow2"

    def __post_init__(self) -> None:
        if not 1 <= self.m_t <= self.m_r:
            raise ParameterError(
                f"need M_R >= M_T >= 1, got M_R={self.m_r}, M_T={self.m_t}"
            )
        if self.L < 0:
            raise ParameterError(f"L must be nonnegative, got {self.L}")
        if not 1 <= self.D <= self.N:
            raise ParameterError(f"need 1 <= D <= N, got D={self.D}, N={self.N}")
        for name in ("c_ip_h", "c_ip_qr"):
            v = getattr(self, name)
            if v is not None and Fraction(v) < 0:
                raise ParameterError(f"{name} must be nonnegative, got {v}")
        if self.c_ip_qr_stages is not None:
            stages = tuple(Fraction(c) for c in self.c_ip_qr_stages)
            if len(stages) != self.m_t:
                raise ParameterError(
                    f"c_ip_qr_stages needs {self.m_t} entries, got {len(stages)}"
                )
            if any(c < 0 for c in stages):
                raise ParameterError("stage interpolation weights must be nonnegative")
            object.__setattr__(self, "c_ip_qr_stages", stages)


def resolve_schedule(params: CostParams) -> tuple[int, ...]:
    """Base-set sizes B_1 <= ... <= B_MT under the requested schedule."""
    mt, L = params.m_t, params.L
    if params.schedule == "exact_minimal":
        sizes = tuple(2 * k * L + 1 for k in range(1, mt + 1))
    elif params.schedule == "pow2":
        sizes = tuple(_next_pow2(2 * k * L + 1) for k in range(1, mt + 1))
    elif isinstance(params.schedule, tuple):
        sizes = tuple(int(b) for b in params.schedule)
        if len(sizes) != mt:
            raise ParameterError(f"schedule needs {mt} sizes, got {len(sizes)}")
        if any(b < 1 for b in sizes) or any(
            a > b for a, b in zip(sizes, sizes[1:])
        ):
            raise ParameterError(f"schedule must be positive nondecreasing: {sizes}")
    else:
        raise ParameterError(f"unknown schedule {params.schedule!r}")
    if sizes[-1] > params.D:
        raise InfeasibleError(
            f"largest base set B={sizes[-1]} exceeds the {params.D} available tones"
        )
    if sizes[-1] > params.N:
        raise InfeasibleError(f"base set B={sizes[-1]} exceeds the N={params.N} grid")
    return sizes


def _stage_weight(params: CostParams, k: int) -> Fraction:
    if params.c_ip_qr_stages is not None:
        return Fraction(params.c_ip_qr_stages[k - 1])
    if params.c_ip_qr is None:
        raise ParameterError("c_ip_qr (or c_ip_qr_stages) is required here")
    return Fraction(params.c_ip_qr)


def task_costs(params: CostParams) -> dict[str, dict[int, Fraction]]:
    """Per-tone charges for every task family, indexed by stage k = 1..M_T.

    interp_H[k]: one tone's worth of channel columns k..M_T.
    interp_QR_single: all J_MT sequences at one tone (single-step pipeline).
    interp_QR[k]: the stage-k sequence bundle (scaled column + scaled row).
    map[k]: scaling columns k..M_T, first-column map free of the prefix work.
    demap[k]: unscaling the leading k columns.
    reduction[k]: cancelling k-1 known columns from the remaining block.
    """
    mt, mr = params.m_t, params.m_r
    J = j_k(mr, mt, mt)
    ch = Fraction(params.c_ip_h)
    fam: dict[str, dict[int, Fraction]] = {
        "interp_H": {},
        "interp_QR": {},
        "map": {},
        "demap": {},
        "reduction": {},
    }
    for k in range(1, mt + 1):
        fam["interp_H"][k] = mr * (mt - k + 1) * ch
        fam["map"][k] = Fraction(
            J - mr + mt - 1 if k == 1 else J - j_k(mr, mt, k - 1) + mt - k + 1
        )
        fam["demap"][k] = Fraction(j_k(mr, mt, k) + k - 2)
        fam["reduction"][k] = Fraction(mr * (k - 1) * (mt - k + 1))
    if params.c_ip_qr is not None or params.c_ip_qr_stages is not None:
        for k in range(1, mt + 1):
            fam["interp_QR"][k] = (mr + mt - k + 1) * _stage_weight(params, k)
        fam["interp_QR_single"] = {mt: J * _stage_weight(params, mt)}
    return fam


@dataclass(frozen=True)
class CostReport:
    """Task totals for one algorithm at one parameter point."""

    algorithm: str
    params: CostParams
    tasks: Mapping[str, Fraction]

    @property
    def total(self) -> Fraction:
        return sum(self.tasks.values(), Fraction(0))

    def rounded(self, places: int = 2) -> Decimal:
        return round_half_even(self.total, places)


def round_half_even(value: RatioLike, places: int = 2) -> Decimal:
    f = Fraction(value)
    q = Decimal(1).scaleb(-places)
    return (Decimal(f.numerator) / Decimal(f.denominator)).quantize(
        q, rounding=ROUND_HALF_EVEN
    )


def _zero_tasks() -> dict[str, Fraction]:
    return {t: Fraction(0) for t in TASKS}


def total_cost(params: CostParams, algorithm: str) -> CostReport:
    """Assemble one algorithm's task totals over the tone budget.

    The single-step pipeline interpolates all J_MT sequences from the last
    base set; the multi-step one splits work over nested base sets, paying
    reduction and prefix-unscaling in exchange for smaller decompositions
    and fewer interpolated values per stage. MMSE variants swap the
    decomposition charge and, in the multi-step case, widen the factor
    rows inside the last base set (see the instrument module for the
    structural charges reused here).
    """
    if algorithm not in ALGORITHMS:
        raise ParameterError(f"unknown algorithm {algorithm!r}")
    p = params
    mt, mr, D = p.m_t, p.m_r, p.D
    sizes = resolve_schedule(p)
    B = sizes[-1]
    inc = [sizes[0]] + [sizes[k] - sizes[k - 1] for k in range(1, mt)]
    J = j_k(mr, mt, mt)
    fam = task_costs(p)
    t = _zero_tasks()

    if algorithm in ("I", "I_MMSE"):
        kind = KIND_ZF if algorithm == "I" else KIND_MMSE_REG
        t["interp_H"] = D * fam["interp_H"][1]
        t["qr"] = D * qr_cost(mr, mt, kind)
        return CostReport(algorithm, p, t)

    if algorithm in ("II", "II_MMSE"):
        kind = KIND_ZF if algorithm == "II" else KIND_MMSE_REG
        t["interp_H"] = B * fam["interp_H"][1]
        t["qr"] = B * qr_cost(mr, mt, kind)
        t["map"] = B * fam["map"][1]
        t["interp_QR"] = (D - B) * J * _stage_weight(p, mt)
        t["demap"] = (D - B) * fam["demap"][mt]
        return CostReport(algorithm, p, t)

    if algorithm == "III":
        for k in range(1, mt + 1):
            n_new = inc[k - 1]
            t["interp_H"] += n_new * fam["interp_H"][k]
            t["qr"] += n_new * qr_cost(mr, mt - k + 1, KIND_ZF)
            t["map"] += n_new * fam["map"][k]
            t["interp_QR"] += (D - sizes[k - 1]) * fam["interp_QR"][k]
            if k >= 2:
                t["demap"] += n_new * fam["demap"][k - 1]
                t["reduction"] += n_new * fam["reduction"][k]
        t["demap"] += (D - B) * fam["demap"][mt]
        return CostReport(algorithm, p, t)

    # multi-step MMSE: stacked rows m_r + m_t live inside the last base set,
    # only the top m_r rows travel outside it, and the stacked part of the
    # final stage's column is never produced.
    for k in range(1, mt + 1):
        n_new = inc[k - 1]
        rows = mr + mt if k < mt else mr
        t["interp_H"] += n_new * fam["interp_H"][k]
        if k == 1:
            t["qr"] += n_new * qr_cost(mr, mt, KIND_MMSE_AUG)
        else:
            t["qr"] += n_new * qr_cost(mr + mt, mt - k + 1, KIND_ZF)
            t["demap"] += n_new * demap_charge(mr + mt, mt, k - 1)
            t["reduction"] += n_new * reduction_charge(mr + mt, k, mt - k + 1)
        t["map"] += n_new * map_charge(rows, mt, k)
        t["interp_QR"] += (D - sizes[k - 1]) * fam["interp_QR"][k]
        if k < mt:
            t["interp_QR"] += (B - sizes[k - 1]) * mt * _stage_weight(p, k)
    t["demap"] += (D - B) * demap_charge(mr, mt, mt)
    return CostReport("III_MMSE", p, t)


def break_even(params: CostParams) -> dict[str, Fraction]:
    """Interpolation-weight thresholds and the per-row gaps behind them.

    All gaps are single-step minus multi-step totals on the minimal
    schedule; each is independent of the tone budget D, so the multi-step
    advantage is decided entirely by per-stage arithmetic. c_ip_max_ii is
    the weight below which the single-step pipeline eventually beats the
    per-tone baseline as D grows; c_ip_max_iii the weight below which the
    multi-step variant beats the single-step one (valid when positive).
    """
    p = params
    mt, mr = p.m_t, p.m_r
    J = j_k(mr, mt, mt)
    out: dict[str, Fraction] = {}
    out["c_ip_max_ii"] = Fraction(2) * (qr_cost(mr, mt) - (J + mt - 2)) / (
        mt * (mt + 1)
    )

    def diff(tag: str, c: Fraction, L: int, D: int) -> Fraction:
        base = CostParams(
            m_t=mt,
            m_r=mr,
            L=L,
            N=max(D, p.N),
            D=D,
            c_ip_h=c,
            c_ip_qr=c,
            schedule="exact_minimal",
        )
        a = total_cost(base, "II")
        b = total_cost(base, "III")
        if tag == "total":
            return a.total - b.total
        return a.tasks[tag] - b.tasks[tag]

    L1 = max(p.L, 1)
    D1 = 2 * mt * L1 + 9
    const = diff("total", Fraction(0), L1, D1)
    slope = const - diff("total", Fraction(1), L1, D1)
    if slope != 0:
        out["c_ip_max_iii"] = const / slope
    else:  # m_t = 1: the two pipelines coincide
        out["c_ip_max_iii"] = Fraction(0)

    c = Fraction(p.c_ip_qr) if p.c_ip_qr is not None else Fraction(1)
    L = max(p.L, 1)
    D0 = 2 * mt * L + 9
    out["delta_c_qr"] = diff("qr", c, L, D0)
    out["delta_c_map"] = diff("map", c, L, D0) + diff("demap", c, L, D0)
    out["delta_c_ip"] = diff("interp_H", c, L, D0) + diff("interp_QR", c, L, D0)
    out["delta_c_reduction"] = diff("reduction", c, L, D0)
    return out


def sweep(
    param_grid: Iterable[CostParams], algorithms: Sequence[str] = ALGORITHMS
) -> list[CostReport]:
    """Evaluate every (params, algorithm) pair in deterministic order."""
    reports = []
    for params in param_grid:
        for algorithm in algorithms:
            reports.append(total_cost(params, algorithm))
    return reports


def fft_weight(B: int, R: int) -> Fraction:
    """Per-target weight of the counted radix-2 upsampling engine: the full
    grid tally (R*B/2)*log2 B spread over the (R-1)*B produced tones."""
    if B < 1 or R < 2 or B & (B - 1) or R & (R - 1):
        raise ParameterError(f"need power-of-two B and R >= 2, got B={B}, R={R}")
    total = Fraction(R * B, 2) * int(math.log2(B)) if B > 1 else Fraction(0)
    return total / ((R - 1) * B)


def fir_weight(b_prime: int, real_taps: bool = True) -> Fraction:
    """Per-target weight of a B'-tap filter bank under dedicated-multiplier
    weighting (half the taps fall to conjugate symmetry)."""
    if b_prime < 1:
        raise ParameterError(f"b_prime must be positive, got {b_prime}")
    chi = CHI_R if real_taps else CHI_C
    return chi * Fraction(b_prime, 2)


# Reference operating points for the two antenna setups: one counted-FFT row
# and a ladder of filter lengths, all at L=15, N=D=512, c_ip_h=2. v1_prime
# records the asymmetric design split used by the truncated filters.
TABLE2_SETUPS: tuple[dict, ...] = (
    {"m_t": 2, "m_r": 4, "fft": (64, 8), "ladder": (64, 32, 16, 12, 8),
     "v1_prime": {32: 27, 16: 25, 12: 23, 8: 21}},
    {"m_t": 4, "m_r": 4, "fft": (128, 4), "ladder": (128, 32, 24, 16, 8),
     "v1_prime": {}},
)


def table2_rows() -> list[dict]:
    """Single-step vs per-tone cost ratios at the reference operating
    points. Every filter row uses the real-tap weight chi_R/2 per tap, the
    counted-FFT rows their exact per-target tallies."""
    rows: list[dict] = []
    for setup in TABLE2_SETUPS:
        mt, mr = setup["m_t"], setup["m_r"]
        entries: list[tuple[str, int | None, Fraction]] = []
        fB, fR = setup["fft"]
        entries.append(("fft", None, fft_weight(fB, fR)))
        for bp in setup["ladder"]:
            entries.append(("fir", bp, fir_weight(bp, real_taps=True)))
        for engine, b_prime, c in entries:
            params = CostParams(
                m_t=mt, m_r=mr, L=15, N=512, D=512, c_ip_h=Fraction(2),
                c_ip_qr=c, schedule="pow2",
            )
            rep_i = total_cost(params, "I")
            rep_ii = total_cost(params, "II")
            ratio = rep_ii.total / rep_i.total
            rows.append(
                {
                    "m_t": mt, "m_r": mr, "L": 15, "N": 512, "D": 512,
                    "engine": engine, "b_prime": b_prime,
                    "c_ip_qr": c,
                    "v1_prime": setup["v1_prime"].get(b_prime),
                    "total_I": rep_i.total, "total_II": rep_ii.total,
                    "ratio_vs_I": ratio,
                    "ratio_2dp": round_half_even(ratio),
                }
            )
    return rows
