"""Tone-grid orchestration of the per-tone, single-step, and multi-step
QR pipelines, plus their regularized (MMSE) counterparts.

The flow shared by all variants: channel samples are known at a small set
of tones, factors are computed directly at base tones, scaled into their
polynomial form, interpolated across the remaining data tones, and
unscaled there. The multi-step variant nests base sets so early columns
travel on smaller sets; the regularized variants stack an alpha*I block
under the channel before decomposing.

Every routine accepts an optional MultCounter and reports its work in
full-multiplication units as it goes, which is what the cost model's
cross-check keys on.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import interp as interp_mod
from . import lpmat
from .cost import KIND_MMSE_AUG, KIND_MMSE_REG, KIND_ZF, qr_cost
from .errors import (
    InfeasibleError,
    MissingDataError,
    ParameterError,
    UnsupportedRegimeError,
)
from .instrument import (
    MultCounter,
    active,
    demap_charge,
    map_charge,
    reduction_charge,
)
from .lpmap import MappedFactors, assemble, map_forward, map_inverse
from .qr import (
    KIND_REGULARIZED,
    KIND_UT,
    QRFactors,
    augmented_qr,
    givens_qr,
    regularized_qr,
)

__all__ = [
    "Engine",
    "PerToneFactors",
    "ToneSets",
    "algorithm_I",
    "algorithm_II",
    "algorithm_III",
    "algorithm_I_mmse",
    "algorithm_II_mmse",
    "algorithm_III_mmse",
    "build_tone_sets",
]


# ---------------------------------------------------------------------------
# tone bookkeeping


@dataclass(frozen=True)
class ToneSets:
    """Index sets of one OFDM grid: data tones, channel-sample tones, and
    the nested base sets (one per transmit stream).

    known_tones carry channel samples (at least L+1 of them); base_sets[k-1]
    is where stage k computes factors directly, each a superset of the one
    before it and contained in the data set.
    """

    N: int
    L: int
    data_tones: tuple[int, ...]
    known_tones: tuple[int, ...]
    base_sets: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        if self.N < 1 or self.L < 0:
            raise ParameterError(f"bad grid: N={self.N}, L={self.L}")
        for name in ("data_tones", "known_tones"):
            idx = getattr(self, name)
            object.__setattr__(self, name, tuple(int(n) for n in idx))
            idx = getattr(self, name)
            if len(set(idx)) != len(idx) or list(idx) != sorted(idx):
                raise ParameterError(f"{name} must be sorted and distinct")
            if idx and (idx[0] < 0 or idx[-1] >= self.N):
                raise ParameterError(f"{name} outside the {self.N}-tone grid")
        if not self.data_tones:
            raise InfeasibleError("empty data tone set")
        if len(self.known_tones) < self.L + 1:
            raise InfeasibleError(
                f"need at least {self.L + 1} channel-sample tones, "
                f"got {len(self.known_tones)}"
            )
        sets = tuple(tuple(int(n) for n in s) for s in self.base_sets)
        object.__setattr__(self, "base_sets", sets)
        if not sets:
            raise ParameterError("need at least one base set")
        prev: frozenset[int] = frozenset()
        data = frozenset(self.data_tones)
        for k, s in enumerate(sets, start=1):
            if len(set(s)) != len(s) or list(s) != sorted(s):
                raise ParameterError(f"base set {k} must be sorted and distinct")
            if not prev <= frozenset(s):
                raise ParameterError(f"base set {k} does not contain base set {k - 1}")
            prev = frozenset(s)
        if not prev <= data:
            raise InfeasibleError("the largest base set must lie inside the data tones")

    @property
    def m_t(self) -> int:
        return len(self.base_sets)

    def base(self, k: int) -> tuple[int, ...]:
        if not 1 <= k <= self.m_t:
            raise ParameterError(f"stage {k} outside 1..{self.m_t}")
        return self.base_sets[k - 1]

    def size(self, k: int) -> int:
        return len(self.base(k))


def _next_pow2(n: int) -> int:
    return 1 << max(0, (n - 1).bit_length())


def _spread_pick(seq: Sequence[int], m: int) -> tuple[int, ...]:
    """m near-equidistant elements of seq, always including seq[0]."""
    n = len(seq)
    return tuple(seq[(j * n) // m] for j in range(m))


def build_tone_sets(
    N: int,
    D: int | Iterable[int],
    L: int,
    M_T: int,
    mode: str = "pow2",
    *,
    known_tones: Iterable[int] | None = None,
    offset: int = 0,
) -> ToneSets:
    """Construct nested base sets over the data tones.

    pow2 mode places 2^ceil(log2(2kL+1)) equidistant tones per stage,
    anchored at ``offset`` with stride N/B_k, so every set is a subgrid of
    the next. exact_minimal places the bare minimum 2kL+1 tones per stage
    as near-equidistant nested picks from the data set; those sizes match
    the cost model's minimal schedule but the spacing is only as regular
    as the data set allows. D may be a tone count (meaning tones 0..D-1)
    or an explicit index set.
    """
    if M_T < 1:
        raise ParameterError(f"M_T must be positive, got {M_T}")
    if L < 0:
        raise ParameterError(f"L must be nonnegative, got {L}")
    if isinstance(D, int):
        data = tuple(range(D))
    else:
        data = tuple(sorted({int(n) for n in D}))
    if not data:
        raise InfeasibleError("empty data tone set")

    if known_tones is None:
        if N < L + 1:
            raise InfeasibleError(f"grid of {N} tones cannot carry {L + 1} samples")
        known = tuple(sorted({(j * N) // (L + 1) for j in range(L + 1)}))
    else:
        known = tuple(sorted({int(n) for n in known_tones}))

    sizes = [2 * k * L + 1 for k in range(1, M_T + 1)]
    if mode == "pow2":
        sizes = [_next_pow2(b) for b in sizes]
        if sizes[-1] > N:
            raise InfeasibleError(
                f"pow2 base set of {sizes[-1]} tones exceeds the {N}-tone grid"
            )
        bases = []
        data_set = frozenset(data)
        for b in sizes:
            stride = N // b
            tones = tuple(sorted((offset + j * stride) % N for j in range(b)))
            bases.append(tones)
        if not frozenset(bases[-1]) <= data_set:
            raise InfeasibleError(
                "pow2 base tones fall outside the data set; use exact_minimal "
                "or enlarge the data set"
            )
    elif mode == "exact_minimal":
        if offset:
            raise ParameterError("offset applies to the pow2 schedule only")
        if sizes[-1] > len(data):
            raise InfeasibleError(
                f"minimal schedule needs {sizes[-1]} data tones, got {len(data)}"
            )
        picks: list[tuple[int, ...]] = [_spread_pick(data, sizes[-1])]
        for b in reversed(sizes[:-1]):
            picks.append(_spread_pick(picks[-1], b))
        bases = list(reversed(picks))
    else:
        raise ParameterError(f"unknown mode {mode!r}")

    return ToneSets(
        N=N, L=L, data_tones=data, known_tones=known, base_sets=tuple(bases)
    )


# ---------------------------------------------------------------------------
# engines


_ENGINE_KINDS = ("direct", "fft", "fir")


@dataclass(frozen=True)
class Engine:
    """Interpolation engine selection.

    direct fits coefficients through the source tones and evaluates them;
    fft routes through the counted radix-2 upsampler (full power-of-two
    grids only); fir applies a B'-tap circulant filter bank, optionally
    with an asymmetric degree window (v1, v2) chosen by the truncated-
    design search.
    """

    kind: str = "direct"
    b_prime: int | None = None
    v1: int | None = None
    v2: int | None = None

    def __post_init__(self) -> None:
        if self.kind not in _ENGINE_KINDS:
            raise ParameterError(f"unknown engine kind {self.kind!r}")
        if self.b_prime is not None and self.kind != "fir":
            raise ParameterError("b_prime applies to the fir engine only")
        if (self.v1 is None) != (self.v2 is None):
            raise ParameterError("v1 and v2 must be overridden together")

    @property
    def exact_default(self) -> bool:
        """Whether the engine interpolates exactly when the base set is
        large enough and no truncation was requested."""
        return self.kind in ("direct", "fft") and self.v1 is None


def _engine(spec: "Engine | str | None") -> Engine:
    if spec is None:
        return Engine()
    if isinstance(spec, Engine):
        return spec
    if isinstance(spec, str):
        return Engine(kind=spec)
    raise ParameterError(f"cannot interpret engine spec {spec!r}")


def _tone_points(idx: Sequence[int], N: int) -> np.ndarray:
    return np.exp(2j * np.pi * np.asarray(idx, dtype=float) / N)


def _interp_values(
    values: np.ndarray,
    source: Sequence[int],
    targets: Sequence[int],
    N: int,
    v1: int,
    v2: int,
    engine: Engine,
    counter: MultCounter,
    task: str,
) -> np.ndarray:
    """Carry (|source|, n_seq) sampled sequences of degrees (v1, v2) to the
    target tones, charging the counter per the engine's cost convention."""
    values = np.asarray(values, dtype=complex)
    if values.shape[0] != len(source):
        raise ParameterError(
            f"got {values.shape[0]} sample rows for {len(source)} source tones"
        )
    n_seq = values.shape[1]
    if not targets:
        return np.zeros((0, n_seq), dtype=complex)

    if engine.kind == "direct":
        span = v1 + v2 + 1
        if len(source) < span:
            raise InfeasibleError(
                f"direct engine needs {span} source tones for degrees "
                f"({v1}, {v2}), got {len(source)}"
            )
        fit = lpmat.fit_from_samples(
            _tone_points(source, N), values[:, None, :], v1, v2
        )
        out = lpmat.eval_many(fit, _tone_points(targets, N))[:, 0, :]
        counter.add(task, n_seq * len(targets) * len(source))
        return out

    B = len(source)
    if N % B or (N // B) < 2:
        raise UnsupportedRegimeError(
            f"{engine.kind} engine needs an equidistant base grid dividing "
            f"the {N}-tone grid, got {B} source tones"
        )
    R = N // B
    expected = tuple(j * R for j in range(B))
    if tuple(source) != expected:
        raise UnsupportedRegimeError(
            f"{engine.kind} engine needs the anchored stride-{R} base grid"
        )
    off_base = [int(n) for n in range(N) if n % R]
    if engine.kind == "fft":
        if sorted(set(source) | set(targets)) != list(range(N)):
            raise UnsupportedRegimeError(
                "fft engine requires the full power-of-two grid; "
                "interpolate a tone subset with the direct engine"
            )
        span = v1 + v2 + 1
        if B < span:
            raise InfeasibleError(
                f"fft engine needs {span} base tones for degrees ({v1}, {v2})"
            )
        grid = interp_mod.EquidistantGrid.upsampling(B, R)
        out_full, count = interp_mod.upsample_fft(values, grid, v1, v2)
        counter.add(task, n_seq * count)
        pos = {n: i for i, n in enumerate(off_base)}
        return out_full[[pos[int(n)] for n in targets]]

    # fir
    dv1, dv2 = (engine.v1, engine.v2) if engine.v1 is not None else (v1, v2)
    grid = interp_mod.EquidistantGrid.upsampling(B, R)
    design = interp_mod.fir_design(grid, dv1, dv2, B_prime=engine.b_prime)
    out_full = interp_mod.fir_apply(design, values)
    counter.add(task, n_seq * len(targets) * design.mult_count_per_target)
    pos = {n: i for i, n in enumerate(off_base)}
    return out_full[[pos[int(n)] for n in targets]]


# ---------------------------------------------------------------------------
# channel access


class _ChannelCtx:
    """Channel values anywhere on the grid, from the known-tone samples.

    Tones in the known set are served from the samples verbatim; others
    come from the fitted transfer matrix (or an engine, when the known set
    happens to be an anchored subgrid). Fitting is lazy so runs whose data
    tones are all known never build it.
    """

    def __init__(
        self,
        tones: ToneSets,
        h_samples: np.ndarray,
        engine: Engine,
        counter: MultCounter,
        retained: bool = True,
    ) -> None:
        self.tones = tones
        self.h = h_samples if retained else None
        self.engine = engine
        self.counter = counter
        self._pos = {n: i for i, n in enumerate(tones.known_tones)}
        self._shape = h_samples.shape

    def block(
        self, wanted: Sequence[int], col0: int = 0, task: str = "interp_H"
    ) -> np.ndarray:
        if self.h is None:
            raise MissingDataError(
                "channel samples were discarded (retain_e_samples=False); "
                "rank recovery and late channel reads need them"
            )
        _, P, M = self._shape
        ncol = M - col0
        out = np.empty((len(wanted), P, ncol), dtype=complex)
        missing = [n for n in wanted if n not in self._pos]
        for i, n in enumerate(wanted):
            if n in self._pos:
                out[i] = self.h[self._pos[n], :, col0:]
        if missing:
            flat = self.h[:, :, col0:].reshape(len(self.tones.known_tones), -1)
            vals = _interp_values(
                flat,
                self.tones.known_tones,
                missing,
                self.tones.N,
                0,
                self.tones.L,
                self.engine,
                self.counter,
                task,
            )
            lookup = {n: t for t, n in enumerate(missing)}
            for i, n in enumerate(wanted):
                if n in lookup:
                    out[i] = vals[lookup[n]].reshape(P, ncol)
        return out


# ---------------------------------------------------------------------------
# results


@dataclass
class PerToneFactors:
    """Factors for every data tone, plus whatever the run retained."""

    algorithm: str
    tones: ToneSets
    factors: dict[int, QRFactors]
    mapped: dict[int, MappedFactors] | None = None
    stacked_bottom: dict[int, np.ndarray] | None = None
    counter: MultCounter | None = None

    def __getitem__(self, n: int) -> QRFactors:
        return self.factors[n]

    def __len__(self) -> int:
        return len(self.factors)

    def __iter__(self):
        return iter(sorted(self.factors))


# ---------------------------------------------------------------------------
# shared pieces


def _validate_h(h_samples: np.ndarray, tones: ToneSets) -> np.ndarray:
    h = np.asarray(h_samples, dtype=complex)
    if h.ndim != 3 or h.shape[0] != len(tones.known_tones):
        raise ParameterError(
            f"expected ({len(tones.known_tones)}, P, M) channel samples, "
            f"got shape {h.shape}"
        )
    P, M = h.shape[1], h.shape[2]
    if M != tones.m_t:
        raise ParameterError(
            f"channel has {M} columns but the tone sets cover {tones.m_t} stages"
        )
    if P < M:
        raise ParameterError(f"need at least as many rows as columns, got {P}x{M}")
    return h


def _apply_order(h: np.ndarray, order) -> np.ndarray:
    if order is None:
        return h
    if callable(order):
        raise ParameterError(
            "per-tone column orderings are not supported: factors of a "
            "reordered system stop being samples of one polynomial matrix, "
            "so there is nothing coherent to interpolate; pass a single "
            "fixed permutation instead"
        )
    arr = np.asarray(order)
    if arr.ndim != 1:
        raise ParameterError(
            "per-tone column orderings are not supported: factors of a "
            "reordered system stop being samples of one polynomial matrix; "
            "pass a single fixed permutation instead"
        )
    M = h.shape[2]
    if sorted(int(x) for x in arr) != list(range(M)):
        raise ParameterError(f"column_order must permute 0..{M - 1}, got {arr}")
    return h[:, :, arr.astype(int)]


def _require_exact_capacity(engine: Engine, B: int, span: int, what: str) -> None:
    if engine.exact_default and B < span:
        raise InfeasibleError(
            f"{what}: base set of {B} tones cannot carry degree span {span}; "
            "enlarge it or choose a truncated fir engine explicitly"
        )


def _demap_tone(
    mapped: MappedFactors,
    hctx: _ChannelCtx,
    n: int,
    counter: MultCounter,
    P: int,
    M: int,
    clamp_negative: bool = False,
) -> QRFactors:
    """Unscale one tone's interpolated factors, recovering trailing columns
    from fresh channel values when the scaled diagonal collapses.

    Truncated engines can push an interpolated scaled diagonal below zero
    on badly conditioned channels; the true value is nonnegative, so with
    clamp_negative such entries are floored at zero, which lands them in
    the rank detector and routes the tone through the recovery path."""
    if clamp_negative:
        d = np.real(np.diag(mapped.Rtilde))
        if np.any(d < 0.0):
            Rt = mapped.Rtilde.copy()
            neg = np.where(d < 0.0)[0]
            Rt[neg, neg] = 0.0
            mapped = assemble(
                mapped.Qtilde, Rt, mapped.start_col, mapped.delta_prefix
            )
    counter.add("demap", demap_charge(P, M, M))
    try:
        return map_inverse(mapped)
    except MissingDataError as err:
        K = getattr(err, "rank", 0)
        tail = hctx.block([n], col0=K, task="fallback")[0]
        counter.add("fallback", qr_cost(P, M - K) if M - K <= P else 0)
        return map_inverse(mapped, residual_matrix=tail)


# ---------------------------------------------------------------------------
# the per-tone baseline


def algorithm_I(
    h_samples: np.ndarray,
    tones: ToneSets,
    *,
    engine_h: Engine | str | None = None,
    counter: MultCounter | None = None,
    column_order=None,
) -> PerToneFactors:
    """Direct decomposition at every data tone.

    Channel values at tones outside the known set come from the fitted
    transfer matrix; when every data tone is known no interpolation happens
    at all and the counter shows zero interp_H work.
    """
    c = active(counter)
    h = _apply_order(_validate_h(h_samples, tones), column_order)
    P, M = h.shape[1], h.shape[2]
    hctx = _ChannelCtx(tones, h, _engine(engine_h), c)
    H = hctx.block(tones.data_tones)
    out: dict[int, QRFactors] = {}
    for i, n in enumerate(tones.data_tones):
        out[n] = givens_qr(H[i])
        c.add("qr", qr_cost(P, M, KIND_ZF))
    return PerToneFactors("I", tones, out, counter=counter)


def algorithm_I_mmse(
    h_samples: np.ndarray,
    tones: ToneSets,
    sigma_w: float,
    *,
    engine_h: Engine | str | None = None,
    counter: MultCounter | None = None,
    column_order=None,
) -> PerToneFactors:
    """Regularized decomposition at every data tone; sigma_w = 0 falls back
    to the plain variant (its exact limit)."""
    if sigma_w < 0:
        raise ParameterError(f"sigma_w must be nonnegative, got {sigma_w}")
    if sigma_w == 0:
        return algorithm_I(
            h_samples, tones, engine_h=engine_h, counter=counter,
            column_order=column_order,
        )
    c = active(counter)
    h = _apply_order(_validate_h(h_samples, tones), column_order)
    P, M = h.shape[1], h.shape[2]
    alpha = float(np.sqrt(M) * sigma_w)
    hctx = _ChannelCtx(tones, h, _engine(engine_h), c)
    H = hctx.block(tones.data_tones)
    out: dict[int, QRFactors] = {}
    for i, n in enumerate(tones.data_tones):
        out[n] = regularized_qr(H[i], alpha)
        c.add("qr", qr_cost(P, M, KIND_MMSE_REG))
    return PerToneFactors("I_MMSE", tones, out, counter=counter)


# ---------------------------------------------------------------------------
# the single-step pipeline


def _single_step(
    h_samples: np.ndarray,
    tones: ToneSets,
    *,
    engine_h,
    engine_qr,
    counter,
    retain_mapped,
    retain_e_samples,
    column_order,
    sigma_w: float | None,
) -> PerToneFactors:
    c = active(counter)
    eng_h, eng_q = _engine(engine_h), _engine(engine_qr)
    h = _apply_order(_validate_h(h_samples, tones), column_order)
    P, M = h.shape[1], h.shape[2]
    L = tones.L
    base = tones.base(M)
    B = len(base)
    _require_exact_capacity(eng_q, B, 2 * M * L + 1, "single-step pipeline")

    hctx = _ChannelCtx(tones, h, eng_h, c)
    Hb = hctx.block(base)
    out: dict[int, QRFactors] = {}
    kept: dict[int, MappedFactors] = {}
    seqs = np.empty((B, P * M + M * (M + 1) // 2), dtype=complex)
    alpha = None if sigma_w is None else float(np.sqrt(M) * sigma_w)
    for i, n in enumerate(base):
        if alpha is None:
            fac = givens_qr(Hb[i])
            c.add("qr", qr_cost(P, M, KIND_ZF))
        else:
            fac = regularized_qr(Hb[i], alpha)
            c.add("qr", qr_cost(P, M, KIND_MMSE_REG))
        out[n] = fac
        mp = map_forward(fac)
        c.add("map", map_charge(P, M, 1))
        seqs[i] = interp_mod._pack_mapped(mp.Qtilde, mp.Rtilde)
        if retain_mapped:
            kept[n] = mp

    base_set = frozenset(base)
    targets = [n for n in tones.data_tones if n not in base_set]
    hctx.h = h if retain_e_samples else None
    vals = _interp_values(
        seqs, base, targets, tones.N, M * L, M * L, eng_q, c, "interp_QR"
    )
    for t, n in enumerate(targets):
        Qt, Rt = interp_mod._unpack_mapped(vals[t], P, M)
        mp = assemble(Qt, Rt)
        fac = _demap_tone(mp, hctx, n, c, P, M, not eng_q.exact_default)
        if alpha is not None:
            fac = QRFactors(Q=fac.Q, R=fac.R, kind=KIND_REGULARIZED, alpha=alpha)
        out[n] = fac
        if retain_mapped:
            kept[n] = mp
    name = "II" if sigma_w is None else "II_MMSE"
    return PerToneFactors(
        name, tones, out, mapped=kept if retain_mapped else None, counter=counter
    )


def algorithm_II(
    h_samples: np.ndarray,
    tones: ToneSets,
    *,
    engine_h: Engine | str | None = None,
    engine_qr: Engine | str | None = None,
    counter: MultCounter | None = None,
    retain_mapped: bool = False,
    retain_e_samples: bool = True,
    column_order=None,
) -> PerToneFactors:
    """Decompose at the last base set, scale, interpolate everywhere else,
    unscale. Exact engines reproduce the per-tone baseline wherever the
    base set is large enough for the factor degrees; truncated fir engines
    trade accuracy for shorter filters."""
    return _single_step(
        h_samples,
        tones,
        engine_h=engine_h,
        engine_qr=engine_qr,
        counter=counter,
        retain_mapped=retain_mapped,
        retain_e_samples=retain_e_samples,
        column_order=column_order,
        sigma_w=None,
    )


def algorithm_II_mmse(
    h_samples: np.ndarray,
    tones: ToneSets,
    sigma_w: float,
    *,
    engine_h: Engine | str | None = None,
    engine_qr: Engine | str | None = None,
    counter: MultCounter | None = None,
    retain_mapped: bool = False,
    retain_e_samples: bool = True,
    column_order=None,
) -> PerToneFactors:
    """Single-step pipeline on the regularized decomposition; only the top
    P rows of the stacked orthogonal factor are scaled and interpolated.
    sigma_w = 0 falls back to the plain variant."""
    if sigma_w < 0:
        raise ParameterError(f"sigma_w must be nonnegative, got {sigma_w}")
    if sigma_w == 0:
        return algorithm_II(
            h_samples, tones, engine_h=engine_h, engine_qr=engine_qr,
            counter=counter, retain_mapped=retain_mapped,
            retain_e_samples=retain_e_samples, column_order=column_order,
        )
    return _single_step(
        h_samples,
        tones,
        engine_h=engine_h,
        engine_qr=engine_qr,
        counter=counter,
        retain_mapped=retain_mapped,
        retain_e_samples=retain_e_samples,
        column_order=column_order,
        sigma_w=sigma_w,
    )


# ---------------------------------------------------------------------------
# the multi-step pipeline


def algorithm_III(
    h_samples: np.ndarray,
    tones: ToneSets,
    *,
    engine_h: Engine | str | None = None,
    engine_qr: Engine | str | None = None,
    counter: MultCounter | None = None,
    retain_mapped: bool = False,
    retain_e_samples: bool = True,
    column_order=None,
) -> PerToneFactors:
    """Column-by-column pipeline over nested base sets.

    Stage k decomposes only the reduced block of columns k..M at the tones
    new to its base set, after cancelling the first k-1 columns recovered
    from interpolated values; each stage then sends one scaled column and
    one scaled row out to the rest of the grid. Per-stage degrees grow as
    (kL, kL), which is exactly why the nested sets can shrink.
    """
    c = active(counter)
    eng_h, eng_q = _engine(engine_h), _engine(engine_qr)
    h = _apply_order(_validate_h(h_samples, tones), column_order)
    P, M = h.shape[1], h.shape[2]
    L = tones.L
    N = tones.N
    data = tones.data_tones
    dpos = {n: i for i, n in enumerate(data)}
    for k in range(1, M + 1):
        _require_exact_capacity(
            eng_q, tones.size(k), 2 * k * L + 1, f"multi-step stage {k}"
        )

    hctx = _ChannelCtx(tones, h, eng_h, c)
    Qt = np.zeros((len(data), P, M), dtype=complex)
    Rt = np.zeros((len(data), M, M), dtype=complex)
    out: dict[int, QRFactors] = {}
    kept: dict[int, MappedFactors] = {}
    covered: set[int] = set()

    for k in range(1, M + 1):
        Ik = tones.base(k)
        new = [n for n in Ik if n not in covered]
        Hk = hctx.block(new, col0=k - 1)
        for t, n in enumerate(new):
            i = dpos[n]
            if k == 1:
                fac = givens_qr(Hk[t])
                c.add("qr", qr_cost(P, M, KIND_ZF))
                out[n] = fac
                mp = map_forward(fac)
                c.add("map", map_charge(P, M, 1))
                Qt[i] = mp.Qtilde
                Rt[i] = mp.Rtilde
            else:
                pre = assemble(Qt[i][:, : k - 1], Rt[i][: k - 1, :])
                fpre = map_inverse(pre)
                c.add("demap", demap_charge(P, M, k - 1))
                red = Hk[t] - fpre.Q @ fpre.R[:, k - 1 :]
                c.add("reduction", reduction_charge(P, k, M - k + 1))
                fac = givens_qr(red)
                c.add("qr", qr_cost(P, M - k + 1, KIND_ZF))
                delta_prev = max(float(Rt[i][k - 2, k - 2].real), 0.0)
                mp = map_forward(fac, start_col=k, delta_prefix=delta_prev)
                c.add("map", map_charge(P, M, k))
                Qt[i][:, k - 1 :] = mp.Qtilde
                Rt[i][k - 1 :, k - 1 :] = mp.Rtilde
                Q = np.concatenate([fpre.Q, fac.Q], axis=1)
                R = np.zeros((M, M), dtype=complex)
                R[: k - 1, :] = fpre.R
                R[k - 1 :, k - 1 :] = fac.R
                out[n] = QRFactors(Q=Q, R=R, kind=KIND_UT)
        covered.update(Ik)

        targets = [n for n in data if n not in covered]
        if targets:
            src = [dpos[n] for n in Ik]
            seqs = np.concatenate(
                [Qt[src][:, :, k - 1], Rt[src][:, k - 1, k - 1 :]], axis=1
            )
            vals = _interp_values(
                seqs, Ik, targets, N, k * L, k * L, eng_q, c, "interp_QR"
            )
            tpos = [dpos[n] for n in targets]
            Qt[tpos, :, k - 1] = vals[:, :P]
            Rt[tpos, k - 1, k - 1 :] = vals[:, P:]

    hctx.h = h if retain_e_samples else None
    for n in data:
        if n in covered:
            continue
        i = dpos[n]
        mp = assemble(Qt[i], Rt[i])
        out[n] = _demap_tone(mp, hctx, n, c, P, M, not eng_q.exact_default)
        if retain_mapped:
            kept[n] = mp
    if retain_mapped:
        for n in covered:
            i = dpos[n]
            kept[n] = assemble(Qt[i], Rt[i])
    return PerToneFactors(
        "III", tones, out, mapped=kept if retain_mapped else None, counter=counter
    )


def algorithm_III_mmse(
    h_samples: np.ndarray,
    tones: ToneSets,
    sigma_w: float,
    *,
    engine_h: Engine | str | None = None,
    engine_qr: Engine | str | None = None,
    counter: MultCounter | None = None,
    retain_mapped: bool = False,
    retain_e_samples: bool = True,
    column_order=None,
) -> PerToneFactors:
    """Multi-step pipeline on the stacked regularized system.

    Inside the last base set the stacked bottom rows of each scaled column
    travel along (they feed later reduction steps there); outside it only
    the top P rows and the scaled rows are ever interpolated, and the
    stacked part of the final stage's column is never produced at all.
    sigma_w = 0 falls back to the plain variant.
    """
    if sigma_w < 0:
        raise ParameterError(f"sigma_w must be nonnegative, got {sigma_w}")
    if sigma_w == 0:
        return algorithm_III(
            h_samples, tones, engine_h=engine_h, engine_qr=engine_qr,
            counter=counter, retain_mapped=retain_mapped,
            retain_e_samples=retain_e_samples, column_order=column_order,
        )
    c = active(counter)
    eng_h, eng_q = _engine(engine_h), _engine(engine_qr)
    h = _apply_order(_validate_h(h_samples, tones), column_order)
    P, M = h.shape[1], h.shape[2]
    L = tones.L
    N = tones.N
    alpha = float(np.sqrt(M) * sigma_w)
    data = tones.data_tones
    dpos = {n: i for i, n in enumerate(data)}
    base_last = frozenset(tones.base(M))
    for k in range(1, M + 1):
        _require_exact_capacity(
            eng_q, tones.size(k), 2 * k * L + 1, f"multi-step stage {k}"
        )

    hctx = _ChannelCtx(tones, h, eng_h, c)
    Qt = np.zeros((len(data), P, M), dtype=complex)
    Rt = np.zeros((len(data), M, M), dtype=complex)
    # stacked bottom rows, kept only where the last base set needs them
    Qc: dict[int, np.ndarray] = {n: np.zeros((M, M), complex) for n in base_last}
    out: dict[int, QRFactors] = {}
    kept: dict[int, MappedFactors] = {}
    covered: set[int] = set()
    eye = np.eye(M, dtype=complex)

    for k in range(1, M + 1):
        Ik = tones.base(k)
        new = [n for n in Ik if n not in covered]
        Hk = hctx.block(new, col0=k - 1)
        rows = P + M if k < M else P
        for t, n in enumerate(new):
            i = dpos[n]
            if k == 1:
                fac = augmented_qr(Hk[t], alpha)
                c.add("qr", qr_cost(P, M, KIND_MMSE_AUG))
                Q_top = fac.Q[:P]
                out[n] = QRFactors(
                    Q=Q_top, R=fac.R, kind=KIND_REGULARIZED, alpha=alpha
                )
                src = fac.Q if k < M else Q_top
                mp = map_forward(QRFactors(Q=src, R=fac.R, kind=KIND_UT))
                c.add("map", map_charge(rows, M, 1))
                Qt[i] = mp.Qtilde[:P]
                if k < M:
                    Qc[n][:, :] = mp.Qtilde[P:]
                Rt[i] = mp.Rtilde
            else:
                Qbar = np.concatenate([Qt[i][:, : k - 1], Qc[n][:, : k - 1]], axis=0)
                pre = assemble(Qbar, Rt[i][: k - 1, :])
                fpre = map_inverse(pre)
                c.add("demap", demap_charge(P + M, M, k - 1))
                Hbar = np.concatenate([Hk[t], alpha * eye[:, k - 1 :]], axis=0)
                red = Hbar - fpre.Q @ fpre.R[:, k - 1 :]
                c.add("reduction", reduction_charge(P + M, k, M - k + 1))
                fac = givens_qr(red)
                c.add("qr", qr_cost(P + M, M - k + 1, KIND_ZF))
                delta_prev = max(float(Rt[i][k - 2, k - 2].real), 0.0)
                src = fac.Q if k < M else fac.Q[:P]
                mp = map_forward(
                    QRFactors(Q=src, R=fac.R, kind=KIND_UT),
                    start_col=k,
                    delta_prefix=delta_prev,
                )
                c.add("map", map_charge(rows, M, k))
                Qt[i][:, k - 1 :] = mp.Qtilde[:P]
                if k < M:
                    Qc[n][:, k - 1 :] = mp.Qtilde[P:]
                Rt[i][k - 1 :, k - 1 :] = mp.Rtilde
                Q = np.concatenate([fpre.Q[:P], fac.Q[:P]], axis=1)
                R = np.zeros((M, M), dtype=complex)
                R[: k - 1, :] = fpre.R
                R[k - 1 :, k - 1 :] = fac.R
                out[n] = QRFactors(Q=Q, R=R, kind=KIND_REGULARIZED, alpha=alpha)
        covered.update(Ik)

        targets = [n for n in data if n not in covered]
        if targets:
            src_idx = [dpos[n] for n in Ik]
            seqs = np.concatenate(
                [Qt[src_idx][:, :, k - 1], Rt[src_idx][:, k - 1, k - 1 :]], axis=1
            )
            vals = _interp_values(
                seqs, Ik, targets, N, k * L, k * L, eng_q, c, "interp_QR"
            )
            tpos = [dpos[n] for n in targets]
            Qt[tpos, :, k - 1] = vals[:, :P]
            Rt[tpos, k - 1, k - 1 :] = vals[:, P:]
        if k < M:
            check_targets = [n for n in tones.base(M) if n not in covered]
            if check_targets:
                csrc = np.stack([Qc[n][:, k - 1] for n in Ik])
                cvals = _interp_values(
                    csrc, Ik, check_targets, N, k * L, k * L, eng_q, c, "interp_QR"
                )
                for t, n in enumerate(check_targets):
                    Qc[n][:, k - 1] = cvals[t]

    for n in data:
        if n in covered:
            continue
        i = dpos[n]
        mp = assemble(Qt[i], Rt[i])
        c.add("demap", demap_charge(P, M, M))
        f = map_inverse(mp)
        out[n] = QRFactors(Q=f.Q, R=f.R, kind=KIND_REGULARIZED, alpha=alpha)
        if retain_mapped:
            kept[n] = mp
    return PerToneFactors(
        "III_MMSE",
        tones,
        out,
        mapped=kept if retain_mapped else None,
        stacked_bottom=Qc,
        counter=counter,
    )


ALGORITHM_FUNCS = {
    "I": algorithm_I,
    "II": algorithm_II,
    "III": algorithm_III,
    "I_MMSE": algorithm_I_mmse,
    "II_MMSE": algorithm_II_mmse,
    "III_MMSE": algorithm_III_mmse,
}
