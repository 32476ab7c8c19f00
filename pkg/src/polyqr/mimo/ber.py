"""Monte Carlo bit-error-rate measurement of the per-tone factor pipelines.

One trial draws a channel, runs the selected preprocessing algorithm and
engine over the tone grid, transmits random (optionally convolutionally
coded and interleaved) 16-QAM symbols across all data tones, and detects
from the triangularized statistic. Noise is drawn once per (trial, tone)
and rescaled per SNR point, so curves at different SNRs and under
different engines share their randomness: with the same seed, two runs
differ only through their factors, which makes engine comparisons paired.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..algos import ALGORITHM_FUNCS, Engine, ToneSets, build_tone_sets
from ..errors import ParameterError
from . import detect, modem
from .channel import draw_channel
from ..lpmat import eval_many, tone_point

BITS_PER_SYMBOL = 4  # 16-QAM


@dataclass(frozen=True)
class SimConfig:
    """Everything one BER experiment depends on, seed included."""

    m_t: int
    m_r: int
    L: int
    N: int
    D: int
    snrs_db: tuple[float, ...]
    algorithm: str = "I"
    engine_qr: Engine | str = "direct"
    engine_h: Engine | str = "direct"
    schedule: str = "pow2"
    detector: str = "auto"
    coded: bool = False
    seed: int = 0
    min_bits: int = 1_000_000
    min_errors: int = 200
    max_bits: int | None = None
    n_symbols: int = 1

    def __post_init__(self) -> None:
        if self.algorithm not in ALGORITHM_FUNCS:
            raise ParameterError(f"unknown algorithm {self.algorithm!r}")
        if self.detector not in ("auto", "ml", "sphere", "sc"):
            raise ParameterError(f"unknown detector {self.detector!r}")
        if not self.snrs_db:
            raise ParameterError("need at least one SNR point")
        if self.min_bits < 1 or self.min_errors < 0 or self.n_symbols < 1:
            raise ParameterError("bad stopping parameters")
        if self.max_bits is not None and self.max_bits < self.min_bits:
            raise ParameterError("max_bits below min_bits")
        object.__setattr__(self, "snrs_db", tuple(float(s) for s in self.snrs_db))


@dataclass(frozen=True)
class SNRPoint:
    snr_db: float
    bits: int
    errors: int

    @property
    def ber(self) -> float:
        return self.errors / self.bits if self.bits else float("nan")

    @property
    def ci(self) -> tuple[float, float]:
        return wilson_interval(self.errors, self.bits)


@dataclass(frozen=True)
class BERResult:
    config: SimConfig
    points: tuple[SNRPoint, ...]
    trials: int

    def point(self, snr_db: float) -> SNRPoint:
        for p in self.points:
            if p.snr_db == snr_db:
                return p
        raise KeyError(snr_db)


def wilson_interval(errors: int, bits: int, z: float = 1.959964) -> tuple[float, float]:
    """95% Wilson score interval for a binomial proportion."""
    if bits == 0:
        return (0.0, 1.0)
    p = errors / bits
    z2 = z * z
    denom = 1.0 + z2 / bits
    center = (p + z2 / (2 * bits)) / denom
    rad = z * np.sqrt(p * (1 - p) / bits + z2 / (4 * bits * bits)) / denom
    return (max(0.0, center - rad), min(1.0, center + rad))


def _sigma_for(snr_db: float) -> float:
    # per-antenna receive SNR 1/sigma^2 with unit total transmit energy
    return float(10.0 ** (-snr_db / 20.0))


def _factors_arrays(result, tones: ToneSets, P: int, M: int):
    """Stack per-tone Q and R into (D, P, M) and (D, M, M) in data order."""
    Q = np.empty((len(tones.data_tones), P, M), dtype=complex)
    R = np.empty((len(tones.data_tones), M, M), dtype=complex)
    for i, n in enumerate(tones.data_tones):
        f = result[n]
        Q[i] = f.Q
        R[i] = f.R
    return Q, R


def _detect_indices(cfg: SimConfig, R: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Candidate-grid indices (T, S) for stacked statistics (T, S, M)."""
    det = cfg.detector
    if det == "auto":
        det = "ml" if cfg.m_t <= 2 else "sphere"
    if det == "ml":
        return detect.ml_tone_batch(R, z, cfg.m_t)
    if det == "sphere":
        T, S, _ = z.shape
        out = np.empty((T, S), dtype=np.int64)
        for t in range(T):
            for s in range(S):
                out[t, s] = detect.sphere_detect(R[t], z[t, s], cfg.m_t)
        return out
    idx, _flags = detect.sc_detect(R[:, None, :, :], z, cfg.m_t)
    return detect.symbols_to_grid_index(idx)


def ber_experiment(cfg: SimConfig) -> BERResult:
    """Run the experiment described by cfg and return per-SNR counts.

    Trials accumulate until every SNR point holds min_bits; a point keeps
    collecting past the floor only while its error count is below
    min_errors and its bit count below max_bits. Coded runs decode in one
    batch per SNR point at the end (fixed bit budget, no error-based stop).
    """
    tones = build_tone_sets(cfg.N, cfg.D, cfg.L, cfg.m_t, cfg.schedule)
    D = len(tones.data_tones)
    M, P = cfg.m_t, cfg.m_r
    algo = ALGORITHM_FUNCS[cfg.algorithm]
    mmse = cfg.algorithm.endswith("MMSE")
    algo_kwargs = {"engine_h": cfg.engine_h}
    if cfg.algorithm not in ("I", "I_MMSE"):
        algo_kwargs["engine_qr"] = cfg.engine_qr

    coded_per_sym = D * M * BITS_PER_SYMBOL
    if cfg.coded:
        info_per_sym = coded_per_sym // 2 - 6
        if info_per_sym < 1:
            raise ParameterError("grid too small for one coded block")
    else:
        info_per_sym = coded_per_sym
    bits_per_trial = info_per_sym * cfg.n_symbols

    root = np.random.SeedSequence(cfg.seed)
    perm = modem.make_interleaver(
        coded_per_sym, np.random.default_rng(root.spawn(1)[0])
    )

    n_snr = len(cfg.snrs_db)
    sigmas = [_sigma_for(s) for s in cfg.snrs_db]
    bits_tally = np.zeros(n_snr, dtype=np.int64)
    err_tally = np.zeros(n_snr, dtype=np.int64)
    max_bits = cfg.max_bits if cfg.max_bits is not None else cfg.min_bits
    coded_store: list[list[np.ndarray]] = [[] for _ in range(n_snr)]
    info_store: list[np.ndarray] = []

    data_pts = [tone_point(n, cfg.N) for n in tones.data_tones]
    known_pts = [tone_point(n, cfg.N) for n in tones.known_tones]
    trials = 0
    while True:
        if cfg.coded:
            live = [bits_tally[0] < cfg.min_bits]
        else:
            live = [
                bits_tally[i] < cfg.min_bits
                or (err_tally[i] < cfg.min_errors and bits_tally[i] < max_bits)
                for i in range(n_snr)
            ]
        if not any(live):
            break
        rng = np.random.default_rng(root.spawn(1)[0])
        trials += 1

        lp = draw_channel(M, P, cfg.L, rng)
        h = eval_many(lp, known_pts)
        H_true = eval_many(lp, data_pts)  # (D, P, M)

        if cfg.coded:
            info = rng.integers(0, 2, (cfg.n_symbols, info_per_sym), dtype=np.uint8)
            coded = modem.conv_encode(info)
            tx_bits = modem.interleave(coded, perm)
        else:
            tx_bits = rng.integers(
                0, 2, (cfg.n_symbols, coded_per_sym), dtype=np.uint8
            )
        noise = (
            rng.standard_normal((cfg.n_symbols, D, P))
            + 1j * rng.standard_normal((cfg.n_symbols, D, P))
        ) / np.sqrt(2.0)

        sym_bits = tx_bits.reshape(cfg.n_symbols, D, M, BITS_PER_SYMBOL)
        x = modem.qam16_map(sym_bits) / np.sqrt(M)  # (S, D, M)
        y0 = np.einsum("dpm,sdm->sdp", H_true, x)

        if not mmse:
            res = algo(h, tones, **algo_kwargs)
            Q, R = _factors_arrays(res, tones, P, M)

        for i, sigma in enumerate(sigmas):
            if not cfg.coded and not live[i]:
                continue
            if mmse:
                res = algo(h, tones, sigma, **algo_kwargs)
                Q, R = _factors_arrays(res, tones, P, M)
            y = y0 + sigma * noise
            z = np.einsum("dpm,sdp->dsm", Q.conj(), y)
            idx = _detect_indices(cfg, R, z)  # (D, S)
            rx_bits = (
                detect.grid_index_to_bits(idx.T, M)
                .reshape(cfg.n_symbols, coded_per_sym)
            )
            if cfg.coded:
                coded_store[i].append(rx_bits)
            else:
                err_tally[i] += int(np.count_nonzero(rx_bits != tx_bits))
                bits_tally[i] += tx_bits.size
        if cfg.coded:
            info_store.append(info)
            bits_tally[:] += info.size

    if cfg.coded:
        info_all = np.concatenate(info_store, axis=0)
        bits_tally[:] = info_all.size
        for i in range(n_snr):
            rx = np.concatenate(coded_store[i], axis=0)
            decoded = modem.viterbi_decode(modem.deinterleave(rx, perm))
            err_tally[i] = int(np.count_nonzero(decoded != info_all))

    points = tuple(
        SNRPoint(snr_db=s, bits=int(b), errors=int(e))
        for s, b, e in zip(cfg.snrs_db, bits_tally, err_tally)
    )
    return BERResult(config=cfg, points=points, trials=trials)
