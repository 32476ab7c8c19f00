"""Batch front end.

Four subcommands: ``qrd`` runs a factor pipeline over a tone grid and
writes per-tone factors as JSON lines; ``cost`` prices algorithms in exact
full-multiplication counts and writes ratio tables as CSV; ``ber`` runs
the Monte Carlo detection bench from a JSON config; ``interp-design``
reports truncated-filter designs and the degree-split search.

Every output file starts with a header block carrying the resolved
configuration and the library version. Nothing reads the clock or the
environment for entropy, so a fixed seed gives byte-identical outputs.
Exit codes: 2 for configuration errors, 3 for infeasible parameters,
4 for numerical failures and I/O errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from decimal import Decimal
from fractions import Fraction
from typing import Sequence

# A thread cap set through the environment must land before the numerical
# backend spins up its pools, so this runs ahead of the numpy import.
_cap = os.environ.get("POLYQR_THREADS")
if _cap and _cap.isdigit():
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(_var, _cap)

import numpy as np

from . import __version__
from . import cost as cost_model
from .algos import ALGORITHM_FUNCS, Engine, build_tone_sets
from .errors import (
    ConditioningError,
    InfeasibleError,
    MissingDataError,
    ParameterError,
)
from .interp import EquidistantGrid, fir_design, inexact_optimize_v1
from .lpmat import eval_many, from_coeffs, tone_point
from .mimo import SimConfig, ber_experiment, draw_channel

# ---------------------------------------------------------------------------
# serialization helpers


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, Fraction):
        if v.denominator == 1:
            return str(v.numerator)
        return "%.12g" % float(v)
    if isinstance(v, Decimal):
        return str(v)
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.12g" % float(v)
    return str(v)


def _csv_cell(s: str) -> str:
    if any(ch in s for ch in ',"\r\n'):
        return '"' + s.replace('"', '""') + '"'
    return s


def render_csv(
    rows: Sequence[dict], header: dict, columns: Sequence[str] | None = None
) -> str:
    """Comment header lines, a column row, then data rows; CRLF throughout."""
    lines = [f"# {k}={_fmt(v)}" for k, v in header.items()]
    cols = list(columns) if columns is not None else list(rows[0].keys())
    lines.append(",".join(cols))
    for r in rows:
        lines.append(",".join(_csv_cell(_fmt(r.get(c))) for c in cols))
    return "\r\n".join(lines) + "\r\n"


def emit_csv(
    rows: Sequence[dict],
    path: str,
    header: dict,
    columns: Sequence[str] | None = None,
) -> None:
    text = render_csv(rows, header, columns)
    if path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def parse_csv(path: str) -> tuple[dict, list[dict]]:
    """Read back a CSV written by emit_csv: header dict plus string rows."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        raw = fh.read()
    header: dict[str, str] = {}
    cols: list[str] | None = None
    rows: list[dict] = []
    for line in raw.replace("\r\n", "\n").split("\n"):
        if not line:
            continue
        if line.startswith("# "):
            key, _, val = line[2:].partition("=")
            header[key] = val
            continue
        cells = _split_csv_line(line)
        if cols is None:
            cols = cells
        else:
            rows.append(dict(zip(cols, cells)))
    return header, rows


def _split_csv_line(line: str) -> list[str]:
    out: list[str] = []
    cur: list[str] = []
    quoted = False
    i = 0
    while i < len(line):
        ch = line[i]
        if quoted:
            if ch == '"':
                if i + 1 < len(line) and line[i + 1] == '"':
                    cur.append('"')
                    i += 1
                else:
                    quoted = False
            else:
                cur.append(ch)
        elif ch == '"':
            quoted = True
        elif ch == ",":
            out.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
        i += 1
    out.append("".join(cur))
    return out


_SVG_COLORS = ("#1f6fb2", "#c8452c", "#3e8f4e", "#8a5fa8", "#b08a2e", "#4f6d7a")


def emit_svg_lines(
    series: Sequence[tuple[str, Sequence[tuple[float, float]]]],
    path: str,
    header: dict,
    log_y: bool = False,
    x_label: str = "",
    y_label: str = "",
) -> None:
    """Minimal standalone line chart; log_y drops nonpositive values."""
    W, H = 640, 420
    ml, mr, mt, mb = 70, 20, 20, 50
    pts_all: list[tuple[float, float]] = []
    cleaned: list[tuple[str, list[tuple[float, float]]]] = []
    for label, pts in series:
        keep = [(float(x), float(y)) for x, y in pts if (not log_y) or y > 0]
        cleaned.append((label, keep))
        pts_all.extend(keep)
    if not pts_all:
        raise ParameterError("nothing to plot: no finite points")

    xs = [p[0] for p in pts_all]
    ys = [p[1] for p in pts_all]
    x0, x1 = min(xs), max(xs)
    if log_y:
        y0, y1 = np.log10(min(ys)), np.log10(max(ys))
    else:
        y0, y1 = min(ys), max(ys)
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0

    def sx(x: float) -> float:
        return ml + (x - x0) / (x1 - x0) * (W - ml - mr)

    def sy(y: float) -> float:
        v = np.log10(y) if log_y else y
        return H - mb - (v - y0) / (y1 - y0) * (H - mt - mb)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
        f'viewBox="0 0 {W} {H}">',
        f"<!-- {' '.join(f'{k}={_fmt(v)}' for k, v in header.items())} -->",
        f'<rect width="{W}" height="{H}" fill="white"/>',
        f'<line x1="{ml}" y1="{H - mb}" x2="{W - mr}" y2="{H - mb}" '
        'stroke="black"/>',
        f'<line x1="{ml}" y1="{mt}" x2="{ml}" y2="{H - mb}" stroke="black"/>',
    ]
    for i in range(5):
        fx = x0 + (x1 - x0) * i / 4
        out.append(
            f'<text x="{sx(fx):.1f}" y="{H - mb + 18}" font-size="11" '
            f'text-anchor="middle">{fx:.4g}</text>'
        )
        fy = y0 + (y1 - y0) * i / 4
        shown = 10.0**fy if log_y else fy
        out.append(
            f'<text x="{ml - 6}" y="{H - mb - (H - mt - mb) * i / 4 + 4:.1f}" '
            f'font-size="11" text-anchor="end">{shown:.3g}</text>'
        )
    if x_label:
        out.append(
            f'<text x="{(ml + W - mr) / 2}" y="{H - 10}" font-size="12" '
            f'text-anchor="middle">{x_label}</text>'
        )
    if y_label:
        out.append(
            f'<text x="14" y="{(mt + H - mb) / 2}" font-size="12" '
            f'text-anchor="middle" transform="rotate(-90 14 {(mt + H - mb) / 2})">'
            f"{y_label}</text>"
        )
    for i, (label, pts) in enumerate(cleaned):
        color = _SVG_COLORS[i % len(_SVG_COLORS)]
        if pts:
            path_d = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in pts)
            out.append(
                f'<polyline points="{path_d}" fill="none" stroke="{color}" '
                'stroke-width="1.5"/>'
            )
        out.append(
            f'<text x="{W - mr - 6}" y="{mt + 16 + 16 * i}" font-size="12" '
            f'text-anchor="end" fill="{color}">{label}</text>'
        )
    out.append("</svg>")
    text = "\n".join(out) + "\n"
    if path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _complex_nested(arr: np.ndarray) -> list:
    """Complex array to nested [re, im] lists for JSON."""
    stacked = np.stack([arr.real, arr.imag], axis=-1)
    return stacked.tolist()


# ---------------------------------------------------------------------------
# config plumbing


def _load_json(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
    except json.JSONDecodeError as err:
        raise ParameterError(f"config {path} is not valid JSON: {err}") from err
    if not isinstance(obj, dict):
        raise ParameterError(f"config {path} must hold a JSON object")
    return obj


def _check_keys(obj: dict, allowed: Sequence[str], what: str) -> None:
    unknown = sorted(set(obj) - set(allowed))
    if unknown:
        raise ParameterError(f"unknown {what} keys: {', '.join(unknown)}")


def _engine_of(kind: str | None, b_prime, v1, v2) -> Engine | str:
    if kind is None:
        return "direct"
    if b_prime is None and v1 is None and v2 is None:
        return kind
    return Engine(kind=kind, b_prime=b_prime, v1=v1, v2=v2)


def _engine_from_obj(v) -> Engine | str:
    if isinstance(v, str):
        return v
    if isinstance(v, dict):
        _check_keys(v, ("kind", "b_prime", "v1", "v2"), "engine")
        return Engine(
            kind=v.get("kind", "direct"),
            b_prime=v.get("b_prime"),
            v1=v.get("v1"),
            v2=v.get("v2"),
        )
    raise ParameterError(f"cannot interpret engine value {v!r}")


def _engine_header(v: Engine | str) -> str:
    if isinstance(v, Engine):
        parts = [v.kind]
        if v.b_prime is not None:
            parts.append(f"b_prime={v.b_prime}")
        if v.v1 is not None:
            parts.append(f"v1={v.v1}")
            parts.append(f"v2={v.v2}")
        return ";".join(parts)
    return str(v)


def _resolve_threads(ns) -> int:
    raw = ns.threads
    if raw is None:
        raw = os.environ.get("POLYQR_THREADS", "1")
    try:
        threads = int(raw)
    except (TypeError, ValueError):
        raise ParameterError(f"threads must be an integer, got {raw!r}")
    if threads < 1:
        raise ParameterError(f"threads must be positive, got {threads}")
    return threads


# ---------------------------------------------------------------------------
# subcommands


def cmd_cost(ns) -> int:
    threads = _resolve_threads(ns)
    if ns.table2:
        rows = []
        for r in cost_model.table2_rows():
            rows.append(
                {
                    "mt": r["m_t"],
                    "mr": r["m_r"],
                    "L": r["L"],
                    "N": r["N"],
                    "D": r["D"],
                    "algorithm": "II",
                    "total": r["total_II"],
                    "ratio_vs_I": r["ratio_vs_I"],
                    "ratio_2dp": r["ratio_2dp"],
                    "engine": r["engine"],
                    "b_prime": r["b_prime"],
                    "c_ip_qr": r["c_ip_qr"],
                    "v1_prime": r["v1_prime"],
                }
            )
        header = {
            "polyqr_version": __version__,
            "subcommand": "cost",
            "table2": True,
            "threads": threads,
        }
        emit_csv(rows, ns.out, header)
        return 0

    if ns.D < 1:
        raise InfeasibleError("empty data tone set")
    params = cost_model.CostParams(
        m_t=ns.mt,
        m_r=ns.mr,
        L=ns.L,
        N=ns.N,
        D=ns.D,
        c_ip_h=Fraction(ns.c_ip_h).limit_denominator(10**9),
        c_ip_qr=Fraction(
            ns.c_ip_h if ns.c_ip_qr is None else ns.c_ip_qr
        ).limit_denominator(10**9),
        schedule=ns.schedule,
    )
    algorithms = [a.strip() for a in ns.algorithms.split(",") if a.strip()]
    for a in algorithms:
        if a not in cost_model.ALGORITHMS:
            raise ParameterError(f"unknown algorithm {a!r}")
    total_i = cost_model.total_cost(params, "I").total
    rows = []
    for a in algorithms:
        tot = cost_model.total_cost(params, a).total
        rows.append(
            {
                "mt": params.m_t,
                "mr": params.m_r,
                "L": params.L,
                "N": params.N,
                "D": params.D,
                "algorithm": a,
                "total": tot,
                "ratio_vs_I": tot / total_i,
            }
        )
    header = {
        "polyqr_version": __version__,
        "subcommand": "cost",
        "mt": params.m_t,
        "mr": params.m_r,
        "L": params.L,
        "N": params.N,
        "D": params.D,
        "schedule": params.schedule,
        "c_ip_h": params.c_ip_h,
        "c_ip_qr": params.c_ip_qr,
        "algorithms": ";".join(algorithms),
        "threads": threads,
    }
    emit_csv(
        rows,
        ns.out,
        header,
        columns=("mt", "mr", "L", "N", "D", "algorithm", "total", "ratio_vs_I"),
    )
    return 0


_QRD_CONFIG_KEYS = (
    "m_t", "m_r", "L", "N", "D", "schedule", "algorithm", "sigma_w",
    "engine_qr", "engine_h", "seed", "taps",
)


def cmd_qrd(ns) -> int:
    threads = _resolve_threads(ns)
    cfg: dict = {}
    if ns.config:
        cfg = _load_json(ns.config)
        _check_keys(cfg, _QRD_CONFIG_KEYS, "qrd config")
    for key in ("m_t", "m_r", "L", "N", "D", "schedule", "algorithm", "sigma_w"):
        flag = getattr(ns, key, None)
        if flag is not None:
            cfg[key] = flag
    if ns.seed is not None:
        cfg["seed"] = ns.seed
    if ns.engine_qr is not None:
        cfg["engine_qr"] = _engine_of(ns.engine_qr, ns.b_prime, ns.v1, ns.v2)
    m_t = int(cfg.get("m_t", 2))
    m_r = int(cfg.get("m_r", m_t))
    L = int(cfg.get("L", 2))
    N = int(cfg.get("N", 64))
    D = cfg.get("D", N)
    schedule = cfg.get("schedule", "pow2")
    algorithm = cfg.get("algorithm", "II")
    sigma_w = cfg.get("sigma_w")
    seed = int(cfg.get("seed", 0))
    if algorithm not in ALGORITHM_FUNCS:
        raise ParameterError(f"unknown algorithm {algorithm!r}")
    if algorithm.endswith("MMSE") and sigma_w is None:
        raise ParameterError(f"{algorithm} needs sigma_w")
    engine_qr = cfg.get("engine_qr", "direct")
    if isinstance(engine_qr, dict):
        engine_qr = _engine_from_obj(engine_qr)
    engine_h = cfg.get("engine_h", "direct")
    if isinstance(engine_h, dict):
        engine_h = _engine_from_obj(engine_h)

    tones = build_tone_sets(N, D, L, m_t, schedule)
    if "taps" in cfg and cfg["taps"] is not None:
        taps = np.asarray(cfg["taps"], dtype=float)
        if taps.shape != (L + 1, m_r, m_t, 2):
            raise ParameterError(
                f"taps must have shape ({L + 1}, {m_r}, {m_t}, 2) as [re, im] "
                f"pairs, got {taps.shape}"
            )
        lp = from_coeffs(taps[..., 0] + 1j * taps[..., 1], 0, L)
    else:
        rng = np.random.default_rng(np.random.SeedSequence(seed))
        lp = draw_channel(m_t, m_r, L, rng)
    h = eval_many(lp, [tone_point(n, N) for n in tones.known_tones])

    fn = ALGORITHM_FUNCS[algorithm]
    kwargs: dict = {"engine_h": engine_h}
    if algorithm not in ("I", "I_MMSE"):
        kwargs["engine_qr"] = engine_qr
    if algorithm.endswith("MMSE"):
        result = fn(h, tones, float(sigma_w), **kwargs)
    else:
        result = fn(h, tones, **kwargs)

    head = {
        "polyqr_version": __version__,
        "subcommand": "qrd",
        "config": {
            "m_t": m_t, "m_r": m_r, "L": L, "N": N,
            "D": list(tones.data_tones) if not isinstance(D, int) else D,
            "schedule": schedule, "algorithm": algorithm,
            "sigma_w": sigma_w, "seed": seed,
            "engine_qr": _engine_header(engine_qr),
            "engine_h": _engine_header(engine_h),
            "threads": threads,
            "random_channel": "taps" not in cfg or cfg["taps"] is None,
        },
    }
    lines = [json.dumps(head, sort_keys=True)]
    for n in tones.data_tones:
        f = result[n]
        lines.append(
            json.dumps(
                {
                    "tone": int(n),
                    "Q": _complex_nested(f.Q),
                    "R": _complex_nested(f.R),
                },
                sort_keys=True,
            )
        )
    text = "\n".join(lines) + "\n"
    if ns.out == "-":
        sys.stdout.write(text)
    else:
        with open(ns.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    return 0


_BER_CONFIG_KEYS = (
    "m_t", "m_r", "L", "N", "D", "snrs_db", "algorithm", "engine_qr",
    "engine_h", "schedule", "detector", "coded", "seed", "min_bits",
    "min_errors", "max_bits", "n_symbols",
)


def cmd_ber(ns) -> int:
    threads = _resolve_threads(ns)
    cfg = _load_json(ns.config) if ns.config else {}
    _check_keys(cfg, _BER_CONFIG_KEYS, "ber config")
    if "engine_qr" in cfg:
        cfg["engine_qr"] = _engine_from_obj(cfg["engine_qr"])
    if "engine_h" in cfg:
        cfg["engine_h"] = _engine_from_obj(cfg["engine_h"])
    if "snrs_db" in cfg:
        cfg["snrs_db"] = tuple(float(s) for s in cfg["snrs_db"])
    if ns.seed is not None:
        cfg["seed"] = ns.seed
    if ns.snrs:
        cfg["snrs_db"] = tuple(float(s) for s in ns.snrs.split(","))
    if ns.algorithm:
        cfg["algorithm"] = ns.algorithm
    if ns.min_bits is not None:
        cfg["min_bits"] = ns.min_bits
    if "snrs_db" not in cfg:
        raise ParameterError("ber needs snrs_db (config key or --snrs)")
    for req in ("m_t", "m_r", "L", "N", "D"):
        if req not in cfg:
            raise ParameterError(f"ber config is missing {req}")
    try:
        sim = SimConfig(**cfg)
    except TypeError as err:
        raise ParameterError(str(err)) from err

    result = ber_experiment(sim)
    rows = []
    for p in result.points:
        lo, hi = p.ci
        rows.append(
            {
                "snr_db": p.snr_db,
                "bits": p.bits,
                "errors": p.errors,
                "ber": p.ber,
                "ci_low": lo,
                "ci_high": hi,
            }
        )
    header = {
        "polyqr_version": __version__,
        "subcommand": "ber",
        "m_t": sim.m_t, "m_r": sim.m_r, "L": sim.L, "N": sim.N, "D": sim.D,
        "algorithm": sim.algorithm,
        "engine_qr": _engine_header(sim.engine_qr),
        "engine_h": _engine_header(sim.engine_h),
        "schedule": sim.schedule,
        "detector": sim.detector,
        "coded": sim.coded,
        "seed": sim.seed,
        "min_bits": sim.min_bits,
        "min_errors": sim.min_errors,
        "max_bits": sim.max_bits,
        "n_symbols": sim.n_symbols,
        "snrs_db": ";".join(_fmt(s) for s in sim.snrs_db),
        "trials": result.trials,
        "threads": threads,
    }
    emit_csv(
        rows,
        ns.out,
        header,
        columns=("snr_db", "bits", "errors", "ber", "ci_low", "ci_high"),
    )
    if ns.svg:
        pts = [(p.snr_db, p.ber) for p in result.points]
        emit_svg_lines(
            [(sim.algorithm, pts)],
            ns.svg,
            header,
            log_y=True,
            x_label="SNR (dB)",
            y_label="BER",
        )
    return 0


def cmd_interp_design(ns) -> int:
    threads = _resolve_threads(ns)
    if ns.N is not None:
        if ns.N % ns.B:
            raise ParameterError(f"N={ns.N} is not a multiple of B={ns.B}")
        R = ns.N // ns.B
    elif ns.R is not None:
        R = ns.R
    else:
        raise ParameterError("give either -R or -N")
    grid = EquidistantGrid.upsampling(ns.B, R)
    header = {
        "polyqr_version": __version__,
        "subcommand": "interp-design",
        "B": ns.B,
        "R": R,
        "b_prime": ns.b_prime,
        "seed": ns.seed,
        "threads": threads,
    }
    if ns.optimize:
        if ns.mt is None or ns.mr is None or ns.L is None:
            raise ParameterError("--optimize needs --mt, --mr and -L")
        if ns.b_prime is None:
            raise ParameterError("--optimize needs --b-prime")

        def sampler(rng: np.random.Generator):
            return draw_channel(ns.mt, ns.mr, ns.L, rng)

        search = inexact_optimize_v1(
            grid, ns.b_prime, ns.mt, ns.L, sampler, trials=ns.trials, seed=ns.seed
        )
        header.update(
            {
                "mt": ns.mt, "mr": ns.mr, "L": ns.L, "trials": ns.trials,
                "v1_star": search.v1_star, "tie": search.tie,
            }
        )
        rows = [
            {"v1": v1, "v2": 2 * ns.mt * ns.L - v1, "mean_residual": err}
            for v1, err in sorted(search.error_curve.items())
        ]
        emit_csv(rows, ns.out, header, columns=("v1", "v2", "mean_residual"))
        return 0

    if ns.v1 is None or ns.v2 is None:
        raise ParameterError("give --v1 and --v2 (or --optimize)")
    design = fir_design(grid, ns.v1, ns.v2, ns.b_prime)
    rows = [
        {
            "B": design.B,
            "R": design.R,
            "b_prime": design.B_prime,
            "v1": design.v1,
            "v2": design.v2,
            "mult_per_target": design.mult_count_per_target,
        }
    ]
    emit_csv(rows, ns.out, header)
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="polyqr",
        description="Interpolation-based per-tone QR pipelines, their exact "
        "cost model, and a BER test bench.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--out", default="-", help="output path ('-' for stdout)")
        p.add_argument("--seed", type=int, default=None, help="RNG seed")
        p.add_argument(
            "--threads",
            type=int,
            default=None,
            help="worker cap (default: POLYQR_THREADS or 1); results do not "
            "depend on it",
        )

    p = sub.add_parser("cost", help="price algorithms in full multiplications")
    common(p)
    p.add_argument("--mt", type=int, default=2)
    p.add_argument("--mr", type=int, default=4)
    p.add_argument("-L", type=int, default=15)
    p.add_argument("-N", type=int, default=512)
    p.add_argument("-D", type=int, default=512)
    p.add_argument("--schedule", choices=("pow2", "exact_minimal"), default="pow2")
    p.add_argument("--c-ip-h", type=float, default=2.0)
    p.add_argument("--c-ip-qr", type=float, default=None)
    p.add_argument("--algorithms", default="I,II,III")
    p.add_argument(
        "--table2",
        action="store_true",
        help="emit the fixed engine-comparison table instead",
    )
    p.set_defaults(func=cmd_cost)

    p = sub.add_parser("qrd", help="run a pipeline, write per-tone factors")
    common(p)
    p.add_argument("--config", help="JSON config path")
    p.add_argument("--mt", type=int, default=None, dest="m_t")
    p.add_argument("--mr", type=int, default=None, dest="m_r")
    p.add_argument("-L", type=int, default=None)
    p.add_argument("-N", type=int, default=None)
    p.add_argument("-D", type=int, default=None)
    p.add_argument("--schedule", choices=("pow2", "exact_minimal"), default=None)
    p.add_argument("--algorithm", choices=sorted(ALGORITHM_FUNCS), default=None)
    p.add_argument("--sigma-w", type=float, default=None, dest="sigma_w")
    p.add_argument("--engine-qr", choices=("direct", "fft", "fir"), default=None)
    p.add_argument("--b-prime", type=int, default=None)
    p.add_argument("--v1", type=int, default=None)
    p.add_argument("--v2", type=int, default=None)
    p.set_defaults(func=cmd_qrd)

    p = sub.add_parser("ber", help="Monte Carlo BER curves from a JSON config")
    common(p)
    p.add_argument("--config", help="JSON config path (SimConfig fields)")
    p.add_argument("--snrs", help="comma-separated SNR points in dB")
    p.add_argument("--algorithm", choices=sorted(ALGORITHM_FUNCS), default=None)
    p.add_argument("--min-bits", type=int, default=None)
    p.add_argument("--svg", help="also write an SVG curve here")
    p.set_defaults(func=cmd_ber)

    p = sub.add_parser("interp-design", help="FIR designs and the V1 search")
    common(p)
    p.add_argument("-B", type=int, required=True, help="base grid size")
    p.add_argument("-R", type=int, default=None, help="upsampling factor")
    p.add_argument("-N", type=int, default=None, help="full grid (alternative to -R)")
    p.add_argument("--b-prime", type=int, default=None)
    p.add_argument("--v1", type=int, default=None)
    p.add_argument("--v2", type=int, default=None)
    p.add_argument("--optimize", action="store_true", help="search the V1 split")
    p.add_argument("--mt", type=int, default=None)
    p.add_argument("--mr", type=int, default=None)
    p.add_argument("-L", type=int, default=None)
    p.add_argument("--trials", type=int, default=200)
    p.set_defaults(func=cmd_interp_design)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        rc = ns.func(ns)
        return 0 if rc is None else int(rc)
    except ParameterError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except (InfeasibleError, MissingDataError) as err:
        print(f"infeasible: {err}", file=sys.stderr)
        return 3
    except (ConditioningError, OSError) as err:
        print(f"failure: {err}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
