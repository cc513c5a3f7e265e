"""Monte Carlo driver, failure statistics and threshold estimation.

A trial simulates one window of T noisy rounds plus the noiseless
closure, decodes both graphs, and records the two logical failure bits.
Windows are independent work items with counter-derived RNG streams, so
aggregation is order-independent and results are reproducible for a
given configuration regardless of scheduling.

Mean rounds-to-failure is estimated from the per-window failure
probability P as -T / ln(1 - P), which is unbiased for rare failures
and reduces to T/P in the small-P limit.  Confidence intervals come
from the Wilson binomial interval.  The threshold is the crossing point
of rounds-to-failure curves for different distances, fitted log-linearly
in p, with uncertainty from a bootstrap over trial counts.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field, asdict

import numpy as np

from .decoder import Decoder
from .edge_analysis import derive_edge_classes
from .lattice import build_lattice, standard_schedule
from .noise import ErrorModel, preset, trial_rng
from .sim import compile_circuit, detection_events, events_to_text, simulate_window

DEFAULT_ROUNDS_FACTOR = 10
WILSON_Z = 1.959963984540054  # two-sided 95%

CSV_COLUMNS = [
    "d", "p", "model", "metric", "T", "N", "fail_x", "fail_z",
    "mttf_x", "mttf_x_lo", "mttf_x_hi", "mttf_z", "mttf_z_lo", "mttf_z_hi",
    "seed", "wall_time",
]


@dataclass(frozen=True)
class TrialConfig:
    """One Monte Carlo point: code distance, error model, decode metric."""

    distance: int
    p: float
    model: str = "standard"
    metric: str = "dmax"
    rounds: int | None = None
    trials: int = 1000
    seed: int = 0
    schedule_order: str = "interleaved"
    idle_steps: tuple[int, ...] = (6,)
    custom_model: tuple[float, float, float] | None = None
    jobs: int = 1
    verify: bool = False
    debug_events: bool = False

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.distance < 3 or self.distance % 2 == 0:
            raise ValueError("distance must be odd and >= 3")

    @property
    def window_rounds(self) -> int:
        return self.rounds if self.rounds is not None else DEFAULT_ROUNDS_FACTOR * self.distance

    def error_model(self) -> ErrorModel:
        if self.model == "custom":
            if self.custom_model is None:
                raise ValueError("custom model requires a (p2, pI, pM) triple")
            return ErrorModel(*self.custom_model)
        return preset(self.model, self.p)


@dataclass
class PointStats:
    """Aggregated counts and derived estimates for one sweep point."""

    d: int
    p: float
    model: str
    metric: str
    T: int
    N: int
    fail_x: int
    fail_z: int
    seed: int
    wall_time: float

    def failure_probability(self, logical: str) -> float:
        return (self.fail_x if logical == "x" else self.fail_z) / self.N


@dataclass
class SweepStats:
    rows: list[PointStats] = field(default_factory=list)

    def row(self, d: int, p: float) -> PointStats:
        for r in self.rows:
            if r.d == d and abs(r.p - p) < 1e-12:
                return r
        raise KeyError(f"no row for d={d}, p={p}")


def wilson_interval(k: int, n: int, z: float = WILSON_Z) -> tuple[float, float]:
    """95% binomial confidence interval for k successes out of n."""
    if n == 0:
        return (0.0, 1.0)
    phat = k / n
    denom = 1.0 + z * z / n
    center = (phat + z * z / (2 * n)) / denom
    half = z * math.sqrt(phat * (1 - phat) / n + z * z / (4 * n * n)) / denom
    lo = 0.0 if k == 0 else max(0.0, center - half)
    hi = 1.0 if k == n else min(1.0, center + half)
    return (lo, hi)


def _mttf(T: int, p_fail: float) -> float:
    if p_fail <= 0.0:
        return math.inf
    if p_fail >= 1.0:
        return T / 50.0  # every window fails; below one window's resolution
    return -T / math.log1p(-p_fail)


def rounds_to_failure(row: PointStats) -> dict[str, dict[str, float]]:
    """Per logical type: point estimate and 95% CI of rounds to failure.

    With zero observed failures the point estimate is unbounded (inf) and
    only the lower bound, from the Wilson upper limit on P, is reported.
    """
    out = {}
    for logical, k in (("x", row.fail_x), ("z", row.fail_z)):
        lo_p, hi_p = wilson_interval(k, row.N)
        out[logical] = {
            "estimate": _mttf(row.T, k / row.N),
            "lo": _mttf(row.T, hi_p),
            "hi": _mttf(row.T, lo_p),
        }
    return out


# Per-process state for worker pools: rebuilt once per (config) per process.
_WORKER_STATE: dict = {}


def _build_state(cfg: TrialConfig):
    key = (cfg.distance, cfg.model, cfg.p, cfg.custom_model, cfg.metric,
           cfg.schedule_order, cfg.idle_steps)
    state = _WORKER_STATE.get(key)
    if state is None:
        lattice = build_lattice(cfg.distance)
        schedule = standard_schedule(lattice, order=cfg.schedule_order,
                                     idle_steps=cfg.idle_steps)
        circuit = compile_circuit(lattice, schedule)
        table = derive_edge_classes(circuit, cfg.error_model())
        decoder = Decoder(table, cfg.metric)
        _WORKER_STATE.clear()
        state = (circuit, decoder)
        _WORKER_STATE[key] = state
    return state


def _run_chunk(args) -> tuple[int, int, list[str]]:
    cfg, start, count = args
    circuit, decoder = _build_state(cfg)
    model = cfg.error_model()
    T = cfg.window_rounds
    fail_x = fail_z = 0
    traces: list[str] = []
    for idx in range(start, start + count):
        rng = trial_rng(cfg.seed, idx)
        res = simulate_window(circuit, model, rng, T)
        outcome = decoder.decode(res.history, res.frame, verify=cfg.verify,
                                 collect_matches=cfg.debug_events)
        fail_x += outcome.logical_x_failed
        fail_z += outcome.logical_z_failed
        if cfg.debug_events:
            traces.append(f"# window {idx}\n"
                          + events_to_text(detection_events(res.history)))
    return fail_x, fail_z, traces


def run_trials(cfg: TrialConfig, trace_sink=None) -> SweepStats:
    """Run cfg.trials independent windows and aggregate failure counts."""
    if cfg.window_rounds < cfg.distance:
        import warnings
        warnings.warn(f"rounds={cfg.window_rounds} below distance {cfg.distance}; "
                      "time-like errors will be under-sampled")
    t0 = time.perf_counter()
    chunk = max(1, min(500, cfg.trials // max(1, 4 * cfg.jobs)))
    chunks = [(cfg, start, min(chunk, cfg.trials - start))
              for start in range(0, cfg.trials, chunk)]
    fail_x = fail_z = 0
    if cfg.jobs > 1:
        import multiprocessing as mp
        with mp.get_context("spawn").Pool(cfg.jobs) as pool:
            for cx, cz, traces in pool.imap_unordered(_run_chunk, chunks):
                fail_x += cx
                fail_z += cz
                if trace_sink is not None:
                    trace_sink.extend(traces)
    else:
        for args in chunks:
            cx, cz, traces = _run_chunk(args)
            fail_x += cx
            fail_z += cz
            if trace_sink is not None:
                trace_sink.extend(traces)
    wall = time.perf_counter() - t0
    row = PointStats(d=cfg.distance, p=cfg.p, model=cfg.model, metric=cfg.metric,
                     T=cfg.window_rounds, N=cfg.trials, fail_x=fail_x,
                     fail_z=fail_z, seed=cfg.seed, wall_time=wall)
    return SweepStats(rows=[row])


def run_sweep(base: TrialConfig, distances, ps) -> SweepStats:
    """Cartesian sweep over distances and physical error rates."""
    from dataclasses import replace
    stats = SweepStats()
    for d in distances:
        for p in ps:
            cfg = replace(base, distance=d, p=p)
            stats.rows.extend(run_trials(cfg).rows)
    return stats


class ThresholdError(RuntimeError):
    pass


def estimate_threshold(stats: SweepStats, logical: str = "x",
                       n_bootstrap: int = 200, seed: int = 1234,
                       min_failures: int = 3) -> dict:
    """Crossing point of rounds-to-failure curves over >= 3 distances.

    For every pair of distances, log(mttf) difference is fitted linearly
    in p and its zero crossing located; the threshold is the mean of the
    pairwise crossings and the uncertainty is the bootstrap standard
    deviation over resampled failure counts.
    """
    distances = sorted({r.d for r in stats.rows})
    ps = sorted({r.p for r in stats.rows})
    if len(distances) < 3:
        raise ThresholdError(f"need >= 3 distances, got {distances}")
    if len(ps) < 5:
        raise ThresholdError(f"need >= 5 p values, got {ps}")

    def curves(fail_of) -> dict[int, dict[float, float]]:
        out: dict[int, dict[float, float]] = {}
        for r in stats.rows:
            k = fail_of(r)
            if k >= min_failures:
                out.setdefault(r.d, {})[r.p] = math.log(_mttf(r.T, k / r.N))
        return out

    def crossings(curve) -> list[float]:
        roots = []
        for a in range(len(distances)):
            for b in range(a + 1, len(distances)):
                d1, d2 = distances[a], distances[b]
                shared = sorted(set(curve.get(d1, {})) & set(curve.get(d2, {})))
                if len(shared) < 2:
                    continue
                xs = np.array(shared)
                ys = np.array([curve[d2][p] - curve[d1][p] for p in shared])
                if not (ys.max() > 0 > ys.min()):
                    continue
                slope, intercept = np.polyfit(xs, ys, 1)
                if slope >= 0:
                    continue
                root = -intercept / slope
                if xs[0] <= root <= xs[-1]:
                    roots.append(float(root))
        return roots

    real = crossings(curves(lambda r: r.fail_x if logical == "x" else r.fail_z))
    if not real:
        order = {}
        for r in stats.rows:
            order.setdefault(r.p, []).append(
                (r.d, r.fail_x if logical == "x" else r.fail_z, r.N))
        raise ThresholdError(
            "no bracketing crossing between distance curves; "
            f"counts by p: {order}")
    p_th = float(np.mean(real))

    rng = np.random.default_rng(seed)
    boots = []
    for _ in range(n_bootstrap):
        resampled = SweepStats(rows=[
            PointStats(d=r.d, p=r.p, model=r.model, metric=r.metric, T=r.T,
                       N=r.N, seed=r.seed, wall_time=0.0,
                       fail_x=int(rng.binomial(r.N, r.fail_x / r.N)),
                       fail_z=int(rng.binomial(r.N, r.fail_z / r.N)))
            for r in stats.rows
        ])
        got = crossings(_boot_curves(resampled, logical, min_failures))
        if got:
            boots.append(float(np.mean(got)))
    sigma = float(np.std(boots)) if len(boots) >= 10 else float("nan")
    return {"p_th": p_th, "sigma": sigma, "pairwise": real,
            "bootstrap_samples": len(boots), "logical": logical}


def _boot_curves(stats: SweepStats, logical: str, min_failures: int):
    out: dict[int, dict[float, float]] = {}
    for r in stats.rows:
        k = r.fail_x if logical == "x" else r.fail_z
        if k >= min_failures:
            out.setdefault(r.d, {})[r.p] = math.log(_mttf(r.T, k / r.N))
    return out


def _fmt(x) -> str:
    if isinstance(x, float):
        if math.isinf(x):
            return "inf"
        return f"{x:.10g}"
    return str(x)


def stats_to_csv(stats: SweepStats) -> str:
    lines = [",".join(CSV_COLUMNS)]
    for r in stats.rows:
        mttf = rounds_to_failure(r)
        values = [r.d, r.p, r.model, r.metric, r.T, r.N, r.fail_x, r.fail_z,
                  mttf["x"]["estimate"], mttf["x"]["lo"], mttf["x"]["hi"],
                  mttf["z"]["estimate"], mttf["z"]["lo"], mttf["z"]["hi"],
                  r.seed, r.wall_time]
        lines.append(",".join(_fmt(v) for v in values))
    return "\n".join(lines) + "\n"


def csv_to_stats(text: str) -> SweepStats:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    header = lines[0].split(",")
    assert header == CSV_COLUMNS, f"unexpected header {header}"
    rows = []
    for ln in lines[1:]:
        vals = dict(zip(header, ln.split(",")))
        rows.append(PointStats(
            d=int(vals["d"]), p=float(vals["p"]), model=vals["model"],
            metric=vals["metric"], T=int(vals["T"]), N=int(vals["N"]),
            fail_x=int(vals["fail_x"]), fail_z=int(vals["fail_z"]),
            seed=int(vals["seed"]), wall_time=float(vals["wall_time"])))
    return SweepStats(rows=rows)


def stats_to_json(stats: SweepStats) -> str:
    rows = []
    for r in stats.rows:
        d = asdict(r)
        mttf = rounds_to_failure(r)
        for logical in ("x", "z"):
            for key in ("estimate", "lo", "hi"):
                v = mttf[logical][key]
                d[f"mttf_{logical}_{key}"] = None if math.isinf(v) else v
        rows.append(d)
    return json.dumps({"schema": "surfacesim-results-v1", "rows": rows}, indent=2)


def emit_results(stats: SweepStats, fmt: str = "csv", path: str | None = None,
                 plot_path: str | None = None, gnuplot_path: str | None = None) -> str:
    """Serialize results; optionally write files (CSV/JSON, .dat, SVG)."""
    if fmt == "csv":
        text = stats_to_csv(stats)
    elif fmt == "json":
        text = stats_to_json(stats)
    else:
        raise ValueError(f"unknown format {fmt!r}")
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    if gnuplot_path is not None:
        with open(gnuplot_path, "w") as fh:
            fh.write("# p mttf_x mttf_z  (one block per distance)\n")
            for d in sorted({r.d for r in stats.rows}):
                fh.write(f'\n\n# d = {d}\n')
                for r in sorted((r for r in stats.rows if r.d == d),
                                key=lambda r: r.p):
                    mttf = rounds_to_failure(r)
                    fh.write(f'{r.p:.6g} {_fmt(mttf["x"]["estimate"])} '
                             f'{_fmt(mttf["z"]["estimate"])}\n')
    if plot_path is not None:
        with open(plot_path, "w") as fh:
            fh.write(plot_svg(stats))
    return text


def plot_svg(stats: SweepStats, logical: str = "x",
             width: int = 640, height: int = 440) -> str:
    """Minimal SVG: rounds-to-failure vs p, one polyline per distance."""
    pts = []
    for r in stats.rows:
        mttf = rounds_to_failure(r)[logical]["estimate"]
        if math.isfinite(mttf):
            pts.append((r.d, r.p, mttf))
    if not pts:
        return "<svg xmlns='http://www.w3.org/2000/svg'/>"
    ps = [p for _, p, _ in pts]
    ys = [math.log10(m) for _, _, m in pts]
    pmin, pmax = min(ps), max(ps)
    ymin, ymax = min(ys), max(ys)
    pspan = (pmax - pmin) or 1.0
    yspan = (ymax - ymin) or 1.0
    margin = 50

    def sx(p):
        return margin + (p - pmin) / pspan * (width - 2 * margin)

    def sy(y):
        return height - margin - (y - ymin) / yspan * (height - 2 * margin)

    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]
    parts = [f"<svg xmlns='http://www.w3.org/2000/svg' width='{width}' height='{height}'>",
             f"<rect width='{width}' height='{height}' fill='white'/>",
             f"<text x='{width//2}' y='{height-8}' text-anchor='middle' "
             f"font-size='12'>gate error rate p</text>",
             f"<text x='14' y='{height//2}' font-size='12' "
             f"transform='rotate(-90 14 {height//2})' text-anchor='middle'>"
             f"log10 rounds to logical {logical} failure</text>"]
    for ci, d in enumerate(sorted({d for d, _, _ in pts})):
        series = sorted((p, y) for dd, p, y in
                        ((dd, p, math.log10(m)) for dd, p, m in pts) if dd == d)
        path = " ".join(f"{sx(p):.1f},{sy(y):.1f}" for p, y in series)
        color = colors[ci % len(colors)]
        parts.append(f"<polyline points='{path}' fill='none' stroke='{color}' "
                     f"stroke-width='1.5'/>")
        if series:
            parts.append(f"<text x='{sx(series[-1][0])+4:.1f}' "
                         f"y='{sy(series[-1][1]):.1f}' font-size='11' "
                         f"fill='{color}'>d={d}</text>")
    parts.append("</svg>")
    return "\n".join(parts)
