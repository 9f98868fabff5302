"""Parameter sweeps over the repair interval, code set, and t_bs/t_d ratio.

One sweep point fixes a code (n, k), a ratio t_bs/t_d, and a repair interval.
The whole-file BS delay t_ref is held constant across codes, so t_bs = t_ref/k
and t_d = t_bs/ratio; the uncoded (1, 1) baseline then automatically transfers
the whole file in single symbol times.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, replace
from typing import Iterable

import numpy as np

from .delay import avg_download_delay
from .errors import ConfigError
from .params import CodeParams, SystemParams
from .simulate import RequestModel, SimConfig, SimMode, SimReport, simulate

ENGINE_ANALYTIC = "analytic"
ENGINE_SIMULATE = "simulate"
ENGINE_BOTH = "both"
_ENGINES = (ENGINE_ANALYTIC, ENGINE_SIMULATE, ENGINE_BOTH)

DEFAULT_CODES: tuple[tuple[int, int], ...] = ((1, 1), (2, 1), (4, 2), (8, 4))
DEFAULT_RATIOS: tuple[float, ...] = (10.0, 100.0, 1000.0)


def default_delta_grid(count: int = 25, start: float = 1e-2, stop: float = 1e2) -> tuple[float, ...]:
    if count < 1:
        raise ConfigError(f"delta_grid.count must be >= 1, got {count}")
    if start <= 0 or stop <= 0:
        raise ConfigError(f"delta_grid bounds must be > 0, got start={start}, stop={stop}")
    return tuple(float(v) for v in np.logspace(np.log10(start), np.log10(stop), count))


@dataclass(frozen=True)
class SweepSpec:
    """Everything needed to reproduce one sweep, including simulation seeds."""

    m: float = 30.0
    mu: float = 1.0
    omega: float = 0.02
    t_ref: float = 1.0
    codes: tuple[tuple[int, int], ...] = DEFAULT_CODES
    deltas: tuple[float, ...] = default_delta_grid()
    ratios: tuple[float, ...] = DEFAULT_RATIOS
    engine: str = ENGINE_ANALYTIC
    mode: SimMode = SimMode.FAITHFUL
    request_model: RequestModel | None = None
    num_requests: int = 100_000
    warmup_requests: int | None = None
    seed: int = 20250101

    def __post_init__(self) -> None:
        object.__setattr__(self, "codes", tuple((int(n), int(k)) for n, k in self.codes))
        object.__setattr__(self, "deltas", tuple(float(d) for d in self.deltas))
        object.__setattr__(self, "ratios", tuple(float(r) for r in self.ratios))
        if self.engine not in _ENGINES:
            raise ConfigError(f"engine must be one of {_ENGINES}, got {self.engine!r}")
        if not self.codes:
            raise ConfigError("codes must not be empty")
        for entry in self.codes:
            n, k = entry
            if not 1 <= k <= n:
                raise ConfigError(f"code entry ({n},{k}) violates 1 <= k <= n")
        if not self.deltas or any(d <= 0 for d in self.deltas):
            raise ConfigError("deltas must be a nonempty list of positive repair intervals")
        if not self.ratios or any(r <= 0 for r in self.ratios):
            raise ConfigError("ratios must be a nonempty list of positive t_bs/t_d ratios")
        if self.t_ref <= 0:
            raise ConfigError(f"t_ref must be > 0, got {self.t_ref}")
        if self.num_requests < 1:
            raise ConfigError(f"num_requests must be >= 1, got {self.num_requests}")

    def point_params(self, code: tuple[int, int], ratio: float, delta: float) -> SystemParams:
        _, k = code
        t_bs = self.t_ref / k
        return SystemParams(
            m=self.m, mu=self.mu, omega=self.omega,
            t_d=t_bs / ratio, t_bs=t_bs, delta=delta,
        )

    def points(self) -> list[tuple[tuple[int, int], float, float]]:
        """Deterministic sweep order: code, then ratio, then delta."""
        return [
            (code, ratio, delta)
            for code in self.codes
            for ratio in self.ratios
            for delta in self.deltas
        ]


@dataclass(frozen=True)
class SweepRow:
    n: int
    k: int
    delta: float
    t_d: float
    t_bs: float
    engine: str
    eta: float
    t_eta: float
    p_idle: float
    t_dw: float
    gain: float
    t_dw_stderr: float | None = None
    busy_frac: float | None = None
    busy_frac_stderr: float | None = None
    rel_diff: float | None = None


def _analytic_row(spec: SweepSpec, code: tuple[int, int], ratio: float, delta: float) -> SweepRow:
    params = spec.point_params(code, ratio, delta)
    summary = avg_download_delay(params, CodeParams(*code))
    return SweepRow(
        n=code[0], k=code[1], delta=delta, t_d=params.t_d, t_bs=params.t_bs,
        engine=ENGINE_ANALYTIC,
        eta=summary.eta, t_eta=summary.t_eta, p_idle=summary.p_idle,
        t_dw=summary.t_dw, gain=summary.gain,
    )


def _simulated_row(
    spec: SweepSpec,
    code: tuple[int, int],
    ratio: float,
    delta: float,
    seed: int,
    baseline: SweepRow | None,
) -> SweepRow:
    params = spec.point_params(code, ratio, delta)
    report = simulate(
        SimConfig(
            params=params,
            code=CodeParams(*code),
            num_requests=spec.num_requests,
            warmup_requests=spec.warmup_requests,
            seed=seed,
            mode=spec.mode,
            request_model=spec.request_model,
        )
    )
    t_ref = code[1] * params.t_bs
    rel = None
    if baseline is not None and baseline.t_dw > 0:
        rel = abs(report.mean_delay - baseline.t_dw) / baseline.t_dw
    return SweepRow(
        n=code[0], k=code[1], delta=delta, t_d=params.t_d, t_bs=params.t_bs,
        engine=ENGINE_SIMULATE,
        eta=report.mean_d2d_symbols, t_eta=report.mean_occupancy,
        p_idle=1.0 - report.busy_fraction, t_dw=report.mean_delay,
        gain=t_ref / report.mean_delay,
        t_dw_stderr=report.delay_stderr,
        busy_frac=report.busy_fraction,
        busy_frac_stderr=report.busy_fraction_stderr,
        rel_diff=rel,
    )


def run_sweep(spec: SweepSpec) -> list[SweepRow]:
    """Evaluate every sweep point; `both` pairs analytic and simulated rows."""
    points = spec.points()
    sim_seeds = np.random.SeedSequence(spec.seed).generate_state(len(points), np.uint64)
    rows: list[SweepRow] = []
    for idx, (code, ratio, delta) in enumerate(points):
        analytic = None
        if spec.engine in (ENGINE_ANALYTIC, ENGINE_BOTH):
            analytic = _analytic_row(spec, code, ratio, delta)
            rows.append(analytic)
        if spec.engine in (ENGINE_SIMULATE, ENGINE_BOTH):
            rows.append(
                _simulated_row(spec, code, ratio, delta, int(sim_seeds[idx]), analytic)
            )
    return rows


# ---------------------------------------------------------------------------
# CSV emission / ingestion

_BASE_COLUMNS = ("n", "k", "delta", "t_d", "t_bs", "engine", "eta", "t_eta", "p_idle", "t_dw", "gain")
_SIM_COLUMNS = ("t_dw_stderr", "busy_frac", "busy_frac_stderr", "rel_diff")


def _format_value(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".9g")


def render_csv(rows: Iterable[SweepRow]) -> str:
    rows = list(rows)
    with_sim = any(r.engine != ENGINE_ANALYTIC for r in rows)
    columns = _BASE_COLUMNS + (_SIM_COLUMNS if with_sim else ())
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_format_value(getattr(row, col)) for col in columns])
    return buf.getvalue()


def emit_csv(rows: Iterable[SweepRow], path: str) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(render_csv(rows))


def read_csv_rows(path: str) -> list[SweepRow]:
    """Parse a sweep CSV back into rows (used by the plot command)."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or tuple(reader.fieldnames[: len(_BASE_COLUMNS)]) != _BASE_COLUMNS:
            raise ConfigError(f"{path} is not a sweep CSV (unexpected header)")
        rows = []
        for record in reader:
            kwargs = {
                "n": int(record["n"]),
                "k": int(record["k"]),
                "delta": float(record["delta"]),
                "t_d": float(record["t_d"]),
                "t_bs": float(record["t_bs"]),
                "engine": record["engine"],
            }
            for col in ("eta", "t_eta", "p_idle", "t_dw", "gain"):
                kwargs[col] = float(record[col])
            for col in _SIM_COLUMNS:
                raw = record.get(col)
                kwargs[col] = float(raw) if raw else None
            rows.append(SweepRow(**kwargs))
    return rows


# ---------------------------------------------------------------------------
# analytic-vs-simulation comparison

DEFAULT_COMPARE_THRESHOLD = 0.05


@dataclass(frozen=True)
class ComparePair:
    analytic: SweepRow
    simulated: SweepRow
    t_dw_rel_diff: float
    busy_rel_diff: float
    flagged: bool


@dataclass(frozen=True)
class CompareReport:
    pairs: tuple[ComparePair, ...]
    threshold: float
    flagged_count: int
    text: str


def compare_report(spec: SweepSpec, threshold: float = DEFAULT_COMPARE_THRESHOLD) -> CompareReport:
    """Run a paired sweep and flag points where simulation strays from the model."""
    if threshold <= 0:
        raise ConfigError(f"threshold must be > 0, got {threshold}")
    rows = run_sweep(replace(spec, engine=ENGINE_BOTH))
    pairs = []
    lines = []
    flagged_count = 0
    for analytic, simulated in zip(rows[::2], rows[1::2]):
        t_dw_rel = abs(simulated.t_dw - analytic.t_dw) / analytic.t_dw
        busy_model = 1.0 - analytic.p_idle
        if busy_model > 0:
            busy_rel = abs(simulated.busy_frac - busy_model) / busy_model
        else:
            busy_rel = abs(simulated.busy_frac)
        flagged = t_dw_rel > threshold or busy_rel > threshold
        flagged_count += flagged
        pairs.append(
            ComparePair(
                analytic=analytic, simulated=simulated,
                t_dw_rel_diff=t_dw_rel, busy_rel_diff=busy_rel, flagged=flagged,
            )
        )
        mark = "FLAG" if flagged else "ok  "
        lines.append(
            f"{mark} ({analytic.n},{analytic.k}) delta={analytic.delta:.6g} "
            f"ratio={analytic.t_bs / analytic.t_d:.6g}: "
            f"t_dw {analytic.t_dw:.6g} vs {simulated.t_dw:.6g} (rel {t_dw_rel:.3%}), "
            f"busy {busy_model:.6g} vs {simulated.busy_frac:.6g} (rel {busy_rel:.3%})"
        )
    lines.append(
        f"{flagged_count} of {len(pairs)} points exceed {threshold:.0%} relative difference"
    )
    return CompareReport(
        pairs=tuple(pairs), threshold=threshold,
        flagged_count=flagged_count, text="\n".join(lines),
    )
