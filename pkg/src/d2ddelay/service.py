"""HTTP service wrapping the delay model, simulator, and sweep harness.

Run it with ``uvicorn d2ddelay.service:app`` (or ``d2ddelay serve``); the CLI
talks to the same app in-process by default.  Endpoints:

* ``GET  /health``   -- liveness probe
* ``POST /analytic`` -- closed-form delay summary for one parameter point
* ``POST /simulate`` -- one discrete-event run
* ``POST /sweep``    -- sweep rows over codes x ratios x repair intervals
* ``POST /compare``  -- paired analytic/simulated sweep with flagging
* ``POST /plot``     -- gain-vs-repair-interval SVG for one ratio's rows
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, Response
from pydantic import BaseModel, Field

from . import __version__
from .charts import PlotKind, render_gain_vs_delta
from .delay import DelaySummary, OutcomeDistribution, avg_download_delay, outcome_distribution
from .errors import ConfigError, D2dDelayError
from .params import CodeParams, SystemParams
from .simulate import RequestModel, SimConfig, SimMode, SimReport, simulate
from .sweep import (
    CompareReport,
    DEFAULT_CODES,
    DEFAULT_RATIOS,
    SweepRow,
    SweepSpec,
    compare_report,
    default_delta_grid,
    run_sweep,
)


class SystemParamsIn(BaseModel):
    m: float = Field(gt=0)
    mu: float = Field(default=1.0, gt=0)
    omega: float = Field(default=0.02, ge=0)
    t_d: float = Field(gt=0)
    t_bs: float = Field(gt=0)
    delta: float = Field(gt=0)

    def to_domain(self) -> SystemParams:
        return SystemParams(
            m=self.m, mu=self.mu, omega=self.omega,
            t_d=self.t_d, t_bs=self.t_bs, delta=self.delta,
        )


class CodeIn(BaseModel):
    n: int = Field(ge=1)
    k: int = Field(ge=1)

    def to_domain(self) -> CodeParams:
        return CodeParams(n=self.n, k=self.k)


class OutcomeOut(BaseModel):
    p_fail_first: float
    p_partial: list[float]
    p_full: float

    @classmethod
    def from_domain(cls, outcome: OutcomeDistribution) -> "OutcomeOut":
        return cls(
            p_fail_first=outcome.p_fail_first,
            p_partial=list(outcome.p_partial),
            p_full=outcome.p_full,
        )


class DelaySummaryOut(BaseModel):
    eta: float
    t_eta: float
    p_idle: float
    t_dw: float
    t_ref: float
    gain: float
    idle_form: str

    @classmethod
    def from_domain(cls, s: DelaySummary) -> "DelaySummaryOut":
        return cls(
            eta=s.eta, t_eta=s.t_eta, p_idle=s.p_idle,
            t_dw=s.t_dw, t_ref=s.t_ref, gain=s.gain, idle_form=s.idle_form,
        )


class AnalyticRequest(BaseModel):
    system: SystemParamsIn
    code: CodeIn


class AnalyticResponse(BaseModel):
    summary: DelaySummaryOut
    outcome: OutcomeOut


class SimulateRequest(BaseModel):
    system: SystemParamsIn
    code: CodeIn
    num_requests: int = Field(ge=1)
    seed: int
    mode: SimMode = SimMode.FAITHFUL
    request_model: RequestModel | None = None
    warmup_requests: int | None = Field(default=None, ge=0)

    def to_domain(self) -> SimConfig:
        return SimConfig(
            params=self.system.to_domain(),
            code=self.code.to_domain(),
            num_requests=self.num_requests,
            seed=self.seed,
            mode=self.mode,
            request_model=self.request_model,
            warmup_requests=self.warmup_requests,
        )


class HalfStatsOut(BaseModel):
    mean: float
    stderr: float
    count: int


class SimReportOut(BaseModel):
    num_requests: int
    mean_delay: float
    delay_stderr: float
    busy_fraction: float
    busy_fraction_stderr: float
    n_d2d: int
    empirical_outcome: OutcomeOut | None
    mean_d2d_symbols: float
    mean_occupancy: float
    occupancy_stderr: float
    occupancy_first_half: HalfStatsOut
    occupancy_second_half: HalfStatsOut
    histogram_bin_width: float
    histogram: list[tuple[int, int]]
    storage_size_counts: list[int]
    mean_population: float | None

    @classmethod
    def from_domain(cls, r: SimReport) -> "SimReportOut":
        return cls(
            num_requests=r.num_requests,
            mean_delay=r.mean_delay,
            delay_stderr=r.delay_stderr,
            busy_fraction=r.busy_fraction,
            busy_fraction_stderr=r.busy_fraction_stderr,
            n_d2d=r.n_d2d,
            empirical_outcome=(
                OutcomeOut.from_domain(r.empirical_outcome) if r.empirical_outcome else None
            ),
            mean_d2d_symbols=r.mean_d2d_symbols,
            mean_occupancy=r.mean_occupancy,
            occupancy_stderr=r.occupancy_stderr,
            occupancy_first_half=HalfStatsOut(**vars(r.occupancy_first_half)),
            occupancy_second_half=HalfStatsOut(**vars(r.occupancy_second_half)),
            histogram_bin_width=r.histogram_bin_width,
            histogram=list(r.histogram),
            storage_size_counts=list(r.storage_size_counts),
            mean_population=r.mean_population,
        )


class DeltaGridIn(BaseModel):
    kind: str = "log"
    start: float = Field(default=1e-2, gt=0)
    stop: float = Field(default=1e2, gt=0)
    count: int = Field(default=25, ge=1)
    values: list[float] | None = None


class SweepRequest(BaseModel):
    m: float = Field(default=30.0, gt=0)
    mu: float = Field(default=1.0, gt=0)
    omega: float = Field(default=0.02, ge=0)
    t_ref: float = Field(default=1.0, gt=0)
    codes: list[tuple[int, int]] = Field(default_factory=lambda: list(DEFAULT_CODES))
    deltas: list[float] | None = None
    delta_grid: DeltaGridIn | None = None
    ratios: list[float] = Field(default_factory=lambda: list(DEFAULT_RATIOS))
    engine: str = "analytic"
    mode: SimMode = SimMode.FAITHFUL
    request_model: RequestModel | None = None
    num_requests: int = Field(default=100_000, ge=1)
    warmup_requests: int | None = Field(default=None, ge=0)
    seed: int = 20250101

    def to_domain(self) -> SweepSpec:
        if self.deltas is not None:
            deltas = tuple(self.deltas)
        elif self.delta_grid is not None:
            grid = self.delta_grid
            if grid.kind == "explicit":
                if not grid.values:
                    raise ConfigError("delta_grid.values must be a nonempty list")
                deltas = tuple(grid.values)
            elif grid.kind == "log":
                deltas = default_delta_grid(count=grid.count, start=grid.start, stop=grid.stop)
            else:
                raise ConfigError(f"delta_grid.kind must be 'log' or 'explicit', got {grid.kind!r}")
        else:
            deltas = default_delta_grid()
        return SweepSpec(
            m=self.m, mu=self.mu, omega=self.omega, t_ref=self.t_ref,
            codes=tuple((n, k) for n, k in self.codes),
            deltas=deltas,
            ratios=tuple(self.ratios),
            engine=self.engine,
            mode=self.mode,
            request_model=self.request_model,
            num_requests=self.num_requests,
            warmup_requests=self.warmup_requests,
            seed=self.seed,
        )


class SweepRowOut(BaseModel):
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

    @classmethod
    def from_domain(cls, row: SweepRow) -> "SweepRowOut":
        return cls(**vars(row))

    def to_domain(self) -> SweepRow:
        return SweepRow(**self.model_dump())


class SweepResponse(BaseModel):
    rows: list[SweepRowOut]


class CompareRequest(SweepRequest):
    threshold: float = Field(default=0.05, gt=0)


class ComparePairOut(BaseModel):
    analytic: SweepRowOut
    simulated: SweepRowOut
    t_dw_rel_diff: float
    busy_rel_diff: float
    flagged: bool


class CompareResponse(BaseModel):
    pairs: list[ComparePairOut]
    threshold: float
    flagged_count: int
    text: str

    @classmethod
    def from_domain(cls, report: CompareReport) -> "CompareResponse":
        return cls(
            pairs=[
                ComparePairOut(
                    analytic=SweepRowOut.from_domain(p.analytic),
                    simulated=SweepRowOut.from_domain(p.simulated),
                    t_dw_rel_diff=p.t_dw_rel_diff,
                    busy_rel_diff=p.busy_rel_diff,
                    flagged=p.flagged,
                )
                for p in report.pairs
            ],
            threshold=report.threshold,
            flagged_count=report.flagged_count,
            text=report.text,
        )


class PlotRequest(BaseModel):
    rows: list[SweepRowOut]
    plot: PlotKind = PlotKind.GAIN_VS_DELTA


def create_app() -> FastAPI:
    app = FastAPI(title="d2ddelay", version=__version__)

    @app.exception_handler(ConfigError)
    async def _config_error(_: Request, exc: ConfigError) -> JSONResponse:
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.exception_handler(ValueError)
    async def _value_error(_: Request, exc: ValueError) -> JSONResponse:
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.exception_handler(D2dDelayError)
    async def _domain_error(_: Request, exc: D2dDelayError) -> JSONResponse:
        return JSONResponse(status_code=500, content={"detail": str(exc)})

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok", "version": __version__}

    @app.post("/analytic", response_model=AnalyticResponse)
    def analytic(request: AnalyticRequest) -> AnalyticResponse:
        params = request.system.to_domain()
        code = request.code.to_domain()
        return AnalyticResponse(
            summary=DelaySummaryOut.from_domain(avg_download_delay(params, code)),
            outcome=OutcomeOut.from_domain(outcome_distribution(params, code)),
        )

    @app.post("/simulate", response_model=SimReportOut)
    def run_simulation(request: SimulateRequest) -> SimReportOut:
        return SimReportOut.from_domain(simulate(request.to_domain()))

    @app.post("/sweep", response_model=SweepResponse)
    def sweep(request: SweepRequest) -> SweepResponse:
        rows = run_sweep(request.to_domain())
        return SweepResponse(rows=[SweepRowOut.from_domain(r) for r in rows])

    @app.post("/compare", response_model=CompareResponse)
    def compare(request: CompareRequest) -> CompareResponse:
        spec = request.to_domain()
        return CompareResponse.from_domain(compare_report(spec, threshold=request.threshold))

    @app.post("/plot")
    def plot(request: PlotRequest) -> Response:
        svg = render_gain_vs_delta([row.to_domain() for row in request.rows])
        return Response(content=svg, media_type="image/svg+xml")

    return app


app = create_app()
