"""Command-line front end.

A thin client of the HTTP service: every subcommand builds a request from the
config file plus flag overrides (flag beats file beats default), sends it to
the service, and writes the response to files or stdout.  Without ``--server``
the service app runs in-process, so no daemon is needed.

Exit codes: 0 success, 1 validation error, 2 runtime error, 3 flagged strict
comparison.
"""

from __future__ import annotations

import argparse
import json
import sys

import httpx

from .config import build_spec, load_raw, merge_overrides
from .errors import ConfigError, D2dDelayError
from .sweep import SweepRow, SweepSpec, emit_csv, read_csv_rows


class _ExitError(Exception):
    def __init__(self, code: int, message: str) -> None:
        super().__init__(message)
        self.code = code


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # usage problems are validation errors
        raise _ExitError(1, f"{self.prog}: {message}")


def _client(server: str | None):
    if server:
        return httpx.Client(base_url=server.rstrip("/"), timeout=httpx.Timeout(None))
    import warnings

    with warnings.catch_warnings():
        # starlette suggests an httpx successor that is not released yet
        warnings.simplefilter("ignore")
        from fastapi.testclient import TestClient

    from .service import app

    return TestClient(app)


def _checked(response: httpx.Response) -> httpx.Response:
    if response.status_code >= 400:
        try:
            detail = response.json().get("detail", response.text)
        except ValueError:
            detail = response.text
        raise _ExitError(1 if response.status_code < 500 else 2, f"service error: {detail}")
    return response


def _parse_codes(text: str) -> list[list[int]]:
    codes = []
    for chunk in text.replace(";", " ").split():
        parts = chunk.split(",")
        if len(parts) != 2:
            raise ConfigError(f"--codes entry {chunk!r} is not an n,k pair")
        try:
            codes.append([int(parts[0]), int(parts[1])])
        except ValueError:
            raise ConfigError(f"--codes entry {chunk!r} is not an n,k integer pair") from None
    if not codes:
        raise ConfigError("--codes needs at least one n,k pair")
    return codes


def _parse_floats(text: str, flag: str) -> list[float]:
    try:
        values = [float(v) for v in text.split(",") if v]
    except ValueError:
        raise ConfigError(f"{flag} must be comma-separated numbers, got {text!r}") from None
    if not values:
        raise ConfigError(f"{flag} needs at least one value")
    return values


def _collect_overrides(args: argparse.Namespace) -> dict:
    system = {}
    if args.m is not None:
        system["expected_node_count"] = args.m
    if args.mu is not None:
        system["departure_rate"] = args.mu
    if args.omega is not None:
        system["request_rate_per_node"] = args.omega
    if args.t_ref is not None:
        system["t_ref"] = args.t_ref

    sweep: dict = {}
    if getattr(args, "codes", None) is not None:
        sweep["codes"] = _parse_codes(args.codes)
    if getattr(args, "ratios", None) is not None:
        sweep["ratios"] = _parse_floats(args.ratios, "--ratios")
    if getattr(args, "engine", None) is not None:
        sweep["engine"] = args.engine
    delta_start = getattr(args, "delta_start", None)
    delta_stop = getattr(args, "delta_stop", None)
    delta_count = getattr(args, "delta_count", None)
    if getattr(args, "deltas", None) is not None:
        if any(v is not None for v in (delta_start, delta_stop, delta_count)):
            raise ConfigError("--deltas conflicts with --delta-start/--delta-stop/--delta-count")
        sweep["delta_grid"] = {"kind": "explicit", "values": _parse_floats(args.deltas, "--deltas")}
    elif any(v is not None for v in (delta_start, delta_stop, delta_count)):
        grid = {"kind": "log"}
        if delta_start is not None:
            grid["start"] = delta_start
        if delta_stop is not None:
            grid["stop"] = delta_stop
        if delta_count is not None:
            grid["count"] = delta_count
        sweep["delta_grid"] = grid

    simulation = {}
    for flag, key in (
        ("num_requests", "num_requests"),
        ("warmup_requests", "warmup_requests"),
        ("mode", "mode"),
        ("request_model", "request_model"),
        ("seed", "seed"),
    ):
        value = getattr(args, flag, None)
        if value is not None:
            simulation[key] = value

    overrides = {}
    if system:
        overrides["system"] = system
    if sweep:
        overrides["sweep"] = sweep
    if simulation:
        overrides["simulation"] = simulation
    return overrides


def _build_sweep_spec(args: argparse.Namespace) -> SweepSpec:
    raw = load_raw(args.config) if args.config else {}
    return build_spec(merge_overrides(raw, _collect_overrides(args)))


def _spec_body(spec: SweepSpec) -> dict:
    return {
        "m": spec.m,
        "mu": spec.mu,
        "omega": spec.omega,
        "t_ref": spec.t_ref,
        "codes": [list(c) for c in spec.codes],
        "deltas": list(spec.deltas),
        "ratios": list(spec.ratios),
        "engine": spec.engine,
        "mode": spec.mode.value,
        "request_model": spec.request_model.value if spec.request_model else None,
        "num_requests": spec.num_requests,
        "warmup_requests": spec.warmup_requests,
        "seed": spec.seed,
    }


def _point_body(args: argparse.Namespace, spec: SweepSpec) -> dict:
    if args.t_bs is not None:
        t_bs = args.t_bs
    else:
        t_bs = spec.t_ref / args.k
    if args.t_d is not None:
        t_d = args.t_d
    else:
        ratio = args.ratio if args.ratio is not None else spec.ratios[0]
        t_d = t_bs / ratio
    return {
        "system": {
            "m": spec.m,
            "mu": spec.mu,
            "omega": spec.omega,
            "t_d": t_d,
            "t_bs": t_bs,
            "delta": args.delta,
        },
        "code": {"n": args.n, "k": args.k},
    }


def _rows_from_payload(payload: list[dict]) -> list[SweepRow]:
    return [SweepRow(**record) for record in payload]


def _rows_payload(rows: list[SweepRow]) -> list[dict]:
    return [vars(row) for row in rows]


def _filter_ratio(rows: list[SweepRow], ratio: float | None) -> list[SweepRow]:
    if ratio is None:
        ratios = sorted({round(r.t_bs / r.t_d, 6) for r in rows})
        if len(ratios) > 1:
            raise ConfigError(
                f"rows contain several ratios {ratios}; pick one with --ratio/--plot-ratio"
            )
        return rows
    picked = [r for r in rows if abs(r.t_bs / r.t_d - ratio) <= 1e-6 * ratio]
    if not picked:
        raise ConfigError(f"no rows with t_bs/t_d ratio {ratio}")
    return picked


def _cmd_analytic(args: argparse.Namespace) -> int:
    spec = _build_sweep_spec(args)
    with _client(args.server) as client:
        response = _checked(client.post("/analytic", json=_point_body(args, spec)))
    print(json.dumps(response.json(), indent=2))
    return 0


def _cmd_simulate(args: argparse.Namespace) -> int:
    spec = _build_sweep_spec(args)
    body = _point_body(args, spec)
    body.update(
        num_requests=spec.num_requests,
        warmup_requests=spec.warmup_requests,
        seed=spec.seed,
        mode=spec.mode.value,
        request_model=spec.request_model.value if spec.request_model else None,
    )
    with _client(args.server) as client:
        response = _checked(client.post("/simulate", json=body))
    print(json.dumps(response.json(), indent=2))
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    spec = _build_sweep_spec(args)
    with _client(args.server) as client:
        response = _checked(client.post("/sweep", json=_spec_body(spec)))
        rows = _rows_from_payload(response.json()["rows"])
        emit_csv(rows, args.out)
        print(f"wrote {len(rows)} rows to {args.out}")
        if args.svg:
            ratio = args.plot_ratio if args.plot_ratio is not None else spec.ratios[0]
            picked = _filter_ratio(rows, ratio)
            svg = _checked(
                client.post("/plot", json={"rows": _rows_payload(picked)})
            )
            with open(args.svg, "w", newline="") as fh:
                fh.write(svg.text)
            print(f"wrote plot to {args.svg}")
    return 0


def _cmd_plot(args: argparse.Namespace) -> int:
    rows = _filter_ratio(read_csv_rows(args.csv), args.ratio)
    with _client(args.server) as client:
        response = _checked(client.post("/plot", json={"rows": _rows_payload(rows)}))
    with open(args.out, "w", newline="") as fh:
        fh.write(response.text)
    print(f"wrote plot to {args.out}")
    return 0


def _cmd_compare(args: argparse.Namespace) -> int:
    spec = _build_sweep_spec(args)
    body = _spec_body(spec)
    body["threshold"] = args.threshold
    with _client(args.server) as client:
        response = _checked(client.post("/compare", json=body))
    report = response.json()
    print(report["text"])
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(report["text"] + "\n")
    if args.strict and report["flagged_count"] > 0:
        return 3
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import app

    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="YAML config file (see README for the schema)")
    parser.add_argument("--server", help="base URL of a running service; default runs in-process")
    parser.add_argument("--m", type=float, help="expected node count")
    parser.add_argument("--mu", type=float, help="departure rate per node")
    parser.add_argument("--omega", type=float, help="request rate per node")
    parser.add_argument("--t-ref", dest="t_ref", type=float, help="whole-file BS delay")


def _add_sim_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--num-requests", dest="num_requests", type=int)
    parser.add_argument("--warmup-requests", dest="warmup_requests", type=int)
    parser.add_argument("--mode", choices=["faithful", "physical"])
    parser.add_argument("--request-model", dest="request_model",
                        choices=["aggregate-poisson", "per-node"])
    parser.add_argument("--seed", type=int)


def _add_sweep_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--codes", help="code list, e.g. '1,1;2,1;4,2'")
    parser.add_argument("--ratios", help="comma-separated t_bs/t_d ratios")
    parser.add_argument("--deltas", help="explicit comma-separated repair intervals")
    parser.add_argument("--delta-start", dest="delta_start", type=float)
    parser.add_argument("--delta-stop", dest="delta_stop", type=float)
    parser.add_argument("--delta-count", dest="delta_count", type=int)
    parser.add_argument("--engine", choices=["analytic", "simulate", "both"])
    _add_sim_flags(parser)


def _add_point_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--n", type=int, required=True, help="code length")
    parser.add_argument("--k", type=int, required=True, help="code dimension")
    parser.add_argument("--delta", type=float, required=True, help="repair interval")
    parser.add_argument("--ratio", type=float, help="t_bs/t_d ratio (default: first configured)")
    parser.add_argument("--t-d", dest="t_d", type=float, help="explicit D2D symbol time")
    parser.add_argument("--t-bs", dest="t_bs", type=float, help="explicit BS symbol time")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="d2ddelay", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analytic", help="closed-form delay summary at one point")
    _add_common(p)
    _add_point_flags(p)
    p.set_defaults(func=_cmd_analytic)

    p = sub.add_parser("simulate", help="one discrete-event simulation run")
    _add_common(p)
    _add_point_flags(p)
    _add_sim_flags(p)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("sweep", help="sweep codes x ratios x repair intervals to CSV")
    _add_common(p)
    _add_sweep_flags(p)
    p.add_argument("--out", default="sweep.csv", help="output CSV path")
    p.add_argument("--svg", help="also render a gain chart to this SVG path")
    p.add_argument("--plot-ratio", dest="plot_ratio", type=float,
                   help="ratio to plot (default: first ratio of the sweep)")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("plot", help="render a gain chart from a sweep CSV")
    p.add_argument("--config", help=argparse.SUPPRESS)
    p.add_argument("--server", help="base URL of a running service")
    p.add_argument("--csv", required=True, help="input CSV from the sweep command")
    p.add_argument("--out", required=True, help="output SVG path")
    p.add_argument("--ratio", type=float, help="ratio to plot if the CSV holds several")
    p.set_defaults(func=_cmd_plot)

    p = sub.add_parser("compare", help="paired analytic-vs-simulation report")
    _add_common(p)
    _add_sweep_flags(p)
    p.add_argument("--threshold", type=float, default=0.05,
                   help="relative difference that flags a row (default 0.05)")
    p.add_argument("--strict", action="store_true",
                   help="exit with status 3 when any row is flagged")
    p.add_argument("--out", help="also write the report text to this path")
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except _ExitError as exc:
        print(str(exc), file=sys.stderr)
        return exc.code
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return 1
    except (OSError, httpx.HTTPError, D2dDelayError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
