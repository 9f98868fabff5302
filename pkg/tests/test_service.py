"""HTTP service endpoints and the thin CLI client."""

import json
import warnings

import pytest

with warnings.catch_warnings():
    warnings.simplefilter("ignore")
    from fastapi.testclient import TestClient

from d2ddelay import CodeParams, SimConfig, SystemParams, avg_download_delay, simulate
from d2ddelay.cli import main
from d2ddelay.service import app
from d2ddelay.sweep import SweepSpec, run_sweep


@pytest.fixture(scope="module")
def client():
    with TestClient(app) as tc:
        yield tc


SYSTEM = {"m": 30.0, "mu": 1.0, "omega": 0.02, "t_d": 0.05, "t_bs": 0.5, "delta": 1.0}


class TestEndpoints:
    def test_health(self, client):
        body = client.get("/health").json()
        assert body["status"] == "ok"

    def test_analytic_matches_library(self, client):
        response = client.post("/analytic", json={"system": SYSTEM, "code": {"n": 4, "k": 2}})
        assert response.status_code == 200
        summary = avg_download_delay(
            SystemParams(**SYSTEM), CodeParams(4, 2)
        )
        body = response.json()
        assert body["summary"]["t_dw"] == pytest.approx(summary.t_dw, rel=1e-12)
        assert body["summary"]["gain"] == pytest.approx(summary.gain, rel=1e-12)
        assert body["outcome"]["p_full"] + body["outcome"]["p_fail_first"] + sum(
            body["outcome"]["p_partial"]
        ) == pytest.approx(1.0, abs=1e-8)

    def test_analytic_rejects_bad_field(self, client):
        bad = dict(SYSTEM, m=-3)
        assert client.post("/analytic", json={"system": bad, "code": {"n": 4, "k": 2}}).status_code == 422

    def test_analytic_rejects_bad_code(self, client):
        response = client.post("/analytic", json={"system": SYSTEM, "code": {"n": 1, "k": 2}})
        assert response.status_code == 400
        assert "k <= n" in response.json()["detail"]

    def test_simulate_matches_library(self, client):
        request = {
            "system": SYSTEM, "code": {"n": 4, "k": 2},
            "num_requests": 1500, "warmup_requests": 100, "seed": 77,
        }
        body = client.post("/simulate", json=request).json()
        report = simulate(
            SimConfig(
                params=SystemParams(**SYSTEM), code=CodeParams(4, 2),
                num_requests=1500, warmup_requests=100, seed=77,
            )
        )
        assert body["mean_delay"] == report.mean_delay
        assert body["busy_fraction"] == report.busy_fraction
        assert tuple(map(tuple, body["histogram"])) == report.histogram

    def test_sweep_matches_library(self, client):
        request = {
            "codes": [[2, 1], [4, 2]], "deltas": [0.1, 1.0], "ratios": [10.0],
            "engine": "analytic",
        }
        body = client.post("/sweep", json=request).json()
        rows = run_sweep(SweepSpec(codes=((2, 1), (4, 2)), deltas=(0.1, 1.0), ratios=(10.0,)))
        assert len(body["rows"]) == len(rows)
        assert body["rows"][0]["t_dw"] == rows[0].t_dw

    def test_sweep_grid_request(self, client):
        request = {"delta_grid": {"kind": "log", "start": 0.1, "stop": 10.0, "count": 3},
                   "codes": [[2, 1]], "ratios": [10.0]}
        body = client.post("/sweep", json=request).json()
        assert [row["delta"] for row in body["rows"]] == pytest.approx([0.1, 1.0, 10.0])

    def test_sweep_rejects_unknown_engine(self, client):
        response = client.post("/sweep", json={"engine": "quantum", "codes": [[2, 1]],
                                               "deltas": [1.0], "ratios": [10.0]})
        assert response.status_code == 400

    def test_compare_endpoint(self, client):
        request = {
            "codes": [[2, 1]], "deltas": [1.0], "ratios": [10.0],
            "num_requests": 3000, "warmup_requests": 300, "seed": 5,
            "threshold": 0.5,
        }
        body = client.post("/compare", json=request).json()
        assert body["flagged_count"] == 0
        assert len(body["pairs"]) == 1
        assert body["pairs"][0]["analytic"]["engine"] == "analytic"

    def test_plot_endpoint(self, client):
        rows = client.post(
            "/sweep",
            json={"codes": [[2, 1]], "deltas": [0.1, 1.0, 10.0], "ratios": [10.0]},
        ).json()["rows"]
        response = client.post("/plot", json={"rows": rows})
        assert response.status_code == 200
        assert response.headers["content-type"].startswith("image/svg+xml")
        assert response.text.startswith("<svg ")
        again = client.post("/plot", json={"rows": rows})
        assert again.text == response.text

    def test_plot_rejects_mixed_ratios(self, client):
        rows = client.post(
            "/sweep",
            json={"codes": [[2, 1]], "deltas": [1.0], "ratios": [10.0, 100.0]},
        ).json()["rows"]
        assert client.post("/plot", json={"rows": rows}).status_code == 400


class TestCli:
    def test_analytic_prints_summary(self, capsys):
        assert main(["analytic", "--n", "4", "--k", "2", "--delta", "1.0", "--ratio", "10"]) == 0
        body = json.loads(capsys.readouterr().out)
        assert body["summary"]["gain"] == pytest.approx(2.6646875112167696, rel=1e-9)

    def test_simulate_with_flags(self, capsys):
        code = main([
            "simulate", "--n", "2", "--k", "1", "--delta", "1.0", "--ratio", "10",
            "--num-requests", "800", "--warmup-requests", "50", "--seed", "3",
        ])
        assert code == 0
        body = json.loads(capsys.readouterr().out)
        assert body["num_requests"] == 800

    def test_sweep_writes_csv_and_svg(self, tmp_path, capsys):
        out = tmp_path / "rows.csv"
        svg = tmp_path / "rows.svg"
        code = main([
            "sweep", "--codes", "2,1;4,2", "--deltas", "0.1,1.0", "--ratios", "10",
            "--out", str(out), "--svg", str(svg),
        ])
        assert code == 0
        assert out.read_text().startswith("n,k,delta,")
        assert svg.read_text().startswith("<svg ")

    def test_plot_from_csv(self, tmp_path):
        out = tmp_path / "rows.csv"
        svg = tmp_path / "plot.svg"
        assert main(["sweep", "--codes", "4,2", "--deltas", "0.1,1.0,5.0",
                     "--ratios", "10", "--out", str(out)]) == 0
        assert main(["plot", "--csv", str(out), "--out", str(svg)]) == 0
        assert svg.read_text().startswith("<svg ")

    def test_config_file_with_override(self, tmp_path, capsys):
        cfg = tmp_path / "sweep.yaml"
        cfg.write_text(
            "system:\n  expected_node_count: 30\n"
            "sweep:\n  codes: [[2, 1]]\n  ratios: [10]\n"
            "  delta_grid: {kind: explicit, values: [1.0]}\n"
        )
        out = tmp_path / "rows.csv"
        assert main(["sweep", "--config", str(cfg), "--codes", "4,2", "--out", str(out)]) == 0
        text = out.read_text()
        assert "4,2,1," in text and "2,1,1," not in text

    def test_unknown_config_key_exits_1(self, tmp_path, capsys):
        cfg = tmp_path / "bad.yaml"
        cfg.write_text("sweep:\n  engines: [analytic]\n")
        assert main(["sweep", "--config", str(cfg), "--out", str(tmp_path / "x.csv")]) == 1
        assert "engines" in capsys.readouterr().err

    def test_bad_flag_usage_exits_1(self, capsys):
        assert main(["analytic", "--n", "4"]) == 1

    def test_bad_code_pair_exits_1(self, capsys):
        assert main(["sweep", "--codes", "banana", "--out", "x.csv"]) == 1

    def test_compare_strict_exit_code(self, tmp_path, capsys):
        argv = [
            "compare", "--codes", "4,2", "--deltas", "1.0", "--ratios", "10",
            "--num-requests", "1200", "--warmup-requests", "100", "--seed", "8",
            "--threshold", "1e-5", "--strict", "--out", str(tmp_path / "report.txt"),
        ]
        assert main(argv) == 3
        text = (tmp_path / "report.txt").read_text()
        assert "FLAG" in text
        relaxed = [a for a in argv if a != "--strict"]
        assert main(relaxed) == 0

    def test_missing_csv_exits_2(self, capsys):
        assert main(["plot", "--csv", "/nonexistent/rows.csv", "--out", "x.svg"]) == 2
