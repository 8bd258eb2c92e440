"""Command-line interface: artifacts, config precedence, and exit codes."""

from __future__ import annotations

import json

import numpy as np
import pytest

import gridstash.cli as cli
import gridstash.gmm
from gridstash.data_io import load_load_trace, load_price_trace
from gridstash.errors import DegenerateFitError
from gridstash.gmm import load_model


def run(*argv) -> int:
    return cli.main(list(argv))


@pytest.fixture
def price_csv(tmp_path):
    path = tmp_path / "prices.csv"
    assert run("synth", "--kind", "price", "--hours", str(24 * 28), "--seed", "1",
               "--out", str(path)) == 0
    return path


@pytest.fixture
def load_csv(tmp_path):
    path = tmp_path / "loads.csv"
    assert run("synth", "--kind", "load", "--hours", str(24 * 28), "--seed", "2",
               "--out", str(path)) == 0
    return path


def test_synth_writes_parseable_traces(price_csv, load_csv):
    prices = load_price_trace(price_csv)
    loads = load_load_trace(load_csv)
    assert len(prices) == 24 * 28
    assert len(loads) == 24 * 28
    assert np.all(loads.values >= 0.0)


def test_synth_is_seed_deterministic(tmp_path):
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    assert run("synth", "--kind", "price", "--hours", "48", "--seed", "7", "--out", str(a)) == 0
    assert run("synth", "--kind", "price", "--hours", "48", "--seed", "7", "--out", str(b)) == 0
    assert a.read_bytes() == b.read_bytes()


def test_synth_peak_shift_raises_peak_prices(tmp_path):
    path = tmp_path / "peaky.csv"
    assert run("synth", "--kind", "price", "--hours", str(24 * 60), "--seed", "3",
               "--peak-shift", "40", "--peak-hours", "17-20", "--out", str(path)) == 0
    trace = load_price_trace(path)
    hod = trace.hours_of_day()
    peak = trace.values[(hod >= 17) & (hod <= 20)]
    off = trace.values[(hod < 17) | (hod > 20)]
    assert peak.mean() > off.mean() + 20.0


def test_synth_rejects_bad_kind(tmp_path):
    assert run("synth", "--kind", "price", "--hours", "0",
               "--out", str(tmp_path / "x.csv")) == 2


def test_fit_outputs_and_reproducibility(price_csv, tmp_path):
    out = tmp_path / "fit"
    argv = ("fit", "--prices", str(price_csv), "--k-max", "4", "--seed", "0",
            "--out", str(out), "--reproducible")
    assert run(*argv) == 0
    model = load_model(out / "model.json")
    assert 1 <= model.n_components <= 4
    report = json.loads((out / "fit_report.json").read_text())
    assert report["selected_components"] == model.n_components
    assert "created_at" not in report
    lines = (out / "bic.csv").read_text().strip().splitlines()
    assert lines[0].startswith("K,")
    assert len(lines) == 5  # header + K=1..4
    assert sum(int(line.split(",")[-1]) for line in lines[1:]) == 1  # one selected

    first = {p.name: p.read_bytes() for p in out.iterdir()}
    assert run(*argv) == 0
    second = {p.name: p.read_bytes() for p in out.iterdir()}
    assert first == second  # byte-identical rerun


def test_fit_without_reproducible_stamps_timestamp(price_csv, tmp_path):
    out = tmp_path / "fit"
    assert run("fit", "--prices", str(price_csv), "--k-max", "2", "--out", str(out)) == 0
    report = json.loads((out / "fit_report.json").read_text())
    assert "created_at" in report


def test_fit_missing_file_exits_2(tmp_path):
    assert run("fit", "--prices", str(tmp_path / "nope.csv"),
               "--out", str(tmp_path / "out")) == 2


def test_fit_gap_trace_exits_2(tmp_path):
    bad = tmp_path / "gap.csv"
    bad.write_text("timestamp,price\n2020-01-01T00:00,1.0\n2020-01-01T02:00,2.0\n")
    assert run("fit", "--prices", str(bad), "--out", str(tmp_path / "out")) == 2


def test_fit_degenerate_exits_3(price_csv, tmp_path, monkeypatch):
    def always_degenerate(*args, **kwargs):
        raise DegenerateFitError("forced by test")

    monkeypatch.setattr(gridstash.gmm, "em_fit", always_degenerate)
    assert run("fit", "--prices", str(price_csv), "--k-max", "3",
               "--out", str(tmp_path / "out")) == 3


def test_backtest_end_to_end(price_csv, load_csv, tmp_path):
    out = tmp_path / "bt"
    assert run("backtest", "--prices", str(price_csv), "--loads", str(load_csv),
               "--train-days", "21", "--variant", "single", "--capacity-fraction", "0.5",
               "--k-max", "3", "--out", str(out), "--reproducible") == 0
    report = json.loads((out / "report.json").read_text())
    assert report["config"]["train_days"] == 21
    assert report["config"]["test_slots"] == 7 * 24
    assert report["summary"]["beta_mean"] >= 1.0 - 1e-12
    assert all(row["beta"] >= 1.0 - 1e-12 for row in report["beta"])
    assert (out / "estimator.json").exists()
    assert (out / "decisions.csv").read_text().startswith("piece_id,")
    beta_lines = (out / "beta.csv").read_text().strip().splitlines()
    assert beta_lines[0] == "day,beta"
    assert len(beta_lines) == 1 + len(report["beta"])


def test_backtest_variants_all_run(price_csv, load_csv, tmp_path):
    for variant in ("single", "hourly", "peak-offpeak"):
        out = tmp_path / variant
        assert run("backtest", "--prices", str(price_csv), "--loads", str(load_csv),
                   "--train-days", "21", "--variant", variant, "--capacity", "2.0",
                   "--k-max", "2", "--out", str(out)) == 0
        report = json.loads((out / "report.json").read_text())
        assert report["config"]["variant"] == variant
        assert report["estimator"]["variant"] == variant


def test_backtest_requires_exactly_one_capacity_flag(price_csv, load_csv, tmp_path):
    base = ("backtest", "--prices", str(price_csv), "--loads", str(load_csv),
            "--train-days", "21", "--out", str(tmp_path / "o"))
    assert run(*base) == 2  # neither
    assert run(*base, "--capacity", "1.0", "--capacity-fraction", "0.1") == 2  # both


def test_backtest_misaligned_traces_exit_2(price_csv, tmp_path):
    short = tmp_path / "short.csv"
    assert run("synth", "--kind", "load", "--hours", "240", "--seed", "0",
               "--out", str(short)) == 0
    assert run("backtest", "--prices", str(price_csv), "--loads", str(short),
               "--train-days", "5", "--capacity", "1.0",
               "--out", str(tmp_path / "o")) == 2


def test_backtest_short_trace_exits_4(tmp_path):
    prices = tmp_path / "p.csv"
    loads = tmp_path / "l.csv"
    assert run("synth", "--kind", "price", "--hours", "48", "--seed", "0",
               "--out", str(prices)) == 0
    assert run("synth", "--kind", "load", "--hours", "48", "--seed", "0",
               "--out", str(loads)) == 0
    # 5 training days cannot come out of a 2-day trace
    assert run("backtest", "--prices", str(prices), "--loads", str(loads),
               "--train-days", "5", "--capacity", "1.0",
               "--out", str(tmp_path / "o")) == 4


def test_config_file_supplies_defaults_and_flags_win(price_csv, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({
        "prices": str(price_csv),
        "k_max": 1,
        "out": str(tmp_path / "from_config"),
    }))
    assert run("fit", "--config", str(cfg), "--reproducible") == 0
    model = load_model(tmp_path / "from_config" / "model.json")
    assert model.n_components == 1  # k_max came from the config

    assert run("fit", "--config", str(cfg), "--out", str(tmp_path / "flag_out"),
               "--k-max", "2", "--reproducible") == 0
    assert (tmp_path / "flag_out" / "model.json").exists()
    lines = (tmp_path / "flag_out" / "bic.csv").read_text().strip().splitlines()
    assert len(lines) == 3  # header + K=1,2: flag overrode config's k_max=1


def test_config_must_be_json_object(price_csv, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text("[1, 2, 3]")
    assert run("fit", "--config", str(cfg), "--prices", str(price_csv),
               "--out", str(tmp_path / "o")) == 2
    cfg.write_text("{not json")
    assert run("fit", "--config", str(cfg), "--prices", str(price_csv),
               "--out", str(tmp_path / "o")) == 2


def test_montecarlo_one_shot(tmp_path):
    out = tmp_path / "mc"
    assert run("montecarlo", "--mode", "one-shot", "--horizons", "2,4",
               "--runs", "500", "--seed", "9", "--bound", "--out", str(out),
               "--reproducible") == 0
    report = json.loads((out / "report.json").read_text())
    assert [row["T"] for row in report["gamma"]] == [2, 4]
    assert all(row["bound"] is not None for row in report["gamma"])
    lines = (out / "gamma.csv").read_text().strip().splitlines()
    assert lines[0] == "T,gamma_mean,gamma_ci_lo,gamma_ci_hi"
    assert len(lines) == 3


def test_montecarlo_general(tmp_path):
    out = tmp_path / "mcg"
    assert run("montecarlo", "--mode", "general", "--days", "5", "--seed", "4",
               "--capacity-fraction", "0.2", "--out", str(out), "--reproducible") == 0
    report = json.loads((out / "report.json").read_text())
    assert report["kind"] == "general_serving"
    assert all(row["beta"] >= 1.0 - 1e-12 for row in report["beta"])
    lines = (out / "beta.csv").read_text().strip().splitlines()
    assert lines[0] == "day,beta"
    assert len(lines) == 1 + len(report["beta"])


def test_montecarlo_accepts_fitted_model(price_csv, tmp_path):
    fit_out = tmp_path / "fit"
    assert run("fit", "--prices", str(price_csv), "--k-max", "3",
               "--out", str(fit_out)) == 0
    out = tmp_path / "mc"
    assert run("montecarlo", "--mode", "one-shot", "--horizons", "3",
               "--runs", "200", "--model", str(fit_out / "model.json"),
               "--out", str(out)) == 0


def test_size_with_explicit_grid(price_csv, load_csv, tmp_path):
    out = tmp_path / "size"
    assert run("size", "--prices", str(price_csv), "--loads", str(load_csv),
               "--grid", "0,1,2,4", "--amortized-price", "3.0",
               "--out", str(out), "--reproducible") == 0
    doc = json.loads((out / "result.json").read_text())
    assert doc["grid"] == [0.0, 1.0, 2.0, 4.0]
    assert len(doc["min_cost"]) == 4
    assert len(doc["marginal_saving"]) == 3
    assert doc["chosen"]["capacity"] in doc["grid"]
    lines = (out / "curve.csv").read_text().strip().splitlines()
    assert lines[0] == "B,min_cost,marginal_saving"
    assert len(lines) == 5


def test_size_auto_grid(price_csv, load_csv, tmp_path):
    out = tmp_path / "size"
    assert run("size", "--prices", str(price_csv), "--loads", str(load_csv),
               "--grid-points", "6", "--out", str(out)) == 0
    doc = json.loads((out / "result.json").read_text())
    assert len(doc["grid"]) == 6
    assert doc["grid"][0] == 0.0
    assert "chosen" not in doc
    costs = doc["min_cost"]
    assert all(b <= a + 1e-9 for a, b in zip(costs, costs[1:]))


def test_missing_required_option_exits_2(tmp_path):
    assert run("fit", "--out", str(tmp_path / "o")) == 2  # no --prices anywhere


def test_unknown_subcommand_exits_via_argparse():
    with pytest.raises(SystemExit) as exc:
        run("frobnicate")
    assert exc.value.code == 2
