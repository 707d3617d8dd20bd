import csv
import json

import numpy as np
import pytest

from smartt_sim.cli import EXIT_INCOMPLETE, EXIT_INVALID, EXIT_OK, main
from smartt_sim.plots import CHART_KINDS, ChartError, fct_cdf_points, render_charts

CONFIG = {
    "topology": {"n_hosts": 16},
    "workload": {"kind": "incast", "fan_in": 4, "msg_size": 262144},
}


@pytest.fixture()
def config_file(tmp_path):
    p = tmp_path / "incast.json"
    p.write_text(json.dumps(CONFIG))
    return p


@pytest.fixture()
def report_dir(tmp_path, config_file):
    out = tmp_path / "run"
    assert main(["run", str(config_file), "--out", str(out)]) == EXIT_OK
    return out


def test_run_writes_report(report_dir, capsys):
    for name in ["flows.csv", "cwnd_trace.csv", "queues.csv", "summary.json", "manifest.json"]:
        assert (report_dir / name).exists()


def test_run_is_repeatable(tmp_path, config_file):
    for d in ("a", "b"):
        assert main(["run", str(config_file), "--seed", "4", "--out", str(tmp_path / d)]) == EXIT_OK
    for name in ["flows.csv", "summary.json", "cwnd_trace.csv"]:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_run_incomplete_exit_code(tmp_path):
    p = tmp_path / "short.json"
    p.write_text(json.dumps({**CONFIG, "t_end_ns": 5000}))
    assert main(["run", str(p), "--out", str(tmp_path / "o")]) == EXIT_INCOMPLETE


@pytest.mark.parametrize("patch", [
    {"nonsense": 1},
    {"red": {"kmin_frac": 0.9, "kmax_frac": 0.5}},
    {"topology": {"n_hosts": 16, "tiers": 5}},
])
def test_run_invalid_config_exit_code(tmp_path, patch, capsys):
    p = tmp_path / "bad.json"
    p.write_text(json.dumps({**CONFIG, **patch}))
    assert main(["run", str(p), "--out", str(tmp_path / "o")]) == EXIT_INVALID
    assert "error:" in capsys.readouterr().err
    assert not (tmp_path / "o").exists()


def test_missing_config_file(tmp_path):
    assert main(["run", str(tmp_path / "nope.json")]) == EXIT_INVALID


def test_sweep_writes_one_dir_per_value(tmp_path, config_file):
    out = tmp_path / "sw"
    rc = main(["sweep", str(config_file), "--param", "workload.fan_in", "--values", "2,3",
               "--out", str(out)])
    assert rc == EXIT_OK
    data = json.loads((out / "sweep.json").read_text())
    assert [p["value"] for p in data["points"]] == [2, 3]
    assert (out / "workload.fan_in=2" / "flows.csv").exists()


def test_sweep_validates_all_points_first(tmp_path, config_file):
    out = tmp_path / "sw"
    rc = main(["sweep", str(config_file), "--param", "workload.fan_in", "--values", "2,99",
               "--out", str(out)])
    assert rc == EXIT_INVALID
    assert not out.exists()


def test_plot_all_kinds(report_dir):
    assert main(["plot", str(report_dir)]) == EXIT_OK
    for kind in CHART_KINDS:
        text = (report_dir / f"{kind}.svg").read_text()
        assert text.lstrip().startswith("<?xml") and "<svg" in text


def test_plot_output_is_byte_stable(report_dir, tmp_path):
    a = render_charts(report_dir, ["fct_cdf", "cwnd_timeseries"], tmp_path / "a")
    b = render_charts(report_dir, ["fct_cdf", "cwnd_timeseries"], tmp_path / "b")
    for pa, pb in zip(a, b):
        assert pa.read_bytes() == pb.read_bytes()


def test_cdf_is_monotone_and_ends_at_one():
    x, y = fct_cdf_points([5, 1, 3, 3, 9])
    assert list(x) == [1, 3, 3, 5, 9]
    assert np.all(np.diff(y) > 0)
    assert y[-1] == 1.0


def test_missing_column_is_named(report_dir, tmp_path):
    bad = tmp_path / "bad"
    bad.mkdir()
    with open(report_dir / "flows.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    drop = rows[0].index("fct_ns")
    with open(bad / "flows.csv", "w", newline="") as fh:
        csv.writer(fh).writerows([r[:drop] + r[drop + 1:] for r in rows])
    with pytest.raises(ChartError, match="fct_ns"):
        render_charts(bad, ["fct_cdf"])
    assert main(["plot", str(bad), "--kind", "fct_cdf"]) == EXIT_INVALID


def test_empty_report_writes_nothing(tmp_path):
    d = tmp_path / "empty"
    assert main(["run", str(_write(tmp_path, {**CONFIG, "workload": {"fan_in": 0}})),
                 "--out", str(d)]) == EXIT_OK
    with pytest.raises(ChartError):
        render_charts(d, ["fct_cdf", "cwnd_timeseries"])
    assert not list(d.glob("*.svg"))


def test_missing_file_is_named(tmp_path):
    with pytest.raises(ChartError, match="flows.csv"):
        render_charts(tmp_path, ["fairness_bar"])


def _write(tmp_path, data):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(data))
    return p
