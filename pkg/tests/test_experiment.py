"""Experiment orchestration, metrics and CSV outputs."""

import csv
from pathlib import Path

import pytest

from uwalink import ScenarioError, replication_metrics, run_experiment
from uwalink.experiment import _INTERVAL_COLUMNS

from conftest import make_link


def read_csv(path: Path):
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# config_hash=")
    return lines[0], list(csv.reader(lines[1:]))


@pytest.fixture(scope="module")
def small_result(tmp_path_factory):
    out = tmp_path_factory.mktemp("exp") / "run"
    sc = make_link(duration_s=1800.0, replications=3)
    return run_experiment(sc, out_dir=out)


def test_in_memory_run():
    sc = make_link(duration_s=1200.0, replications=2)
    result = run_experiment(sc)
    assert result.out_dir is None
    assert len(result.episodes) == 2
    assert result.oracle is not None
    assert len(result.intervals) == sum(len(e.intervals) for e in result.episodes)


def test_seed_and_replication_overrides():
    sc = make_link(duration_s=1200.0)
    result = run_experiment(sc, seed=99, replications=2)
    assert result.scenario.seed == 99
    assert len(result.episodes) == 2


def test_output_files_exist(small_result):
    out = small_result.out_dir
    for rel in ("intervals.csv", "summary.csv", "oracle.json",
                "plotdata/learning_curves.csv",
                "plotdata/selection_histograms.csv",
                "plotdata/regret_curve.csv"):
        assert (out / rel).exists(), rel


def test_intervals_csv_contract(small_result):
    stamp, rows = read_csv(small_result.out_dir / "intervals.csv")
    sc = small_result.scenario
    assert f"config_hash={sc.config_hash()}" in stamp
    assert f"seed={sc.seed}" in stamp
    assert rows[0] == _INTERVAL_COLUMNS
    assert len(_INTERVAL_COLUMNS) == 26
    body = rows[1:]
    assert len(body) == len(small_result.intervals)
    reps = {int(r[0]) for r in body}
    assert reps == {0, 1, 2}


def test_every_csv_is_stamped(small_result):
    out = small_result.out_dir
    for rel in ("intervals.csv", "summary.csv",
                "plotdata/learning_curves.csv",
                "plotdata/selection_histograms.csv",
                "plotdata/regret_curve.csv"):
        first = (out / rel).read_text().splitlines()[0]
        assert first.startswith("# config_hash="), rel
        assert "version=" in first


def test_summary_is_long_format(small_result):
    _, rows = read_csv(small_result.out_dir / "summary.csv")
    header, body = rows[0], rows[1:]
    assert header == ["scenario", "policy", "nodes", "metric", "mean",
                      "stddev", "n"]
    metrics = {r[3] for r in body}
    for expected in ("throughput_bits", "energy_total_j", "delivery_rate",
                     "aoi_mean_slots", "regret_final", "freq_interval_4"):
        assert expected in metrics
    for row in body:
        assert int(row[6]) == 3


def test_selection_histogram_keys(small_result):
    _, rows = read_csv(small_result.out_dir / "plotdata/selection_histograms.csv")
    body = rows[1:]
    kinds = {r[3] for r in body}
    assert kinds == {"action", "interval"}
    action_keys = {r[4] for r in body if r[3] == "action"}
    assert action_keys <= {f"{m}/{p}" for m in ("bpsk", "psk8", "psk16")
                           for p in ("low", "medium", "high")}
    interval_keys = {r[4] for r in body if r[3] == "interval"}
    assert interval_keys <= {"4min", "7min", "10min"}


def test_regret_curve_rows(small_result):
    _, rows = read_csv(small_result.out_dir / "plotdata/regret_curve.csv")
    body = rows[1:]
    assert rows[0] == ["replication", "slot", "cumulative_regret"]
    n_slots = small_result.scenario.n_slots
    assert len(body) == 3 * n_slots
    last = [float(r[2]) for r in body if int(r[1]) == n_slots - 1]
    assert all(v > 0 for v in last)


def test_replication_metrics_sanity(small_result):
    per_rep = replication_metrics(small_result)
    assert len(per_rep) == 3
    for m in per_rep:
        assert 0.0 <= m["delivery_rate"] <= 1.0
        assert 0.0 <= m["throughput_norm"] <= 1.0
        assert m["energy_total_j"] == pytest.approx(
            m["energy_data_j"] + m["energy_fb_j"])
        mod_total = sum(v for k, v in m.items() if k.startswith("freq_mod_"))
        assert mod_total == pytest.approx(1.0)
        pow_total = sum(v for k, v in m.items() if k.startswith("freq_power_"))
        assert pow_total == pytest.approx(1.0)
        assert m["regret_final"] > 0


def test_refuses_nonempty_directory(tmp_path):
    target = tmp_path / "occupied"
    target.mkdir()
    (target / "keep.txt").write_text("do not clobber")
    sc = make_link(duration_s=1200.0)
    with pytest.raises(ScenarioError):
        run_experiment(sc, out_dir=target)
    assert (target / "keep.txt").read_text() == "do not clobber"


def test_rerun_writes_identical_csv(tmp_path):
    sc = make_link(duration_s=1800.0, replications=2)
    a = tmp_path / "a"
    b = tmp_path / "b"
    run_experiment(sc, out_dir=a)
    run_experiment(sc, out_dir=b)
    assert (a / "intervals.csv").read_bytes() == (b / "intervals.csv").read_bytes()
    assert (a / "summary.csv").read_bytes() == (b / "summary.csv").read_bytes()
