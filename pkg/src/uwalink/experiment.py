"""Experiment driver: replications, aggregation, and CSV outputs.

A run executes every replication of a scenario, always alongside the
genie benchmark, and either returns the results in memory or writes a
results directory:

    out/
      intervals.csv             one row per feedback interval per link
      summary.csv               long-format replication statistics
      oracle.json               genie policy and reference throughput
      plotdata/
        learning_curves.csv     per-interval reward with a rolling mean
        selection_histograms.csv  action and interval selection counts
        regret_curve.csv        cumulative regret per slot per replication

Every CSV starts with a comment line carrying the configuration hash,
the seed, and the package version, so downstream tooling can refuse to
mix files from different setups.
"""

from __future__ import annotations

import csv
import json
import shutil
import statistics
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .bandit import ACTIONS, Modulation, PowerLevel
from .config import Scenario, ScenarioError
from .oracle import OracleMap, genie_map, regret_series
from .sim import EpisodeResult, IntervalRecord, run_episode

_INTERVAL_COLUMNS = [
    "replication", "link_src", "link_dst", "k", "t_start_s", "q_k_min",
    "r_k_bits", "r_k_norm", "energy_data_j", "energy_fb_j",
    "aoi_mean_slots", "aoi_peak_slots", "frames_sent", "frames_delivered",
    "lost_ber", "lost_collision", "lost_halfduplex",
] + [f"a{i}" for i in range(9)]

_ROLLING_WINDOW = 10


@dataclass
class ExperimentResult:
    scenario: Scenario
    oracle: OracleMap
    episodes: list[EpisodeResult]
    out_dir: Path | None

    @property
    def intervals(self) -> list[IntervalRecord]:
        return [rec for ep in self.episodes for rec in ep.intervals]


def run_experiment(
    scenario: Scenario,
    out_dir: str | Path | None = None,
    seed: int | None = None,
    replications: int | None = None,
    collect_slots: bool = True,
) -> ExperimentResult:
    """Run all replications of ``scenario`` and optionally write results.

    :param out_dir: results directory; must not already contain files.
        ``None`` keeps everything in memory.
    :param seed: overrides the scenario seed.
    :param replications: overrides the scenario replication count.
    """
    sc = scenario.with_overrides(seed=seed, replications=replications)
    oracle = genie_map(sc)
    episodes = [
        run_episode(sc, replication=rep, collect_slots=collect_slots,
                    oracle_actions=oracle.best)
        for rep in range(sc.replications)
    ]
    result = ExperimentResult(sc, oracle, episodes, None)
    if out_dir is None:
        return result

    out_path = Path(out_dir)
    created = not out_path.exists()
    if not created and any(out_path.iterdir()):
        raise ScenarioError(f"output directory {out_path} is not empty")
    out_path.mkdir(parents=True, exist_ok=True)
    try:
        _write_all(out_path, result)
    except BaseException:
        if created:
            shutil.rmtree(out_path, ignore_errors=True)
        raise
    result.out_dir = out_path
    return result


# -- writers ----------------------------------------------------------------


def _stamp(fh, sc: Scenario) -> None:
    fh.write(f"# config_hash={sc.config_hash()} seed={sc.seed} version={__version__}\n")


def _write_all(out_path: Path, result: ExperimentResult) -> None:
    sc = result.scenario
    _write_intervals(out_path / "intervals.csv", result)
    _write_summary(out_path / "summary.csv", result)
    with open(out_path / "oracle.json", "w") as fh:
        json.dump(result.oracle.to_json_dict(), fh, indent=2)
        fh.write("\n")
    plot_dir = out_path / "plotdata"
    plot_dir.mkdir(exist_ok=True)
    _write_learning_curves(plot_dir / "learning_curves.csv", result)
    _write_selection_histograms(plot_dir / "selection_histograms.csv", result)
    _write_regret_curve(plot_dir / "regret_curve.csv", result)


def _write_intervals(path: Path, result: ExperimentResult) -> None:
    with open(path, "w", newline="") as fh:
        _stamp(fh, result.scenario)
        writer = csv.writer(fh)
        writer.writerow(_INTERVAL_COLUMNS)
        for ep in result.episodes:
            for rec in ep.intervals:
                writer.writerow([
                    rec.replication, rec.link_src, rec.link_dst, rec.k,
                    rec.t_start_s, rec.q_k_min, rec.r_k_bits, rec.r_k_norm,
                    rec.energy_data_j, rec.energy_fb_j, rec.aoi_mean_slots,
                    rec.aoi_peak_slots, rec.frames_sent, rec.frames_delivered,
                    rec.lost_ber, rec.lost_collision, rec.lost_halfduplex,
                    *rec.action_counts,
                ])


def replication_metrics(result: ExperimentResult) -> list[dict[str, float]]:
    """Per-replication scalar metrics, one dict per replication."""
    sc = result.scenario
    n_links = len(sc.topology.links())
    denom_norm = n_links * sc.n_slots * sc.max_slot_bits
    out = []
    for ep in result.episodes:
        recs = ep.intervals
        bits = sum(r.r_k_bits for r in recs)
        e_data = sum(r.energy_data_j for r in recs)
        e_fb = sum(r.energy_fb_j for r in recs)
        e_total = e_data + e_fb
        sent = sum(r.frames_sent for r in recs)
        delivered = sum(r.frames_delivered for r in recs)
        action_counts = np.zeros(9, dtype=np.int64)
        for r in recs:
            action_counts += np.asarray(r.action_counts, dtype=np.int64)
        total_actions = int(action_counts.sum())
        q_counts: dict[int, int] = {q: 0 for q in sc.intervals_min}
        n_q = 0
        for r in recs:
            if r.q_k_min in q_counts:
                q_counts[r.q_k_min] += 1
                n_q += 1
        metrics: dict[str, float] = {
            "throughput_bits": float(bits),
            "throughput_norm": bits / denom_norm if denom_norm else 0.0,
            "energy_total_j": e_total,
            "energy_data_j": e_data,
            "energy_fb_j": e_fb,
            "bits_per_joule": bits / e_total if e_total > 0 else 0.0,
            "frames_sent": float(sent),
            "delivery_rate": delivered / sent if sent else 0.0,
            "loss_ber_rate": sum(r.lost_ber for r in recs) / sent if sent else 0.0,
            "loss_collision_rate":
                sum(r.lost_collision for r in recs) / sent if sent else 0.0,
            "loss_halfduplex_rate":
                sum(r.lost_halfduplex for r in recs) / sent if sent else 0.0,
            "aoi_peak_slots": float(max((r.aoi_peak_slots for r in recs), default=0)),
            "deferred_slots": float(sum(ep.deferred_slots.values())),
        }
        with_bursts = [r.aoi_mean_slots for r in recs if r.frames_sent > 0]
        metrics["aoi_mean_slots"] = (
            sum(with_bursts) / len(with_bursts) if with_bursts else 0.0
        )
        for mod in Modulation:
            share = sum(
                int(action_counts[a.index]) for a in ACTIONS if a.modulation is mod
            )
            metrics[f"freq_mod_{mod.name.lower()}"] = (
                share / total_actions if total_actions else 0.0
            )
        for pw in PowerLevel:
            share = sum(
                int(action_counts[a.index]) for a in ACTIONS if a.power is pw
            )
            metrics[f"freq_power_{pw.name.lower()}"] = (
                share / total_actions if total_actions else 0.0
            )
        for q in sc.intervals_min:
            metrics[f"freq_interval_{q}"] = q_counts[q] / n_q if n_q else 0.0
        if ep.slots:
            series = regret_series(ep.slots, result.oracle, sc)
            metrics["regret_final"] = float(series[-1])
        out.append(metrics)
    return out


def _write_summary(path: Path, result: ExperimentResult) -> None:
    sc = result.scenario
    per_rep = replication_metrics(result)
    names = sorted({name for m in per_rep for name in m})
    with open(path, "w", newline="") as fh:
        _stamp(fh, sc)
        writer = csv.writer(fh)
        writer.writerow(
            ["scenario", "policy", "nodes", "metric", "mean", "stddev", "n"]
        )
        n_nodes = len(sc.topology.positions)
        for name in names:
            values = [m[name] for m in per_rep if name in m]
            mean = sum(values) / len(values)
            std = statistics.stdev(values) if len(values) > 1 else 0.0
            writer.writerow(
                [sc.name, sc.policy.describe(), n_nodes, name, mean, std,
                 len(values)]
            )


def _write_learning_curves(path: Path, result: ExperimentResult) -> None:
    with open(path, "w", newline="") as fh:
        _stamp(fh, result.scenario)
        writer = csv.writer(fh)
        writer.writerow(
            ["replication", "link_src", "link_dst", "k", "t_start_s",
             "r_k_norm", "rolling_mean"]
        )
        for ep in result.episodes:
            by_link: dict[tuple[str, str], list[IntervalRecord]] = {}
            for rec in ep.intervals:
                by_link.setdefault((rec.link_src, rec.link_dst), []).append(rec)
            for key in sorted(by_link):
                window: list[float] = []
                for rec in by_link[key]:
                    window.append(rec.r_k_norm)
                    tail = window[-_ROLLING_WINDOW:]
                    writer.writerow([
                        rec.replication, rec.link_src, rec.link_dst, rec.k,
                        rec.t_start_s, rec.r_k_norm, sum(tail) / len(tail),
                    ])


def _write_selection_histograms(path: Path, result: ExperimentResult) -> None:
    sc = result.scenario
    with open(path, "w", newline="") as fh:
        _stamp(fh, sc)
        writer = csv.writer(fh)
        writer.writerow(["replication", "link_src", "link_dst", "kind", "key", "count"])
        for ep in result.episodes:
            actions: dict[tuple[str, str], np.ndarray] = {}
            intervals: dict[tuple[str, str], dict[int, int]] = {}
            for rec in ep.intervals:
                key = (rec.link_src, rec.link_dst)
                actions.setdefault(key, np.zeros(9, dtype=np.int64))
                actions[key] += np.asarray(rec.action_counts, dtype=np.int64)
                q_hist = intervals.setdefault(key, {q: 0 for q in sc.intervals_min})
                if rec.q_k_min in q_hist:
                    q_hist[rec.q_k_min] += 1
            for key in sorted(actions):
                src, dst = key
                for action in ACTIONS:
                    writer.writerow([
                        ep.replication, src, dst, "action",
                        f"{action.modulation.name.lower()}/{action.power.name.lower()}",
                        int(actions[key][action.index]),
                    ])
                for q in sc.intervals_min:
                    writer.writerow([
                        ep.replication, src, dst, "interval", f"{q}min",
                        intervals[key][q],
                    ])


def _write_regret_curve(path: Path, result: ExperimentResult) -> None:
    sc = result.scenario
    with open(path, "w", newline="") as fh:
        _stamp(fh, sc)
        writer = csv.writer(fh)
        writer.writerow(["replication", "slot", "cumulative_regret"])
        for ep in result.episodes:
            if not ep.slots:
                continue
            series = regret_series(ep.slots, result.oracle, sc)
            for slot, value in enumerate(series):
                writer.writerow([ep.replication, slot, value])
