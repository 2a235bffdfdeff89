"""Experiment harness: trials to CSV files, sweeps and the probability grid.

File schemas (floats printed with 9 significant digits):

* trajectory: ``k,agent,b_true,b_assumed,x_informed,x_wma,n,t``
* metrics:    ``k,delta_x,delta_b``
* summary:    ``config_hash,trial,phase,zeta_x,zeta_b,delta_zeta_x``

Summary rows exist per (config, trial, phase) that has recorded steps; the
ablation difference column is filled only for matched-mode runs. A trial that
raises is recorded with phase ``failed`` and empty metric columns.
"""

import csv
import os
import traceback
from dataclasses import dataclass
from multiprocessing import get_context
from typing import Dict, Iterator, List, Sequence, Tuple

import numpy as np

from . import agent, engine, metrics, world
from .config import TrialConfig


def fmt(v: float) -> str:
    return f"{v:.9g}"


@dataclass
class TrialOutput:
    """Everything one seeded trial produces, ready for serialization."""

    config_hash: str
    trial_index: int
    results: Dict[str, engine.TrialResult]
    boundary: metrics.PhaseBoundary

    def trajectory_rows(self, mode: str) -> Iterator[Tuple]:
        r = self.results[mode]
        for row in range(len(r.steps)):
            k = int(r.steps[row])
            for i in range(r.b_true.shape[1]):
                yield (
                    k,
                    i,
                    fmt(r.b_true[row, i]),
                    fmt(r.b_assumed[row, i]),
                    fmt(r.x_informed[row, i]),
                    fmt(r.x_wma[row, i]),
                    int(r.n_window[row, i]),
                    int(r.t_window[row, i]),
                )

    def metric_series(self, mode: str) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        r = self.results[mode]
        return r.steps, r.informed_rmsd(), r.accuracy_rmsd()

    def summary_rows(self) -> List[Tuple]:
        primary = (
            agent.BAYESCPF if agent.BAYESCPF in self.results else agent.ABLATION
        )
        steps, dx, db = self.metric_series(primary)
        baseline = None
        if primary == agent.BAYESCPF and agent.ABLATION in self.results:
            b_steps, b_dx, _ = self.metric_series(agent.ABLATION)
            baseline = (b_steps, b_dx)

        rows = []
        for phase in (metrics.TRANSIENT, metrics.EQUILIBRIUM):
            segment = self.boundary.segment(phase)
            try:
                zeta_x = metrics.segment_mean(steps, dx, segment)
                zeta_b = metrics.segment_mean(steps, db, segment)
            except ValueError:
                continue
            delta = ""
            if baseline is not None:
                zeta_star = metrics.segment_mean(baseline[0], baseline[1], segment)
                delta = fmt(metrics.nrmsd_difference(zeta_x, zeta_star))
            rows.append(
                (self.config_hash, self.trial_index, phase, fmt(zeta_x), fmt(zeta_b), delta)
            )
        return rows


def run_trial(config: TrialConfig, trial_index: int) -> TrialOutput:
    """Execute one seeded trial of a validated config."""
    results = engine.run_trial(config, trial_index)
    return TrialOutput(
        config_hash=config.hash(),
        trial_index=trial_index,
        results=results,
        boundary=engine.trial_boundary(config),
    )


TRAJECTORY_HEADER = "k,agent,b_true,b_assumed,x_informed,x_wma,n,t"
METRICS_HEADER = "k,delta_x,delta_b"
SUMMARY_HEADER = "config_hash,trial,phase,zeta_x,zeta_b,delta_zeta_x"


def write_trial_files(out_dir: str, output: TrialOutput) -> None:
    m = output.trial_index
    for mode in output.results:
        path = os.path.join(out_dir, f"trajectory_m{m:03d}_{mode}.csv")
        with open(path, "w", newline="") as fh:
            fh.write(TRAJECTORY_HEADER + "\n")
            for row in output.trajectory_rows(mode):
                fh.write(",".join(str(v) for v in row) + "\n")
        steps, dx, db = output.metric_series(mode)
        path = os.path.join(out_dir, f"metrics_m{m:03d}_{mode}.csv")
        with open(path, "w", newline="") as fh:
            fh.write(METRICS_HEADER + "\n")
            for j in range(len(steps)):
                fh.write(f"{int(steps[j])},{fmt(dx[j])},{fmt(db[j])}\n")


def run_config(
    config: TrialConfig, out_dir: str, echo=print
) -> Tuple[List[Tuple], List[Tuple]]:
    """All trials of one config, trajectory/metrics files written as we go.

    Returns (summary rows, failure rows).
    """
    os.makedirs(out_dir, exist_ok=True)
    summary_rows: List[Tuple] = []
    failures: List[Tuple] = []
    for m in range(config.sim.trials):
        try:
            output = run_trial(config, m)
        except Exception as exc:  # noqa: BLE001 - a bad trial must not kill the batch
            failures.append((config.hash(), m, "failed", "", "", ""))
            echo(f"trial {m} failed: {exc}")
            traceback.print_exc()
            continue
        write_trial_files(out_dir, output)
        summary_rows.extend(output.summary_rows())
    return summary_rows, failures


def write_summary(out_dir: str, rows: Sequence[Tuple]) -> str:
    path = os.path.join(out_dir, "summary.csv")
    with open(path, "w", newline="") as fh:
        fh.write(SUMMARY_HEADER + "\n")
        for row in rows:
            fh.write(",".join(str(v) for v in row) + "\n")
    return path


def _trial_worker(args):
    index, m, config, out_dir = args
    try:
        output = run_trial(config, m)
        write_trial_files(out_dir, output)
        return index, m, output.summary_rows(), None
    except Exception:  # noqa: BLE001
        return index, m, None, traceback.format_exc()


def run_batch(
    configs: Sequence[TrialConfig],
    out_dir: str,
    jobs: int = 1,
    echo=print,
) -> Tuple[List[Tuple], List[Tuple]]:
    """Sweep over a config grid; individual trials are the unit of work.

    Per-trial files land in one subdirectory per config hash. Summary rows
    come back ordered by (config position, trial, phase) regardless of
    completion order, so parallel runs serialize identically.
    """
    os.makedirs(out_dir, exist_ok=True)
    tasks = []
    for idx, config in enumerate(configs):
        sub = os.path.join(out_dir, config.hash())
        os.makedirs(sub, exist_ok=True)
        for m in range(config.sim.trials):
            tasks.append((idx, m, config, sub))

    if jobs <= 1:
        results = [_trial_worker(task) for task in tasks]
    else:
        ctx = get_context("spawn")
        with ctx.Pool(processes=jobs) as pool:
            results = pool.map(_trial_worker, tasks)

    summary_rows: List[Tuple] = []
    failures: List[Tuple] = []
    for index, m, rows, err in sorted(results, key=lambda r: (r[0], r[1])):
        if err is not None:
            failures.append((configs[index].hash(), m, "failed", "", "", ""))
            echo(f"config {configs[index].hash()} trial {m} failed:\n{err}")
        else:
            summary_rows.extend(rows)
    return summary_rows, failures


def heatmap_rows(resolution: int) -> Iterator[List[str]]:
    """Black-observation probability grid over accuracy x fill ratio.

    Accuracy spans [0.5, 1.0] down the rows, fill ratio [0, 1] across the
    columns; the first row/column carry the axis values.
    """
    if resolution < 2:
        raise ValueError(f"resolution must be >= 2, got {resolution}")
    accuracies = np.linspace(0.5, 1.0, resolution)
    fills = np.linspace(0.0, 1.0, resolution)
    yield ["b"] + [fmt(f) for f in fills]
    for b in accuracies:
        yield [fmt(b)] + [fmt(world.black_tile_probability(b, f)) for f in fills]


def write_heatmap(path_or_handle, resolution: int) -> None:
    if hasattr(path_or_handle, "write"):
        writer = csv.writer(path_or_handle, lineterminator="\n")
        for row in heatmap_rows(resolution):
            writer.writerow(row)
    else:
        with open(path_or_handle, "w", newline="") as fh:
            write_heatmap(fh, resolution)
