"""Deterministic figure rendering from long-format metric CSVs.

Input files follow the simulator's schema: a header row
``run_id,arm,step,agent,metric,value`` where ``arm`` is "partial" or "full",
``agent`` is an integer (-1 for network-level metrics) and ``run_id`` looks
like ``eps0.25-seed3``. Rendering is a pure function of the CSV bytes and
the spec: the style sheet is pinned, no timestamps are embedded, and series
are aggregated with plain means and standard errors, so re-rendering the
same input produces identical image bytes.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

EXPECTED_HEADER = ["run_id", "arm", "step", "agent", "metric", "value"]

FIGURE_IDS = ("tracking", "reward", "critic", "actor")

STYLE_PATH = Path(__file__).with_name("style.mplstyle")

ENVELOPE_LIMIT = 50_000


class SchemaError(ValueError):
    """The CSV does not carry what the requested figure needs."""


@dataclass(frozen=True)
class FigureSpec:
    figure: str
    eps: float | None = None
    agent: int | None = None
    state: int | None = None

    def __post_init__(self):
        if self.figure not in FIGURE_IDS:
            raise SchemaError(f"unknown figure id {self.figure!r}; expected one of {FIGURE_IDS}")


@dataclass
class Table:
    run_id: np.ndarray
    arm: np.ndarray
    step: np.ndarray
    agent: np.ndarray
    metric: np.ndarray
    value: np.ndarray

    def runs(self) -> list[str]:
        return sorted(set(self.run_id))


def load_table(path) -> Table:
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError("CSV is empty")
        if header != EXPECTED_HEADER:
            raise SchemaError(f"unexpected header {header!r}")
        rows = list(reader)
    if not rows:
        raise SchemaError("CSV has a header but no data rows")
    columns = list(zip(*rows))
    return Table(
        run_id=np.asarray(columns[0]),
        arm=np.asarray(columns[1]),
        step=np.asarray(columns[2], dtype=int),
        agent=np.asarray(columns[3], dtype=int),
        metric=np.asarray(columns[4]),
        value=np.asarray(columns[5], dtype=float),
    )


def _eps_mask(table: Table, eps: float | None) -> np.ndarray:
    if eps is None:
        return np.ones(len(table.run_id), dtype=bool)
    prefix = f"eps{eps:g}-"
    return np.char.startswith(table.run_id.astype(str), prefix)


def _require_metric(table: Table, name: str) -> None:
    if not np.any(table.metric == name):
        raise SchemaError(f"metric {name!r} missing from the CSV")


def series_by_run(table: Table, metric: str, arm: str, agent: int,
                  eps: float | None) -> dict[str, tuple[np.ndarray, np.ndarray]]:
    """{run_id: (steps, values)} for one metric/arm/agent slice."""
    _require_metric(table, metric)
    mask = (
        (table.metric == metric)
        & (table.arm == arm)
        & (table.agent == agent)
        & _eps_mask(table, eps)
    )
    out = {}
    for run in sorted(set(table.run_id[mask])):
        sel = mask & (table.run_id == run)
        order = np.argsort(table.step[sel], kind="stable")
        out[run] = (table.step[sel][order], table.value[sel][order])
    if not out:
        raise SchemaError(f"no rows for metric {metric!r}, arm {arm!r}, agent {agent}")
    return out


def aggregate_band(table: Table, metric: str, arm: str, agent: int,
                   eps: float | None):
    """Per-step mean and standard error across runs (0 when only one run)."""
    runs = series_by_run(table, metric, arm, agent, eps)
    steps = next(iter(runs.values()))[0]
    stacked = []
    for run, (run_steps, values) in runs.items():
        if len(run_steps) != len(steps) or np.any(run_steps != steps):
            raise SchemaError(f"run {run!r} is on a different step grid")
        stacked.append(values)
    stacked = np.asarray(stacked)
    mean = stacked.mean(axis=0)
    if stacked.shape[0] > 1:
        stderr = stacked.std(axis=0, ddof=1) / math.sqrt(stacked.shape[0])
    else:
        stderr = np.zeros_like(mean)
    return steps, mean, stderr, stacked.shape[0]


def minmax_envelope(steps: np.ndarray, values: np.ndarray, limit: int = ENVELOPE_LIMIT):
    """Decimate an overlong series to a per-bucket min/max envelope."""
    n = len(steps)
    if n <= limit:
        return steps, values, values
    buckets = limit // 2
    edges = np.linspace(0, n, buckets + 1, dtype=int)
    mid, lo, hi = [], [], []
    for i in range(buckets):
        chunk = values[edges[i]:edges[i + 1]]
        if len(chunk) == 0:
            continue
        mid.append(steps[(edges[i] + edges[i + 1] - 1) // 2])
        lo.append(chunk.min())
        hi.append(chunk.max())
    return np.asarray(mid), np.asarray(lo), np.asarray(hi)


def _agents_present(table: Table) -> list[int]:
    return sorted(a for a in set(table.agent) if a >= 0)


def _default_agent(table: Table) -> int:
    agents = _agents_present(table)
    if not agents:
        raise SchemaError("no per-agent rows in the CSV")
    return agents[len(agents) // 2]


def _plot_arm_band(ax, table, metric, arm, agent, eps, label):
    steps, mean, stderr, n_runs = aggregate_band(table, metric, arm, agent, eps)
    line, = ax.plot(steps, mean, label=label, drawstyle="default")
    ax.fill_between(steps, mean - stderr, mean + stderr,
                    alpha=0.25, color=line.get_color(), linewidth=0)
    return n_runs


def render(csv_path, spec: FigureSpec, out_path) -> str:
    """Write one figure; returns the caption text. No file is produced when
    the CSV fails schema validation."""
    table = load_table(csv_path)
    out_path = Path(out_path)
    eps_note = f"drift {spec.eps:g}" if spec.eps is not None else "all drift values"

    with plt.style.context(str(STYLE_PATH)):
        fig, ax = plt.subplots()
        if spec.figure == "tracking":
            agent = spec.agent if spec.agent is not None else _default_agent(table)
            true_runs = series_by_run(table, "true_state", "partial", -1, spec.eps)
            hard_runs = series_by_run(table, "hard_state", "partial", agent, spec.eps)
            run = sorted(true_runs)[0]
            steps, true_vals = true_runs[run]
            _, hard_vals = hard_runs[run]
            ax.plot(*minmax_envelope(steps, true_vals)[:2], drawstyle="steps-post",
                    label="true state")
            ax.plot(*minmax_envelope(steps, hard_vals)[:2], drawstyle="steps-post",
                    label=f"estimated state (agent {agent})", linestyle="--")
            if spec.state is not None:
                ax.axhline(spec.state, color="gray", linewidth=0.8, alpha=0.6)
            ax.set_ylabel("state index")
            caption = (
                f"True and estimated state for agent {agent}, run {run}. "
                f"Mismatches concentrate right after state transitions."
            )
        elif spec.figure == "reward":
            n = _plot_arm_band(ax, table, "cum_reward", "partial", -1, spec.eps,
                               "estimated state (partial)")
            _plot_arm_band(ax, table, "cum_reward", "full", -1, spec.eps,
                           "true state (full)")
            ax.set_ylabel("cumulative reward")
            caption = (
                f"Cumulative reward under partial vs full observability, {eps_note}; "
                f"mean over {n} run(s), band is one standard error."
            )
        elif spec.figure == "critic":
            agent = spec.agent if spec.agent is not None else _default_agent(table)
            n = _plot_arm_band(ax, table, "omega_norm", "partial", agent, spec.eps,
                               "estimated state (partial)")
            _plot_arm_band(ax, table, "omega_norm", "full", agent, spec.eps,
                           "true state (full)")
            ax.set_ylabel(f"critic norm, agent {agent}")
            caption = (
                f"Critic vector norm for agent {agent} under partial vs full "
                f"observability, {eps_note}; mean over {n} run(s), band is one "
                f"standard error."
            )
        else:  # actor
            agent = spec.agent if spec.agent is not None else _default_agent(table)
            n = _plot_arm_band(ax, table, "actor_gap", "partial", agent, spec.eps,
                               "actor distance to full-observability run")
            ax.set_ylabel(f"actor parameter distance, agent {agent}")
            caption = (
                f"Distance between the actor parameters learned with estimated "
                f"vs true states, agent {agent}, {eps_note}; mean over {n} "
                f"run(s), band is one standard error."
            )
        ax.set_xlabel("step")
        ax.legend(loc="best")
        fig.tight_layout()
        out_path.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(out_path, format="png", metadata={"Software": None})
        plt.close(fig)
    return caption
