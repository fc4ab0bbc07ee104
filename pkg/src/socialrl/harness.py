"""Seeded paired execution and metric emission.

Every run simulates two coupled arms from identical initial parameters: the
partial arm estimates the hidden state with one social-learning round per
step, the full arm substitutes the true state's basis vector everywhere.
Both arms (and, across drift values, runs with the same seed) consume the
same pre-drawn uniforms from named substreams, so differences between arms
isolate the effect of state-estimation error.

RNG recipe (bit-exact, documented for reproduction): substream for purpose p
of run r is numpy PCG64 seeded with SeedSequence(base_seed, spawn_key=(r, p))
where p is 0 = transition, 1 = observation, 2 = action, 3 = initial state.
Per step the simulator consumes exactly one transition uniform and one
observation and one action uniform per agent, drawn up front as blocks.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .beliefs import belief_entropy  # noqa: F401  (re-exported for metric parity checks)
from .config import ExperimentConfig
from .errors import ConfigurationError, NumericError

PURPOSES = {"transition": 0, "observation": 1, "action": 2, "init": 3}

CSV_HEADER = ["run_id", "arm", "step", "agent", "metric", "value"]

NETWORK_AGENT = -1


def substream(base_seed: int, run_index: int, purpose: str) -> np.random.Generator:
    """Named RNG substream; see the module docstring for the exact recipe."""
    seq = np.random.SeedSequence(base_seed, spawn_key=(run_index, PURPOSES[purpose]))
    return np.random.Generator(np.random.PCG64(seq))


@dataclass
class PairedRunResult:
    """Full-resolution trace of one paired run."""

    run_id: str
    drift: float
    seed: int
    # per step
    state_p: np.ndarray
    state_f: np.ndarray
    actions_p: np.ndarray
    actions_f: np.ndarray
    hard_p: np.ndarray
    reward_p: np.ndarray
    reward_f: np.ndarray
    cum_reward_p: np.ndarray
    cum_reward_f: np.ndarray
    entropy_p: np.ndarray
    rho_est_p: np.ndarray
    rho_est_f: np.ndarray
    rho_exact_p: np.ndarray
    rho_exact_f: np.ndarray
    delta_p: np.ndarray
    delta_f: np.ndarray
    omega_p: np.ndarray
    omega_f: np.ndarray
    actor_gap: np.ndarray
    proj_p: np.ndarray
    proj_f: np.ndarray
    # derived series
    omega_norm_p: np.ndarray
    omega_norm_f: np.ndarray
    consensus_disagreement_p: np.ndarray
    consensus_disagreement_f: np.ndarray
    critic_gap: np.ndarray
    p_error: np.ndarray

    @property
    def num_steps(self) -> int:
        return len(self.state_p)

    @property
    def num_agents(self) -> int:
        return self.hard_p.shape[1]


def rolling_error_rate(hard_states: np.ndarray, true_states: np.ndarray, window: int) -> np.ndarray:
    """Trailing-window miss rate per step and agent, windows clipped at the
    start of the trace."""
    miss = (hard_states != true_states[:, None]).astype(float)
    csum = np.vstack([np.zeros((1, miss.shape[1])), np.cumsum(miss, axis=0)])
    n = miss.shape[0]
    idx = np.arange(1, n + 1)
    lo = np.maximum(idx - window, 0)
    width = (idx - lo).astype(float)
    return (csum[idx] - csum[lo]) / width[:, None]


def compute_gap_series(omega_p: np.ndarray, omega_f: np.ndarray) -> dict:
    """Disagreement and cross-arm distances from the two critic trajectories.

    consensus_disagreement: distance of the partial-arm critic stack from
    its own network average. critic_gap: distance of the full-observability
    stack from the partial arm's network average.
    """
    mean_p = omega_p.mean(axis=1, keepdims=True)
    mean_f = omega_f.mean(axis=1, keepdims=True)
    return {
        "consensus_disagreement_p": np.linalg.norm(omega_p - mean_p, axis=(1, 2)),
        "consensus_disagreement_f": np.linalg.norm(omega_f - mean_f, axis=(1, 2)),
        "critic_gap": np.linalg.norm(omega_f - mean_p, axis=(1, 2)),
    }


def run_paired(cfg: ExperimentConfig, seed: int) -> PairedRunResult:
    """Run both arms for cfg.horizon steps under shared substreams."""
    env = cfg.build_env()
    combination = np.ascontiguousarray(cfg.build_combination(), dtype=float)
    num_steps = cfg.horizon
    k, s = env.num_agents, env.num_states

    sigma = cfg.effective_sigma()
    beta, beta_theta = cfg.schedules()
    rounds = cfg.effective_consensus_rounds()
    guard = cfg.guard()

    behavior_mode = 0 if cfg.behavior == "uniform" else 1
    behavior = cfg.build_behavior()
    chi = behavior.chi if behavior_mode == 1 else np.zeros((k, 3, s))
    chi = np.ascontiguousarray(chi, dtype=float)

    if cfg.init_state == "uniform":
        init_state = int(substream(cfg.base_seed, seed, "init").integers(0, s))
    else:
        init_state = int(cfg.init_state)
        if not 0 <= init_state < s:
            raise ConfigurationError(f"init_state {init_state} outside 0..{s - 1}")

    u_move = substream(cfg.base_seed, seed, "transition").random(num_steps)
    u_obs = substream(cfg.base_seed, seed, "observation").random((num_steps, k))
    u_act = substream(cfg.base_seed, seed, "action").random((num_steps, k))

    ints = {name: np.zeros(shape, dtype=np.int64) for name, shape in [
        ("state_p", num_steps), ("state_f", num_steps),
        ("actions_p", (num_steps, k)), ("actions_f", (num_steps, k)),
        ("hard_p", (num_steps, k)), ("proj_p", num_steps), ("proj_f", num_steps),
    ]}
    floats = {name: np.zeros(shape) for name, shape in [
        ("reward_p", num_steps), ("reward_f", num_steps),
        ("entropy_p", (num_steps, k)),
        ("rho_est_p", (num_steps, k)), ("rho_est_f", (num_steps, k)),
        ("rho_exact_p", num_steps), ("rho_exact_f", num_steps),
        ("delta_p", (num_steps, k)), ("delta_f", (num_steps, k)),
        ("omega_p", (num_steps, k, s)), ("omega_f", (num_steps, k, s)),
        ("actor_gap", (num_steps, k)),
    ]}

    _kernels.run_paired_core(
        num_steps, combination, env.likelihood_table,
        env.reward_pair_table(), env.reward_action_table(),
        env.drift, env.obs_noise, env.obs_halfwidth, init_state,
        sigma, cfg.belief_floor, cfg.gamma, cfg.rho_min, cfg.rho_max, guard,
        rounds, behavior_mode, chi, beta, beta_theta,
        u_move, u_obs, u_act, int(cfg.true_beliefs),
        ints["state_p"], ints["state_f"], ints["actions_p"], ints["actions_f"],
        ints["hard_p"], floats["reward_p"], floats["reward_f"], floats["entropy_p"],
        floats["rho_est_p"], floats["rho_est_f"], floats["rho_exact_p"], floats["rho_exact_f"],
        floats["delta_p"], floats["delta_f"], floats["omega_p"], floats["omega_f"],
        floats["actor_gap"], ints["proj_p"], ints["proj_f"],
    )

    for name, arr in floats.items():
        if not np.all(np.isfinite(arr)):
            raise NumericError(f"non-finite values in {name}")

    gaps = compute_gap_series(floats["omega_p"], floats["omega_f"])
    return PairedRunResult(
        run_id=f"eps{cfg.drift:g}-seed{seed}",
        drift=cfg.drift,
        seed=seed,
        state_p=ints["state_p"], state_f=ints["state_f"],
        actions_p=ints["actions_p"], actions_f=ints["actions_f"],
        hard_p=ints["hard_p"],
        reward_p=floats["reward_p"], reward_f=floats["reward_f"],
        cum_reward_p=np.cumsum(floats["reward_p"]),
        cum_reward_f=np.cumsum(floats["reward_f"]),
        entropy_p=floats["entropy_p"],
        rho_est_p=floats["rho_est_p"], rho_est_f=floats["rho_est_f"],
        rho_exact_p=floats["rho_exact_p"], rho_exact_f=floats["rho_exact_f"],
        delta_p=floats["delta_p"], delta_f=floats["delta_f"],
        omega_p=floats["omega_p"], omega_f=floats["omega_f"],
        actor_gap=floats["actor_gap"],
        proj_p=ints["proj_p"], proj_f=ints["proj_f"],
        omega_norm_p=np.linalg.norm(floats["omega_p"], axis=2),
        omega_norm_f=np.linalg.norm(floats["omega_f"], axis=2),
        consensus_disagreement_p=gaps["consensus_disagreement_p"],
        consensus_disagreement_f=gaps["consensus_disagreement_f"],
        critic_gap=gaps["critic_gap"],
        p_error=rolling_error_rate(ints["hard_p"], ints["state_p"], cfg.error_window),
    )


# --- CSV emission --------------------------------------------------------------


def recorded_steps(num_steps: int, stride: int) -> np.ndarray:
    """Every stride-th step plus always the final one."""
    steps = list(range(0, num_steps, stride))
    if steps[-1] != num_steps - 1:
        steps.append(num_steps - 1)
    return np.asarray(steps)


def _fmt(value) -> str:
    return f"{float(value):.17g}"


def iter_rows(result: PairedRunResult, stride: int = 1):
    """Long-format rows in a fixed documented order (see README schema)."""
    k = result.num_agents
    rid = result.run_id
    for n in recorded_steps(result.num_steps, stride):
        step = int(n)
        yield (rid, "partial", step, NETWORK_AGENT, "reward", _fmt(result.reward_p[n]))
        yield (rid, "partial", step, NETWORK_AGENT, "cum_reward", _fmt(result.cum_reward_p[n]))
        yield (rid, "partial", step, NETWORK_AGENT, "true_state", _fmt(result.state_p[n]))
        for a in range(k):
            yield (rid, "partial", step, a, "hard_state", _fmt(result.hard_p[n, a]))
        for a in range(k):
            yield (rid, "partial", step, a, "soft_belief_entropy", _fmt(result.entropy_p[n, a]))
        for a in range(k):
            yield (rid, "partial", step, a, "p_error_window", _fmt(result.p_error[n, a]))
        yield (rid, "partial", step, NETWORK_AGENT, "consensus_disagreement",
               _fmt(result.consensus_disagreement_p[n]))
        yield (rid, "partial", step, NETWORK_AGENT, "critic_gap", _fmt(result.critic_gap[n]))
        for a in range(k):
            yield (rid, "partial", step, a, "actor_gap", _fmt(result.actor_gap[n, a]))
        for a in range(k):
            yield (rid, "partial", step, a, "rho_joint_est", _fmt(result.rho_est_p[n, a]))
        yield (rid, "partial", step, NETWORK_AGENT, "rho_joint_exact", _fmt(result.rho_exact_p[n]))
        for a in range(k):
            yield (rid, "partial", step, a, "delta", _fmt(result.delta_p[n, a]))
        for a in range(k):
            yield (rid, "partial", step, a, "omega_norm", _fmt(result.omega_norm_p[n, a]))
        yield (rid, "partial", step, NETWORK_AGENT, "projection_hits", _fmt(result.proj_p[n]))

        yield (rid, "full", step, NETWORK_AGENT, "reward", _fmt(result.reward_f[n]))
        yield (rid, "full", step, NETWORK_AGENT, "cum_reward", _fmt(result.cum_reward_f[n]))
        yield (rid, "full", step, NETWORK_AGENT, "true_state", _fmt(result.state_f[n]))
        yield (rid, "full", step, NETWORK_AGENT, "consensus_disagreement",
               _fmt(result.consensus_disagreement_f[n]))
        for a in range(k):
            yield (rid, "full", step, a, "rho_joint_est", _fmt(result.rho_est_f[n, a]))
        yield (rid, "full", step, NETWORK_AGENT, "rho_joint_exact", _fmt(result.rho_exact_f[n]))
        for a in range(k):
            yield (rid, "full", step, a, "delta", _fmt(result.delta_f[n, a]))
        for a in range(k):
            yield (rid, "full", step, a, "omega_norm", _fmt(result.omega_norm_f[n, a]))
        yield (rid, "full", step, NETWORK_AGENT, "projection_hits", _fmt(result.proj_f[n]))


def write_run_csv(path, result: PairedRunResult, stride: int = 1) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(CSV_HEADER)
        for row in iter_rows(result, stride):
            writer.writerow(row)


def terminal_metrics(result: PairedRunResult) -> dict[str, float]:
    """Per-run scalars the sweep summary aggregates (values at the final step)."""
    last = result.num_steps - 1
    return {
        "terminal_cum_reward_partial": float(result.cum_reward_p[last]),
        "terminal_cum_reward_full": float(result.cum_reward_f[last]),
        "terminal_cum_reward_gap": abs(
            float(result.cum_reward_f[last]) - float(result.cum_reward_p[last])
        ),
        "terminal_critic_gap": float(result.critic_gap[last]),
        "terminal_actor_gap": float(result.actor_gap[last].mean()),
        "terminal_consensus_disagreement": float(result.consensus_disagreement_p[last]),
        "terminal_p_error": float(result.p_error[last].mean()),
    }


SUMMARY_HEADER = ["eps", "metric", "mean", "stderr", "num_runs"]


def summarize(terminals: list[dict]) -> list[tuple]:
    """Mean and standard error per (eps, metric) over the per-run terminals."""
    eps_values = sorted({t["eps"] for t in terminals})
    metric_names = [k for k in terminals[0] if k not in ("eps", "seed")]
    rows = []
    for eps in eps_values:
        group = [t for t in terminals if t["eps"] == eps]
        for name in metric_names:
            values = [t[name] for t in group]
            mean = sum(values) / len(values)
            if len(values) > 1:
                var = sum((v - mean) ** 2 for v in values) / (len(values) - 1)
                stderr = math.sqrt(var / len(values))
            else:
                stderr = 0.0
            rows.append((_fmt(eps), name, _fmt(mean), _fmt(stderr), str(len(group))))
    return rows


def _run_for_sweep(args):
    cfg, eps, seed = args
    result = run_paired(cfg.with_drift(eps), seed)
    terminal = {"eps": eps, "seed": seed, **terminal_metrics(result)}
    return result, terminal


def run_sweep(cfg: ExperimentConfig, eps_values, num_seeds: int, out_dir, *,
              stride: int | None = None, jobs: int = 1):
    """Paired runs over the (eps, seed) grid; writes sweep.csv and summary.csv.

    Runs execute in grid order (eps outer, seed inner); with jobs > 1 they
    execute in parallel but rows are still written in grid order, so output
    bytes do not depend on scheduling.
    """
    from pathlib import Path

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stride = cfg.record_stride if stride is None else stride
    grid = [(cfg, eps, seed) for eps in eps_values for seed in range(num_seeds)]

    terminals = []
    csv_path = out_dir / "sweep.csv"
    with open(csv_path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(CSV_HEADER)
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                for result, terminal in pool.map(_run_for_sweep, grid):
                    for row in iter_rows(result, stride):
                        writer.writerow(row)
                    terminals.append(terminal)
        else:
            for item in grid:
                result, terminal = _run_for_sweep(item)
                for row in iter_rows(result, stride):
                    writer.writerow(row)
                terminals.append(terminal)

    summary_path = out_dir / "summary.csv"
    with open(summary_path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(SUMMARY_HEADER)
        for row in summarize(terminals):
            writer.writerow(row)
    return csv_path, summary_path, terminals
