"""Experiment configuration: TOML loading, derived objects, and validators
for every checkable modeling assumption.

Unknown sections or keys in a config file are hard errors, so typos cannot
silently fall back to defaults. `validate_config` never raises on a bad
value; it returns one pass/fail entry per check so negative configurations
can be reported coherently (the CLI turns failures into exit code 2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

from . import actor_critic as ac
from . import beliefs as bel
from . import topology as topo
from .envs import PistonballEnv, REWARD_RULES
from .errors import ConfigurationError

BEHAVIOR_KINDS = ("uniform", "boltzmann")


@dataclass
class ExperimentConfig:
    # environment
    num_agents: int = 5
    drift: float = 0.25
    table_noise: float = 0.1
    obs_noise: float = 0.0
    obs_halfwidth: int = 1
    reward_rule: str = "coordination"
    init_state: int | str = 0
    likelihood_table: list | None = None
    # graph
    graph_kind: str = "ring"
    graph_edges: list | None = None
    graph_matrix: list | None = None
    # beliefs
    nu: float = 0.7
    sigma: float | None = None
    belief_floor: float = 1e-12
    # policy
    behavior: str = "boltzmann"
    behavior_scale: float = 4.0
    gamma: float = 0.9
    rho_min: float = 0.1
    rho_max: float = 2.0
    # step-size schedules
    critic_budget: float = 50.0
    actor_budget: float = 100.0
    critic_decay: float = 0.9999
    actor_decay: float = 0.9999
    critic_beta0: float | None = None
    actor_beta0: float | None = None
    # consensus
    consensus_rounds: int | str = "auto"
    # run control
    horizon: int = 20000
    num_runs: int = 10
    base_seed: int = 2024
    record_stride: int = 1
    error_window: int = 200
    true_beliefs: bool = False

    # --- derived objects -----------------------------------------------------

    def build_env(self) -> PistonballEnv:
        table = None
        if self.likelihood_table is not None:
            table = np.asarray(self.likelihood_table, dtype=float)
        return PistonballEnv(
            num_agents=self.num_agents,
            drift=self.drift,
            table_noise=self.table_noise,
            obs_noise=self.obs_noise,
            obs_halfwidth=self.obs_halfwidth,
            likelihood_table=table,
            reward_rule=self.reward_rule,
        )

    def build_graph(self) -> topo.Graph | None:
        if self.graph_matrix is not None:
            return None
        return topo.build_graph(self.graph_kind, self.num_agents, self.graph_edges)

    def build_combination(self) -> np.ndarray:
        if self.graph_matrix is not None:
            c = np.asarray(self.graph_matrix, dtype=float)
            if c.shape != (self.num_agents, self.num_agents):
                raise ConfigurationError(
                    f"combination matrix must be {self.num_agents}x{self.num_agents}, got {c.shape}"
                )
            return c
        return topo.metropolis_weights(self.build_graph())

    def effective_sigma(self) -> float:
        if self.sigma is not None:
            return float(self.sigma)
        return bel.choose_sigma(self.drift, self.nu)

    def effective_consensus_rounds(self) -> int:
        if self.consensus_rounds == "auto":
            graph = self.build_graph()
            if graph is None:
                return 3 * (self.num_agents - 1)  # safe bound for explicit matrices
            return max(1, 3 * graph.diameter())
        return int(self.consensus_rounds)

    def effective_critic_beta0(self) -> float:
        if self.critic_beta0 is not None:
            return float(self.critic_beta0)
        return ac.critic_beta0(self.critic_budget, self.critic_decay, self.drift, self.rho_max)

    def effective_actor_beta0(self) -> float:
        if self.actor_beta0 is not None:
            return float(self.actor_beta0)
        return ac.actor_beta0(self.actor_budget, self.actor_decay)

    def schedules(self) -> tuple[np.ndarray, np.ndarray]:
        beta = ac.geometric_schedule(self.effective_critic_beta0(), self.critic_decay, self.horizon)
        beta_theta = ac.geometric_schedule(self.effective_actor_beta0(), self.actor_decay, self.horizon)
        return beta, beta_theta

    def build_behavior(self):
        if self.behavior == "uniform":
            return ac.UniformBehavior(3)
        if self.behavior == "boltzmann":
            chi = ac.centering_pattern(self.num_agents, 3, self.num_agents, self.behavior_scale)
            return ac.BoltzmannBehavior(chi)
        raise ConfigurationError(f"unknown behavior {self.behavior!r}; expected one of {BEHAVIOR_KINDS}")

    def guard(self) -> float:
        return ac.critic_guard(1.0, self.gamma)

    def with_drift(self, drift: float) -> "ExperimentConfig":
        return replace(self, drift=drift)


_SCHEMA = {
    "env": {
        "num_agents": "num_agents",
        "drift": "drift",
        "table_noise": "table_noise",
        "obs_noise": "obs_noise",
        "obs_halfwidth": "obs_halfwidth",
        "reward_rule": "reward_rule",
        "init_state": "init_state",
        "likelihood_table": "likelihood_table",
    },
    "graph": {
        "kind": "graph_kind",
        "edges": "graph_edges",
        "matrix": "graph_matrix",
    },
    "beliefs": {
        "nu": "nu",
        "sigma": "sigma",
        "floor": "belief_floor",
    },
    "policy": {
        "behavior": "behavior",
        "behavior_scale": "behavior_scale",
        "gamma": "gamma",
        "rho_min": "rho_min",
        "rho_max": "rho_max",
    },
    "steps": {
        "critic_budget": "critic_budget",
        "actor_budget": "actor_budget",
        "critic_decay": "critic_decay",
        "actor_decay": "actor_decay",
        "critic_beta0": "critic_beta0",
        "actor_beta0": "actor_beta0",
    },
    "consensus": {
        "rounds": "consensus_rounds",
    },
    "run": {
        "horizon": "horizon",
        "num_runs": "num_runs",
        "base_seed": "base_seed",
        "record_stride": "record_stride",
        "error_window": "error_window",
        "true_beliefs": "true_beliefs",
    },
}


def config_from_dict(raw: dict) -> ExperimentConfig:
    kwargs = {}
    for section, content in raw.items():
        if section not in _SCHEMA:
            raise ConfigurationError(f"unknown config section [{section}]")
        if not isinstance(content, dict):
            raise ConfigurationError(f"section [{section}] must be a table of keys")
        for key, value in content.items():
            if key not in _SCHEMA[section]:
                raise ConfigurationError(f"unknown key {key!r} in section [{section}]")
            kwargs[_SCHEMA[section][key]] = value
    cfg = ExperimentConfig(**kwargs)
    _check_types(cfg)
    return cfg


def load_config(path) -> ExperimentConfig:
    with open(path, "rb") as handle:
        raw = tomllib.load(handle)
    return config_from_dict(raw)


def _check_types(cfg: ExperimentConfig) -> None:
    ints = ["num_agents", "obs_halfwidth", "horizon", "num_runs", "base_seed",
            "record_stride", "error_window"]
    for name in ints:
        value = getattr(cfg, name)
        if not isinstance(value, int) or isinstance(value, bool):
            raise ConfigurationError(f"{name} must be an integer, got {value!r}")
    if cfg.init_state != "uniform" and not isinstance(cfg.init_state, int):
        raise ConfigurationError(f'init_state must be "uniform" or an integer, got {cfg.init_state!r}')
    if cfg.consensus_rounds != "auto" and not isinstance(cfg.consensus_rounds, int):
        raise ConfigurationError(f'consensus rounds must be "auto" or an integer, got {cfg.consensus_rounds!r}')
    if cfg.behavior not in BEHAVIOR_KINDS:
        raise ConfigurationError(f"behavior must be one of {BEHAVIOR_KINDS}, got {cfg.behavior!r}")
    if cfg.reward_rule not in REWARD_RULES:
        raise ConfigurationError(f"reward_rule must be one of {REWARD_RULES}, got {cfg.reward_rule!r}")
    if cfg.horizon < 1 or cfg.num_runs < 1 or cfg.record_stride < 1:
        raise ConfigurationError("horizon, num_runs and record_stride must be positive")


# --- assumption validators ----------------------------------------------------


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str

    def __str__(self):
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail}"


def _check_connectivity(c: np.ndarray) -> CheckResult:
    ok = topo.check_strong_connectivity(c)
    detail = "support digraph strongly connected with a self-loop" if ok else \
        "agents cannot all reach each other (or no self-loop exists)"
    return CheckResult("strong_connectivity", ok, detail)


def _check_doubly_stochastic(c: np.ndarray) -> CheckResult:
    row = float(np.max(np.abs(c.sum(axis=1) - 1.0)))
    col = float(np.max(np.abs(c.sum(axis=0) - 1.0)))
    neg = float(c.min())
    ok = row <= topo.STOCHASTIC_TOL and col <= topo.STOCHASTIC_TOL and neg >= 0.0
    return CheckResult(
        "doubly_stochastic", ok,
        f"max row-sum error {row:.2e}, max col-sum error {col:.2e}, min entry {neg:.2e}",
    )


def _check_spectral(c: np.ndarray) -> CheckResult:
    value = topo.spectral_contraction_value(c)
    return CheckResult("spectral_contraction", value < 1.0,
                       f"spectral norm of C'(I - 11'/K)C is {value:.6f} (needs < 1)")


def _check_bounded_ratios(table: np.ndarray) -> CheckResult:
    sup = 0.0
    k_n, o_n, s_n = table.shape
    for k in range(k_n):
        for o in range(o_n):
            row = table[k, o]
            for i in range(s_n):
                for j in range(s_n):
                    a, b = row[i], row[j]
                    if a == 0.0 and b == 0.0:
                        continue
                    if a == 0.0 or b == 0.0:
                        return CheckResult(
                            "bounded_likelihood_ratios", False,
                            f"log ratio unbounded: agent {k} obs {o} states ({i},{j})",
                        )
                    sup = max(sup, abs(math.log(a / b)))
    return CheckResult("bounded_likelihood_ratios", True,
                       f"sup |log likelihood ratio| = {sup:.4f}")


def _check_identifiability(table: np.ndarray) -> CheckResult:
    """Every pair of distinct states must be distinguishable by someone:
    some agent's expected log-likelihood ratio separates the pair in at
    least one direction (expectation under the table rows normalized over
    the observation alphabet)."""
    k_n, o_n, s_n = table.shape
    tol = 1e-12

    def direction(k: int, s_true: int, s_alt: int) -> float:
        total = 0.0
        norm = table[k, :, s_true].sum()
        if norm <= 0.0:
            return 0.0
        for o in range(o_n):
            gen = table[k, o, s_true] / norm
            if gen == 0.0:
                continue
            if table[k, o, s_alt] == 0.0:
                return math.inf
            total += gen * math.log(table[k, o, s_true] / table[k, o, s_alt])
        return total

    for i in range(s_n):
        for j in range(i + 1, s_n):
            best = 0.0
            for k in range(k_n):
                best = max(best, direction(k, i, j), direction(k, j, i))
            if best <= tol:
                return CheckResult(
                    "global_identifiability", False,
                    f"states {i} and {j} indistinguishable by every agent",
                )
    return CheckResult("global_identifiability", True,
                       "every state pair separated by some agent's likelihoods")


def _check_step_sizes(cfg: ExperimentConfig) -> CheckResult:
    problems = []
    if not 0.0 < cfg.critic_decay < 1.0 or not 0.0 < cfg.actor_decay < 1.0:
        problems.append("decay factors must lie in (0, 1)")
    beta0 = cfg.effective_critic_beta0()
    if beta0 <= 0.0:
        problems.append("critic schedule is not strictly decreasing (beta0 <= 0)")
    if beta0 > 1.0 / cfg.rho_max + 1e-15:
        problems.append(
            f"critic beta0 {beta0:.4f} exceeds 1/rho_max = {1.0 / cfg.rho_max:.4f}"
        )
    if cfg.effective_actor_beta0() <= 0.0:
        problems.append("actor schedule is not strictly decreasing (beta0 <= 0)")
    if problems:
        return CheckResult("step_size_budget", False, "; ".join(problems))
    total_c = beta0 / (1.0 - cfg.critic_decay)
    total_a = cfg.effective_actor_beta0() / (1.0 - cfg.actor_decay)
    return CheckResult(
        "step_size_budget", True,
        f"critic sum {total_c:.1f}, actor sum {total_a:.1f}, beta0 {beta0:.4f} <= 1/rho_max",
    )


def _check_scalar_ranges(cfg: ExperimentConfig) -> list[CheckResult]:
    out = []
    out.append(CheckResult("discount_range", 0.0 < cfg.gamma < 1.0,
                           f"gamma = {cfg.gamma}"))
    try:
        sigma = cfg.effective_sigma()
        sigma_ok = 0.0 < sigma < 1.0
        sigma_detail = f"sigma = {sigma:.4f}"
    except ConfigurationError as exc:
        sigma_ok, sigma_detail = False, str(exc)
    floor_ok = 0.0 < cfg.belief_floor < 1.0 / cfg.num_agents
    out.append(CheckResult("adaptivity_range", sigma_ok and floor_ok,
                           f"{sigma_detail}, floor = {cfg.belief_floor:g}"))
    out.append(CheckResult(
        "drift_range",
        0.0 < cfg.drift < 1.0 and 0.0 < cfg.table_noise < 0.5 and 0.0 <= cfg.obs_noise < 0.5,
        f"drift = {cfg.drift}, table_noise = {cfg.table_noise}, obs_noise = {cfg.obs_noise}",
    ))
    rounds_ok = True
    try:
        rounds = cfg.effective_consensus_rounds()
        rounds_ok = rounds >= 1
    except Exception:
        rounds_ok = False
        rounds = None
    out.append(CheckResult(
        "ratio_bounds",
        bool(0.0 < cfg.rho_min <= 1.0 <= cfg.rho_max) and rounds_ok,
        f"rho in [{cfg.rho_min}, {cfg.rho_max}], consensus rounds = {rounds}",
    ))
    return out


def validate_config(cfg: ExperimentConfig) -> list[CheckResult]:
    """Run every assumption check; returns one CheckResult per check."""
    results: list[CheckResult] = []
    try:
        c = cfg.build_combination()
        results.append(_check_connectivity(c))
        results.append(_check_doubly_stochastic(c))
        results.append(_check_spectral(c))
    except (ConfigurationError, topo.TopologyError) as exc:
        results.append(CheckResult("strong_connectivity", False, str(exc)))
        results.append(CheckResult("doubly_stochastic", False, "matrix unavailable"))
        results.append(CheckResult("spectral_contraction", False, "matrix unavailable"))
    try:
        env = cfg.build_env()
        results.append(_check_bounded_ratios(env.likelihood_table))
        results.append(_check_identifiability(env.likelihood_table))
    except ConfigurationError as exc:
        results.append(CheckResult("bounded_likelihood_ratios", False, str(exc)))
        results.append(CheckResult("global_identifiability", False, "environment unavailable"))
    results.append(_check_step_sizes(cfg))
    results.extend(_check_scalar_ranges(cfg))
    return results
