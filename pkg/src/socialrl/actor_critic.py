"""Off-policy networked actor-critic driven by belief features.

Target policies are Boltzmann distributions over belief features, behavior
policies are fixed (uniform or Boltzmann with frozen parameters), and the
mismatch is corrected with a joint importance ratio recovered decentrally:
agents average the logs of their individual ratios over the graph and
exponentiate by the network size. Critic vectors are updated locally from a
TD error and then diffused with the combination matrix; actor matrices take
the score-function step.

`marl_sl_step` is the reference single-timescale iteration (one belief round
per learning step). The compiled kernels in ``_core``/``_purepy`` implement
the same loop for long runs and are tested against this module.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import beliefs as bel
from .errors import ConfigurationError, NumericError, OffSupportError


@dataclass(frozen=True)
class RatioBounds:
    """Clipping interval for individual importance ratios."""

    rho_min: float
    rho_max: float

    def __post_init__(self):
        if not 0.0 < self.rho_min <= 1.0 <= self.rho_max:
            raise ConfigurationError(
                f"need 0 < rho_min <= 1 <= rho_max, got ({self.rho_min}, {self.rho_max})"
            )


def boltzmann_policy(mu: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """Softmax over actions of the belief-feature logits mu @ theta[a]."""
    theta = np.asarray(theta, dtype=float)
    if not np.all(np.isfinite(theta)):
        raise NumericError("policy parameters contain non-finite values")
    logits = theta @ np.asarray(mu, dtype=float)
    logits -= logits.max()
    expd = np.exp(logits)
    return expd / expd.sum()


def log_policy_grad(action_taken: int, mu: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """Gradient of log pi(action_taken) w.r.t. every theta[a]: an (A, S) matrix
    mu * (1{a == action_taken} - pi(a))."""
    probs = boltzmann_policy(mu, theta)
    indicator = np.zeros_like(probs)
    indicator[action_taken] = 1.0
    return (indicator - probs)[:, None] * np.asarray(mu, dtype=float)[None, :]


def individual_ratio(action_taken: int, mu, theta, behavior_dist, bounds: RatioBounds) -> float:
    """Clipped target/behavior probability ratio for one agent's action."""
    q = float(behavior_dist[action_taken])
    if q <= 0.0:
        raise OffSupportError(f"behavior policy assigns zero mass to action {action_taken}")
    g = float(boltzmann_policy(mu, theta)[action_taken])
    return min(max(g / q, bounds.rho_min), bounds.rho_max)


def ratio_consensus(log_ratios: np.ndarray, combination: np.ndarray, rounds: int) -> np.ndarray:
    """Estimate the joint ratio at every agent by averaging log ratios.

    Applies f <- C f for `rounds` iterations starting from the individual
    log ratios, then returns exp(K * f). On topologies where `rounds` steps
    reach exact averaging this equals the product of all individual ratios.
    """
    if rounds < 1:
        raise ConfigurationError("consensus needs at least one round")
    f = np.asarray(log_ratios, dtype=float).copy()
    c = np.asarray(combination, dtype=float)
    for _ in range(rounds):
        f = c @ f
    return np.exp(len(f) * f)


def td_error(reward: float, gamma: float, omega: np.ndarray, mu: np.ndarray, eta: np.ndarray) -> float:
    """reward + gamma * v(next) - v(current) under the linear value model."""
    omega = np.asarray(omega, dtype=float)
    return float(reward + gamma * (omega @ eta) - omega @ mu)


def critic_local_update(omega, beta: float, rho_joint: float, delta: float, mu,
                        guard: float | None = None) -> np.ndarray:
    """Local TD step omega + beta * rho * delta * mu, optionally projected
    onto the ball of radius `guard`."""
    out = np.asarray(omega, dtype=float) + beta * rho_joint * delta * np.asarray(mu, dtype=float)
    if guard is not None:
        norm = float(np.linalg.norm(out))
        if norm > guard:
            out = out * (guard / norm)
    return out


def critic_diffuse(omegas: np.ndarray, combination: np.ndarray) -> np.ndarray:
    """Neighbor combination of critic vectors with column weights; a doubly
    stochastic matrix preserves the network mean exactly."""
    return np.asarray(combination, dtype=float).T @ np.asarray(omegas, dtype=float)


def actor_update(theta, beta_theta: float, rho_joint: float, delta: float, psi) -> np.ndarray:
    """Score-function step theta[a] + beta_theta * rho * delta * psi[a]."""
    return np.asarray(theta, dtype=float) + beta_theta * rho_joint * delta * np.asarray(psi, dtype=float)


def critic_guard(reward_bound: float, gamma: float) -> float:
    """Projection radius for the critic; generous enough that it only acts
    as a diagnostic safety net."""
    return 10.0 * reward_bound / (1.0 - gamma)


def geometric_schedule(first: float, decay: float, num_steps: int) -> np.ndarray:
    """Strictly decreasing step sizes first * decay**n with total sum
    first / (1 - decay)."""
    if not 0.0 < decay < 1.0:
        raise ConfigurationError(f"decay must be in (0, 1), got {decay}")
    if first < 0.0:
        raise ConfigurationError(f"step sizes must be nonnegative, got {first}")
    return first * decay ** np.arange(num_steps, dtype=float)


def critic_beta0(budget: float, decay: float, drift: float, rho_max: float) -> float:
    """First critic step size so the schedule total is budget/(drift*log(1/drift)),
    capped at 1/rho_max."""
    total = budget / (drift * math.log(1.0 / drift))
    return min((1.0 - decay) * total, 1.0 / rho_max)


def actor_beta0(budget: float, decay: float) -> float:
    """First actor step size so the schedule total equals the budget."""
    return budget * (1.0 - decay)


# --- behavior policies -------------------------------------------------------


class UniformBehavior:
    """State-independent uniform behavior; keeps paired arms on identical
    trajectories under shared action draws."""

    def __init__(self, num_actions: int):
        self.num_actions = num_actions
        self._dist = np.full(num_actions, 1.0 / num_actions)

    def distribution(self, agent: int, mu: np.ndarray) -> np.ndarray:
        return self._dist


class BoltzmannBehavior:
    """Fixed Boltzmann behavior over belief features with frozen parameters
    chi of shape (K, A, S)."""

    def __init__(self, chi: np.ndarray):
        self.chi = np.asarray(chi, dtype=float)
        self.num_actions = self.chi.shape[1]

    def distribution(self, agent: int, mu: np.ndarray) -> np.ndarray:
        return boltzmann_policy(mu, self.chi[agent])


def coordinated_up_pattern(num_agents: int, num_actions: int, num_states: int,
                           scale: float, up_action: int = 2) -> np.ndarray:
    """Behavior parameters that make each agent prefer "up" when it believes
    the ball sits on its own cell; exploratory everywhere else."""
    chi = np.zeros((num_agents, num_actions, num_states))
    for k in range(min(num_agents, num_states)):
        chi[k, up_action, k] = scale
    return chi


def centering_pattern(num_agents: int, num_actions: int, num_states: int,
                      scale: float, up_action: int = 2, halfwidth: int = 1) -> np.ndarray:
    """Behavior parameters that herd the ball toward the middle cell.

    When an agent believes the ball is within its own neighborhood window it
    prefers "up" (which pushes left) on the right half of the row and avoids
    it on the left half, so the ball mean-reverts and rarely parks at the
    boundary cells, whose observations are the least informative. Keying the
    preference to the window (not the exact cell) keeps the push effective
    even when the estimate is one cell off."""
    chi = np.zeros((num_agents, num_actions, num_states))
    mid = (num_states - 1) / 2.0
    for k in range(num_agents):
        for s in range(num_states):
            if abs(s - k) <= halfwidth:
                if k > mid:
                    chi[k, up_action, s] = scale
                elif k < mid:
                    chi[k, up_action, s] = -scale
    return chi


def sample_action(dist: np.ndarray, u: float) -> int:
    """Inverse-CDF draw, shared between arms so equal distributions give
    equal actions."""
    cum = 0.0
    for a in range(len(dist) - 1):
        cum += dist[a]
        if u < cum:
            return a
    return len(dist) - 1


# --- reference network iteration ---------------------------------------------


@dataclass
class NetworkState:
    """Mutable per-arm learner state: soft beliefs, hard belief indices,
    critic and actor parameters."""

    soft: np.ndarray      # (K, S)
    mu_idx: np.ndarray    # (K,) int
    omega: np.ndarray     # (K, S)
    theta: np.ndarray     # (K, A, S)

    @classmethod
    def initial(cls, num_agents: int, num_states: int, num_actions: int) -> "NetworkState":
        return cls(
            soft=np.full((num_agents, num_states), 1.0 / num_states),
            mu_idx=np.zeros(num_agents, dtype=np.int64),
            omega=np.zeros((num_agents, num_states)),
            theta=np.zeros((num_agents, num_actions, num_states)),
        )


def _basis(num_states: int, idx: int) -> np.ndarray:
    e = np.zeros(num_states)
    e[idx] = 1.0
    return e


def marl_sl_step(state: NetworkState, env, combination, sigma, beta, beta_theta, *,
                 gamma, bounds: RatioBounds, consensus_rounds, behavior, guard,
                 env_state: int, u_move: float, u_obs: np.ndarray, u_act: np.ndarray,
                 floor: float = bel.DEFAULT_FLOOR, true_beliefs: bool = False) -> dict:
    """One full iteration of the concurrent estimate-and-learn loop.

    Order: act from the behavior policy conditioned on the current hard
    belief; step the environment; observe the next state; run one belief
    round to estimate it; compute ratios, consensus, TD errors; update and
    diffuse critics; update actors; finally promote the next-state estimate
    to the current one. With true_beliefs=True the true state's basis vector
    replaces every estimated belief (the full-observability arm).

    Returns a record dict including the next environment state.
    """
    num_agents = env.num_agents
    num_states = env.num_states

    # act
    mu_feats = []
    dists = []
    actions = np.empty(num_agents, dtype=np.int64)
    for k in range(num_agents):
        feat = _basis(num_states, env_state) if true_beliefs else _basis(num_states, state.mu_idx[k])
        dist = behavior.distribution(k, feat)
        actions[k] = sample_action(dist, u_act[k])
        mu_feats.append(feat)
        dists.append(dist)

    # environment step and next-state observations
    next_state = env.transition_with(env_state, actions, u_move)
    rewards = np.array(
        [env.reward(env_state, actions[k], next_state, agent=k) for k in range(num_agents)]
    )
    observations = np.array(
        [env.observe_with(next_state, k, u_obs[k]) for k in range(num_agents)], dtype=np.int64
    )

    # belief round for the next state
    soft_new, hard_new = bel.network_belief_step(
        state.soft, observations, env, combination, sigma, floor
    )
    eta_idx = hard_new.argmax(axis=1)
    if true_beliefs:
        eta_feats = [_basis(num_states, next_state)] * num_agents
    else:
        eta_feats = [hard_new[k] for k in range(num_agents)]

    # individual ratios and decentralized joint-ratio estimate
    rhos = np.array([
        individual_ratio(actions[k], mu_feats[k], state.theta[k], dists[k], bounds)
        for k in range(num_agents)
    ])
    rho_est = ratio_consensus(np.log(rhos), combination, consensus_rounds)
    lo, hi = bounds.rho_min ** num_agents, bounds.rho_max ** num_agents
    rho_est = np.clip(rho_est, lo, hi)
    rho_exact = float(np.prod(rhos))

    # local critic/actor steps from pre-update parameters
    deltas = np.empty(num_agents)
    tilde = np.empty_like(state.omega)
    projections = 0
    for k in range(num_agents):
        deltas[k] = td_error(rewards[k], gamma, state.omega[k], mu_feats[k], eta_feats[k])
        updated = critic_local_update(state.omega[k], beta, rho_est[k], deltas[k], mu_feats[k])
        norm = float(np.linalg.norm(updated))
        if norm > guard:
            updated = updated * (guard / norm)
            projections += 1
        tilde[k] = updated
        psi = log_policy_grad(actions[k], mu_feats[k], state.theta[k])
        state.theta[k] = actor_update(state.theta[k], beta_theta, rho_est[k], deltas[k], psi)

    state.omega = critic_diffuse(tilde, combination)
    state.soft = soft_new
    state.mu_idx = eta_idx.astype(np.int64)

    return {
        "actions": actions,
        "next_state": next_state,
        "rewards": rewards,
        "observations": observations,
        "eta_idx": eta_idx,
        "deltas": deltas,
        "rho_individual": rhos,
        "rho_est": rho_est,
        "rho_exact": rho_exact,
        "projections": projections,
    }
