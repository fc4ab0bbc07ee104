"""Discrete piston-row environment plus the generic interface the learner uses.

The global state is the cell index of a ball sitting above a row of pistons
(one piston per agent, so S == K). Each step the state stays put with
probability 1 - drift; otherwise the ball moves one cell: left when the
piston directly under it plays "up", right otherwise, clamping at the
boundaries (a clamped move becomes a stay). Agents observe only a binary
"seen"/"unseen" flag for their own neighborhood window.

Two noise parameters exist and are independent:
  * table_noise is the hedge inside the likelihood table used for belief
    updates (the "seen" row is 1-table_noise inside the window, table_noise
    outside; the "unseen" row is uniform and carries no information);
  * obs_noise is the flip probability of the generated observation itself
    (0 reproduces deterministic in-window indicators).
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigurationError

UNSEEN, SEEN = 0, 1
DOWN, STAY, UP = 0, 1, 2

REWARD_RULES = ("leftward", "coordination")

COORD_POSITION_WEIGHT = 0.25


class Environment:
    """Minimal surface the harness and learner require."""

    num_agents: int
    num_states: int
    num_actions: int
    reward_bound: float

    def transition(self, state: int, actions, rng) -> int:
        raise NotImplementedError

    def reward(self, state: int, action: int, next_state: int, agent: int = 0) -> float:
        raise NotImplementedError

    def observe(self, state: int, agent: int, rng) -> int:
        raise NotImplementedError

    def likelihood(self, agent: int, obs: int, state: int) -> float:
        raise NotImplementedError


def pistonball_likelihood_table(num_agents: int, table_noise: float, halfwidth: int = 1) -> np.ndarray:
    """(K, 2, S) likelihood table: uniform "unseen" rows, windowed "seen" rows."""
    k, s = num_agents, num_agents
    table = np.empty((k, 2, s))
    table[:, UNSEEN, :] = 1.0 / s
    for agent in range(k):
        for state in range(s):
            inside = abs(state - agent) <= halfwidth
            table[agent, SEEN, state] = 1.0 - table_noise if inside else table_noise
    return table


class PistonballEnv(Environment):
    """Discretized piston row with a slowly drifting ball.

    Rewards are bounded by 1. Two rules:
      * "leftward": +1 when the ball moved left, -1 right, 0 otherwise;
        identical for all agents. Its trajectory sum telescopes to start
        minus end position, so cumulative reward stays within S - 1.
      * "coordination": a positional payoff for keeping the ball near the
        middle cell plus an individual term for spending piston effort only
        where it belongs (agents on the right half should push "up" exactly
        when the ball is in their window, left-half agents the opposite,
        everyone should rest when the ball is far away). Cumulative reward
        grows with time, and misjudging the ball's position costs reward.
    """

    def __init__(
        self,
        num_agents: int,
        drift: float,
        table_noise: float = 0.1,
        obs_noise: float = 0.0,
        obs_halfwidth: int = 1,
        likelihood_table: np.ndarray | None = None,
        reward_rule: str = "leftward",
    ):
        if num_agents < 2:
            raise ConfigurationError("pistonball needs at least 2 agents")
        if not 0.0 <= drift < 1.0:
            raise ConfigurationError(f"drift must be in [0, 1), got {drift}")
        if not 0.0 <= obs_noise < 0.5:
            raise ConfigurationError(f"obs_noise must be in [0, 0.5), got {obs_noise}")
        if reward_rule not in REWARD_RULES:
            raise ConfigurationError(f"unknown reward rule {reward_rule!r}")
        self.num_agents = num_agents
        self.num_states = num_agents
        self.num_actions = 3
        self.drift = drift
        self.table_noise = table_noise
        self.obs_noise = obs_noise
        self.obs_halfwidth = obs_halfwidth
        self.reward_rule = reward_rule
        self.reward_bound = 1.0
        if likelihood_table is None:
            likelihood_table = pistonball_likelihood_table(num_agents, table_noise, obs_halfwidth)
        likelihood_table = np.asarray(likelihood_table, dtype=float)
        if likelihood_table.shape != (num_agents, 2, self.num_states):
            raise ConfigurationError(
                f"likelihood table must have shape {(num_agents, 2, self.num_states)}, "
                f"got {likelihood_table.shape}"
            )
        if np.any(likelihood_table < 0) or np.any(likelihood_table > 1):
            raise ConfigurationError("likelihood table entries must lie in [0, 1]")
        self.likelihood_table = likelihood_table

    # --- observation model -------------------------------------------------

    def in_window(self, state: int, agent: int) -> bool:
        return abs(state - agent) <= self.obs_halfwidth

    def likelihood(self, agent: int, obs: int, state: int) -> float:
        return float(self.likelihood_table[agent, obs, state])

    def likelihood_row(self, agent: int, obs: int) -> np.ndarray:
        return self.likelihood_table[agent, obs]

    def observe(self, state: int, agent: int, rng) -> int:
        return self.observe_with(state, agent, rng.random())

    def observe_with(self, state: int, agent: int, u: float) -> int:
        flip = u < self.obs_noise
        return SEEN if self.in_window(state, agent) != flip else UNSEEN

    # --- dynamics -----------------------------------------------------------

    def _move_target(self, state: int, actions) -> int:
        target = state - 1 if actions[state] == UP else state + 1
        if target < 0 or target >= self.num_states:
            return state  # clamped move becomes a stay
        return target

    def transition(self, state: int, actions, rng) -> int:
        return self.transition_with(state, actions, rng.random())

    def transition_with(self, state: int, actions, u: float) -> int:
        if u < self.drift:
            return self._move_target(state, actions)
        return state

    def transition_distribution(self, state: int, actions) -> np.ndarray:
        dist = np.zeros(self.num_states)
        dist[state] += 1.0 - self.drift
        dist[self._move_target(state, actions)] += self.drift
        return dist

    def _centeredness(self, state: int) -> float:
        mid = (self.num_states - 1) / 2.0
        return 1.0 - abs(state - mid) / mid

    def _effort_appropriate(self, agent: int, state: int, action: int) -> bool:
        mid = (self.num_agents - 1) / 2.0
        if self.in_window(state, agent) and agent != mid:
            return (action == UP) == (agent > mid)
        return action != UP

    def reward(self, state: int, action: int, next_state: int, agent: int = 0) -> float:
        if self.reward_rule == "coordination":
            positional = COORD_POSITION_WEIGHT * self._centeredness(next_state)
            effort = (1.0 - COORD_POSITION_WEIGHT) if self._effort_appropriate(agent, state, action) else 0.0
            return positional + effort
        if next_state < state:
            return 1.0
        if next_state > state:
            return -1.0
        return 0.0

    def reward_pair_table(self) -> np.ndarray:
        """(S, S) component of the reward that depends on (state, next state)."""
        s_n = self.num_states
        table = np.empty((s_n, s_n))
        for s in range(s_n):
            for s2 in range(s_n):
                if self.reward_rule == "coordination":
                    table[s, s2] = COORD_POSITION_WEIGHT * self._centeredness(s2)
                else:
                    table[s, s2] = 1.0 if s2 < s else (-1.0 if s2 > s else 0.0)
        return table

    def reward_action_table(self) -> np.ndarray:
        """(K, S, A) component of the reward that depends on the agent's own
        action given the current state; zero for state-only rules."""
        table = np.zeros((self.num_agents, self.num_states, self.num_actions))
        if self.reward_rule == "coordination":
            for k in range(self.num_agents):
                for s in range(self.num_states):
                    for a in range(self.num_actions):
                        if self._effort_appropriate(k, s, a):
                            table[k, s, a] = 1.0 - COORD_POSITION_WEIGHT
        return table
