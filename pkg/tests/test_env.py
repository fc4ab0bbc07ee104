import numpy as np
import pytest

from socialrl.envs import DOWN, SEEN, STAY, UNSEEN, UP, PistonballEnv
from socialrl.errors import ConfigurationError


def make_env(**kw):
    defaults = dict(num_agents=5, drift=0.25, table_noise=0.1, obs_noise=0.0)
    defaults.update(kw)
    return PistonballEnv(**defaults)


def test_likelihood_unseen_uniform():
    env = make_env()
    for s in range(5):
        assert env.likelihood(3, UNSEEN, s) == pytest.approx(0.2)


def test_likelihood_seen_window():
    env = make_env()
    assert env.likelihood(3, SEEN, 2) == pytest.approx(0.9)
    assert env.likelihood(3, SEEN, 0) == pytest.approx(0.1)


def test_likelihood_rows_match_table():
    env = make_env()
    for k in range(5):
        for obs in (UNSEEN, SEEN):
            np.testing.assert_array_equal(env.likelihood_row(k, obs), env.likelihood_table[k, obs])


def test_observe_noiseless_in_window():
    env = make_env()
    rng = np.random.default_rng(0)
    assert env.observe(3, 3, rng) == SEEN
    assert env.observe(0, 4, rng) == UNSEEN


def test_observe_noisy_rate():
    env = make_env(obs_noise=0.1)
    rng = np.random.default_rng(12345)
    draws = 100_000
    seen = sum(env.observe(3, 3, rng) == SEEN for _ in range(draws))
    assert seen / draws == pytest.approx(0.9, abs=0.01)


def test_transition_zero_drift_is_frozen():
    env = make_env(drift=0.0)
    rng = np.random.default_rng(0)
    for _ in range(100):
        assert env.transition(2, [STAY] * 5, rng) == 2


def test_transition_up_moves_left_at_drift_rate():
    env = make_env()
    rng = np.random.default_rng(7)
    actions = [STAY, STAY, STAY, UP, STAY]
    draws = 100_000
    left = sum(env.transition(3, actions, rng) == 2 for _ in range(draws))
    assert left / draws == pytest.approx(0.25, abs=0.01)


def test_transition_boundary_clamp():
    env = make_env()
    rng = np.random.default_rng(3)
    actions = [UP] * 5  # at state 0 an "up" means a clamped left move
    seen_states = {env.transition(0, actions, rng) for _ in range(1000)}
    assert seen_states == {0}
    actions = [DOWN] * 5  # rightward moves stay in range
    seen_states = {env.transition(0, actions, rng) for _ in range(1000)}
    assert seen_states <= {0, 1}


@pytest.mark.parametrize("drift", [0.5, 0.25, 0.125])
def test_transition_stay_probability(drift):
    env = make_env(drift=drift)
    rng = np.random.default_rng(99)
    draws = 100_000
    stays = sum(env.transition(2, [STAY] * 5, rng) == 2 for _ in range(draws))
    rate = stays / draws
    se = np.sqrt(drift * (1 - drift) / draws)
    assert abs(rate - (1 - drift)) < 3 * se


def test_transition_distribution_sums_to_one():
    env = make_env()
    for s in range(5):
        for a_under in (DOWN, STAY, UP):
            actions = [STAY] * 5
            actions[s] = a_under
            dist = env.transition_distribution(s, actions)
            assert dist.sum() == pytest.approx(1.0, abs=1e-12)
            assert np.all(dist >= 0)


def test_leftward_reward_values():
    env = make_env(reward_rule="leftward")
    assert env.reward(3, STAY, 2) == 1.0
    assert env.reward(3, STAY, 3) == 0.0
    assert env.reward(3, STAY, 4) == -1.0


def test_leftward_reward_identical_across_agents():
    env = make_env(reward_rule="leftward")
    for k in range(5):
        assert env.reward(3, UP, 2, agent=k) == 1.0


def test_reward_bound_all_rules():
    for rule in ("leftward", "coordination"):
        env = make_env(reward_rule=rule)
        worst = max(
            abs(env.reward(s, a, s2, agent=k))
            for s in range(5) for s2 in range(5) for a in (DOWN, STAY, UP) for k in range(5)
        )
        assert worst <= env.reward_bound


def test_coordination_reward_pays_for_appropriate_effort():
    env = make_env(reward_rule="coordination")
    # right-half agent with the ball in its window: "up" is the good action
    assert env.reward(3, UP, 3, agent=3) > env.reward(3, STAY, 3, agent=3)
    # left-half agent with the ball in its window: "up" is the bad action
    assert env.reward(1, UP, 1, agent=1) < env.reward(1, STAY, 1, agent=1)
    # far from the ball, resting beats pushing
    assert env.reward(4, UP, 4, agent=0) < env.reward(4, DOWN, 4, agent=0)


def test_reward_tables_reconstruct_reward():
    for rule in ("leftward", "coordination"):
        env = make_env(reward_rule=rule)
        pair = env.reward_pair_table()
        act = env.reward_action_table()
        for k in range(5):
            for s in range(5):
                for s2 in range(5):
                    for a in (DOWN, STAY, UP):
                        assert pair[s, s2] + act[k, s, a] == pytest.approx(
                            env.reward(s, a, s2, agent=k), abs=1e-12
                        )


def test_rewards_bounded_over_trajectory():
    env = make_env(reward_rule="coordination")
    rng = np.random.default_rng(5)
    s = 2
    for _ in range(2000):
        actions = rng.integers(0, 3, size=5)
        s2 = env.transition(s, actions, rng)
        for k in range(5):
            assert abs(env.reward(s, actions[k], s2, agent=k)) <= env.reward_bound
        s = s2


def test_custom_likelihood_table_shape_checked():
    with pytest.raises(ConfigurationError):
        make_env(likelihood_table=np.ones((5, 2, 4)))


def test_env_parameter_validation():
    with pytest.raises(ConfigurationError):
        make_env(drift=1.5)
    with pytest.raises(ConfigurationError):
        make_env(obs_noise=0.7)
    with pytest.raises(ConfigurationError):
        make_env(reward_rule="nonsense")
