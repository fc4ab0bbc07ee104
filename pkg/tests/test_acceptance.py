"""Acceptance suite: every criterion at its stated tolerance, one printed
pass line per criterion.

The trend criteria run the full desk-scale workload (5-agent ring, 20,000
steps, 10 paired seeds per drift value) through the shipped default
configuration, reduced on the fly so the suite stays light on memory.
"""

import csv
import math
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from socialrl.actor_critic import boltzmann_policy, log_policy_grad, ratio_consensus
from socialrl.beliefs import DEFAULT_FLOOR, network_belief_step, uniform_belief
from socialrl.config import ExperimentConfig, load_config, validate_config
from socialrl.envs import PistonballEnv
from socialrl.harness import run_paired
from socialrl.topology import build_graph, metropolis_weights

ROOT = Path(__file__).resolve().parent.parent
CONFIG_DIR = ROOT / "configs"

EPS_VALUES = (0.25, 0.125)
NUM_SEEDS = 10


def _ok(num, message):
    print(f"ACCEPTANCE {num:>2} PASS: {message}")


@pytest.fixture(scope="session")
def default_cfg():
    return load_config(CONFIG_DIR / "default.toml")


@pytest.fixture(scope="session")
def sweep(default_cfg):
    """Reduced statistics of the 2 x 10 paired desk-scale runs."""
    records = {}
    for eps in EPS_VALUES:
        cfg = default_cfg.with_drift(eps)
        for seed in range(NUM_SEEDS):
            result = run_paired(cfg, seed)
            n = result.num_steps
            true = result.state_p
            trans = np.zeros(n, dtype=bool)
            trans[1:] = true[1:] != true[:-1]
            since = np.full(n, n + 10)
            last = -(n + 10)
            for i in range(n):
                if trans[i]:
                    last = i
                since[i] = i - last
            mism = result.hard_p != true[:, None]
            records[(eps, seed)] = {
                "match": 1.0 - mism.mean(),
                "lag_fraction": float(
                    (mism & (since < 5)[:, None]).sum() / max(mism.sum(), 1)
                ),
                "consensus": result.consensus_disagreement_p,
                "critic_gap": float(result.critic_gap[-1]),
                "actor_gap": float(result.actor_gap[-1].mean()),
                "reward_gap": abs(float(result.cum_reward_f[-1] - result.cum_reward_p[-1])),
                "reward_bound_ok": bool(
                    (np.abs(result.reward_p) <= 1.0).all() and (np.abs(result.reward_f) <= 1.0).all()
                ),
                "dichotomy_ok": _dichotomy_holds(result),
                "entropy_ok": bool(
                    (result.entropy_p >= -1e-12).all()
                    and (result.entropy_p <= math.log(5.0) + 1e-12).all()
                ),
            }
    return records


def _dichotomy_holds(result):
    eye = np.eye(5)
    diff = eye[result.state_p][:, None, :] - eye[result.hard_p]
    norms = np.linalg.norm(diff, axis=2)
    match = result.hard_p == result.state_p[:, None]
    return bool(np.all(norms[match] == 0.0) and np.allclose(norms[~match], math.sqrt(2.0)))


def test_criterion_1_structural_invariants(default_cfg, sweep):
    # combination matrices: doubly stochastic to 1e-12
    for kind, n in (("ring", 5), ("ring", 3), ("path", 4), ("complete", 6)):
        c = metropolis_weights(build_graph(kind, n))
        assert np.max(np.abs(c.sum(axis=0) - 1.0)) < 1e-12
        assert np.max(np.abs(c.sum(axis=1) - 1.0)) < 1e-12
        assert np.all(c >= 0.0)

    # every soft belief over a simulated run stays on the simplex and floored
    env = default_cfg.build_env()
    combination = default_cfg.build_combination()
    sigma = default_cfg.effective_sigma()
    rng = np.random.default_rng(0)
    soft = np.tile(uniform_belief(5), (5, 1))
    state = 2
    for _ in range(300):
        actions = rng.integers(0, 3, size=5)
        state = env.transition(state, actions, rng)
        obs = np.array([env.observe(state, k, rng) for k in range(5)])
        soft, hard = network_belief_step(soft, obs, env, combination, sigma)
        assert np.all(soft >= DEFAULT_FLOOR)
        np.testing.assert_allclose(soft.sum(axis=1), 1.0, atol=1e-12)
        assert np.all(hard.sum(axis=1) == 1.0)

    # reward bound, entropy range and the hard-belief dichotomy on every
    # desk-scale run
    assert all(r["reward_bound_ok"] for r in sweep.values())
    assert all(r["entropy_ok"] for r in sweep.values())
    assert all(r["dichotomy_ok"] for r in sweep.values())
    _ok(1, "simplex/floor, double stochasticity, reward bound, dichotomy")


def test_criterion_2_gradient_oracle():
    rng = np.random.default_rng(2024)
    h = 1e-5
    worst = 0.0
    for _ in range(100):
        mu = rng.dirichlet(np.ones(5))
        theta = rng.normal(size=(3, 5))
        action = int(rng.integers(3))
        psi = log_policy_grad(action, mu, theta)
        fd = np.zeros_like(theta)
        for a in range(3):
            for s in range(5):
                up, down = theta.copy(), theta.copy()
                up[a, s] += h
                down[a, s] -= h
                fd[a, s] = (
                    math.log(boltzmann_policy(mu, up)[action])
                    - math.log(boltzmann_policy(mu, down)[action])
                ) / (2 * h)
        worst = max(worst, np.abs(psi - fd).max() / max(np.abs(fd).max(), 1e-12))
    assert worst < 1e-6
    _ok(2, f"log-policy gradient vs central differences, worst rel err {worst:.2e}")


def test_criterion_3_consensus_oracle():
    # exactness in one round on exact-averaging topologies
    rng = np.random.default_rng(5)
    ratios = rng.uniform(0.5, 2.0, size=4)
    complete = metropolis_weights(build_graph("complete", 4))
    est = ratio_consensus(np.log(ratios), complete, rounds=1)
    np.testing.assert_allclose(est, np.prod(ratios), rtol=1e-10)

    ring3 = metropolis_weights(build_graph("ring", 3))
    ratios3 = np.array([1.0, 2.0, 4.0])
    np.testing.assert_allclose(ratio_consensus(np.log(ratios3), ring3, 1), 8.0, rtol=1e-10)

    # geometric decay on a 6-ring at the second singular value's rate
    ring6 = metropolis_weights(build_graph("ring", 6))
    logs = np.log(np.array([0.5, 1.0, 2.0, 4.0, 1.5, 0.8]))
    target = math.exp(6 * logs.mean())
    sing = np.linalg.svd(ring6 - np.ones((6, 6)) / 6, compute_uv=False)[0]
    errs = [
        np.abs(np.log(ratio_consensus(logs, ring6, t)) - math.log(target)).max()
        for t in range(2, 16)
    ]
    slope = np.polyfit(np.arange(2, 16), np.log(errs), 1)[0]
    assert abs(slope - math.log(sing)) / abs(math.log(sing)) < 0.10
    _ok(3, f"exact products in T=1; decay slope {slope:.4f} vs log(s2) {math.log(sing):.4f}")


def test_criterion_4_tiny_mdp_value_oracle():
    from socialrl.actor_critic import critic_local_update, td_error

    gamma, beta = 0.5, 0.05
    p = np.array([[0.0, 1.0], [1.0, 0.0]])
    rewards_entering = np.array([1.0, -1.0])  # +1 for landing in state 0
    r_bar = p @ rewards_entering
    oracle = np.linalg.solve(np.eye(2) - gamma * p, r_bar)

    omega = np.zeros(2)
    state = 0
    for _ in range(2000):
        nxt = 1 - state
        delta = td_error(rewards_entering[nxt], gamma, omega, np.eye(2)[state], np.eye(2)[nxt])
        omega = critic_local_update(omega, beta, 1.0, delta, np.eye(2)[state])
        state = nxt
    err = np.abs(omega - oracle).max()
    assert err < 0.02
    _ok(4, f"terminal critic within {err:.2e} of the 2x2 linear-solve fixed point")


def test_criterion_5_static_state_recovery():
    cfg = ExperimentConfig(
        drift=0.0, sigma=0.3, init_state=2, horizon=200, error_window=150,
        critic_beta0=0.01,
    )
    worst = 0.0
    for seed in range(3):
        result = run_paired(cfg, seed)
        errors = (result.hard_p[50:200] != result.state_p[50:200, None]).mean(axis=0)
        worst = max(worst, float(errors.max()))
    assert worst < 0.05
    _ok(5, f"frozen-state error rate over steps 50..199 at most {worst:.3f} per agent")


def test_criterion_6_state_tracking(sweep):
    matches = [sweep[(0.25, s)]["match"] for s in range(NUM_SEEDS)]
    lags = [sweep[(0.25, s)]["lag_fraction"] for s in range(NUM_SEEDS)]
    assert min(matches) >= 0.70
    assert min(lags) >= 0.90
    _ok(6, f"tracking match >= {min(matches):.3f}, transition-lag share >= {min(lags):.3f}")


def test_criterion_7_consensus_trend(sweep):
    worst = 0.0
    for eps in EPS_VALUES:
        for seed in range(NUM_SEEDS):
            series = sweep[(eps, seed)]["consensus"]
            ratio = series[-1000:].mean() / series.max()
            worst = max(worst, float(ratio))
    assert worst < 0.10
    _ok(7, f"final-1000-step consensus disagreement at most {worst:.3f} of run max")


def test_criterion_8_paired_trends(sweep):
    lines = []
    for metric in ("critic_gap", "actor_gap", "reward_gap"):
        low = [sweep[(0.125, s)][metric] for s in range(NUM_SEEDS)]
        high = [sweep[(0.25, s)][metric] for s in range(NUM_SEEDS)]
        wins = sum(1 for a, b in zip(low, high) if a < b)
        assert np.mean(low) < np.mean(high), metric
        assert wins >= 8, f"{metric}: only {wins}/10 seeds agree"
        lines.append(f"{metric} {np.mean(low):.3f}<{np.mean(high):.3f} ({wins}/10)")
    _ok(8, "; ".join(lines))


def test_criterion_9_byte_identical_csv(tmp_path):
    config_path = tmp_path / "small.toml"
    config_path.write_text(
        (CONFIG_DIR / "default.toml").read_text().replace("horizon = 20000", "horizon = 2000")
    )
    outputs = []
    for name in ("one", "two"):
        out_dir = tmp_path / name
        proc = subprocess.run(
            [sys.executable, "-m", "socialrl.cli", "run",
             "--config", str(config_path), "--seed", "11", "--out", str(out_dir)],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0, proc.stderr
        outputs.append((out_dir / "run-eps0.25-seed11.csv").read_bytes())
    assert outputs[0] == outputs[1]
    _ok(9, f"two CLI executions produced identical {len(outputs[0])}-byte CSVs")


def test_criterion_10_assumption_validators(default_cfg):
    results = validate_config(default_cfg)
    assert all(c.passed for c in results), [str(c) for c in results if not c.passed]

    expectations = {
        "disconnected.toml": "strong_connectivity",
        "uniform_likelihoods.toml": "global_identifiability",
        "oversized_beta0.toml": "step_size_budget",
    }
    intended = set(expectations.values())
    for filename, target in expectations.items():
        cfg = load_config(CONFIG_DIR / "negative" / filename)
        checks = {c.name: c.passed for c in validate_config(cfg)}
        assert not checks[target], f"{filename} should fail {target}"
        for other in intended - {target}:
            assert checks[other], f"{filename} unexpectedly failed {other}"

    # exit codes through the CLI surface
    ok = subprocess.run(
        [sys.executable, "-m", "socialrl.cli", "check-assumptions",
         "--config", str(CONFIG_DIR / "default.toml")],
        capture_output=True, text=True,
    )
    assert ok.returncode == 0
    bad = subprocess.run(
        [sys.executable, "-m", "socialrl.cli", "check-assumptions",
         "--config", str(CONFIG_DIR / "negative" / "disconnected.toml")],
        capture_output=True, text=True,
    )
    assert bad.returncode == 2
    _ok(10, "default config passes, each negative config fails its intended check")
