import csv
import io
import math
from pathlib import Path

import numpy as np
import pytest

from socialrl.config import ExperimentConfig, load_config
from socialrl.harness import (
    CSV_HEADER,
    iter_rows,
    recorded_steps,
    rolling_error_rate,
    run_paired,
    run_sweep,
    substream,
    summarize,
    terminal_metrics,
    write_run_csv,
)

METRICS_PARTIAL = {
    "reward", "cum_reward", "true_state", "hard_state", "soft_belief_entropy",
    "p_error_window", "consensus_disagreement", "critic_gap", "actor_gap",
    "rho_joint_est", "rho_joint_exact", "delta", "omega_norm", "projection_hits",
}
METRICS_FULL = {
    "reward", "cum_reward", "true_state", "consensus_disagreement",
    "rho_joint_est", "rho_joint_exact", "delta", "omega_norm", "projection_hits",
}


def small_cfg(**kw):
    defaults = dict(horizon=800)
    defaults.update(kw)
    return ExperimentConfig(**defaults)


def test_substreams_are_reproducible_and_distinct():
    a = substream(7, 3, "transition").random(5)
    b = substream(7, 3, "transition").random(5)
    np.testing.assert_array_equal(a, b)
    c = substream(7, 3, "observation").random(5)
    d = substream(7, 4, "transition").random(5)
    assert not np.array_equal(a, c)
    assert not np.array_equal(a, d)


def test_uniform_behavior_couples_arms_exactly():
    result = run_paired(small_cfg(behavior="uniform"), 0)
    np.testing.assert_array_equal(result.state_p, result.state_f)
    np.testing.assert_array_equal(result.actions_p, result.actions_f)
    np.testing.assert_array_equal(result.reward_p, result.reward_f)
    assert abs(result.cum_reward_p[-1] - result.cum_reward_f[-1]) == 0.0


def test_true_beliefs_flag_reproduces_oracle_bit_for_bit():
    result = run_paired(small_cfg(true_beliefs=True), 2)
    np.testing.assert_array_equal(result.state_p, result.state_f)
    np.testing.assert_array_equal(result.actions_p, result.actions_f)
    np.testing.assert_array_equal(result.delta_p, result.delta_f)
    np.testing.assert_array_equal(result.omega_p, result.omega_f)
    assert np.all(result.actor_gap == 0.0)
    # with identical arms the oracle-vs-average distance reduces to the
    # partial arm's own consensus disagreement
    np.testing.assert_array_equal(result.critic_gap, result.consensus_disagreement_p)


def test_gap_series_zero_for_identical_consensus_arms():
    from socialrl.harness import compute_gap_series

    omega = np.tile(np.array([[0.3, -0.2, 0.5]]), (4, 1))  # all agents equal
    traj = np.stack([omega, omega * 1.5])
    gaps = compute_gap_series(traj, traj)
    assert np.all(gaps["critic_gap"] == 0.0)
    assert np.all(gaps["consensus_disagreement_p"] == 0.0)


def test_gap_series_hand_computed_fixture():
    from socialrl.harness import compute_gap_series

    omega_p = np.array([[[1.0, 0.0], [0.0, 1.0]]])  # two agents, two states
    omega_f = np.array([[[1.0, 1.0], [1.0, 1.0]]])
    gaps = compute_gap_series(omega_p, omega_f)
    # partial mean is [0.5, 0.5]: disagreement sqrt(4 * 0.25) = 1
    assert gaps["consensus_disagreement_p"][0] == pytest.approx(1.0)
    # oracle stack minus the mean: each entry 0.5, norm sqrt(4 * 0.25) = 1
    assert gaps["critic_gap"][0] == pytest.approx(1.0)
    # permuting agents consistently leaves every gap unchanged
    perm = [1, 0]
    gaps2 = compute_gap_series(omega_p[:, perm], omega_f[:, perm])
    assert gaps2["critic_gap"][0] == pytest.approx(gaps["critic_gap"][0])
    assert gaps2["consensus_disagreement_p"][0] == pytest.approx(
        gaps["consensus_disagreement_p"][0]
    )


def test_frozen_learner_keeps_zero_parameters_and_gaps():
    result = run_paired(small_cfg(critic_beta0=0.0, actor_beta0=0.0), 1)
    assert np.all(result.omega_p == 0.0)
    assert np.all(result.omega_f == 0.0)
    assert np.all(result.actor_gap == 0.0)
    assert np.all(result.critic_gap == 0.0)
    # beliefs still evolve: the hard estimates track a moving state
    assert result.hard_p.std() > 0


def test_perfect_information_arms_agree_after_init():
    # width-1 windows, near-noiseless table, complete graph, maximal
    # adaptivity, known start: estimation is exact so both arms coincide
    cfg = small_cfg(
        graph_kind="complete", obs_halfwidth=0, table_noise=1e-9, sigma=0.99,
        init_state=0, horizon=400,
    )
    result = run_paired(cfg, 4)
    np.testing.assert_array_equal(result.hard_p.T, np.broadcast_to(result.state_p, (5, 400)))
    np.testing.assert_array_equal(result.state_p, result.state_f)
    np.testing.assert_array_equal(result.omega_p, result.omega_f)
    assert np.all(result.actor_gap == 0.0)


def test_hard_belief_dichotomy_every_step():
    result = run_paired(small_cfg(), 3)
    eye = np.eye(5)
    diff = eye[result.state_p][:, None, :] - eye[result.hard_p]
    norms = np.linalg.norm(diff, axis=2)
    match = result.hard_p == result.state_p[:, None]
    assert np.all(norms[match] == 0.0)
    np.testing.assert_allclose(norms[~match], math.sqrt(2.0), atol=1e-12)


def test_rolling_error_rate_window_clipping():
    hard = np.array([[0], [1], [1], [0]])
    true = np.zeros(4, dtype=int)
    out = rolling_error_rate(hard, true, window=2)
    np.testing.assert_allclose(out[:, 0], [0.0, 0.5, 1.0, 0.5])


def test_recorded_steps_include_last():
    steps = recorded_steps(100, 30)
    assert list(steps) == [0, 30, 60, 90, 99]
    assert list(recorded_steps(5, 1)) == [0, 1, 2, 3, 4]


def test_csv_rows_schema_and_bounds():
    result = run_paired(small_cfg(), 0)
    rows = list(iter_rows(result, stride=10))
    assert all(len(r) == 6 for r in rows)
    for run_id, arm, step, agent, metric, value in rows:
        assert run_id == result.run_id
        assert arm in ("partial", "full")
        allowed = METRICS_PARTIAL if arm == "partial" else METRICS_FULL
        assert metric in allowed
        assert -1 <= agent < 5
        value = float(value)
        if metric == "reward":
            assert abs(value) <= 1.0
        elif metric == "hard_state" or metric == "true_state":
            assert value == int(value) and 0 <= value < 5
        elif metric == "soft_belief_entropy":
            assert -1e-12 <= value <= math.log(5.0) + 1e-12
        elif metric == "p_error_window":
            assert 0.0 <= value <= 1.0


def test_csv_written_values_have_17_significant_digits():
    result = run_paired(small_cfg(horizon=50), 0)
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(CSV_HEADER)
    for row in iter_rows(result, stride=1):
        writer.writerow(row)
    text = buf.getvalue().splitlines()
    assert text[0] == "run_id,arm,step,agent,metric,value"
    # a third of a nat of entropy needs all 17 digits
    ent_rows = [l for l in text if "soft_belief_entropy" in l]
    assert any(len(l.rsplit(",", 1)[1]) >= 12 for l in ent_rows)


def test_run_csv_determinism(tmp_path):
    cfg = small_cfg(horizon=300)
    for name in ("a.csv", "b.csv"):
        write_run_csv(tmp_path / name, run_paired(cfg, 7), stride=1)
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_sweep_degenerate_grid_single_run(tmp_path):
    cfg = small_cfg(horizon=100, record_stride=5)
    csv_path, summary_path, terminals = run_sweep(cfg, [0.25], 1, tmp_path)
    assert len(terminals) == 1
    with open(csv_path) as handle:
        run_ids = {row["run_id"] for row in csv.DictReader(handle)}
    assert run_ids == {"eps0.25-seed0"}
    with open(summary_path) as handle:
        eps_values = {row["eps"] for row in csv.DictReader(handle)}
    assert eps_values == {"0.25"}


def test_sweep_outputs_and_summary_consistency(tmp_path):
    cfg = small_cfg(horizon=400, record_stride=7)
    csv_path, summary_path, terminals = run_sweep(cfg, [0.25, 0.125], 2, tmp_path)
    assert csv_path.exists() and summary_path.exists()
    assert len(terminals) == 4
    with open(summary_path) as handle:
        eps_rows = {row["eps"] for row in csv.DictReader(handle)}
    assert eps_rows == {"0.25", "0.125"}

    # recompute summary means from the raw rows independently
    per_run_cum = {}
    with open(csv_path) as handle:
        reader = csv.DictReader(handle)
        rows = list(reader)
    for row in rows:
        if row["metric"] == "cum_reward":
            key = (row["run_id"], row["arm"])
            step = int(row["step"])
            if key not in per_run_cum or step > per_run_cum[key][0]:
                per_run_cum[key] = (step, float(row["value"]))
    gaps = {}
    for (run_id, arm), (_, value) in per_run_cum.items():
        gaps.setdefault(run_id, {})[arm] = value
    eps_of = lambda run_id: run_id.split("-")[0].removeprefix("eps")
    recomputed = {}
    for run_id, arms in gaps.items():
        recomputed.setdefault(eps_of(run_id), []).append(abs(arms["full"] - arms["partial"]))

    with open(summary_path) as handle:
        summary = list(csv.DictReader(handle))
    for row in summary:
        if row["metric"] == "terminal_cum_reward_gap":
            eps_key = f"{float(row['eps']):g}"
            expect = sum(recomputed[eps_key]) / len(recomputed[eps_key])
            assert abs(float(row["mean"]) - expect) < 1e-9


def test_sweep_parallel_matches_serial(tmp_path):
    cfg = small_cfg(horizon=200, record_stride=5)
    p1 = tmp_path / "serial"
    p2 = tmp_path / "parallel"
    run_sweep(cfg, [0.25], 2, p1, jobs=1)
    run_sweep(cfg, [0.25], 2, p2, jobs=2)
    assert (p1 / "sweep.csv").read_bytes() == (p2 / "sweep.csv").read_bytes()
    assert (p1 / "summary.csv").read_bytes() == (p2 / "summary.csv").read_bytes()


def test_terminal_metrics_fields():
    result = run_paired(small_cfg(horizon=100), 0)
    metrics = terminal_metrics(result)
    assert metrics["terminal_cum_reward_gap"] == pytest.approx(
        abs(result.cum_reward_f[-1] - result.cum_reward_p[-1])
    )
    assert set(metrics) == {
        "terminal_cum_reward_partial", "terminal_cum_reward_full", "terminal_cum_reward_gap",
        "terminal_critic_gap", "terminal_actor_gap", "terminal_consensus_disagreement",
        "terminal_p_error",
    }


def test_summarize_single_run_stderr_zero():
    rows = summarize([{"eps": 0.25, "seed": 0, "metric_a": 2.0}])
    assert rows == [("0.25", "metric_a", "2", "0", "1")]


def test_joint_ratio_estimates_respect_clip_bounds():
    cfg = small_cfg(horizon=2000)
    result = run_paired(cfg, 0)
    lo, hi = cfg.rho_min ** 5, cfg.rho_max ** 5
    for arr in (result.rho_est_p, result.rho_est_f):
        assert arr.min() >= lo - 1e-15
        assert arr.max() <= hi + 1e-12
    for arr in (result.rho_exact_p, result.rho_exact_f):
        assert arr.min() >= lo - 1e-15
        assert arr.max() <= hi + 1e-12


def test_projection_guard_is_diagnostic_not_load_bearing():
    result = run_paired(small_cfg(horizon=2000), 0)
    total_steps = 2 * 2000 * 5
    hits = int(result.proj_p.sum() + result.proj_f.sum())
    assert hits / total_steps < 0.01
    assert np.all(result.omega_norm_p <= ExperimentConfig().guard() + 1e-9)
