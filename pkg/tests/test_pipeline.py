import numpy as np
import pytest

import nmps.pipeline as pipeline
from nmps.envs import make_env
from nmps.features import encode_batch, init_feature_map, sample_task
from nmps.intrinsic import KnnConfig, apt_rewards_batch, visr_rewards_batch
from nmps.pipeline import (
    FinetuneConfig,
    PretrainConfig,
    aps_rewards,
    finetune,
    pretrain,
    run_baseline,
    solve_w,
)
from nmps.sf_agent import SuccessorTable, td_update_batch
from nmps.snapshot import dumps

SMALL = PretrainConfig(total_steps=1500, warmup_steps=200, batch_size=32, capacity=5000, entropy_window=500)
FT = FinetuneConfig(budget_steps=2000, w_refresh_steps=250, eval_interval=500, eval_episodes=2)


@pytest.fixture(scope="module")
def small_run():
    return pretrain("NMPS_X_sep^ex", make_env("fourrooms", "open"), 0.1, 3, SMALL)


class TestSolveW:
    def test_identity_design(self):
        w = solve_w(np.eye(5), np.eye(5)[3], ridge=0.5).w
        assert np.allclose(w, np.eye(5)[3] / 1.5)
        assert np.allclose(solve_w(np.eye(5), np.eye(5)[3], ridge=1e-12).w, np.eye(5)[3])

    def test_recovers_linear_reward(self, rng):
        phi = rng.normal(size=(500, 8))
        w_true = rng.normal(size=8)
        fit = solve_w(phi, phi @ w_true, ridge=1e-8)
        assert fit.origin == "regressed"
        assert np.linalg.norm(fit.w - w_true) <= 1e-6

    def test_residual_is_projection_remainder(self, rng):
        phi = rng.normal(size=(40, 3))
        r = rng.normal(size=40)
        w = solve_w(phi, r, ridge=0.0).w
        ref = np.linalg.lstsq(phi, r, rcond=None)[0]
        assert np.allclose(w, ref)
        assert np.allclose(phi.T @ (r - phi @ w), 0.0, atol=1e-10)

    def test_rank_deficient_needs_ridge(self):
        phi = np.ones((10, 3))
        with pytest.raises(np.linalg.LinAlgError, match="ridge"):
            solve_w(phi, np.ones(10), ridge=0.0)
        assert np.all(np.isfinite(solve_w(phi, np.ones(10), ridge=1e-3).w))
        with pytest.raises(ValueError):
            solve_w(phi, np.ones(10), ridge=-1.0)


class TestPretrain:
    def test_log_shape(self, small_run):
        log = small_run.log
        assert set(log) == set(pipeline.LOG_COLUMNS)
        assert all(len(v) == 1500 for v in log.values())
        assert log["step"] == list(range(1500))
        assert all(m == "Explor" for m in log["mode"][:75])

    def test_reward_sources_are_exclusive(self, small_run):
        log = small_run.log
        assert set(log["exploit_reward_source"]) <= {"visr", ""}
        assert set(log["explor_reward_source"]) <= {"apt", ""}
        assert "visr" in log["exploit_reward_source"] and "apt" in log["explor_reward_source"]

    def test_snapshots(self, small_run):
        assert small_run.snapshot.metadata["step"] == 750
        assert small_run.final_snapshot.metadata["step"] == 1500
        assert not np.array_equal(small_run.snapshot.successor.psi, small_run.final_snapshot.successor.psi)

    def test_coverage_is_monotone(self, small_run):
        cov = small_run.log["coverage"]
        assert np.all(np.diff(cov) >= 0) and cov[-1] == small_run.stats["coverage"] <= 25

    def test_deterministic(self, small_run):
        again = pretrain("NMPS_X_sep^ex", make_env("fourrooms", "open"), 0.1, 3, SMALL)
        assert again.log == small_run.log
        assert dumps(again.final_snapshot) == dumps(small_run.final_snapshot)

    def test_exploit_only_ablation(self):
        res = pretrain("NMPS_X_sep^ex", make_env("fourrooms", "open"), 0.1, 0,
                       PretrainConfig(**{**SMALL.__dict__, "exploit_only": True}))
        assert set(res.log["mode"]) == {"Exploit"}
        assert set(res.log["explor_reward_source"]) == {""}

    def test_always_explorer_and_common_buffer(self):
        env = make_env("fourrooms", "open")
        d = pretrain("NMPS_D_sep^ex_D", env, 0.1, 0, SMALL)
        assert set(d.log["mode"]) == {"Explor"}
        assert set(d.log["exploit_batch_source"]) == {"exploit", ""}
        c = pretrain("NMPS_X_exploit^ex", env, 0.1, 0, SMALL)
        srcs = set(c.log["exploit_batch_source"]) | set(c.log["explor_batch_source"])
        assert srcs == {"exploit", ""}

    def test_frozen_explorer_features(self):
        res = pretrain("NMPS_X_sep^e*", make_env("fourrooms", "open"), 0.1, 0, SMALL)
        init = pretrain("NMPS_X_sep^e*", make_env("fourrooms", "open"), 0.1, 0,
                        PretrainConfig(**{**SMALL.__dict__, "total_steps": 200, "warmup_steps": 190}))
        assert np.array_equal(res.explorer.feature_map.weights, init.explorer.feature_map.weights)

    def test_pointmass_runs(self):
        res = pretrain("NMPS_X_sep^ex", make_env("pointmass"), 0.1, 0, SMALL)
        assert not res.final_snapshot.successor.tabular
        assert np.all(np.isfinite(res.final_snapshot.successor.psi))

    @pytest.mark.parametrize("cfg, match", [
        (PretrainConfig(total_steps=100, warmup_steps=200), "warm-up"),
        (PretrainConfig(total_steps=1000, batch_size=8, knn_k=12), "knn_k"),
    ])
    def test_preconditions(self, cfg, match):
        with pytest.raises(ValueError, match=match):
            pretrain("NMPS_X_sep^ex", make_env("fourrooms", "open"), 0.1, 0, cfg)

    def test_unknown_variant(self):
        with pytest.raises(ValueError):
            pretrain("NMPS_Z", make_env("fourrooms", "open"), 0.1, 0, SMALL)


class TestBaselines:
    def test_aps_has_no_controller(self):
        res = run_baseline("APS", make_env("fourrooms", "open"), 1000, 0, SMALL)
        assert set(res.log["mode"]) == {""}
        assert set(res.log["exploit_reward_source"]) <= {"visr+apt", ""}
        assert res.explorer is None and res.snapshot.successor is not None

    def test_aps_reward_is_sum(self, rng):
        fmap = init_feature_map(25, 10, rng)
        obs = np.eye(25)[rng.integers(0, 25, size=32)]
        ws = np.array([sample_task(10, rng).w for _ in range(32)])
        knn = KnnConfig()
        visr, apt, combined = aps_rewards(fmap, obs, ws, knn)
        phi = encode_batch(fmap, obs)
        assert np.array_equal(visr, visr_rewards_batch(phi, ws))
        assert np.array_equal(apt, apt_rewards_batch(phi, None, knn))
        assert np.array_equal(combined, visr + apt)
        # the cumulant used for the monolithic agent reproduces the combined reward along w
        cumulant = phi + apt[:, None] * ws
        assert np.allclose(np.einsum("nd,nd->n", cumulant, ws), combined)

    def test_diayn_snapshot(self):
        res = run_baseline("DIAYN", make_env("fourrooms", "open"), 1000, 0, SMALL, num_skills=4)
        assert res.snapshot.successor is None
        assert res.snapshot.extras["skill_q"].shape == (4, 25, 4)
        assert 0.0 <= res.stats["discriminator_accuracy"] <= 1.0

    def test_errors(self):
        with pytest.raises(ValueError):
            run_baseline("SMM", make_env("fourrooms", "open"), 1000, 0, SMALL)
        with pytest.raises(ValueError):
            run_baseline("APS", make_env("fourrooms", "open"), 100, 0, SMALL)


class TestFinetune:
    def test_zero_reward_stays_flat(self, small_run):
        res = finetune(small_run.snapshot, make_env("fourrooms", "open"), FT, 0)
        assert np.allclose(res.w, 0.0)
        assert [c[1] for c in res.curve] == [0.0] * 4
        assert not res.stats["task_identified"]

    def test_reaches_goal_on_open_room(self, small_run):
        env = make_env("fourrooms", "open", task_id="reach-goal-NE")
        res = finetune(small_run.snapshot, env, FT, 0)
        assert res.stats["task_identified"]
        assert res.final_return == 1.0

    def test_deterministic(self, small_run):
        env = make_env("fourrooms", "open", task_id="reach-goal-NE")
        a = finetune(small_run.snapshot, env, FT, 5)
        b = finetune(small_run.snapshot, env, FT, 5)
        assert a.curve == b.curve and np.array_equal(a.successor.psi, b.successor.psi)

    def test_snapshot_is_not_modified(self, small_run):
        before = dumps(small_run.snapshot)
        finetune(small_run.snapshot, make_env("fourrooms", "open", task_id="reach-goal-NE"), FT, 0)
        assert dumps(small_run.snapshot) == before

    def test_explorer_is_never_consulted(self, small_run, monkeypatch):
        calls = []
        for name in ("explorer_act", "explorer_update", "explorer_rewards"):
            monkeypatch.setattr(pipeline, name, lambda *a, _n=name, **k: calls.append(_n))
        finetune(small_run.snapshot, make_env("fourrooms", "open", task_id="reach-goal-NE"), FT, 0)
        assert calls == []

    def test_mismatched_snapshot(self, small_run):
        with pytest.raises(ValueError):
            finetune(small_run.snapshot, make_env("fourrooms", task_id="reach-goal-NE"), FT, 0)

    def test_diayn_snapshot(self):
        env = make_env("fourrooms", "open")
        base = run_baseline("DIAYN", env, 1000, 0, SMALL, num_skills=4)
        res = finetune(base.snapshot, make_env("fourrooms", "open", task_id="reach-goal-NE"), FT, 0)
        assert len(res.curve) == 4 and "skill" in res.stats

    def test_reexpress_preserves_values(self, rng):
        t = SuccessorTable(4, 2, 3, psi=rng.normal(size=(4, 2, 3)))
        w_old, w_new = rng.normal(size=3), rng.normal(size=3)
        q_old = t.psi @ w_old
        pipeline._reexpress(t, w_old, w_new)
        assert np.allclose(t.psi @ w_new, q_old)


def test_converged_successor_features_match_value_iteration(open_room, rng):
    """Greedy policy on converged psi under w_true is optimal for r = phi(s')^T w_true."""
    gamma = 0.9
    fmap = init_feature_map(25, 6, rng)
    phi = encode_batch(fmap, np.eye(25))
    w_true = sample_task(6, rng).w
    nxt = np.array([[open_room.index[open_room.move(c, a)] for a in range(4)] for c in open_room.cells])
    r = phi[nxt] @ w_true

    q = np.zeros((25, 4))
    for _ in range(2000):
        q = r + gamma * q.max(axis=1)[nxt]

    table = SuccessorTable(25, 4, 6, gamma=gamma, learning_rate=0.5)
    s_all, a_all = np.repeat(np.arange(25), 4), np.tile(np.arange(4), 25)
    ws = np.tile(w_true, (100, 1))
    for _ in range(1500):
        td_update_batch(table, s_all, a_all, nxt[s_all, a_all], phi[nxt[s_all, a_all]], ws)
    q_sf = table.psi @ w_true
    assert np.max(np.abs(q_sf - q)) < 1e-3
    greedy = q_sf.argmax(axis=1)
    assert np.all(q[np.arange(25), greedy] >= q.max(axis=1) - 1e-6)
