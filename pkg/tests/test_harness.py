import json
from pathlib import Path

import numpy as np
import pytest

from sqrl import checkpoint as ckpt
from sqrl.curves import CurveWriter, LearningCurve, aggregate_mean_band, read_curve
from sqrl.envs import env_spec
from sqrl.errors import ConfigError
from sqrl.experiment import (
    evaluate,
    report,
    resume_seed,
    run_experiment,
    run_seed,
    sweep_reuse,
    xcheck_fixture,
)
from sqrl.noise import EXACT, NoiseModel
from sqrl.presets import PRESETS, ExperimentConfig, get_preset

FIXTURES = Path(__file__).parent / "fixtures"

# pinned: any change to a preset's tabled values must change these
PRESET_FINGERPRINTS = {
    "acrobot-fcn": "8dc9ce0b0bf2d218",
    "acrobot-ibm": "056dc3d28922a920",
    "acrobot-table3": "b6539d7338152ee7",
    "cartpole-fcn": "fccc2649beffed80",
    "cartpole-ibm": "b86dcab3693b4d93",
    "cartpole-table3": "47d7bfb23ccfc2ad",
    "lunarlander-fcn": "be64ded051d782fc",
    "lunarlander-ibm": "2d14babc34f4984f",
    "lunarlander-table3": "2ca93abeb965cc1c",
}


def tiny_config(episodes=3, name="cartpole-table3"):
    return get_preset(name, trainer={"max_episodes": episodes})


class TestCurves:
    def test_roundtrip(self, tmp_path):
        rows = [
            {"episode": i + 1, "reward": float(10 * i + 0.25), "avg20": 0.0,
             "steps": i + 1, "wall_ms": 1.5}
            for i in range(5)
        ]
        curve = LearningCurve(rows)
        for i, row in enumerate(curve.rows):
            row["avg20"] = float(np.mean(curve.rewards[max(0, i - 19): i + 1]))
        with CurveWriter(tmp_path / "c.csv") as w:
            for row in curve.rows:
                w(row)
        back = read_curve(tmp_path / "c.csv")
        assert back.rewards == curve.rewards
        assert back.recompute_avg20() == [r["avg20"] for r in back.rows]

    def test_crash_prefix_parseable(self, tmp_path):
        path = tmp_path / "c.csv"
        with CurveWriter(path) as w:
            w({"episode": 1, "reward": 1.0, "avg20": 1.0, "steps": 1, "wall_ms": 0.1})
            w({"episode": 2, "reward": 2.0, "avg20": 1.5, "steps": 2, "wall_ms": 0.1})
        with open(path, "a") as fh:
            fh.write("3,4.0")  # torn final line
        back = read_curve(path)
        assert len(back) == 2

    def test_aggregate(self):
        a = LearningCurve([{"episode": 1, "reward": 1.0, "avg20": 1.0, "steps": 1, "wall_ms": 0}])
        b = LearningCurve([{"episode": 1, "reward": 3.0, "avg20": 3.0, "steps": 1, "wall_ms": 0}])
        band = aggregate_mean_band([a, b])
        assert band["reward_mean"] == [2.0]
        assert band["n_seeds"] == 2


class TestCheckpointFormat:
    def test_hex_roundtrip_exact(self):
        doc = {
            "version": 1,
            "x": 0.1 + 0.2,
            "arr": np.linspace(-1, 1, 7) * np.pi,
            "nested": {"vals": [1.5e-300, -0.0, 2.0**-1074]},
            "n": 3,
            "s": "text",
            "flag": True,
            "none": None,
        }
        text = ckpt.dumps(doc)
        back = ckpt.loads(text)
        assert back["x"] == doc["x"]
        assert np.array_equal(back["arr"], doc["arr"])
        assert back["nested"]["vals"] == doc["nested"]["vals"]

    def test_save_load_save_byte_identical(self, tmp_path):
        doc = {"version": 1, "w": np.random.default_rng(0).normal(size=(3, 4))}
        p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
        ckpt.save(doc, p1)
        ckpt.save(ckpt.load(p1), p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_version_gate(self, tmp_path):
        path = tmp_path / "c.json"
        ckpt.save({"version": 99}, path)
        with pytest.raises(ConfigError):
            ckpt.load(path)

    def test_fingerprint_sensitivity(self):
        base = get_preset("cartpole-table3")
        bumped = get_preset("cartpole-table3", trainer={"actor_lr": 0.0011})
        assert base.fingerprint() != bumped.fingerprint()
        assert base.fingerprint() == get_preset("cartpole-table3").fingerprint()

    def test_preset_fingerprints_pinned(self):
        got = {name: cfg.fingerprint() for name, cfg in PRESETS.items()}
        assert got == PRESET_FINGERPRINTS


class TestPresets:
    def test_parameter_counts(self):
        actor, critic = get_preset("cartpole-table3").build_models(0)
        assert actor.param_count() == 134
        acro_ibm, _ = get_preset("acrobot-ibm").build_models(0)
        assert acro_ibm.head_param_count() == 21
        lunar_ibm, _ = get_preset("lunarlander-ibm").build_models(0)
        assert lunar_ibm.head_param_count() == 100
        assert lunar_ibm.param_count() == 124
        assert lunar_ibm.circuit.n_params == 24

    def test_table_values(self):
        cp = get_preset("cartpole-table3")
        assert (cp.trainer.actor_lr, cp.trainer.critic_lr) == (0.001, 0.01)
        assert (cp.trainer.gamma, cp.trainer.epochs, cp.trainer.clip_eps) == (0.99, 4, 0.1)
        assert cp.reuse == 16 and cp.circuit.n_qubits == 4
        ac = get_preset("acrobot-table3")
        assert (ac.trainer.actor_lr, ac.trainer.critic_lr, ac.trainer.gamma) == (0.004, 0.04, 0.98)
        assert ac.reuse == 8 and ac.circuit.n_qubits == 6
        ll = get_preset("lunarlander-table3")
        assert (ll.trainer.actor_lr, ll.trainer.critic_lr, ll.trainer.gamma) == (0.002, 0.02, 0.98)
        assert ll.circuit.n_outputs == 24 and ll.reuse == 8
        assert ll.freeze_threshold == 200.0
        fcn = get_preset("cartpole-fcn")
        assert (fcn.trainer.actor_lr, fcn.trainer.critic_lr, fcn.trainer.gamma) == (0.0003, 0.001, 0.98)

    def test_unknown_preset(self):
        with pytest.raises(ConfigError):
            get_preset("frozenlake-table3")

    def test_config_roundtrip(self):
        for name, cfg in PRESETS.items():
            again = ExperimentConfig.from_dict(cfg.to_dict())
            assert again.to_dict() == cfg.to_dict()
            assert again.fingerprint() == cfg.fingerprint()


class TestRunExperiment:
    def test_run_seed_writes_outputs(self, tmp_path):
        summary = run_seed(tiny_config(), 0, out_dir=tmp_path)
        seed_dir = tmp_path / "cartpole-table3" / "seed-0"
        assert (seed_dir / "curve.csv").exists()
        assert (seed_dir / "checkpoint_final.json").exists()
        assert (seed_dir / "checkpoint_best.json").exists()
        assert summary["episodes"] == 3
        curve = read_curve(seed_dir / "curve.csv")
        assert len(curve) == 3

    def test_single_episode_single_row(self, tmp_path):
        run_seed(tiny_config(episodes=1), 0, out_dir=tmp_path)
        curve = read_curve(tmp_path / "cartpole-table3" / "seed-0" / "curve.csv")
        assert len(curve) == 1

    def test_aggregate_over_seeds(self, tmp_path):
        agg = run_experiment(tiny_config(), [0, 1], out_dir=tmp_path)
        assert agg["n_solved"] == 0
        assert len(agg["summaries"]) == 2
        assert (tmp_path / "cartpole-table3" / "aggregate.json").exists()

    def test_checkpoint_files_byte_identical_after_reload(self, tmp_path):
        run_seed(tiny_config(), 0, out_dir=tmp_path)
        path = tmp_path / "cartpole-table3" / "seed-0" / "checkpoint_final.json"
        doc = ckpt.load(path)
        second = tmp_path / "again.json"
        ckpt.save(doc, second)
        assert path.read_bytes() == second.read_bytes()

    def test_env_fault_leaves_partial_curve(self, tmp_path):
        class FlakyEnv:
            obs_dim, n_actions = 4, 2

            def __init__(self):
                self.episodes = 0

            def reset(self, seed=None):
                self.episodes += 1
                if self.episodes > 2:
                    raise RuntimeError("physics backend fell over")
                return np.zeros(4)

            def step(self, action):
                return np.zeros(4), 1.0, True

        import sqrl.envs

        config = tiny_config(episodes=10)
        real_make = sqrl.envs.make_env
        import sqrl.experiment as exp
        exp.make_env = lambda *a, **k: FlakyEnv()
        try:
            with pytest.raises(RuntimeError):
                run_seed(config, 0, out_dir=tmp_path)
        finally:
            exp.make_env = real_make
        curve = read_curve(tmp_path / "cartpole-table3" / "seed-0" / "curve.csv")
        assert len(curve) == 2  # the two completed episodes survived the crash

    def test_resume_matches_uninterrupted(self, tmp_path):
        full = run_seed(tiny_config(episodes=12), 7, out_dir=tmp_path / "full")
        run_seed(tiny_config(episodes=6), 7, out_dir=tmp_path / "half")
        half_ck = tmp_path / "half" / "cartpole-table3" / "seed-7" / "checkpoint_final.json"
        _, resumed = resume_seed(half_ck, max_episodes=12)
        full_curve = read_curve(tmp_path / "full" / "cartpole-table3" / "seed-7" / "curve.csv")
        assert full_curve.rewards[6:] == resumed.episode_rewards[6:]
        assert full_curve.rewards == resumed.episode_rewards
        # and the resumed final checkpoint parameters equal the full run's
        full_doc = ckpt.load(tmp_path / "full" / "cartpole-table3" / "seed-7" / "checkpoint_final.json")
        for k, v in full_doc["train_state"]["opt_a"]["m"].items():
            assert np.array_equal(v, resumed.state["opt_a"]["m"][k])


class TestEvaluate:
    def test_exact_mode_shapes_and_determinism(self, tmp_path):
        run_seed(tiny_config(episodes=2), 0, out_dir=tmp_path)
        path = tmp_path / "cartpole-table3" / "seed-0" / "checkpoint_best.json"
        a = evaluate(path, episodes=3, noise=EXACT, seed=5)
        b = evaluate(path, episodes=3, noise=EXACT, seed=5)
        assert a["rewards"] == b["rewards"]
        assert a["episodes"] == 3 and len(a["rewards"]) == 3
        assert "first5_mean" in a

    def test_noisy_mode_runs(self, tmp_path):
        run_seed(tiny_config(episodes=2), 0, out_dir=tmp_path)
        path = tmp_path / "cartpole-table3" / "seed-0" / "checkpoint_best.json"
        out = evaluate(path, episodes=2,
                       noise=NoiseModel(p_readout=0.0116, shots=32), seed=5)
        assert len(out["rewards"]) == 2

    def test_sampled_actions_flag(self, tmp_path):
        run_seed(tiny_config(episodes=2), 0, out_dir=tmp_path)
        path = tmp_path / "cartpole-table3" / "seed-0" / "checkpoint_best.json"
        out = evaluate(path, episodes=2, greedy=False, seed=5)
        assert out["greedy"] is False

    def test_untrained_acrobot_policy_scores_no_learning_floor(self):
        from sqrl.experiment import make_checkpoint

        config = get_preset("acrobot-table3")
        actor, critic = config.build_models(0)
        doc = make_checkpoint(config, actor.to_dict(), actor.params,
                              critic.params, episode=0)
        out = evaluate(doc, episodes=5, greedy=False, seed=3)
        assert out["mean"] <= -480.0


class TestXCheckFixture:
    @pytest.mark.parametrize("env_id", ["cartpole-v1", "acrobot-v1"])
    def test_fixture_replay_passes(self, env_id):
        out = xcheck_fixture(env_id, FIXTURES / f"{env_id}_reference_trace.json")
        assert out["passed"], out
        assert out["max_abs_deviation"] < 1e-6
        assert out["steps"] == 1000


class TestReport:
    def test_report_over_two_models(self, tmp_path):
        run_experiment(tiny_config(episodes=2), [0], out_dir=tmp_path)
        run_experiment(get_preset("cartpole-fcn", trainer={"max_episodes": 2}),
                       [0], out_dir=tmp_path)
        out = report(tmp_path)
        assert "cartpole-table3" in out["experiments"]
        assert "cartpole-fcn" in out["experiments"]
        entry = out["experiments"]["cartpole-table3"]
        assert entry["actor_params"] == 134
        pair = out["speedups"]["cartpole-table3_vs_cartpole-fcn"]
        assert pair["svqc_median"] is None  # 2 episodes never reach threshold
        assert (tmp_path / "report.json").exists()

    def test_identical_curves_aggregate_to_themselves(self, tmp_path):
        run_seed(tiny_config(episodes=3), 0, out_dir=tmp_path / "a")
        c = read_curve(tmp_path / "a" / "cartpole-table3" / "seed-0" / "curve.csv")
        band = aggregate_mean_band([c, c])
        assert band["reward_mean"] == c.rewards
        assert all(s == 0.0 for s in band["reward_std"])


class TestSweep:
    def test_reuse_sweep_emits_curves(self, tmp_path):
        out = sweep_reuse(get_preset("cartpole-table3"), [4, 8], [0],
                          out_dir=tmp_path, max_episodes=2)
        assert set(out) == {4, 8}
        for l in (4, 8):
            assert (tmp_path / f"cartpole-table3-reuse{l}" / "seed-0" / "curve.csv").exists()
