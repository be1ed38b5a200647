"""Smoke tests for the python bindings; runnable directly or via pytest."""

import json
import math
import sys

import numpy as np

import cutkit


def test_version():
    assert cutkit.__version__


def test_normalize_moments():
    rng = np.random.default_rng(1)
    t = np.arange(200) * 0.002
    f = rng.normal(size=(200, 3)) * [3.0, 0.5, 1.0] + [2.0, -7.0, 0.0]
    out = cutkit.normalize(list(t), f)
    values = np.asarray(out["values"])
    assert np.abs(values.mean(axis=0)).max() < 1e-9
    assert np.abs(values.std(axis=0) - 1.0).max() < 1e-9


def test_coarse_align_recovers_shift():
    rng = np.random.default_rng(2)
    base = rng.normal(size=(150, 3))
    shifted = np.zeros_like(base)
    shifted[23:] = base[:-23]
    assert cutkit.coarse_align(base, shifted) == 23


def test_dtw_identity_and_duplication():
    rng = np.random.default_rng(3)
    a = rng.normal(size=(10, 3))
    cost, pairs = cutkit.dtw_align(a, a, open_ended=False)
    assert cost < 1e-12
    assert pairs == [(i, i) for i in range(10)]

    ref = np.array([[0.0, 0, 0], [1, 1, 1], [2, 2, 2]])
    query = np.array([[0.0, 0, 0], [0, 0, 0], [1, 1, 1], [2, 2, 2]])
    cost, pairs = cutkit.dtw_align(ref, query, open_ended=False)
    assert cost < 1e-12
    assert sum(1 for l, _ in pairs if l == 0) == 2


def test_periodic_kernel_closed_form():
    k = cutkit.PeriodicKernel(period=1.0, length_scale=1.0, signal_variance=1.0)
    assert abs(k(0.0, 0.5) - math.exp(-2.0)) < 1e-12
    assert abs(k(0.3, 1.3) - 1.0) < 1e-12


def test_gp_posterior_interpolates():
    t = [0.0, 0.13, 0.29, 0.41, 0.55]
    y = np.random.default_rng(4).normal(size=(5, 3))
    model = cutkit.GpModel(t, y, cutkit.PeriodicKernel(1.0, 1.0, 1.0), 1e-12)
    mean, std = model.posterior([0.29])
    assert np.abs(mean[0] - y[2]).max() < 1e-6
    assert std.max() < 1e-3
    d1 = model.sample([0.1, 0.2], seed=7)
    d2 = model.sample([0.1, 0.2], seed=7)
    assert np.array_equal(d1, d2)


def test_chip_thickness_closed_form():
    h = cutkit.chip_thickness(math.pi / 2, spindle_rps=25.0, feed_rate=12.5, n_flutes=4)
    assert abs(h - 0.125) < 1e-12


def test_total_force_zero_without_engagement():
    tool = cutkit.ToolModel.uniform(4, 1.2, [100.0, 30.0, 8.0], [2.0, 1.0, 0.3], 20.0)
    f = cutkit.total_force(tool, 25.0, 12.5, 0.7, [False] * 4)
    assert np.linalg.norm(f) == 0.0


def test_env_rollout_deterministic_and_expert_cuts():
    env_config = cutkit.EnvConfig()
    env = cutkit.CutEnv(env_config)
    obs1 = env.reset(42)
    obs2 = env.reset(42)
    assert np.array_equal(obs1, obs2)

    expert = cutkit.scripted_expert(env_config)
    env.reset(42)
    result = cutkit.rollout(env, expert, max_steps=1000)
    assert env.done()
    assert env.mrv() > 0.0
    assert abs(sum(result["rewards"]) - result["total_reward"]) < 1e-9


def test_env_layout_stable():
    layout = cutkit.CutEnv.observation_layout()
    assert layout[0] == ("path_alignment", 0, 1)
    assert sum(size for _, _, size in layout) == 15


def test_welch_frozen_example():
    r = cutkit.welch_t_test([1.0, 2.0, 3.0], [4.0, 5.0, 6.0])
    assert r["valid"]
    assert abs(r["t"] + 3.6742346) < 1e-3
    assert abs(r["dof"] - 4.0) < 1e-9
    assert abs(r["p"] - 0.0213116) < 1e-4


def test_align_files_pipeline(tmp_dir="smoke_trials"):
    import shutil

    try:
        truth = json.loads(
            cutkit.synth_trials(trials=3, samples=400, noise_std=0.0, max_lag=25,
                                seed=9, out_dir=tmp_dir)
        )
        paths = [f"{tmp_dir}/{t['file']}" for t in truth["trials"]]
        dataset = json.loads(cutkit.align_files(paths))
        assert len(dataset["series"]) == 3
        for k, t in enumerate(truth["trials"]):
            assert dataset["provenance"][k]["lag"] == t["lag"]
    finally:
        shutil.rmtree(tmp_dir, ignore_errors=True)


def main():
    failures = 0
    for name, fn in sorted(globals().items()):
        if name.startswith("test_") and callable(fn):
            try:
                fn()
                print(f"PASS  {name}")
            except AssertionError as e:
                failures += 1
                print(f"FAIL  {name}: {e}")
    if failures:
        sys.exit(1)


if __name__ == "__main__":
    main()
