import math

import pytest

import aoimec


def test_selftest_quick():
    results = aoimec.selftest(quick=True)
    assert len(results) == 9
    failed = [(name, detail) for name, ok, detail in results if not ok]
    assert not failed


def test_flops():
    assert aoimec.actor_flops(15) == 1792 * 15 + 32768
    assert aoimec.value_flops(15) == 1024 * 15 + 33024
    assert aoimec.actor_flops(100) == 211968


def test_config_overrides_and_errors():
    text = aoimec.config_text("smoke", lambda_init=0.0, n_wds=3)
    assert "lambda_init = 0" in text
    assert "n_wds = 3" in text
    with pytest.raises(aoimec.ConfigError, match="lambda_inti"):
        aoimec.config_text("smoke", lambda_inti=1)
    with pytest.raises(ValueError):
        aoimec.run(policy="greedy")


def test_environment_step():
    env = aoimec.Environment("desk", seed=3)
    n = env.n_wds
    zero = [0.0] * n
    share = [env.bandwidth / n] * n
    m = env.step(zero, zero, share)
    assert m["clamped"] == 0
    assert m["energy"] == zero
    full = env.step(env.max_freq, env.max_power, share)
    assert all(e > 0 for e in full["energy"])
    assert env.state()["slot"] == 2


def test_short_runs_are_reproducible(tmp_path):
    a = aoimec.run("smoke", "dpds", seed=2, horizon_slots=300, out_dir=str(tmp_path))
    b = aoimec.run("smoke", "dpds", seed=2, horizon_slots=300)
    assert a["summary"] == b["summary"]
    assert (tmp_path / "trace.csv").exists()
    s = a["summary"]
    assert s["slots"] == 300
    assert math.isfinite(s["mean_aoi"]) and s["mean_aoi"] >= 0
    assert len(a["trace"]["mean_aoi"]) == 30


def test_sweep_shapes():
    cells = aoimec.sweep_n("smoke", [2, 3], ["lpo", "coo"], [1], horizon_slots=200)
    assert len(cells) == 4
    assert {c["policy"] for c in cells} == {"lpo", "coo"}
    budget = aoimec.sweep_budget("smoke", [1.0, 2.0], ["coo"], [1, 2], horizon_slots=200)
    assert [len(c["runs"]) for c in budget] == [2, 2]
