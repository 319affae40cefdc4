import math

import pytest

import sfag


def test_version():
    assert sfag.__version__ == "0.1.0"


def test_simulate_is_deterministic():
    a = sfag.simulate_garch(500, seed=7)
    b = sfag.simulate_garch(500, seed=7)
    assert a == b
    assert len(a) == 500
    assert sfag.simulate_garch(500, seed=8) != a


def test_stylized_fact_estimators():
    r = sfag.simulate_garch(4000, seed=11)
    fit = sfag.fit_gpd_pot(r)
    assert fit.n_exceed >= 30
    assert fit.beta > 0
    assert -0.5 <= fit.xi <= 1.0

    rho = sfag.acf([abs(x) for x in r], lags=20)
    assert len(rho) == 20
    assert all(-1.0 <= v <= 1.0 for v in rho)

    assert abs(sfag.leverage_corr(r)) <= 1.0

    c = sfag.cfvc_matrix(r)
    assert len(c) == 4 and all(len(row) == 4 for row in c)
    for i in range(4):
        assert c[i][i] == pytest.approx(1.0)
        for j in range(4):
            assert c[i][j] == c[j][i]


def test_evaluate_paths_self_has_zero_gaps():
    r = sfag.simulate_garch(2000, seed=13)
    ev = sfag.evaluate_paths(r, [r])
    assert set(ev) == {"real", "synth", "gaps"}
    for gap in ev["gaps"].values():
        assert gap == 0.0


def test_train_generate_roundtrip(tmp_path):
    r = sfag.simulate_garch(1500, seed=5)
    kw = dict(iterations=3, n_critic=2, batch=4, seed=3,
              latent_dim=8, seq_len=128, gen_hidden=[16], critic_hidden=[16, 8])
    gen, critic, log = sfag.train(r, **kw)
    gen2, _, log2 = sfag.train(r, **kw)

    assert gen.role == "generator" and critic.role == "critic"
    assert [rec["total"] for rec in log] == [rec["total"] for rec in log2]
    assert len(log) == 3
    assert "wall_seconds" not in log[0]

    paths = gen.generate(4, seed=9)
    assert len(paths) == 4 and all(len(p) == 128 for p in paths)
    assert paths == gen2.generate(4, seed=9)
    assert all(math.isfinite(x) for p in paths for x in p)

    ckpt = tmp_path / "gen.sfag"
    gen.save(str(ckpt))
    loaded = sfag.load_checkpoint(str(ckpt))
    assert loaded.generate(2, seed=1) == gen.generate(2, seed=1)

    with pytest.raises(ValueError):
        critic.generate(1)
    with pytest.raises(sfag.CheckpointError):
        sfag.load_checkpoint(str(tmp_path / "missing.sfag"))


def test_baseline_flag_drops_alignment_terms():
    r = sfag.simulate_garch(1500, seed=5)
    kw = dict(iterations=2, n_critic=2, batch=4, seed=3,
              latent_dim=8, seq_len=128, gen_hidden=[16], critic_hidden=[16, 8])
    _, _, log = sfag.train(r, baseline=True, **kw)
    _, _, log_zero = sfag.train(r, w_gpd=0, w_acf=0, w_lev=0, w_cfvc=0, **kw)
    assert [rec["total"] for rec in log] == [rec["total"] for rec in log_zero]
    assert all(rec["gpd"] == 0.0 for rec in log)


def test_backtest_and_csv(tmp_path):
    out = sfag.run_momentum([0.01] * 80, lookback=10, cost_bps=5.0)
    assert len(out["daily"]) == 70
    assert out["daily"][0] == 0.01 - 5.0 / 1e4
    assert out["metrics"]["n_trades"] == 1
    assert out["metrics"]["max_drawdown"] == 0.0

    path = tmp_path / "r.csv"
    values = sfag.simulate_garch(50, seed=2)
    sfag.write_returns_csv(str(path), values)
    assert sfag.ingest_returns(str(path)) == values
    with pytest.raises(sfag.CsvError):
        sfag.ingest_returns(str(tmp_path / "missing.csv"))
