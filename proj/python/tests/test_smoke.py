import json
import math

import pytest

import manifoldshap as ms


def test_shapley_weight_sums_to_one_over_sizes():
    d = 5
    total = sum(math.comb(d - 1, s) * ms.shapley_weight(s, d) for s in range(d))
    assert total == pytest.approx(1.0)


def test_exact_from_table_additive_game():
    # v(S) = sum of members' weights -> phi equals the weights
    w = [1.0, -2.0, 0.5]
    table = [sum(w[i] for i in range(3) if mask >> i & 1) for mask in range(8)]
    res = ms.exact_shapley_from_table(table, 3)
    assert res["phi"] == pytest.approx(w)
    assert ms.top_feature(res["phi"]) == 1


def test_normalize_l1_degenerate():
    assert ms.normalize_l1([0.0, 0.0])["degenerate"]
    assert ms.normalize_l1([1.0, -3.0])["phi"] == pytest.approx([0.25, -0.75])


def test_threshold_for_mass_order_statistic():
    dens = [float(i) for i in range(1, 11)]
    # k = floor(0.2 * 10) = 2 -> second smallest
    assert ms.threshold_for_mass(dens, 0.8) == pytest.approx(2.0)


def test_sample_scm_is_seeded():
    a, names = ms.sample_scm("sine", 50, seed=3)
    b, _ = ms.sample_scm("sine", 50, seed=3)
    assert a == b
    assert len(names) == 2


def test_config_round_trip_and_validation():
    cfg = json.loads(ms.default_config("synthetic_dag"))
    assert cfg["experiment"] == "synthetic_dag"
    with pytest.raises(ms.ConfigError):
        ms.run_experiment("synthetic_dag", json.dumps({"no_such_key": 1}))


def test_small_experiment_runs(tmp_path):
    cfg = {"n_points": 4, "m": 50, "methods": ["is", "manifold"], "deltas": [0.0]}
    res = ms.run_experiment("synthetic_dag", json.dumps(cfg), threads=1, out_dir=tmp_path)
    assert (tmp_path / "summary.csv").exists()
    setting = res["settings"][0]
    assert sum(setting["methods"]["is"]["top_percentages"]) == pytest.approx(100.0)


def test_cli_list_and_bad_flag():
    code, out, _ = ms.run_cli(["experiment", "list"])
    assert code == 0
    assert "synthetic_dag" in out
    code, _, _ = ms.run_cli(["attribute", "--no-such-flag"])
    assert code == 2
