#!/usr/bin/env python3
"""Smoke test for the imc_dse_py extension.

Build and install first:  pip install ./crates/python   (or `maturin develop`)
Then run:                 python3 python/smoke_test.py
"""

import json
import math

import imc_dse_py as dse


def main():
    assert "resnet18" in dse.Network.benchmarks()

    mlp = dse.Network.builtin("mlp_mnist")
    assert len(mlp) == 5
    report = dse.estimate(mlp)
    assert report["total"]["tiles"] == 3232, report["total"]

    net = dse.Network.builtin("resnet18")
    assert net.lowered()[0] == (147, 64, 12544)
    base = dse.estimate(net, "uniform:8")
    assert base["summary"]["bottleneck_layer"] == "conv1"
    assert base["total"]["tiles"] == 1608

    rep = dse.replicate_network(net, "uniform:8", budget_ratio=1.05, objective="latency")
    gain = rep["summary"]["comparison"]["improvement"]
    assert gain >= 1.25, gain
    assert rep["summary"]["tiles_used"] <= rep["summary"]["comparison"]["tile_budget"]

    try:
        dse.replicate_network(net, "uniform:8", budget_ratio=0.5)
    except ValueError as e:
        assert "infeasible" in str(e)
    else:
        raise AssertionError("half budget should be infeasible")

    plan = dse.optimize_replication([90.0, 100.0], [3, 5], 13)
    assert plan["r"] == [1, 2] and plan["objective_value"] == 140.0, plan
    for solver in ("milp", "brute"):
        assert dse.optimize_replication([90.0, 100.0], [3, 5], 13, solver=solver)["objective_value"] == 140.0

    pairs = [(8, 8)] * (len(mlp) - 1) + [(2, 8)]
    assert math.isclose(dse.proxy_accuracy(mlp, pairs), 0.71 - 0.0063, abs_tol=1e-12)

    custom = dse.Network.from_json(json.dumps({
        "name": "tiny",
        "layers": [
            {"name": "c1", "kind": "conv", "k": 3, "c": 3, "n": 16, "in_width": 32, "padding": 1},
            {"name": "fc", "kind": "fc", "c": 16384, "n": 10},
        ],
    }))
    assert custom.layer_names == ["c1", "fc"]
    assert dse.Network.from_json(custom.to_json()).lowered() == custom.lowered()

    hw = dse.HwConfig("xbar_size = 128")
    assert hw.xbar_size == 128 and hw.n_tiles_total == 5682
    assert dse.estimate(mlp, hw=hw)["total"]["tiles"] > 3232

    t1 = dse.search(mlp, episodes=15, seed=4)
    t2 = dse.search(mlp, episodes=15, seed=4)
    assert t1 == t2
    budgets = [r["budget_s"] for r in t1["records"]]
    assert budgets == sorted(budgets, reverse=True)
    assert budgets[0] == t1["baseline_metric_s"] * 0.35
    assert budgets[-1] == t1["baseline_metric_s"] * 0.2
    best = t1["records"][t1["best"]]
    assert best["metric_s"] <= best["budget_s"]

    print("python smoke test: ok")


if __name__ == "__main__":
    main()
