import json
import math

import pytest

import jpo


def test_closed_forms():
    assert jpo.prob_aligned_single(0.0, 1.0) == pytest.approx(0.5)
    assert jpo.prob_aligned_single(1.0, 1.0) == pytest.approx(0.5 + 0.5 * math.erf(1.0))
    assert jpo.prob_majority_exact(1, 0.1) == pytest.approx(0.6)
    assert jpo.prob_majority_exact(101, 0.05) > 0.8


def test_alignment_recursion():
    rho = jpo.rho_predict(1.0, 1.0, 2)
    assert rho[0] == 1.0
    assert rho[1] == pytest.approx(0.9210, abs=1e-4)
    fit = jpo.rho_fit(list(range(1, 33)), jpo.rho_predict(12.9, 6.4, 32))
    assert fit["plasticity"] == pytest.approx(12.9, rel=0.05)


def test_problems_and_evaluation():
    s = jpo.generate("arm", 4, 3)
    assert len(s) == 4 and s.family == "arm"
    losses, grads = jpo.evaluate(s, [s.default_start()] * 4)
    assert len(losses) == 4 and len(grads[0]) == 4
    assert all(l >= 0 for l in losses)
    with pytest.raises(ValueError):
        jpo.generate("navier", 2, 1)


def test_metrics():
    assert jpo.fraction_better([1, 2], [1, 2]) == 0.5
    mean, bar = jpo.errorbar([0.5, 0.7], 10)
    assert mean == pytest.approx(0.6)
    assert bar == pytest.approx(math.sqrt(0.02) / 10)
    assert jpo.improvement_split([0.1], [0.1], [1.0])[0] == 1.0
    assert jpo.param_count("billiards") == 37506


def test_solve_and_sweep(tmp_path):
    out = jpo.solve("arm", "jpo", 4, seed=1, iterations=50)
    assert max(out["refined"]) < 1e-10
    assert len(out["reference"]) == 4
    cfg = json.loads(jpo.default_config("arm"))
    cfg.update(n=[2], seeds=[1], methods=["jpo"])
    cfg["jpo"]["iterations"] = 20
    assert jpo.run_sweep(json.dumps(cfg), str(tmp_path)) == 0
    assert (tmp_path / "fractions.csv").read_text().startswith("family,N,method")
