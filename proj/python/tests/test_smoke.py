import json

import numpy as np
import pytest

import tcglab


def test_measure_and_recurrence():
    rec = tcglab.stieltjes(tcglab.SpectralMeasure([2.0, 0.0], [1.0, 1.0]))
    assert rec.grade == 2
    assert rec.eval_monic(2, 3.0) == pytest.approx(3.0)
    assert tcglab.ritz_values(rec, 1) == pytest.approx([1.0])


def test_zeta_closed_form():
    rec = tcglab.stieltjes(tcglab.SpectralMeasure([3.0, 1.0], [1.0, 1.0]))
    z = tcglab.zeta(rec, 1, 0.0)
    assert z.kind == "zeta"
    assert z(1.0) == pytest.approx(0.6)
    assert z.roots() == pytest.approx([2.5])


def test_not_well_defined():
    rec = tcglab.stieltjes(tcglab.SpectralMeasure([1.0, -1.0], [1.0, 1.0]))
    with pytest.raises(tcglab.NotWellDefined):
        tcglab.varsigma_poly(rec, 1)(0.5)


def test_tcg_examples():
    tr = tcglab.tcg(np.eye(5), np.eye(5)[0], 10.0)
    assert tr["termination"] == "residual_small"
    assert tr["iterations"] == 1
    tr = tcglab.tcg(np.diag([1.0, -1.0]), np.array([0.0, 1.0]), 2.0)
    assert tr["termination"] == "negative_curvature_boundary"
    assert tr["output"] == pytest.approx([0.0, 2.0])


def test_exact_trs_clamp():
    sol = tcglab.solve_trs_exact(np.array([[2.0]]), np.array([10.0]), 1.0)
    assert sol["step"] == pytest.approx([1.0])
    assert sol["multiplier"] == pytest.approx(8.0)
    assert sol["kkt_ok"]


def test_sigma_identity_on_clustered():
    split = tcglab.clustered_split()
    assert all(tcglab.verify_rho_identity(split, n) <= 1e-8 for n in range(1, 11))
    assert tcglab.sigma_system(split, 3)["sigma_l1"] >= 0.0


def test_tr_minimize_sine():
    p = tcglab.problem("sine-lsq:n=5")
    assert p.dim == 10
    run = tcglab.tr_minimize(p, tcglab.uniform_start(p.dim, 3))
    assert run["status"] == "converged"
    assert run["grad_norm"] <= 1e-9
    assert run["conditions"]["c0_min"] >= 0.5 - 1e-10


def test_run_experiment(tmp_path):
    code, summary, files = tcglab.run_experiment("remark-asymptotics", {}, out_dir=tmp_path)
    assert code == 0
    assert summary["command"] == "remark-asymptotics"
    assert "summary.json" in files
    assert json.loads((tmp_path / "summary.json").read_text()) == summary
    with pytest.raises(ValueError):
        tcglab.run_experiment("cg-dynamics", {"bogus": "1"}, out_dir=tmp_path)
