import json
import os
import subprocess

import numpy as np
import pytest

import netnmf


def truth():
    beta = np.array([[0.6, 0.1], [0.3, 0.3], [0.1, 0.6]])
    gamma = np.array([[0.5, 0.2], [0.3, 0.3], [0.2, 0.5]])
    return netnmf.NormalizedNmf(0.6, np.array([0.6, 0.4]), beta, gamma)


def test_version():
    assert netnmf.__version__


def test_worked_example_box():
    third = np.full(3, 1.0 / 3.0)
    beta = np.column_stack([[1.0, 0.0, 0.0], third])
    p = netnmf.NormalizedNmf(1.0, np.array([0.1, 0.9]), beta, beta.copy())
    A = p.compose()
    np.testing.assert_allclose(A, np.array([[2, 1, 1], [1, 1, 1], [1, 1, 1]]) / 10.0, atol=1e-15)
    box = netnmf.k2_bounds(netnmf.denormalize(p))
    assert box.q12_lo == pytest.approx(-3.0)
    assert box.q12_hi == 0.0
    assert box.q21_hi == pytest.approx(1.0 / 3.0)
    assert not netnmf.essentially_unique_k2(netnmf.denormalize(p))
    assert netnmf.criterion("detB", p) == pytest.approx(2.0 / 9.0)


def test_simulate_fit_inference():
    A = truth().compose()
    y = netnmf.simulate(A, 1500, intercept=np.ones(3), seed=3)
    assert y.shape == (1500, 3)
    y2 = netnmf.simulate(A, 1500, intercept=np.ones(3), seed=3)
    np.testing.assert_array_equal(y, y2)
    res = netnmf.fit(y, K=2, intercept=np.ones(3), seed=1)
    assert res.converged
    assert res.A_hat.shape == (3, 3)
    assert np.abs(res.A_hat - A).max() < 0.15
    ll = netnmf.loglik(res.A_hat, y, intercept=np.ones(3))
    assert ll == pytest.approx(res.loglik, rel=1e-10)
    inf = netnmf.inference(y, res.alpha_hat, intercept=np.ones(3))
    assert inf.se_A.shape == (3, 3)
    assert (inf.se_A > 0).all()
    assert inf.route_discrepancy < 1e-8


def test_errors():
    with pytest.raises(netnmf.InputError):
        netnmf.simulate(np.eye(2) * 1.5, 10)
    with pytest.raises(ValueError):
        netnmf.NormalizedNmf(1.0, np.array([0.5, 0.6]), np.eye(2), np.eye(2))


@pytest.mark.skipif("NETNMF_CLI" not in os.environ, reason="command-line tool not provided")
def test_cli_identify_set(tmp_path):
    exe = os.environ["NETNMF_CLI"]
    factors = tmp_path / "f.json"
    factors.write_text(json.dumps({"B": {"rows": 3, "cols": 2, "data": [1, 0, 0, 1, 1, 1]},
                                   "C": {"rows": 3, "cols": 2, "data": [0, 2, 3, 0, 1, 1]}}))
    out = tmp_path / "id.json"
    proc = subprocess.run([exe, "identify-set", "--input", str(factors), "-o", str(out)],
                          capture_output=True, text=True, check=True)
    assert "essentially unique: true" in proc.stdout
    assert json.loads(out.read_text())["bounds"]["collapsed"] is True
