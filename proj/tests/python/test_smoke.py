import json
import math

import numpy as np
import pytest

import fraclab


@pytest.fixture(scope="module")
def chain():
    return fraclab.Operator("euclidean", 32)


def test_cosine_is_an_eigenfunction(chain):
    x = 2 * math.pi * np.arange(32) / 32
    u = np.cos(x)
    lam = 2 - 2 * math.cos(2 * math.pi / 32)
    h = 2 * math.pi / 32
    out = fraclab.frac_L(chain, 0.5, u)
    assert np.allclose(out, math.sqrt(lam) / h * u, atol=1e-10)


def test_balakrishnan_matches_spectral(chain):
    u = chain.random_field(3)
    for s in (0.25, 0.5, 0.75):
        a = fraclab.frac_L(chain, s, u, method="balakrishnan")
        b = fraclab.frac_L(chain, s, u)
        assert np.linalg.norm(a - b) <= 1e-6 * np.linalg.norm(b)


def test_frac_H_of_stationary_field_is_frac_L(chain):
    u = chain.random_field(5)
    U = np.repeat(u[:, None], 8, axis=1)
    H = fraclab.frac_H(chain, 0.25, U, method="balakrishnan")
    assert H.shape == (32, 8)
    assert np.allclose(H, fraclab.frac_L(chain, 0.25, u)[:, None], atol=1e-9)


def test_matrix_has_nonpositive_off_diagonal(chain):
    A = fraclab.frac_L_matrix(chain, 0.5)
    assert np.allclose(A, A.T, atol=1e-12)
    assert (A - np.diag(np.diag(A))).max() <= 1e-12


def test_trace_check_on_grushin():
    op = fraclab.Operator("grushin", 8)
    U = op.random_spacetime(11, samples=8, tau=0.5)
    r = fraclab.trace_check(op, 0.5, U)
    assert r["slope"] >= 0.9
    assert r["neumann_defect"] <= 1e-3
    assert r["c_a"] == 1.0


def test_identities_and_constants():
    rows = fraclab.special_identities([0.5])
    assert rows and all(r["status"] != "fail" for r in rows)
    assert fraclab.neumann_constant(0.5) == 1.0
    assert abs(fraclab.bessel_k(0.5, 1.0) - math.sqrt(math.pi / 2) * math.exp(-1.0)) < 1e-13


def test_bad_input_raises():
    with pytest.raises(ValueError):
        fraclab.Operator("nowhere", 8)
    with pytest.raises(ValueError):
        fraclab.frac_L(fraclab.Operator("euclidean", 8), 1.5, np.zeros(8))


def test_run_command_writes_manifest(tmp_path, monkeypatch):
    cfg = {"generators": [{"preset": "euclidean", "dim": 1, "nodes": 8}], "s_values": [0.5]}
    path = tmp_path / "c.json"
    path.write_text(json.dumps(cfg))
    monkeypatch.setenv("FRACLAB_OUTPUT_ROOT", str(tmp_path / "out"))
    code, out, err = fraclab.run("spectrum", str(path))
    assert code == 0, err
    manifest = json.loads((tmp_path / "out" / "manifest.json").read_text())
    assert manifest["commands"]["spectrum"]["status"] == "pass"
    assert "spectrum" in fraclab.command_names()
