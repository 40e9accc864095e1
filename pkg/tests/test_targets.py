import math

import numpy as np
import pytest

from vesture import algebra, dressing, seeds, targets
from vesture.dressing import SolitonConfig
from vesture.errors import ConfigError, DomainError

from vesture.targets import SIG_11, SIG_21, BLParams

G2 = algebra.gamma(SIG_11)
G3 = algebra.gamma(SIG_21)

def test_bl_to_weyl():
    p = BLParams(m=0.0, s=1.0)
    x = targets.bl_to_weyl(1.0, math.pi / 2, p)
    np.testing.assert_allclose([x.rho, x.z], [math.sqrt(2.0), 0.0], atol=1e-15)
    with pytest.raises(DomainError):
        targets.bl_to_weyl(2.0, 0.0, p)
    with pytest.raises(DomainError):
        targets.bl_to_weyl(2.0, math.pi, p)

def test_cayley_identity_and_reality():
    np.testing.assert_allclose(targets.cayley2(np.eye(2, dtype=complex)), np.eye(2),
                               atol=1e-15)
    # symmetric-space elements map to real matrices
    res = dressing.dress_point(targets.kerr_config(1.0, 1.0),
                               targets.bl_to_weyl(2.5, 1.0, BLParams(m=1.0, s=1.0)))
    qp = targets.cayley2(res.q)
    assert np.abs(qp.imag).max() < 1e-12

def test_ernst_g11_roundtrip_and_identity():
    e = targets.ernst_g11(np.eye(2, dtype=complex))
    np.testing.assert_allclose([e.x, e.y], [1.0, 0.0], atol=1e-15)
    q = targets.ernst_embed_g11(2.0, 3.0)
    back = targets.ernst_g11(q)
    np.testing.assert_allclose([back.x, back.y], [2.0, 3.0], rtol=1e-12)
    assert algebra.symspace_residual(q, G2) < 1e-12

def test_kerr_oracle_values():
    assert targets.kerr_oracle(0.0, 1.3, 2.0, 0.4) == targets.ErnstValue11(1.0, 0.0)
    e = targets.kerr_oracle(1.0, 2.0, 3.0, math.pi / 2)
    np.testing.assert_allclose([e.x, e.y], [1.0 - 2.0 / 3.0, 0.0], atol=1e-15)
    e = targets.kerr_oracle(1.0, math.sqrt(2.0), 2.0, math.pi / 3)
    np.testing.assert_allclose([e.x, e.y], [1.0 / 9.0, math.sqrt(2.0) / 4.5], rtol=1e-14)

def test_kerr_params_identities():
    a, d, pole = targets.kerr_params(0.0, 1.0)
    np.testing.assert_allclose([a, d], [1.0, 0.0], atol=1e-15)
    assert pole == 1j
    for m, s in ((1.0, 1.0), (0.5, 2.0), (2.0, 0.3)):
        alpha, delta, _ = targets.kerr_params(m, s)
        np.testing.assert_allclose(alpha * delta, m / 2, rtol=1e-14)
        np.testing.assert_allclose(alpha ** 2 - delta ** 2, s, atol=1e-14)
        np.testing.assert_allclose(alpha ** 2 + delta ** 2, math.sqrt(m * m + s * s),
                                   rtol=1e-14)

def test_kerr_pipeline_point():
    res = dressing.dress_point(targets.kerr_config(1.0, 1.0),
                               targets.bl_to_weyl(2.0, math.pi / 3, BLParams(m=1.0, s=1.0)))
    e = targets.ernst_g11(res.q)
    np.testing.assert_allclose([e.x, e.y], [1.0 / 9.0, math.sqrt(2.0) / 4.5], rtol=1e-10)
    assert algebra.symspace_residual(res.q, G2) <= 1e-9

def test_basis_change_u3():
    u = targets.basis_change_u3()
    np.testing.assert_allclose(u @ u.conj().T, np.eye(3), atol=1e-14)
    np.testing.assert_allclose(u @ G3 @ u.conj().T, targets.GAMMA_TILDE, atol=1e-14)
    np.testing.assert_allclose(targets.to_tilde_rep(np.eye(3, dtype=complex)),
                               np.eye(3), atol=1e-14)

def test_ernst_g21_identity_and_roundtrip():
    e = targets.ernst_g21(np.eye(3, dtype=complex))
    np.testing.assert_allclose(e.E, 1.0, atol=1e-15)
    assert e.Phi == 0.0
    ref_e, ref_phi = 1.5 + 0.2j, 0.3 - 0.1j
    qt = targets.ptilde_matrix(ref_e, ref_phi)
    ext = targets.ernst_g21(targets.from_tilde_rep(qt))
    np.testing.assert_allclose(ext.E, ref_e, atol=1e-12)
    np.testing.assert_allclose(ext.Phi, ref_phi, atol=1e-12)
    assert abs(ext.consistency) < 1e-12

def test_ernst_g21_reduces_to_g11_on_embedded_block():
    res = dressing.dress_point(targets.kerr_config(1.0, 1.0),
                               targets.bl_to_weyl(2.8, 1.3, BLParams(m=1.0, s=1.0)))
    e2 = targets.ernst_g11(res.q)
    e3 = targets.ernst_g21(targets.embed_g11_in_g21(res.q))
    np.testing.assert_allclose([e3.x, e3.y], [e2.x, e2.y], rtol=1e-11)
    assert abs(e3.Phi) < 1e-13

def test_ernst_g21_scale_consistency():
    qt = targets.ptilde_matrix(1.2 + 0.4j, 0.2 + 0.1j)
    q = targets.from_tilde_rep(qt)
    a = targets.ernst_g21(q)
    b = targets.ernst_g21(q, normalize=True)  # det is already 1
    np.testing.assert_allclose([a.E, a.Phi], [b.E, b.Phi], atol=1e-13)

def test_kn_oracle():
    e = targets.kn_oracle(0.0, 0.0, 1.0, 3.0, 1.0)
    assert (e.E, e.Phi) == (1.0, 0.0)
    m, s = 1.0, 1.0
    a_k = math.sqrt(m * m + s * s)
    for r, th in ((2.5, 0.7), (4.0, 2.0)):
        kn = targets.kn_oracle(m, 0.0, -a_k, r, th)
        ke = targets.kerr_oracle(m, a_k, r, th)
        np.testing.assert_allclose([kn.E.real - abs(kn.Phi) ** 2, kn.E.imag],
                                   [ke.x, ke.y], rtol=1e-13)
    # charged sample point, direct evaluation
    m, e_ch, s = 1.0, 0.5, 1.0
    a = -math.sqrt(m * m + s * s - e_ch * e_ch)
    v = targets.kn_oracle(m, e_ch, a, 3.0, 1.1)
    den = 3.0 - 1j * a * math.cos(1.1)
    np.testing.assert_allclose(v.Phi, e_ch / den, rtol=1e-14)
    np.testing.assert_allclose(v.E, 1 - 2 * m / den, rtol=1e-14)

def test_g21_family_trivial_and_kerr_block():
    p = BLParams(m=1.0, s=1.0)
    q = targets.g21_soliton_family(1.0, 1.5, 0, 0, 0, 0, p, 3.0, 1.0)
    np.testing.assert_array_equal(q, np.eye(3))
    # e = 0 identification reproduces the dressed Kerr block
    fam = targets.kn_family_params(BLParams(m=1.0, s=1.0, e=0.0))
    r, th = 2.9, 0.8
    q3 = targets.g21_soliton_family(fam["a_param"], fam["b_param"], fam["n1"], fam["n2"],
                                    fam["n3"], fam["n4"], p, r, th)
    res = dressing.dress_point(targets.kerr_config(1.0, 1.0),
                               targets.bl_to_weyl(r, th, p))
    np.testing.assert_allclose(q3, targets.embed_g11_in_g21(res.q), rtol=1e-9)

def test_g21_family_matches_vector_dressing_at_realizable_params():
    # independent oracle: the actual 3x3 dressing pipeline with vectors
    rng = np.random.default_rng(41)
    p = BLParams(m=1.0, s=1.0)
    seed3 = seeds.identity_seed(SIG_21)
    for _ in range(8):
        al, be, ga = rng.normal(size=3) + 1j * rng.normal(size=3)
        r = 2.0 + 6 * rng.random()
        th = 0.5 + 2.0 * rng.random()
        cfg = SolitonConfig(SIG_21, (1j * p.s,), (np.array([al, be, ga]),), seed3)
        res = dressing.dress_point(cfg, targets.bl_to_weyl(r, th, p), audit_chi=False)
        if res.singular:
            continue
        ag, bg = al * np.conj(ga), be * np.conj(ga)
        a_par = abs(al) ** 2 + abs(be) ** 2 - abs(ga) ** 2
        b_par = abs(al) ** 2 + abs(be) ** 2 + abs(ga) ** 2
        qf = targets.g21_soliton_family(a_par, b_par, ag.real, ag.imag, bg.real, bg.imag,
                                        p, r, th)
        assert np.abs(res.q - qf).max() < 1e-10
        assert algebra.symspace_residual(res.q, G3) < 1e-9

def test_kn_family_params_validation():
    with pytest.raises(ConfigError):
        targets.kn_family_params(BLParams(m=0.5, s=0.5, e=1.0))
    fam = targets.kn_family_params(BLParams(m=1.0, s=1.0, e=0.5))
    assert fam["b_param"] > 0
    assert fam["oracle_a"] == -fam["b_param"]
    np.testing.assert_allclose(fam["n1"], 0.5)
    np.testing.assert_allclose(fam["n3"], -0.25)

def test_su21_basis_membership_and_independence():
    basis = targets.su21_basis()
    gt = targets.GAMMA_TILDE
    for x in basis:
        assert algebra.frobenius(x.conj().T @ gt + gt @ x) < 1e-15
        assert abs(np.trace(x)) < 1e-15
    flat = np.array([np.concatenate([x.real.ravel(), x.imag.ravel()]) for x in basis])
    assert np.linalg.matrix_rank(flat) == 8

def test_commutation_check_passes_and_spot_values():
    report = targets.commutation_check()
    assert len(report) == 28
    assert all(report.values())
    b = targets.su21_basis()

    def brk(i, j):
        return b[i - 1] @ b[j - 1] - b[j - 1] @ b[i - 1]

    np.testing.assert_allclose(brk(1, 3), -2 * b[0], atol=1e-15)
    np.testing.assert_allclose(brk(5, 6), 2 * b[0], atol=1e-15)
    np.testing.assert_allclose(brk(1, 4), np.zeros((3, 3)), atol=1e-15)
    np.testing.assert_allclose(brk(4, 5), 3 * b[5], atol=1e-15)

def test_commutation_check_negative_control(monkeypatch):
    bad = {k: dict(v) for k, v in targets.COMMUTATION_TABLE.items()}
    bad[(5, 7)] = {3: -1}  # flip one structure constant
    monkeypatch.setattr(targets, "COMMUTATION_TABLE", bad)
    report = targets.commutation_check()
    failing = [k for k, ok in report.items() if not ok]
    assert failing == [(5, 7)]

def test_cartan_embed():
    np.testing.assert_allclose(targets.cartan_embed_su21(0, 0, 0, 0), np.eye(3),
                               atol=1e-15)
    # unipotent factor's (1,3) entry: delta + (i/2)(eta^2 + theta^2)
    d, eta, th = 0.7, 0.4, -0.9
    w = eta + 1j * th
    n = np.array([[1, w, d + 0.5j * (eta ** 2 + th ** 2)],
                  [0, 1, 1j * np.conj(w)],
                  [0, 0, 1]], dtype=complex)
    q = targets.cartan_embed_su21(0.0, d, eta, th)
    np.testing.assert_allclose(q, n @ n.conj().T, atol=1e-14)
    rng = np.random.default_rng(43)
    gt = targets.GAMMA_TILDE
    for _ in range(20):
        mu, dd, ee, tt = rng.normal(size=4) * 0.6
        q = targets.cartan_embed_su21(mu, dd, ee, tt)
        phi = (ee + 1j * tt) / math.sqrt(2.0)
        ernst = math.exp(2 * mu) + abs(phi) ** 2 + 1j * dd
        np.testing.assert_allclose(q, targets.ptilde_matrix(ernst, phi), atol=1e-12)
        assert algebra.frobenius(q @ gt @ q @ gt - np.eye(3)) < 1e-12
        assert algebra.frobenius(q - q.conj().T) < 1e-12
        assert abs(np.linalg.det(q) - 1) < 1e-12
