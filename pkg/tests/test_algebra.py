import numpy as np
import pytest

from vesture import algebra
from vesture.algebra import Signature
from vesture.errors import ConfigError, NumericError


def test_gamma_shapes_and_values():
    g11 = algebra.gamma(Signature(1, 1))
    np.testing.assert_array_equal(g11, np.diag([1.0, -1.0]))
    g21 = algebra.gamma(Signature(2, 1))
    np.testing.assert_array_equal(g21, np.diag([1.0, 1.0, -1.0]))
    np.testing.assert_array_equal(g21 @ g21, np.eye(3))
    np.testing.assert_array_equal(g11.conj().T, g11)


def test_signature_validation():
    with pytest.raises(ConfigError):
        Signature(0, 1)
    with pytest.raises(ConfigError):
        Signature(2, 0)


def test_tau_hand_example():
    g = algebra.gamma(Signature(1, 1))
    m = np.diag([2.0, 0.5]).astype(complex)
    np.testing.assert_allclose(algebra.tau(m, g), np.diag([0.5, 2.0]), atol=1e-14)


def test_tau_fixes_su11_elements():
    g = algebra.gamma(Signature(1, 1))
    rng = np.random.default_rng(3)
    for _ in range(10):
        b = rng.normal() + 1j * rng.normal()
        a = np.sqrt(1 + abs(b) ** 2) * np.exp(1j * rng.normal())
        m = np.array([[a, b], [np.conj(b), np.conj(a)]])
        np.testing.assert_allclose(algebra.tau(m, g), m, atol=1e-13)
        assert algebra.group_residual(m, g) < 1e-13


def test_tau_singular_raises():
    g = algebra.gamma(Signature(1, 1))
    with pytest.raises(NumericError):
        algebra.tau(np.zeros((2, 2), dtype=complex), g)


def test_sigma_sign_flip_on_e13():
    g = algebra.gamma(Signature(2, 1))
    e13 = np.zeros((3, 3), dtype=complex)
    e13[0, 2] = 1.0
    np.testing.assert_array_equal(algebra.sigma(e13, g), -e13)
    np.testing.assert_array_equal(algebra.sigma(np.eye(3, dtype=complex), g), np.eye(3))


def test_sigma_fixes_block_diagonal():
    g = algebra.gamma(Signature(2, 1))
    m = np.zeros((3, 3), dtype=complex)
    m[:2, :2] = [[1, 2], [3, 4]]
    m[2, 2] = 5
    np.testing.assert_array_equal(algebra.sigma(m, g), m)


def test_involutions_compose_and_commute():
    rng = np.random.default_rng(11)
    for sig in (Signature(1, 1), Signature(2, 1)):
        g = algebra.gamma(sig)
        for _ in range(10):
            m = rng.normal(size=(sig.n, sig.n)) + 1j * rng.normal(size=(sig.n, sig.n))
            m += 2 * np.eye(sig.n)
            scale = algebra.frobenius(m)
            assert algebra.frobenius(algebra.tau(algebra.tau(m, g), g) - m) < 1e-12 * scale
            assert algebra.frobenius(algebra.sigma(algebra.sigma(m, g), g) - m) < 1e-15 * scale
            lhs = algebra.tau(algebra.sigma(m, g), g)
            rhs = algebra.sigma(algebra.tau(m, g), g)
            assert algebra.frobenius(lhs - rhs) < 1e-12 * scale


def test_group_residual_values():
    g = algebra.gamma(Signature(1, 1))
    assert algebra.group_residual(np.eye(2, dtype=complex), g) == 0.0
    th = 0.73
    m = np.diag([np.exp(1j * th), np.exp(-1j * th)])
    assert algebra.group_residual(m, g) < 1e-15
    # 2I: ||4*Gamma - Gamma||_F + |det - 1| = 3*sqrt(2) + 3
    resid = algebra.group_residual(2 * np.eye(2, dtype=complex), g)
    np.testing.assert_allclose(resid, 3 * np.sqrt(2) + 3, rtol=1e-14)


def test_group_residual_closed_under_tau_and_inverse():
    g = algebra.gamma(Signature(1, 1))
    b = 0.4 - 0.2j
    a = np.sqrt(1 + abs(b) ** 2) * np.exp(0.3j)
    m = np.array([[a, b], [np.conj(b), np.conj(a)]])
    assert algebra.group_residual(algebra.tau(m, g), g) < 1e-13
    assert algebra.group_residual(np.linalg.inv(m), g) < 1e-13


def test_symspace_residual_values():
    g = algebra.gamma(Signature(1, 1))
    assert algebra.symspace_residual(np.eye(2, dtype=complex), g) == 0.0
    t = 0.37
    valid = np.array([[np.cosh(2 * t), np.sinh(2 * t)],
                      [np.sinh(2 * t), np.cosh(2 * t)]], dtype=complex)
    assert algebra.symspace_residual(valid, g) < 1e-13
    herm = np.array([[1.0, 0.2 + 0.1j], [0.2 - 0.1j, 2.0]])
    assert algebra.symspace_residual(herm, g) > 0.1


def test_inv_condition_cap():
    m = np.diag([1.0, 1e-13]).astype(complex)
    with pytest.raises(NumericError):
        algebra.inv(m, condition_cap=1e12)
    out = algebra.inv(np.diag([2.0, 4.0]).astype(complex))
    np.testing.assert_allclose(out, np.diag([0.5, 0.25]))


def test_as_matrix_validation():
    with pytest.raises(ConfigError):
        algebra.as_matrix(np.zeros((2, 3)))
    with pytest.raises(ConfigError):
        algebra.as_matrix(np.array([[np.nan, 0], [0, 1]]))
    with pytest.raises(ConfigError):
        algebra.as_matrix(np.eye(3), n=2)
