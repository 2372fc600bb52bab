import numpy as np
import pytest

from flosim import dense_oracle as do
from flosim import kak_phase as kp
from flosim.errors import DimensionError, NotPassiveError
from flosim.gaussian_state import passive_vacuum_phase
from flosim.numerics import is_passive, omega, so_exp

from conftest import random_antisym, random_passive

IY = np.array([[0.0, 1.0], [-1.0, 0.0]])


def test_kak_so_identity():
    k1, lam, k2 = kp.kak_so(np.eye(8))
    np.testing.assert_allclose(lam, 0, atol=1e-12)
    np.testing.assert_allclose(k1 @ k2, np.eye(8), atol=1e-12)


def test_kak_so_forward_construction():
    lam0 = np.array([0.4, -1.1])
    r = so_exp(kp.anti_passive_generator(lam0))
    k1, lam, k2 = kp.kak_so(r)
    assert np.abs(k1 @ so_exp(kp.anti_passive_generator(lam)) @ k2 - r).max() <= 1e-9
    np.testing.assert_allclose(np.sort(np.abs(lam)), np.sort(np.abs(lam0)), atol=1e-9)


@pytest.mark.parametrize("seed", range(5))
def test_kak_so_random(seed):
    rng = np.random.default_rng(seed)
    r = so_exp(random_antisym(8, rng, 2.0))
    k1, lam, k2 = kp.kak_so(r)
    assert np.abs(k1 @ so_exp(kp.anti_passive_generator(lam)) @ k2 - r).max() <= 1e-9
    assert is_passive(k1) and is_passive(k2)


def test_kak_so_dimension():
    with pytest.raises(DimensionError):
        kp.kak_so(np.eye(6))


def test_merge_with_zero(rng):
    beta = random_passive(8, rng)
    np.testing.assert_allclose(kp.merge_passive(beta, np.zeros((8, 8))), beta, atol=1e-10)


def test_merge_with_inverse(rng):
    beta = random_passive(8, rng)
    xi = kp.merge_passive(beta, -beta)
    np.testing.assert_allclose(so_exp(xi), np.eye(8), atol=1e-10)
    assert passive_vacuum_phase(beta) * passive_vacuum_phase(-beta) == pytest.approx(1.0)
    assert passive_vacuum_phase(xi) == pytest.approx(1.0)


def test_merge_dense(rng):
    beta, gamma = random_passive(8, rng, 3.0), random_passive(8, rng, 3.0)
    xi = kp.merge_passive(beta, gamma)
    lhs = do.flo_unitary(beta) @ do.flo_unitary(gamma)
    assert np.abs(lhs - do.flo_unitary(xi)).max() <= 1e-8
    assert passive_vacuum_phase(xi) == pytest.approx(passive_vacuum_phase(beta) * passive_vacuum_phase(gamma))


def test_merge_associative(rng):
    a, b, c = (random_passive(8, rng, 3.0) for _ in range(3))
    left = kp.merge_passive(kp.merge_passive(a, b), c)
    right = kp.merge_passive(a, kp.merge_passive(b, c))
    assert np.abs(do.flo_unitary(left) - do.flo_unitary(right)).max() < 1e-8


def test_merge_rejects_active(rng):
    with pytest.raises(NotPassiveError):
        kp.merge_passive(random_antisym(8, rng), np.zeros((8, 8)))


def _kak_dense(f):
    return f.sign * do.flo_unitary(f.beta) @ do.flo_unitary(kp.anti_passive_generator(f.Lambda)) @ do.flo_unitary(f.gamma)


def test_kak_with_sign_zero():
    f = kp.kak_flo_with_sign(np.zeros((8, 8)))
    assert f.sign == 1
    np.testing.assert_allclose(f.Lambda, 0, atol=1e-12)
    assert np.abs(_kak_dense(f) - np.eye(16)).max() < 1e-10


def test_kak_with_sign_minus_identity():
    # exp(pi c0 c1) = -I
    alpha = np.zeros((8, 8))
    alpha[0, 1], alpha[1, 0] = 2 * np.pi, -2 * np.pi
    np.testing.assert_allclose(do.flo_unitary(alpha), -np.eye(16), atol=1e-12)
    f = kp.kak_flo_with_sign(alpha)
    assert np.abs(_kak_dense(f) + np.eye(16)).max() < 1e-10


@pytest.mark.parametrize("seed", range(20))
def test_kak_with_sign_random(seed):
    rng = np.random.default_rng(seed)
    alpha = random_antisym(8, rng, 3.0)
    f = kp.kak_flo_with_sign(alpha)
    u = do.flo_unitary(alpha)
    assert np.abs(_kak_dense(f) - u).max() < 1e-8
    assert np.abs(-_kak_dense(f) - u).max() > 1.0
    assert f.element >= 2.0 ** (-2) * (1 - 1e-6)


def test_kak_with_sign_m6():
    # 6 qubits need no padding for KAK (12 Majoranas)
    rng = np.random.default_rng(1)
    alpha = random_antisym(12, rng, 2.0)
    f = kp.kak_flo_with_sign(alpha)
    assert np.abs(_kak_dense(f) - do.flo_unitary(alpha)).max() < 1e-8


def test_kak_with_sign_needs_padding():
    with pytest.raises(DimensionError):
        kp.kak_flo_with_sign(np.zeros((6, 6)))


def test_compose_flo(rng):
    g1, g2 = random_antisym(8, rng, 3.0), random_antisym(8, rng, 3.0)
    xi = kp.compose_flo(g1, g2)
    assert np.abs(do.flo_unitary(g1) @ do.flo_unitary(g2) - do.flo_unitary(xi)).max() < 1e-8


# --------------------------------------------------------------- triple trace


def _dense_triple(t):
    """tr(P c_0..c_{m-1} |phi><phi| B C) by brute force."""
    d = t.Mblock.shape[0]
    nq = d // 2
    # |phi> from its covariance: vacuum rotated by a Gaussian with that covariance
    from flosim.gaussian_state import dense_expand, from_covariance

    phi = dense_expand(from_covariance(t.Mblock))
    par = np.diag(do.parity_operator(nq))
    mono = np.eye(2**nq, dtype=complex)
    for j in range(t.m_count):
        mono = mono @ do.majorana_matrix(nq, j)
    b = do.flo_unitary(t.b.generator())
    c = do.flo_unitary(t.c.generator())
    return np.trace(par @ mono @ np.outer(phi, phi.conj()) @ b @ c)


def test_build_L_antisymmetric(rng):
    t = kp.TripleTraceInput(2, omega(8), kp.GaussianFactor.from_generator(random_antisym(8, rng)),
                            kp.GaussianFactor.identity(8))
    big = kp.build_L_matrix(t)
    np.testing.assert_allclose(big + big.T, 0, atol=1e-12)


def test_triple_trace_identity_factors():
    ident = kp.GaussianFactor.identity(4)
    t = kp.TripleTraceInput(0, omega(4), ident, ident)
    assert kp.triple_trace(t) == pytest.approx(_dense_triple(t), abs=1e-12)


def test_triple_trace_skeleton_pfaffian():
    ident = kp.GaussianFactor.identity(4)
    t = kp.TripleTraceInput(0, omega(4), ident, ident)
    assert kp.triple_trace(t, stable=False) == pytest.approx(_dense_triple(t), abs=1e-12)


def test_triple_trace_one_rotation(rng):
    b = kp.GaussianFactor.from_generator(random_antisym(8, rng))
    t = kp.TripleTraceInput(0, omega(8), b, kp.GaussianFactor.identity(8))
    assert kp.triple_trace(t) == pytest.approx(_dense_triple(t), abs=1e-10)


@pytest.mark.parametrize("m_count", [0, 2, 4])
def test_triple_trace_passive_pair(rng, m_count):
    from flosim.gaussian_state import covariance, apply_general_flo, vacuum

    state = apply_general_flo(vacuum(4), random_antisym(8, rng))
    t = kp.TripleTraceInput(m_count, covariance(state), kp.GaussianFactor.from_generator(random_passive(8, rng, 2.0)),
                            kp.GaussianFactor.from_generator(random_passive(8, rng, 2.0)))
    assert kp.triple_trace(t) == pytest.approx(_dense_triple(t), abs=1e-10)


def test_triple_trace_stable_and_plain_agree(rng):
    b = kp.GaussianFactor.from_generator(random_antisym(8, rng, 0.5))
    c = kp.GaussianFactor.from_generator(random_antisym(8, rng, 0.5))
    t = kp.TripleTraceInput(2, omega(8), b, c)
    assert kp.triple_trace(t, stable=True) == pytest.approx(kp.triple_trace(t, stable=False), abs=1e-10)


def test_triple_trace_stable_at_pi():
    # tan(mu/2) diverges at mu = pi; the folded form stays finite
    g = np.zeros((4, 4))
    g[0, 1], g[1, 0] = np.pi, -np.pi
    b = kp.GaussianFactor.from_generator(g)
    t = kp.TripleTraceInput(0, omega(4), b, kp.GaussianFactor.identity(4))
    assert kp.triple_trace(t) == pytest.approx(_dense_triple(t), abs=1e-12)


def test_reduce_majorana_word():
    assert kp.reduce_majorana_word([2, 0]) == (-1, [0, 2])
    assert kp.reduce_majorana_word([1, 3, 1]) == (-1, [3])
    assert kp.reduce_majorana_word([0, 0]) == (1, [])


def test_vacuum_element_dense(rng):
    b = kp.GaussianFactor.from_generator(random_antisym(8, rng))
    c = kp.GaussianFactor.from_generator(random_antisym(8, rng))
    word = [5, 0, 3, 6]
    vac = do.vacuum_state(4)
    mono = np.eye(16, dtype=complex)
    for j in word:
        mono = mono @ do.majorana_matrix(4, j)
    expected = vac.conj() @ do.flo_unitary(b.generator()) @ do.flo_unitary(c.generator()) @ mono @ vac
    assert kp.vacuum_element(word, b, c) == pytest.approx(expected, abs=1e-10)
