import numpy as np
import pytest

from flosim import dense_oracle as do
from flosim import gaussian_state as gs
from flosim import kak_phase as kp
from flosim.errors import CapacityError, DimensionError, NotPassiveError
from flosim.numerics import omega, so_exp

from conftest import random_antisym, random_passive


def random_state(m, rng, steps=3):
    g = gs.vacuum(m)
    for _ in range(steps):
        g = gs.apply_general_flo(g, random_antisym(2 * m, rng, 1.5))
    return g


def dense_eq(g, psi, tol=1e-8):
    return np.abs(gs.dense_expand(g) - psi).max() <= tol


# ---------------------------------------------------------------- vacuum


def test_vacuum_amplitudes():
    np.testing.assert_allclose(gs.dense_expand(gs.vacuum(2)), [1, 0, 0, 0])


def test_vacuum_covariance():
    np.testing.assert_allclose(gs.covariance(gs.vacuum(4)), np.kron(np.eye(4), [[0, 1], [-1, 0]]))


def test_vacuum_norm():
    assert gs.vacuum(2).norm == 1.0


def test_vacuum_odd():
    with pytest.raises(DimensionError):
        gs.vacuum(3)


def test_desc_is_immutable():
    g = gs.vacuum(2)
    with pytest.raises(ValueError):
        g.R[0, 0] = 2.0


# ------------------------------------------------------------- covariance


def test_covariance_after_elementary():
    g = gs.apply_elementary(gs.vacuum(4), np.pi / 4, 0, 2)
    np.testing.assert_allclose(gs.covariance(g), do.covariance_from_state(gs.dense_expand(g)), atol=1e-12)
    m = gs.covariance(g)
    assert np.abs(m @ m.T - np.eye(8)).max() < 1e-12


def test_covariance_gauge_invariant(rng):
    g = random_state(4, rng)
    # rebuild from the covariance: different internal factors, same covariance
    h = gs.from_covariance(gs.covariance(g))
    np.testing.assert_allclose(gs.covariance(h), gs.covariance(g), atol=1e-10)
    assert abs(abs(gs.gaussian_overlap(h, g)) - 1) < 1e-10


def test_covariance_transport(rng):
    g = random_state(4, rng)
    alpha = random_antisym(8, rng)
    r = so_exp(alpha)
    np.testing.assert_allclose(gs.covariance(gs.apply_general_flo(g, alpha)), r @ gs.covariance(g) @ r.T, atol=1e-9)


# ---------------------------------------------------------------- passive


def test_apply_passive_identity(rng):
    g = random_state(4, rng)
    h = gs.apply_passive(g, np.eye(8), 1.0)
    assert h.omega == g.omega and h.a == g.a
    np.testing.assert_array_equal(h.R, g.R)


def test_apply_passive_omega_on_vacuum():
    # Omega = exp((pi/2) Omega) as a rotation: every mode phase is pi/2
    om = omega(4)
    beta = np.pi / 2 * om
    np.testing.assert_allclose(so_exp(beta), om, atol=1e-15)
    b = gs.passive_vacuum_phase(beta)
    h = gs.apply_passive(gs.vacuum(2), om, b)
    np.testing.assert_allclose(gs.dense_expand(h), do.dense_apply_flo(do.vacuum_state(2), beta), atol=1e-12)


def test_two_passives_merge(rng):
    g = random_state(4, rng)
    b1, b2 = random_passive(8, rng, 2.0), random_passive(8, rng, 2.0)
    seq = gs.apply_passive_generator(gs.apply_passive_generator(g, b1), b2)
    merged = gs.apply_passive_generator(g, kp.merge_passive(b2, b1))
    np.testing.assert_allclose(gs.dense_expand(seq), gs.dense_expand(merged), atol=1e-10)
    psi = do.dense_apply_flo(do.dense_apply_flo(gs.dense_expand(g), b1), b2)
    assert dense_eq(seq, psi)


def test_apply_passive_rejects_active(rng):
    with pytest.raises(NotPassiveError):
        gs.apply_passive(gs.vacuum(2), so_exp(random_antisym(4, rng)), 1.0)


def test_passive_vacuum_phase_zero():
    assert gs.passive_vacuum_phase(np.zeros((4, 4))) == 1.0


@pytest.mark.parametrize("theta", [0.3, -1.2, 2.9])
def test_passive_vacuum_phase_single_mode(theta):
    beta = np.zeros((4, 4))
    beta[0, 1], beta[1, 0] = theta, -theta
    dense = do.flo_unitary(beta)[0, 0]
    assert gs.passive_vacuum_phase(beta) == pytest.approx(dense, abs=1e-12)
    assert gs.passive_vacuum_phase(beta) == pytest.approx(np.exp(0.5j * theta))


def test_passive_vacuum_phase_unit(rng):
    assert abs(gs.passive_vacuum_phase(random_passive(10, rng, 3.0))) == pytest.approx(1.0)


# ------------------------------------------------------------- elementary


def test_elementary_zero(rng):
    g = random_state(4, rng)
    np.testing.assert_allclose(gs.dense_expand(gs.apply_elementary(g, 0.0, 1, 4)), gs.dense_expand(g), atol=1e-10)


def test_elementary_quarter_pi():
    g = gs.apply_elementary(gs.vacuum(4), np.pi / 4, 0, 2)
    psi = do.dense_apply_flo(do.vacuum_state(4), gs.elementary_generator(np.pi / 4, 0, 2, 8))
    assert dense_eq(g, psi, 1e-12)
    # cos(pi/4)|0000> plus a phase times sin(pi/4)|1100>
    amp = gs.dense_expand(g)
    assert abs(amp[0]) == pytest.approx(np.sqrt(0.5))
    assert abs(amp[0b1100]) == pytest.approx(np.sqrt(0.5))


def test_elementary_sign_is_tracked():
    g = gs.apply_elementary(gs.apply_elementary(gs.vacuum(4), np.pi / 2, 0, 2), np.pi / 2, 0, 2)
    np.testing.assert_allclose(gs.dense_expand(g), -do.vacuum_state(4), atol=1e-12)


def test_elementary_same_index():
    with pytest.raises(IndexError):
        gs.apply_elementary(gs.vacuum(2), 0.1, 1, 1)


def test_elementary_generator_rotates_by_two_mu():
    r = so_exp(gs.elementary_generator(0.3, 0, 1, 4))
    assert r[0, 0] == pytest.approx(np.cos(0.6))


# ---------------------------------------------------------------- general


def test_general_zero(rng):
    g = random_state(4, rng)
    np.testing.assert_allclose(gs.dense_expand(gs.apply_general_flo(g, np.zeros((8, 8)))), gs.dense_expand(g), atol=1e-10)


def test_general_passive_matches_passive_path(rng):
    g = random_state(4, rng)
    beta = random_passive(8, rng, 2.0)
    np.testing.assert_allclose(
        gs.dense_expand(gs.apply_general_flo(g, beta)), gs.dense_expand(gs.apply_passive_generator(g, beta)), atol=1e-9
    )


@pytest.mark.parametrize("seed", range(8))
def test_general_random(seed):
    rng = np.random.default_rng(seed)
    g, psi = gs.vacuum(4), do.vacuum_state(4)
    for _ in range(3):
        alpha = random_antisym(8, rng)
        alpha *= 2 / max(1.0, np.linalg.norm(alpha, 2))
        g, psi = gs.apply_general_flo(g, alpha), do.dense_apply_flo(psi, alpha)
        assert dense_eq(g, psi)


def test_apply_flo_matches_general(rng):
    g = random_state(4, rng)
    alpha = random_antisym(8, rng, 2.0)
    np.testing.assert_allclose(gs.dense_expand(gs.apply_flo(g, alpha)), gs.dense_expand(gs.apply_general_flo(g, alpha)), atol=1e-9)


def test_general_dimension():
    with pytest.raises(DimensionError):
        gs.apply_general_flo(gs.vacuum(2), np.zeros((8, 8)))


# -------------------------------------------------------------- projectors


def test_projector_zero_on_vacuum():
    g = gs.apply_projector_zero(gs.vacuum(4), 2)
    assert g.norm == pytest.approx(1.0)
    assert dense_eq(g, do.vacuum_state(4), 1e-12)


def test_projector_zero_bell_pair():
    g = gs.apply_elementary(gs.vacuum(2), np.pi / 4, 0, 2)
    assert gs.apply_projector_zero(g, 0).norm ** 2 == pytest.approx(0.5)


@pytest.mark.parametrize("seed", range(4))
def test_projectors_dense_and_complete(seed):
    rng = np.random.default_rng(seed)
    g = random_state(4, rng)
    psi = gs.dense_expand(g)
    for i in range(4):
        p0, p1 = gs.apply_projector_zero(g, i), gs.apply_projector_one(g, i)
        assert dense_eq(p0, do.projector_zero(psi, i, 4))
        assert dense_eq(p1, do.projector_one(psi, i, 4))
        assert p0.norm**2 + p1.norm**2 == pytest.approx(g.norm**2, abs=1e-10)
        assert p0.norm <= g.norm + 1e-12


def test_projector_one_on_vacuum():
    assert gs.apply_projector_one(gs.vacuum(2), 1).is_zero


def test_projector_one_on_excited():
    g = gs.basis_state_desc([1, 1, 0, 0])
    h = gs.apply_projector_one(g, 0)
    assert h.norm == pytest.approx(1.0)
    assert dense_eq(h, do.basis_state([1, 1, 0, 0]), 1e-10)


def test_projector_zero_annihilation_flagged():
    g = gs.basis_state_desc([1, 1])
    assert gs.apply_projector_zero(g, 0).is_zero


# ------------------------------------------------------- inner products


def test_basis_inner_product_vacuum():
    assert gs.basis_inner_product(gs.vacuum(4), [0, 0, 0, 0]) == pytest.approx(1.0)


def test_basis_inner_product_after_passive(rng):
    beta = random_passive(8, rng, 2.0)
    g = gs.apply_passive_generator(gs.vacuum(4), beta)
    assert gs.basis_inner_product(g, [0] * 4) == pytest.approx(g.a * g.omega)


def test_basis_inner_product_random(rng):
    g = random_state(4, rng)
    psi = gs.dense_expand(g)
    for x in range(16):
        bits = [(x >> (3 - i)) & 1 for i in range(4)]
        amp = gs.basis_inner_product(g, bits)
        if sum(bits) % 2:
            assert amp == 0 and amp.parity_zero
        else:
            assert amp == pytest.approx(psi[x], abs=1e-8)


def test_basis_inner_product_equals_overlap(rng):
    g = random_state(4, rng)
    x = [1, 0, 1, 0]
    assert gs.basis_inner_product(g, x) == pytest.approx(gs.gaussian_overlap(gs.basis_state_desc(x), g), abs=1e-10)


def test_overlap_self(rng):
    g = random_state(4, rng)
    g = gs.GaussianDesc(g.m, 0.7j * g.omega, g.R, g.a, g.lam)
    ov = gs.gaussian_overlap(g, g)
    assert ov.real == pytest.approx(0.49)
    assert abs(ov.imag) < 1e-12


def test_overlap_closed_form():
    mu = 0.37
    g = gs.apply_elementary(gs.vacuum(2), mu, 0, 2)
    assert gs.gaussian_overlap(gs.vacuum(2), g) == pytest.approx(np.cos(mu), abs=1e-12)


def test_overlap_dense_and_cauchy_schwarz(rng):
    g1, g2 = random_state(4, rng), random_state(4, rng)
    dense = np.vdot(gs.dense_expand(g1), gs.dense_expand(g2))
    ov = gs.gaussian_overlap(g1, g2)
    assert ov == pytest.approx(dense, abs=1e-9)
    assert abs(ov) <= g1.norm * g2.norm + 1e-12


def test_overlap_dimension():
    with pytest.raises(DimensionError):
        gs.gaussian_overlap(gs.vacuum(2), gs.vacuum(4))


# ---------------------------------------------------------- dense bridge


def test_dense_expand_pair_state():
    g = gs.apply_elementary(gs.vacuum(2), np.pi / 4, 0, 2)
    psi = do.dense_apply_flo(do.vacuum_state(2), gs.elementary_generator(np.pi / 4, 0, 2, 4))
    np.testing.assert_allclose(gs.dense_expand(g), psi, atol=1e-12)


def test_dense_expand_norm(rng):
    g = random_state(4, rng)
    g = gs.GaussianDesc(g.m, 0.3 * g.omega, g.R, g.a, g.lam)
    assert np.linalg.norm(gs.dense_expand(g)) == pytest.approx(g.norm)


def test_dense_expand_cap():
    with pytest.raises(CapacityError):
        gs.dense_expand(gs.vacuum(14))


def test_basis_state_desc():
    for bits in ([0, 0], [1, 1, 0, 0], [1, 0, 0, 1, 1, 1]):
        np.testing.assert_allclose(gs.dense_expand(gs.basis_state_desc(bits)), do.basis_state(bits), atol=1e-12)
