import itertools

import numpy as np
import pytest
from scipy import stats

from flosim import gaussian_state as gs
from flosim import magic
from flosim.dense_oracle import vacuum_state
from flosim.errors import ParamError

GRID = np.linspace(-2 * np.pi, 2 * np.pi, 64, endpoint=False)


@pytest.mark.parametrize(
    "theta,value", [(0.0, 1.0), (np.pi, 2.0), (np.pi / 2, 1 + np.sqrt(2) / 2)]
)
def test_extent_single(theta, value):
    assert magic.extent_single(theta) == pytest.approx(value, abs=1e-12)


def test_xi_star_values():
    assert magic.xi_star(magic.MagicAngles(())) == 1.0
    assert magic.xi_star(magic.MagicAngles((np.pi,))) == pytest.approx(2.0)
    assert magic.xi_star(magic.MagicAngles((np.pi, np.pi))) == pytest.approx(4.0)


@pytest.mark.parametrize("seed", range(5))
def test_xi_star_is_product_of_extents(seed):
    thetas = np.random.default_rng(seed).uniform(-7, 7, 4)
    expected = np.prod([magic.extent_single(t) for t in thetas])
    assert magic.xi_star(magic.MagicAngles(tuple(thetas))) == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("k", [1, 5, 12])
def test_branch_distribution_sums_to_one(k):
    angles = magic.MagicAngles(tuple(np.random.default_rng(k).uniform(-3, 3, k)))
    root = np.sqrt(magic.xi_star(angles))
    total = 0.0
    for y in itertools.product([0, 1], repeat=k):
        w, _ = magic.branch_coefficient(angles, y)
        total += abs(w) / root
    assert total == pytest.approx(1.0, abs=1e-12)


def test_normalize_angle_range():
    for t in np.linspace(-20, 20, 101):
        v = magic.normalize_angle(t)
        assert -2 * np.pi < v <= 2 * np.pi
        assert np.isclose(np.exp(0.25j * (v - t)) ** 4, 1.0)


def test_sample_branch_zero_angles(rng):
    angles = magic.MagicAngles((0.0, 0.0, 0.0))
    for _ in range(20):
        assert magic.sample_branch(angles, rng).y == (0, 0, 0)


def test_sample_branch_pi_is_fair():
    probs = magic.branch_probabilities(magic.MagicAngles((np.pi,)))
    assert probs[0] == pytest.approx(0.5)


def test_sample_branch_chi_squared():
    rng = np.random.default_rng(11)
    angles = magic.MagicAngles((np.pi / 2,))
    p1 = np.sin(np.pi / 8) / (np.cos(np.pi / 8) + np.sin(np.pi / 8))
    draws = 100_000
    ones = sum(magic.sample_branch(angles, rng).y[0] for _ in range(draws))
    chi2 = stats.chisquare([draws - ones, ones], [draws * (1 - p1), draws * p1])
    assert chi2.pvalue > 1e-3


def test_sample_branch_weights(rng):
    angles = magic.MagicAngles((0.7, -2.0))
    s = magic.sample_branch(angles, rng)
    c = [np.cos(t / 4) for t in angles.thetas]
    sn = [np.sin(t / 4) for t in angles.thetas]
    expected = np.prod([sn[j] if b else c[j] for j, b in enumerate(s.y)])
    assert s.weight == pytest.approx(expected)
    assert s.prefactor == pytest.approx(1j ** sum(s.y) * expected)


@pytest.mark.parametrize("theta", GRID)
def test_decomposition_reconstructs(theta):
    a, b = magic.branch_state(theta, "A"), magic.branch_state(theta, "B")
    rec = np.cos(theta / 4) * a + 1j * np.sin(theta / 4) * b
    assert np.abs(rec - magic.magic_state(theta)).max() <= 1e-12
    assert abs(np.vdot(a, b)) <= 1e-12


def test_branch_a_at_zero():
    np.testing.assert_allclose(magic.branch_state(0.0, "A"), magic.magic_state(0.0))


@pytest.mark.parametrize("theta", [0.0, 0.4, np.pi, -2.5])
@pytest.mark.parametrize("branch", ["A", "B"])
def test_branch_desc_matches_dense(theta, branch):
    g = magic.branch_state_desc(theta, branch)
    np.testing.assert_allclose(gs.dense_expand(g), magic.branch_state(theta, branch), atol=1e-10)


def test_branch_desc_embedded():
    g = magic.branch_state_desc(0.9, "B", qubit_offset=2, m=6)
    expected = np.kron(vacuum_state(2), magic.branch_state(0.9, "B"))
    np.testing.assert_allclose(gs.dense_expand(g), expected, atol=1e-10)


def test_branch_desc_bad_offset():
    with pytest.raises(IndexError):
        magic.branch_state_desc(0.1, "A", qubit_offset=2, m=4)
    with pytest.raises(ParamError):
        magic.branch_state_desc(0.1, "C")


def test_branch_adjoint_inverts(rng):
    a = rng.normal(size=(12, 12))
    g = gs.apply_general_flo(gs.vacuum(6), a - a.T)
    h = magic.apply_branch_adjoint(magic.apply_branch(g, 1.1, "A", 1), 1.1, "A", 1)
    np.testing.assert_allclose(gs.dense_expand(h), gs.dense_expand(g), atol=1e-10)


@pytest.mark.parametrize("theta,value", [(0.0, 1.0), (np.pi / 4, 3.0)])
def test_fermionic_nonlinearity(theta, value):
    assert magic.fermionic_nonlinearity_rot(theta) == pytest.approx(value)


def test_extent_table_row_at_pi():
    rows = magic.extent_table(256)
    theta, xi, w2, ratio = rows[128]
    assert theta == pytest.approx(np.pi)
    assert (xi, w2, ratio) == pytest.approx((2.0, 9.0, 4.5), abs=1e-12)
    assert rows[1][3] == pytest.approx(1.0, abs=0.1)
    assert rows[0][3] == 1.0


def test_fidelity_vacuum(rng):
    assert magic.flo_fidelity_bound_check(vacuum_state(4), 2, rng) == pytest.approx(1.0)


def test_fidelity_a8_witness(rng):
    wit = np.zeros(16)
    wit[0] = 1.0
    f = magic.flo_fidelity_bound_check(magic.a8_state(), 20, rng, witnesses=[wit])
    assert f == pytest.approx(0.5, abs=1e-12)


def test_fidelity_a8_never_exceeds_half(rng):
    f = magic.flo_fidelity_bound_check(magic.a8_state(), 200, rng, include_vacuum=False)
    assert 0.2 < f <= 0.5 + 1e-9


def test_fidelity_cap(rng):
    with pytest.raises(ParamError):
        magic.flo_fidelity_bound_check(np.ones(2**6), 1, rng, cap=4)
