"""Controlled-phase magic states and their two-term Gaussian decomposition.

``|M_t> = (|0000> + |0011> + |1100> + e^{it}|1111>) / 2`` splits as
``cos(t/4)|A(t)> + i sin(t/4)|B(t)>`` where both branches are products of
two phased Bell pairs, hence Gaussian.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import gaussian_state as gs
from .dense_oracle import DEFAULT_CAP, dense_apply_flo, vacuum_state
from .errors import ParamError


def normalize_angle(theta: float) -> float:
    """Map an angle into (-2 pi, 2 pi] modulo 4 pi.

    Shifting by 4 pi flips the sign of both branch weights and both branch
    states, so every term of the decomposition is unchanged.
    """
    t = float(np.fmod(theta, 4 * np.pi))
    if t > 2 * np.pi:
        t -= 4 * np.pi
    elif t <= -2 * np.pi:
        t += 4 * np.pi
    return t


@dataclass(frozen=True)
class MagicAngles:
    """Angles of a product of magic states (one per controlled-phase gate)."""

    thetas: tuple

    def __post_init__(self):
        object.__setattr__(self, "thetas", tuple(normalize_angle(t) for t in self.thetas))

    @property
    def k(self) -> int:
        return len(self.thetas)


@dataclass(frozen=True)
class BranchSample:
    """One sampled branch string.

    ``weight`` is the signed real product ``t(y)`` of cosines and sines and
    ``prefactor`` is ``i^{|y|} t(y)``, the coefficient of the branch state in
    the expansion of the magic-state product.
    """

    y: tuple
    weight: float
    prefactor: complex


def extent_single(theta: float) -> float:
    """FLO extent of one magic state, ``1 + |sin(theta/2)|``."""
    return 1.0 + abs(np.sin(theta / 2))


def branch_weights(theta: float):
    return np.cos(theta / 4), np.sin(theta / 4)


def xi_star(angles) -> float:
    """Squared 1-norm of the branch weights, ``prod_j (|cos(t_j/4)| + |sin(t_j/4)|)^2``."""
    thetas = angles.thetas if isinstance(angles, MagicAngles) else tuple(angles)
    out = 1.0
    for t in thetas:
        c, s = branch_weights(t)
        out *= (abs(c) + abs(s)) ** 2
    return float(out)


def branch_probabilities(angles) -> np.ndarray:
    """Per-angle probability of the B branch, ``|sin| / (|cos| + |sin|)``."""
    thetas = angles.thetas if isinstance(angles, MagicAngles) else tuple(angles)
    out = []
    for t in thetas:
        c, s = branch_weights(t)
        out.append(abs(s) / (abs(c) + abs(s)))
    return np.array(out)


def branch_coefficient(angles, y):
    """Signed weight ``t(y)`` and expansion coefficient ``i^{|y|} t(y)``."""
    thetas = angles.thetas if isinstance(angles, MagicAngles) else tuple(angles)
    w = 1.0
    for t, b in zip(thetas, y):
        c, s = branch_weights(t)
        w *= s if b else c
    return float(w), complex(1j ** sum(y) * w)


def sample_branch(angles, rng) -> BranchSample:
    """Draw ``y`` with probability ``|t(y)| / sqrt(xi*)``; bits are independent."""
    probs = branch_probabilities(angles)
    y = tuple(int(b) for b in (rng.random(len(probs)) < probs))
    w, pre = branch_coefficient(angles, y)
    return BranchSample(y, w, pre)


def magic_state(theta: float) -> np.ndarray:
    """Dense ``|M_theta>``."""
    v = np.zeros(16, dtype=complex)
    v[[0b0000, 0b0011, 0b1100]] = 0.5
    v[0b1111] = 0.5 * np.exp(1j * theta)
    return v


def branch_state(theta: float, branch: str) -> np.ndarray:
    """Dense ``|A(theta)>`` or ``|B(theta)>`` from their closed-form amplitudes."""
    sgn = _branch_sign(branch)
    v = np.zeros(16, dtype=complex)
    v[0b0000] = np.exp(-0.25j * theta)
    v[0b0011] = sgn * np.exp(0.25j * theta)
    v[0b1100] = sgn * np.exp(0.25j * theta)
    v[0b1111] = np.exp(0.75j * theta)
    return v / 2


def _branch_sign(branch):
    if branch in ("A", 0):
        return 1.0
    if branch in ("B", 1):
        return -1.0
    raise ParamError(f"branch must be 'A' or 'B', got {branch!r}")


def apply_branch(gamma: gs.GaussianDesc, theta: float, branch, offset: int) -> gs.GaussianDesc:
    """Map the vacuum on qubits ``offset..offset+3`` to the chosen branch state.

    Each pair ``(q, q+1)`` gets ``exp(+-pi/4 c_{2q} c_{2q+2})`` (a Bell pair,
    sign by branch) and then the mode phase ``exp(i theta/2 n_q)``; the phases
    ``e^{-i theta/4}`` of the closed form and ``e^{i theta/4}`` from writing
    each ``exp(i phi n)`` as a Majorana exponential are folded into omega.
    """
    if offset < 0 or offset + 4 > gamma.m:
        raise IndexError(f"branch block at {offset} does not fit in {gamma.m} qubits")
    mu = np.pi / 4 * _branch_sign(branch)
    out = gamma
    for q in (offset, offset + 2):
        out = gs.apply_elementary(out, mu, 2 * q, 2 * q + 2)
    beta = np.zeros((2 * gamma.m, 2 * gamma.m))
    for q in (offset, offset + 2):
        # exp(i phi n_q) = e^{i phi/2} exp(-(phi/2) c_{2q} c_{2q+1}), phi = theta/2
        beta += gs.elementary_generator(-theta / 4, 2 * q, 2 * q + 1, 2 * gamma.m)
    out = gs.apply_passive_generator(out, beta)
    phase = np.exp(0.25j * theta)
    return gs.GaussianDesc(out.m, out.omega * phase, out.R, out.a, out.lam)


def apply_branch_adjoint(gamma: gs.GaussianDesc, theta: float, branch, offset: int) -> gs.GaussianDesc:
    """Inverse of :func:`apply_branch` (the same gates undone in reverse order)."""
    if offset < 0 or offset + 4 > gamma.m:
        raise IndexError(f"branch block at {offset} does not fit in {gamma.m} qubits")
    beta = np.zeros((2 * gamma.m, 2 * gamma.m))
    for q in (offset, offset + 2):
        beta += gs.elementary_generator(theta / 4, 2 * q, 2 * q + 1, 2 * gamma.m)
    out = gs.apply_passive_generator(gamma, beta)
    mu = -np.pi / 4 * _branch_sign(branch)
    for q in (offset + 2, offset):
        out = gs.apply_elementary(out, mu, 2 * q, 2 * q + 2)
    phase = np.exp(-0.25j * theta)
    return gs.GaussianDesc(out.m, out.omega * phase, out.R, out.a, out.lam)


def branch_state_desc(theta: float, branch, qubit_offset: int = 0, m: int = 4) -> gs.GaussianDesc:
    """Gaussian description of ``|A(theta)>`` or ``|B(theta)>`` on qubits
    ``qubit_offset..qubit_offset+3`` of an ``m``-qubit register (vacuum elsewhere)."""
    if qubit_offset < 0 or qubit_offset + 4 > m:
        raise IndexError(f"branch block at {qubit_offset} does not fit in {m} qubits")
    return apply_branch(gs.vacuum(m), theta, branch, qubit_offset)


def fermionic_nonlinearity_rot(theta: float) -> float:
    """``1 + 2|sin(2 theta)|`` for the ZZ-rotation channel of angle ``theta``."""
    return 1.0 + 2.0 * abs(np.sin(2 * theta))


def extent_table(points: int = 256):
    """Rows ``(theta, xi, w_squared, ratio)`` on ``theta = 2 pi j / points``.

    A controlled phase ``C(theta)`` corresponds to the ZZ rotation of angle
    ``theta / 4``.
    """
    rows = []
    for j in range(points):
        t = 2 * np.pi * j / points
        xi = extent_single(t)
        w2 = fermionic_nonlinearity_rot(t / 4) ** 2
        rows.append((t, xi, w2, w2 / xi))
    return rows


def a8_state() -> np.ndarray:
    """``(|0000> + |1111>) / sqrt(2)``."""
    v = np.zeros(16, dtype=complex)
    v[0] = v[15] = 1 / np.sqrt(2)
    return v


def _random_generator(m, rng, scale):
    a = rng.normal(size=(2 * m, 2 * m)) * scale
    return a - a.T


def random_gaussian_dense(m: int, rng, scale: float = 1.5) -> np.ndarray:
    """Dense vector of a random even Gaussian state on ``m`` qubits."""
    return dense_apply_flo(vacuum_state(m), _random_generator(m, rng, scale))


def flo_fidelity_bound_check(
    state, trials: int, rng, witnesses=(), refine: int = 0, cap: int = DEFAULT_CAP, include_vacuum: bool = True
) -> float:
    """Largest ``|<s|state>|^2`` over random Gaussian ``s`` and the given witnesses.

    This is a lower bound on the FLO fidelity of ``state``.  The vacuum is a
    candidate unless ``include_vacuum`` is false.  With ``refine > 0`` the best
    random generator is improved by that many accept-if-better perturbation
    steps.
    """
    state = np.asarray(state, dtype=complex)
    m = int(round(np.log2(state.size)))
    if m > cap:
        raise ParamError(f"{m} qubits exceeds the dense cap of {cap}")
    vac = vacuum_state(m)

    def fid(g):
        return abs(np.vdot(dense_apply_flo(vac, g, cap), state)) ** 2

    best = abs(np.vdot(vac, state)) ** 2 if include_vacuum else 0.0
    for w in witnesses:
        best = max(best, abs(np.vdot(np.asarray(w), state)) ** 2)
    best_g, best_r = None, -1.0
    for _ in range(trials):
        g = _random_generator(m, rng, 1.5)
        f = fid(g)
        if f > best_r:
            best_g, best_r = g, f
    step = 0.3
    for _ in range(refine if best_g is not None else 0):
        g = best_g + _random_generator(m, rng, step)
        f = fid(g)
        if f > best_r:
            best_g, best_r = g, f
        else:
            step *= 0.99
    return float(max(best, best_r))
