"""Phase-exact Gaussian states.

A state on ``m`` qubits (``m`` even) is stored as ``Gamma = (omega, R, a, lam)``
meaning

    |psi> = omega * K * A |0>,    A = exp(sum_j lam_j c_{4j} c_{4j+2}),

where ``K`` is the passive Gaussian unitary with rotation ``R`` and vacuum
eigenvalue ``K|0> = a|0>``.  The pair ``(R, a)`` fixes ``K`` exactly, so the
description carries the global phase, not just the covariance matrix.

Generators ``g`` denote the unitary ``exp((1/4) sum_jk g_jk c_j c_k)`` and
rotations follow ``U c_j U^dag = sum_k R_kj c_k``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kak_phase as kp
from .dense_oracle import DEFAULT_CAP, dense_apply_flo
from .errors import CapacityError, DimensionError, NotPassiveError, ParamError
from .numerics import (
    antisym_block_diag,
    as_antisymmetric,
    is_passive,
    omega as omega_matrix,
    passive_log,
    so_exp,
    tau_sym,
)

# probability below which a projection counts as annihilating the state
ZERO_TOL = 1e-14


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class GaussianDesc:
    """Classical description ``(omega, R, a, lam)`` of a pure Gaussian state.

    Attributes
    ----------
    m : int
        Number of qubits (even).
    omega : complex
        Global amplitude; ``|omega|`` is the norm of the state.
    R : ndarray
        Passive rotation of ``K``, shape ``(2m, 2m)``.
    a : complex
        Vacuum eigenvalue of ``K``.
    lam : ndarray
        Pair angles of the anti-passive factor, length ``m/2``.
    """

    m: int
    omega: complex
    R: np.ndarray
    a: complex
    lam: np.ndarray

    def __post_init__(self):
        if self.m < 2 or self.m % 2:
            raise DimensionError(f"qubit count must be even and at least 2, got {self.m}")
        object.__setattr__(self, "R", _frozen(self.R))
        object.__setattr__(self, "lam", _frozen(self.lam))
        object.__setattr__(self, "omega", complex(self.omega))
        object.__setattr__(self, "a", complex(self.a))
        if self.R.shape != (2 * self.m, 2 * self.m) or self.lam.shape != (self.m // 2,):
            raise DimensionError("R or lam has the wrong shape for m qubits")

    @property
    def is_zero(self) -> bool:
        """True for the flagged zero state produced by an annihilating projection."""
        return self.omega == 0

    @property
    def norm(self) -> float:
        return abs(self.omega)


def vacuum(m: int) -> GaussianDesc:
    """The all-zeros state on ``m`` qubits."""
    if m < 2 or m % 2:
        raise DimensionError(f"qubit count must be even and at least 2, got {m}")
    return GaussianDesc(m, 1.0, np.eye(2 * m), 1.0, np.zeros(m // 2))


def _zero_state(m):
    return GaussianDesc(m, 0.0, np.eye(2 * m), 1.0, np.zeros(m // 2))


def anti_passive_state_generator(lam) -> np.ndarray:
    """Generator of ``A = exp(sum_j lam_j c_{4j} c_{4j+2})``."""
    lam = np.asarray(lam, dtype=float)
    d = 4 * len(lam)
    g = np.zeros((d, d))
    for j, v in enumerate(lam):
        g[4 * j, 4 * j + 2] = 2 * v
        g[4 * j + 2, 4 * j] = -2 * v
    return g


def elementary_generator(mu, j, k, dim) -> np.ndarray:
    """Generator of ``exp(mu c_j c_k)``; the (j, k) plane turns by ``2 mu``."""
    if j == k:
        raise IndexError("elementary unitary needs two distinct Majorana indices")
    if not (0 <= j < dim and 0 <= k < dim):
        raise IndexError(f"Majorana index out of range for dimension {dim}")
    g = np.zeros((dim, dim))
    g[j, k] = 2 * mu
    g[k, j] = -2 * mu
    return g


def covariance(gamma: GaussianDesc) -> np.ndarray:
    """Covariance ``M_jk = -(i/2) <[c_j, c_k]>`` of the normalized state."""
    rot = gamma.R @ so_exp(anti_passive_state_generator(gamma.lam))
    return rot @ omega_matrix(2 * gamma.m) @ rot.T


def passive_vacuum_phase(beta) -> complex:
    """Vacuum eigenvalue of the passive unitary with generator ``beta``.

    Equals ``exp(i tr(Lambda) / 2)`` for the mode angles ``Lambda`` of the
    single-particle unitary, obtained without diagonalizing as
    ``exp(-(i/4) tr(beta Omega))``.
    """
    beta = as_antisymmetric(np.asarray(beta, dtype=float), "beta")
    if not is_passive(beta):
        raise NotPassiveError("generator does not commute with Omega")
    return complex(np.exp(-0.25j * np.trace(beta @ omega_matrix(beta.shape[0]))))


def apply_passive(gamma: GaussianDesc, s, b) -> GaussianDesc:
    """Apply the passive unitary with rotation ``s`` and vacuum eigenvalue ``b``."""
    s = np.asarray(s, dtype=float)
    d = 2 * gamma.m
    if s.shape != (d, d):
        raise DimensionError(f"rotation must be {d}x{d}")
    om = omega_matrix(d)
    if np.abs(s @ om @ s.T - om).max() > tau_sym(d) or np.abs(s @ s.T - np.eye(d)).max() > tau_sym(d):
        raise NotPassiveError("rotation is not orthogonal or does not commute with Omega")
    if abs(abs(b) - 1) > 1e-9:
        raise ParamError("vacuum eigenvalue must have unit modulus")
    return GaussianDesc(gamma.m, gamma.omega, s @ gamma.R, gamma.a * b, gamma.lam)


def apply_passive_generator(gamma: GaussianDesc, beta) -> GaussianDesc:
    """Apply ``exp((1/4) sum beta_jk c_j c_k)`` for a passive generator."""
    return apply_passive(gamma, so_exp(beta), passive_vacuum_phase(beta))


def _apply_generator(gamma: GaussianDesc, g) -> GaussianDesc:
    # U K A|0> = K (K^dag U K) A|0>; the conjugated generator is R^T g R
    if gamma.is_zero:
        return gamma
    gp = gamma.R.T @ g @ gamma.R
    xi = kp.compose_flo(gp, anti_passive_state_generator(gamma.lam))
    f = kp.kak_flo_with_sign(xi)
    # K2|0> = pvp(gamma)|0>; the middle factor acts on the vacuum as A(Lambda)
    omega = gamma.omega * f.sign * passive_vacuum_phase(f.gamma)
    return GaussianDesc(
        gamma.m, omega, gamma.R @ so_exp(f.beta), gamma.a * passive_vacuum_phase(f.beta), f.Lambda
    )


def apply_flo(gamma: GaussianDesc, alpha) -> GaussianDesc:
    """Apply ``exp((1/4) sum alpha_jk c_j c_k)`` through a single signed decomposition.

    Equivalent to :func:`apply_general_flo` but cheaper: the generator is
    composed with the state's own factor and decomposed once.
    """
    alpha = as_antisymmetric(np.asarray(alpha, dtype=float), "alpha")
    if alpha.shape != (2 * gamma.m, 2 * gamma.m):
        raise DimensionError(f"generator must be {2 * gamma.m}x{2 * gamma.m}")
    return _apply_generator(gamma, alpha)


def apply_elementary(gamma: GaussianDesc, mu, j, k) -> GaussianDesc:
    """Apply ``exp(mu c_j c_k)``; always returns a freshly decomposed description."""
    return _apply_generator(gamma, elementary_generator(mu, j, k, 2 * gamma.m))


def apply_general_flo(gamma: GaussianDesc, alpha) -> GaussianDesc:
    """Apply ``exp((1/4) sum alpha_jk c_j c_k)``.

    The unitary is split as ``sign * K1 A K2``; ``K2`` and ``K1`` go through the
    passive update and ``A``, a product of commuting elementary factors, through
    one generator update.
    """
    alpha = as_antisymmetric(np.asarray(alpha, dtype=float), "alpha")
    if alpha.shape != (2 * gamma.m, 2 * gamma.m):
        raise DimensionError(f"generator must be {2 * gamma.m}x{2 * gamma.m}")
    f = kp.kak_flo_with_sign(alpha)
    out = apply_passive_generator(gamma, f.gamma)
    if np.any(f.Lambda != 0.0):
        # the elementaries exp(+-lam/2 c c) on (4j, 4j+2) and (4j+1, 4j+3) all
        # commute, so their product is applied as one update
        out = _apply_generator(out, kp.anti_passive_generator(f.Lambda))
    out = apply_passive_generator(out, f.beta)
    return GaussianDesc(out.m, out.omega * f.sign, out.R, out.a, out.lam)


def from_covariance(mcov) -> GaussianDesc:
    """Some unit-norm description with covariance ``mcov`` (phase arbitrary)."""
    mcov = as_antisymmetric(np.asarray(mcov, dtype=float), "covariance")
    d = mcov.shape[0]
    form = antisym_block_diag(mcov)
    if len(form.angles) < d // 2 or form.angles[-1] < 0:
        raise DimensionError("covariance is not that of a pure even-parity state")
    q = form.rotation.T  # q Omega q^T reproduces mcov up to rounding
    k1, lam, _ = kp.kak_so(q)
    beta = passive_log(k1)
    return GaussianDesc(d // 2, 1.0, so_exp(beta), passive_vacuum_phase(beta), lam)


def _project_zero(gamma: GaussianDesc, i: int) -> GaussianDesc:
    mcov = covariance(gamma)
    p, q = 2 * i, 2 * i + 1
    prob = (1 + mcov[p, q]) / 2
    if prob < ZERO_TOL:
        return _zero_state(gamma.m)
    # Wick conditioning on -i c_p c_q = +1
    new = mcov + (np.outer(mcov[:, q], mcov[:, p]) - np.outer(mcov[:, p], mcov[:, q])) / (1 + mcov[p, q])
    new[[p, q], :] = 0
    new[:, [p, q]] = 0
    new[p, q], new[q, p] = 1.0, -1.0
    ref = from_covariance(new)
    # ref spans the range of the projector, so <ref|P psi> = <ref|psi>
    amp = gaussian_overlap(ref, gamma)
    return GaussianDesc(gamma.m, amp, ref.R, ref.a, ref.lam)


def _check_qubit(gamma, i):
    if not 0 <= i < gamma.m:
        raise IndexError(f"qubit {i} out of range for {gamma.m} qubits")


def apply_projector_zero(gamma: GaussianDesc, i: int) -> GaussianDesc:
    """Apply ``a_i a_i^dag = |0><0|_i``; annihilation gives a state with ``is_zero``."""
    _check_qubit(gamma, i)
    if gamma.is_zero:
        return gamma
    return _project_zero(gamma, i)


def apply_projector_one(gamma: GaussianDesc, i: int) -> GaussianDesc:
    """Apply ``a_i^dag a_i = |1><1|_i`` as ``U (a_i a_i^dag) U^dag`` with ``U = c_{2i} c_{2j}``."""
    _check_qubit(gamma, i)
    if gamma.is_zero:
        return gamma
    spare = 0 if i != 0 else 2
    out = apply_elementary(gamma, -np.pi / 2, 2 * i, spare)
    out = apply_projector_zero(out, i)
    if out.is_zero:
        return out
    return apply_elementary(out, np.pi / 2, 2 * i, spare)


class Amplitude(complex):
    """Complex amplitude; ``parity_zero`` marks an odd-parity bit string."""

    parity_zero = False


def _flipped_factor(fac: kp.GaussianFactor, z):
    # conjugation by c(z)^dag with |z| even flips the sign of c_j for j in z
    dsig = np.ones(fac.dim)
    dsig[list(z)] = -1.0
    return fac.conjugated(np.diag(dsig))


def _state_factor(gamma: GaussianDesc) -> kp.GaussianFactor:
    """Gaussian factor of ``K A K^dag``."""
    r = gamma.R
    return kp.GaussianFactor.from_generator(r @ anti_passive_state_generator(gamma.lam) @ r.T)


def basis_inner_product(gamma: GaussianDesc, x) -> Amplitude:
    """``<x|psi>`` for a bit string ``x`` through one Pfaffian.

    ``|x> = c(z)|0>`` with ``z = (2i for x_i = 1)`` ascending, hence
    ``<x|K A K^dag|0> = <0| c(z)^dag (K A K^dag) c(z) c(z)^dag |0>``.
    """
    bits = [int(b) for b in x]
    if len(bits) != gamma.m:
        raise DimensionError(f"bit string must have length {gamma.m}")
    if sum(bits) % 2:
        out = Amplitude(0j)
        out.parity_zero = True
        return out
    if gamma.is_zero:
        return Amplitude(0j)
    z = [2 * i for i, v in enumerate(bits) if v]
    fac = _flipped_factor(_state_factor(gamma), z)
    val = kp.vacuum_element(z[::-1], fac, kp.GaussianFactor.identity(2 * gamma.m))
    return Amplitude(gamma.omega * gamma.a * val)


def gaussian_overlap(g1: GaussianDesc, g2: GaussianDesc) -> complex:
    """``<psi_1|psi_2>`` as ``conj(omega1 a1) omega2 a2 <0| K1 A1^dag K1^dag K2 A2 K2^dag |0>``."""
    if g1.m != g2.m:
        raise DimensionError("states live on different qubit counts")
    if g1.is_zero or g2.is_zero:
        return 0j
    pre = np.conj(g1.omega * g1.a) * g2.omega * g2.a
    return complex(pre * kp.vacuum_element([], _state_factor(g1).inverse(), _state_factor(g2)))


def basis_state_desc(x) -> GaussianDesc:
    """Description of ``|x>`` for an even-weight bit string (pad odd lengths upstream)."""
    bits = [int(b) for b in x]
    gamma = vacuum(len(bits))
    z = [2 * i for i, v in enumerate(bits) if v]
    if len(z) % 2:
        raise DimensionError("odd-weight basis states are not reachable by even Gaussian unitaries")
    # c(z)|0> = |x>, and c_a c_b = exp((pi/2) c_a c_b); rightmost pair acts first
    for t in range(len(z) - 2, -1, -2):
        gamma = apply_elementary(gamma, np.pi / 2, z[t], z[t + 1])
    return gamma


def dense_expand(gamma: GaussianDesc, cap: int = DEFAULT_CAP) -> np.ndarray:
    """Statevector of the described state (Jordan-Wigner, qubit 0 most significant)."""
    m = gamma.m
    if m > cap:
        raise CapacityError(f"{m} qubits exceeds the dense cap of {cap}")
    pair = np.zeros(4, dtype=complex)
    psi = np.ones(1, dtype=complex)
    for lam in gamma.lam:
        pair[:] = 0
        pair[0], pair[3] = np.cos(lam), np.sin(lam)
        psi = np.kron(psi, pair)
    beta = passive_log(gamma.R)
    # K = (a / pvp(beta)) exp(beta~); the ratio is +-1
    psi = dense_apply_flo(psi, beta, cap) * (gamma.a / passive_vacuum_phase(beta))
    return gamma.omega * psi
