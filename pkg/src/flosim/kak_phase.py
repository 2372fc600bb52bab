"""KAK decompositions of FLO unitaries with the +-1 ambiguity resolved.

A Gaussian unitary ``exp((1/4) sum g_jk c_j c_k)`` is fixed exactly (sign
included) by its generator ``g``; its rotation ``so_exp(g)`` fixes it only up
to sign.  The routines here decompose rotations (``kak_so``), lift them back to
operators, and decide the sign by comparing one large matrix element computed
two ways.  The second route always goes through :func:`triple_trace`, a
Pfaffian of the Grassmann-integral matrix ``L``.

Rotation convention: ``U c_j U^dag = sum_k R_kj c_k`` (column convention), so
``R(exp(g)) = so_exp(g)`` and ``R(UV) = R(U) R(V)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, NotPassiveError, PhaseRecoveryError, ShapeError
from .numerics import (
    IY,
    antisym_block_diag,
    as_antisymmetric,
    is_passive,
    omega,
    passive_to_unitary,
    pfaffian,
    so_exp,
    so_log,
    symplectic_condensed_form,
    unitary_to_passive,
)

SZ = np.diag([1.0, -1.0])


# ------------------------------------------------------------ Gaussian factors


@dataclass(frozen=True)
class GaussianFactor:
    """The unitary ``V prod_j (cos(mu_j/2) + sin(mu_j/2) c_{2j} c_{2j+1}) V^dag``.

    ``rotation`` is the rotation of ``V`` and ``angles`` the block angles
    ``mu_j``.  Equivalently this is ``exp((1/4) sum g_jk c_j c_k)`` with
    ``g = rotation @ blocks(mu) @ rotation.T``.  Its Grassmann generating
    function is ``prefactor * exp(eta^T T eta / 2)`` with ``T`` built from
    ``tan(mu_j/2)``.
    """

    rotation: np.ndarray
    angles: np.ndarray

    @classmethod
    def from_generator(cls, g) -> "GaussianFactor":
        form = antisym_block_diag(g)
        angles = np.zeros(form.rotation.shape[0] // 2)
        angles[: len(form.angles)] = form.angles
        return cls(form.rotation.T, angles)

    @classmethod
    def identity(cls, dim: int) -> "GaussianFactor":
        return cls(np.eye(dim), np.zeros(dim // 2))

    @property
    def dim(self) -> int:
        return self.rotation.shape[0]

    def _blocks(self, values) -> np.ndarray:
        d = np.zeros((self.dim, self.dim))
        for j, v in enumerate(values):
            d[2 * j, 2 * j + 1] = v
            d[2 * j + 1, 2 * j] = -v
        return d

    def generator(self) -> np.ndarray:
        return self.rotation @ self._blocks(self.angles) @ self.rotation.T

    @property
    def prefactor(self) -> float:
        return float(np.prod(np.cos(self.angles / 2)))

    def tan_matrix(self) -> np.ndarray:
        return self.rotation @ self._blocks(np.tan(self.angles / 2)) @ self.rotation.T

    def conjugated(self, q) -> "GaussianFactor":
        """Factor of ``W X W^dag`` where ``W`` has rotation ``q``."""
        return GaussianFactor(np.asarray(q) @ self.rotation, self.angles)

    def inverse(self) -> "GaussianFactor":
        return GaussianFactor(self.rotation, -self.angles)


# ------------------------------------------------------------- triple trace


@dataclass(frozen=True)
class TripleTraceInput:
    """Data for ``tr(P c_0 ... c_{m-1} |phi><phi| B C)``.

    ``Mblock`` is the covariance matrix of the pure state ``|phi>``; ``b`` and
    ``c`` are the two Gaussian unitaries.  ``P`` is the parity operator
    ``(-i)^N c_0 c_1 ... c_{2N-1}`` on ``N`` qubits.
    """

    m_count: int
    Mblock: np.ndarray
    b: GaussianFactor
    c: GaussianFactor

    def __post_init__(self):
        d = np.asarray(self.Mblock).shape[0]
        if self.b.dim != d or self.c.dim != d:
            raise ShapeError("covariance and Gaussian factors disagree on dimension")
        if self.m_count % 2 or not 0 <= self.m_count <= d:
            raise ShapeError(f"m_count must be even and at most {d}")

    @property
    def T(self) -> np.ndarray:
        return self.b.tan_matrix()

    @property
    def W(self) -> np.ndarray:
        return self.c.tan_matrix()

    @property
    def prefactors(self) -> float:
        return self.b.prefactor * self.c.prefactor


_ORDER = ("theta1", "theta2", "tau", "eta1", "eta2", "phi1", "phi2")


def _skeleton(m, d, M):
    """Blocks of L that do not depend on the two Gaussian factors."""
    r = d - m
    size = {"theta1": m, "theta2": r, "tau": m, "eta1": m, "eta2": r, "phi1": m, "phi2": r}
    off = np.cumsum([0] + [size[k] for k in _ORDER])
    pos = {k: slice(off[i], off[i + 1]) for i, k in enumerate(_ORDER)}
    L = np.zeros((off[-1], off[-1]), dtype=complex)

    def put(a, b, block):
        L[pos[a], pos[b]] = block

    Im, Ir = np.eye(m), np.eye(r)
    M = np.asarray(M, dtype=float)
    M11, M12, M21, M22 = M[:m, :m], M[:m, m:], M[m:, :m], M[m:, m:]
    # row theta1
    put("theta1", "tau", -Im)
    put("theta1", "eta1", Im)
    put("theta1", "phi1", -Im)
    # row theta2
    put("theta2", "theta2", -1j * M22)
    put("theta2", "tau", -1j * M21)
    put("theta2", "eta2", Ir)
    put("theta2", "phi2", -Ir)
    # row tau
    put("tau", "theta1", Im)
    put("tau", "theta2", -1j * M12)
    put("tau", "tau", -1j * M11)
    # rows eta, couplings only
    put("eta1", "theta1", -Im)
    put("eta1", "phi1", Im)
    put("eta2", "theta2", -Ir)
    put("eta2", "phi2", Ir)
    # rows phi, couplings only
    put("phi1", "theta1", Im)
    put("phi1", "eta1", -Im)
    put("phi2", "theta2", Ir)
    put("phi2", "eta2", -Ir)
    eta = np.r_[pos["eta1"], pos["eta2"]]
    phi = np.r_[pos["phi1"], pos["phi2"]]
    return L, eta, phi


def build_L_matrix(t: TripleTraceInput, stable: bool = False) -> np.ndarray:
    """Antisymmetric matrix whose Pfaffian gives the triple trace.

    Variables are ordered ``(theta1, theta2, tau, eta1, eta2, phi1, phi2)`` with
    sizes ``(m, d-m, m, m, d-m, m, d-m)``.  With ``stable=False`` the ``eta``
    and ``phi`` diagonal blocks are ``T`` and ``W`` and the prefactors are kept
    outside.  With ``stable=True`` the rows of each Gaussian factor are
    transformed by ``diag(cos) @ rotation.T``.  This moves the cosine
    prefactors inside and replaces the tangents by sines, so the matrix stays
    finite at block angles of pi.
    """
    d = t.b.dim
    L, eta, phi = _skeleton(t.m_count, d, t.Mblock)
    if not stable:
        L[np.ix_(eta, eta)] = t.T
        L[np.ix_(phi, phi)] = t.W
        return L
    n = L.shape[0]
    g = np.eye(n, dtype=complex)
    for idx, f in ((eta, t.b), (phi, t.c)):
        s = np.ones(d)
        s[0::2] = np.cos(f.angles / 2)
        g[np.ix_(idx, idx)] = s[:, None] * f.rotation.T
        blk = np.zeros((d, d))
        sn = np.sin(f.angles / 2)
        blk[0::2, 1::2][np.diag_indices(d // 2)] = sn
        blk[1::2, 0::2][np.diag_indices(d // 2)] = -sn
        L[np.ix_(idx, idx)] = 0
        L = g @ L @ g.T
        L[np.ix_(idx, idx)] = blk
        g[np.ix_(idx, idx)] = np.eye(d)
    return L


def triple_trace(t: TripleTraceInput, stable: bool = True) -> complex:
    """``tr(P c[m] |phi><phi| B C)`` as a Pfaffian.

    The overall constant ``(-i)^N (-1)^(m/2)`` (N qubits) was fixed against
    dense traces.
    """
    nq = t.b.dim // 2
    const = (-1j) ** nq * (-1) ** (t.m_count // 2)
    L = build_L_matrix(t, stable=stable)
    pf = pfaffian(L)
    if stable:
        return complex(const * pf)
    return complex(const * t.prefactors * pf)


def reduce_majorana_word(word):
    """Normal-order a product of Majoranas.

    Returns ``(sign, indices)`` with ``c_{w0} c_{w1} ... = sign * c_{i0} c_{i1} ...``,
    the indices strictly ascending (using c_j^2 = 1).
    """
    w = list(word)
    sign = 1
    # bubble sort; each adjacent swap of distinct Majoranas costs a sign
    changed = True
    while changed:
        changed = False
        i = 0
        while i < len(w) - 1:
            if w[i] > w[i + 1]:
                w[i], w[i + 1] = w[i + 1], w[i]
                sign = -sign
                changed = True
            elif w[i] == w[i + 1]:
                del w[i : i + 2]
                changed = True
                continue
            i += 1
    return sign, w


def vacuum_element(word, b: GaussianFactor, c: GaussianFactor, stable: bool = True) -> complex:
    """``<0| B C c_{w0} c_{w1} ... |0>`` through the triple trace.

    The monomial is moved next to the vacuum projector with the parity
    operator ``P`` (``P|0> = |0>``, ``P^2 = 1``): ``c(w)|0><0| = P (P c(w)) |0><0|``
    and ``P c(w)`` is a signed monomial on the complementary indices.  A
    Gaussian permutation ``Q`` then sends those indices to ``0..m-1``; it
    conjugates the vacuum into a state with covariance ``Q M_vac Q^T`` and
    rotates both factors.
    """
    d = b.dim
    nq = d // 2
    s_word, w = reduce_majorana_word(word)
    if len(w) % 2:
        return 0j
    s_p, comp = reduce_majorana_word(list(range(d)) + w)
    m = len(comp)
    rest = [j for j in range(d) if j not in set(comp)]
    q = np.zeros((d, d))
    for i, j in enumerate(comp + rest):
        q[i, j] = 1.0
    if np.linalg.det(q) < 0:
        q[m, rest[0]] = -1.0  # rest is nonempty whenever w is
    mvac = omega(d)
    t = TripleTraceInput(m, q @ mvac @ q.T, b.conjugated(q), c.conjugated(q))
    return complex(s_word * s_p * (-1j) ** nq * triple_trace(t, stable=stable))


# -------------------------------------------------------------- passive parts


def _vacuum_phase(beta):
    from .gaussian_state import passive_vacuum_phase

    return passive_vacuum_phase(beta)


def _passive_log_parts(r):
    import scipy.linalg as sla

    u = passive_to_unitary(r)
    tri, q = sla.schur(u, output="complex")
    return q, np.angle(np.diag(tri))


def _passive_generator(q, ph):
    logu = (q * (1j * ph)) @ q.conj().T
    logu = 0.5 * (logu - logu.conj().T)
    g = unitary_to_passive(logu)
    return (g - g.T) / 2


def merge_passive(beta, gamma) -> np.ndarray:
    """Generator xi with exp(beta~) exp(gamma~) = exp(xi~) exactly, where
    ``g~ = (1/4) sum g_jk c_j c_k``.

    The rotation fixes xi up to the lift; the lift is chosen so that vacuum
    eigenvalues multiply, adding 2 pi to one mode phase when needed.
    """
    beta = as_antisymmetric(beta, "beta")
    gamma = as_antisymmetric(gamma, "gamma")
    if not (is_passive(beta) and is_passive(gamma)):
        raise NotPassiveError("merge_passive needs generators commuting with Omega")
    q, ph = _passive_log_parts(so_exp(beta) @ so_exp(gamma))
    xi = _passive_generator(q, ph)
    want = _vacuum_phase(beta) * _vacuum_phase(gamma)
    if abs(_vacuum_phase(xi) - want) > abs(_vacuum_phase(xi) + want):
        ph = ph.copy()
        ph[0] += 2 * np.pi
        xi = _passive_generator(q, ph)
    return xi


# -------------------------------------------------------------------- KAK


def anti_passive_generator(lam) -> np.ndarray:
    """Lambda (x) i sigma_y (x) sigma_z for a vector of angles."""
    lam = np.asarray(lam, dtype=float)
    return np.kron(np.diag(lam), np.kron(IY, SZ))


def kak_so(r):
    """Factor ``R = K1 exp(Lambda (x) i sigma_y (x) sigma_z) K2``.

    ``K1`` and ``K2`` are orthogonal and commute with Omega.  The condensed
    form gives ``R = U (D (x) E11 + L (x) E22) V`` with ``D`` diagonal +-1 and
    ``L`` orthogonal.  Block-diagonalizing ``D L = S exp(Lam (x) i sigma_y) S^T``
    and splitting ``exp(Lam (x) i sigma_y)`` symmetrically around the identity
    gives the anti-passive middle factor with angles ``-Lam / 2``.
    """
    r = np.asarray(r, dtype=float)
    dim = r.shape[0]
    if dim % 4:
        raise DimensionError(f"KAK needs dimension divisible by 4, got {dim}")
    k1c, k2c, rc = symplectic_condensed_form(r)
    u, v = k1c.T, k2c.T
    dmat = np.diag(np.sign(np.diag(rc[0::2, 0::2])))
    lmat = rc[1::2, 1::2]
    form = antisym_block_diag(so_log(dmat @ lmat))
    s = form.rotation.T
    lam = np.zeros(dim // 4)
    lam[: len(form.angles)] = form.angles
    half = so_exp(np.kron(np.diag(lam / 2), IY))
    i2 = np.eye(2)
    k1 = u @ np.kron(dmat @ s, i2) @ np.kron(half, i2)
    k2 = np.kron(s.T, i2) @ v
    return k1, -lam / 2, k2


@dataclass(frozen=True)
class KakFactors:
    """``exp(alpha~) = sign * exp(beta~) exp(A~) exp(gamma~)`` with
    ``A = Lambda (x) i sigma_y (x) sigma_z`` and ``g~ = (1/4) sum g_jk c_j c_k``.

    ``element`` is the magnitude of the matrix element used to fix ``sign``.
    """

    beta: np.ndarray
    Lambda: np.ndarray
    gamma: np.ndarray
    sign: int
    element: float = field(default=1.0)


def _recovery_probe(alpha):
    """Rotation V, monomial word and exact value of <0|V^dag exp(alpha~) V c(x)^dag|0>.

    In the block basis ``exp(alpha~) = prod_j (cos(mu_j/2) + sin(mu_j/2) c_{2j} c_{2j+1})``.
    Blocks whose sine dominates are rewritten as ``(cos(mu'_j/2) + sin(mu'_j/2) c c) c c``
    with ``mu' = mu - pi``; the collected ``c c`` factors form ``c(x)``.
    """
    fac = GaussianFactor.from_generator(alpha)
    mu = fac.angles
    flip = np.abs(np.sin(mu / 2)) > np.abs(np.cos(mu / 2))
    mu_t = np.where(flip, mu - np.pi, mu)
    # c_{2j} c_{2j+1} = i Z_j, so each block acts on the vacuum as exp(i mu'/2)
    value = complex(np.prod(np.cos(mu_t / 2) + 1j * np.sin(mu_t / 2)))
    word = []
    for j in reversed(np.flatnonzero(flip)):
        word += [2 * j + 1, 2 * j]  # c(x)^dag
    return fac, word, value


def _resolve_sign(traced, known, nq, what):
    floor = 2.0 ** (-nq / 2)
    if abs(traced) < floor / 4:
        raise PhaseRecoveryError(f"{what}: recovery element {abs(traced):.3e} below floor")
    ratio = traced / known
    if abs(abs(ratio) - 1) > 1e-6 * max(1.0, 1 / abs(known)):
        raise PhaseRecoveryError(f"{what}: element ratio {ratio} is not +-1")
    return 1 if ratio.real > 0 else -1


def kak_flo_with_sign(alpha, stable: bool = True) -> KakFactors:
    """KAK factors of ``exp((1/4) sum alpha_jk c_j c_k)`` including the sign.

    The sign is fixed by evaluating ``<0| V^dag U V c(x)^dag |0>`` exactly from
    the block form of alpha and through the triple trace for
    ``K1 A K2 = (K1 A K1^dag)(K1 K2)``.
    """
    alpha = as_antisymmetric(np.asarray(alpha, dtype=float), "alpha")
    dim = alpha.shape[0]
    if dim % 4:
        raise DimensionError(f"KAK needs dimension divisible by 4, got {dim}; pad with an idle qubit")
    k1, lam, k2 = kak_so(so_exp(alpha))
    beta = _passive_generator(*_passive_log_parts(k1))
    gamma = _passive_generator(*_passive_log_parts(k2))
    a_gen = anti_passive_generator(lam)
    fac, word, known = _recovery_probe(alpha)
    vt = fac.rotation.T  # rotation of V^dag
    b = GaussianFactor.from_generator(vt @ k1 @ a_gen @ k1.T @ vt.T)
    c = GaussianFactor.from_generator(vt @ merge_passive(beta, gamma) @ vt.T)
    traced = vacuum_element(word, b, c, stable=stable)
    sign = _resolve_sign(traced, known, dim // 2, "kak_flo_with_sign")
    return KakFactors(beta, lam, gamma, sign, abs(known))


def compose_flo(g1, g2, stable: bool = True) -> np.ndarray:
    """Generator xi with exp(g1~) exp(g2~) = exp(xi~) exactly.

    Starts from the principal logarithm of the product rotation and flips the
    lift (adding 2 pi to one block angle) when the recovery element says so.
    """
    g1 = as_antisymmetric(np.asarray(g1, dtype=float), "g1")
    g2 = as_antisymmetric(np.asarray(g2, dtype=float), "g2")
    xi = so_log(so_exp(g1) @ so_exp(g2))
    fac, word, known = _recovery_probe(xi)
    vt = fac.rotation.T
    b = GaussianFactor.from_generator(vt @ g1 @ vt.T)
    c = GaussianFactor.from_generator(vt @ g2 @ vt.T)
    traced = vacuum_element(word, b, c, stable=stable)
    if _resolve_sign(traced, known, g1.shape[0] // 2, "compose_flo") < 0:
        ang = fac.angles.copy()
        ang[0] += 2 * np.pi
        xi = GaussianFactor(fac.rotation, ang).generator()
    return xi
