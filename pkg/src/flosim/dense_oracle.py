"""Brute-force statevector reference.

Qubit 0 is the most significant bit of the basis index, so the basis vector
``|q0 q1 ... q_{m-1}>`` sits at index ``int("q0q1...", 2)``.  Majorana
operators follow the Jordan-Wigner convention

    c_{2i}   = Z_0 ... Z_{i-1} X_i
    c_{2i+1} = Z_0 ... Z_{i-1} Y_i

Everything here is deliberately simple and independent of the Gaussian
machinery so it can serve as a test oracle.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import CapacityError, DimensionError

DEFAULT_CAP = 12
# windows wider than this are exponentiated with a sparse Taylor action
EIGH_WINDOW = 8


def _check_cap(m, cap=DEFAULT_CAP):
    if m > cap:
        raise CapacityError(f"{m} qubits exceeds the dense cap of {cap}")


@lru_cache(maxsize=64)
def _majorana_tables(m: int, j: int):
    """Return (source index, coefficient) so that (c_j psi)[b] = coef[b] psi[src[b]]."""
    q = j // 2
    idx = np.arange(2**m)
    bit = m - 1 - q
    src = idx ^ (1 << bit)
    # parity of the qubits strictly before q, read from the source index
    below = src >> (bit + 1)
    par = _popcount(below) & 1
    coef = np.where(par == 1, -1.0, 1.0).astype(complex)
    if j % 2 == 1:
        src_bit = (src >> bit) & 1
        # Y|0> = i|1>, Y|1> = -i|0>
        coef = coef * np.where(src_bit == 0, 1j, -1j)
    return src, coef


def _popcount(v):
    v = v.astype(np.int64)
    c = np.zeros_like(v)
    while np.any(v):
        c += v & 1
        v >>= 1
    return c


def dense_majorana(m: int, j: int):
    """Return a function applying c_j to an m-qubit state vector."""
    if not 0 <= j < 2 * m:
        raise IndexError(f"Majorana index {j} out of range for {m} qubits")
    src, coef = _majorana_tables(m, j)

    def apply(psi):
        return coef * np.asarray(psi)[src]

    return apply


def majorana_matrix(m: int, j: int) -> np.ndarray:
    """Dense 2^m x 2^m matrix of c_j (small m only)."""
    _check_cap(m, 10)
    return np.column_stack([dense_majorana(m, j)(e) for e in np.eye(2**m, dtype=complex)])


def basis_state(bits) -> np.ndarray:
    """Computational basis vector for a bit string or sequence of 0/1."""
    bits = [int(b) for b in bits]
    v = np.zeros(2 ** len(bits), dtype=complex)
    v[int("".join(map(str, bits)), 2) if bits else 0] = 1.0
    return v


def vacuum_state(m: int) -> np.ndarray:
    return basis_state([0] * m)


def _support_window(alpha, tol=0.0):
    nz = np.nonzero(np.abs(alpha) > tol)
    if len(nz[0]) == 0:
        return None
    idx = np.concatenate(nz)
    return idx.min() // 2, idx.max() // 2


@lru_cache(maxsize=16)
def _majorana_stack(m: int) -> np.ndarray:
    out = np.stack([majorana_matrix(m, j) for j in range(2 * m)])
    out.setflags(write=False)
    return out


def flo_hamiltonian(alpha) -> np.ndarray:
    """Dense matrix of (1/4) sum_jk alpha_jk c_j c_k on dim(alpha)/2 qubits."""
    alpha = np.asarray(alpha, dtype=float)
    m = alpha.shape[0] // 2
    _check_cap(m, 10)
    if m > EIGH_WINDOW:
        return _sparse_hamiltonian(alpha).toarray()
    cs = _majorana_stack(m)
    # (1/4) sum_j c_j (sum_k alpha_jk c_k)
    mixed = np.tensordot(alpha, cs, axes=(1, 0))
    return 0.25 * np.matmul(cs, mixed).sum(axis=0)


def flo_unitary(alpha) -> np.ndarray:
    """exp((1/4) sum alpha_jk c_j c_k) via the Hermitian eigendecomposition of iH."""
    h = flo_hamiltonian(alpha)
    w, v = np.linalg.eigh(1j * h)
    return (v * np.exp(-1j * w)) @ v.conj().T


def dense_apply_flo(state, alpha, cap: int = DEFAULT_CAP) -> np.ndarray:
    """Apply exp((1/4) sum alpha_jk c_j c_k) to ``state``.

    Only the contiguous qubit window touched by ``alpha`` is exponentiated: a
    quadratic Majorana term whose indices lie in qubits [lo, hi] acts trivially
    outside that window because the Jordan-Wigner strings below ``lo`` cancel.
    """
    state = np.asarray(state, dtype=complex)
    alpha = np.asarray(alpha, dtype=float)
    m = alpha.shape[0] // 2
    if alpha.shape != (2 * m, 2 * m):
        raise DimensionError("generator must be square with even dimension")
    if state.shape != (2**m,):
        raise DimensionError("state length does not match generator")
    _check_cap(m, cap)
    win = _support_window(alpha)
    if win is None:
        return state.copy()
    lo, hi = win
    r = hi - lo + 1
    local = alpha[2 * lo : 2 * hi + 2, 2 * lo : 2 * hi + 2]
    if r > EIGH_WINDOW:
        return _sparse_apply_flo(state, alpha)
    u = flo_unitary(local)
    return apply_local(state, u, lo, r, m)


def _sparse_majorana(m, j):
    src, coef = _majorana_tables(m, j)
    n = 2**m
    return sp.csr_matrix((coef, (np.arange(n), src)), shape=(n, n))


def _sparse_hamiltonian(alpha):
    m = alpha.shape[0] // 2
    cs = [_sparse_majorana(m, j) for j in range(2 * m)]
    h = sp.csr_matrix((2**m, 2**m), dtype=complex)
    for j in range(2 * m):
        for k in range(j + 1, 2 * m):
            w = 0.25 * (alpha[j, k] - alpha[k, j])
            if w != 0.0:
                h = h + w * (cs[j] @ cs[k])
    return h


def _sparse_apply_flo(state, alpha):
    """Large windows: truncated-Taylor action of the sparse Hamiltonian."""
    return spla.expm_multiply(_sparse_hamiltonian(alpha).tocsc(), state)


def apply_local(state, u, lo, r, m) -> np.ndarray:
    """Apply a 2^r x 2^r operator to qubits lo..lo+r-1 of an m-qubit state."""
    psi = np.asarray(state, dtype=complex).reshape(2**lo, 2**r, 2 ** (m - lo - r))
    out = np.einsum("ab,ibj->iaj", u, psi)
    return out.reshape(-1)


def apply_majorana_product(state, indices, m: int) -> np.ndarray:
    """Apply c_{i0} c_{i1} ... (rightmost acts first)."""
    out = np.asarray(state, dtype=complex)
    for j in reversed(list(indices)):
        out = dense_majorana(m, j)(out)
    return out


def covariance_from_state(state) -> np.ndarray:
    """M_jk = -(i/2) <[c_j, c_k]> for a normalized state."""
    state = np.asarray(state, dtype=complex)
    m = int(round(np.log2(state.size)))
    cs = [dense_majorana(m, j) for j in range(2 * m)]
    cpsi = [c(state) for c in cs]
    mat = np.zeros((2 * m, 2 * m))
    for j in range(2 * m):
        for k in range(j + 1, 2 * m):
            # <c_j c_k> with j != k is purely imaginary for these states
            val = np.vdot(cpsi[j], cpsi[k])
            mat[j, k] = (-1j * val).real
            mat[k, j] = -mat[j, k]
    return mat / np.vdot(state, state).real


def parity_operator(m: int) -> np.ndarray:
    """Diagonal of prod_i Z_i."""
    idx = np.arange(2**m)
    return np.where(_popcount(idx) & 1, -1.0, 1.0)


def projector_zero(state, q: int, m: int) -> np.ndarray:
    """a_q a_q^dagger = |0><0| on qubit q."""
    psi = np.asarray(state, dtype=complex).reshape(2**q, 2, 2 ** (m - q - 1)).copy()
    psi[:, 1, :] = 0
    return psi.reshape(-1)


def projector_one(state, q: int, m: int) -> np.ndarray:
    psi = np.asarray(state, dtype=complex).reshape(2**q, 2, 2 ** (m - q - 1)).copy()
    psi[:, 0, :] = 0
    return psi.reshape(-1)


def controlled_phase_matrix(theta: float) -> np.ndarray:
    return np.diag([1, 1, 1, np.exp(1j * theta)]).astype(complex)


def matchgate_matrix(a, b) -> np.ndarray:
    """G(A, B): A on span{|00>, |11>}, B on span{|01>, |10>}."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    g = np.zeros((4, 4), dtype=complex)
    g[np.ix_([0, 3], [0, 3])] = a
    g[np.ix_([1, 2], [1, 2])] = b
    return g


def dense_run(gates, n: int, psi, cap: int = DEFAULT_CAP) -> np.ndarray:
    """Apply a gate list to ``psi``; matchgates and controlled phases exactly as 4x4 blocks."""
    from . import circuit as circ

    _check_cap(n, cap)
    for g in gates:
        if isinstance(g, circ.Matchgate):
            psi = apply_local(psi, matchgate_matrix(g.A, g.B), g.q, 2, n)
        elif isinstance(g, circ.ControlledPhase):
            psi = apply_local(psi, controlled_phase_matrix(g.theta), g.q, 2, n)
        else:
            psi = dense_apply_flo(psi, circ.gate_generator(g, n), cap)
    return psi


def dense_evolve(circuit, cap: int = DEFAULT_CAP) -> np.ndarray:
    """Statevector after running every gate of ``circuit`` on its input string."""
    return dense_run(circuit.gates, circuit.n, basis_state(circuit.input), cap)


def dense_born(circuit, cap: int = DEFAULT_CAP) -> float:
    """Exact probability of the circuit's (possibly masked) output string."""
    psi = dense_evolve(circuit, cap)
    n = circuit.n
    probs = np.abs(psi.reshape((2,) * n)) ** 2
    index = tuple(slice(None) if ch == "-" else int(ch) for ch in circuit.output)
    return float(np.sum(probs[index]))
