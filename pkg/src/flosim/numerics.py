"""Dense linear-algebra kernels: Pfaffians, antisymmetric block forms,
exponentials and logarithms on SO(d), and the orthogonal-symplectic condensed
form.

Two layouts of the symplectic form appear in this module.  The interleaved
layout ``Omega = I_n (x) [[0, 1], [-1, 0]]`` pairs Majorana indices
``(2l, 2l+1)`` and is used everywhere else in the package.  The split layout
``J = [[0, I], [-I, 0]]`` is only used internally by the condensed-form
reduction, where Householder and Givens steps are easier to write.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import DimensionError, ShapeError

IY = np.array([[0.0, 1.0], [-1.0, 0.0]])


def tau_sym(dim: int) -> float:
    return 1e-10 * max(dim, 1)


def tau_block(dim: int) -> float:
    return 1e-9 * max(dim, 1)


def omega(dim: int) -> np.ndarray:
    """Interleaved symplectic form I (x) i sigma_y of size ``dim``."""
    if dim % 2:
        raise DimensionError(f"symplectic form needs even dimension, got {dim}")
    return np.kron(np.eye(dim // 2), IY)


def as_antisymmetric(a, name="matrix") -> np.ndarray:
    """Validate antisymmetry within tau_sym and return (A - A^T)/2."""
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ShapeError(f"{name} must be square, got shape {a.shape}")
    scale = max(1.0, float(np.max(np.abs(a)))) if a.size else 1.0
    if a.size and np.max(np.abs(a + a.T)) > tau_sym(a.shape[0]) * scale:
        raise ShapeError(f"{name} is not antisymmetric")
    return (a - a.T) / 2


def check_special_orthogonal(r, name="matrix") -> np.ndarray:
    r = np.asarray(r, dtype=float)
    if r.ndim != 2 or r.shape[0] != r.shape[1]:
        raise ShapeError(f"{name} must be square, got shape {r.shape}")
    d = r.shape[0]
    if np.max(np.abs(r @ r.T - np.eye(d)), initial=0.0) > tau_sym(d):
        raise ShapeError(f"{name} is not orthogonal")
    if d and abs(np.linalg.det(r) - 1.0) > tau_sym(d):
        raise ShapeError(f"{name} has determinant -1")
    return r


# ---------------------------------------------------------------- Pfaffian


def pfaffian(a):
    """Pfaffian of an antisymmetric matrix (real or complex).

    Skew-symmetric LTL^T tridiagonalization with partial pivoting
    (Parlett-Reid).  Each step eliminates one pair of rows and columns with a
    rank-2 update, so the cost is O(d^3).

    Parameters
    ----------
    a : (d, d) array_like
        Antisymmetric within ``tau_sym``; ``d`` must be even.

    Returns
    -------
    float or complex
        Pf(a), with Pf(a)^2 = det(a).
    """
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ShapeError(f"Pfaffian needs a square matrix, got shape {a.shape}")
    d = a.shape[0]
    if d % 2:
        raise DimensionError(f"Pfaffian needs even dimension, got {d}")
    a = as_antisymmetric(a)
    dtype = np.complex128 if np.iscomplexobj(a) else np.float64
    a = np.array(a, dtype=dtype)
    if d == 0:
        return dtype(1.0)
    pf = dtype(1.0)
    for k in range(0, d - 1, 2):
        col = np.abs(a[k + 1 :, k])
        p = k + 1 + int(np.argmax(col))
        if p != k + 1:
            a[[k + 1, p], :] = a[[p, k + 1], :]
            a[:, [k + 1, p]] = a[:, [p, k + 1]]
            pf = -pf
        piv = a[k, k + 1]
        if piv == 0:
            return dtype(0.0)
        pf = pf * piv
        if k + 2 < d:
            tau = a[k, k + 2 :] / piv
            v = a[k + 2 :, k + 1]
            a[k + 2 :, k + 2 :] += np.outer(tau, v) - np.outer(v, tau)
    return pf


# ------------------------------------------------- antisymmetric block forms


@dataclass(frozen=True)
class BlockDiagForm:
    """``rotation @ source @ rotation.T = (+)_j [[0, l_j], [-l_j, 0]] (+) 0``."""

    rotation: np.ndarray
    angles: np.ndarray
    trailing_zero_count: int

    def blocks(self) -> np.ndarray:
        d = self.rotation.shape[0]
        out = np.zeros((d, d))
        for j, lam in enumerate(self.angles):
            out[2 * j, 2 * j + 1] = lam
            out[2 * j + 1, 2 * j] = -lam
        return out

    def reconstruct(self) -> np.ndarray:
        return self.rotation.T @ self.blocks() @ self.rotation


def antisym_block_diag(a) -> BlockDiagForm:
    """Block-diagonalize a real antisymmetric matrix by a rotation in SO(d).

    Uses the real Schur form.  Angles come out in descending ``|lambda|`` with
    ties kept in order of first occurrence; every angle is nonnegative except
    possibly the last one, whose sign absorbs the orientation needed to keep
    ``det(rotation) = +1``.
    """
    a = as_antisymmetric(np.asarray(a, dtype=float))
    d = a.shape[0]
    if d == 0:
        return BlockDiagForm(np.eye(0), np.zeros(0), 0)
    t, z = sla.schur(a, output="real")
    # pair up the Schur blocks: 2x2 blocks carry +-i*lambda, 1x1 blocks are zeros
    pairs, zeros = [], []
    i = 0
    while i < d:
        if i + 1 < d and abs(t[i + 1, i]) > 0.0:
            lam = 0.5 * (t[i, i + 1] - t[i + 1, i])
            pairs.append((abs(lam), [i, i + 1] if lam >= 0 else [i + 1, i]))
            i += 2
        else:
            zeros.append(i)
            i += 1
    for j in range(0, len(zeros) - 1, 2):
        pairs.append((0.0, [zeros[j], zeros[j + 1]]))
    leftover = [zeros[-1]] if len(zeros) % 2 else []
    order = sorted(range(len(pairs)), key=lambda j: -pairs[j][0])
    cols = [c for j in order for c in pairs[j][1]] + leftover
    rot = z[:, cols].T
    angles = np.array([pairs[j][0] for j in order])
    if np.linalg.det(rot) < 0:
        if len(angles):
            rot[[2 * len(angles) - 2, 2 * len(angles) - 1]] = rot[[2 * len(angles) - 1, 2 * len(angles) - 2]]
            angles[-1] = -angles[-1]
        else:
            rot[-1] = -rot[-1]
    # recompute angles from the rotated matrix to absorb Schur round-off
    blk = rot @ a @ rot.T
    angles = np.array([blk[2 * j, 2 * j + 1] for j in range(len(angles))])
    return BlockDiagForm(rot, angles, len(leftover))


def complex_antisym_block_diag(a):
    """Youla normal form of a complex antisymmetric matrix.

    Returns ``(u, lam)`` with ``u`` unitary and ``u @ a @ u.T`` equal to
    ``diag(lam) (x) i sigma_y`` with ``lam >= 0`` sorted descending.

    Each step takes the top singular triple ``a v = s w``.  Antisymmetry makes
    ``conj(w)`` and ``v`` an orthonormal pair on which ``a`` acts as
    ``s i sigma_y``, and the orthogonal complement is invariant, so the
    problem deflates by two dimensions.
    """
    a = as_antisymmetric(np.asarray(a, dtype=complex))
    d = a.shape[0]
    if d % 2:
        raise DimensionError("complex antisymmetric block form needs even dimension")
    scale = max(1.0, float(np.max(np.abs(a), initial=0.0)))
    basis = np.eye(d, dtype=complex)  # rows span the unreduced subspace
    rows, lam = [], []
    while basis.shape[0] >= 2:
        sub = basis @ a @ basis.T
        w, s, vh = np.linalg.svd(sub)
        if s[0] <= 1e-15 * scale:
            break
        rows += [w[:, 0].conj() @ basis, vh[0].conj() @ basis]
        lam.append(s[0])
        basis = sla.null_space(np.conj(np.vstack(rows))).T
    if basis.shape[0]:
        rows += list(basis)
        lam += [0.0] * (basis.shape[0] // 2)
    return np.vstack(rows), np.array(lam)


# ------------------------------------------------------- SO exp and log


def so_exp(a) -> np.ndarray:
    """exp(A) for antisymmetric A, assembled from exact 2x2 rotations."""
    form = antisym_block_diag(a)
    d = form.rotation.shape[0]
    e = np.eye(d)
    for j, lam in enumerate(form.angles):
        c, s = np.cos(lam), np.sin(lam)
        e[2 * j : 2 * j + 2, 2 * j : 2 * j + 2] = [[c, s], [-s, c]]
    return form.rotation.T @ e @ form.rotation


def so_log(r) -> np.ndarray:
    """Principal logarithm of R in SO(d): block angles in (-pi, pi].

    Eigenvalues -1 come in pairs (even dimension, det +1) and are combined
    into rotations by pi.
    """
    r = check_special_orthogonal(r)
    d = r.shape[0]
    if d == 0:
        return np.zeros((0, 0))
    t, z = sla.schur(r, output="real")
    gen = np.zeros((d, d))
    minus = []
    i = 0
    while i < d:
        if i + 1 < d and abs(t[i + 1, i]) > 0.0:
            c = 0.5 * (t[i, i] + t[i + 1, i + 1])
            s = 0.5 * (t[i, i + 1] - t[i + 1, i])
            th = np.arctan2(s, c)
            gen[i, i + 1], gen[i + 1, i] = th, -th
            i += 2
        else:
            if t[i, i] < 0:
                minus.append(i)
            i += 1
    if len(minus) % 2:
        raise ShapeError("rotation has an odd number of -1 eigenvalues")
    for j in range(0, len(minus), 2):
        p, q = minus[j], minus[j + 1]
        gen[p, q], gen[q, p] = np.pi, -np.pi
    out = z @ gen @ z.T
    return (out - out.T) / 2


# ----------------------------------------------- passive (U(n)) helpers


def passive_to_unitary(r) -> np.ndarray:
    """n x n complex matrix c + i s of a passive matrix c (x) I + s (x) i sigma_y."""
    r = np.asarray(r)
    return r[0::2, 0::2] + 1j * r[0::2, 1::2]


def unitary_to_passive(u) -> np.ndarray:
    u = np.asarray(u, dtype=complex)
    return np.kron(u.real, np.eye(2)) + np.kron(u.imag, IY)


def is_passive(a, tol=None) -> bool:
    a = np.asarray(a, dtype=float)
    d = a.shape[0]
    if d % 2:
        return False
    tol = tau_sym(d) * max(1.0, float(np.max(np.abs(a), initial=0.0))) if tol is None else tol
    om = omega(d)
    return bool(np.max(np.abs(a @ om - om @ a), initial=0.0) <= tol)


def passive_log(r) -> np.ndarray:
    """Logarithm of a passive rotation that is itself passive.

    The principal SO logarithm is ambiguous on the -1 eigenspace, and an
    arbitrary choice there need not commute with Omega.  Taking the log of the
    associated unitary keeps the generator inside the passive algebra.
    """
    u = passive_to_unitary(r)
    tri, q = sla.schur(u, output="complex")
    ph = np.angle(np.diag(tri))
    logu = (q * (1j * ph)) @ q.conj().T
    logu = 0.5 * (logu - logu.conj().T)
    gen = unitary_to_passive(logu)
    return (gen - gen.T) / 2


# ------------------------------------------------------ condensed form


def _split_perm(n):
    """perm[k] = interleaved index of split index k (top a -> 2a, bottom a -> 2a+1)."""
    return np.concatenate([2 * np.arange(n), 2 * np.arange(n) + 1])


def _householder(x):
    """Reflector P (symmetric orthogonal) with P x = -sign(x0)|x| e_0."""
    x = np.asarray(x, dtype=float)
    v = x.copy()
    nrm = np.linalg.norm(x)
    if nrm == 0.0 or np.allclose(x[1:], 0.0, atol=0.0):
        return np.eye(len(x))
    v[0] += np.copysign(nrm, x[0]) if x[0] != 0 else nrm
    v /= np.linalg.norm(v)
    return np.eye(len(x)) - 2.0 * np.outer(v, v)


def _sym_house(n, k, x):
    """Orthogonal symplectic diag(P, P) acting on split indices k..n-1."""
    p = np.eye(n)
    p[k:, k:] = _householder(x)
    return np.block([[p, np.zeros((n, n))], [np.zeros((n, n)), p]])


def _sym_givens(n, k, c, s):
    """Orthogonal symplectic rotation in the (k, n+k) plane."""
    g = np.eye(2 * n)
    g[k, k] = g[n + k, n + k] = c
    g[k, n + k] = s
    g[n + k, k] = -s
    return g


def symplectic_condensed_form(a):
    """Orthogonal-symplectic condensed form of a real 2n x 2n matrix.

    Finds ``K1, K2`` with ``K1 Omega K1^T = K2 Omega K2^T = Omega`` and
    ``K1 @ a @ K2 = R`` where, writing ``R_ij`` for the blocks that couple
    even (i=1) and odd (i=2) interleaved indices, ``R_21 = 0``, ``R_11`` is
    upper triangular and ``R_22`` is lower Hessenberg.  For special orthogonal
    input ``R_12`` vanishes and ``R_11`` is diagonal.

    Works column by column in the split layout: three elementary
    orthogonal-symplectic steps from the left clear column j below the
    diagonal, then three from the right clear row n+j outside the Hessenberg
    band.

    Returns
    -------
    (K1, K2, R) in the interleaved layout.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ShapeError("condensed form needs a square matrix")
    if a.shape[0] % 2:
        raise DimensionError("condensed form needs even dimension")
    n = a.shape[0] // 2
    perm = _split_perm(n)
    h = a[np.ix_(perm, perm)].copy()  # split layout
    left = np.eye(2 * n)
    right = np.eye(2 * n)
    for j in range(n):
        # column j: clear bottom rows n+j+1.., then (n+j, j), then top rows j+1..
        t = _sym_house(n, j, h[n + j :, j])
        h, left = t @ h, t @ left
        x, y = h[j, j], h[n + j, j]
        r = np.hypot(x, y)
        if r > 0:
            g = _sym_givens(n, j, x / r, y / r)
            h, left = g @ h, g @ left
        t = _sym_house(n, j, h[j:n, j])
        h, left = t @ h, t @ left
        if j + 1 >= n:
            continue
        # row n+j: clear left part columns j+2.., then (n+j, j+1), then right part beyond n+j+1
        t = _sym_house(n, j + 1, h[n + j, j + 1 : n])
        h, right = h @ t, right @ t
        x, y = h[n + j, n + j + 1], h[n + j, j + 1]
        r = np.hypot(x, y)
        if r > 0:
            g = _sym_givens(n, j + 1, x / r, y / r)
            h, right = h @ g, right @ g
        t = _sym_house(n, j + 1, h[n + j, n + j + 1 :])
        h, right = h @ t, right @ t
    inv = np.argsort(perm)
    back = lambda m: m[np.ix_(inv, inv)]  # noqa: E731
    return back(left), back(right), back(h)
