"""Circuit representation, text format and the gadgetizing compiler.

Text format, one directive per line, ``#`` starts a comment::

    qubits N
    input BITS
    output BITS            # '-' marks an unmeasured qubit
    mg Q  a11r a11i a12r a12i a21r a21i a22r a22i  b11r ... b22i
    elem MU J K
    passive FILE           # real matrix file: dimension, then row-major entries
    general FILE
    cphase THETA Q
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .dense_oracle import majorana_matrix, matchgate_matrix
from .errors import (
    DimensionError,
    NotMatchgateError,
    NotPassiveError,
    ParityError,
    ParseError,
    QubitRangeError,
    ShapeError,
)
from .numerics import as_antisymmetric, is_passive, tau_sym

MG_TOL = 1e-9


# ------------------------------------------------------------------- gates


@dataclass(frozen=True, eq=False)
class Matchgate:
    """``G(A, B)`` on qubits ``(q, q+1)``."""

    q: int
    A: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.A, dtype=complex)
        b = np.asarray(self.B, dtype=complex)
        if a.shape != (2, 2) or b.shape != (2, 2):
            raise ShapeError("matchgate blocks must be 2x2")
        i2 = np.eye(2)
        if np.abs(a.conj().T @ a - i2).max() > MG_TOL or np.abs(b.conj().T @ b - i2).max() > MG_TOL:
            raise NotMatchgateError("matchgate blocks must be unitary")
        if abs(np.linalg.det(a) - np.linalg.det(b)) > MG_TOL:
            raise NotMatchgateError("matchgate needs det A = det B")
        object.__setattr__(self, "A", a)
        object.__setattr__(self, "B", b)

    def __eq__(self, other):
        return (
            isinstance(other, Matchgate)
            and self.q == other.q
            and np.array_equal(self.A, other.A)
            and np.array_equal(self.B, other.B)
        )


@dataclass(frozen=True)
class Elementary:
    """``exp(mu c_j c_k)``."""

    mu: float
    j: int
    k: int

    def __post_init__(self):
        if self.j == self.k:
            raise IndexError("elementary gate needs two distinct Majorana indices")


@dataclass(frozen=True, eq=False)
class PassiveGen:
    """``exp((1/4) sum beta_jk c_j c_k)`` with beta commuting with Omega."""

    beta: np.ndarray
    source: str | None = None

    def __post_init__(self):
        beta = as_antisymmetric(np.asarray(self.beta, dtype=float), "passive generator")
        if not is_passive(beta):
            raise NotPassiveError("passive generator does not commute with Omega")
        object.__setattr__(self, "beta", beta)

    def __eq__(self, other):
        return isinstance(other, PassiveGen) and np.array_equal(self.beta, other.beta)


@dataclass(frozen=True, eq=False)
class GeneralGen:
    """``exp((1/4) sum alpha_jk c_j c_k)``."""

    alpha: np.ndarray
    source: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "alpha", as_antisymmetric(np.asarray(self.alpha, dtype=float), "generator"))

    def __eq__(self, other):
        return isinstance(other, GeneralGen) and np.array_equal(self.alpha, other.alpha)


@dataclass(frozen=True)
class ControlledPhase:
    """``diag(1, 1, 1, e^{i theta})`` on qubits ``(q, q+1)``."""

    theta: float
    q: int


GATE_TYPES = (Matchgate, Elementary, PassiveGen, GeneralGen, ControlledPhase)


def _parity(bits: str) -> int:
    return sum(1 for ch in bits if ch == "1") % 2


@dataclass(frozen=True)
class Circuit:
    """A gate list on ``n`` qubits with input and (possibly masked) output strings."""

    n: int
    gates: tuple = ()
    input: str = ""
    output: str = ""

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        inp = self.input or "0" * self.n
        out = self.output or "0" * self.n
        object.__setattr__(self, "input", inp)
        object.__setattr__(self, "output", out)
        validate_circuit(self)

    @property
    def measured(self):
        return [i for i, ch in enumerate(self.output) if ch != "-"]

    @property
    def k(self) -> int:
        return sum(isinstance(g, ControlledPhase) for g in self.gates)

    @property
    def full_output(self) -> bool:
        return "-" not in self.output


def validate_circuit(c: Circuit):
    if c.n < 1:
        raise DimensionError("circuit needs at least one qubit")
    if len(c.input) != c.n or set(c.input) - set("01"):
        raise ParseError(f"input must be a 0/1 string of length {c.n}")
    if len(c.output) != c.n or set(c.output) - set("01-"):
        raise ParseError(f"output must be a 0/1/- string of length {c.n}")
    if _parity(c.input):
        raise ParityError("input bit string has odd parity")
    if _parity(c.output):
        raise ParityError("measured output bits have odd parity")
    for g in c.gates:
        check_gate(g, c.n)


def check_gate(g, n: int):
    if isinstance(g, (Matchgate, ControlledPhase)):
        if not 0 <= g.q < n - 1:
            raise QubitRangeError(f"two-qubit gate on ({g.q}, {g.q + 1}) outside {n} qubits")
    elif isinstance(g, Elementary):
        if not (0 <= g.j < 2 * n and 0 <= g.k < 2 * n):
            raise QubitRangeError(f"Majorana index out of range for {n} qubits")
    elif isinstance(g, PassiveGen):
        if g.beta.shape != (2 * n, 2 * n):
            raise DimensionError(f"passive generator must be {2 * n}x{2 * n}")
    elif isinstance(g, GeneralGen):
        if g.alpha.shape != (2 * n, 2 * n):
            raise DimensionError(f"general generator must be {2 * n}x{2 * n}")
    else:
        raise TypeError(f"unknown gate {g!r}")


# -------------------------------------------------------- matchgate algebra


def _local_majoranas():
    return [majorana_matrix(2, j) for j in range(4)]


def _block_log(u):
    t, z = sla.schur(u, output="complex")
    ang = np.angle(np.diag(t))
    return z, ang


def matchgate_to_generator(A, B):
    """Generator ``alpha`` (4x4) and unit ``phase`` with ``G(A, B) = phase * exp((1/4) sum alpha c c)``.

    The log is taken blockwise; when the principal branches of the two blocks
    disagree in trace by 2 pi the largest angle of ``A`` is moved by one turn,
    which keeps the log inside span{I, c_j c_k}.
    """
    A = np.asarray(A, dtype=complex)
    B = np.asarray(B, dtype=complex)
    g = matchgate_matrix(A, B)
    if np.abs(g.conj().T @ g - np.eye(4)).max() > MG_TOL:
        raise NotMatchgateError("matchgate is not unitary")
    za, aa = _block_log(A)
    zb, ab = _block_log(B)
    turns = int(np.round((aa.sum() - ab.sum()) / (2 * np.pi)))
    if turns:
        i = int(np.argmax(aa)) if turns > 0 else int(np.argmin(aa))
        aa = aa.copy()
        aa[i] -= 2 * np.pi * turns
    la = (za * (1j * aa)) @ za.conj().T
    lb = (zb * (1j * ab)) @ zb.conj().T
    log = np.zeros((4, 4), dtype=complex)
    log[np.ix_([0, 3], [0, 3])] = la
    log[np.ix_([1, 2], [1, 2])] = lb
    phase_angle = np.trace(log).imag / 4
    rest = log - 1j * phase_angle * np.eye(4)
    cs = _local_majoranas()
    alpha = np.zeros((4, 4))
    recon = np.zeros((4, 4), dtype=complex)
    for j in range(4):
        for k in range(j + 1, 4):
            op = cs[j] @ cs[k]
            h = np.trace(op.conj().T @ rest) / 4
            alpha[j, k] = 2 * h.real
            alpha[k, j] = -2 * h.real
            recon += h.real * op
    if np.abs(recon - rest).max() > MG_TOL:
        raise NotMatchgateError("gate is not generated by quadratic Majorana terms")
    return alpha, complex(np.exp(1j * phase_angle))


def embed_local(alpha4, q: int, n: int) -> np.ndarray:
    """Place a two-qubit generator on Majoranas ``2q..2q+3`` of an n-qubit register."""
    out = np.zeros((2 * n, 2 * n))
    out[2 * q : 2 * q + 4, 2 * q : 2 * q + 4] = alpha4
    return out


def gate_generator(g, n: int) -> np.ndarray:
    """Generator of an FLO gate on ``n`` qubits (the matchgate phase is dropped)."""
    if isinstance(g, Matchgate):
        return embed_local(matchgate_to_generator(g.A, g.B)[0], g.q, n)
    if isinstance(g, Elementary):
        out = np.zeros((2 * n, 2 * n))
        out[g.j, g.k] += 2 * g.mu
        out[g.k, g.j] -= 2 * g.mu
        return out
    if isinstance(g, PassiveGen):
        return g.beta
    if isinstance(g, GeneralGen):
        return g.alpha
    raise TypeError(f"{type(g).__name__} is not an FLO gate")


def gate_phase(g) -> complex:
    """Global phase separating a gate from ``exp`` of its generator."""
    if isinstance(g, Matchgate):
        return matchgate_to_generator(g.A, g.B)[1]
    return 1.0 + 0j


HADAMARD = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
PAULI_Z = np.diag([1.0, -1.0])
PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]])


def fswap(q: int) -> Matchgate:
    """Fermionic swap ``G(Z, X)``; acts as SWAP when either side has even parity."""
    return Matchgate(q, PAULI_Z, PAULI_X)


# ------------------------------------------------------------------ parsing


def _tokens(line):
    return line.split("#", 1)[0].split()


def _col(line, tok_index):
    # 1-based column of the tok_index-th token
    pos = 0
    for i, tok in enumerate(line.split("#", 1)[0].split()):
        pos = line.index(tok, pos)
        if i == tok_index:
            return pos + 1
        pos += len(tok)
    return 1


def read_matrix_file(path) -> np.ndarray:
    """Real matrix file: dimension first, then row-major entries."""
    try:
        with open(path, encoding="utf-8") as fh:
            vals = fh.read().split()
    except OSError as exc:
        raise ParseError(f"cannot read matrix file {path}: {exc}") from None
    try:
        d = int(vals[0])
        data = np.array([float(v) for v in vals[1:]])
    except (IndexError, ValueError):
        raise ParseError(f"malformed matrix file {path}") from None
    if data.size != d * d:
        raise ShapeError(f"matrix file {path} has {data.size} entries, expected {d * d}")
    return data.reshape(d, d)


def write_matrix_file(path, mat):
    mat = np.asarray(mat, dtype=float)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{mat.shape[0]}\n")
        for row in mat:
            fh.write(" ".join(f"{v:.17g}" for v in row) + "\n")


def parse_circuit(text: str, base_dir: str | None = None) -> Circuit:
    """Parse the line-oriented circuit format; errors carry line and column."""
    n = None
    inp = out = None
    gates = []
    base_dir = base_dir or "."
    for lineno, line in enumerate(text.splitlines(), start=1):
        toks = _tokens(line)
        if not toks:
            continue
        kw, args = toks[0], toks[1:]

        def fail(msg, tok=0, cls=ParseError):
            raise cls(msg, line=lineno, column=_col(line, tok))

        def num(i, conv=float):
            if i >= len(args):
                fail(f"'{kw}' expects more arguments", len(toks) - 1)
            try:
                return conv(args[i])
            except ValueError:
                fail(f"bad number {args[i]!r}", i + 1)

        def nargs(count):
            if len(args) != count:
                fail(f"'{kw}' expects {count} arguments, got {len(args)}")

        if kw == "qubits":
            nargs(1)
            if n is not None:
                fail("qubit count given twice")
            n = num(0, int)
            if n < 1:
                fail("qubit count must be positive", 1, DimensionError)
            continue
        if n is None:
            fail("'qubits N' must come first")
        try:
            if kw in ("input", "output"):
                nargs(1)
                bits = args[0]
                allowed = set("01") if kw == "input" else set("01-")
                if len(bits) != n or set(bits) - allowed:
                    fail(f"{kw} must have {n} characters from {''.join(sorted(allowed))}", 1)
                if _parity(bits):
                    fail(f"{kw} bit string has odd parity", 1, ParityError)
                if kw == "input":
                    inp = bits
                else:
                    out = bits
            elif kw == "mg":
                nargs(17)
                q = num(0, int)
                v = [num(i) for i in range(1, 17)]
                z = np.array(v[0::2]) + 1j * np.array(v[1::2])
                g = Matchgate(q, z[:4].reshape(2, 2), z[4:].reshape(2, 2))
                if not 0 <= q < n - 1:
                    fail(f"qubit pair ({q}, {q + 1}) outside {n} qubits", 1, QubitRangeError)
                gates.append(g)
            elif kw == "elem":
                nargs(3)
                mu, j, k = num(0), num(1, int), num(2, int)
                for t, idx in ((2, j), (3, k)):
                    if not 0 <= idx < 2 * n:
                        fail(f"Majorana index {idx} out of range", t, QubitRangeError)
                if j == k:
                    fail("elementary gate needs distinct indices", 3)
                gates.append(Elementary(mu, j, k))
            elif kw in ("passive", "general"):
                nargs(1)
                path = args[0] if os.path.isabs(args[0]) else os.path.join(base_dir, args[0])
                mat = read_matrix_file(path)
                if mat.shape != (2 * n, 2 * n):
                    fail(f"matrix must be {2 * n}x{2 * n}", 1, DimensionError)
                g = PassiveGen(mat, args[0]) if kw == "passive" else GeneralGen(mat, args[0])
                gates.append(g)
            elif kw == "cphase":
                nargs(2)
                theta, q = num(0), num(1, int)
                if not 0 <= q < n - 1:
                    fail(f"qubit pair ({q}, {q + 1}) outside {n} qubits", 2, QubitRangeError)
                gates.append(ControlledPhase(theta, q))
            else:
                fail(f"unknown directive {kw!r}")
        except (NotMatchgateError, NotPassiveError, ShapeError) as exc:
            if exc.line is None:
                raise type(exc)(str(exc), line=lineno, column=1) from None
            raise
    if n is None:
        raise ParseError("missing 'qubits N' directive", line=1, column=1)
    return Circuit(n, gates, inp or "0" * n, out or "0" * n)


def load_circuit(path) -> Circuit:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ParseError(f"cannot read circuit file {path}: {exc}") from None
    return parse_circuit(text, base_dir=os.path.dirname(os.path.abspath(path)))


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def print_circuit(c: Circuit, matrix_dir: str | None = None) -> str:
    """Serialize ``c``.  Generator matrices are written next to ``matrix_dir``
    (default: the current directory) as ``gate_<index>.txt`` unless the gate
    remembers its source file name."""
    lines = [f"qubits {c.n}", f"input {c.input}", f"output {c.output}"]
    for idx, g in enumerate(c.gates):
        if isinstance(g, Matchgate):
            vals = []
            for z in list(g.A.ravel()) + list(g.B.ravel()):
                vals += [_fmt(z.real), _fmt(z.imag)]
            lines.append(f"mg {g.q} " + " ".join(vals))
        elif isinstance(g, Elementary):
            lines.append(f"elem {_fmt(g.mu)} {g.j} {g.k}")
        elif isinstance(g, ControlledPhase):
            lines.append(f"cphase {_fmt(g.theta)} {g.q}")
        else:
            kw = "passive" if isinstance(g, PassiveGen) else "general"
            mat = g.beta if isinstance(g, PassiveGen) else g.alpha
            name = g.source or f"gate_{idx}.txt"
            path = name if os.path.isabs(name) else os.path.join(matrix_dir or ".", name)
            write_matrix_file(path, mat)
            lines.append(f"{kw} {name}")
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------- gadgets


@dataclass(frozen=True)
class GadgetizedProgram:
    """FLO program on ``total_qubits`` whose vacuum evolution, projected onto
    ``<0^n|`` on the data qubits and onto magic states on each layout block,
    reproduces the circuit amplitude up to the factor ``4^scale`` and ``phase``.

    ``flo_gates`` are (generator-level) FLO gates; matchgate phases are
    collected in ``phase``.  ``projection_layout[j]`` is the first qubit of the
    block projected onto ``|M_{magic_angles[j]}>``.  The data qubits occupy
    ``0..n-1`` at the end; ``output_layer`` says whether the output string has
    been folded into the gates.
    """

    n: int
    total_qubits: int
    flo_gates: tuple
    magic_angles: tuple
    projection_layout: tuple
    scale: int
    phase: complex = 1.0 + 0j
    output_layer: bool = True

    @property
    def k(self) -> int:
        return len(self.magic_angles)


def _pair_products(z):
    # c_{z0} c_{z1} ... as elementary gates exp((pi/2) c_a c_b), rightmost pair first
    out = []
    for t in range(len(z) - 2, -1, -2):
        out.append(Elementary(np.pi / 2, z[t], z[t + 1]))
    return out


class _Router:
    """Tracks which label sits at each physical position while emitting fSWAPs."""

    def __init__(self, labels):
        self.layout = list(labels)
        self.gates = []

    def pos(self, label):
        return self.layout.index(label)

    def move(self, label, target):
        p = self.pos(label)
        while p < target:
            self.gates.append(fswap(p))
            self.layout[p], self.layout[p + 1] = self.layout[p + 1], self.layout[p]
            p += 1
        while p > target:
            self.gates.append(fswap(p - 1))
            self.layout[p], self.layout[p - 1] = self.layout[p - 1], self.layout[p]
            p -= 1


def gadgetize(c: Circuit, output_layer: bool | None = None) -> GadgetizedProgram:
    """Replace every controlled phase by a reverse gadget.

    Each gadget gets four fresh ancillas ``(a1, a2, a3, a4)`` whose pairs
    ``(a1, a2)`` and ``(a3, a4)`` are turned into Bell pairs by ``G(H, H)`` at
    the start.  At the gadget the pairs are moved next to the targets to form
    ``a1 a2 t t+1 a3 a4``; afterwards ``a1`` and ``a4`` carry the target
    qubits and the block ``a2 t t+1 a3`` is moved to the end for the final
    projection onto ``|M_{-theta}>``.  All moves are fSWAP chains in which
    every qubit of a moved group crosses the same set of qubits; since each
    moved group is projected onto (or prepared in) an even-parity state, the
    fSWAP signs cancel.
    """
    n = c.n
    cps = [g for g in c.gates if isinstance(g, ControlledPhase)]
    k = len(cps)
    total = n + 4 * k
    if output_layer is None:
        output_layer = c.full_output
    data = [("d", i) for i in range(n)]
    anc = [("a", j, r) for j in range(k) for r in range(4)]
    router = _Router(data + anc)
    gates = []
    phase = 1.0 + 0j

    def emit(g):
        nonlocal phase
        phase *= gate_phase(g)
        gates.append(g)

    def flush_router():
        for g in router.gates:
            emit(g)
        router.gates.clear()

    hh = (HADAMARD, HADAMARD)
    for j in range(k):
        base = n + 4 * j
        emit(Matchgate(base, *hh))
        emit(Matchgate(base + 2, *hh))
    for g in _pair_products([2 * i for i, ch in enumerate(c.input) if ch == "1"]):
        emit(g)

    def lift(g):
        # data qubits sit at physical 0..n-1 between gadgets
        if isinstance(g, (PassiveGen, GeneralGen)):
            mat = np.zeros((2 * total, 2 * total))
            mat[: 2 * n, : 2 * n] = gate_generator(g, n)
            return (PassiveGen if isinstance(g, PassiveGen) else GeneralGen)(mat)
        return g

    angles, layout = [], []
    j = 0
    for g in c.gates:
        if not isinstance(g, ControlledPhase):
            emit(lift(g))
            continue
        t = g.q
        a1, a2, a3, a4 = (("a", j, r) for r in range(4))
        router.move(a1, t)
        router.move(a2, t + 1)
        router.move(a3, t + 4)
        router.move(a4, t + 5)
        # physical t..t+5 now hold a1 a2 d_t d_{t+1} a3 a4
        dt, dt1 = router.layout[t + 2], router.layout[t + 3]
        block = [router.layout[t + 1 + r] for r in range(4)]
        for r, lab in enumerate(reversed(block)):
            router.move(lab, total - 1 - r)
        flush_router()
        # carriers take over the data labels
        router.layout[router.pos(a1)] = dt
        router.layout[router.pos(a4)] = dt1
        for r, lab in enumerate(block):
            router.layout[router.pos(lab)] = ("m", j, r)
        angles.append(-g.theta)
        j += 1
    # the k-th block ends at the far right; earlier blocks were pushed left by later ones
    for jj in range(k):
        layout.append(router.pos(("m", jj, 0)))
    if output_layer:
        z = [2 * i for i, ch in enumerate(c.output) if ch == "1"]
        for g in _pair_products(z[::-1]):
            emit(g)
    return GadgetizedProgram(n, total, tuple(gates), tuple(angles), tuple(layout), k, phase, output_layer)


def program_generators(prog: GadgetizedProgram):
    """Generators of every gate in order (matchgate phases excluded)."""
    return [gate_generator(g, prog.total_qubits) for g in prog.flo_gates]
