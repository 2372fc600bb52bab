"""Born-rule probability estimation for FLO circuits with controlled phases.

Both estimators gadgetize the circuit, evolve the vacuum once with the
phase-exact Gaussian engine and then sample branch strings ``y`` of the
magic-state decomposition:

* all qubits measured: ``p_hat = |(1/s) sum_j sqrt(xi*) sgn(t(y_j)) alpha_{y_j}|^2``;
* measured prefix only: the same average is kept as a sum of Gaussian vectors
  and its squared norm is estimated with random FLO basis states and a
  median of means.

Amplitudes depend on ``y`` only (and norm samples on the drawn permutation and
bit string only), so each distinct value is computed once and reused; the
estimate is identical to evaluating every sample separately.
"""
from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import circuit as circ
from . import gaussian_state as gs
from . import magic
from .errors import InternalError, ParamError, ValidationError
from .numerics import omega as omega_matrix

ALPHA_TOL = 1e-6


@dataclass(frozen=True)
class SamplePlan:
    """Sample counts for a target accuracy ``epsilon`` with failure rate ``delta``.

    ``s`` branch samples; ``l`` norm samples in each of ``L`` groups (partial
    mode only, otherwise both are 0).
    """

    s: int
    l: int
    L: int
    epsilon: float
    delta: float
    p_assumed: float
    xi_star: float
    mode: str = "all"
    n_prime: int = 0


def _check_unit(name, v):
    if not (isinstance(v, (int, float)) and 0 < v < 1):
        raise ParamError(f"{name} must lie in (0, 1), got {v!r}")


def branch_sample_count(xi, p, eps, log_arg) -> int:
    """Smallest s with ``s >= 2 (sqrt(xi)+sqrt(p))^2 / (sqrt(p+eps)-sqrt(p))^2 * ln(log_arg)``."""
    gap = math.sqrt(p + eps) - math.sqrt(p)
    return int(math.ceil(2 * (math.sqrt(xi) + math.sqrt(p)) ** 2 / gap**2 * math.log(log_arg)))


def plan_samples(angles, epsilon, delta, mode="all", p_assumed=1.0, n_prime=0) -> SamplePlan:
    """Plan sample counts.

    ``mode="all"`` uses accuracy ``epsilon`` for the branch average.
    ``mode="partial"`` splits ``epsilon`` and ``delta`` evenly between the
    branch average and the norm estimate, whose median of means uses
    ``L = ceil(ln(2/delta))`` groups of ``l = ceil(32 e^2 sqrt(n') / epsilon^2)``.
    """
    _check_unit("epsilon", epsilon)
    _check_unit("delta", delta)
    if not 0 < p_assumed <= 1:
        raise ParamError(f"p_assumed must lie in (0, 1], got {p_assumed!r}")
    if mode not in ("all", "partial"):
        raise ParamError(f"mode must be 'all' or 'partial', got {mode!r}")
    xi = magic.xi_star(angles)
    if mode == "all":
        s = branch_sample_count(xi, p_assumed, epsilon, 2 * math.e**2 / delta)
        return SamplePlan(s, 0, 0, epsilon, delta, p_assumed, xi, mode, 0)
    if n_prime < 1:
        raise ParamError("partial mode needs at least one unmeasured qubit")
    s = branch_sample_count(xi, p_assumed, epsilon / 2, 4 * math.e / delta)
    L = int(math.ceil(math.log(2 / delta)))
    l = int(math.ceil(32 * math.e**2 * math.sqrt(n_prime) / epsilon**2))
    return SamplePlan(s, l, L, epsilon, delta, p_assumed, xi, mode, n_prime)


@dataclass
class EstimateResult:
    """Outcome of one estimator run.

    ``p_hat`` is clamped to [0, 1]; ``p_raw`` keeps the unclamped value.
    """

    p_hat: float
    p_raw: float
    s_used: int
    l_used: int
    L_used: int
    xi_star: float
    max_abs_alpha: float
    seed: int
    wall_time: float
    mode: str = "all"
    epsilon: float = 0.0
    delta: float = 0.0
    p_assumed: float = 1.0
    k: int = 0
    n_prime: int = 0
    constants: dict = field(default_factory=dict)

    def to_dict(self, timing: bool = True) -> dict:
        d = asdict(self)
        if not timing:
            d.pop("wall_time")
        return d


# ------------------------------------------------------------------ engine


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("FLOSIM_THREADS", "1")))
    except ValueError:
        return 1


def _map(fn, items):
    items = list(items)
    workers = _threads()
    if workers == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _padded(prog: circ.GadgetizedProgram) -> int:
    return prog.total_qubits + (prog.total_qubits % 2)


def evolve_program(prog: circ.GadgetizedProgram) -> gs.GaussianDesc:
    """``V~|0>`` on the program register (one idle qubit appended when odd)."""
    m = _padded(prog)
    psi = gs.vacuum(m)
    for g in prog.flo_gates:
        if isinstance(g, circ.Elementary):
            psi = gs.apply_elementary(psi, g.mu, g.j, g.k)
            continue
        gen = circ.gate_generator(g, prog.total_qubits)
        if m != prog.total_qubits:
            big = np.zeros((2 * m, 2 * m))
            big[: gen.shape[0], : gen.shape[0]] = gen
            gen = big
        if isinstance(g, circ.PassiveGen):
            psi = gs.apply_passive_generator(psi, gen)
        else:
            psi = gs.apply_flo(psi, gen)
    return gs.GaussianDesc(psi.m, psi.omega * prog.phase, psi.R, psi.a, psi.lam)


def branch_bra(prog: circ.GadgetizedProgram, y) -> gs.GaussianDesc:
    """``|0^n> (x) |y~, angles>`` on the program register."""
    bra = gs.vacuum(_padded(prog))
    for theta, b, off in zip(prog.magic_angles, y, prog.projection_layout):
        bra = magic.apply_branch(bra, theta, "B" if b else "A", off)
    return bra


def alpha_y(prog: circ.GadgetizedProgram, psi: gs.GaussianDesc, y) -> complex:
    """``4^k i^{-|y|} <0^n, y~|psi>``; raises InternalError if ``|alpha| > 1 + 1e-6``."""
    y = tuple(int(b) for b in y)
    val = 4**prog.k * (1j) ** (-sum(y)) * gs.gaussian_overlap(branch_bra(prog, y), psi)
    if abs(val) > 1 + ALPHA_TOL:
        raise InternalError(f"|alpha_y| = {abs(val):.12g} exceeds 1 for y = {y}")
    return complex(val)


def _draw_branches(angles, s, rng):
    probs = magic.branch_probabilities(angles)
    draws = rng.random((s, len(probs))) < probs
    ys, counts = np.unique(draws.astype(np.int8), axis=0, return_counts=True)
    return [tuple(int(b) for b in row) for row in ys], counts


def _check_circuit(c: circ.Circuit):
    if not isinstance(c, circ.Circuit):
        raise ValidationError("expected a Circuit")


def estimate_all_qubits(c: circ.Circuit, epsilon, delta, rng=None, seed=None, p_assumed=1.0) -> EstimateResult:
    """Estimate ``|<b|U|a>|^2`` for a fully specified output string."""
    t0 = time.perf_counter()
    _check_circuit(c)
    if not c.full_output:
        raise ValidationError("estimate_all_qubits needs a fully specified output string")
    seed, rng = _seeded(seed, rng)
    prog = circ.gadgetize(c, output_layer=True)
    angles = magic.MagicAngles(prog.magic_angles)
    plan = plan_samples(angles, epsilon, delta, "all", p_assumed)
    psi = evolve_program(prog)
    if prog.k == 0:
        # a single deterministic term
        a = alpha_y(prog, psi, ())
        p = abs(a) ** 2
        return EstimateResult(
            min(max(p, 0.0), 1.0), p, 1, 0, 0, 1.0, abs(a), seed, time.perf_counter() - t0,
            "all", epsilon, delta, p_assumed, 0, 0, {"s_formula": plan.s},
        )
    ys, counts = _draw_branches(angles, plan.s, rng)
    alphas = _map(lambda y: alpha_y(prog, psi, y), ys)
    root = math.sqrt(plan.xi_star)
    mean = 0j
    for y, cnt, a in zip(ys, counts, alphas):
        w, _ = magic.branch_coefficient(angles, y)
        mean += cnt * root * np.sign(w) * a
    mean /= plan.s
    p = abs(mean) ** 2
    return EstimateResult(
        min(max(p, 0.0), 1.0), p, plan.s, 0, 0, plan.xi_star, max(abs(a) for a in alphas),
        seed, time.perf_counter() - t0, "all", epsilon, delta, p_assumed, prog.k, 0,
        {"log_argument": 2 * math.e**2 / delta},
    )


# ------------------------------------------------------------ norm estimation


def random_even_permutation(size: int, rng) -> np.ndarray:
    """Uniformly random even permutation of ``range(size)`` (an odd draw is
    composed with the transposition of the first two entries)."""
    perm = rng.permutation(size)
    if _perm_parity(perm):
        perm[[0, 1]] = perm[[1, 0]]
    return perm


def _perm_parity(perm) -> int:
    perm = list(perm)
    seen = [False] * len(perm)
    par = 0
    for i in range(len(perm)):
        if not seen[i]:
            j, cyc = i, 0
            while not seen[j]:
                seen[j] = True
                j = perm[j]
                cyc += 1
            par ^= (cyc - 1) & 1
    return par


def permutation_matrix(perm, dim=None, offset=0) -> np.ndarray:
    """Rotation sending ``c_{offset+i}`` to ``c_{offset+perm[i]}`` (identity elsewhere)."""
    dim = dim or len(perm)
    q = np.eye(dim)
    idx = offset + np.arange(len(perm))
    q[np.ix_(idx, idx)] = 0
    q[offset + np.asarray(perm), idx] = 1.0
    return q


def random_flo_basis_bra(n_unmeasured: int, rng, perm=None, x=None) -> gs.GaussianDesc:
    """``U|x>`` with ``phi(U)`` a random even permutation and ``x`` a random even string.

    ``U`` is the Gaussian unitary whose generator is the principal logarithm of
    the permutation matrix, so the phase of the result is fixed.  An odd
    qubit count is padded with one idle qubit at the end.
    """
    n = n_unmeasured
    m = n + n % 2
    if perm is None:
        perm = random_even_permutation(2 * n, rng)
    if x is None:
        x = rng.integers(0, 2, n)
        if x.sum() % 2:
            x[rng.integers(n)] ^= 1
    bits = list(x) + [0] * (m - n)
    base = gs.basis_state_desc(bits)
    from .numerics import so_log

    return gs.apply_flo(base, so_log(permutation_matrix(perm, 2 * m)))


def _covariance_of_bits(bits):
    d = 2 * len(bits)
    mcov = omega_matrix(d)
    for i, b in enumerate(bits):
        if b:
            mcov[2 * i, 2 * i + 1], mcov[2 * i + 1, 2 * i] = -1.0, 1.0
    return mcov


def _norm_bra(m, prefix_bits, w, n_prime, perm, x):
    """``|b> (x) U|x> (x) |0...>`` with an arbitrary global phase (phase drops out of |.|^2)."""
    bits = list(prefix_bits) + list(x) + [0] * (m - w - n_prime)
    q = permutation_matrix(perm, 2 * m, 2 * w)
    return gs.from_covariance(q @ _covariance_of_bits(bits) @ q.T)


def norm_samples(vectors, m, prefix_bits, n_prime, count, rng):
    """Draw ``count`` values of ``X = 2^{n'} |<theta|Psi>|^2``.

    ``Psi = sum_i c_i |v_i>`` is given as ``[(c_i, desc_i)]``; ``theta`` is
    ``|b>`` on the measured prefix, ``U|x>`` on the next ``n'`` qubits and
    vacuum after.  ``x`` is uniform over all strings; odd ones give X = 0.
    """
    w = len(prefix_bits)
    perms = np.array([random_even_permutation(2 * n_prime, rng) for _ in range(count)])
    xs = rng.integers(0, 2, (count, n_prime))
    keys = np.concatenate([perms, xs], axis=1)
    uniq, inv = np.unique(keys, axis=0, return_inverse=True)
    inv = np.asarray(inv).reshape(-1)

    def value(row):
        perm, x = row[: 2 * n_prime], row[2 * n_prime :]
        if x.sum() % 2:
            return 0.0
        bra = _norm_bra(m, prefix_bits, w, n_prime, perm, x)
        amp = sum(c * gs.gaussian_overlap(bra, v) for c, v in vectors)
        return 2.0**n_prime * abs(amp) ** 2

    vals = np.array(_map(value, list(uniq)))
    return vals[inv]


def median_of_means(samples, groups: int) -> float:
    """Median over ``groups`` consecutive equal-size group means."""
    samples = np.asarray(samples, dtype=float)
    size = len(samples) // groups
    means = samples[: size * groups].reshape(groups, size).mean(axis=1)
    return float(np.median(means))


def estimate_partial(c: circ.Circuit, epsilon, delta, rng=None, seed=None, p_assumed=1.0) -> EstimateResult:
    """Estimate the probability of a measured prefix ``b`` (remaining qubits unmeasured)."""
    t0 = time.perf_counter()
    _check_circuit(c)
    meas = c.measured
    w = len(meas)
    if meas != list(range(w)):
        raise ValidationError("partial mode needs the measured qubits to form a prefix")
    if w >= c.n:
        raise ValidationError("partial mode needs at least one unmeasured qubit")
    seed, rng = _seeded(seed, rng)
    n_prime = c.n - w
    prog = circ.gadgetize(c, output_layer=False)
    angles = magic.MagicAngles(prog.magic_angles)
    plan = plan_samples(angles, epsilon, delta, "partial", p_assumed, n_prime)
    psi = evolve_program(prog)
    for i, ch in enumerate(c.output[:w]):
        psi = gs.apply_projector_one(psi, i) if ch == "1" else gs.apply_projector_zero(psi, i)
    if prog.k == 0:
        ys, counts, s = [()], np.array([1]), 1
    else:
        ys, counts = _draw_branches(angles, plan.s, rng)
        s = plan.s
    root = math.sqrt(plan.xi_star)
    vectors, max_alpha = [], 0.0
    for y, cnt in zip(ys, counts):
        wgt, _ = magic.branch_coefficient(angles, y)
        coef = cnt / s * root * (np.sign(wgt) if prog.k else 1.0) * 4**prog.k * (1j) ** (-sum(y))
        # <theta (x) y~| psi_b> = <theta (x) 0| W_y^dag psi_b>
        v = psi
        for theta, b, off in reversed(list(zip(prog.magic_angles, y, prog.projection_layout))):
            v = magic.apply_branch_adjoint(v, theta, "B" if b else "A", off)
        for off in prog.projection_layout:
            for q in range(off, off + 4):
                v = gs.apply_projector_zero(v, q)
        vectors.append((coef, v))
        # 4^k ||v|| bounds every amplitude of the branch, so it is the partial analogue of |alpha_y|
        max_alpha = max(max_alpha, 4**prog.k * v.norm)
    if max_alpha > 1 + ALPHA_TOL:
        raise InternalError(f"|alpha_y| = {max_alpha:.12g} exceeds 1")
    prefix = [int(ch) for ch in c.output[:w]]
    xs = norm_samples(vectors, psi.m, prefix, n_prime, plan.l * plan.L, rng)
    p = median_of_means(xs, plan.L)
    return EstimateResult(
        min(max(p, 0.0), 1.0), p, s, plan.l, plan.L, plan.xi_star, max_alpha, seed,
        time.perf_counter() - t0, "partial", epsilon, delta, p_assumed, prog.k, n_prime,
        {"eta": math.e, "branch_log_argument": 4 * math.e / delta, "norm_samples": plan.l * plan.L},
    )


def _seeded(seed, rng):
    if rng is not None:
        return (int(seed) if seed is not None else -1), rng
    if seed is None:
        seed = int(np.random.SeedSequence().entropy % 2**63)
    return int(seed), np.random.default_rng(seed)


def estimate(c: circ.Circuit, epsilon, delta, seed=None, mode=None, p_assumed=1.0, two_stage=False):
    """Dispatch to the all-qubit or partial estimator.

    With ``two_stage`` a coarse pass (epsilon 1/4, delta/2) bounds p first and
    the main pass is planned with ``p_assumed = min(1, p_coarse + 1/4)`` and
    ``delta/2``.
    """
    mode = mode or ("all" if c.full_output else "partial")
    fn = estimate_all_qubits if mode == "all" else estimate_partial
    seed, rng = _seeded(seed, None)
    if two_stage:
        coarse = fn(c, 0.25, delta / 2, rng=rng, seed=seed, p_assumed=1.0)
        p_assumed = min(1.0, coarse.p_raw + 0.25)
        delta = delta / 2
    return fn(c, epsilon, delta, rng=rng, seed=seed, p_assumed=p_assumed)
