import numpy as np
import pytest

from flosim import circuit as circ


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_antisym(d, rng, scale=1.0):
    a = rng.normal(size=(d, d)) * scale
    return (a - a.T) / np.sqrt(2)


def random_passive(d, rng, scale=1.0):
    from flosim.numerics import unitary_to_passive

    h = rng.normal(size=(d // 2, d // 2)) + 1j * rng.normal(size=(d // 2, d // 2))
    h = (h - h.conj().T) / 2 * scale
    g = unitary_to_passive(h)
    return (g - g.T) / 2


def random_unitary(n, rng):
    q, r = np.linalg.qr(rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_matchgate(q, rng):
    a, b = random_unitary(2, rng), random_unitary(2, rng)
    b = b * np.sqrt(np.linalg.det(a) / np.linalg.det(b))
    return circ.Matchgate(q, a, b)


def random_flo_layer(n, rng, count=3):
    return [random_matchgate(int(rng.integers(n - 1)), rng) for _ in range(count)]


ACCEPTANCE_LINES = {}


def record_criterion(number: int, passed: bool, detail: str):
    line = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
