import numpy as np
import pytest

ACCEPTANCE = {}


def record(criterion, passed, detail):
    ACCEPTANCE[criterion] = (passed, detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: int(k.split(".")[0])):
        passed, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {key}: {detail}")


def random_passive(rng, n, scale=50.0):
    """Random reciprocal passive coupling matrix: PSD real part, symmetric reactance."""
    a = rng.normal(size=(n, n))
    r = a @ a.T / n * scale * 0.3 + np.eye(n) * scale * rng.uniform(0.5, 1.5)
    x = rng.normal(scale=scale * 0.5, size=(n, n))
    return r + 1j * (x + x.T) / 2


@pytest.fixture
def rng():
    return np.random.default_rng(20260101)
