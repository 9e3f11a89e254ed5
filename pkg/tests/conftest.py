import numpy as np
import pytest

from dagrca.numerics import tensor as T


def central_diff(f, x, eps=1e-5):
    """Central finite-difference gradient of scalar ``f`` at array ``x``."""
    x = np.array(x, dtype=np.float64)
    g = np.zeros_like(x)
    flat = x.reshape(-1)
    gf = g.reshape(-1)
    for i in range(flat.size):
        old = flat[i]
        flat[i] = old + eps
        fp = f(x)
        flat[i] = old - eps
        fm = f(x)
        flat[i] = old
        gf[i] = (fp - fm) / (2 * eps)
    return g


def rel_err(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-8)


def tape_grad(build, *arrays):
    """Gradients of ``build(*tensors)`` w.r.t. each array via the tape."""
    leaves = [T.Tensor(np.array(a, dtype=np.float64), requires_grad=True) for a in arrays]
    with T.Tape() as tape:
        out = build(*leaves)
    grads = tape.backward(out)
    return [grads[t] for t in leaves]


def value_of(build, *arrays):
    return float(build(*[T.Tensor(a) for a in arrays]).value)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one summary line per acceptance criterion, printed after the run
ACCEPTANCE_LINES = {}


@pytest.fixture
def criterion():
    def record(number, passed, detail):
        ACCEPTANCE_LINES[number] = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"
        print(ACCEPTANCE_LINES[number])
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[number])
