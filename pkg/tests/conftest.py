import cmath
import math

import numpy as np
import pytest

from delayadmit.quasipoly import ModeParams


def halley_lambertw(x: complex, w0: complex, tol=1e-15, maxiter=100) -> complex:
    """Root of w e^w = x near ``w0`` by Halley's method (oracle, independent of scipy)."""
    w = complex(w0)
    for _ in range(maxiter):
        ew = cmath.exp(w)
        f = w * ew - x
        fp = ew * (w + 1)
        step = f / (fp - (w + 2) * f / (2 * w + 2))
        w -= step
        if abs(step) <= tol * (1 + abs(w)):
            return w
    raise RuntimeError("Halley iteration did not converge")


def boundary_lambda(arg: float, tau: float) -> complex:
    """Eigenvalue exactly on the stability boundary at the given argument."""
    return (abs(arg) - math.pi / 2) / tau * cmath.exp(1j * arg)


def random_member(rng: np.random.Generator, tau_range=(0.1, 5.0), fill=(0.02, 0.98)) -> ModeParams:
    """Random mode strictly inside the stability region."""
    tau = rng.uniform(*tau_range)
    arg = rng.uniform(math.pi / 2 + 1e-3, math.pi) * rng.choice([-1, 1])
    r = rng.uniform(*fill) * (abs(arg) - math.pi / 2) / tau
    return ModeParams(r * cmath.exp(1j * arg), tau)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def unit_mode():
    return ModeParams(-1.0, 1.0)


@pytest.fixture
def crossing_mode():
    # |lam| tau = |Arg lam| - pi/2 exactly
    return ModeParams(math.pi / 4 * cmath.exp(3j * math.pi / 4), 1.0)


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def record_criterion(number: int, title: str, ok: bool, detail: str) -> bool:
    line = f"criterion {number} {title}: {'PASS' if ok else 'FAIL'} ({detail})"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
