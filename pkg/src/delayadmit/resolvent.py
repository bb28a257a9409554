"""Per-mode resolvent blocks of the delay generator.

For one mode the generator acts on pairs ``(x, f)`` with ``f`` a history
segment on ``[-tau, 0]``. Only the pieces needed by the admissibility
estimate are exposed: the scalar block ``1 / P(s)``, the history resolvent
``R(s, A0)`` and the product of the full resolvent with the input operator
``(b, 0)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson

from .errors import DomainError, PoleError
from .quasipoly import ModeParams, eval_charfun

__all__ = [
    "HistoryGrid",
    "resolvent_psi",
    "resolvent_a0_apply",
    "resolvent_block_apply",
    "trace_norm_sq_R21",
]

# relative size of |P(s)| below which s is treated as a root
_POLE_RTOL = 64 * np.finfo(float).eps


@dataclass(frozen=True)
class HistoryGrid:
    """Samples of a function on ``[-tau, 0]`` at uniform nodes (both ends included)."""

    samples: np.ndarray
    tau: float

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=complex)
        if samples.ndim != 1 or samples.size < 2:
            raise DomainError("a history grid needs at least two nodes")
        if not (math.isfinite(self.tau) and self.tau > 0):
            raise DomainError(f"tau must be > 0, got {self.tau!r}")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "tau", float(self.tau))

    @property
    def step(self) -> float:
        return self.tau / (self.samples.size - 1)

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(-self.tau, 0.0, self.samples.size)

    @classmethod
    def from_function(cls, func, tau: float, n: int) -> "HistoryGrid":
        """Sample ``func`` on ``n`` intervals of ``[-tau, 0]``."""
        nodes = np.linspace(-tau, 0.0, n + 1)
        return cls(np.asarray(func(nodes), dtype=complex) * np.ones(n + 1), tau)

    @classmethod
    def zeros(cls, tau: float, n: int) -> "HistoryGrid":
        return cls(np.zeros(n + 1, dtype=complex), tau)

    def __call__(self, t):
        """Piecewise-linear interpolation at points of ``[-tau, 0]``."""
        x = self.nodes
        return np.interp(t, x, self.samples.real) + 1j * np.interp(t, x, self.samples.imag)


def _checked_inverse(mode: ModeParams, s: complex) -> complex:
    p = eval_charfun(mode, s)
    size = abs(s) + abs(mode.lam * np.exp(-s * mode.tau))
    if abs(p) <= _POLE_RTOL * size or abs(p) < 1e-300:
        raise PoleError(f"s = {s!r} is a characteristic root of lambda = {mode.lam!r}, tau = {mode.tau!r}")
    return 1.0 / p


def resolvent_psi(mode: ModeParams, s: complex) -> complex:
    """Scalar block ``1 / (s - lam exp(-s tau))``."""
    return complex(_checked_inverse(mode, complex(s)))


def resolvent_a0_apply(s: complex, f: HistoryGrid, r: float) -> complex:
    """``int_r^0 exp(s (r - t)) f(t) dt`` by composite Simpson on the grid.

    The partial cell containing ``r`` is integrated with Simpson's rule using
    linearly interpolated values of ``f``.
    """
    tau, h = f.tau, f.step
    if not (-tau * (1 + 1e-12) <= r <= 0.0):
        raise DomainError(f"r must lie in [-tau, 0], got {r!r}")
    if r == 0.0:
        return 0j
    r = max(r, -tau)
    x = f.nodes
    kernel = lambda t: np.exp(s * (r - t))  # noqa: E731
    # first node at or right of r; a node within rounding of r counts as r
    j = int(np.searchsorted(x, r - 1e-12 * h, side="left"))
    total = 0j
    if j < x.size:
        head = x[j] - r
        if head > 1e-12 * h:
            t3 = np.array([r, 0.5 * (r + x[j]), x[j]])
            total += head / 6 * np.dot([1, 4, 1], kernel(t3) * f(t3))
        if x.size - j >= 2:
            total += simpson(kernel(x[j:]) * f.samples[j:], x=x[j:])
    return complex(total)


def resolvent_block_apply(mode: ModeParams, b: complex, s: complex, n: int = 64):
    """Resolvent times ``(b, 0)``: ``(b / P(s), grid of b exp(s sigma) / P(s))``."""
    scal = complex(b) * resolvent_psi(mode, s)
    sigma = np.linspace(-mode.tau, 0.0, n + 1)
    return scal, HistoryGrid(scal * np.exp(s * sigma), mode.tau)


def trace_norm_sq_R21(mode: ModeParams, omega: float) -> float:
    """Squared L2(-tau, 0) norm of the boundary trace ``exp(i omega t) / P(i omega)``."""
    inv = _checked_inverse(mode, 1j * float(omega))
    return mode.tau * abs(inv) ** 2
