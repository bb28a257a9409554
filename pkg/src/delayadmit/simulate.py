"""Method-of-steps integration of one delayed mode.

Solves ``z'(t) = lam z(t - tau) + b u(t)`` with ``z(0) = x0`` and history
``z(s) = f(s)`` on ``[-tau, 0)``. The grid is aligned to the delay
(``dt = tau / n``), so every interval ``[j tau, (j + 1) tau]`` is one block of
``n`` steps whose delayed term is the previous block. Within a block the
right-hand side does not depend on the unknown, and the classical RK4 stages
reduce to ``k1 = g(t)``, ``k2 = k3 = g(t + dt/2)``, ``k4 = g(t + dt)``; the
midpoint values of the delayed block come from four-point cubic
interpolation. This lets each block be advanced in one vectorized pass.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, DomainError
from .quasipoly import ModeParams, char_roots, in_lambda_region
from .resolvent import HistoryGrid

__all__ = [
    "InputSignal",
    "Trajectory",
    "StateNorm",
    "step_integrate",
    "fundamental_solution",
    "fundamental_energy",
    "state_norm",
    "forcing_norm_empirical",
    "band_limited_input",
    "DEFAULT_DECAY_TOL",
]

DEFAULT_DECAY_TOL = 1e-8
_MIN_STEPS_PER_DELAY = 16


@dataclass(frozen=True)
class InputSignal:
    """Input samples on ``[0, support_end]`` at spacing ``step``; zero elsewhere."""

    samples: np.ndarray
    step: float

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=complex)
        if samples.ndim != 1 or samples.size < 1:
            raise DomainError("input needs at least one sample")
        if not self.step > 0:
            raise DomainError(f"step must be > 0, got {self.step!r}")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "step", float(self.step))

    @property
    def support_end(self) -> float:
        return self.step * (self.samples.size - 1)

    @property
    def norm_sq(self) -> float:
        """Trapezoid rule for ``int |u|^2``."""
        a = np.abs(self.samples) ** 2
        if a.size < 2:
            return 0.0
        return float(self.step * (a.sum() - 0.5 * (a[0] + a[-1])))

    @classmethod
    def zero(cls, step: float = 1.0) -> "InputSignal":
        return cls(np.zeros(1, dtype=complex), step)

    @classmethod
    def from_function(cls, func, support_end: float, step: float) -> "InputSignal":
        n = max(int(round(support_end / step)), 1)
        t = np.linspace(0.0, n * step, n + 1)
        return cls(np.asarray(func(t), dtype=complex) * np.ones(n + 1), step)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        x = self.step * np.arange(self.samples.size)
        inside = (t >= 0) & (t <= self.support_end * (1 + 1e-12))
        re = np.interp(t, x, self.samples.real)
        im = np.interp(t, x, self.samples.imag)
        return np.where(inside, re + 1j * im, 0j)


@dataclass(frozen=True)
class StateNorm:
    t: float
    value_sq: float
    off_node: bool = False


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    z: np.ndarray
    prehistory: HistoryGrid
    mode: ModeParams
    b: complex
    dt: float

    @property
    def steps_per_delay(self) -> int:
        return self.prehistory.samples.size - 1

    def state_norms(self) -> np.ndarray:
        """``|z(t)|^2 + int_{-tau}^0 |z(t + s)|^2 ds`` at every node (trapezoid rule).

        The window integral is split at ``t = 0`` so a jump between the history
        end and ``x0`` is handled on both sides.
        """
        n, h = self.steps_per_delay, self.dt
        za = np.abs(self.z) ** 2
        ha = np.abs(self.prehistory.samples) ** 2
        zc = np.concatenate([[0.0], np.cumsum(0.5 * h * (za[1:] + za[:-1]))])
        hc = np.concatenate([[0.0], np.cumsum(0.5 * h * (ha[1:] + ha[:-1]))])
        idx = np.arange(za.size)
        window = np.empty(za.size)
        late = idx >= n
        window[late] = zc[idx[late]] - zc[idx[late] - n]
        early = idx[~late]
        window[~late] = zc[early] + (hc[n] - hc[early])
        return za + window

    def l2_norm_sq(self) -> float:
        """``int_0^T |z|^2`` by the trapezoid rule."""
        a = np.abs(self.z) ** 2
        return float(self.dt * (a.sum() - 0.5 * (a[0] + a[-1])))

    def to_csv(self, target) -> None:
        """Write columns ``t, re_z, im_z, state_norm_sq``."""
        norms = self.state_norms()
        own = isinstance(target, (str, os.PathLike))
        fh = open(target, "w", newline="", encoding="utf-8") if own else target
        try:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "re_z", "im_z", "state_norm_sq"])
            for t, z, v in zip(self.times, self.z, norms):
                w.writerow([repr(float(t)), repr(float(z.real)), repr(float(z.imag)), repr(float(v))])
        finally:
            if own:
                fh.close()


def _steps_per_delay(tau: float, dt: float) -> int:
    if not dt > 0:
        raise DomainError(f"dt must be > 0, got {dt!r}")
    n = int(round(tau / dt))
    if n < 1 or abs(n * dt - tau) > 1e-9 * tau:
        raise DomainError(f"dt = {dt!r} does not divide tau = {tau!r}")
    if n < _MIN_STEPS_PER_DELAY:
        raise DomainError(f"need at least {_MIN_STEPS_PER_DELAY} steps per delay, got {n}")
    return n


def _midpoints(y: np.ndarray) -> np.ndarray:
    """Cubic (four-point Lagrange) values at cell midpoints of a uniform block."""
    mid = np.empty(y.size - 1, dtype=complex)
    mid[1:-1] = (-y[:-3] + 9 * y[1:-2] + 9 * y[2:-1] - y[3:]) / 16
    mid[0] = (5 * y[0] + 15 * y[1] - 5 * y[2] + y[3]) / 16
    mid[-1] = (5 * y[-1] + 15 * y[-2] - 5 * y[-3] + y[-4]) / 16
    return mid


def step_integrate(
    mode: ModeParams,
    b: complex,
    x0: complex,
    f: HistoryGrid,
    u: InputSignal,
    T: float,
    dt: float,
    enforce_domain: bool = True,
) -> Trajectory:
    """Integrate one mode on ``[0, T]`` by the method of steps.

    ``f`` is resampled onto the integration grid if its spacing differs. With
    ``enforce_domain`` the history must end at ``x0`` (within 1e-9).
    """
    if T < 0:
        raise DomainError(f"T must be >= 0, got {T!r}")
    tau, lam = mode.tau, mode.lam
    n = _steps_per_delay(tau, dt)
    dt = tau / n
    if abs(f.tau - tau) > 1e-12 * tau:
        raise DomainError(f"history spans {f.tau!r}, expected tau = {tau!r}")
    hist = f.samples if f.samples.size == n + 1 else f(np.linspace(-tau, 0.0, n + 1))
    x0 = complex(x0)
    if enforce_domain and abs(hist[-1] - x0) > 1e-9 * max(1.0, abs(x0)):
        raise DomainError(f"history end f(0) = {hist[-1]!r} differs from x0 = {x0!r}")
    b = complex(b)
    total = int(math.ceil(T / dt - 1e-9))
    blocks = max(int(math.ceil(total / n)), 0)
    z = np.empty(blocks * n + 1, dtype=complex)
    z[0] = x0
    prev = np.asarray(hist, dtype=complex)
    has_input = b != 0 and np.any(u.samples != 0)
    cell = np.arange(n + 1) * dt
    for j in range(blocks):
        t0 = j * tau
        g_nodes = lam * prev
        g_mid = lam * _midpoints(prev)
        if has_input and t0 <= u.support_end:
            g_nodes = g_nodes + b * u(t0 + cell)
            g_mid = g_mid + b * u(t0 + cell[:-1] + 0.5 * dt)
        incr = dt / 6 * (g_nodes[:-1] + 4 * g_mid + g_nodes[1:])
        seg = z[j * n] + np.concatenate([[0], np.cumsum(incr)])
        z[j * n : (j + 1) * n + 1] = seg
        prev = seg
    z = z[: total + 1]
    times = dt * np.arange(z.size)
    return Trajectory(times, z, HistoryGrid(hist, tau), mode, b, dt)


def fundamental_solution(mode: ModeParams, T: float, dt: float) -> Trajectory:
    """Solution with ``z(0) = 1``, zero history and no input."""
    n = _steps_per_delay(mode.tau, dt)
    return step_integrate(
        mode, 0, 1.0, HistoryGrid.zeros(mode.tau, n), InputSignal.zero(), T, dt, enforce_domain=False
    )


def _decay_rate(mode: ModeParams) -> float:
    return -float(char_roots(mode, 1).roots[0].real)


def _horizon_cap(mode: ModeParams, start: float) -> float:
    rate = _decay_rate(mode)
    if rate <= 0:
        return start + 200 * mode.tau
    return start + max(200 * mode.tau, 40 / rate)


def fundamental_energy(mode: ModeParams, dt: float, trailing_rtol: float = DEFAULT_DECAY_TOL) -> tuple[float, float]:
    """``||T11||^2`` on ``[0, T]`` with T doubled until the trailing quarter holds
    less than ``trailing_rtol`` of the total. Returns ``(energy, T)``."""
    cap = _horizon_cap(mode, 0.0)
    T = 20 * mode.tau
    while True:
        tr = fundamental_solution(mode, T, dt)
        a = np.abs(tr.z) ** 2
        q = 3 * (a.size - 1) // 4
        tail = dt * (a[q:].sum() - 0.5 * (a[q] + a[-1]))
        energy = tr.l2_norm_sq()
        if tail <= trailing_rtol * energy:
            return energy, T
        if T >= cap:
            raise ConvergenceError(f"fundamental solution did not decay by T = {T:g}", best=energy)
        T = min(2 * T, cap)


def state_norm(traj: Trajectory, t: float) -> StateNorm:
    """State norm at the grid node nearest to ``t``."""
    T = traj.times[-1]
    if not (-1e-12 <= t <= T * (1 + 1e-12) + 1e-12):
        raise DomainError(f"t = {t!r} outside [0, {T!r}]")
    i = int(round(t / traj.dt))
    i = min(max(i, 0), traj.times.size - 1)
    off = abs(traj.times[i] - t) > 1e-9 * max(traj.dt, abs(t))
    return StateNorm(float(traj.times[i]), float(traj.state_norms()[i]), off)


def forcing_norm_empirical(
    mode: ModeParams, b: complex, u: InputSignal, dt: float, decay_tol: float = DEFAULT_DECAY_TOL
) -> float:
    """``sup_{t >= T_u} ||v(t)||`` for zero initial data and input ``u`` supported on ``[0, T_u]``.

    Runs until the squared state norm falls below ``decay_tol`` times its
    running maximum, at least ``5 tau`` past the end of the input.
    """
    if not in_lambda_region(mode):
        raise DomainError(f"lambda = {mode.lam!r} is not in the stability region for tau = {mode.tau!r}")
    n = _steps_per_delay(mode.tau, dt)
    if complex(b) == 0 or not np.any(u.samples != 0):
        return 0.0
    Tu = u.support_end
    cap = _horizon_cap(mode, Tu)
    # first guess from the decay rate of the rightmost root
    T = min(Tu + max(5 * mode.tau, 1.25 * math.log(1 / decay_tol) / (2 * _decay_rate(mode))), cap)
    zero = HistoryGrid.zeros(mode.tau, n)
    while True:
        tr = step_integrate(mode, b, 0.0, zero, u, T, dt)
        norms = tr.state_norms()
        if norms[-1] <= decay_tol * norms.max():
            after = tr.times >= Tu - 1e-12 * max(Tu, 1.0)
            return float(math.sqrt(norms[after].max()))
        if T >= cap:
            raise ConvergenceError(
                f"state norm did not decay below {decay_tol:g} of its maximum by t = {T:g}",
                best=float(math.sqrt(norms[tr.times >= Tu].max())),
            )
        T = min(Tu + 2 * (T - Tu), cap)


def band_limited_input(
    rng: np.random.Generator, tau: float, dt: float, max_tones: int = 8, span: float = 4.0
) -> InputSignal:
    """Random sum of at most ``max_tones`` complex sinusoids under a Hann window on ``[0, span tau]``.

    Frequencies are drawn from ``[-4 pi / tau, 4 pi / tau]``.
    """
    Tu = span * tau
    k = int(rng.integers(1, max_tones + 1))
    freqs = rng.uniform(-4 * math.pi / tau, 4 * math.pi / tau, k)
    amps = rng.normal(size=k) + 1j * rng.normal(size=k)
    phases = rng.uniform(0, 2 * math.pi, k)

    def signal(t):
        window = np.sin(math.pi * t / Tu) ** 2
        tones = (amps[:, None] * np.exp(1j * (freqs[:, None] * t + phases[:, None]))).sum(axis=0)
        return window * tones

    return InputSignal.from_function(signal, Tu, dt)
