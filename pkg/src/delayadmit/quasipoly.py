"""Characteristic function of a single delayed mode.

A mode ``z'(t) = lam * z(t - tau)`` has characteristic function

    P(s) = s - lam * exp(-s * tau)

whose zeros are ``s = W_k(lam * tau) / tau`` over all Lambert-W branches ``k``.
This module evaluates ``P``, decides membership of ``lam`` in the stability
region for a given delay, and locates/counts characteristic roots.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.special import lambertw

from .errors import ConvergenceError, DomainError, PoleError

__all__ = [
    "ModeParams",
    "RootSet",
    "Abscissa",
    "StabilityReport",
    "principal_arg",
    "eval_charfun",
    "eval_charfun_derivative",
    "region_margin",
    "in_lambda_region",
    "is_critical",
    "critical_delay",
    "crossing_frequency",
    "crossing_direction",
    "char_roots",
    "count_rhp_roots",
    "spectral_abscissa",
    "analyze_mode",
    "DEFAULT_BRANCHES",
    "CRITICAL_TOL",
]

DEFAULT_BRANCHES = 16
# |lam|*tau within this distance of |Arg lam| - pi/2 counts as the boundary
CRITICAL_TOL = 1e-12
_NEWTON_MAXITER = 60


def principal_arg(lam: complex) -> float:
    """Argument in (-pi, pi]; a negative real (including ``-x - 0j``) maps to pi."""
    a = math.atan2(lam.imag, lam.real)
    if a == -math.pi:
        return math.pi
    return a


def _check_lambda(lam: complex) -> complex:
    lam = complex(lam)
    if not (math.isfinite(lam.real) and math.isfinite(lam.imag)):
        raise DomainError(f"lambda must be finite, got {lam!r}")
    if lam.real >= 0:
        raise DomainError(f"lambda must have negative real part, got {lam!r}")
    if lam.imag == 0:
        # a signed zero would put lam*tau below the Lambert-W branch cut
        lam = complex(lam.real, 0.0)
    return lam


@dataclass(frozen=True)
class ModeParams:
    """Eigenvalue ``lam`` (Re < 0) and delay ``tau`` (> 0) of one mode."""

    lam: complex
    tau: float

    def __post_init__(self):
        object.__setattr__(self, "lam", _check_lambda(self.lam))
        tau = float(self.tau)
        if not (math.isfinite(tau) and tau > 0):
            raise DomainError(f"tau must be finite and > 0, got {self.tau!r}")
        object.__setattr__(self, "tau", tau)

    @property
    def arg(self) -> float:
        return principal_arg(self.lam)

    @property
    def modulus(self) -> float:
        return abs(self.lam)

    @property
    def epsilon(self) -> float:
        """Angular distance ``|Arg lam| - pi/2`` into the left half-plane."""
        return abs(self.arg) - math.pi / 2

    def conjugate(self) -> "ModeParams":
        return ModeParams(self.lam.conjugate(), self.tau)


@dataclass(frozen=True)
class RootSet:
    """Characteristic roots found from Lambert-W branches ``-K..K``.

    ``roots`` is sorted by descending real part and ``branches`` holds the
    branch index each root was seeded from.
    """

    roots: np.ndarray
    branches: np.ndarray
    branch_range: int
    residual_tol: float
    verified_count: int | None = None

    def __len__(self):
        return len(self.roots)

    @property
    def rightmost(self) -> complex:
        return complex(self.roots[0])


class Abscissa(NamedTuple):
    value: float
    rhp_count: int
    roots: RootSet


@dataclass(frozen=True)
class StabilityReport:
    mode: ModeParams
    member: bool
    critical: bool
    critical_delay: float
    rightmost_root: complex
    spectral_abscissa: float
    rhp_count: int


def eval_charfun(mode: ModeParams, s):
    """P(s) = s - lam * exp(-s tau); ``s`` may be a scalar or an array."""
    return s - mode.lam * np.exp(-s * mode.tau)


def eval_charfun_derivative(mode: ModeParams, s):
    return 1 + mode.lam * mode.tau * np.exp(-s * mode.tau)


def region_margin(mode: ModeParams) -> float:
    """``(|Arg lam| - pi/2) - |lam| tau``; positive inside the region."""
    return mode.epsilon - mode.modulus * mode.tau


def is_critical(mode: ModeParams, tol: float = CRITICAL_TOL) -> bool:
    """True when the mode sits on the region boundary (a root on the imaginary axis)."""
    return abs(region_margin(mode)) <= tol


def in_lambda_region(mode: ModeParams) -> bool:
    """Strict membership ``|lam| < (|Arg lam| - pi/2) / tau``.

    Boundary points (within ``CRITICAL_TOL``) are reported as non-members.
    """
    return region_margin(mode) > CRITICAL_TOL


def critical_delay(lam: complex) -> float:
    """The delay ``(|Arg lam| - pi/2) / |lam|`` at which a root first reaches iR."""
    lam = _check_lambda(lam)
    return (abs(principal_arg(lam)) - math.pi / 2) / abs(lam)


def crossing_frequency(lam: complex) -> float:
    """Frequency at which the root crosses the imaginary axis at the critical delay.

    ``+|lam|`` on the upper branch ``Arg in (pi/2, pi]``, ``-|lam|`` otherwise.
    """
    lam = _check_lambda(lam)
    return abs(lam) if principal_arg(lam) > 0 else -abs(lam)


def crossing_direction(omega: float, tau: float) -> float:
    """Real part of ds/dtau = -s^2 / (1 + s tau) at ``s = i omega``.

    Equals ``omega^2 / (1 + omega^2 tau^2)``; ``tau = 0`` is allowed here since
    the identity is purely algebraic.
    """
    if omega == 0:
        raise DomainError("crossing direction is undefined at omega = 0")
    if tau < 0:
        raise DomainError(f"tau must be >= 0, got {tau!r}")
    s = 1j * omega
    return (-(s * s) / (1 + s * tau)).real


def _newton_polish(mode: ModeParams, s: complex, tol: float) -> tuple[complex, bool]:
    for _ in range(_NEWTON_MAXITER):
        p = eval_charfun(mode, s)
        if abs(p) <= 1e-3 * tol * (1 + abs(s)):
            return s, True
        dp = eval_charfun_derivative(mode, s)
        if dp == 0:
            break
        step = p / dp
        s = s - step
        if abs(step) <= 1e-15 * (1 + abs(s)):
            break
    return s, abs(eval_charfun(mode, s)) <= tol * (1 + abs(s))


def char_roots(mode: ModeParams, K: int = DEFAULT_BRANCHES, residual_tol: float = 1e-10) -> RootSet:
    """Characteristic roots from Lambert-W branches ``-K..K``, Newton-polished on P."""
    if K < 0:
        raise DomainError(f"branch range K must be >= 0, got {K}")
    z = mode.lam * mode.tau
    roots, branches = [], []
    for k in range(-K, K + 1):
        w = complex(lambertw(z, k, tol=1e-14))
        if not (math.isfinite(w.real) and math.isfinite(w.imag)):
            raise ConvergenceError(f"Lambert-W branch {k} returned {w!r} for argument {z!r}")
        s, ok = _newton_polish(mode, w / mode.tau, residual_tol)
        if not ok:
            res = abs(eval_charfun(mode, s))
            raise ConvergenceError(
                f"root from branch {k} did not converge: |P(s)| = {res:.3e} at s = {s!r}", best=s
            )
        # coincident branches only happen at the double root lam*tau = -1/e
        if any(abs(s - r) <= residual_tol * (1 + abs(s)) for r in roots):
            continue
        roots.append(s)
        branches.append(k)
    roots = np.array(roots, dtype=complex)
    branches = np.array(branches, dtype=int)
    # conjugate pairs tie on the real part up to rounding; upper member first
    order = np.lexsort((-roots.imag, -np.round(roots.real, 12)))
    return RootSet(roots[order], branches[order], K, residual_tol)


def _rectangle(left: float, right: float, height: float, n: int) -> np.ndarray:
    """Counter-clockwise closed rectangle path, points distributed by edge length."""
    w, h = right - left, 2 * height
    per = 2 * (w + h)
    nw = max(int(n * w / per), 8)
    nh = max(int(n * h / per), 8)
    bottom = left + w * np.arange(nw) / nw - 1j * height
    rside = right + 1j * (-height + h * np.arange(nh) / nh)
    top = right - w * np.arange(nw) / nw + 1j * height
    lside = left + 1j * (height - h * np.arange(nh) / nh)
    return np.concatenate([bottom, rside, top, lside])


def _winding_number(mode: ModeParams, path: np.ndarray, max_rounds: int) -> int | None:
    """Winding number of P around ``path``; None if the path meets a root.

    Segments whose phase increment exceeds pi/4 are bisected until every
    increment is resolved.
    """
    vals = eval_charfun(mode, path)
    for _ in range(max_rounds):
        if np.any(np.abs(vals) <= 1e-9 * (1 + np.abs(path))):
            return None
        steps = np.angle(np.roll(vals, -1) / vals)
        bad = np.flatnonzero(np.abs(steps) > math.pi / 4)
        if bad.size == 0:
            return int(round(steps.sum() / (2 * math.pi)))
        mids = 0.5 * (path[bad] + np.roll(path, -1)[bad])
        path = np.insert(path, bad + 1, mids)
        vals = np.insert(vals, bad + 1, eval_charfun(mode, mids))
    return None


def count_rhp_roots(
    mode: ModeParams,
    R: float | None = None,
    Omega: float | None = None,
    K: int = DEFAULT_BRANCHES,
    n: int = 4096,
    max_rounds: int = 60,
) -> int:
    """Count zeros of P inside the rectangle ``[0, R] x [-Omega, Omega]``.

    The winding number of P along the boundary is accumulated from
    principal-value phase increments. If the left edge passes through a root
    (a critical mode) the edge is nudged once into the right half-plane, so
    roots on iR are not counted.
    """
    lam, tau = mode.lam, mode.tau
    if R is None:
        R = max(2 * abs(lam), 1.0)
    if Omega is None:
        Omega = max((2 * K + 2) * math.pi / tau, 2 * abs(lam))
    for left in (0.0, 1e-7 * (1 + max(R, Omega))):
        count = _winding_number(mode, _rectangle(left, R, Omega, n), max_rounds)
        if count is not None:
            return count
    raise PoleError("argument-principle contour passes through a characteristic root")


def spectral_abscissa(mode: ModeParams, K: int = DEFAULT_BRANCHES) -> Abscissa:
    """Largest real part over the branch sweep, with a contour-verified RHP count."""
    if K < 1:
        raise DomainError(f"spectral abscissa needs K >= 1, got {K}")
    rs = char_roots(mode, K)
    count = count_rhp_roots(mode, K=K)
    rs = RootSet(rs.roots, rs.branches, rs.branch_range, rs.residual_tol, verified_count=count)
    return Abscissa(float(rs.roots[0].real), count, rs)


def analyze_mode(mode: ModeParams, K: int = DEFAULT_BRANCHES) -> StabilityReport:
    ab = spectral_abscissa(mode, K)
    return StabilityReport(
        mode=mode,
        member=in_lambda_region(mode),
        critical=is_critical(mode),
        critical_delay=critical_delay(mode.lam),
        rightmost_root=ab.roots.rightmost,
        spectral_abscissa=ab.value,
        rhp_count=ab.rhp_count,
    )
