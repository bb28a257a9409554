"""Admissibility constants for delayed diagonal modes.

For a mode ``(lam, tau)`` inside the stability region and any feasible
``delta`` the forcing operator of ``z'(t) = lam z(t - tau) + b u(t)`` obeys

    ||Phi u||^2 <= |b|^2 (1 + tau) / pi * ((2 - delta)/(delta |lam|)
                                          + 2 delta / ((1 - m^2) |lam|)) ||u||^2

with ``m = cos(eps - (1 + delta)|lam| tau)`` and ``eps = |Arg lam| - pi/2``.
The bracket is an upper bound for the frequency integral

    (1/2pi) int |i w - lam exp(-i w tau)|^-2 dw

which is computed here by quadrature as an independent check. Summing the
per-mode constants gives the whole-system certificate.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from .errors import ConvergenceError, InfeasibleModeError, PoleError
from .quasipoly import ModeParams, in_lambda_region, is_critical
from .systems import SystemSpec, aggregate_norm

__all__ = [
    "FrequencyIntegral",
    "ModeCertificate",
    "SystemCertificate",
    "TAIL_VERDICTS",
    "frequency_integrand",
    "frequency_integral",
    "feasible_delta_interval",
    "cosine_bound",
    "bracket",
    "select_delta",
    "mode_bound",
    "system_certificate",
]

TAIL_VERDICTS = (
    "proven-summable-by-ratio",
    "divergent-by-ratio",
    "empirically-decaying",
    "inconclusive",
)

# keep delta this far inside the open feasible interval
_DELTA_CLAMP = 1e-12
# certificates whose feasible delta interval is narrower than this are flagged
_NARROW_WIDTH = 1e-10


@dataclass(frozen=True)
class FrequencyIntegral:
    """``(1/2pi) int_R |P(i w)|^-2 dw`` with an error estimate.

    ``value`` includes the midpoint of the analytic bracket for the two tails
    beyond ``cutoff``; ``abs_error_estimate`` adds the bracket half-width to
    the quadrature error.
    """

    value: float
    abs_error_estimate: float
    cutoff: float
    quad_error: float
    tail_bound: float


@dataclass(frozen=True)
class ModeCertificate:
    lam: complex
    b: complex
    tau: float
    delta: float
    m: float
    C: float
    epsilon_lambda: float
    one_minus_m_sq: float
    narrow: bool = False

    def recompute(self) -> float:
        """The constant recomputed from the stored fields."""
        return _constant(self.b, self.tau, abs(self.lam), self.delta, self.one_minus_m_sq)


@dataclass(frozen=True)
class SystemCertificate:
    mode_certs: tuple
    partial_sum: float
    truncation: int
    tail_verdict: str
    raabe_range: tuple | None = None
    notes: tuple = field(default=())

    def rows(self) -> list[dict]:
        return [
            {
                "index": k,
                "lambda_re": c.lam.real,
                "lambda_im": c.lam.imag,
                "b_re": c.b.real,
                "b_im": c.b.imag,
                "delta": c.delta,
                "m": c.m,
                "C": c.C,
                "narrow": c.narrow,
            }
            for k, c in enumerate(self.mode_certs, start=1)
        ]

    def to_dict(self) -> dict:
        return {
            "modes": self.rows(),
            "partial_sum": self.partial_sum,
            "N": self.truncation,
            "tail_verdict": self.tail_verdict,
            "raabe_range": list(self.raabe_range) if self.raabe_range else None,
            "notes": list(self.notes),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    def to_csv(self) -> str:
        buf = io.StringIO()
        rows = self.rows()
        writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
        return buf.getvalue()


def _require_member(mode: ModeParams, index: int | None = None):
    if in_lambda_region(mode):
        return
    where = f"mode {index}: " if index is not None else ""
    if is_critical(mode):
        raise PoleError(
            f"{where}lambda = {mode.lam!r} lies on the stability boundary for tau = {mode.tau!r}; "
            "a characteristic root sits on the imaginary axis"
        )
    raise InfeasibleModeError(
        f"{where}lambda = {mode.lam!r} is outside the stability region for tau = {mode.tau!r}", index
    )


def frequency_integrand(mode: ModeParams, omega):
    """``1 / |i w - lam exp(-i w tau)|^2``."""
    w = np.asarray(omega, dtype=float)
    p = 1j * w - mode.lam * np.exp(-1j * w * mode.tau)
    return 1.0 / (p.real**2 + p.imag**2)


def _breakpoints(mode: ModeParams, cutoff: float) -> np.ndarray:
    lam_abs, tau = mode.modulus, mode.tau
    pts = {0.0, cutoff}
    # resolve the peak near |w| ~ |lam| and the low-frequency bump of small modes
    scale = lam_abs / 4
    while scale < cutoff:
        pts.add(scale)
        scale *= 2
    period = 2 * math.pi / tau
    n_per = int(cutoff / period)
    if n_per <= 4096:
        pts.update(period * np.arange(1, n_per + 1))
    pts = np.array(sorted(p for p in pts if p <= cutoff))
    return np.concatenate([-pts[::-1], pts[1:]])


def _quad_pieces(mode: ModeParams, edges: np.ndarray, epsrel: float) -> tuple[float, float]:
    f = lambda w: float(frequency_integrand(mode, w))  # noqa: E731
    total = err = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        val, e = quad(f, a, b, epsabs=0.0, epsrel=epsrel, limit=200)
        total += val
        err += e
    return total, err


def frequency_integral(
    mode: ModeParams, rel_tol: float = 1e-6, cutoff: float | None = None, max_doublings: int = 12
) -> FrequencyIntegral:
    """Frequency-domain squared norm of the fundamental solution.

    Quadrature on ``[-cutoff, cutoff]``; each tail beyond the cutoff lies in
    ``[1/(L + |lam|), 1/(L - |lam|)]`` by the (reverse) triangle inequality.
    The cutoff doubles until the error estimate is below ``rel_tol * value``.
    """
    _require_member(mode)
    lam_abs, tau = mode.modulus, mode.tau
    L = cutoff if cutoff is not None else max(8 * lam_abs, 8 / tau, 16.0)
    L = max(L, 2 * lam_abs)
    two_pi = 2 * math.pi
    edges = _breakpoints(mode, L)
    core, qerr = _quad_pieces(mode, edges, rel_tol / 10)
    result = None
    for _ in range(max_doublings + 1):
        lo, hi = 1 / (L + lam_abs), 1 / (L - lam_abs)
        tail_mid, tail_half = lo + hi, hi - lo  # both sides
        value = (core + tail_mid) / two_pi
        err = (qerr + tail_half) / two_pi
        result = FrequencyIntegral(value, err, L, qerr / two_pi, 2 * hi / two_pi)
        if err <= rel_tol * value:
            return result
        # extend to [-2L, 2L], integrating only the new outer pieces
        new_edges = _breakpoints(mode, 2 * L)
        outer = np.concatenate([[L], new_edges[new_edges > L]])
        c1, e1 = _quad_pieces(mode, outer, rel_tol / 10)
        c2, e2 = _quad_pieces(mode, -outer[::-1], rel_tol / 10)
        core, qerr, L = core + c1 + c2, qerr + e1 + e2, 2 * L
    raise ConvergenceError(
        f"frequency integral did not reach rel_tol={rel_tol:g} (estimate {result.value!r} "
        f"+/- {result.abs_error_estimate:.3e})",
        best=result,
    )


def feasible_delta_interval(mode: ModeParams) -> tuple[float, float]:
    """Open interval of delta with ``(1 + delta)|lam| tau < eps`` and ``delta < 1``."""
    _require_member(mode)
    return 0.0, min(1.0, mode.epsilon / (mode.modulus * mode.tau) - 1.0)


def _cosine_angle(mode: ModeParams, delta: float) -> float:
    return mode.epsilon - (1 + delta) * mode.modulus * mode.tau


def cosine_bound(mode: ModeParams, delta: float) -> float:
    """``m = cos(eps - (1 + delta)|lam| tau)``, the largest cosine over the mid band."""
    return math.cos(_cosine_angle(mode, delta))


def bracket(mode: ModeParams, delta: float, m: float | None = None) -> float:
    """``(2 - delta)/(delta |lam|) + 2 delta/((1 - m^2)|lam|)``."""
    # 1 - m^2 as sin^2 of the angle avoids cancellation when m is close to 1
    gap = math.sin(_cosine_angle(mode, delta)) ** 2 if m is None else 1 - m * m
    return _bracket(mode.modulus, delta, gap)


def _bracket(lam_abs: float, delta: float, gap: float) -> float:
    return (2 - delta) / (delta * lam_abs) + 2 * delta / (gap * lam_abs)


def _constant(b: complex, tau: float, lam_abs: float, delta: float, gap: float) -> float:
    return abs(b) ** 2 * (1 + tau) * _bracket(lam_abs, delta, gap) / math.pi


def _golden_section(f, lo: float, hi: float, tol: float) -> float:
    invphi = (math.sqrt(5) - 1) / 2
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return c if fc <= fd else d


def select_delta(mode: ModeParams, tol: float = 1e-10) -> tuple[float, float]:
    """Feasible delta minimizing the bound bracket, and its ``m``."""
    _, upper = feasible_delta_interval(mode)
    lo, hi = _DELTA_CLAMP, upper - _DELTA_CLAMP
    if hi <= lo:
        delta = upper / 2
    else:
        delta = _golden_section(lambda d: bracket(mode, d), lo, hi, min(tol, 1e-3 * (hi - lo)))
    return delta, cosine_bound(mode, delta)


def mode_bound(mode: ModeParams, b: complex, delta: float | None = None) -> ModeCertificate:
    """Admissibility certificate of one mode; ``delta`` defaults to the optimized value."""
    _, upper = feasible_delta_interval(mode)
    if delta is None:
        delta, m = select_delta(mode)
    else:
        if not 0 < delta < upper:
            raise InfeasibleModeError(f"delta = {delta!r} is outside the feasible interval (0, {upper!r})")
        m = cosine_bound(mode, delta)
    angle = _cosine_angle(mode, delta)
    if not 0 < angle < math.pi / 2:
        raise InfeasibleModeError(f"m = {m!r} is not in (0, 1) for delta = {delta!r}")
    gap = math.sin(angle) ** 2
    b = complex(b)
    return ModeCertificate(
        lam=mode.lam,
        b=b,
        tau=mode.tau,
        delta=delta,
        m=m,
        C=_constant(b, mode.tau, mode.modulus, delta, gap),
        epsilon_lambda=mode.epsilon,
        one_minus_m_sq=gap,
        narrow=upper < _NARROW_WIDTH,
    )


def _raabe_statistics(spec: SystemSpec, N: int, samples: int = 48) -> np.ndarray:
    """``k (C_k / C_{k+1} - 1)`` at k spread over [N, 4N], from the tail rule."""
    ks = np.unique(np.geomspace(N, 4 * N, samples).round().astype(int))
    out = []
    for k in ks:
        c0 = mode_bound(spec.mode_params(k), spec.mode_spec(k).b).C
        c1 = mode_bound(spec.mode_params(k + 1), spec.mode_spec(k + 1).b).C
        out.append(k * (c0 / c1 - 1))
    return np.array(out)


def system_certificate(spec: SystemSpec, N: int | None = None) -> SystemCertificate:
    """Per-mode certificates for modes 1..N, their sum and a verdict on the tail.

    With a closed-form tail rule, Raabe's refinement of the ratio test is
    evaluated at ``k = N..4N``: a statistic above 1 throughout proves
    summability (for the rule's power-law asymptotics), below 1 throughout
    proves divergence. Without a rule the verdict is empirical: monotone decay
    over the last quartile, or inconclusive.
    """
    if N is None:
        N = len(spec.modes)
    if N < 1:
        raise InfeasibleModeError(f"truncation N must be >= 1, got {N}")
    certs = []
    for k in range(1, N + 1):
        mode = spec.mode_params(k)
        _require_member(mode, k)
        certs.append(mode_bound(mode, spec.mode_spec(k).b))
    partial = aggregate_norm(c.C for c in certs)
    verdict, raabe = "inconclusive", None
    if spec.tail_rule is not None:
        stats = _raabe_statistics(spec, N)
        raabe = (float(stats.min()), float(stats.max()))
        if stats.min() > 1:
            verdict = "proven-summable-by-ratio"
        elif stats.max() < 1:
            verdict = "divergent-by-ratio"
    if verdict == "inconclusive":
        tail = np.array([c.C for c in certs[N - N // 4 - 1 :]])
        if tail.size >= 2 and np.all(np.diff(tail) < 0):
            verdict = "empirically-decaying"
    return SystemCertificate(tuple(certs), partial, N, verdict, raabe, tuple(spec.notes))
