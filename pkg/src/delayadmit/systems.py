"""System specifications: a delay plus a sequence of diagonal modes.

Specs are read from and written to a small JSON document::

    {"tau": 1.0,
     "modes": [{"index": 1, "lambda": [-1.0, 0.0], "b": [1.0, 0.0]}, ...],
     "tail_rule": {"kind": "power-law", "c": -1.0, "p": 2.0, "d": 1.0, "q": 2.0}}

Complex numbers are two-element ``[re, im]`` arrays.
"""

from __future__ import annotations

import json
import math
import os
import warnings
from dataclasses import dataclass, field
from typing import Iterable

from .errors import DomainError, SpecError
from .quasipoly import ModeParams

__all__ = [
    "ModeSpec",
    "TailRule",
    "SystemSpec",
    "load_spec",
    "dump_spec",
    "spec_to_dict",
    "spec_from_dict",
    "heat_reciprocal_spec",
    "artificial_spec",
    "symbol_sampled_spec",
    "aggregate_norm",
]

_RULE_RTOL = 1e-12


@dataclass(frozen=True)
class ModeSpec:
    index: int
    lam: complex
    b: complex

    def __post_init__(self):
        if int(self.index) != self.index or self.index < 1:
            raise SpecError(f"index must be a positive integer, got {self.index!r}")
        lam = complex(self.lam)
        if not lam.real < 0:
            raise SpecError(f"mode {self.index}: lambda must have negative real part, got {lam!r}")
        object.__setattr__(self, "index", int(self.index))
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "b", complex(self.b))


@dataclass(frozen=True)
class TailRule:
    """Closed-form rule generating ``(lambda_k, b_k)`` for every ``k >= 1``.

    ``power-law``: ``lambda_k = c k^-p`` (``c < 0``), ``b_k = d k^-q``.
    ``artificial``: ``lambda_k = (-pi/(2 tau) + eps) / k``, ``b_k = k^-2``.
    """

    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("power-law", "artificial", "none"):
            raise SpecError(f"unknown tail rule kind {self.kind!r}", "tail_rule.kind")
        need = {"power-law": ("c", "p", "d", "q"), "artificial": ("eps",), "none": ()}[self.kind]
        missing = [k for k in need if k not in self.params]
        if missing:
            raise SpecError(f"missing parameters {missing}", "tail_rule")
        object.__setattr__(self, "params", {k: float(self.params[k]) for k in need})
        if self.kind == "power-law" and not self.params["c"] < 0:
            raise SpecError("power-law coefficient c must be negative", "tail_rule.c")

    def mode(self, k: int, tau: float) -> tuple[complex, complex] | None:
        pr = self.params
        if self.kind == "power-law":
            return complex(pr["c"] * k ** -pr["p"]), complex(pr["d"] * k ** -pr["q"])
        if self.kind == "artificial":
            return complex((-math.pi / (2 * tau) + pr["eps"]) / k), complex(1.0 / k**2)
        return None


@dataclass(frozen=True)
class SystemSpec:
    tau: float
    modes: tuple
    tail_rule: TailRule | None = None
    notes: tuple = ()

    def __post_init__(self):
        tau = float(self.tau)
        if not (math.isfinite(tau) and tau > 0):
            raise SpecError(f"tau must be finite and > 0, got {self.tau!r}", "tau")
        object.__setattr__(self, "tau", tau)
        modes = tuple(self.modes)
        if not modes:
            raise SpecError("a system needs at least one mode", "modes")
        for pos, m in enumerate(modes):
            if m.index != pos + 1:
                raise SpecError(f"indices must be contiguous from 1, found {m.index}", f"modes[{pos}].index")
        object.__setattr__(self, "modes", modes)
        if self.tail_rule is not None and self.tail_rule.kind == "none":
            object.__setattr__(self, "tail_rule", None)
        if self.tail_rule is not None:
            for pos, m in enumerate(modes):
                lam, b = self.tail_rule.mode(m.index, tau)
                for name, got, want in (("lambda", m.lam, lam), ("b", m.b, b)):
                    if abs(got - want) > _RULE_RTOL * max(abs(want), 1e-300):
                        raise SpecError(
                            f"value {got!r} does not match tail rule value {want!r}",
                            f"modes[{pos}].{name}",
                        )

    def __len__(self):
        return len(self.modes)

    def mode_params(self, k: int) -> ModeParams:
        """ModeParams of the k-th mode (1-based); extends through the tail rule."""
        return ModeParams(self.mode_spec(k).lam, self.tau)

    def mode_spec(self, k: int) -> ModeSpec:
        if 1 <= k <= len(self.modes):
            return self.modes[k - 1]
        if self.tail_rule is None or k < 1:
            raise DomainError(f"mode {k} is not listed and the spec has no tail rule")
        lam, b = self.tail_rule.mode(k, self.tau)
        return ModeSpec(k, lam, b)

    def extended(self, N: int) -> "SystemSpec":
        """Spec with exactly N modes, truncating or generating from the tail rule."""
        modes = tuple(self.mode_spec(k) for k in range(1, N + 1))
        return SystemSpec(self.tau, modes, self.tail_rule, self.notes)


def _complex_field(value, path: str) -> complex:
    if (
        not isinstance(value, (list, tuple))
        or len(value) != 2
        or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value)
    ):
        raise SpecError("expected a two-element [re, im] number array", path)
    z = complex(float(value[0]), float(value[1]))
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise SpecError("complex entries must be finite", path)
    return z


def spec_from_dict(doc: dict) -> SystemSpec:
    if not isinstance(doc, dict):
        raise SpecError("top level must be an object")
    if "tau" not in doc:
        raise SpecError("missing field", "tau")
    tau = doc["tau"]
    if not isinstance(tau, (int, float)) or isinstance(tau, bool) or not tau > 0:
        raise SpecError(f"tau must be a positive number, got {tau!r}", "tau")
    raw = doc.get("modes")
    if not isinstance(raw, list) or not raw:
        raise SpecError("must be a non-empty array", "modes")
    modes = []
    for pos, m in enumerate(raw):
        path = f"modes[{pos}]"
        if not isinstance(m, dict):
            raise SpecError("must be an object", path)
        for key in ("index", "lambda", "b"):
            if key not in m:
                raise SpecError("missing field", f"{path}.{key}")
        index = m["index"]
        if not isinstance(index, int) or isinstance(index, bool) or index < 1:
            raise SpecError(f"must be an integer >= 1, got {index!r}", f"{path}.index")
        lam = _complex_field(m["lambda"], f"{path}.lambda")
        if not lam.real < 0:
            raise SpecError(f"mode {index}: Re(lambda) must be negative, got {lam!r}", f"{path}.lambda")
        modes.append(ModeSpec(index, lam, _complex_field(m["b"], f"{path}.b")))
    seen = set()
    for pos, m in enumerate(modes):
        if m.index in seen:
            raise SpecError(f"duplicate index {m.index}", f"modes[{pos}].index")
        seen.add(m.index)
    modes.sort(key=lambda m: m.index)
    rule = None
    if doc.get("tail_rule") is not None:
        tr = doc["tail_rule"]
        if not isinstance(tr, dict) or "kind" not in tr:
            raise SpecError("must be an object with a 'kind'", "tail_rule")
        rule = TailRule(tr["kind"], {k: v for k, v in tr.items() if k != "kind"})
    return SystemSpec(float(tau), tuple(modes), rule)


def spec_to_dict(spec: SystemSpec) -> dict:
    doc = {
        "tau": spec.tau,
        "modes": [
            {"index": m.index, "lambda": [m.lam.real, m.lam.imag], "b": [m.b.real, m.b.imag]}
            for m in spec.modes
        ],
    }
    if spec.tail_rule is not None:
        doc["tail_rule"] = {"kind": spec.tail_rule.kind, **spec.tail_rule.params}
    return doc


def load_spec(source) -> SystemSpec:
    """Parse and validate a spec from a path or a text stream."""
    if isinstance(source, (str, os.PathLike)):
        with open(source, encoding="utf-8") as fh:
            text = fh.read()
    else:
        text = source.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(exc.msg, f"line {exc.lineno}, column {exc.colno}") from exc
    return spec_from_dict(doc)


def dump_spec(spec: SystemSpec, target=None) -> str:
    """Serialize ``spec``; floats use shortest round-trip repr (<= 17 digits)."""
    text = json.dumps(spec_to_dict(spec), indent=1)
    if target is None:
        return text
    if isinstance(target, (str, os.PathLike)):
        with open(target, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        target.write(text + "\n")
    return text


def heat_reciprocal_spec(N: int, q: float = 2.0) -> SystemSpec:
    """Reciprocal of the Dirichlet heat equation on (0, pi) with delay 1.

    Eigenvalues ``-1/k^2``; input weights ``k^-q``. For ``q <= 3/2`` the
    per-mode constants are not summable and the spec carries a warning note.
    """
    if N < 1:
        raise DomainError(f"N must be >= 1, got {N}")
    rule = TailRule("power-law", {"c": -1.0, "p": 2.0, "d": 1.0, "q": q})
    modes = tuple(ModeSpec(k, *rule.mode(k, 1.0)) for k in range(1, N + 1))
    notes = ()
    if q <= 1.5:
        msg = f"b_k = k^-{q:g} with lambda_k = -1/k^2 gives C_k ~ k^{2 - 2 * q:g}, which is not summable"
        warnings.warn(msg, stacklevel=2)
        notes = (msg,)
    return SystemSpec(1.0, modes, rule, notes)


def artificial_spec(N: int, tau: float, eps: float) -> SystemSpec:
    """``lambda_k = (-pi/(2 tau) + eps) / k`` and ``b_k = 1/k^2``."""
    if N < 1:
        raise DomainError(f"N must be >= 1, got {N}")
    if not (tau > 0 and 0 < eps < math.pi / (2 * tau)):
        raise DomainError(f"need tau > 0 and 0 < eps < pi/(2 tau), got tau={tau!r}, eps={eps!r}")
    rule = TailRule("artificial", {"eps": eps})
    modes = tuple(ModeSpec(k, *rule.mode(k, tau)) for k in range(1, N + 1))
    return SystemSpec(tau, modes, rule)


def symbol_sampled_spec(symbol_samples: Iterable[complex], tau: float, b: Iterable[complex]) -> SystemSpec:
    """Finite diagonal surrogate of a multiplication operator from sampled symbol values.

    Samples outside the stability region are accepted; certification rejects them later.
    """
    lams = [complex(v) for v in symbol_samples]
    bs = [complex(v) for v in b]
    if not lams:
        raise SpecError("need at least one symbol sample", "symbol_samples")
    if len(lams) != len(bs):
        raise SpecError(f"got {len(lams)} symbol samples but {len(bs)} input weights", "b")
    for pos, lam in enumerate(lams):
        if not lam.real < 0:
            raise SpecError(f"sample {pos + 1} has Re >= 0: {lam!r}", f"symbol_samples[{pos}]")
    return SystemSpec(tau, tuple(ModeSpec(k + 1, lam, bk) for k, (lam, bk) in enumerate(zip(lams, bs))))


def aggregate_norm(per_mode_values: Iterable[float]) -> float:
    """Whole-system squared norm from per-mode squared norms."""
    values = [float(v) for v in per_mode_values]
    for pos, v in enumerate(values):
        if not v >= 0:
            raise DomainError(f"entry {pos} is negative: {v!r}")
    # correctly rounded, so independent of summation order
    return math.fsum(values)
