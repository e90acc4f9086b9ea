"""Threshold/weight laws and the activation profile they induce.

A node with threshold ``R`` that receives the i.i.d. influences ``W_1, W_2, ...``
one at a time activates the first time the running sum reaches ``R``.  The
probability that this has happened after ``rho`` influences is ``q[rho]``; the
whole cascade analysis only needs this table, its first non-zero index
``rho_star`` and its limit ``q_infinity``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

import numpy as np
from scipy.stats import binom

from .errors import OutOfRegimeError, ValidationError

DEFAULT_RHO_MAX = 64

# counters are compared against thresholds with this slack, in the DP and in
# the simulators alike, so that float accumulation of e.g. 0.1-steps agrees
SUM_TOL = 1e-9
_KEY_DIGITS = 10


class ApproximationWarning(UserWarning):
    pass


@dataclass(frozen=True)
class DiscreteDistribution:
    """Finite discrete law; atoms sorted ascending, probabilities sum to one."""

    values: tuple[float, ...]
    probs: tuple[float, ...]

    def __post_init__(self):
        if len(self.values) == 0:
            raise ValidationError("distribution needs at least one atom")
        if len(self.values) != len(self.probs):
            raise ValidationError("values and probabilities differ in length")
        if any(p < 0 or p > 1 for p in self.probs):
            raise ValidationError("probabilities must lie in [0, 1]")
        if abs(math.fsum(self.probs) - 1.0) > 1e-12:
            raise ValidationError(f"probabilities sum to {math.fsum(self.probs)!r}, not 1")
        if any(b <= a for a, b in zip(self.values, self.values[1:])):
            raise ValidationError("atom values must be distinct and sorted ascending")

    @classmethod
    def from_atoms(cls, atoms: Iterable[tuple[float, float]]) -> "DiscreteDistribution":
        merged: dict[float, float] = {}
        for v, p in atoms:
            merged[float(v)] = merged.get(float(v), 0.0) + float(p)
        items = sorted((v, p) for v, p in merged.items() if p > 0)
        return cls(tuple(v for v, _ in items), tuple(p for _, p in items))

    @classmethod
    def constant(cls, value: float) -> "DiscreteDistribution":
        return cls((float(value),), (1.0,))

    @property
    def atoms(self) -> list[tuple[float, float]]:
        return list(zip(self.values, self.probs))

    @property
    def min(self) -> float:
        return self.values[0]

    @property
    def max(self) -> float:
        return self.values[-1]

    def mean(self) -> float:
        return math.fsum(v * p for v, p in self.atoms)

    def prob(self, value: float) -> float:
        for v, p in self.atoms:
            if v == value:
                return p
        return 0.0

    def cumulative(self) -> np.ndarray:
        c = np.cumsum(np.asarray(self.probs, dtype=np.float64))
        c[-1] = 1.0
        return c

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        vals = np.asarray(self.values, dtype=np.float64)
        if len(vals) == 1:
            return np.full(size, vals[0])
        idx = np.searchsorted(self.cumulative(), rng.random(size), side="right")
        return vals[np.minimum(idx, len(vals) - 1)]

    def literal(self) -> str:
        return ",".join(f"{v:g}:{p:.12g}" for v, p in self.atoms)


def parse_distribution(text: str) -> DiscreteDistribution:
    """Parse ``v1:p1,v2:p2,...``, ``const:<v>`` or ``uniformset:<v1>-<v2>``.

    Probabilities may be written as fractions (``2:1/4,10:3/4``).
    """
    s = text.strip()
    try:
        if s.startswith("const:"):
            return DiscreteDistribution.constant(float(s[len("const:"):]))
        if s.startswith("uniformset:"):
            lo_s, hi_s = s[len("uniformset:"):].split("-", 1)
            lo, hi = int(lo_s), int(hi_s)
            if hi < lo:
                raise ValidationError(f"empty uniform set in {text!r}")
            k = hi - lo + 1
            return DiscreteDistribution(tuple(float(v) for v in range(lo, hi + 1)), (1.0 / k,) * k)
        atoms = []
        for part in s.split(","):
            v, p = part.rsplit(":", 1)
            atoms.append((float(v), float(Fraction(p.strip()))))
    except ValidationError:
        raise
    except (ValueError, ZeroDivisionError) as exc:
        raise ValidationError(f"bad distribution literal {text!r}: {exc}") from None
    dist = DiscreteDistribution.from_atoms(atoms)
    # from_atoms drops zero-probability atoms but keeps the sum check honest
    if abs(math.fsum(p for _, p in atoms) - 1.0) > 1e-12:
        raise ValidationError(f"probabilities in {text!r} do not sum to 1")
    return dist


@dataclass(frozen=True)
class InfluenceSpec:
    threshold: DiscreteDistribution
    weight: DiscreteDistribution

    def __post_init__(self):
        if self.threshold.min <= 0:
            raise ValidationError("thresholds must be positive")
        if not (self.threshold.min > self.weight.max > 0):
            raise ValidationError(
                "need min threshold > max weight > 0 "
                f"(got min R = {self.threshold.min:g}, max W = {self.weight.max:g})"
            )

    @property
    def sequential_semantics(self) -> bool:
        return self.weight.min < 0

    @property
    def unit_weights(self) -> bool:
        return self.weight.values == (1.0,)

    @classmethod
    def basic(cls, r: int) -> "InfluenceSpec":
        """Plain bootstrap percolation: threshold ``r``, unit weights."""
        return cls(DiscreteDistribution.constant(r), DiscreteDistribution.constant(1.0))

    def describe(self) -> str:
        return f"R={self.threshold.literal()};W={self.weight.literal()}"


@dataclass(frozen=True)
class ActivationProfile:
    rho_star: int
    q: np.ndarray = field(repr=False)
    q_infinity: float
    q_infinity_exact: bool

    @property
    def rho_max(self) -> int:
        return len(self.q) - 1

    @property
    def q_rho_star(self) -> float:
        return float(self.q[self.rho_star])

    def q_at(self, rho: int) -> float:
        if rho <= self.rho_max:
            return float(self.q[rho])
        return self.q_infinity if self.q_infinity_exact else float(self.q[-1])


def _hit_probabilities(b: float, weight: DiscreteDistribution, rho_max: int) -> np.ndarray:
    """P(running sum reaches ``b`` within m steps), m = 0..rho_max."""
    w_atoms = weight.atoms
    w_max = weight.max
    hit = np.zeros(rho_max + 1)
    states = {0.0: 1.0}
    absorbed = 0.0
    for step in range(1, rho_max + 1):
        reach = w_max * (rho_max - step)
        nxt: dict[float, float] = {}
        for s, ps in states.items():
            for w, pw in w_atoms:
                s2 = s + w
                if s2 >= b - SUM_TOL:
                    absorbed += ps * pw
                elif s2 + reach >= b - SUM_TOL:
                    key = round(s2, _KEY_DIGITS)
                    nxt[key] = nxt.get(key, 0.0) + ps * pw
                # else: cannot reach b in the steps left; mass is dead
        states = nxt
        hit[step] = min(absorbed, 1.0)
    return hit


def activation_profile(spec: InfluenceSpec, rho_max: int = DEFAULT_RHO_MAX) -> ActivationProfile:
    """Exact ``q_rho`` table for rho = 0..rho_max, plus rho* and q_infinity."""
    if rho_max < 2:
        raise ValidationError("rho_max must be at least 2")
    q = np.zeros(rho_max + 1)
    for b, pb in spec.threshold.atoms:
        q += pb * _hit_probabilities(b, spec.weight, rho_max)
    q = np.maximum.accumulate(np.minimum(q, 1.0))
    positive = np.nonzero(q[2:] > 0)[0]
    if len(positive) == 0:
        raise ValidationError(f"no rho* within bound: q_rho = 0 for all rho <= {rho_max}")
    rho_star = int(positive[0]) + 2
    q.setflags(write=False)
    partial = ActivationProfile(rho_star, q, float(q[-1]), False)
    q_inf, exact = q_infinity(spec, partial)
    return ActivationProfile(rho_star, q, q_inf, exact)


def q_infinity(spec: InfluenceSpec, profile: ActivationProfile) -> tuple[float, bool]:
    """Limit of q_rho; exact where a random-walk argument gives it, else a flagged lower bound."""
    w = spec.weight
    if w.mean() >= 0:
        return 1.0, True
    if w.values == (-1.0, 1.0) and len(spec.threshold.values) == 1:
        b = spec.threshold.values[0]
        if float(b).is_integer():
            z = w.prob(1.0)
            return (z / (1.0 - z)) ** int(b), True
    return float(profile.q[-1]), False


def _q_extended(profile: ActivationProfile, t: int) -> tuple[np.ndarray, float, bool]:
    top = min(t, profile.rho_max)
    q = profile.q[: top + 1]
    tail_q = profile.q_infinity if profile.q_infinity_exact else float(profile.q[-1])
    return q, tail_q, (t > profile.rho_max and not profile.q_infinity_exact)


def pi_exact(t: int, p: float, profile: ActivationProfile) -> float:
    """P(a node has activated after t used nodes each reached it w.p. p)."""
    if t < 0 or not 0.0 <= p <= 1.0:
        raise ValidationError("need t >= 0 and 0 <= p <= 1")
    if t == 0:
        return 0.0
    q, tail_q, approx = _q_extended(profile, t)
    rho = np.arange(len(q))
    total = float(np.dot(binom.pmf(rho, t, p), q))
    if t > profile.rho_max:
        if approx:
            warnings.warn(
                f"q_rho beyond rho_max={profile.rho_max} replaced by its last value",
                ApproximationWarning,
                stacklevel=2,
            )
        total += tail_q * float(binom.sf(profile.rho_max, t, p))
    return min(total, 1.0)


PT_GUARD = 0.1


def pi_asymptotic(t: int, p: float, profile: ActivationProfile) -> float:
    """Leading term (pt)^rho* q_rho* / rho*!, valid only while pt is small."""
    if t < 0:
        raise ValidationError("t must be nonnegative")
    if p * t >= PT_GUARD:
        raise OutOfRegimeError(f"p*t = {p * t:g} >= {PT_GUARD}; use pi_exact")
    k = profile.rho_star
    return (p * t) ** k * profile.q_rho_star / math.factorial(k)
