"""Critical seed-set sizes and the constants around them.

All sizes are returned as floats; rounding to whole seeds is left to callers.
Times ``t_c`` are in units of used nodes, so ``a_c = (1 - 1/rho*) t_c`` holds
for every closed-form variant.  Edge-time versions are kept in ``extras``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.stats import binom

from .errors import BranchBoundaryError, DegenerateRegimeError, ValidationError
from .graphs import DegreeSequence, powerlaw_pmf
from .influence import ActivationProfile, InfluenceSpec, activation_profile


class RegimeWarning(UserWarning):
    """Parameters outside the asymptotic regime a formula was derived for."""


def _warn(msg: str) -> None:
    warnings.warn(msg, RegimeWarning, stacklevel=3)


@dataclass(frozen=True)
class CriticalPrediction:
    model: str
    t_c: float
    a_c: float
    rho_star: int
    q_rho_star: float
    variant: str
    d_star: float | None = None
    p_hat: float | None = None
    extras: dict = field(default_factory=dict)

    def lines(self) -> list[str]:
        out = [
            f"model      {self.model}",
            f"variant    {self.variant}",
            f"rho_star   {self.rho_star}",
            f"q_rho_star {self.q_rho_star:.10g}",
            f"t_c        {self.t_c:.10g}",
            f"a_c        {self.a_c:.10g}",
        ]
        if self.d_star is not None:
            out.append(f"d_star     {self.d_star:.10g}")
        if self.p_hat is not None:
            out.append(f"p_hat      {self.p_hat:.10g}")
        for k, v in self.extras.items():
            out.append(f"{k:<10} {v:.10g}" if isinstance(v, float) else f"{k:<10} {v}")
        return out


def _closed_form(n_eff: float, p_eff: float, rho: int, q: float) -> tuple[float, float]:
    """t_c = ((rho-1)!/(n p^rho q))^(1/(rho-1)) and a_c = (1 - 1/rho) t_c."""
    t_c = (math.factorial(rho - 1) / (n_eff * p_eff**rho * q)) ** (1.0 / (rho - 1))
    return t_c, (1.0 - 1.0 / rho) * t_c


# --------------------------------------------------------------------------
# G(n,p), G(n,M), configuration model
# --------------------------------------------------------------------------

def critical_gnp(n: int, p: float, profile: ActivationProfile | InfluenceSpec) -> CriticalPrediction:
    if isinstance(profile, InfluenceSpec):
        profile = activation_profile(profile)
    rho, q = profile.rho_star, profile.q_rho_star
    if q <= 0:
        raise ValidationError("invalid profile: q_rho* must be positive")
    if not (0 < p <= 1) or n < 1:
        raise ValidationError("need n >= 1 and 0 < p <= 1")
    if n * p < 10:
        _warn(f"n*p = {n * p:g} is small; the prediction assumes a large mean degree")
    if p >= n ** (-1.0 / rho):
        _warn(f"p = {p:g} is not below n^(-1/rho*) = {n ** (-1.0 / rho):g}")
    t_c, a_c = _closed_form(n, p, rho, q)
    return CriticalPrediction("gnp", t_c, a_c, rho, q, "closed-form")


def critical_gnm(n: int, M: int, r: int) -> CriticalPrediction:
    """Multigraph with M uniformly placed edges; mean degree 2M/n, pair probability ~2M/n^2."""
    if r < 2:
        raise ValidationError("r must be >= 2")
    if M <= 0 or n < 1:
        raise ValidationError("need n >= 1 and M > 0")
    if M < 5 * n:
        _warn(f"M = {M} is not much larger than n = {n}")
    d_bar = 2.0 * M / n
    a_c = (1.0 - 1.0 / r) * (math.factorial(r - 1) / (d_bar * (2.0 * M / n**2) ** (r - 1))) ** (1.0 / (r - 1))
    t_c = a_c / (1.0 - 1.0 / r)
    return CriticalPrediction("gnm", t_c, a_c, r, 1.0, "closed-form", extras={"t_c_edges": t_c * d_bar})


def _degree_law(dist) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(dist, DegreeSequence):
        return dist.distribution()
    if isinstance(dist, tuple) and len(dist) == 2:
        d, pd = (np.asarray(x) for x in dist)
    else:
        return DegreeSequence(np.asarray(dist, dtype=np.int64)).distribution()
    if abs(pd.sum() - 1.0) > 1e-9:
        raise ValidationError("degree probabilities must sum to 1")
    return d, pd


def d_star(dist, r: int) -> float:
    d, pd = _degree_law(dist)
    d = d.astype(float)
    d_bar = float(np.dot(d, pd))
    keep = d >= r
    return float(np.sum((d[keep] / d_bar) ** r * (d[keep] - r) / d_bar * pd[keep]))


def critical_config(n: int, dist, r: int) -> CriticalPrediction:
    """``dist`` is a DegreeSequence, a (degrees, probs) pair, or a raw degree list."""
    if r < 2:
        raise ValidationError("r must be >= 2")
    d, pd = _degree_law(dist)
    d_bar = float(np.dot(d.astype(float), pd))
    if not np.any((d > r) & (pd > 0)):
        raise ValidationError(f"no degree mass above r = {r}")
    if d_bar <= r:
        _warn(f"mean degree {d_bar:g} does not exceed r = {r}")
    ds = d_star((d, pd), r)
    a_c = (1.0 - 1.0 / r) * n * (math.factorial(r - 1) / (d_bar**r * ds)) ** (1.0 / (r - 1))
    t_c = a_c / (1.0 - 1.0 / r)
    return CriticalPrediction("config", t_c, a_c, r, 1.0, "closed-form", d_star=ds,
                              extras={"d_bar": d_bar, "t_c_edges": t_c * d_bar})


def _rule_table(d: np.ndarray, r_of_d) -> np.ndarray:
    if callable(r_of_d):
        return np.array([int(r_of_d(int(x))) for x in d], dtype=np.int64)
    return np.full(len(d), int(r_of_d), dtype=np.int64)


def critical_config_numeric(n: int, dist, r_of_d, *, seed_edges: float | None = None,
                            grid: int = 4000) -> CriticalPrediction:
    """Minimize m(t) = n sum_d P(Bin(d, t/(n dbar)) >= r(d)) (d - r(d)) p(d) - t.

    The first interior local minimum of m on (0, n dbar) gives t_c (in edge
    steps); a_c = -m(t_c) / b with b the number of usable edges one seed
    brings (``seed_edges``, default dbar).
    """
    d, pd = _degree_law(dist)
    d = d.astype(np.int64)
    r = _rule_table(d, r_of_d)
    if np.any(r[pd > 0] < 2):
        raise ValidationError("r(d) must be >= 2 on the support")
    d_bar = float(np.dot(d.astype(float), pd))
    b = d_bar if seed_edges is None else float(seed_edges)
    gain = (d - r).astype(float) * pd
    live = (d >= r) & (pd > 0)
    d_l, r_l, g_l = d[live], r[live], gain[live]
    t_max = n * d_bar

    def m(t):
        x = min(max(t / t_max, 0.0), 1.0)
        return n * float(np.dot(binom.sf(r_l - 1, d_l, x), g_l)) - t

    if not len(d_l):
        raise DegenerateRegimeError("no node can ever activate; m(t) has no interior minimum")
    ts = np.geomspace(t_max * 1e-12, t_max, grid)
    ms = np.array([m(t) for t in ts])
    rises = np.nonzero((ms[1:-1] < ms[:-2]) & (ms[1:-1] <= ms[2:]))[0]
    if len(rises) == 0:
        raise DegenerateRegimeError("m(t) has no interior minimum on (0, n*dbar)")
    i = int(rises[0]) + 1
    t_c = _golden(m, ts[i - 1], ts[i + 1], 1e-10)
    m_c = m(t_c)
    if m_c >= 0:
        raise DegenerateRegimeError("minimum of m(t) is nonnegative; no seeds are needed")
    return CriticalPrediction("config-numeric", t_c / b, -m_c / b, int(r_l.min()), 1.0, "numeric",
                              extras={"d_bar": d_bar, "t_c_edges": t_c})


def threshold_rule(name: str) -> Callable[[int], int]:
    """Degree-dependent threshold rules: ``sqrt``, ``log2`` or ``const:<r>``."""
    if name == "sqrt":
        rule = lambda d: max(2, math.isqrt(d - 1) + 1 if d > 0 else 0)
    elif name == "log2":
        rule = lambda d: max(2, (d - 1).bit_length() if d > 0 else 0)
    elif name.startswith("const:"):
        try:
            r = int(name[6:])
        except ValueError:
            raise ValidationError(f"bad rule {name!r}") from None
        rule = lambda d: r
    else:
        raise ValidationError(f"unknown threshold rule {name!r} (sqrt, log2, const:<r>)")
    rule.label = name
    return rule


# --------------------------------------------------------------------------
# power laws
# --------------------------------------------------------------------------

_BRANCH_EPS = 1e-6


def powerlaw_moment(k: float, beta: float, d_min: int, d_max: int, mode: str = "exact") -> float:
    """k-th moment of p(d) = C d^-beta on d_min..d_max.

    ``mode="asymptotic"`` uses the three-branch large-range approximation;
    close to its branch points (beta = 1, beta = k + 1) the exact sum is used.
    """
    if mode == "exact":
        d, pd = powerlaw_pmf(beta, d_min, d_max)
        return float(np.dot(d.astype(float) ** k, pd))
    if mode != "asymptotic":
        raise ValidationError(f"unknown mode {mode!r}")
    if k == 0:
        return 1.0
    if abs(beta - 1) < _BRANCH_EPS or abs(beta - k - 1) < _BRANCH_EPS:
        return powerlaw_moment(k, beta, d_min, d_max)
    if beta > k + 1:
        return d_min**k * (beta - 1) / (beta - k - 1)
    if beta > 1:
        return d_min ** (beta - 1) * d_max ** (k + 1 - beta) * (beta - 1) / (k + 1 - beta)
    return d_max**k * (1 - beta) / (k + 1 - beta)


def scaling_exponent_ac(r: int, beta: float, gamma: float, zeta: float) -> float:
    """Growth exponent of a_c in n for d_min = n^gamma, d_max = n^zeta."""
    if r < 2:
        raise ValidationError("r must be >= 2")
    if gamma < 0:
        raise ValidationError("gamma must be nonnegative")
    if abs(beta - 2) < _BRANCH_EPS or abs(beta - (r + 2)) < _BRANCH_EPS:
        raise BranchBoundaryError(f"beta = {beta:g} sits on a branch boundary (2 or r+2 = {r + 2})")
    if beta > r + 2:
        if gamma == 0:
            raise BranchBoundaryError("beta > r+2 requires gamma > 0")
        return 1 - gamma * r / (r - 1)
    if beta > 2:
        return 1 - (gamma * (beta - 2) + zeta * (r + 2 - beta)) / (r - 1)
    return 1 - zeta * r / (r - 1)


# --------------------------------------------------------------------------
# block model
# --------------------------------------------------------------------------

def _compositions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def p_hat_multinomial(P: np.ndarray, k: int, r: int) -> float:
    """(r! sum over rho_1+..+rho_K = r of prod_j P[j,k]^rho_j / rho_j!)^(1/r)."""
    col = np.asarray(P, dtype=float)[:, k]
    total = 0.0
    for rho in _compositions(r, len(col)):
        term = 1.0
        for pj, rj in zip(col, rho):
            term *= pj**rj / math.factorial(rj)
        total += term
    return (math.factorial(r) * total) ** (1.0 / r)


def _check_block(sizes, P, r) -> np.ndarray:
    P = np.asarray(P, dtype=float)
    K = len(sizes)
    if P.shape != (K, K):
        raise ValidationError(f"P must be {K}x{K}")
    if not np.allclose(P, P.T, rtol=0, atol=0):
        raise ValidationError("P must be symmetric")
    if r < 2:
        raise ValidationError("r must be >= 2")
    if any(s < 1 for s in sizes):
        raise ValidationError("community sizes must be positive")
    for i in range(K):
        for j in range(i + 1, K):
            if P[i, j] >= min(P[i, i], P[j, j]) and P[i, j] > 0:
                _warn(f"off-diagonal p[{i},{j}] = {P[i, j]:g} is not below both diagonal entries")
    return P


def block_critical(sizes, P, r: int) -> list[CriticalPrediction]:
    P = _check_block(sizes, P, r)
    out = []
    for k, n_k in enumerate(sizes):
        ph = p_hat_multinomial(P, k, r)
        t_c, a_c = _closed_form(n_k, ph, r, 1.0)
        if P[k, k] > 0:
            t_red, a_red = _closed_form(n_k, P[k, k], r, 1.0)
        else:
            t_red = a_red = math.inf
        out.append(CriticalPrediction(
            f"block[{k}]", t_c, a_c, r, 1.0, "augmented", p_hat=ph,
            extras={"a_c_reduced": a_red, "t_c_reduced": t_red, "n_k": int(n_k)},
        ))
    return out


@dataclass(frozen=True)
class SeedBounds:
    uniform_bound: float
    optimal_bound: float
    optimal_community: int
    single_community_uniform_bound: float  # optimal_bound * n / n_k0


def block_seed_bounds(sizes, P, r: int, epsilon: float = 0.05) -> SeedBounds:
    P = _check_block(sizes, P, r)
    sizes = [int(s) for s in sizes]
    n = sum(sizes)
    preds = block_critical(sizes, P, r)
    uniform = (1 + epsilon) * n * max(p.a_c / s for p, s in zip(preds, sizes))
    score = [s * P[k, k] ** r for k, s in enumerate(sizes)]
    k0 = int(np.argmax(score))  # first maximal index on ties
    if score[k0] <= 0:
        raise ValidationError("every community has p_kk = 0")
    opt = (1 + epsilon) * (1 - 1 / r) * (math.factorial(r - 1) / score[k0]) ** (1.0 / (r - 1))
    return SeedBounds(uniform, opt, k0, opt * n / sizes[k0])


# --------------------------------------------------------------------------
# rate constants and tail bounds
# --------------------------------------------------------------------------

def H(x: float) -> float:
    """1 - x + x log x, with H(0) = 1 and H(x) = inf for x < 0."""
    if x < 0:
        return math.inf
    if x == 0:
        return 1.0
    return 1.0 - x + x * math.log(x)


def _golden(f, lo: float, hi: float, rtol: float) -> float:
    inv = (math.sqrt(5) - 1) / 2
    c = hi - inv * (hi - lo)
    d = lo + inv * (hi - lo)
    fc, fd = f(c), f(d)
    while hi - lo > rtol * max(abs(lo), abs(hi), 1e-300):
        if fc <= fd:
            hi, d, fd = d, c, fc
            c = hi - inv * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + inv * (hi - lo)
            fd = f(d)
    return (lo + hi) / 2


def c1_objective(x: float, rho: int, alpha: float) -> float:
    return x**rho / (alpha * (rho - 1)) * H((x * rho - alpha * (rho - 1)) / x**rho)


def c1_constant(rho: int, alpha: float, rtol: float = 1e-8) -> tuple[float, float]:
    """(C1, minimizer) over x >= alpha (rho-1)/rho."""
    x0 = alpha * (rho - 1) / rho
    f = lambda x: c1_objective(x, rho, alpha)
    xs, fs = [x0], [f(x0)]
    step = max(x0, 1e-3)
    rises = 0
    while rises < 3:
        xs.append(x0 + step)
        fs.append(f(xs[-1]))
        rises = rises + 1 if fs[-1] > fs[-2] else 0
        step *= 2
        if len(xs) > 200:
            raise ValidationError("C1 objective did not turn upward")
    i = int(np.argmin(fs))
    lo = xs[max(i - 1, 0)]
    hi = xs[min(i + 1, len(xs) - 1)]
    x = _golden(f, lo, hi, rtol)
    return f(x), x


def phi(rho: int, alpha: float, tol: float = 1e-12) -> float:
    """Root in [0, 1] of x - x^rho/rho - alpha (1 - 1/rho)."""
    if not 0 < alpha < 1:
        raise ValidationError("phi needs alpha in (0, 1)")
    h = lambda x: x - x**rho / rho - alpha * (1 - 1 / rho)
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = (lo + hi) / 2
        if h(mid) < 0:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2


@dataclass(frozen=True)
class RateConstants:
    rho_star: int
    alpha: float
    C1: float | None
    C1_argmin: float | None
    C2: float | None
    phi_alpha: float | None
    subcritical_ratio: float | None  # predicted A*/a


def rate_constants(rho_star: int, alpha: float, epsilon: float | None = None) -> RateConstants:
    if rho_star < 2:
        raise ValidationError("rho* must be >= 2")
    if alpha <= 0:
        raise ValidationError("alpha must be positive")
    if alpha == 1:
        raise ValidationError("alpha = 1 is the boundary between the two regimes")
    if alpha > 1:
        c1, xm = c1_constant(rho_star, alpha)
        return RateConstants(rho_star, alpha, c1, xm, None, None, None)
    f = phi(rho_star, alpha)
    c2 = None
    if epsilon is not None:
        upper = (1 - alpha) * (1 - 1 / rho_star)
        if not 0 < epsilon < upper:
            raise ValidationError(f"epsilon must lie in (0, {upper:g})")
        c2 = H(1 + epsilon * rho_star) / (alpha * (rho_star - 1))
    ratio = rho_star / (rho_star - 1) * f / alpha
    return RateConstants(rho_star, alpha, None, None, c2, f, ratio)


def binom_tail_bound(n: int, p: float, k: float, side: str) -> float:
    """exp(-mu H(k/mu)) bounding P(Bin <= k) (lower, k <= mu) or P(Bin >= k) (upper, k > mu)."""
    mu = n * p
    if mu <= 0:
        raise ValidationError("need n*p > 0")
    if side == "lower":
        if k > mu:
            raise ValidationError(f"lower tail needs k <= mu = {mu:g}")
    elif side == "upper":
        if k <= mu:
            raise ValidationError(f"upper tail needs k > mu = {mu:g}")
    else:
        raise ValidationError(f"side must be 'lower' or 'upper', not {side!r}")
    return math.exp(-mu * H(k / mu))


def binom_tail_exact(n: int, p: float, k: int, side: str) -> float:
    if side == "lower":
        return float(binom.cdf(k, n, p))
    if side == "upper":
        return float(binom.sf(k - 1, n, p))
    raise ValidationError(f"side must be 'lower' or 'upper', not {side!r}")
