"""Monte Carlo sweeps over the number of seeds.

Every run draws from its own stream ``SeedSequence(master_seed, spawn_key=key)``
with a key built from the grid index and run index, and results land in a
preallocated array, so the output does not depend on how runs are scheduled
across worker threads.
"""
from __future__ import annotations

import csv
import io
import logging
import math
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import criticality as crit
from .engine import (
    PAIRED,
    GLOBAL_UNIFORM,
    PerCommunity,
    UniformCount,
    nested_final_sizes,
    run_block_process,
    run_edge_process,
    run_node_process,
)
from .errors import BudgetExceeded, NoTransitionError, ValidationError
from .graphs import (
    Block,
    ConfigModel,
    ErExplicit,
    ErImplicit,
    FromEdgeList,
    GnM,
    Graph,
    PowerLawConfig,
    describe_spec,
    generate,
    powerlaw_degree_sequence,
    spec_node_count,
    validate_spec,
)
from .influence import InfluenceSpec, activation_profile

log = logging.getLogger(__name__)

COLUMNS = ["model", "params", "a", "runs", "mean_fraction", "stddev",
           "a_c_pred", "t_c_pred", "rho_star", "q_rho_star"]
TRANSITION_RULE = "first crossing of mean_fraction=0.5, interpolated linearly in log(a)"

# spawn-key prefixes keep the streams of different run families apart
_KEY_GRID = 0
_KEY_SHARED_GRAPH = 1
_KEY_REFINE = 2
_KEY_NESTED = 3


def log_grid(lo: float, hi: float, points: int) -> tuple[int, ...]:
    """Integer grid, roughly log-spaced from lo to hi, duplicates removed."""
    if lo < 1 or hi < lo or points < 1:
        raise ValidationError("need 1 <= lo <= hi and points >= 1")
    vals = np.unique(np.rint(np.geomspace(lo, hi, points)).astype(np.int64))
    return tuple(int(v) for v in vals)


@dataclass(frozen=True)
class SweepPlan:
    graph: object
    grid: tuple[int, ...]
    influence: InfluenceSpec | None = None
    rule: object = None  # int r or a callable / rule name r(d): run the edge process
    runs: int = 200
    master_seed: int = 0
    fresh_graph: bool = True
    nested: bool = False
    simplify: bool = False
    workers: int = 1
    budget_seconds: float | None = None
    work_warn: float = 5e10

    def __post_init__(self):
        validate_spec(self.graph)
        if self.runs < 1:
            raise ValidationError("runs must be >= 1")
        g = tuple(int(a) for a in self.grid)
        if not g:
            raise ValidationError("seed grid is empty")
        if any(b <= a for a, b in zip(g, g[1:])):
            raise ValidationError("seed grid must be strictly increasing")
        if g[0] < 0:
            raise ValidationError("seed counts must be nonnegative")
        n = spec_node_count(self.graph)
        if n is not None and g[-1] > n:
            raise ValidationError(f"seed count {g[-1]} exceeds n = {n}")
        object.__setattr__(self, "grid", g)
        if (self.influence is None) == (self.rule is None):
            raise ValidationError("give exactly one of an influence spec or a threshold rule")
        if isinstance(self.rule, str):
            object.__setattr__(self, "rule", crit.threshold_rule(self.rule))
        if isinstance(self.rule, (int, np.integer)) and isinstance(self.graph, ErImplicit):
            # a plain integer threshold on implicit G(n,p) is basic bootstrap: node process
            object.__setattr__(self, "influence", InfluenceSpec.basic(int(self.rule)))
            object.__setattr__(self, "rule", None)
        if self.rule is not None and isinstance(self.graph, ErImplicit):
            raise ValidationError("the edge process needs a realized graph; use ErExplicit")
        if self.nested and self.influence is not None and self.influence.sequential_semantics:
            raise ValidationError("nested seeding requires nonnegative weights")
        if self.workers < 1:
            raise ValidationError("workers must be >= 1")

    @property
    def process(self) -> str:
        return "edge" if self.rule is not None else "node"

    def describe(self) -> tuple[str, str]:
        model, params = describe_spec(self.graph)
        if self.influence is not None:
            params += ";" + self.influence.describe()
        else:
            r = self.rule
            params += f";r={getattr(r, 'label', None) or (r if isinstance(r, int) else 'r(d)')}"
        return model, params


@dataclass(frozen=True)
class SweepRow:
    a: int
    runs: int
    mean_fraction: float
    stddev: float


@dataclass
class SweepResult:
    plan: SweepPlan
    n: int
    finals: np.ndarray = field(repr=False)  # shape (len(grid), runs)
    prediction: crit.CriticalPrediction | None
    a_hat: float | None = None
    violations: list[int] = field(default_factory=list)

    @property
    def grid(self) -> np.ndarray:
        return np.asarray(self.plan.grid)

    @property
    def fractions(self) -> np.ndarray:
        return self.finals / self.n

    @property
    def means(self) -> np.ndarray:
        return self.fractions.mean(axis=1)

    @property
    def stds(self) -> np.ndarray:
        if self.finals.shape[1] < 2:
            return np.zeros(len(self.grid))
        return self.fractions.std(axis=1, ddof=1)

    @property
    def rows(self) -> list[SweepRow]:
        return [SweepRow(int(a), self.finals.shape[1], float(m), float(s))
                for a, m, s in zip(self.grid, self.means, self.stds)]

    def to_csv(self) -> str:
        return sweep_csv(self)


# --------------------------------------------------------------------------
# prediction attached to a plan
# --------------------------------------------------------------------------

def predict_for(graph, influence: InfluenceSpec | None = None, rule=None) -> crit.CriticalPrediction:
    """Closed-form (or numeric) prediction matching a graph spec."""
    r_const = rule if isinstance(rule, (int, np.integer)) else None
    if influence is not None and influence.unit_weights and len(influence.threshold.values) == 1:
        r_const = int(math.ceil(influence.threshold.values[0] - 1e-9))
    if isinstance(graph, (ErImplicit, ErExplicit)):
        prof = activation_profile(influence if influence is not None else InfluenceSpec.basic(r_const))
        return crit.critical_gnp(graph.n, graph.p, prof)
    if isinstance(graph, GnM):
        if r_const is not None and (influence is None or influence.unit_weights):
            return crit.critical_gnm(graph.n, graph.M, r_const)
        return crit.critical_gnp(graph.n, 2.0 * graph.M / graph.n**2, activation_profile(influence))
    if isinstance(graph, Block):
        if r_const is None:
            raise ValidationError("block predictions need a constant integer threshold")
        preds = crit.block_critical(graph.sizes, graph.P, r_const)
        n = sum(graph.sizes)
        worst = max(p.a_c / s for p, s in zip(preds, graph.sizes))
        a_c = n * worst
        return crit.CriticalPrediction("block", a_c / (1 - 1 / r_const), a_c, r_const, 1.0, "uniform-seeding")
    if isinstance(graph, (ConfigModel, PowerLawConfig, Graph)):
        if isinstance(graph, PowerLawConfig):
            ds = powerlaw_degree_sequence(graph.n, graph.beta, graph.d_min, graph.d_max)
            n = graph.n
        else:
            ds = np.asarray(graph.degrees)
            n = len(ds)
        if r_const is not None:
            return crit.critical_config(n, ds, r_const)
        if rule is not None:
            return crit.critical_config_numeric(n, ds, rule)
    raise ValidationError("no prediction available for this combination")


def _safe_prediction(plan: SweepPlan, shared: Graph | None) -> crit.CriticalPrediction | None:
    graph = shared if isinstance(plan.graph, FromEdgeList) else plan.graph
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", crit.RegimeWarning)
            return predict_for(graph, plan.influence, plan.rule)
    except (ValidationError, ValueError) as exc:
        log.info("no prediction: %s", exc)
        return None


# --------------------------------------------------------------------------
# running
# --------------------------------------------------------------------------

def _stream(master: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(master, spawn_key=key))


def _target(plan: SweepPlan, rng: np.random.Generator, shared: Graph | None):
    if isinstance(plan.graph, ErImplicit):
        return plan.graph
    if shared is not None:
        return shared
    return generate(plan.graph, rng, simplify_graph=plan.simplify)


def _one_run(plan: SweepPlan, target, a: int, rng: np.random.Generator) -> int:
    if plan.rule is not None:
        return run_edge_process(target, UniformCount(a), plan.rule, rng).final_active
    return run_node_process(target, UniformCount(a), plan.influence, rng).final_active


def _shared_graph(plan: SweepPlan) -> Graph | None:
    if isinstance(plan.graph, FromEdgeList):
        return generate(plan.graph, _stream(plan.master_seed, _KEY_SHARED_GRAPH), simplify_graph=plan.simplify)
    if plan.fresh_graph or isinstance(plan.graph, ErImplicit):
        return None
    return generate(plan.graph, _stream(plan.master_seed, _KEY_SHARED_GRAPH), simplify_graph=plan.simplify)


def _node_count(plan: SweepPlan, shared) -> int:
    n = spec_node_count(plan.graph)
    return shared.n if n is None else n


def _run_tasks(tasks: Sequence[Callable[[], None]], workers: int, deadline: float | None) -> None:
    def guarded(task):
        if deadline is not None and time.monotonic() > deadline:
            raise BudgetExceeded("sweep exceeded its time budget")
        task()

    if workers == 1:
        for t in tasks:
            guarded(t)
        return
    with ThreadPoolExecutor(max_workers=workers) as pool:
        for fut in [pool.submit(guarded, t) for t in tasks]:
            fut.result()


def run_sweep(plan: SweepPlan) -> SweepResult:
    t0 = time.monotonic()
    deadline = None if plan.budget_seconds is None else t0 + plan.budget_seconds
    shared = _shared_graph(plan)
    n = _node_count(plan, shared)
    grid = plan.grid
    finals = np.zeros((len(grid), plan.runs), dtype=np.int64)

    pred = _safe_prediction(plan, shared)
    work = float(plan.runs) * (1 if plan.nested else len(grid)) * n * max(1.0, _mean_degree(plan))
    if work > plan.work_warn:
        warnings.warn(f"sweep will touch ~{work:.3g} edge slots; consider fewer runs or nested seeding",
                      stacklevel=2)

    if plan.nested:
        def nested_task(ri):
            def task():
                rng = _stream(plan.master_seed, _KEY_NESTED, ri)
                target = _target(plan, rng, shared)
                order = rng.choice(n, size=grid[-1], replace=False)
                finals[:, ri] = nested_final_sizes(target, order, grid, rng,
                                                   spec=plan.influence, r=plan.rule)
            return task
        tasks = [nested_task(ri) for ri in range(plan.runs)]
    else:
        def grid_task(gi, ri):
            def task():
                rng = _stream(plan.master_seed, _KEY_GRID, gi, ri)
                finals[gi, ri] = _one_run(plan, _target(plan, rng, shared), grid[gi], rng)
            return task
        tasks = [grid_task(gi, ri) for gi in range(len(grid)) for ri in range(plan.runs)]
    _run_tasks(tasks, plan.workers, deadline)

    res = SweepResult(plan, n, finals, pred)
    res.violations = monotonicity_violations(res)
    try:
        res.a_hat = locate_transition(res)
    except NoTransitionError:
        res.a_hat = None
    return res


def _mean_degree(plan: SweepPlan) -> float:
    g = plan.graph
    if isinstance(g, (ErImplicit, ErExplicit)):
        return g.n * g.p
    if isinstance(g, GnM):
        return 2.0 * g.M / g.n
    if isinstance(g, ConfigModel):
        return float(np.mean(g.degrees))
    if isinstance(g, Block):
        sizes = np.asarray(g.sizes, dtype=float)
        return float(sizes @ np.asarray(g.P) @ sizes / sizes.sum())
    return 30.0


def monotonicity_violations(res: SweepResult) -> list[int]:
    """Grid indices i where mean(i+1) < mean(i) by more than 3 pooled standard errors."""
    m, s = res.means, res.stds
    runs = res.finals.shape[1]
    out = []
    for i in range(len(m) - 1):
        se = math.sqrt((s[i] ** 2 + s[i + 1] ** 2) / runs)
        if m[i] - m[i + 1] > 3 * se and m[i] - m[i + 1] > 0:
            out.append(i)
    return out


# --------------------------------------------------------------------------
# transition location
# --------------------------------------------------------------------------

def _crossing(a: np.ndarray, m: np.ndarray, level: float) -> float:
    below = np.nonzero(m < level)[0]
    if len(below) == 0 or not np.any(m >= level):
        raise NoTransitionError(f"no transition in range: mean fraction never crosses {level}")
    for i in range(len(m) - 1):
        if m[i] < level <= m[i + 1]:
            lo, hi = float(a[i]), float(a[i + 1])
            w = (level - m[i]) / (m[i + 1] - m[i])
            if lo <= 0:
                return lo + w * (hi - lo)
            return math.exp(math.log(lo) + w * (math.log(hi) - math.log(lo)))
    raise NoTransitionError(f"no transition in range: mean fraction never rises through {level}")


def locate_transition(result, level: float = 0.5) -> float:
    """First upward crossing of ``level``; accepts a SweepResult or (a, means)."""
    if isinstance(result, SweepResult):
        a, m = result.grid, result.means
    else:
        a, m = (np.asarray(x, dtype=float) for x in result)
    return _crossing(np.asarray(a, dtype=float), np.asarray(m, dtype=float), level)


def transition_width(result, lo: float = 0.1, hi: float = 0.9) -> float:
    """(a at 0.9 - a at 0.1) relative to the 0.5 crossing."""
    return (locate_transition(result, hi) - locate_transition(result, lo)) / locate_transition(result, 0.5)


def refine_transition(result: SweepResult, rounds: int = 4, runs: int | None = None) -> float:
    """Bisect (geometrically) between the bracketing grid points with extra runs."""
    plan = result.plan
    runs = runs or plan.runs
    a, m = list(map(float, result.grid)), list(map(float, result.means))
    locate_transition((a, m))
    i = next(i for i in range(len(m) - 1) if m[i] < 0.5 <= m[i + 1])
    lo, hi, m_lo, m_hi = a[i], a[i + 1], m[i], m[i + 1]
    shared = _shared_graph(plan)
    for rnd in range(rounds):
        mid = int(round(math.sqrt(max(lo, 1) * hi)))
        if mid <= lo or mid >= hi:
            break
        vals = np.zeros(runs, dtype=np.int64)

        def task_for(ri, mid=mid, vals=vals, rnd=rnd):
            def task():
                rng = _stream(plan.master_seed, _KEY_REFINE, rnd, ri)
                vals[ri] = _one_run(plan, _target(plan, rng, shared), mid, rng)
            return task
        _run_tasks([task_for(ri) for ri in range(runs)], plan.workers, None)
        m_mid = float(vals.mean()) / result.n
        if m_mid < 0.5:
            lo, m_lo = mid, m_mid
        else:
            hi, m_hi = mid, m_mid
    return locate_transition(([lo, hi], [m_lo, m_hi]))


# --------------------------------------------------------------------------
# CSV
# --------------------------------------------------------------------------

def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return "%.10g" % x


def sweep_csv(res: SweepResult) -> str:
    plan = res.plan
    model, params = plan.describe()
    pred = res.prediction
    meta = [
        f"master_seed={plan.master_seed}",
        f"process={plan.process}",
        f"fresh_graph={str(plan.fresh_graph).lower()}",
        f"nested={str(plan.nested).lower()}",
        f"n={res.n}",
        f"a_hat={_fmt(res.a_hat) or 'none'}",
        f"transition={TRANSITION_RULE}",
    ]
    if pred is not None:
        meta.append(f"prediction={pred.variant}")
    buf = io.StringIO()
    buf.write("# " + "; ".join(meta) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for row in res.rows:
        w.writerow([
            model, params, row.a, row.runs, _fmt(row.mean_fraction), _fmt(row.stddev),
            _fmt(pred.a_c) if pred else "", _fmt(pred.t_c) if pred else "",
            pred.rho_star if pred else "", _fmt(pred.q_rho_star) if pred else "",
        ])
    return buf.getvalue()


# --------------------------------------------------------------------------
# seed placement in block models
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class PlacementRow:
    allocation: tuple[int, ...]
    mean_fraction: float
    stddev: float
    stderr: float
    community_fractions: tuple[float, ...]


@dataclass(frozen=True)
class PlacementTable:
    rows: list[PlacementRow]
    best: int  # index of the allocation with the largest mean
    optimal_community: int  # argmax_k n_k p_kk^r
    argmax_allocation: int | None  # allocation putting every seed in optimal_community
    dominance_z: tuple[float, ...]  # (mean_argmax - mean_i) / pooled se, per allocation

    def lines(self) -> list[str]:
        out = ["allocation,mean_fraction,stddev,stderr,community_fractions"]
        for r in self.rows:
            out.append(",".join([
                "/".join(map(str, r.allocation)), _fmt(r.mean_fraction), _fmt(r.stddev),
                _fmt(r.stderr), "/".join(_fmt(x) for x in r.community_fractions)]))
        return out


def seed_placement_experiment(spec: Block, allocations: Sequence[Sequence[int]], *,
                              influence: InfluenceSpec | None = None, runs: int = 500,
                              master_seed: int = 0, schedule: str = GLOBAL_UNIFORM,
                              workers: int = 1, fresh_graph: bool = True) -> PlacementTable:
    """Mean final fraction for each per-community seed allocation."""
    validate_spec(spec)
    influence = influence or InfluenceSpec.basic(2)
    allocs = [tuple(int(x) for x in al) for al in allocations]
    if not allocs:
        raise ValidationError("no allocations given")
    K = len(spec.sizes)
    totals = {sum(al) for al in allocs}
    if len(totals) != 1:
        raise ValidationError("all allocations must place the same total number of seeds")
    for al in allocs:
        if len(al) != K:
            raise ValidationError(f"allocation {al} does not have {K} entries")
        for k, (c, s) in enumerate(zip(al, spec.sizes)):
            if c < 0 or c > s:
                raise ValidationError(f"allocation {al}: community {k} has only {s} nodes")
    n = int(sum(spec.sizes))
    finals = np.zeros((len(allocs), runs), dtype=np.int64)
    per_comm = np.zeros((len(allocs), runs, K), dtype=np.int64)
    shared = None if fresh_graph else generate(spec, _stream(master_seed, _KEY_SHARED_GRAPH))

    def task_for(ai, ri):
        def task():
            rng = _stream(master_seed, _KEY_GRID, ai, ri)
            g = shared if shared is not None else generate(spec, rng)
            out = run_block_process(g, PerCommunity(allocs[ai]), influence, rng, schedule=schedule)
            finals[ai, ri] = out.final_active
            per_comm[ai, ri] = out.per_community_active
        return task

    _run_tasks([task_for(ai, ri) for ai in range(len(allocs)) for ri in range(runs)], workers, None)
    frac = finals / n
    means = frac.mean(axis=1)
    stds = frac.std(axis=1, ddof=1) if runs > 1 else np.zeros(len(allocs))
    ses = stds / math.sqrt(runs)
    sizes = np.asarray(spec.sizes, dtype=float)
    rows = [PlacementRow(al, float(means[i]), float(stds[i]), float(ses[i]),
                         tuple(float(x) for x in per_comm[i].mean(axis=0) / sizes))
            for i, al in enumerate(allocs)]
    r = int(math.ceil(influence.threshold.min - 1e-9))
    P = np.asarray(spec.P, dtype=float)
    k0 = int(np.argmax([s * P[k, k] ** r for k, s in enumerate(spec.sizes)]))
    total = sum(allocs[0])
    target = next((i for i, al in enumerate(allocs) if al[k0] == total), None)
    if target is None:
        z = tuple(math.nan for _ in allocs)
    else:
        z = tuple(
            0.0 if i == target else
            (means[target] - means[i]) / max(math.hypot(ses[target], ses[i]), 1e-300)
            for i in range(len(allocs)))
    return PlacementTable(rows, int(np.argmax(means)), k0, target, z)
