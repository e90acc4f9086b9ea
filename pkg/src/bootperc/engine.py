"""Cascade simulators.

Three descriptions of the same percolation process:

* ``run_generations`` -- the textbook fixed point, one generation at a time.
  Written in plain numpy and kept deliberately simple; it is the oracle the
  other two are checked against.
* ``run_node_process`` -- one usable active node is used per step and fires
  its edges once each toward nodes not yet used.  Works on realized graphs
  and on implicit G(n, p), where edges are revealed only when a node is used.
  ``run_block_process`` is the same kernel with per-community scheduling.
* ``run_edge_process`` -- one usable edge is consumed per step (unit weights,
  integer thresholds, possibly degree dependent).

Every run takes ``rng`` as a ``numpy.random.Generator`` or an int seed.  A
single run is sequential; independent runs may share a graph across threads
(the kernels release the GIL).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numba
import numpy as np

from .errors import ValidationError
from .graphs import ErImplicit, Graph, validate_spec
from .influence import SUM_TOL, InfluenceSpec

PAIRED = "paired"
GLOBAL_UNIFORM = "global"


# --------------------------------------------------------------------------
# seeds and outcomes
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class UniformCount:
    a: int


@dataclass(frozen=True)
class PerCommunity:
    counts: tuple[int, ...]


@dataclass(frozen=True)
class Explicit:
    nodes: tuple[int, ...]


SeedSpec = Union[UniformCount, PerCommunity, Explicit]


def describe_seeds(seeds) -> str:
    if isinstance(seeds, UniformCount):
        return f"uniform:{seeds.a}"
    if isinstance(seeds, PerCommunity):
        return "per-community:" + "/".join(map(str, seeds.counts))
    if isinstance(seeds, Explicit):
        return f"explicit:{len(seeds.nodes)}"
    return f"explicit:{len(np.atleast_1d(seeds))}"


def resolve_seeds(seeds, n: int, community: np.ndarray | None, rng: np.random.Generator) -> np.ndarray:
    """Concrete seed nodes, in a uniformly random order for random specs."""
    if isinstance(seeds, (int, np.integer)):
        seeds = UniformCount(int(seeds))
    if isinstance(seeds, UniformCount):
        if not 0 <= seeds.a <= n:
            raise ValidationError(f"seed count {seeds.a} not in [0, {n}]")
        return rng.choice(n, size=seeds.a, replace=False).astype(np.int64)
    if isinstance(seeds, PerCommunity):
        if community is None:
            raise ValidationError("per-community seeds need community labels")
        K = int(community.max()) + 1
        if len(seeds.counts) != K:
            raise ValidationError(f"{len(seeds.counts)} seed counts for {K} communities")
        picks = []
        for k, a_k in enumerate(seeds.counts):
            members = np.flatnonzero(community == k)
            if not 0 <= a_k <= len(members):
                raise ValidationError(f"community {k} has {len(members)} nodes, asked for {a_k} seeds")
            picks.append(rng.choice(members, size=a_k, replace=False))
        out = np.concatenate(picks).astype(np.int64) if picks else np.empty(0, np.int64)
        return rng.permutation(out)
    nodes = np.asarray(seeds.nodes if isinstance(seeds, Explicit) else seeds, dtype=np.int64).ravel()
    if len(np.unique(nodes)) != len(nodes):
        raise ValidationError("explicit seed list has duplicates")
    if len(nodes) and (nodes.min() < 0 or nodes.max() >= n):
        raise ValidationError("seed id out of range")
    return nodes


@dataclass
class CascadeOutcome:
    final_active: int
    steps: int
    per_community_active: tuple[int, ...]
    trajectory: np.ndarray | None = field(default=None, repr=False)
    rng_seed: int | None = None
    active: np.ndarray | None = field(default=None, repr=False)
    used_per_community: tuple[int, ...] | None = None

    def active_set(self) -> set[int]:
        return set(np.flatnonzero(self.active).tolist())

    def csv_row(self, model: str, seeds: str, seed_label: str | None = None) -> str:
        comm = "/".join(map(str, self.per_community_active))
        seed = seed_label or ("" if self.rng_seed is None else str(self.rng_seed))
        return f"{model},{seeds},{seed},{self.final_active},{self.steps},{comm}"


OUTCOME_HEADER = "model,seeds,rng_seed,final_active,steps,per_community"


@dataclass(frozen=True)
class Realization:
    """Per-node thresholds and per-edge weights shared between simulators."""
    thresholds: np.ndarray
    weights: np.ndarray | None  # indexed by edge id; None means constant weight


def _as_rng(rng) -> tuple[np.random.Generator, int | None]:
    if isinstance(rng, np.random.Generator):
        return rng, None
    if rng is None:
        return np.random.default_rng(), None
    return np.random.default_rng(int(rng)), int(rng)


def draw_realization(g: Graph, spec: InfluenceSpec, rng) -> Realization:
    rng, _ = _as_rng(rng)
    thr = spec.threshold.sample(rng, g.n)
    w = None if len(spec.weight.values) == 1 else spec.weight.sample(rng, g.n_edges)
    return Realization(thr, w)


def _trajectory(t: np.ndarray, a: np.ndarray, a0: int) -> np.ndarray:
    """(t, usable count) pairs starting at (0, a0), thinned to about 1000 rows."""
    stride = max(1, len(t) // 1000)
    traj = np.column_stack([np.concatenate([[0], t]), np.concatenate([[a0], a])])
    return traj[::stride]


# --------------------------------------------------------------------------
# node process kernel
# --------------------------------------------------------------------------

@numba.njit(cache=True, nogil=True)
def _draw(rng, vals, cum):
    x = rng.random()
    i = 0
    while i < len(vals) - 1 and x >= cum[i]:
        i += 1
    return vals[i]


@numba.njit(cache=True, nogil=True)
def _node_kernel(rng, n, indptr, indices, eid, implicit, p, community, K, paired,
                 thr, w_mode, w_const, w_edge, w_vals, w_cum, shuffle,
                 seeds, checkpoints, record):
    active = np.zeros(n, dtype=np.uint8)
    used = np.zeros(n, dtype=np.uint8)
    counter = np.zeros(n, dtype=np.float64)
    off = np.zeros(K + 1, dtype=np.int64)
    for i in range(n):
        off[community[i] + 1] += 1
    for k in range(K):
        off[k + 1] += off[k]
    pool = np.empty(n, dtype=np.int64)
    cnt = np.zeros(K, dtype=np.int64)
    used_comm = np.zeros(K, dtype=np.int64)
    usable = 0
    n_active = 0

    if implicit:
        perm = np.arange(n)
        pos = np.arange(n)
        stamp = np.zeros(n, dtype=np.int64)
    else:
        perm = np.empty(0, dtype=np.int64)
        pos = np.empty(0, dtype=np.int64)
        stamp = np.empty(0, dtype=np.int64)
    n_used = 0
    stampv = 0

    max_deg = 0
    if shuffle and not implicit:
        for i in range(n):
            max_deg = max(max_deg, indptr[i + 1] - indptr[i])
    buf = np.empty(max_deg, dtype=np.int64)

    cap = n + 1 if record else 0
    traj_t = np.empty(cap, dtype=np.int64)
    traj_a = np.empty(cap, dtype=np.int64)
    nrec = 0

    finals = np.zeros(len(checkpoints), dtype=np.int64)
    steps_at = np.zeros(len(checkpoints), dtype=np.int64)
    chosen = np.empty(K, dtype=np.int64)
    step = 0
    seed_ptr = 0

    for c in range(len(checkpoints)):
        while seed_ptr < checkpoints[c]:
            s = seeds[seed_ptr]
            seed_ptr += 1
            if active[s] == 0:
                active[s] = 1
                n_active += 1
                k = community[s]
                pool[off[k] + cnt[k]] = s
                cnt[k] += 1
                usable += 1

        while usable > 0:
            nch = 0
            if paired:
                for k in range(K):
                    if cnt[k] > 0:
                        x = min(int(rng.random() * cnt[k]), cnt[k] - 1)
                        chosen[nch] = pool[off[k] + x]
                        pool[off[k] + x] = pool[off[k] + cnt[k] - 1]
                        cnt[k] -= 1
                        nch += 1
            else:
                x = min(int(rng.random() * usable), usable - 1)
                k = 0
                while x >= cnt[k]:
                    x -= cnt[k]
                    k += 1
                chosen[0] = pool[off[k] + x]
                pool[off[k] + x] = pool[off[k] + cnt[k] - 1]
                cnt[k] -= 1
                nch = 1
            usable -= nch

            for ci in range(nch):
                z = chosen[ci]
                used[z] = 1
                used_comm[community[z]] += 1
                if implicit:
                    pz = pos[z]
                    other = perm[n_used]
                    perm[n_used] = z
                    perm[pz] = other
                    pos[z] = n_used
                    pos[other] = pz
                    n_used += 1

            for ci in range(nch):
                z = chosen[ci]
                if implicit:
                    m = n - n_used
                    if m <= 0 or p <= 0.0:
                        continue
                    kk = rng.binomial(m, p)
                    stampv += 1
                    for jj in range(m - kk, m):
                        x = min(int(rng.random() * (jj + 1)), jj)
                        q = n_used + x
                        if stamp[q] == stampv:
                            q = n_used + jj
                        stamp[q] = stampv
                        j = perm[q]
                        if w_mode == 0:
                            w = w_const
                        else:
                            w = _draw(rng, w_vals, w_cum)
                        counter[j] += w
                        if active[j] == 0 and counter[j] >= thr[j] - 1e-9:
                            active[j] = 1
                            n_active += 1
                            pool[off[0] + cnt[0]] = j
                            cnt[0] += 1
                            usable += 1
                else:
                    lo = indptr[z]
                    hi = indptr[z + 1]
                    deg = hi - lo
                    if shuffle:
                        for e in range(deg):
                            buf[e] = lo + e
                        for e in range(deg - 1, 0, -1):
                            r = min(int(rng.random() * (e + 1)), e)
                            tmp = buf[e]
                            buf[e] = buf[r]
                            buf[r] = tmp
                    for e0 in range(deg):
                        e = buf[e0] if shuffle else lo + e0
                        j = indices[e]
                        if used[j] == 1:
                            continue
                        if w_mode == 0:
                            w = w_const
                        elif w_mode == 1:
                            w = w_edge[eid[e]]
                        else:
                            w = _draw(rng, w_vals, w_cum)
                        counter[j] += w
                        if active[j] == 0 and counter[j] >= thr[j] - 1e-9:
                            active[j] = 1
                            n_active += 1
                            kj = community[j]
                            pool[off[kj] + cnt[kj]] = j
                            cnt[kj] += 1
                            usable += 1
            step += 1
            if record:
                traj_t[nrec] = step
                traj_a[nrec] = usable
                nrec += 1
        finals[c] = n_active
        steps_at[c] = step
    return finals, steps_at, active, used_comm, traj_t[:nrec].copy(), traj_a[:nrec].copy()


def _node_args(target, spec: InfluenceSpec, thresholds, weights):
    w = spec.weight
    w_vals = np.asarray(w.values, dtype=np.float64)
    w_cum = w.cumulative()
    if weights is not None:
        mode, w_edge = 1, np.asarray(weights, dtype=np.float64)
    elif len(w.values) == 1:
        mode, w_edge = 0, np.empty(0)
    else:
        mode, w_edge = 2, np.empty(0)
    if isinstance(target, ErImplicit):
        if weights is not None:
            raise ValidationError("implicit G(n,p) draws weights on reveal; per-edge weights not allowed")
        validate_spec(target)
        n = target.n
        empty_i = np.zeros(1, dtype=np.int64)
        graph_args = (n, empty_i, np.zeros(0, np.int32), np.zeros(0, np.int32), True, float(target.p),
                      np.zeros(n, np.int32), 1)
        community = None
    else:
        g = target
        if mode == 1 and len(w_edge) != g.n_edges:
            raise ValidationError("need one weight per edge")
        graph_args = (g.n, g.indptr, g.indices, g.edge_id, False, 0.0, g.community, 1)
        community = g.community
    return graph_args, community, (mode, float(w_vals[0]), w_edge, w_vals, w_cum)


def _run_node(target, seeds, spec: InfluenceSpec, rng, *, thresholds=None, weights=None,
              schedule=GLOBAL_UNIFORM, trajectory=False) -> CascadeOutcome:
    rng, seed = _as_rng(rng)
    graph_args, community, wargs = _node_args(target, spec, thresholds, weights)
    n = graph_args[0]
    seed_nodes = resolve_seeds(seeds, n, community, rng)
    thr = spec.threshold.sample(rng, n) if thresholds is None else np.asarray(thresholds, dtype=np.float64)
    if len(thr) != n:
        raise ValidationError("need one threshold per node")
    if community is not None:
        # per-community buffers are indexed by label even in global mode
        K = int(community.max()) + 1
        graph_args = graph_args[:-1] + (K,)
    finals, steps, active, used_comm, tt, ta = _node_kernel(
        rng, *graph_args, schedule == PAIRED, thr, *wargs, spec.sequential_semantics and not isinstance(target, ErImplicit),
        seed_nodes, np.array([len(seed_nodes)], dtype=np.int64), trajectory,
    )
    act = active.astype(bool)
    per_comm = (int(act.sum()),) if community is None else tuple(
        int(x) for x in np.bincount(community[act], minlength=int(community.max()) + 1))
    return CascadeOutcome(
        final_active=int(finals[0]),
        steps=int(steps[0]),
        per_community_active=per_comm,
        trajectory=_trajectory(tt, ta, len(seed_nodes)) if trajectory else None,
        rng_seed=seed,
        active=act,
        used_per_community=tuple(int(x) for x in used_comm),
    )


def run_node_process(target: Graph | ErImplicit, seeds, spec: InfluenceSpec, rng=None, *,
                     thresholds=None, weights=None, trajectory: bool = False) -> CascadeOutcome:
    """Use one uniformly chosen usable node per step until none is left.

    ``target`` is a realized graph or an ``ErImplicit`` spec.  On the latter,
    the number of new neighbours of a used node is one binomial draw over
    the not-yet-used nodes and the recipients are picked without replacement.
    With negative weights each used node fires its edges one at a time in a
    fresh random order; a node that reached its threshold stays active.
    """
    return _run_node(target, seeds, spec, rng, thresholds=thresholds, weights=weights,
                     trajectory=trajectory)


def run_block_process(g: Graph, seeds, spec: InfluenceSpec, rng=None, schedule: str = PAIRED, *,
                      thresholds=None, weights=None, trajectory: bool = False) -> CascadeOutcome:
    """Node process on a community-labelled graph.

    ``paired`` uses one usable node from every community that has one, per
    step (community order breaks ties); ``global`` uses a single node chosen
    uniformly among all usable nodes.
    """
    if schedule not in (PAIRED, GLOBAL_UNIFORM):
        raise ValidationError(f"unknown schedule {schedule!r}")
    if not isinstance(g, Graph) or g.n_communities < 2:
        raise ValidationError("block process needs a graph with community labels (K >= 2)")
    return _run_node(g, seeds, spec, rng, thresholds=thresholds, weights=weights,
                     schedule=schedule, trajectory=trajectory)


# --------------------------------------------------------------------------
# edge process
# --------------------------------------------------------------------------

@numba.njit(cache=True, nogil=True)
def _edge_kernel(rng, n, indptr, indices, need, seeds, checkpoints, record):
    active = np.zeros(n, dtype=np.uint8)
    marks = np.zeros(n, dtype=np.int64)
    B = np.empty(len(indices), dtype=np.int32)
    bsz = 0
    n_active = 0
    t = 0
    cap = len(indices) + 1 if record else 0
    traj_t = np.empty(cap, dtype=np.int64)
    traj_a = np.empty(cap, dtype=np.int64)
    mark_total = 0
    max_marks_excess = 0
    nrec = 0
    finals = np.zeros(len(checkpoints), dtype=np.int64)
    steps_at = np.zeros(len(checkpoints), dtype=np.int64)
    seed_ptr = 0
    fresh = np.empty(len(seeds), dtype=np.int64)
    for c in range(len(checkpoints)):
        nf = 0
        while seed_ptr < checkpoints[c]:
            s = seeds[seed_ptr]
            seed_ptr += 1
            if active[s] == 0:
                active[s] = 1
                n_active += 1
                fresh[nf] = s
                nf += 1
        for f in range(nf):
            s = fresh[f]
            for e in range(indptr[s], indptr[s + 1]):
                j = indices[e]
                if active[j] == 0:
                    B[bsz] = j
                    bsz += 1
        while bsz > 0:
            x = min(int(rng.random() * bsz), bsz - 1)
            j = B[x]
            bsz -= 1
            B[x] = B[bsz]
            t += 1
            if active[j] == 0:
                marks[j] += 1
                mark_total += 1
                if marks[j] >= need[j]:
                    active[j] = 1
                    n_active += 1
                    for e in range(indptr[j], indptr[j + 1]):
                        jj = indices[e]
                        if active[jj] == 0:
                            B[bsz] = jj
                            bsz += 1
            if mark_total - t > max_marks_excess:
                max_marks_excess = mark_total - t
            if record:
                traj_t[nrec] = t
                traj_a[nrec] = bsz
                nrec += 1
        finals[c] = n_active
        steps_at[c] = t
    return finals, steps_at, active, traj_t[:nrec].copy(), traj_a[:nrec].copy(), max_marks_excess


def marks_needed(g: Graph, r) -> np.ndarray:
    """Per-node integer thresholds from an int, a degree rule, or a per-node array."""
    deg = g.degrees
    if callable(r):
        uniq = np.unique(deg)
        table = {int(d): int(r(int(d))) for d in uniq}
        need = np.array([table[int(d)] for d in deg], dtype=np.int64) if len(deg) else np.empty(0, np.int64)
    elif np.ndim(r) == 0:
        need = np.full(g.n, int(r), dtype=np.int64)
    else:
        thr = np.asarray(r, dtype=np.float64)
        if len(thr) != g.n:
            raise ValidationError("need one threshold per node")
        need = np.ceil(thr - SUM_TOL).astype(np.int64)
    if len(need) and need.min() < 2:
        raise ValidationError("edge process needs thresholds r(d) >= 2 for every present degree")
    return need


def _seed_edges(g: Graph, seeds: np.ndarray) -> int:
    """Initial usable edges: seed to non-seed half-edges."""
    is_seed = np.zeros(g.n, dtype=bool)
    is_seed[seeds] = True
    rows = np.repeat(np.arange(g.n), g.degrees)
    return int(np.count_nonzero(is_seed[rows] & ~is_seed[g.indices]))


def run_edge_process(g: Graph, seeds, r, rng=None, *, trajectory: bool = False) -> CascadeOutcome:
    """Consume one uniformly chosen usable edge per step (unit weights).

    ``r`` is an int, a callable ``degree -> threshold`` or a per-node array of
    thresholds (rounded up to whole marks).
    """
    rng, seed = _as_rng(rng)
    need = marks_needed(g, r)
    seed_nodes = resolve_seeds(seeds, g.n, g.community, rng)
    finals, steps, active, tt, ta, excess = _edge_kernel(
        rng, g.n, g.indptr, g.indices, need, seed_nodes,
        np.array([len(seed_nodes)], dtype=np.int64), trajectory)
    assert excess <= 0, "more marks than consumed edges"
    act = active.astype(bool)
    return CascadeOutcome(
        final_active=int(finals[0]),
        steps=int(steps[0]),
        per_community_active=tuple(int(x) for x in np.bincount(g.community[act], minlength=g.n_communities)),
        trajectory=_trajectory(tt, ta, _seed_edges(g, seed_nodes)) if trajectory else None,
        rng_seed=seed,
        active=act,
    )


# --------------------------------------------------------------------------
# generation oracle
# --------------------------------------------------------------------------

def run_generations(g: Graph, seeds, spec: InfluenceSpec, rng=None, *,
                    thresholds=None, weights=None) -> CascadeOutcome:
    """Least fixed point by synchronous generations (nonnegative weights only).

    ``steps`` counts generations.
    """
    if spec.sequential_semantics:
        raise ValidationError("negative weights make the outcome order dependent; use run_node_process")
    rng, seed = _as_rng(rng)
    seed_nodes = resolve_seeds(seeds, g.n, g.community, rng)
    thr = spec.threshold.sample(rng, g.n) if thresholds is None else np.asarray(thresholds, dtype=float)
    if weights is None:
        if len(spec.weight.values) == 1:
            weights = np.full(g.n_edges, spec.weight.values[0])
        else:
            weights = spec.weight.sample(rng, g.n_edges)
    weights = np.asarray(weights, dtype=float)
    rows = np.repeat(np.arange(g.n), g.degrees)
    w_slot = weights[g.edge_id]
    active = np.zeros(g.n, dtype=bool)
    active[seed_nodes] = True
    generations = 0
    while True:
        src = active[rows]
        pressure = np.bincount(g.indices[src], weights=w_slot[src], minlength=g.n)
        new = ~active & (pressure >= thr - SUM_TOL)
        if not new.any():
            break
        active |= new
        generations += 1
    return CascadeOutcome(
        final_active=int(active.sum()),
        steps=generations,
        per_community_active=tuple(int(x) for x in np.bincount(g.community[active], minlength=g.n_communities)),
        rng_seed=seed,
        active=active,
    )


# --------------------------------------------------------------------------
# nested seeding
# --------------------------------------------------------------------------

def nested_final_sizes(target, seed_order: np.ndarray, checkpoints: Sequence[int], rng, *,
                       spec: InfluenceSpec | None = None, r=None) -> np.ndarray:
    """Final sizes A*(a) for every a in ``checkpoints`` on one realization.

    Seeds are added in ``seed_order``; after the process dies out the next
    batch is added and the process resumed.  With nonnegative weights the
    final set does not depend on the order of use, so each A*(a) has the law
    of a run started from the first ``a`` seeds.
    """
    cps = np.asarray(checkpoints, dtype=np.int64)
    if len(cps) and (np.any(np.diff(cps) < 0) or cps[-1] > len(seed_order)):
        raise ValidationError("checkpoints must be nondecreasing and within the seed order")
    seeds = np.asarray(seed_order, dtype=np.int64)
    if r is not None:
        need = marks_needed(target, r)
        finals, *_ = _edge_kernel(rng, target.n, target.indptr, target.indices, need, seeds, cps, False)
        return finals
    if spec is None:
        raise ValidationError("need an influence spec or a threshold rule")
    if spec.sequential_semantics:
        raise ValidationError("nested seeding is only valid for nonnegative weights")
    graph_args, _, wargs = _node_args(target, spec, None, None)
    thr = spec.threshold.sample(rng, graph_args[0])
    finals, *_ = _node_kernel(rng, *graph_args, False, thr, *wargs, False, seeds, cps, False)
    return finals
