"""Random graph families and edge-list ingestion.

Realized graphs are stored as CSR adjacency with an edge id per slot, so the
two half-entries of an undirected edge (and both entries of a self-loop) share
one id.  Parallel edges and loops are kept unless ``simplify`` is requested.
"""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

import numba
import numpy as np

from .errors import ValidationError

log = logging.getLogger(__name__)


# --------------------------------------------------------------------------
# specs
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ErImplicit:
    """G(n, p) never materialized; the node process reveals edges on use."""
    n: int
    p: float


@dataclass(frozen=True)
class ErExplicit:
    n: int
    p: float


@dataclass(frozen=True)
class GnM:
    """Multigraph with M edges whose endpoints are drawn independently."""
    n: int
    M: int


@dataclass(frozen=True)
class ConfigModel:
    degrees: np.ndarray = field(compare=False)


@dataclass(frozen=True)
class PowerLawConfig:
    n: int
    beta: float
    d_min: int
    d_max: int


@dataclass(frozen=True)
class Block:
    sizes: tuple[int, ...]
    P: np.ndarray = field(compare=False)


@dataclass(frozen=True)
class FromEdgeList:
    path: str


GraphSpec = Union[ErImplicit, ErExplicit, GnM, ConfigModel, PowerLawConfig, Block, FromEdgeList]


def validate_spec(spec: GraphSpec) -> None:
    def prob(x, name):
        if not 0.0 <= x <= 1.0:
            raise ValidationError(f"{name} = {x!r} is not a probability")

    if isinstance(spec, (ErImplicit, ErExplicit)):
        if spec.n < 1:
            raise ValidationError("n must be >= 1")
        prob(spec.p, "p")
    elif isinstance(spec, GnM):
        if spec.n < 1 or spec.M < 0:
            raise ValidationError("need n >= 1 and M >= 0")
    elif isinstance(spec, ConfigModel):
        d = np.asarray(spec.degrees)
        if d.ndim != 1 or len(d) == 0 or (d < 0).any():
            raise ValidationError("degree sequence must be a nonempty list of nonnegative ints")
    elif isinstance(spec, PowerLawConfig):
        if spec.n < 1:
            raise ValidationError("n must be >= 1")
        if spec.d_min > spec.d_max or spec.d_min < 0:
            raise ValidationError("need 0 <= d_min <= d_max")
    elif isinstance(spec, Block):
        P = np.asarray(spec.P, dtype=float)
        K = len(spec.sizes)
        if K < 1 or any(s < 1 for s in spec.sizes):
            raise ValidationError("block sizes must be positive")
        if P.shape != (K, K):
            raise ValidationError(f"P must be {K}x{K}")
        if not np.array_equal(P, P.T):
            raise ValidationError("P must be symmetric")
        if ((P < 0) | (P > 1)).any():
            raise ValidationError("entries of P must lie in [0, 1]")
    elif isinstance(spec, FromEdgeList):
        pass
    else:
        raise ValidationError(f"unknown graph spec {spec!r}")


def spec_node_count(spec: GraphSpec) -> int | None:
    if isinstance(spec, (ErImplicit, ErExplicit, GnM, PowerLawConfig)):
        return spec.n
    if isinstance(spec, ConfigModel):
        return len(spec.degrees)
    if isinstance(spec, Block):
        return int(sum(spec.sizes))
    return None


def describe_spec(spec: GraphSpec) -> tuple[str, str]:
    """(model id, compact parameter string) for CSV rows."""
    if isinstance(spec, ErImplicit):
        return "gnp", f"n={spec.n};p={spec.p:.12g}"
    if isinstance(spec, ErExplicit):
        return "gnp-explicit", f"n={spec.n};p={spec.p:.12g}"
    if isinstance(spec, GnM):
        return "gnm", f"n={spec.n};M={spec.M}"
    if isinstance(spec, ConfigModel):
        ds = DegreeSequence(np.asarray(spec.degrees))
        return "config", f"n={ds.n};dbar={ds.d_bar:.12g};dmax={ds.d_max}"
    if isinstance(spec, PowerLawConfig):
        return "powerlaw", f"n={spec.n};beta={spec.beta:g};dmin={spec.d_min};dmax={spec.d_max}"
    if isinstance(spec, Block):
        P = np.asarray(spec.P, dtype=float)
        flat = "|".join(",".join(f"{x:.12g}" for x in row) for row in P)
        return "block", f"sizes={','.join(map(str, spec.sizes))};P={flat}"
    if isinstance(spec, FromEdgeList):
        return "edgelist", f"path={spec.path}"
    raise ValidationError(f"unknown graph spec {spec!r}")


# --------------------------------------------------------------------------
# realized graphs
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class DegreeSequence:
    degrees: np.ndarray

    @property
    def n(self) -> int:
        return len(self.degrees)

    @property
    def d_bar(self) -> float:
        return float(np.sum(self.degrees, dtype=np.int64)) / self.n

    @property
    def d_max(self) -> int:
        return int(np.max(self.degrees))

    def distribution(self) -> tuple[np.ndarray, np.ndarray]:
        """Empirical law p(d) as (degree values, probabilities)."""
        vals, counts = np.unique(self.degrees, return_counts=True)
        return vals, counts / self.n

    @classmethod
    def read(cls, path) -> "DegreeSequence":
        degs = []
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                s = line.strip()
                if not s or s.startswith("#"):
                    continue
                try:
                    d = int(s)
                except ValueError:
                    raise ValidationError(f"{path}:{lineno}: not an integer: {s!r}") from None
                if d < 0:
                    raise ValidationError(f"{path}:{lineno}: negative degree")
                degs.append(d)
        if not degs:
            raise ValidationError(f"{path}: no degrees")
        return cls(np.asarray(degs, dtype=np.int64))

    def write(self, path) -> None:
        np.savetxt(path, self.degrees, fmt="%d")


@dataclass(frozen=True, eq=False)
class Graph:
    indptr: np.ndarray
    indices: np.ndarray
    edge_id: np.ndarray
    community: np.ndarray
    n_edges: int
    is_multigraph: bool = True

    @property
    def n(self) -> int:
        return len(self.indptr) - 1

    @property
    def n_communities(self) -> int:
        return int(self.community.max()) + 1 if self.n else 0

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def degree_sequence(self) -> DegreeSequence:
        return DegreeSequence(self.degrees.astype(np.int64))

    def neighbors(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i]:self.indptr[i + 1]]

    def community_sizes(self) -> np.ndarray:
        return np.bincount(self.community, minlength=self.n_communities)

    def edges(self) -> np.ndarray:
        """Edge multiset as an (m, 2) array ordered by edge id."""
        rows = np.repeat(np.arange(self.n, dtype=np.int64), self.degrees)
        _, first = np.unique(self.edge_id, return_index=True)
        out = np.empty((self.n_edges, 2), dtype=np.int64)
        out[:, 0] = rows[first]
        out[:, 1] = self.indices[first]
        return out

    def self_loops(self) -> int:
        return int(np.count_nonzero(self.edges()[:, 0] == self.edges()[:, 1]))


@numba.njit(cache=True, nogil=True)
def _csr_from_edges(n, u, v):
    m = len(u)
    deg = np.zeros(n + 1, dtype=np.int64)
    for e in range(m):
        deg[u[e] + 1] += 1
        deg[v[e] + 1] += 1
    for i in range(n):
        deg[i + 1] += deg[i]
    indptr = deg.copy()
    fill = deg[:n].copy()
    indices = np.empty(2 * m, dtype=np.int32)
    eid = np.empty(2 * m, dtype=np.int32)
    for e in range(m):
        a = u[e]
        b = v[e]
        indices[fill[a]] = b
        eid[fill[a]] = e
        fill[a] += 1
        indices[fill[b]] = a
        eid[fill[b]] = e
        fill[b] += 1
    return indptr, indices, eid


def from_edges(n: int, edges, community=None, multigraph: bool = True) -> Graph:
    e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if len(e) >= 2**31 - 1:
        raise ValidationError("more than 2^31 edges is not supported")
    if len(e) and (e.min() < 0 or e.max() >= n):
        raise ValidationError("edge endpoint out of range")
    indptr, indices, eid = _csr_from_edges(n, e[:, 0].copy(), e[:, 1].copy())
    if community is None:
        community = np.zeros(n, dtype=np.int32)
    return Graph(indptr, indices, eid, np.asarray(community, dtype=np.int32), len(e), multigraph)


def simplify(g: Graph) -> Graph:
    """Drop self-loops and collapse parallel edges."""
    e = g.edges()
    e = e[e[:, 0] != e[:, 1]]
    e = np.unique(np.sort(e, axis=1), axis=0)
    return from_edges(g.n, e, g.community, multigraph=False)


# --------------------------------------------------------------------------
# generators
# --------------------------------------------------------------------------

@numba.njit(cache=True, nogil=True)
def _gnm_edges(rng, n, M):
    u = np.empty(M, dtype=np.int64)
    v = np.empty(M, dtype=np.int64)
    for e in range(M):
        u[e] = min(int(rng.random() * n), n - 1)
        v[e] = min(int(rng.random() * n), n - 1)
    return u, v


@numba.njit(cache=True, nogil=True)
def _pair_stubs(rng, degrees, total):
    stubs = np.empty(total, dtype=np.int64)
    k = 0
    for i in range(len(degrees)):
        for _ in range(degrees[i]):
            stubs[k] = i
            k += 1
    for i in range(total - 1, 0, -1):
        j = min(int(rng.random() * (i + 1)), i)
        tmp = stubs[i]
        stubs[i] = stubs[j]
        stubs[j] = tmp
    return stubs[0::2].copy(), stubs[1::2].copy()


@numba.njit(cache=True, nogil=True)
def _skip(rng, logq):
    # geometric number of failures before the next success
    return int(math.floor(math.log(1.0 - rng.random()) / logq))


@numba.njit(cache=True, nogil=True)
def _block_edges(rng, sizes, offsets, P):
    K = len(sizes)
    cap = 16
    u = np.empty(cap, dtype=np.int64)
    v = np.empty(cap, dtype=np.int64)
    m = 0
    for a in range(K):
        for b in range(a, K):
            p = P[a, b]
            if p <= 0.0:
                continue
            na = sizes[a]
            nb = sizes[b]
            total = na * (na - 1) // 2 if a == b else na * nb
            idx = -1
            logq = math.log(1.0 - p) if p < 1.0 else -np.inf
            while True:
                if p >= 1.0:
                    idx += 1
                else:
                    idx += 1 + _skip(rng, logq)
                if idx >= total:
                    break
                if a == b:
                    # row i holds pairs (i, 0..i-1); invert the triangular index
                    i = int((1.0 + math.sqrt(1.0 + 8.0 * idx)) / 2.0)
                    while i * (i - 1) // 2 > idx:
                        i -= 1
                    while (i + 1) * i // 2 <= idx:
                        i += 1
                    j = idx - i * (i - 1) // 2
                    x = offsets[a] + i
                    y = offsets[a] + j
                else:
                    x = offsets[a] + idx // nb
                    y = offsets[b] + idx % nb
                if m == cap:
                    cap *= 2
                    u2 = np.empty(cap, dtype=np.int64)
                    v2 = np.empty(cap, dtype=np.int64)
                    u2[:m] = u[:m]
                    v2[:m] = v[:m]
                    u = u2
                    v = v2
                u[m] = x
                v[m] = y
                m += 1
    return u[:m].copy(), v[:m].copy()


def _even_degrees(degrees: np.ndarray) -> np.ndarray:
    d = np.asarray(degrees, dtype=np.int64).copy()
    if d.sum() % 2:
        i = int(np.argmax(d))
        d[i] -= 1
        warnings.warn(
            f"odd degree sum; dropped one half-edge from node {i} (degree {d[i] + 1})",
            stacklevel=3,
        )
    return d


def _block_graph(sizes, P, rng) -> Graph:
    sizes = np.asarray(sizes, dtype=np.int64)
    offsets = np.concatenate([[0], np.cumsum(sizes)[:-1]]).astype(np.int64)
    u, v = _block_edges(rng, sizes, offsets, np.asarray(P, dtype=np.float64))
    community = np.repeat(np.arange(len(sizes), dtype=np.int32), sizes)
    n = int(sizes.sum())
    indptr, indices, eid = _csr_from_edges(n, u, v)
    return Graph(indptr, indices, eid, community, len(u), False)


def generate(spec: GraphSpec, rng: np.random.Generator, simplify_graph: bool = False) -> Graph:
    """Draw one graph from ``spec``."""
    validate_spec(spec)
    if isinstance(spec, ErImplicit):
        raise ValidationError("ErImplicit is implicit-only; pass the spec to the node process")
    if isinstance(spec, ErExplicit):
        g = _block_graph([spec.n], np.array([[spec.p]]), rng)
    elif isinstance(spec, Block):
        g = _block_graph(spec.sizes, spec.P, rng)
    elif isinstance(spec, GnM):
        u, v = _gnm_edges(rng, spec.n, spec.M)
        indptr, indices, eid = _csr_from_edges(spec.n, u, v)
        g = Graph(indptr, indices, eid, np.zeros(spec.n, dtype=np.int32), spec.M, True)
    elif isinstance(spec, (ConfigModel, PowerLawConfig)):
        if isinstance(spec, PowerLawConfig):
            degrees = powerlaw_degree_sequence(spec.n, spec.beta, spec.d_min, spec.d_max).degrees
        else:
            degrees = spec.degrees
        d = _even_degrees(degrees)
        u, v = _pair_stubs(rng, d, int(d.sum()))
        n = len(d)
        indptr, indices, eid = _csr_from_edges(n, u, v)
        g = Graph(indptr, indices, eid, np.zeros(n, dtype=np.int32), len(u), True)
    elif isinstance(spec, FromEdgeList):
        g, _ = ingest_edge_list(spec.path)
    else:
        raise ValidationError(f"unknown graph spec {spec!r}")
    return simplify(g) if simplify_graph else g


def matched_config_model(g: Graph, rng: np.random.Generator) -> Graph:
    """Configuration-model multigraph on the degree sequence of ``g``."""
    return generate(ConfigModel(g.degrees.astype(np.int64)), rng)


# --------------------------------------------------------------------------
# power-law degree sequences
# --------------------------------------------------------------------------

def powerlaw_pmf(beta: float, d_min: int, d_max: int) -> tuple[np.ndarray, np.ndarray]:
    """Truncated law p(d) = C d^-beta on the integers d_min..d_max."""
    if d_min > d_max:
        raise ValidationError("d_min must not exceed d_max")
    d = np.arange(d_min, d_max + 1, dtype=np.float64)
    if d_min == 0:
        raise ValidationError("d_min must be >= 1 for a power law")
    logw = -beta * np.log(d)
    w = np.exp(logw - logw.max())
    return d.astype(np.int64), w / w.sum()


def powerlaw_degree_sequence(n: int, beta: float, d_min: int, d_max: int) -> DegreeSequence:
    """Deterministic quantile sequence d_i = inf{d : 1 - F(d) < i/n}, i = 1..n."""
    if d_min > d_max:
        raise ValidationError("d_min must not exceed d_max")
    if beta > 1 and d_max > n ** (1.0 / (beta - 1.0)) * (1 + 1e-9):
        warnings.warn(
            f"d_max={d_max} exceeds n^(1/(beta-1)) = {n ** (1.0 / (beta - 1.0)):.4g}",
            stacklevel=2,
        )
    d, pmf = powerlaw_pmf(beta, d_min, d_max)
    # survival computed from the right to keep tiny tail masses exact
    surv = np.concatenate([np.cumsum(pmf[::-1])[::-1][1:], [0.0]])
    levels = np.arange(1, n + 1, dtype=np.float64) / n
    idx = np.searchsorted(-surv, -levels, side="right")
    return DegreeSequence(d[np.minimum(idx, len(d) - 1)])


# --------------------------------------------------------------------------
# edge-list ingestion
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class IngestReport:
    original_ids: np.ndarray = field(repr=False)
    self_loops: int
    duplicates: int
    lines: int


def _scan_for_error(path) -> None:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            s = line.strip()
            if not s or s.startswith("#"):
                continue
            parts = s.split()
            if len(parts) != 2:
                raise ValidationError(f"{path}:{lineno}: expected two ids, got {s!r}")
            for tok in parts:
                try:
                    val = int(tok)
                except ValueError:
                    raise ValidationError(f"{path}:{lineno}: non-integer id {tok!r}") from None
                if val < 0:
                    raise ValidationError(f"{path}:{lineno}: negative id {tok!r}")


def read_edge_list(path) -> np.ndarray:
    if not Path(path).exists():
        raise ValidationError(f"no such file: {path}")
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            raw = np.loadtxt(path, dtype=np.int64, comments="#", ndmin=2)
    except ValueError:
        _scan_for_error(path)
        raise
    if raw.size == 0:
        return np.empty((0, 2), dtype=np.int64)
    if raw.shape[1] != 2 or (raw < 0).any():
        _scan_for_error(path)
    return raw


def ingest_edge_list(path) -> tuple[Graph, IngestReport]:
    """Simple undirected graph from a whitespace edge list; ids remapped to 0..n-1."""
    raw = read_edge_list(path)
    ids, inv = np.unique(raw.ravel(), return_inverse=True)
    e = inv.reshape(-1, 2)
    loops = e[:, 0] == e[:, 1]
    e = np.sort(e[~loops], axis=1)
    uniq = np.unique(e, axis=0)
    report = IngestReport(ids, int(loops.sum()), len(e) - len(uniq), len(raw))
    if report.self_loops or report.duplicates:
        log.info("%s: dropped %d self-loops, collapsed %d duplicate edges",
                 path, report.self_loops, report.duplicates)
    return from_edges(len(ids), uniq, multigraph=False), report


def write_edge_list(g: Graph, path, ids: np.ndarray | None = None) -> None:
    e = g.edges()
    if ids is not None:
        e = ids[e]
    np.savetxt(path, e, fmt="%d")
