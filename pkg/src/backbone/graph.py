"""Structural synergy: communicability of a weighted graph under edge failures.

Communicability is the matrix exponential of the weighted adjacency matrix;
entry ``(i, j)`` sums walks of every length from ``i`` to ``j``, longer walks
discounted factorially. With non-negative weights every walk contributes a
non-negative amount, so deleting edges can only lower it. That monotonicity
is what makes it a valid set function for the backbone engine, with the
edges as the ground set.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import ceil, log2

import numpy as np

from .engine import (
    EXACT_LIMIT,
    Exact,
    Mode,
    SearchStrategy,
    SetFunction,
    backbone,
)
from .errors import InfeasibleStrategyError
from .spectrum import Aggregator, BackboneSpectrum

__all__ = [
    "Edge",
    "WeightedGraph",
    "CommunicabilityResult",
    "matrix_exponential",
    "communicability",
    "mean_offdiagonal",
    "edge_failure_setfunction",
    "structural_synergy_backbone",
    "erdos_renyi_graph",
]

# Masks are evaluated in chunks of this many survivor graphs.
_CHUNK = 1 << 14


@dataclass(frozen=True)
class Edge:
    u: int
    v: int
    w: float


@dataclass(frozen=True)
class WeightedGraph:
    """Weighted graph on nodes ``0..num_nodes-1``.

    Weights must be finite and non-negative; self-loops and repeated edges
    are rejected. ``directed`` graphs are accepted but have seen far less use.
    """

    num_nodes: int
    edges: tuple[Edge, ...]
    directed: bool = False

    def __post_init__(self):
        edges = tuple(e if isinstance(e, Edge) else Edge(int(e[0]), int(e[1]), float(e[2]))
                      for e in self.edges)
        object.__setattr__(self, "edges", edges)
        if self.num_nodes < 1:
            raise ValueError("a graph needs at least one node")
        seen = set()
        for n, e in enumerate(edges):
            if not (0 <= e.u < self.num_nodes and 0 <= e.v < self.num_nodes):
                raise ValueError(f"edge {n} ({e.u},{e.v}) references a node outside 0..{self.num_nodes - 1}")
            if e.u == e.v:
                raise ValueError(f"edge {n} is a self-loop on node {e.u}")
            if not np.isfinite(e.w) or e.w < 0:
                raise ValueError(f"edge {n} ({e.u},{e.v}) has weight {e.w}; weights must be "
                                 "finite and non-negative for communicability to be monotone")
            key = (e.u, e.v) if self.directed else (min(e.u, e.v), max(e.u, e.v))
            if key in seen:
                raise ValueError(f"edge {n} ({e.u},{e.v}) duplicates an earlier edge")
            seen.add(key)

    @classmethod
    def from_edges(cls, edges, num_nodes: int | None = None, directed: bool = False) -> "WeightedGraph":
        edges = [Edge(int(u), int(v), float(w)) for u, v, w in edges]
        if num_nodes is None:
            num_nodes = max((max(e.u, e.v) for e in edges), default=-1) + 1
        return cls(max(num_nodes, 1), tuple(edges), directed)

    @classmethod
    def from_adjacency(cls, adjacency, directed: bool = False) -> "WeightedGraph":
        a = np.asarray(adjacency, dtype=np.float64)
        if not directed and not np.allclose(a, a.T):
            raise ValueError("undirected graph needs a symmetric adjacency matrix")
        n = a.shape[0]
        edges = [(i, j, a[i, j]) for i in range(n) for j in range(n)
                 if a[i, j] != 0 and i != j and (directed or i < j)]
        return cls.from_edges(edges, n, directed)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def adjacency(self, failed: int = 0) -> np.ndarray:
        """Adjacency matrix with the edges whose bit is set in ``failed`` removed."""
        a = np.zeros((self.num_nodes, self.num_nodes))
        for n, e in enumerate(self.edges):
            if not failed >> n & 1:
                a[e.u, e.v] += e.w
                if not self.directed:
                    a[e.v, e.u] += e.w
        return a

    def relabel(self, perm) -> "WeightedGraph":
        """Same graph with node ``i`` renamed ``perm[i]`` (edge order kept)."""
        perm = list(perm)
        return WeightedGraph(self.num_nodes,
                             tuple(Edge(perm[e.u], perm[e.v], e.w) for e in self.edges),
                             self.directed)


@dataclass(frozen=True, eq=False)
class CommunicabilityResult:
    matrix: np.ndarray
    mean_offdiagonal: float


def matrix_exponential(m, tol: float = 1e-12) -> np.ndarray:
    """``exp(m)`` for a square real matrix.

    Symmetric input goes through an eigendecomposition, which keeps the
    result exactly symmetric. Anything else uses scaling and squaring with
    a Taylor series, truncated once terms fall below ``tol`` relative to the
    partial sum.
    """
    a = np.asarray(m, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise ValueError("matrix_exponential needs a non-empty square matrix")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    if np.array_equal(a, a.T):
        lam, vec = np.linalg.eigh(a)
        out = (vec * np.exp(lam)) @ vec.T
        return (out + out.T) / 2
    return _expm_taylor(a, tol)


def _expm_taylor(a: np.ndarray, tol: float) -> np.ndarray:
    norm = np.linalg.norm(a, 1)
    squarings = max(0, int(ceil(log2(norm / 0.5)))) if norm > 0.5 else 0
    b = a / 2.0 ** squarings
    n = a.shape[0]
    result = np.eye(n)
    term = np.eye(n)
    for j in range(1, 100):
        term = term @ b / j
        result = result + term
        if np.abs(term).max() <= tol * 1e-3 * max(1.0, np.abs(result).max()):
            break
    for _ in range(squarings):
        result = result @ result
    return result


def mean_offdiagonal(matrix: np.ndarray) -> float:
    """Mean over ordered pairs ``i != j``; 0 for a single node."""
    n = matrix.shape[0]
    if n < 2:
        return 0.0
    return float((matrix.sum() - np.trace(matrix)) / (n * (n - 1)))


def communicability(g: WeightedGraph) -> CommunicabilityResult:
    """Communicability matrix ``exp(A)`` and its mean off-diagonal entry."""
    mat = matrix_exponential(g.adjacency())
    return CommunicabilityResult(mat, mean_offdiagonal(mat))


def _batched_mean_offdiagonal(g: WeightedGraph, masks: np.ndarray) -> np.ndarray:
    """Mean off-diagonal communicability of each survivor graph (undirected)."""
    n, m = g.num_nodes, g.num_edges
    out = np.empty(len(masks))
    if n < 2:
        out[:] = 0.0
        return out
    # one symmetric unit-pattern matrix per edge, flattened
    basis = np.zeros((m, n * n))
    for k, e in enumerate(g.edges):
        basis[k, e.u * n + e.v] = e.w
        basis[k, e.v * n + e.u] = e.w
    bits = np.arange(m, dtype=np.int64)
    for start in range(0, len(masks), _CHUNK):
        chunk = masks[start:start + _CHUNK]
        alive = ((chunk[:, None] >> bits[None, :]) & 1) == 0
        adj = (alive.astype(np.float64) @ basis).reshape(-1, n, n)
        lam, vec = np.linalg.eigh(adj)
        el = np.exp(lam)
        col = vec.sum(axis=1)  # 1^T v_k for each eigenvector
        total = np.einsum("bk,bk->b", el, col * col)
        trace = el.sum(axis=1)
        out[start:start + len(chunk)] = (total - trace) / (n * (n - 1))
    return out


def edge_failure_setfunction(g: WeightedGraph) -> SetFunction:
    """Mean off-diagonal communicability of the graph left after failing edges.

    Ground set: the edges, in the order of ``g.edges``. RAW_F mode: failing
    nothing gives the intact communicability, failing everything gives 0.
    """
    if g.directed:
        def one(mask: int) -> float:
            return mean_offdiagonal(matrix_exponential(g.adjacency(mask)))
        return SetFunction(g.num_edges, one, Mode.RAW_F, "communicability")

    def many(masks):
        return _batched_mean_offdiagonal(g, np.asarray(masks, dtype=np.int64))

    return SetFunction(g.num_edges, lambda mask: float(many(np.array([mask]))[0]),
                       Mode.RAW_F, "communicability", evaluate_many=many)


def structural_synergy_backbone(g: WeightedGraph, aggregator=Aggregator.MIN,
                                strategy: SearchStrategy | None = None,
                                workers: int = 1) -> BackboneSpectrum:
    """Backbone of communicability over edge failures.

    The atoms sum to the intact graph's mean off-diagonal communicability.
    A graph without edges has an empty spectrum.

    Raises
    ------
    InfeasibleStrategyError
        For an exact sweep over more than ``EXACT_LIMIT`` edges.
    """
    strat = strategy if strategy is not None else Exact()
    if isinstance(strat, Exact) and g.num_edges > EXACT_LIMIT:
        raise InfeasibleStrategyError(
            f"exact sweep over {g.num_edges} edges exceeds the {EXACT_LIMIT}-edge limit; "
            "use a sampled or annealed strategy")
    return backbone(edge_failure_setfunction(g), aggregator, strat, workers)


def erdos_renyi_graph(num_nodes: int, num_edges: int, rng, weight_rate: float = 1.0) -> WeightedGraph:
    """Uniform random graph with exactly ``num_edges`` edges and exponential weights."""
    rng = np.random.default_rng(rng)
    pairs = [(i, j) for i in range(num_nodes) for j in range(i + 1, num_nodes)]
    pick = np.sort(rng.choice(len(pairs), size=num_edges, replace=False))
    weights = rng.exponential(1.0 / weight_rate, size=num_edges)
    return WeightedGraph.from_edges(
        [(pairs[p][0], pairs[p][1], w) for p, w in zip(pick, weights)], num_nodes)
