"""Graph storage, text I/O and structural algorithms."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from . import kernels
from .errors import UsageError

DENSE_LIMIT = 2000
DENSE_TOL = 1e-9
ITERATIVE_TOL = 1e-6


class Graph:
    """Finite simple graph on vertices ``0..n-1`` in CSR form.

    Arcs are sorted by ``(src, dst)``. An undirected graph stores both arcs of
    every edge, so its adjacency is symmetric; ``edges`` lists each edge once
    with ``u < v``. A directed graph may hold an antiparallel pair but never a
    repeated arc or a loop.
    """

    def __init__(self, n: int, edges=(), directed: bool = False):
        n = int(n)
        if n < 0:
            raise UsageError(f"vertex count must be non-negative, got {n}")
        arr = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if arr.size and (arr.min() < 0 or arr.max() >= n):
            raise UsageError(f"edge endpoint outside [0, {n})")
        if np.any(arr[:, 0] == arr[:, 1]):
            loop = int(arr[arr[:, 0] == arr[:, 1]][0, 0])
            raise UsageError(f"self-loop at vertex {loop}")
        if not directed:
            arr = np.sort(arr, axis=1)
        keys = np.sort(arr[:, 0] * n + arr[:, 1])
        dup = np.flatnonzero(keys[1:] == keys[:-1])
        if dup.size:
            k = int(keys[dup[0]])
            raise UsageError(f"duplicate edge ({k // n}, {k % n})")
        src, dst = keys // max(n, 1), keys % max(n, 1)
        if not directed:
            arc_keys = np.sort(np.concatenate([keys, dst * n + src]))
            src, dst = arc_keys // max(n, 1), arc_keys % max(n, 1)
        self._set_csr(n, directed, src, dst)

    def _set_csr(self, n, directed, src, dst):
        self.n = n
        self.directed = bool(directed)
        self.indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=n), out=self.indptr[1:])
        self.indices = np.ascontiguousarray(dst, dtype=np.int64)

    @classmethod
    def from_csr(cls, n: int, indptr, indices, directed: bool) -> Graph:
        """Trusted constructor: arcs must already be sorted, simple and (if
        undirected) symmetric."""
        g = cls.__new__(cls)
        g.n = int(n)
        g.directed = bool(directed)
        g.indptr = np.asarray(indptr, dtype=np.int64)
        g.indices = np.asarray(indices, dtype=np.int64)
        return g

    # ----------------------------------------------------------- derived

    @property
    def num_arcs(self) -> int:
        return int(self.indices.size)

    @property
    def m(self) -> int:
        return self.num_arcs if self.directed else self.num_arcs // 2

    @cached_property
    def arc_src(self) -> np.ndarray:
        return np.repeat(np.arange(self.n, dtype=np.int64), np.diff(self.indptr))

    @cached_property
    def edges(self) -> np.ndarray:
        src, dst = self.arc_src, self.indices
        if not self.directed:
            keep = src < dst
            src, dst = src[keep], dst[keep]
        return np.stack([src, dst], axis=1)

    @cached_property
    def _in_csr(self):
        in_arcs = np.argsort(self.indices, kind="stable")
        in_indptr = np.zeros(self.n + 1, dtype=np.int64)
        np.cumsum(np.bincount(self.indices, minlength=self.n), out=in_indptr[1:])
        return in_indptr, in_arcs

    @property
    def in_indptr(self) -> np.ndarray:
        return self._in_csr[0]

    @property
    def in_arcs(self) -> np.ndarray:
        """Arc ids sorted by ``(dst, src)``."""
        return self._in_csr[1]

    @cached_property
    def reverse_arc(self) -> np.ndarray:
        """For undirected graphs, ``reverse_arc[a]`` is the arc id of ``a``
        flipped. Sorting a symmetric arc set by ``(dst, src)`` lists exactly the
        reversals of the ``(src, dst)`` order, which gives the map for free."""
        if self.directed:
            raise UsageError("reverse_arc is defined for undirected graphs only")
        rev = np.empty(self.num_arcs, dtype=np.int64)
        rev[self.in_arcs] = np.arange(self.num_arcs, dtype=np.int64)
        return rev

    def out_degree(self) -> np.ndarray:
        return np.diff(self.indptr)

    def in_degree(self) -> np.ndarray:
        return np.bincount(self.indices, minlength=self.n)

    def degree(self) -> np.ndarray:
        """Degree in the underlying undirected graph."""
        return self.underlying().out_degree()

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v] : self.indptr[v + 1]]

    def in_neighbors(self, v: int) -> np.ndarray:
        lo, hi = self.in_indptr[v], self.in_indptr[v + 1]
        return self.arc_src[self.in_arcs[lo:hi]]

    def arc_index(self, u: int, v: int) -> int:
        lo, hi = int(self.indptr[u]), int(self.indptr[u + 1])
        pos = lo + int(np.searchsorted(self.indices[lo:hi], v))
        if pos < hi and self.indices[pos] == v:
            return pos
        raise KeyError((u, v))

    def has_arc(self, u: int, v: int) -> bool:
        try:
            self.arc_index(u, v)
        except KeyError:
            return False
        return True

    def arcs(self):
        return zip(self.arc_src.tolist(), self.indices.tolist())

    def underlying(self) -> Graph:
        if not self.directed:
            return self
        return self._underlying

    @cached_property
    def _underlying(self) -> Graph:
        e = np.sort(self.edges, axis=1)
        keys = np.unique(e[:, 0] * self.n + e[:, 1])
        return Graph(self.n, np.stack([keys // self.n, keys % self.n], axis=1), directed=False)

    def arc_subgraph(self, mask) -> Graph:
        """Spanning subgraph keeping the arcs where ``mask`` is true."""
        mask = np.asarray(mask, dtype=bool)
        kept = np.concatenate([[0], np.cumsum(mask, dtype=np.int64)])
        indptr = kept[self.indptr]
        return Graph.from_csr(self.n, indptr, self.indices[mask], self.directed)

    def is_regular(self) -> bool:
        deg = self.degree()
        return bool(deg.size == 0 or np.all(deg == deg[0]))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return (
            self.n == other.n
            and self.directed == other.directed
            and np.array_equal(self.indptr, other.indptr)
            and np.array_equal(self.indices, other.indices)
        )

    __hash__ = None

    def __repr__(self) -> str:
        kind = "directed" if self.directed else "undirected"
        return f"Graph(n={self.n}, m={self.m}, {kind})"

    # --------------------------------------------------------------- I/O

    def to_text(self) -> str:
        kind = "directed" if self.directed else "undirected"
        lines = [f"{self.n} {self.m} {kind}"]
        lines.extend(f"{u} {v}" for u, v in self.edges.tolist())
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> Graph:
        rows = [ln.split() for ln in text.splitlines()]
        rows = [r for r in rows if r and not r[0].startswith("#")]
        if not rows or len(rows[0]) != 3 or rows[0][2] not in ("directed", "undirected"):
            raise UsageError("graph header must be 'n m directed|undirected'")
        n, m = int(rows[0][0]), int(rows[0][1])
        body = rows[1:]
        if len(body) != m:
            raise UsageError(f"header announces {m} edges, found {len(body)}")
        edges = np.array([[int(a), int(b)] for a, b in body], dtype=np.int64).reshape(-1, 2)
        return cls(n, edges, directed=rows[0][2] == "directed")

    def write(self, path) -> None:
        Path(path).write_text(self.to_text(), encoding="utf-8")

    @classmethod
    def read(cls, path) -> Graph:
        return cls.from_text(Path(path).read_text(encoding="utf-8"))


@dataclass
class ComponentPartition:
    component_id: np.ndarray
    count: int
    topo_order: list[int] | None = None
    _members: list[np.ndarray] | None = field(default=None, repr=False)

    @property
    def sizes(self) -> np.ndarray:
        return np.bincount(self.component_id, minlength=self.count)

    @property
    def components(self) -> list[np.ndarray]:
        if self._members is None:
            order = np.argsort(self.component_id, kind="stable")
            bounds = np.cumsum(self.sizes)[:-1]
            self._members = np.split(order, bounds) if self.count else []
        return self._members

    def component_sets(self) -> list[set[int]]:
        return [set(c.tolist()) for c in self.components]


def connected_components(g: Graph) -> ComponentPartition:
    """Components numbered by their smallest vertex."""
    if g.directed:
        raise UsageError("connected_components needs an undirected graph")
    labels = kernels.cc_labels(g.n, g.indptr, g.indices)
    roots, comp = np.unique(labels, return_inverse=True)
    return ComponentPartition(comp.astype(np.int64), int(roots.size))


def strongly_connected_components(g: Graph) -> ComponentPartition:
    """Tarjan SCCs; ids follow a topological order of the condensation."""
    if not g.directed:
        raise UsageError("strongly_connected_components needs a directed graph")
    comp, count = kernels.scc(g.n, g.indptr, g.indices)
    count = int(count)
    return ComponentPartition(np.asarray(comp, dtype=np.int64), count, list(range(count)))


def girth(g: Graph) -> int | None:
    """Shortest cycle of the underlying simple graph, ``None`` for a forest."""
    u = g.underlying()
    best = int(kernels.girth_bfs(u.n, u.indptr, u.indices))
    return None if best < 0 else best


def _require_regular(g: Graph) -> int:
    deg = g.degree()
    if deg.size and not np.all(deg == deg[0]):
        hist = dict(sorted(Counter(deg.tolist()).items()))
        raise UsageError(f"graph is not regular; degree histogram {hist}")
    return int(deg[0]) if deg.size else 0


def spectral_gap(g: Graph, mode: str = "auto") -> float:
    """``d - max |lambda|`` over the non-trivial adjacency eigenvalues.

    ``dense`` uses a full symmetric eigendecomposition; ``iterative`` uses
    Lanczos (tolerance ``ITERATIVE_TOL``) for the two largest and the smallest
    eigenvalue. ``auto`` picks dense up to ``DENSE_LIMIT`` vertices.
    """
    u = g.underlying()
    d = _require_regular(u)
    if u.n < 2:
        raise UsageError("spectral gap needs at least two vertices")
    if mode == "auto":
        mode = "dense" if u.n <= DENSE_LIMIT else "iterative"
    if mode == "dense":
        a = np.zeros((u.n, u.n))
        a[u.arc_src, u.indices] = 1.0
        eig = np.sort(np.linalg.eigvalsh(a))[::-1]
        second = float(np.max(np.abs(eig[1:])))
    elif mode == "iterative":
        from scipy.sparse import csr_matrix
        from scipy.sparse.linalg import eigsh

        a = csr_matrix((np.ones(u.num_arcs), u.indices, u.indptr), shape=(u.n, u.n))
        top = eigsh(a, k=2, which="LA", tol=ITERATIVE_TOL, return_eigenvectors=False)
        bottom = eigsh(a, k=1, which="SA", tol=ITERATIVE_TOL, return_eigenvectors=False)
        top = np.sort(top)
        second = float(max(abs(top[0]), abs(bottom[0])))
    else:
        raise UsageError(f"unknown spectral mode {mode!r}")
    return d - second
