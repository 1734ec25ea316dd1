"""Detectors that recover vertex types from peer reports.

The agreement graph keeps only the inspections that vouch for the target
(both directions for undirected graphs). Its components, or strongly
connected components when inspections are directed, never mix truthful and
corrupt vertices, so the detectors reason about whole components and then
spread the labels along the reports of vertices known to be truthful.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import kernels
from .certify import as_fraction, ceil_frac
from .errors import (
    AmbiguousInstance,
    BudgetExceeded,
    FallbackToGeneral,
    InconsistentReports,
    NoLargeComponent,
    UsageError,
)
from .graph import ComponentPartition, Graph, connected_components, strongly_connected_components
from .reporting import ORACLE_BOUND, ReportSet, consistent_summary

TRUTHFUL, CORRUPT, UNKNOWN = 1, 0, -1
LABEL_CHAR = {TRUTHFUL: "T", CORRUPT: "C", UNKNOWN: "U"}

GIANT = "giant-component"
DISAMBIGUATION = "disambiguation"
PROPAGATION = "neighbor-propagation"

FAST, GENERAL, CONNECTED = "fast", "general", "connected"

SEARCH_BUDGET = 1 << 20


@dataclass
class DetectionResult:
    labels: np.ndarray  # int8: 1 truthful, 0 corrupt, -1 unknown
    provenance: list
    mode: str
    notices: list = field(default_factory=list)

    @property
    def n(self) -> int:
        return int(self.labels.size)

    @property
    def truthful(self) -> list[int]:
        return np.flatnonzero(self.labels == TRUTHFUL).tolist()

    @property
    def corrupt(self) -> list[int]:
        return np.flatnonzero(self.labels == CORRUPT).tolist()

    @property
    def unknown(self) -> list[int]:
        return np.flatnonzero(self.labels == UNKNOWN).tolist()

    @property
    def unknown_count(self) -> int:
        return int(np.count_nonzero(self.labels == UNKNOWN))

    def label_of(self, v: int) -> str:
        return LABEL_CHAR[int(self.labels[v])]

    def mistakes(self, truthful_mask) -> int:
        """Labels contradicting a ground-truth truthful mask."""
        truth = np.asarray(truthful_mask, dtype=bool)
        wrong = (self.labels == TRUTHFUL) & ~truth
        wrong |= (self.labels == CORRUPT) & truth
        return int(np.count_nonzero(wrong))

    def to_lines(self) -> str:
        return "".join(
            f"{v} {LABEL_CHAR[int(lab)]} {prov or '-'}\n"
            for v, (lab, prov) in enumerate(zip(self.labels.tolist(), self.provenance))
        )

    @classmethod
    def from_lines(cls, text: str, mode: str = "") -> DetectionResult:
        rows = [ln.split() for ln in text.splitlines() if ln.strip()]
        code = {c: k for k, c in LABEL_CHAR.items()}
        labels = np.array([code[r[1]] for r in rows], dtype=np.int8)
        prov = [None if r[2] == "-" else r[2] for r in rows]
        return cls(labels, prov, mode)

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "labels": [LABEL_CHAR[int(x)] for x in self.labels.tolist()],
            "provenance": self.provenance,
            "unknown": self.unknown_count,
            "notices": self.notices,
        }


def agreement_graph(g: Graph, r: ReportSet) -> Graph:
    if r.graph is not g and r.graph != g:
        raise UsageError("report set belongs to a different graph")
    if g.directed:
        keep = r.verdict
    else:
        keep = r.verdict & r.verdict[g.reverse_arc]
    return g.arc_subgraph(keep)


def _components(g: Graph, r: ReportSet) -> ComponentPartition:
    h = agreement_graph(g, r)
    return strongly_connected_components(h) if g.directed else connected_components(h)


def _propagate(g: Graph, r: ReportSet, seed: np.ndarray):
    t, b, conflict = kernels.propagate(
        g.n, g.indptr, g.indices, g.in_indptr, g.in_arcs, g.arc_src,
        r.verdict, seed.copy(), np.zeros(g.n, dtype=np.bool_),
    )
    return t, b, int(conflict)


def _finish(g: Graph, r: ReportSet, seed: np.ndarray, seed_tag: str, mode: str, notices) -> DetectionResult:
    t, b, conflict = _propagate(g, r, seed)
    if conflict >= 0:
        raise InconsistentReports(
            f"reports contradict a truthful seed of {int(seed.sum())} vertices at vertex {conflict}"
        )
    labels = np.full(g.n, UNKNOWN, dtype=np.int8)
    labels[t] = TRUTHFUL
    labels[b] = CORRUPT
    prov = [None] * g.n
    for v in np.flatnonzero(t | b).tolist():
        prov[v] = seed_tag if seed[v] else PROPAGATION
    return DetectionResult(labels, prov, mode, list(notices))


def _majority(part: ComponentPartition, n: int):
    sizes = part.sizes
    big = np.flatnonzero(2 * sizes > n)
    return int(big[0]) if big.size else None


def _large(part: ComponentPartition, n: int, slack: int) -> list[int]:
    """Components with ``2*size >= n - slack``, largest first."""
    sizes = part.sizes
    ids = np.flatnonzero(2 * sizes >= n - slack)
    return sorted(ids.tolist(), key=lambda i: (-int(sizes[i]), i))


def _check_mode(mode: str) -> None:
    if mode not in (FAST, GENERAL):
        raise UsageError(f"mode must be 'fast' or 'general', got {mode!r}")


def _check_delta(delta, limit: Fraction) -> Fraction:
    frac = as_fraction(delta)
    if not 0 < frac < limit:
        raise UsageError(f"delta must lie in (0, {limit}), got {delta}")
    return frac


def _fast_or_fallback(g, r, part, mode, delta):
    notices = []
    if mode == FAST:
        big = _majority(part, g.n)
        if big is not None:
            return part.component_id == big, notices, True
        msg = "fast mode: no agreement component exceeds n/2; falling back to general mode"
        warnings.warn(msg, FallbackToGeneral, stacklevel=3)
        notices.append(msg)
    if delta is None:
        raise UsageError("general mode needs delta")
    return None, notices, False


# ---------------------------------------------------------------- undirected


def detect_undirected(g: Graph, r: ReportSet, mode: str = GENERAL, delta=None) -> DetectionResult:
    """Label vertices of an undirected inspection graph.

    ``fast`` seeds from an agreement component holding a strict majority and
    runs in linear time. ``general`` accepts components of size at least
    ``(1/2 - delta) n`` and, when there are two, keeps the one that extends to
    an independent set of components with more than half the vertices.
    """
    if g.directed:
        raise UsageError("detect_undirected needs an undirected graph")
    _check_mode(mode)
    frac = None if delta is None else _check_delta(delta, Fraction(1, 8))
    part = _components(g, r)
    seed, notices, done = _fast_or_fallback(g, r, part, mode, frac)
    if done:
        return _finish(g, r, seed, GIANT, FAST, notices)

    large = _large(part, g.n, ceil_frac(2 * frac * g.n))
    if not large:
        raise NoLargeComponent(
            f"no agreement component reaches (1/2 - {frac}) n; largest has {int(part.sizes.max(initial=0))} vertices"
        )
    if len(large) == 1:
        return _finish(g, r, part.component_id == large[0], GIANT, GENERAL, notices)
    if len(large) > 2:
        raise AmbiguousInstance(f"{len(large)} agreement components reach the size threshold")
    s = ComponentWeights.from_partition(g, part)
    half = Fraction(1, 2)
    wins = [c for c in large if max_weight_independent_set_containing(s, c)[0] > half]
    if len(wins) != 1:
        raise AmbiguousInstance(
            "both large components extend to a majority independent set"
            if wins else "neither large component extends to a majority independent set"
        )
    return _finish(g, r, part.component_id == wins[0], DISAMBIGUATION, GENERAL, notices)


@dataclass
class ComponentWeights:
    """Components as weighted vertices; adjacent when some edge joins them."""

    weights: list
    adjacency: list  # list of sets

    @classmethod
    def from_partition(cls, g: Graph, part: ComponentPartition) -> ComponentWeights:
        cid = part.component_id
        src, dst = cid[g.arc_src], cid[g.indices]
        cross = src != dst
        adj = [set() for _ in range(part.count)]
        pairs = np.unique(np.stack([src[cross], dst[cross]], axis=1), axis=0) if cross.any() else []
        for a, b in (pairs.tolist() if len(pairs) else []):
            adj[a].add(b)
            adj[b].add(a)
        weights = [Fraction(int(s), g.n) for s in part.sizes.tolist()]
        return cls(weights, adj)

    @property
    def size(self) -> int:
        return len(self.weights)


def max_weight_independent_set_containing(s: ComponentWeights, forced: int):
    """Exact maximum-weight independent set of ``s`` that contains ``forced``.

    Branch and bound over vertex ids in increasing order, trying inclusion
    first, with the remaining candidate weight as the bound. Only strict
    improvements replace the incumbent, so among optimal sets the
    lexicographically smallest (as a sorted tuple) is returned.
    """
    if not 0 <= forced < s.size:
        raise UsageError(f"component {forced} not in the weight graph")
    adj = s.adjacency
    w = s.weights
    best_w = [None]
    best_set = [None]
    chosen = [forced]

    def rec(cands: list, cur):
        if not cands:
            if best_w[0] is None or cur > best_w[0]:
                best_w[0], best_set[0] = cur, sorted(chosen)
            return
        if best_w[0] is not None and cur + sum(w[v] for v in cands) <= best_w[0]:
            return
        v, rest = cands[0], cands[1:]
        chosen.append(v)
        rec([u for u in rest if u not in adj[v]], cur + w[v])
        chosen.pop()
        rec(rest, cur)

    rec([v for v in range(s.size) if v != forced and v not in adj[forced]], w[forced])
    return best_w[0], set(best_set[0])


# ------------------------------------------------------------------ directed


def detect_directed(g: Graph, r: ReportSet, mode: str = GENERAL, delta=None,
                    budget: int | None = None) -> DetectionResult:
    """Label vertices of a directed inspection graph.

    ``fast`` seeds from a strongly connected agreement component holding a
    strict majority. ``general`` accepts components of size at least
    ``(1/2 - 2 delta) n`` and, when there are two, keeps the one contained in
    some report-consistent union of components with more than half the
    vertices.
    """
    if not g.directed:
        raise UsageError("detect_directed needs a directed graph")
    _check_mode(mode)
    frac = None if delta is None else _check_delta(delta, Fraction(1, 16))
    part = _components(g, r)
    seed, notices, done = _fast_or_fallback(g, r, part, mode, frac)
    if done:
        return _finish(g, r, seed, GIANT, FAST, notices)

    large = _large(part, g.n, ceil_frac(4 * frac * g.n))
    if not large:
        raise NoLargeComponent(
            f"no strongly connected agreement component reaches (1/2 - 2*{frac}) n; "
            f"largest has {int(part.sizes.max(initial=0))} vertices"
        )
    if len(large) == 1:
        return _finish(g, r, part.component_id == large[0], GIANT, GENERAL, notices)
    if len(large) > 2:
        raise AmbiguousInstance(f"{len(large)} strongly connected components reach the size threshold")
    budget = SEARCH_BUDGET if budget is None else int(budget)
    wins = [c for c in large if majority_union_exists(g, r, part, c, budget)]
    if len(wins) != 1:
        raise AmbiguousInstance(
            "both large components lie in a consistent majority union"
            if wins else "neither large component lies in a consistent majority union"
        )
    return _finish(g, r, part.component_id == wins[0], DISAMBIGUATION, GENERAL, notices)


def majority_union_exists(g: Graph, r: ReportSet, part: ComponentPartition, forced: int,
                          budget: int = SEARCH_BUDGET) -> bool:
    """Is there a report-consistent truthful set of more than n/2 vertices
    that is a union of components and contains component ``forced``?

    Labels are closed under the sound inference rules after every decision;
    a closed state without conflict extends to a consistent world by calling
    every undecided vertex corrupt, so only the truthful count matters. The
    search branches on the largest undecided component, memoizes visited
    states and prunes when even all undecided vertices cannot reach a
    majority.
    """
    n = g.n
    members = part.components
    sizes = part.sizes
    seen: set = set()
    work = [0]

    def close(t, b):
        work[0] += 1
        if work[0] > budget:
            raise BudgetExceeded(f"consistent-union search exceeded {budget} propagation steps")
        t2, b2, conflict = kernels.propagate(
            n, g.indptr, g.indices, g.in_indptr, g.in_arcs, g.arc_src, r.verdict, t, b
        )
        return (None, None) if conflict >= 0 else (t2, b2)

    def search(t, b) -> bool:
        key = t.tobytes() + b.tobytes()
        if key in seen:
            return False
        seen.add(key)
        t_count = int(t.sum())
        if 2 * t_count > n:
            return True
        undecided = ~(t | b)
        if 2 * (t_count + int(undecided.sum())) <= n:
            return False
        open_ids = np.unique(part.component_id[undecided])
        pick = int(open_ids[np.lexsort((open_ids, -sizes[open_ids]))[0]])
        for as_truthful in (True, False):
            t2, b2 = t.copy(), b.copy()
            (t2 if as_truthful else b2)[members[pick]] = True
            t2, b2 = close(t2, b2)
            if t2 is not None and search(t2, b2):
                return True
        return False

    t0 = np.zeros(n, dtype=np.bool_)
    t0[members[forced]] = True
    t0, b0 = close(t0, np.zeros(n, dtype=np.bool_))
    return t0 is not None and search(t0, b0)


# ----------------------------------------------------------------- connected


def detect_connected(g: Graph, r: ReportSet, eps) -> list[int]:
    """Union of agreement components with more than ``eps * n`` vertices.

    Under a truthful fraction of ``1 - eps`` on an ``eps``-connected graph
    this is a subset of the truthful vertices covering at least
    ``(1 - 2 eps) n`` of them. The comparison is strict: a corrupt component
    can hold exactly ``eps * n`` vertices.
    """
    if g.directed:
        raise UsageError("detect_connected needs an undirected graph")
    frac = as_fraction(eps)
    if not 0 < frac < Fraction(1, 3):
        raise UsageError(f"eps must lie in (0, 1/3), got {eps}")
    part = _components(g, r)
    keep = np.flatnonzero(part.sizes > frac * g.n) if g.n else np.empty(0, np.int64)
    return np.flatnonzero(np.isin(part.component_id, keep)).tolist()


def connected_result(g: Graph, r: ReportSet, eps) -> DetectionResult:
    """``detect_connected`` packaged as a labeling (unlabeled vertices Unknown)."""
    found = detect_connected(g, r, eps)
    labels = np.full(g.n, UNKNOWN, dtype=np.int8)
    labels[found] = TRUTHFUL
    prov = [None] * g.n
    for v in found:
        prov[v] = GIANT
    return DetectionResult(labels, prov, CONNECTED)


# -------------------------------------------------------------------- oracle


@dataclass
class CertainLabels:
    labels: np.ndarray
    worlds: int
    min_T: int

    @property
    def no_consistent_world(self) -> bool:
        return self.worlds == 0

    @property
    def truthful(self) -> list[int]:
        return np.flatnonzero(self.labels == TRUTHFUL).tolist()

    @property
    def decided(self) -> np.ndarray:
        return self.labels != UNKNOWN

    def as_chars(self) -> list[str]:
        return [LABEL_CHAR[int(x)] for x in self.labels.tolist()]


def certain_labels(g: Graph, r: ReportSet, min_T: int | None = None, bound: int = ORACLE_BOUND) -> CertainLabels:
    """Types shared by every consistent world with at least ``min_T``
    truthful vertices (default: a strict majority)."""
    if min_T is None:
        min_T = g.n // 2 + 1
    summary = consistent_summary(g, r, min_T=min_T, bound=bound)
    labels = np.full(g.n, UNKNOWN, dtype=np.int8)
    if summary.count:
        labels[summary.always_truthful] = TRUTHFUL
        never = np.ones(g.n, dtype=bool)
        never[summary.ever_truthful] = False
        labels[never] = CORRUPT
    return CertainLabels(labels, summary.count, int(min_T))


def detect(g: Graph, r: ReportSet, mode: str = GENERAL, delta=None) -> DetectionResult:
    """Dispatch on graph kind and mode; ``connected`` reads ``delta`` as eps."""
    if mode == CONNECTED:
        if delta is None:
            raise UsageError("connected mode needs eps (given as delta)")
        return connected_result(g, r, delta)
    if g.directed:
        return detect_directed(g, r, mode, delta)
    return detect_undirected(g, r, mode, delta)
