"""Expansion certificates: exhaustive set checks and a spectral surrogate.

Size conventions are the conservative ones: "at most x*n" is ``floor(x*n)``
and "at least x*n" is ``ceil(x*n)``, computed with exact rationals.

The pair conditions are checked through complements. A violating pair (A, B)
exists iff some A of the minimum admissible size leaves at least the required
number of vertices outside ``A + N(A)``; shrinking A only grows that
uncovered set, so only the smallest admissible A needs enumerating.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from fractions import Fraction

from . import kernels
from .errors import UsageError
from .graph import DENSE_TOL, ITERATIVE_TOL, DENSE_LIMIT, Graph, spectral_gap

UNDIRECTED_GOOD = "undirected-good"
DIRECTED_GOOD = "directed-good"
DELTA_CONNECTED = "delta-connected"
CRITERIA = (UNDIRECTED_GOOD, DIRECTED_GOOD, DELTA_CONNECTED)

PASS, FAIL, NOT_ATTEMPTED = "pass", "fail", "not-attempted"
EXHAUSTIVE, SURROGATE = "exhaustive", "spectral-surrogate"

BUDGET_ENV = "CORRUPTNET_WORK_BUDGET"
DEFAULT_BUDGET = 1 << 26

# Open upper bound on delta per criterion.
_DELTA_LIMIT = {
    UNDIRECTED_GOOD: Fraction(1, 8),
    DIRECTED_GOOD: Fraction(1, 16),
    DELTA_CONNECTED: Fraction(1, 3),
}


def as_fraction(x) -> Fraction:
    """Exact rational for a user-supplied number; floats are read by their
    shortest decimal repr, so ``0.1`` is ``1/10``."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        return Fraction(repr(x))
    return Fraction(x)


def ceil_frac(x: Fraction) -> int:
    return -((-x.numerator) // x.denominator)


def floor_frac(x: Fraction) -> int:
    return x.numerator // x.denominator


def default_budget() -> int:
    raw = os.environ.get(BUDGET_ENV)
    return int(raw) if raw else DEFAULT_BUDGET


@dataclass
class ExpanderCert:
    delta: float
    criterion: str
    verdict: str
    method: str
    witness: dict | None = None
    spectral_gap: float | None = None
    conditions: dict = field(default_factory=dict)
    work: int = 0
    threshold: float | None = None
    tolerance: float | None = None
    note: str = ""

    @property
    def passed(self) -> bool:
        return self.verdict == PASS

    def to_dict(self) -> dict:
        return {
            "delta": self.delta,
            "criterion": self.criterion,
            "verdict": self.verdict,
            "method": self.method,
            "witness": self.witness,
            "spectral_gap": self.spectral_gap,
            "conditions": self.conditions,
            "work": self.work,
            "threshold": self.threshold,
            "tolerance": self.tolerance,
            "note": self.note,
        }


@dataclass(frozen=True)
class _Plan:
    expansion_max: int  # check every U with 1 <= |U| <= expansion_max
    pair_size: int  # smallest admissible |A|
    pair_need: int  # smallest admissible |B|
    pair_dirs: tuple  # "out", "in" or "both" (undirected)

    def work(self, n: int) -> int:
        total = sum(math.comb(n, k) for k in range(1, self.expansion_max + 1))
        if self.pair_size <= n:
            total += len(self.pair_dirs) * math.comb(n, self.pair_size)
        return total


def _plan(n: int, delta: Fraction, criterion: str) -> _Plan:
    if criterion == UNDIRECTED_GOOD:
        return _Plan(floor_frac(2 * delta * n), ceil_frac(delta * n), ceil_frac(Fraction(n, 4)), ("both",))
    if criterion == DIRECTED_GOOD:
        return _Plan(floor_frac(4 * delta * n), ceil_frac(delta * n), ceil_frac(Fraction(n, 4)), ("out", "in"))
    return _Plan(0, ceil_frac(delta * n), ceil_frac((1 - 3 * delta) * n), ("both",))


def _check_args(g: Graph, delta: Fraction, criterion: str) -> None:
    if criterion not in CRITERIA:
        raise UsageError(f"unknown criterion {criterion!r}; expected one of {CRITERIA}")
    if not 0 < delta < _DELTA_LIMIT[criterion]:
        raise UsageError(f"{criterion} needs 0 < delta < {_DELTA_LIMIT[criterion]}, got {delta}")
    if criterion == DIRECTED_GOOD and not g.directed:
        raise UsageError("directed-good needs a directed graph")
    if criterion != DIRECTED_GOOD and g.directed:
        raise UsageError(f"{criterion} needs an undirected graph")


def certify(
    g: Graph,
    delta,
    criterion: str = UNDIRECTED_GOOD,
    method: str = "auto",
    budget: int | None = None,
    surrogate_threshold: float | None = None,
) -> ExpanderCert:
    """Check ``g`` against an expansion criterion.

    ``method='auto'`` runs the exhaustive check when its subset count fits
    ``budget`` and otherwise falls back to the spectral surrogate.
    ``method='exhaustive'`` over budget returns a ``not-attempted`` verdict.
    """
    frac = as_fraction(delta)
    _check_args(g, frac, criterion)
    budget = default_budget() if budget is None else int(budget)
    plan = _plan(g.n, frac, criterion)
    work = plan.work(g.n)
    if method not in ("auto", "exhaustive", "spectral"):
        raise UsageError(f"unknown certification method {method!r}")
    if method == "exhaustive" or (method == "auto" and work <= budget):
        if work > budget:
            return ExpanderCert(
                float(frac), criterion, NOT_ATTEMPTED, EXHAUSTIVE, work=work,
                note=f"{work} subset evaluations exceed budget {budget}",
            )
        return _exhaustive(g, frac, criterion, plan, work)
    return _surrogate(g, frac, criterion, surrogate_threshold)


def _exhaustive(g: Graph, delta: Fraction, criterion: str, plan: _Plan, work: int) -> ExpanderCert:
    n = g.n
    out_bits = kernels.neighbor_bitsets(n, g.indptr, g.indices)
    witness = None
    conditions = {}

    if plan.expansion_max >= 1:
        conditions["expansion"] = PASS
        for k in range(1, min(plan.expansion_max, n) + 1):
            hit = kernels.first_violation(out_bits, n, k, 0, 0)
            if hit.size:
                u = sorted(hit.tolist())
                outside = sorted(set(_out_neighbors(g, u)) - set(u))
                conditions["expansion"] = FAIL
                witness = {"condition": "expansion", "U": u, "outside_neighbors": outside}
                break

    conditions["pairs"] = PASS
    if plan.pair_size <= n:
        for direction in plan.pair_dirs:
            if direction == "in":
                bits = kernels.neighbor_bitsets(n, g.in_indptr, g.arc_src[g.in_arcs])
            else:
                bits = out_bits
            hit = kernels.first_violation(bits, n, plan.pair_size, 1, plan.pair_need)
            if hit.size:
                a = sorted(hit.tolist())
                nbrs = _out_neighbors(g, a) if direction != "in" else _in_neighbors(g, a)
                b = sorted(set(range(n)) - set(a) - set(nbrs))
                conditions["pairs"] = FAIL
                if witness is None:
                    label = {"both": "undirected", "out": "A->B", "in": "B->A"}[direction]
                    witness = {"condition": "pairs", "A": a, "B": b, "missing": label}
                break

    verdict = FAIL if witness is not None else PASS
    return ExpanderCert(float(delta), criterion, verdict, EXHAUSTIVE, witness=witness, conditions=conditions, work=work)


def _out_neighbors(g: Graph, vs) -> list[int]:
    return sorted({int(w) for v in vs for w in g.neighbors(v)})


def _in_neighbors(g: Graph, vs) -> list[int]:
    return sorted({int(w) for v in vs for w in g.in_neighbors(v)})


def surrogate_eigen_bound(d: int, delta: Fraction, criterion: str) -> float:
    """Largest non-trivial |eigenvalue| for which the expander mixing lemma
    still forces an edge between sets of the criterion's minimum sizes:
    ``d*a*b*n > lam*n*sqrt(a*b)``  <=>  ``lam < d*sqrt(a*b)``."""
    a = float(delta)
    b = 0.25 if criterion != DELTA_CONNECTED else float(1 - 3 * delta)
    return d * math.sqrt(a * b)


def _surrogate(g: Graph, delta: Fraction, criterion: str, threshold: float | None) -> ExpanderCert:
    u = g.underlying()
    if not u.is_regular():
        return ExpanderCert(
            float(delta), criterion, NOT_ATTEMPTED, SURROGATE,
            note="spectral surrogate needs a regular underlying graph",
        )
    d = int(u.out_degree()[0]) if u.n else 0
    gap = spectral_gap(u)
    if threshold is None:
        threshold = d - surrogate_eigen_bound(d, delta, criterion)
    tol = DENSE_TOL if u.n <= DENSE_LIMIT else ITERATIVE_TOL
    verdict = PASS if gap > threshold + tol else FAIL
    return ExpanderCert(
        float(delta), criterion, verdict, SURROGATE, spectral_gap=gap, threshold=float(threshold),
        tolerance=tol, note="surrogate evidence from the adjacency spectrum, not a proof",
    )


def witness_violates(g: Graph, cert: ExpanderCert) -> bool:
    """Re-check a failure witness with plain set arithmetic."""
    w = cert.witness
    if w is None:
        return False
    frac = as_fraction(cert.delta)
    plan = _plan(g.n, frac, cert.criterion)
    adj_out = [set(g.neighbors(v).tolist()) for v in range(g.n)]
    if w["condition"] == "expansion":
        u = set(w["U"])
        outside = set().union(*(adj_out[v] for v in u)) - u
        return 1 <= len(u) <= plan.expansion_max and len(outside) <= len(u)
    a, b = set(w["A"]), set(w["B"])
    if a & b or len(a) < plan.pair_size or len(b) < plan.pair_need:
        return False
    if w["missing"] == "B->A":
        return not any(adj_out[v] & a for v in b)
    return not any(adj_out[v] & b for v in a)
