"""Hardness and impossibility instances as reproducible fixtures.

Two constructions live here. The independent-set gadget hides a bounded
degree graph inside an expander so that the largest truthful set consistent
with the reports encodes the graph's independence number. The separator
family builds one world per component left after deleting a separator; all
of them produce identical reports while no vertex is truthful in all of
them.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .certify import as_fraction
from .errors import UsageError
from .graph import Graph, connected_components
from .reporting import Adversary, ReportSet, World, generate_reports

MAX_H_DEGREE = 4


# -------------------------------------------------------------- gadget


@dataclass
class GadgetSpec:
    base: Graph
    H: Graph
    a: Fraction
    b: Fraction
    V1: list
    V2: list
    V3: list  # V3[i] hosts vertex i of H

    def __post_init__(self):
        self.a, self.b = as_fraction(self.a), as_fraction(self.b)
        self.V1 = sorted(int(v) for v in self.V1)
        self.V2 = sorted(int(v) for v in self.V2)
        self.V3 = [int(v) for v in self.V3]  # order maps H onto V3

    @property
    def n(self) -> int:
        return self.base.n

    @property
    def m(self) -> int:
        return self.H.n

    def validate(self) -> None:
        g, h, n, m = self.base, self.H, self.base.n, self.H.n
        if g.directed or h.directed:
            raise UsageError("gadget needs undirected graphs")
        if not 0 <= self.b < self.a < Fraction(1, 2):
            raise UsageError(f"need 0 <= b < a < 1/2, got a={self.a}, b={self.b}")
        if sorted(self.V1 + self.V2 + self.V3) != list(range(n)):
            raise UsageError("V1, V2, V3 must partition the base vertices")
        if len(self.V3) != m:
            raise UsageError(f"|V3| = {len(self.V3)} but H has {m} vertices")
        n1 = Fraction(n, 2) - self.a * m
        n2 = Fraction(n, 2) - m + self.a * m
        if n1 != len(self.V1) or n2 != len(self.V2):
            raise UsageError(f"need |V1| = {n1} and |V2| = {n2}, got {len(self.V1)} and {len(self.V2)}")
        if h.m and int(h.degree().max()) > MAX_H_DEGREE:
            raise UsageError(f"H must have maximum degree <= {MAX_H_DEGREE}")
        v2 = set(self.V2)
        v3 = set(self.V3)
        for v in self.V3:
            nb = set(g.neighbors(v).tolist())
            if nb & v3:
                raise UsageError(f"V3 must be independent in the base graph; vertex {v} has a V3 neighbor")
            if not nb <= v2:
                raise UsageError(f"every base neighbor of V3 must lie in V2; vertex {v} violates this")

    def to_dict(self) -> dict:
        return {
            "n": self.n, "m": self.m, "a": str(self.a), "b": str(self.b),
            "V1": self.V1, "V2": self.V2, "V3": self.V3,
            "H_edges": self.H.edges.tolist(),
        }


def _placement_sizes(n: int, m: int, a: Fraction):
    n1 = Fraction(n, 2) - a * m
    n2 = Fraction(n, 2) - m + a * m
    if n1.denominator != 1 or n2.denominator != 1 or n1 < 1 or n2 < 1:
        return None
    return int(n1), int(n2)


def admissible_params(max_n: int = 20, max_m: int = 6, denominators=(3, 4, 5, 6)):
    """Every ``(n, m, a)`` with integral part sizes and nonempty V1, V2."""
    out = []
    for n in range(2, max_n + 1):
        for m in range(1, max_m + 1):
            if m >= n:
                continue
            seen = set()
            for q in denominators:
                for p in range(1, q):
                    a = Fraction(p, q)
                    if a >= Fraction(1, 2) or a in seen:
                        continue
                    seen.add(a)
                    if _placement_sizes(n, m, a):
                        out.append((n, m, a))
    return out


def gadget_base(n: int, m: int, a, seed: int = 0) -> tuple[Graph, list, list, list]:
    """A base graph meeting the gadget placement rules.

    V1 and V2 are cliques joined completely to each other; each V3 vertex is
    joined to a seeded random nonempty subset of V2 (at least half of it).
    """
    a = as_fraction(a)
    sizes = _placement_sizes(n, m, a)
    if sizes is None:
        raise UsageError(f"no integral placement for n={n}, m={m}, a={a}")
    n1, n2 = sizes
    v1 = list(range(n1))
    v2 = list(range(n1, n1 + n2))
    v3 = list(range(n1 + n2, n))
    rng = np.random.default_rng(seed)
    edges = list(itertools.combinations(v1, 2)) + list(itertools.combinations(v2, 2))
    edges += [(x, y) for x in v1 for y in v2]
    for v in v3:
        k = int(rng.integers((n2 + 1) // 2, n2 + 1))
        edges += [(int(u), v) for u in sorted(rng.choice(v2, size=k, replace=False).tolist())]
    return Graph(n, edges), v1, v2, v3


def build_np_gadget(spec: GadgetSpec) -> tuple[Graph, ReportSet]:
    """Base graph plus H on V3, with reports: V1 and V2 vouch exactly for
    their own part, V3 accuses everyone."""
    spec.validate()
    v3 = np.asarray(spec.V3, dtype=np.int64)
    extra = v3[spec.H.edges] if spec.H.m else np.empty((0, 2), np.int64)
    g = Graph(spec.n, np.concatenate([spec.base.edges, extra]))
    part = np.full(g.n, 3, dtype=np.int8)
    part[spec.V1] = 1
    part[spec.V2] = 2
    src, dst = part[g.arc_src], part[g.indices]
    verdict = (src == dst) & (src != 3)
    return g, ReportSet(g, verdict)


def independence_number(h: Graph) -> int:
    """Brute force over all 2^m subsets."""
    m = h.n
    if m > 25:
        raise UsageError(f"brute-force independence number refuses m={m} > 25")
    nb = [0] * m
    for u, v in h.edges.tolist():
        nb[u] |= 1 << v
        nb[v] |= 1 << u
    best = 0
    for mask in range(1 << m):
        size = bin(mask).count("1")
        if size <= best:
            continue
        if all(not (nb[v] & mask) for v in range(m) if (mask >> v) & 1):
            best = size
    return best


def independent_sets(h: Graph):
    m = h.n
    nb = [0] * m
    for u, v in h.edges.tolist():
        nb[u] |= 1 << v
        nb[v] |= 1 << u
    for mask in range(1 << m):
        if all(not (nb[v] & mask) for v in range(m) if (mask >> v) & 1):
            yield [v for v in range(m) if (mask >> v) & 1]


def gadget_fixtures() -> list[GadgetSpec]:
    """Small admissible gadget specs with assorted bounded-degree H."""
    third, quarter = Fraction(1, 3), Fraction(1, 4)
    hs = {
        "path4": Graph(4, [(0, 1), (1, 2), (2, 3)]),
        "cycle4": Graph(4, [(0, 1), (1, 2), (2, 3), (0, 3)]),
        "star4": Graph(4, [(0, 1), (0, 2), (0, 3)]),
        "cycle6": Graph(6, [(i, (i + 1) % 6) for i in range(6)]),
        "prism6": Graph(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (0, 3), (1, 4), (2, 5)]),
        "k4": Graph(4, list(itertools.combinations(range(4), 2))),
        "matching6": Graph(6, [(0, 1), (2, 3), (4, 5)]),
    }
    plan = [
        (12, "path4", quarter, Fraction(1, 8), 0),
        (16, "cycle4", quarter, Fraction(1, 8), 1),
        (14, "star4", quarter, Fraction(1, 10), 2),
        (20, "cycle6", third, Fraction(1, 6), 3),
        (18, "prism6", third, Fraction(1, 6), 4),
        (20, "k4", quarter, Fraction(1, 8), 5),
        (18, "matching6", third, Fraction(1, 12), 6),
    ]
    specs = []
    for n, name, a, b, seed in plan:
        h = hs[name]
        base, v1, v2, v3 = gadget_base(n, h.n, a, seed)
        spec = GadgetSpec(base, h, a, b, v1, v2, v3)
        spec.validate()
        specs.append(spec)
    return specs


# ----------------------------------------------------------- scenarios


@dataclass
class ScenarioFamily:
    graph: Graph
    separator: list
    components: list
    scenarios: list  # Worlds, corrupt set = separator + components[i]
    reports: list = field(default_factory=list)
    eps: Fraction = Fraction(0)

    @property
    def s(self) -> int:
        return len(self.scenarios)

    def common_truthful(self) -> list[int]:
        if not self.scenarios:
            return []
        mask = np.logical_and.reduce([w.truthful for w in self.scenarios])
        return np.flatnonzero(mask).tolist()

    def min_truthful(self) -> int:
        return min(w.t_size for w in self.scenarios)

    def to_dict(self) -> dict:
        return {
            "eps": str(self.eps),
            "separator": self.separator,
            "components": self.components,
            "corrupt_sets": [w.B for w in self.scenarios],
        }


def build_separator_scenarios(g: Graph, separator, eps) -> ScenarioFamily:
    """One world per component of ``g - separator``, with that component and
    the separator corrupt. The separator accuses everyone; the corrupt
    component vouches only for itself."""
    if g.directed:
        raise UsageError("separator scenarios need an undirected graph")
    frac = as_fraction(eps)
    sep = sorted({int(v) for v in separator})
    if any(v < 0 or v >= g.n for v in sep):
        raise UsageError("separator vertex outside the graph")
    if len(sep) > frac * g.n:
        raise UsageError(f"separator has {len(sep)} > eps*n = {float(frac * g.n)} vertices")
    in_sep = np.zeros(g.n, dtype=bool)
    in_sep[sep] = True
    rest = g.arc_subgraph(~in_sep[g.arc_src] & ~in_sep[g.indices])
    part = connected_components(rest)
    comps = [c.tolist() for c in part.components if not in_sep[c[0]]]
    for c in comps:
        if len(c) > frac * g.n:
            raise UsageError(f"component of size {len(c)} exceeds eps*n = {float(frac * g.n)}")
    worlds, reports = [], []
    for i, comp in enumerate(comps):
        w = World.from_corrupt(g.n, sep + comp)
        adv = Adversary("scenario-Ri", {"separator": sep, "components": comps, "index": i})
        worlds.append(w)
        reports.append(generate_reports(g, w, adv))
    return ScenarioFamily(g, sep, comps, worlds, reports, frac)


def verify_indistinguishable(family: ScenarioFamily) -> bool:
    if len(family.reports) <= 1:
        return True
    first = family.reports[0].verdict
    return all(np.array_equal(first, r.verdict) for r in family.reports[1:])


def grid_separator(rows: int, cols: int, axis: str = "row") -> list[int]:
    """Middle row (index ``rows // 2``) or middle column of a grid whose
    vertex ``(r, c)`` is ``r * cols + c``."""
    if axis == "row":
        r = rows // 2
        return [r * cols + c for c in range(cols)]
    if axis == "column":
        c = cols // 2
        return [r * cols + c for r in range(rows)]
    raise UsageError(f"axis must be 'row' or 'column', got {axis!r}")


def grid_eps(rows: int, cols: int, axis: str = "row") -> Fraction:
    """Smallest eps admitted by the grid's middle separator."""
    from .generators import grid

    g = grid(rows, cols)
    sep = set(grid_separator(rows, cols, axis))
    keep = np.array([not (u in sep or v in sep) for u, v in g.arcs()], dtype=bool)
    part = connected_components(g.arc_subgraph(keep))
    biggest = max((len(c) for c in part.components if int(c[0]) not in sep), default=0)
    return Fraction(max(biggest, len(sep)), g.n)


# ------------------------------------------------------------- fixtures


def write_fixture(directory, name: str, g: Graph, reports: ReportSet, meta: dict) -> dict:
    """Write ``name.graph``, ``name.reports`` and ``name.json``; returns the
    manifest entry."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    g.write(d / f"{name}.graph")
    reports.write(d / f"{name}.reports")
    entry = {"name": name, "graph": f"{name}.graph", "reports": f"{name}.reports", **meta}
    (d / f"{name}.json").write_text(json.dumps(entry, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return entry
