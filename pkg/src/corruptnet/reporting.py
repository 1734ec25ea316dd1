"""Ground-truth worlds, report generation under adversaries, consistency."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import kernels
from .errors import UsageError
from .graph import Graph

ORACLE_BOUND = 25

STRATEGIES = ("mirror-confusion", "scenario-Ri", "collude-praise", "all-accuse", "random", "scripted")


def _members(n: int, members) -> list[int]:
    out = [int(v) for v in members]
    if any(not 0 <= v < n for v in out):
        raise UsageError(f"vertex outside 0..{n - 1}")
    return out


@dataclass
class World:
    """Partition of the vertices into truthful (mask True) and corrupt."""

    truthful: np.ndarray

    def __post_init__(self):
        self.truthful = np.asarray(self.truthful, dtype=bool)

    @classmethod
    def from_truthful(cls, n: int, members) -> World:
        mask = np.zeros(n, dtype=bool)
        mask[_members(n, members)] = True
        return cls(mask)

    @classmethod
    def from_corrupt(cls, n: int, members) -> World:
        mask = np.ones(n, dtype=bool)
        mask[_members(n, members)] = False
        return cls(mask)

    @classmethod
    def from_mask(cls, n: int, bits: int) -> World:
        return cls(((int(bits) >> np.arange(n)) & 1).astype(bool))

    @property
    def n(self) -> int:
        return int(self.truthful.size)

    @property
    def T(self) -> list[int]:
        return np.flatnonzero(self.truthful).tolist()

    @property
    def B(self) -> list[int]:
        return np.flatnonzero(~self.truthful).tolist()

    @property
    def t_size(self) -> int:
        return int(self.truthful.sum())

    @property
    def b_size(self) -> int:
        return self.n - self.t_size

    def swapped(self, perm) -> World:
        """World with vertex ``v`` renamed ``perm[v]``."""
        out = np.zeros(self.n, dtype=bool)
        out[np.asarray(perm)] = self.truthful
        return World(out)

    def __eq__(self, other) -> bool:
        return isinstance(other, World) and np.array_equal(self.truthful, other.truthful)

    def to_text(self) -> str:
        return "T: " + " ".join(map(str, self.T)) + "\nB: " + " ".join(map(str, self.B)) + "\n"

    @classmethod
    def from_text(cls, text: str, n: int | None = None) -> World:
        parts = {}
        for line in text.splitlines():
            if ":" in line:
                key, _, rest = line.partition(":")
                parts[key.strip()] = [int(x) for x in rest.split()]
        if "T" not in parts or "B" not in parts:
            raise UsageError("world file needs 'T:' and 'B:' lines")
        t, b = parts["T"], parts["B"]
        size = len(t) + len(b) if n is None else n
        if set(t) & set(b) or sorted(t + b) != list(range(size)):
            raise UsageError("world file must partition 0..n-1 into T and B")
        return cls.from_truthful(size, t)


class ReportSet:
    """One verdict per arc of the graph; ``True`` means "truthful".

    Verdicts are aligned with ``graph.indices``, so an undirected edge carries
    two verdicts, one per direction.
    """

    def __init__(self, graph: Graph, verdict):
        verdict = np.asarray(verdict, dtype=bool)
        if verdict.shape != (graph.num_arcs,):
            raise UsageError(f"need {graph.num_arcs} verdicts, got {verdict.shape}")
        self.graph = graph
        self.verdict = verdict

    def verdict_of(self, u: int, v: int) -> bool:
        return bool(self.verdict[self.graph.arc_index(u, v)])

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, ReportSet)
            and self.graph == other.graph
            and np.array_equal(self.verdict, other.verdict)
        )

    def to_text(self) -> str:
        marks = np.where(self.verdict, "T", "C")
        return "".join(f"{u} {v} {c}\n" for (u, v), c in zip(self.graph.arcs(), marks.tolist()))

    @classmethod
    def from_text(cls, graph: Graph, text: str) -> ReportSet:
        verdict = np.zeros(graph.num_arcs, dtype=bool)
        seen = np.zeros(graph.num_arcs, dtype=bool)
        for lineno, line in enumerate(text.splitlines(), 1):
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            if len(parts) != 3 or parts[2] not in ("T", "C"):
                raise UsageError(f"report line {lineno}: expected 'u v T|C'")
            u, v = int(parts[0]), int(parts[1])
            try:
                a = graph.arc_index(u, v)
            except (KeyError, IndexError):
                raise UsageError(f"report line {lineno}: ({u}, {v}) is not an inspection arc") from None
            if seen[a]:
                raise UsageError(f"report line {lineno}: duplicate verdict for ({u}, {v})")
            seen[a] = True
            verdict[a] = parts[2] == "T"
        if not seen.all():
            a = int(np.flatnonzero(~seen)[0])
            raise UsageError(f"report set incomplete: no verdict for ({graph.arc_src[a]}, {graph.indices[a]})")
        return cls(graph, verdict)

    def write(self, path) -> None:
        Path(path).write_text(self.to_text(), encoding="utf-8")

    @classmethod
    def read(cls, graph: Graph, path) -> ReportSet:
        return cls.from_text(graph, Path(path).read_text(encoding="utf-8"))

    def permuted(self, perm) -> ReportSet:
        """Reports with every vertex renamed by ``perm``; arcs whose image is
        not an arc are dropped from the comparison by the caller."""
        g = self.graph
        perm = np.asarray(perm)
        out = np.zeros(g.num_arcs, dtype=bool)
        src, dst = perm[g.arc_src], perm[g.indices]
        for a, (u, v) in enumerate(zip(src.tolist(), dst.tolist())):
            out[g.arc_index(u, v)] = self.verdict[a]
        return ReportSet(g, out)


@dataclass
class Adversary:
    strategy: str
    params: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise UsageError(f"unknown adversary {self.strategy!r}; expected one of {STRATEGIES}")


def mirror_pairing(world: World, pairing=None) -> list[tuple[int, int]]:
    """Pairs (truthful, corrupt) that the mirror adversary swaps.

    Default: the i-th smallest truthful vertex with the i-th smallest corrupt
    one, as many pairs as the smaller side allows.
    """
    if pairing is None:
        return list(zip(world.T, world.B))
    pairs = [(int(a), int(b)) for a, b in pairing]
    firsts, seconds = [a for a, _ in pairs], [b for _, b in pairs]
    if len(set(firsts)) != len(pairs) or len(set(seconds)) != len(pairs):
        raise UsageError("mirror pairing must be a matching")
    if not all(world.truthful[a] for a in firsts) or any(world.truthful[b] for b in seconds):
        raise UsageError("mirror pairing must match truthful vertices with corrupt ones")
    if len(pairs) != min(world.t_size, world.b_size):
        raise UsageError(
            f"mirror pairing needs |V1| = |V2| = {min(world.t_size, world.b_size)}, got {len(pairs)} pairs"
        )
    return pairs


def generate_reports(g: Graph, w: World, adv: Adversary) -> ReportSet:
    if w.n != g.n:
        raise UsageError(f"world has {w.n} vertices, graph has {g.n}")
    truth = w.truthful
    verdict = truth[g.indices].copy()
    corrupt_arc = ~truth[g.arc_src]
    if not corrupt_arc.any():
        return ReportSet(g, verdict)
    src, dst = g.arc_src[corrupt_arc], g.indices[corrupt_arc]
    s = adv.strategy
    if s == "collude-praise":
        fake = ~truth[dst]
    elif s == "all-accuse":
        fake = np.zeros(dst.size, dtype=bool)
    elif s == "random":
        fake = np.random.default_rng(adv.seed).integers(0, 2, size=dst.size).astype(bool)
    elif s == "mirror-confusion":
        pairs = mirror_pairing(w, adv.params.get("pairing"))
        alt = truth.copy()
        v2 = np.zeros(g.n, dtype=bool)
        for a, b in pairs:
            alt[a], alt[b] = False, True
            v2[b] = True
        # V2 reports the swapped world; other corrupt vertices accuse everyone.
        fake = np.where(v2[src], alt[dst], False)
    elif s == "scenario-Ri":
        sep = np.zeros(g.n, dtype=bool)
        sep[list(adv.params["separator"])] = True
        comp = np.zeros(g.n, dtype=bool)
        comp[list(adv.params["components"][int(adv.params["index"])])] = True
        fake = np.where(comp[src], comp[dst], False)
    elif s == "scripted":
        fake = _scripted(g, corrupt_arc, adv.params)
    else:  # pragma: no cover - guarded by Adversary.__post_init__
        raise UsageError(s)
    verdict[corrupt_arc] = fake
    return ReportSet(g, verdict)


def _scripted(g, corrupt_arc, params):
    if "reports" in params:
        script = params["reports"]
        if not isinstance(script, ReportSet):
            script = ReportSet(g, script)
        return script.verdict[corrupt_arc]
    if "path" in params:
        return ReportSet.read(g, params["path"]).verdict[corrupt_arc]
    table = params.get("verdicts")
    if table is None:
        raise UsageError("scripted adversary needs 'reports', 'path' or 'verdicts'")
    out = []
    for u, v in zip(g.arc_src[corrupt_arc].tolist(), g.indices[corrupt_arc].tolist()):
        if (u, v) not in table:
            raise UsageError(f"script has no verdict for corrupt arc ({u}, {v})")
        val = table[(u, v)]
        out.append(val if isinstance(val, (bool, np.bool_)) else val == "T")
    return np.array(out, dtype=bool)


def gadget_script(g: Graph, w: World, seed: int = 0) -> ReportSet:
    """Reports following the hardness gadget's rules for the corrupt side.

    A random maximal independent set of corrupt vertices plays the role of the
    singleton class and accuses everyone; the remaining corrupt vertices act as
    a closed block that vouches only for itself. Truthful verdicts are exact.
    """
    rng = np.random.default_rng(seed)
    corrupt = np.flatnonzero(~w.truthful)
    singles = np.zeros(g.n, dtype=bool)
    blocked = np.zeros(g.n, dtype=bool)
    for v in rng.permutation(corrupt).tolist():
        if not blocked[v]:
            singles[v] = True
            blocked[g.neighbors(v)] = True
            blocked[g.in_neighbors(v)] = True
    block = ~w.truthful & ~singles
    truth = w.truthful
    src, dst = g.arc_src, g.indices
    verdict = np.where(truth[src], truth[dst], np.where(singles[src], False, block[dst]))
    return ReportSet(g, verdict)


def consistency_check(g: Graph, r: ReportSet, candidate: World) -> bool:
    trusted = candidate.truthful[g.arc_src]
    return bool(np.all(r.verdict[trusted] == candidate.truthful[g.indices[trusted]]))


def _verdict_masks(g: Graph, r: ReportSet):
    weights = np.left_shift(np.int64(1), g.indices)
    tmask = np.zeros(g.n, dtype=np.int64)
    cmask = np.zeros(g.n, dtype=np.int64)
    np.bitwise_or.at(tmask, g.arc_src[r.verdict], weights[r.verdict])
    np.bitwise_or.at(cmask, g.arc_src[~r.verdict], weights[~r.verdict])
    return tmask, cmask


def _check_bound(g: Graph, bound: int) -> None:
    if g.n > bound:
        raise UsageError(f"exhaustive oracle refuses n={g.n} > {bound}")


@dataclass
class ConsistentSummary:
    count: int
    always_truthful: list[int]
    ever_truthful: list[int]
    max_truthful: int


def consistent_summary(g: Graph, r: ReportSet, min_T: int = 0, bound: int = ORACLE_BOUND) -> ConsistentSummary:
    """Aggregate over every consistent world with ``|T| >= min_T``."""
    _check_bound(g, bound)
    tmask, cmask = _verdict_masks(g, r)
    count, and_m, or_m, best, _ = kernels.consistent_scan(g.n, tmask, cmask, int(min_T), False)
    and_m, or_m = int(and_m), int(or_m)
    bits = range(g.n)
    return ConsistentSummary(
        int(count),
        [v for v in bits if count and (and_m >> v) & 1],
        [v for v in bits if (or_m >> v) & 1],
        int(best),
    )


def enumerate_consistent(g: Graph, r: ReportSet, min_T: int = 0, bound: int = ORACLE_BOUND) -> list[World]:
    """Every world with ``|T| >= min_T`` consistent with ``r``, ordered by
    the bit-mask of T (vertex v is bit v)."""
    _check_bound(g, bound)
    tmask, cmask = _verdict_masks(g, r)
    _, _, _, _, masks = kernels.consistent_scan(g.n, tmask, cmask, int(min_T), True)
    return [World.from_mask(g.n, int(m)) for m in masks]
