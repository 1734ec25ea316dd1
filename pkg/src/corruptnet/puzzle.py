"""Adaptive machine-testing game on the complete graph.

``n`` machines, exactly ``t`` of them truthful. A test asks machine ``i``
about machine ``j`` and costs one answer; truthful testers answer correctly,
corrupt testers answer however the adversary likes. Strategies are
stateless: given the history so far they return the next test or the final
labeling, which lets exhaustive verification replay them on any branch.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations

import numpy as np

from .errors import ImpossibleInstance, UsageError

VERIFY_BOUND = 6
MINIMAX_BOUND = 5


@dataclass(frozen=True)
class PuzzleInstance:
    n: int
    t: int

    def __post_init__(self):
        if self.n < 1 or not 1 <= self.t <= self.n:
            raise UsageError(f"need 1 <= t <= n, got n={self.n}, t={self.t}")

    @property
    def solvable(self) -> bool:
        return 2 * self.t > self.n

    def require_solvable(self) -> None:
        if not self.solvable:
            raise ImpossibleInstance(
                f"{self.n - self.t} corrupt machines out of {self.n}: without a strict truthful "
                "majority no machine can be certified"
            )


@dataclass
class TestHistory:
    __test__ = False  # not a pytest class

    records: list = field(default_factory=list)  # (tester, testee, answer)

    def __len__(self) -> int:
        return len(self.records)

    def add(self, tester: int, testee: int, answer: bool) -> TestHistory:
        if tester == testee:
            raise UsageError("a machine cannot test itself")
        self.records.append((int(tester), int(testee), bool(answer)))
        return self

    def extended(self, tester: int, testee: int, answer: bool) -> TestHistory:
        return TestHistory(self.records + [(int(tester), int(testee), bool(answer))])


@dataclass(frozen=True)
class Test:
    __test__ = False

    tester: int
    testee: int


@dataclass(frozen=True)
class Final:
    labels: tuple  # True = truthful


class Strategy:
    name = "strategy"

    def bound(self, n: int) -> int:
        """Maximum number of tests the strategy ever asks for."""
        raise NotImplementedError

    def next(self, n: int, t: int, history: TestHistory):
        raise NotImplementedError


class _Replay(Exception):
    def __init__(self, test: Test):
        self.test = test


class _Cursor:
    """Feeds recorded answers back to a strategy re-running from scratch."""

    def __init__(self, history: TestHistory):
        self.records = history.records
        self.pos = 0

    def ask(self, i: int, j: int) -> bool:
        if self.pos == len(self.records):
            raise _Replay(Test(i, j))
        tester, testee, answer = self.records[self.pos]
        if (tester, testee) != (i, j):
            raise UsageError(f"history diverges from the strategy at test {self.pos}")
        self.pos += 1
        return answer


class ChainStrategy(Strategy):
    """Find one certainly truthful machine, then let it test the rest.

    Machines join a chain in index order: the chain's last machine tests the
    newcomer; a "truthful" verdict appends it, a "corrupt" verdict discards
    the newcomer together with the tester, since at least one of the two is
    corrupt. Every machine in the chain vouched for its successor, so the
    chain is some corrupt machines followed by truthful ones, and the
    discarded pairs never remove a truthful majority. Hence the final chain
    end is truthful. It then tests the others, stopping once ``t`` truthful
    or ``n - t`` corrupt machines are known.
    """

    name = "chain"

    def bound(self, n: int) -> int:
        return 2 * max(n - 1, 0)

    def next(self, n: int, t: int, history: TestHistory):
        cur = _Cursor(history)
        try:
            return Final(tuple(self._play(n, t, cur)))
        except _Replay as r:
            return r.test

    @staticmethod
    def _play(n: int, t: int, cur: _Cursor):
        chain: list[int] = []
        for x in range(n):
            if not chain:
                chain.append(x)
            elif cur.ask(chain[-1], x):
                chain.append(x)
            else:
                chain.pop()
        leader = chain[-1] if chain else 0
        labels = [None] * n
        labels[leader] = True
        good, bad = 1, 0
        for j in range(n):
            if labels[j] is not None:
                continue
            if good == t or bad == n - t:
                labels[j] = bad == n - t
                continue
            labels[j] = cur.ask(leader, j)
            good += labels[j]
            bad += not labels[j]
        return labels


class CompleteTestingStrategy(Strategy):
    """Every machine tests every other one; the truthful set is then the
    unique consistent set of size ``t`` vouched for by one of its members."""

    name = "complete"

    def bound(self, n: int) -> int:
        return n * (n - 1)

    def next(self, n: int, t: int, history: TestHistory):
        cur = _Cursor(history)
        try:
            says = {(i, j): cur.ask(i, j) for i in range(n) for j in range(n) if i != j}
        except _Replay as r:
            return r.test
        for i in range(n):
            world = {i} | {j for j in range(n) if j != i and says[i, j]}
            if len(world) == t and all(says[u, v] == (v in world) for u in world for v in range(n) if u != v):
                return Final(tuple(v in world for v in range(n)))
        return Final(tuple([True] * n))


class BlindStrategy(Strategy):
    """Labels every machine truthful without testing (a deliberately wrong
    strategy, useful for checking the verifier)."""

    name = "blind"

    def bound(self, n: int) -> int:
        return 0

    def next(self, n: int, t: int, history: TestHistory):
        return Final(tuple([True] * n))


STRATEGIES = {s.name: s for s in (ChainStrategy(), CompleteTestingStrategy(), BlindStrategy())}


# ------------------------------------------------------------- adversaries


class PuzzleAdversary:
    """Fixes the truthful set up front; corrupt testers answer by ``policy``:

    ``random`` flips a seeded coin, ``praise`` vouches for corrupt machines
    and accuses truthful ones, ``accuse`` says corrupt always, ``flatter``
    says truthful always.
    """

    POLICIES = ("random", "praise", "accuse", "flatter")

    def __init__(self, truthful, policy: str = "random", seed: int = 0):
        if policy not in self.POLICIES:
            raise UsageError(f"unknown puzzle adversary policy {policy!r}")
        self.truthful = frozenset(int(v) for v in truthful)
        self.policy = policy
        self.rng = np.random.default_rng(seed)

    @classmethod
    def random(cls, inst: PuzzleInstance, seed: int, policy: str | None = None) -> PuzzleAdversary:
        rng = np.random.default_rng(seed)
        members = rng.choice(inst.n, size=inst.t, replace=False).tolist()
        if policy is None:
            policy = cls.POLICIES[int(rng.integers(len(cls.POLICIES)))]
        return cls(members, policy, int(rng.integers(2**63)))

    def answer(self, tester: int, testee: int, history: TestHistory) -> bool:
        truth = testee in self.truthful
        if tester in self.truthful:
            return truth
        if self.policy == "random":
            return bool(self.rng.integers(2))
        if self.policy == "praise":
            return not truth
        return self.policy == "flatter"

    def labels(self, n: int) -> tuple:
        return tuple(v in self.truthful for v in range(n))


class MirrorPair:
    """Answer oracle shared by two disjoint truthful sets of equal size:
    members of either set vouch exactly for their own set, everyone else
    vouches for the first set. Both worlds explain every answer."""

    def __init__(self, first, second):
        self.first, self.second = frozenset(first), frozenset(second)
        if self.first & self.second:
            raise UsageError("mirror sets must be disjoint")

    def answer(self, tester: int, testee: int, history: TestHistory) -> bool:
        if tester in self.second:
            return testee in self.second
        return testee in self.first


def _play(inst: PuzzleInstance, strat: Strategy, adv, cap: int):
    history = TestHistory()
    while True:
        step = strat.next(inst.n, inst.t, history)
        if isinstance(step, Final):
            if len(step.labels) != inst.n:
                raise UsageError("strategy returned a labeling of the wrong length")
            return list(step.labels), history
        if len(history) >= cap:
            raise UsageError(f"strategy {strat.name!r} exceeded its declared bound of {cap} tests")
        i, j = step.tester, step.testee
        if i == j or not (0 <= i < inst.n and 0 <= j < inst.n):
            raise UsageError(f"strategy asked for an invalid test ({i}, {j})")
        history.add(i, j, adv.answer(i, j, history))


def run_strategy(inst: PuzzleInstance, strat: Strategy, adv) -> tuple[list, int]:
    """Play the game; returns the strategy's labeling and its test count."""
    inst.require_solvable()
    labels, history = _play(inst, strat, adv, strat.bound(inst.n))
    return labels, len(history)


# ------------------------------------------------------------ exhaustive


def _worlds(n: int, t: int) -> tuple:
    return tuple(sum(1 << v for v in c) for c in combinations(range(n), t))


def _split(worlds, i: int, j: int):
    """Worlds still possible after answer T / answer C to test (i, j)."""
    yes, no = [], []
    for w in worlds:
        if (w >> i) & 1:
            (yes if (w >> j) & 1 else no).append(w)
        else:
            yes.append(w)
            no.append(w)
    return tuple(yes), tuple(no)


def verify_strategy(inst: PuzzleInstance, strat: Strategy) -> bool:
    """Exhaustive game tree: the adversary may give either answer whenever
    some world still consistent with the history allows it, and wins if the
    final labeling differs from any remaining world."""
    if inst.n > VERIFY_BOUND:
        raise UsageError(f"verify_strategy refuses n={inst.n} > {VERIFY_BOUND}")
    cap = strat.bound(inst.n)
    n = inst.n

    def walk(worlds, history: TestHistory) -> bool:
        step = strat.next(n, inst.t, history)
        if isinstance(step, Final):
            target = sum(1 << v for v, lab in enumerate(step.labels) if lab)
            return all(w == target for w in worlds)
        if len(history) >= cap or step.tester == step.testee:
            return False
        branches = _split(worlds, step.tester, step.testee)
        for answer, sub in zip((True, False), branches):
            if sub and not walk(sub, history.extended(step.tester, step.testee, answer)):
                return False
        return True

    return walk(_worlds(n, inst.t), TestHistory())


def game_tree_branches(inst: PuzzleInstance, strat: Strategy):
    """Yield ``(history, worlds, answer, realizable)`` for every test node
    the adversary can reach, so callers can re-check branch existence."""
    if inst.n > VERIFY_BOUND:
        raise UsageError(f"game tree refuses n={inst.n} > {VERIFY_BOUND}")
    n = inst.n

    def walk(worlds, history):
        step = strat.next(n, inst.t, history)
        if isinstance(step, Final) or len(history) >= strat.bound(n):
            return
        branches = _split(worlds, step.tester, step.testee)
        for answer, sub in zip((True, False), branches):
            yield history, worlds, (step.tester, step.testee, answer), bool(sub)
            if sub:
                yield from walk(sub, history.extended(step.tester, step.testee, answer))

    yield from walk(_worlds(n, inst.t), TestHistory())


def minimal_tests(inst: PuzzleInstance) -> int:
    """Worst-case optimal number of tests, by minimax over world sets."""
    if inst.n > MINIMAX_BOUND:
        raise UsageError(f"minimal_tests refuses n={inst.n} > {MINIMAX_BOUND}")
    inst.require_solvable()
    n = inst.n
    pairs = [(i, j) for i in range(n) for j in range(n) if i != j]

    @lru_cache(maxsize=None)
    def value(worlds: tuple) -> float:
        if len(worlds) == 1:
            return 0
        best = float("inf")
        for i, j in pairs:
            yes, no = _split(worlds, i, j)
            # An answer that leaves the world set unchanged teaches nothing.
            if yes == worlds or no == worlds:
                continue
            cost = 1 + max(value(b) for b in (yes, no) if b)
            best = min(best, cost)
        return best

    result = value(_worlds(n, inst.t))
    if result == float("inf"):
        raise ImpossibleInstance(f"no strategy separates the worlds of {inst}")
    return int(result)


def transcript_consistent(records, truthful) -> bool:
    """Every answer given by a member of ``truthful`` is correct."""
    members = frozenset(truthful)
    return all(ans == (j in members) for i, j, ans in records if i in members)


def indistinguishable_plays(inst: PuzzleInstance, strat: Strategy, cap: int | None = None):
    """For ``t <= n/2``: two disjoint truthful sets and one transcript of
    ``strat`` that both explain. Returns ``(first, second, transcript,
    labels)``; the labeling is wrong in at least one of the two worlds."""
    if inst.solvable:
        raise UsageError("indistinguishable plays need t <= n/2")
    first = list(range(inst.t))
    second = list(range(inst.t, 2 * inst.t))
    cap = strat.bound(inst.n) if cap is None else cap
    labels, history = _play(inst, strat, MirrorPair(first, second), cap)
    return first, second, history.records, labels
