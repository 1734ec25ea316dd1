"""The eleven acceptance criteria, one test each. Every test prints a single
``criterion <k> PASS|FAIL`` line, collected again in the terminal summary."""

import json
import subprocess
import sys
import time
import warnings
from fractions import Fraction
from itertools import combinations
from pathlib import Path

import numpy as np
import pytest

from corruptnet.certify import DELTA_CONNECTED, DIRECTED_GOOD, certify
from corruptnet.constructions import (
    build_np_gadget,
    build_separator_scenarios,
    gadget_fixtures,
    grid_eps,
    grid_separator,
    independence_number,
    verify_indistinguishable,
)
from corruptnet.detection import UNKNOWN, certain_labels, detect_connected, detect_directed, detect_undirected
from corruptnet.errors import CorruptNetError, FallbackToGeneral, ImpossibleInstance
from corruptnet.generators import blowup, complete, grid, orient_lemma14, random_regular, star
from corruptnet.graph import Graph
from corruptnet.puzzle import ChainStrategy, PuzzleAdversary, PuzzleInstance, minimal_tests, run_strategy, verify_strategy
from corruptnet.reporting import Adversary, ReportSet, World, enumerate_consistent, generate_reports

from conftest import ACCEPTANCE_LINES, petersen
from suite import DIRECTED_DELTA, UNDIRECTED_DELTA, adversary_suite, directed_fixtures, trials, undirected_fixtures

UNDIRECTED_PLACEMENTS = 4
DIRECTED_PLACEMENTS = 2


def report(k: int, ok: bool, detail: str) -> None:
    line = f"criterion {k} {'PASS' if ok else 'FAIL'}: {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line


# ----------------------------------------------------------------- 1 and 2


def _undirected_runs():
    out = []
    for name, g, w, adv, r in trials(undirected_fixtures(), UNDIRECTED_PLACEMENTS):
        res = detect_undirected(g, r, "general", UNDIRECTED_DELTA)
        out.append((name, g, w, adv, r, res))
    return out


@pytest.fixture(scope="module")
def undirected_runs():
    return _undirected_runs()


@pytest.fixture(scope="module")
def directed_runs():
    out = []
    for name, g, w, adv, r in trials(directed_fixtures(), DIRECTED_PLACEMENTS):
        out.append((name, g, w, adv, r, detect_directed(g, r, "general", DIRECTED_DELTA)))
    return out


def test_criterion_1_soundness(undirected_runs):
    wrong = [(name, adv, w.T) for name, _, w, adv, _, res in undirected_runs if res.mistakes(w.truthful)]
    n = len(undirected_runs)
    report(1, n >= 2000 and not wrong,
           f"{n} general-mode trials on {len(undirected_fixtures())} certified graphs "
           f"(delta={UNDIRECTED_DELTA}), {len(wrong)} with a wrong label")


def test_criterion_2_coverage(undirected_runs, directed_runs):
    over = [(name, adv) for name, g, _, adv, _, res in undirected_runs
            if res.unknown_count > int(UNDIRECTED_DELTA * g.n)]
    over += [(name, adv) for name, g, _, adv, _, res in directed_runs
             if res.unknown_count > int(DIRECTED_DELTA * g.n)]
    unsound = [(name, adv) for name, _, w, adv, _, res in directed_runs if res.mistakes(w.truthful)]
    total = len(undirected_runs) + len(directed_runs)
    report(2, not over and not unsound,
           f"{total} trials ({len(directed_runs)} directed, delta={DIRECTED_DELTA}); "
           f"{len(over)} over floor(delta n) unknowns, {len(unsound)} unsound directed")


# ----------------------------------------------------------------- 3


def _agree(res, oracle):
    known = res.labels != UNKNOWN
    decided = oracle.labels != UNKNOWN
    both = known & decided
    return bool(np.array_equal(res.labels[both], oracle.labels[both])), bool(np.all(decided[known]))


def test_criterion_3_oracle_dominance(undirected_runs):
    checked = conflicts = undecided = 0
    for _, g, w, _, r, res in undirected_runs:
        if g.n > 20:
            continue
        ok, covered = _agree(res, certain_labels(g, r))
        checked += 1
        conflicts += not ok
        undecided += not covered
    # fast mode is valid whenever T holds a strict majority, on any graph
    rng = np.random.default_rng(2024)
    for i in range(300):
        n = int(rng.integers(4, 15))
        directed = bool(i % 2)
        pairs = [(u, v) for u in range(n) for v in range(n) if u != v and (directed or u < v)]
        keep = rng.random(len(pairs)) < rng.uniform(0.2, 0.8)
        g = Graph(n, [p for p, k in zip(pairs, keep) if k], directed=directed)
        t = int(rng.integers(n // 2 + 1, n + 1))
        w = World.from_truthful(n, rng.choice(n, size=t, replace=False).tolist())
        name, make = adversary_suite()[int(rng.integers(len(adversary_suite())))]
        r = make(g, w, i)
        detect = detect_directed if directed else detect_undirected
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", FallbackToGeneral)
                res = detect(g, r, "fast")
        except CorruptNetError:
            continue  # no strict-majority component: fast mode declines
        ok, covered = _agree(res, certain_labels(g, r))
        checked += 1
        conflicts += not ok
        undecided += not covered
    report(3, checked > 0 and conflicts == 0,
           f"{checked} instances with n <= 20, {conflicts} disagreements with the certainty oracle "
           f"({undecided} emitted a label the oracle leaves open)")


# ----------------------------------------------------------------- 4


@pytest.mark.slow
def test_criterion_4_fast_path_linearity():
    sizes = (10**4, 10**5, 10**6)
    times = {"undirected": [], "directed": []}
    sound = True
    for n in sizes:
        g = random_regular(n, 16, seed=1)
        dg = orient_lemma14(g, k=4, seed=1)
        w = World.from_truthful(n, np.random.default_rng(n).choice(n, size=int(0.6 * n), replace=False))
        for kind, graph, fn in (("undirected", g, detect_undirected), ("directed", dg, detect_directed)):
            r = generate_reports(graph, w, Adversary("collude-praise"))
            fn(graph, r, "fast")  # warm-up
            best = float("inf")
            for _ in range(3):
                t0 = time.perf_counter()
                res = fn(graph, r, "fast")
                best = min(best, time.perf_counter() - t0)
            sound &= res.mistakes(w.truthful) == 0
            times[kind].append(best)
    ratios = {k: [b / a for a, b in zip(v, v[1:])] for k, v in times.items()}
    ok = sound and all(10 / 3 <= x <= 30 for v in ratios.values() for x in v)
    ok &= all(t < 60 for v in times.values() for t in v)
    detail = "; ".join(
        f"{k} " + ", ".join(f"{t:.4f}s" for t in times[k]) + " ratios " + ", ".join(f"{x:.1f}" for x in ratios[k])
        for k in times
    )
    report(4, ok, detail)


# ----------------------------------------------------------------- 5


def test_criterion_5_grid_impossibility():
    bad = []
    for size in (3, 4, 5):
        g = grid(size, size)
        fam = build_separator_scenarios(g, grid_separator(size, size), grid_eps(size, size))
        oracle = certain_labels(g, fam.reports[0], min_T=fam.min_truthful())
        if not verify_indistinguishable(fam) or oracle.truthful or fam.common_truthful():
            bad.append(size)
    report(5, not bad, f"grids 3x3, 4x4, 5x5: indistinguishable and no certain-truthful vertex; failures {bad}")


# ----------------------------------------------------------------- 6


def test_criterion_6_mirror_impossibility():
    bad = []
    for name, g in (("K4", complete(4)), ("K6", complete(6)), ("Petersen", petersen())):
        w = World.from_truthful(g.n, range(g.n // 2))
        r = generate_reports(g, w, Adversary("mirror-confusion"))
        for min_T in (None, g.n // 2):
            if np.any(certain_labels(g, r, min_T=min_T).labels != UNKNOWN):
                bad.append((name, min_T))
    report(6, not bad, f"K4, K6, Petersen with |T| = |B|: all Unknown; failures {bad}")


# ----------------------------------------------------------------- 7


def test_criterion_7_gadget():
    specs = gadget_fixtures()
    bad = []
    for i, spec in enumerate(specs):
        g, r = build_np_gadget(spec)
        best = max(w.t_size for w in enumerate_consistent(g, r))
        if best != len(spec.V1) + independence_number(spec.H):
            bad.append(i)
    report(7, len(specs) >= 5 and not bad,
           f"{len(specs)} gadget specs (n <= 20, m <= 6): max |T| = |V1| + alpha(H); failures {bad}")


# ----------------------------------------------------------------- 8


LEMMA14_SMALL = [(12, 6, 1), (12, 6, 2), (14, 8, 2), (16, 8, 2), (16, 8, 3), (18, 8, 2), (18, 10, 3), (18, 12, 4)]


def test_criterion_8_lemma14():
    degree_bad = []
    verdicts = []
    analogue_bad = []
    for n, d, k in LEMMA14_SMALL:
        for seed in range(3):
            dg, e1 = orient_lemma14(random_regular(n, d, seed), k=k, seed=seed, return_e1=True)
            outs = np.bincount(e1[:, 0], minlength=n)
            ins = np.bincount(e1[:, 1], minlength=n)
            if not (np.all(outs == k) and np.all(ins == k)):
                degree_bad.append((n, d, k, seed))
            for delta in (Fraction(1, 20), Fraction(1, 32)):
                cert = certify(dg, delta, DIRECTED_GOOD, "exhaustive")
                verdicts.append(cert.verdict)
                if cert.passed:
                    for _, _, w, adv, r in trials((("small", dg),), 1):
                        res = detect_directed(dg, r, "general", delta)
                        if res.mistakes(w.truthful) or res.unknown_count > int(delta * n):
                            analogue_bad.append((n, d, k, seed, adv))
    counts = {v: verdicts.count(v) for v in sorted(set(verdicts))}
    report(8, not degree_bad and not analogue_bad,
           f"{3 * len(LEMMA14_SMALL)} orientations with in = out = k on E1 (failures {len(degree_bad)}); "
           f"exhaustive directed-good verdicts at n <= 18: {counts}; analogue failures {len(analogue_bad)}")


# ----------------------------------------------------------------- 9


CONNECTED_FIXTURES = [(2, 4, Fraction(1, 6)), (3, 4, Fraction(1, 8)), (4, 4, Fraction(1, 10)),
                      (5, 4, Fraction(1, 12)), (3, 2, Fraction(1, 8)), (4, 3, Fraction(1, 15))]


def test_criterion_9_connected():
    runs = 0
    bad = []
    for m, k, eps in CONNECTED_FIXTURES:
        g = blowup(star(m), k)
        assert certify(g, eps, DELTA_CONNECTED, "exhaustive").passed
        b = int(eps * g.n)
        for corrupt in combinations(range(g.n), b):
            w = World.from_corrupt(g.n, corrupt)
            for adv, make in adversary_suite():
                found = detect_connected(g, make(g, w, 0), eps)
                runs += 1
                if not set(found) <= set(w.T) or len(found) < (1 - 2 * eps) * g.n:
                    bad.append((m, k, corrupt, adv))
    empty = []
    for m in (3, 5, 8):
        g = star(m)
        r = ReportSet(g, np.zeros(g.num_arcs, dtype=bool))
        empty.append(detect_connected(g, r, Fraction(1, m + 1)) == [])
    report(9, not bad and all(empty),
           f"{runs} trials on {len(CONNECTED_FIXTURES)} certified blowup(star) graphs, {len(bad)} violations; "
           f"star all-accuse empty: {all(empty)}")


# ----------------------------------------------------------------- 10


def test_criterion_10_puzzle():
    golden = json.loads((Path(__file__).parent / "golden" / "minimal_tests.json").read_text())
    verified = all(
        verify_strategy(PuzzleInstance(n, t), ChainStrategy())
        for n in range(1, 7) for t in range(n // 2 + 1, n + 1)
    )
    inst = PuzzleInstance(100, 51)
    worst = 0
    correct = 0
    for seed in range(1000):
        adv = PuzzleAdversary.random(inst, seed)
        labels, count = run_strategy(inst, ChainStrategy(), adv)
        correct += tuple(labels) == adv.labels(100)
        worst = max(worst, count)
    stable = all(
        minimal_tests(PuzzleInstance(*map(int, key.split(",")))) == value for key, value in golden.items()
    ) and all(
        minimal_tests(PuzzleInstance(*map(int, key.split(",")))) == value for key, value in golden.items()
    )
    try:
        run_strategy(PuzzleInstance(100, 50), ChainStrategy(), PuzzleAdversary(range(50)))
        refused = False
    except ImpossibleInstance:
        refused = True
    report(10, verified and correct == 1000 and stable and refused,
           f"verified n <= 6: {verified}; (100, 51) correct {correct}/1000, max {worst} tests; "
           f"golden minimal_tests stable: {stable}; (100, 50) refused: {refused}")


# ----------------------------------------------------------------- 11


def _cli(args, cwd):
    proc = subprocess.run([sys.executable, "-m", "corruptnet.cli", *args], cwd=cwd, capture_output=True)
    return proc.returncode, proc.stdout, proc.stderr


def _snapshot(d: Path) -> dict:
    return {p.relative_to(d).as_posix(): p.read_bytes() for p in sorted(d.rglob("*")) if p.is_file()}


def test_criterion_11_cli_determinism(tmp_path):
    script = [
        ["generate", "--family", "random-regular", "--param", "n=40", "--param", "d=6", "--seed", "3",
         "--out", "g.graph"],
        ["generate", "--family", "random-regular", "--param", "n=40", "--param", "d=6", "--seed", "3",
         "--orient", "lemma14", "--k", "2", "--out", "dg.graph"],
        ["certify", "--graph", "g.graph", "--delta", "0.1", "--method", "spectral", "--format", "json"],
        ["generate", "--family", "paley", "--param", "q=13", "--out", "p13.graph"],
        ["certify", "--graph", "p13.graph", "--delta", "0.1", "--method", "exhaustive"],
        ["simulate", "--graph", "g.graph", "--truthful", "26", "--adversary", "random", "--seed", "4",
         "--reports-out", "r.reports", "--world-out", "w.world"],
        ["simulate", "--graph", "dg.graph", "--truthful", "0.7", "--adversary", "collude-praise", "--seed", "4",
         "--reports-out", "dr.reports"],
        ["detect", "--graph", "g.graph", "--reports", "r.reports", "--delta", "0.1"],
        ["detect", "--graph", "g.graph", "--reports", "r.reports", "--mode", "fast", "--format", "json"],
        ["detect", "--graph", "dg.graph", "--reports", "dr.reports", "--mode", "fast"],
        ["detect", "--graph", "g.graph", "--reports", "r.reports", "--mode", "connected", "--delta", "0.2"],
        ["gadget", "--out-dir", "gadgets"],
        ["scenarios", "--grid", "5x5", "--out-dir", "scen", "--format", "json"],
        ["puzzle", "--n", "100", "--t", "51", "--seed", "9"],
        ["puzzle", "--n", "5", "--t", "3", "--minimal", "--format", "json"],
        ["experiment", "--family", "random-regular", "--param", "n=60", "--param", "d=8", "--truthful", "0.7",
         "--adversary", "random", "--trials", "20", "--seed", "11", "--delta", "0.1"],
        ["experiment", "--family", "random-regular", "--param", "n=60", "--param", "d=8", "--truthful", "0.7",
         "--orient", "lemma14", "--orient-k", "2", "--mode", "fast", "--trials", "5", "--seed", "11",
         "--format", "json"],
    ]
    runs = []
    for rep in range(2):
        d = tmp_path / f"run{rep}"
        d.mkdir()
        outs = [_cli(args, d) for args in script]
        runs.append((outs, _snapshot(d)))
    (a_out, a_files), (b_out, b_files) = runs
    mismatched = [" ".join(s[:1]) for s, x, y in zip(script, a_out, b_out) if x != y]
    failed = [" ".join(s[:1]) for s, x in zip(script, a_out) if x[0] != 0]
    files_equal = a_files == b_files
    report(11, not mismatched and not failed and files_equal,
           f"{len(script)} CLI invocations twice: stdout/stderr/exit identical ({not mismatched}), "
           f"{len(a_files)} output files byte-identical ({files_equal}), nonzero exits {failed}")
