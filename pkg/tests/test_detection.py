import warnings
from fractions import Fraction
from itertools import combinations

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from corruptnet.constructions import build_separator_scenarios, grid_eps, grid_separator
from corruptnet.detection import (
    DISAMBIGUATION,
    GIANT,
    PROPAGATION,
    UNKNOWN,
    ComponentWeights,
    DetectionResult,
    agreement_graph,
    certain_labels,
    connected_result,
    detect,
    detect_connected,
    detect_directed,
    detect_undirected,
    majority_union_exists,
    max_weight_independent_set_containing,
)
from corruptnet.errors import (
    AmbiguousInstance,
    BudgetExceeded,
    FallbackToGeneral,
    InconsistentReports,
    NoLargeComponent,
    UsageError,
)
from corruptnet.generators import blowup, complete, cycle, grid, orient_lemma14, random_regular, star
from corruptnet.graph import Graph, strongly_connected_components
from corruptnet.reporting import Adversary, ReportSet, World, generate_reports

from conftest import petersen, to_nx
from strategies import graph_and_world
from suite import (
    DIRECTED_DELTA,
    UNDIRECTED_DELTA,
    directed_fixtures,
    undirected_fixtures,
)


def _reports(g, truthful, strategy="collude-praise", **kw):
    return generate_reports(g, World.from_truthful(g.n, truthful), Adversary(strategy, **kw))


def _all(g, value):
    return ReportSet(g, np.full(g.num_arcs, value, dtype=bool))


# ------------------------------------------------------------ agreement graph


def test_agreement_all_truthful_is_g():
    g = petersen()
    assert agreement_graph(g, _all(g, True)) == g


def test_agreement_all_accuse_is_empty():
    g = complete(5)
    r = _reports(g, [], "all-accuse")
    assert agreement_graph(g, r).m == 0


def test_agreement_k4_collude():
    g = complete(4)
    h = agreement_graph(g, _reports(g, [0, 1, 2]))
    assert sorted(map(tuple, h.edges.tolist())) == [(0, 1), (0, 2), (1, 2)]


def test_agreement_directed_keeps_praised_arcs():
    g = Graph(3, [(0, 1), (1, 2), (2, 0)], directed=True)
    r = ReportSet(g, [True, False, True])
    h = agreement_graph(g, r)
    assert sorted(map(tuple, h.edges.tolist())) == sorted(
        (u, v) for (u, v), keep in zip(g.arcs(), r.verdict) if keep
    )


def test_agreement_rejects_foreign_reports():
    with pytest.raises(UsageError):
        agreement_graph(cycle(4), _all(cycle(5), True))


@given(graph_and_world(max_n=10), st.sampled_from(["collude-praise", "all-accuse", "random", "mirror-confusion"]),
       st.integers(0, 2**31))
def test_components_are_type_pure(gw, strategy, seed):
    g, w = gw
    r = generate_reports(g, w, Adversary(strategy, seed=seed))
    h = to_nx(agreement_graph(g, r))
    comps = nx.strongly_connected_components(h) if g.directed else nx.connected_components(h)
    for c in comps:
        types = {bool(w.truthful[v]) for v in c}
        assert len(types) == 1


# ------------------------------------------------------------ undirected


def test_k5_collude_fully_labeled():
    g = complete(5)
    r = _reports(g, [0, 1, 2])
    res = detect_undirected(g, r, "general", 0.1)
    assert res.truthful == [0, 1, 2] and res.corrupt == [3, 4] and res.unknown_count == 0
    oracle = certain_labels(g, r)
    assert np.array_equal(oracle.labels, res.labels)


def test_k4_mirror_is_ambiguous():
    g = complete(4)
    r = _reports(g, [0, 1], "mirror-confusion", params={"pairing": [(0, 2), (1, 3)]})
    with pytest.raises(AmbiguousInstance):
        detect_undirected(g, r, "general", 0.1)


def test_grid_scenario_has_no_large_component():
    g = grid(5, 5)
    fam = build_separator_scenarios(g, grid_separator(5, 5), grid_eps(5, 5))
    # H splits into two 10-vertex halves plus five separator singletons
    with pytest.raises(NoLargeComponent):
        detect_undirected(g, fam.reports[0], "general", Fraction(1, 20))
    # a looser delta admits both halves, and both extend to a majority
    with pytest.raises(AmbiguousInstance):
        detect_undirected(g, fam.reports[0], "general", Fraction(1, 10))


def test_fast_mode_labels_and_provenance():
    g = random_regular(40, 8, 1)
    w = World.from_truthful(40, range(30))
    r = generate_reports(g, w, Adversary("collude-praise"))
    res = detect_undirected(g, r, "fast")
    assert res.mode == "fast" and res.mistakes(w.truthful) == 0
    for v in range(40):
        if res.labels[v] == UNKNOWN:
            assert res.provenance[v] is None
        else:
            assert res.provenance[v] in (GIANT, PROPAGATION)


def test_fast_mode_falls_back_with_notice():
    g = complete(6)
    w = World.from_truthful(6, [0, 1, 2])
    r = generate_reports(g, w, Adversary("all-accuse"))
    with pytest.warns(FallbackToGeneral):
        res = detect_undirected(g, r, "fast", 0.1)
    assert res.mode == "general" and res.notices
    assert res.mistakes(w.truthful) == 0 and res.unknown_count == 0


def test_fast_fallback_needs_delta():
    g = complete(4)
    r = _all(g, False)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        with pytest.raises(UsageError):
            detect_undirected(g, r, "fast")


def test_delta_range_enforced():
    g = complete(5)
    r = _all(g, True)
    for bad in (0, Fraction(1, 8), 0.2, -0.1):
        with pytest.raises(UsageError):
            detect_undirected(g, r, "general", bad)
    with pytest.raises(UsageError):
        detect_undirected(g, r, "sideways", 0.1)


def test_inconsistent_reports_detected():
    g = Graph(4, [(0, 1), (0, 2), (1, 2), (0, 3), (1, 3)])
    r = _all(g, True)
    r.verdict[g.arc_index(1, 3)] = False
    r.verdict[g.arc_index(3, 0)] = False
    r.verdict[g.arc_index(3, 1)] = False
    with pytest.raises(InconsistentReports):
        detect_undirected(g, r, "fast")


def test_single_large_component_seeds_directly():
    g = complete(11)
    w = World.from_truthful(11, range(6))
    r = generate_reports(g, w, Adversary("all-accuse"))
    res = detect_undirected(g, r, "general", 0.12)
    assert res.mistakes(w.truthful) == 0 and res.unknown_count == 0
    assert set(res.provenance) == {GIANT, PROPAGATION}


def test_two_large_components_disambiguated():
    # the colluding block of 4 also reaches (1/2 - delta) n
    g = complete(10)
    w = World.from_truthful(10, range(6))
    r = generate_reports(g, w, Adversary("collude-praise"))
    res = detect_undirected(g, r, "general", 0.12)
    assert DISAMBIGUATION in res.provenance
    assert res.mistakes(w.truthful) == 0 and res.unknown_count == 0


def test_result_lines_roundtrip():
    g = random_regular(20, 6, 2)
    r = _reports(g, range(14))
    res = detect_undirected(g, r, "fast")
    back = DetectionResult.from_lines(res.to_lines(), res.mode)
    assert np.array_equal(back.labels, res.labels) and back.provenance == res.provenance
    assert res.to_dict()["unknown"] == res.unknown_count


# ------------------------------------------------------------ MWIS


def _brute_mwis(s, forced):
    best = None
    others = [v for v in range(s.size) if v != forced]
    for k in range(len(others) + 1):
        for combo in combinations(others, k):
            chosen = (forced,) + combo
            if any(b in s.adjacency[a] for a, b in combinations(chosen, 2)):
                continue
            wt = sum(s.weights[v] for v in chosen)
            if best is None or wt > best:
                best = wt
    return best


def test_mwis_single_vertex():
    s = ComponentWeights([Fraction(6, 10)], [set()])
    assert max_weight_independent_set_containing(s, 0) == (Fraction(6, 10), {0})


def test_mwis_three_vertices():
    s = ComponentWeights([Fraction(45, 100), Fraction(45, 100), Fraction(1, 10)], [{1}, {0}, set()])
    assert max_weight_independent_set_containing(s, 0) == (Fraction(55, 100), {0, 2})


@settings(max_examples=40)
@given(st.integers(1, 12), st.integers(0, 2**31), st.floats(0.1, 0.7))
def test_mwis_matches_enumeration(k, seed, p):
    rng = np.random.default_rng(seed)
    raw = rng.integers(1, 20, size=k)
    weights = [Fraction(int(x), int(raw.sum())) for x in raw]
    adj = [set() for _ in range(k)]
    for a, b in combinations(range(k), 2):
        if rng.random() < p:
            adj[a].add(b)
            adj[b].add(a)
    s = ComponentWeights(weights, adj)
    forced = int(rng.integers(k))
    wt, chosen = max_weight_independent_set_containing(s, forced)
    assert wt == _brute_mwis(s, forced)
    assert forced in chosen and sum(weights[v] for v in chosen) == wt
    assert not any(b in adj[a] for a, b in combinations(chosen, 2))


def test_component_weights_sum_to_one():
    g = random_regular(30, 4, 3)
    r = _reports(g, range(17), "random", seed=4)
    from corruptnet.graph import connected_components

    s = ComponentWeights.from_partition(g, connected_components(agreement_graph(g, r)))
    assert sum(s.weights) == 1 and all(x > 0 for x in s.weights)


def test_mwis_rejects_bad_forced():
    with pytest.raises(UsageError):
        max_weight_independent_set_containing(ComponentWeights([Fraction(1)], [set()]), 3)


# ------------------------------------------------------------ directed


def test_directed_cycle_all_truthful():
    g = Graph(3, [(0, 1), (1, 2), (2, 0)], directed=True)
    res = detect_directed(g, _all(g, True), "general", 0.05)
    assert res.truthful == [0, 1, 2]


def test_directed_all_corrupt_no_large_component():
    g = orient_lemma14(random_regular(16, 8, 3), k=2, seed=3)
    with pytest.raises(NoLargeComponent):
        detect_directed(g, _reports(g, [], "all-accuse"), "general", 0.05)


def test_lemma14_orientation_fast_mode():
    g = orient_lemma14(random_regular(16, 8, 3), k=2, seed=3)
    w = World.from_truthful(16, range(11))
    r = generate_reports(g, w, Adversary("collude-praise"))
    res = detect_directed(g, r, "fast")
    assert res.mistakes(w.truthful) == 0
    oracle = certain_labels(g, r)
    decided = oracle.decided
    known = res.labels != UNKNOWN
    assert np.array_equal(res.labels[known & decided], oracle.labels[known & decided])


def test_directed_rejects_undirected():
    with pytest.raises(UsageError):
        detect_directed(complete(3), _all(complete(3), True))
    with pytest.raises(UsageError):
        detect_undirected(Graph(2, [(0, 1)], directed=True), _all(Graph(2, [(0, 1)], directed=True), True))


def test_union_search_budget():
    g = Graph(4, [(0, 1), (1, 0), (2, 3), (3, 2), (0, 2), (2, 0)], directed=True)
    r = _all(g, True)
    part = strongly_connected_components(agreement_graph(g, r))
    assert majority_union_exists(g, r, part, 0)
    with pytest.raises(BudgetExceeded):
        majority_union_exists(g, r, part, 0, budget=0)


def _brute_union(g, r, part, forced):
    comps = part.components
    n = g.n
    for mask in range(1 << part.count):
        if not (mask >> forced) & 1:
            continue
        truthful = np.zeros(n, dtype=bool)
        for c in range(part.count):
            if (mask >> c) & 1:
                truthful[comps[c]] = True
        if 2 * truthful.sum() <= n:
            continue
        trusted = truthful[g.arc_src]
        if np.all(r.verdict[trusted] == truthful[g.indices[trusted]]):
            return True
    return False


@settings(max_examples=80)
@given(graph_and_world(max_n=9, directed=True), st.sampled_from(["random", "collude-praise", "mirror-confusion"]),
       st.integers(0, 2**31))
def test_union_search_matches_enumeration(gw, strategy, seed):
    g, w = gw
    r = generate_reports(g, w, Adversary(strategy, seed=seed))
    part = strongly_connected_components(agreement_graph(g, r))
    for c in range(part.count):
        assert majority_union_exists(g, r, part, c) == _brute_union(g, r, part, c)


# ------------------------------------------------------------ connected


def test_star_all_accuse_finds_nothing():
    assert detect_connected(star(6), _all(star(6), False), 0.2) == []
    # singletons of exactly eps * n vertices are not kept
    assert detect_connected(star(9), _all(star(9), False), 0.1) == []


def test_connected_all_truthful():
    g = grid(4, 4)
    assert detect_connected(g, _all(g, True), 0.1) == list(range(16))


def test_blowup_star_connected_subset():
    g = blowup(star(4), 3)
    n = g.n
    eps = Fraction(1, 5)
    corrupt = list(range(n - 3, n))  # the last leaf clique
    w = World.from_corrupt(n, corrupt)
    r = generate_reports(g, w, Adversary("collude-praise"))
    found = detect_connected(g, r, eps)
    assert set(found) <= set(w.T)
    assert len(found) >= (1 - 2 * eps) * n
    res = connected_result(g, r, eps)
    assert res.truthful == found and res.mode == "connected"


def test_connected_eps_range():
    g = cycle(5)
    for bad in (0, Fraction(1, 3), 0.5):
        with pytest.raises(UsageError):
            detect_connected(g, _all(g, True), bad)


# ------------------------------------------------------------ oracle


def test_certain_complete_all_praise():
    g = complete(8)
    c = certain_labels(g, _all(g, True))
    assert c.as_chars() == ["T"] * 8 and c.worlds == 1


@pytest.mark.parametrize("g", [complete(4), complete(6), petersen()], ids=["K4", "K6", "petersen"])
def test_certain_mirror_all_unknown(g):
    w = World.from_truthful(g.n, range(g.n // 2))
    r = generate_reports(g, w, Adversary("mirror-confusion"))
    for min_T in (None, g.n // 2):
        c = certain_labels(g, r, min_T=min_T)
        assert np.all(c.labels == UNKNOWN)
    assert certain_labels(g, r).no_consistent_world


def test_certain_grid3_no_truthful():
    g = grid(3, 3)
    fam = build_separator_scenarios(g, grid_separator(3, 3), grid_eps(3, 3))
    c = certain_labels(g, fam.reports[0], min_T=fam.min_truthful())
    assert c.truthful == []


# ------------------------------------------------------------ certified fixtures


def _fixture_trials(fixtures, placements):
    from suite import trials

    return trials(fixtures, placements, seed=7)


@pytest.mark.parametrize("name,g", undirected_fixtures(), ids=[n for n, _ in undirected_fixtures()])
def test_general_mode_sound_and_sized(name, g):
    delta = UNDIRECTED_DELTA
    for _, _, w, adv, r in _fixture_trials(((name, g),), 1):
        res = detect_undirected(g, r, "general", delta)
        assert res.mistakes(w.truthful) == 0, adv
        assert res.unknown_count <= int(delta * g.n)
        # largest truthful agreement component is at least |T| - delta n
        h = to_nx(agreement_graph(g, r))
        best = max((len(c) for c in nx.connected_components(h) if w.truthful[next(iter(c))]), default=0)
        assert best >= w.t_size - delta * g.n


def test_directed_general_sound_and_sized():
    name, g = directed_fixtures()[0]
    delta = DIRECTED_DELTA
    for _, _, w, adv, r in _fixture_trials(((name, g),), 1):
        res = detect_directed(g, r, "general", delta)
        assert res.mistakes(w.truthful) == 0, adv
        assert res.unknown_count <= int(delta * g.n)
        h = to_nx(agreement_graph(g, r))
        best = max((len(c) for c in nx.strongly_connected_components(h) if w.truthful[next(iter(c))]), default=0)
        assert best >= w.t_size - 2 * delta * g.n


def test_detect_dispatch():
    g = complete(5)
    r = _reports(g, [0, 1, 2])
    assert detect(g, r, "general", 0.1).mode == "general"
    assert detect(g, r, "connected", 0.1).mode == "connected"
    with pytest.raises(UsageError):
        detect(g, r, "connected")
