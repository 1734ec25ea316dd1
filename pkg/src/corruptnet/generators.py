"""Graph families: random regular candidates, structured fixtures, and the
orientation that turns a regular graph into a directed expander candidate."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import InstanceError, UsageError
from .graph import Graph

FAMILIES = (
    "random-regular",
    "grid",
    "star",
    "cycle",
    "complete",
    "blowup",
    "paley",
    "paley-tournament",
)

# Rounds of the pairing loop allowed to make no progress before a full restart.
MAX_STALLS = 100


@dataclass
class GenSpec:
    family: str
    params: dict = field(default_factory=dict)
    seed: int = 0

    @classmethod
    def from_dict(cls, data: dict) -> GenSpec:
        data = dict(data)
        family = data.pop("family")
        seed = int(data.pop("seed", 0))
        params = data.pop("params", None)
        if params is None:
            params = data
        return cls(family, dict(params), seed)

    def to_dict(self) -> dict:
        return {"family": self.family, "params": self.params, "seed": self.seed}


def generate(spec: GenSpec) -> Graph:
    p = spec.params
    fam = spec.family
    try:
        if fam == "random-regular":
            return random_regular(int(p["n"]), int(p["d"]), spec.seed)
        if fam == "grid":
            return grid(int(p["rows"]), int(p["cols"]))
        if fam == "star":
            return star(int(p["m"]))
        if fam == "cycle":
            return cycle(int(p["n"]))
        if fam == "complete":
            return complete(int(p["n"]))
        if fam == "blowup":
            base = p["base"]
            base_spec = base if isinstance(base, GenSpec) else GenSpec.from_dict({"seed": spec.seed, **base})
            return blowup(generate(base_spec), int(p["k"]))
        if fam == "paley":
            return paley(int(p["q"]))
        if fam == "paley-tournament":
            return paley_tournament(int(p["q"]))
    except KeyError as exc:
        raise UsageError(f"family {fam!r} missing parameter {exc.args[0]!r}") from None
    raise UsageError(f"unknown family {fam!r}; expected one of {FAMILIES}")


def random_regular(n: int, d: int, seed: int = 0) -> Graph:
    """Simple d-regular graph from the pairing model.

    Each round shuffles the open stubs, pairs them up and keeps every pair that
    is neither a loop nor a repeat; rejected stubs go back into the pool. After
    ``MAX_STALLS`` rounds without progress the whole pairing restarts. The
    result is close to, but not exactly, uniform.
    """
    if n < 1 or d < 0 or d >= n:
        raise UsageError(f"random-regular needs 0 <= d < n, got n={n}, d={d}")
    if (n * d) % 2:
        raise UsageError(f"random-regular needs n*d even, got n={n}, d={d}")
    rng = np.random.default_rng(seed)
    while True:
        edges = _pairing_attempt(n, d, rng)
        if edges is not None:
            return Graph(n, edges)


def _pairing_attempt(n, d, rng):
    stubs = np.repeat(np.arange(n, dtype=np.int64), d)
    accepted = np.empty(0, dtype=np.int64)
    stalls = 0
    while stubs.size:
        stubs = rng.permutation(stubs)
        u, v = stubs[0::2], stubs[1::2]
        lo, hi = np.minimum(u, v), np.maximum(u, v)
        keys = lo * n + hi
        ok = lo != hi
        _, first = np.unique(keys, return_index=True)
        is_first = np.zeros(keys.size, dtype=bool)
        is_first[first] = True
        ok &= is_first
        if accepted.size:
            pos = np.searchsorted(accepted, keys)
            pos[pos == accepted.size] = 0
            ok &= accepted[pos] != keys
        if not ok.any():
            stalls += 1
            if stalls >= MAX_STALLS:
                return None
            continue
        stalls = 0
        accepted = np.sort(np.concatenate([accepted, keys[ok]]))
        stubs = np.concatenate([u[~ok], v[~ok]])
    return np.stack([accepted // n, accepted % n], axis=1)


def grid(rows: int, cols: int) -> Graph:
    if rows < 1 or cols < 1:
        raise UsageError(f"grid needs positive dimensions, got {rows}x{cols}")
    idx = np.arange(rows * cols).reshape(rows, cols)
    horiz = np.stack([idx[:, :-1].ravel(), idx[:, 1:].ravel()], axis=1)
    vert = np.stack([idx[:-1, :].ravel(), idx[1:, :].ravel()], axis=1)
    return Graph(rows * cols, np.concatenate([horiz, vert]))


def star(m: int) -> Graph:
    """Centre 0 joined to leaves ``1..m``."""
    if m < 0:
        raise UsageError("star needs m >= 0")
    return Graph(m + 1, [(0, i) for i in range(1, m + 1)])


def cycle(n: int) -> Graph:
    if n < 3:
        raise UsageError("cycle needs n >= 3")
    return Graph(n, [(i, (i + 1) % n) for i in range(n)])


def complete(n: int) -> Graph:
    if n < 1:
        raise UsageError("complete graph needs n >= 1")
    iu = np.triu_indices(n, 1)
    return Graph(n, np.stack(iu, axis=1))


def blowup(g: Graph, k: int) -> Graph:
    """Every vertex becomes a k-clique and every edge a complete bipartite
    join; vertex ``v`` maps to ``v*k .. v*k+k-1``."""
    if k < 1:
        raise UsageError("blowup needs k >= 1")
    if g.directed:
        raise UsageError("blowup needs an undirected base graph")
    iu = np.stack(np.triu_indices(k, 1), axis=1)
    blocks = np.arange(g.n)[:, None, None] * k
    cliques = (blocks + iu[None]).reshape(-1, 2)
    a, b = np.meshgrid(np.arange(k), np.arange(k), indexing="ij")
    pair = np.stack([a.ravel(), b.ravel()], axis=1)
    e = g.edges
    joins = np.stack(
        [(e[:, 0:1] * k + pair[None, :, 0]).ravel(), (e[:, 1:2] * k + pair[None, :, 1]).ravel()], axis=1
    )
    return Graph(g.n * k, np.concatenate([cliques, joins]))


def _quadratic_residues(q: int) -> set[int]:
    if q < 3 or any(q % p == 0 for p in range(2, int(math.isqrt(q)) + 1)):
        raise UsageError(f"Paley constructions need an odd prime, got {q}")
    return {(x * x) % q for x in range(1, q)}


def paley(q: int) -> Graph:
    if q % 4 != 1:
        raise UsageError("Paley graph needs q = 1 mod 4")
    qr = _quadratic_residues(q)
    return Graph(q, [(i, j) for i in range(q) for j in range(i + 1, q) if (j - i) % q in qr])


def paley_tournament(q: int) -> Graph:
    """i -> j iff j - i is a non-zero square mod q (q = 3 mod 4)."""
    if q % 4 != 3:
        raise UsageError("Paley tournament needs q = 3 mod 4")
    qr = _quadratic_residues(q)
    return Graph(q, [(i, j) for i in range(q) for j in range(q) if i != j and (j - i) % q in qr], directed=True)


# ------------------------------------------------------------ orientation


def _euler_arrays(n: int, edges, rng=None):
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    m = edges.shape[0]
    deg = np.bincount(edges.ravel(), minlength=n)
    odd = np.flatnonzero(deg % 2)
    if odd.size:
        raise UsageError(f"Eulerian orientation needs even degrees; vertex {int(odd[0])} has odd degree")
    src = np.concatenate([edges[:, 0], edges[:, 1]])
    dst = np.concatenate([edges[:, 1], edges[:, 0]])
    ids = np.concatenate([np.arange(m), np.arange(m)])
    key = rng.random(2 * m) if rng is not None else ids
    order = np.lexsort((key, src))
    ptr = np.zeros(n + 1, np.int64)
    np.cumsum(deg, out=ptr[1:])
    return kernels.euler(n, ptr, dst[order], ids[order], m)


def eulerian_circuits(n: int, edges, rng=None) -> list[list[tuple[int, int, int]]]:
    """Hierholzer on an even-degree simple edge list.

    Returns one closed circuit per non-trivial component, each a list of
    ``(edge_id, tail, head)`` in traversal order. ``rng`` shuffles the
    adjacency order.
    """
    out_e, out_t, out_h, bounds = _euler_arrays(n, edges, rng)
    rows = list(zip(out_e.tolist(), out_t.tolist(), out_h.tolist()))
    return [rows[a:b] for a, b in zip(bounds[:-1].tolist(), bounds[1:].tolist())]


def default_k(d: int) -> int:
    return math.ceil(3 * math.sqrt(d))


def orient_lemma14(g: Graph, k: int | None = None, seed: int = 0, attempts: int = 64, return_e1: bool = False):
    """Orient a d-regular graph: a 2k-regular spanning subgraph E1 gets an
    Eulerian orientation (in = out = k inside E1), every other edge a fair
    coin flip.

    E1 comes from a k-factor of the out/in split of a balanced orientation,
    found with max-flow; each retry reshuffles the balanced orientation.
    """
    if g.directed:
        raise UsageError("orient_lemma14 needs an undirected graph")
    deg = g.degree()
    if deg.size == 0 or not np.all(deg == deg[0]):
        raise UsageError("orient_lemma14 needs a regular graph")
    d = int(deg[0])
    k = default_k(d) if k is None else int(k)
    if k < 1 or 2 * k > d:
        raise UsageError(f"need 1 <= k and 2k <= d; got k={k}, d={d}")
    rng = np.random.default_rng(seed)
    edges = g.edges
    chosen = None
    best_flow = -1
    for _ in range(attempts):
        arcs = _balanced_orientation(g.n, edges, rng)
        chosen, flow = _k_factor(g.n, arcs, k)
        if chosen is not None:
            break
        best_flow = max(best_flow, flow)
    if chosen is None:
        raise InstanceError(
            f"no 2k-regular spanning subgraph found in {attempts} attempts "
            f"(best k-factor flow {best_flow} of {g.n * k})"
        )
    e1 = np.sort(chosen, axis=1)
    e1_keys = e1[:, 0] * g.n + e1[:, 1]
    keys = edges[:, 0] * g.n + edges[:, 1]
    in_e1 = np.isin(keys, e1_keys)

    _, tails, heads, _ = _euler_arrays(g.n, e1, rng)
    oriented = np.stack([tails, heads], axis=1)
    rest = edges[~in_e1]
    flips = rng.integers(0, 2, size=rest.shape[0]).astype(bool)
    rest = np.where(flips[:, None], rest[:, ::-1], rest)
    out = Graph(g.n, np.concatenate([oriented, rest]), directed=True)
    if return_e1:
        return out, oriented
    return out


def _balanced_orientation(n, edges, rng):
    # Odd-degree vertices get a dummy partner so Hierholzer applies; after the
    # dummy is dropped every in/out degree is floor(d/2) or ceil(d/2).
    deg = np.bincount(edges.ravel(), minlength=n)
    odd = np.flatnonzero(deg % 2)
    aug = edges
    if odd.size:
        aug = np.concatenate([edges, np.stack([odd, np.full(odd.size, n)], axis=1)])
    _, tails, heads, _ = _euler_arrays(n + 1, aug, rng)
    keep = (tails < n) & (heads < n)
    return np.stack([tails[keep], heads[keep]], axis=1)


def _k_factor(n, arcs, k):
    """Pick arcs so that every vertex keeps exactly k out- and k in-arcs."""
    from scipy.sparse import csr_matrix
    from scipy.sparse.csgraph import maximum_flow

    source, sink = 0, 2 * n + 1
    rows = np.concatenate([np.zeros(n, np.int64), 1 + arcs[:, 0], n + 1 + np.arange(n)])
    cols = np.concatenate([1 + np.arange(n), n + 1 + arcs[:, 1], np.full(n, sink)])
    caps = np.concatenate([np.full(n, k), np.ones(len(arcs), np.int64), np.full(n, k)]).astype(np.int32)
    net = csr_matrix((caps, (rows, cols)), shape=(2 * n + 2, 2 * n + 2))
    res = maximum_flow(net, source, sink, method="dinic")
    if res.flow_value < n * k:
        return None, int(res.flow_value)
    flow = res.flow.tocoo()
    pick = (flow.data > 0) & (flow.row >= 1) & (flow.row <= n) & (flow.col > n) & (flow.col <= 2 * n)
    chosen = np.stack([flow.row[pick] - 1, flow.col[pick] - n - 1], axis=1).astype(np.int64)
    return chosen, int(res.flow_value)


def orient_random(g: Graph, seed: int = 0) -> Graph:
    """Independent fair-coin orientation of every edge."""
    rng = np.random.default_rng(seed)
    e = g.edges
    flips = rng.integers(0, 2, size=e.shape[0]).astype(bool)
    return Graph(g.n, np.where(flips[:, None], e[:, ::-1], e), directed=True)
