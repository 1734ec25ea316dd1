"""Time the numba kernels against the pure-numpy fallback.

The backend is fixed at import time, so each backend runs in its own
subprocess with ``CORRUPTNET_BACKEND`` set. Usage::

    python benchmarks/bench_backends.py [--n 100000] [--repeat 3]
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import time


def workload(n: int, repeat: int) -> dict:
    import numpy as np

    from corruptnet import kernels
    from corruptnet._backend import backend_name
    from corruptnet.detection import agreement_graph
    from corruptnet.generators import _euler_arrays, orient_random, random_regular
    from corruptnet.graph import Graph
    from corruptnet.reporting import Adversary, World, generate_reports

    g = random_regular(n, 16, seed=1)
    rng = np.random.default_rng(0)
    w = World.from_truthful(n, rng.choice(n, size=int(0.6 * n), replace=False))
    r = generate_reports(g, w, Adversary("random", seed=2))
    h = agreement_graph(g, r)
    dg = orient_random(g, seed=3)
    _ = g.in_arcs, dg.in_arcs
    small = random_regular(64, 8, seed=4)
    bits = kernels.neighbor_bitsets(small.n, small.indptr, small.indices)
    k = Graph(20, [(i, (i + 1) % 20) for i in range(20)] + [(i, (i + 7) % 20) for i in range(20)])
    tm = np.zeros(20, np.int64)
    seed_t = np.zeros(n, dtype=np.bool_)
    seed_t[w.T[0]] = True

    cases = {
        "connected_components": lambda: kernels.cc_labels(h.n, h.indptr, h.indices),
        "scc": lambda: kernels.scc(dg.n, dg.indptr, dg.indices),
        "propagate": lambda: kernels.propagate(
            g.n, g.indptr, g.indices, g.in_indptr, g.in_arcs, g.arc_src, w.truthful[g.indices],
            seed_t.copy(), np.zeros(n, dtype=np.bool_)),
        "subset_scan_k3": lambda: kernels.first_violation(bits, small.n, 3, 1, 64),
        "consistent_scan_n20": lambda: kernels.consistent_scan(20, tm, tm, 11, False),
        "girth": lambda: kernels.girth_bfs(k.n, k.indptr, k.indices),
        "euler_circuits": lambda: _euler_arrays(n, g.edges),
    }
    out = {}
    for name, fn in cases.items():
        fn()  # warm-up (JIT compile or cache load)
        best = float("inf")
        for _ in range(repeat):
            t0 = time.perf_counter()
            fn()
            best = min(best, time.perf_counter() - t0)
        out[name] = best
    return {"backend": backend_name(), "timings": out}


def main() -> None:
    p = argparse.ArgumentParser()
    p.add_argument("--n", type=int, default=100_000)
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--worker", action="store_true", help=argparse.SUPPRESS)
    a = p.parse_args()
    if a.worker:
        print(json.dumps(workload(a.n, a.repeat)))
        return
    results = {}
    for backend in ("numba", "numpy"):
        env = dict(os.environ, CORRUPTNET_BACKEND=backend)
        cmd = [sys.executable, __file__, "--worker", "--n", str(a.n), "--repeat", str(a.repeat)]
        res = json.loads(subprocess.run(cmd, env=env, check=True, capture_output=True, text=True).stdout)
        results[res["backend"]] = res["timings"]
    print(f"{'kernel':<22}{'numba [s]':>12}{'numpy [s]':>12}{'speedup':>10}")
    for name in results["numba"]:
        fast, slow = results["numba"][name], results["numpy"][name]
        print(f"{name:<22}{fast:>12.4f}{slow:>12.4f}{slow / fast:>10.1f}")


if __name__ == "__main__":
    main()
