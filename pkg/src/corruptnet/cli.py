"""``corruptnet`` command line.

Every subcommand accepts ``--config FILE`` (JSON or YAML mapping of option
names to values); explicit flags override the file. Exit codes: 0 success,
1 usage error, 2 instance error, 3 budget exceeded.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path

import yaml

from . import __version__
from .certify import CRITERIA, EXHAUSTIVE, NOT_ATTEMPTED, UNDIRECTED_GOOD, certify
from .constructions import (
    build_np_gadget,
    build_separator_scenarios,
    gadget_fixtures,
    grid_eps,
    grid_separator,
    verify_indistinguishable,
    write_fixture,
)
from .detection import detect
from .errors import BudgetExceeded, CorruptNetError, FallbackToGeneral, UsageError
from .experiment import ExperimentConfig, records_to_csv, record_dicts, run_experiment
from .generators import FAMILIES, GenSpec, generate, grid, orient_lemma14, orient_random
from .graph import Graph
from .puzzle import (
    STRATEGIES as PUZZLE_STRATEGIES,
    PuzzleAdversary,
    PuzzleInstance,
    minimal_tests,
    run_strategy,
    verify_strategy,
)
from .reporting import STRATEGIES, Adversary, ReportSet, World, generate_reports


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    text = Path(path).read_text(encoding="utf-8")
    data = json.loads(text) if path.endswith(".json") else yaml.safe_load(text)
    if not isinstance(data, dict):
        raise UsageError("config file must hold a mapping")
    return {k.replace("-", "_"): v for k, v in data.items()}


def _parse_params(items) -> dict:
    """``key=value`` pairs; values parsed as JSON when possible."""
    out = {}
    for item in items or []:
        if "=" not in item:
            raise UsageError(f"--param expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        try:
            out[k] = json.loads(v)
        except json.JSONDecodeError:
            out[k] = v
    return out


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


# ------------------------------------------------------------ commands


def cmd_generate(a) -> int:
    params = dict(a.params or {})
    params.update(_parse_params(a.param))
    g = generate(GenSpec(a.family, params, a.seed))
    if a.orient == "lemma14":
        g = orient_lemma14(g, a.k, seed=a.seed)
    elif a.orient == "random":
        g = orient_random(g, seed=a.seed)
    if a.format == "json":
        _emit(_dump({"n": g.n, "directed": g.directed, "edges": g.edges.tolist()}), a.out)
    else:
        _emit(g.to_text(), a.out)
    return 0


def cmd_certify(a) -> int:
    g = Graph.read(a.graph)
    cert = certify(g, a.delta, a.criterion, a.method, a.budget, a.threshold)
    over_budget = cert.verdict == NOT_ATTEMPTED and cert.method == EXHAUSTIVE
    code = BudgetExceeded.exit_code if over_budget else 0
    if a.format == "json":
        _emit(_dump(cert.to_dict()), a.out)
        return code
    lines = [f"verdict {cert.verdict}", f"method {cert.method}", f"criterion {cert.criterion}", f"delta {cert.delta}"]
    for key, val in sorted(cert.conditions.items()):
        lines.append(f"condition {key} {val}")
    if cert.spectral_gap is not None:
        lines.append(f"spectral_gap {cert.spectral_gap:.9g}")
        lines.append(f"threshold {cert.threshold:.9g}")
    if cert.witness:
        lines.append("witness " + json.dumps(cert.witness, sort_keys=True))
    if cert.note:
        lines.append(f"note {cert.note}")
    _emit("\n".join(lines) + "\n", a.out)
    return code


def cmd_simulate(a) -> int:
    import numpy as np

    g = Graph.read(a.graph)
    if a.world:
        w = World.from_text(Path(a.world).read_text(encoding="utf-8"), g.n)
    else:
        if a.truthful is None:
            raise UsageError("simulate needs --world or --truthful")
        t = int(a.truthful) if a.truthful >= 1 else int(round(a.truthful * g.n))
        rng = np.random.default_rng(a.seed)
        w = World.from_truthful(g.n, rng.choice(g.n, size=t, replace=False).tolist())
    params = dict(a.adversary_params or {})
    params.update(_parse_params(a.param))
    r = generate_reports(g, w, Adversary(a.adversary, params, a.seed))
    if a.world_out:
        Path(a.world_out).write_text(w.to_text(), encoding="utf-8")
    if a.reports_out:
        r.write(a.reports_out)
    if a.format == "json":
        _emit(_dump({"T": w.T, "B": w.B, "reports": [[u, v, m] for (u, v), m in
                                                        zip(g.arcs(), ["T" if x else "C" for x in r.verdict.tolist()])]}), a.out)
    elif not a.reports_out:
        _emit(w.to_text() + r.to_text(), a.out)
    return 0


def cmd_detect(a) -> int:
    g = Graph.read(a.graph)
    r = ReportSet.read(g, a.reports)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", FallbackToGeneral)
        res = detect(g, r, a.mode, a.delta)
    for note in res.notices:
        print(f"notice: {note}", file=sys.stderr)
    _emit(_dump(res.to_dict()) if a.format == "json" else res.to_lines(), a.out)
    return 0


def cmd_gadget(a) -> int:
    specs = gadget_fixtures()
    chosen = range(len(specs)) if a.fixture is None else [a.fixture]
    manifest = []
    for idx in chosen:
        if not 0 <= idx < len(specs):
            raise UsageError(f"fixture index must be in [0, {len(specs)})")
        g, r = build_np_gadget(specs[idx])
        meta = specs[idx].to_dict()
        if a.out_dir:
            manifest.append(write_fixture(a.out_dir, f"gadget{idx}", g, r, meta))
        else:
            manifest.append({"name": f"gadget{idx}", **meta})
    if a.out_dir:
        Path(a.out_dir, "manifest.json").write_text(_dump(manifest), encoding="utf-8")
    _emit(_dump(manifest) if a.format == "json" or not a.out_dir else
          "".join(f"{m['name']} n={m['n']} m={m['m']}\n" for m in manifest), None)
    return 0


def cmd_scenarios(a) -> int:
    if a.grid:
        rows, cols = (int(x) for x in a.grid.lower().split("x"))
        g = grid(rows, cols)
        sep = grid_separator(rows, cols, a.axis)
        eps = a.eps if a.eps is not None else grid_eps(rows, cols, a.axis)
    else:
        if not a.graph or a.separator is None or a.eps is None:
            raise UsageError("scenarios needs --grid, or --graph with --separator and --eps")
        g = Graph.read(a.graph)
        sep = [int(x) for x in a.separator.split(",") if x.strip()]
        eps = a.eps
    fam = build_separator_scenarios(g, sep, eps)
    info = fam.to_dict()
    info["indistinguishable"] = verify_indistinguishable(fam)
    info["common_truthful"] = fam.common_truthful()
    if a.out_dir:
        for i, (w, r) in enumerate(zip(fam.scenarios, fam.reports)):
            write_fixture(a.out_dir, f"scenario{i}", g, r, {"world": {"T": w.T, "B": w.B}, "index": i})
        Path(a.out_dir, "family.json").write_text(_dump(info), encoding="utf-8")
    if a.format == "json":
        _emit(_dump(info), None)
    else:
        lines = [f"scenarios {fam.s}", f"eps {info['eps']}", "separator " + " ".join(map(str, fam.separator)),
                 f"indistinguishable {str(info['indistinguishable']).lower()}",
                 "common_truthful " + " ".join(map(str, info["common_truthful"]))]
        _emit("\n".join(lines) + "\n", None)
    return 0


def cmd_puzzle(a) -> int:
    inst = PuzzleInstance(a.n, a.t)
    strat = PUZZLE_STRATEGIES[a.strategy]
    out: dict = {"n": a.n, "t": a.t, "strategy": a.strategy}
    if a.verify:
        out["verified"] = verify_strategy(inst, strat)
    elif a.minimal:
        out["minimal_tests"] = minimal_tests(inst)
    else:
        adv = PuzzleAdversary.random(inst, a.seed, a.policy)
        labels, count = run_strategy(inst, strat, adv)
        out.update({"seed": a.seed, "tests": count, "correct": tuple(labels) == adv.labels(a.n),
                    "truthful": [v for v, x in enumerate(labels) if x]})
    if a.format == "json":
        _emit(_dump(out), a.out)
    else:
        _emit("".join(f"{k} {json.dumps(v) if isinstance(v, (list, bool)) else v}\n" for k, v in out.items()), a.out)
    return 0


def cmd_experiment(a) -> int:
    data = {k: getattr(a, k) for k in ExperimentConfig.__dataclass_fields__ if getattr(a, k, None) is not None}
    if a.family:
        params = dict(data.get("graph", {}).get("params", {}) if isinstance(data.get("graph"), dict) else {})
        params.update(_parse_params(a.param))
        data["graph"] = {"family": a.family, "params": params, "seed": a.graph_seed}
    cfg = ExperimentConfig.from_dict(data)
    records, summary = run_experiment(cfg)
    if a.format == "json":
        _emit(_dump({"records": record_dicts(records), "summary": summary}), a.out)
    else:
        _emit(records_to_csv(records), a.out)
        if a.summary:
            print(json.dumps(summary, sort_keys=True), file=sys.stderr)
    return 0


# -------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON or YAML file with option values; flags override it")
    common.add_argument("--format", choices=("text", "json"))
    common.add_argument("--out", help="write the main output here instead of stdout")

    p = _Parser(prog="corruptnet", description="Corruption detection from peer reports.")
    p.add_argument("--version", action="version", version=f"corruptnet {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("generate", parents=[common], help="build a graph")
    s.add_argument("--family", choices=FAMILIES)
    s.add_argument("--param", action="append", help="generator parameter key=value (repeatable)")
    s.add_argument("--seed", type=int)
    s.add_argument("--orient", choices=("lemma14", "random"))
    s.add_argument("--k", type=int, help="in/out degree of the Eulerian part for --orient lemma14")
    s.set_defaults(func=cmd_generate, _defaults={"seed": 0, "params": {}}, _required=("family",))

    s = sub.add_parser("certify", parents=[common], help="check an expansion criterion")
    s.add_argument("--graph")
    s.add_argument("--delta", type=float)
    s.add_argument("--criterion", choices=CRITERIA)
    s.add_argument("--method", choices=("auto", "exhaustive", "spectral"))
    s.add_argument("--budget", type=int)
    s.add_argument("--threshold", type=float, help="spectral-gap threshold for the surrogate")
    s.set_defaults(func=cmd_certify, _defaults={"criterion": UNDIRECTED_GOOD, "method": "auto"},
                   _required=("graph", "delta"))

    s = sub.add_parser("simulate", parents=[common], help="place a world and generate reports")
    s.add_argument("--graph")
    s.add_argument("--world", help="world file with 'T:' and 'B:' lines")
    s.add_argument("--truthful", type=float, help="truthful count (>= 1) or fraction")
    s.add_argument("--adversary", choices=STRATEGIES)
    s.add_argument("--param", action="append", help="adversary parameter key=value (repeatable)")
    s.add_argument("--seed", type=int)
    s.add_argument("--world-out", dest="world_out")
    s.add_argument("--reports-out", dest="reports_out")
    s.set_defaults(func=cmd_simulate, _defaults={"seed": 0, "adversary": "collude-praise", "adversary_params": {}},
                   _required=("graph",))

    s = sub.add_parser("detect", parents=[common], help="label vertices from reports")
    s.add_argument("--graph")
    s.add_argument("--reports")
    s.add_argument("--mode", choices=("fast", "general", "connected"))
    s.add_argument("--delta", type=float)
    s.set_defaults(func=cmd_detect, _defaults={"mode": "general"}, _required=("graph", "reports"))

    s = sub.add_parser("gadget", parents=[common], help="independent-set hardness fixtures")
    s.add_argument("--fixture", type=int, help="fixture index (default: all)")
    s.add_argument("--out-dir", dest="out_dir")
    s.set_defaults(func=cmd_gadget, _defaults={}, _required=())

    s = sub.add_parser("scenarios", parents=[common], help="separator scenario family")
    s.add_argument("--grid", help="ROWSxCOLS grid with its middle separator")
    s.add_argument("--axis", choices=("row", "column"))
    s.add_argument("--graph")
    s.add_argument("--separator", help="comma-separated separator vertices")
    s.add_argument("--eps", type=float)
    s.add_argument("--out-dir", dest="out_dir")
    s.set_defaults(func=cmd_scenarios, _defaults={"axis": "row"}, _required=())

    s = sub.add_parser("puzzle", parents=[common], help="machine-testing game")
    s.add_argument("--n", type=int)
    s.add_argument("--t", type=int)
    g = s.add_mutually_exclusive_group()
    g.add_argument("--verify", action="store_true", default=None)
    g.add_argument("--minimal", action="store_true", default=None)
    g.add_argument("--run", action="store_true", default=None)
    s.add_argument("--strategy", choices=sorted(PUZZLE_STRATEGIES))
    s.add_argument("--policy", choices=PuzzleAdversary.POLICIES)
    s.add_argument("--seed", type=int)
    s.set_defaults(func=cmd_puzzle, _defaults={"strategy": "chain", "seed": 0, "verify": False, "minimal": False},
                   _required=("n", "t"))

    s = sub.add_parser("experiment", parents=[common], help="batch of seeded detection trials (CSV)")
    s.add_argument("--family", choices=FAMILIES)
    s.add_argument("--param", action="append", help="generator parameter key=value (repeatable)")
    s.add_argument("--graph-seed", dest="graph_seed", type=int)
    s.add_argument("--graph-file", dest="graph_file")
    s.add_argument("--orient", choices=("lemma14", "random"))
    s.add_argument("--orient-k", dest="orient_k", type=int)
    s.add_argument("--truthful", type=float)
    s.add_argument("--adversary", choices=STRATEGIES)
    s.add_argument("--mode", choices=("fast", "general", "connected"))
    s.add_argument("--delta", type=float)
    s.add_argument("--trials", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--timing", action="store_true", default=None, help="record runtime_ms (breaks byte determinism)")
    s.add_argument("--workers", type=int)
    s.add_argument("--summary", action="store_true", default=None, help="print the summary to stderr")
    s.set_defaults(func=cmd_experiment, _defaults={"graph_seed": 0, "summary": False}, _required=())
    return p


def _merge(args: argparse.Namespace) -> argparse.Namespace:
    """Fill unset flags from the config file, then from the defaults."""
    cfg = _load_config(args.config)
    for key, val in cfg.items():
        if getattr(args, key, None) is None:
            setattr(args, key, val)
    for key, val in {"format": "text", **args._defaults}.items():
        if getattr(args, key, None) is None:
            setattr(args, key, val)
    missing = [k for k in args._required if getattr(args, k, None) is None]
    if missing:
        raise UsageError(f"{args.command}: missing required option(s) " + ", ".join(f"--{m}" for m in missing))
    return args


def main(argv=None) -> int:
    try:
        args = _merge(build_parser().parse_args(argv))
        return args.func(args)
    except CorruptNetError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except (OSError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return UsageError.exit_code


if __name__ == "__main__":
    sys.exit(main())
