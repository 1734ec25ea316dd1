"""Batch trials: place a world, let an adversary report, run a detector."""

from __future__ import annotations

import csv
import io
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np

from .detection import CONNECTED, FAST, GENERAL, DetectionResult, detect
from .errors import CorruptNetError, UsageError
from .generators import GenSpec, generate, orient_lemma14, orient_random
from .graph import Graph
from .reporting import STRATEGIES, Adversary, World, generate_reports

CSV_COLUMNS = ("n", "m", "d", "delta", "adversary", "trial", "T_size", "sound", "coverage", "error", "runtime_ms", "seed")

_DELTA_LIMIT = {FAST: Fraction(1, 8), GENERAL: Fraction(1, 8), CONNECTED: Fraction(1, 3)}


def trial_seed(base: int, trial: int) -> int:
    """Independent per-trial seed derived from ``(base, trial)``."""
    return int(np.random.SeedSequence([int(base), int(trial)]).generate_state(1, np.uint64)[0] >> 1)


@dataclass
class ExperimentConfig:
    graph: dict | None = None  # GenSpec as a dict
    graph_file: str | None = None
    orient: str | None = None  # None, "lemma14" or "random"
    orient_k: int | None = None
    truthful: float = 0.6  # count when >= 1, fraction otherwise
    adversary: str = "collude-praise"
    adversary_params: dict = field(default_factory=dict)
    mode: str = GENERAL
    delta: float = 0.1
    trials: int = 1
    seed: int = 0
    timing: bool = False
    workers: int = 1

    @classmethod
    def from_dict(cls, data: dict) -> ExperimentConfig:
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise UsageError(f"unknown experiment keys: {sorted(unknown)}")
        return cls(**data)

    def validate(self) -> None:
        if self.trials < 1:
            raise UsageError("trials must be at least 1")
        if (self.graph is None) == (self.graph_file is None):
            raise UsageError("give exactly one of graph (a generator spec) or graph_file")
        if self.adversary not in STRATEGIES:
            raise UsageError(f"unknown adversary {self.adversary!r}")
        if self.mode not in _DELTA_LIMIT:
            raise UsageError(f"unknown mode {self.mode!r}")
        limit = _DELTA_LIMIT[self.mode]
        directed_general = self.orient is not None and self.mode == GENERAL
        if directed_general:
            limit = Fraction(1, 16)
        if not 0 < self.delta < limit:
            raise UsageError(f"delta must lie in (0, {limit}) for mode {self.mode}")
        if self.truthful <= 0:
            raise UsageError("truthful must be positive")

    def build_graph(self) -> Graph:
        g = Graph.read(self.graph_file) if self.graph_file else generate(GenSpec.from_dict(self.graph))
        if self.orient == "lemma14":
            g = orient_lemma14(g, self.orient_k, seed=self.seed)
        elif self.orient == "random":
            g = orient_random(g, seed=self.seed)
        elif self.orient is not None:
            raise UsageError(f"unknown orientation {self.orient!r}")
        return g

    def t_size(self, n: int) -> int:
        t = int(self.truthful) if self.truthful >= 1 else int(round(self.truthful * n))
        if not 0 <= t <= n:
            raise UsageError(f"truthful count {t} outside [0, {n}]")
        return t


@dataclass
class TrialRecord:
    n: int
    m: int
    d: int
    delta: float
    adversary: str
    trial: int
    T_size: int
    sound: bool
    coverage: float
    error: str
    runtime_ms: str
    seed: int

    def row(self) -> list:
        return [
            self.n, self.m, self.d, repr(self.delta), self.adversary, self.trial, self.T_size,
            int(self.sound), repr(self.coverage), self.error, self.runtime_ms, self.seed,
        ]


@dataclass
class TrialOutcome:
    record: TrialRecord
    world: World
    result: DetectionResult | None


def _run_trial(cfg: ExperimentConfig, g: Graph, trial: int) -> TrialOutcome:
    seed = trial_seed(cfg.seed, trial)
    rng = np.random.default_rng(seed)
    t = cfg.t_size(g.n)
    w = World.from_truthful(g.n, rng.choice(g.n, size=t, replace=False).tolist())
    adv = Adversary(cfg.adversary, dict(cfg.adversary_params), int(rng.integers(2**62)))
    start = time.perf_counter()
    result, error = None, ""
    try:
        r = generate_reports(g, w, adv)
        result = detect(g, r, cfg.mode, cfg.delta)
    except CorruptNetError as exc:
        error = type(exc).__name__
    elapsed = (time.perf_counter() - start) * 1000.0
    if result is None:
        sound, coverage = True, 0.0
    else:
        sound = result.mistakes(w.truthful) == 0
        coverage = 1.0 - result.unknown_count / g.n if g.n else 1.0
    deg = g.degree()
    rec = TrialRecord(
        n=g.n, m=g.m, d=int(deg.max()) if deg.size else 0, delta=float(cfg.delta),
        adversary=cfg.adversary, trial=trial, T_size=t, sound=sound, coverage=coverage,
        error=error, runtime_ms=f"{elapsed:.3f}" if cfg.timing else "", seed=seed,
    )
    return TrialOutcome(rec, w, result)


def _worker(args):
    cfg, g, trial = args
    return _run_trial(cfg, g, trial)


def run_experiment(cfg: ExperimentConfig, keep_results: bool = False):
    """Run every trial; returns ``(records, summary)`` or, with
    ``keep_results``, ``(outcomes, summary)``. Records come back in trial
    order whatever the worker count."""
    cfg.validate()
    g = cfg.build_graph()
    jobs = [(cfg, g, i) for i in range(cfg.trials)]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            outcomes = list(pool.map(_worker, jobs))
    else:
        outcomes = [_worker(j) for j in jobs]
    records = [o.record for o in outcomes]
    summary = summarize(records)
    return (outcomes if keep_results else records), summary


def summarize(records: list[TrialRecord]) -> dict:
    cov = np.array([r.coverage for r in records], dtype=float)
    errors: dict[str, int] = {}
    for r in records:
        if r.error:
            errors[r.error] = errors.get(r.error, 0) + 1
    out = {
        "trials": len(records),
        "soundness_rate": sum(r.sound for r in records) / len(records) if records else 1.0,
        "min_coverage": float(cov.min()) if cov.size else 0.0,
        "mean_coverage": float(cov.mean()) if cov.size else 0.0,
        "errors": dict(sorted(errors.items())),
    }
    times = [float(r.runtime_ms) for r in records if r.runtime_ms]
    if times:
        p = np.percentile(times, [50, 90, 100])
        out["runtime_ms"] = {"p50": float(p[0]), "p90": float(p[1]), "max": float(p[2])}
    return out


def records_to_csv(records: list[TrialRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in records:
        writer.writerow(r.row())
    return buf.getvalue()


def record_dicts(records: list[TrialRecord]) -> list[dict]:
    return [asdict(r) for r in records]
