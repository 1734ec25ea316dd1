"""Identify truthful and corrupt vertices of a network from peer reports."""

from .certify import ExpanderCert, certify
from .constructions import (
    GadgetSpec,
    ScenarioFamily,
    build_np_gadget,
    build_separator_scenarios,
    verify_indistinguishable,
)
from .detection import (
    ComponentWeights,
    DetectionResult,
    agreement_graph,
    certain_labels,
    detect,
    detect_connected,
    detect_directed,
    detect_undirected,
    max_weight_independent_set_containing,
)
from .errors import (
    AmbiguousInstance,
    BudgetExceeded,
    CorruptNetError,
    FallbackToGeneral,
    ImpossibleInstance,
    InconsistentReports,
    InstanceError,
    NoLargeComponent,
    UsageError,
)
from .experiment import ExperimentConfig, TrialRecord, run_experiment
from .generators import GenSpec, generate, orient_lemma14, random_regular
from .graph import ComponentPartition, Graph, connected_components, girth, spectral_gap, strongly_connected_components
from .puzzle import PuzzleInstance, TestHistory, minimal_tests, run_strategy, verify_strategy
from .reporting import Adversary, ReportSet, World, consistency_check, enumerate_consistent, generate_reports

__version__ = "0.1.0"

__all__ = [
    "Adversary",
    "AmbiguousInstance",
    "BudgetExceeded",
    "ComponentPartition",
    "ComponentWeights",
    "CorruptNetError",
    "DetectionResult",
    "ExpanderCert",
    "ExperimentConfig",
    "FallbackToGeneral",
    "GadgetSpec",
    "GenSpec",
    "Graph",
    "ImpossibleInstance",
    "InconsistentReports",
    "InstanceError",
    "NoLargeComponent",
    "PuzzleInstance",
    "ReportSet",
    "ScenarioFamily",
    "TestHistory",
    "TrialRecord",
    "UsageError",
    "World",
    "agreement_graph",
    "build_np_gadget",
    "build_separator_scenarios",
    "certain_labels",
    "certify",
    "connected_components",
    "consistency_check",
    "detect",
    "detect_connected",
    "detect_directed",
    "detect_undirected",
    "enumerate_consistent",
    "generate",
    "generate_reports",
    "girth",
    "max_weight_independent_set_containing",
    "minimal_tests",
    "orient_lemma14",
    "random_regular",
    "run_experiment",
    "run_strategy",
    "spectral_gap",
    "strongly_connected_components",
    "verify_indistinguishable",
    "verify_strategy",
]
