"""Heterogeneous best-response populations: simulation and analysis.

Submodules:
    model        profiles, thresholds, best responses, validity checks
    discrete     finite-N Markov chain: kernel, simulation, closed classes
    continuous   mean-dynamics differential inclusion and its flow
    equilibria   equilibrium enumeration, stability, Birkhoff center
    experiments  fluctuation sweeps, concentration and consistency checks
    cli          command-line entry point
"""

from .continuous import abstract_field, flow, vector_field
from .discrete import (
    DiscreteState,
    closed_classes,
    expected_drift,
    noise_bound,
    simulate,
    step,
    transition_distribution,
)
from .equilibria import birkhoff_center, classify, enumerate_equilibria
from .model import (
    Assumption1Report,
    CumulativeProfile,
    PopulationProfile,
    Preference,
    Rational,
    Strategy,
    TieRule,
    cumulative,
    parse_profile,
    preferred_strategy,
    valid_sizes,
    validate_assumption1,
)

__all__ = [
    "Assumption1Report",
    "CumulativeProfile",
    "DiscreteState",
    "PopulationProfile",
    "Preference",
    "Rational",
    "Strategy",
    "TieRule",
    "abstract_field",
    "birkhoff_center",
    "classify",
    "closed_classes",
    "cumulative",
    "enumerate_equilibria",
    "expected_drift",
    "flow",
    "noise_bound",
    "parse_profile",
    "preferred_strategy",
    "simulate",
    "step",
    "transition_distribution",
    "valid_sizes",
    "validate_assumption1",
    "vector_field",
]
