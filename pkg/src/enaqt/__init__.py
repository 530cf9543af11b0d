"""Environment-assisted transport on open qubit networks."""
__version__ = "0.1.0"

from .dynamics import (
    IntegrationError,
    IntegratorOptions,
    InvariantViolation,
    SteadyStateError,
    SteadyStateMethod,
    Trajectory,
    evolve,
    initial_state,
    steady_state,
)
from .experiments import Scenario, SweepResult, WitnessConfig, emit_csv, emit_svg, run_scenario
from .generator import CouplingMode, Generator, ModelParams, build_generator, build_hamiltonian
from .observables import coherence_l1, partial_trace, sep, sepi, trace_distance
from .operators import Register, embed, embed_product
from .presets import list_presets, run_preset
from .topology import AncillaWiring, Archetype, NetworkSpec, build_archetype, has_critical_link
from .witness import Probe, nonmarkov_witness, orthogonal_pair

__all__ = [
    "AncillaWiring", "Archetype", "CouplingMode", "Generator", "IntegrationError", "IntegratorOptions",
    "InvariantViolation", "ModelParams", "NetworkSpec", "Probe", "Register", "Scenario", "SteadyStateError",
    "SteadyStateMethod", "SweepResult", "Trajectory", "WitnessConfig", "build_archetype", "build_generator",
    "build_hamiltonian", "coherence_l1", "embed", "embed_product", "emit_csv", "emit_svg", "evolve",
    "has_critical_link", "initial_state", "list_presets", "nonmarkov_witness", "orthogonal_pair",
    "partial_trace", "run_preset", "run_scenario", "sep", "sepi", "steady_state", "trace_distance",
]
