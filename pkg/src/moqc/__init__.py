"""Measurement-only quantum computation.

Simulates gates with projective measurements of ``Z (x) X`` and planar
one-qubit observables, compiles circuits into adaptive measurement programs,
and prepares graph states with ``Y`` and ``Z (x) X`` alone.

Qubits are 1-based in every public function; qubit 1 is the most
significant bit of a basis index.
"""

__version__ = "0.1.0"

from .circuit import Circuit, circuit_from_ops, parse_circuit
from .compiler import compile_circuit, decompose_1q, verify_program
from .graphstate import Graph, needs_sigma_z, parse_graph, prepare_graph_state, standard_graph_state
from .measurement import Observable, ObservableSet, enumerate_branches, measure, measure_forced
from .program import MeasurementProgram, enumerate_program, execute
from .protocols import apply_pauli, correct_x_round, correct_z_round, sim_cz_variant, sim_J, state_transfer
from .qstate import Gate, StateVector, apply_gate, equal_up_to_global_phase, make_basis_state, plus_theta_state

__all__ = [
    "Circuit", "circuit_from_ops", "Gate", "Graph", "MeasurementProgram", "Observable", "ObservableSet", "StateVector",
    "apply_gate", "apply_pauli", "compile_circuit", "correct_x_round", "correct_z_round",
    "decompose_1q", "enumerate_branches", "enumerate_program", "equal_up_to_global_phase",
    "execute", "make_basis_state", "measure", "measure_forced", "needs_sigma_z", "parse_circuit",
    "parse_graph", "plus_theta_state", "prepare_graph_state", "sim_J", "sim_cz_variant",
    "standard_graph_state", "state_transfer", "verify_program",
]
