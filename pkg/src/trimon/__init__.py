"""Pulse-level simulation and analysis for three-mode trimon circuits."""
from .circuit import (CircuitSpec, ModeParams, build_maxwell, conditional_frequencies,
                      effective_charging_energies, mode_params, normal_modes, quantize_modes)
from .hilbert import SpaceSpec, lowering_op, number_op, static_hamiltonian, transition_frequency

__version__ = "0.1.0"
