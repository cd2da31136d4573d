"""Simulation of spectrally and temporally selective readout of coupled qubits."""

from .asymptotics import (
    asymptotic_signal,
    decay_rates,
    direct_scheme_estimates,
    discrimination_window,
    overlap_populations,
    projective_reference,
)
from .fock import BothExcited, DSExcited, FockBasis, Ground, SiteExcited, Stationary, Superposition, initial_state
from .model import ChainParams, ModelParams, stationary_states, validate_regime

__version__ = "0.1.0"
