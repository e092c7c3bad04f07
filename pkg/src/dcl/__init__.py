"""Coding transitions of dissipative-boundary qudit chains.

Stabilizer engine, annealed domain-wall transfer matrix, closed-form
analytics and a sweep/collapse harness.
"""
from .analytics import AnalyticModel, critical_p
from .clifford import CliffordGate2, sample_uniform_clifford2
from .domainwall import AnnealedConfig, WalkLattice, annealed_mi, annealed_run, annealed_samples
from .protocols import ProtocolConfig, TrajectoryRecord, run_protocol
from .stabilizer import PauliString, StabilizerState

__version__ = "0.1.0"
