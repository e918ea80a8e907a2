"""Blind two-server factoring: compiled period-finding circuits, their split into
a stabilizer stage and a magic stage, and a simulator for the delegation protocol."""

__version__ = "0.1.0"
SCHEMA_VERSION = 1

from .builder import Census, gate_census, shor_circuit
from .circuit import Circuit, Component, Gate, circuit_unitary, reverse_circuit
from .classical import FactorInstance, factors_from_period, postprocess, validate_period
from .codec import decode, encode, from_hex, to_hex
from .decompose import decompose_standard
from .enumeration import bitstring_size_bound, max_depth, s_prime
from .errors import BlindFactorError
from .partition import BlindPair, Partition, blind_pair, equivalent, optimize, reduced_depth, verify_split
from .protocol import ProtocolConfig, ProtocolTranscript, run_protocol
from .statevec import Distribution, StateVector, distribution, init_epr, init_zero

__all__ = [
    "BlindFactorError", "BlindPair", "Census", "Circuit", "Component", "Distribution",
    "FactorInstance", "Gate", "Partition", "ProtocolConfig", "ProtocolTranscript", "StateVector",
    "bitstring_size_bound", "blind_pair", "circuit_unitary", "decode", "decompose_standard",
    "distribution", "encode", "equivalent", "factors_from_period", "from_hex", "gate_census",
    "init_epr", "init_zero", "max_depth", "optimize", "postprocess", "reduced_depth",
    "reverse_circuit", "run_protocol", "s_prime", "shor_circuit", "to_hex", "validate_period",
    "verify_split",
]
