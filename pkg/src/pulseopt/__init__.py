"""Surrogate-model optimization of pulse amplitudes for Hadamard, Pauli-X and CNOT gates."""

__version__ = "0.1.0"

GATES = ("h", "x", "cnot")
