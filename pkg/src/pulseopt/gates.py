from __future__ import annotations

import enum


class Gate(str, enum.Enum):
    HADAMARD = "h"
    PAULI_X = "x"
    CNOT = "cnot"

    @classmethod
    def parse(cls, value: "Gate | str") -> "Gate":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        aliases = {"hadamard": "h", "paulix": "x", "pauli-x": "x", "pauli_x": "x", "cx": "cnot"}
        try:
            return cls(aliases.get(key, key))
        except ValueError:
            raise ValueError(f"unknown gate {value!r}; expected one of h, x, cnot") from None

    @property
    def arity(self) -> int:
        """Number of pulse amplitudes driving the gate."""
        return 3 if self is Gate.CNOT else 1

    @property
    def n_qubits(self) -> int:
        return 2 if self is Gate.CNOT else 1
