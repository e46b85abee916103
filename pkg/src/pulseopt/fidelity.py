"""Ideal gate output distributions and the Bhattacharyya fidelity.

Distributions are plain ``{bitstring: probability}`` dicts covering the
full state space of the gate (zero entries kept).
"""

from __future__ import annotations

import math
from collections.abc import Mapping

from .gates import Gate
from .linalg import basis_labels


def ideal_distribution(gate: Gate | str) -> dict[str, float]:
    """Measurement distribution of a perfect gate applied to |0...0>."""
    gate = Gate.parse(gate)
    if gate is Gate.HADAMARD:
        return {"0": 0.5, "1": 0.5}
    if gate is Gate.PAULI_X:
        return {"0": 0.0, "1": 1.0}
    return {"00": 1.0, "01": 0.0, "10": 0.0, "11": 0.0}


def counts_to_probs(counts: Mapping[str, int]) -> dict[str, float]:
    """Relative frequencies, with unseen basis states of the register filled as 0."""
    if not counts:
        raise ValueError("empty counts")
    widths = {len(s) for s in counts}
    if len(widths) != 1:
        raise ValueError(f"inconsistent bitstring widths in counts: {sorted(counts)}")
    labels = basis_labels(2 ** widths.pop())
    unknown = set(counts) - set(labels)
    if unknown:
        raise ValueError(f"invalid basis labels {sorted(unknown)}")
    if any(c < 0 for c in counts.values()):
        raise ValueError("negative count")
    total = sum(counts.values())
    if total < 1:
        raise ValueError("counts sum to zero")
    return {s: counts.get(s, 0) / total for s in labels}


def bhattacharyya_fidelity(p_e: Mapping[str, float], p_d: Mapping[str, float]) -> float:
    """Squared Bhattacharyya coefficient ``(sum_s sqrt(p_e[s] * p_d[s]))**2``.

    Both arguments must share the same labels. The result is clipped into
    [0, 1] to absorb rounding in the square roots.
    """
    if set(p_e) != set(p_d):
        raise ValueError(f"label mismatch: {sorted(p_e)} vs {sorted(p_d)}")
    # sorted order makes chi(p, q) == chi(q, p) bit-for-bit
    bc = math.fsum(math.sqrt(p_e[s] * p_d[s]) for s in sorted(p_e))
    return min(max(bc * bc, 0.0), 1.0)
