"""Pulse envelopes and a resonant-drive model of the gate dynamics.

Single qubit: in the rotating frame a resonant drive with envelope
``Omega(t)`` and phase ``gamma`` gives

    H(t) = Omega_I(t)/2 (cos g X + sin g Y) + Omega_Q(t)/2 (-sin g X + cos g Y)

with ``Omega_I`` the in-phase envelope and ``Omega_Q`` the DRAG quadrature.
The envelope is scaled so the rotation angle is linear in the amplitude and
a unit-amplitude pulse of the reference shape rotates by
``2 pi * rabi_scale``. The state is stepped one sample (dt = 1) at a time.

Two qubits: three pulses applied in sequence with generators ``X(x)I``,
``Z(x)X`` (cross-resonance-like) and ``I(x)X``; the quadrature of each pulse
drives the matching ``Y`` generator (``Y(x)I``, ``Z(x)Y``, ``I(x)Y``).

Noise is applied to the exact output distribution: depolarizing mixing with
the uniform distribution, then independent readout bit flips per qubit.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .gates import Gate
from .linalg import I2, X, Y, Z, basis_state, expm_hermitian, measure_probabilities, sample_shots

DEFAULT_DURATION = 160
DEFAULT_SIGMA = 40.0
DEFAULT_RABI_SCALE = 2.0

# (in-phase generator, quadrature generator) for each CNOT pulse
CNOT_GENERATORS = (
    (np.kron(X, I2), np.kron(Y, I2)),
    (np.kron(Z, X), np.kron(Z, Y)),
    (np.kron(I2, X), np.kron(I2, Y)),
)


@dataclass(frozen=True)
class PulseWaveform:
    amplitude: float
    envelope: Literal["gaussian", "drag"] = "gaussian"
    duration: int = DEFAULT_DURATION
    sigma: float = DEFAULT_SIGMA
    drag_beta: float = 0.0
    phase: float = 0.0

    def __post_init__(self):
        if self.envelope not in ("gaussian", "drag"):
            raise ValueError(f"unknown envelope {self.envelope!r}")
        if not (0.0 <= self.amplitude <= 1.0):
            raise ValueError(f"amplitude must lie in [0, 1], got {self.amplitude!r}")
        if self.duration < 1:
            raise ValueError("duration must be >= 1 sample")
        if not self.sigma > 0:
            raise ValueError("sigma must be > 0")
        if self.envelope == "gaussian" and self.drag_beta != 0.0:
            raise ValueError("a gaussian pulse has no DRAG component")
        if self.duration < 4 * self.sigma:
            warnings.warn(
                f"pulse duration {self.duration} is shorter than 4*sigma ({4 * self.sigma:g}); "
                "the envelope is truncated",
                stacklevel=3,
            )


@dataclass(frozen=True)
class NoiseConfig:
    depolarizing_prob: float = 0.01
    readout_flip_prob: float = 0.02

    def __post_init__(self):
        for name in ("depolarizing_prob", "readout_flip_prob"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise ValueError(f"{name} must lie in [0, 1], got {v!r}")

    @classmethod
    def off(cls) -> "NoiseConfig":
        return cls(0.0, 0.0)

    @property
    def is_off(self) -> bool:
        return self.depolarizing_prob == 0.0 and self.readout_flip_prob == 0.0


@dataclass(frozen=True)
class SimConfig:
    """Fixed pulse shape and drive calibration; only amplitudes vary between runs."""

    rabi_scale: float = DEFAULT_RABI_SCALE
    duration: int = DEFAULT_DURATION
    sigma: float = DEFAULT_SIGMA
    drag_beta: float = 0.0

    def pulses(self, gate: Gate | str, amplitudes) -> tuple[PulseWaveform, ...]:
        gate = Gate.parse(gate)
        amps = [float(a) for a in np.atleast_1d(amplitudes)]
        if len(amps) != gate.arity:
            raise ValueError(f"gate {gate.value} takes {gate.arity} amplitude(s), got {len(amps)}")
        if gate is Gate.CNOT:
            return tuple(
                PulseWaveform(a, "drag", self.duration, self.sigma, self.drag_beta) for a in amps
            )
        return (PulseWaveform(amps[0], "gaussian", self.duration, self.sigma),)

    def spec(self, gate: Gate | str, amplitudes) -> "GateSpec":
        return GateSpec(Gate.parse(gate), self.pulses(gate, amplitudes), self.rabi_scale)


@dataclass(frozen=True)
class GateSpec:
    gate: Gate
    pulses: tuple[PulseWaveform, ...]
    rabi_scale: float = DEFAULT_RABI_SCALE

    def __post_init__(self):
        object.__setattr__(self, "gate", Gate.parse(self.gate))
        object.__setattr__(self, "pulses", tuple(self.pulses))
        if len(self.pulses) != self.gate.arity:
            raise ValueError(
                f"gate {self.gate.value} needs {self.gate.arity} pulse(s), got {len(self.pulses)}"
            )


@dataclass(frozen=True)
class SimOutcome:
    counts: dict[str, int]
    exact_dist: dict[str, float]
    shots: int
    ideal_dist: dict[str, float] = field(default_factory=dict, repr=False)


def envelope_samples(p: PulseWaveform) -> tuple[np.ndarray, np.ndarray]:
    """In-phase and quadrature samples of the pulse.

    In-phase is the plain (not edge-lifted) Gaussian
    ``amp * exp(-(t - T/2)**2 / (2 sigma**2))`` for ``t = 0 .. T-1``; the
    DRAG quadrature is ``drag_beta * d/dt`` of it. Gaussian pulses return a
    zero quadrature.
    """
    t = np.arange(p.duration, dtype=float)
    x = t - p.duration / 2
    g = p.amplitude * np.exp(-(x**2) / (2 * p.sigma**2))
    if p.envelope == "drag":
        q = p.drag_beta * (-x / p.sigma**2) * g
    else:
        q = np.zeros_like(g)
    return g, q


def _reference_area(duration: int = DEFAULT_DURATION, sigma: float = DEFAULT_SIGMA) -> float:
    g, _ = envelope_samples(PulseWaveform(1.0, "gaussian", duration, sigma))
    return float(g.sum())


REFERENCE_AREA = _reference_area()


def rabi_angle(p: PulseWaveform, rabi_scale: float = DEFAULT_RABI_SCALE) -> float:
    """Rotation angle (radians) produced by the in-phase envelope of ``p``."""
    g, _ = envelope_samples(p)
    return 2 * math.pi * rabi_scale * float(g.sum()) / REFERENCE_AREA


def calibrated_amplitude(theta: float, rabi_scale: float = DEFAULT_RABI_SCALE) -> float:
    """Amplitude of a default-shape pulse that rotates by ``theta``."""
    return theta / (2 * math.pi * rabi_scale)


def _drive(p: PulseWaveform, rabi_scale: float) -> tuple[np.ndarray, np.ndarray]:
    g, q = envelope_samples(p)
    scale = 2 * math.pi * rabi_scale / REFERENCE_AREA
    return scale * g, scale * q


def step_unitaries(p: PulseWaveform, rabi_scale: float, generator: np.ndarray,
                   quadrature: np.ndarray) -> np.ndarray:
    """Stack of per-sample propagators ``exp(-i H[t])`` for one pulse."""
    om_i, om_q = _drive(p, rabi_scale)
    c, s = math.cos(p.phase), math.sin(p.phase)
    axis_i = c * generator + s * quadrature
    axis_q = -s * generator + c * quadrature
    h = 0.5 * (om_i[:, None, None] * axis_i + om_q[:, None, None] * axis_q)
    return expm_hermitian(h, 1.0)


def _propagate(psi: np.ndarray, us: np.ndarray) -> np.ndarray:
    for u in us:
        psi = u @ psi
    return psi


def evolve_single_qubit(p: PulseWaveform, rabi_scale: float = DEFAULT_RABI_SCALE) -> np.ndarray:
    """Final state after driving |0> with pulse ``p``."""
    return _propagate(basis_state("0"), step_unitaries(p, rabi_scale, X, Y))


def evolve_two_qubit(pulses, rabi_scale: float = DEFAULT_RABI_SCALE) -> np.ndarray:
    """Final state after the three-pulse sequence starting from |00>."""
    pulses = tuple(pulses)
    if len(pulses) != 3:
        raise ValueError(f"two-qubit evolution needs exactly 3 pulses, got {len(pulses)}")
    psi = basis_state("00")
    for p, (gen, quad) in zip(pulses, CNOT_GENERATORS):
        psi = _propagate(psi, step_unitaries(p, rabi_scale, gen, quad))
    return psi


def apply_noise(dist: dict[str, float], noise: NoiseConfig) -> dict[str, float]:
    labels = sorted(dist)
    n_qubits = len(labels[0])
    p = np.array([dist[s] for s in labels], dtype=float)
    lam = noise.depolarizing_prob
    p = (1 - lam) * p + lam / p.size
    r = noise.readout_flip_prob
    if r > 0:
        confusion = np.array([[1 - r, r], [r, 1 - r]])
        t = p.reshape((2,) * n_qubits)
        for axis in range(n_qubits):
            t = np.moveaxis(np.tensordot(confusion, t, axes=([1], [axis])), 0, axis)
        p = t.reshape(-1)
    p = np.clip(p, 0.0, None)
    p /= p.sum()
    return {s: float(v) for s, v in zip(labels, p)}


def exact_distribution(spec: GateSpec) -> dict[str, float]:
    """Noiseless measurement distribution of the driven gate."""
    if spec.gate is Gate.CNOT:
        psi = evolve_two_qubit(spec.pulses, spec.rabi_scale)
    else:
        psi = evolve_single_qubit(spec.pulses[0], spec.rabi_scale)
    return measure_probabilities(psi)


def run_gate(spec: GateSpec, shots: int, noise: NoiseConfig, rng: np.random.Generator) -> SimOutcome:
    if shots < 1:
        raise ValueError("shots must be >= 1")
    dist = apply_noise(exact_distribution(spec), noise)
    return SimOutcome(counts=sample_shots(dist, shots, rng), exact_dist=dist, shots=shots)
