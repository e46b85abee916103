"""Small dense complex linear algebra for 1- and 2-qubit Hilbert spaces.

States are complex numpy vectors of length 2 or 4, operators are (d, d)
complex arrays. Basis labels are big-endian bitstrings: for two qubits the
left bit belongs to the first tensor factor, so ``X (x) I`` maps |00> to |10>.

Random streams use numpy's PCG64 bit generator seeded through
``SeedSequence``. Sampling only consumes ``Generator.random()`` doubles and
inverts the CDF, so counts are reproducible on any platform with the same
PCG64 stream.
"""

from __future__ import annotations

import itertools

import numpy as np

SUPPORTED_DIMS = (2, 4)

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)


class DimensionError(ValueError):
    pass


def basis_labels(dim: int) -> tuple[str, ...]:
    n = {2: 1, 4: 2}.get(dim)
    if n is None:
        raise DimensionError(f"unsupported dimension {dim}; expected one of {SUPPORTED_DIMS}")
    return tuple("".join(bits) for bits in itertools.product("01", repeat=n))


def basis_state(label: str) -> np.ndarray:
    """Computational basis vector for a bitstring such as ``"0"`` or ``"10"``."""
    dim = 2 ** len(label)
    basis_labels(dim)
    psi = np.zeros(dim, dtype=complex)
    psi[int(label, 2)] = 1.0
    return psi


def _check_square(m: np.ndarray) -> int:
    if m.ndim < 2 or m.shape[-1] != m.shape[-2] or m.shape[-1] not in SUPPORTED_DIMS:
        raise DimensionError(f"expected (..., d, d) with d in {SUPPORTED_DIMS}, got {m.shape}")
    return m.shape[-1]


def apply_unitary(state: np.ndarray, u: np.ndarray) -> np.ndarray:
    state = np.asarray(state, dtype=complex)
    u = np.asarray(u, dtype=complex)
    d = _check_square(u)
    if state.shape != (d,):
        raise DimensionError(f"state of shape {state.shape} does not match {d}x{d} operator")
    return u @ state


def is_hermitian(h: np.ndarray, atol: float = 1e-12) -> bool:
    return bool(np.allclose(h, np.conj(np.swapaxes(h, -1, -2)), atol=atol, rtol=0))


def expm_hermitian(h: np.ndarray, angle_scale: float = 1.0) -> np.ndarray:
    """Return ``exp(-i * angle_scale * H)`` for a Hermitian ``H``.

    Accepts a single (d, d) matrix or a stack (..., d, d). For d = 2 the
    matrix is decomposed as ``a0 I + a.sigma`` and exponentiated in closed
    form; for d = 4 a (batched) eigendecomposition is used:
    ``U = V diag(exp(-i s w)) V^dagger``.
    """
    h = np.asarray(h, dtype=complex)
    d = _check_square(h)
    if not np.all(np.isfinite(h)) or not np.isfinite(angle_scale):
        raise ValueError("non-finite entries in Hamiltonian")
    if not is_hermitian(h, atol=1e-10):
        raise ValueError("operator is not Hermitian")

    if d == 2:
        a0 = 0.5 * np.real(h[..., 0, 0] + h[..., 1, 1])
        ax = np.real(h[..., 0, 1])
        ay = -np.imag(h[..., 0, 1])
        az = 0.5 * np.real(h[..., 0, 0] - h[..., 1, 1])
        r = np.sqrt(ax**2 + ay**2 + az**2)
        theta = angle_scale * r
        cos = np.cos(theta)
        # sin(theta)/r, with the r -> 0 limit handled explicitly
        sinc = np.where(r > 0, np.sin(theta) / np.where(r > 0, r, 1.0), angle_scale)
        u = np.empty(h.shape, dtype=complex)
        u[..., 0, 0] = cos - 1j * sinc * az
        u[..., 1, 1] = cos + 1j * sinc * az
        u[..., 0, 1] = -1j * sinc * (ax - 1j * ay)
        u[..., 1, 0] = -1j * sinc * (ax + 1j * ay)
        return u * np.exp(-1j * angle_scale * a0)[..., None, None]

    w, v = np.linalg.eigh(h)
    phases = np.exp(-1j * angle_scale * w)
    return (v * phases[..., None, :]) @ np.conj(np.swapaxes(v, -1, -2))


def unitarity_error(u: np.ndarray) -> float:
    """Max-abs entry of ``U^dagger U - I``."""
    u = np.asarray(u, dtype=complex)
    d = _check_square(u)
    return float(np.max(np.abs(np.conj(np.swapaxes(u, -1, -2)) @ u - np.eye(d))))


def measure_probabilities(state: np.ndarray) -> dict[str, float]:
    state = np.asarray(state, dtype=complex)
    labels = basis_labels(state.shape[0])
    probs = np.abs(state) ** 2
    total = probs.sum()
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"state is not normalized (norm^2 = {total!r})")
    return {s: float(p) for s, p in zip(labels, probs)}


def rng_stream(seed: int, *key: int) -> np.random.Generator:
    """PCG64 generator for ``seed``; ``key`` derives independent child streams.

    ``rng_stream(master, i)`` is the stream owned by work item ``i``; the
    derivation is numpy's ``SeedSequence(seed, spawn_key=key)`` hash.
    """
    seq = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(seq))


def sample_shots(dist: dict[str, float], shots: int, rng: np.random.Generator) -> dict[str, int]:
    """Multinomial draw of ``shots`` outcomes from ``dist`` by inverse-CDF sampling.

    Every label of ``dist`` appears in the result, with zero counts kept.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    labels = sorted(dist)
    p = np.array([dist[s] for s in labels], dtype=float)
    if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
        raise ValueError("distribution must be non-negative and sum to 1")
    cdf = np.cumsum(p)
    cdf[-1] = 1.0
    u = rng.random(shots)
    # side="right" never selects a zero-probability label
    idx = np.searchsorted(cdf, u, side="right")
    counts = np.bincount(idx, minlength=len(labels))
    return {s: int(c) for s, c in zip(labels, counts)}
