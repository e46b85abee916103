"""Two-stage grid search over a fidelity surrogate, and re-simulation of the winner.

Stage one evaluates the full Cartesian grid over ``[0, 1]**arity`` at
``coarse_step``. Stage two evaluates ``phi* + k * fine_step`` for
``|k * fine_step| <= epsilon`` on every axis around the stage-one winner,
dropping points outside ``[0, 1]``. Both stages return the first maximum in
lexicographic amplitude order, so ties go to the smallest amplitude.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .fidelity import bhattacharyya_fidelity, counts_to_probs, ideal_distribution
from .gates import Gate
from .linalg import rng_stream
from .mlp import MlpModel, predict
from .pulses import NoiseConfig, SimConfig, run_gate

CHUNK = 8192


class ArityError(ValueError):
    pass


@dataclass(frozen=True)
class SearchConfig:
    arity: int = 1
    coarse_step: float = 1e-3
    epsilon: float = 1e-3
    fine_step: float = 1e-6

    def __post_init__(self):
        if self.arity < 1:
            raise ValueError("arity must be >= 1")
        if not (0 < self.fine_step < self.coarse_step <= 1):
            raise ValueError("need 0 < fine_step < coarse_step <= 1")
        if self.epsilon < self.fine_step:
            raise ValueError("epsilon must be >= fine_step")

    @classmethod
    def for_gate(cls, gate: Gate | str, **overrides) -> "SearchConfig":
        gate = Gate.parse(gate)
        if gate is Gate.CNOT:
            # the fine window spans one coarse cell on each side
            defaults = dict(arity=3, coarse_step=0.02, epsilon=0.02, fine_step=1e-3)
        else:
            defaults = dict(arity=1, coarse_step=1e-3, epsilon=1e-3, fine_step=1e-6)
        defaults.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**defaults)


@dataclass(frozen=True)
class FunctionSurrogate:
    """Wraps a vectorized ``f(points) -> values`` so it can stand in for a trained model."""

    fn: Callable[[np.ndarray], np.ndarray]
    input_dim: int = 1

    def __call__(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(self.fn(points), dtype=float).reshape(-1)


@dataclass
class SearchResult:
    phi_star: tuple[float, ...]
    chi_hat_star: float
    stage1_phi: tuple[float, ...]
    stage1_chi_hat: float
    evaluations: int
    config: SearchConfig
    chi_verified: float | None = None
    verify_meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {
            "phi_star": list(self.phi_star),
            "chi_hat_star": self.chi_hat_star,
            "stage1": {"phi": list(self.stage1_phi), "chi_hat": self.stage1_chi_hat},
            "evaluations": self.evaluations,
            "config": {
                "arity": self.config.arity,
                "coarse_step": self.config.coarse_step,
                "epsilon": self.config.epsilon,
                "fine_step": self.config.fine_step,
            },
        }
        if self.chi_verified is not None:
            out["chi_verified"] = self.chi_verified
            out["verify"] = dict(self.verify_meta)
        return out


def _predictor(model) -> tuple[Callable[[np.ndarray], np.ndarray], int]:
    if isinstance(model, MlpModel):
        return (lambda pts: predict(model, pts)), model.input_dim
    if callable(model):
        return model, getattr(model, "input_dim", 1)
    raise TypeError(f"cannot evaluate surrogate of type {type(model).__name__}")


def evaluate(model, points: np.ndarray, threads: int = 1) -> np.ndarray:
    """Surrogate values at ``points`` (n, arity), computed in fixed-size chunks.

    Chunk boundaries do not depend on ``threads``, so results are identical
    for any worker count.
    """
    f, _ = _predictor(model)
    chunks = [points[i:i + CHUNK] for i in range(0, len(points), CHUNK)]
    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(f, chunks))
    else:
        parts = [f(c) for c in chunks]
    return np.concatenate(parts) if parts else np.empty(0)


def _check_arity(model, cfg: SearchConfig) -> None:
    _, dim = _predictor(model)
    if dim != cfg.arity:
        raise ArityError(f"surrogate takes {dim} input(s) but the search config has arity {cfg.arity}")


def _axis(n_steps: int, step: float) -> np.ndarray:
    return np.arange(n_steps + 1) * step


def coarse_grid(cfg: SearchConfig) -> np.ndarray:
    n = math.floor(1.0 / cfg.coarse_step + 1e-9)
    axis = _axis(n, cfg.coarse_step)
    return np.array(list(itertools.product(axis, repeat=cfg.arity)), dtype=float)


def fine_grid(phi_star, cfg: SearchConfig) -> np.ndarray:
    m = math.floor(cfg.epsilon / cfg.fine_step + 1e-9)
    offsets = np.arange(-m, m + 1) * cfg.fine_step
    axes = []
    for centre in np.atleast_1d(np.asarray(phi_star, dtype=float)):
        pts = centre + offsets
        axes.append(pts[(pts >= 0.0) & (pts <= 1.0)])
    return np.array(list(itertools.product(*axes)), dtype=float)


def _argmax(points: np.ndarray, values: np.ndarray) -> tuple[tuple[float, ...], float]:
    i = int(np.argmax(values))  # first maximum = lexicographically smallest point
    return tuple(float(v) for v in points[i]), float(values[i])


def coarse_search(model, cfg: SearchConfig, threads: int = 1):
    """Stage one. Returns ``(phi, chi_hat, n_evaluations)``."""
    _check_arity(model, cfg)
    pts = coarse_grid(cfg)
    phi, chi = _argmax(pts, evaluate(model, pts, threads))
    return phi, chi, len(pts)


def fine_search(model, phi_star, cfg: SearchConfig, threads: int = 1):
    """Stage two around ``phi_star``. Returns ``(phi, chi_hat, n_evaluations)``."""
    _check_arity(model, cfg)
    if len(np.atleast_1d(phi_star)) != cfg.arity:
        raise ArityError(f"phi_star has {len(np.atleast_1d(phi_star))} entries, expected {cfg.arity}")
    pts = fine_grid(phi_star, cfg)
    phi, chi = _argmax(pts, evaluate(model, pts, threads))
    return phi, chi, len(pts)


def optimize_amplitude(model, cfg: SearchConfig, threads: int = 1) -> SearchResult:
    """Coarse then fine search over the surrogate; never calls the simulator."""
    phi1, chi1, n1 = coarse_search(model, cfg, threads)
    phi2, chi2, n2 = fine_search(model, phi1, cfg, threads)
    if chi1 > chi2:
        # stage-one point re-evaluated in another batch can differ by an ulp
        phi2, chi2 = phi1, chi1
    return SearchResult(phi2, chi2, phi1, chi1, n1 + n2, cfg)


def verify(phi, gate: Gate | str, shots: int = 1024, noise: NoiseConfig | None = None,
           seed: int = 0, sim: SimConfig | None = None) -> float:
    """Simulate the gate at amplitudes ``phi`` and score it against the ideal distribution."""
    gate = Gate.parse(gate)
    noise = NoiseConfig() if noise is None else noise
    sim = SimConfig() if sim is None else sim
    phi = np.clip(np.atleast_1d(np.asarray(phi, dtype=float)), 0.0, 1.0)
    outcome = run_gate(sim.spec(gate, phi), shots, noise, rng_stream(seed))
    return bhattacharyya_fidelity(counts_to_probs(outcome.counts), ideal_distribution(gate))
