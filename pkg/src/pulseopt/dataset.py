"""Amplitude/fidelity datasets: generation by simulation, CSV persistence, splitting.

Record ``i`` of a dataset generated with master seed ``s`` owns the random
stream ``rng_stream(s, i)``: its amplitudes are the first draws of that
stream and the shot sampling consumes the rest. Any record can therefore be
replayed alone, and generation can be spread over threads without changing
a single byte of the output.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .fidelity import bhattacharyya_fidelity, counts_to_probs, ideal_distribution
from .gates import Gate
from .linalg import rng_stream
from .pulses import NoiseConfig, SimConfig, run_gate

SCHEMA_VERSION = 1


class DatasetError(ValueError):
    pass


class FidelityRecord(NamedTuple):
    amplitudes: tuple[float, ...]
    chi: float


@dataclass(eq=False)
class Dataset:
    gate: Gate
    amplitudes: np.ndarray  # (n, arity)
    chi: np.ndarray  # (n,)
    shots: int
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    master_seed: int = 0
    sim: SimConfig = field(default_factory=SimConfig)

    def __post_init__(self):
        self.gate = Gate.parse(self.gate)
        self.amplitudes = np.asarray(self.amplitudes, dtype=float).reshape(-1, self.gate.arity)
        self.chi = np.asarray(self.chi, dtype=float).reshape(-1)
        if len(self.chi) != len(self.amplitudes):
            raise DatasetError("amplitude and fidelity columns differ in length")

    def __len__(self) -> int:
        return len(self.chi)

    def __iter__(self):
        for amps, chi in zip(self.amplitudes, self.chi):
            yield FidelityRecord(tuple(float(a) for a in amps), float(chi))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.gate == other.gate
            and np.array_equal(self.amplitudes, other.amplitudes)
            and np.array_equal(self.chi, other.chi)
            and self.metadata() == other.metadata()
        )

    def take(self, indices) -> "Dataset":
        idx = np.asarray(indices, dtype=int)
        return Dataset(self.gate, self.amplitudes[idx], self.chi[idx], self.shots,
                       self.noise, self.master_seed, self.sim)

    def shuffled(self, seed: int) -> "Dataset":
        return self.take(rng_stream(seed).permutation(len(self)))

    def metadata(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "gate": self.gate.value,
            "n": len(self),
            "shots": self.shots,
            "noise": asdict(self.noise),
            "master_seed": self.master_seed,
            "rabi_scale": self.sim.rabi_scale,
            "pulse_shape": {
                "duration": self.sim.duration,
                "sigma": self.sim.sigma,
                "drag_beta": self.sim.drag_beta,
            },
        }


def simulate_record(gate: Gate | str, index: int, shots: int, noise: NoiseConfig,
                    master_seed: int, sim: SimConfig = SimConfig()) -> FidelityRecord:
    """Draw and score record ``index`` of the dataset seeded by ``master_seed``."""
    gate = Gate.parse(gate)
    rng = rng_stream(master_seed, index)
    amps = rng.random(gate.arity)
    outcome = run_gate(sim.spec(gate, amps), shots, noise, rng)
    chi = bhattacharyya_fidelity(counts_to_probs(outcome.counts), ideal_distribution(gate))
    return FidelityRecord(tuple(float(a) for a in amps), chi)


def generate_dataset(gate: Gate | str, n: int, shots: int = 1024, noise: NoiseConfig | None = None,
                     seed: int = 0, sim: SimConfig | None = None, threads: int = 1) -> Dataset:
    gate = Gate.parse(gate)
    noise = NoiseConfig() if noise is None else noise
    sim = SimConfig() if sim is None else sim
    if n < 1:
        raise ValueError("n must be >= 1")
    if shots < 1:
        raise ValueError("shots must be >= 1")

    def one(i):
        return simulate_record(gate, i, shots, noise, seed, sim)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            records = list(pool.map(one, range(n)))
    else:
        records = [one(i) for i in range(n)]
    return Dataset(
        gate=gate,
        amplitudes=np.array([r.amplitudes for r in records]),
        chi=np.array([r.chi for r in records]),
        shots=shots,
        noise=noise,
        master_seed=seed,
        sim=sim,
    )


def split_train_val(d: Dataset, val_fraction: float = 0.2, seed: int = 0) -> tuple[Dataset, Dataset]:
    """Seeded shuffle, then ``floor(n * (1 - f))`` training records and the rest for validation."""
    if not (0.0 < val_fraction < 1.0):
        raise ValueError(f"val_fraction must lie in (0, 1), got {val_fraction!r}")
    perm = rng_stream(seed).permutation(len(d))
    n_train = math.floor(len(d) * (1.0 - val_fraction))
    return d.take(perm[:n_train]), d.take(perm[n_train:])


def sidecar_path(path) -> Path:
    return Path(path).with_suffix(".json")


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def save_dataset(d: Dataset, path) -> Path:
    """Write ``path`` (CSV) and its JSON metadata sidecar; returns the sidecar path."""
    path = Path(path)
    arity = d.gate.arity
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"amp{k}" for k in range(arity)] + ["chi"])
        for amps, chi in zip(d.amplitudes, d.chi):
            w.writerow([_fmt(a) for a in amps] + [_fmt(chi)])
    meta = sidecar_path(path)
    meta.write_text(json.dumps(d.metadata(), indent=2, sort_keys=True) + "\n")
    return meta


def load_dataset(path) -> Dataset:
    path = Path(path)
    meta_path = sidecar_path(path)
    try:
        meta = json.loads(meta_path.read_text())
    except FileNotFoundError:
        raise DatasetError(f"missing metadata sidecar {meta_path}") from None
    if meta.get("schema_version") != SCHEMA_VERSION:
        raise DatasetError(
            f"{meta_path}: schema_version {meta.get('schema_version')!r} is not {SCHEMA_VERSION}"
        )
    gate = Gate.parse(meta["gate"])
    arity = gate.arity
    expected = [f"amp{k}" for k in range(arity)] + ["chi"]

    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DatasetError(f"{path}: empty file")
    header = rows[0]
    if header != expected:
        raise DatasetError(
            f"{path}: arity error, header {header} does not match gate "
            f"{gate.value} (expected {expected})"
        )
    amps, chis = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != arity + 1:
            raise DatasetError(f"{path}:{lineno}: expected {arity + 1} columns, got {len(row)}")
        try:
            values = [float(v) for v in row]
        except ValueError:
            raise DatasetError(f"{path}:{lineno}: malformed number in {row}") from None
        if not all(math.isfinite(v) for v in values):
            raise DatasetError(f"{path}:{lineno}: non-finite value")
        if not all(0.0 <= a <= 1.0 for a in values[:-1]):
            raise DatasetError(f"{path}:{lineno}: amplitude outside [0, 1]")
        if not 0.0 <= values[-1] <= 1.0:
            raise DatasetError(f"{path}:{lineno}: chi = {values[-1]!r} outside [0, 1]")
        amps.append(values[:-1])
        chis.append(values[-1])
    if "n" in meta and meta["n"] != len(chis):
        raise DatasetError(f"{path}: sidecar declares {meta['n']} rows, file has {len(chis)}")

    shape = meta.get("pulse_shape", {})
    return Dataset(
        gate=gate,
        amplitudes=np.array(amps, dtype=float).reshape(-1, arity),
        chi=np.array(chis, dtype=float),
        shots=int(meta["shots"]),
        noise=NoiseConfig(**meta["noise"]),
        master_seed=int(meta["master_seed"]),
        sim=SimConfig(rabi_scale=float(meta["rabi_scale"]), **shape),
    )
