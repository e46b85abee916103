"""End-to-end pipeline runs and the dataset-size study.

The size sweep trains one surrogate per dataset size on a prefix of a single
base dataset, so a larger training set always contains every smaller one.
Generated datasets are already in i.i.d. random order, hence prefixes are
taken in generation order unless a shuffle seed is given.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy.stats import rankdata

from .dataset import Dataset
from .mlp import TrainConfig, TrainReport, train
from .pulses import NoiseConfig
from .search import SearchConfig, SearchResult, optimize_amplitude, verify


def spearman(x, y) -> float:
    """Spearman rank correlation: Pearson correlation of average-tie ranks."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("spearman needs two 1-D sequences of equal length")
    if len(x) < 2:
        raise ValueError("spearman needs at least 2 points")
    rx = rankdata(x, method="average")
    ry = rankdata(y, method="average")
    dx = rx - rx.mean()
    dy = ry - ry.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx == 0.0 or syy == 0.0:
        raise ValueError("spearman undefined: one input has constant ranks")
    rho = float(dx @ dy) / math.sqrt(sxx * syy)
    return min(1.0, max(-1.0, rho))


def loss_curve_correlation(report: TrainReport) -> float:
    if len(report.train_loss) < 2:
        raise ValueError("need at least 2 epochs to correlate loss curves")
    return spearman(report.train_loss, report.val_loss)


@dataclass(frozen=True)
class VerifyConfig:
    shots: int = 1024
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    seed: int = 0


def run_pipeline(dataset: Dataset, train_cfg: TrainConfig, search_cfg: SearchConfig,
                 verify_cfg: VerifyConfig | None = None,
                 threads: int = 1) -> tuple[TrainReport, SearchResult]:
    """Train a surrogate on ``dataset``, search it, and (optionally) verify by simulation."""
    report = train(dataset, train_cfg)
    result = optimize_amplitude(report.final_model, search_cfg, threads)
    if verify_cfg is not None:
        result.chi_verified = verify(result.phi_star, dataset.gate, verify_cfg.shots,
                                     verify_cfg.noise, verify_cfg.seed, dataset.sim)
        result.verify_meta = {"shots": verify_cfg.shots, "seed": verify_cfg.seed,
                              "noise": asdict(verify_cfg.noise)}
    return report, result


@dataclass
class SizeSweepRow:
    dataset_size: int
    phi_star: tuple[float, ...]
    chi_verified: float
    spearman_rho: float


def size_sweep(base_dataset: Dataset, sizes, train_cfg: TrainConfig, search_cfg: SearchConfig,
               verify_cfg: VerifyConfig, shuffle_seed: int | None = None,
               threads: int = 1) -> list[SizeSweepRow]:
    sizes = [int(s) for s in sizes]
    if not sizes:
        raise ValueError("no dataset sizes given")
    if sizes != sorted(sizes) or len(set(sizes)) != len(sizes):
        raise ValueError("sizes must be strictly ascending")
    if sizes[0] < 2:
        raise ValueError("dataset sizes must be >= 2")
    if sizes[-1] > len(base_dataset):
        raise ValueError(f"size {sizes[-1]} exceeds the base dataset ({len(base_dataset)} records)")
    base = base_dataset if shuffle_seed is None else base_dataset.shuffled(shuffle_seed)
    rows = []
    for s in sizes:
        report, result = run_pipeline(base.take(np.arange(s)), train_cfg, search_cfg,
                                      verify_cfg, threads)
        rows.append(SizeSweepRow(s, result.phi_star, float(result.chi_verified),
                                 loss_curve_correlation(report)))
    return rows


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_sweep_csv(rows: list[SizeSweepRow], path) -> None:
    arity = len(rows[0].phi_star) if rows else 1
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["size", *(f"phi{k}" for k in range(arity)), "chi_verified", "spearman_rho"])
        for r in rows:
            w.writerow([r.dataset_size, *map(_fmt, r.phi_star), _fmt(r.chi_verified),
                        _fmt(r.spearman_rho)])


def read_sweep_csv(path) -> list[SizeSweepRow]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        arity = len(header) - 3
        return [
            SizeSweepRow(int(row[0]), tuple(float(v) for v in row[1:1 + arity]),
                         float(row[-2]), float(row[-1]))
            for row in reader
        ]


def write_plot_data(rows: list[SizeSweepRow], stem) -> tuple[Path, Path]:
    """Two-column whitespace-separated files for external plotting tools."""
    stem = Path(stem)
    fid = stem.with_name(stem.name + "_fidelity.dat")
    rho = stem.with_name(stem.name + "_spearman.dat")
    fid.write_text("".join(f"{r.dataset_size} {_fmt(r.chi_verified)}\n" for r in rows))
    rho.write_text("".join(f"{r.dataset_size} {_fmt(r.spearman_rho)}\n" for r in rows))
    return fid, rho


def write_config_echo(path, **sections) -> None:
    payload = {k: (asdict(v) if hasattr(v, "__dataclass_fields__") else v) for k, v in sections.items()}
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True, default=str) + "\n")
