"""Figure rendering for the report path (PNG files written next to the CSV output)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "font.size": 10,
    "axes.labelsize": 10,
    "axes.titlesize": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "figure.dpi": 100,
    "savefig.dpi": 150,
    "lines.linewidth": 1.2,
    # fixed metadata keeps reruns byte-identical
    "svg.hashsalt": "pulseopt",
}

GATE_LABELS = {"h": "Hadamard", "x": "Pauli-X", "cnot": "CNOT"}


def _figure(width: float = 4.5, aspect: float = 0.68):
    return plt.subplots(figsize=(width, width * aspect))


def _save(fig, path) -> Path:
    path = Path(path)
    fig.tight_layout()
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)
    return path


def plot_size_sweep(rows_by_gate: dict, stem) -> tuple[Path, Path]:
    """Dataset size against verified fidelity and against loss-curve Spearman rho."""
    stem = Path(stem)
    with plt.rc_context(STYLE):
        fig, ax = _figure()
        for gate, rows in rows_by_gate.items():
            ax.plot([r.dataset_size for r in rows], [r.chi_verified for r in rows], "o-",
                    ms=3, label=GATE_LABELS.get(gate, gate))
        ax.set_xlabel("dataset size (simulations)")
        ax.set_ylabel("verified fidelity")
        ax.legend(frameon=False)
        fid = _save(fig, stem.with_name(stem.name + "_fidelity.png"))

        fig, ax = _figure()
        for gate, rows in rows_by_gate.items():
            ax.plot([r.dataset_size for r in rows], [r.spearman_rho for r in rows], "s-",
                    ms=3, label=GATE_LABELS.get(gate, gate))
        ax.set_xlabel("dataset size (simulations)")
        ax.set_ylabel("Spearman rho (train vs. validation loss)")
        ax.legend(frameon=False)
        rho = _save(fig, stem.with_name(stem.name + "_spearman.png"))
    return fid, rho


def plot_loss_curves(train_loss, val_loss, path) -> Path:
    epochs = np.arange(1, len(train_loss) + 1)
    with plt.rc_context(STYLE):
        fig, ax = _figure()
        ax.semilogy(epochs, train_loss, label="train")
        ax.semilogy(epochs, val_loss, "--", label="validation")
        ax.set_xlabel("epoch")
        ax.set_ylabel("MSE")
        ax.legend(frameon=False)
        return _save(fig, path)


def plot_landscape(amplitudes, chi, path, surrogate=None, phi_star=None, gate: str = "") -> Path:
    """Scatter of simulated fidelities with the surrogate curve (single-amplitude gates)."""
    amplitudes = np.asarray(amplitudes, dtype=float).reshape(len(chi), -1)
    if amplitudes.shape[1] != 1:
        raise ValueError("landscape plots are only drawn for single-amplitude gates")
    with plt.rc_context(STYLE):
        fig, ax = _figure()
        ax.plot(amplitudes[:, 0], chi, ".", ms=3, color="0.5", label="simulated")
        if surrogate is not None:
            grid = np.linspace(0.0, 1.0, 1001)
            ax.plot(grid, surrogate(grid[:, None]), label="surrogate")
        if phi_star is not None:
            ax.axvline(float(np.atleast_1d(phi_star)[0]), color="k", lw=0.8, ls=":",
                       label="selected amplitude")
        ax.set_xlabel("pulse amplitude")
        ax.set_ylabel("fidelity")
        if gate:
            ax.set_title(GATE_LABELS.get(gate, gate))
        ax.legend(frameon=False)
        return _save(fig, path)
