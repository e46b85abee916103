"""End-to-end acceptance checks, one test per criterion.

Each test records a ``PASS``/``FAIL`` line that is printed in the pytest
terminal summary (and immediately, when run with ``-s``).
"""

import filecmp
import math
import time

import numpy as np
import pytest
from scipy.optimize import minimize_scalar

import pulseopt.pulses
import pulseopt.search
from conftest import ACCEPTANCE_LINES
from oracles import brute_spearman, damped_rabi, damped_rabi_argmax, finite_difference_check
from pulseopt.cli import main
from pulseopt.dataset import generate_dataset
from pulseopt.fidelity import bhattacharyya_fidelity, counts_to_probs, ideal_distribution
from pulseopt.linalg import X, Y, unitarity_error
from pulseopt.mlp import TrainConfig, init_model
from pulseopt.pulses import (CNOT_GENERATORS, GateSpec, NoiseConfig, PulseWaveform, evolve_single_qubit,
                             evolve_two_qubit, exact_distribution, step_unitaries)
from pulseopt.search import FunctionSurrogate, SearchConfig, optimize_amplitude
from pulseopt.study import VerifyConfig, run_pipeline, size_sweep, spearman

pytestmark = pytest.mark.slow


def record(number: int, title: str, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} criterion {number:2d} {title}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def test_criterion_01_fidelity_reference_values():
    cases = [
        (({"0": 0.565, "1": 0.435}, {"0": 0.5, "1": 0.5}), 0.99575, 5e-5),
        (({"0": 0.127, "1": 0.873}, {"0": 0.0, "1": 1.0}), 0.87300, 5e-5),
        ((counts_to_probs({"00": 712, "01": 312, "10": 0, "11": 0}), ideal_distribution("cnot")),
         0.695313, 1e-6),
    ]
    values = [bhattacharyya_fidelity(*args) for args, _, _ in cases]
    ok = all(abs(v - want) <= tol for v, (_, want, tol) in zip(values, cases))
    reps = 2000
    t0 = time.perf_counter()
    for _ in range(reps):
        for args, _, _ in cases:
            bhattacharyya_fidelity(*args)
    per_call = (time.perf_counter() - t0) / (reps * len(cases))
    record(1, "fidelity reference values", ok and per_call < 1e-3,
           f"values {[round(v, 7) for v in values]}, {per_call * 1e6:.1f} us per call")


def _pipeline_medians(gate: str, seeds) -> list[float]:
    out = []
    for s in seeds:
        d = generate_dataset(gate, 400, 1024, NoiseConfig.off(), seed=s)
        _, res = run_pipeline(d, TrainConfig(seed=s), SearchConfig.for_gate(gate),
                              VerifyConfig(1024, NoiseConfig.off(), s))
        out.append(res.chi_verified)
    return out


def test_criterion_02_single_qubit_pipeline_medians():
    t0 = time.perf_counter()
    h = _pipeline_medians("h", range(20))
    x = _pipeline_medians("x", range(20))
    elapsed = time.perf_counter() - t0
    med_h, med_x = float(np.median(h)), float(np.median(x))
    record(2, "noiseless pipeline medians over 20 seeds",
           med_h >= 0.9995 and med_x >= 0.9999 and elapsed <= 600,
           f"H median {med_h:.6f} (need >= 0.9995), X median {med_x:.6f} (need >= 0.9999), "
           f"{elapsed:.0f} s")


def test_criterion_03_cnot_pipeline():
    t0 = time.perf_counter()
    d = generate_dataset("cnot", 400, 1024, NoiseConfig(), seed=0)
    _, res = run_pipeline(d, TrainConfig(seed=0), SearchConfig.for_gate("cnot"),
                          VerifyConfig(1024, NoiseConfig(), 0))
    elapsed = time.perf_counter() - t0
    record(3, "CNOT pipeline with default noise", res.chi_verified >= 0.69 and elapsed <= 900,
           f"phi* {[round(p, 3) for p in res.phi_star]}, verified {res.chi_verified:.6f} "
           f"(need >= 0.69), {elapsed:.0f} s")


def test_criterion_04_gradient_check():
    errors = {}
    for dim in (1, 3):
        rng = np.random.default_rng(100 + dim)
        errors[dim] = finite_difference_check(init_model(dim, 40 + dim), rng.random((5, dim)),
                                              rng.random(5), per_layer=50, h=1e-5, seed=dim)
    record(4, "backprop vs central differences", max(errors.values()) < 1e-4,
           f"max relative error {errors[1]:.2e} (input 1), {errors[3]:.2e} (input 3)")


def test_criterion_05_rabi_sinusoid():
    scale = 2.0
    grid = np.round(np.arange(1001) * 1e-3, 12)
    p1 = np.array([abs(evolve_single_qubit(PulseWaveform(a), scale)[1]) ** 2 for a in grid])

    def err(w):
        return np.max(np.abs(p1 - np.sin(math.pi * scale * grid * w) ** 2))

    fit = minimize_scalar(err, bounds=(0.5, 1.5), method="bounded", options={"xatol": 1e-12})
    record(5, "Rabi sinusoid fit", fit.fun < 1e-6, f"w = {fit.x:.9f}, max error {fit.fun:.2e}")


def test_criterion_06_search_vs_oracle(monkeypatch):
    def forbidden(*args, **kwargs):
        raise AssertionError("simulator called during search")

    for mod, name in ((pulseopt.pulses, "run_gate"), (pulseopt.pulses, "exact_distribution"),
                      (pulseopt.pulses, "evolve_single_qubit"), (pulseopt.pulses, "evolve_two_qubit"),
                      (pulseopt.search, "run_gate")):
        monkeypatch.setattr(mod, name, forbidden)
    cfg = SearchConfig.for_gate("x")
    t0 = time.perf_counter()
    worst, monotone = 0.0, True
    for r in np.random.default_rng(6).uniform(1, 4, 20):
        res = optimize_amplitude(FunctionSurrogate(damped_rabi(r)), cfg)
        worst = max(worst, abs(res.phi_star[0] - damped_rabi_argmax(r)))
        monotone &= res.chi_hat_star >= res.stage1_chi_hat
    elapsed = time.perf_counter() - t0
    record(6, "two-stage search vs analytic argmax", worst <= cfg.fine_step and monotone and elapsed < 60,
           f"max |phi - argmax| {worst:.2e} (step {cfg.fine_step:g}), fine >= coarse in all runs: "
           f"{monotone}, {elapsed:.1f} s")


def test_criterion_07_spearman():
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(1000):
        n = int(rng.integers(3, 30))
        x = rng.integers(0, 6, n).astype(float)
        y = rng.integers(0, 6, n).astype(float)
        if np.ptp(x) == 0 or np.ptp(y) == 0:
            x[0], y[0] = x[0] + 7, y[0] + 7
        worst = max(worst, abs(spearman(x, y) - brute_spearman(x, y)))
    hand = spearman([1, 2, 3, 4, 5], [5, 6, 7, 8, 7])
    ok = worst <= 1e-12 and abs(hand - 8 / math.sqrt(95)) <= 1e-9
    record(7, "Spearman vs brute-force ranks", ok,
           f"max deviation {worst:.1e} over 1000 tied vectors, hand case {hand:.12f}")


SWEEP_SIZES = list(range(25, 401, 25))


def test_criterion_08_size_sweep():
    t0 = time.perf_counter()
    details, ok = [], True
    for gate in ("h", "x"):
        base = generate_dataset(gate, 400, 1024, NoiseConfig.off(), seed=0)
        args = (base, SWEEP_SIZES, TrainConfig(seed=0), SearchConfig.for_gate(gate),
                VerifyConfig(1024, NoiseConfig.off(), 0))
        rows = size_sweep(*args)
        repeat = size_sweep(*args)
        chi = [r.chi_verified for r in rows]
        quartile = chi[-len(chi) // 4:]
        spread = max(quartile) - min(quartile)
        same = rows == repeat
        ok &= same and chi[-1] > chi[0] and spread < 0.005
        details.append(f"{gate}: size25 {chi[0]:.4f} -> size400 {chi[-1]:.4f}, last-quartile spread "
                       f"{spread:.4f}, deterministic {same}")
    elapsed = time.perf_counter() - t0
    record(8, "dataset-size sweep shape", ok and elapsed <= 1800, "; ".join(details) + f"; {elapsed:.0f} s")


def _cli_pipeline(out, threads):
    common = ["--seed", "3", "--threads", str(threads), "--out-dir", str(out)]
    steps = [
        ["generate", "--gate", "h", "--n", "400", "--noise-off", *common],
        ["train", "--dataset", str(out / "dataset_h.csv"), "--quiet", *common],
        ["optimize", "--gate", "h", "--model", str(out / "model_h.json"), "--verify", "--noise-off",
         *common],
        ["verify", "--gate", "cnot", "--phi", "0.1,0.2,0.3", *common],
        ["generate", "--gate", "cnot", "--n", "50", *common],
        ["study", "--gate", "x", "--sizes", "25:100:25", "--noise-off", "--plot-data", *common],
    ]
    for argv in steps:
        assert main(argv) == 0, argv


def test_criterion_09_cli_determinism(tmp_path):
    runs = {"a": 1, "b": 1, "c": 4}
    for name, threads in runs.items():
        _cli_pipeline(tmp_path / name, threads)
    names = sorted(p.name for p in (tmp_path / "a").iterdir())
    _, mismatch, errors = filecmp.cmpfiles(tmp_path / "a", tmp_path / "b", names, shallow=False)
    _, mismatch_t, errors_t = filecmp.cmpfiles(tmp_path / "a", tmp_path / "c", names, shallow=False)
    bad = mismatch + errors + mismatch_t + errors_t
    record(9, "CLI byte-identical reruns", not bad and len(names) >= 10,
           f"{len(names)} files compared across two --threads 1 runs and a --threads 4 run, "
           f"differences: {bad or 'none'}")


def test_criterion_10_unitarity_and_norm():
    rng = np.random.default_rng(10)
    worst_u, worst_n = 0.0, 0.0
    for _ in range(1000):
        sigma = rng.uniform(10, 60)
        duration = int(rng.integers(int(4 * sigma) + 1, 300))
        shape = "drag" if rng.random() < 0.5 else "gaussian"
        pulses = [PulseWaveform(rng.uniform(0, 1), shape, duration, sigma,
                                rng.uniform(-5, 5) if shape == "drag" else 0.0,
                                rng.uniform(-math.pi, math.pi)) for _ in range(3)]
        scale = rng.uniform(0.5, 4)
        for gen, quad in ((X, Y), *CNOT_GENERATORS):
            worst_u = max(worst_u, unitarity_error(step_unitaries(pulses[0], scale, gen, quad)))
        worst_n = max(worst_n, abs(np.linalg.norm(evolve_single_qubit(pulses[0], scale)) - 1),
                      abs(np.linalg.norm(evolve_two_qubit(pulses, scale)) - 1))
        for spec in (GateSpec("x", pulses[:1], scale), GateSpec("cnot", pulses, scale)):
            worst_n = max(worst_n, abs(math.fsum(exact_distribution(spec).values()) - 1))
    record(10, "unitarity and normalization", worst_u <= 1e-10 and worst_n <= 1e-9,
           f"max unitarity error {worst_u:.1e}, max norm error {worst_n:.1e} over 1000 pulses")
