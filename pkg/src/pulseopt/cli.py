"""Command-line pipeline: generate -> train -> optimize -> verify, plus the size study.

Every stage reads and writes files, so stages can be rerun independently.
Exit codes: 0 on success, 2 for usage errors, 1 for runtime failures.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import os
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from .dataset import DatasetError, generate_dataset, load_dataset, save_dataset, sidecar_path
from .gates import Gate
from .mlp import TrainConfig, load_model, predict, save_model, train
from .pulses import NoiseConfig, SimConfig
from .search import ArityError, SearchConfig, optimize_amplitude, verify
from .study import (VerifyConfig, loss_curve_correlation, size_sweep, write_config_echo,
                    write_plot_data, write_sweep_csv)


class UsageError(Exception):
    pass


# -- argument parsing ---------------------------------------------------------

def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _probability(text: str) -> float:
    v = float(text)
    if not 0.0 <= v <= 1.0:
        raise argparse.ArgumentTypeError(f"must lie in [0, 1], got {v}")
    return v


def _gate(text: str) -> str:
    try:
        return Gate.parse(text).value
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def parse_sizes(text: str) -> list[int]:
    """``"25:400:25"`` (start:stop:step, inclusive) or ``"25,50,100"``."""
    try:
        if ":" in text:
            start, stop, step = (int(p) for p in text.split(":"))
            if step < 1:
                raise ValueError
            sizes = list(range(start, stop + 1, step))
        else:
            sizes = [int(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad size list {text!r}") from None
    if not sizes or min(sizes) < 2:
        raise argparse.ArgumentTypeError("sizes must be >= 2")
    return sizes


def _phi(text: str) -> list[float]:
    try:
        values = [float(p) for p in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad amplitude list {text!r}") from None
    if not all(0.0 <= v <= 1.0 for v in values):
        raise argparse.ArgumentTypeError("amplitudes must lie in [0, 1]")
    return values


def _common(gate_required: bool) -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("shared options")
    g.add_argument("--gate", type=_gate, required=gate_required, default=None,
                   help="gate to optimize: h, x or cnot")
    g.add_argument("--seed", type=int, default=0, help="master seed (default: %(default)s)")
    g.add_argument("--out-dir", type=Path, default=Path("."),
                   help="directory for output files (default: %(default)s)")
    g.add_argument("--json", action="store_true", help="print a JSON summary on stdout")
    g.add_argument("--threads", type=_positive_int, default=os.cpu_count() or 1,
                   help="worker threads; 1 forces the serial path (default: %(default)s)")
    g.add_argument("--config", type=Path, default=None,
                   help="JSON config file; command-line flags take precedence")
    return p


def _noise_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("noise model")
    g.add_argument("--depolarizing", type=_probability, default=NoiseConfig.depolarizing_prob,
                   help="depolarizing probability per gate (default: %(default)s)")
    g.add_argument("--readout", type=_probability, default=NoiseConfig.readout_flip_prob,
                   help="readout bit-flip probability per qubit (default: %(default)s)")
    g.add_argument("--noise-off", action="store_true", help="disable both noise channels")


def _sim_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("pulse model")
    g.add_argument("--rabi-scale", type=float, default=SimConfig.rabi_scale,
                   help="full Rabi periods spanned by amplitudes 0..1 (default: %(default)s)")
    g.add_argument("--duration", type=_positive_int, default=SimConfig.duration,
                   help="pulse duration in samples (default: %(default)s)")
    g.add_argument("--sigma", type=float, default=SimConfig.sigma,
                   help="Gaussian width in samples (default: %(default)s)")
    g.add_argument("--drag-beta", type=float, default=SimConfig.drag_beta,
                   help="DRAG coefficient of the CNOT pulses (default: %(default)s)")


def _train_args(p: argparse.ArgumentParser) -> None:
    d = TrainConfig()
    g = p.add_argument_group("training")
    g.add_argument("--epochs", type=_positive_int, default=d.epochs, help="passes over the training split")
    g.add_argument("--lr", type=float, default=d.learning_rate,
                   help="Adam learning rate (default: %(default)s)")
    g.add_argument("--batch-size", type=_positive_int, default=d.batch_size,
                   help="mini-batch size, clamped to the training split")
    g.add_argument("--val-fraction", type=float, default=d.val_fraction,
                   help="validation share of the dataset (default: %(default)s)")


def _search_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("two-stage search (defaults depend on the gate)")
    g.add_argument("--coarse-step", type=float, default=None,
                   help="stage-one grid step (default: 1e-3, or 0.02 for cnot)")
    g.add_argument("--epsilon", type=float, default=None,
                   help="half-width of the stage-two window (default: 1e-3, or 0.02 for cnot)")
    g.add_argument("--fine-step", type=float, default=None,
                   help="stage-two grid step (default: 1e-6, or 1e-3 for cnot)")


def _figures_arg(p: argparse.ArgumentParser) -> None:
    p.add_argument("--figures", action="store_true", help="also render PNG figures")


class _DefaultsFormatter(argparse.ArgumentDefaultsHelpFormatter):
    def _get_help_string(self, action):
        text = action.help or ""
        if "default" in text or action.default in (None, False):
            return text
        return super()._get_help_string(action)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pulseopt",
        description="Neural-surrogate optimization of pulse amplitudes for H, X and CNOT gates.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    fmt = _DefaultsFormatter

    p = sub.add_parser("generate", parents=[_common(True)], formatter_class=fmt,
                       help="simulate random amplitudes and write an amplitude/fidelity dataset")
    p.add_argument("--n", type=_positive_int, default=400, help="number of records")
    p.add_argument("--shots", type=_positive_int, default=1024, help="shots per record")
    p.add_argument("--output", type=Path, default=None,
                   help="dataset CSV path (default: OUT_DIR/dataset_GATE.csv)")
    _noise_args(p)
    _sim_args(p)
    _figures_arg(p)

    p = sub.add_parser("train", parents=[_common(False)], formatter_class=fmt,
                       help="train the fidelity surrogate on a dataset")
    p.add_argument("--dataset", type=Path, required=True, help="dataset CSV written by generate")
    p.add_argument("--quiet", action="store_true", help="suppress per-epoch logging")
    _train_args(p)
    _figures_arg(p)

    p = sub.add_parser("optimize", parents=[_common(True)], formatter_class=fmt,
                       help="two-stage amplitude search over a trained surrogate")
    p.add_argument("--model", type=Path, required=True, help="model JSON written by train")
    p.add_argument("--verify", action="store_true", help="re-simulate the selected amplitude")
    p.add_argument("--shots", type=_positive_int, default=1024, help="shots for verification")
    _search_args(p)
    _noise_args(p)
    _sim_args(p)

    p = sub.add_parser("verify", parents=[_common(True)], formatter_class=fmt,
                       help="simulate given amplitudes and report the fidelity")
    p.add_argument("--phi", type=_phi, required=True, help="amplitude(s), comma separated")
    p.add_argument("--shots", type=_positive_int, default=1024, help="shots")
    _noise_args(p)
    _sim_args(p)

    p = sub.add_parser("study", parents=[_common(True)], formatter_class=fmt,
                       help="dataset-size sweep: verified fidelity and loss-curve correlation")
    p.add_argument("--sizes", type=parse_sizes, default="25:400:25",
                   help="start:stop:step (inclusive) or comma list")
    p.add_argument("--dataset", type=Path, default=None,
                   help="base dataset CSV (default: generate max(sizes) records)")
    p.add_argument("--shots", type=_positive_int, default=1024,
                   help="shots for generation and verification")
    p.add_argument("--shuffle-seed", type=int, default=None,
                   help="shuffle the base dataset before taking prefixes")
    p.add_argument("--plot-data", action="store_true", help="write two-column .dat files")
    _train_args(p)
    _search_args(p)
    _noise_args(p)
    _sim_args(p)
    _figures_arg(p)
    return parser


# -- config file --------------------------------------------------------------

_CONFIG_ALIASES = {
    "depolarizing_prob": "depolarizing",
    "readout_flip_prob": "readout",
    "learning_rate": "lr",
    "rabi_scale": "rabi_scale",
}
_CONFIG_SECTIONS = ("dataset", "train", "search", "verify", "sim", "noise", "output")


def _flatten_config(raw: dict) -> dict:
    flat = {}
    for key, value in raw.items():
        key = key.replace("-", "_")
        if key in _CONFIG_SECTIONS and isinstance(value, dict):
            flat.update(_flatten_config(value))
        else:
            flat[_CONFIG_ALIASES.get(key, key)] = value
    return flat


def _subparsers(parser: argparse.ArgumentParser) -> dict[str, argparse.ArgumentParser]:
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return dict(action.choices)
    return {}


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> None:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", type=Path)
    known, _ = pre.parse_known_args(argv)
    if known.config is None:
        return
    try:
        raw = json.loads(known.config.read_text())
    except FileNotFoundError:
        parser.error(f"config file not found: {known.config}")
    except json.JSONDecodeError as exc:
        parser.error(f"config file {known.config} is not valid JSON: {exc}")
    if not isinstance(raw, dict):
        parser.error("config file must hold a JSON object")
    flat = _flatten_config(raw)
    subs = _subparsers(parser)
    known_keys = {a.dest for sp in subs.values() for a in sp._actions} - {"help", "config"}
    unknown = sorted(set(flat) - known_keys)
    if unknown:
        parser.error(f"unknown config keys: {', '.join(unknown)}")
    for sp in subs.values():
        dests = {a.dest: a for a in sp._actions}
        values = {}
        for k, v in flat.items():
            if k not in dests:
                continue
            action = dests[k]
            if isinstance(v, (str, int, float)) and action.type is not None and not isinstance(v, bool):
                try:
                    v = action.type(str(v))
                except (argparse.ArgumentTypeError, ValueError) as exc:
                    parser.error(f"config key {k}: {exc}")
            values[k] = v
            action.required = False
        sp.set_defaults(**values)


# -- helpers ------------------------------------------------------------------

def _noise(args) -> NoiseConfig:
    if args.noise_off:
        return NoiseConfig.off()
    return NoiseConfig(args.depolarizing, args.readout)


def _sim(args) -> SimConfig:
    return SimConfig(args.rabi_scale, args.duration, args.sigma, args.drag_beta)


def _train_cfg(args) -> TrainConfig:
    try:
        return TrainConfig(learning_rate=args.lr, epochs=args.epochs, batch_size=args.batch_size,
                           seed=args.seed, val_fraction=args.val_fraction)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _search_cfg(args, gate: Gate) -> SearchConfig:
    try:
        return SearchConfig.for_gate(gate, coarse_step=args.coarse_step, epsilon=args.epsilon,
                                     fine_step=args.fine_step)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _load_dataset(path: Path):
    if not path.exists():
        raise UsageError(f"dataset not found: {path}")
    return load_dataset(path)


@contextlib.contextmanager
def _outputs():
    """Collects output paths; removes every one of them if the command fails."""
    written: list[Path] = []
    try:
        yield written
    except BaseException:
        for p in written:
            with contextlib.suppress(OSError):
                p.unlink()
        raise


def _emit(args, summary: dict, text: str) -> None:
    if args.json:
        print(json.dumps(summary, sort_keys=True))
    else:
        print(text)


def _dump(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _loss_csv(path: Path, train_loss, val_loss) -> None:
    lines = ["epoch,train_loss,val_loss\n"]
    lines += [f"{i},{a!r},{b!r}\n" for i, (a, b) in enumerate(zip(train_loss, val_loss), start=1)]
    path.write_text("".join(lines))


# -- commands -----------------------------------------------------------------

def cmd_generate(args) -> int:
    gate = Gate.parse(args.gate)
    out = args.output or args.out_dir / f"dataset_{gate.value}.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    with _outputs() as written:
        written += [out, sidecar_path(out)]
        d = generate_dataset(gate, args.n, args.shots, _noise(args), args.seed, _sim(args),
                             threads=args.threads)
        save_dataset(d, out)
        if args.figures and gate.arity == 1:
            from .plotting import plot_landscape
            png = out.with_suffix(".png")
            written.append(png)
            plot_landscape(d.amplitudes, d.chi, png, gate=gate.value)
    summary = {"command": "generate", "gate": gate.value, "n": len(d), "dataset": str(out),
               "mean_chi": float(np.mean(d.chi)), "max_chi": float(np.max(d.chi))}
    _emit(args, summary, f"wrote {len(d)} records to {out} "
                         f"(mean chi {summary['mean_chi']:.6f}, max chi {summary['max_chi']:.6f})")
    return 0


def cmd_train(args) -> int:
    d = _load_dataset(args.dataset)
    if args.gate is not None and Gate.parse(args.gate).arity != d.gate.arity:
        raise UsageError(f"dataset {args.dataset} holds {d.gate.arity}-amplitude records "
                         f"but --gate {args.gate} needs {Gate.parse(args.gate).arity}")
    gate = Gate.parse(args.gate) if args.gate is not None else d.gate
    cfg = _train_cfg(args)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    model_path = args.out_dir / f"model_{gate.value}.json"
    loss_path = args.out_dir / f"loss_{gate.value}.csv"
    log = None if (args.quiet or args.json) else (
        lambda e, tr, va: print(f"epoch {e:3d}  train {tr:.6e}  val {va:.6e}", file=sys.stderr))
    with _outputs() as written:
        written += [model_path, loss_path]
        report = train(d, cfg, callback=log)
        save_model(report.final_model, model_path)
        _loss_csv(loss_path, report.train_loss, report.val_loss)
        if args.figures:
            from .plotting import plot_landscape, plot_loss_curves
            written.append(loss_path.with_suffix(".png"))
            plot_loss_curves(report.train_loss, report.val_loss, loss_path.with_suffix(".png"))
            if gate.arity == 1:
                png = model_path.with_suffix(".png")
                written.append(png)
                plot_landscape(d.amplitudes, d.chi, png,
                               surrogate=lambda x: predict(report.final_model, x), gate=gate.value)
    rho = loss_curve_correlation(report) if cfg.epochs >= 2 else None
    summary = {"command": "train", "gate": gate.value, "model": str(model_path),
               "loss_curve": str(loss_path), "final_train_loss": report.train_loss[-1],
               "final_val_loss": report.val_loss[-1], "spearman_rho": rho}
    _emit(args, summary, f"wrote {model_path} and {loss_path} "
                         f"(train {report.train_loss[-1]:.3e}, val {report.val_loss[-1]:.3e})")
    return 0


def cmd_optimize(args) -> int:
    gate = Gate.parse(args.gate)
    if not args.model.exists():
        raise UsageError(f"model not found: {args.model}")
    model = load_model(args.model)
    cfg = _search_cfg(args, gate)
    if model.input_dim != cfg.arity:
        raise UsageError(f"model {args.model} takes {model.input_dim} amplitude(s); "
                         f"gate {gate.value} search needs {cfg.arity}")
    result = optimize_amplitude(model, cfg, threads=args.threads)
    if args.verify:
        noise = _noise(args)
        result.chi_verified = verify(result.phi_star, gate, args.shots, noise, args.seed, _sim(args))
        result.verify_meta = {"shots": args.shots, "seed": args.seed, "noise": asdict(noise)}
    args.out_dir.mkdir(parents=True, exist_ok=True)
    out = args.out_dir / f"result_{gate.value}.json"
    payload = {"gate": gate.value, **result.to_dict()}
    with _outputs() as written:
        written.append(out)
        _dump(out, payload)
    text = f"phi* = {list(result.phi_star)}  predicted chi = {result.chi_hat_star:.6f}"
    if result.chi_verified is not None:
        text += f"  verified chi = {result.chi_verified:.6f}"
    _emit(args, {"command": "optimize", "result": str(out), **payload}, text)
    return 0


def cmd_verify(args) -> int:
    gate = Gate.parse(args.gate)
    if len(args.phi) != gate.arity:
        raise UsageError(f"gate {gate.value} takes {gate.arity} amplitude(s), got {len(args.phi)}")
    noise = _noise(args)
    chi = verify(args.phi, gate, args.shots, noise, args.seed, _sim(args))
    args.out_dir.mkdir(parents=True, exist_ok=True)
    out = args.out_dir / f"verify_{gate.value}.json"
    payload = {"gate": gate.value, "phi": args.phi, "chi_verified": chi, "shots": args.shots,
               "seed": args.seed, "noise": asdict(noise)}
    with _outputs() as written:
        written.append(out)
        _dump(out, payload)
    _emit(args, {"command": "verify", "result": str(out), **payload},
          f"phi = {args.phi}  verified chi = {chi:.6f}")
    return 0


def cmd_study(args) -> int:
    gate = Gate.parse(args.gate)
    noise = _noise(args)
    if args.dataset is not None:
        base = _load_dataset(args.dataset)
        if base.gate.arity != gate.arity:
            raise UsageError(f"dataset {args.dataset} does not match gate {gate.value}")
    else:
        base = generate_dataset(gate, max(args.sizes), args.shots, noise, args.seed, _sim(args),
                                threads=args.threads)
    if max(args.sizes) > len(base):
        raise UsageError(f"size {max(args.sizes)} exceeds the base dataset ({len(base)} records)")
    train_cfg = _train_cfg(args)
    search_cfg = _search_cfg(args, gate)
    verify_cfg = VerifyConfig(args.shots, noise, args.seed)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    stem = args.out_dir / f"sweep_{gate.value}"
    csv_path = stem.with_suffix(".csv")
    with _outputs() as written:
        written += [csv_path, stem.with_suffix(".json")]
        rows = size_sweep(base, args.sizes, train_cfg, search_cfg, verify_cfg,
                          shuffle_seed=args.shuffle_seed, threads=args.threads)
        write_sweep_csv(rows, csv_path)
        write_config_echo(stem.with_suffix(".json"), gate=gate.value, sizes=args.sizes,
                          base_dataset=base.metadata(), train=train_cfg, search=search_cfg,
                          verify=verify_cfg, shuffle_seed=args.shuffle_seed)
        if args.plot_data:
            written += [stem.with_name(stem.name + s) for s in ("_fidelity.dat", "_spearman.dat")]
            write_plot_data(rows, stem)
        if args.figures:
            from .plotting import plot_size_sweep
            written += [stem.with_name(stem.name + s) for s in ("_fidelity.png", "_spearman.png")]
            plot_size_sweep({gate.value: rows}, stem)
    summary = {"command": "study", "gate": gate.value, "sweep": str(csv_path),
               "rows": [{"size": r.dataset_size, "chi_verified": r.chi_verified,
                         "spearman_rho": r.spearman_rho} for r in rows]}
    text = "\n".join(f"size {r.dataset_size:4d}  chi {r.chi_verified:.6f}  rho {r.spearman_rho:+.4f}"
                     for r in rows)
    _emit(args, summary, text + f"\nwrote {csv_path}")
    return 0


COMMANDS = {
    "generate": cmd_generate,
    "train": cmd_train,
    "optimize": cmd_optimize,
    "verify": cmd_verify,
    "study": cmd_study,
}


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config(parser, argv)
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse: 2 on usage errors, 0 after --help
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ArityError, DatasetError) as exc:
        print(f"pulseopt {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        print(f"pulseopt {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
