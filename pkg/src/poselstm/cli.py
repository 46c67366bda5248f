"""Command-line entry point: generate, train, eval, predict, serve.

Every subcommand resolves its configuration as defaults, overridden by an
optional JSON config file (--config), overridden by explicit flags, and
prints the fully resolved config before doing any work. Exit codes: 0 on
success, 2 for usage or configuration errors, 1 for runtime failures.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Optional

import numpy as np

from .landmarks import (
    CLASS_REGISTRY,
    FRAME_FEATURES,
    load_landmark_file,
    save_landmark_file,
)
from .evaluation import evaluate, render_report
from .model import ModelConfig, forward, load_model, save_model
from .serving import DEFAULT_WINDOW_SIZE, serve
from .synthgen import SynthSpec, generate
from .training import TrainConfig, train


class UsageError(Exception):
    """Bad flag/config combinations; maps to exit code 2."""


GENERATE_DEFAULTS = {
    "counts": 120,
    "min_len": 32,
    "max_len": 32,
    "noise_sigma": 0.015,
    "dropout_prob": 0.02,
    "fps": 24.0,
    "seed": 0,
}

TRAIN_DEFAULTS = {
    "lstm_units": (64, 64),
    "max_seq_len": 32,
    "pad_value": 0.0,
    "batch_size": 32,
    "epochs": 50,
    "learning_rate": 1e-4,
    "rmsprop_rho": 0.9,
    "rmsprop_epsilon": 1e-7,
    "recurrent_dropout": 0.3,
    "val_fraction": 0.2,
    "seed": 0,
    "shuffle_each_epoch": True,
}

SERVE_DEFAULTS = {
    "listen": "127.0.0.1:8765",
    "window": DEFAULT_WINDOW_SIZE,
    "max_seq_len": None,
    "log": None,
}


def _parse_int_tuple(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(part) for part in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _parse_counts(text: str):
    values = _parse_int_tuple(text)
    return values[0] if len(values) == 1 else values


def _parse_bool(text: str) -> bool:
    lowered = text.lower()
    if lowered in ("true", "1", "yes"):
        return True
    if lowered in ("false", "0", "no"):
        return False
    raise argparse.ArgumentTypeError(f"expected true or false, got {text!r}")


def _resolve_config(args: argparse.Namespace, defaults: dict) -> dict:
    """defaults <- config file <- explicit flags; unknown file keys are errors."""
    cfg = dict(defaults)
    config_path = getattr(args, "config", None)
    if config_path:
        try:
            with open(config_path, "r", encoding="utf-8") as fh:
                file_cfg = json.load(fh)
        except OSError as e:
            raise UsageError(f"cannot read config file: {e}")
        except json.JSONDecodeError as e:
            raise UsageError(f"config file is not valid JSON: {e}")
        if not isinstance(file_cfg, dict):
            raise UsageError("config file must hold a JSON object")
        unknown = sorted(set(file_cfg) - set(defaults))
        if unknown:
            raise UsageError(f"unknown config keys {unknown}; known: {sorted(defaults)}")
        for key, value in file_cfg.items():
            cfg[key] = tuple(value) if isinstance(value, list) else value
    for key in defaults:
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = value
    return cfg


def _print_effective(command: str, cfg: dict, **extra) -> None:
    shown = {"command": command, **cfg, **extra}
    shown = {k: (list(v) if isinstance(v, tuple) else v) for k, v in shown.items()}
    print("effective config: " + json.dumps(shown, sort_keys=True))


def cmd_generate(args: argparse.Namespace) -> int:
    cfg = _resolve_config(args, GENERATE_DEFAULTS)
    _print_effective("generate", cfg, out=args.out)
    try:
        spec = SynthSpec(
            counts=cfg["counts"], min_len=int(cfg["min_len"]), max_len=int(cfg["max_len"]),
            noise_sigma=float(cfg["noise_sigma"]), dropout_prob=float(cfg["dropout_prob"]),
            fps=float(cfg["fps"]), seed=int(cfg["seed"]),
        )
    except ValueError as e:
        raise UsageError(str(e))
    dataset = generate(spec)
    save_landmark_file(args.out, dataset)
    print(f"wrote {len(dataset)} sequences ({len(CLASS_REGISTRY)} classes) to {args.out}")
    return 0


def _report_dir_for(args: argparse.Namespace, fallback: str) -> str:
    report_dir = args.report_dir if args.report_dir else fallback
    os.makedirs(report_dir, exist_ok=True)
    return report_dir


def cmd_train(args: argparse.Namespace) -> int:
    from .reporting import render_history_figure, write_history_csv

    cfg = _resolve_config(args, TRAIN_DEFAULTS)
    _print_effective("train", cfg, data=args.data, out=args.out)
    dataset = load_landmark_file(args.data)
    try:
        model_config = ModelConfig(
            input_dim=FRAME_FEATURES,
            lstm_units=tuple(cfg["lstm_units"]),
            num_classes=len(dataset.class_registry),
            max_seq_len=int(cfg["max_seq_len"]),
            pad_value=float(cfg["pad_value"]),
        )
        train_config = TrainConfig(
            batch_size=int(cfg["batch_size"]), epochs=int(cfg["epochs"]),
            learning_rate=float(cfg["learning_rate"]), rmsprop_rho=float(cfg["rmsprop_rho"]),
            rmsprop_epsilon=float(cfg["rmsprop_epsilon"]),
            recurrent_dropout=float(cfg["recurrent_dropout"]),
            val_fraction=float(cfg["val_fraction"]), seed=int(cfg["seed"]),
            shuffle_each_epoch=bool(cfg["shuffle_each_epoch"]),
        )
    except ValueError as e:
        raise UsageError(str(e))
    sequences = dataset.to_sequences(model_config.max_seq_len)

    def progress(epoch, rec):
        print(f"epoch {epoch + 1}/{train_config.epochs}  "
              f"train_loss={rec.train_loss:.4f} train_acc={rec.train_acc:.4f}  "
              f"val_loss={rec.val_loss:.4f} val_acc={rec.val_acc:.4f}")

    params, history = train(sequences, model_config, train_config, progress=progress)
    save_model(params, model_config, args.out, class_names=dataset.class_registry)
    report_dir = _report_dir_for(args, os.path.dirname(os.path.abspath(args.out)))
    history_csv = os.path.join(report_dir, "history.csv")
    history_png = os.path.join(report_dir, "history.png")
    write_history_csv(history, history_csv)
    render_history_figure(history, history_png)
    final = history.records[-1]
    print(f"saved model to {args.out}")
    print(f"wrote {history_csv} and {history_png}")
    print(f"final val_acc={final.val_acc:.4f}")
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    from .reporting import render_confusion_figure, write_confusion_csv, write_eval_json

    _print_effective("eval", {}, data=args.data, model=args.model, format=args.format)
    dataset = load_landmark_file(args.data)
    loaded = load_model(args.model)
    if tuple(dataset.class_registry) != loaded.class_names:
        raise ValueError(
            f"dataset classes {list(dataset.class_registry)} do not match the "
            f"model's {list(loaded.class_names)}")
    sequences = dataset.to_sequences(loaded.config.max_seq_len)
    report = evaluate(sequences, loaded.params, loaded.config, class_names=loaded.class_names)
    print(render_report(report, fmt=args.format), end="")
    report_dir = _report_dir_for(args, ".")
    confusion_csv = os.path.join(report_dir, "confusion.csv")
    eval_json = os.path.join(report_dir, "eval.json")
    confusion_png = os.path.join(report_dir, "confusion.png")
    write_confusion_csv(report, confusion_csv)
    write_eval_json(report, eval_json)
    render_confusion_figure(report, confusion_png)
    print(f"wrote {confusion_csv}, {eval_json}, {confusion_png}")
    return 0


def cmd_predict(args: argparse.Namespace) -> int:
    _print_effective("predict", {}, data=args.data, model=args.model,
                     out=args.out or "-")
    dataset = load_landmark_file(args.data)
    loaded = load_model(args.model)
    sequences = dataset.to_sequences(loaded.config.max_seq_len)
    lines = ["sequence_id,label," + ",".join(f"p_{n}" for n in loaded.class_names)]
    for record, seq in zip(dataset.records, sequences):
        probs, _ = forward(seq, loaded.params, loaded.config, mode="infer",
                           class_names=loaded.class_names)
        row = [record.sequence_id, probs.argmax_label.name]
        row += [f"{float(np.float32(p)):.6f}" for p in probs.probs]
        lines.append(",".join(row))
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
        print(f"wrote {len(sequences)} predictions to {args.out}")
    else:
        print(text, end="")
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    cfg = _resolve_config(args, SERVE_DEFAULTS)
    _print_effective("serve", cfg, model=args.model)
    serve(
        listen=cfg["listen"], model_path=args.model,
        window_size=int(cfg["window"]),
        max_seq_len=int(cfg["max_seq_len"]) if cfg["max_seq_len"] is not None else None,
        log_path=cfg["log"],
    )
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="poselstm",
        description="Exercise classification from 33-point body landmarks: "
                    "synthetic data, LSTM training, evaluation, and serving.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a synthetic labeled landmark file")
    p.add_argument("--out", required=True, help="output landmark file")
    p.add_argument("--config", help="JSON config file (flags override it)")
    p.add_argument("--counts", type=_parse_counts,
                   help="sequences per class: one int, or one per class comma-separated")
    p.add_argument("--min-len", dest="min_len", type=int, help="minimum frames per sequence")
    p.add_argument("--max-len", dest="max_len", type=int, help="maximum frames per sequence")
    p.add_argument("--noise-sigma", dest="noise_sigma", type=float,
                   help="Gaussian jitter on all coordinates")
    p.add_argument("--dropout-prob", dest="dropout_prob", type=float,
                   help="probability a frame is lost entirely")
    p.add_argument("--fps", type=float, help="frame rate recorded in the file header")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("train", help="train a model on a landmark file")
    p.add_argument("--data", required=True, help="labeled landmark file")
    p.add_argument("--out", required=True, help="output model file")
    p.add_argument("--config", help="JSON config file (flags override it)")
    p.add_argument("--report-dir", dest="report_dir",
                   help="where history.csv/history.png go (default: model directory)")
    p.add_argument("--lstm-units", dest="lstm_units", type=_parse_int_tuple,
                   help="comma-separated layer widths, e.g. 64,64")
    p.add_argument("--max-seq-len", dest="max_seq_len", type=int)
    p.add_argument("--pad-value", dest="pad_value", type=float)
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--learning-rate", dest="learning_rate", type=float)
    p.add_argument("--rmsprop-rho", dest="rmsprop_rho", type=float)
    p.add_argument("--rmsprop-epsilon", dest="rmsprop_epsilon", type=float)
    p.add_argument("--recurrent-dropout", dest="recurrent_dropout", type=float)
    p.add_argument("--val-fraction", dest="val_fraction", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--shuffle-each-epoch", dest="shuffle_each_epoch", type=_parse_bool,
                   metavar="{true,false}")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a model on a labeled landmark file")
    p.add_argument("--data", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--report-dir", dest="report_dir",
                   help="where confusion.csv/eval.json/confusion.png go (default: .)")
    p.add_argument("--format", choices=("table", "json"), default="table",
                   help="stdout report format")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("predict", help="per-sequence predictions for a landmark file")
    p.add_argument("--data", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--out", help="output CSV (default: stdout)")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("serve", help="run the WebSocket classification service")
    p.add_argument("--model", required=True)
    p.add_argument("--config", help="JSON config file (flags override it)")
    p.add_argument("--listen", help="host:port (default 127.0.0.1:8765)")
    p.add_argument("--window", type=int, help="sliding window size (default 8)")
    p.add_argument("--max-seq-len", dest="max_seq_len", type=int,
                   help="must match the model file")
    p.add_argument("--log", help="append-only JSONL classification log")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
