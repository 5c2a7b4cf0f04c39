"""Command-line entry point: train/eval/reproduce/spectrum/bench/selfcheck.

Configuration precedence is defaults < key=value config file < command-line
flags; unknown config keys are rejected. Every command is deterministic
given (config, seed, dataset bytes).
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import checkpoint, reproduce
from .estimators import FreqCycleForecaster, MFreqCycleForecaster
from .model import VARIANTS
from .train import TrainConfig, bench, evaluate, spectrum_report, train

# Every tunable the CLI exposes, with its default. Flag names are the
# dashed versions of these keys.
DEFAULTS = {
    "data": None,
    "lookback": 96,
    "horizon": 96,
    "cycle_len": 24,
    "seg_len": 6,
    "seg_stride": 6,
    "seg_window": "rect",
    "ffn_hidden": 512,
    "variant": "full",
    "multiscale": False,
    "weekly_lookback": 168,
    "pool_kernel": 24,
    "seed": 1,
    "lr": 0.01,
    "batch": 256,
    "epochs": 30,
    "inst_norm": True,
    "out": "runs",
}

_BOOL_KEYS = {"multiscale", "inst_norm"}
_INT_KEYS = {"lookback", "horizon", "cycle_len", "seg_len", "seg_stride",
             "ffn_hidden", "weekly_lookback", "pool_kernel", "seed", "batch",
             "epochs"}
_FLOAT_KEYS = {"lr"}


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def read_config_file(path: str | Path) -> dict:
    """Flat key=value file; blank lines and # comments allowed."""
    cfg = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in DEFAULTS:
            raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
        if key in _BOOL_KEYS:
            cfg[key] = _parse_bool(value)
        elif key in _INT_KEYS:
            cfg[key] = int(value)
        elif key in _FLOAT_KEYS:
            cfg[key] = float(value)
        else:
            cfg[key] = value
    return cfg


def effective_config(args: argparse.Namespace) -> dict:
    """defaults < config file < flags."""
    cfg = dict(DEFAULTS)
    if getattr(args, "config", None):
        cfg.update(read_config_file(args.config))
    for key in DEFAULTS:
        flag = getattr(args, key, None)
        if flag is not None:
            cfg[key] = flag
    return cfg


def dump_config(cfg: dict, path: Path) -> None:
    lines = [f"{k}={cfg[k]}" for k in sorted(cfg) if cfg[k] is not None]
    path.write_text("\n".join(lines) + "\n")


def _threads() -> int | None:
    raw = os.environ.get("FREQCYCLE_THREADS")
    if raw is None:
        return None
    n = int(raw)
    if n < 1:
        raise ValueError(f"FREQCYCLE_THREADS must be >= 1, got {raw}")
    return n


def _add_common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key=value config file")
    p.add_argument("--data", help="dataset CSV path")
    p.add_argument("--lookback", type=int)
    p.add_argument("--horizon", type=int)
    p.add_argument("--cycle-len", dest="cycle_len", type=int)
    p.add_argument("--seg-len", dest="seg_len", type=int)
    p.add_argument("--seg-stride", dest="seg_stride", type=int)
    p.add_argument("--seg-window", dest="seg_window",
                   choices=("rect", "hann", "hamming"))
    p.add_argument("--ffn-hidden", dest="ffn_hidden", type=int)
    p.add_argument("--variant", choices=VARIANTS)
    p.add_argument("--multiscale", action="store_const", const=True,
                   default=None)
    p.add_argument("--weekly-lookback", dest="weekly_lookback", type=int)
    p.add_argument("--pool-kernel", dest="pool_kernel", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--batch", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--inst-norm", dest="inst_norm", type=_parse_bool,
                   metavar="BOOL")
    p.add_argument("--out", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="freqcycle",
        description="Cycle-aware forecasting with segmented frequency-domain "
                    "residual learning.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("train", "eval", "spectrum", "bench"):
        sp = sub.add_parser(name)
        _add_common_flags(sp)
        if name in ("eval", "spectrum"):
            sp.add_argument("--ckpt", required=(name == "eval"),
                            help="checkpoint file")
        if name == "eval":
            sp.add_argument("--split", choices=("val", "test"), default="test")
    rp = sub.add_parser("reproduce")
    rp.add_argument("table",
                    choices=("table1", "table2", "table3", "table4", "windows"))
    _add_common_flags(rp)
    sub.add_parser("selfcheck")
    return parser


def _require_data(cfg: dict) -> Path:
    if not cfg["data"]:
        raise SystemExit2("no dataset given (use --data)")
    path = Path(cfg["data"])
    if not path.exists():
        raise SystemExit2(f"dataset file not found: {path}")
    return path


class SystemExit2(Exception):
    """Missing-input errors that should exit with status 2."""


def _estimator(cfg: dict):
    common = dict(
        lookback=cfg["lookback"], horizon=cfg["horizon"],
        cycle_len=cfg["cycle_len"], seg_len=cfg["seg_len"],
        seg_stride=cfg["seg_stride"], seg_window=cfg["seg_window"],
        ffn_hidden=cfg["ffn_hidden"], inst_norm=cfg["inst_norm"],
        lr=cfg["lr"], batch_size=cfg["batch"], epochs=cfg["epochs"],
        seed=cfg["seed"],
    )
    if cfg["multiscale"]:
        return MFreqCycleForecaster(
            weekly_lookback=cfg["weekly_lookback"],
            pool_kernel=cfg["pool_kernel"], **common,
        )
    return FreqCycleForecaster(variant=cfg["variant"], **common)


def _prepared(cfg: dict, path: Path):
    lookback = cfg["weekly_lookback"] if cfg["multiscale"] else cfg["lookback"]
    return reproduce.prepare(path, lookback, cfg["horizon"])


def _ckpt_config(cfg: dict, channels: int) -> dict:
    keep = {k: v for k, v in cfg.items() if k not in ("data", "out")}
    keep["channels"] = channels
    return keep


def cmd_train(cfg: dict) -> int:
    path = _require_data(cfg)
    data = _prepared(cfg, path)
    est = _estimator(cfg)
    net = est._build_net(data.channels)
    history = train(net, data.train, data.val,
                    TrainConfig(lr=cfg["lr"], batch_size=cfg["batch"],
                                epochs=cfg["epochs"], seed=cfg["seed"]))
    metrics = evaluate(net, data.test)

    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    checkpoint.save(out / "model.ckpt", _ckpt_config(cfg, data.channels),
                    net.parameters())
    dump_config(cfg, out / "config.txt")
    payload = {
        "dataset": data.name, "L": cfg["lookback"], "H": cfg["horizon"],
        "variant": "multiscale" if cfg["multiscale"] else cfg["variant"],
        "seed": cfg["seed"], "mse": metrics.mse, "mae": metrics.mae,
        "epochs": cfg["epochs"], "best_epoch": history.best_epoch,
    }
    (out / "metrics.json").write_text(json.dumps(payload, indent=2) + "\n")
    with open(out / "history.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "train_mse", "val_mse"])
        for i, (tr, va) in enumerate(zip(history.train_mse, history.val_mse), 1):
            writer.writerow([i, f"{tr:.10g}", f"{va:.10g}"])
    print(json.dumps(payload))
    return 0


def _net_from_checkpoint(ckpt_path: str | Path):
    saved_cfg, values = checkpoint.load(ckpt_path)
    cfg = dict(DEFAULTS)
    cfg.update({k: v for k, v in saved_cfg.items() if k in cfg})
    est = _estimator(cfg)
    net = est._build_net(saved_cfg["channels"])
    checkpoint.restore_into(net, values)
    return cfg, net


def cmd_eval(args_cfg: dict, ckpt: str, split: str) -> int:
    saved_cfg, net = _net_from_checkpoint(ckpt)
    for key in ("lookback", "horizon"):
        if args_cfg.get(key) is not None and args_cfg[key] != saved_cfg[key]:
            raise ValueError(
                f"{key} mismatch: checkpoint has {saved_cfg[key]}, "
                f"command line asks for {args_cfg[key]}"
            )
    cfg = dict(saved_cfg)
    cfg["data"] = args_cfg["data"]
    path = _require_data(cfg)
    data = _prepared(cfg, path)
    metrics = evaluate(net, getattr(data, split))
    payload = {"dataset": data.name, "split": split,
               "mse": metrics.mse, "mae": metrics.mae}
    print(json.dumps(payload))
    return 0


def cmd_spectrum(cfg: dict, ckpt: str | None) -> int:
    path = _require_data(cfg)
    if ckpt:
        saved_cfg, net = _net_from_checkpoint(ckpt)
        cfg = {**saved_cfg, "data": cfg["data"], "out": cfg["out"]}
        data = _prepared(cfg, path)
    else:
        data = _prepared(cfg, path)
        est = _estimator(cfg)
        net = est._build_net(data.channels)
        train(net, data.train, data.val,
              TrainConfig(lr=cfg["lr"], batch_size=cfg["batch"],
                          epochs=cfg["epochs"], seed=cfg["seed"]))
    rows = spectrum_report(net, data.test)
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "spectrum.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bin", "mean_amp_before", "mean_amp_after", "ratio"])
        for row in rows:
            writer.writerow([int(row[0]), f"{row[1]:.10g}", f"{row[2]:.10g}",
                             f"{row[3]:.10g}"])
    print(f"wrote {out / 'spectrum.csv'} ({len(rows)} bins)")
    return 0


def cmd_bench(cfg: dict) -> int:
    path = _require_data(cfg)
    data = _prepared(cfg, path)
    est = _estimator(cfg)
    net = est._build_net(data.channels)
    report = bench(net, data.train,
                   TrainConfig(lr=cfg["lr"], batch_size=cfg["batch"],
                               epochs=1, seed=cfg["seed"]))
    print(json.dumps(report))
    return 0


def cmd_reproduce(cfg: dict, table: str) -> int:
    epochs = cfg["epochs"]
    explicit = Path(cfg["data"]) if cfg["data"] else None
    if explicit is not None and not explicit.exists():
        raise SystemExit2(f"dataset file not found: {explicit}")

    def locate(name: str) -> Path | None:
        if explicit is not None:
            return explicit
        return reproduce.find_dataset(name)

    if table == "table1":
        datasets = {n: locate(n) for n in ("etth1", "etth2", "ettm1", "ettm2")}
        report = reproduce.report_table1(datasets, epochs=epochs)
    elif table == "table2":
        report = reproduce.report_table2(locate("ettm2"), epochs=epochs)
    elif table == "table3":
        report = reproduce.report_table3(locate("etth1"), epochs=epochs)
    elif table == "table4":
        report = reproduce.report_table4(locate("etth2"), epochs=epochs)
    else:
        report = reproduce.report_windows(locate("etth1"), epochs=epochs)
    print(report)
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    (out / f"report_{table}.md").write_text(report + "\n")
    return 0


def cmd_selfcheck() -> int:
    from .selfcheck import run_all

    results = run_all()
    failed = []
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"{r.name:45s} max_error={r.max_error:.3e} "
              f"budget={r.budget:.0e}  {status}")
        if not r.passed:
            failed.append(r.name)
    if failed:
        print("failed suites: " + ", ".join(failed), file=sys.stderr)
        return 1
    return 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        _threads()  # validate early; the engine itself is single-process
        if args.command == "selfcheck":
            return cmd_selfcheck()
        cfg = effective_config(args)
        if args.command == "train":
            return cmd_train(cfg)
        if args.command == "eval":
            flags = {k: getattr(args, k, None) for k in ("lookback", "horizon")}
            return cmd_eval({**cfg, **flags, "data": cfg["data"]},
                            args.ckpt, args.split)
        if args.command == "spectrum":
            return cmd_spectrum(cfg, args.ckpt)
        if args.command == "bench":
            return cmd_bench(cfg)
        if args.command == "reproduce":
            return cmd_reproduce(cfg, args.table)
        raise AssertionError(args.command)
    except SystemExit2 as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, FloatingPointError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
