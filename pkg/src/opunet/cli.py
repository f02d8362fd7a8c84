"""Command-line entry point tying the pipeline together.

Subcommands: synth (generate a synthetic dataset), train, eval, predict
(PGM mask export), gradcheck (finite-difference verification), info
(architecture summary).

Exit codes: 0 success, 1 usage/config error, 2 data/format error,
3 numerical abort (non-finite values), 4 gradient check failure.

Run configs are strict JSON — unknown keys anywhere are rejected, since a
silently ignored typo in a hyperparameter is the main reproducibility
hazard. All paths inside a config resolve relative to the config file.

Schema (every key optional unless noted):
  {
    "seed": 0,
    "model": {"in_channels": 3, "encoder_widths": [12,24,48,96,192],
              "q_order": 3, "encoder_kernel": 5, "decoder_kernel": 5,
              "last_decoder_kernel": 6, "stride": 2, "input_size": 256},
    "train": {"batch_size": 8, "max_epochs": 1000, "patience": 20,
              "lr": 1e-5, "threshold": 0.5},
    "data": {"train_manifest": "train.txt",   (required by `train`)
             "val_manifest": "val.txt"},      (required by `train`)
    "out": {"checkpoint": "checkpoint.opun", "log": "train.log"}
  }
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

import numpy as np

from . import data as data_mod
from . import gradcheck as gradcheck_mod
from . import metrics, optim, pgm
from .errors import ConfigError, FormatError, NumericsError
from .model import OpUNet, OpUNetConfig, load_checkpoint, save_checkpoint
from .tensor import Tensor

TRAIN_KEYS = ("batch_size", "max_epochs", "patience", "lr", "threshold")


@dataclasses.dataclass
class RunConfig:
    seed: int
    model: OpUNetConfig
    train: optim.TrainConfig
    train_manifest: str | None
    val_manifest: str | None
    checkpoint: str
    log: str


def _section(doc, name, allowed):
    section = doc.get(name, {})
    if not isinstance(section, dict):
        raise ConfigError(f"'{name}' must be a JSON object")
    for k in section:
        if k not in allowed:
            raise ConfigError(f"unknown key '{k}' in '{name}' section")
    return section


def load_run_config(path) -> RunConfig:
    try:
        with open(path) as f:
            doc = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: invalid JSON: {e}") from e
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: run config must be a JSON object")
    for k in doc:
        if k not in ("seed", "model", "train", "data", "out"):
            raise ConfigError(f"unknown key '{k}' in run config")

    seed = doc.get("seed", 0)
    if not isinstance(seed, int):
        raise ConfigError(f"seed must be an integer, got {seed!r}")

    model_cfg = OpUNetConfig.from_dict(_section(doc, "model", OpUNetConfig.__dataclass_fields__))
    train_section = _section(doc, "train", TRAIN_KEYS)
    try:
        train_cfg = optim.TrainConfig(seed=seed, **train_section)
    except ValueError as e:
        raise ConfigError(str(e)) from e

    base = os.path.dirname(os.path.abspath(path))

    def resolve(p):
        return p if p is None or os.path.isabs(p) else os.path.join(base, p)

    data_section = _section(doc, "data", ("train_manifest", "val_manifest"))
    out_section = _section(doc, "out", ("checkpoint", "log"))
    return RunConfig(
        seed=seed,
        model=model_cfg,
        train=train_cfg,
        train_manifest=resolve(data_section.get("train_manifest")),
        val_manifest=resolve(data_section.get("val_manifest")),
        checkpoint=resolve(out_section.get("checkpoint", "checkpoint.opun")),
        log=resolve(out_section.get("log", "train.log")),
    )


def _load_records(manifest_path, in_channels):
    """Load every patch a manifest lists, reducing 10-band patches if needed."""
    paths = data_mod.read_manifest(manifest_path)
    for p in paths:
        if not os.path.isfile(p):
            raise FormatError(f"missing patch file '{p}' (listed in {manifest_path})")
    records = []
    for p in paths:
        rec = data_mod.load_patch(p)
        if rec.bands.shape[0] == 10 and in_channels == 3:
            rec = data_mod.select_channels(rec)
        elif rec.bands.shape[0] != in_channels:
            raise FormatError(
                f"{p}: patch has {rec.bands.shape[0]} bands, model expects {in_channels}")
        records.append(rec)
    return records


def cmd_synth(args):
    if args.size < data_mod.MIN_SYNTH_SIZE:
        raise ConfigError(f"--size must be >= {data_mod.MIN_SYNTH_SIZE}, got {args.size}")
    if args.count < 3:
        raise ConfigError(f"--count must be >= 3 to allow a 40/10/50 split, got {args.count}")
    if args.blob_min < 0 or args.blob_max < args.blob_min:
        raise ConfigError(f"bad blob count range {args.blob_min}..{args.blob_max}")
    os.makedirs(args.out, exist_ok=True)
    records = data_mod.synth_generate(args.seed, args.count, args.size,
                                      (args.blob_min, args.blob_max))
    names = []
    for rec in records:
        name = f"{rec.id}.ls8p"
        data_mod.save_patch(rec, os.path.join(args.out, name))
        names.append(name)
    manifest = data_mod.split_dataset(names, args.seed)
    for split, paths in (("train", manifest.train), ("val", manifest.val), ("test", manifest.test)):
        data_mod.write_manifest(paths, os.path.join(args.out, f"{split}.txt"))
    print(f"wrote {len(records)} patches to {args.out} "
          f"(train {len(manifest.train)} / val {len(manifest.val)} / test {len(manifest.test)})")
    return 0


def cmd_train(args):
    rc = load_run_config(args.config)
    if rc.train_manifest is None or rc.val_manifest is None:
        raise ConfigError("train requires data.train_manifest and data.val_manifest")
    train_records = _load_records(rc.train_manifest, rc.model.in_channels)
    val_records = _load_records(rc.val_manifest, rc.model.in_channels)

    model = OpUNet(rc.model, seed=rc.seed)
    log_lines = []

    def log_fn(line):
        log_lines.append(line)
        print(line)

    result = optim.train(model, train_records, val_records, rc.train, log_fn=log_fn)
    with open(rc.log, "w") as f:
        f.write("\n".join(log_lines) + "\n")
    save_checkpoint(model, rc.checkpoint)
    print(f"best epoch {result.best_epoch} (val F1 {result.best_f1:.4f}); "
          f"checkpoint written to {rc.checkpoint}")
    return 0


def _check_threshold(value):
    if not 0.0 <= value <= 1.0:
        raise ConfigError(f"--threshold must be in [0, 1], got {value}")


def cmd_eval(args):
    _check_threshold(args.threshold)
    if args.batch_size < 1:
        raise ConfigError(f"--batch-size must be >= 1, got {args.batch_size}")
    model = load_checkpoint(args.checkpoint)
    records = _load_records(args.manifest, model.config.in_channels)
    if not records:
        print("0.0\t0.0\t0.0\t0.0")
        print("warning: empty manifest, scores are degenerate", file=sys.stderr)
        return 0
    scores, counts = optim.evaluate(model, records, args.threshold, args.batch_size)
    print(metrics.format_report(scores))
    if scores.degenerate:
        print("warning: some scores had 0/0 denominators and were reported as 0",
              file=sys.stderr)
    return 0


def cmd_predict(args):
    _check_threshold(args.threshold)
    model = load_checkpoint(args.checkpoint)
    rec = data_mod.load_patch(args.infile)
    if rec.bands.shape[0] == 10 and model.config.in_channels == 3:
        rec = data_mod.select_channels(rec)
    x = Tensor(optim.prepare([rec])[0][0][None])
    mask = model.predict_mask(x, args.threshold)
    pgm.write_pgm(mask.data[0, 0].astype(np.uint8) * 255, args.out)
    if args.prob:
        from .tensor import no_grad
        with no_grad():
            prob = model.forward(x)
        pgm.write_pgm(pgm.quantize_probabilities(prob.data[0, 0]), args.prob)
    print(f"mask written to {args.out}")
    return 0


def cmd_gradcheck(args):
    if args.scope == "layer":
        results = gradcheck_mod.check_layers(seed=args.seed, corrupt=args.corrupt)
    else:
        results = gradcheck_mod.check_model(seed=args.seed, corrupt=args.corrupt)
    for r in results:
        status = "ok" if r.passed else "FAIL"
        print(f"{r.name:<44s} max rel err {r.max_err:.3e}  (tol {r.tolerance:.0e})  {status}")
    worst = max(results, key=lambda r: r.max_err)
    failed = [r for r in results if not r.passed]
    verdict = "FAIL" if failed else "PASS"
    print(f"gradcheck {args.scope} scope: {verdict} "
          f"({len(results)} groups, worst {worst.max_err:.3e} in {worst.name})")
    return 4 if failed else 0


def cmd_info(args):
    config = load_run_config(args.config).model if args.config else OpUNetConfig()
    model = OpUNet(config, seed=0)
    print(f"{'layer':<6} {'kind':<10} {'channels':<10} {'k':>2} {'s':>2} "
          f"{'resolution':<12} {'params':>10}")
    for name, kind, cin, cout, k, s, rin, rout, n in model.stage_summary():
        print(f"{name:<6} {kind:<10} {f'{cin}->{cout}':<10} {k:>2} {s:>2} "
              f"{f'{rin}->{rout}':<12} {n:>10,}")
    total = model.count_params()
    print(f"total parameters: {total:,} (≈{total / 1e6:.2f}M)")
    return 0


class _Parser(argparse.ArgumentParser):
    # Usage errors must exit 1 (argparse defaults to 2, which we reserve
    # for data/format errors).
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser():
    parser = _Parser(prog="opunet", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", help="generate a deterministic synthetic fire dataset")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--count", type=int, required=True, help="number of patches")
    p.add_argument("--size", type=int, default=64, help="patch side length (min 16)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--blob-min", type=int, default=0)
    p.add_argument("--blob-max", type=int, default=4)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train from a JSON run config")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="score a checkpoint against a manifest")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--batch-size", type=int, default=8)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("predict", help="write a PGM mask for one patch")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--in", dest="infile", required=True, metavar="PATCH")
    p.add_argument("--out", required=True, metavar="MASK_PGM")
    p.add_argument("--prob", help="also write the probability map as PGM")
    p.add_argument("--threshold", type=float, default=0.5)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("gradcheck", help="finite-difference gradient verification")
    p.add_argument("--scope", choices=("layer", "model"), default="layer")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--corrupt", help=argparse.SUPPRESS)  # negative-control test hook
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("info", help="print the architecture summary")
    p.add_argument("--config")
    p.set_defaults(func=cmd_info)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except SystemExit:
        raise
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except FormatError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (FileNotFoundError, IsADirectoryError, PermissionError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except NumericsError as e:
        print(f"error: {e}", file=sys.stderr)
        return 3
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
