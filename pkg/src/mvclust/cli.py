"""Command-line interface.

Subcommands: ``generate`` (synthetic dataset directory), ``train``
(full pipeline -> checkpoint, log, labels, metrics), ``evaluate``
(score a predicted-label file), ``ablate`` (variant x seed sweeps), and
``gradcheck`` (finite-difference verification of all objectives).

Exit codes: 0 success, 1 numerical/training failure, 2 usage or
validation error. The environment variable ``MVCLUST_SEED`` overrides
the configured seed for generate/train/ablate.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .config import RunConfig
from .data import generate_synthetic, load_dataset, save_dataset
from .errors import ConfigError, DataFormatError, MvclustError, NumericalError
from .gradcheck import run_gradient_checks
from .metrics import evaluate
from .network import save_checkpoint
from .trainer import ABLATION_VARIANTS, run_ablation, run_pipeline

SEED_ENV_VAR = "MVCLUST_SEED"


def _load_config(args) -> RunConfig:
    cfg = RunConfig.from_file(args.config) if args.config else RunConfig()
    cfg.apply_overrides(getattr(args, "overrides", []) or [])
    env_seed = os.environ.get(SEED_ENV_VAR)
    if env_seed is not None:
        try:
            cfg.seed = int(env_seed)
        except ValueError as exc:
            raise ConfigError(f"{SEED_ENV_VAR}={env_seed!r} is not an integer") from exc
    return cfg.validate()


def _echo_config(cfg: RunConfig, out_dir) -> None:
    with open(os.path.join(out_dir, "config.txt"), "w") as fh:
        fh.write(cfg.to_text())


def _read_label_file(path) -> np.ndarray:
    try:
        with open(path) as fh:
            raw = [line.strip() for line in fh if line.strip()]
    except OSError as exc:
        raise DataFormatError(f"cannot read label file {path}: {exc}") from exc
    try:
        return np.asarray([int(v) for v in raw], dtype=np.int64)
    except ValueError as exc:
        raise DataFormatError(f"{path}: malformed label ({exc})") from exc


def _write_label_file(path, labels) -> None:
    with open(path, "w") as fh:
        for value in labels:
            fh.write(f"{int(value)}\n")


def _variant_name(cfg: RunConfig) -> str:
    flags = (cfg.use_reconstruction, cfg.use_high_level,
             cfg.contrast_on_low, cfg.contrast_on_labels)
    for name in ("D", "B", "C", "A", "b", "c"):
        v = ABLATION_VARIANTS[name]
        if flags == (v.use_reconstruction, v.use_high_level,
                     v.contrast_on_low, v.contrast_on_labels):
            return name
    return "custom"


def cmd_generate(args) -> int:
    cfg = _load_config(args)
    ds = generate_synthetic(cfg.synthetic_config())
    save_dataset(ds, args.out)
    _echo_config(cfg, args.out)
    print(f"generated dataset: {ds.n_samples} samples, {ds.n_views} views, "
          f"{ds.n_clusters} clusters -> {args.out}")
    return 0


def cmd_train(args) -> int:
    cfg = _load_config(args)
    ds = load_dataset(args.data)
    os.makedirs(args.out, exist_ok=True)
    _echo_config(cfg, args.out)
    result = run_pipeline(ds, cfg.train_config())
    save_checkpoint(result.network, os.path.join(args.out, "model.ckpt"))
    result.log.write_csv(os.path.join(args.out, "train_log.csv"))
    _write_label_file(os.path.join(args.out, "labels.txt"), result.labels)
    summary = f"trained on {args.data}: {ds.n_samples} samples, {ds.n_views} views"
    if ds.labels is not None:
        scores = evaluate(result.labels, ds.labels)
        payload = {**{k: round(v, 6) for k, v in scores.items()},
                   "seed": cfg.seed, "variant": _variant_name(cfg)}
        line = json.dumps(payload)
        with open(os.path.join(args.out, "metrics.json"), "w") as fh:
            fh.write(line + "\n")
        print(line)
    print(summary + f" -> {args.out}")
    return 0


def cmd_evaluate(args) -> int:
    pred = _read_label_file(args.pred)
    truth = _read_label_file(args.truth)
    scores = evaluate(pred, truth)
    print(json.dumps({k: round(v, 6) for k, v in scores.items()}))
    return 0


def cmd_ablate(args) -> int:
    cfg = _load_config(args)
    ds = load_dataset(args.data)
    variants = [v.strip() for v in args.variants.split(",") if v.strip()]
    unknown = [v for v in variants if v not in ABLATION_VARIANTS]
    if unknown:
        raise ConfigError(f"unknown ablation variants {unknown}; valid: "
                          f"{sorted(ABLATION_VARIANTS)}")
    if args.seeds:
        seeds = [int(s) for s in args.seeds.split(",") if s.strip()]
    else:
        seeds = [cfg.seed]

    rows = []
    for variant in variants:
        for seed in seeds:
            cfg.seed = seed
            row = run_ablation(ds, variant, cfg.train_config())
            rows.append(row)
            print(f"variant {variant} seed {seed}: acc={row['acc']:.4f} "
                  f"nmi={row['nmi']:.4f} pur={row['pur']:.4f}")

    with open(args.out, "w") as fh:
        fh.write("variant,seed,acc,nmi,pur\n")
        for row in rows:
            fh.write(f"{row['variant']},{row['seed']},{row['acc']!r},"
                     f"{row['nmi']!r},{row['pur']!r}\n")

    print(f"{'variant':>7} {'runs':>4} {'mean_acc':>9} {'mean_nmi':>9} {'mean_pur':>9}")
    for variant in variants:
        group = [r for r in rows if r["variant"] == variant]
        means = {k: float(np.mean([r[k] for r in group])) for k in ("acc", "nmi", "pur")}
        print(f"{variant:>7} {len(group):>4} {means['acc']:>9.4f} "
              f"{means['nmi']:>9.4f} {means['pur']:>9.4f}")
    print(f"wrote {args.out}")
    return 0


def cmd_gradcheck(args) -> int:
    seeds = [int(s) for s in args.seeds.split(",") if s.strip()]
    failed = False
    for seed in seeds:
        for result in run_gradient_checks(seed=seed, tol=args.tol,
                                          corrupt=args.corrupt):
            status = "PASS" if result.passed else "FAIL"
            print(f"{status} {result.loss_name}: seed={result.seed} "
                  f"max_rel_error={result.max_rel_error:.3e} "
                  f"(worst: {result.worst_param})")
            failed = failed or not result.passed
    if failed:
        print("gradient check FAILED")
        return 1
    print("all gradient checks passed")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mvclust",
        description="Multi-view contrastive clustering: data generation, "
                    "training, evaluation, ablations, gradient checks.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_config_args(p):
        p.add_argument("--config", help="key=value config file (defaults apply "
                                        "when omitted)")
        p.add_argument("overrides", nargs="*", metavar="key=value",
                       help="config overrides applied after the file")

    p = sub.add_parser("generate", help="write a synthetic dataset directory")
    p.add_argument("--out", required=True, help="output dataset directory")
    add_config_args(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("train", help="run the full training pipeline")
    p.add_argument("--data", required=True, help="dataset directory")
    p.add_argument("--out", required=True, help="output directory")
    add_config_args(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="score predicted labels against truth")
    p.add_argument("--pred", required=True, help="predicted labels, one per line")
    p.add_argument("--truth", required=True, help="true labels, one per line")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("ablate", help="run ablation variants over seeds")
    p.add_argument("--data", required=True, help="dataset directory (needs labels)")
    p.add_argument("--variants", default="A,B,C,D",
                   help="comma list from A,B,C,D,a,b,c,d")
    p.add_argument("--seeds", default="", help="comma list of seeds "
                                               "(default: config seed)")
    p.add_argument("--out", default="ablation.csv", help="per-run CSV path")
    add_config_args(p)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("gradcheck", help="finite-difference checks of all losses")
    p.add_argument("--seeds", default="0", help="comma list of seeds")
    p.add_argument("--tol", type=float, default=1e-4,
                   help="max relative error allowed")
    p.add_argument("--corrupt", default=None,
                   help="self-test hook: corrupt this loss's analytic gradient")
    p.set_defaults(func=cmd_gradcheck)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (MvclustError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
