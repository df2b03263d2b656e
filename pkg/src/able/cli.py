"""Command-line entry point: gen / train / eval / verify / sweep / rate-study / bench.

Exit codes: 0 success, 1 failed verification checks, 2 usage or config
error, 3 file or format error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import verify as verify_mod
from .config import (RunConfig, config_key_help, load_config, stream_seed,
                     write_effective_config)
from .dataio import (Dataset, dataset_read, dataset_write, load_checkpoint,
                     make_burgers_dataset, make_darcy_dataset)
from .errors import (AbleError, ContractError, DataFormatError, DomainError,
                     NumericalFailure)
from .operator import ModelConfig, build_network, count_flops
from .pde import GrfSpec
from .training import evaluate, restore_network, split_dataset, train


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_json(path, obj) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _finalize_model(config: RunConfig, dataset: Dataset) -> ModelConfig:
    """Bind data-determined fields (channels, dimensionality) to the model."""
    return replace(config.model,
                   ndim=dataset.grid.dims,
                   in_channels=dataset.inputs.shape[1],
                   out_channels=dataset.targets.shape[1])


# ---- subcommands ------------------------------------------------------------------

def cmd_gen(args) -> int:
    config = load_config(args.config, args.set)
    data = config.data
    data_seed = stream_seed(config.seed, "data")
    if config.task == "burgers":
        grf = GrfSpec(dims=1, tau=data.tau, alpha=data.alpha, scale=data.scale)
        dataset = make_burgers_dataset(
            data.samples, nu=data.nu, seed=data_seed, resolution=data.resolution,
            generate_at=data.generate_at, grf=grf, t_final=data.t_final)
    else:
        grf = GrfSpec(dims=2, tau=data.tau, alpha=data.alpha, scale=data.scale,
                      threshold_levels=(data.threshold_high, data.threshold_low))
        dataset = make_darcy_dataset(
            data.samples, seed=data_seed, resolution=data.resolution,
            generate_at=data.generate_at, grf=grf, forcing=data.forcing)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    dataset_write(dataset, out)
    write_effective_config(config, out.with_suffix(out.suffix + ".config.json"))
    print(f"wrote {out} ({dataset.samples} samples, grid {dataset.grid.extents})")
    print(f"sha256 {_sha256(out)}")
    return 0


def cmd_train(args) -> int:
    config = load_config(args.config, args.set)
    dataset = dataset_read(args.data)
    model_cfg = _finalize_model(config, dataset)
    net = build_network(model_cfg, seed=stream_seed(config.seed, "init"))
    train_cfg = replace(config.train, seed=config.seed)
    train_set, test_set = split_dataset(dataset, config.data.n_test, seed=config.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    metrics = train(net, train_set, test_set, train_cfg,
                    checkpoint_path=out / "model.ckpt")
    with open(out / "metrics.jsonl", "w", encoding="utf-8") as fh:
        for record in metrics.records:
            fh.write(json.dumps(record, sort_keys=True) + "\n")
    summary = metrics.summary()
    with open(out / "summary.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=sorted(summary))
        writer.writeheader()
        writer.writerow(summary)
    write_effective_config(config, out / "effective-config.json")
    print(f"trained {config.task}: best test {metrics.best_test:.6f} "
          f"(epoch {metrics.best_epoch}), final test {summary['final_test']:.6f}")
    print(f"checkpoint {out / 'model.ckpt'}")
    return 0


def cmd_eval(args) -> int:
    cfg_dict, params = load_checkpoint(args.checkpoint)
    net = restore_network(cfg_dict, params)
    dataset = dataset_read(args.data)
    mc = net.config
    if dataset.grid.dims != mc.ndim:
        raise ContractError(f"checkpoint is {mc.ndim}-D but dataset grid is "
                            f"{dataset.grid.dims}-D")
    if dataset.inputs.shape[1] != mc.in_channels:
        raise ContractError(f"checkpoint expects {mc.in_channels} input channel(s), "
                            f"dataset has {dataset.inputs.shape[1]}")
    if dataset.targets.shape[1] != mc.out_channels:
        raise ContractError(f"checkpoint produces {mc.out_channels} output channel(s), "
                            f"dataset has {dataset.targets.shape[1]}")
    mean, per_sample = evaluate(net, dataset, batch_size=args.batch_size)
    report = {
        "mean_relative_l2": mean,
        "samples": dataset.samples,
        "per_sample": per_sample.tolist(),
    }
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        _write_json(out / "report.json", report)
        with open(out / "report.csv", "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["sample", "relative_l2"])
            for i, v in enumerate(per_sample):
                writer.writerow([i, v])
    print(f"mean relative L2 over {dataset.samples} samples: {mean:.8f}")
    return 0


def _rate_checks(report: verify_mod.PropertyReport) -> None:
    step = verify_mod.fourier_step_truncation_study()
    report.add(name="step_truncation_closed_form",
               claim="FFT of the step matches the exact closed-form coefficients",
               residual=step.extras["closed_form_max_abs_residual"], tolerance=1e-8)
    report.add(name="step_truncation_slope",
               claim="truncation error of the step decays like K^-1/2",
               residual=abs(step.fitted_slope + 0.5), tolerance=0.05)
    part = verify_mod.able_partition_approximation_study()
    report.add(name="partition_closed_form",
               claim="sawtooth partition error matches 1/(sqrt(12) M)",
               residual=part.extras["closed_form_max_rel_dev"], tolerance=1e-3)
    report.add(name="partition_slope",
               claim="zero-mode partition error decays like 1/M",
               residual=abs(part.fitted_slope + 1.0), tolerance=0.02)
    joint = verify_mod.joint_truncation_partition_study()
    report.add(name="joint_truncation_partition_slope",
               claim="windowed truncation error decays like (K M)^-1/2",
               residual=abs(joint.fitted_slope + 0.5), tolerance=0.1)


def cmd_verify(args) -> int:
    if args.level == "quick":
        report = verify_mod.run_frame_properties(
            seeds=(0,), extents_list=((8,), (32,), (8, 8)), slices_list=(1, 2, 4),
            inject=args.inject)
    else:
        report = verify_mod.run_frame_properties(
            seeds=(0, 1), extents_list=tuple(verify_mod.QUICK_EXTENTS),
            slices_list=tuple(verify_mod.QUICK_SLICES), inject=args.inject)
        if args.inject is None:
            _rate_checks(report)
    print(report.render_text())
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        _write_json(out / "report.json", report.to_dict())
        (out / "report.txt").write_text(report.render_text() + "\n", encoding="utf-8")
    return 0 if report.passed else 1


def cmd_sweep(args) -> int:
    config = load_config(args.config, args.set)
    dataset = dataset_read(args.data)
    values = [json.loads(v) for v in args.values.split(",")]
    train_set, test_set = split_dataset(dataset, config.data.n_test, seed=config.seed)
    rows = []
    for value in values:
        if args.axis == "M":
            model_cfg = replace(config.model, slices=int(value))
        else:
            model_cfg = replace(config.model, temperature=float(value))
        model_cfg = _finalize_model(replace(config, model=model_cfg), dataset)
        net = build_network(model_cfg, seed=stream_seed(config.seed, "init"))
        train_cfg = replace(config.train, seed=config.seed)
        metrics = train(net, train_set, test_set, train_cfg)
        flops = count_flops(net, dataset.grid)
        seconds = [r["seconds"] for r in metrics.records if r["epoch"] > 0]
        rows.append({
            "axis": args.axis, "value": value,
            "final_test": metrics.records[-1]["test_loss"],
            "best_test": metrics.best_test,
            "seconds_per_epoch": float(np.mean(seconds)) if seconds else 0.0,
            "flops_total": flops["total"],
        })
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "sweep.json", {"rows": rows})
    with open(out / "sweep.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
        writer.writeheader()
        writer.writerows(rows)
    write_effective_config(config, out / "effective-config.json")
    for row in rows:
        label = " (plain Fourier baseline)" if args.axis == "M" and row["value"] == 1 else ""
        print(f"{args.axis}={row['value']}{label}: best test {row['best_test']:.6f}, "
              f"flops {row['flops_total']:.3e}")
    return 0


def cmd_rate_study(args) -> int:
    if args.study == "step":
        result = verify_mod.fourier_step_truncation_study()
    elif args.study == "partition":
        result = verify_mod.able_partition_approximation_study()
    elif args.study == "joint":
        result = verify_mod.joint_truncation_partition_study()
    else:
        result = verify_mod.radial_step_partition_study_2d()
    prefix = Path(args.out)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    _write_json(prefix.with_suffix(".json"), result.to_dict())
    with open(prefix.with_suffix(".csv"), "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "error"])
        for x, e in zip(result.x_values, result.errors):
            writer.writerow([x, e])
    lo, hi = result.slope_ci
    print(f"{args.study}: fitted slope {result.fitted_slope:.4f} "
          f"(bootstrap CI [{lo:.4f}, {hi:.4f}])")
    return 0


def cmd_bench(args) -> int:
    m_list = tuple(int(v) for v in args.m_list.split(","))
    n_list = tuple(int(v) for v in args.n_list.split(","))
    result = verify_mod.complexity_scaling_check(m_list=m_list, n_list=n_list)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        _write_json(out / "bench.json", result)
    print(f"slice-count slope: {result['m_slope']:.3f} over M={list(m_list)}")
    print(f"grid-size exponent (after log factor): {result['n_exponent_after_log']:.3f}")
    print(f"single-slice layer vs plain Fourier layer: {result['m1_vs_fno_ratio']:.3f}x")
    return 0


# ---- parser -----------------------------------------------------------------------

def _add_config_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", default=None, help="JSON config file")
    p.add_argument("--set", action="append", default=[], metavar="KEY.PATH=VALUE",
                   help="override a config key (repeatable); values parsed as JSON")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="able",
        description="Adaptive-basis spectral neural operators: data, training, "
                    "evaluation, and verification.")
    sub = parser.add_subparsers(dest="command", required=True)
    epilog = config_key_help()
    raw = argparse.RawDescriptionHelpFormatter

    p = sub.add_parser("gen", help="generate a dataset file", epilog=epilog,
                       formatter_class=raw)
    _add_config_args(p)
    p.add_argument("--out", required=True, help="output dataset path")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("train", help="train a model on a dataset", epilog=epilog,
                       formatter_class=raw)
    _add_config_args(p)
    p.add_argument("--data", required=True, help="dataset file from `able gen`")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a dataset",
                       epilog=epilog, formatter_class=raw)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", default=None, help="optional report directory")
    p.add_argument("--batch-size", type=int, default=50)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("verify", help="run the property-check suite",
                       epilog=epilog, formatter_class=raw)
    p.add_argument("--level", choices=("quick", "full"), default="quick")
    p.add_argument("--out", default=None, help="optional report directory")
    p.add_argument("--inject", choices=("fft-normalization", "density-normalization"),
                   default=None, help="corrupt the harness to prove checks can fail")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sweep", help="train once per value of M or T", epilog=epilog,
                       formatter_class=raw)
    _add_config_args(p)
    p.add_argument("--data", required=True)
    p.add_argument("--axis", choices=("M", "T"), required=True)
    p.add_argument("--values", required=True, help="comma-separated values")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("rate-study", help="approximation-rate studies with slope fits",
                       epilog=epilog, formatter_class=raw)
    p.add_argument("--study", choices=("step", "partition", "joint", "radial2d"),
                   required=True)
    p.add_argument("--out", required=True, help="output path prefix (.csv/.json)")
    p.set_defaults(func=cmd_rate_study)

    p = sub.add_parser("bench", help="measure layer-forward complexity scaling",
                       epilog=epilog, formatter_class=raw)
    p.add_argument("--m-list", default="1,2,4,8")
    p.add_argument("--n-list", default="1024,4096,16384")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ContractError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (DataFormatError, FileNotFoundError, IsADirectoryError, PermissionError) as exc:
        print(f"file error: {exc}", file=sys.stderr)
        return 3
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 4
    except AbleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
