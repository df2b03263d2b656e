"""Run configuration: dataclass tree, JSON files, overrides, seed streams.

A run is a pure function of (config, dataset files, seed). All randomness
derives from the single top-level seed through named substreams ("data",
"init", "shuffle"), so changing e.g. the batch order cannot perturb the
parameter initialization. The merged effective configuration is written
next to every output for reproducibility.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import asdict, dataclass, field, fields
from typing import Optional

import numpy as np

from .errors import ContractError
from .operator import ModelConfig
from .training import TrainConfig

TASKS = ("burgers", "darcy")


@dataclass
class DataConfig:
    samples: int = 250
    n_test: int = 50
    resolution: int = 256
    generate_at: int = 1024
    nu: float = 0.1                 # burgers viscosity
    t_final: float = 1.0
    forcing: float = 1.0            # darcy right-hand side
    tau: float = 5.0
    alpha: float = 2.0
    scale: float = 25.0
    threshold_high: float = 12.0    # darcy two-phase levels
    threshold_low: float = 3.0


@dataclass
class RunConfig:
    task: str = "burgers"
    seed: int = 0
    model: ModelConfig = field(default_factory=ModelConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    data: DataConfig = field(default_factory=DataConfig)

    def __post_init__(self):
        if self.task not in TASKS:
            raise ContractError(f"unknown task {self.task!r}; expected one of {TASKS}")


TASK_MODEL_DEFAULTS = {
    "burgers": dict(ndim=1, width=24, n_layers=4, k_max=16, slices=2,
                    density_arch="fd4", density_hidden=16, proj_hidden=64),
    "darcy": dict(ndim=2, width=16, n_layers=4, k_max=8, slices=2,
                  density_arch="mlp2", density_hidden=24, proj_hidden=64),
}

TASK_DATA_DEFAULTS = {
    "burgers": dict(samples=250, n_test=50, resolution=256, generate_at=1024,
                    tau=5.0, alpha=2.0, scale=25.0),
    "darcy": dict(samples=60, n_test=10, resolution=64, generate_at=256,
                  tau=3.0, alpha=2.0, scale=1.0),
}


def _dataclass_from(cls, values: dict, path: str):
    known = {f.name for f in fields(cls)}
    unknown = set(values) - known
    if unknown:
        raise ContractError(f"unknown config key(s) under {path}: {sorted(unknown)}")
    coerced = dict(values)
    if "act_flags" in coerced and coerced["act_flags"] is not None:
        coerced["act_flags"] = tuple(coerced["act_flags"])
    return cls(**coerced)


def build_run_config(raw: dict) -> RunConfig:
    """Task defaults, overlaid with the user's values; unknown keys rejected."""
    known_top = {"task", "seed", "model", "train", "data"}
    unknown = set(raw) - known_top
    if unknown:
        raise ContractError(f"unknown top-level config key(s): {sorted(unknown)}")
    task = raw.get("task", "burgers")
    if task not in TASKS:
        raise ContractError(f"unknown task {task!r}; expected one of {TASKS}")
    model_values = {**TASK_MODEL_DEFAULTS[task], **raw.get("model", {})}
    data_values = {**TASK_DATA_DEFAULTS[task], **raw.get("data", {})}
    return RunConfig(
        task=task,
        seed=int(raw.get("seed", 0)),
        model=_dataclass_from(ModelConfig, model_values, "model"),
        train=_dataclass_from(TrainConfig, raw.get("train", {}), "train"),
        data=_dataclass_from(DataConfig, data_values, "data"),
    )


def load_config(path: Optional[str], overrides: Optional[list] = None) -> RunConfig:
    raw = {}
    if path is not None:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
        if not isinstance(raw, dict):
            raise ContractError("config file must contain a JSON object")
    for item in overrides or []:
        if "=" not in item:
            raise ContractError(f"override {item!r} is not of the form key.path=value")
        key, _, value = item.partition("=")
        try:
            parsed = json.loads(value)
        except json.JSONDecodeError:
            parsed = value
        node = raw
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ContractError(f"override path {key!r} crosses a non-object value")
        node[parts[-1]] = parsed
    return build_run_config(raw)


def effective_config_dict(config: RunConfig) -> dict:
    out = asdict(config)
    if out["model"].get("act_flags") is not None:
        out["model"]["act_flags"] = list(out["model"]["act_flags"])
    return out


def write_effective_config(config: RunConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(effective_config_dict(config), fh, indent=2, sort_keys=True)
        fh.write("\n")


def stream_seed(seed: int, name: str) -> int:
    """Deterministic named substream of the run seed (data / init / shuffle)."""
    digest = hashlib.sha256(name.encode("utf-8")).digest()
    ss = np.random.SeedSequence([int(seed), int.from_bytes(digest[:8], "little")])
    return int(ss.generate_state(1)[0])


def config_key_help() -> str:
    """One line per config key with its default, for --help epilogs."""
    notes = {
        "task": "burgers (1-D) or darcy (2-D)",
        "seed": "master seed; data/init/shuffle streams derive from it",
        "model.width": "channel width of the operator layers",
        "model.n_layers": "number of adaptive spectral layers",
        "model.k_max": "retained low modes per axis (needs 2*k_max <= N)",
        "model.slices": "adaptive basis size M; 1 recovers the plain Fourier layer",
        "model.kind": "diagonal per-slice mixing, or cross for slice-pair mixing",
        "model.temperature": "softmax temperature of the density head",
        "model.learn_temperature": "make the temperature a trained parameter",
        "model.density_arch": "mlp2 pointwise head, or fd4 with stencil features (1-D)",
        "model.density_hidden": "hidden width of the density head",
        "model.per_channel": "separate density per channel instead of shared",
        "model.residual": "fd4 head: skip from first to third hidden layer",
        "model.activation": "gelu or silu between layers",
        "model.act_flags": "per-layer activation switches (default: off for last)",
        "model.coord_features": "append normalized coordinates at lifting",
        "model.proj_hidden": "hidden width of the output projection",
        "train.epochs": "training epochs",
        "train.batch_size": "minibatch size",
        "train.learning_rate": "Adam learning rate",
        "train.schedule": "step, cosine, or none",
        "train.schedule_gamma": "step-schedule decay factor",
        "train.schedule_every": "epochs between step decays",
        "train.weight_decay": "decay applied to spectral weights only",
        "data.samples": "dataset size to generate",
        "data.n_test": "held-out sample count at train time",
        "data.resolution": "stored resolution (power of two)",
        "data.generate_at": "solver resolution before subsampling",
        "data.nu": "burgers viscosity",
        "data.t_final": "burgers horizon",
        "data.forcing": "darcy right-hand side constant",
        "data.tau": "random-field inverse length scale",
        "data.alpha": "random-field smoothness exponent",
        "data.scale": "random-field amplitude",
        "data.threshold_high": "darcy high-phase coefficient",
        "data.threshold_low": "darcy low-phase coefficient",
    }
    base = build_run_config({})
    flat = {}

    def walk(prefix, obj):
        for f in fields(obj):
            v = getattr(obj, f.name)
            if dataclasses.is_dataclass(v):
                walk(f"{prefix}{f.name}.", v)
            else:
                flat[f"{prefix}{f.name}"] = v

    walk("", base)
    lines = ["configuration keys (burgers defaults shown; set via file or --set):"]
    for key, value in flat.items():
        note = notes.get(key, "")
        lines.append(f"  {key:<28} default={value!r:<12} {note}")
    return "\n".join(lines)
