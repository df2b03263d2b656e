"""Loss, optimizer, schedules, the training loop, and gradient checking."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import tensor as T
from .dataio import Dataset, save_checkpoint
from .errors import ContractError, DomainError, NumericalFailure
from .operator import AbleNetwork, ModelConfig, build_network, count_flops


@dataclass
class TrainConfig:
    epochs: int = 50
    batch_size: int = 20
    learning_rate: float = 3e-3
    schedule: str = "step"          # step | cosine | none
    schedule_gamma: float = 0.5
    schedule_every: int = 100
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 1e-4      # spectral weights only
    seed: int = 0

    def __post_init__(self):
        # lr = 0 is a valid degenerate run (a no-op trainer used by tests)
        if self.learning_rate < 0:
            raise ContractError("learning rate must be nonnegative")
        if self.batch_size < 1:
            raise ContractError("batch size must be >= 1")
        if self.schedule not in ("step", "cosine", "none"):
            raise ContractError(f"unknown schedule {self.schedule!r}")


# ---- loss ----------------------------------------------------------------------

def _sample_norms(arr: np.ndarray) -> np.ndarray:
    return np.sqrt((arr.reshape(arr.shape[0], -1) ** 2).sum(axis=1))


def relative_l2(pred: T.Tensor, target: T.Tensor) -> T.Tensor:
    """Per-sample ||pred - target|| / ||target||, averaged over the batch."""
    if pred.shape != target.shape:
        raise ContractError(f"shape mismatch {pred.shape} vs {target.shape}")
    t_norms = _sample_norms(target.data)
    if np.any(t_norms == 0):
        raise DomainError("relative L2 undefined for a zero-norm target sample")
    batch = pred.shape[0]
    diff = T.sub(pred, target)
    flat = T.reshape(diff, (batch, -1))
    per = T.sqrt(T.tsum(T.abs2(flat), axis=1))
    return T.tmean(T.div(per, T.Tensor(t_norms)))


def relative_l2_numpy(pred: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Per-sample values, plain numpy (evaluation path)."""
    t_norms = _sample_norms(target)
    if np.any(t_norms == 0):
        raise DomainError("relative L2 undefined for a zero-norm target sample")
    return _sample_norms(pred - target) / t_norms


# ---- optimizer -------------------------------------------------------------------

def _float_view(arr: np.ndarray) -> np.ndarray:
    """Flat real view of a parameter buffer; complex entries become paired reals."""
    return arr.reshape(-1).view(np.float64)


class Adam:
    """Adam with bias correction; complex parameters update as paired reals."""

    def __init__(self, params: dict, lr: float, beta1: float = 0.9, beta2: float = 0.999,
                 eps: float = 1e-8, weight_decay: float = 0.0,
                 decay_names: frozenset = frozenset()):
        self.params = list(params.items())
        self.lr = lr
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.weight_decay = weight_decay
        self.decay_names = decay_names
        self.step_count = 0
        self._m = [np.zeros_like(_float_view(p.data)) for _, p in self.params]
        self._v = [np.zeros_like(_float_view(p.data)) for _, p in self.params]

    def step(self, lr: Optional[float] = None) -> None:
        lr = self.lr if lr is None else lr
        self.step_count += 1
        c1 = 1.0 - self.beta1**self.step_count
        c2 = 1.0 - self.beta2**self.step_count
        for (name, p), m, v in zip(self.params, self._m, self._v):
            if p.grad is None:
                g = np.zeros_like(_float_view(p.data))
            else:
                g = _float_view(np.ascontiguousarray(p.grad)).copy()
            if self.weight_decay and name in self.decay_names:
                g += self.weight_decay * _float_view(p.data)
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            update = (lr / c1) * m / (np.sqrt(v / c2) + self.eps)
            _float_view(p.data)[...] -= update

    def zero_grad(self) -> None:
        for _, p in self.params:
            p.grad = None


def scheduled_lr(config: TrainConfig, epoch: int) -> float:
    if config.schedule == "step":
        return config.learning_rate * config.schedule_gamma ** (epoch // config.schedule_every)
    if config.schedule == "cosine":
        frac = epoch / max(config.epochs, 1)
        return config.learning_rate * 0.5 * (1.0 + math.cos(math.pi * frac))
    return config.learning_rate


# ---- evaluation --------------------------------------------------------------------

def evaluate(net: AbleNetwork, dataset: Dataset, batch_size: int = 50) -> tuple:
    """(mean relative L2, per-sample values); exact mean via fsum, so the
    result does not depend on sample order or batch grouping."""
    per_sample = []
    with T.no_grad():
        for start in range(0, dataset.samples, batch_size):
            xb = dataset.inputs[start:start + batch_size]
            yb = dataset.targets[start:start + batch_size]
            pred = net(T.Tensor(xb)).data
            per_sample.extend(relative_l2_numpy(pred, yb).tolist())
    mean = math.fsum(per_sample) / len(per_sample) if per_sample else float("nan")
    return mean, np.array(per_sample)


# ---- training loop -------------------------------------------------------------------

@dataclass
class Metrics:
    records: list = field(default_factory=list)     # one dict per epoch
    best_epoch: int = 0
    best_test: float = math.inf
    flops: dict = field(default_factory=dict)
    total_seconds: float = 0.0

    def summary(self) -> dict:
        last = self.records[-1] if self.records else {}
        return {
            "final_epoch": last.get("epoch", 0),
            "final_train": last.get("train_loss", float("nan")),
            "final_test": last.get("test_loss", float("nan")),
            "best_epoch": self.best_epoch,
            "best_test": self.best_test,
            "total_seconds": self.total_seconds,
            "flops_total": self.flops.get("total", 0.0),
        }


def spectral_weight_names(params: dict) -> frozenset:
    return frozenset(n for n in params if n.endswith("spectral.weights"))


def train(net: AbleNetwork, train_set: Dataset, test_set: Dataset,
          config: TrainConfig, checkpoint_path=None) -> Metrics:
    """Full-determinism training; saves the checkpoint with the best test loss.

    Test samples never influence anything except checkpoint selection, and
    only through their order-independent mean loss.
    """
    params = net.named_parameters()
    opt = Adam(params, lr=config.learning_rate, beta1=config.beta1, beta2=config.beta2,
               eps=config.eps, weight_decay=config.weight_decay,
               decay_names=spectral_weight_names(params))
    shuffle_rng = np.random.default_rng(_stream_seed(config.seed, "shuffle"))
    metrics = Metrics(flops=count_flops(net, train_set.grid))
    best_params = {n: p.data.copy() for n, p in params.items()}

    def snapshot():
        for n, p in params.items():
            best_params[n][...] = p.data

    def record_epoch(epoch: int, seconds: float) -> None:
        train_loss, _ = evaluate(net, train_set, config.batch_size)
        test_loss, _ = evaluate(net, test_set, config.batch_size)
        metrics.records.append({
            "epoch": epoch, "train_loss": train_loss, "test_loss": test_loss,
            "lr": scheduled_lr(config, max(epoch - 1, 0)), "seconds": seconds,
        })
        if test_loss < metrics.best_test:
            metrics.best_test = test_loss
            metrics.best_epoch = epoch
            snapshot()

    t_start = time.perf_counter()
    if config.epochs == 0:
        record_epoch(0, 0.0)
    n_train = train_set.samples
    for epoch in range(1, config.epochs + 1):
        t_epoch = time.perf_counter()
        lr = scheduled_lr(config, epoch - 1)
        order = shuffle_rng.permutation(n_train)
        for start in range(0, n_train, config.batch_size):
            idx = order[start:start + config.batch_size]
            xb = T.Tensor(train_set.inputs[idx])
            yb = T.Tensor(train_set.targets[idx])
            loss = relative_l2(net(xb), yb)
            value = loss.item()
            if not math.isfinite(value):
                raise NumericalFailure(
                    f"non-finite loss at epoch {epoch}, batch {start // config.batch_size}")
            opt.zero_grad()
            T.tape_backward(loss)
            opt.step(lr=lr)
        record_epoch(epoch, time.perf_counter() - t_epoch)
    metrics.total_seconds = time.perf_counter() - t_start

    for n, p in params.items():
        p.data[...] = best_params[n]
    if checkpoint_path is not None:
        save_checkpoint(checkpoint_path, net.config, params)
    return metrics


def _stream_seed(seed: int, name: str) -> np.random.SeedSequence:
    """Named deterministic substream; stable across runs and platforms."""
    import hashlib

    digest = hashlib.sha256(name.encode("utf-8")).digest()
    return np.random.SeedSequence([seed, int.from_bytes(digest[:8], "little")])


def split_dataset(dataset: Dataset, n_test: int, seed: int) -> tuple:
    """Deterministic shuffled train/test split."""
    if n_test >= dataset.samples:
        raise ContractError("test split must leave at least one training sample")
    order = np.random.default_rng(_stream_seed(seed, "data")).permutation(dataset.samples)
    return dataset.subset(order[n_test:]), dataset.subset(order[:n_test])


def restore_network(model_config_dict: dict, params: dict) -> AbleNetwork:
    """Rebuild a network from checkpoint header + tensors, verifying names/shapes."""
    cfg_kwargs = dict(model_config_dict)
    if cfg_kwargs.get("act_flags") is not None:
        cfg_kwargs["act_flags"] = tuple(cfg_kwargs["act_flags"])
    net = build_network(ModelConfig(**cfg_kwargs), seed=0)
    own = net.named_parameters()
    if set(own) != set(params):
        missing = sorted(set(own) ^ set(params))
        raise ContractError(f"checkpoint parameter names do not match architecture: {missing}")
    for name, arr in params.items():
        if own[name].data.shape != arr.shape:
            raise ContractError(
                f"checkpoint tensor {name!r} has shape {arr.shape}, expected "
                f"{own[name].data.shape}")
        own[name].data[...] = arr
    return net


# ---- gradient checking -----------------------------------------------------------------

def gradient_check(net, sample: tuple, n_params: int = 50, h: float = 1e-6,
                   seed: int = 0, loss_fn=relative_l2) -> dict:
    """Central-difference check on randomly sampled parameter entries.

    Works for any model exposing __call__ and named_parameters(). Density
    parameters are always represented in the sample so the adaptive path is
    exercised, not just the spectral weights.
    """
    x, y = sample
    params = net.named_parameters()

    def loss_value() -> float:
        with T.no_grad():
            return loss_fn(net(T.Tensor(x)), T.Tensor(y)).item()

    loss = loss_fn(net(T.Tensor(x)), T.Tensor(y))
    for p in params.values():
        p.grad = None
    T.tape_backward(loss)

    rng = np.random.default_rng(seed)
    names = sorted(params)
    density_names = [n for n in names if ".density." in n]
    picks = []
    quota = max(n_params // 4, 1) if density_names else 0
    for _ in range(quota):
        name = density_names[rng.integers(len(density_names))]
        picks.append((name, int(rng.integers(params[name].size))))
    while len(picks) < n_params:
        name = names[rng.integers(len(names))]
        picks.append((name, int(rng.integers(params[name].size))))

    entries = []
    density_grad_max = 0.0
    for name, flat_idx in picks:
        p = params[name]
        grad = p.grad if p.grad is not None else np.zeros_like(p.data)
        components = [(1.0, np.real)] + ([(1j, np.imag)] if p.is_complex else [])
        for direction, proj in components:
            base = p.data.ravel()[flat_idx]
            p.data.ravel()[flat_idx] = base + h * direction
            fp = loss_value()
            p.data.ravel()[flat_idx] = base - h * direction
            fm = loss_value()
            p.data.ravel()[flat_idx] = base
            fd = (fp - fm) / (2.0 * h)
            ad = float(proj(grad.ravel()[flat_idx]))
            entries.append((name, ad, fd))
            if ".density." in name:
                density_grad_max = max(density_grad_max, abs(ad))

    # Entries far below the sampled gradient scale cannot be resolved by a
    # finite difference at step h (the difference sits in roundoff), so the
    # comparison floor is tied to that scale rather than to each entry.
    g_scale = max((abs(ad) for _, ad, _ in entries), default=0.0)
    floor = max(1e-3 * g_scale, 1e-10)
    worst, worst_name = 0.0, ""
    for name, ad, fd in entries:
        err = abs(ad - fd) / max(abs(ad), abs(fd), floor)
        if err > worst:
            worst, worst_name = err, name
    return {
        "max_rel_err": worst,
        "worst_param": worst_name,
        "density_grad_max": density_grad_max,
        "gradient_scale": g_scale,
        "n_checked": len(picks),
    }
