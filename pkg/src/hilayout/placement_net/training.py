"""Training loop: Adam updates, KL warmup, checkpointing, deterministic resume.

Each epoch derives its own RNG stream from (seed, epoch), so resuming from
a checkpoint at epoch N replays epochs N..end bit-for-bit identically to
an uninterrupted run.
"""

from __future__ import annotations

import json

import numpy as np

from ..scene_model import SceneHierarchy
from . import tape
from .network import LossBreakdown, NetConfig, build_graph, init_params, loss_from_graph
from .tape import Tensor

CHECKPOINT_VERSION = 1


class AdamState:
    def __init__(self, params: dict[str, Tensor]):
        self.m = {k: np.zeros_like(t.value) for k, t in params.items()}
        self.v = {k: np.zeros_like(t.value) for k, t in params.items()}
        self.t = 0

    def step(self, params: dict[str, Tensor], lr: float, beta1=0.9, beta2=0.999, eps=1e-8):
        self.t += 1
        bc1 = 1 - beta1**self.t
        bc2 = 1 - beta2**self.t
        for name, tensor in params.items():
            g = tensor.grad
            if g is None:
                continue
            m, v = self.m[name], self.v[name]
            m *= beta1
            m += (1 - beta1) * g
            v *= beta2
            v += (1 - beta2) * (g * g)
            denom = np.sqrt(v / bc2)
            denom += eps
            tensor.value -= (lr / bc1) * m / denom
            tensor.grad = None


def beta_for_epoch(epoch: int, config: NetConfig) -> float:
    """Linear KL warmup over the first fraction of epochs, then 1.0."""
    warm = max(1, round(config.beta_warmup_fraction * config.epochs))
    return min(1.0, (epoch + 1) / warm)


def _epoch_rng(seed: int, epoch: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(epoch,)))


def train_step(
    batch: list[SceneHierarchy],
    params: dict[str, Tensor],
    opt: AdamState,
    config: NetConfig,
    rng: np.random.Generator,
    beta: float,
) -> tuple[dict[str, Tensor], LossBreakdown]:
    graph = build_graph(batch, mode="train", config=config)
    noise = rng.standard_normal((int(graph.supervised.sum()), config.latent))
    loss, breakdown = loss_from_graph(params, graph, noise, beta=beta)
    tape.backward(loss)
    opt.step(params, lr=config.learning_rate)
    return params, breakdown


def train(
    scenes: list[SceneHierarchy],
    config: NetConfig,
    params: dict[str, Tensor] | None = None,
    opt: AdamState | None = None,
    start_epoch: int = 0,
    log_path=None,
    progress=None,
) -> tuple[dict[str, Tensor], AdamState, list[dict]]:
    """Train on the given scenes; returns params, optimizer, epoch log."""
    if not scenes:
        raise ValueError("training corpus is empty")
    params = params if params is not None else init_params(config)
    opt = opt if opt is not None else AdamState(params)
    history: list[dict] = []

    log_file = open(log_path, "a", encoding="utf-8") if log_path else None
    try:
        for epoch in range(start_epoch, config.epochs):
            rng = _epoch_rng(config.seed, epoch)
            order = rng.permutation(len(scenes))
            beta = beta_for_epoch(epoch, config)
            sums = {"l_kl": 0.0, "l_ep": 0.0, "l_etheta": 0.0, "l_ed": 0.0, "total": 0.0}
            steps = 0
            for start in range(0, len(order), config.batch_size):
                batch = [scenes[i] for i in order[start : start + config.batch_size]]
                _, breakdown = train_step(batch, params, opt, config, rng, beta)
                for key in sums:
                    sums[key] += getattr(breakdown, key)
                steps += 1
            entry = {
                "epoch": epoch,
                "beta": beta,
                **{k: v / max(steps, 1) for k, v in sums.items()},
            }
            history.append(entry)
            if log_file:
                log_file.write(json.dumps(entry) + "\n")
                log_file.flush()
            if progress:
                progress(entry)
    finally:
        if log_file:
            log_file.close()
    return params, opt, history


# ---------------------------------------------------------------------------
# Checkpoint I/O
# ---------------------------------------------------------------------------


def save_checkpoint(path, params: dict[str, Tensor], config: NetConfig, opt: AdamState | None = None, epoch: int = 0):
    """Write a versioned npz checkpoint with a shape manifest."""
    manifest = {
        "version": CHECKPOINT_VERSION,
        "epoch": epoch,
        "config": {
            "hidden": config.hidden,
            "latent": config.latent,
            "rounds": config.rounds,
            "theta_bins": config.theta_bins,
            "learning_rate": config.learning_rate,
            "batch_size": config.batch_size,
            "epochs": config.epochs,
            "beta_warmup_fraction": config.beta_warmup_fraction,
            "seed": config.seed,
        },
        "shapes": {k: list(t.value.shape) for k, t in params.items()},
    }
    arrays = {f"param::{k}": t.value for k, t in params.items()}
    if opt is not None:
        arrays.update({f"adam_m::{k}": v for k, v in opt.m.items()})
        arrays.update({f"adam_v::{k}": v for k, v in opt.v.items()})
        manifest["adam_t"] = opt.t
    arrays["__manifest__"] = np.frombuffer(json.dumps(manifest).encode("utf-8"), dtype=np.uint8)
    np.savez_compressed(path, **arrays)


def load_checkpoint(path) -> tuple[dict[str, Tensor], NetConfig, AdamState | None, int]:
    with np.load(path) as data:
        manifest = json.loads(bytes(data["__manifest__"]).decode("utf-8"))
        if manifest.get("version") != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {manifest.get('version')}")
        config = NetConfig(**manifest["config"])
        params = {}
        for key in data.files:
            if key.startswith("param::"):
                name = key[len("param::"):]
                value = data[key]
                expected = tuple(manifest["shapes"][name])
                if value.shape != expected:
                    raise ValueError(f"shape mismatch for {name}: {value.shape} vs {expected}")
                params[name] = Tensor(value.copy(), requires_grad=True)
        opt = None
        if "adam_t" in manifest:
            opt = AdamState(params)
            opt.t = manifest["adam_t"]
            for key in data.files:
                if key.startswith("adam_m::"):
                    opt.m[key[len("adam_m::"):]] = data[key].copy()
                elif key.startswith("adam_v::"):
                    opt.v[key[len("adam_v::"):]] = data[key].copy()
    return params, config, opt, manifest.get("epoch", 0)
