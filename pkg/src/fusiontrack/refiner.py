"""Time-conditioned iterative refinement of a fused feature map.

The map is perturbed once with a learned per-pixel noise scale, pushed through
``steps`` residual blocks that each see a time embedding of the normalized
timestep ``t_i = 1 - i/steps``, and finally blended back with the input.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tensor_core as tc
from .params import ParamStore, get_conv, get_linear, get_norm, put_conv, put_linear, put_norm


@dataclass(frozen=True)
class RefinerConfig:
    """Defaults other than ``steps`` are unvalidated placeholders."""

    steps: int = 3
    total_steps: int = 1000
    sigma: float = 0.1
    alpha: float = 0.5
    time_dim: int = 32
    seed: int = 0

    def __post_init__(self):
        if self.steps < 1 or self.total_steps < 1 or self.time_dim < 1:
            raise ValueError("steps, total_steps and time_dim must be positive")
        if self.sigma < 0:
            raise ValueError("sigma must be non-negative")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")


@dataclass(frozen=True)
class TimeMlp:
    layer1: tc.LinearParams
    layer2: tc.LinearParams

    def __post_init__(self):
        if self.layer1.in_dim != 1:
            raise ValueError("time MLP takes a scalar input")
        if self.layer2.in_dim != self.layer1.out_dim:
            raise ValueError("time MLP hidden sizes do not chain")

    @property
    def dim(self) -> int:
        return self.layer2.out_dim


@dataclass(frozen=True)
class NoiseMaskNet:
    conv: tc.ConvParams  # C -> 1, 1x1

    def __post_init__(self):
        if self.conv.out_channels != 1 or self.conv.kernel_size != (1, 1):
            raise ValueError("noise mask must be a 1x1 conv with one output channel")


@dataclass(frozen=True)
class RefineBlock:
    conv1: tc.ConvParams  # C + d_t -> C, 3x3
    bn: tc.NormParams
    conv2: tc.ConvParams  # C -> C, 3x3
    attn: tc.ConvParams  # C -> C, 1x1

    def __post_init__(self):
        c = self.conv2.out_channels
        if self.conv1.out_channels != c or self.conv2.in_channels != c or self.bn.channels != c:
            raise ValueError("refine block main path must keep C channels")
        if self.attn.in_channels != c or self.attn.out_channels != c or self.attn.kernel_size != (1, 1):
            raise ValueError("attention gate must be a 1x1 C->C conv")
        if self.conv1.in_channels <= c:
            raise ValueError("conv1 must take C + time_dim channels")

    @property
    def channels(self) -> int:
        return self.conv2.out_channels

    @property
    def time_dim(self) -> int:
        return self.conv1.in_channels - self.channels

    def with_zero_output(self) -> "RefineBlock":
        zero = tc.ConvParams(np.zeros_like(self.conv2.weight), np.zeros_like(self.conv2.bias),
                             self.conv2.padding)
        return RefineBlock(self.conv1, self.bn, zero, self.attn)


@dataclass(frozen=True)
class RefinerNet:
    time_mlp: TimeMlp
    mask: NoiseMaskNet
    blocks: tuple[RefineBlock, ...]

    def __post_init__(self):
        object.__setattr__(self, "blocks", tuple(self.blocks))
        if not self.blocks:
            raise ValueError("refiner needs at least one block")
        c = self.mask.conv.in_channels
        for b in self.blocks:
            if b.channels != c or b.time_dim != self.time_mlp.dim:
                raise ValueError("block dims disagree with mask channels or time embedding size")

    @property
    def channels(self) -> int:
        return self.mask.conv.in_channels

    @classmethod
    def random(cls, channels: int, cfg: RefinerConfig, seed: int, hidden: int | None = None) -> "RefinerNet":
        g = tc.rng(seed)
        hidden = cfg.time_dim if hidden is None else hidden
        mlp = TimeMlp(tc.random_linear(hidden, 1, g), tc.random_linear(cfg.time_dim, hidden, g))
        mask = NoiseMaskNet(tc.random_conv(1, channels, 1, g))
        blocks = tuple(
            RefineBlock(
                conv1=tc.random_conv(channels, channels + cfg.time_dim, 3, g),
                bn=tc.random_norm(channels, g),
                conv2=tc.random_conv(channels, channels, 3, g),
                attn=tc.random_conv(channels, channels, 1, g),
            )
            for _ in range(cfg.steps)
        )
        return cls(mlp, mask, blocks)

    def to_store(self, store: ParamStore | None = None) -> ParamStore:
        store = ParamStore() if store is None else store
        put_linear(store, "refiner.time.l1", self.time_mlp.layer1)
        put_linear(store, "refiner.time.l2", self.time_mlp.layer2)
        put_conv(store, "refiner.mask.conv", self.mask.conv)
        for i, b in enumerate(self.blocks, start=1):
            put_conv(store, f"refiner.block{i}.conv1", b.conv1)
            put_norm(store, f"refiner.block{i}.bn", b.bn)
            put_conv(store, f"refiner.block{i}.conv2", b.conv2)
            put_conv(store, f"refiner.block{i}.attn", b.attn)
        return store

    @classmethod
    def from_store(cls, store: ParamStore, channels: int, steps: int, time_dim: int) -> "RefinerNet":
        hidden = store["refiner.time.l1.weight"].shape[0] if "refiner.time.l1.weight" in store else 0
        mlp = TimeMlp(get_linear(store, "refiner.time.l1", hidden, 1),
                      get_linear(store, "refiner.time.l2", time_dim, hidden))
        mask = NoiseMaskNet(get_conv(store, "refiner.mask.conv", 1, channels, 1))
        blocks = tuple(
            RefineBlock(
                conv1=get_conv(store, f"refiner.block{i}.conv1", channels, channels + time_dim, 3),
                bn=get_norm(store, f"refiner.block{i}.bn", channels),
                conv2=get_conv(store, f"refiner.block{i}.conv2", channels, channels, 3),
                attn=get_conv(store, f"refiner.block{i}.attn", channels, channels, 1),
            )
            for i in range(1, steps + 1)
        )
        return cls(mlp, mask, blocks)


def normalized_time(step: float, total: float) -> float:
    return float(step) / float(total)


def timesteps(steps: int) -> list[float]:
    """``t_i = 1 - i/steps`` for ``i = 1..steps``.

    Evaluated as ``(steps - i) / steps`` so each value is the correctly rounded
    fraction (``1 - 1/3`` would come out one ulp above ``2/3``).
    """
    return [(steps - i) / steps for i in range(1, steps + 1)]


def time_embedding(t: float, mlp: TimeMlp) -> np.ndarray:
    """Embed a normalized time ``t`` in ``[0, 1]`` with a Linear-SiLU-Linear stack."""
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"normalized time must lie in [0, 1], got {t}")
    h = tc.activation(tc.linear(np.array([t], dtype=tc.DTYPE), mlp.layer1), "silu")
    return tc.linear(h, mlp.layer2)


def noise_scale(x, mask: NoiseMaskNet) -> np.ndarray:
    """Per-pixel perturbation scale in (0, 1), shape ``(1, H, W)``."""
    return tc.activation(tc.conv2d(x, mask.conv), "sigmoid")


def adaptive_perturb(x, mask: NoiseMaskNet, sigma: float, seed: int) -> np.ndarray:
    x = tc.as_feature_map(x)
    if x.shape[0] != mask.conv.in_channels:
        raise ValueError(f"noise mask expects {mask.conv.in_channels} channels, got {x.shape[0]}")
    if sigma == 0:
        return x.copy()
    m = noise_scale(x, mask)
    eps = tc.gaussian_noise(*x.shape, seed=seed)
    return (x + tc.DTYPE(sigma) * m * eps).astype(tc.DTYPE)


def broadcast_time(emb: np.ndarray, height: int, width: int) -> np.ndarray:
    return np.broadcast_to(emb[:, None, None], (emb.shape[0], height, width)).astype(tc.DTYPE)


def refine_step(x_prev, block: RefineBlock, t: float, mlp: TimeMlp) -> np.ndarray:
    """One residual refinement: ``gate * main([x, t_emb]) + x``."""
    x_prev = tc.as_feature_map(x_prev)
    if x_prev.shape[0] != block.channels:
        raise ValueError(f"block expects {block.channels} channels, got {x_prev.shape[0]}")
    emb = time_embedding(t, mlp)
    if emb.shape[0] != block.time_dim:
        raise ValueError(f"time embedding has {emb.shape[0]} dims, block expects {block.time_dim}")
    _, h, w = x_prev.shape
    z = tc.concat_channels(x_prev, broadcast_time(emb, h, w))
    z = tc.conv2d(z, block.conv1)
    z = tc.batch_norm(z, block.bn)
    z = tc.activation(z, "relu")
    z = tc.conv2d(z, block.conv2)
    gate = tc.activation(tc.conv2d(x_prev, block.attn), "sigmoid")
    return (gate * z + x_prev).astype(tc.DTYPE)


def refine_chain(x_perturbed, net: RefinerNet, cfg: RefinerConfig) -> np.ndarray:
    x = x_perturbed
    for block, t in zip(net.blocks, timesteps(cfg.steps)):
        x = refine_step(x, block, t, net.time_mlp)
    return x


def blend(x, x_refined, alpha: float) -> np.ndarray:
    """``x + alpha * (x_refined - x)``, written as a lerp so both ends are exact."""
    a = tc.DTYPE(alpha)
    return ((tc.DTYPE(1) - a) * x + a * x_refined).astype(tc.DTYPE)


def refiner_forward(x, net: RefinerNet, cfg: RefinerConfig = RefinerConfig()) -> np.ndarray:
    x = tc.as_feature_map(x)
    if len(net.blocks) != cfg.steps:
        raise ValueError(f"config asks for {cfg.steps} steps but {len(net.blocks)} blocks were given")
    x_pert = adaptive_perturb(x, net.mask, cfg.sigma, cfg.seed)
    x_s = refine_chain(x_pert, net, cfg)
    return blend(x, x_s, cfg.alpha)
