"""Iterative cross-modal harmonization of two feature maps.

Each step perturbs both modality maps with seeded Gaussian noise, then lets a
modality-specific residual network refine the perturbed map while looking at
the other modality's previous-step features. After ``steps`` rounds the two
maps are summed into the fused representation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import tensor_core as tc
from .params import ParamStore, get_conv, get_norm, put_conv, put_norm

RGB_TAG = 0
THERMAL_TAG = 1


@dataclass(frozen=True)
class RefineNet:
    """conv3x3(2C->C) -> BN -> ReLU -> BN -> conv3x3(C->C); returns a residual."""

    conv1: tc.ConvParams
    bn1: tc.NormParams
    bn2: tc.NormParams
    conv2: tc.ConvParams

    def __post_init__(self):
        c = self.conv2.out_channels
        if self.conv1.in_channels != 2 * c:
            raise ValueError(f"conv1 must take {2 * c} channels, takes {self.conv1.in_channels}")
        if self.conv1.out_channels != c or self.conv2.in_channels != c:
            raise ValueError("conv1 output and conv2 input must both have C channels")
        if self.bn1.channels != c or self.bn2.channels != c:
            raise ValueError("batch norm layers must have C channels")
        for conv in (self.conv1, self.conv2):
            kh, kw = conv.kernel_size
            if kh != kw or kh % 2 == 0 or conv.padding != kh // 2:
                raise ValueError("refinement convs must be odd, square and spatial-preserving")

    @property
    def channels(self) -> int:
        return self.conv2.out_channels

    @classmethod
    def random(cls, channels: int, generator: np.random.Generator) -> "RefineNet":
        return cls(
            conv1=tc.random_conv(channels, 2 * channels, 3, generator),
            bn1=tc.random_norm(channels, generator),
            bn2=tc.random_norm(channels, generator),
            conv2=tc.random_conv(channels, channels, 3, generator),
        )

    def with_zero_output(self) -> "RefineNet":
        """Copy whose final conv is all zeros, so the residual vanishes."""
        zero = tc.ConvParams(np.zeros_like(self.conv2.weight), np.zeros_like(self.conv2.bias),
                             self.conv2.padding)
        return RefineNet(self.conv1, self.bn1, self.bn2, zero)

    def store(self, store: ParamStore, prefix: str) -> None:
        put_conv(store, f"{prefix}.conv1", self.conv1)
        put_norm(store, f"{prefix}.bn1", self.bn1)
        put_norm(store, f"{prefix}.bn2", self.bn2)
        put_conv(store, f"{prefix}.conv2", self.conv2)

    @classmethod
    def load(cls, store: ParamStore, prefix: str, channels: int) -> "RefineNet":
        return cls(
            conv1=get_conv(store, f"{prefix}.conv1", channels, 2 * channels, 3),
            bn1=get_norm(store, f"{prefix}.bn1", channels),
            bn2=get_norm(store, f"{prefix}.bn2", channels),
            conv2=get_conv(store, f"{prefix}.conv2", channels, channels, 3),
        )


@dataclass(frozen=True)
class CmdfNets:
    rgb: RefineNet
    thermal: RefineNet

    def __post_init__(self):
        if self.rgb.channels != self.thermal.channels:
            raise ValueError("both refinement nets must use the same channel count")

    @property
    def channels(self) -> int:
        return self.rgb.channels

    @classmethod
    def random(cls, channels: int, seed: int) -> "CmdfNets":
        g = tc.rng(seed)
        return cls(RefineNet.random(channels, g), RefineNet.random(channels, g))

    def to_store(self, store: ParamStore | None = None) -> ParamStore:
        store = ParamStore() if store is None else store
        self.rgb.store(store, "cmdf.rgb")
        self.thermal.store(store, "cmdf.t")
        return store

    @classmethod
    def from_store(cls, store: ParamStore, channels: int) -> "CmdfNets":
        return cls(RefineNet.load(store, "cmdf.rgb", channels),
                   RefineNet.load(store, "cmdf.t", channels))


@dataclass(frozen=True)
class CmdfConfig:
    """``sigma`` defaults to 0.1; that value is a placeholder, not a tuned setting.

    ``stream_tags`` names the noise stream used for (rgb, thermal). Swapping it
    together with the inputs and networks mirrors the computation exactly.
    """

    steps: int = 3
    sigma: float = 0.1
    base_seed: int = 0
    stream_tags: tuple[int, int] = field(default=(RGB_TAG, THERMAL_TAG))

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if self.sigma < 0:
            raise ValueError("sigma must be non-negative")
        if self.base_seed < 0:
            raise ValueError("base_seed must be non-negative")


@dataclass(frozen=True)
class CmdfState:
    r_rgb: np.ndarray
    r_t: np.ndarray
    step: int = 0

    def __post_init__(self):
        if self.r_rgb.shape != self.r_t.shape:
            raise ValueError(f"modality shapes differ: {self.r_rgb.shape} vs {self.r_t.shape}")


def step_noise(shape: tuple[int, int, int], cfg: CmdfConfig, step: int, tag: int) -> np.ndarray:
    """Noise tensor for one modality at one step; resampled every step."""
    return tc.gaussian_noise(*shape, seed=tc.derive_seed(cfg.base_seed, step, tag))


def refine_block(x_self, x_other, net: RefineNet) -> np.ndarray:
    """Residual correction for ``x_self`` given the other modality's features."""
    x_self = tc.as_feature_map(x_self)
    x_other = tc.as_feature_map(x_other)
    if x_self.shape != x_other.shape:
        raise ValueError(f"modality shapes differ: {x_self.shape} vs {x_other.shape}")
    if x_self.shape[0] != net.channels:
        raise ValueError(f"net expects {net.channels} channels, got {x_self.shape[0]}")
    h = tc.conv2d(tc.concat_channels(x_self, x_other), net.conv1)
    h = tc.batch_norm(h, net.bn1)
    h = tc.activation(h, "relu")
    h = tc.batch_norm(h, net.bn2)
    return tc.conv2d(h, net.conv2)


def perturb(r, sigma: float, noise) -> np.ndarray:
    if sigma == 0:
        return np.array(r, dtype=tc.DTYPE)
    return (r + tc.DTYPE(sigma) * noise).astype(tc.DTYPE)


def harmonize_step(state: CmdfState, nets: CmdfNets, cfg: CmdfConfig, step: int) -> CmdfState:
    if not 1 <= step <= cfg.steps:
        raise ValueError(f"step must be in [1, {cfg.steps}], got {step}")
    shape = state.r_rgb.shape
    rgb_tag, t_tag = cfg.stream_tags
    rgb_tilde = perturb(state.r_rgb, cfg.sigma, step_noise(shape, cfg, step, rgb_tag))
    t_tilde = perturb(state.r_t, cfg.sigma, step_noise(shape, cfg, step, t_tag))
    # each modality reads the other's step-(i-1) features, not its perturbed copy
    r_rgb = rgb_tilde + refine_block(rgb_tilde, state.r_t, nets.rgb)
    r_t = t_tilde + refine_block(t_tilde, state.r_rgb, nets.thermal)
    return CmdfState(r_rgb=r_rgb, r_t=r_t, step=step)


def run_steps(state: CmdfState, nets: CmdfNets, cfg: CmdfConfig, until: int | None = None) -> CmdfState:
    """Advance ``state`` through the remaining steps (or up to ``until``)."""
    last = cfg.steps if until is None else until
    for i in range(state.step + 1, last + 1):
        state = harmonize_step(state, nets, cfg, i)
    return state


def cmdf_forward(x_rgb, x_t, nets: CmdfNets, cfg: CmdfConfig = CmdfConfig()) -> np.ndarray:
    """Fuse two same-shape modality maps; returns ``r_rgb^S + r_t^S``."""
    x_rgb = tc.as_feature_map(x_rgb)
    x_t = tc.as_feature_map(x_t)
    if x_rgb.shape != x_t.shape:
        raise ValueError(f"modality shapes differ: {x_rgb.shape} vs {x_t.shape}")
    state = run_steps(CmdfState(x_rgb, x_t, 0), nets, cfg)
    return state.r_rgb + state.r_t
