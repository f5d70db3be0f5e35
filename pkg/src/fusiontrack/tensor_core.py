"""Dense tensor primitives used by the fusion and refinement networks.

Feature maps are plain ``numpy`` arrays of shape ``(channels, height, width)``
in ``float32``. Every function here is pure: inputs are never modified and the
same inputs (including seeds) give bit-identical outputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DTYPE = np.float32


def as_feature_map(x) -> np.ndarray:
    """Validate and convert ``x`` to a C-contiguous float32 ``(C, H, W)`` array."""
    arr = np.ascontiguousarray(x, dtype=DTYPE)
    if arr.ndim != 3:
        raise ValueError(f"feature map must be rank 3 (C, H, W), got shape {arr.shape}")
    if min(arr.shape) < 1:
        raise ValueError(f"feature map dims must be positive, got {arr.shape}")
    return arr


@dataclass(frozen=True)
class ConvParams:
    """Weights ``(out, in, kh, kw)``, bias ``(out,)`` and zero padding for a stride-1 conv."""

    weight: np.ndarray
    bias: np.ndarray
    padding: int = 0

    def __post_init__(self):
        w = np.ascontiguousarray(self.weight, dtype=DTYPE)
        b = np.ascontiguousarray(self.bias, dtype=DTYPE)
        if w.ndim != 4 or min(w.shape) < 1:
            raise ValueError(f"conv weight must be (out, in, kh, kw), got {w.shape}")
        if b.shape != (w.shape[0],):
            raise ValueError(f"conv bias must have shape ({w.shape[0]},), got {b.shape}")
        if self.padding < 0:
            raise ValueError("padding must be non-negative")
        object.__setattr__(self, "weight", w)
        object.__setattr__(self, "bias", b)

    @property
    def out_channels(self) -> int:
        return self.weight.shape[0]

    @property
    def in_channels(self) -> int:
        return self.weight.shape[1]

    @property
    def kernel_size(self) -> tuple[int, int]:
        return self.weight.shape[2], self.weight.shape[3]


@dataclass(frozen=True)
class NormParams:
    """Inference-mode batch normalization parameters."""

    gamma: np.ndarray
    beta: np.ndarray
    running_mean: np.ndarray
    running_var: np.ndarray
    eps: float = 1e-5

    def __post_init__(self):
        arrays = {}
        for name in ("gamma", "beta", "running_mean", "running_var"):
            a = np.ascontiguousarray(getattr(self, name), dtype=DTYPE)
            if a.ndim != 1:
                raise ValueError(f"{name} must be 1-D, got shape {a.shape}")
            arrays[name] = a
        if len({a.shape for a in arrays.values()}) != 1:
            raise ValueError("batch norm arrays must share one length")
        if np.any(arrays["running_var"] < 0):
            raise ValueError("running_var must be non-negative")
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        for name, a in arrays.items():
            object.__setattr__(self, name, a)

    @property
    def channels(self) -> int:
        return self.gamma.shape[0]

    @classmethod
    def identity(cls, channels: int, eps: float = 1e-5) -> "NormParams":
        return cls(
            gamma=np.ones(channels),
            beta=np.zeros(channels),
            running_mean=np.zeros(channels),
            running_var=np.ones(channels),
            eps=eps,
        )


@dataclass(frozen=True)
class LinearParams:
    weight: np.ndarray  # (out_dim, in_dim)
    bias: np.ndarray  # (out_dim,)

    def __post_init__(self):
        w = np.ascontiguousarray(self.weight, dtype=DTYPE)
        b = np.ascontiguousarray(self.bias, dtype=DTYPE)
        if w.ndim != 2 or min(w.shape) < 1:
            raise ValueError(f"linear weight must be (out, in), got {w.shape}")
        if b.shape != (w.shape[0],):
            raise ValueError(f"linear bias must have shape ({w.shape[0]},), got {b.shape}")
        object.__setattr__(self, "weight", w)
        object.__setattr__(self, "bias", b)

    @property
    def out_dim(self) -> int:
        return self.weight.shape[0]

    @property
    def in_dim(self) -> int:
        return self.weight.shape[1]


def conv2d(x, p: ConvParams) -> np.ndarray:
    """Stride-1 2-D convolution (cross-correlation) with zero padding.

    Output spatial size is ``H + 2*padding - kh + 1`` by ``W + 2*padding - kw + 1``.
    Accumulation is done in float64 and the result rounded to float32.
    """
    x = as_feature_map(x)
    if x.shape[0] != p.in_channels:
        raise ValueError(
            f"conv expects {p.in_channels} input channels, got {x.shape[0]}"
        )
    kh, kw = p.kernel_size
    pad = p.padding
    if x.shape[1] + 2 * pad < kh or x.shape[2] + 2 * pad < kw:
        raise ValueError(
            f"kernel {kh}x{kw} larger than padded input {x.shape[1] + 2 * pad}x{x.shape[2] + 2 * pad}"
        )
    xp = np.pad(x.astype(np.float64), ((0, 0), (pad, pad), (pad, pad)))
    # windows: (C, H_out, W_out, kh, kw)
    windows = np.lib.stride_tricks.sliding_window_view(xp, (kh, kw), axis=(1, 2))
    out = np.einsum("chwij,ocij->ohw", windows, p.weight.astype(np.float64), optimize=True)
    out += p.bias.astype(np.float64)[:, None, None]
    return out.astype(DTYPE)


def batch_norm(x, p: NormParams) -> np.ndarray:
    x = as_feature_map(x)
    if x.shape[0] != p.channels:
        raise ValueError(f"batch norm has {p.channels} channels, input has {x.shape[0]}")
    mean = p.running_mean.astype(np.float64)[:, None, None]
    scale = (p.gamma.astype(np.float64) / np.sqrt(p.running_var.astype(np.float64) + p.eps))[:, None, None]
    out = (x.astype(np.float64) - mean) * scale + p.beta.astype(np.float64)[:, None, None]
    return out.astype(DTYPE)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    # split by sign so exp never overflows
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def activation(x, kind: str) -> np.ndarray:
    """Elementwise ``relu``, ``silu`` or ``sigmoid``. Works on arrays of any rank."""
    a = np.asarray(x, dtype=DTYPE)
    if kind == "relu":
        return np.maximum(a, DTYPE(0))
    a64 = a.astype(np.float64)
    if kind == "sigmoid":
        return _sigmoid(a64).astype(DTYPE)
    if kind == "silu":
        return (a64 * _sigmoid(a64)).astype(DTYPE)
    raise ValueError(f"unknown activation {kind!r}")


def concat_channels(a, b) -> np.ndarray:
    a = as_feature_map(a)
    b = as_feature_map(b)
    if a.shape[1:] != b.shape[1:]:
        raise ValueError(f"spatial dims differ: {a.shape[1:]} vs {b.shape[1:]}")
    return np.concatenate([a, b], axis=0)


def linear(x, p: LinearParams) -> np.ndarray:
    v = np.asarray(x, dtype=DTYPE)
    if v.ndim != 1 or v.shape[0] != p.in_dim:
        raise ValueError(f"linear expects a vector of length {p.in_dim}, got shape {v.shape}")
    out = p.weight.astype(np.float64) @ v.astype(np.float64) + p.bias.astype(np.float64)
    return out.astype(DTYPE)


def rng(seed: int) -> np.random.Generator:
    """The package-wide generator: PCG64 bit stream seeded through ``SeedSequence``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def derive_seed(*keys: int) -> int:
    """Hash a tuple of non-negative integers into a 64-bit seed (SeedSequence mixing)."""
    return int(np.random.SeedSequence(list(keys)).generate_state(1, np.uint64)[0])


def gaussian_noise(channels: int, height: int, width: int, seed: int) -> np.ndarray:
    """I.i.d. standard normal feature map, fully determined by ``seed``.

    Samples come from PCG64 with numpy's ziggurat normal transform, drawn in
    float64 and rounded to float32.
    """
    if min(channels, height, width) < 1:
        raise ValueError("noise dims must be positive")
    z = rng(seed).standard_normal((channels, height, width))
    return z.astype(DTYPE)


def uniform_init(shape, fan_in: int, generator: np.random.Generator) -> np.ndarray:
    """Uniform weights in ``[-k, k]`` with ``k = 1/sqrt(fan_in)``."""
    k = 1.0 / np.sqrt(fan_in)
    return generator.uniform(-k, k, size=shape).astype(DTYPE)


def random_conv(out_ch: int, in_ch: int, kernel: int, generator: np.random.Generator,
                padding: int | None = None) -> ConvParams:
    fan_in = in_ch * kernel * kernel
    return ConvParams(
        weight=uniform_init((out_ch, in_ch, kernel, kernel), fan_in, generator),
        bias=uniform_init((out_ch,), fan_in, generator),
        padding=kernel // 2 if padding is None else padding,
    )


def random_linear(out_dim: int, in_dim: int, generator: np.random.Generator) -> LinearParams:
    return LinearParams(
        weight=uniform_init((out_dim, in_dim), in_dim, generator),
        bias=uniform_init((out_dim,), in_dim, generator),
    )


def random_norm(channels: int, generator: np.random.Generator) -> NormParams:
    """Batch norm with perturbed affine terms and plausible running statistics."""
    return NormParams(
        gamma=generator.uniform(0.5, 1.5, channels),
        beta=generator.uniform(-0.1, 0.1, channels),
        running_mean=generator.uniform(-0.1, 0.1, channels),
        running_var=generator.uniform(0.5, 1.5, channels),
    )
