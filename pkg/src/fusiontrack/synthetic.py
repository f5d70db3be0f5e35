"""Hand-built inputs and weight sets for demos and directional checks.

``cluttered_pair`` draws two modality maps that share a handful of bright
targets but carry independent clutter. The ``peaked_*`` weight sets respond to
cross-modal agreement through a thresholded ReLU, so targets get amplified
while clutter passes through mostly untouched.
"""

from __future__ import annotations

import numpy as np

from . import tensor_core as tc
from .cmdf import CmdfNets, RefineNet
from .refiner import NoiseMaskNet, RefineBlock, RefinerConfig, RefinerNet, TimeMlp
from .simulator import ScenarioSpec, CorruptionModel


def cluttered_pair(channels: int = 4, height: int = 32, width: int = 32, seed: int = 0,
                   num_targets: int = 4, target_amplitude: float = 3.0,
                   clutter_std: float = 0.6) -> tuple[np.ndarray, np.ndarray]:
    g = tc.rng(seed)
    yy, xx = np.mgrid[0:height, 0:width]
    targets = np.zeros((height, width))
    for _ in range(num_targets):
        cy, cx = g.uniform(0, height), g.uniform(0, width)
        s = g.uniform(1.0, 2.0)
        targets += np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (2 * s * s))
    gains = g.uniform(0.7, 1.3, size=(2, channels))
    maps = []
    for m in range(2):
        clutter = clutter_std * g.standard_normal((channels, height, width))
        maps.append((target_amplitude * gains[m][:, None, None] * targets + clutter).astype(tc.DTYPE))
    return maps[0], maps[1]


def _center_conv(matrix: np.ndarray, bias, kernel: int = 3) -> tc.ConvParams:
    out_ch, in_ch = matrix.shape
    w = np.zeros((out_ch, in_ch, kernel, kernel), dtype=tc.DTYPE)
    w[:, :, kernel // 2, kernel // 2] = matrix
    return tc.ConvParams(w, np.broadcast_to(np.asarray(bias, dtype=tc.DTYPE), (out_ch,)).copy(), kernel // 2)


def peaked_refine_net(channels: int, threshold: float = 1.5, gain: float = 1.0) -> RefineNet:
    """Residual ``gain * relu(mean(x_self, x_other) - threshold)``, channel by channel."""
    eye = np.eye(channels)
    return RefineNet(
        conv1=_center_conv(np.hstack([0.5 * eye, 0.5 * eye]), -threshold),
        bn1=tc.NormParams.identity(channels),
        bn2=tc.NormParams.identity(channels),
        conv2=_center_conv(gain * eye, 0.0),
    )


def peaked_cmdf_nets(channels: int, threshold: float = 1.5, gain: float = 1.0) -> CmdfNets:
    net = peaked_refine_net(channels, threshold, gain)
    return CmdfNets(net, net)


def peaked_refiner(channels: int, cfg: RefinerConfig, threshold: float = 3.0, gain: float = 0.5,
                   gate_slope: float = 2.0) -> RefinerNet:
    """Blocks add ``sigmoid(slope * (x - threshold)) * gain * relu(x - threshold)``.

    The time embedding is wired in but carries zero weight into the main path.
    """
    d = cfg.time_dim
    mlp = TimeMlp(tc.LinearParams(np.ones((d, 1)), np.zeros(d)),
                  tc.LinearParams(np.eye(d), np.zeros(d)))
    mask = NoiseMaskNet(tc.ConvParams(np.zeros((1, channels, 1, 1)), np.zeros(1), 0))
    eye = np.eye(channels)
    block = RefineBlock(
        conv1=_center_conv(np.hstack([eye, np.zeros((channels, d))]), -threshold),
        bn=tc.NormParams.identity(channels),
        conv2=_center_conv(gain * eye, 0.0),
        attn=tc.ConvParams((gate_slope * eye)[:, :, None, None], np.full(channels, -gate_slope * threshold), 0),
    )
    return RefinerNet(mlp, mask, (block,) * cfg.steps)


def occlusion_heavy_scenario(seed: int, num_objects: int = 15, num_frames: int = 200) -> tuple[ScenarioSpec, CorruptionModel]:
    """Crowded, frequently occluded scene where many true detections score below 0.5."""
    spec = ScenarioSpec(
        num_objects=num_objects,
        num_frames=num_frames,
        random_occlusions=6,
        occlusion_duration_range=(5, 15),
        partial_margin=8,
        seed=seed,
    )
    model = CorruptionModel(center_noise_std=3.0, fp_rate=1.0, seed=tc.derive_seed(seed, 7))
    return spec, model
