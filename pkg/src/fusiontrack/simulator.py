"""Synthetic ground truth and corrupted detection streams.

Objects move with constant velocity (plus optional positional jitter) and
bounce off the arena walls. Occlusion windows remove an object from the ground
truth; a few frames either side of each window the object is only partially
visible, which the corruption model turns into low-confidence detections.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import tensor_core as tc
from .annotations import Annotation, FrameAnnotations
from .tracker import Detection


@dataclass(frozen=True)
class Occlusion:
    object_id: int
    start: int  # first fully hidden frame
    duration: int

    @property
    def end(self) -> int:
        return self.start + self.duration - 1


@dataclass(frozen=True)
class ScenarioSpec:
    num_objects: int = 10
    num_frames: int = 100
    arena: tuple[float, float] = (1280.0, 720.0)
    speed_range: tuple[float, float] = (1.0, 5.0)
    box_width_range: tuple[float, float] = (30.0, 60.0)
    aspect_range: tuple[float, float] = (1.5, 2.5)  # height / width
    spawn_window: tuple[int, int] = (1, 1)
    despawn_window: tuple[int, int] | None = None  # None: objects live to the last frame
    occlusions: tuple[Occlusion, ...] = ()
    random_occlusions: int = 0  # extra occlusion events per object
    occlusion_duration_range: tuple[int, int] = (3, 10)
    partial_margin: int = 3  # partially visible frames either side of an occlusion
    partial_visibility: float = 0.4
    jitter_std: float = 0.0
    num_classes: int = 1
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "occlusions", tuple(self.occlusions))
        if self.num_objects < 1 or self.num_frames < 1:
            raise ValueError("num_objects and num_frames must be positive")
        if min(self.arena) <= 0:
            raise ValueError("arena dimensions must be positive")
        for name in ("speed_range", "box_width_range", "aspect_range", "occlusion_duration_range"):
            lo, hi = getattr(self, name)
            if lo > hi or lo < 0:
                raise ValueError(f"{name} must satisfy 0 <= low <= high")
        if self.box_width_range[0] <= 0 or self.aspect_range[0] <= 0:
            raise ValueError("box sizes must be positive")
        if self.box_width_range[1] * self.aspect_range[1] > self.arena[1] or self.box_width_range[1] > self.arena[0]:
            raise ValueError("boxes must fit inside the arena")
        a, b = self.spawn_window
        if not 1 <= a <= b <= self.num_frames:
            raise ValueError("spawn_window must lie within the frame range")
        if self.despawn_window is not None:
            a, b = self.despawn_window
            if not self.spawn_window[1] <= a <= b <= self.num_frames:
                raise ValueError("despawn_window must lie after spawn_window and within the frame range")
        for occ in self.occlusions:
            if not 1 <= occ.object_id <= self.num_objects:
                raise ValueError(f"occlusion refers to unknown object {occ.object_id}")
            if occ.duration < 1 or occ.start < 1 or occ.end > self.num_frames:
                raise ValueError("occlusion windows must lie within the frame range")
        if self.jitter_std < 0 or self.partial_margin < 0:
            raise ValueError("jitter_std and partial_margin must be non-negative")
        if not 0.0 < self.partial_visibility < 1.0:
            raise ValueError("partial_visibility must lie in (0, 1)")
        if self.num_classes < 1:
            raise ValueError("num_classes must be positive")


@dataclass(frozen=True)
class ObjectPlan:
    id: int
    start: tuple[float, float]  # top-left corner at the first frame
    velocity: tuple[float, float]
    width: float
    height: float
    first_frame: int
    last_frame: int
    class_id: int = 1
    occlusions: tuple[Occlusion, ...] = field(default=())


def plan_objects(spec: ScenarioSpec) -> list[ObjectPlan]:
    g = tc.rng(tc.derive_seed(spec.seed, 0))
    aw, ah = spec.arena
    plans = []
    for oid in range(1, spec.num_objects + 1):
        w = float(g.uniform(*spec.box_width_range))
        h = float(w * g.uniform(*spec.aspect_range))
        x0 = float(g.uniform(0.0, aw - w))
        y0 = float(g.uniform(0.0, ah - h))
        speed = float(g.uniform(*spec.speed_range))
        heading = float(g.uniform(0.0, 2 * np.pi))
        first = int(g.integers(spec.spawn_window[0], spec.spawn_window[1] + 1))
        if spec.despawn_window is None:
            last = spec.num_frames
        else:
            last = int(g.integers(spec.despawn_window[0], spec.despawn_window[1] + 1))
        cls = int(g.integers(1, spec.num_classes + 1))
        occ = [o for o in spec.occlusions if o.object_id == oid]
        for _ in range(spec.random_occlusions):
            dur = int(g.integers(spec.occlusion_duration_range[0], spec.occlusion_duration_range[1] + 1))
            hi = max(first, last - dur + 1)
            start = int(g.integers(first, hi + 1))
            occ.append(Occlusion(oid, start, min(dur, spec.num_frames - start + 1)))
        plans.append(ObjectPlan(oid, (x0, y0), (speed * np.cos(heading), speed * np.sin(heading)),
                                w, h, first, last, cls, tuple(sorted(occ, key=lambda o: o.start))))
    return plans


def _reflect(pos: float, vel: float, lo: float, hi: float) -> tuple[float, float]:
    while pos < lo or pos > hi:
        if pos < lo:
            pos, vel = 2 * lo - pos, -vel
        else:
            pos, vel = 2 * hi - pos, -vel
    return pos, vel


def _visibility(frame: int, plan: ObjectPlan, spec: ScenarioSpec) -> float:
    vis = 1.0
    for o in plan.occlusions:
        if o.start <= frame <= o.end:
            return 0.0
        if o.start - spec.partial_margin <= frame < o.start or o.end < frame <= o.end + spec.partial_margin:
            vis = spec.partial_visibility
    return vis


def render(plans: list[ObjectPlan], spec: ScenarioSpec) -> FrameAnnotations:
    """Ground truth for frames ``1..num_frames`` (every frame key present)."""
    g = tc.rng(tc.derive_seed(spec.seed, 1))
    aw, ah = spec.arena
    gt: FrameAnnotations = {f: [] for f in range(1, spec.num_frames + 1)}
    for plan in plans:
        x, y = plan.start
        vx, vy = plan.velocity
        for f in range(plan.first_frame, plan.last_frame + 1):
            if f > plan.first_frame:
                dx, dy = vx, vy
                if spec.jitter_std > 0:
                    dx += float(g.normal(0.0, spec.jitter_std))
                    dy += float(g.normal(0.0, spec.jitter_std))
                x, vx = _reflect(x + dx, vx, 0.0, aw - plan.width)
                y, vy = _reflect(y + dy, vy, 0.0, ah - plan.height)
            vis = _visibility(f, plan, spec)
            if vis > 0:
                gt[f].append(Annotation(plan.id, (x, y, plan.width, plan.height), plan.class_id,
                                        visibility=vis))
    return gt


def generate_scenario(spec: ScenarioSpec) -> FrameAnnotations:
    return render(plan_objects(spec), spec)


@dataclass(frozen=True)
class CorruptionModel:
    """How ground truth turns into detections.

    A detection is "degraded" when its object is partially visible or its
    center was displaced by more than ``degrade_ratio`` of the smaller box side;
    degraded detections draw confidence from ``degraded_conf``, the rest from
    ``clean_conf`` (both Normal(mean, std), clamped to [0, 1]).
    """

    center_noise_std: float = 2.0
    size_noise_std: float = 0.05
    miss_rate: float = 0.05
    fp_rate: float = 0.5
    clean_conf: tuple[float, float] = (0.9, 0.05)
    degraded_conf: tuple[float, float] = (0.35, 0.1)
    degrade_ratio: float = 0.15
    fp_width_range: tuple[float, float] = (30.0, 60.0)
    fp_aspect_range: tuple[float, float] = (1.5, 2.5)
    seed: int = 0

    def __post_init__(self):
        if self.center_noise_std < 0 or self.size_noise_std < 0:
            raise ValueError("noise levels must be non-negative")
        if not 0.0 <= self.miss_rate <= 1.0:
            raise ValueError("miss_rate must lie in [0, 1]")
        if self.fp_rate < 0:
            raise ValueError("fp_rate must be non-negative")
        if self.clean_conf[1] < 0 or self.degraded_conf[1] < 0:
            raise ValueError("confidence std must be non-negative")
        if self.degrade_ratio <= 0:
            raise ValueError("degrade_ratio must be positive")


def _conf(mean_std: tuple[float, float], z: float) -> float:
    mean, std = mean_std
    return float(np.clip(mean + std * z, 0.0, 1.0))


def corrupt_with_origin(gt: FrameAnnotations, model: CorruptionModel,
                        arena: tuple[float, float] = (1280.0, 720.0)) -> dict[int, list[tuple[Detection, int | None]]]:
    """Detections per frame, each paired with its ground-truth id (None for false positives)."""
    g = tc.rng(tc.derive_seed(model.seed, 2))
    aw, ah = arena
    classes = sorted({a.class_id for frame in gt.values() for a in frame}) or [1]
    out: dict[int, list[tuple[Detection, int | None]]] = {}
    for f in sorted(gt):
        frame_dets: list[tuple[Detection, int | None]] = []
        for a in gt[f]:
            # draw every variate for every box so streams stay aligned across settings
            miss = g.random()
            nx, ny = g.standard_normal(2)
            sw, sh = g.standard_normal(2)
            conf_z = g.standard_normal()
            if miss < model.miss_rate:
                continue
            x, y, w, h = a.box
            dx = model.center_noise_std * nx
            dy = model.center_noise_std * ny
            w2 = max(1.0, w * (1 + model.size_noise_std * sw))
            h2 = max(1.0, h * (1 + model.size_noise_std * sh))
            shift = model.center_noise_std * float(np.hypot(nx, ny))
            degraded = a.visibility < 1.0 or shift > model.degrade_ratio * min(w, h)
            score = _conf(model.degraded_conf if degraded else model.clean_conf, conf_z)
            det = Detection(f, (x + dx - (w2 - w) / 2, y + dy - (h2 - h) / 2, w2, h2), score, a.class_id)
            frame_dets.append((det, a.id))
        for _ in range(int(g.poisson(model.fp_rate))):
            w = float(g.uniform(*model.fp_width_range))
            h = float(w * g.uniform(*model.fp_aspect_range))
            x = float(g.uniform(0.0, max(1.0, aw - w)))
            y = float(g.uniform(0.0, max(1.0, ah - h)))
            cls = classes[int(g.integers(len(classes)))]
            frame_dets.append((Detection(f, (x, y, w, h), _conf(model.degraded_conf, g.standard_normal()), cls), None))
        perm = g.permutation(len(frame_dets))
        out[f] = [frame_dets[i] for i in perm]
    return out


def corrupt_detections(gt: FrameAnnotations, model: CorruptionModel,
                       arena: tuple[float, float] = (1280.0, 720.0)) -> dict[int, list[Detection]]:
    return {f: [d for d, _ in dets] for f, dets in corrupt_with_origin(gt, model, arena).items()}
