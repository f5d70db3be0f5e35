"""Confidence-staged multi-object tracker with a constant-velocity motion model.

Per frame: predict every track one step ahead, associate detections to tracks
in stages of decreasing confidence threshold (each stage solved as a linear
assignment over a gated, class-constrained cost), spawn tracks from leftover
confident detections, and let unmatched tracks coast on a decaying velocity
until they have been missing for more than ``max_age`` frames.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from .assignment import SENTINEL, solve_assignment

Box = tuple[float, float, float, float]  # x, y, w, h (top-left origin)
Vec = tuple[float, float]


def box_center(box: Box) -> Vec:
    x, y, w, h = box
    return (x + w / 2.0, y + h / 2.0)


def box_area(box: Box) -> float:
    return box[2] * box[3]


def box_at_center(center: Vec, w: float, h: float) -> Box:
    return (center[0] - w / 2.0, center[1] - h / 2.0, w, h)


@dataclass(frozen=True)
class Detection:
    frame: int
    box: Box
    score: float
    class_id: int = 1

    def __post_init__(self):
        if self.frame < 0:
            raise ValueError("frame must be non-negative")
        if not (self.box[2] > 0 and self.box[3] > 0):
            raise ValueError(f"box width and height must be positive, got {self.box}")
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score must lie in [0, 1], got {self.score}")

    @property
    def center(self) -> Vec:
        return box_center(self.box)


@dataclass(frozen=True)
class Track:
    id: int
    position: Vec  # box center
    velocity: Vec
    box: Box
    class_id: int = 1
    score: float = 1.0
    age: int = 0  # consecutive unmatched frames
    coasted: bool = False  # True when the last step had no detection for this track


@dataclass(frozen=True)
class TrackerConfig:
    """Association constants.

    ``thresholds`` must be strictly decreasing in (0, 1). The ladder values,
    ``gate_factor`` and ``max_age`` are our choices; ``alpha``, ``beta`` and
    ``size_weight`` follow the published settings.
    """

    thresholds: tuple[float, ...] = (0.9, 0.8, 0.7, 0.6, 0.5, 0.4)
    alpha: float = 0.7
    beta: float = 0.1
    size_weight: float = 100.0
    max_age: int = 30
    new_track_threshold: float = 0.7
    gate_factor: float = 2.0
    sentinel: float = SENTINEL

    def __post_init__(self):
        th = tuple(float(t) for t in self.thresholds)
        object.__setattr__(self, "thresholds", th)
        if not th:
            raise ValueError("at least one threshold is required")
        if any(not 0.0 < t < 1.0 for t in th):
            raise ValueError("thresholds must lie in (0, 1)")
        if any(a <= b for a, b in zip(th, th[1:])):
            raise ValueError("thresholds must be strictly decreasing")
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError("alpha must lie in (0, 1]")
        if self.beta < 0:
            raise ValueError("beta must be non-negative")
        if self.max_age < 1:
            raise ValueError("max_age must be a positive integer")
        if self.gate_factor <= 0:
            raise ValueError("gate_factor must be positive")


def predict_tracks(tracks: Sequence[Track]) -> list[Track]:
    """Constant-velocity one-step prediction; boxes translate rigidly."""
    out = []
    for t in tracks:
        p = (t.position[0] + t.velocity[0], t.position[1] + t.velocity[1])
        x, y, w, h = t.box
        out.append(replace(t, position=p, box=(x + t.velocity[0], y + t.velocity[1], w, h)))
    return out


def compute_cost(detections: Sequence[Detection], tracks: Sequence[Track], cfg: TrackerConfig) -> np.ndarray:
    """Cost matrix, detections as rows and (predicted) tracks as columns.

    ``C = |p_d - p_t|^2 + size_weight * |A_d - A_t| / max(A_d, A_t)`` with box
    areas ``A``. Pairs of different class, or whose squared distance exceeds
    ``gate_factor * A_t``, get ``cfg.sentinel``.
    """
    cost = np.full((len(detections), len(tracks)), cfg.sentinel, dtype=np.float64)
    for i, d in enumerate(detections):
        dx, dy = d.center
        ad = box_area(d.box)
        for j, t in enumerate(tracks):
            if d.class_id != t.class_id:
                continue
            at = box_area(t.box)
            spatial = (dx - t.position[0]) ** 2 + (dy - t.position[1]) ** 2
            if spatial > cfg.gate_factor * at:
                continue
            size = abs(ad - at) / max(ad, at)
            cost[i, j] = spatial + cfg.size_weight * size
    return cost


def update_matched(track: Track, det: Detection, cfg: TrackerConfig) -> Track:
    """Snap to the detection and EMA-smooth the velocity.

    ``track`` is the stored state from the previous frame (not the prediction),
    so the displacement is measured from the last confirmed position.
    """
    p_new = det.center
    a = cfg.alpha
    v = ((1.0 - a) * track.velocity[0] + a * (p_new[0] - track.position[0]),
         (1.0 - a) * track.velocity[1] + a * (p_new[1] - track.position[1]))
    return replace(track, position=p_new, velocity=v, box=det.box, score=det.score,
                   class_id=det.class_id, age=0, coasted=False)


def decay_factor(age: int, beta: float) -> float:
    return max(0.5, 1.0 - beta * age)


def handle_unmatched(track: Track, cfg: TrackerConfig) -> Track | None:
    """Age, decay and coast an unmatched track; ``None`` once it exceeds ``max_age``."""
    age = track.age + 1
    if age > cfg.max_age:
        return None
    f = decay_factor(age, cfg.beta)
    v = (track.velocity[0] * f, track.velocity[1] * f)
    p = (track.position[0] + v[0], track.position[1] + v[1])
    x, y, w, h = track.box
    return replace(track, position=p, velocity=v, box=(x + v[0], y + v[1], w, h),
                   age=age, coasted=True)


@dataclass
class IdCounter:
    next_id: int = 1

    def take(self) -> int:
        i = self.next_id
        self.next_id += 1
        return i


def spawn_tracks(detections: Iterable[Detection], cfg: TrackerConfig, ids: IdCounter) -> list[Track]:
    out = []
    for d in detections:
        if d.score > cfg.new_track_threshold:
            out.append(Track(id=ids.take(), position=d.center, velocity=(0.0, 0.0), box=d.box,
                             class_id=d.class_id, score=d.score))
    return out


@dataclass
class StepLog:
    """Which (detection, track id) pairs each stage produced; for inspection and tests."""

    stages: list[list[tuple[int, int]]] = field(default_factory=list)


def step(tracks: Sequence[Track], detections: Sequence[Detection], cfg: TrackerConfig,
         ids: IdCounter, log: StepLog | None = None) -> list[Track]:
    """Advance the track set by one frame.

    Detection indices in ``log`` refer to positions in ``detections`` as given.
    Returns surviving tracks ordered by id. ``ids`` is advanced for spawned tracks.
    """
    # stable sort: equal scores keep input order
    order = sorted(range(len(detections)), key=lambda i: -detections[i].score)
    predicted = predict_tracks(tracks)
    unmatched_dets = list(order)
    unmatched_trk = list(range(len(tracks)))
    updated: dict[int, Track] = {}

    for tau in cfg.thresholds:
        stage_dets = [i for i in unmatched_dets if detections[i].score > tau]
        if not stage_dets:
            if log is not None:
                log.stages.append([])
            continue
        if not unmatched_trk:
            break
        cost = compute_cost([detections[i] for i in stage_dets],
                            [predicted[j] for j in unmatched_trk], cfg)
        pairs = solve_assignment(cost, cfg.sentinel)
        matched_d, matched_t = set(), set()
        stage_log = []
        for r, c in pairs:
            di, tj = stage_dets[r], unmatched_trk[c]
            updated[tj] = update_matched(tracks[tj], detections[di], cfg)
            matched_d.add(di)
            matched_t.add(tj)
            stage_log.append((di, tracks[tj].id))
        if log is not None:
            log.stages.append(stage_log)
        unmatched_dets = [i for i in unmatched_dets if i not in matched_d]
        unmatched_trk = [j for j in unmatched_trk if j not in matched_t]

    out = list(updated.values())
    out.extend(spawn_tracks((detections[i] for i in unmatched_dets), cfg, ids))
    for j in unmatched_trk:
        t = handle_unmatched(tracks[j], cfg)
        if t is not None:
            out.append(t)
    out.sort(key=lambda t: t.id)
    return out


class HierarchicalTracker:
    """Stateful wrapper: one instance per sequence, fed frames in order."""

    def __init__(self, cfg: TrackerConfig = TrackerConfig()):
        self.cfg = cfg
        self.ids = IdCounter()
        self.tracks: list[Track] = []

    def update(self, detections: Sequence[Detection]) -> list[Track]:
        self.tracks = step(self.tracks, detections, self.cfg, self.ids)
        return self.tracks


def run_tracker(detections_by_frame: dict[int, list[Detection]], cfg: TrackerConfig,
                frames: Iterable[int] | None = None) -> dict[int, list[Track]]:
    """Track a whole sequence. Frames without detections still advance the tracker."""
    if frames is None:
        frames = range(min(detections_by_frame, default=1), max(detections_by_frame, default=0) + 1)
    tracker = HierarchicalTracker(cfg)
    return {f: tracker.update(detections_by_frame.get(f, [])) for f in frames}
