"""Per-frame labelled boxes shared by ground truth, tracker output and I/O."""

from __future__ import annotations

from dataclasses import dataclass

from .tracker import Box, Track

FrameAnnotations = dict[int, list["Annotation"]]


@dataclass(frozen=True)
class Annotation:
    id: int
    box: Box
    class_id: int = 1
    score: float = 1.0
    visibility: float = 1.0


def iou(a: Box, b: Box) -> float:
    # areas come from the same corner differences as the overlap, so iou(a, a) == 1
    ax0, ay0, ax1, ay1 = a[0], a[1], a[0] + a[2], a[1] + a[3]
    bx0, by0, bx1, by1 = b[0], b[1], b[0] + b[2], b[1] + b[3]
    iw = min(ax1, bx1) - max(ax0, bx0)
    ih = min(ay1, by1) - max(ay0, by0)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    union = (ax1 - ax0) * (ay1 - ay0) + (bx1 - bx0) * (by1 - by0) - inter
    return min(1.0, inter / union) if union > 0 else 0.0


def tracks_to_annotations(tracks_by_frame: dict[int, list[Track]],
                          emit_coasted: bool = False) -> FrameAnnotations:
    out: FrameAnnotations = {}
    for frame, tracks in tracks_by_frame.items():
        out[frame] = [
            Annotation(t.id, t.box, t.class_id, t.score)
            for t in tracks if emit_coasted or not t.coasted
        ]
    return out


def count_boxes(frames: FrameAnnotations) -> int:
    return sum(len(v) for v in frames.values())
