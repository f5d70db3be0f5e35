"""MOTChallenge-style text files.

Detections: ``frame,id,x,y,w,h,score,class,visibility`` (id ignored).
Ground truth: ``frame,id,x,y,w,h,active,class,visibility``.
Results: ``frame,id,x,y,w,h,score,-1,-1,-1``.
"""

from __future__ import annotations

from collections import defaultdict
from typing import Iterable

from .annotations import Annotation, FrameAnnotations
from .tracker import Detection, Track


class MotFormatError(ValueError):
    pass


_FIELDS = ("frame", "id", "x", "y", "w", "h", "score", "class", "visibility")


def _rows(text: str, min_fields: int) -> Iterable[tuple[int, list[str]]]:
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) < min_fields:
            raise MotFormatError(f"line {lineno}: expected at least {min_fields} fields, got {len(parts)}")
        yield lineno, parts


def _num(parts: list[str], idx: int, lineno: int, kind=float):
    try:
        v = kind(float(parts[idx])) if kind is int else kind(parts[idx])
    except ValueError:
        raise MotFormatError(f"line {lineno}: field {idx + 1} ({_FIELDS[idx]}) is not a number: {parts[idx]!r}") from None
    if kind is int and float(parts[idx]) != v:
        raise MotFormatError(f"line {lineno}: field {idx + 1} ({_FIELDS[idx]}) is not an integer: {parts[idx]!r}")
    return v


def _box(parts: list[str], lineno: int) -> tuple[float, float, float, float]:
    x, y, w, h = (_num(parts, i, lineno) for i in range(2, 6))
    if w <= 0:
        raise MotFormatError(f"line {lineno}: field 5 (w) must be positive, got {parts[4]}")
    if h <= 0:
        raise MotFormatError(f"line {lineno}: field 6 (h) must be positive, got {parts[5]}")
    return (x, y, w, h)


def parse_mot_detections(text: str) -> dict[int, list[Detection]]:
    out: dict[int, list[Detection]] = defaultdict(list)
    for lineno, parts in _rows(text, 7):
        frame = _num(parts, 0, lineno, int)
        box = _box(parts, lineno)
        score = _num(parts, 6, lineno)
        cls = _num(parts, 7, lineno, int) if len(parts) > 7 else 1
        try:
            out[frame].append(Detection(frame, box, score, cls))
        except ValueError as exc:
            raise MotFormatError(f"line {lineno}: {exc}") from None
    return dict(sorted(out.items()))


def parse_mot_ground_truth(text: str) -> FrameAnnotations:
    """Ground truth rows; rows whose ``active`` flag is 0 are skipped."""
    out: FrameAnnotations = defaultdict(list)
    for lineno, parts in _rows(text, 6):
        frame = _num(parts, 0, lineno, int)
        oid = _num(parts, 1, lineno, int)
        box = _box(parts, lineno)
        if len(parts) > 6 and _num(parts, 6, lineno) == 0:
            continue
        cls = _num(parts, 7, lineno, int) if len(parts) > 7 else 1
        vis = _num(parts, 8, lineno) if len(parts) > 8 else 1.0
        out[frame].append(Annotation(oid, box, cls, visibility=vis))
    return dict(sorted(out.items()))


def parse_mot_results(text: str) -> FrameAnnotations:
    out: FrameAnnotations = defaultdict(list)
    for lineno, parts in _rows(text, 7):
        frame = _num(parts, 0, lineno, int)
        oid = _num(parts, 1, lineno, int)
        out[frame].append(Annotation(oid, _box(parts, lineno), score=_num(parts, 6, lineno)))
    return dict(sorted(out.items()))


def _f(v: float) -> str:
    s = f"{v:.3f}"
    return "0.000" if s == "-0.000" else s


def write_mot_results(tracks_by_frame: dict[int, list[Track]], emit_coasted: bool = False) -> str:
    lines = []
    for frame in sorted(tracks_by_frame):
        for t in sorted(tracks_by_frame[frame], key=lambda t: t.id):
            if t.coasted and not emit_coasted:
                continue
            x, y, w, h = t.box
            lines.append(f"{frame},{t.id},{_f(x)},{_f(y)},{_f(w)},{_f(h)},{t.score:.6f},-1,-1,-1")
    return "".join(line + "\n" for line in lines)


def write_mot_ground_truth(gt: FrameAnnotations) -> str:
    lines = []
    for frame in sorted(gt):
        for a in sorted(gt[frame], key=lambda a: a.id):
            x, y, w, h = a.box
            lines.append(f"{frame},{a.id},{_f(x)},{_f(y)},{_f(w)},{_f(h)},1,{a.class_id},{a.visibility:.6f}")
    return "".join(line + "\n" for line in lines)


def write_mot_detections(dets: dict[int, list[Detection]]) -> str:
    lines = []
    for frame in sorted(dets):
        for d in dets[frame]:
            x, y, w, h = d.box
            lines.append(f"{frame},-1,{_f(x)},{_f(y)},{_f(w)},{_f(h)},{d.score:.6f},{d.class_id},-1")
    return "".join(line + "\n" for line in lines)
