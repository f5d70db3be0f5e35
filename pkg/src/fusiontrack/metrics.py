"""CLEAR-MOT and identity (IDF1) scores, plus feature-map statistics.

HOTA, DetA, AssA and MOTP are not computed here.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import asdict, dataclass, fields

import numpy as np

from .annotations import Annotation, FrameAnnotations, count_boxes, iou
from .assignment import SENTINEL, solve_assignment


@dataclass
class MetricsReport:
    mota: float = math.nan
    idf1: float = math.nan
    ids: int = 0
    frag: int = 0
    fp: int = 0
    fn: int = 0
    idtp: int = 0
    idfp: int = 0
    idfn: int = 0
    num_gt: int = 0
    num_hyp: int = 0

    def rows(self) -> list[tuple[str, float | int]]:
        names = {"mota": "MOTA", "idf1": "IDF1", "ids": "IDs", "frag": "Frag", "fp": "FP",
                 "fn": "FN", "idtp": "IDTP", "idfp": "IDFP", "idfn": "IDFN",
                 "num_gt": "GT", "num_hyp": "Hyp"}
        return [(names[f.name], getattr(self, f.name)) for f in fields(self)]


def _frame_ids(frame: list[Annotation], what: str, frame_no: int) -> None:
    seen = set()
    for a in frame:
        if a.id in seen:
            raise ValueError(f"duplicate {what} id {a.id} in frame {frame_no}")
        seen.add(a.id)


def _match_frame(gts: list[Annotation], hyps: list[Annotation], thr: float,
                 keep: dict[int, int] | None = None) -> dict[int, int]:
    """Match GT index -> hyp index for one frame.

    Pairs listed in ``keep`` (gt id -> hyp id) survive first if their IoU is
    still above threshold; the rest is a min-(1 - IoU) assignment.
    """
    matched: dict[int, int] = {}
    hyp_index = {h.id: j for j, h in enumerate(hyps)}
    if keep:
        for i, g in enumerate(gts):
            hid = keep.get(g.id)
            j = hyp_index.get(hid)
            if j is not None and iou(g.box, hyps[j].box) >= thr:
                matched[i] = j
    free_g = [i for i in range(len(gts)) if i not in matched]
    used_h = set(matched.values())
    free_h = [j for j in range(len(hyps)) if j not in used_h]
    if free_g and free_h:
        cost = np.full((len(free_g), len(free_h)), SENTINEL)
        for r, i in enumerate(free_g):
            for c, j in enumerate(free_h):
                v = iou(gts[i].box, hyps[j].box)
                if v >= thr:
                    cost[r, c] = 1.0 - v
        for r, c in solve_assignment(cost):
            matched[free_g[r]] = free_h[c]
    return matched


def clear_metrics(gt: FrameAnnotations, hyp: FrameAnnotations, iou_threshold: float = 0.5) -> MetricsReport:
    """MOTA, FP, FN, identity switches and fragmentations."""
    if not 0.0 < iou_threshold < 1.0:
        raise ValueError("iou_threshold must lie in (0, 1)")
    rep = MetricsReport()
    last_match: dict[int, int] = {}  # gt id -> hyp id of its most recent match
    tracked_before: set[int] = set()
    was_tracked: dict[int, bool] = {}
    for f in sorted(set(gt) | set(hyp)):
        gts, hyps = gt.get(f, []), hyp.get(f, [])
        _frame_ids(gts, "ground-truth", f)
        _frame_ids(hyps, "hypothesis", f)
        m = _match_frame(gts, hyps, iou_threshold, last_match)
        rep.num_gt += len(gts)
        rep.num_hyp += len(hyps)
        rep.fn += len(gts) - len(m)
        rep.fp += len(hyps) - len(m)
        for i, g in enumerate(gts):
            if i in m:
                hid = hyps[m[i]].id
                if g.id in last_match and last_match[g.id] != hid:
                    rep.ids += 1
                last_match[g.id] = hid
                if g.id in tracked_before and not was_tracked.get(g.id, False):
                    rep.frag += 1
                tracked_before.add(g.id)
                was_tracked[g.id] = True
            else:
                was_tracked[g.id] = False
    if rep.num_gt:
        rep.mota = 1.0 - (rep.fp + rep.fn + rep.ids) / rep.num_gt
    return rep


def _trajectories(frames: FrameAnnotations) -> dict[int, dict[int, Annotation]]:
    out: dict[int, dict[int, Annotation]] = defaultdict(dict)
    for f, items in frames.items():
        for a in items:
            out[a.id][f] = a
    return out


def identity_overlaps(gt: FrameAnnotations, hyp: FrameAnnotations, iou_threshold: float):
    """GT ids, hyp ids and the matrix of frames where each pair overlaps enough."""
    for f, items in gt.items():
        _frame_ids(items, "ground-truth", f)
    for f, items in hyp.items():
        _frame_ids(items, "hypothesis", f)
    gt_tr, hyp_tr = _trajectories(gt), _trajectories(hyp)
    gids, hids = sorted(gt_tr), sorted(hyp_tr)
    overlap = np.zeros((len(gids), len(hids)), dtype=np.int64)
    for r, g in enumerate(gids):
        gtr = gt_tr[g]
        for c, h in enumerate(hids):
            htr = hyp_tr[h]
            overlap[r, c] = sum(
                1 for f in gtr.keys() & htr.keys() if iou(gtr[f].box, htr[f].box) >= iou_threshold
            )
    return gids, hids, overlap


def idf1(gt: FrameAnnotations, hyp: FrameAnnotations, iou_threshold: float = 0.5) -> MetricsReport:
    """Trajectory-level identity scores under the best one-to-one id mapping.

    Minimizing IDFP + IDFN is the same as maximizing matched overlap frames,
    so the mapping is a linear assignment on negated overlap counts.
    """
    if not 0.0 < iou_threshold < 1.0:
        raise ValueError("iou_threshold must lie in (0, 1)")
    _, _, overlap = identity_overlaps(gt, hyp, iou_threshold)
    rep = MetricsReport(num_gt=count_boxes(gt), num_hyp=count_boxes(hyp))
    if overlap.size:
        pairs = solve_assignment(overlap.max() - overlap)
        rep.idtp = int(sum(overlap[r, c] for r, c in pairs))
    rep.idfn = rep.num_gt - rep.idtp
    rep.idfp = rep.num_hyp - rep.idtp
    denom = 2 * rep.idtp + rep.idfp + rep.idfn
    if denom:
        rep.idf1 = 2 * rep.idtp / denom
    return rep


def evaluate(gt: FrameAnnotations, hyp: FrameAnnotations, iou_threshold: float = 0.5) -> MetricsReport:
    rep = clear_metrics(gt, hyp, iou_threshold)
    ident = idf1(gt, hyp, iou_threshold)
    rep.idf1, rep.idtp, rep.idfp, rep.idfn = ident.idf1, ident.idtp, ident.idfp, ident.idfn
    return rep


def aggregate(reports: list[MetricsReport]) -> MetricsReport:
    """Sum counts over sequences and recompute the ratios."""
    total = MetricsReport()
    for r in reports:
        for name in ("ids", "frag", "fp", "fn", "idtp", "idfp", "idfn", "num_gt", "num_hyp"):
            setattr(total, name, getattr(total, name) + getattr(r, name))
    if total.num_gt:
        total.mota = 1.0 - (total.fp + total.fn + total.ids) / total.num_gt
    denom = 2 * total.idtp + total.idfp + total.idfn
    if denom:
        total.idf1 = 2 * total.idtp / denom
    return total


def _fmt(v) -> str:
    if isinstance(v, float):
        return "nan" if math.isnan(v) else f"{v:.6f}"
    return str(v)


def format_table(named: dict[str, MetricsReport]) -> str:
    """Aligned plain-text table, one column per sequence."""
    names = list(named)
    keys = [k for k, _ in MetricsReport().rows()]
    cells = [["metric", *names]] + [
        [k, *(_fmt(dict(named[n].rows())[k]) for n in names)] for k in keys
    ]
    widths = [max(len(row[c]) for row in cells) for c in range(len(cells[0]))]
    lines = ["  ".join(cell.ljust(widths[c]) if c == 0 else cell.rjust(widths[c])
                       for c, cell in enumerate(row)) for row in cells]
    return "\n".join(lines) + "\n"


def format_csv(report: MetricsReport) -> str:
    return "metric,value\n" + "".join(f"{k},{_fmt(v)}\n" for k, v in report.rows())


@dataclass
class FeatureStats:
    entropy_bits: float
    kurtosis: float  # nan for a constant map
    noise_mean: float  # nan when no normalized value lies in the noise band
    mean_intensity: float
    std_dev: float

    def as_dict(self) -> dict[str, float]:
        return asdict(self)


def normalize_255(x) -> np.ndarray:
    v = np.asarray(x, dtype=np.float64).ravel()
    lo, hi = v.min(), v.max()
    if hi == lo:
        return np.zeros_like(v)
    return (v - lo) / (hi - lo) * 255.0


def shannon_entropy_bits(counts) -> float:
    c = np.asarray(counts, dtype=np.float64)
    p = c[c > 0] / c.sum()
    return float(-(p * np.log2(p)).sum()) + 0.0


def pearson_kurtosis(x) -> float:
    v = np.asarray(x, dtype=np.float64).ravel()
    d = v - v.mean()
    m2 = np.mean(d * d)
    if m2 == 0:
        return math.nan
    return float(np.mean(d ** 4) / m2 ** 2)


def feature_stats(x, histogram_bins: int = 256, noise_band: tuple[float, float] = (1.0, 50.0)) -> FeatureStats:
    """Intensity statistics of a map after min-max normalization to [0, 255].

    Kurtosis is the non-excess fourth standardized moment of the raw values.
    ``noise_mean`` averages normalized values inside ``noise_band``.
    """
    raw = np.asarray(x, dtype=np.float64)
    if raw.size == 0:
        raise ValueError("feature map is empty")
    norm = normalize_255(raw)
    counts, _ = np.histogram(norm, bins=histogram_bins, range=(0.0, 255.0))
    lo, hi = noise_band
    band = norm[(norm >= lo) & (norm <= hi)]
    return FeatureStats(
        entropy_bits=shannon_entropy_bits(counts),
        kurtosis=pearson_kurtosis(raw),
        noise_mean=float(band.mean()) if band.size else math.nan,
        mean_intensity=float(norm.mean()),
        std_dev=float(norm.std()),
    )


def format_feature_stats(named: dict[str, FeatureStats]) -> str:
    labels = {"entropy_bits": "Information Entropy (bits)", "kurtosis": "Kurtosis",
              "noise_mean": "Noise Mean (1-50)", "mean_intensity": "Mean Intensity",
              "std_dev": "Std. Deviation"}
    names = list(named)
    cells = [["statistic", *names]] + [
        [label, *(_fmt(getattr(named[n], key)) for n in names)] for key, label in labels.items()
    ]
    widths = [max(len(row[c]) for row in cells) for c in range(len(cells[0]))]
    return "\n".join("  ".join(cell.ljust(widths[c]) if c == 0 else cell.rjust(widths[c])
                               for c, cell in enumerate(row)) for row in cells) + "\n"
