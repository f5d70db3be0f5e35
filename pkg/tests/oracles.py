"""Independent reference implementations used to check the package.

Nothing here calls into the code paths it is used to verify, except the
single-stage tracker, which shares the assignment solver (and so its
tie-break) by design.
"""

from __future__ import annotations

import itertools
import math

import numpy as np


def conv2d_im2col(x: np.ndarray, weight: np.ndarray, bias: np.ndarray, padding: int) -> np.ndarray:
    """Convolution by explicit patch extraction and one dense matmul (float64)."""
    c, h, w = x.shape
    o, _, kh, kw = weight.shape
    xp = np.zeros((c, h + 2 * padding, w + 2 * padding))
    xp[:, padding:padding + h, padding:padding + w] = x
    ho, wo = h + 2 * padding - kh + 1, w + 2 * padding - kw + 1
    cols = np.empty((c * kh * kw, ho * wo))
    for r in range(ho):
        for q in range(wo):
            cols[:, r * wo + q] = xp[:, r:r + kh, q:q + kw].reshape(-1)
    out = weight.reshape(o, -1).astype(np.float64) @ cols + bias.astype(np.float64)[:, None]
    return out.reshape(o, ho, wo)


def brute_force_assignment(cost: np.ndarray) -> float:
    """Minimum total cost over all injections of the smaller side into the larger."""
    n, m = cost.shape
    if n == 0 or m == 0:
        return 0.0
    if n > m:
        cost = cost.T
        n, m = m, n
    best = math.inf
    for cols in itertools.permutations(range(m), n):
        best = min(best, math.fsum(cost[i, j] for i, j in enumerate(cols)))
    return best


def brute_lexicographic(cost: np.ndarray, sentinel: float = math.inf) -> list[tuple[int, int]]:
    """Smallest sorted pair list among matchings with the most allowed pairs, then least cost."""
    n, m = cost.shape
    best_key, best = None, []
    if n <= m:
        choices = (list(enumerate(p)) for p in itertools.permutations(range(m), n))
    else:
        choices = ([(i, j) for j, i in enumerate(p)] for p in itertools.permutations(range(n), m))
    for pairs in choices:
        kept = sorted((i, j) for i, j in pairs if cost[i, j] < sentinel)
        key = (-len(kept), math.fsum(cost[i, j] for i, j in kept), kept)
        if best_key is None or key < best_key:
            best_key, best = key, kept
    return best


def _iou(a, b) -> float:
    ix = max(0.0, min(a[0] + a[2], b[0] + b[2]) - max(a[0], b[0]))
    iy = max(0.0, min(a[1] + a[3], b[1] + b[3]) - max(a[1], b[1]))
    inter = ix * iy
    if inter == 0:
        return 0.0
    return inter / (a[2] * a[3] + b[2] * b[3] - inter)


def brute_idf1(gt, hyp, thr: float = 0.5) -> tuple[int, int, int]:
    """(IDTP, IDFP, IDFN) by enumerating every one-to-one id mapping."""
    gtr, htr = {}, {}
    for f, items in gt.items():
        for a in items:
            gtr.setdefault(a.id, {})[f] = a.box
    for f, items in hyp.items():
        for a in items:
            htr.setdefault(a.id, {})[f] = a.box
    gids, hids = sorted(gtr), sorted(htr)
    n_gt = sum(len(v) for v in gtr.values())
    n_hyp = sum(len(v) for v in htr.values())

    def overlap(g, h):
        return sum(1 for f in gtr[g] if f in htr[h] and _iou(gtr[g][f], htr[h][f]) >= thr)

    best = 0
    # pad hyp side with None so every partial mapping is reachable
    slots = hids + [None] * len(gids)
    for perm in itertools.permutations(slots, len(gids)):
        tp = sum(overlap(g, h) for g, h in zip(gids, perm) if h is not None)
        best = max(best, tp)
    return best, n_hyp - best, n_gt - best


def brute_clear(gt, hyp, thr: float = 0.5) -> dict:
    """CLEAR counts with each frame's matching found by enumeration.

    Convention: previous matches whose IoU is still >= thr are kept; the rest
    maximize the number of matches, then minimize total (1 - IoU).
    """
    last, ever, tracked = {}, set(), {}
    res = dict(fp=0, fn=0, ids=0, frag=0, gt=0)
    for f in sorted(set(gt) | set(hyp)):
        gs, hs = gt.get(f, []), hyp.get(f, [])
        res["gt"] += len(gs)
        match = {}
        for i, g in enumerate(gs):
            for j, h in enumerate(hs):
                if last.get(g.id) == h.id and _iou(g.box, h.box) >= thr:
                    match[i] = j
        free_g = [i for i in range(len(gs)) if i not in match]
        free_h = [j for j in range(len(hs)) if j not in match.values()]
        best_key, best = None, {}
        slots = free_h + [None] * len(free_g)
        for perm in itertools.permutations(slots, len(free_g)):
            pairs = {i: j for i, j in zip(free_g, perm)
                     if j is not None and _iou(gs[i].box, hs[j].box) >= thr}
            key = (-len(pairs), math.fsum(1 - _iou(gs[i].box, hs[j].box) for i, j in pairs.items()))
            if best_key is None or key < best_key:
                best_key, best = key, pairs
        match.update(best)
        res["fn"] += len(gs) - len(match)
        res["fp"] += len(hs) - len(match)
        for i, g in enumerate(gs):
            if i in match:
                hid = hs[match[i]].id
                if g.id in last and last[g.id] != hid:
                    res["ids"] += 1
                last[g.id] = hid
                if g.id in ever and not tracked.get(g.id):
                    res["frag"] += 1
                ever.add(g.id)
                tracked[g.id] = True
            else:
                tracked[g.id] = False
    res["mota"] = 1 - (res["fp"] + res["fn"] + res["ids"]) / res["gt"] if res["gt"] else math.nan
    return res


class FlatTracker:
    """Single-stage associate-then-spawn tracker written from the update rules.

    Shares only ``solve_assignment`` (and its tie-break) with the package.
    """

    def __init__(self, tau, alpha=0.7, beta=0.1, size_weight=100.0, max_age=30,
                 tau_new=0.7, gate=2.0, sentinel=1e12):
        from fusiontrack.assignment import solve_assignment

        self.solve = solve_assignment
        self.tau, self.alpha, self.beta = tau, alpha, beta
        self.size_weight, self.max_age, self.tau_new = size_weight, max_age, tau_new
        self.gate, self.sentinel = gate, sentinel
        self.tracks = []  # dicts
        self.next_id = 1

    def update(self, dets):
        order = sorted(range(len(dets)), key=lambda i: -dets[i].score)
        cand = [i for i in order if dets[i].score > self.tau]
        pred = []
        for t in self.tracks:
            pred.append((t["p"][0] + t["v"][0], t["p"][1] + t["v"][1]))
        matched_t, matched_d = {}, set()
        if cand and self.tracks:
            cost = np.full((len(cand), len(self.tracks)), self.sentinel)
            for r, i in enumerate(cand):
                d = dets[i]
                cx, cy = d.box[0] + d.box[2] / 2.0, d.box[1] + d.box[3] / 2.0
                ad = d.box[2] * d.box[3]
                for c, t in enumerate(self.tracks):
                    if t["cls"] != d.class_id:
                        continue
                    at = t["box"][2] * t["box"][3]
                    sp = (cx - pred[c][0]) ** 2 + (cy - pred[c][1]) ** 2
                    if sp > self.gate * at:
                        continue
                    cost[r, c] = sp + self.size_weight * (abs(ad - at) / max(ad, at))
            for r, c in self.solve(cost, self.sentinel):
                matched_t[c] = cand[r]
                matched_d.add(cand[r])
        survivors = []
        for c, t in enumerate(self.tracks):
            if c in matched_t:
                d = dets[matched_t[c]]
                p = (d.box[0] + d.box[2] / 2.0, d.box[1] + d.box[3] / 2.0)
                a = self.alpha
                v = ((1.0 - a) * t["v"][0] + a * (p[0] - t["p"][0]),
                     (1.0 - a) * t["v"][1] + a * (p[1] - t["p"][1]))
                survivors.append(dict(id=t["id"], p=p, v=v, box=d.box, cls=d.class_id,
                                      age=0, coasted=False))
        for i in order:
            if i not in matched_d and dets[i].score > self.tau_new:
                d = dets[i]
                survivors.append(dict(id=self.next_id, p=(d.box[0] + d.box[2] / 2.0, d.box[1] + d.box[3] / 2.0),
                                      v=(0.0, 0.0), box=d.box, cls=d.class_id, age=0, coasted=False))
                self.next_id += 1
        for c, t in enumerate(self.tracks):
            if c in matched_t:
                continue
            age = t["age"] + 1
            if age > self.max_age:
                continue
            k = max(0.5, 1.0 - self.beta * age)
            v = (t["v"][0] * k, t["v"][1] * k)
            x, y, w, h = t["box"]
            survivors.append(dict(id=t["id"], p=(t["p"][0] + v[0], t["p"][1] + v[1]), v=v,
                                  box=(x + v[0], y + v[1], w, h), cls=t["cls"], age=age, coasted=True))
        survivors.sort(key=lambda t: t["id"])
        self.tracks = survivors
        return [(t["id"], t["box"]) for t in survivors]
