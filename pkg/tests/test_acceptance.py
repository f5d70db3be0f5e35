"""End-to-end acceptance checks, one test per criterion.

Run ``pytest tests/test_acceptance.py -v``; a PASS/FAIL line per criterion is
printed in the terminal summary.
"""

import itertools
import math
import time

import numpy as np
import pytest

from fusiontrack import tensor_core as tc
from fusiontrack.annotations import Annotation, tracks_to_annotations
from fusiontrack.assignment import assignment_cost, solve_assignment
from fusiontrack.cli import main
from fusiontrack.cmdf import CmdfConfig, CmdfNets, cmdf_forward
from fusiontrack import refiner as rf
from fusiontrack.metrics import evaluate, feature_stats, pearson_kurtosis
from fusiontrack.simulator import CorruptionModel, ScenarioSpec, corrupt_detections, corrupt_with_origin, generate_scenario
from fusiontrack.synthetic import cluttered_pair, occlusion_heavy_scenario, peaked_cmdf_nets, peaked_refiner
from fusiontrack.tracker import (Detection, IdCounter, Track, TrackerConfig, box_at_center, compute_cost,
                                 decay_factor, run_tracker, step, update_matched)
from oracles import FlatTracker, conv2d_im2col

pytestmark = pytest.mark.acceptance


def test_criterion_01_degenerate_fusion_equivalence(record_property):
    g = np.random.default_rng(101)
    nets = CmdfNets.random(3, seed=5)
    nets = CmdfNets(nets.rgb.with_zero_output(), nets.thermal.with_zero_output())
    cfg = CmdfConfig(steps=3, sigma=0.0)
    pairs = [(g.standard_normal((3, 8, 8)).astype(np.float32), g.standard_normal((3, 8, 8)).astype(np.float32))
             for _ in range(100)]
    t0 = time.perf_counter()
    exact = sum(np.array_equal(cmdf_forward(a, b, nets, cfg), a + b) for a, b in pairs)
    elapsed = time.perf_counter() - t0
    record_property("exact", f"{exact}/100")
    record_property("seconds", f"{elapsed:.3f}")
    assert exact == 100
    assert elapsed < 1.0


def test_criterion_02_convolution_oracle(record_property):
    g = np.random.default_rng(202)
    worst = 0.0
    for _ in range(500):
        cin, cout = (int(v) for v in g.integers(1, 5, size=2))
        h, w = (int(v) for v in g.integers(1, 9, size=2))
        k = int(g.choice([1, 3, 5]))
        pad = int(g.integers(0, k // 2 + 1))
        if h + 2 * pad < k or w + 2 * pad < k:
            pad = k // 2
        x = g.standard_normal((cin, h, w)).astype(np.float32)
        wt = g.standard_normal((cout, cin, k, k)).astype(np.float32)
        b = g.standard_normal(cout).astype(np.float32)
        got = tc.conv2d(x, tc.ConvParams(wt, b, pad)).astype(np.float64)
        want = conv2d_im2col(x, wt, b, pad)
        scale = max(1.0, float(np.abs(want).max()))
        worst = max(worst, float(np.abs(got - want).max()) / scale)
    record_property("max_rel_err", f"{worst:.2e}")
    assert worst <= 1e-5


def _brute_min(cost: np.ndarray, perms: np.ndarray) -> float:
    n = cost.shape[0]
    sums = cost[np.arange(n), perms].sum(axis=1)
    near = perms[sums <= sums.min() + 1e-9]
    return min(math.fsum(cost[np.arange(n), p]) for p in near)


def test_criterion_03_assignment_optimality(record_property):
    g = np.random.default_rng(303)
    solve_time, checked, mismatches = 0.0, 0, 0
    for n in range(1, 7):
        for m in range(1, 7):
            rows, cols = min(n, m), max(n, m)
            perms = np.array(list(itertools.permutations(range(cols), rows)))
            for trial in range(1000):
                if trial % 2:
                    cost = g.uniform(0.0, 100.0, size=(n, m))
                else:
                    cost = g.integers(0, 10, size=(n, m)).astype(float)  # plenty of ties
                t0 = time.perf_counter()
                pairs = solve_assignment(cost, sentinel=math.inf)
                solve_time += time.perf_counter() - t0
                oriented = cost if n <= m else cost.T
                best = _brute_min(oriented, perms)
                mismatches += len(pairs) != rows or assignment_cost(cost, pairs) != best
                checked += 1
    record_property("matrices", checked)
    record_property("mismatches", mismatches)
    record_property("solve_seconds", f"{solve_time:.2f}")
    assert mismatches == 0
    assert solve_time < 10.0


def test_criterion_04_hand_values(record_property):
    cfg = TrackerConfig()
    det = Detection(1, box_at_center((13.0, 14.0), 8.0, 10.0), 0.9)
    track = Track(1, (10.0, 10.0), (0.0, 0.0), box_at_center((10.0, 10.0), 10.0, 10.0))
    c = float(compute_cost([det], [track], cfg)[0, 0])

    moving = Track(1, (0.0, 0.0), (2.0, 0.0), box_at_center((0.0, 0.0), 4.0, 4.0))
    v = update_matched(moving, Detection(1, box_at_center((4.0, 0.0), 4.0, 4.0), 0.9), cfg).velocity[0]

    d3, d8 = decay_factor(3, 0.1), decay_factor(8, 0.1)

    x = np.random.default_rng(4).standard_normal((2, 5, 5)).astype(np.float32)
    net = rf.RefinerNet.random(2, rf.RefinerConfig(), seed=0)
    original = rf.refine_chain
    rf.refine_chain = lambda x_pert, _net, _cfg: (x + 2).astype(np.float32)
    try:
        out = rf.refiner_forward(x, net, rf.RefinerConfig(alpha=0.5, sigma=0.1))
    finally:
        rf.refine_chain = original
    blend_err = float(np.abs(out - (x + 1)).max())

    record_property("cost", c)
    record_property("velocity", round(v, 9))
    record_property("decay", f"{d3:.6f},{d8:.6f}")
    record_property("blend_err", f"{blend_err:.1e}")
    assert c == pytest.approx(45.0, abs=1e-6)
    assert v == pytest.approx(3.4, abs=1e-6)
    assert d3 == pytest.approx(0.7, abs=1e-6) and d8 == pytest.approx(0.5, abs=1e-6)
    assert blend_err <= 1e-6


def test_criterion_05_single_stage_reduction(record_property):
    tau = 0.5
    cfg = TrackerConfig(thresholds=(tau,))
    agree = 0
    for seed in range(50):
        spec = ScenarioSpec(num_objects=8, num_frames=60, random_occlusions=1, seed=seed)
        dets = corrupt_detections(generate_scenario(spec), CorruptionModel(fp_rate=1.0, seed=seed))
        flat = FlatTracker(tau)
        tracks, ids, same = [], IdCounter(), True
        for f in range(1, spec.num_frames + 1):
            tracks = step(tracks, dets.get(f, []), cfg, ids)
            ref = flat.update(dets.get(f, []))
            if [(t.id, t.box) for t in tracks] != ref:
                same = False
                break
        agree += same
    record_property("identical_sequences", f"{agree}/50")
    assert agree == 50


def _line(ids, frames):
    return {f: [Annotation(i, (50.0 * i, 0.0, 10.0, 10.0)) for i in ids] for f in frames}


def test_criterion_06_metric_sanity(record_property):
    gt = _line([1, 2], range(1, 11))
    perfect = evaluate(gt, gt)

    swapped = {f: [Annotation(7 if f <= 5 else 8, (50.0, 0.0, 10.0, 10.0)),
                   Annotation(8 if f <= 5 else 7, (100.0, 0.0, 10.0, 10.0))] for f in range(1, 11)}
    swap = evaluate(gt, swapped)

    single = _line([1], range(1, 11))
    half = evaluate(single, {f: [Annotation(3, (50.0, 0.0, 10.0, 10.0))] for f in range(1, 6)})

    record_property("perfect", f"MOTA={perfect.mota} IDF1={perfect.idf1}")
    record_property("swap_ids", swap.ids)
    record_property("half_idf1", f"{half.idf1:.4f}")
    assert perfect.mota == 1.0 and perfect.idf1 == 1.0
    assert perfect.ids == perfect.frag == perfect.idfp == perfect.idfn == 0
    assert swap.ids == 2
    assert half.idf1 == pytest.approx(0.6667, abs=1e-4)


def test_criterion_07_staged_association_beats_single_threshold(record_property):
    t0 = time.perf_counter()
    staged, flat = TrackerConfig(), TrackerConfig(thresholds=(0.5,))
    assert len(staged.thresholds) == 6
    wins, low_fracs = 0, []
    for seed in range(20):
        spec, model = occlusion_heavy_scenario(seed)
        assert spec.num_objects >= 15 and spec.num_frames >= 200
        gt = generate_scenario(spec)
        tagged = corrupt_with_origin(gt, model, spec.arena)
        true_scores = [d.score for v in tagged.values() for d, origin in v if origin is not None]
        low_fracs.append(sum(s < 0.5 for s in true_scores) / len(true_scores))
        dets = {f: [d for d, _ in v] for f, v in tagged.items()}
        frames = range(1, spec.num_frames + 1)
        a = evaluate(gt, tracks_to_annotations(run_tracker(dets, staged, frames)))
        b = evaluate(gt, tracks_to_annotations(run_tracker(dets, flat, frames)))
        wins += a.idfn < b.idfn and a.idf1 > b.idf1
    elapsed = time.perf_counter() - t0
    record_property("wins", f"{wins}/20")
    record_property("min_low_conf_fraction", f"{min(low_fracs):.3f}")
    record_property("seconds", f"{elapsed:.1f}")
    assert min(low_fracs) >= 0.30
    assert wins >= 16
    assert elapsed < 120.0


def test_criterion_08_refiner_contracts(record_property):
    x = np.random.default_rng(8).standard_normal((3, 6, 6)).astype(np.float32)
    net = rf.RefinerNet.random(3, rf.RefinerConfig(), seed=2)
    ident = rf.refiner_forward(x, net, rf.RefinerConfig(alpha=0.0))
    cfg1 = rf.RefinerConfig(alpha=1.0)
    full = rf.refiner_forward(x, net, cfg1)
    x_s = rf.refine_chain(rf.adaptive_perturb(x, net.mask, cfg1.sigma, cfg1.seed), net, cfg1)
    ts = rf.timesteps(3)
    record_property("timesteps", ts)
    assert np.array_equal(ident, x)
    assert np.array_equal(full, x_s)
    assert ts == [2 / 3, 1 / 3, 0.0]


def test_criterion_09_feature_statistics(record_property):
    const = feature_stats(np.full((2, 8, 8), 1.25))
    width = 255.0 / 256.0
    uniform = np.concatenate([[0.0], (np.arange(1, 255) + 0.5) * width, [255.0]]).reshape(1, 16, 16)
    uni = feature_stats(uniform)
    kurt = pearson_kurtosis(np.random.default_rng(9).standard_normal(10**6))

    hits = 0
    for seed in range(20):
        a, b = cluttered_pair(4, 32, 32, seed=seed)
        fused = cmdf_forward(a, b, peaked_cmdf_nets(4), CmdfConfig(base_seed=seed))
        out = rf.refiner_forward(fused, peaked_refiner(4, rf.RefinerConfig()), rf.RefinerConfig(seed=seed))
        before, after = feature_stats(tc.concat_channels(a, b)), feature_stats(out)
        hits += after.entropy_bits < before.entropy_bits and after.kurtosis > before.kurtosis

    record_property("uniform_bits", uni.entropy_bits)
    record_property("normal_kurtosis", f"{kurt:.3f}")
    record_property("directional", f"{hits}/20")
    assert const.entropy_bits == 0.0 and math.isnan(const.kurtosis)
    assert uni.entropy_bits == 8.0
    assert kurt == pytest.approx(3.0, abs=0.1)
    assert hits >= 16


def test_criterion_10_pipeline_determinism(tmp_path, record_property):
    cfg = tmp_path / "scene.cfg"
    cfg.write_text("num_objects = 6\nnum_frames = 50\nrandom_occlusions = 1\nfp_rate = 0.5\n")
    out = tmp_path / "run"

    def run():
        assert main(["simulate", "--config", str(cfg), "--seed", "42", "--out", str(out)]) == 0
        assert main(["track", str(out / "det.txt"), "--out", str(out)]) == 0
        assert main(["evaluate", str(out / "gt.txt"), str(out / "results.txt"), "--out", str(out)]) == 0
        return {p.name: p.read_bytes() for p in sorted(out.iterdir())}

    first, second = run(), run()
    record_property("files", len(first))
    assert first.keys() == second.keys()
    assert all(first[k] == second[k] for k in first)
    assert first["results.txt"]
