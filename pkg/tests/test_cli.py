import json

import pytest

from fusiontrack.cli import main
from fusiontrack.params import load_feature_map


def _pipeline(out, seed=3):
    cfg = out / "sim.cfg"
    cfg.write_text("num_objects = 4\nnum_frames = 30\nrandom_occlusions = 1\nfp_rate = 0.3\n")
    assert main(["simulate", "--config", str(cfg), "--seed", str(seed), "--out", str(out)]) == 0
    assert main(["track", str(out / "det.txt"), "--out", str(out)]) == 0
    assert main(["evaluate", str(out / "gt.txt"), str(out / "results.txt"), "--out", str(out)]) == 0


def test_pipeline_writes_everything(tmp_path, capsys):
    _pipeline(tmp_path)
    for name in ("gt.txt", "det.txt", "results.txt", "metrics.txt", "metrics.csv",
                 "simulate.manifest.json", "track.manifest.json", "evaluate.manifest.json"):
        assert (tmp_path / name).exists(), name
    man = json.loads((tmp_path / "simulate.manifest.json").read_text())
    assert man["command"] == "simulate" and man["seed"] == 3 and man["tool_version"]
    assert "MOTA" in capsys.readouterr().out


def test_pipeline_is_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    a.mkdir()
    b.mkdir()
    _pipeline(a)
    _pipeline(b)
    for name in ("gt.txt", "det.txt", "results.txt", "metrics.txt", "metrics.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes(), name


def test_fuse_stats(tmp_path, capsys):
    assert main(["fuse-stats", "--seed", "1", "--out", str(tmp_path)]) == 0
    assert "Information Entropy" in capsys.readouterr().out
    assert load_feature_map(tmp_path / "fused.params").shape == (4, 32, 32)


def test_fuse_stats_with_params(tmp_path):
    from fusiontrack.cmdf import CmdfNets
    from fusiontrack.refiner import RefinerConfig, RefinerNet
    store = CmdfNets.random(4, seed=0).to_store()
    RefinerNet.random(4, RefinerConfig(), seed=1).to_store(store)
    store.save(tmp_path / "w.params")
    assert main(["fuse-stats", "--params", str(tmp_path / "w.params"), "--out", str(tmp_path)]) == 0


@pytest.mark.parametrize("argv", [
    ["track", "missing.txt"],
    ["evaluate", "a.txt", "b.txt", "--iou-threshold", "1.5"],
])
def test_errors_exit_two_with_one_line(tmp_path, capsys, argv):
    assert main(argv + ["--out", str(tmp_path)] if argv[0] == "track" else argv) == 2
    err = capsys.readouterr().err.strip()
    assert err.startswith("fusiontrack") and "\n" not in err


def test_unknown_config_key(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("speed = 3\n")
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path)]) == 2
    assert "unknown key 'speed'" in capsys.readouterr().err


def test_malformed_detections(tmp_path, capsys):
    det = tmp_path / "det.txt"
    det.write_text("1,-1,10,20,0,40,0.9,1,1\n")
    assert main(["track", str(det), "--out", str(tmp_path)]) == 2
    assert "line 1" in capsys.readouterr().err
