import json

import pytest

from cnnstereo.cli import main
from cnnstereo.imaging import load_pfm
from cnnstereo.net import load_weights


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, (json.loads(out) if code == 0 else None), err


@pytest.fixture
def data(tmp_path, capsys):
    code, out, _ = run(capsys, "synth", "--out", tmp_path / "pairs", "--count", 2,
                       "--height", 32, "--width", 56, "--max-disparity", 6, "--seed", 3)
    assert code == 0 and len(out["pairs"]) == 2
    return tmp_path / "pairs"


def test_compute_writes_outputs_and_is_deterministic(tmp_path, capsys, data):
    pair = data / "pair000"
    args = ["compute", "--left", pair / "left.pgm", "--right", pair / "right.pgm", "--cost", "census",
            "--max-disparity", 6, "--preset", "kitti2012-acrt", "--gt", pair / "gt.pfm", "--threshold", 1,
            "--mask", pair / "mask.pgm"]
    code, first, _ = run(capsys, *args, "--out", tmp_path / "a.pfm", "--color", tmp_path / "a.ppm",
                         "--dump-cost", tmp_path / "a.cost")
    assert code == 0 and 0 <= first["error_rate"] <= 100 and "timings" in first
    code, _, _ = run(capsys, *args, "--out", tmp_path / "b.pfm")
    assert code == 0
    assert (tmp_path / "a.pfm").read_bytes() == (tmp_path / "b.pfm").read_bytes()
    assert (tmp_path / "a.ppm").read_bytes().startswith(b"P6")
    assert (tmp_path / "a.cost").read_bytes()[:4] == b"CVOL"
    assert load_pfm(tmp_path / "a.pfm").shape == (32, 56)


def test_compute_disable_and_overrides(tmp_path, capsys, data):
    pair = data / "pair001"
    (tmp_path / "hp.cfg").write_text("sgm_P1 = 1.0\nblur_sigma = 2\n")
    code, _, _ = run(capsys, "compute", "--left", pair / "left.pgm", "--right", pair / "right.pgm",
                     "--cost", "sad", "--max-disparity", 6, "--preset", "kitti2015-acrt",
                     "--config", tmp_path / "hp.cfg", "--set", "median=off", "--disable", "bilateral",
                     "--out", tmp_path / "d.pfm")
    assert code == 0


def test_train_is_deterministic(tmp_path, capsys, data):
    args = ["train", "--arch", "fast", "--data", data, "--preset", "kitti2012-fst", "--epochs", 2, "--seed", 4]
    code, out, _ = run(capsys, *args, "--out", tmp_path / "w1.bin")
    assert code == 0 and len(out["epoch_losses"]) == 2 and out["examples"] > 0
    run(capsys, *args, "--out", tmp_path / "w2.bin")
    assert (tmp_path / "w1.bin").read_bytes() == (tmp_path / "w2.bin").read_bytes()
    spec, _ = load_weights(tmp_path / "w1.bin")
    assert spec.input_patch_size == 9 and spec.num_conv_feature_maps == 64


def test_extract_then_train_from_file(tmp_path, capsys, data):
    pair = data / "pair000"
    code, out, _ = run(capsys, "extract", "--left", pair / "left.pgm", "--right", pair / "right.pgm",
                       "--gt", pair / "gt.pfm", "--preset", "kitti2012-fst", "--out", tmp_path / "set.bin")
    assert code == 0 and out["examples"] == 2 * out["pairs"]
    code, out, _ = run(capsys, "train", "--arch", "fast", "--data", tmp_path / "set.bin", "--preset",
                       "kitti2012-fst", "--epochs", 1, "--no-augment", "--out", tmp_path / "w.bin")
    assert code == 0


def test_compute_with_trained_weights(tmp_path, capsys, data):
    run(capsys, "train", "--arch", "fast", "--data", data, "--preset", "kitti2012-fst", "--epochs", 1,
        "--out", tmp_path / "w.bin")
    pair = data / "pair000"
    code, _, _ = run(capsys, "compute", "--left", pair / "left.pgm", "--right", pair / "right.pgm",
                     "--cost", "cnn-fast", "--weights", tmp_path / "w.bin", "--max-disparity", 6,
                     "--preset", "kitti2012-fst", "--out", tmp_path / "d.pfm")
    assert code == 0


@pytest.mark.parametrize("arch,loss", [("fast", None), ("accurate", None), ("accurate", "hinge")])
def test_gradcheck(capsys, arch, loss):
    extra = ["--loss", loss] if loss else []
    code, out, _ = run(capsys, "gradcheck", "--arch", arch, "--seed", 2, *extra)
    assert code == 0 and out["passed"] and out["max_relative_error"] < 1e-4


def test_ablate(capsys, data):
    code, out, _ = run(capsys, "ablate", "--data", data, "--preset", "kitti2012-fst", "--cost", "census",
                       "--threshold", 1)
    assert code == 0
    names = [r["excluded"] for r in out["rows"]]
    assert names[0] == "none excluded" and names[-1] == "all excluded" and len(names) == 8


def _error_line(err):
    line = err.strip().splitlines()[-1]
    return json.loads(line)


def test_missing_file_is_reported(tmp_path, capsys):
    code, _, err = run(capsys, "compute", "--left", tmp_path / "nope.pgm", "--right", tmp_path / "nope.pgm",
                       "--cost", "sad", "--max-disparity", 4, "--preset", "kitti2012-fst", "--out", tmp_path / "o.pfm")
    assert code == 1 and _error_line(err)["error"] == "FileNotFoundError"


def test_cnn_without_weights_is_config_error(tmp_path, capsys, data):
    pair = data / "pair000"
    code, _, err = run(capsys, "compute", "--left", pair / "left.pgm", "--right", pair / "right.pgm",
                       "--cost", "cnn-fast", "--max-disparity", 4, "--preset", "kitti2012-fst",
                       "--out", tmp_path / "o.pfm")
    assert code == 1 and _error_line(err)["error"] == "ConfigError"


def test_train_arch_must_match_preset(tmp_path, capsys, data):
    code, _, err = run(capsys, "train", "--arch", "accurate", "--data", data, "--preset", "kitti2012-fst",
                       "--out", tmp_path / "w.bin")
    assert code == 1 and "fast" in _error_line(err)["message"]


def test_bad_config_key(tmp_path, capsys, data):
    pair = data / "pair000"
    code, _, err = run(capsys, "compute", "--left", pair / "left.pgm", "--right", pair / "right.pgm",
                       "--cost", "sad", "--max-disparity", 4, "--preset", "kitti2012-fst", "--set", "nope=1",
                       "--out", tmp_path / "o.pfm")
    assert code == 1 and _error_line(err)["error"] == "ValueError"


def test_argparse_rejects_unknown_stage(capsys):
    with pytest.raises(SystemExit):
        main(["compute", "--left", "a", "--right", "b", "--cost", "sad", "--max-disparity", "2",
              "--preset", "kitti2012-fst", "--disable", "blur", "--out", "o"])
