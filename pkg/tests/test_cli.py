import json

import numpy as np
import pytest
from PIL import Image

from relightkit.cli import main
from relightkit.fileio import read_pfm, write_pfm, write_png
from relightkit.imagecore import ColorImage, ColorSpace


@pytest.fixture(scope="module")
def sphere_bundle(tmp_path_factory):
    out = tmp_path_factory.mktemp("bundle") / "sphere"
    assert main(["synth", "sphere", "--out", str(out), "--size", "96x96"]) == 0
    return out


def _read_bytes(path):
    return path.read_bytes()


def test_missing_input_exits_2(tmp_path, capsys):
    rc = main(["shadow-mask", str(tmp_path / "nope.obj"), "x.json", "y.json",
               "--size", "32x32", "--out", str(tmp_path / "o")])
    captured = capsys.readouterr()
    assert rc == 2
    assert "nope.obj" in captured.err


def test_json_errors_flag(tmp_path, capsys):
    rc = main(["--json-errors", "shadow-mask", str(tmp_path / "gone.obj"),
               "p.json", "l.json", "--size", "8x8", "--out", str(tmp_path / "o")])
    assert rc == 2
    payload = json.loads(capsys.readouterr().err)
    assert payload["error"] == "FileNotFoundError"
    assert "gone.obj" in payload["message"]


def test_invalid_scene_exits_2(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["synth", "pyramid", "--out", str(tmp_path / "o")])
    assert exc.value.code == 2


def test_border_weights_flow_and_param_error(tmp_path, capsys):
    lum_dir = tmp_path / "fixture"
    assert main(["synth", "two_step", "--out", str(lum_dir),
                 "--size", "192x128"]) == 0
    out = tmp_path / "weights"
    rc = main(["border-weights", str(lum_dir / "mask.pfm"),
               str(lum_dir / "luminance.png"), "--out", str(out)])
    assert rc == 0
    weights = read_pfm(out / "weights.pfm")
    assert weights.max() == pytest.approx(10.0, abs=1e-6)
    assert (out / "weights_vis.png").exists()

    rc = main(["border-weights", str(lum_dir / "mask.pfm"),
               str(lum_dir / "luminance.png"), "--out", str(tmp_path / "w2"),
               "--tau1", "0.9", "--tau2", "0.1"])
    assert rc == 2
    assert "tau" in capsys.readouterr().err


def test_border_weights_params_json(tmp_path, capsys):
    fixture = tmp_path / "fixture"
    assert main(["synth", "two_step", "--out", str(fixture),
                 "--size", "192x128"]) == 0
    params = tmp_path / "params.json"
    params.write_text(json.dumps({"window": 11, "tau1": 0.1, "tau2": 0.9}))
    base = ["border-weights", str(fixture / "mask.pfm"),
            str(fixture / "luminance.png"), "--params", str(params)]
    assert main(base + ["--out", str(tmp_path / "wj")]) == 0
    # Explicit flags override JSON values; identical settings match exactly.
    assert main(["border-weights", str(fixture / "mask.pfm"),
                 str(fixture / "luminance.png"), "--out", str(tmp_path / "wf"),
                 "--window", "11", "--tau1", "0.1", "--tau2", "0.9"]) == 0
    a = read_pfm(tmp_path / "wj" / "weights.pfm")
    b = read_pfm(tmp_path / "wf" / "weights.pfm")
    assert np.array_equal(a, b)
    # Flag beats JSON: same JSON with an overriding (invalid) pair errors.
    rc = main(base + ["--out", str(tmp_path / "wx"), "--tau1", "0.95"])
    assert rc == 2
    assert "tau" in capsys.readouterr().err
    params.write_text(json.dumps({"widnow": 11}))
    rc = main(base + ["--out", str(tmp_path / "wy")])
    assert rc == 2
    assert "widnow" in capsys.readouterr().err


def test_border_weights_uniform_mask_zero_map(tmp_path):
    write_pfm(tmp_path / "mask.pfm", np.ones((64, 64)))
    write_png(tmp_path / "lum.png", np.full((64, 64), 0.5))
    out = tmp_path / "w"
    rc = main(["border-weights", str(tmp_path / "mask.pfm"),
               str(tmp_path / "lum.png"), "--out", str(out)])
    assert rc == 0
    assert np.all(read_pfm(out / "weights.pfm") == 0.0)


def test_ambient_command(tmp_path, capsys):
    # Constant-shadow fixture: 0.2 sits exactly on the 8-bit lattice (51/255).
    mask = np.ones((32, 32))
    mask[:, :16] = 0.0
    write_pfm(tmp_path / "mask.pfm", mask)
    image = np.full((32, 32), 0.7)
    image[:, :16] = 0.2
    write_png(tmp_path / "img.png",
              ColorImage.from_planes(ColorSpace.RGB, image, image, image))
    rc = main(["ambient", str(tmp_path / "img.png"), str(tmp_path / "mask.pfm")])
    assert rc == 0
    assert json.loads(capsys.readouterr().out)["ambient"] == pytest.approx(0.2, abs=1e-12)

    write_pfm(tmp_path / "lit.pfm", np.ones((32, 32)))
    rc = main(["ambient", str(tmp_path / "img.png"), str(tmp_path / "lit.pfm")])
    assert rc == 3
    rc = main(["ambient", str(tmp_path / "img.png"), str(tmp_path / "lit.pfm"),
               "--ambient-default", "0.33"])
    assert rc == 0
    assert json.loads(capsys.readouterr().out)["ambient"] == 0.33


def test_ambient_round_trip_on_synthetic_sphere(sphere_bundle, capsys):
    rc = main(["ambient", str(sphere_bundle / "source.png"),
               str(sphere_bundle / "mask_side_gt.pfm"),
               "--coverage", str(sphere_bundle / "coverage.pfm")])
    assert rc == 0
    ambient = json.loads(capsys.readouterr().out)["ambient"]
    assert ambient == pytest.approx(0.2, abs=1e-3)


def test_relight_identity_lights_one_lsb(sphere_bundle, tmp_path):
    out = tmp_path / "relit"
    rc = main(["relight", str(sphere_bundle / "source.png"),
               str(sphere_bundle / "mesh.obj"), str(sphere_bundle / "pose.json"),
               str(sphere_bundle / "light_side.json"),
               str(sphere_bundle / "light_side.json"),
               "--out", str(out)])
    assert rc == 0
    source = np.asarray(Image.open(sphere_bundle / "source.png").convert("RGB"),
                        dtype=np.int64)
    relit = np.asarray(Image.open(out / "relit.png").convert("RGB"), dtype=np.int64)
    assert np.max(np.abs(source - relit)) <= 1
    manifest = json.loads((out / "manifest.json").read_text())
    assert set(manifest["inputs"]) == {"source", "mesh", "pose",
                                       "source_light", "target_light"}
    assert all(len(v["sha256"]) == 64 for v in manifest["inputs"].values())


def test_relight_swapped_lights_reciprocal_ratio(sphere_bundle, tmp_path):
    args = lambda sl, tl, out: [
        "relight", str(sphere_bundle / "source.png"),
        str(sphere_bundle / "mesh.obj"), str(sphere_bundle / "pose.json"),
        str(sphere_bundle / sl), str(sphere_bundle / tl),
        "--target-ambient", "0.2", "--ambient-default", "0.2",
        "--out", str(tmp_path / out)]
    assert main(args("light_side.json", "light_frontal.json", "fwd")) == 0
    assert main(args("light_frontal.json", "light_side.json", "bwd")) == 0
    fwd = read_pfm(tmp_path / "fwd" / "ratio.pfm")
    bwd = read_pfm(tmp_path / "bwd" / "ratio.pfm")
    assert np.max(np.abs(fwd * bwd - 1.0)) < 1e-5


def test_relight_refuses_overwrite(sphere_bundle, tmp_path, capsys):
    out = tmp_path / "again"
    base = ["relight", str(sphere_bundle / "source.png"),
            str(sphere_bundle / "mesh.obj"), str(sphere_bundle / "pose.json"),
            str(sphere_bundle / "light_side.json"),
            str(sphere_bundle / "light_frontal.json"), "--out", str(out)]
    assert main(base) == 0
    assert main(base) == 2
    assert "--force" in capsys.readouterr().err
    assert main(base + ["--force"]) == 0


def test_eval_identical_dirs_zero_means(sphere_bundle, tmp_path, capsys):
    rc = main(["eval", str(sphere_bundle), str(sphere_bundle)])
    assert rc == 0
    report = json.loads(capsys.readouterr().out)
    assert report["mean"]["mse"] == 0.0
    assert report["mean"]["si_mse"] == pytest.approx(0.0, abs=1e-12)
    assert report["mean"]["dssim"] == pytest.approx(0.0, abs=1e-9)
    assert report["stddev"]["mse"] == 0.0
    assert [r["path"] for r in report["per_image"]] == sorted(
        r["path"] for r in report["per_image"])


def test_eval_report_file_and_single_pair(tmp_path, rng):
    a_dir = tmp_path / "a"
    b_dir = tmp_path / "b"
    a_dir.mkdir()
    b_dir.mkdir()
    img_a = ColorImage(ColorSpace.RGB, rng.uniform(0, 1, size=(24, 24, 3)))
    img_b = ColorImage(ColorSpace.RGB, rng.uniform(0, 1, size=(24, 24, 3)))
    write_png(a_dir / "x.png", img_a)
    write_png(b_dir / "x.png", img_b)
    rc = main(["eval", str(a_dir), str(b_dir), "--out", str(tmp_path / "rep.json")])
    assert rc == 0
    report = json.loads((tmp_path / "rep.json").read_text())
    from relightkit.fileio import read_png
    from relightkit.metrics import evaluate

    direct = evaluate(read_png(a_dir / "x.png"), read_png(b_dir / "x.png"))
    assert report["per_image"][0]["mse"] == pytest.approx(direct.mse)
    assert report["mean"]["mse"] == pytest.approx(direct.mse)
    assert report["stddev"]["mse"] == 0.0

    rc = main(["eval", str(a_dir), str(tmp_path / "empty")])
    assert rc == 2  # missing directory


def test_eval_batch_aggregation_matches_oracle(tmp_path, rng, capsys):
    from relightkit.fileio import read_png
    from relightkit.metrics import evaluate

    a_dir = tmp_path / "a"
    b_dir = tmp_path / "b"
    a_dir.mkdir()
    b_dir.mkdir()
    for name in ("p0.png", "p1.png", "p2.png"):
        write_png(a_dir / name,
                  ColorImage(ColorSpace.RGB, rng.uniform(0, 1, size=(16, 16, 3))))
        write_png(b_dir / name,
                  ColorImage(ColorSpace.RGB, rng.uniform(0, 1, size=(16, 16, 3))))
    assert main(["eval", str(a_dir), str(b_dir), "--threads", "3"]) == 0
    report = json.loads(capsys.readouterr().out)
    per_image = [evaluate(read_png(a_dir / n), read_png(b_dir / n)).mse
                 for n in ("p0.png", "p1.png", "p2.png")]
    assert report["mean"]["mse"] == pytest.approx(float(np.mean(per_image)))
    assert report["stddev"]["mse"] == pytest.approx(float(np.std(per_image)))


def test_eval_mismatched_names_exit_3(tmp_path, rng):
    a_dir = tmp_path / "a"
    b_dir = tmp_path / "b"
    a_dir.mkdir()
    b_dir.mkdir()
    write_png(a_dir / "x.png", np.full((16, 16), 0.5))
    write_png(b_dir / "y.png", np.full((16, 16), 0.5))
    assert main(["eval", str(a_dir), str(b_dir)]) == 3


def test_shadow_mask_outputs(sphere_bundle, tmp_path):
    out = tmp_path / "mask"
    rc = main(["shadow-mask", str(sphere_bundle / "mesh.obj"),
               str(sphere_bundle / "pose.json"),
               str(sphere_bundle / "light_side.json"),
               "--size", "96x96", "--out", str(out)])
    assert rc == 0
    mask = read_pfm(out / "mask.pfm")
    gt = read_pfm(sphere_bundle / "mask_side_gt.pfm")
    assert np.array_equal(mask, gt)
    for name in ("coverage.pfm", "normal_x.pfm", "normal_y.pfm", "normal_z.pfm",
                 "depth.pfm", "position_x.pfm", "position_y.pfm",
                 "position_z.pfm", "mask.png"):
        assert (out / name).exists()


def test_shadow_mask_frontal_light_all_lit(sphere_bundle, tmp_path):
    out = tmp_path / "frontal"
    rc = main(["shadow-mask", str(sphere_bundle / "mesh.obj"),
               str(sphere_bundle / "pose.json"),
               str(sphere_bundle / "light_frontal.json"),
               "--size", "96x96", "--out", str(out)])
    assert rc == 0
    mask = read_pfm(out / "mask.pfm")
    coverage = read_pfm(out / "coverage.pfm")
    assert np.array_equal(mask, coverage)
