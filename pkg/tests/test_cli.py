import json

import numpy as np
import pytest

from nffsim.cli import main
from nffsim.io import load_trajectory, read_json, write_json, write_ply

SPLITS = "train:2,spatial:1,compositional4:1"


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli") / "ds"
    assert run("gen-data", "--out", root, "--scenes", 4, "--splits", SPLITS, "--horizon", 8,
               "--temporal-steps", 10, "--keypoints", 6, "--seed", 3) == 0
    return root


@pytest.fixture(scope="module")
def model(dataset):
    out = dataset.parent / "m.ngff"
    assert run("train", "--data", dataset, "--out", out, "--epochs", 2, "--chunk", 5, "--lr", 1e-3,
               "--deterministic") == 0
    return out


def test_manifest(dataset):
    m = json.loads((dataset / "manifest.json").read_text())
    tags = sorted(e["split"] for e in m["scenes"])
    assert tags == ["compositional", "spatial", "train", "train"]
    comp = [e for e in m["scenes"] if e["split"] == "compositional"][0]
    assert len(comp["config"]["objects"]) == 4
    for e in m["scenes"]:
        assert load_trajectory(dataset / e["file"]).split_tag == e["split"]


def test_same_seed_same_manifest(dataset, tmp_path):
    assert run("gen-data", "--out", tmp_path / "ds", "--scenes", 4, "--splits", SPLITS, "--horizon", 8,
               "--temporal-steps", 10, "--keypoints", 6, "--seed", 3) == 0
    assert (tmp_path / "ds" / "manifest.json").read_bytes() == (dataset / "manifest.json").read_bytes()


def test_scene_count_mismatch(tmp_path):
    assert run("gen-data", "--out", tmp_path / "x", "--scenes", 5, "--splits", SPLITS) == 2


def test_unknown_split(dataset, tmp_path, capsys):
    code = run("eval", "--data", dataset, "--baseline", "ballistic", "--split", "bogus", "--out", tmp_path / "r")
    assert code == 2
    assert "available: compositional, spatial, train" in capsys.readouterr().err


def test_mpm_self_consistency(dataset, tmp_path):
    assert run("eval", "--data", dataset, "--baseline", "mpm", "--split", "spatial", "--out", tmp_path / "r") == 0
    rep = read_json(tmp_path / "r.json")["mpm"]
    assert rep["rmse"] == 0.0 and rep["fpe"] == 0.0 and rep["pearson_r"] == pytest.approx(1.0)
    assert (tmp_path / "r.metrics.png").stat().st_size > 0
    assert "RMSE" in (tmp_path / "r.txt").read_text()


def test_data_env(dataset, tmp_path, monkeypatch):
    monkeypatch.setenv("NFFSIM_DATA", str(dataset))
    assert run("eval", "--baseline", "constant-velocity", "--split", "train", "--out", tmp_path / "r") == 0


def test_missing_data(tmp_path, monkeypatch):
    monkeypatch.delenv("NFFSIM_DATA", raising=False)
    assert run("eval", "--baseline", "ballistic", "--split", "train", "--out", tmp_path / "r") == 2


def test_unknown_flag():
    with pytest.raises(SystemExit) as err:
        run("export", "--traj", "a", "--out", "b", "--colour")
    assert err.value.code == 2


def test_train_deterministic(dataset, model, tmp_path):
    again = tmp_path / "m.ngff"
    assert run("train", "--data", dataset, "--out", again, "--epochs", 2, "--chunk", 5, "--lr", 1e-3,
               "--deterministic") == 0
    assert again.read_bytes() == model.read_bytes()
    assert (tmp_path / "m.loss.csv").read_text().startswith("epoch")


def test_model_eval_and_ablate(dataset, model, tmp_path):
    assert run("eval", "--data", dataset, "--model", model, "--split", "spatial", "--out", tmp_path / "e") == 0
    assert run("ablate", "--data", dataset, "--model", model, "--split", "spatial", "--out", tmp_path / "a") == 0
    names = list(read_json(tmp_path / "a.json"))
    assert names == ["full", "w/o deform"]
    assert (tmp_path / "a.rollout.png").exists()


def test_rollout_force_and_export(dataset, model, tmp_path):
    scene = read_json(dataset / "manifest.json")["scenes"][0]["scene_id"]
    write_json(tmp_path / "f.json", [[0, [0.0, 0.1], [0, 0, 20.0, 0, 0, 0]]])
    assert run("rollout", "--data", dataset, "--model", model, "--scene", scene, "--out", tmp_path / "a.gstrj") == 0
    assert run("rollout", "--data", dataset, "--model", model, "--scene", scene, "--force", tmp_path / "f.json",
               "--out", tmp_path / "b.gstrj") == 0
    a, b = load_trajectory(tmp_path / "a.gstrj"), load_trajectory(tmp_path / "b.gstrj")
    assert b.com[-1, 0, 2] > a.com[-1, 0, 2]
    assert run("export", "--traj", tmp_path / "b.gstrj", "--out", tmp_path / "frames") == 0
    assert len(list((tmp_path / "frames").glob("frame_*.ply"))) == b.n_frames
    write_json(tmp_path / "bad.json", [[7, [0.0, 0.1], [0, 0, 1, 0, 0, 0]]])
    assert run("rollout", "--data", dataset, "--model", model, "--scene", scene, "--force", tmp_path / "bad.json",
               "--out", tmp_path / "c.gstrj") == 2


def test_register(tmp_path):
    from scipy.spatial.transform import Rotation
    P = np.random.default_rng(0).normal(size=(300, 3)) * [1, 0.6, 0.3]
    R = Rotation.from_rotvec([0.1, -0.2, 0.05]).as_matrix()
    write_ply(tmp_path / "g.ply", P)
    write_ply(tmp_path / "o.ply", 1.3 * P @ R.T + [0.5, 0, 0])
    np.savetxt(tmp_path / "pairs.csv", np.stack([np.arange(300)] * 2, 1), fmt="%d", delimiter=",")
    assert run("register", "--gen", tmp_path / "g.ply", "--obs", tmp_path / "o.ply", "--pairs",
               tmp_path / "pairs.csv", "--out", tmp_path / "s.json") == 0
    doc = read_json(tmp_path / "s.json")
    assert doc["s"] == pytest.approx(1.3, rel=1e-4)
    np.testing.assert_allclose(np.reshape(doc["R"], (3, 3)), R, atol=1e-4)


def test_missing_ply(tmp_path):
    assert run("register", "--gen", tmp_path / "no.ply", "--obs", tmp_path / "no.ply", "--out",
               tmp_path / "s.json") == 4


def test_simulate_and_init_config(tmp_path):
    assert run("init-config", "--out", tmp_path) == 0
    doc = read_json(tmp_path / "materials.json")
    doc["assets"] = {"ball": doc["assets"]["ball"]}
    write_json(tmp_path / "materials.json", doc)
    write_json(tmp_path / "scene.json", {"objects": [{"asset": "ball", "translation": [1, 1, 0.5]}],
                                         "n_main_steps": 3})
    assert run("simulate", "--scene", tmp_path / "scene.json", "--config", tmp_path, "--out",
               tmp_path / "t.gstrj", "--keypoints", 4) == 0
    assert load_trajectory(tmp_path / "t.gstrj").n_frames == 3
