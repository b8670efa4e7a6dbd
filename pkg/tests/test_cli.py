import json
import subprocess
import sys

import pytest

from avatargen import __version__
from avatargen.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_version_and_help(capsys):
    code, out, _ = run(capsys, "--version")
    assert code == 0 and __version__ in out
    code, out, _ = run(capsys, "--help")
    assert code == 0 and "generate" in out and "eval-pck" in out


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "avatargen", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and __version__ in res.stdout


def test_usage_errors(capsys):
    assert run(capsys, "frobnicate")[0] == 2
    assert run(capsys, "generate")[0] == 2            # --config is required
    assert run(capsys, "eval-pck", "--pred", "a", "--gt", "b", "--ref", "head")[0] == 2


def test_demo_generate_eval(capsys, tmp_path):
    assert run(capsys, "demo-assets", "--out", str(tmp_path / "a"), "--images-per-scan", "3", "--size", "64")[0] == 0
    code, out, _ = run(capsys, "generate", "--config", str(tmp_path / "a/config.yaml"), "--out", str(tmp_path / "o"),
                       "--jobs", "1")
    assert code == 0 and "generated 3 samples" in out
    assert len(list((tmp_path / "o/capsule").glob("*.png"))) == 3
    code, out, _ = run(capsys, "eval-pck", "--pred", str(tmp_path / "o"), "--gt", str(tmp_path / "o"),
                       "--alpha", "0.2,0.5")
    assert code == 0
    rows = [ln.split() for ln in out.splitlines() if ln[:1] != "#"][1:]
    assert [r[0] for r in rows] == ["0.2", "0.5"]
    assert all(v == "100.0" for r in rows for v in r[1:])
    code, out, _ = run(capsys, "replay", "--manifest", str(tmp_path / "o/manifest.jsonl"), "--out", str(tmp_path / "r"))
    assert code == 0
    assert (tmp_path / "r/capsule/000001.png").read_bytes() == (tmp_path / "o/capsule/000001.png").read_bytes()


def test_missing_mesh_names_path(capsys, tmp_path):
    run(capsys, "demo-assets", "--out", str(tmp_path / "a"), "--images-per-scan", "1", "--size", "32")
    cfg = tmp_path / "a/config.yaml"
    cfg.write_text(cfg.read_text().replace("capsule_person.ply", "gone.ply"))
    code, _, err = run(capsys, "generate", "--config", str(cfg), "--out", str(tmp_path / "o"))
    assert code not in (0, 2) and "gone.ply" in err


def test_seed_override_changes_output(capsys, tmp_path):
    run(capsys, "demo-assets", "--out", str(tmp_path / "a"), "--images-per-scan", "1", "--size", "32")
    cfg = str(tmp_path / "a/config.yaml")
    run(capsys, "generate", "--config", cfg, "--out", str(tmp_path / "s1"), "--seed", "1")
    run(capsys, "generate", "--config", cfg, "--out", str(tmp_path / "s2"), "--seed", "2")
    m1 = (tmp_path / "s1/manifest.jsonl").read_text().splitlines()[1]
    m2 = (tmp_path / "s2/manifest.jsonl").read_text().splitlines()[1]
    assert m1 != m2


def test_mesh_tools(capsys, tmp_path):
    run(capsys, "demo-assets", "--out", str(tmp_path / "a"), "--images-per-scan", "1", "--size", "32")
    mesh = str(tmp_path / "a/capsule_person.ply")
    code, out, _ = run(capsys, "inspect-mesh", mesh, "--json")
    assert code == 0 and json.loads(out)["vertex_count"] == 1820
    code, out, _ = run(capsys, "bind", mesh, "--out", str(tmp_path / "b.txt"), "--mode", "blend")
    assert code == 0 and (tmp_path / "b.txt").read_text().startswith("# mode blend")
    assert run(capsys, "inspect-mesh", str(tmp_path / "nope.obj"))[0] == 3


def test_sample_poses(capsys, tmp_path):
    code, out, _ = run(capsys, "sample-poses", "--count", "4", "--seed", "3")
    lines = out.splitlines()
    assert code == 0 and json.loads(lines[0])["kind"] == "pose-table" and len(lines) == 5
    assert len(json.loads(lines[1])) == 33
    code, again, _ = run(capsys, "sample-poses", "--count", "4", "--seed", "3")
    assert again == out
    run(capsys, "demo-assets", "--out", str(tmp_path / "a"), "--images-per-scan", "1", "--size", "32")
    code, out, _ = run(capsys, "sample-poses", "--bvh", str(tmp_path / "a/walk.bvh"), "--stride", "10")
    assert code == 0 and len(out.splitlines()) == 1 + 12


def test_adapt_directory(capsys, tmp_path):
    run(capsys, "demo-assets", "--out", str(tmp_path / "a"), "--images-per-scan", "1", "--size", "32")
    src = str(tmp_path / "a/backgrounds")
    for kind in ("gauss", "white_noise"):
        code, out, _ = run(capsys, "adapt", src, "--kind", kind, "--out", str(tmp_path / kind))
        assert code == 0 and len(list((tmp_path / kind).glob("*.png"))) == 6
    run(capsys, "adapt", src, "--kind", "white_noise", "--out", str(tmp_path / "wn2"))
    a = sorted((tmp_path / "white_noise").glob("*.png"))
    assert all(p.read_bytes() == (tmp_path / "wn2" / p.name).read_bytes() for p in a)
