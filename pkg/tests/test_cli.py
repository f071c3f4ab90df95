import json
import subprocess
import sys

import numpy as np
import pytest

from conftest import FIXTURES
from lfdepth import cli
from lfdepth import io as lfio
from lfdepth.cost import CostParams
from lfdepth.refine import AnnealSchedule, Heuristics, refine
from lfdepth.structure_tensor import init_orientation_map


@pytest.fixture(scope="module")
def bundles(tmp_path_factory):
    root = tmp_path_factory.mktemp("bundles")
    out = {}
    for name in ("single_plane", "two_plane"):
        d = root / name
        assert cli.main(["synth", str(FIXTURES / f"{name}.scene"), "--out", str(d)]) == 0
        out[name] = d
    return out


@pytest.fixture(scope="module")
def full_run(bundles, tmp_path_factory):
    out = tmp_path_factory.mktemp("est")
    assert cli.main(["estimate", str(bundles["single_plane"]), "--out", str(out),
                     "--planar-mask", cli.PLANAR_MASK]) == 0
    return out


def test_synth_bundle_layout(bundles):
    d = bundles["single_plane"]
    assert len(list(d.glob("input_Cam*.png"))) == 81
    b = lfio.load_hci_bundle(d, planar_mask=cli.PLANAR_MASK)
    assert b.gt_disparity.shape == (96, 96) and np.allclose(b.gt_disparity, 0.3, atol=1e-6)
    vis = np.load(bundles["two_plane"] / cli.VISIBILITY)["visibility"]
    assert vis.shape == (96, 96, 9, 9) and (~vis).any()


def test_synth_deterministic_per_seed(tmp_path):
    scene = str(FIXTURES / "single_plane.scene")
    for sub in ("a", "b", "c"):
        seed = "3" if sub != "c" else "4"
        cli.main(["synth", scene, "--out", str(tmp_path / sub), "--seed", seed])
    a = (tmp_path / "a" / "input_Cam040.png").read_bytes()
    assert a == (tmp_path / "b" / "input_Cam040.png").read_bytes()
    assert a != (tmp_path / "c" / "input_Cam040.png").read_bytes()


def test_estimate_recovers_plane(full_run):
    rep = json.loads((full_run / "metrics.json").read_text())
    assert rep["mse_x100"] < 0.05
    assert rep["mae_planar_deg"] is not None
    run = json.loads((full_run / "run.json").read_text())
    assert run["cost"] == json.loads(json.dumps(CostParams().__dict__))
    assert (full_run / "disparity.png").exists()


def test_defaults_mirror_library():
    args = cli.build_parser().parse_args(["estimate", "data", "--out", "o"])
    cost, sched, heur = cli.config_from_args(args)
    assert cost == CostParams() and sched == AnnealSchedule() and heur == Heuristics()
    assert args.seed == 0 and args.crop is None


def test_zero_iterations_is_init(bundles, tmp_path):
    d = bundles["single_plane"]
    cli.main(["estimate", str(d), "--out", str(tmp_path), "--iterations", "0"])
    got = lfio.read_pfm_file(tmp_path / "disparity.pfm").samples
    b = lfio.load_hci_bundle(d)
    init = init_orientation_map(b.light_field, b.geometry).tan_theta.disparity()
    assert np.array_equal(got, init.astype(np.float32))


def test_seed_gives_identical_pfm(bundles, tmp_path):
    d = str(bundles["two_plane"])
    args = ["--crop", "20,20,40,40", "--q-max", "3", "--seed", "7"]
    cli.main(["estimate", d, "--out", str(tmp_path / "a")] + args)
    cli.main(["estimate", d, "--out", str(tmp_path / "b")] + args)
    a = (tmp_path / "a" / "disparity.pfm").read_bytes()
    assert a == (tmp_path / "b" / "disparity.pfm").read_bytes()


def test_estimate_is_library_composition(bundles, tmp_path):
    d = bundles["two_plane"]
    cli.main(["estimate", str(d), "--out", str(tmp_path), "--crop", "10,30,40,36",
              "--q-max", "2", "--seed", "4", "--lambda", "50", "--no-plane"])
    b = cli.crop_bundle(lfio.load_hci_bundle(d), (10, 30, 40, 36))
    init = init_orientation_map(b.light_field, b.geometry).tan_theta
    theta = refine(b.light_field, b.geometry, init, CostParams(lam=50.0),
                   AnnealSchedule(q_max=2), Heuristics(plane=False), seed=4)
    want = lfio.write_pfm(theta.disparity().astype(np.float32))
    assert (tmp_path / "disparity.pfm").read_bytes() == want


def test_eval_reports(bundles, tmp_path, capsys):
    d = bundles["single_plane"]
    gt = lfio.load_hci_bundle(d).gt_disparity.astype(np.float32)
    lfio.write_pfm_file(tmp_path / "gt.pfm", gt)
    lfio.write_pfm_file(tmp_path / "shift.pfm", gt + np.float32(0.1))
    capsys.readouterr()
    assert cli.main(["eval", str(tmp_path / "gt.pfm"), str(d), "--json",
                     "--planar-mask", cli.PLANAR_MASK]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["mse_x100"] == 0 and rep["badpix_007"] == 0 and rep["mae_planar_deg"] == 0
    cli.main(["eval", str(tmp_path / "shift.pfm"), str(d), "--json"])
    rep = json.loads(capsys.readouterr().out)
    assert rep["mse_x100"] == pytest.approx(1.0, rel=1e-5) and rep["badpix_007"] == 100.0
    cli.main(["eval", str(tmp_path / "shift.pfm"), str(d)])
    table = capsys.readouterr().out.splitlines()
    assert table[0].split()[:2] == ["scene", "MSEx100"] and "100.00%" in table[2]


def test_error_exit_codes(bundles, tmp_path, capsys, monkeypatch):
    d = str(bundles["single_plane"])
    assert cli.main(["estimate", str(tmp_path / "nope"), "--out", str(tmp_path)]) == 3
    bad = tmp_path / "bad.scene"
    bad.write_text("[scene]\n")
    assert cli.main(["synth", str(bad), "--out", str(tmp_path / "s")]) == 4
    assert cli.main(["estimate", d, "--out", str(tmp_path), "--crop", "90,0,20,20"]) == 5
    assert cli.main(["estimate", d, "--out", str(tmp_path), "--q-max", "-1"]) == 6
    nogt = tmp_path / "nogt"
    b = lfio.load_hci_bundle(d)
    lfio.write_hci_bundle(nogt, b.light_field, b.geometry)
    lfio.write_pfm_file(tmp_path / "x.pfm", np.zeros((96, 96), np.float32))
    assert cli.main(["eval", str(tmp_path / "x.pfm"), str(nogt)]) == 3
    monkeypatch.setenv("LFDEPTH_THREADS", "many")
    assert cli.main(["estimate", d, "--out", str(tmp_path)]) == 4
    errs = [l for l in capsys.readouterr().err.splitlines() if l]
    assert len(errs) == 6 and all(l.startswith("lfdepth: ") for l in errs)


def test_console_entry_point():
    r = subprocess.run([sys.executable, "-m", "lfdepth.cli", "--help"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and "estimate" in r.stdout
