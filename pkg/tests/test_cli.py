"""CLI dispatch, config handling, exit codes, and byte-exact determinism."""

from __future__ import annotations

import math

import pytest

from fkstab.cli import load_domain, main, save_domain
from fkstab.geometry import StarDomain

DISK_CFG = "[domain]\ncenter = 0 0\nr0 = 1.0\nmodes =\n"
WOBBLE_CFG = "[domain]\ncenter = 0 0\nr0 = 1.0\nmodes = 2:0.1:0.0\n"


@pytest.fixture()
def disk_cfg(tmp_path):
    path = tmp_path / "disk.cfg"
    path.write_text(DISK_CFG)
    return path


@pytest.fixture()
def wobble_cfg(tmp_path):
    path = tmp_path / "wobble.cfg"
    path.write_text(WOBBLE_CFG)
    return path


class TestConfig:
    def test_domain_round_trip(self, tmp_path):
        d = StarDomain((0.5, -1.0), 1.2, ((2, 0.03, -0.01), (5, 0.0, 0.02)))
        path = tmp_path / "dom.cfg"
        save_domain(d, path)
        back = load_domain(path)
        assert back == d

    def test_missing_file_is_usage_error(self, tmp_path, capsys):
        rc = main(["eig", "--domain", str(tmp_path / "nope.cfg"), "--outdir", str(tmp_path)])
        assert rc == 2
        assert not (tmp_path / "eig.csv").exists()

    def test_malformed_modes_is_usage_error(self, tmp_path):
        bad = tmp_path / "bad.cfg"
        bad.write_text("[domain]\nr0 = 1.0\nmodes = 2-0.1-0\n")
        assert main(["eig", "--domain", str(bad), "--outdir", str(tmp_path)]) == 2

    def test_hard_cap_is_solver_error(self, tmp_path):
        big = tmp_path / "big.cfg"
        big.write_text("[domain]\ncenter = 0 0\nr0 = 1.6\nmodes =\n")
        assert main(["energy", "--domain", str(big), "--h", "0.05",
                     "--outdir", str(tmp_path)]) == 3


class TestSubcommands:
    def test_eig_values_and_header(self, disk_cfg, tmp_path, capsys):
        rc = main(["eig", "--domain", str(disk_cfg), "--h", "0.02",
                   "--outdir", str(tmp_path)])
        assert rc == 0
        out = capsys.readouterr().out
        assert "lambda1 = 5.7841" in out
        assert "lambda2 = 14.688" in out
        text = (tmp_path / "eig.csv").read_text()
        for needle in ("# fkstab", "# config_hash=", "# h=0.02", "# eta=0.1",
                       "# Tfrak=0.05", "# seed=0", "# v=", "# vmax="):
            assert needle in text

    def test_torsion(self, disk_cfg, tmp_path, capsys):
        rc = main(["torsion", "--domain", str(disk_cfg), "--h", "0.04",
                   "--outdir", str(tmp_path)])
        assert rc == 0
        body = (tmp_path / "torsion.csv").read_text().splitlines()[-1]
        tor = float(body.split(",")[1])
        assert tor == pytest.approx(-math.pi / 16.0, rel=1e-3)

    def test_field_and_mesh_dumps(self, disk_cfg, tmp_path):
        rc = main(["eig", "--domain", str(disk_cfg), "--h", "0.05",
                   "--outdir", str(tmp_path), "--dump-mesh", "--dump-field"])
        assert rc == 0
        verts = (tmp_path / "mesh_vertices.csv").read_text().splitlines()
        tris = (tmp_path / "mesh_triangles.csv").read_text().splitlines()
        field = (tmp_path / "eigenfunction.csv").read_text().splitlines()
        assert verts[0] == "x,y" and tris[0] == "v0,v1,v2"
        assert field[0] == "x,y,value"
        assert len(field) == len(verts)

    def test_distances_row(self, wobble_cfg, tmp_path):
        rc = main(["distances", "--domain", str(wobble_cfg), "--h", "0.04",
                   "--tag", "wobble", "--outdir", str(tmp_path)])
        assert rc == 0
        lines = (tmp_path / "distances.csv").read_text().splitlines()
        header = [ln for ln in lines if not ln.startswith("#")][0]
        assert header == "tag,d0,d1,asym,d_star_sq"
        assert lines[-1].startswith("wobble,")

    def test_fb_residual(self, disk_cfg, tmp_path):
        rc = main(["fb-residual", "--domain", str(disk_cfg), "--h", "0.04",
                   "--outdir", str(tmp_path), "--plot-script"])
        assert rc == 0
        assert (tmp_path / "fb_residual.csv").exists()
        assert (tmp_path / "fb_residual.plt").exists()

    def test_energy_and_plot(self, disk_cfg, tmp_path):
        rc = main(["energy", "--domain", str(disk_cfg), "--h", "0.04",
                   "--tau", "0.01", "--c-nl", "0.04", "--outdir", str(tmp_path)])
        assert rc == 0
        lines = (tmp_path / "energy.csv").read_text().splitlines()
        header = [ln for ln in lines if not ln.startswith("#")][0]
        assert header.split(",")[:4] == ["lambda1", "tor", "vol", "f_pen"]

    def test_hadamard_check_small(self, tmp_path):
        rc = main(["hadamard-check", "--seed", "7", "--fields", "2", "--domains", "1",
                   "--h", "0.04", "--outdir", str(tmp_path)])
        assert rc == 0
        lines = [ln for ln in (tmp_path / "hadamard.csv").read_text().splitlines()
                 if not ln.startswith("#")]
        assert lines[0] == "functional,field,analytic,fd,rel_err"
        assert len(lines) == 1 + 2 * 4
        for ln in lines[1:]:
            assert float(ln.split(",")[-1]) < 0.02

    def test_key_estimate(self, disk_cfg, tmp_path):
        inner = tmp_path / "inner.cfg"
        inner.write_text("[domain]\ncenter = 0 0\nr0 = 0.9\nmodes =\n")
        rc = main(["key-estimate", "--inner", str(inner), "--outer", str(disk_cfg),
                   "--h", "0.04", "--outdir", str(tmp_path)])
        assert rc == 0
        body = (tmp_path / "key_estimate.csv").read_text().splitlines()[-1]
        c_emp = float(body.split(",")[3])
        assert 0.0 < c_emp < 3.0

    def test_minimize_writes_trace_and_domain(self, wobble_cfg, tmp_path):
        rc = main(["minimize", "--domain", str(wobble_cfg), "--max-iter", "3",
                   "--fine-iters", "1", "--h-coarse", "0.08", "--h-fine", "0.06",
                   "--modes-k", "3", "--outdir", str(tmp_path)])
        assert rc == 0
        assert (tmp_path / "minimize_trace.csv").exists()
        final = load_domain(tmp_path / "minimize_final.cfg")
        assert final.r0 > 0.0

    def test_selection_short_run(self, tmp_path, capsys):
        seed = tmp_path / "seed.cfg"
        seed.write_text("[domain]\ncenter = 0 0\nr0 = 1.0\nmodes = 2:0.08:0.0\n")
        rc = main(["selection", "--domain", str(seed), "--tau", "0.01",
                   "--max-iter", "2", "--fine-iters", "1", "--h-coarse", "0.08",
                   "--h-fine", "0.06", "--modes-k", "2", "--outdir", str(tmp_path)])
        assert rc == 0
        out = capsys.readouterr().out
        assert "verdict A" in out and "verdict B" in out
        assert (tmp_path / "selection.csv").exists()
        assert (tmp_path / "selection_minimizer.cfg").exists()

    def test_stability_sweep_jobs_agree(self, tmp_path):
        base = ["stability-sweep", "--kmin", "2", "--kmax", "3", "--amplitudes",
                "0.1", "--h", "0.05"]
        rc1 = main(base + ["--outdir", str(tmp_path / "serial"), "--jobs", "1"])
        rc2 = main(base + ["--outdir", str(tmp_path / "par"), "--jobs", "2"])
        assert rc1 == rc2 == 0
        a = (tmp_path / "serial" / "sweep.csv").read_text()
        b = (tmp_path / "par" / "sweep.csv").read_text()
        assert a == b


class TestDeterminism:
    def test_byte_identical_reruns(self, wobble_cfg, tmp_path):
        args = ["energy", "--domain", str(wobble_cfg), "--h", "0.04", "--seed", "3"]
        for sub in ("one", "two"):
            assert main(args + ["--outdir", str(tmp_path / sub)]) == 0
        a = (tmp_path / "one" / "energy.csv").read_bytes()
        b = (tmp_path / "two" / "energy.csv").read_bytes()
        assert a == b

    def test_minimize_trace_deterministic(self, wobble_cfg, tmp_path):
        args = ["minimize", "--domain", str(wobble_cfg), "--max-iter", "2",
                "--fine-iters", "1", "--h-coarse", "0.08", "--h-fine", "0.06",
                "--modes-k", "2"]
        for sub in ("one", "two"):
            assert main(args + ["--outdir", str(tmp_path / sub)]) == 0
        a = (tmp_path / "one" / "minimize_trace.csv").read_bytes()
        b = (tmp_path / "two" / "minimize_trace.csv").read_bytes()
        assert a == b
