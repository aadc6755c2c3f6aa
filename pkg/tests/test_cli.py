"""Command line behavior: subcommands, error categories, reproducibility."""

import filecmp
import subprocess
import sys
from pathlib import Path

import pytest

from netmesh.cli import main

DATA = Path(__file__).parent / "data"
ROOT = Path(__file__).parent.parent


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestInfo:
    def test_network_mesh(self, capsys):
        code, out, err = run(capsys, "info", DATA / "network.msh")
        assert code == 0
        assert "grid dimension: 1" in out
        assert "elements: 3" in out
        assert "vertices: 4" in out
        assert "boundary facets: 3" in out
        assert "junction facets (3 or more incident elements): 1" in out
        assert "multiplicity 3: 1" in out

    def test_surface_mesh_reports_junction(self, capsys):
        code, out, err = run(capsys, "info", DATA / "surface.msh")
        assert code == 0
        assert "grid dimension: 2" in out
        assert "elements: 3" in out
        assert "edges: 7" in out
        assert "boundary facets: 6" in out
        assert "junction facets (3 or more incident elements): 1" in out
        assert "multiplicity 3: 1" in out


class TestRefine:
    def test_zero_steps_copies_the_mesh(self, capsys, tmp_path):
        out_path = tmp_path / "flat.vtk"
        code, out, err = run(
            capsys, "refine", ROOT / "meshes" / "square.msh", "--steps", 0, "--out", out_path
        )
        assert code == 0
        assert "2 cells" in out
        assert out_path.exists()

    def test_network_refinement_quadruples_cells(self, capsys, tmp_path):
        out_path = tmp_path / "net.vtk"
        code, out, err = run(
            capsys, "refine", DATA / "network.msh", "--steps", 2, "--out", out_path
        )
        assert code == 0
        assert "12 cells" in out

    def test_wavelet_refinement_on_surface(self, capsys, tmp_path):
        out_path = tmp_path / "wavelet.vtk"
        code, out, err = run(
            capsys,
            "refine", ROOT / "meshes" / "square.msh",
            "--steps", 2, "--parametrization", "wavelet", "--out", out_path,
        )
        assert code == 0
        assert "32 cells" in out
        # the lifted center of the square sits at the wavelet peak
        assert "0 0 0.2" in out_path.read_text()


class TestErrorCategories:
    def test_parse_error_is_2(self, capsys, tmp_path):
        bad = tmp_path / "bad.msh"
        bad.write_text("$MeshFormat\n2.2 1 8\n$EndMeshFormat\n")
        code, out, err = run(capsys, "info", bad)
        assert code == 2
        assert err.startswith("parse-error:")

    def test_scenario_error_is_3(self, capsys, tmp_path):
        code, out, err = run(
            capsys,
            "refine", DATA / "network.msh",
            "--parametrization", "moebius", "--out", tmp_path / "x.vtk",
        )
        assert code == 3
        assert err.startswith("scenario-error:")
        assert "moebius" in err

    def test_negative_steps_is_a_scenario_error(self, capsys, tmp_path):
        code, out, err = run(
            capsys, "refine", DATA / "network.msh", "--steps", -1, "--out", tmp_path / "x.vtk"
        )
        assert code == 3

    def test_mesh_error_is_4(self, capsys, tmp_path):
        code, out, err = run(
            capsys,
            "refine", DATA / "network.msh",
            "--parametrization", "wavelet", "--out", tmp_path / "x.vtk",
        )
        assert code == 4
        assert err.startswith("mesh-error:")

    def test_io_error_is_5(self, capsys, tmp_path):
        code, out, err = run(capsys, "info", tmp_path / "nowhere.msh")
        assert code == 5
        assert err.startswith("io-error:")

    def test_scenario_parse_problem_is_3(self, capsys, tmp_path):
        scen = tmp_path / "broken.txt"
        scen.write_text("mesh = ../meshes/vessels.msh\ndt = quick\n")
        code, out, err = run(capsys, "flow", scen, "--out", tmp_path / "out")
        assert code == 3
        assert "'dt'" in err


class TestDemos:
    def test_flow_demo_runs_and_is_deterministic(self, capsys, tmp_path):
        scenario = ROOT / "scenarios" / "vessels.txt"
        code_a, out_a, _ = run(capsys, "flow", scenario, "--out", tmp_path / "a", "--steps", 3)
        code_b, out_b, _ = run(capsys, "flow", scenario, "--out", tmp_path / "b", "--steps", 3)
        assert code_a == code_b == 0
        assert out_a == out_b
        files_a = sorted(p.name for p in (tmp_path / "a").iterdir())
        assert "flow_0000.vtk" in files_a and "summary.txt" in files_a
        match, mismatch, errors = filecmp.cmpfiles(
            tmp_path / "a", tmp_path / "b", files_a, shallow=False
        )
        assert not mismatch and not errors

    def test_flow_summary_reports_mass(self, capsys, tmp_path):
        scenario = ROOT / "scenarios" / "vessels.txt"
        code, out, _ = run(capsys, "flow", scenario, "--out", tmp_path / "o", "--steps", 1)
        assert code == 0
        assert "mass=" in out
        assert "step 0:" in out and "step 1:" in out

    def test_roots_demo_seed_override(self, capsys, tmp_path):
        scenario = ROOT / "scenarios" / "roots.txt"
        code_a, out_a, _ = run(
            capsys, "roots", scenario, "--out", tmp_path / "a", "--steps", 3, "--seed", 7
        )
        code_b, out_b, _ = run(
            capsys, "roots", scenario, "--out", tmp_path / "b", "--steps", 3, "--seed", 7
        )
        code_c, out_c, _ = run(
            capsys, "roots", scenario, "--out", tmp_path / "c", "--steps", 3, "--seed", 8
        )
        assert code_a == code_b == code_c == 0
        assert out_a == out_b
        assert out_a != out_c
        assert (tmp_path / "a" / "summary.txt").read_bytes() == (
            tmp_path / "b" / "summary.txt"
        ).read_bytes()

    def test_roots_summary_reports_flux(self, capsys, tmp_path):
        scenario = ROOT / "scenarios" / "roots.txt"
        code, out, _ = run(capsys, "roots", scenario, "--out", tmp_path / "o", "--steps", 2)
        assert code == 0
        assert "collar_flux=" in out
        assert "uptake=" in out
        assert "final: elements=" in out


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "netmesh", "info", str(DATA / "network.msh")],
        capture_output=True,
        text=True,
        cwd=ROOT,
    )
    assert proc.returncode == 0
    assert "elements: 3" in proc.stdout
