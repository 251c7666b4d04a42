"""Command-line interface: formats, determinism, exit codes."""

import json

import numpy as np
import pytest

from kreinspace.blocks import assemble
from kreinspace.cli import main
from kreinspace.serialize import CSV_HEADER, dump_json, problem_to_dict


def write_problem(path, a, solver=None):
    path.write_text(dump_json(problem_to_dict(a, solver)))
    return str(path)


@pytest.fixture
def ij_problem(tmp_path):
    a = assemble([[1j]], [[0.0]], [[0.0]], [[-1j]])
    return write_problem(tmp_path / "ij.json", a)


@pytest.fixture
def anti_problem(tmp_path):
    a = assemble([[-1j]], [[0.0]], [[0.0]], [[1j]])
    return write_problem(tmp_path / "anti.json", a)


@pytest.fixture
def triangular_problem(tmp_path):
    a = assemble([[1j]], [[1.0]], [[0.0]], [[-1j]])
    return write_problem(tmp_path / "tri.json", a)


@pytest.fixture
def scalar_block_problem(tmp_path):
    a = assemble([[0.0]], [[1.0]], [[1.0]], [[-1j]])
    return write_problem(tmp_path / "sb.json", a)


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_generate_deterministic(capsys):
    code1, out1, _ = run(capsys, "generate", "--p", "2", "--m", "2", "--margin", "0.5", "--seed", "7")
    code2, out2, _ = run(capsys, "generate", "--p", "2", "--m", "2", "--margin", "0.5", "--seed", "7")
    assert code1 == code2 == 0
    assert out1 == out2
    doc = json.loads(out1)
    assert doc["version"] == "1"
    assert doc["structure"] == {"p": 2, "m": 2}


def test_generate_margin_is_met(capsys, tmp_path):
    out_path = tmp_path / "g.json"
    code, _, _ = run(
        capsys, "generate", "--p", "2", "--m", "2", "--margin", "0.5",
        "--seed", "7", "--out", str(out_path),
    )
    assert code == 0
    from kreinspace.blocks import dissipativity_margin
    from kreinspace.serialize import load_problem

    a, _ = load_problem(str(out_path))
    assert dissipativity_margin(a) >= 0.5 - 1e-10


def test_generate_rejects_bad_dimension(capsys):
    code, _, err = run(capsys, "generate", "--p", "0", "--m", "2")
    assert code == 2
    assert "error" in err


def test_solve_ij(capsys, ij_problem):
    code, out, _ = run(capsys, "solve", ij_problem)
    assert code == 0
    doc = json.loads(out)
    k = np.array(doc["K"], dtype=float)
    assert np.abs(k).max() <= 1e-10
    assert doc["restriction_spectrum"][0] == pytest.approx([0.0, 1.0], abs=1e-9)
    assert doc["acceptance"]["passed"] is True


def test_solve_anti_dissipative_exit_3(capsys, anti_problem):
    code, out, _ = run(capsys, "solve", anti_problem)
    assert code == 3
    assert "NotDissipative" in json.loads(out)["error"]


def test_solve_triangular(capsys, triangular_problem):
    code, out, _ = run(capsys, "solve", triangular_problem)
    assert code == 0
    doc = json.loads(out)
    assert np.abs(np.array(doc["K"])).max() <= 1e-8
    assert doc["restriction_spectrum"][0] == pytest.approx([0.0, 1.0], abs=1e-8)


def test_solve_deterministic(capsys, triangular_problem):
    _, out1, _ = run(capsys, "solve", triangular_problem)
    _, out2, _ = run(capsys, "solve", triangular_problem)
    assert out1 == out2


def test_solve_bad_file(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("not json")
    code, _, err = run(capsys, "solve", str(bad))
    assert code == 2


def test_solve_bad_schema(capsys, tmp_path):
    bad = tmp_path / "bad2.json"
    bad.write_text(json.dumps({"version": "1", "structure": {"p": 1, "m": 1}}))
    code, _, _ = run(capsys, "solve", str(bad))
    assert code == 2


def test_solve_inconsistent_override(capsys, tmp_path):
    # galerkin dims that do not reach p are an input error
    a = assemble([[1j]], [[0.0]], [[0.0]], [[-1j]])
    path = write_problem(tmp_path / "p.json", a, solver={"galerkin_dims": [2, 3]})
    code, _, err = run(capsys, "solve", path)
    assert code == 2
    assert "error" in err


def test_exit_code_recomputable_from_report(capsys, tmp_path):
    # re-checking the acceptance triple from the report fields gives the code
    from kreinspace.harness import InstanceSpec, random_dissipative

    a = random_dissipative(InstanceSpec(p=2, m=2, margin=0.5, seed=1))
    path = write_problem(tmp_path / "p.json", a)
    code, out, _ = run(capsys, "solve", path)
    doc = json.loads(out)
    acc = doc["acceptance"]
    redo = (
        doc["K_norm"] <= acc["thresholds"]["k_norm"]
        and doc["invariance_residual"] <= acc["thresholds"]["invariance"]
        and min(im for _, im in doc["restriction_spectrum"]) >= acc["thresholds"]["min_im"]
        and doc["maximal"]
    )
    assert (0 if redo else 1) == code


def test_verify_single_problem_csv(capsys, tmp_path):
    from kreinspace.harness import InstanceSpec, random_dissipative

    a = random_dissipative(InstanceSpec(p=2, m=2, margin=0.5, seed=2))
    path = write_problem(
        tmp_path / "p.json", a, solver={"eps_schedule": [0.5, 0.25, 0.125, 1e-4]}
    )
    csv_path = tmp_path / "out.csv"
    code, out, err = run(capsys, "verify", path, "--csv", str(csv_path))
    assert code == 0
    lines = csv_path.read_text().strip().splitlines()
    assert lines[0] == CSV_HEADER
    assert len(lines) == 2
    assert lines[1].startswith("-1,2,2,")
    assert "1/1 instances passed" in err


def test_verify_suite(capsys, tmp_path):
    code, out, err = run(
        capsys, "verify", "--suite", "--seeds", "3", "--p", "2", "--m", "2",
        "--margin", "0.5",
    )
    assert code == 0
    doc = json.loads(out)
    assert doc["passed"] is True
    assert len(doc["rows"]) == 3
    assert "3/3" in err


def test_verify_suite_negative_control(capsys):
    code, out, _ = run(
        capsys, "verify", "--suite", "--seeds", "2", "--p", "2", "--m", "2",
        "--margin", "-0.5",
    )
    assert code == 1
    doc = json.loads(out)
    assert doc["passed"] is False
    assert all("NotDissipative" in (r["error"] or "") for r in doc["rows"])
    assert doc["failure_artifacts"]


def test_verify_needs_input(capsys):
    code, _, err = run(capsys, "verify")
    assert code == 2


def test_spectrum_diagonal(capsys, tmp_path):
    from kreinspace.geometry import KreinStructure
    from kreinspace.blocks import decompose

    a = decompose(np.diag([2j, -3j]), KreinStructure(1, 1))
    path = write_problem(tmp_path / "d.json", a)
    code, out, _ = run(capsys, "spectrum", path)
    assert code == 0
    doc = json.loads(out)
    np.testing.assert_allclose(doc["spectrum_A"], [[0.0, 2.0], [0.0, -3.0]], atol=1e-12)


def test_spectrum_triangular_and_restriction(capsys, triangular_problem):
    code, out, _ = run(capsys, "spectrum", triangular_problem)
    assert code == 0
    doc = json.loads(out)
    np.testing.assert_allclose(doc["spectrum_A"], [[0.0, 1.0], [0.0, -1.0]], atol=1e-12)
    np.testing.assert_allclose(doc["spectrum_restriction"], [[0.0, 1.0]], atol=1e-12)
    assert doc["contour_used"]["kind"] == "semicircle_upper"


def test_spectrum_profile(capsys, scalar_block_problem):
    code, out, _ = run(capsys, "spectrum", scalar_block_problem, "--profile", "1,10,100")
    assert code == 0
    doc = json.loads(out)
    values = [v for _, v in doc["g_decay_profile"]]
    assert values == pytest.approx([0.5, 1 / 11, 1 / 101], abs=1e-12)


def test_spectrum_bad_profile(capsys, scalar_block_problem):
    code, _, _ = run(capsys, "spectrum", scalar_block_problem, "--profile", "10,1")
    assert code == 2


def test_unknown_flag_exit_2(capsys):
    code, _, _ = run(capsys, "generate", "--p", "2", "--m", "2", "--bogus")
    assert code == 2


def test_thread_cap_env(capsys, monkeypatch, ij_problem):
    monkeypatch.setenv("KREIN_THREADS", "1")
    code, out, _ = run(capsys, "solve", ij_problem)
    assert code == 0
    monkeypatch.setenv("KREIN_THREADS", "bogus")  # ignored, not fatal
    code, _, _ = run(capsys, "solve", ij_problem)
    assert code == 0
