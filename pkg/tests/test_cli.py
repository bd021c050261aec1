import json
import math

import numpy as np
import pytest

from unicomp import ComplexMatrix, Group, build_unitary
from unicomp.cli import main
from unicomp.jsonio import complex_matrix_from_obj, complex_matrix_to_obj, dumps, param_matrix_from_obj


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestSample:
    def test_byte_identical_runs(self, tmp_path, capsys):
        a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        for path in (a, b):
            code, _, _ = run(
                capsys,
                "sample", "--group", "SU", "--dim", "3", "--count", "10",
                "--seed", "7", "--out", str(path),
            )
            assert code == 0
        assert a.read_bytes() == b.read_bytes()

    def test_emitted_matrix_is_unitary_on_reread(self, tmp_path, capsys):
        out = tmp_path / "m.jsonl"
        code, _, _ = run(
            capsys,
            "sample", "--group", "U", "--dim", "2", "--count", "1",
            "--seed", "1", "--emit", "matrices", "--out", str(out),
        )
        assert code == 0
        lines = out.read_text().splitlines()
        header = json.loads(lines[0])
        assert header["seed"] == 1 and header["d"] == 2
        draw = json.loads(lines[1])
        cm = complex_matrix_from_obj(draw["matrix"])
        cm.require_unitary(1e-12)

    def test_dim_below_two_is_usage_error(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["sample", "--dim", "1", "--count", "1"])
        assert exc.value.code == 2
        assert "dim must be >= 2" in capsys.readouterr().err

    def test_csv_format(self, tmp_path, capsys):
        out = tmp_path / "s.csv"
        code, _, _ = run(
            capsys,
            "sample", "--dim", "2", "--count", "3", "--seed", "4",
            "--format", "csv", "--out", str(out),
        )
        assert code == 0
        lines = out.read_text().splitlines()
        assert lines[0].startswith("# ")
        assert lines[1].split(",")[:2] == ["i", "lambda_1_1"]
        assert len(lines) == 5


class TestBuildDecompose:
    def test_identity_decomposes_to_zero_grid(self, tmp_path, capsys):
        src = tmp_path / "eye.json"
        src.write_text(dumps(complex_matrix_to_obj(np.eye(3, dtype=complex))))
        out = tmp_path / "lam.json"
        code, _, err = run(
            capsys, "decompose", "--in", str(src), "--group", "U", "--out", str(out)
        )
        assert code == 0
        params = param_matrix_from_obj(json.loads(out.read_text()))
        assert np.allclose(params.lam, 0.0)
        manifest = json.loads(err.strip().splitlines()[-1])
        assert manifest["roundtrip_max_error"] < 1e-12

    def test_sampled_file_roundtrip(self, tmp_path, capsys):
        draws = tmp_path / "draws.jsonl"
        code, _, _ = run(
            capsys,
            "sample", "--group", "SU", "--dim", "4", "--count", "20",
            "--seed", "9", "--emit", "matrices", "--out", str(draws),
        )
        assert code == 0
        lams = tmp_path / "lams.jsonl"
        code, _, err = run(
            capsys, "decompose", "--in", str(draws), "--group", "SU", "--out", str(lams)
        )
        assert code == 0
        manifest = json.loads(err.strip().splitlines()[-1])
        assert manifest["roundtrip_max_error"] < 1e-9
        rebuilt = tmp_path / "mats.jsonl"
        code, _, _ = run(capsys, "build", "--in", str(lams), "--out", str(rebuilt))
        assert code == 0
        originals = [
            json.loads(line)
            for line in draws.read_text().splitlines()[1:]
        ]
        rebuilt_lines = [json.loads(line) for line in rebuilt.read_text().splitlines()[1:]]
        for orig, new in zip(originals, rebuilt_lines):
            a = complex_matrix_from_obj(orig["matrix"]).entries
            b = complex_matrix_from_obj(new["matrix"]).entries
            assert np.linalg.norm(a - b) < 1e-9

    def test_build_single_object(self, tmp_path, capsys):
        src = tmp_path / "p.json"
        src.write_text(
            dumps({"group": "U", "d": 2, "lambda": [[0.0, math.pi / 2], [0.0, 0.0]]})
        )
        code, out, _ = run(capsys, "build", "--in", str(src))
        assert code == 0
        cm = complex_matrix_from_obj(json.loads(out))
        assert cm.allclose(np.array([[0.0, 1.0], [-1.0, 0.0]]))

    def test_non_unitary_input_exits_3(self, tmp_path, capsys):
        src = tmp_path / "h.json"
        src.write_text(dumps(complex_matrix_to_obj(np.array([[1.0, 0.5], [0.5, 1.0]]))))
        code, _, err = run(capsys, "decompose", "--in", str(src), "--group", "U")
        assert code == 3
        assert "defect" in err

    def test_missing_file_exits_1(self, capsys):
        code, _, _ = run(capsys, "decompose", "--in", "/nonexistent/x.json", "--group", "U")
        assert code == 1


class TestReports:
    def test_moment(self, capsys):
        code, out, _ = run(capsys, "moment", "--dim", "3", "--power", "4")
        assert code == 0
        assert json.loads(out) == {"exact": "1/6", "approx": 1.0 / 6.0}

    def test_concurrence_exact(self, capsys):
        code, out, _ = run(capsys, "concurrence", "--local-dim", "2", "--mode", "exact")
        assert code == 0
        obj = json.loads(out)
        assert obj["exact"] == "2/5" and obj["approx"] == 0.4

    def test_concurrence_table_with_figure(self, tmp_path, capsys):
        out = tmp_path / "table.csv"
        code, _, _ = run(capsys, "concurrence", "--table", "--out", str(out))
        assert code == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "d,exact,approx"
        assert lines[1].startswith("2,2/5,")
        assert len(lines) == 12  # d = 2..12
        assert (tmp_path / "table.png").exists()

    def test_concurrence_mc(self, capsys):
        code, out, _ = run(
            capsys,
            "concurrence", "--local-dim", "2", "--mode", "mc", "--n", "5000", "--seed", "3",
        )
        assert code == 0
        obj = json.loads(out)
        assert abs(obj["mean"] - 0.4) < 5 * obj["std_error"]

    def test_design_check_pauli(self, tmp_path, capsys):
        mats = [
            np.eye(2, dtype=complex),
            np.array([[0, 1], [1, 0]], dtype=complex),
            1j * np.array([[0, -1j], [1j, 0]], dtype=complex),
            np.diag([1.0, -1.0]).astype(complex),
        ]
        payload = [
            {**complex_matrix_to_obj(m), "w": 0.25}
            for m in mats
        ]
        src = tmp_path / "set.json"
        src.write_text(dumps(payload))
        code, out, _ = run(
            capsys, "design-check", "--in", str(src), "--t", "1", "--tolerance", "1e-12"
        )
        assert code == 0
        report = json.loads(out)
        assert report["pass"] is True
        assert report["required"] == "1/2"
        assert report["criterion"] == "necessary-only"

    def test_twirl_exact(self, tmp_path, capsys):
        from unicomp import maximally_entangled

        src = tmp_path / "rho.json"
        src.write_text(dumps(complex_matrix_to_obj(maximally_entangled(2).entries)))
        code, out, _ = run(
            capsys, "twirl", "--in", str(src), "--local-dim", "2", "--mode", "exact"
        )
        assert code == 0
        obj = json.loads(out)
        assert abs(obj["beta"] - 1.0) < 1e-9

    def test_twirl_invalid_state_exits_3(self, tmp_path, capsys):
        src = tmp_path / "rho.json"
        src.write_text(dumps(complex_matrix_to_obj(np.eye(4, dtype=complex))))
        code, _, err = run(
            capsys, "twirl", "--in", str(src), "--local-dim", "2", "--mode", "exact"
        )
        assert code == 3
        assert "trace" in err

    def test_check_haar_d2(self, capsys):
        code, out, _ = run(capsys, "check-haar", "--dim", "2", "--group", "U")
        assert code == 0
        report = json.loads(out)
        assert report["pass"] is True
        assert abs(report["jacobian"]["mean_ratio"] - 2.0) < 1e-5
        assert report["normalization"]["pass"] is True


def test_unknown_command_is_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2
