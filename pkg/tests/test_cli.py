import csv
import json
import subprocess
import sys
from fractions import Fraction

import pytest

from tppforge.cli import EXIT_INPUT, EXIT_OK, EXIT_TRUNCATED, EXIT_VIOLATION, main, parse_mode, run_batch
from tppforge.search import CSV_HEADER


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_parse_mode():
    assert parse_mode("beta") == ("full_capacity", None)
    assert parse_mode("beta0") == ("subgroup_capacity", None)
    assert parse_mode("type=6, 4,2") == ("fixed_type", (6, 4, 2))
    with pytest.raises(Exception):
        parse_mode("gamma")


class TestSearch:
    def test_order21(self, capsys):
        code, out, _ = run(capsys, "search", "--group", "sd:7,3,2", "--mode", "beta")
        payload = json.loads(out)
        assert code == EXIT_OK
        assert payload["capacity"] == 27 and payload["ratio"] == [9, 7] and payload["exhausted"]
        assert payload["witnesses"][0]["type"] == [3, 3, 3]

    def test_csv_and_files(self, tmp_path, capsys):
        code, out, _ = run(capsys, "search", "--group", "dihedral:6", "--mode", "beta0", "--format", "both",
                           "--out", str(tmp_path))
        assert code == EXIT_OK and out == ""
        rows = list(csv.reader((tmp_path / "dihedral_6.csv").open()))
        assert tuple(rows[0]) == CSV_HEADER
        row = dict(zip(rows[0], rows[1]))
        assert Fraction(int(row["ratio_num"]), int(row["ratio_den"])) == Fraction(4, 3)
        assert json.loads((tmp_path / "dihedral_6.json").read_text())["capacity"] == 16

    def test_fixed_type(self, capsys):
        code, out, _ = run(capsys, "search", "--group", "file:g32_27.json", "--mode", "type=6,4,2")
        payload = json.loads(out)
        assert code == EXIT_OK and payload["found"] and payload["capacity"] == 48

    def test_truncated_exit(self, capsys):
        code, out, _ = run(capsys, "search", "--group", "dihedral:8", "--node-budget", "10")
        assert code == EXIT_TRUNCATED and json.loads(out)["exhausted"] is False

    @pytest.mark.parametrize(
        "argv",
        [
            ("search", "--group", "cyclic:x"),
            ("search", "--group", "sd:7,3,3"),
            ("search", "--group", "dihedral:3", "--mode", "gamma"),
            ("search", "--group", "file:/nonexistent/table.json"),
            ("search", "--group", "cyclic:40"),
        ],
    )
    def test_input_errors(self, capsys, argv):
        code, _, err = run(capsys, *argv)
        assert code == EXIT_INPUT and "input error" in err


class TestOtherCommands:
    def test_build_writes_table(self, tmp_path, capsys):
        code, out, _ = run(capsys, "build", "--group", "prod:cyclic:4*cyclic:4", "--out", str(tmp_path))
        summary = json.loads(out)
        assert code == EXIT_OK and summary["order"] == 16 and summary["axioms_ok"]
        table = json.loads((tmp_path / "prod_cyclic_4_cyclic_4.json").read_text())
        assert table["order"] == 16 and len(table["mul"]) == 16
        code, out, _ = run(capsys, "check", "--group", f"file:{tmp_path / 'prod_cyclic_4_cyclic_4.json'}")
        assert code == EXIT_OK and json.loads(out)["axioms_ok"]

    def test_check_triple(self, tmp_path, capsys):
        path = tmp_path / "t.json"
        path.write_text(json.dumps({"group": "dihedral:3", "S": [0, 3], "T": [0, 4], "U": [0]}))
        code, out, _ = run(capsys, "check", "--group", "dihedral:3", "--triple", str(path))
        assert code == EXIT_OK and json.loads(out)["is_tpp"] is True
        code, out, _ = run(capsys, "check", "--group", "cyclic:4", "--triple", '{"S":[0,1],"T":[0,1],"U":[0,1]}')
        assert code == EXIT_OK and json.loads(out)["is_tpp"] is False

    def test_check_rejects_bad_index(self, capsys):
        code, _, _ = run(capsys, "check", "--group", "cyclic:4", "--triple", '{"S":[0,7],"T":[0],"U":[0]}')
        assert code == EXIT_INPUT

    def test_verify_theorem(self, capsys):
        code, out, _ = run(capsys, "verify-theorem", "--group", "sd:7,3,2")
        payload = json.loads(out)["results"][0]
        assert code == EXIT_OK and payload["applicable"]
        assert payload["theorem"][0]["bound"] == [9, 5] and payload["theorem"][0]["rho0"] == [9, 7]

    def test_verify_theorem_catalog(self, tmp_path, capsys):
        cat = tmp_path / "cat.txt"
        cat.write_text("dihedral:6\nfile:s4.json\n")
        code, out, _ = run(capsys, "verify-theorem", "--catalog", str(cat), "--format", "csv")
        rows = list(csv.DictReader(out.splitlines()))
        assert code == EXIT_OK and rows and all(r["holds"] == "true" for r in rows)

    def test_conjecture_scan(self, tmp_path, capsys):
        cat = tmp_path / "cat.txt"
        cat.write_text("dihedral:6\nsd:7,3,2\n")
        code, out, _ = run(capsys, "conjecture-scan", "--catalog", str(cat))
        rows = list(csv.DictReader(out.splitlines()))
        assert code == EXIT_OK
        assert {r["group"]: r["conjecture_status"] for r in rows} == {"dihedral:6": "holds", "sd:7,3,2": "holds"}
        assert rows[0]["rho_num"] == "4" and rows[0]["rho_den"] == "3"

    def test_matmul_explicit(self, capsys):
        triple = '{"S":[0,3],"T":[0,4],"U":[0]}'
        code, out, _ = run(capsys, "matmul", "--group", "dihedral:3", "--triple", triple,
                           "--A", "[[1,2],[3,4]]", "--B", "[[5],[6]]")
        payload = json.loads(out)
        assert code == EXIT_OK and payload == {"product": [[17], [39]], "matches_naive": True}

    def test_matmul_trials_and_refusal(self, capsys):
        code, out, _ = run(capsys, "matmul", "--group", "dihedral:3", "--triple", '{"S":[0,3],"T":[0,4],"U":[0]}')
        assert code == EXIT_OK and json.loads(out)["mismatches"] == 0
        code, _, err = run(capsys, "matmul", "--group", "cyclic:4", "--triple", '{"S":[0,1],"T":[0,1],"U":[0,1]}')
        assert code == EXIT_INPUT and "refused" in err


class TestBatch:
    def test_dihedral_beta0(self, tmp_path):
        cat = tmp_path / "cat.txt"
        cat.write_text("\n".join(f"dihedral:{n}" for n in range(1, 9)) + "\n")
        result = run_batch(cat, "beta0", out_dir=tmp_path / "out")
        assert result.exit_code == EXIT_OK
        rows = list(csv.DictReader((tmp_path / "out" / "results.csv").open()))
        assert len(rows) == 8
        assert all(Fraction(int(r["ratio_num"]), int(r["ratio_den"])) <= Fraction(4, 3) for r in rows)
        one = json.loads((tmp_path / "out" / "dihedral_6.json").read_text())
        assert one["theorem"] and all(t["holds"] for t in one["theorem"])

    def test_empty_catalog(self, tmp_path):
        cat = tmp_path / "empty.txt"
        cat.write_text("")
        result = run_batch(cat, "beta0", out_dir=tmp_path / "out")
        assert result.exit_code == EXIT_OK
        assert (tmp_path / "out" / "results.csv").read_text().strip() == ",".join(CSV_HEADER)

    def test_bad_line_reported(self, tmp_path):
        cat = tmp_path / "cat.txt"
        cat.write_text("cyclic:3\nnot-a-group\ndihedral:3\n")
        result = run_batch(cat, "beta", out_dir=tmp_path / "out")
        assert len(result.reports) == 2
        assert len(result.failures) == 1 and "line 2" in result.failures[0][0]
        assert result.exit_code == EXIT_INPUT
        summary = json.loads((tmp_path / "out" / "summary.json").read_text())
        assert summary["groups"] == 2 and len(summary["failures"]) == 1

    def test_violation_exit(self, tmp_path, monkeypatch):
        import tppforge.cli as cli
        from tppforge.errors import TheoremViolation

        def boom(*_args, **_kwargs):
            raise TheoremViolation("forced")

        monkeypatch.setattr(cli, "_theorem_payload", boom)
        cat = tmp_path / "cat.txt"
        cat.write_text("dihedral:3\n")
        assert run_batch(cat, "beta0", out_dir=tmp_path / "out").exit_code == EXIT_VIOLATION


def test_console_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "tppforge", "search", "--group", "dihedral:3", "--format", "csv"],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0
    assert proc.stdout.splitlines()[0] == ",".join(CSV_HEADER)
