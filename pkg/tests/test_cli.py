import csv
import json
import math
import subprocess
import sys

import pytest

from jostkit.cli import main
from jostkit.errors import SchemaError
from jostkit.forward import Envelope, Free, JacobiParams
from jostkit.inverse import SpectralData
from jostkit.io import dumps, parse_text
from jostkit.opuc import VerblunskySeq


def write(tmp_path, name, obj):
    p = tmp_path / name
    p.write_text(obj if isinstance(obj, str) else json.dumps(obj, indent=2))
    return str(p)


def run_cli(tmp_path, *args):
    out = tmp_path / "out.json"
    code = main([*args, "--output", str(out)])
    return code, json.loads(out.read_text()) if out.exists() else None


class TestParse:
    def test_jacobi_free(self):
        J = parse_text('{"a": [1.0], "b": [2.0], "tail": "free"}')
        assert isinstance(J, JacobiParams) and isinstance(J.tail, Free)
        assert J.b[0] == 2.0

    def test_jacobi_envelope(self):
        J = parse_text('{"a": [1, 1], "b": [0.1, 0.01], "tail": {"envelope": {"C": 1, "R": 1.5}}}')
        assert J.tail == Envelope(1.0, 1.5)

    def test_spectral(self):
        d = parse_text('{"u": [1, -2], "states": [{"z": 0.5, "w": 0.75}]}')
        assert isinstance(d, SpectralData)
        assert d.u.radius == math.inf and d.states[0].residue == pytest.approx(-0.25)

    def test_opuc(self):
        seq = parse_text('{"alphas": [0.5, [0.1, -0.2]]}')
        assert isinstance(seq, VerblunskySeq) and seq[1] == complex(0.1, -0.2)

    @pytest.mark.parametrize(
        "text, field, line",
        [
            ('{\n"a": [-1],\n"b": [0]}', "a[0]", 2),
            ('{"a": [1], "b": [0, 1]}', "b", 1),
            ('{"a": [1], "b": ["x"]}', "b[0]", 1),
            ('{"u": [1], "states": [{"z": 1.5, "w": 1}]}', "states[0].z", 1),
            ('{"alphas": [1.0]}', "alphas[0]", 1),
            ('{"a": [1], "b": [0], "c": 3}', "c", 1),
        ],
    )
    def test_schema_errors_name_field_and_line(self, text, field, line):
        with pytest.raises(SchemaError) as exc:
            parse_text(text)
        assert exc.value.details["field"] == field
        assert exc.value.details["line"] == line

    def test_malformed(self):
        with pytest.raises(SchemaError) as exc:
            parse_text('{"a": [1,\n}')
        assert exc.value.details["line"] == 2


class TestDumps:
    def test_sorted_and_roundtrip_floats(self):
        text = dumps({"b": 0.1 + 0.2, "a": math.inf, "c": 1 + 2j})
        assert list(json.loads(text)) == ["a", "b", "c"]
        assert json.loads(text)["b"] == 0.1 + 0.2
        assert json.loads(text)["a"] == "inf"
        assert json.loads(text)["c"] == [1.0, 2.0]


class TestExitCodes:
    def test_forward_ok(self, tmp_path):
        code, rep = run_cli(tmp_path, "forward", "--input", write(tmp_path, "j.json", {"a": [1.0], "b": [2.0]}))
        assert code == 0 and rep["status"] == "ok"
        (state,) = rep["result"]["bound_states"]
        assert state["z"] == pytest.approx(0.5) and state["weight"] == pytest.approx(0.75)
        assert rep["result"]["sturm_count"] == {"above": 1, "below": 0}

    def test_missing_file(self, tmp_path, capsys):
        assert main(["forward", "--input", str(tmp_path / "nope.json")]) == 1

    def test_schema_error(self, tmp_path, capsys):
        p = write(tmp_path, "bad.json", '{\n"a": [-1],\n"b": [0]}')
        assert main(["forward", "--input", p]) == 1
        assert "line 2" in capsys.readouterr().err

    def test_wrong_kind(self, tmp_path):
        p = write(tmp_path, "s.json", {"u": [1.0]})
        assert main(["forward", "--input", p]) == 1

    def test_bad_option(self, tmp_path):
        p = write(tmp_path, "j.json", {"a": [1.0], "b": [0.0]})
        assert main(["forward", "--input", p, "--r0", "-1"]) == 1

    def test_invert_ok(self, tmp_path):
        p = write(tmp_path, "s.json", {"u": [1, -2], "states": [{"z": 0.5, "w": 0.75}]})
        code, rep = run_cli(tmp_path, "invert", "--input", p, "--strip-steps", "4")
        assert code == 0
        assert rep["result"]["a"] == pytest.approx([1, 1, 1, 1], abs=1e-9)
        assert rep["result"]["b"] == pytest.approx([2, 0, 0, 0], abs=1e-9)

    def test_invert_normalization_violation(self, tmp_path):
        p = write(tmp_path, "s.json", {"u": [1, -2], "states": [{"z": 0.5, "w": 0.8}]})
        code, rep = run_cli(tmp_path, "invert", "--input", p)
        assert code == 2 and rep["diagnostics"][0]["tag"] == "normalization"

    def test_invert_counterexample(self, tmp_path, capsys):
        p = write(tmp_path, "s.json", {"u": [1, -2.5, 1], "states": [{"z": 0.5, "w": 0.5}]})
        code, rep = run_cli(tmp_path, "invert", "--input", p)
        assert code == 2 and rep["diagnostics"][0]["tag"] == "canonical-weight"
        assert "z=0.5" in capsys.readouterr().err

    def test_weights(self, tmp_path):
        p = write(tmp_path, "s.json", {"u": [1, -2]})
        code, rep = run_cli(tmp_path, "weights", "--input", p)
        assert code == 0
        assert rep["result"]["zeros"][0]["canonical_weight"] == pytest.approx(0.75, abs=1e-14)

    def test_decay(self, tmp_path):
        n = range(1, 26)
        J = {"a": [1.0] * 25, "b": [(-1) ** k * 2.25**-k for k in n], "tail": {"envelope": {"C": 1, "R": 1.5}}}
        code, rep = run_cli(tmp_path, "decay", "--input", write(tmp_path, "d.json", J), "--strip-steps", "20")
        assert code == 0
        assert rep["result"]["stripped_decay_rate"] == pytest.approx(1.5, rel=0.07)

    def test_opuc_check(self, tmp_path):
        code, rep = run_cli(tmp_path, "opuc-check", "--input", write(tmp_path, "o.json", {"alphas": [0.5, [0.1, 0.3]]}))
        assert code == 0
        assert rep["result"]["schur_roundtrip_error"] < 1e-10
        assert rep["result"]["telescoping_deviation"] < 1e-10

    def test_roundtrip(self, tmp_path):
        p = write(tmp_path, "j.json", {"a": [1.3, 0.7], "b": [0.5, -0.4]})
        code, rep = run_cli(tmp_path, "roundtrip", "--input", p)
        assert code == 0 and rep["result"]["max_parameter_error"] < 1e-7


class TestDeterminism:
    def test_byte_identical(self, tmp_path):
        p = write(tmp_path, "j.json", {"a": [1.3, 0.7, 1.1], "b": [0.5, -0.4, 1.2]})
        outs = []
        for k in range(2):
            out = tmp_path / f"o{k}.json"
            assert main(["roundtrip", "--input", p, "--output", str(out)]) == 0
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]

    def test_console_script(self, tmp_path):
        p = write(tmp_path, "j.json", {"a": [1.0], "b": [2.0]})
        res = subprocess.run([sys.executable, "-m", "jostkit.cli", "forward", "--input", p],
                             capture_output=True, text=True, check=False)
        assert res.returncode == 0 and json.loads(res.stdout)["status"] == "ok"


class TestTable:
    def test_forward_table(self, tmp_path):
        p = write(tmp_path, "j.json", {"a": [1.0], "b": [2.0]})
        table = tmp_path / "t.csv"
        code, _ = run_cli(tmp_path, "forward", "--input", p, "--table", str(table), "--theta-points", "32")
        assert code == 0
        rows = list(csv.reader(table.open()))
        assert rows[0] == ["theta", "f", "re", "im"] and len(rows) == 33
        # f(2 cos theta) = sin(theta) / (pi |1 - 2 e^{i theta}|^2)
        th, f = float(rows[5][0]), float(rows[5][1])
        assert f == pytest.approx(math.sin(th) / (math.pi * (5 - 4 * math.cos(th))), rel=1e-12)

    def test_invert_table(self, tmp_path):
        p = write(tmp_path, "s.json", {"u": [1, -2], "states": [{"z": 0.5, "w": 0.75}]})
        table = tmp_path / "t.csv"
        code, _ = run_cli(tmp_path, "invert", "--input", p, "--strip-steps", "3", "--table", str(table))
        assert code == 0
        rows = list(csv.reader(table.open()))
        assert rows[0] == ["n", "a", "b", "seminorm"] and len(rows) == 4
