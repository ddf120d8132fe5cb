import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from acx import __version__
from acx.cli import run
from acx.config import COMMANDS, ConfigError, resolve
from acx.expr import ExpressionError, parse_expression
from acx.table import ResultTable, fmt_float


def _config(tmp_path, **data):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(data))
    return str(path)


def _json_lines(text):
    return [json.loads(line) for line in text.splitlines() if line]


def test_integrability_pass_exit_zero(tmp_path, capsys):
    cfg = _config(tmp_path, structure="ja:x1*x2", points=8)
    assert run(["integrability", "--config", cfg, "--format", "json"]) == 0
    lines = _json_lines(capsys.readouterr().out)
    head = lines[0]
    assert head["kind"] == "header" and head["version"] == __version__
    assert head["config"]["structure"] == "ja:x1*x2" and head["config"]["points"] == 8
    assert lines[-1] == {"kind": "summary", "passed": True}


def test_certificate_failure_exit_two(tmp_path, capsys):
    # the printed closed form for a = x1*x2 does not match the computed field
    cfg = _config(tmp_path, structure="ja:x1*x2", points=4, closed_form="printed")
    assert run(["tj", "--config", cfg]) == 2
    captured = capsys.readouterr()
    assert "closed_form[printed]" in captured.err
    assert "# passed: false" in captured.out


@pytest.mark.parametrize("data", [{"bogus": 1}, {"tolerances": {"bogus": 1.0}},
                                  {"structure": "ja:import os"}, {"points": "many"},
                                  {"subcommand": "tj"}])
def test_bad_config_exit_one(tmp_path, capsys, data):
    assert run(["integrability", "--config", _config(tmp_path, **data)]) == 1
    assert "configuration error" in capsys.readouterr().err


def test_usage_errors_exit_one(tmp_path, capsys):
    with pytest.raises(SystemExit) as e:
        run(["tj", "--format", "xml"])
    assert e.value.code == 1
    with pytest.raises(SystemExit) as e:
        run(["nosuch"])
    assert e.value.code == 1
    assert run(["tj", "--config", str(tmp_path / "missing.json")]) == 1
    capsys.readouterr()


def test_output_is_deterministic_and_written_to_file(tmp_path, capsys):
    cfg = _config(tmp_path, structure="ja:x2*y2", points=8)
    outs = []
    for i in range(2):
        out = tmp_path / f"o{i}.csv"
        assert run(["tj", "--config", cfg, "--seed", "3", "--out", str(out)]) == 0
        outs.append(out.read_text())
    assert outs[0] == outs[1]
    assert outs[0].startswith('# command: "tj"\n# version: ')
    assert '"seed":3' in outs[0]
    assert capsys.readouterr().out == ""


def test_csv_floats_have_17_significant_digits(tmp_path, capsys):
    cfg = _config(tmp_path, structure="ja:x1*x2", points=4)
    run(["integrability", "--config", cfg])
    out = capsys.readouterr().out
    row = [l for l in out.splitlines() if not l.startswith("#")][1]
    sup = row.split(",")[1]
    assert len(sup.replace("0.", "").lstrip("0").replace(".", "")) == 17


def test_every_subcommand_resolves_defaults():
    for name in COMMANDS:
        cfg = resolve(name)
        assert cfg["format"] == "csv" and cfg["jets"] in ("analytic", "grid")


def test_resolve_flag_overrides_file():
    cfg = resolve("tj", {"seed": 1, "resolution": 9}, {"seed": 5})
    assert cfg["seed"] == 5 and cfg["resolution"] == 9
    with pytest.raises(ConfigError):
        resolve("tj", {"resolution": 3})
    with pytest.raises(ConfigError):
        resolve("tj", {"jets": "spectral"})


def test_expression_parser():
    f = parse_expression("2^3 + sqrt(x1) - abs(y1) + exp(0)*log(e) + pi*0")
    assert float(f(np.array([4.0, -1.0, 0.0, 0.0]))) == pytest.approx(10.0)
    for bad in ["", "x3", "x1.real", "[x1]", "lambda: 1", "open('f')", "x1 if y1 else x2"]:
        with pytest.raises(ExpressionError):
            parse_expression(bad)


@settings(max_examples=50, deadline=None)
@given(st.floats(allow_nan=True, allow_infinity=True))
def test_fmt_float_round_trips(x):
    s = fmt_float(x)
    if math.isnan(x):
        assert s == "nan"
    else:
        assert float(s) == x


def test_table_render_json_and_csv():
    t = ResultTable("demo", ["a", "b"])
    t.add(a=0.1, b=[1.0, 2.5])
    t.certify("ok", True, 0.1, 1.0)
    t.certify("bad", False, 2.0, 1.0)
    assert not t.passed
    lines = _json_lines(t.render("json", {"command": "demo"}))
    assert lines[1]["a"] == 0.1 and lines[-1]["passed"] is False
    csv = t.render("csv", {"command": "demo"})
    assert "0.10000000000000001" in csv and "# passed: false" in csv
