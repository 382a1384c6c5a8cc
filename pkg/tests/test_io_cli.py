"""File formats, delimited reports and the command line."""

import json
import os

import pytest

from sheafops.cli import main
from sheafops.io import (
    FormatError,
    emit_report,
    parse_field,
    parse_sheaf,
    parse_site,
    serialize_sheaf,
    serialize_site,
)
from sheafops.linalg import GF, QQ
from sheafops.models import half_open_interval_model, sierpinski_model
from sheafops.sheaves import random_sheaf


def test_parse_field():
    assert parse_field("q") is QQ or parse_field("q") == QQ
    assert parse_field("fp:5") == GF(5)
    assert parse_field(None) == QQ
    with pytest.raises(FormatError):
        parse_field("fp:6")
    with pytest.raises(FormatError):
        parse_field("r")


def test_site_roundtrip_plain_and_ambient():
    for site in (sierpinski_model().site, half_open_interval_model().site):
        text = serialize_site(site)
        text2 = serialize_site(parse_site(text))
        assert text == text2


def test_site_roundtrip_coarse_with_coverings():
    doc = {
        "points": ["p", "q"],
        "leq": [["p", "q"]],
        "sublattice": [[], ["q"], ["p", "q"]],
        "coverings": {"2": [[2], [1, 2]]},
    }
    parsed = parse_site(doc)
    assert parsed.coarse is not None and parsed.basis
    text = serialize_site(parsed)
    text2 = serialize_site(parse_site(text))
    assert text == text2


def test_malformed_site_reports_position():
    with pytest.raises(FormatError, match="line"):
        parse_site('{"points": [')
    with pytest.raises(FormatError, match='"leq"'):
        parse_site('{"points": ["a"]}')


def test_sheaf_roundtrip_stalks():
    site = sierpinski_model().site
    F = random_sheaf(site, 3, max_dim=2, field=GF(5))
    text = serialize_sheaf(F)
    F2, parsed, field = parse_sheaf(text)
    assert field == GF(5)
    assert serialize_sheaf(F2, parsed) == text


def test_emit_report_text_json_and_errors(tmp_path):
    cols = ["name", "value"]
    rows = [{"name": "a", "value": 1}]
    text = emit_report(cols, rows, "text")
    assert text == "name, value\na, 1\n"
    payload = json.loads(emit_report(cols, rows, "json", seed=0))
    assert payload["rows"] == rows and payload["seed"] == 0
    with pytest.raises(FormatError):
        emit_report(cols, rows, "xml")
    out = tmp_path / "r.txt"
    emit_report(cols, rows, "text", str(out))
    assert out.read_text() == text


def test_cli_validate_exit_codes(tmp_path):
    good = tmp_path / "good.site.json"
    good.write_text(serialize_site(sierpinski_model().site))
    assert main(["validate", str(good)]) == 0

    # declared coverings without identity families: GT1 fails on the
    # coarse subsite while the document itself parses fine
    bad = tmp_path / "bad.site.json"
    bad.write_text(json.dumps({
        "points": ["p", "q"],
        "leq": [["p", "q"]],
        "sublattice": [[], ["q"], ["p", "q"]],
        "coverings": {"2": [[1]]},
    }))
    assert main(["validate", str(bad)]) == 1

    broken = tmp_path / "broken.site.json"
    broken.write_text('{"points": [')
    assert main(["validate", str(broken)]) == 2


def test_cli_cohomology_and_verify(capsys):
    assert main(["cohomology", "--space", "circle"]) == 0
    out = capsys.readouterr().out
    assert "cech agrees" in out
    assert main(["verify", "--law", "gt-axioms", "--trials", "5"]) == 0


def test_cli_verify_json_is_deterministic(capsys):
    argv = ["verify", "--law", "sheafification", "--trials", "3", "--format", "json"]
    assert main(argv) == 0
    first = capsys.readouterr().out
    assert main(argv) == 0
    second = capsys.readouterr().out
    assert first == second
    payload = json.loads(first)
    assert payload["rows"][0]["law"] == "sheafification"


def test_cli_rho_and_shriek_and_dual_and_lct():
    assert main(["rho", "direct", "--variant", "circle-basis"]) == 0
    assert main(["shriek", "--space", "half-open-interval"]) == 0
    assert main(["dual", "--space", "circle"]) == 0
    assert main(["lct", "--space", "interval"]) == 0


def test_cli_report_writes_delimited_output_and_figures(tmp_path, capsys):
    assert main(["report", "--out", str(tmp_path), "--trials", "2"]) == 0
    files = os.listdir(tmp_path)
    assert "report.txt" in files
    assert any(f.endswith(".png") for f in files)


def test_cli_bad_field_is_input_error():
    assert main(["cohomology", "--space", "circle", "--field", "fp:9"]) == 2
