"""Surface-language parser and printer."""

from __future__ import annotations

import pytest

from pmasafety.corpus import generate_model_text
from pmasafety.dsl import format_pmas, parse_formula, parse_pmas
from pmasafety.model import ModelError
from pmasafety.models import fixture_names, fixture_text


@pytest.mark.parametrize("name", fixture_names())
def test_fixture_round_trip(name):
    p = parse_pmas(fixture_text(name), name)
    printed = format_pmas(p)
    p2 = parse_pmas(printed, name)
    assert format_pmas(p2) == printed


@pytest.mark.parametrize("seed", range(10))
def test_corpus_round_trip(seed):
    p = parse_pmas(generate_model_text(seed), f"corpus{seed}")
    printed = format_pmas(p)
    assert format_pmas(parse_pmas(printed, p.name)) == printed


def test_cannon_structure():
    p = parse_pmas(fixture_text("cannon"), "cannon")
    assert [t.name for t in p.templates] == ["Att"]
    assert p.env.name == "Cannon"
    att = p.templates[0]
    assert {a.name for a in att.actions} == {
        "gotoA", "gotoB", "goTargetA", "goTargetB", "blastA", "blastB",
    }
    assert att.var_sort("loc") == "Loc"
    assert att.var_init("destroyed") == "no"
    assert p.alternation == (("Cannon",), ("Att",))
    assert [r.name for r in p.relations] == ["Snow"]


def test_trains_structure():
    p = parse_pmas(fixture_text("trains"), "trains")
    assert {t.name for t in p.templates} == {"PTrain", "NTrain"}
    assert p.env.name == "Controller"
    ind = [a for t in p.templates for a in t.actions if a.kind == "individual"]
    assert ind, "trains fixture uses individual synchronisation"


def test_syntax_error_has_position():
    with pytest.raises(ModelError) as ei:
        parse_pmas("sort Loc {", "bad")
    assert any(d.line >= 1 for d in ei.value.diagnostics)


def test_unknown_constant_rejected():
    src = fixture_text("cannon").replace("loc := A", "loc := Z")
    with pytest.raises(ModelError) as ei:
        parse_pmas(src, "bad")
    assert "Z" in str(ei.value)


def test_validation_can_be_deferred():
    src = fixture_text("cannon").replace("loc := A", "loc := Z")
    p = parse_pmas(src, "bad", validate=False)
    assert p.name == "bad"


def test_parse_formula():
    f = parse_formula("loc[j] = target and not Snow(A, B)")
    assert f is not None
    with pytest.raises(ModelError):
        parse_formula("loc[j] = target extra")
    with pytest.raises(ModelError):
        parse_formula("")
