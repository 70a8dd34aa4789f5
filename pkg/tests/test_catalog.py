"""Catalog listing, instantiation, constraints, audits and JSON export."""

import json

import pytest

from kawahara.catalog import (
    ConstraintViolated, UnknownCase, audit, catalog_expressions, conserved_integral_formula,
    export_catalog_json, get_case, instantiate, list_cases, load_catalog_json,
)
from kawahara.expr import normalize, param, parse, u


def test_list_cases():
    assert [c["id"] for c in list_cases("conservation")] == ["C1a", "C1b", "C2", "C3", "C4", "C5"]
    assert [c["id"] for c in list_cases("symmetry")] == ["S1", "S2", "S3", "S4", "S5", "S6"]
    with pytest.raises(ValueError):
        list_cases("gauge")


def test_instantiate_c1b_generic():
    inst = instantiate("C1b")
    assert inst.Q == u
    assert inst.T == parse("u^2/2")


def test_instantiate_s2_time_translation():
    inst = instantiate("S2", {"alpha": 0, "beta": 1})
    assert inst.generator.tau == 1 and inst.generator.xi == 0
    assert inst.pde.b == 1 and inst.pde.c == param("gamma")


def test_constraint_violation_names_condition():
    with pytest.raises(ConstraintViolated, match="f3 != 0"):
        instantiate("S3", {"f3": 0})


def test_unknown_case_and_variant():
    with pytest.raises(UnknownCase):
        get_case("S9")
    with pytest.raises(ValueError):
        instantiate("S1", variant="corrected")


def test_integral_formulas():
    assert conserved_integral_formula("C1") == u
    assert conserved_integral_formula("C2") == parse("u^2/2")
    want = parse("u_xx^2/2 - alpha*u_x^2/2 + beta*(u*Int(f(u), u) - Int(u*f(u), u))")
    assert normalize(conserved_integral_formula("C3") - want) == 0
    with pytest.raises(UnknownCase):
        conserved_integral_formula("C9")


@pytest.mark.parametrize("case_id", ["S1", "S2", "S4", "S6"])
def test_symmetry_cases_pass(case_id):
    assert all(ch.ok for ch in audit(instantiate(case_id)))


@pytest.mark.parametrize("case_id", ["S3", "S5"])
def test_printed_symmetry_failures_are_reported(case_id):
    printed = audit(instantiate(case_id, variant="as-printed"))
    assert not all(ch.ok for ch in printed)
    assert all(ch.ok for ch in audit(instantiate(case_id, variant="corrected")))


def test_s3_printed_residual_is_the_boost_term():
    (check,) = audit(instantiate("S3", variant="as-printed"))
    assert check.residual.has(param("f0")) and check.residual.has(param("delta"))


@pytest.mark.parametrize("case_id", ["C1a", "C1b", "C2", "C3", "C4"])
def test_conservation_cases_pass(case_id):
    checks = audit(instantiate(case_id))
    assert [ch.name for ch in checks if not ch.ok] == []


def test_c5_variants():
    assert all(ch.ok for ch in audit(instantiate("C5")))
    for variant in ("as-printed", "s5-rule"):
        failed = [ch.name for ch in audit(instantiate("C5", variant=variant)) if not ch.ok]
        assert "adjoint" in failed


def test_specialized_binding_stays_in_family():
    inst = instantiate("C3", {"f3": 2, "f2": 0, "f1": 1, "f0": 0, "gamma": 1, "alpha": 1, "beta": 1})
    assert all(ch.ok for ch in audit(inst, hamiltonian=False))


def test_catalog_json_round_trip():
    text = export_catalog_json()
    doc = json.loads(text)
    assert list(doc) == ["symmetry", "conservation", "integrals"]
    assert load_catalog_json(text) == catalog_expressions()
    assert export_catalog_json() == text
