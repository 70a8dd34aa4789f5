"""Determining-system generation, splitting soundness and serialization."""

import json

import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from kawahara.calculus import PDEInstance
from kawahara.catalog import get_case, instantiate
from kawahara.determining import (
    DeterminingSystem, export_system, generate_multiplier_system, generate_symmetry_system, load_system,
)
from kawahara.expr import U, fn, parse, t, u, x
from kawahara.verify import SymmetryGenerator, characteristic, symmetry_residual

KDV5 = PDEInstance.from_text("1", "1", "1", "u")


@pytest.fixture(scope="module")
def generic_symmetry():
    return generate_symmetry_system(PDEInstance())


@pytest.fixture(scope="module")
def kdv5_symmetry():
    return generate_symmetry_system(KDV5)


@pytest.fixture(scope="module")
def generic_multiplier():
    return generate_multiplier_system(PDEInstance())


def _bind(g):
    return {"xi": g.xi, "tau": g.tau, "eta": g.eta}


def test_tau_depends_on_t_only(generic_symmetry):
    tau = fn("tau").applied
    exprs = {eq.expr for eq in generic_symmetry.equations}
    assert any(e.has(sp.Derivative(tau, u)) and len(sp.Add.make_args(e)) == 1 for e in exprs)
    assert any(e.has(sp.Derivative(tau, x)) and len(sp.Add.make_args(e)) == 1 for e in exprs)


def test_equations_free_of_split_jets(generic_symmetry):
    for eq in generic_symmetry.equations:
        assert not any(eq.expr.has(U[k]) for k in range(1, 11))


def test_space_translation_annihilates(generic_symmetry):
    assert generic_symmetry.annihilated_by({"xi": 1, "tau": 0, "eta": 0})
    assert not generic_symmetry.annihilated_by({"xi": 0, "tau": 0, "eta": u})


def test_s2_annihilates_its_system():
    inst = instantiate("S2")
    assert generate_symmetry_system(inst.pde).annihilated_by(_bind(inst.generator))


def test_multiplier_groups(generic_multiplier):
    groups = {eq.group for eq in generic_multiplier.equations}
    assert groups == {"adjoint", "helmholtz0", "helmholtz1", "helmholtz2", "helmholtz3"}


def test_multiplier_examples(generic_multiplier):
    assert generic_multiplier.annihilated_by({"Q": "u"})
    assert 2 in generic_multiplier.residuals({"Q": "u_x"})
    inst = instantiate("C3")
    assert generate_multiplier_system(inst.pde).annihilated_by({"Q": inst.Q})


def test_catalog_default_variants_annihilate():
    for cid in ("S1", "S3", "S4", "S5", "S6"):
        inst = instantiate(cid, variant=get_case(cid).default_variant)
        assert generate_symmetry_system(inst.pde).annihilated_by(_bind(inst.generator)), cid


_mons = [sp.S.One, x, t, u, x * t, u * t, x * u, u**2, x**2, t**2]
_poly = st.lists(st.tuples(st.integers(-3, 3), st.sampled_from(_mons)), min_size=0, max_size=3).map(
    lambda ts: sp.Add(*[k * m for k, m in ts]))


@settings(max_examples=20, deadline=None)
@given(st.integers(-4, 4), st.integers(-4, 4), st.integers(-4, 4), st.integers(0, 3), _poly)
def test_split_iff_unsplit(kdv5_symmetry, k1, k2, k3, which, p):
    comps = [k1 + k3 * t, sp.Integer(k2), sp.Integer(-k3)]
    if which < 3:
        comps[which] += p
    g = SymmetryGenerator(*comps)
    full = symmetry_residual(characteristic(g, KDV5), KDV5) == 0
    assert kdv5_symmetry.annihilated_by(_bind(g)) == full


def test_export_json_schema_and_order(generic_symmetry):
    doc = json.loads(export_system(generic_symmetry))
    assert list(doc) == ["unknowns", "equations", "monomials"]
    assert doc["monomials"] == sorted(doc["monomials"])
    assert len(doc["equations"]) == len(generic_symmetry)


def test_export_empty_system():
    doc = json.loads(export_system(DeterminingSystem([])))
    assert doc["equations"] == [] and doc["monomials"] == []


@pytest.mark.parametrize("fmt", ["json", "text"])
def test_round_trip(generic_symmetry, fmt):
    back = load_system(export_system(generic_symmetry, fmt))
    assert [eq.key for eq in back.equations] == [eq.key for eq in generic_symmetry.equations]
    assert [eq.expr for eq in back.equations] == [eq.expr for eq in generic_symmetry.equations]
    assert export_system(back, fmt) == export_system(generic_symmetry, fmt)


def test_round_trip_multiplier(generic_multiplier):
    text = export_system(generic_multiplier)
    assert export_system(load_system(text)) == text


def test_find_by_monomial(kdv5_symmetry):
    eq = kdv5_symmetry.equations[0]
    assert kdv5_symmetry.find(eq.group, eq.monomial) is eq
    assert kdv5_symmetry.find("symmetry", parse("u_x^9*u_xx^9")) is None
