"""Total derivatives, Euler operators, divergence inversion and the homotopy."""

import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from kawahara.calculus import (
    NotADivergence, PDEInstance, SingularHomotopy, euler, flux_from_density, higher_euler,
    homotopy_density, invert_total_x, is_total_x_divergence, total_t_on_solutions, total_x,
)
from kawahara.expr import U, fn, normalize, parse, substitute, u, x
from kawahara.verify import divergence_residual

PDE = PDEInstance()
b, c, f = fn("b").applied, fn("c").applied, fn("f").applied


def same(a, e):
    return normalize(parse(a) - parse(e) if isinstance(a, str) else a - parse(e)) == 0


def test_total_x_examples():
    assert total_x(u) == U[1]
    assert same(total_x(parse("x*u")), "u + x*u_x")
    assert same(total_x(parse("u_x^2/2")), "u_x*u_xx")


def test_total_t_examples():
    assert same(total_t_on_solutions(u, PDE), "u_xxxxx + b(t)*u_xxx + c(t)*f(u)*u_x")
    assert same(total_t_on_solutions(parse("u^2/2"), PDE), "u*(u_xxxxx + b(t)*u_xxx + c(t)*f(u)*u_x)")
    assert total_t_on_solutions(x, PDE) == 0


def test_euler_examples():
    assert euler(parse("u^2/2")) == u
    assert euler(U[1]) == 0
    assert euler(parse("u_xx^2/2")) == U[4]


def test_higher_euler_examples():
    assert higher_euler(parse("u_x^2/2"), 1) == U[1]
    assert higher_euler(parse("u_xx^2/2"), 2) == U[2]
    assert higher_euler(u, 1) == 0
    e = parse("u*u_x^2 + u_xx*x")
    assert higher_euler(e, 0) == euler(e)


def test_higher_euler_against_hand_definition():
    # E1(u u_xx) = d/du_x - 2 D_x d/du_xx = 0 - 2 u_x
    assert same(higher_euler(parse("u*u_xx"), 1), "-2*u_x")


def test_divergence_detection():
    assert is_total_x_divergence(parse("u_x*u_xx"))
    assert not is_total_x_divergence(parse("u*u_x^2"))
    assert same(euler(parse("u*u_x^2")), "-u_x^2 - 2*u*u_xx")
    assert is_total_x_divergence(1)


def test_invert_total_x_examples():
    assert invert_total_x(U[1]) == u
    assert same(invert_total_x(parse("u_x*u_xx")), "u_x^2/2")
    rhs = parse("u_xxxxx + b(t)*u_xxx + c(t)*f(u)*u_x")
    theta = invert_total_x(rhs)
    assert same(theta, "u_xxxx + b(t)*u_xx + c(t)*Int(f(u), u)")
    assert normalize(total_x(theta) - rhs) == 0


def test_invert_total_x_rejects_non_divergence():
    with pytest.raises(NotADivergence):
        invert_total_x(parse("u*u_x^2"))


def test_flux_examples():
    X = flux_from_density(u, PDE)
    assert same(X, "-(u_xxxx + b(t)*u_xx + c(t)*Int(f(u), u))")
    X2 = flux_from_density(parse("u^2/2"), PDE)
    want = "-(u*u_xxxx - u_x*u_xxx + u_xx^2/2 + b(t)*(u*u_xx - u_x^2/2) + c(t)*Int(u*f(u), u))"
    assert same(X2, want)
    assert divergence_residual(parse("u^2/2"), X2, PDE) == 0
    X3 = flux_from_density(U[1], PDE)
    assert divergence_residual(U[1], X3, PDE) == 0


def test_homotopy_examples():
    assert homotopy_density(1) == u
    assert same(homotopy_density(u), "u^2/2")
    q = parse("u_xxxx + alpha*u_xx + beta*(f1*u^2/2 + f0*u)")
    T = homotopy_density(q)
    assert normalize(euler(T) - q) == 0
    ref = parse("u_xx^2/2 - alpha*u_x^2/2 + beta*(f1*u^3/6 + f0*u^2/2)")
    assert normalize(euler(T) - euler(ref)) == 0


def test_homotopy_singular_base():
    with pytest.raises(SingularHomotopy):
        homotopy_density(parse("ln(u + f2)"), base=parse("-f2"))


def test_homotopy_shifted_base_for_log():
    q = parse("ln(u + f2)")
    T = homotopy_density(q, base=parse("1 - f2"))
    assert normalize(euler(T) - q) == 0


def test_commutation_on_solutions():
    pde = PDEInstance.from_text(b="t", c="1", f="u^2")
    e = parse("u*u_x + x*u")
    lhs = total_t_on_solutions(total_x(e), pde)
    rhs = total_x(total_t_on_solutions(e, pde))
    assert normalize(lhs - rhs) == 0


_jets = st.sampled_from([u, U[1], U[2], U[3], x])
_polys = st.lists(st.tuples(st.integers(-4, 4), st.lists(_jets, max_size=3)), min_size=1, max_size=4).map(
    lambda ms: sp.Add(*[k * sp.Mul(*vs) for k, vs in ms]))


@settings(max_examples=40, deadline=None)
@given(_polys)
def test_euler_annihilates_total_derivatives(e):
    assert euler(total_x(e)) == 0


@settings(max_examples=25, deadline=None)
@given(_polys)
def test_inversion_round_trip(e):
    d = total_x(e)
    assert normalize(total_x(invert_total_x(d)) - d) == 0


def test_specialize_substitutes_family():
    pde = PDE.specialize({"f": "f1*u + f0"})
    assert same(pde.f, "f1*u + f0")
    assert substitute(pde.rhs, {"f1": 0, "f0": 0}) == normalize(U[5] + b * U[3])
