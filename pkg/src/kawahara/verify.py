"""Residual checks: symmetries, multipliers, conservation laws, Hamiltonian and
Lagrangian structure.

Every check returns an exact normal form (0 when the identity holds) or a
boolean derived from one.
"""

from __future__ import annotations

from dataclasses import dataclass

import sympy as sp

from .calculus import PDEInstance, _euler_v, is_total_x_divergence, total_x
from .dalg import DiffAlgebra
from .expr import (
    U, V, VT, Expr, ExprError, Int, as_expr, is_zero, jets_of, max_jet_order, normalize, t, u, x,
)


@dataclass(frozen=True)
class SymmetryGenerator:
    """Point symmetry X = xi d/dx + tau d/dt + eta d/du."""

    xi: Expr
    tau: Expr
    eta: Expr

    def __post_init__(self):
        for name in ("xi", "tau", "eta"):
            e = as_expr(getattr(self, name))
            if jets_of(e, None) not in ([], [u]):
                raise ExprError(f"{name} must depend on (x, t, u) only")
            object.__setattr__(self, name, e)

    @classmethod
    def from_text(cls, xi="0", tau="0", eta="0"):
        return cls(as_expr(xi), as_expr(tau), as_expr(eta))


def characteristic(g: SymmetryGenerator, pde: PDEInstance) -> Expr:
    """P = eta - xi u_x - tau u_t with u_t replaced by the equation."""
    return normalize(g.eta - g.xi * U[1] - g.tau * pde.rhs)


def _symmetry_residual(alg: DiffAlgebra, p, pde: PDEInstance):
    d1 = alg.dx(p)
    d3 = alg.dxn(d1, 2)
    d5 = alg.dxn(d3, 2)
    dfp = alg.dx(alg.lift(alg.conv(pde.f)) * alg.lift(p))
    dt = alg.dt(p, pde)
    a, b, c = (alg.conv(k) for k in (pde.a, pde.b, pde.c))
    L = alg.lift
    return L(dt) - L(a) * L(d5) - L(b) * L(d3) - L(c) * L(dfp)


def symmetry_residual(p, pde: PDEInstance) -> Expr:
    """D_t P - a D_x^5 P - b D_x^3 P - c D_x(f P) on solutions."""
    alg = DiffAlgebra()
    return alg.normal(_symmetry_residual(alg, alg.conv(as_expr(p)), pde))


def _adjoint_residual(alg: DiffAlgebra, q, pde: PDEInstance):
    d1 = alg.dx(q)
    d3 = alg.dxn(d1, 2)
    d5 = alg.dxn(d3, 2)
    dt = alg.dt(q, pde)
    a, b, cf = (alg.conv(k) for k in (pde.a, pde.b, pde.c * pde.f))
    L = alg.lift
    return -L(dt) + L(a) * L(d5) + L(b) * L(d3) + L(cf) * L(d1)


def adjoint_residual(q, pde: PDEInstance) -> Expr:
    """-D_t Q + a D_x^5 Q + b D_x^3 Q + c f D_x Q on solutions."""
    alg = DiffAlgebra()
    return alg.normal(_adjoint_residual(alg, alg.conv(as_expr(q)), pde))


def _helmholtz(alg: DiffAlgebra, q) -> list:
    out = []
    for j in range(4):
        ej = alg.euler(q, j)
        dj = alg.partial(q, U[j])
        out.append(alg.lift(dj) - (-1) ** j * alg.lift(ej))
    return out


def helmholtz_residuals(q) -> tuple:
    """(Q_u - E(Q), Q_ux + E1(Q), Q_uxx - E2(Q), Q_uxxx + E3(Q))."""
    alg = DiffAlgebra()
    return tuple(alg.normal(r) for r in _helmholtz(alg, alg.conv(as_expr(q))))


def is_multiplier(q, pde: PDEInstance) -> bool:
    alg = DiffAlgebra()
    qp = alg.conv(as_expr(q))
    if not alg.is_zero(_adjoint_residual(alg, qp, pde)):
        return False
    return all(alg.is_zero(r) for r in _helmholtz(alg, qp))


def divergence_residual(tdens, xflux, pde: PDEInstance) -> Expr:
    """D_t T + D_x X on solutions."""
    alg = DiffAlgebra()
    dt = alg.dt(alg.conv(as_expr(tdens)), pde)
    dx = alg.dx(alg.conv(as_expr(xflux)))
    return alg.normal(alg.lift(dt) + alg.lift(dx))


def density_residual(tdens, q) -> Expr:
    """E(T) - Q; 0 when T is a density for the multiplier Q."""
    alg = DiffAlgebra()
    e = alg.euler(alg.conv(as_expr(tdens)))
    return alg.normal(alg.lift(e) - alg.lift(alg.conv(as_expr(q))))


# ---------------------------------------------------------------------------
# Hamiltonian structure


def hamiltonian_map(q) -> Expr:
    """Symmetry characteristic P = D_x Q of a multiplier Q."""
    return total_x(q)


def is_hamiltonian_form(p) -> bool:
    return is_total_x_divergence(p)


def proportionality_factor(p1, p2, rational: bool = True):
    """Nonzero factor r with p1 = r p2, or None.

    With ``rational`` the factor must be a rational number; otherwise any
    constant (free of t, x and the jets) is accepted.
    """
    p1, p2 = normalize(as_expr(p1)), normalize(as_expr(p2))
    if p1 == 0 or p2 == 0:
        return None
    lead = sp.Add.make_args(p2)[0]
    for term in sp.Add.make_args(p1):
        r = sp.cancel(term / lead)
        if r == 0:
            continue
        if rational and not r.is_Rational:
            continue
        if not rational and (r.has(t, x) or jets_of(r, None)):
            continue
        if is_zero(p1 - r * p2):
            return r
    return None


def noether_factor(q, g: SymmetryGenerator, pde: PDEInstance, rational: bool = True):
    """Factor linking D_x Q to the characteristic of g, or None.

    Both characteristics must be symmetries of ``pde``.
    """
    p_ham = hamiltonian_map(q)
    p_sym = characteristic(g, pde)
    r = proportionality_factor(p_ham, p_sym, rational)
    if r is None:
        return None
    if symmetry_residual(p_ham, pde) != 0 or symmetry_residual(p_sym, pde) != 0:
        return None
    return r


def noether_correspondence_check(q, g: SymmetryGenerator, pde: PDEInstance) -> bool:
    """True iff D_x Q is a nonzero rational multiple of the characteristic of g,
    and both are symmetries."""
    return noether_factor(q, g, pde) is not None


def second_antiderivative(pde: PDEInstance, var: sp.Symbol = u) -> Expr:
    """F with F'' = f: F = u Int(f, u) - Int(u f, u), in the variable ``var``."""
    f = pde.f
    F = u * Int(f, u) - Int(u * f, u)
    if var != u:
        F = F.subs(u, var)
    return F


def hamiltonian_density(pde: PDEInstance, variant: str = "corrected") -> Expr:
    """Density H with u_t = D_x(E(H)).

    ``printed`` keeps the signs of the b and c terms as usually displayed,
    which does not reproduce the equation; see ``hamiltonian_residual``.
    """
    F = second_antiderivative(pde)
    a, b, c = pde.a, pde.b, pde.c
    if variant == "corrected":
        return normalize(sp.Rational(1, 2) * (a * U[2] ** 2 - b * U[1] ** 2) + c * F)
    if variant == "printed":
        return normalize(sp.Rational(1, 2) * (a * U[2] ** 2 + b * U[1] ** 2) - c * F)
    raise ValueError(f"unknown variant {variant!r}")


def hamiltonian_residual(pde: PDEInstance, variant: str = "corrected") -> Expr:
    """D_x E(H) - rhs."""
    alg = DiffAlgebra()
    h = alg.dx(alg.euler(alg.conv(hamiltonian_density(pde, variant))))
    return alg.normal(alg.lift(h) - alg.lift(alg.conv(pde.rhs)))


def lagrangian(pde: PDEInstance, variant: str = "corrected") -> Expr:
    """Potential-form Lagrangian in v with u = v_x."""
    F = second_antiderivative(pde, V[1])
    a, b, c = pde.a, pde.b, pde.c
    kinetic = -VT[0] * V[1]
    if variant == "corrected":
        return normalize(sp.Rational(1, 2) * (kinetic + a * V[3] ** 2 - b * V[2] ** 2) + c * F)
    if variant == "printed":
        return normalize(sp.Rational(1, 2) * (kinetic + a * V[3] ** 2 + b * V[2] ** 2) - c * F)
    raise ValueError(f"unknown variant {variant!r}")


def potential_form(pde: PDEInstance) -> Expr:
    """v_tx - a v_6 - b v_4 - c f(v_x) v_xx."""
    fv = pde.f.subs(u, V[1])
    return normalize(VT[1] - pde.a * V[6] - pde.b * V[4] - pde.c * fv * V[2])


def potential_characteristic(q) -> Expr:
    """Q with u_k replaced by v_(k+1), i.e. Q evaluated on u = v_x."""
    q = as_expr(q)
    return normalize(q.xreplace({U[k]: V[k + 1] for k in range(len(U) - 1)}))


def potential_euler_lagrange(pde: PDEInstance, lagrangian_expr=None, variant: str = "corrected") -> Expr:
    """E_v(L) minus the potential form of the equation; 0 certifies L."""
    L = as_expr(lagrangian_expr) if lagrangian_expr is not None else lagrangian(pde, variant)
    if max_jet_order(L) >= 0:
        raise ExprError("the Lagrangian must be written in v-jets")
    return normalize(_euler_v(L) - potential_form(pde))


__all__ = [
    "SymmetryGenerator", "characteristic", "symmetry_residual", "adjoint_residual",
    "helmholtz_residuals", "is_multiplier", "divergence_residual", "density_residual", "hamiltonian_map",
    "is_hamiltonian_form", "proportionality_factor", "noether_factor",
    "noether_correspondence_check", "second_antiderivative", "hamiltonian_density",
    "hamiltonian_residual", "lagrangian", "potential_form", "potential_characteristic",
    "potential_euler_lagrange",
]
