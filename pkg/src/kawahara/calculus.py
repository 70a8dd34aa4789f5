"""Total derivatives, Euler operators, divergence inversion and homotopy densities.

All operators act on the jet space of ``u`` (and of the potential ``v`` where
noted).  Time derivatives are taken on solutions of

    u_t = a(t) u_xxxxx + b(t) u_xxx + c(t) f(u) u_x,

so that ``u_t`` and its x-derivatives never appear.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import sympy as sp

from .dalg import DiffAlgebra
from .expr import (
    JET_MAX, U, V, VT, Expr, ExprError, Int, JetOrderOverflow, _expand, as_expr, fn,
    jet_info, jets_of, max_jet_order, normalize, substitute, t, to_text, u, x,
)


class NotADivergence(ExprError):
    pass


class NonPolynomialResidue(ExprError):
    pass


class SingularHomotopy(ExprError):
    pass


class NonIntegrable(ExprError):
    pass


@dataclass
class PDEInstance:
    """Coefficients of one member of the generalized Kawahara family."""

    a: Expr = sp.S.One
    b: Expr = field(default_factory=lambda: fn("b").applied)
    c: Expr = field(default_factory=lambda: fn("c").applied)
    f: Expr = field(default_factory=lambda: fn("f").applied)
    constraints: tuple = ()

    def __post_init__(self):
        self.a, self.b, self.c, self.f = (normalize(as_expr(e)) for e in (self.a, self.b, self.c, self.f))
        for name, coeff in (("a", self.a), ("b", self.b), ("c", self.c)):
            if jets_of(coeff, None) or coeff.has(x):
                raise ExprError(f"coefficient {name} must depend on t only, got {to_text(coeff)}")
        if jets_of(self.f, None) not in ([], [u]) or self.f.has(x, t):
            raise ExprError(f"f must depend on u only, got {to_text(self.f)}")

    @classmethod
    def from_text(cls, a="1", b="b(t)", c="c(t)", f="f(u)", constraints=()):
        return cls(as_expr(a), as_expr(b), as_expr(c), as_expr(f), tuple(constraints))

    @property
    def rhs(self) -> Expr:
        return _expand(self.a * U[5] + self.b * U[3] + self.c * self.f * U[1])

    @property
    def classification_mode(self) -> bool:
        return self.a == 1

    def specialize(self, bindings) -> "PDEInstance":
        return PDEInstance(*(substitute(e, bindings) for e in (self.a, self.b, self.c, self.f)),
                           constraints=self.constraints)

    def describe(self) -> dict:
        return {k: to_text(getattr(self, k)) for k in "abcf"}


# ---------------------------------------------------------------------------
# total derivatives
#
# u-jet expressions go through the differential algebra (dalg); the generic
# sympy versions below are used for the potential v-jets only.


def _dx(e: Expr) -> Expr:
    r = sp.diff(e, x)
    for s in jets_of(e, None):
        info = jet_info(s)
        if info.order >= JET_MAX:
            raise JetOrderOverflow(f"D_x of {s} exceeds jet order {JET_MAX}")
        d = sp.diff(e, s)
        if d != 0:
            r += info.next().symbol * d
    return _expand(r)


def _dt_free(e: Expr) -> Expr:
    # D_t on the potential jet space: v_{x^k} -> v_{t x^k}
    r = sp.diff(e, t)
    for s in jets_of(e, "v"):
        info = jet_info(s)
        d = sp.diff(e, s)
        if d == 0:
            continue
        if info.time:
            raise JetOrderOverflow("second t-derivatives of v are not supported")
        r += sp.Symbol("v_t" + "x" * info.order) * d
    return _expand(r)


def _euler_v(e: Expr) -> Expr:
    """E_v including the v_t-jets: sum (-D_x)^k d/dv_k - D_t sum (-D_x)^k d/dv_tk."""
    def horner(sym_of, top):
        acc = sp.S.Zero
        for k in range(top, -1, -1):
            pk = sp.diff(e, sym_of(k))
            acc = _expand(pk - _dx(acc)) if acc != 0 else _expand(pk)
        return acc

    jets = jets_of(e, "v")
    top = max((jet_info(s).order for s in jets if not jet_info(s).time), default=-1)
    ttop = max((jet_info(s).order for s in jets if jet_info(s).time), default=-1)
    out = horner(lambda k: V[k], top)
    if ttop >= 0:
        out = _expand(out - _dt_free(horner(lambda k: VT[k], ttop)))
    return out


def _has_v(e: Expr) -> bool:
    return bool(jets_of(e, "v"))


def total_x(e, times: int = 1) -> Expr:
    """D_x applied ``times`` times; exact."""
    e = as_expr(e)
    if _has_v(e):
        for _ in range(times):
            e = _dx(e)
        return normalize(e)
    alg = DiffAlgebra()
    return alg.normal(alg.dxn(alg.conv(e), times))


def total_t_on_solutions(e, pde: PDEInstance) -> Expr:
    """D_t with u_t and its x-derivatives replaced through the equation."""
    e = as_expr(e)
    if _has_v(e):
        raise ExprError("total_t_on_solutions needs an expression free of v-jets")
    alg = DiffAlgebra()
    return alg.normal(alg.dt(alg.conv(e), pde))


# ---------------------------------------------------------------------------
# Euler operators


def euler(e, dependent: str = "u") -> Expr:
    """Variational derivative sum_k (-D_x)^k de/du_k (``dependent="v"``: E_v)."""
    e = as_expr(e)
    if dependent == "v":
        return normalize(_euler_v(e))
    if _has_v(e):
        raise ExprError("euler with respect to u needs an expression free of v-jets")
    alg = DiffAlgebra()
    return alg.normal(alg.euler(alg.conv(e)))


def higher_euler(e, j: int) -> Expr:
    """Higher Euler operator E^(j) = sum_{k>=j} C(k,j) (-D_x)^(k-j) de/du_k."""
    if j < 0 or j > 4:
        raise ValueError("higher Euler operators are provided for 0 <= j <= 4")
    alg = DiffAlgebra()
    return alg.normal(alg.euler(alg.conv(as_expr(e)), j))


def is_total_x_divergence(e) -> bool:
    e = as_expr(e)
    if _has_v(e):
        raise ExprError("is_total_x_divergence works on u-jets only")
    alg = DiffAlgebra()
    return alg.is_zero(alg.euler(alg.conv(e)))


# ---------------------------------------------------------------------------
# divergence inversion


def _drop_dependence(alg: DiffAlgebra, p, sym: sp.Symbol):
    """Remove the terms of p that involve ``sym`` (directly or inside an atom)."""
    p = alg.lift(p)
    hit = [i for i, e in enumerate(alg.exprs) if e == sym or (alg.kinds[i] != "base" and sym in e.free_symbols)]
    keep = {mon: c for mon, c in p.terms() if not any(mon[i] for i in hit)}
    return alg.ring.from_dict(keep) if keep else alg.ring.zero


def _invert(alg: DiffAlgebra, p) -> Expr:
    if not alg.is_zero(alg.euler(p)):
        raise NotADivergence(f"{to_text(alg.normal(p))} is not a total x-derivative")
    theta = sp.S.Zero
    rem = alg.prune(p)
    while rem:
        n = alg.max_order(rem)
        if n <= 0:
            break
        g = alg.partial(rem, U[n])
        if not alg.is_zero(alg.partial(g, U[n])):
            raise NotADivergence(f"nonlinear in {U[n]}")
        piece = Int(alg.to_expr(g), U[n - 1])
        theta += piece
        dpiece = alg.dx(alg.conv(piece))
        rem = alg.prune(alg.lift(rem) - alg.lift(dpiece))
        if alg.max_order(rem) >= n:
            if not alg.is_zero(alg.partial(rem, U[n])):
                raise NotADivergence(f"could not reduce the order of {to_text(alg.normal(rem))}")
            rem = _drop_dependence(alg, rem, U[n])
    if rem and not alg.is_zero(rem):
        if not alg.is_zero(alg.partial(rem, u)):
            raise NotADivergence(f"residue {to_text(alg.normal(rem))} depends on u")
        res = alg.normal(_drop_dependence(alg, rem, u))
        if res != 0:
            if not res.is_polynomial(x):
                raise NonPolynomialResidue(f"residue {to_text(res)} is not polynomial in x")
            poly = sp.Poly(res, x)
            theta += sum(coeff * x ** (m[0] + 1) / (m[0] + 1) for m, coeff in poly.terms())
    return alg.normal(alg.conv(theta))


def invert_total_x(e) -> Expr:
    """Return Theta with D_x Theta = e.

    Integrates by parts on the highest jet until only a (t, x) residue is
    left, which is integrated as a polynomial in x with zero constant.
    """
    e = as_expr(e)
    if _has_v(e):
        raise ExprError("invert_total_x works on u-jets only")
    alg = DiffAlgebra()
    return _invert(alg, alg.conv(e))


# ---------------------------------------------------------------------------
# multiplier -> density


_LAM = sp.Symbol("lambda_", positive=True)


def _log_moment(n: int, arg: Expr) -> Expr:
    """Integral over [0, 1] of lam^n ln(A + B lam) for arg = A + B lam."""
    A, B = arg.subs(_LAM, 0), sp.diff(arg, _LAM)
    if B.has(_LAM) or B == 0:
        raise NonIntegrable(f"logarithm argument {arg} is not linear in lambda")
    j = (sp.log(A + B) - sp.log(A)) / B
    for m in range(1, n + 2):
        j = (sp.Rational(1, m) - A * j) / B
    r = sp.log(A + B) / (n + 1) - B / (n + 1) * j
    return sp.collect(sp.expand(r), [sp.log(A + B), sp.log(A)], func=sp.cancel)


def _lambda_integral(integrand: Expr) -> Expr:
    def split_base(n):
        return sp.factor_terms(n.base) ** n.exp

    integrand = integrand.replace(
        lambda n: n.is_Pow and n.base.is_Add and n.base.has(_LAM) and not n.exp.is_Integer, split_base)
    integrand = sp.expand(integrand, power_base=True, power_exp=True, mul=True, multinomial=True, log=False)
    total = sp.S.Zero
    for term in sp.Add.make_args(integrand):
        coeff, dep = term.as_independent(_LAM, as_Add=False)
        if dep == 1:
            total += coeff
            continue
        if dep == _LAM:
            p = sp.S.One
        elif dep.is_Pow and dep.base == _LAM and not dep.exp.has(_LAM):
            p = dep.exp
        elif dep.has(sp.log):
            total += coeff * _log_term(dep)
            continue
        else:
            raise NonIntegrable(f"lambda-dependence {dep} outside the supported class")
        if p == -1 or (p.is_number and p < -1):
            raise SingularHomotopy(f"integrand ~ lambda^{p} at the base point")
        total += coeff / (p + 1)
    return total


def _log_term(dep: Expr) -> Expr:
    logs = [a for a in sp.Mul.make_args(dep) if isinstance(a, sp.log)]
    rest = sp.Mul(*[a for a in sp.Mul.make_args(dep) if not isinstance(a, sp.log)])
    n = 0 if rest == 1 else 1 if rest == _LAM else rest.exp if rest.is_Pow and rest.base == _LAM else None
    if len(logs) != 1 or n is None or not (n.is_Integer and n >= 0 if not isinstance(n, int) else True):
        raise NonIntegrable(f"lambda-dependence {dep} outside the supported class")
    return _log_moment(int(n), sp.expand(logs[0].args[0]))


def homotopy_density(q, base=0, pde: PDEInstance | None = None) -> Expr:
    """Density T with euler(T) = q along the segment u(lam) = base + lam (u - base).

    ``base`` is a function of (t, x).  ``pde`` is accepted for interface
    symmetry; the construction only uses q.
    """
    q = normalize(as_expr(q))
    base = as_expr(base)
    if jets_of(base, None):
        raise ExprError("homotopy base point must be a function of (t, x)")
    top = max(max_jet_order(q), 0)
    base_jets = [base]
    for _ in range(top):
        base_jets.append(sp.diff(base_jets[-1], x))
    along = {U[k]: base_jets[k] + _LAM * (U[k] - base_jets[k]) for k in range(top + 1)}
    try:
        tmp = {s: sp.Dummy(s.name) for s in along}
        q_lam = q.subs(tmp).subs({tmp[s]: val for s, val in along.items()})
    except ExprError as err:
        raise NonIntegrable(f"multiplier contains an unevaluated antiderivative: {err}") from err
    at_base = q_lam.subs(_LAM, 0)
    if at_base.has(sp.zoo, sp.nan, sp.oo, -sp.oo):
        raise SingularHomotopy(f"{to_text(q)} is singular at the base point u = {to_text(base)}")
    if any(isinstance(a, sp.Function) and not isinstance(a, Int) and a.has(_LAM)
           and type(a) not in (sp.log,) and not a.is_Pow for a in q_lam.atoms(sp.Function)):
        raise NonIntegrable("multiplier depends on an unspecified function of u")
    T = _lambda_integral((u - base) * q_lam)
    return normalize(T)


def flux_from_density(T, pde: PDEInstance) -> Expr:
    """Flux X with D_t T + D_x X = 0 on solutions."""
    alg = DiffAlgebra()
    return _invert(alg, -alg.dt(alg.conv(as_expr(T)), pde))


__all__ = [
    "PDEInstance", "total_x", "total_t_on_solutions", "euler", "higher_euler",
    "is_total_x_divergence", "invert_total_x", "homotopy_density", "flux_from_density",
    "NotADivergence", "NonPolynomialResidue", "SingularHomotopy", "NonIntegrable",
]
