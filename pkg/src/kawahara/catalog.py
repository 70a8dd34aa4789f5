"""Classified point symmetries and low-order conservation laws as data.

Every case stores printed expression templates for its generator or
(multiplier, density) pair together with the (b, c, f) family and the
nonzero conditions.  Where the displayed formulas fail the residual audit,
a ``corrected`` variant sits next to the ``as-printed`` one; ``instantiate``
picks ``corrected`` when it exists.
"""

from __future__ import annotations

import json
import operator
import re
from dataclasses import dataclass, field

import sympy as sp

from .calculus import NotADivergence, PDEInstance, euler, flux_from_density, total_t_on_solutions
from .expr import REGISTRY, Expr, ExprError, FunctionSymbol, as_expr, normalize, parse, substitute, to_text
from .verify import (
    SymmetryGenerator, adjoint_residual, characteristic, divergence_residual, hamiltonian_map,
    density_residual, helmholtz_residuals, symmetry_residual,
)


class ConstraintViolated(ExprError):
    pass


class UnknownCase(KeyError):
    pass


_OPS = {"!=": operator.ne, ">=": operator.ge, "<=": operator.le, ">": operator.gt, "<": operator.lt}
_CONSTRAINT_RE = re.compile(r"^(.*?)\s*(!=|>=|<=|>|<)\s*(.*)$")


@dataclass(frozen=True)
class Constraint:
    text: str

    def check(self, bindings: dict) -> bool | None:
        """False if violated, True if satisfied, None if still symbolic."""
        m = _CONSTRAINT_RE.match(self.text)
        if not m:
            raise ExprError(f"malformed constraint {self.text!r}")
        lhs, op, rhs = m.groups()
        diff = substitute(parse(lhs) - parse(rhs), bindings)
        if not diff.is_number:
            return None
        return bool(_OPS[op](diff, 0))


# placeholders shared by several templates
_MACROS = {
    "B": "(alpha*t + beta)",
    "Dd": "(alpha*d(t)^delta + beta)",
    "Ddh": "(alpha*dh(t)^delta + beta)",
    "Dg": "(alpha*g(t)^(2/5) + beta)",
    "Dg5": "(alpha*g5(t)^(2/5) + beta)",
    "C": "Int(c(t), t)",
}


def _expand_macros(text: str, **extra) -> str:
    return text.format(**{**_MACROS, **extra})


@dataclass(frozen=True)
class Family:
    b: str = "b(t)"
    c: str = "c(t)"
    f: str = "f(u)"

    def fixed(self) -> dict:
        """Function bindings the family imposes (arbitrary members omitted)."""
        out = {}
        for name, default in (("b", "b(t)"), ("c", "c(t)"), ("f", "f(u)")):
            text = getattr(self, name)
            if text != default:
                out[name] = text
        return out


@dataclass(frozen=True)
class SymmetryVariant:
    xi: str
    tau: str
    eta: str
    family: Family
    note: str = ""


@dataclass(frozen=True)
class ConservationVariant:
    Q: str
    T: str
    family: Family
    note: str = ""


@dataclass(frozen=True)
class SymmetryCase:
    id: str
    variants: dict
    constraints: tuple = ()
    interpretation: str = ""
    kind: str = "symmetry"

    @property
    def default_variant(self) -> str:
        return "corrected" if "corrected" in self.variants else "as-printed"


@dataclass(frozen=True)
class ConservationCase:
    id: str
    variants: dict
    constraints: tuple = ()
    interpretation: str = ""
    integral: str = ""
    kind: str = "conservation"

    @property
    def default_variant(self) -> str:
        return "corrected" if "corrected" in self.variants else "as-printed"


def _sym(xi, tau, eta, family, note="", **macros):
    return SymmetryVariant(_expand_macros(xi, **macros), _expand_macros(tau, **macros),
                           _expand_macros(eta, **macros),
                           Family(*(_expand_macros(getattr(family, k), **macros) for k in "bcf")), note)


def _cons(Q, T, family, note="", **macros):
    return ConservationVariant(_expand_macros(Q, **macros), _expand_macros(T, **macros),
                               Family(*(_expand_macros(getattr(family, k), **macros) for k in "bcf")), note)


_POWER_F = "f1*(u + f2)^f3 + f0"
_LINEAR_F = "f1*u + f0"


def _symmetry_cases() -> list[SymmetryCase]:
    s3_family = Family("{B}^(-2/5)", "gamma*{B}^(delta - 4/5)", _POWER_F)
    s5_eta_printed = "(alpha*beta*delta^2/(gamma^3*f1))*x - (1/5 - delta*beta/{D})*(u + f0/f1)"
    s5_eta_fixed = "(alpha*beta*delta^2/(gamma^3*f1))*x + (1/5 - delta*beta/{D})*(u + f0/f1)"
    s5_xi = "(1/5 - delta + delta*beta/{D})*x"
    s5_family = Family("gamma^2*{d}^(-2/5)*{D}^2", "gamma^3*{d}^(delta - 1)*{D}^3", _LINEAR_F)
    return [
        SymmetryCase("S1", {"as-printed": _sym("1", "0", "0", Family())},
                     interpretation="space translation"),
        SymmetryCase(
            "S2",
            {"as-printed": _sym("alpha*x/5", "{B}", "0",
                                Family("{B}^(-2/5)", "gamma*{B}^(-4/5)", "f(u)"))},
            interpretation="time translation (beta) combined with a scaling (alpha)"),
        SymmetryCase(
            "S3",
            {"as-printed": _sym("alpha*x/5 - delta*gamma*f0*{C}", "{B}", "-(alpha*delta/f3)*(u + f2)",
                                s3_family),
             "corrected": _sym("alpha*x/5 - alpha*delta*f0*{C}", "{B}", "-(alpha*delta/f3)*(u + f2)",
                               s3_family, note="boost coefficient -alpha*delta*f0 instead of -delta*gamma*f0")},
            constraints=(Constraint("f1 != 0"), Constraint("f3 != 0")),
            interpretation="time translation (beta) combined with a scaling (alpha), a shift and "
                           "a Galilean boost with relative speed c(t)"),
        SymmetryCase("S4", {"as-printed": _sym("{C}", "0", "-1/f1", Family("b(t)", "c(t)", _LINEAR_F))},
                     constraints=(Constraint("f1 != 0"),),
                     interpretation="shift combined with a Galilean boost with relative speed c(t)"),
        SymmetryCase(
            "S5",
            {"as-printed": _sym(s5_xi, "d(t)/{D}^5", s5_eta_printed, s5_family, D=_MACROS["Dd"], d="d(t)",
                                note="d' = D^5"),
             "c5-rule": _sym(s5_xi, "dh(t)/{D}^5", s5_eta_printed, s5_family, D=_MACROS["Ddh"],
                                 d="dh(t)", note="d' = D^(1/2) as in the C5 family"),
             "corrected": _sym(s5_xi, "d(t)/{D}^5", s5_eta_fixed, s5_family, D=_MACROS["Dd"], d="d(t)",
                               note="d' = D^5; sign of the (u + f0/f1) term flipped")},
            constraints=(Constraint("f1 != 0"), Constraint("gamma != 0"), Constraint("delta != 0")),
            interpretation="x-dependent shift composed with a time-dependent dilation"),
        SymmetryCase("S6",
                     {"as-printed": _sym("{C}", "0", "-(u + f2)/f1",
                                         Family("b(t)", "c(t)", "f1*ln(u + f2) + f0"))},
                     constraints=(Constraint("f1 != 0"),),
                     interpretation="shift combined with a scaling and a Galilean boost with relative speed c(t)"),
    ]


def _conservation_cases() -> list[ConservationCase]:
    c3_family = Family("{B}^(-2/5)", "gamma*{B}^((f3 - 4)/5)", _POWER_F)
    c5_q = ("25*gamma*f1*({g}*u_xxxx + {g}^(3/5)*u_xx + x*{Dx}*u/5) + alpha*x^2/2 + alpha*f0*x*{C}"
            " + (25/2)*gamma^2*f1*{f0}*{g}^(2/5)*u*f(u) + alpha*f0*{C}^2*f(u)/2")
    c5_t = ("(25/2)*gamma*f1*({g}*u_xx^2 - {g}^(3/5)*u_x^2 + x*{Dx}*u^2/5) + alpha*x^2*u/2"
            " + alpha*f0*x*{C}*u + (25/2)*gamma^2*f1*{f0}*{g}^(2/5)*Int(u*f(u), u)"
            " + alpha*f0*{C}^2*Int(f(u), u)/2")
    c5_family = Family("{g}^(-2/5)", "gamma*{g}^(-3/5)", _LINEAR_F)
    return [
        ConservationCase("C1a", {"as-printed": _cons("1", "u", Family())},
                         interpretation="mass", integral="C1"),
        ConservationCase("C1b", {"as-printed": _cons("u", "u^2/2", Family())},
                         interpretation="L2-norm", integral="C2"),
        ConservationCase(
            "C2",
            {"as-printed": _cons("u_xxxx + alpha*u_xx + beta*Int(f(u), u)",
                                 "u_xx^2/2 - alpha*u_x^2/2 + beta*(u*Int(f(u), u) - Int(u*f(u), u))",
                                 Family("alpha", "beta", "f(u)"))},
            interpretation="gradient energy", integral="C3"),
        ConservationCase(
            "C3",
            {"as-printed": _cons(
                "{B}*u_xxxx + {B}^(3/5)*u_xx + alpha*x*(u + f2)/5"
                " + (gamma/(f3 + 1))*{B}^((f3 + 1)/5)*(u + f2)*f(u)",
                "{B}*u_xx^2/2 - {B}^(3/5)*u_x^2/2 + alpha*x*(u + f2)^2/10"
                " + (gamma/(f3 + 1))*{B}^((f3 + 1)/5)*Int((u + f2)*f(u), u)",
                c3_family)},
            constraints=(Constraint("f1 != 0"), Constraint("f3 != -1")),
            interpretation="dilational Galilean energy", integral="C4"),
        ConservationCase(
            "C4",
            {"as-printed": _cons("{C}*(f1*u + f0) + x", "{C}*(f1*u^2 + 2*f0*u)/2 + x*u",
                                 Family("b(t)", "c(t)", _LINEAR_F))},
            interpretation="Galilean momentum", integral="C5"),
        ConservationCase(
            "C5",
            {"as-printed": _cons(c5_q, c5_t, c5_family, g="g(t)", Dx=_MACROS["Dg"], f0="f0",
                                 note="d' = D^(1/2)"),
             "s5-rule": _cons(c5_q, c5_t, c5_family, g="g5(t)", Dx=_MACROS["Dg5"], f0="f0",
                                 note="d' = D^5 as in the S5 family"),
             "corrected": _cons(c5_q, c5_t, c5_family, g="g(t)", Dx=_MACROS["Dg"] + "^(1/2)", f0="1",
                                note="d' = D^(1/2); x*u coefficient uses D^(1/2); no f0 in the u*f(u) term")},
            interpretation="generalized dilational Galilean energy-momentum", integral="C6"),
    ]


SYMMETRY_CASES = {c.id: c for c in _symmetry_cases()}
CONSERVATION_CASES = {c.id: c for c in _conservation_cases()}

# integrands of the global conserved integrals, keyed by integral name
_INTEGRALS = {
    "C1": "u",
    "C2": "u^2/2",
    "C3": "u_xx^2/2 - alpha*u_x^2/2 + beta*(u*Int(f(u), u) - Int(u*f(u), u))",
}


def get_case(case_id: str):
    if case_id in SYMMETRY_CASES:
        return SYMMETRY_CASES[case_id]
    if case_id in CONSERVATION_CASES:
        return CONSERVATION_CASES[case_id]
    raise UnknownCase(case_id)


def _summary(case) -> dict:
    out = {"id": case.id, "kind": case.kind, "default_variant": case.default_variant,
           "constraints": [c.text for c in case.constraints], "interpretation": case.interpretation,
           "variants": {}}
    for name, var in case.variants.items():
        entry = {"family": {k: getattr(var.family, k) for k in "bcf"}, "note": var.note}
        if case.kind == "symmetry":
            entry.update(xi=var.xi, tau=var.tau, eta=var.eta)
        else:
            entry.update(Q=var.Q, T=var.T)
        out["variants"][name] = entry
    if case.kind == "conservation":
        out["integral"] = case.integral
    return out


def list_cases(kind: str) -> list[dict]:
    """Case summaries in id order; family conditions as written in the templates."""
    if kind == "symmetry":
        cases = SYMMETRY_CASES
    elif kind == "conservation":
        cases = CONSERVATION_CASES
    else:
        raise ValueError(f"unknown kind {kind!r}; expected 'symmetry' or 'conservation'")
    return [_summary(cases[k]) for k in sorted(cases)]


@dataclass
class CaseInstance:
    id: str
    kind: str
    variant: str
    pde: PDEInstance
    bindings: dict = field(default_factory=dict)
    generator: SymmetryGenerator | None = None
    Q: Expr | None = None
    T: Expr | None = None


def _split_bindings(bindings: dict | None):
    params, funcs = {}, {}
    for key, val in (bindings or {}).items():
        name = key.name if isinstance(key, (sp.Symbol, FunctionSymbol)) else str(key)
        if name in REGISTRY.functions:
            funcs[name] = as_expr(val)
        elif name in REGISTRY.parameters:
            params[name] = as_expr(val)
        else:
            raise ExprError(f"unknown binding {name!r}")
    return params, funcs


def instantiate(case_id: str, bindings: dict | None = None, variant: str | None = None) -> CaseInstance:
    """Substitute a case's templates under ``bindings``.

    ``bindings`` maps parameter names to values and, for families where b, c
    or f is arbitrary, function names to expressions.
    """
    case = get_case(case_id)
    variant = variant or case.default_variant
    if variant not in case.variants:
        raise ExprError(f"case {case_id} has no variant {variant!r}; choose from {sorted(case.variants)}")
    var = case.variants[variant]
    params, funcs = _split_bindings(bindings)
    for con in case.constraints:
        if con.check(params) is False:
            raise ConstraintViolated(f"{case_id}: constraint {con.text} violated")
    fixed = var.family.fixed()
    for name in funcs:
        if name in fixed:
            raise ConstraintViolated(f"{case_id}: {name} is fixed by the family to {fixed[name]}")
    fam = {name: substitute(parse(text), params) for name, text in fixed.items()}
    fam.update(funcs)
    pde_parts = {name: fam.get(name, as_expr(f"{name}({'u' if name == 'f' else 't'})")) for name in "bcf"}
    pde = PDEInstance(1, pde_parts["b"], pde_parts["c"], pde_parts["f"],
                      constraints=tuple(c.text for c in case.constraints))

    def inst(text):
        e = parse(text)
        e = substitute(e, fam) if fam else e
        return substitute(e, params) if params else e

    out = CaseInstance(case.id, case.kind, variant, pde, {**params, **funcs})
    if case.kind == "symmetry":
        out.generator = SymmetryGenerator(inst(var.xi), inst(var.tau), inst(var.eta))
    else:
        out.Q, out.T = inst(var.Q), inst(var.T)
    return out


def conserved_integral_formula(integral_id: str, variant: str | None = None) -> Expr:
    """Integrand T of a global conserved integral C1..C6.

    C4..C6 reuse the density of the matching conservation case (its default
    variant unless ``variant`` names another).  For C5,
    ``variant="as-printed"`` returns the displayed integrand, which is
    written with f2, f1 in place of f1, f0.
    """
    if integral_id in _INTEGRALS:
        return parse(_INTEGRALS[integral_id])
    if integral_id == "C5" and variant == "as-printed":
        return parse("Int(c(t), t)*(f2*u^2 + 2*f1*u)/2 + x*u")
    for case in CONSERVATION_CASES.values():
        if case.integral == integral_id:
            name = variant if variant in case.variants else case.default_variant
            return parse(case.variants[name].T)
    raise UnknownCase(integral_id)


# ---------------------------------------------------------------------------
# audit


@dataclass
class Check:
    name: str
    residual: Expr

    @property
    def ok(self) -> bool:
        return self.residual == 0


def audit(inst: CaseInstance, hamiltonian: bool = True) -> list[Check]:
    """Residual checks for an instantiated case; every residual 0 certifies it."""
    pde = inst.pde
    if inst.kind == "symmetry":
        return [Check("symmetry", symmetry_residual(characteristic(inst.generator, pde), pde))]
    checks = [Check("adjoint", adjoint_residual(inst.Q, pde))]
    checks += [Check(f"helmholtz{j}", r) for j, r in enumerate(helmholtz_residuals(inst.Q))]
    checks.append(Check("euler(T)-Q", density_residual(inst.T, inst.Q)))
    try:
        X = flux_from_density(inst.T, pde)
        checks.append(Check("divergence", divergence_residual(inst.T, X, pde)))
    except NotADivergence:
        checks.append(Check("divergence", euler(total_t_on_solutions(inst.T, pde))))
    if hamiltonian:
        checks.append(Check("hamiltonian-symmetry", symmetry_residual(hamiltonian_map(inst.Q), pde)))
    return checks


# ---------------------------------------------------------------------------
# JSON export


def export_catalog_json() -> str:
    """Every case with its templates printed in normal form."""
    def printed(text):
        return to_text(parse(text))

    doc = {"symmetry": [], "conservation": []}
    for kind, cases in (("symmetry", SYMMETRY_CASES), ("conservation", CONSERVATION_CASES)):
        for cid in sorted(cases):
            s = _summary(cases[cid])
            for entry in s["variants"].values():
                for k in ("xi", "tau", "eta", "Q", "T"):
                    if k in entry:
                        entry[k] = printed(entry[k])
                entry["family"] = {k: printed(v) for k, v in entry["family"].items()}
            doc[kind].append(s)
    doc["integrals"] = {k: to_text(conserved_integral_formula(k)) for k in ("C1", "C2", "C3", "C4", "C5", "C6")}
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


def load_catalog_json(text: str) -> dict:
    """Parse an exported catalog back into expressions, keyed by (kind, id, variant)."""
    doc = json.loads(text)
    out = {}
    for kind in ("symmetry", "conservation"):
        for s in doc[kind]:
            for vname, entry in s["variants"].items():
                exprs = {k: parse(entry[k]) for k in ("xi", "tau", "eta", "Q", "T") if k in entry}
                exprs.update({f"family.{k}": parse(v) for k, v in entry["family"].items()})
                out[(kind, s["id"], vname)] = exprs
    return out


def catalog_expressions() -> dict:
    """Same keys as ``load_catalog_json`` built directly from the templates."""
    out = {}
    for kind, cases in (("symmetry", SYMMETRY_CASES), ("conservation", CONSERVATION_CASES)):
        for cid, case in cases.items():
            for vname, var in case.variants.items():
                names = ("xi", "tau", "eta") if kind == "symmetry" else ("Q", "T")
                exprs = {k: parse(getattr(var, k)) for k in names}
                exprs.update({f"family.{k}": parse(getattr(var.family, k)) for k in "bcf"})
                out[(kind, cid, vname)] = exprs
    return out


__all__ = [
    "ConstraintViolated", "UnknownCase", "Constraint", "Family", "SymmetryCase", "ConservationCase",
    "SymmetryVariant", "ConservationVariant", "SYMMETRY_CASES", "CONSERVATION_CASES", "get_case",
    "list_cases", "CaseInstance", "instantiate", "conserved_integral_formula", "Check", "audit",
    "export_catalog_json", "load_catalog_json", "catalog_expressions",
]
