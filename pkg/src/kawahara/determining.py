"""Overdetermined determining systems for point symmetries and low-order multipliers.

The symmetry condition (and the multiplier conditions) are expanded with the
unknowns kept opaque, then split with respect to monomials in the jets that
the unknowns do not depend on.  Each coefficient is one equation.  Solving the
systems is left to the user; ``DeterminingSystem.residuals`` checks a
candidate solution.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import sympy as sp

from .calculus import PDEInstance
from .dalg import DiffAlgebra
from .expr import (
    REGISTRY, U, Expr, _expand, ExprError, FunctionSymbol, as_expr, fn, jet_info, parse, substitute, to_text,
)
from .verify import _adjoint_residual, _helmholtz, _symmetry_residual

SYMMETRY_SPLIT = range(1, 11)
MULTIPLIER_SPLIT = range(5, 13)


@dataclass
class Equation:
    group: str
    monomial: Expr
    expr: Expr

    @property
    def key(self) -> str:
        return f"{self.group}:{to_text(self.monomial)}"


@dataclass
class DeterminingSystem:
    unknowns: list[FunctionSymbol]
    equations: list[Equation] = field(default_factory=list)

    @property
    def split_basis(self) -> list[Expr]:
        return [eq.monomial for eq in self.equations]

    def __len__(self) -> int:
        return len(self.equations)

    def find(self, group: str, monomial) -> Equation | None:
        m = as_expr(monomial)
        return next((eq for eq in self.equations if eq.group == group and eq.monomial == m), None)

    def residuals(self, bindings: dict) -> list[Expr]:
        """Each equation with the unknowns (and any parameters) bound, in normal form."""
        alg = DiffAlgebra()
        out = []
        for eq in self.equations:
            e = substitute(eq.expr, bindings, normal=False)
            out.append(alg.normal(alg.conv(e)))
        return out

    def annihilated_by(self, bindings: dict) -> bool:
        alg = DiffAlgebra()
        return all(alg.is_zero(alg.conv(substitute(eq.expr, bindings, normal=False))) for eq in self.equations)


def _split(alg: DiffAlgebra, p, orders: range, group: str) -> list[Equation]:
    """Coefficients of ``p`` with respect to monomials in the jets of the given orders."""
    p = alg.lift(p)
    idx = [i for i, e in enumerate(alg.exprs)
           if alg.kinds[i] == "base" and jet_info(e) is not None and jet_info(e).order in orders]
    split_syms = {alg.exprs[i] for i in idx}
    for i in alg._active(p):
        if alg.kinds[i] != "base" and alg.exprs[i].free_symbols & split_syms:
            raise ExprError(f"cannot split: {alg.exprs[i]} depends on a splitting jet")
    groups: dict = {}
    for mon, c in p.terms():
        key = tuple(mon[i] for i in idx)
        rest = list(mon)
        for i in idx:
            rest[i] = 0
        groups.setdefault(key, {})[tuple(rest)] = c
    ring = alg.ring  # the zero test below may grow alg.ring
    coeffs = [(sp.Mul(*[alg.exprs[i] ** k for i, k in zip(idx, key)]), ring.from_dict(terms))
              for key, terms in groups.items()]
    out = []
    for monomial, coeff in coeffs:
        if alg.is_zero(coeff):
            continue
        out.append(Equation(group, monomial, _expand(alg.to_expr(coeff))))
    return out


def _sorted(eqs: list[Equation]) -> list[Equation]:
    return sorted(eqs, key=lambda eq: eq.key)


def symmetry_unknowns() -> list[FunctionSymbol]:
    return [fn("xi"), fn("tau"), fn("eta")]


def generate_symmetry_system(pde: PDEInstance) -> DeterminingSystem:
    """Split the symmetry condition for P = eta - xi u_x - tau rhs by monomials in u_1..u_10."""
    xi, tau, eta = (f.applied for f in symmetry_unknowns())
    alg = DiffAlgebra()
    p = alg.conv(eta - xi * U[1] - tau * pde.rhs)
    r = _symmetry_residual(alg, p, pde)
    return DeterminingSystem(symmetry_unknowns(), _sorted(_split(alg, r, SYMMETRY_SPLIT, "symmetry")))


def generate_multiplier_system(pde: PDEInstance, order: int = 4) -> DeterminingSystem:
    """Adjoint condition and the Helmholtz identities for Q(t, x, u, u_1..u_4), split by jets above 4."""
    if order != 4:
        raise ValueError("multiplier systems are generated for order 4")
    Q = fn("Q")
    alg = DiffAlgebra()
    q = alg.conv(Q.applied)
    eqs = _split(alg, _adjoint_residual(alg, q, pde), MULTIPLIER_SPLIT, "adjoint")
    for j, h in enumerate(_helmholtz(alg, q)):
        eqs += _split(alg, h, MULTIPLIER_SPLIT, f"helmholtz{j}")
    return DeterminingSystem([Q], _sorted(eqs))


# ---------------------------------------------------------------------------
# serialization


def _unknown_text(f: FunctionSymbol) -> str:
    return f"{f.name}({', '.join(str(a) for a in f.args)})"


def export_system(system: DeterminingSystem, format: str = "json") -> str:
    """Deterministic text or JSON document; equations ordered by "group:monomial"."""
    eqs = _sorted(system.equations)
    if format == "json":
        doc = {
            "unknowns": [_unknown_text(f) for f in system.unknowns],
            "equations": [to_text(eq.expr) for eq in eqs],
            "monomials": [eq.key for eq in eqs],
        }
        return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"
    if format == "text":
        lines = ["unknowns: " + "; ".join(_unknown_text(f) for f in system.unknowns)]
        lines += [f"[{eq.key}] {to_text(eq.expr)} = 0" for eq in eqs]
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown format {format!r}")


def _unknown_from_text(text: str) -> FunctionSymbol:
    name = text.split("(", 1)[0].strip()
    if name not in REGISTRY.functions:
        raise ExprError(f"unknown function {name!r}")
    f = REGISTRY.fn(name)
    if _unknown_text(f) != text.strip():
        raise ExprError(f"signature mismatch for {name!r}")
    return f


def _split_key(key: str) -> tuple[str, Expr]:
    group, mono = key.split(":", 1)
    return group, parse(mono)


def load_system(document: str) -> DeterminingSystem:
    """Inverse of ``export_system`` (either format)."""
    text = document.strip()
    if text.startswith("{"):
        doc = json.loads(text)
        unknowns = [_unknown_from_text(s) for s in doc["unknowns"]]
        if len(doc["equations"]) != len(doc["monomials"]):
            raise ExprError("equations and monomials differ in length")
        eqs = [Equation(*_split_key(k), parse(e)) for k, e in zip(doc["monomials"], doc["equations"])]
        return DeterminingSystem(unknowns, eqs)
    lines = text.splitlines()
    if not lines or not lines[0].startswith("unknowns:"):
        raise ExprError("missing unknowns line")
    head = lines[0][len("unknowns:"):].strip()
    unknowns = [_unknown_from_text(s) for s in head.split(";")] if head else []
    eqs = []
    for line in lines[1:]:
        key, rest = line[1:].split("] ", 1)
        if not rest.endswith(" = 0"):
            raise ExprError(f"malformed equation line {line!r}")
        eqs.append(Equation(*_split_key(key), parse(rest[:-4])))
    return DeterminingSystem(unknowns, eqs)


__all__ = [
    "Equation", "DeterminingSystem", "generate_symmetry_system", "generate_multiplier_system",
    "export_system", "load_system", "symmetry_unknowns",
]
