"""Differential polynomial engine behind the jet calculus.

Expressions are converted to sparse polynomials over QQ whose generators are
t, x, the jets of u, parameters and "atoms": every subexpression that is not
polynomial (powers with non-natural exponents, function symbols, Int
markers, logarithms).  Each atom carries a derivative rule obtained once from
sympy and converted back into the ring, so repeated total derivatives run on
exact polynomial arithmetic.

Powers are put in a canonical shape before they become atoms so derivatives
close on a finite set:

    B^n (n < 0)         -> Inv(B)^|n|
    B^(a/L) (0 < a < L) -> Root(B, L)^a
    B^(c + s)           -> B^(frac(c) + s) * B^floor(c)   (s symbolic)

The ring does not know the relations B*Inv(B) = 1 and Root(B, L)^L = B;
``is_zero`` eliminates them, and leftovers go to the complete rationalizing
test of ``expr.is_zero``.
"""

from __future__ import annotations

import random
from collections import defaultdict
from functools import lru_cache

import mpmath
import sympy as sp
from sympy import QQ
from sympy.core.function import AppliedUndef
from sympy.polys.rings import PolyRing

from . import expr as _ex
from .expr import JET_MAX, U, Expr, ExprError, JetOrderOverflow, jet_info, t, u, x

_KIND_BASE = "base"      # t, x, jets: derivative rules are structural
_KIND_PARAM = "param"    # constants
_KIND_ATOM = "atom"      # derivative via sympy on the atom
_KIND_INV = "inv"
_KIND_ROOT = "root"


@lru_cache(maxsize=None)
def _diff(e: Expr, var: sp.Symbol) -> Expr:
    # shared by all instances: atom derivative rules do not depend on the equation
    return sp.diff(e, var)


@lru_cache(maxsize=None)
def _total_dx(e: Expr) -> Expr:
    d = _diff(e, x)
    for s in e.free_symbols:
        info = jet_info(s)
        if info is not None:
            if info.order >= JET_MAX:
                raise JetOrderOverflow(f"D_x of {s} exceeds jet order {JET_MAX}")
            d += U[info.order + 1] * _diff(e, s)
    return d


class DiffAlgebra:
    def __init__(self):
        self.exprs: list[Expr] = [t, x]
        self.kinds: list[str] = [_KIND_BASE, _KIND_BASE]
        self.bases: list = [None, None]
        self.index: dict = {t: 0, x: 1}
        self.ring = PolyRing([sp.Dummy("g0"), sp.Dummy("g1")], QQ)
        self._conv_cache: dict = {}
        self._dx_cache: dict = {}
        self._partial_cache: dict = {}
        self._dxn_cache: dict = {}
        self._num: dict = {}
        self._rng = random.Random(20240611)

    def _gen(self, e: Expr, kind: str, base=None):
        idx = self.index.get(e)
        if idx is None:
            idx = len(self.exprs)
            self.exprs.append(e)
            self.kinds.append(kind)
            self.bases.append(base)
            self.index[e] = idx
            if idx >= self.ring.ngens:
                # grow geometrically; unused slots never occur in any polynomial
                old = list(self.ring.symbols)
                extra = max(self.ring.ngens, 16)
                self.ring = PolyRing(old + [sp.Dummy(f"g{len(old) + i}") for i in range(extra)], QQ)
        return self.ring.gens[idx]

    def lift(self, p):
        if p.ring is self.ring:
            return p
        pad = (0,) * (self.ring.ngens - p.ring.ngens)
        return self.ring.from_dict({m + pad: c for m, c in p.terms()})

    def one(self):
        return self.ring.one

    def zero(self):
        return self.ring.zero

    # -- conversion ------------------------------------------------------

    def conv(self, e) -> "PolyElement":
        e = sp.sympify(e)
        hit = self._conv_cache.get(e)
        if hit is not None:
            return self.lift(hit)
        out = self._conv(e)
        self._conv_cache[e] = out
        return self.lift(out)

    def _conv(self, e):
        if e.is_Rational:
            return self.ring(QQ(int(e.p), int(e.q)))
        if e.is_Number:
            if e.is_Float:
                raise ExprError("floating-point constants are not exact; use rationals")
            return self._gen(e, _KIND_PARAM)
        if e.is_Symbol:
            info = jet_info(e)
            if info is not None:
                if info.dependent != "u" or info.time:
                    raise ExprError("differential algebra handles u-jets only")
                return self._gen(e, _KIND_BASE)
            if e in (t, x):
                return self._gen(e, _KIND_BASE)
            return self._gen(e, _KIND_PARAM)
        if e.is_Add:
            acc = self.ring.zero
            for a in e.args:
                b = self.conv(a)
                acc = self.lift(acc) + self.lift(b)
            return self.lift(acc)
        if e.is_Mul:
            acc = self.ring.one
            for a in e.args:
                b = self.conv(a)
                acc = self.lift(acc) * self.lift(b)
            return self.lift(acc)
        if e.is_Pow:
            return self._conv_pow(e.base, e.exp)
        if not e.free_symbols:
            return self._gen(e, _KIND_PARAM)
        return self._gen(e, _KIND_ATOM)

    def _inv(self, B):
        if B.is_Add:
            # factor so that 1/(p q) and 1/p * 1/q share generators
            try:
                coeff, factors = sp.factor_list(B)
            except sp.PolynomialError:
                coeff, factors = sp.S.One, [(B, 1)]
            if all(sp.Integer(m) == m and m > 0 for _, m in factors) and coeff.is_Rational and (len(factors) > 1 or (factors and factors[0][1] > 1) or coeff != 1):
                acc = self.conv(1 / coeff)
                for fac, m in factors:
                    g = self._inv_prime(fac)
                    acc = self.lift(acc) * self.lift(g) ** int(m)
                return self.lift(acc)
        return self._inv_prime(B)

    def _inv_prime(self, B):
        e = sp.Pow(B, -1, evaluate=False)
        if not B.free_symbols:
            return self._gen(e, _KIND_PARAM)
        return self._gen(e, _KIND_INV, B)

    def _int_power(self, B, n: int):
        if n >= 0:
            return self.lift(self.conv(B) ** n)
        return self.lift(self._inv(B) ** (-n))

    def _conv_pow(self, B, p):
        if p.is_Integer:
            return self._int_power(B, int(p))
        c0, rest = p.as_coeff_Add()
        if not c0.is_Rational:
            return self._gen(sp.Pow(B, p), _KIND_ATOM)
        n = int(sp.floor(c0))
        frac = c0 - n
        if rest == 0:
            L = int(frac.q)
            root_e = sp.Pow(B, sp.Rational(1, L), evaluate=False)
            kind = _KIND_ROOT if B.free_symbols else _KIND_PARAM
            g = self._gen(root_e, kind, (B, L))
            rest_p = self._int_power(B, n)
            return self.lift(g ** int(frac.p)) * self.lift(rest_p)
        atom = sp.Pow(B, frac + rest)
        if atom.is_Pow and atom.base == B:
            g = self._gen(atom, _KIND_ATOM if B.free_symbols or rest.free_symbols else _KIND_PARAM)
        else:
            g = self.conv(atom)
        rest_p = self._int_power(B, n)
        return self.lift(g) * self.lift(rest_p)

    def to_expr(self, p) -> Expr:
        p = self.lift(p)
        pad = [sp.S.Zero] * (self.ring.ngens - len(self.exprs))
        return p.as_expr(*self.exprs, *pad)

    # -- derivatives -----------------------------------------------------

    def _gen_partial(self, idx: int, var: sp.Symbol):
        key = (idx, var)
        hit = self._partial_cache.get(key)
        if hit is not None:
            return self.lift(hit)
        kind = self.kinds[idx]
        e = self.exprs[idx]
        if kind == _KIND_PARAM:
            out = self.ring.zero
        elif kind == _KIND_BASE:
            out = self.ring.one if e == var else self.ring.zero
        else:
            out = self.conv(_diff(e, var)) if var in e.free_symbols else self.ring.zero
        self._partial_cache[key] = out
        return self.lift(out)

    def _gen_dx(self, idx: int):
        hit = self._dx_cache.get(idx)
        if hit is not None:
            return self.lift(hit)
        kind = self.kinds[idx]
        e = self.exprs[idx]
        if kind == _KIND_PARAM:
            out = self.ring.zero
        elif kind == _KIND_BASE:
            if e == x:
                out = self.ring.one
            elif e == t:
                out = self.ring.zero
            else:
                info = jet_info(e)
                if info.order >= JET_MAX:
                    raise JetOrderOverflow(f"D_x of {e} exceeds jet order {JET_MAX}")
                out = self.conv(U[info.order + 1])
        else:
            out = self.conv(_total_dx(e))
        self._dx_cache[idx] = out
        return self.lift(out)

    def _active(self, p):
        return [i for i, d in enumerate(p.degrees()) if d > 0]

    def dx(self, p):
        p = self.lift(p)
        acc = self.ring.zero
        for i in self._active(p):
            dg = self._gen_dx(i)
            if dg:
                term = self.lift(self.lift(p).diff(self.ring.gens[i])) * self.lift(dg)
                acc = self.lift(acc) + term
        return self.lift(acc)

    def dxn(self, p, n: int):
        for _ in range(n):
            p = self.dx(p)
        return p

    def partial(self, p, var: sp.Symbol):
        """Partial derivative in t, x, a jet, or a parameter symbol."""
        p = self.lift(p)
        acc = self.ring.zero
        for i in self._active(p):
            dg = self._gen_partial(i, var)
            if dg:
                term = self.lift(self.lift(p).diff(self.ring.gens[i])) * self.lift(dg)
                acc = self.lift(acc) + term
        return self.lift(acc)

    def max_order(self, p) -> int:
        p = self.lift(p)
        top = -1
        for i in self._active(p):
            e = self.exprs[i]
            for s in (e.free_symbols if self.kinds[i] != _KIND_BASE else {e}):
                info = jet_info(s)
                if info is not None:
                    top = max(top, info.order)
        return top

    def rhs_derivative(self, pde, k: int):
        key = (id(pde), k)
        hit = self._dxn_cache.get(key)
        if hit is None:
            hit = self.conv(pde.rhs) if k == 0 else self.dx(self.rhs_derivative(pde, k - 1))
            self._dxn_cache[key] = hit
        return self.lift(hit)

    def dt(self, p, pde):
        """D_t on solutions of u_t = rhs(pde)."""
        p = self.lift(p)
        acc = self.partial(p, t)
        for k in range(self.max_order(p) + 1):
            dp = self.partial(p, U[k])
            if dp:
                rk = self.rhs_derivative(pde, k)
                acc = self.lift(acc) + self.lift(dp) * self.lift(rk)
        return self.lift(acc)

    def euler(self, p, start: int = 0):
        p = self.lift(p)
        acc = self.ring.zero
        for k in range(self.max_order(p), start - 1, -1):
            pk = self.partial(p, U[k]) * int(sp.binomial(k, start))
            if acc:
                dacc = self.dx(acc)
                acc = self.lift(pk) - self.lift(dacc)
            else:
                acc = self.lift(pk)
        return self.lift(acc)

    # -- zero test -------------------------------------------------------

    def _eliminate(self, p):
        """Clear Inv(B) and Root(B, L)^L relations; result vanishes iff p does."""
        for _ in range(100):
            p = self.lift(p)
            degs = p.degrees()
            target = None
            for i, d in enumerate(degs):
                if d <= 0:
                    continue
                if self.kinds[i] == _KIND_INV:
                    target = (i, "inv", d)
                    break
                if self.kinds[i] == _KIND_ROOT and d >= self.bases[i][1]:
                    target = (i, "root", d)
                    break
            if target is None:
                return p
            i, what, m = target
            by_deg: dict = defaultdict(dict)
            for mon, c in p.terms():
                j = mon[i]
                mon2 = mon[:i] + (0,) + mon[i + 1:]
                by_deg[j][mon2] = c
            if what == "inv":
                ring0 = self.ring
                parts = {j: ring0.from_dict(dict(terms)) for j, terms in by_deg.items()}
                Bp = self.conv(self.bases[i])
                out = self.ring.zero
                for j, part in parts.items():
                    out = self.lift(out) + self.lift(part) * self.lift(Bp) ** (m - j)
                p = out
            else:
                B, L = self.bases[i]
                ring0 = self.ring
                parts = {j: ring0.from_dict(dict(terms)) for j, terms in by_deg.items()}
                Bp = self.conv(B)
                gi = self.ring.gens[i]
                out = self.ring.zero
                for j, part in parts.items():
                    q, r = divmod(j, L)
                    out = self.lift(out) + self.lift(part) * gi ** r * self.lift(Bp) ** q
                p = out
        raise ExprError("relation elimination did not terminate")

    def _split_by_jets(self, p):
        p = self.lift(p)
        jet_idx = [i for i, e in enumerate(self.exprs)
                   if self.kinds[i] == _KIND_BASE and jet_info(e) is not None and jet_info(e).order > 0]
        # atoms containing higher jets block the split
        for i in self._active(p):
            if self.kinds[i] != _KIND_BASE and any(
                    (jet_info(s) is not None and jet_info(s).order > 0) for s in self.exprs[i].free_symbols):
                return {(): p}
        groups: dict = defaultdict(dict)
        for mon, c in p.terms():
            key = tuple(mon[i] for i in jet_idx)
            groups[key][mon] = c
        return {k: self.ring.from_dict(v) for k, v in groups.items()}

    # numeric screening: a generic point where every generator gets a value;
    # a clearly nonzero value proves nonvanishing, anything else goes exact

    def _random_value(self):
        return mpmath.mpf(self._rng.randint(1, 10**6)) / 10**6 + mpmath.mpf(1) / 2

    def _opaque_atoms(self, e: Expr) -> dict:
        out = {}
        for a in e.atoms(sp.Derivative, sp.Subs):
            out[a] = None
        for a in e.atoms(sp.Function):
            if isinstance(a, AppliedUndef) or not a.func.__module__.startswith("sympy"):
                out[a] = None
        return out

    def _gen_value(self, i: int):
        hit = self._num.get(i)
        if hit is not None:
            return hit
        e = self.exprs[i]
        if e.is_Symbol:
            val = self._num.setdefault(("sym", e), self._random_value())
        else:
            reps = {}
            for a in self._opaque_atoms(e):
                reps[a] = sp.Float(self._num.setdefault(("atom", a), self._random_value()), 60)
            sub = e.xreplace(reps)
            sub = sub.xreplace({s: sp.Float(self._num.setdefault(("sym", s), self._random_value()), 60)
                                for s in sub.free_symbols})
            num = sp.N(sub, 60)
            re, im = num.as_real_imag()
            if not (re.is_Number and im.is_Number):
                raise ValueError(f"cannot evaluate {e}")
            val = mpmath.mpc(str(re), str(im)) if im != 0 else mpmath.mpf(str(re))
        self._num[i] = val
        return val

    def _surely_nonzero(self, p) -> bool:
        try:
            with mpmath.workdps(60):
                vals = [self._gen_value(i) for i in self._active(p)]
                idx = list(self._active(p))
                total = mpmath.mpf(0)
                scale = mpmath.mpf(0)
                for mon, c in p.terms():
                    term = mpmath.mpf(int(c.numerator)) / int(c.denominator)
                    for k, i in enumerate(idx):
                        if mon[i]:
                            term *= vals[k] ** mon[i]
                    total += term
                    scale = max(scale, abs(term))
                return abs(total) > scale * mpmath.mpf(10) ** -40
        except (TypeError, ValueError, ZeroDivisionError, AttributeError):
            return False

    def _part_is_zero(self, part) -> bool:
        q = self._eliminate(part)
        if not q:
            return True
        if self._surely_nonzero(part):
            return False
        return _ex.is_zero(self.to_expr(q))

    def is_zero(self, p) -> bool:
        p = self.lift(p)
        if not p:
            return True
        return all(self._part_is_zero(part) for part in self._split_by_jets(p).values())

    def prune(self, p):
        """Drop jet-monomial groups whose coefficient vanishes identically."""
        p = self.lift(p)
        if not p:
            return p
        parts = self._split_by_jets(p)
        if len(parts) == 1 and () in parts:
            return p if not self.is_zero(p) else self.ring.zero
        ring = self.ring  # the zero test may grow self.ring
        keep = {}
        for part in parts.values():
            if not self._part_is_zero(part):
                keep.update(dict(part.terms()))
        return self.lift(ring.from_dict(keep)) if keep else self.ring.zero

    def normal(self, p) -> Expr:
        """Normal form as a sympy expression; exactly 0 iff ``is_zero``."""
        if self.is_zero(p):
            return sp.S.Zero
        return _ex._expand(self.to_expr(p))


__all__ = ["DiffAlgebra"]
