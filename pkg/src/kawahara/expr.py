"""Symbolic expressions over the jet space of one dependent variable.

Expressions are sympy objects built from a fixed vocabulary: rational
constants, registered parameters, the independent variables ``t`` and ``x``,
jet variables ``u, u_x, u_xx, ...`` (and ``v, v_x, ..., v_t, v_tx, ...`` for
the potential form), registered function symbols, and antiderivative markers
``Int(e, var)``.  Text in and out goes through :func:`parse` and :func:`to_text`,
which speak the grammar documented in ``docs/grammar.md``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from math import lcm
from typing import Callable, Iterable, Mapping

import sympy as sp
from sympy.core.function import AppliedUndef

Expr = sp.Expr

#: Highest x-derivative order any operator in this package will produce.
JET_MAX = 12

t = sp.Symbol("t")
x = sp.Symbol("x")


class ExprError(ValueError):
    """Base class for errors raised by the expression layer."""


class ParseError(ExprError):
    def __init__(self, message: str, text: str = "", pos: int = 0):
        self.text = text
        self.pos = pos
        super().__init__(f"{message} at position {pos}" + (f": {text!r}" if text else ""))


class UnknownIdentifier(ParseError):
    pass


class JetOrderOverflow(ExprError):
    pass


class ClosedRuleViolation(ExprError):
    """A closed function symbol was bound to something violating its rule."""


# ---------------------------------------------------------------------------
# jet variables


@dataclass(frozen=True)
class JetVariable:
    order: int
    dependent: str = "u"
    time: bool = False  # v_t, v_tx, ... (potential form only)

    def __post_init__(self):
        if self.order < 0 or self.order > JET_MAX:
            raise JetOrderOverflow(f"jet order {self.order} outside [0, {JET_MAX}]")
        if self.dependent not in ("u", "v"):
            raise ExprError(f"unknown dependent variable {self.dependent!r}")
        if self.time and self.dependent != "v":
            raise ExprError("t-jets are only available for the potential v")

    @property
    def name(self) -> str:
        if self.order == 0 and not self.time:
            return self.dependent
        return self.dependent + "_" + ("t" if self.time else "") + "x" * self.order

    @property
    def symbol(self) -> sp.Symbol:
        return sp.Symbol(self.name)

    def next(self) -> "JetVariable":
        """The jet obtained by one more x-derivative."""
        return JetVariable(self.order + 1, self.dependent, self.time)


_JET_RE = re.compile(r"^([uv])(?:_(t?)(x*))?$")


def jet_info(sym) -> JetVariable | None:
    """Return the :class:`JetVariable` a symbol stands for, or None."""
    if not isinstance(sym, sp.Symbol):
        return None
    m = _JET_RE.match(sym.name)
    if m is None:
        return None
    dep, tt, xs = m.groups()
    if m.group(0) != dep and not (tt or xs):
        return None  # bare "u_"
    order = len(xs or "")
    if order > JET_MAX:
        raise JetOrderOverflow(f"{sym.name} exceeds jet order {JET_MAX}")
    return JetVariable(order, dep, bool(tt))


def jet(k: int, dependent: str = "u", time: bool = False) -> sp.Symbol:
    return JetVariable(k, dependent, time).symbol


U = [jet(k) for k in range(JET_MAX + 1)]
V = [jet(k, "v") for k in range(JET_MAX + 1)]
VT = [jet(k, "v", True) for k in range(JET_MAX + 1)]
u = U[0]
v = V[0]


def jets_of(e: Expr, dependent: str | None = "u") -> list[sp.Symbol]:
    """Jet symbols occurring in ``e``, ordered by derivative order."""
    out = []
    for s in e.free_symbols:
        info = jet_info(s)
        if info is not None and (dependent is None or info.dependent == dependent):
            out.append((info.time, info.order, s))
    return [s for _, _, s in sorted(out, key=lambda p: (p[0], p[1]))]


def max_jet_order(e: Expr, dependent: str = "u") -> int:
    """Highest x-derivative order of ``dependent`` in ``e``; -1 if none."""
    orders = [jet_info(s).order for s in jets_of(e, dependent)]
    return max(orders, default=-1)


# ---------------------------------------------------------------------------
# antiderivative marker


def _unit_linear_shift(base: Expr, var: sp.Symbol) -> Expr | None:
    """If ``base == var + k`` with k free of var, return k."""
    k = sp.expand(base - var)
    if k.has(var):
        return None
    return k


def _closed_antiderivative(dep: Expr, var: sp.Symbol) -> Expr | None:
    """Antiderivative of a single var-dependent factor, or None.

    Supported: var**n (n != -1), (var + k)**p (p != -1), and
    var**n * (var + k)**p with n a non-negative integer.
    """
    if dep == var:
        return var**2 / 2
    if dep.is_Pow:
        base, p = dep.args
        if p == -1 or p.has(var):
            return None
        if base == var or _unit_linear_shift(base, var) is not None:
            return base ** (p + 1) / (p + 1)
        return None
    if dep.is_Mul:
        factors = dep.args
        if len(factors) != 2:
            return None
        mono = [f for f in factors if f == var or (f.is_Pow and f.base == var and f.exp.is_Integer and f.exp > 0)]
        if len(mono) != 1:
            return None
        other = factors[1] if factors[0] is mono[0] else factors[0]
        n = 1 if mono[0] == var else int(mono[0].exp)
        if not other.is_Pow:
            return None
        base, p = other.args
        k = _unit_linear_shift(base, var)
        if k is None or p.has(var) or base == var:
            return None
        # var**n = ((var + k) - k)**n
        total = sp.S.Zero
        for j in range(n + 1):
            q = p + j
            if q == -1:
                return None
            total += sp.binomial(n, j) * (-k) ** (n - j) * base ** (q + 1) / (q + 1)
        return total
    return None


class Int(sp.Function):
    """Antiderivative marker ``Int(e, var)`` with ``D_var Int(e, var) = e``.

    Polynomial and power-of-shifted-variable integrands are integrated on
    construction (integration constant 0); anything else stays a marker,
    with var-independent factors pulled outside.
    """

    nargs = 2

    @classmethod
    def eval(cls, integrand, var):
        if not isinstance(var, sp.Symbol):
            raise ExprError(f"Int variable must be a symbol, got {var}")
        integrand = sp.expand(integrand, power_base=False, log=False)
        if integrand == 0:
            return sp.S.Zero
        closed = sp.S.Zero
        leftover = []
        for term in sp.Add.make_args(integrand):
            indep, dep = term.as_independent(var, as_Add=False)
            if dep == 1:
                closed += indep * var
                continue
            anti = _closed_antiderivative(dep, var)
            if anti is not None:
                closed += indep * anti
            else:
                leftover.append((indep, dep))
        if not leftover:
            return closed
        if closed == 0 and len(leftover) == 1 and leftover[0][0] == 1 and leftover[0][1] == integrand:
            return None
        return closed + sp.Add(*[i * cls(d, var) for i, d in leftover])

    def _eval_derivative(self, s):
        integrand, var = self.args
        if s == var:
            return integrand
        return Int(sp.diff(integrand, s), var)

    def _eval_subs(self, old, new):
        integrand, var = self.args
        if old == var and not isinstance(new, sp.Symbol):
            raise ExprError(f"cannot evaluate unevaluated antiderivative {self} at {var} = {new}")
        return None


# ---------------------------------------------------------------------------
# registry


@dataclass(eq=False)
class FunctionSymbol:
    """A named function of some of (t, x, u, jets).

    OPAQUE symbols differentiate into sympy ``Derivative`` objects carrying the
    multi-index.  CLOSED symbols (one argument) rewrite their derivative via
    ``rule``, an expression in the symbol itself.
    """

    name: str
    args: tuple
    cls: type
    rule_text: str | None = None
    rule: Expr | None = None

    @property
    def closed(self) -> bool:
        return self.rule_text is not None

    def __call__(self, *args):
        return self.cls(*(args or self.args))

    @property
    def applied(self) -> Expr:
        return self.cls(*self.args)


def _make_closed_class(name: str, fsym_ref: list) -> type:
    def fdiff(self, argindex=1):
        rule = fsym_ref[0].rule
        (arg,) = fsym_ref[0].args
        return rule.xreplace({arg: self.args[0]}) if self.args[0] != arg else rule

    return type(name, (sp.Function,), {"nargs": 1, "fdiff": fdiff})


_GREEK = {
    "α": "alpha", "β": "beta", "γ": "gamma", "δ": "delta", "μ": "mu", "ν": "nu",
    "ξ": "xi", "τ": "tau", "η": "eta", "λ": "lam",
}
_SUBSCRIPTS = str.maketrans("₀₁₂₃₄₅₆₇₈₉", "0123456789")

_RESERVED = {"t", "x", "Int", "Diff", "ln", "log", "exp", "sin", "cos", "pi"}


class Registry:
    """Names of parameters and function symbols known to the parser."""

    def __init__(self):
        self.parameters: dict[str, sp.Symbol] = {}
        self.functions: dict[str, FunctionSymbol] = {}
        self._by_cls: dict[type, FunctionSymbol] = {}

    def register_parameter(self, name: str) -> sp.Symbol:
        if name in self.functions or name in _RESERVED or _JET_RE.match(name):
            raise ExprError(f"name {name!r} already taken")
        sym = self.parameters.setdefault(name, sp.Symbol(name))
        return sym

    def register_function(self, name: str, args: Iterable, rule: str | None = None) -> FunctionSymbol:
        args = tuple(a if isinstance(a, sp.Basic) else self._arg_symbol(a) for a in args)
        if name in self.functions:
            existing = self.functions[name]
            if existing.args != args or existing.rule_text != rule:
                raise ExprError(f"function {name!r} already registered with a different signature")
            return existing
        if name in self.parameters or name in _RESERVED or _JET_RE.match(name):
            raise ExprError(f"name {name!r} already taken")
        if rule is not None:
            if len(args) != 1:
                raise ExprError("closed function symbols take exactly one argument")
            ref: list = []
            cls = _make_closed_class(name, ref)
            fsym = FunctionSymbol(name, args, cls, rule_text=rule)
            ref.append(fsym)
            self.functions[name] = fsym
            self._by_cls[cls] = fsym
            fsym.rule = parse(rule, self)
        else:
            cls = sp.Function(name)
            fsym = FunctionSymbol(name, args, cls)
            self.functions[name] = fsym
            self._by_cls[cls] = fsym
        return fsym

    def _arg_symbol(self, name: str) -> sp.Symbol:
        if name in ("t", "x"):
            return sp.Symbol(name)
        if jet_info(sp.Symbol(name)) is not None:
            return sp.Symbol(name)
        raise ExprError(f"function arguments must be t, x or jet variables, got {name!r}")

    def function_for(self, cls) -> FunctionSymbol | None:
        return self._by_cls.get(cls)

    def __contains__(self, name: str) -> bool:
        return name in self.parameters or name in self.functions

    def param(self, name: str) -> sp.Symbol:
        return self.parameters[name]

    def fn(self, name: str) -> FunctionSymbol:
        return self.functions[name]


def _default_registry() -> Registry:
    reg = Registry()
    for p in ("alpha", "beta", "gamma", "delta", "mu", "nu", "k",
              "f0", "f1", "f2", "f3", "f4", "C0", "L"):
        reg.register_parameter(p)
    for name in ("a", "b", "c"):
        reg.register_function(name, ("t",))
    reg.register_function("f", ("u",))
    reg.register_function("F", ("u",))
    for name in ("xi", "tau", "eta"):
        reg.register_function(name, ("x", "t", "u"))
    reg.register_function("Q", ("t", "x", "u", "u_x", "u_xx", "u_xxx", "u_xxxx"))
    # closed auxiliaries of the d'(t) cases: one symbol per derivative rule
    reg.register_function("d", ("t",), rule="(alpha*d(t)^delta + beta)^5")
    reg.register_function("dh", ("t",), rule="(alpha*dh(t)^delta + beta)^(1/2)")
    reg.register_function("g", ("t",), rule="(alpha*g(t)^(2/5) + beta)^(1/2)")
    reg.register_function("g5", ("t",), rule="(alpha*g5(t)^(2/5) + beta)^5")
    return reg


# ---------------------------------------------------------------------------
# normal form and zero test


def _is_int_power_of_sum(n) -> bool:
    return n.is_Pow and n.base.is_Add and n.exp.is_Integer and n.exp > 1


def _expand(e: Expr) -> Expr:
    # multinomial expansion only for positive integer powers of sums; sympy's
    # own hint would also expand denominators like (a*t + b)**(-7/5)
    for _ in range(20):
        e = sp.expand(e, deep=True, mul=True, multinomial=False, power_exp=True,
                      power_base=False, log=False)
        if not e.has(sp.Pow) or not any(_is_int_power_of_sum(p) for p in e.atoms(sp.Pow)):
            return e
        e = e.replace(_is_int_power_of_sum, sp.expand_multinomial)
    return e


def _is_opaque_atom(n) -> bool:
    return isinstance(n, (sp.Function, sp.Derivative, sp.Subs)) and not isinstance(n, sp.Pow)


def _freeze_atoms(e: Expr) -> Expr:
    reps: dict = {}

    def walk(n):
        if _is_opaque_atom(n):
            if n not in reps:
                reps[n] = sp.Dummy(f"A{len(reps)}")
            return
        for a in n.args:
            walk(a)

    walk(e)
    return e.xreplace(reps) if reps else e


def _bad_powers(e: Expr) -> list:
    out = []
    for p in e.atoms(sp.Pow):
        if not p.exp.is_Integer:
            out.append(p)
        elif p.exp < 0 and p.base.is_Add:
            out.append(p)
    return out


def _nonint_powers(e: Expr) -> list:
    return [p for p in e.atoms(sp.Pow) if not p.exp.is_Integer]


def _rationalize(e: Expr) -> Expr:
    """Rewrite every non-integer power via fresh generators.

    For each base B, exponents c0 + sum q_i m_i (c0, q_i rational) become
    integer powers of G0 = B^(1/L0) and G_i = B^(m_i/L_i).  When L0 > 1 the
    relation B = G0^L0 is imposed by eliminating one variable in which B is
    linear.  The result is a rational function in ordinary symbols.
    """
    e = _freeze_atoms(e)
    for _ in range(200):
        e = _expand(e)
        pows = _nonint_powers(e)
        if not pows:
            return e
        inner = [p for p in pows if not _nonint_powers(p.base)]
        inner.sort(key=sp.default_sort_key)
        B = inner[0].base
        group = [p for p in pows if p.base == B]
        L0 = 1
        dens: dict = {}
        split = {}
        for p in group:
            c0, rest = p.exp.as_coeff_Add()
            c0 = sp.Rational(c0)
            L0 = lcm(L0, c0.q)
            parts = []
            for tm in sp.Add.make_args(rest):
                if tm == 0:
                    continue
                q, m = tm.as_coeff_Mul()
                q = sp.Rational(q)
                dens[m] = lcm(dens.get(m, 1), q.q)
                parts.append((q, m))
            split[p] = (c0, parts)
        G0 = sp.Dummy("G")
        Gm = {m: sp.Dummy("G") for m in sorted(dens, key=sp.default_sort_key)}
        rep = {}
        for p, (c0, parts) in split.items():
            val = G0 ** (c0 * L0) if L0 > 1 else B**c0
            for q, m in parts:
                val *= Gm[m] ** (q * dens[m])
            rep[p] = val
        e = e.xreplace(rep)
        if L0 > 1:
            if B.is_Symbol:
                e = e.xreplace({B: G0**L0})
            else:
                for s in sorted(B.free_symbols, key=lambda s: s.name):
                    poly = sp.Poly(B, s)
                    if poly.degree() == 1:
                        a1, a0 = poly.all_coeffs()
                        if a1.has(*[g for g in Gm.values()]):
                            continue
                        e = e.subs(s, (G0**L0 - a0) / a1)
                        break
                else:
                    raise ExprError(f"cannot rationalize power base {B}")
    raise ExprError("rationalization did not terminate")


def is_zero(e: Expr) -> bool:
    """Exact zero test, robust to rational and symbolic exponents."""
    e = _expand(sp.sympify(e))
    if e == 0:
        return True
    if not _bad_powers(e):
        return False
    # split by jet monomials first: coefficients vanish independently
    jets = [s for s in e.free_symbols if jet_info(s) is not None and jet_info(s).order > 0]
    groups: dict = {}
    for term in sp.Add.make_args(e):
        coeff, mono = term.as_independent(*jets, as_Add=False) if jets else (term, sp.S.One)
        groups.setdefault(mono, []).append(coeff)
    for mono, coeffs in groups.items():
        c = sp.Add(*coeffs)
        if c == 0:
            continue
        r = _rationalize(c)
        num, _ = sp.fraction(sp.together(r))
        if sp.expand(num) != 0:
            return False
    return True


def normalize(e) -> Expr:
    """Normal form: expanded, like terms collected, exactly 0 when zero."""
    e = _expand(sp.sympify(e))
    if e == 0:
        return sp.S.Zero
    if _bad_powers(e) and is_zero(e):
        return sp.S.Zero
    return e


def equal(a, b) -> bool:
    return is_zero(sp.sympify(a) - sp.sympify(b))


# ---------------------------------------------------------------------------
# parser


_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d+)?)|(?P<name>[A-Za-z_Ͱ-Ͽ][A-Za-z0-9_₀-₉]*)"
    r"|(?P<op>\*\*|[-+*/^(),]))"
)


def _tokenize(text: str):
    pos = 0
    toks = []
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.end() == pos:
            stripped = len(text[pos:]) - len(text[pos:].lstrip())
            raise ParseError(f"unexpected character {text[pos + stripped]!r}", text, pos + stripped)
        start = m.start(m.lastgroup)
        kind = m.lastgroup
        val = m.group(kind)
        if kind == "op" and val == "**":
            val = "^"
        toks.append((kind, val, start))
        pos = m.end()
    toks.append(("end", "", len(text)))
    return toks


class _Parser:
    def __init__(self, text: str, reg: Registry):
        self.text = text
        self.reg = reg
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self, val=None):
        tok = self.toks[self.i]
        if val is not None and tok[1] != val:
            raise ParseError(f"expected {val!r}, found {tok[1] or 'end of input'!r}", self.text, tok[2])
        self.i += 1
        return tok

    def parse(self) -> Expr:
        e = self.expr()
        tok = self.peek()
        if tok[0] != "end":
            raise ParseError(f"unexpected {tok[1]!r}", self.text, tok[2])
        return e

    def expr(self):
        e = self.term()
        while self.peek()[1] in ("+", "-"):
            op = self.take()[1]
            rhs = self.term()
            e = e + rhs if op == "+" else e - rhs
        return e

    def term(self):
        e = self.unary()
        while self.peek()[1] in ("*", "/"):
            op, _, pos = self.take()[1], None, self.toks[self.i - 1][2]
            rhs = self.unary()
            if op == "/":
                if rhs == 0:
                    raise ParseError("division by zero", self.text, pos)
                e = e / rhs
            else:
                e = e * rhs
        return e

    def unary(self):
        if self.peek()[1] == "-":
            self.take()
            return -self.unary()
        if self.peek()[1] == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[1] == "^":
            self.take()
            ex = self.unary()  # right associative
            return base**ex
        return base

    def args(self):
        self.take("(")
        out = [self.expr()]
        while self.peek()[1] == ",":
            self.take()
            out.append(self.expr())
        self.take(")")
        return out

    def atom(self):
        kind, val, pos = self.peek()
        if kind == "num":
            self.take()
            return sp.Rational(val)
        if val == "(":
            self.take()
            e = self.expr()
            self.take(")")
            return e
        if kind != "name":
            raise ParseError(f"unexpected {val or 'end of input'!r}", self.text, pos)
        self.take()
        name = "".join(_GREEK.get(ch, ch) for ch in val).translate(_SUBSCRIPTS)
        is_call = self.peek()[1] == "("
        if name in ("Int", "Diff", "ln", "log", "exp", "sin", "cos") and is_call:
            args = self.args()
            return self.special(name, args, pos)
        if name in ("t", "x"):
            return sp.Symbol(name)
        if name == "pi" and not is_call:
            return sp.pi
        info = jet_info(sp.Symbol(name)) if _JET_RE.match(name) else None
        if info is not None:
            return info.symbol
        if name in self.reg.parameters:
            return self.reg.parameters[name]
        if name in self.reg.functions:
            fsym = self.reg.functions[name]
            if not is_call:
                raise ParseError(f"function {name!r} needs arguments", self.text, pos)
            args = self.args()
            if len(args) != len(fsym.args):
                raise ParseError(f"{name} takes {len(fsym.args)} argument(s)", self.text, pos)
            return fsym.cls(*args)
        raise UnknownIdentifier(f"unknown identifier {val!r}", self.text, pos)

    def special(self, name, args, pos):
        if name == "Int":
            if len(args) != 2 or not isinstance(args[1], sp.Symbol):
                raise ParseError("Int(e, var) needs a variable", self.text, pos)
            return Int(args[0], args[1])
        if name == "Diff":
            if len(args) < 2 or not all(isinstance(a, sp.Symbol) for a in args[1:]):
                raise ParseError("Diff(e, var, ...) needs variables", self.text, pos)
            return sp.diff(args[0], *args[1:])
        if len(args) != 1:
            raise ParseError(f"{name} takes one argument", self.text, pos)
        return {"ln": sp.log, "log": sp.log, "exp": sp.exp, "sin": sp.sin, "cos": sp.cos}[name](args[0])


def parse(text: str, registry: Registry | None = None) -> Expr:
    """Parse expression text into a normalized Expr.

    >>> to_text(parse("u_x*x + 0"))
    'x*u_x'
    """
    if not isinstance(text, str):
        return normalize(sp.sympify(text))
    return normalize(_Parser(text, registry or REGISTRY).parse())


def as_expr(e) -> Expr:
    """Accept Expr, number or expression text."""
    if isinstance(e, str):
        return parse(e)
    if isinstance(e, JetVariable):
        return e.symbol
    if isinstance(e, float):
        raise ExprError("floating-point values are not allowed in symbolic expressions")
    return sp.sympify(e)


# ---------------------------------------------------------------------------
# printer


def _is_atomic(e) -> bool:
    return e.is_Symbol or e.is_Function or isinstance(e, sp.Derivative) or (e.is_Integer and e >= 0)


def _print_exponent(p) -> str:
    if p.is_Integer and p >= 0:
        return str(p)
    return "(" + to_text(p) + ")"


def _print_factor(f) -> str:
    if f.is_Pow:
        base, p = f.args
        b = to_text(base) if _is_atomic(base) else "(" + to_text(base) + ")"
        return b + "^" + _print_exponent(p)
    if f.is_Add:
        return "(" + to_text(f) + ")"
    if f.is_Rational and not f.is_Integer:
        return "(" + to_text(f) + ")"
    return to_text(f)


def _print_mul(e) -> str:
    coeff, rest = e.as_coeff_Mul()
    factors = sorted(sp.Mul.make_args(rest), key=sp.default_sort_key)
    body = "*".join(_print_factor(f) for f in factors)
    if coeff == 1:
        return body
    if coeff == -1:
        return "-" + body
    return to_text(coeff) + "*" + body


def to_text(e) -> str:
    """Deterministic printer emitting the parser's grammar."""
    e = sp.sympify(e)
    if e.is_Integer:
        return str(e)
    if e.is_Rational:
        return f"{e.p}/{e.q}"
    if e.is_Float or e in (sp.oo, -sp.oo, sp.zoo, sp.nan):
        raise ExprError(f"cannot print non-exact value {e}")
    if e.is_Symbol:
        return e.name
    if e is sp.pi:
        return "pi"
    if e.is_Add:
        terms = sorted(e.args, key=sp.default_sort_key)
        out = to_text(terms[0])
        for term in terms[1:]:
            coeff, _ = term.as_coeff_Mul()
            if coeff.is_negative:
                out += " - " + to_text(-term)
            else:
                out += " + " + to_text(term)
        return out
    if e.is_Mul:
        return _print_mul(e)
    if e.is_Pow:
        return _print_factor(e)
    if isinstance(e, Int):
        return f"Int({to_text(e.args[0])}, {to_text(e.args[1])})"
    if isinstance(e, sp.Derivative):
        vs = []
        for var, n in e.variable_count:
            vs.extend([to_text(var)] * int(n))
        return f"Diff({to_text(e.expr)}, {', '.join(vs)})"
    if isinstance(e, sp.log):
        return f"ln({to_text(e.args[0])})"
    if isinstance(e, sp.exp):
        return f"exp({to_text(e.args[0])})"
    if e.is_Function:
        return f"{type(e).__name__}({', '.join(to_text(a) for a in e.args)})"
    raise ExprError(f"cannot print {e!r}")


# ---------------------------------------------------------------------------
# calculus primitives


def _resolve_var(var):
    if isinstance(var, JetVariable):
        return var.symbol
    if isinstance(var, str):
        if var in REGISTRY.parameters:
            return REGISTRY.parameters[var]
        return as_expr(var)
    return var


def partial(e, var) -> Expr:
    """Exact partial derivative with respect to t, x, a jet or a parameter."""
    var = _resolve_var(var)
    if not isinstance(var, sp.Symbol):
        raise ExprError(f"cannot differentiate with respect to {var}")
    return normalize(sp.diff(as_expr(e), var))


def _function_binding(fsym: FunctionSymbol, body: Expr):
    if fsym.closed:
        (arg,) = fsym.args
        rule = fsym.rule.xreplace({fsym.applied: body})
        rule = rule.replace(lambda n: isinstance(n, fsym.cls), lambda n: body.xreplace({arg: n.args[0]}))
        if not is_zero(sp.diff(body, arg) - rule):
            raise ClosedRuleViolation(
                f"binding {fsym.name} -> {to_text(body)} violates {fsym.name}' = {fsym.rule_text}")
    return sp.Lambda(fsym.args, body)


def substitute(e, bindings: Mapping, registry: Registry | None = None, normal: bool = True) -> Expr:
    """Simultaneous substitution of symbols and function symbols, then normalize.

    Keys may be symbols, jet variables, parameter or function names; function
    names bind to an expression in that function's declared arguments.
    """
    reg = registry or REGISTRY
    e = as_expr(e)
    sym_map = {}
    fn_map = {}
    for key, val in bindings.items():
        val = as_expr(val) if not isinstance(val, sp.Basic) else val
        if isinstance(key, FunctionSymbol):
            fn_map[key] = val
            continue
        if isinstance(key, str) and key in reg.functions:
            fn_map[reg.functions[key]] = val
            continue
        if isinstance(key, sp.FunctionClass):
            fn_map[reg.function_for(key)] = val
            continue
        sym_map[_resolve_var(key)] = val
    for fsym, body in fn_map.items():
        lam = _function_binding(fsym, body)
        e = e.replace(lambda n, c=fsym.cls: isinstance(n, c), lambda n, lam=lam: lam(*n.args))
        e = e.replace(lambda n: isinstance(n, sp.Derivative), lambda n: n.doit())
    if sym_map:
        # two passes through fresh symbols keep the substitution simultaneous
        tmp = {old: sp.Dummy(str(old)) for old in sym_map}
        e = e.subs(tmp)
        e = e.subs({tmp[old]: val for old, val in sym_map.items()})
    return normalize(e) if normal else e


def free_parameters(e: Expr, registry: Registry | None = None) -> set:
    reg = registry or REGISTRY
    params = set(reg.parameters.values())
    return {s for s in e.free_symbols if s in params}


REGISTRY = _default_registry()


def param(name: str) -> sp.Symbol:
    return REGISTRY.param(name)


def fn(name: str) -> FunctionSymbol:
    return REGISTRY.fn(name)


__all__ = [
    "Expr", "JET_MAX", "t", "x", "u", "v", "U", "V", "VT", "JetVariable", "jet", "jet_info",
    "jets_of", "max_jet_order", "Int", "FunctionSymbol", "Registry", "REGISTRY", "param", "fn",
    "normalize", "is_zero", "equal", "parse", "as_expr", "to_text", "partial", "substitute",
    "ExprError", "ParseError", "UnknownIdentifier", "JetOrderOverflow", "ClosedRuleViolation",
]
