"""Fourier pseudospectral integrator for u_t = a(t) u_5 + b(t) u_3 + c(t) f(u) u_1.

Periodic domain [0, L).  The dispersive part i(a k^5 - b k^3) is absorbed
into an integrating factor (exact antiderivative of a, b when sympy finds one,
4-point Gauss-Legendre per step otherwise); the transport term is advanced by
classical RK4 and evaluated pseudospectrally with optional 2/3-rule
dealiasing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np
import sympy as sp

from .expr import REGISTRY, U, Expr, ExprError, Int, as_expr, jet_info, jets_of, t, u, x


class UnboundSymbol(ExprError):
    pass


class UnsupportedConstruct(ExprError):
    pass


class BlowUp(RuntimeError):
    def __init__(self, t_fail: float, reason: str):
        super().__init__(f"blow-up at t = {t_fail:.17g}: {reason}")
        self.t = t_fail
        self.reason = reason


class MonitorRefused(ExprError):
    pass


# ---------------------------------------------------------------------------
# expression compilation


def compile_expr(e, free_vars, bindings: dict | None = None) -> Callable:
    """Numeric callable of ``e`` in double precision, arguments in ``free_vars`` order.

    ``bindings`` maps parameter names (or symbols) to numbers.  Anything left
    free raises UnboundSymbol; Int markers and function symbols without a
    closed form raise UnsupportedConstruct.
    """
    e = as_expr(e)
    if bindings:
        subs = {(REGISTRY.param(k) if isinstance(k, str) else k): sp.nsimplify(v) if isinstance(v, str) else v
                for k, v in bindings.items()}
        e = e.xreplace({k: sp.sympify(v) for k, v in subs.items()})
    free_vars = [as_expr(v) if isinstance(v, str) else v for v in free_vars]
    if e.atoms(Int):
        raise UnsupportedConstruct(f"unevaluated antiderivative in {e}")
    if e.atoms(sp.Derivative):
        raise UnsupportedConstruct(f"derivative of an unknown function in {e}")
    for a in e.atoms(sp.Function):
        if REGISTRY.function_for(a.func) is not None:
            raise UnsupportedConstruct(f"function symbol {a.func} has no numeric closed form")
    extra = e.free_symbols - set(free_vars)
    if extra:
        raise UnboundSymbol(f"unbound symbols: {', '.join(sorted(map(str, extra)))}")
    f = sp.lambdify(free_vars, e, modules="numpy")

    def call(*args):
        out = f(*args)
        if np.ndim(out) == 0 and args and np.ndim(args[0]) > 0:
            out = np.full(np.shape(args[0]), out, dtype=float)
        return out

    call.expr = e
    return call


# ---------------------------------------------------------------------------
# grid, configuration, state


@dataclass(frozen=True)
class Grid:
    L: float = 2 * math.pi
    N: int = 256

    def __post_init__(self):
        if not self.L > 0:
            raise ValueError("L must be positive")
        if self.N < 16 or self.N & (self.N - 1):
            raise ValueError("N must be a power of two and at least 16")

    @cached_property
    def x(self) -> np.ndarray:
        return np.arange(self.N) * (self.L / self.N)

    @cached_property
    def k(self) -> np.ndarray:
        """Wavenumbers of the real transform (m = 0 .. N/2)."""
        return 2 * np.pi * np.arange(self.N // 2 + 1) / self.L

    @cached_property
    def _symbols(self) -> dict:
        return {}

    def derivative_symbol(self, order: int) -> np.ndarray:
        d = self._symbols.get(order)
        if d is None:
            d = (1j * self.k) ** order
            if order % 2:
                d[-1] = 0  # the Nyquist mode has no odd derivative
            self._symbols[order] = d
        return d

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        m = np.arange(self.N // 2 + 1)
        return (m <= self.N // 3).astype(float)

    def integrate(self, values: np.ndarray) -> float:
        """Trapezoid rule on the periodic grid."""
        return float(np.sum(values) * (self.L / self.N))


MONITOR_NAMES = ("C1", "C2", "C3")


@dataclass
class SolverConfig:
    grid: Grid = field(default_factory=Grid)
    dt: float = 1e-3
    t_end: float = 1.0
    a: Expr = sp.S.One
    b: Expr = sp.S.One
    c: Expr = sp.S.One
    f: Expr = u
    dealias: bool = True
    diagnostics_stride: int = 100
    monitors: tuple = ("C1", "C2")
    custom: dict = field(default_factory=dict)
    blowup_ceiling: float = 1e8
    bindings: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.t_end > 0:
            raise ValueError("t_end must be positive")
        if self.diagnostics_stride < 1:
            raise ValueError("diagnostics_stride must be at least 1")
        self.a, self.b, self.c, self.f = (as_expr(e) for e in (self.a, self.b, self.c, self.f))
        for name in self.monitors:
            if name not in MONITOR_NAMES:
                raise ValueError(f"unknown monitor {name!r}; custom integrands go in ``custom``")
        self._compiled = {
            "a": compile_expr(self.a, [t], self.bindings),
            "b": compile_expr(self.b, [t], self.bindings),
            "c": compile_expr(self.c, [t], self.bindings),
            "f": compile_expr(self.f, [u], self.bindings),
        }
        self._integrands = {name: integrand_for(name, self) for name in self.monitors}
        for name, e in self.custom.items():
            self._integrands[name] = Integrand(as_expr(e), self.bindings)
        self._primitive = {name: _primitive(getattr(self, name), self.bindings) for name in "ab"}
        self._constant = {name: float(self._compiled[name](0.0)) for name in "abc"
                          if not getattr(self, name).has(t)}
        self._factor_cache: dict = {}
        self._f_const = float(self._compiled["f"](0.0)) if not self.f.has(u) else None
        self._f_raw = self._compiled["f"]

    @property
    def steps(self) -> int:
        n = round(self.t_end / self.dt)
        if n < 1 or abs(n * self.dt - self.t_end) > 1e-9 * self.t_end:
            raise ValueError("t_end must be an integer multiple of dt")
        return n

    def coeff(self, name: str, tt: float) -> float:
        c = self._constant.get(name)
        return c if c is not None else float(self._compiled[name](tt))

    @property
    def monitor_names(self) -> list[str]:
        return list(self._integrands)


@dataclass
class SolverState:
    t: float
    u_hat: np.ndarray

    def field(self, grid: Grid) -> np.ndarray:
        return np.fft.irfft(self.u_hat, n=grid.N)


@dataclass
class DiagnosticsRecord:
    t: float
    values: dict
    umax: float
    l2: float


# ---------------------------------------------------------------------------
# conserved integrands


class Integrand:
    """Compiled density in u-jets (spectral derivatives), t and bound parameters."""

    def __init__(self, e: Expr, bindings: dict | None = None):
        self.expr = e
        jets = jets_of(e, None)
        for s in jets:
            info = jet_info(s)
            if info.dependent != "u" or info.time:
                raise ExprError(f"integrands may use u and its x-derivatives only, got {s}")
        self.order = max((jet_info(s).order for s in jets), default=0)
        self.fn = compile_expr(e, [t, x] + U[: self.order + 1], bindings)

    def __call__(self, state: SolverState, grid: Grid) -> float:
        jets = [np.fft.irfft(state.u_hat * grid.derivative_symbol(k), n=grid.N) for k in range(self.order + 1)]
        return grid.integrate(np.asarray(self.fn(state.t, grid.x, *jets), dtype=float))


def _second_antiderivative(f: Expr) -> Expr:
    s = sp.Dummy("s")
    F1 = sp.integrate(f.subs(u, s), (s, 0, u))
    F = sp.integrate(F1.subs(u, s), (s, 0, u))
    if F.has(sp.Integral):
        raise UnsupportedConstruct(f"no closed second antiderivative of {f}")
    return F


def integrand_for(name: str, cfg: SolverConfig) -> Integrand:
    if name == "C1":
        return Integrand(u)
    if name == "C2":
        return Integrand(u ** 2 / 2)
    if name == "C3":
        if any(e.has(t) for e in (cfg.a, cfg.b, cfg.c)):
            raise MonitorRefused("C3 is conserved only for constant coefficients")
        F = _second_antiderivative(cfg.f)
        return Integrand(cfg.a * U[2] ** 2 / 2 - cfg.b * U[1] ** 2 / 2 + cfg.c * F, cfg.bindings)
    raise ValueError(f"unknown monitor {name!r}")


def conserved_integrals(state: SolverState, cfg: SolverConfig, integrands: dict | None = None) -> DiagnosticsRecord:
    grid = cfg.grid
    ints = cfg._integrands if integrands is None else integrands
    uu = state.field(grid)
    values = {name: ig(state, grid) for name, ig in ints.items()}
    return DiagnosticsRecord(state.t, values, float(np.max(np.abs(uu))), math.sqrt(grid.integrate(uu * uu)))


# ---------------------------------------------------------------------------
# time stepping

_GAUSS_X, _GAUSS_W = np.polynomial.legendre.leggauss(4)


def _primitive(e: Expr, bindings: dict) -> Callable | None:
    """Compiled antiderivative of a coefficient, or None when sympy finds none."""
    try:
        P = sp.integrate(e, t)
    except Exception:  # sympy raises a variety of errors on hard integrands
        return None
    if P.has(sp.Integral) or P.has(sp.Piecewise):
        return None
    try:
        return compile_expr(P, [t], bindings)
    except ExprError:
        return None


def _increment(cfg: SolverConfig, name: str, t0: float, t1: float) -> float:
    """Integral of coefficient ``name`` over [t0, t1]."""
    P = cfg._primitive[name]
    if P is not None:
        return float(P(t1)) - float(P(t0))
    mid, half = (t0 + t1) / 2, (t1 - t0) / 2
    return half * sum(w * cfg.coeff(name, mid + half * s) for s, w in zip(_GAUSS_X, _GAUSS_W))


def _factor(cfg: SolverConfig, t0: float, t1: float) -> np.ndarray:
    """exp of the dispersive symbol integrated over [t0, t1]."""
    if "a" in cfg._constant and "b" in cfg._constant:
        key = t1 - t0
        hit = cfg._factor_cache.get(key)
        if hit is None:
            k = cfg.grid.k
            hit = np.exp(1j * key * (cfg._constant["a"] * k ** 5 - cfg._constant["b"] * k ** 3))
            cfg._factor_cache[key] = hit
        return hit
    k = cfg.grid.k
    phase = _increment(cfg, "a", t0, t1) * k ** 5 - _increment(cfg, "b", t0, t1) * k ** 3
    return np.exp(1j * phase)


def _nonlinear(cfg: SolverConfig, tt: float, u_hat: np.ndarray) -> np.ndarray:
    grid = cfg.grid
    c = cfg.coeff("c", tt)
    if c == 0:
        return np.zeros_like(u_hat)
    if cfg._f_const is not None:
        ux = np.fft.irfft(u_hat * grid.derivative_symbol(1), n=grid.N)
        out = (c * cfg._f_const) * np.fft.rfft(ux)
    else:
        uu, ux = np.fft.irfft(np.stack((u_hat, u_hat * grid.derivative_symbol(1))), n=grid.N)
        out = c * np.fft.rfft(cfg._f_raw(uu) * ux)
    if cfg.dealias:
        out *= grid.dealias_mask
    return out


def _check(cfg: SolverConfig, tt: float, u_hat: np.ndarray):
    if not np.all(np.isfinite(u_hat)):
        raise BlowUp(tt, "non-finite spectrum")
    N = cfg.grid.N
    mags = np.abs(u_hat)
    if np.max(mags) > cfg.blowup_ceiling * N:
        raise BlowUp(tt, "spectral mode above the ceiling")
    # max|u| <= (sum of mode magnitudes) / N; transform only when the bound is exceeded
    if 2 * np.sum(mags) / N > cfg.blowup_ceiling:
        if np.max(np.abs(np.fft.irfft(u_hat, n=N))) > cfg.blowup_ceiling:
            raise BlowUp(tt, "max|u| above the ceiling")


def step(state: SolverState, cfg: SolverConfig) -> SolverState:
    """One integrating-factor RK4 step."""
    h = cfg.dt
    t0 = state.t
    th, t1 = t0 + h / 2, t0 + h
    E_half = _factor(cfg, t0, th)
    E_full = _factor(cfg, t0, t1)
    E_late = _factor(cfg, th, t1)
    v = state.u_hat
    k1 = _nonlinear(cfg, t0, v)
    k2 = _nonlinear(cfg, th, E_half * (v + h / 2 * k1))
    k3 = _nonlinear(cfg, th, E_half * v + h / 2 * k2)
    k4 = _nonlinear(cfg, t1, E_full * v + h * E_late * k3)
    new = E_full * v + (h / 6) * (E_full * k1 + 2 * E_late * (k2 + k3) + k4)
    _check(cfg, t1, new)
    return SolverState(t1, new)


def initial_state(u0, cfg: SolverConfig) -> SolverState:
    u0 = np.asarray(u0, dtype=float)
    if u0.shape != (cfg.grid.N,):
        raise ValueError(f"initial field must have {cfg.grid.N} points")
    if not np.all(np.isfinite(u0)):
        raise ValueError("initial field must be finite")
    return SolverState(0.0, np.fft.rfft(u0))


def evolve(u0, cfg: SolverConfig) -> tuple[SolverState, list[DiagnosticsRecord]]:
    """Integrate to t_end, recording diagnostics every ``diagnostics_stride`` steps and at the end."""
    state = initial_state(u0, cfg)
    records = [conserved_integrals(state, cfg)]
    n = cfg.steps
    for i in range(1, n + 1):
        state = step(state, cfg)
        state.t = i * cfg.dt  # avoid accumulating round-off in t
        if i % cfg.diagnostics_stride == 0 or i == n:
            records.append(conserved_integrals(state, cfg))
    return state, records


# ---------------------------------------------------------------------------
# reporting


def diagnostics_csv(records: list[DiagnosticsRecord], names: list[str] | None = None) -> str:
    names = names if names is not None else list(records[0].values) if records else []
    lines = [",".join(["t", *names, "umax", "l2"])]
    for r in records:
        row = [r.t, *(r.values[n] for n in names), r.umax, r.l2]
        lines.append(",".join(format(float(v), ".17g") for v in row))
    return "\n".join(lines) + "\n"


ZERO_INTEGRAL = 1e-12


def relative_drift(records: list[DiagnosticsRecord], name: str, scale: float | None = None) -> float:
    """max |C(t) - C(0)| / |C(0)|, or / ``scale`` when given.

    An initial value below ZERO_INTEGRAL (e.g. the mass of a zero-mean field)
    has no meaningful relative scale; the absolute drift is returned then.
    """
    c0 = records[0].values[name]
    drift = max(abs(r.values[name] - c0) for r in records)
    ref = abs(c0) if scale is None else scale
    return drift / ref if ref > ZERO_INTEGRAL else drift


def plane_wave(cfg: SolverConfig, mode: int, eps: float, f0: float, tt: float) -> np.ndarray:
    """Exact solution eps*cos(k x + phase) for f = f0 starting from eps*cos(k x)."""
    k = 2 * np.pi * mode / cfg.grid.L
    phase = (_increment(cfg, "a", 0.0, tt) * k ** 5 - _increment(cfg, "b", 0.0, tt) * k ** 3
             + f0 * _increment_c(cfg, tt) * k)
    return eps * np.cos(k * cfg.grid.x + phase)


def _increment_c(cfg: SolverConfig, tt: float) -> float:
    n = 64
    edges = np.linspace(0.0, tt, n + 1)
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        mid, half = (lo + hi) / 2, (hi - lo) / 2
        total += half * sum(w * cfg.coeff("c", mid + half * s) for s, w in zip(_GAUSS_X, _GAUSS_W))
    return total


__all__ = [
    "Grid", "SolverConfig", "SolverState", "DiagnosticsRecord", "Integrand", "compile_expr", "step",
    "evolve", "conserved_integrals", "diagnostics_csv", "relative_drift", "plane_wave", "initial_state",
    "integrand_for", "UnboundSymbol", "UnsupportedConstruct", "BlowUp", "MonitorRefused",
]
