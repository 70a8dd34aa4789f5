"""Pseudospectral integrator, diagnostics and compiled expressions."""

import math

import numpy as np
import pytest

from kawahara.expr import parse, t, u
from kawahara.solver import (
    BlowUp, Grid, MonitorRefused, SolverConfig, UnboundSymbol, UnsupportedConstruct, compile_expr,
    conserved_integrals, diagnostics_csv, evolve, initial_state, plane_wave, relative_drift, step,
)


def test_compile_examples():
    assert compile_expr("u^2", [u])(3.0) == 9.0
    assert compile_expr("f1*u + f0", [u], {"f1": 2, "f0": 1})(5.0) == 11.0
    assert compile_expr("(alpha*t+beta)^(-2/5)", [t], {"alpha": 1, "beta": 0})(32.0) == pytest.approx(0.25, rel=1e-15)


def test_compile_errors():
    with pytest.raises(UnboundSymbol):
        compile_expr("alpha*u", [u])
    with pytest.raises(UnsupportedConstruct):
        compile_expr("Int(f(u), u)", [u])
    with pytest.raises(UnsupportedConstruct):
        compile_expr("b(t)", [t])


def test_grid_validation():
    with pytest.raises(ValueError):
        Grid(N=48)
    with pytest.raises(ValueError):
        Grid(N=8)
    g = Grid(N=16)
    assert g.x[1] == pytest.approx(2 * math.pi / 16)


def test_zero_and_constant_fields_are_steady():
    cfg = SolverConfig(grid=Grid(N=32), f="u + u^2")
    zero = initial_state(np.zeros(32), cfg)
    assert not np.any(step(zero, cfg).u_hat)
    const = initial_state(np.full(32, 0.7), cfg)
    after = step(const, cfg)
    assert np.array_equal(after.u_hat, const.u_hat)


def test_plane_wave_one_step_error_is_fifth_order():
    errs = []
    for dt in (2e-3, 1e-3):
        cfg = SolverConfig(grid=Grid(N=32), dt=dt, t_end=dt, f="5", b=1, c=1)
        u0 = plane_wave(cfg, 2, 1e-2, 5.0, 0.0)
        got = step(initial_state(u0, cfg), cfg).field(cfg.grid)
        errs.append(np.max(np.abs(got - plane_wave(cfg, 2, 1e-2, 5.0, dt))))
    assert errs[0] / errs[1] > 2 ** 4.5


def test_conserved_integral_examples():
    cfg = SolverConfig(grid=Grid(N=64), monitors=("C1", "C2"))
    L = cfg.grid.L
    rec = conserved_integrals(initial_state(np.sin(2 * np.pi * cfg.grid.x / L), cfg), cfg)
    assert abs(rec.values["C1"]) < 1e-14
    assert rec.values["C2"] == pytest.approx(L / 4, rel=1e-14)
    rec = conserved_integrals(initial_state(np.ones(64), cfg), cfg)
    assert rec.values["C1"] == pytest.approx(L, rel=1e-14)
    assert rec.values["C2"] == pytest.approx(L / 2, rel=1e-14)


def test_gradient_energy_matches_fine_quadrature():
    cfg = SolverConfig(grid=Grid(N=64), b=1, c=1, f="u", monitors=("C3",))
    L = cfg.grid.L
    s = 2 * np.pi / L
    rec = conserved_integrals(initial_state(np.sin(s * cfg.grid.x), cfg), cfg)
    xf = np.arange(640) * L / 640
    dens = (s**2 * np.sin(s * xf)) ** 2 / 2 - (s * np.cos(s * xf)) ** 2 / 2 + np.sin(s * xf) ** 3 / 6
    assert rec.values["C3"] == pytest.approx(np.sum(dens) * L / 640, abs=1e-10)


def test_gradient_energy_refused_for_time_dependent_coefficients():
    with pytest.raises(MonitorRefused):
        SolverConfig(b="(t+1)^(-2/5)", monitors=("C1", "C3"))


def test_blowup_reports_time():
    cfg = SolverConfig(grid=Grid(N=32), blowup_ceiling=0.5)
    with pytest.raises(BlowUp) as err:
        evolve(np.ones(32), cfg)
    assert err.value.t == pytest.approx(cfg.dt)


def test_step_count_must_divide():
    with pytest.raises(ValueError):
        SolverConfig(dt=0.3, t_end=1.0).steps


def test_records_include_endpoints():
    cfg = SolverConfig(grid=Grid(N=32), dt=1e-2, t_end=0.25, diagnostics_stride=10)
    _, recs = evolve(np.sin(cfg.grid.x), cfg)
    assert [r.t for r in recs] == pytest.approx([0.0, 0.1, 0.2, 0.25])


def test_csv_format_and_determinism():
    cfg = SolverConfig(grid=Grid(N=32), dt=1e-2, t_end=0.1, diagnostics_stride=5, f="u + u^2")
    u0 = 0.5 + 0.5 * np.sin(cfg.grid.x)
    first = diagnostics_csv(evolve(u0, cfg)[1])
    second = diagnostics_csv(evolve(u0, SolverConfig(grid=Grid(N=32), dt=1e-2, t_end=0.1,
                                                     diagnostics_stride=5, f="u + u^2"))[1])
    assert first == second
    lines = first.split("\n")
    assert lines[0] == "t,C1,C2,umax,l2"
    assert all(len(row.split(",")) == 5 for row in lines[1:-1])
    assert lines[-1] == ""


def test_time_dependent_coefficients_conserve_mass_and_energy():
    cfg = SolverConfig(grid=Grid(N=64), b="(t+1)^(-2/5)", c="(t+1)^(-4/5)", f="u", t_end=0.2)
    _, recs = evolve(0.5 + 0.5 * np.sin(cfg.grid.x), cfg)
    assert relative_drift(recs, "C1") < 1e-12
    assert relative_drift(recs, "C2") < 1e-10


def test_relative_drift_absolute_for_zero_mass():
    cfg = SolverConfig(grid=Grid(N=32), dt=1e-2, t_end=0.1)
    _, recs = evolve(np.sin(cfg.grid.x), cfg)
    assert relative_drift(recs, "C1") < 1e-14


def test_doubling_resolution_keeps_plane_wave_error_at_time_floor():
    errs = []
    for N in (32, 64):
        cfg = SolverConfig(grid=Grid(N=N), dt=1e-3, t_end=0.1, f="5")
        final, _ = evolve(plane_wave(cfg, 2, 1e-2, 5.0, 0.0), cfg)
        errs.append(np.max(np.abs(final.field(cfg.grid) - plane_wave(cfg, 2, 1e-2, 5.0, 0.1))))
    assert errs[1] < 1e-10 and errs[1] <= 2 * errs[0]


def test_custom_integrand():
    cfg = SolverConfig(grid=Grid(N=32), monitors=(), custom={"H": parse("u_x^2/2")})
    rec = conserved_integrals(initial_state(np.sin(cfg.grid.x), cfg), cfg)
    assert rec.values["H"] == pytest.approx(math.pi / 2, rel=1e-13)
