"""Command-line front end: verify, derive, detgen, simulate.

Exit codes: 0 success, 1 nonzero residual, 2 usage or configuration error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import configparser
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import sympy as sp

from . import catalog
from .calculus import (
    NonIntegrable, NotADivergence, PDEInstance, SingularHomotopy, flux_from_density, homotopy_density,
)
from .determining import export_system, generate_multiplier_system, generate_symmetry_system
from .expr import REGISTRY, ExprError, as_expr, parse, to_text, x
from .solver import (
    BlowUp, Grid, SolverConfig, compile_expr, diagnostics_csv, evolve, plane_wave, relative_drift,
)
from .verify import adjoint_residual, density_residual, divergence_residual, helmholtz_residuals

EXIT_OK, EXIT_NONZERO, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3


class ConfigError(ExprError):
    pass


# ---------------------------------------------------------------------------
# run configuration

_SECTIONS = {
    "pde": {"a", "b", "c", "f", "family"},
    "solver": {"L", "N", "dt", "t_end", "dealias", "diagnostics_stride", "monitors"},
    "initial": {"u0", "preset", "mode", "amplitude"},
    "output": {"csv", "summary"},
}

PRESETS = {
    "kawahara": """\
[pde]
# u_t + alpha u u_x + beta u^2 u_x + gamma u_xxx - mu u_xxxxx = 0 with alpha = beta = gamma = mu = 1
a = 1
b = -1
c = -1
f = u + u^2

[solver]
L = 6.283185307179586
N = 256
dt = 0.001
t_end = 1
dealias = true
diagnostics_stride = 50
monitors = C1, C2, C3

[initial]
u0 = 1/2 + sin(x)/2

[output]
csv = kawahara.csv
""",
    "dispersion": """\
[pde]
a = 1
b = 1
c = 1
f = f0
f0 = 5

[solver]
L = 6.283185307179586
N = 64
dt = 0.001
t_end = 1
diagnostics_stride = 100
monitors = C1, C2

[initial]
preset = plane-wave
mode = 2
amplitude = 1/100

[output]
csv = dispersion.csv
""",
    "s2-family": """\
[pde]
family = S2
alpha = 1
beta = 1
gamma = 1
f = u

[solver]
L = 6.283185307179586
N = 256
dt = 0.001
t_end = 1
diagnostics_stride = 50
monitors = C1, C2

[initial]
u0 = 1/2 + sin(x)/2

[output]
csv = s2-family.csv
""",
}


@dataclass
class RunConfig:
    pde: PDEInstance
    parameters: dict
    solver: SolverConfig
    u0: np.ndarray
    plane_wave: tuple | None = None
    csv: str | None = None
    summary: str | None = None
    source: dict = field(default_factory=dict)

    @classmethod
    def from_text(cls, text: str, base_dir: Path | None = None) -> "RunConfig":
        cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
        cp.optionxform = str
        try:
            cp.read_string(text)
        except configparser.Error as err:
            raise ConfigError(f"malformed config: {err}") from err
        for section in cp.sections():
            if section not in _SECTIONS:
                raise ConfigError(f"unknown section [{section}]")
            for key in cp[section]:
                if key in _SECTIONS[section]:
                    continue
                if section == "pde" and key in REGISTRY.parameters:
                    continue
                raise ConfigError(f"unknown key {key!r} in [{section}]")
        pde_sec = dict(cp["pde"]) if cp.has_section("pde") else {}
        params = {k: _number(v, k) for k, v in pde_sec.items() if k in REGISTRY.parameters}
        pde = _pde_from_section(pde_sec, params)

        s = dict(cp["solver"]) if cp.has_section("solver") else {}
        try:
            grid = Grid(_float(s.get("L", "6.283185307179586"), "L"), int(s.get("N", "256")))
            monitors = tuple(m.strip() for m in s.get("monitors", "C1, C2").split(",") if m.strip())
            scfg = SolverConfig(
                grid=grid, dt=_float(s.get("dt", "1e-3"), "dt"), t_end=_float(s.get("t_end", "1"), "t_end"),
                a=pde.a, b=pde.b, c=pde.c, f=pde.f,
                dealias=_bool(s.get("dealias", "true"), "dealias"),
                diagnostics_stride=int(s.get("diagnostics_stride", "100")),
                monitors=monitors, bindings=params)
            scfg.steps
        except (ValueError, ExprError) as err:
            raise ConfigError(f"[solver]: {err}") from err

        ini = dict(cp["initial"]) if cp.has_section("initial") else {"u0": "sin(x)"}
        pw = None
        if "preset" in ini:
            if ini["preset"] != "plane-wave" or "u0" in ini:
                raise ConfigError("[initial] preset must be 'plane-wave' and excludes u0")
            mode = int(ini.get("mode", "1"))
            amp = _float(ini.get("amplitude", "1/100"), "amplitude")
            u0 = amp * np.cos(2 * np.pi * mode / grid.L * grid.x)
            pw = (mode, amp)
        else:
            try:
                u0_fn = compile_expr(as_expr(ini.get("u0", "sin(x)")), [x], params)
            except ExprError as err:
                raise ConfigError(f"[initial] u0: {err}") from err
            u0 = np.asarray(u0_fn(grid.x), dtype=float)
        out = dict(cp["output"]) if cp.has_section("output") else {}
        csv = out.get("csv")
        if csv and base_dir is not None and not Path(csv).is_absolute():
            csv = str(base_dir / csv)
        return cls(pde, params, scfg, u0, pw, csv, out.get("summary"), {s: dict(cp[s]) for s in cp.sections()})


def _number(text: str, key: str):
    try:
        v = parse(text)
    except ExprError as err:
        raise ConfigError(f"{key}: {err}") from err
    if not v.is_number:
        raise ConfigError(f"{key} must be a number")
    return v


def _float(text: str, key: str) -> float:
    return float(_number(text, key))


def _bool(text: str, key: str) -> bool:
    low = text.strip().lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ConfigError(f"{key} must be a boolean")


def _pde_from_section(sec: dict, params: dict) -> PDEInstance:
    try:
        if "family" in sec:
            inst = catalog.instantiate(sec["family"], params)
            pde = inst.pde
            if "f" in sec:
                pde = PDEInstance(pde.a, pde.b, pde.c, as_expr(sec["f"]))
            for k in "abc":
                if k in sec:
                    raise ConfigError(f"{k!r} is fixed by family {sec['family']}")
        else:
            pde = PDEInstance.from_text(*(sec.get(k, d) for k, d in (("a", "1"), ("b", "1"), ("c", "1"), ("f", "u"))))
        return pde.specialize(params) if params else pde
    except catalog.UnknownCase as err:
        raise ConfigError(f"unknown family {err}") from err
    except ExprError as err:
        raise ConfigError(f"[pde]: {err}") from err


# ---------------------------------------------------------------------------
# commands


def _pde_args(p: argparse.ArgumentParser):
    p.add_argument("--a", default="1", help="coefficient a(t)")
    p.add_argument("--b", default="b(t)", help="coefficient b(t)")
    p.add_argument("--c", default="c(t)", help="coefficient c(t)")
    p.add_argument("--f", default="f(u)", help="nonlinearity f(u)")


def _bindings(items) -> dict:
    out = {}
    for item in items or ():
        if "=" not in item:
            raise ConfigError(f"binding {item!r} must look like name=value")
        k, v = item.split("=", 1)
        out[k.strip()] = as_expr(v.strip())
    return out


def _case_report(case_id: str, variant: str, bindings: dict, label: str) -> dict:
    inst = catalog.instantiate(case_id, bindings, variant)
    checks = catalog.audit(inst, hamiltonian=False)
    bad = [c for c in checks if not c.ok]
    residual = "; ".join(f"{c.name}: {to_text(c.residual)}" for c in bad) if bad else None
    return {"case": label, "status": "NONZERO" if bad else "ZERO", "residual": residual}


def cmd_verify(args) -> int:
    bindings = _bindings(args.set)
    kinds = ["symmetry", "conservation"] if args.kind == "all" else [args.kind]
    ids = [d["id"] for k in kinds for d in catalog.list_cases(k)]
    if args.case:
        unknown = [c for c in args.case if c not in ids]
        if unknown:
            raise ConfigError(f"unknown case(s) for kind {args.kind}: {', '.join(unknown)}")
        ids = [c for c in ids if c in args.case]
    reports = []
    for cid in ids:
        case = catalog.get_case(cid)
        if args.variant:
            if args.variant not in case.variants:
                raise ConfigError(f"case {cid} has no variant {args.variant!r}; "
                                  f"choose from {', '.join(case.variants)}")
            variants = [args.variant]
        elif args.all_variants:
            variants = list(case.variants)
        else:
            variants = [case.default_variant]
        for v in variants:
            label = cid if len(variants) == 1 and not args.all_variants else f"{cid}:{v}"
            rep = _case_report(cid, v, bindings, label)
            reports.append(rep)
            line = f"{rep['case']} [{v}] {rep['status']}"
            if rep["residual"]:
                line += f"\n    {rep['residual']}"
            print(line)
    if args.json:
        Path(args.json).write_text(json.dumps(reports, indent=2) + "\n", encoding="utf-8")
    return EXIT_OK if all(r["status"] == "ZERO" for r in reports) else EXIT_NONZERO


def cmd_derive(args) -> int:
    pde = PDEInstance.from_text(args.a, args.b, args.c, args.f)
    q = as_expr(args.multiplier)
    helm = helmholtz_residuals(q)
    adj = adjoint_residual(q, pde)
    failing = [(f"helmholtz{j}", r) for j, r in enumerate(helm) if r != 0]
    if adj != 0:
        failing.insert(0, ("adjoint", adj))
    if failing:
        print(f"NotAMultiplier: {to_text(q)}")
        for name, r in failing:
            print(f"  {name}: {to_text(r)}")
        return EXIT_NONZERO
    try:
        T = homotopy_density(q, as_expr(args.base), pde)
        X = flux_from_density(T, pde)
    except (SingularHomotopy, NonIntegrable, NotADivergence) as err:
        print(f"{type(err).__name__}: {err}")
        return EXIT_NONZERO
    div = divergence_residual(T, X, pde)
    eul = density_residual(T, q)
    print(f"T = {to_text(T)}")
    print(f"X = {to_text(X)}")
    print(f"D_t T + D_x X: {'ZERO' if div == 0 else 'NONZERO ' + to_text(div)}")
    print(f"E(T) - Q: {'ZERO' if eul == 0 else 'NONZERO ' + to_text(eul)}")
    return EXIT_OK if div == 0 and eul == 0 else EXIT_NONZERO


def cmd_detgen(args) -> int:
    pde = PDEInstance.from_text(args.a, args.b, args.c, args.f)
    system = generate_symmetry_system(pde) if args.target == "symmetry" else generate_multiplier_system(pde)
    doc = export_system(system, args.format)
    try:
        Path(args.out).write_text(doc, encoding="utf-8")
    except OSError as err:
        raise ConfigError(f"cannot write {args.out}: {err}") from err
    print(f"{len(system)} equations written to {args.out}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    if args.print_preset:
        sys.stdout.write(PRESETS[args.print_preset])
        return EXIT_OK
    if args.preset:
        text, base = PRESETS[args.preset], Path.cwd()
    elif args.config:
        path = Path(args.config)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as err:
            raise ConfigError(f"cannot read {path}: {err}") from err
        base = path.parent
    else:
        raise ConfigError("simulate needs a config file or --preset")
    rc = RunConfig.from_text(text, base)
    csv_path = args.csv or rc.csv
    try:
        state, records = evolve(rc.u0, rc.solver)
    except BlowUp as err:
        print(f"BlowUp: {err}")
        return EXIT_NUMERIC
    names = rc.solver.monitor_names
    csv = diagnostics_csv(records, names)
    if csv_path:
        Path(csv_path).write_text(csv, encoding="utf-8", newline="\n")
    lines = [f"steps: {rc.solver.steps}, records: {len(records)}"]
    for n in names:
        lines.append(f"max relative drift {n}: {relative_drift(records, n):.3e}")
    if rc.plane_wave is not None:
        f0 = rc.solver._f_const
        if f0 is None:
            raise ConfigError("the plane-wave preset needs a constant f")
        exact = plane_wave(rc.solver, rc.plane_wave[0], rc.plane_wave[1], f0, state.t)
        err = float(np.max(np.abs(state.field(rc.solver.grid) - exact)))
        lines.append(f"max error vs exact plane wave: {err:.3e}")
    text_out = "\n".join(lines) + "\n"
    sys.stdout.write(text_out)
    if rc.summary:
        Path(rc.summary).write_text(text_out, encoding="utf-8")
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="kawahara", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="audit catalog cases")
    v.add_argument("--kind", choices=["symmetry", "conservation", "all"], default="all")
    v.add_argument("--case", action="append", help="case id (repeatable)")
    v.add_argument("--variant", help="template variant, e.g. as-printed")
    v.add_argument("--all-variants", action="store_true", help="audit every stored variant")
    v.add_argument("--set", action="append", metavar="NAME=VALUE", help="parameter or function binding")
    v.add_argument("--json", metavar="PATH", help="write the JSON report here")
    v.set_defaults(func=cmd_verify)

    d = sub.add_parser("derive", help="density and flux from a multiplier")
    d.add_argument("--multiplier", "-q", required=True)
    d.add_argument("--base", default="0", help="homotopy base point, a function of (t, x)")
    _pde_args(d)
    d.set_defaults(func=cmd_derive)

    g = sub.add_parser("detgen", help="export a determining system")
    g.add_argument("target", choices=["symmetry", "multiplier"])
    g.add_argument("--out", required=True)
    g.add_argument("--format", choices=["json", "text"], default="json")
    _pde_args(g)
    g.set_defaults(func=cmd_detgen)

    s = sub.add_parser("simulate", help="pseudospectral run with conservation diagnostics")
    s.add_argument("config", nargs="?")
    s.add_argument("--preset", choices=sorted(PRESETS))
    s.add_argument("--print-preset", choices=sorted(PRESETS))
    s.add_argument("--csv", help="override the [output] csv path")
    s.set_defaults(func=cmd_simulate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ExprError, catalog.UnknownCase, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
