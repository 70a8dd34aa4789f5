"""Audit every stored case and variant, and show the Hamiltonian pairings.

    python demos/audit_catalog.py
"""

from kawahara.catalog import audit, get_case, instantiate, list_cases
from kawahara.expr import to_text
from kawahara.verify import SymmetryGenerator, hamiltonian_map, noether_factor

for kind in ("symmetry", "conservation"):
    print(f"== {kind}")
    for summary in list_cases(kind):
        cid = summary["id"]
        for variant in get_case(cid).variants:
            checks = audit(instantiate(cid, variant=variant), hamiltonian=False)
            bad = [c for c in checks if not c.ok]
            status = "ZERO" if not bad else "NONZERO (" + ", ".join(c.name for c in bad) + ")"
            print(f"{cid:4} {variant:12} {status}")

print("== multipliers mapped to symmetries by D_x")
space, time_tr = SymmetryGenerator.from_text(xi="1"), SymmetryGenerator.from_text(tau="1")
c1a, c1b, c2 = instantiate("C1a"), instantiate("C1b"), instantiate("C2")
c4, s4 = instantiate("C4"), instantiate("S4")
print("mass:            D_x Q =", to_text(hamiltonian_map(c1a.Q)))
print("L2-norm:         factor vs space translation =", noether_factor(c1b.Q, space, c1b.pde))
print("gradient energy: factor vs time translation  =", noether_factor(c2.Q, time_tr, c2.pde))
print("Galilean:        factor vs S4                =",
      noether_factor(c4.Q, s4.generator, c4.pde, rational=False))
