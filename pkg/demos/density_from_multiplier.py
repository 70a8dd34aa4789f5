"""Reconstruct a density and flux from a multiplier, then check them.

    python demos/density_from_multiplier.py
"""

from kawahara.calculus import PDEInstance, euler, flux_from_density, homotopy_density
from kawahara.expr import normalize, parse, to_text
from kawahara.verify import divergence_residual, helmholtz_residuals, is_multiplier

# constant coefficients b = alpha, c = beta with a linear nonlinearity
pde = PDEInstance.from_text(b="alpha", c="beta", f="f1*u + f0")
q = parse("u_xxxx + alpha*u_xx + beta*(f1*u^2/2 + f0*u)")

print("Helmholtz residuals:", [to_text(r) for r in helmholtz_residuals(q)])
print("is multiplier:", is_multiplier(q, pde))

T = homotopy_density(q)
X = flux_from_density(T, pde)
print("T =", to_text(T))
print("X =", to_text(X))
print("E(T) - Q =", to_text(normalize(euler(T) - q)))
print("D_t T + D_x X =", to_text(divergence_residual(T, X, pde)))

# the logarithmic nonlinearity needs a base point away from u = -f2
q_log = parse("ln(u + f2)")
T_log = homotopy_density(q_log, base=parse("1 - f2"))
print("log case, E(T) - Q =", to_text(normalize(euler(T_log) - q_log)))
