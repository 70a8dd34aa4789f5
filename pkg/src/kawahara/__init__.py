"""Exact jet-space checks and a spectral solver for u_t = a(t) u_xxxxx + b(t) u_xxx + c(t) f(u) u_x."""
