"""Rigidity coefficients by both integration routes, then the series
against the exact thin-disc rigidity."""

import math

from thintorsion import builtin, torsion_series, torsion_series_direct

for name in ("folium", "lemniscate", "parabolic-lens"):
    a = torsion_series(builtin(name))
    b = torsion_series_direct(builtin(name))
    delta = max(abs(u - v) for u, v in zip(a.as_tuple(), b.as_tuple()))
    print(f"{name:15s} c3={a.c3:.10f} c5={a.c5:.10f} c7={a.c7:.10f}  routes differ by {delta:.1e}")

disc = torsion_series(builtin("disc"))
for eps in (0.4, 0.2, 0.1):
    exact = math.pi * eps ** 3 / (2 * (1 + eps ** 2))
    print(f"disc eps={eps}: relative error {abs(disc(eps) - exact) / exact:.3e} (eps^6 = {eps ** 6:.3e})")
