"""Two-term expansion of the maximum against a direct maximization of the
truncated series, on the folium and on a thin ellipsoid."""

from thintorsion import build_expansion, builtin, max_series, numeric_max
from thintorsion.extrema import ellipsoid_max_error

profile = builtin("folium")
ms = max_series(profile)
print(f"folium peak at x = {ms.jet.x_bar[0]:.6f}, c2 = {ms.c2:.8f}, c4 = {ms.c4:.8f}")
series = build_expansion(profile, 3)
for eps in (0.1, 0.2, 0.4):
    x, xi, val = numeric_max(series, eps)
    xa, xia = ms.maximizer(eps)
    print(f"eps={eps}: series max {val:.8e}, two-term {ms.value(eps):.8e}, "
          f"maximizer shift {abs(x[0] - xa[0]):.1e}, {abs(xi - xia):.1e}")

for axes, a_n in (((1.0, 1.0), 1.0), ((2.0, 1.0), 0.5)):
    errs = [ellipsoid_max_error(axes, a_n, e) for e in (0.2, 0.5, 0.9)]
    print(f"ellipsoid {axes}, a_n={a_n}: relative max errors", ", ".join(f"{e:.3e}" for e in errs))
