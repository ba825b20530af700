"""Reference solutions: finite differences on the thin disc and on the
folium, cross-checked by walk-on-spheres at a few points."""

import math

from thintorsion import builtin, solve_fd, torsion_from_grid, wos_exit_time

disc = builtin("disc")
for n in (64, 128, 256):
    g = solve_fd(disc, 1.0, n)
    print(f"disc n={n}: centre error {abs(g.node_value(0, 0) - 0.5):.1e}, "
          f"torsion error {abs(torsion_from_grid(g) - math.pi / 4):.3e}")

est = wos_exit_time(disc, 0.5, [0.0, 0.0], samples=200_000, seed=7, workers=4)
print(f"WoS thin disc centre: {est.mean:.5f} +- {est.std_error:.5f} (exact 0.2)")

folium = builtin("folium")
g = solve_fd(folium, 0.5, 256)
# grid nodes near x = 1/4, 1/2, 3/4 on the midline
for i in (g.x.size // 4, g.x.size // 2, 3 * g.x.size // 4):
    x, y = float(g.x[i]), 0.0
    est = wos_exit_time(folium, 0.5, [x, y], samples=50_000, seed=3)
    print(f"folium ({x:.4f}, 0): FD {g.node_value(x, y):.6f}, WoS {est.mean:.6f} +- {est.std_error:.6f}")
