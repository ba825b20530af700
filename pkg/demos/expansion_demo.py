"""Build the two-scale expansion on the lemniscate profile and watch the
PDE residual shrink as the domain gets thinner."""

import numpy as np

from thintorsion import build_expansion, builtin, closed_form_u, pde_residual

profile = builtin("lemniscate")
rng = np.random.default_rng(1)
x = rng.uniform(0.05, 0.95, size=(200, 1))
xi = rng.uniform(-profile.h_minus(x), profile.h_plus(x))
samples = (x, xi)

for order in (1, 2, 3):
    series = build_expansion(profile, order)
    gap = np.max(np.abs(series.term(order)(x, xi) - closed_form_u(profile, order)(x, xi)))
    eps = np.array([0.4, 0.2, 0.1])
    res = np.array([pde_residual(series, e, samples) for e in eps])
    slope = np.polyfit(np.log(eps), np.log(res), 1)[0]
    print(f"N={order}: recursion vs closed form {gap:.1e}, residual slope {slope:.2f} "
          f"(expected {2 * order + 2})")

series = build_expansion(profile, 3)
print("u at (x, xi) = (0.5, 0.1), eps = 0.3:", float(np.squeeze(series(np.array([[0.5]]), 0.1, 0.3))))
