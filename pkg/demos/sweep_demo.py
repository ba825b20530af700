"""Error of the third-order series against FD over a range of eps, the
same table the ``thintorsion sweep`` command writes."""

from thintorsion import builtin, sweep
from thintorsion.harness import rows_to_csv

rows = sweep(builtin("folium"), [0.2, 0.4, 0.6, 0.8, 1.0], order=3, resolution=256)
print(f"{'eps':>5} {'L2 rel':>10} {'max rel':>10} {'torsion rel':>12}")
for r in rows:
    print(f"{r.epsilon:5.2f} {r.l2_rel_err:10.3e} {r.max_rel_err:10.3e} {r.torsion_rel_err:12.3e}")
print()
print(rows_to_csv(rows))
