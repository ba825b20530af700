"""Two-scale asymptotics of the torsion function on thin domains."""

from .expansion import ExpansionSeries, build_expansion, closed_form_u, eval_u, pde_residual
from .extrema import MaxExpansion, PeakJet, find_peak, max_series, numeric_max, peak_jet
from .geometry import DomainProfile, ThinDomain, builtin, load_profile, make_profile
from .harness import SweepRow, cli_main, sweep
from .rigidity import TorsionSeries, torsion_series, torsion_series_direct
from .solvers import (GridSolution, WosEstimate, l2_relative_error, solve_fd,
                      torsion_from_grid, wos_exit_time)

__all__ = [
    "DomainProfile", "ThinDomain", "builtin", "load_profile", "make_profile",
    "ExpansionSeries", "build_expansion", "closed_form_u", "eval_u", "pde_residual",
    "PeakJet", "MaxExpansion", "find_peak", "peak_jet", "max_series", "numeric_max",
    "TorsionSeries", "torsion_series", "torsion_series_direct",
    "GridSolution", "WosEstimate", "solve_fd", "torsion_from_grid", "l2_relative_error",
    "wos_exit_time", "SweepRow", "sweep", "cli_main",
]
