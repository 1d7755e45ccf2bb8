"""Figure-data presets: packing growth, rate landscape, rate comparison,
and finite-dimensional separation success.

Each preset returns (columns, rows, config) where rows are plain tuples
ready for CSV/JSON emission; plotting is out of scope.  Sweep ranges not
pinned by the studied configurations (the D sweep of the growth figure, the
codebook grid of the separation figure) are package defaults, recorded in
the returned config.
"""

from __future__ import annotations

import math

import numpy as np

from .capacity import boundary_curves, rate_point
from .packing import packing_bounds
from .random_code import separation_profile
from .rng import Seed

_LOG10 = math.log(10.0)

FIG2_TAU = 0.80
FIG2_RHO_DEG = 8.0
FIG4_TAUS = (0.55, 0.7, 0.85)
FIG5_DIMS = (40, 80)
FIG5_RHOS = (0.08, 0.14)
FIG5_TAUS = (0.55, 0.85)  # not pinned by the studied configuration; default
FIG5_DELTA = 0.05
FIG5_TRIALS = 2000
FIG5_M_MAX = 2000


def default_fig5_sizes(m_max: int = FIG5_M_MAX, n_points: int = 16) -> list[int]:
    """Log-spaced codebook sizes from 2 to m_max."""
    grid = np.unique(np.geomspace(2, m_max, n_points).round().astype(int))
    return [int(m) for m in grid]


def fig2_rows(dims=None, tau: float = FIG2_TAU,
              rho: float = math.radians(FIG2_RHO_DEG)):
    """Cap-volume packing bounds vs dimension, log10 scale."""
    if dims is None:
        dims = range(8, 513, 8)
    dims = [int(d) for d in dims]
    psi = math.acos(tau) + 2.0 * rho
    rows = []
    for d in dims:
        b = packing_bounds(d, psi)
        rows.append((d, b.log_lower / _LOG10, b.log_upper / _LOG10))
    config = {"figure": "fig2", "tau": tau, "rho": rho, "psi": psi,
              "dims": dims}
    return ["D", "log10_lower", "log10_upper"], rows, config


def fig3_rows(taus=None, rhos=None):
    """Rate lower-bound landscape over (tau, rho) plus both boundary curves."""
    if taus is None:
        taus = [round(0.05 * k, 2) for k in range(1, 20)]
    if rhos is None:
        rhos = [math.pi / 4.0 * k / 32.0 for k in range(33)]
    rows = []
    for tau in taus:
        for rho in rhos:
            p = rate_point(tau, rho)
            rows.append(("grid", p.tau, p.rho, p.psi, p.r_fixed, p.r_random,
                         p.region))
    for b in boundary_curves(taus):
        rows.append(("admissibility_boundary", b.tau, b.rho_admissibility,
                     None, None, None, None))
        if b.rho_positive_rate is not None:
            rows.append(("positive_rate_boundary", b.tau, b.rho_positive_rate,
                         None, None, None, None))
    config = {"figure": "fig3", "taus": list(taus), "rhos": list(rhos)}
    return ["kind", "tau", "rho", "psi", "r_fixed", "r_random", "region"], rows, config


def fig4_rows(taus=FIG4_TAUS, rhos=None):
    """Fixed- vs random-code rate lower bounds over rho, per threshold."""
    if rhos is None:
        rhos = [math.pi / 4.0 * k / 64.0 for k in range(65)]
    rows = []
    for tau in taus:
        for rho in rhos:
            p = rate_point(tau, rho)
            rows.append((p.tau, p.rho, p.psi, p.r_fixed, p.r_random, p.region))
    config = {"figure": "fig4", "taus": list(taus), "rhos": list(rhos)}
    return ["tau", "rho", "psi", "r_fixed", "r_random", "region"], rows, config


def fig5_rows(dims=FIG5_DIMS, rhos=FIG5_RHOS, taus=FIG5_TAUS,
              delta: float = FIG5_DELTA, trials: int = FIG5_TRIALS,
              sizes=None, seed: Seed | int = 0, threads: int = 1):
    """Separation-success curves vs codebook size for every configuration."""
    if sizes is None:
        sizes = default_fig5_sizes()
    if isinstance(seed, int):
        seed = Seed(seed)
    rows = []
    for d in dims:
        for tau in taus:
            for rho in rhos:
                for est in separation_profile(d, tau, rho, sizes, trials,
                                              seed, threads=threads):
                    rows.append((
                        d, tau, rho, est.psi, est.codebook_size, est.trials,
                        est.p_hat, est.std_err, est.union_lb, 1.0 - delta,
                    ))
    config = {
        "figure": "fig5", "dims": list(dims), "taus": list(taus),
        "rhos": list(rhos), "delta": delta, "trials": trials,
        "sizes": [int(m) for m in sizes], "seed": seed.master,
    }
    return ["D", "tau", "rho", "psi", "M", "trials", "p_hat", "std_err",
            "union_lb", "one_minus_delta"], rows, config
