"""Brownian baseline: Monte Carlo estimates against Gaussian closed forms.

With zero drift and identity diffusion the process is a standard Brownian
motion, so everything downstream has a closed form: moments and the moment
generating function of X_T, the terminal density, and even the coupling
weights (which are exactly lognormal).  This script runs the estimators on
that case and prints each estimate next to its oracle, which is the cheapest
way to convince yourself the machinery is wired correctly before moving to
irregular drifts.

Run from the repository root:

    python demos/01_brownian_baseline.py
"""

import math
import os

import numpy as np
from scipy.stats import norm

from harnack_lab import (
    CouplingKind,
    DiffusionSpec,
    TestFunction,
    TimeGrid,
    ZeroDrift,
    density_histogram,
    mc_semigroup,
    weight_moment,
)
from harnack_lab.svg import line_plot

OUT = os.path.join(os.path.dirname(__file__), "out")


def show(label, estimate, oracle):
    gap = abs(estimate.mean - oracle)
    flag = "ok" if gap < 3.0 * estimate.stderr else "OFF"
    print(f"  {label:<28s} {estimate.mean:9.5f}  oracle {oracle:9.5f}  "
          f"[{flag}, 3 stderr = {3 * estimate.stderr:.5f}]")


def main():
    os.makedirs(OUT, exist_ok=True)
    drift = ZeroDrift(dim_d=1, p_exponent=4.0, q_exponent=4.0)
    diff = DiffusionSpec.identity(1, delta=1.01)
    T, grid, n, seed = 1.0, TimeGrid(1.0, 16), 200_000, 1

    print("Moments of X_T for X_t = W_t started at x = 0.2:")
    x = [0.2]
    show("E[X_T]", mc_semigroup(TestFunction.coordinate(0), drift, diff, x,
                                T, n, grid, seed), 0.2)
    show("E[X_T^2]", mc_semigroup(TestFunction.square(0), drift, diff, x,
                                  T, n, grid, seed), 0.2 ** 2 + T)
    show("E[e^{X_T/2}]", mc_semigroup(TestFunction.exponential([0.5]), drift,
                                      diff, x, T, n, grid, seed),
         math.exp(0.5 * 0.2 + 0.125))

    print("\nCoupling weight moments (exactly lognormal for zero drift):")
    print("  E[R^r] = exp(r (r-1) |x-y|^2 / (2T)) with r = p/(p-1)")
    for p in (1.5, 2.0, 4.0):
        r = p / (p - 1.0)
        oracle = math.exp(r * (r - 1.0) * 0.09 / (2.0 * T))
        est = weight_moment(CouplingKind.HARNACK, drift, diff, [0.3], [0.0],
                            T, p, n, grid, seed)
        show(f"p = {p:g} (r = {r:g})", est, oracle)

    print("\nTerminal density vs the standard normal (10^6 samples):")
    hist = density_histogram(drift, diff, [0.0], T, 1_000_000, bins=100,
                             grid=grid, seed=seed)
    centers = 0.5 * (hist.edges[:-1] + hist.edges[1:])
    sup_gap = float(np.max(np.abs(hist.density - norm.pdf(centers))))
    print(f"  sup distance over bin centers: {sup_gap:.4f} (tolerance 0.02)")

    path = os.path.join(OUT, "brownian_density.svg")
    line_plot(path,
              {"histogram": (centers, hist.density),
               "N(0,1) density": (centers, norm.pdf(centers))},
              x_label="x", y_label="density",
              title="Terminal density of Brownian motion at T = 1")
    print(f"  wrote {path}")


if __name__ == "__main__":
    main()
