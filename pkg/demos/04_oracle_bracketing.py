"""Bracketing the solver between brute force and duality.

The grid oracle enumerates causal policies with rows on a simplex grid and
evaluates their Lagrangians directly from the measures; its minimum is an
upper bound on the true infimum that tightens as the grid refines.  The
solver's converged value must sit at or below every grid value, and the
oracle must close in on it from above.
"""
import time

from causalrd import (
    GridSpec,
    SolverConfig,
    binary_symmetric_markov,
    brute_force_lagrangian_min,
    fixed_point_solve,
    hamming_distortion,
    iid_source,
)

for name, src in (("fair IID binary", iid_source([0.5, 0.5], 2)),
                  ("0.3-flip Markov", binary_symmetric_markov(0.3, 2))):
    spec = hamming_distortion(src.alphabets)
    print(f"=== {name}, 2 stages, s = -2 ===")
    res = fixed_point_solve(src, spec, SolverConfig(s=-2.0, fp_tol=1e-11))
    solver_value = res.rate_nats + 2.0 * res.distortion_total
    print(f"  solver Lagrangian: {solver_value:.9f}")
    seed = None
    for resolution in (0.1, 0.05, 0.02, 0.01):
        t0 = time.perf_counter()
        value, seed = brute_force_lagrangian_min(src, spec, -2.0,
                                                 GridSpec(resolution=resolution),
                                                 seed_policy=seed)
        print(f"  grid {resolution:5.2f}: oracle {value:.9f}  "
              f"gap {value - solver_value:+.3e}  ({time.perf_counter() - t0:.1f}s)")
    print()

print("The gap is always nonnegative (a grid policy cannot beat the infimum)")
print("and shrinks roughly quadratically with the step, because the search")
print("is exhaustive over the decomposed problem and the objective is smooth")
print("around the optimum.")
