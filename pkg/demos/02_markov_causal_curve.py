"""The price of causality for a source with memory.

For a Markov source the optimal noncausal code may look ahead; a causal
reproduction may not.  Tracing both curves shows the causal rate sitting
above the classical block rate at every distortion, with the gap growing as
the code is pushed toward fidelity.  The traced multiplier also matches the
local slope of the curve, which is the Lagrangian duality at work.
"""
import numpy as np

from causalrd import (
    binary_symmetric_markov,
    classical_block_rdf,
    full_joint_source,
    hamming_distortion,
    trace_curve,
)

N_STAGES = 4
src = binary_symmetric_markov(0.3, N_STAGES)
spec = hamming_distortion(src.alphabets)
mu = full_joint_source(src)

s_grid = [-float(x) for x in np.geomspace(0.5, 5.0, 12)]
curve = trace_curve(src, spec, s_grid, fp_tol=1e-11)

print(f"=== 0.3-flip binary Markov source, {N_STAGES} stages ===")
print(f"  {'s':>7} {'D':>10} {'causal R/n':>12} {'block R/n':>12} {'gap':>10}")
for p in curve.points:
    block = classical_block_rdf(mu, spec, p.distortion_per_symbol) / N_STAGES
    print(f"  {p.s:7.3f} {p.distortion_per_symbol:10.6f} "
          f"{p.rate_per_symbol_nats:12.8f} {block:12.8f} "
          f"{p.rate_per_symbol_nats - block:10.2e}")

print()
print(f"curve monotone: {curve.monotone_ok}   convex: {curve.convex_ok}   "
      f"worst slope error vs s: {curve.slope_worst_rel_err:.2%}")
print("Every causal point dominates the classical one (the causal feasible")
print("set is smaller), and the central-difference slope of R against total")
print("distortion recovers the multiplier s.")
