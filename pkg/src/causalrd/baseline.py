"""Classical (noncausal) rate-distortion references via Blahut-Arimoto.

Used as the block-level dominance oracle and as the single-stage equivalence
check for the causal solver.  Everything is parametric in the multiplier
``s <= 0`` (slope of the rate-distortion curve, rates in nats).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .errors import InvalidArgumentError
from .model import DistortionSpec

S_MAGNITUDE_CAP = 1e6


@dataclass
class BaPoint:
    """One parametric point of a Blahut-Arimoto sweep."""
    s: float
    rate_nats: float
    distortion: float
    iterations: int
    converged: bool


def _argmin_reproduction(px: np.ndarray, rho: np.ndarray):
    """Best source-blind reproduction symbol and its expected distortion."""
    col = px @ rho
    y = int(np.argmin(col))        # ties -> lowest index
    return y, float(col[y])


def blahut_arimoto(px, rho, s: float, tol: float = 1e-11,
                   max_iters: int = 500_000) -> BaPoint:
    """Parametric Blahut-Arimoto point at multiplier ``s``.

    Alternates the tilted conditional q(y|x) ~ nu(y) exp(s rho(x,y)) with the
    output marginal update until the marginal is stable in sup norm.  At
    ``s = 0`` the zero-tilt family is degenerate and the distortion-minimizing
    source-blind reproduction (rate 0) is returned.
    """
    px = np.asarray(px, dtype=float)
    rho = np.asarray(rho, dtype=float)
    if px.ndim != 1 or rho.shape[0] != px.shape[0]:
        raise InvalidArgumentError("px and rho have inconsistent shapes")
    if (px < 0).any() or abs(px.sum() - 1.0) > 1e-10:
        raise InvalidArgumentError("px is not a probability vector")
    if not np.isfinite(rho).all() or (rho < 0).any():
        raise InvalidArgumentError("rho must be finite and nonnegative")
    if s > 0:
        raise InvalidArgumentError("multiplier s must be <= 0")

    if s == 0.0:
        _, dmin = _argmin_reproduction(px, rho)
        return BaPoint(0.0, 0.0, dmin, 1, True)

    ny = rho.shape[1]
    ln_px = np.log(px, out=np.full_like(px, -np.inf), where=px > 0)
    ln_nu = np.full(ny, -math.log(ny))
    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        w = s * rho + ln_nu[None, :]
        ln_q = w - logsumexp(w, axis=1, keepdims=True)
        ln_nu_new = logsumexp(ln_px[:, None] + ln_q, axis=0)
        delta = float(np.max(np.abs(np.exp(ln_nu_new) - np.exp(ln_nu))))
        ln_nu = ln_nu_new
        if delta <= tol:
            converged = True
            break

    w = s * rho + ln_nu[None, :]
    ln_z = logsumexp(w, axis=1)
    q = np.exp(w - ln_z[:, None])
    dist = float(np.sum(px[:, None] * q * rho))
    rate = s * dist - float(px @ ln_z)
    return BaPoint(s, max(rate, 0.0), dist, it, converged)


def classical_block_rdf(mu, spec: DistortionSpec, d_target: float,
                        dist_tol: float = 1e-9, ba_tol: float = 1e-12) -> float:
    """Classical block rate (total nats) at per-symbol distortion ``d_target``.

    Runs Blahut-Arimoto on the trajectory super-alphabets with the
    stage-summed distortion, bisecting the multiplier until the achieved
    distortion brackets the target, then evaluates the supporting line at the
    exact target (second-order accurate on the convex curve).

    Returns 0 for targets at or above the zero-rate distortion and ``inf``
    for targets below the minimum achievable distortion.
    """
    mu = np.asarray(mu, dtype=float)
    al = spec.alphabets
    n = al.n_stages
    if mu.shape != (al.x_trajectories(),):
        raise InvalidArgumentError("mu does not match the trajectory alphabet")
    if d_target < 0:
        raise InvalidArgumentError("d_target must be >= 0")
    dmat = spec.total_table()      # budget-guarded
    target_total = d_target * n

    _, dmax_total = _argmin_reproduction(mu, dmat)
    if target_total >= dmax_total - 1e-12:
        return 0.0
    dmin_total = float(mu @ dmat.min(axis=1))
    if target_total < dmin_total - 1e-12:
        return math.inf

    def probe(s):
        return blahut_arimoto(mu, dmat, s, tol=ba_tol)

    s_lo = -1.0
    point_lo = probe(s_lo)
    while point_lo.distortion > target_total:
        s_lo *= 2.0
        if -s_lo > S_MAGNITUDE_CAP:
            return math.inf
        point_lo = probe(s_lo)

    lo, hi = s_lo, 0.0
    best = point_lo
    for _ in range(200):
        if abs(best.distortion - target_total) <= dist_tol:
            break
        mid = 0.5 * (lo + hi)
        point = probe(mid)
        if point.distortion >= target_total:
            hi = mid
        else:
            lo = mid
        if abs(point.distortion - target_total) < abs(best.distortion - target_total):
            best = point
    # supporting line through the solved point, evaluated at the target
    rate = best.rate_nats + best.s * (target_total - best.distortion)
    return max(rate, 0.0)
