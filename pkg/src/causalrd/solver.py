"""Causal rate-distortion solver for nonstationary finite-alphabet sources.

The optimal reproduction kernels have the tilted form

    q_i(y_i | y^{i-1}, x^i)  ~  exp(s rho_i(x^i, y^i) - g_i(x^i, y^i)) nu_i(y_i | y^{i-1})

where the value tables g_i integrate out the future stages through a backward
recursion (g at the terminal stage is identically zero) and nu is the output
marginal process the policy itself induces.  The solver closes that system by
alternating the backward pass with the marginal update until nu is stable,
then evaluates the block rate in closed form and cross-checks it against the
directed information of the solved policy.

All exponentials are evaluated in log space with max shifting; rates are in
nats; ``s <= 0`` throughout.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy.special import logsumexp

from .errors import (
    DegenerateMarginalError,
    InternalConsistencyError,
    InvalidArgumentError,
)
from .measures import (
    MarginalProcess,
    directed_information,
    expected_distortion,
    joint_law,
    output_marginal,
)
from .model import CausalPolicy, DistortionSpec, SourceModel, full_joint_source

S_MAGNITUDE_CAP = 1e6


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------

class GTable:
    """Backward-recursion value tables, one per stage.

    ``tables[i]`` has shape ``(x_hist_size(i), y_hist_size(i))``; the terminal
    table is identically zero.
    """

    def __init__(self, alphabets, tables):
        self.alphabets = alphabets
        self.tables = tables

    def __getitem__(self, i):
        return self.tables[i]


@dataclass
class SolverConfig:
    """Fixed-point iteration parameters.

    ``s`` is the Lagrange multiplier (<= 0); ``nu_init`` is either the string
    "uniform" or a :class:`MarginalProcess` to start from; ``damping`` mixes
    the new marginal with the old one (1.0 = undamped).
    """
    s: float
    nu_init: Union[str, MarginalProcess] = "uniform"
    fp_tol: float = 1e-9
    max_sweeps: int = 10_000
    damping: float = 1.0

    def __post_init__(self):
        if self.s > 0:
            raise InvalidArgumentError("multiplier s must be <= 0")
        if self.fp_tol <= 0:
            raise InvalidArgumentError("fp_tol must be positive")
        if not 0.0 < self.damping <= 1.0:
            raise InvalidArgumentError("damping must be in (0, 1]")
        if self.max_sweeps < 1:
            raise InvalidArgumentError("max_sweeps must be >= 1")


@dataclass
class SolveResult:
    """Converged (or diagnostic) output of one fixed-point solve."""
    s: Optional[float]
    policy: Optional[CausalPolicy]
    nu: Optional[MarginalProcess]
    g: Optional[GTable]
    rate_nats: float
    distortion_total: float
    distortion_per_symbol: float
    sweeps_used: int
    converged: bool
    residual: float
    feasible: bool = True
    di_gap: float = 0.0

    @property
    def rate_per_symbol_nats(self) -> float:
        n = self.policy.alphabets.n_stages if self.policy is not None else 1
        return self.rate_nats / n


@dataclass
class CurvePoint:
    s: float
    distortion_per_symbol: float
    rate_total_nats: float
    rate_per_symbol_nats: float
    sweeps: int
    converged: bool
    residual: float
    error: Optional[str] = None


@dataclass
class RdCurve:
    """Points of a multiplier sweep, sorted by distortion, plus the outcomes
    of the monotonicity / convexity / slope checks.  ``results`` holds the
    full solve behind each point (None where the point failed), in the same
    order as ``points``."""
    points: list
    results: list = None
    monotone_ok: bool = True
    monotone_worst: float = 0.0
    convex_ok: bool = True
    convex_worst: float = 0.0
    slope_worst_rel_err: Optional[float] = None

    def __iter__(self):
        return iter(self.points)


# ---------------------------------------------------------------------------
# Backward recursion and tilted kernels
# ---------------------------------------------------------------------------

def _log_marginals(nu: MarginalProcess):
    out = []
    for t in nu.tables:
        if (t.sum(axis=1) <= 0).any():
            stage = len(out)
            bad = int(np.nonzero(t.sum(axis=1) <= 0)[0][0])
            raise DegenerateMarginalError(stage, bad, "marginal row has no mass")
        out.append(np.log(t, out=np.full_like(t, -np.inf), where=t > 0))
    return out


def _backward_pass(source: SourceModel, spec: DistortionSpec,
                   nu: MarginalProcess, s: float):
    """g tables and per-stage log normalizers logZ_i(x^i, y^{i-1})."""
    al = source.alphabets
    n = al.n_stages
    log_nu = _log_marginals(nu)
    g = [None] * n
    logz = [None] * n
    g[n - 1] = np.zeros((al.x_hist_size(n - 1), al.y_hist_size(n - 1)))
    for i in range(n - 1, -1, -1):
        sy = al.y_sizes[i]
        exponent = s * spec.stage_table(i) - g[i]
        e3 = exponent.reshape(al.x_hist_size(i), al.y_hist_size(i - 1), sy)
        logz[i] = logsumexp(e3 + log_nu[i][None, :, :], axis=2)
        if np.isneginf(logz[i]).any():
            xh, yh = np.nonzero(np.isneginf(logz[i]))
            raise DegenerateMarginalError(
                i, int(yh[0]),
                f"tilted normalizer vanished for x-history {int(xh[0])}")
        if i > 0:
            rows = source.stage_rows(i)          # (x_hist(i-1), |X_i|)
            z3 = logz[i].reshape(al.x_hist_size(i - 1), al.x_sizes[i],
                                 al.y_hist_size(i - 1))
            g[i - 1] = -np.einsum('ab,abc->ac', rows, z3)
    return g, logz


def backward_g(source: SourceModel, spec: DistortionSpec,
               nu: MarginalProcess, s: float) -> GTable:
    """Backward value tables for multiplier ``s`` under marginal process ``nu``.

    The recursion integrates, stage by stage from the end, the log of the
    tilted mass the next stage can reach, averaged over the next source
    symbol; the terminal table is zero.
    """
    if s > 0:
        raise InvalidArgumentError("multiplier s must be <= 0")
    g, _ = _backward_pass(source, spec, nu, s)
    return GTable(source.alphabets, g)


def tilted_policy(source: SourceModel, spec: DistortionSpec,
                  nu: MarginalProcess, g: GTable, s: float) -> CausalPolicy:
    """Optimal reproduction kernels for (nu, g, s): the exponentially tilted
    marginal, normalized per (y-history, x-history) row.

    Adding any x-history-dependent constant to a g table leaves the result
    unchanged (the normalizer absorbs it); at the terminal stage g is zero and
    the kernel reduces to the pure single-stage tilt.
    """
    al = source.alphabets
    log_nu = _log_marginals(nu)
    ks = []
    for i in range(al.n_stages):
        sy = al.y_sizes[i]
        exponent = s * spec.stage_table(i) - g[i]
        e3 = exponent.reshape(al.x_hist_size(i), al.y_hist_size(i - 1), sy)
        w = e3 + log_nu[i][None, :, :]
        z = logsumexp(w, axis=2)
        if np.isneginf(z).any():
            xh, yh = np.nonzero(np.isneginf(z))
            raise DegenerateMarginalError(
                i, int(yh[0]),
                f"tilted normalizer vanished for x-history {int(xh[0])}")
        q = np.exp(w - z[:, :, None])
        q /= q.sum(axis=2, keepdims=True)
        ks.append(np.swapaxes(q, 0, 1).copy())    # (y_hist(i-1), x_hist(i), sy)
    return CausalPolicy(al, ks, validate=False)


def marginal_update(source: SourceModel, policy: CausalPolicy) -> MarginalProcess:
    """Output marginal process induced by the source and a policy (the
    consistency map whose fixed point the solver seeks)."""
    return output_marginal(joint_law(full_joint_source(source), policy))


# ---------------------------------------------------------------------------
# Zero-rate endpoint
# ---------------------------------------------------------------------------

def _x_prefix_marginals(source: SourceModel):
    """P(x^i) for every stage, as dense vectors."""
    al = source.alphabets
    out = []
    cur = source.kernels[0][0]
    out.append(cur)
    for i in range(1, al.n_stages):
        cur = (cur[:, None] * source.stage_rows(i)).reshape(-1)
        out.append(cur)
    return out


def d_max_policy(source: SourceModel, spec: DistortionSpec):
    """Best source-blind reproduction: the deterministic trajectory minimizing
    expected distortion, its per-symbol value, and the policy emitting it.

    This is the distortion at which the rate-distortion curve hits zero.
    """
    al = source.alphabets
    px = _x_prefix_marginals(source)
    acc = np.zeros(al.y_trajectories())
    for i in range(al.n_stages):
        term = px[i] @ spec.stage_table(i)                  # (y_hist(i),)
        ydiv = math.prod(al.y_sizes[i + 1:])
        acc += term[np.arange(al.y_trajectories()) // ydiv]
    best = int(np.argmin(acc))                               # ties -> lowest code
    symbols = []
    code = best
    for c in reversed(al.y_sizes):
        symbols.append(code % c)
        code //= c
    symbols.reverse()
    policy = CausalPolicy.constant(al, symbols)
    return float(acc[best]) / al.n_stages, policy


def min_achievable_distortion(source: SourceModel, spec: DistortionSpec) -> float:
    """Per-symbol distortion floor over all causal policies (deterministic
    dynamic program; the s -> -inf limit of the solver)."""
    al = source.alphabets
    n = al.n_stages
    v = np.zeros((al.x_hist_size(n - 1), al.y_hist_size(n - 1)))
    for i in range(n - 1, -1, -1):
        sy = al.y_sizes[i]
        total = spec.stage_table(i) + v
        best = total.reshape(al.x_hist_size(i), al.y_hist_size(i - 1), sy).min(axis=2)
        if i == 0:
            v0 = best[:, 0]
            return float(source.kernels[0][0] @ v0) / n
        rows = source.stage_rows(i)
        b3 = best.reshape(al.x_hist_size(i - 1), al.x_sizes[i], al.y_hist_size(i - 1))
        v = np.einsum('ab,abc->ac', rows, b3)
    raise AssertionError("unreachable")


# ---------------------------------------------------------------------------
# Fixed point
# ---------------------------------------------------------------------------

def fixed_point_solve(source: SourceModel, spec: DistortionSpec,
                      config: SolverConfig) -> SolveResult:
    """Solve the stationary system (backward pass -> tilted kernels -> induced
    marginal) at fixed multiplier ``config.s``.

    At ``s = 0`` every source-blind policy is stationary; the canonical
    representative returned is the distortion-minimizing one (the limit of the
    s -> 0 optimizers), so the reported point is the curve endpoint
    (D_max, 0).  Non-convergence is reported in the result, not raised.
    """
    al = source.alphabets
    mu = full_joint_source(source)
    s = float(config.s)

    if s == 0.0:
        dmax, policy = d_max_policy(source, spec)
        nu = marginal_update(source, policy)
        n = al.n_stages
        g = GTable(al, [np.zeros((al.x_hist_size(i), al.y_hist_size(i)))
                        for i in range(n)])
        return SolveResult(s=0.0, policy=policy, nu=nu, g=g, rate_nats=0.0,
                           distortion_total=dmax * n, distortion_per_symbol=dmax,
                           sweeps_used=1, converged=True, residual=0.0)

    if config.nu_init == "uniform":
        nu = MarginalProcess.uniform(al)
    elif isinstance(config.nu_init, MarginalProcess):
        nu = config.nu_init
    else:
        raise InvalidArgumentError("nu_init must be 'uniform' or a MarginalProcess")

    lam = config.damping
    residual = math.inf
    converged = False
    sweeps = 0
    for sweeps in range(1, config.max_sweeps + 1):
        g_tabs, logz = _backward_pass(source, spec, nu, s)
        policy = _tilted_from_pass(al, spec, nu, g_tabs, logz, s)
        nu_new = marginal_update(source, policy)
        reachable = [m > 0 for m in nu_new.prefix_mass]
        mixed = [(1.0 - lam) * a + lam * b
                 for a, b in zip(nu.tables, nu_new.tables)]
        nxt = MarginalProcess(al, mixed, prefix_mass=nu_new.prefix_mass)
        residual = nxt.sup_distance(nu, reachable=reachable)
        nu = nxt
        if residual <= config.fp_tol:
            converged = True
            break

    g_tabs, logz = _backward_pass(source, spec, nu, s)
    policy = _tilted_from_pass(al, spec, nu, g_tabs, logz, s)
    g = GTable(al, g_tabs)
    dist = expected_distortion(mu, policy, spec)
    rate, gap = _closed_form_rate(source, spec, policy, nu, g_tabs, logz, s,
                                  dist.total, mu,
                                  check=converged)
    return SolveResult(s=s, policy=policy, nu=nu, g=g, rate_nats=rate,
                       distortion_total=dist.total,
                       distortion_per_symbol=dist.per_symbol,
                       sweeps_used=sweeps, converged=converged,
                       residual=residual, di_gap=gap)


def _tilted_from_pass(al, spec, nu, g_tabs, logz, s) -> CausalPolicy:
    """Tilted kernels reusing the normalizers of a backward pass."""
    log_nu = _log_marginals(nu)
    ks = []
    for i in range(al.n_stages):
        sy = al.y_sizes[i]
        exponent = s * spec.stage_table(i) - g_tabs[i]
        e3 = exponent.reshape(al.x_hist_size(i), al.y_hist_size(i - 1), sy)
        w = e3 + log_nu[i][None, :, :]
        q = np.exp(w - logz[i][:, :, None])
        q /= q.sum(axis=2, keepdims=True)
        ks.append(np.swapaxes(q, 0, 1).copy())
    return CausalPolicy(al, ks, validate=False)


def _closed_form_rate(source, spec, policy, nu, g_tabs, logz, s,
                      distortion_total, mu, check=True,
                      check_tol=1e-6):
    """Closed-form block rate s*D_total - sum_i E[g_i + log Z_i], plus the
    gap to the directed information of the solved policy."""
    al = source.alphabets
    n = al.n_stages
    total = 0.0
    w = source.kernels[0][0][:, None]            # weights over (x^i, y^{i-1})
    for i in range(n):
        sy = al.y_sizes[i]
        q = np.swapaxes(policy.kernels[i], 0, 1)     # (x_hist(i), y_hist(i-1), sy)
        g3 = g_tabs[i].reshape(al.x_hist_size(i), al.y_hist_size(i - 1), sy)
        bracket = np.einsum('abc,abc->ab', q, g3) + logz[i]
        total += float(np.sum(w * bracket))
        if i < n - 1:
            joint_i = (w[:, :, None] * q).reshape(al.x_hist_size(i),
                                                  al.y_hist_size(i))
            rows = source.stage_rows(i + 1)          # (x_hist(i), |X_{i+1}|)
            w = np.einsum('ab,ac->acb', joint_i, rows).reshape(
                al.x_hist_size(i + 1), al.y_hist_size(i))
    rate = s * distortion_total - total
    if -1e-9 < rate < 0.0:
        rate = 0.0
    gap = abs(rate - directed_information(mu, policy))
    if check and gap > check_tol:
        raise InternalConsistencyError(
            f"closed-form rate and directed information differ by {gap:.3e} "
            f"(tolerance {check_tol:.1e}); the fixed point looks broken")
    return rate, gap


def rdf_value(source: SourceModel, spec: DistortionSpec, policy: CausalPolicy,
              nu: MarginalProcess, g: GTable, s: float,
              distortion_total: Optional[float] = None) -> float:
    """Block rate in closed form at a converged fixed point.

    Cross-checks the value against the directed information of the policy
    (they coincide at an exact fixed point) and raises
    :class:`InternalConsistencyError` beyond 1e-6.
    """
    mu = full_joint_source(source)
    if distortion_total is None:
        distortion_total = expected_distortion(mu, policy, spec).total
    _, logz = _backward_pass(source, spec, nu, s)
    rate, _ = _closed_form_rate(source, spec, policy, nu, g.tables, logz, s,
                                distortion_total, mu, check=True)
    return rate


# ---------------------------------------------------------------------------
# Distortion-target solves and curve tracing
# ---------------------------------------------------------------------------

def solve_for_target_distortion(source: SourceModel, spec: DistortionSpec,
                                d_target: float,
                                fp_tol: float = 1e-9,
                                max_sweeps: int = 10_000,
                                damping: float = 1.0,
                                dist_tol: float = 1e-6) -> SolveResult:
    """Solve at a per-symbol distortion target by bisecting the multiplier.

    The multiplier bracket is grown by doubling from -1 until the achieved
    distortion falls below the target (capped at |s| = 1e6), then bisected
    until the achieved per-symbol distortion is within ``dist_tol``.  Targets
    at or above the zero-rate distortion return the s = 0 endpoint; targets
    below the achievable floor return an infeasible sentinel with rate +inf.
    """
    if d_target < 0:
        raise InvalidArgumentError("d_target must be >= 0")

    def solve_at(s):
        return fixed_point_solve(source, spec,
                                 SolverConfig(s=s, fp_tol=fp_tol,
                                              max_sweeps=max_sweeps,
                                              damping=damping))

    endpoint = solve_at(0.0)
    if d_target >= endpoint.distortion_per_symbol - 1e-12:
        return endpoint

    floor = min_achievable_distortion(source, spec)
    if d_target < floor - 1e-12:
        return SolveResult(s=None, policy=None, nu=None, g=None,
                           rate_nats=math.inf, distortion_total=floor *
                           source.alphabets.n_stages,
                           distortion_per_symbol=floor, sweeps_used=0,
                           converged=True, residual=0.0, feasible=False)

    s_lo = -1.0
    low = solve_at(s_lo)
    if not low.converged:
        return low
    while low.distortion_per_symbol > d_target:
        s_lo *= 2.0
        if -s_lo > S_MAGNITUDE_CAP:
            break
        low = solve_at(s_lo)
        if not low.converged:
            return low

    best = low
    lo, hi = s_lo, 0.0
    for _ in range(200):
        if abs(best.distortion_per_symbol - d_target) <= dist_tol:
            break
        mid = 0.5 * (lo + hi)
        probe = solve_at(mid)
        if not probe.converged:
            return probe
        if probe.distortion_per_symbol >= d_target:
            hi = mid
        else:
            lo = mid
        if (abs(probe.distortion_per_symbol - d_target)
                < abs(best.distortion_per_symbol - d_target)):
            best = probe
    return best


def trace_curve(source: SourceModel, spec: DistortionSpec,
                s_values: Sequence[float],
                fp_tol: float = 1e-9, max_sweeps: int = 10_000,
                damping: float = 1.0) -> RdCurve:
    """One fixed-point solve per multiplier; points sorted by distortion with
    monotonicity, convexity and slope diagnostics.

    Per-point failures are recorded on the point rather than raised.
    """
    if len(s_values) == 0:
        raise InvalidArgumentError("s_values must be nonempty")
    n = source.alphabets.n_stages
    pts = []
    for s in s_values:
        try:
            r = fixed_point_solve(source, spec,
                                  SolverConfig(s=float(s), fp_tol=fp_tol,
                                               max_sweeps=max_sweeps,
                                               damping=damping))
            pts.append((CurvePoint(float(s), r.distortion_per_symbol,
                                   r.rate_nats, r.rate_nats / n, r.sweeps_used,
                                   r.converged, r.residual), r))
        except Exception as exc:       # record, do not abort the sweep
            pts.append((CurvePoint(float(s), math.nan, math.nan, math.nan,
                                   0, False, math.nan, error=str(exc)), None))
    pts.sort(key=lambda pr: (pr[0].distortion_per_symbol, pr[0].s))
    curve = RdCurve(points=[p for p, _ in pts], results=[r for _, r in pts])
    _check_curve(curve, n)
    return curve


def _check_curve(curve: RdCurve, n_stages: int, tol: float = 1e-9):
    good = [p for p in curve.points if p.converged and math.isfinite(p.rate_total_nats)]
    for a, b in zip(good, good[1:]):
        drop = b.rate_total_nats - a.rate_total_nats
        if drop > curve.monotone_worst:
            curve.monotone_worst = drop
    curve.monotone_ok = curve.monotone_worst <= tol
    for a, b, c in zip(good, good[1:], good[2:]):
        da, db, dc = (p.distortion_per_symbol for p in (a, b, c))
        if dc - da < 1e-12:
            continue
        t = (db - da) / (dc - da)
        chord = (1 - t) * a.rate_total_nats + t * c.rate_total_nats
        excess = b.rate_total_nats - chord
        if excess > curve.convex_worst:
            curve.convex_worst = excess
    curve.convex_ok = curve.convex_worst <= tol
    rel = []
    for a, b, c in zip(good, good[1:], good[2:]):
        dd = (c.distortion_per_symbol - a.distortion_per_symbol) * n_stages
        if abs(dd) < 1e-12 or b.s == 0.0:
            continue
        slope = (c.rate_total_nats - a.rate_total_nats) / dd
        rel.append(abs(slope - b.s) / abs(b.s))
    curve.slope_worst_rel_err = max(rel) if rel else None


def rate_limit_estimate(source_family: Callable[[int], SourceModel],
                        spec_family, d_target: float,
                        horizons: Sequence[int], **solver_kwargs) -> list:
    """Per-symbol rates of the target-distortion solve across horizons.

    ``spec_family`` is either a DistortionSpec factory ``horizon -> spec`` or
    a single-letter table reused at every horizon.  The trend is reported, not
    asserted.
    """
    if list(horizons) != sorted(horizons):
        raise InvalidArgumentError("horizons must be ascending")
    rates = []
    for h in horizons:
        src = source_family(int(h))
        spec = (spec_family(int(h)) if callable(spec_family)
                else DistortionSpec.single_letter(src.alphabets, spec_family))
        res = solve_for_target_distortion(src, spec, d_target, **solver_kwargs)
        rates.append(res.rate_nats / src.alphabets.n_stages)
    return rates


# ---------------------------------------------------------------------------
# First-order optimality
# ---------------------------------------------------------------------------

def lagrangian_value(source: SourceModel, spec: DistortionSpec,
                     policy: CausalPolicy, s: float) -> float:
    """I(X -> Y) - s * total distortion, evaluated through the measures."""
    mu = full_joint_source(source)
    return (directed_information(mu, policy)
            - s * expected_distortion(mu, policy, spec).total)


def verify_stationarity(source: SourceModel, spec: DistortionSpec,
                        result: SolveResult, n_perturbations: int = 100,
                        epsilon: float = 1e-3, seed: int = 0) -> float:
    """Largest Lagrangian decrease over random feasible kernel perturbations.

    Directions are per-stage rows redrawn uniformly on the simplex; the probe
    policy is q* + epsilon (q_random - q*).  At a first-order optimum the
    returned value is nonpositive up to o(epsilon).
    """
    if result.policy is None:
        raise InvalidArgumentError("result carries no policy")
    rng = np.random.default_rng(seed)
    al = source.alphabets
    base = lagrangian_value(source, spec, result.policy, result.s)
    worst = -math.inf
    for _ in range(n_perturbations):
        ks = []
        for i, k in enumerate(result.policy.kernels):
            rand = rng.dirichlet(np.ones(k.shape[-1]), size=k.shape[:-1])
            ks.append((1.0 - epsilon) * k + epsilon * rand)
        probe = CausalPolicy(al, ks, validate=False)
        worst = max(worst, base - lagrangian_value(source, spec, probe, result.s))
    return worst if n_perturbations else 0.0
