"""Joint, marginal and product laws induced by a source and a causal policy,
plus the information functionals defined on them.

All information quantities are returned in nats.  The conventions throughout:
``0 * log 0 = 0``, cells with zero joint mass contribute nothing, and
conditioning events with probability below ``COND_EPS`` are excluded from
conditional-independence residuals.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import InvalidArgumentError
from .model import CausalPolicy, DistortionSpec, StageAlphabets

COND_EPS = 1e-12
MASS_TOL = 1e-10


# ---------------------------------------------------------------------------
# Laws
# ---------------------------------------------------------------------------

@dataclass
class JointLaw:
    """Dense joint law over trajectory pairs, indexed (x-code, y-code)."""
    alphabets: StageAlphabets
    table: np.ndarray

    def __post_init__(self):
        want = (self.alphabets.x_trajectories(), self.alphabets.y_trajectories())
        if self.table.shape != want:
            raise InvalidArgumentError(
                f"joint table shape {self.table.shape}, expected {want}")
        if (self.table < -COND_EPS).any():
            raise InvalidArgumentError("joint table has negative entries")
        if abs(float(self.table.sum()) - 1.0) > MASS_TOL:
            raise InvalidArgumentError(
                f"joint table mass {self.table.sum():.12g} is not 1 within {MASS_TOL}")

    def tensor(self) -> np.ndarray:
        """View reshaped to one axis per stage variable (x stages then y stages)."""
        al = self.alphabets
        return self.table.reshape(*al.x_sizes, *al.y_sizes)


class MarginalProcess:
    """Output conditional marginals nu_i(y_i | y^{i-1}).

    ``tables[i]`` has shape ``(y_hist_size(i-1), y_sizes[i])``; rows for
    unreachable histories are filled uniform by convention.  When built from
    a joint law, ``prefix_mass[i]`` holds P(y^{i-1}) so callers can tell
    reachable rows apart.
    """

    def __init__(self, alphabets: StageAlphabets, tables, prefix_mass=None):
        self.alphabets = alphabets
        n = alphabets.n_stages
        if len(tables) != n:
            raise InvalidArgumentError(f"need {n} marginal tables, got {len(tables)}")
        ts = []
        for i, t in enumerate(tables):
            t = np.asarray(t, dtype=float)
            want = (alphabets.y_hist_size(i - 1), alphabets.y_sizes[i])
            if t.shape != want:
                raise InvalidArgumentError(
                    f"marginal table {i} has shape {t.shape}, expected {want}")
            ts.append(t)
        self.tables = ts
        self.prefix_mass = prefix_mass

    @classmethod
    def uniform(cls, alphabets: StageAlphabets):
        ts = [np.full((alphabets.y_hist_size(i - 1), alphabets.y_sizes[i]),
                      1.0 / alphabets.y_sizes[i])
              for i in range(alphabets.n_stages)]
        return cls(alphabets, ts)

    def chain_vector(self) -> np.ndarray:
        """prod_i nu_i(y_i | y^{i-1}) as a dense vector over y-trajectory codes."""
        v = self.tables[0][0]
        for i in range(1, self.alphabets.n_stages):
            v = (v[:, None] * self.tables[i]).reshape(-1)
        return v

    def sup_distance(self, other: "MarginalProcess", reachable=None) -> float:
        """Sup-norm difference across rows; restricted to reachable rows when
        ``reachable`` (list of boolean masks per stage) is given."""
        worst = 0.0
        for i, (a, b) in enumerate(zip(self.tables, other.tables)):
            d = np.abs(a - b)
            if reachable is not None:
                if not reachable[i].any():
                    continue
                d = d[reachable[i]]
            if d.size:
                worst = max(worst, float(d.max()))
        return worst


# ---------------------------------------------------------------------------
# Construction
# ---------------------------------------------------------------------------

def causal_channel_table(policy: CausalPolicy) -> np.ndarray:
    """Dense Q(y^n | x^n) = prod_i q_i(y_i | y^{i-1}, x^i) over trajectory codes."""
    al = policy.alphabets
    t = policy.kernels[0][0]                       # (x_hist(0), sy0)
    for i in range(1, al.n_stages):
        xh = al.x_hist_size(i - 1)
        yh = al.y_hist_size(i - 1)
        sx, sy = al.x_sizes[i], al.y_sizes[i]
        q = policy.kernels[i].reshape(yh, xh, sx, sy)
        t = np.einsum('ab,bacd->acbd', t, q).reshape(xh * sx, yh * sy)
    return t


def joint_law(mu: np.ndarray, policy: CausalPolicy) -> JointLaw:
    """Joint law mu tensor Q over trajectory pairs.

    ``mu`` is the dense source trajectory law (see
    :func:`causalrd.model.full_joint_source`).
    """
    al = policy.alphabets
    mu = np.asarray(mu, dtype=float)
    if mu.shape != (al.x_trajectories(),):
        raise InvalidArgumentError(
            f"source law has shape {mu.shape}, expected ({al.x_trajectories()},)")
    q = causal_channel_table(policy)
    return JointLaw(al, mu[:, None] * q)


def output_marginal(joint: JointLaw) -> MarginalProcess:
    """Conditional marginals nu_i(y_i | y^{i-1}) of the joint's y-trajectory law.

    Rows are computed as within-block proportions so every reachable row sums
    to 1 exactly; unreachable rows are uniform.
    """
    al = joint.alphabets
    py = joint.table.sum(axis=0)
    tables, masses = [], []
    for i in range(al.n_stages - 1, -1, -1):
        sy = al.y_sizes[i]
        blocks = py.reshape(al.y_hist_size(i - 1), sy)
        parent = blocks.sum(axis=1)
        rows = np.full_like(blocks, 1.0 / sy)
        reach = parent > 0
        rows[reach] = blocks[reach] / parent[reach, None]
        tables.append(rows)
        masses.append(parent)
        py = parent
    tables.reverse()
    masses.reverse()
    return MarginalProcess(al, tables, prefix_mass=masses)


def policy_from_marginals(nu: MarginalProcess) -> CausalPolicy:
    """Source-independent policy q_i(y_i | y^{i-1}, x^i) := nu_i(y_i | y^{i-1})."""
    al = nu.alphabets
    ks = [np.broadcast_to(t[:, None, :],
                          (t.shape[0], al.x_hist_size(i), t.shape[1])).copy()
          for i, t in enumerate(nu.tables)]
    return CausalPolicy(al, ks, validate=False)


def mix_policies(a: CausalPolicy, b: CausalPolicy, lam: float) -> CausalPolicy:
    """Convex combination lam*Q_a + (1-lam)*Q_b of the joint causal kernels,
    refactored into per-stage kernels.

    Mixing happens at the level of Q(y^n | x^n); the per-stage kernels of the
    mixture are conditional ratios of the mixed prefix channels, not convex
    combinations of the per-stage kernels.
    """
    al = a.alphabets
    if not 0.0 <= lam <= 1.0:
        raise InvalidArgumentError("lam must be in [0, 1]")
    if al != b.alphabets:
        raise InvalidArgumentError("policies must share alphabets")

    ks = []
    prev = None      # mixed prefix channel M_{i-1}(x^{i-1}; y^{i-1})
    ta = a.kernels[0][0]
    tb = b.kernels[0][0]
    cur_a, cur_b = ta, tb
    for i in range(al.n_stages):
        if i > 0:
            xh = al.x_hist_size(i - 1)
            yh = al.y_hist_size(i - 1)
            sx, sy = al.x_sizes[i], al.y_sizes[i]
            qa = a.kernels[i].reshape(yh, xh, sx, sy)
            qb = b.kernels[i].reshape(yh, xh, sx, sy)
            cur_a = np.einsum('ab,bacd->acbd', cur_a, qa).reshape(xh * sx, yh * sy)
            cur_b = np.einsum('ab,bacd->acbd', cur_b, qb).reshape(xh * sx, yh * sy)
        mix = lam * cur_a + (1.0 - lam) * cur_b    # (x_hist(i), y_hist(i))
        sy = al.y_sizes[i]
        num = mix.reshape(al.x_hist_size(i), al.y_hist_size(i - 1), sy)
        if prev is None:
            den = np.ones((al.x_hist_size(i), al.y_hist_size(i - 1)))
        else:
            parent = np.arange(al.x_hist_size(i)) // al.x_sizes[i]
            den = prev[parent]                     # (x_hist(i), y_hist(i-1))
        k = np.full((al.y_hist_size(i - 1), al.x_hist_size(i), sy), 1.0 / sy)
        ok = den > 0
        ratio = np.zeros_like(num)
        ratio[ok] = num[ok] / den[ok][:, None]
        k[:, :, :] = np.where(ok.T[:, :, None], np.swapaxes(ratio, 0, 1), k)
        ks.append(k)
        prev = mix
    return CausalPolicy(al, ks, validate=False)


# ---------------------------------------------------------------------------
# Information functionals
# ---------------------------------------------------------------------------

def directed_information(mu: np.ndarray, policy: CausalPolicy) -> float:
    """Directed information from the source block to the reproduction block.

    Computed as sum over trajectory pairs of
    joint * log(Q(y^n|x^n) / prod_i nu_i(y_i|y^{i-1})) with the output
    marginals induced by (mu, policy); equals the relative entropy between
    the joint law and the product of the source law with the output process.
    """
    al = policy.alphabets
    q = causal_channel_table(policy)
    mu = np.asarray(mu, dtype=float)
    joint = JointLaw(al, mu[:, None] * q)
    nu = output_marginal(joint)
    chain = nu.chain_vector()
    log_chain = np.log(chain, out=np.full_like(chain, -np.inf), where=chain > 0)
    j = joint.table
    mask = j > 0
    log_q = np.log(q, out=np.full_like(q, -np.inf), where=q > 0)
    val = float(np.sum(j[mask] * (log_q[mask] - np.broadcast_to(log_chain, j.shape)[mask])))
    return max(val, 0.0)


def mutual_information(joint: JointLaw) -> float:
    """Block mutual information I(X^n; Y^n) of a joint trajectory law, in nats."""
    j = joint.table
    px = j.sum(axis=1)
    py = j.sum(axis=0)
    mask = j > 0
    outer = px[:, None] * py[None, :]
    val = float(np.sum(j[mask] * (np.log(j[mask]) - np.log(outer[mask]))))
    return max(val, 0.0)


class DistortionValue(NamedTuple):
    total: float
    per_symbol: float


def expected_distortion(mu: np.ndarray, policy: CausalPolicy,
                        spec: DistortionSpec) -> DistortionValue:
    """Expected additive distortion under mu tensor Q: the stage-summed total
    and the per-symbol value total / n_stages."""
    al = policy.alphabets
    joint = joint_law(mu, policy)
    d = spec.total_table()
    total = float(np.sum(joint.table * d))
    return DistortionValue(total, total / al.n_stages)


# ---------------------------------------------------------------------------
# Markov-chain (conditional-independence) checks
# ---------------------------------------------------------------------------

def _ci_residual(t: np.ndarray) -> float:
    """Max |P(a,b|c) - P(a|c)P(b|c)| over cells of a (C, A, B) table,
    restricted to conditioning events with mass > COND_EPS."""
    pc = t.sum(axis=(1, 2))
    keep = pc > COND_EPS
    if not keep.any():
        return 0.0
    t = t[keep]
    pc = pc[keep]
    pab_c = t / pc[:, None, None]
    pa_c = t.sum(axis=2) / pc[:, None]
    pb_c = t.sum(axis=1) / pc[:, None]
    res = np.abs(pab_c - pa_c[:, :, None] * pb_c[:, None, :])
    return float(res.max())


def _grouped(joint: JointLaw, x_up_to: int, y_up_to: int) -> np.ndarray:
    """Marginal P(x^{x_up_to}, y^{y_up_to}) as a 2-D (x-prefix, y-prefix) array.

    ``x_up_to``/``y_up_to`` are stage indices; -1 drops the block entirely.
    """
    al = joint.alphabets
    xh = al.x_hist_size(x_up_to)
    yh = al.y_hist_size(y_up_to)
    t = joint.table.reshape(xh, al.x_trajectories() // xh,
                            yh, al.y_trajectories() // yh)
    return t.sum(axis=(1, 3))


def markov_chain_check(joint: JointLaw, variant: int) -> float:
    """Max conditional-independence residual for one of the four equivalent
    causality statements of the joint law.

    variant 1: the full conditional P(y^n | x^n) matches the causal
               factorization prod_i P(y_i | x^i, y^{i-1}) (sup residual).
    variant 2: per stage i, Y_i independent of (X_{i+1..n}) given (X^i, Y^{i-1}).
    variant 3: per stage i, Y^i independent of X_{i+1} given X^i.
    variant 4: per stage i, Y^i independent of (X_{i+1..n}) given X^i.

    Returns the max residual over stages and cells; a small value (<= 1e-10
    for exact causal joints) certifies the Markov chain.
    """
    al = joint.alphabets
    n = al.n_stages
    if variant not in (1, 2, 3, 4):
        raise InvalidArgumentError("variant must be 1, 2, 3 or 4")

    if variant == 1:
        return _factorization_residual(joint)

    worst = 0.0
    tensor = joint.tensor()
    for i in range(n - 1):
        if variant == 2:
            # tensor axes: x_0..x_{n-1} = 0..n-1, y_0..y_{n-1} = n..2n-1
            t = tensor.sum(axis=tuple(range(n + i + 1, 2 * n)))
            xh = al.x_hist_size(i)
            yh = al.y_hist_size(i - 1)
            sy = al.y_sizes[i]
            xf = al.x_trajectories() // xh
            flat = t.reshape(xh, xf, yh, sy)   # (x^i, x future, y^{i-1}, y_i)
            cab = np.einsum('cbda->cdab', flat).reshape(xh * yh, sy, xf)
            worst = max(worst, _ci_residual(cab))
        else:
            if variant == 3:
                m = _grouped(joint, i + 1, i)      # (x^{i+1}, y^i)
                xh = al.x_hist_size(i)
                sx = al.x_sizes[i + 1]
                t = m.reshape(xh, sx, al.y_hist_size(i))
            else:
                m = _grouped(joint, n - 1, i)      # (x^{n-1}, y^i)
                xh = al.x_hist_size(i)
                sx = al.x_trajectories() // xh
                t = m.reshape(xh, sx, al.y_hist_size(i))
            cab = np.swapaxes(t, 1, 2)             # (c=x^i, a=y^i, b=x future)
            worst = max(worst, _ci_residual(cab))
    return worst


def _factorization_residual(joint: JointLaw) -> float:
    """Sup-norm gap between P(y^n | x^n) and the causal product of its own
    stagewise conditionals, over x^n with mass > COND_EPS."""
    al = joint.alphabets
    n = al.n_stages
    mu = joint.table.sum(axis=1)

    # causal factors from prefix marginals, accumulated into a product table
    qhat = np.ones((1, 1))
    defined = np.ones((1, 1), dtype=bool)
    for i in range(n):
        num = _grouped(joint, i, i)                # (x^i, y^i)
        den = _grouped(joint, i, i - 1)            # (x^i, y^{i-1})
        sy = al.y_sizes[i]
        blocks = num.reshape(num.shape[0], -1, sy)
        ok = den > COND_EPS
        factor = np.zeros_like(blocks)
        factor[ok] = blocks[ok] / den[ok][:, None]
        # expand running product to stage-i prefix shapes
        parent_x = np.arange(al.x_hist_size(i)) // al.x_sizes[i] if i else np.zeros(al.x_hist_size(0), dtype=int)
        qhat = (qhat[parent_x][:, :, None] * factor)
        defined = np.broadcast_to(defined[parent_x][:, :, None] & ok[:, :, None],
                                  qhat.shape)
        qhat = qhat.reshape(al.x_hist_size(i), al.y_hist_size(i))
        defined = defined.reshape(al.x_hist_size(i), al.y_hist_size(i))

    cond = np.zeros_like(joint.table)
    keep = mu > COND_EPS
    cond[keep] = joint.table[keep] / mu[keep, None]
    res = np.abs(cond - qhat)
    res[~keep] = 0.0
    res[~defined] = 0.0
    return float(res.max())
