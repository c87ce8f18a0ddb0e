"""Brute-force ground truth on the full configuration space (small n only).

Configurations are bitmasks: bit i set means spin +1 at site i, so a mask
with k set bits has spin sum j = 2k - n.  The censored space keeps the masks
with j >= 0, the j = 0 layer (even n) included as-is, unfolded.  Everything
here is dense and deliberately naive; it exists to be trusted, not to be
fast, and refuses to run beyond n = 12 (n = 10 for eigensolves and other
whole-matrix linear algebra).
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .errors import NumericFailure, TooLarge

MAX_N = 12
MAX_EIG_N = 10


def _check_size(n, cap, what):
    if n > cap:
        raise TooLarge(f"{what} supports n <= {cap}, got n = {n}")
    if n < 2:
        raise ValueError(f"need n >= 2, got {n}")


def _popcounts(masks):
    return np.array([int(m).bit_count() for m in masks], dtype=np.int64)


def states_and_sums(n, censored):
    """All bitmask states of the (possibly censored) space with their spin sums."""
    masks = np.arange(1 << n, dtype=np.int64)
    j = 2 * _popcounts(masks) - n
    if censored:
        keep = j >= 0
        masks, j = masks[keep], j[keep]
    return masks, j


@dataclass(frozen=True)
class GibbsMeasure:
    n: int
    beta: float
    censored: bool
    states: np.ndarray   # bitmasks
    mass: np.ndarray     # probabilities, aligned with states

    def magnetization_marginal(self):
        """Spin-sum values (ascending) and their total masses."""
        j = 2 * _popcounts(self.states) - self.n
        levels = np.unique(j)
        probs = np.array([self.mass[j == lv].sum() for lv in levels])
        return levels, probs


def gibbs(n, beta, censored=False):
    """Exact equilibrium measure; folded onto {S >= 0} when censored.

    The energy depends on a configuration only through its spin sum j, with
    log-weight (beta/2n)(j^2 - n); folding doubles the weight of every
    strictly positive level.  Normalization by log-sum-exp.
    """
    _check_size(n, MAX_N, "gibbs")
    masks, j = states_and_sums(n, censored)
    logw = (beta / (2.0 * n)) * (j.astype(float) ** 2 - n)
    if censored:
        logw = logw + np.where(j > 0, np.log(2.0), 0.0)
    mass = np.exp(logw - logsumexp(logw))
    mass = mass / mass.sum()
    return GibbsMeasure(n=n, beta=beta, censored=censored, states=masks, mass=mass)


@dataclass(frozen=True)
class FullKernel:
    n: int
    beta: float
    censored: bool
    states: np.ndarray
    j: np.ndarray        # spin sum per state
    matrix: np.ndarray   # dense row-stochastic transition matrix

    @property
    def nstates(self):
        return self.states.size


def full_kernel(n, beta, censored=False):
    """Exact one-step transition matrix of the heat-bath dynamics.

    A uniformly chosen site is refreshed to +1 with probability
    (1 + tanh(beta*(j - sigma_i)/n))/2; under censoring, a step whose result
    has negative spin sum is mapped to its global flip.
    """
    _check_size(n, MAX_N, "full_kernel")
    masks, j = states_and_sums(n, censored)
    full = (1 << n) - 1
    index = np.full(1 << n, -1, dtype=np.int64)
    index[masks] = np.arange(masks.size)
    P = np.zeros((masks.size, masks.size))
    rows = np.arange(masks.size)
    for b in range(n):
        bit = (masks >> b) & 1
        eff = 2 * bit - 1
        pp = 0.5 * (1.0 + np.tanh(beta * (j - eff) / n))
        up = masks | (1 << b)
        dn = masks & ~(1 << b)
        if censored:
            # only the downward flip can leave S >= 0
            neg = (j - 2 * bit) < 0
            dn = np.where(neg, full & ~dn, dn)
        np.add.at(P, (rows, index[up]), pp / n)
        np.add.at(P, (rows, index[dn]), (1.0 - pp) / n)
    if np.any(index[np.concatenate([masks])] < 0):
        raise NumericFailure("state indexing is inconsistent")
    rowsums = P.sum(axis=1)
    if np.max(np.abs(rowsums - 1.0)) > 1e-13:
        raise NumericFailure("full kernel rows do not sum to 1 within 1e-13")
    return FullKernel(n=n, beta=beta, censored=censored, states=masks, j=j, matrix=P)


def lumped_kernel(kern):
    """Aggregate the full kernel by spin sum.

    Returns (levels, L, witness): the spin-sum values, the lumped transition
    matrix built from one representative per level, and the largest deviation
    of any state's aggregated row from its level representative — the direct
    witness that magnetization is a strong lumping (witness ~ rounding error).
    """
    levels = np.unique(kern.j)
    ind = np.zeros((kern.nstates, levels.size))
    level_of = np.searchsorted(levels, kern.j)
    ind[np.arange(kern.nstates), level_of] = 1.0
    G = kern.matrix @ ind
    L = np.zeros((levels.size, levels.size))
    witness = 0.0
    for li in range(levels.size):
        rows = G[level_of == li]
        L[li] = rows[0]
        witness = max(witness, float(np.max(rows.max(axis=0) - rows.min(axis=0))))
    return levels, L, witness


def stationary_power(kern, squarings=30):
    """Stationary law by power iteration, accelerated by repeated squaring.

    Squaring the kernel k times applies 2^k steps at once; with 30 squarings
    the chain has run ~1e9 steps and every row of the result is the
    stationary law to rounding error.  The spread across rows is returned as
    a convergence witness.  Whole-matrix work, so capped at n = 10.
    """
    _check_size(kern.n, MAX_EIG_N, "stationary_power")
    Q = kern.matrix.copy()
    for _ in range(squarings):
        Q = Q @ Q
        # squaring loses stochasticity through rounding; renormalize rows
        Q /= Q.sum(axis=1)[:, None]
    spread = float(np.max(Q.max(axis=0) - Q.min(axis=0)))
    mu = Q.mean(axis=0)
    return mu / mu.sum(), spread


def stationary_residual(kern, mass):
    """L1 distance between mass*P and mass; ~0 certifies stationarity."""
    return float(np.abs(mass @ kern.matrix - mass).sum())


def detailed_balance_residual(kern, mass):
    """Largest asymmetry |m_i P_ij - m_j P_ji| of the flow matrix."""
    F = mass[:, None] * kern.matrix
    return float(np.max(np.abs(F - F.T)))


def eigenvalues_dense(kern):
    """All eigenvalues (complex, sorted by descending real part).  n <= 10."""
    _check_size(kern.n, MAX_EIG_N, "eigenvalues_dense")
    w = np.linalg.eigvals(kern.matrix)
    return w[np.argsort(-w.real)]


def lambda2_dense(kern):
    """Second-largest eigenvalue by a dense eigensolve.  n <= 10.

    Reversible kernels are symmetrized by the stationary square root and
    handed to a symmetric solver; the censored kernel is not reversible (the
    flow between the S = 0 layer and its neighbors is one-sided), so it goes
    through the general solver, and the eigenvalue returned must be real to
    rounding error.
    """
    _check_size(kern.n, MAX_EIG_N, "lambda2_dense")
    mu = gibbs(kern.n, kern.beta, kern.censored).mass
    flow_scale = float(np.max(mu[:, None] * kern.matrix))
    if detailed_balance_residual(kern, mu) <= 1e-12 * max(flow_scale, 1e-300):
        d = np.sqrt(mu)
        A = kern.matrix * (d[:, None] / d[None, :])
        w = np.linalg.eigvalsh(0.5 * (A + A.T))
        return float(w[-2])
    w = eigenvalues_dense(kern)
    if abs(w[0].real - 1.0) > 1e-9 or abs(w[0].imag) > 1e-9:
        raise NumericFailure(f"leading eigenvalue is {w[0]}, expected 1")
    lam2 = w[1]
    if abs(lam2.imag) > 1e-9:
        raise NumericFailure(f"second eigenvalue {lam2} is not real")
    return float(lam2.real)


def lambda2_power(kern, max_iter=500_000, tol=1e-13, seed=0):
    """Second-largest eigenvalue by deflated power iteration.

    The known stationary pair (right eigenvector 1, left eigenvector mu) is
    removed exactly by B = P - 1 mu^T, whose leading eigenvalue is lambda_2;
    plain power iteration then converges geometrically.  Independent of the
    dense route: no eigensolver, only matrix-vector products.
    """
    _check_size(kern.n, MAX_EIG_N, "lambda2_power")
    mu = gibbs(kern.n, kern.beta, kern.censored).mass
    B = kern.matrix - np.outer(np.ones(kern.nstates), mu)
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(kern.nstates)
    v /= np.linalg.norm(v)
    lam_prev = np.inf
    history = []
    for it in range(1, max_iter + 1):
        w = B @ v
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        lam = float(v @ w)
        v = w / nw
        if it % 64 == 0:
            history.append(lam)
            if len(history) >= 3:
                a0, a1, a2 = history[-3:]
                d2 = a2 - 2 * a1 + a0
                if d2 != 0.0:
                    # Aitken extrapolation of the geometric tail
                    lam_acc = a2 - (a2 - a1) ** 2 / d2
                else:
                    lam_acc = a2
                if abs(lam_acc - lam_prev) <= tol:
                    return float(lam_acc)
                lam_prev = lam_acc
    raise NumericFailure(f"power iteration did not settle in {max_iter} iterations")


def evolve_full(kern, mass0, steps):
    """Law after the given number of steps (row-vector iteration)."""
    v = np.array(mass0, dtype=float)
    for _ in range(steps):
        v = v @ kern.matrix
    return v


def tv_profile_full(kern, start_mask, ts):
    """TV distance to equilibrium at each time in ts, from a point start."""
    mu = gibbs(kern.n, kern.beta, kern.censored).mass
    idx = int(np.flatnonzero(kern.states == start_mask)[0])
    v = np.zeros(kern.nstates)
    v[idx] = 1.0
    out = np.empty(len(ts))
    t_prev = 0
    for i, t in enumerate(sorted(ts)):
        for _ in range(t - t_prev):
            v = v @ kern.matrix
        t_prev = t
        out[i] = 0.5 * float(np.abs(v - mu).sum())
    return out
