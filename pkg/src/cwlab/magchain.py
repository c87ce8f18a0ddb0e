"""Exact analysis of the magnetization birth-and-death chain.

The spin sum of the n-spin dynamics performs a birth-and-death walk on the
integer lattice j in {-n, -n+2, ..., n} (normalized s = j/n); censoring folds
it onto |j|.  States are always indexed by the integer j, never by floating
s, so lattices stay exact.  This module holds the kernel constructions, the
stationary law, exact law evolution and TV mixing profiles, conductances and
bottleneck ratios, and the spectral gap via a hand-rolled Sturm bisection
with a dense eigensolve as the cross-check route.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import (
    NeedLargerHorizon,
    NotReversible,
    NumericFailure,
    Reducible,
    TooLarge,
)
from .model import ModelParams, p_minus, p_plus, solve_zeta
from .tolerances import TOL


@dataclass(frozen=True)
class MagLattice:
    """Ordered spin-sum lattice of the (possibly censored) magnetization chain."""

    n: int
    censored: bool
    j: np.ndarray

    @classmethod
    def build(cls, n, censored):
        if censored:
            j = np.arange(n % 2, n + 1, 2, dtype=np.int64)
        else:
            j = np.arange(-n, n + 1, 2, dtype=np.int64)
        j.flags.writeable = False
        return cls(n=n, censored=censored, j=j)

    @property
    def nstates(self):
        return self.j.size

    @property
    def s(self):
        return self.j / self.n

    def index_of(self, j):
        j = int(j)
        lo = int(self.j[0])
        if j < lo or j > self.n or (j - lo) % 2 != 0:
            raise ValueError(f"j={j} is not on the lattice (n={self.n}, censored={self.censored})")
        return (j - lo) // 2

    def round_to_lattice(self, s, side="nearest"):
        """Integer lattice point for a real magnetization s.

        side="up" rounds toward +1 (the convention for upward-crossing
        thresholds), "down" toward -1, "nearest" to the closest state.
        """
        lo = int(self.j[0])
        x = (s * self.n - lo) / 2.0
        if side == "up":
            k = math.ceil(x - 1e-12)
        elif side == "down":
            k = math.floor(x + 1e-12)
        else:
            k = math.floor(x + 0.5)  # half-up, not banker's rounding
        k = min(max(k, 0), self.nstates - 1)
        return int(self.j[k])


@dataclass(frozen=True)
class BirthDeathKernel:
    """Transition rates (up p, down q, hold h) over a MagLattice."""

    lattice: MagLattice
    beta: float
    p: np.ndarray
    q: np.ndarray
    h: np.ndarray

    def __post_init__(self):
        m = self.lattice.nstates
        if not (self.p.size == self.q.size == self.h.size == m):
            raise ValueError("rate arrays must match the lattice")
        if min(self.p.min(), self.q.min(), self.h.min()) < 0:
            raise NumericFailure("negative transition probability")
        rows = self.p + self.q + self.h
        if np.max(np.abs(rows - 1.0)) > TOL.row_sum:
            raise NumericFailure("kernel rows do not sum to 1 within 1e-14")
        for a in (self.p, self.q, self.h):
            a.flags.writeable = False

    @property
    def n(self):
        return self.lattice.n

    @property
    def censored(self):
        return self.lattice.censored

    def drift(self):
        """E[S_1 - S_0 | S_0 = s] at every lattice state."""
        return (2.0 / self.n) * (self.p - self.q)


def build_kernel(params, censored):
    """Birth-and-death kernel of the magnetization under heat-bath updates.

    Ordinary chain at spin sum j: an up-move picks one of the (n-j)/2 minus
    sites and refreshes it to plus against the field (j+1)/n, a down-move
    picks one of the (n+j)/2 plus sites and refreshes it to minus against
    (j-1)/n.  The censored kernel is the fold of the ordinary one onto |j|,
    which handles both parities of n uniformly (for even n the only change
    is at j=0, whose down-move reappears as an up-move; for odd n the
    bottom j=1 down-move folds into holding).
    """
    n, beta = params.n, params.beta
    lattice = MagLattice.build(n, censored=False)
    j = lattice.j.astype(float)
    p = ((n - j) / (2.0 * n)) * p_plus((j + 1.0) / n, beta)
    q = ((n + j) / (2.0 * n)) * p_minus((j - 1.0) / n, beta)
    h = 1.0 - p - q
    if not censored:
        return BirthDeathKernel(lattice=lattice, beta=beta, p=p, q=q, h=h)

    clat = MagLattice.build(n, censored=True)
    keep = lattice.j >= clat.j[0]
    cp, cq, ch = p[keep].copy(), q[keep].copy(), h[keep].copy()
    if n % 2 == 0:
        cp[0] += cq[0]  # j=0 down-move lands on -2, i.e. |j|=2
    else:
        ch[0] += cq[0]  # j=1 down-move lands on -1, i.e. back on |j|=1
    cq[0] = 0.0
    return BirthDeathKernel(lattice=clat, beta=beta, p=cp, q=cq, h=ch)


@dataclass(frozen=True)
class ProbVector:
    """A probability law over a MagLattice."""

    lattice: MagLattice
    mass: np.ndarray
    renormalizations: int = 0

    def __post_init__(self):
        if self.mass.size != self.lattice.nstates:
            raise ValueError("mass must match the lattice")
        if self.mass.min() < 0:
            raise NumericFailure("negative probability mass")
        if abs(self.mass.sum() - 1.0) > TOL.prob_mass:
            raise NumericFailure("mass must sum to 1 within 1e-12")
        self.mass.flags.writeable = False

    @classmethod
    def point(cls, lattice, j):
        mass = np.zeros(lattice.nstates)
        mass[lattice.index_of(j)] = 1.0
        return cls(lattice=lattice, mass=mass)


def resolve_start(lattice, start):
    """Map a start spec ("bottom", "top", or an integer j) to a lattice j."""
    if start == "bottom":
        return int(lattice.j[0])
    if start in ("top", "all-plus"):
        return int(lattice.j[-1])
    return int(lattice.j[lattice.index_of(start)])


def fold_law(dist):
    """Fold an ordinary-lattice law onto the censored lattice (law of |S|)."""
    lat = dist.lattice
    if lat.censored:
        raise ValueError("law is already censored")
    clat = MagLattice.build(lat.n, censored=True)
    mass = np.zeros(clat.nstates)
    for idx, jv in enumerate(lat.j):
        mass[clat.index_of(abs(int(jv)))] += dist.mass[idx]
    return ProbVector(lattice=clat, mass=mass)


def stationary(kernel):
    """Stationary law from the detailed-balance recursion, in log-space."""
    p, q = kernel.p, kernel.q
    if np.any(p[:-1] <= 0.0) or np.any(q[1:] <= 0.0):
        bad = int(np.flatnonzero(p[:-1] <= 0.0)[0]) if np.any(p[:-1] <= 0.0) else int(
            np.flatnonzero(q[1:] <= 0.0)[0] + 1
        )
        raise Reducible(f"vanishing interior rate near j={int(kernel.lattice.j[bad])}")
    logw = np.zeros(kernel.lattice.nstates)
    logw[1:] = np.cumsum(np.log(p[:-1]) - np.log(q[1:]))
    logw -= logw.max()
    w = np.exp(logw)
    return ProbVector(lattice=kernel.lattice, mass=w / w.sum())


def _step(kernel, v):
    new = v * kernel.h
    new[1:] += v[:-1] * kernel.p[:-1]
    new[:-1] += v[1:] * kernel.q[1:]
    return new


def evolve(dist, kernel, steps):
    """Law after the given number of steps: dist @ P^steps.

    Mass drift beyond 1e-12 is renormalized and counted; the count rides on
    the returned ProbVector.
    """
    if dist.lattice.censored != kernel.lattice.censored or dist.lattice.n != kernel.n:
        raise ValueError("distribution and kernel live on different lattices")
    v = dist.mass.copy()
    renorms = dist.renormalizations
    for _ in range(int(steps)):
        v = _step(kernel, v)
        total = v.sum()
        if abs(total - 1.0) > TOL.prob_mass:
            v /= total
            renorms += 1
    return ProbVector(lattice=kernel.lattice, mass=v, renormalizations=renorms)


def moments(dist, center, orders):
    """Central-style moments E[(s - center)^k] for k in orders (subset of 1..4)."""
    orders = list(orders)
    if not set(orders) <= {1, 2, 3, 4}:
        raise ValueError(f"orders must be within {{1,2,3,4}}, got {orders}")
    x = dist.lattice.s - center
    return np.array([float(np.sum(dist.mass * x**k)) for k in orders])


# ---------------------------------------------------------------------------
# TV profiles and mixing times


class _LawCache:
    """Evolves a law forward, keeping snapshots so later queries are cheap."""

    def __init__(self, kernel, mass0, stride):
        self.kernel = kernel
        self.stride = max(1, int(stride))
        self.snaps = {0: np.array(mass0, dtype=float)}
        self.renorms = 0

    def law(self, t):
        t = int(t)
        t0 = max(u for u in self.snaps if u <= t)
        v = self.snaps[t0]
        if t0 == t:
            return v
        v = v.copy()
        for u in range(t0 + 1, t + 1):
            v = _step(self.kernel, v)
            total = v.sum()
            if abs(total - 1.0) > TOL.prob_mass:
                v /= total
                self.renorms += 1
            if u % self.stride == 0:
                self.snaps[u] = v.copy()
        self.snaps[t] = v
        return v


def _tv(a, b):
    return 0.5 * float(np.abs(a - b).sum())


@dataclass
class TVProfile:
    """Distance-to-equilibrium columns d_start(t) on a shared time grid."""

    kernel: BirthDeathKernel
    pi: ProbVector
    starts: list
    t_grid: np.ndarray
    d: dict                      # start j -> array of d(t) over t_grid
    caches: dict = field(repr=False, default_factory=dict)

    def worst(self):
        """Pointwise max of d(t) over the computed starts."""
        return np.max(np.stack([self.d[j] for j in self.starts]), axis=0)

    def d_at(self, start_j, t):
        cache = self.caches[start_j]
        return _tv(cache.law(int(t)), self.pi.mass)


def tv_profile(params, censored, start_states, t_grid, kernel=None, snapshot_stride=None):
    """Exact d(t) = ||law_t - pi||_TV for each requested start.

    start_states entries may be "bottom", "top"/"all-plus", or integer lattice
    j values.  Snapshots are cached (default stride: the cutoff window n/delta,
    or n when beta <= 1) so that t_mix can later refine by bisection without
    re-evolving from zero.
    """
    if not start_states:
        raise ValueError("need at least one start state")
    kern = kernel if kernel is not None else build_kernel(params, censored)
    pi = stationary(kern)
    t_grid = np.array(sorted(int(t) for t in t_grid), dtype=np.int64)
    if t_grid.size == 0 or t_grid[0] < 0:
        raise ValueError("t_grid must be nonempty and nonnegative")
    if snapshot_stride is None:
        snapshot_stride = math.ceil(params.n / params.delta) if params.delta > 0 else params.n
    starts = [resolve_start(kern.lattice, s) for s in start_states]
    d = {}
    caches = {}
    for j0 in starts:
        cache = _LawCache(kern, ProbVector.point(kern.lattice, j0).mass, snapshot_stride)
        col = np.empty(t_grid.size)
        for i, t in enumerate(t_grid):
            col[i] = _tv(cache.law(t), pi.mass)
        d[j0] = col
        caches[j0] = cache
    return TVProfile(kernel=kern, pi=pi, starts=starts, t_grid=t_grid, d=d, caches=caches)


def t_mix(profile, epsilon, start=None):
    """Smallest integer t with d(t) <= epsilon, refined by bisection.

    With start=None the worst start of the profile is used (the maximum of
    the per-start mixing times, which is the crossing time of the pointwise
    max by monotonicity of each column).
    """
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must be in (0,1), got {epsilon}")
    if start is None:
        return max(t_mix(profile, epsilon, start=j) for j in profile.starts)
    j0 = resolve_start(profile.kernel.lattice, start)
    col = profile.d[j0]
    grid = profile.t_grid
    below = np.flatnonzero(col <= epsilon)
    if below.size == 0:
        raise NeedLargerHorizon(
            f"d(t) stays above {epsilon} on the computed grid (last d = {col[-1]:.4g} "
            f"at t = {int(grid[-1])})"
        )
    hi = int(grid[below[0]])
    if below[0] == 0:
        if grid[0] == 0:
            return 0
        lo = 0
    else:
        lo = int(grid[below[0] - 1])
    # d is non-increasing in t, so plain integer bisection brackets the crossing
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if profile.d_at(j0, mid) <= epsilon:
            hi = mid
        else:
            lo = mid
    return hi


def tv_all_starts(params, censored, t_grid):
    """d(t) from every lattice start (exact); small n only."""
    if params.n > 64:
        raise TooLarge("all-starts profiles are limited to n <= 64")
    kern = build_kernel(params, censored)
    prof = tv_profile(params, censored, [int(j) for j in kern.lattice.j], t_grid, kernel=kern)
    return prof


# ---------------------------------------------------------------------------
# Conductances and the bottleneck ratio


@dataclass(frozen=True)
class ConductanceProfile:
    """Edge and self-loop conductances with the bottleneck ratio."""

    kernel: BirthDeathKernel
    c: np.ndarray            # edge conductance at each state's upward edge
    c_self: np.ndarray       # self-loop conductances
    c_total: float           # sum of c + c_self
    phi_star: float
    phi_star_cut: int        # lattice j of the boundary state inside the cut
    phi_star_side: str       # "bottom" (cut = prefix) or "top" (cut = suffix)
    pi_constant: float       # degree-sum / c_total: the global normalization gap
    pi_agreement: float      # max relative deviation, conductance pi vs detailed balance


def _conductance_logs(kernel):
    p, q, h = kernel.p, kernel.q, kernel.h
    m = kernel.lattice.nstates
    with np.errstate(divide="ignore"):
        ratios = np.log(p[1:]) - np.log(q[1:])
    logc = np.concatenate([[0.0], np.cumsum(ratios)])  # -inf at the top (p=0)
    prev = np.concatenate([[-np.inf], logc[:-1]])
    with np.errstate(divide="ignore"):
        logself = np.log(h) - np.log(p + q) + np.logaddexp(prev, logc)
    return logc, logself


def stationary_from_conductances(kernel):
    """Stationary law rebuilt from the weighted-graph degrees c_- + c + c'."""
    logc, logself = _conductance_logs(kernel)
    prev = np.concatenate([[-np.inf], logc[:-1]])
    logdeg = np.logaddexp(np.logaddexp(prev, logc), logself)
    logdeg -= logdeg.max()
    w = np.exp(logdeg)
    return ProbVector(lattice=kernel.lattice, mass=w / w.sum())


def conductance_profile(kernel):
    """Conductances, their total, and the endpoint-anchored bottleneck ratio.

    All products are accumulated in log-space; the linear c arrays are
    exponentiated only for reporting and overflow raises with the offending
    state named.  The minimizing cut is searched over the two interval
    families Psi[0, xi] and Psi[xi, 1] with pi(S) <= 1/2.
    """
    logc, logself = _conductance_logs(kernel)
    shift = max(logc.max(), logself.max())
    with np.errstate(over="raise"):
        try:
            c = np.exp(logc)
            c_self = np.exp(logself)
        except FloatingPointError:
            worst = int(kernel.lattice.j[int(np.argmax(np.maximum(logc, logself)))])
            raise NumericFailure(
                f"conductance overflows double precision near j={worst} "
                f"(log magnitude {shift:.1f})"
            ) from None
    c_total = float(np.exp(shift) * (np.exp(logc - shift) + np.exp(logself - shift)).sum())

    pi = stationary(kernel)
    pi_cond = stationary_from_conductances(kernel)
    agreement = float(np.max(np.abs(pi_cond.mass - pi.mass) / pi.mass))
    prev = np.concatenate([[-np.inf], logc[:-1]])
    logdeg_total = _logsumexp(np.logaddexp(np.logaddexp(prev, logc), logself))
    pi_constant = float(np.exp(logdeg_total - _logsumexp(np.concatenate([logc, logself]))))

    mass = pi.mass
    prefix = np.cumsum(mass)
    suffix = np.cumsum(mass[::-1])[::-1]
    best = (np.inf, None, None)
    for k in range(kernel.lattice.nstates - 1):
        if prefix[k] <= 0.5:
            phi = mass[k] * kernel.p[k] / prefix[k]
            if phi < best[0]:
                best = (phi, int(kernel.lattice.j[k]), "bottom")
    for k in range(1, kernel.lattice.nstates):
        if suffix[k] <= 0.5:
            phi = mass[k] * kernel.q[k] / suffix[k]
            if phi < best[0]:
                best = (phi, int(kernel.lattice.j[k]), "top")
    if best[1] is None:
        raise NumericFailure("no cut with pi(S) <= 1/2 found")
    return ConductanceProfile(
        kernel=kernel,
        c=c,
        c_self=c_self,
        c_total=c_total,
        phi_star=float(best[0]),
        phi_star_cut=best[1],
        phi_star_side=best[2],
        pi_constant=pi_constant,
        pi_agreement=agreement,
    )


def _logsumexp(a):
    m = np.max(a[np.isfinite(a)]) if np.any(np.isfinite(a)) else -np.inf
    if not np.isfinite(m):
        return -np.inf
    return float(m + np.log(np.exp(a - m).sum()))


# ---------------------------------------------------------------------------
# Spectral gap


@dataclass(frozen=True)
class SpectralResult:
    n: int
    beta: float
    censored: bool
    gap: float
    lambda2: float
    lambda_min: float
    method: str
    dirichlet_upper: float | None
    db_residual: float


def _sturm_count(diag, off2, x, pivmin):
    """Number of eigenvalues of the tridiagonal matrix strictly below x."""
    count = 0
    d = 1.0
    for i in range(diag.size):
        d = diag[i] - x - (off2[i - 1] / d if i else 0.0)
        if abs(d) < pivmin:
            d = -pivmin
        if d < 0.0:
            count += 1
    return count


def _kth_eigenvalue(diag, off, k, tol):
    off2 = off * off
    pivmin = max(np.finfo(float).tiny / np.finfo(float).eps, float(off2.max()) * 1e-30)
    r = np.zeros_like(diag)
    r[:-1] += np.abs(off)
    r[1:] += np.abs(off)
    lo = float(np.min(diag - r))
    hi = float(np.max(diag + r))
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _sturm_count(diag, off2, mid, pivmin) > k:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def spectral_gap(kernel, method="tridiagonal-bisection", pi=None):
    """Spectral gap 1 - lambda_2 of a reversible birth-and-death kernel.

    The kernel is symmetrized by the similarity transform with sqrt(pi),
    giving a symmetric tridiagonal matrix with diagonal h and off-diagonal
    sqrt(p_x q_{x+2/n}); lambda_2 and lambda_min come from Sturm-sequence
    bisection (method "tridiagonal-bisection") or a dense symmetric
    eigensolve (method "dense-oracle").  The Dirichlet upper bound with test
    function s - zeta rides along for beta > 1.
    """
    if method not in ("tridiagonal-bisection", "dense-oracle"):
        raise ValueError(f"unknown method {method!r}")
    if pi is None:
        pi = stationary(kernel)
    flow_up = pi.mass[:-1] * kernel.p[:-1]
    flow_dn = pi.mass[1:] * kernel.q[1:]
    scale = np.maximum(flow_up + flow_dn, 1e-300)
    residual = float(np.max(np.abs(flow_up - flow_dn) / scale))
    if residual > TOL.detailed_balance:
        raise NotReversible(f"detailed-balance residual {residual:.3e} exceeds 1e-10")

    diag = kernel.h.copy()
    off = np.sqrt(kernel.p[:-1] * kernel.q[1:])
    m = diag.size
    if method == "dense-oracle":
        T = np.diag(diag) + np.diag(off, 1) + np.diag(off, -1)
        w = np.linalg.eigvalsh(T)
        lam2, lam_min, lam_top = float(w[-2]), float(w[0]), float(w[-1])
    else:
        lam2 = _kth_eigenvalue(diag, off, m - 2, TOL.eig_bisect)
        lam_min = _kth_eigenvalue(diag, off, 0, TOL.eig_bisect)
        lam_top = _kth_eigenvalue(diag, off, m - 1, TOL.eig_bisect)
    if abs(lam_top - 1.0) > 1e-9:
        raise NumericFailure(f"leading eigenvalue came out as {lam_top}, expected 1")

    dirichlet = None
    if kernel.beta > 1.0:
        zeta = solve_zeta(kernel.beta)
        s = kernel.lattice.s
        drift = kernel.drift()
        mean = float(np.sum(pi.mass * s))
        var = float(np.sum(pi.mass * (s - mean) ** 2))
        dirichlet = float(np.sum(pi.mass * (-drift) * (s - zeta)) / var)
    return SpectralResult(
        n=kernel.n,
        beta=kernel.beta,
        censored=kernel.censored,
        gap=1.0 - lam2,
        lambda2=lam2,
        lambda_min=lam_min,
        method=method,
        dirichlet_upper=dirichlet,
        db_residual=residual,
    )
