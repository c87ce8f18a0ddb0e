"""Monte Carlo engine for the n-spin heat-bath dynamics.

Single-site updates depend on the configuration only through (spin sum,
updated spin), so a step is O(1); the spin array is kept for couplings and
agreement statistics.  Censoring (global negation whenever the spin sum goes
negative) is implemented lazily: the cached sum is negated and a global
parity bit flipped, so censored steps stay O(1) and reads resolve the bit.

Randomness: every stream is a numpy Generator(PCG64).  Replica k of a base
seed uses SeedSequence((base_seed, k)) — that tuple rule is the package-wide
stream-splitting convention.  Bulk runs consume draws in chunks of at most
CHUNK updates (the chunk's site indices first, then its uniforms), so a run
is bit-reproducible given (seed, steps); chaining two runs does not
reproduce one long run because chunk boundaries differ.

Hot loops are numba-compiled; everything they need is passed as flat arrays.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .errors import NotCoalesced, NotHit, OrderViolation
from .magchain import MagLattice, build_kernel
from .model import ModelParams, solve_zeta

CHUNK = 1 << 16

# crossing-record keys for the standard thresholds
THR_SMALL = "n^-1/4"
THR_MID = "(4/3)sqrt(delta)"
THR_ZETA = "zeta"


def replica_rng(base_seed, replica):
    """The package's stream-splitting rule: SeedSequence((base_seed, replica))."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence((base_seed, replica))))


def _as_rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


# ---------------------------------------------------------------------------
# Configurations


@dataclass
class SpinConfig:
    """n spins with a cached sum and a lazy global-negation bit.

    The physical spin at site i is sign*spins[i]; ssum always equals the
    physical total.
    """

    spins: np.ndarray          # int8 raw storage
    ssum: int
    sign: int = 1

    @property
    def n(self):
        return self.spins.size

    @property
    def s(self):
        return self.ssum / self.spins.size

    def resolved(self):
        """Physical spin array (parity bit applied)."""
        return (self.spins * np.int8(self.sign)).astype(np.int8)

    def copy(self):
        return SpinConfig(spins=self.spins.copy(), ssum=self.ssum, sign=self.sign)

    def recompute_sum(self):
        """Ground-truth spin total, bypassing the cache."""
        return int(self.sign * int(self.spins.astype(np.int64).sum()))

    @classmethod
    def all_plus(cls, n):
        return cls(spins=np.ones(n, dtype=np.int8), ssum=n)

    @classmethod
    def all_minus(cls, n):
        return cls(spins=np.full(n, -1, dtype=np.int8), ssum=-n)

    @classmethod
    def from_spins(cls, values):
        spins = np.asarray(values, dtype=np.int8)
        if not np.all(np.abs(spins) == 1):
            raise ValueError("spins must be +-1")
        return cls(spins=spins.copy(), ssum=int(spins.astype(np.int64).sum()))

    @classmethod
    def with_sum(cls, n, j):
        """Deterministic block layout with spin sum j (first sites positive)."""
        j = int(j)
        if (n + j) % 2 != 0 or abs(j) > n:
            raise ValueError(f"spin sum {j} impossible for n={n}")
        spins = np.full(n, -1, dtype=np.int8)
        spins[: (n + j) // 2] = 1
        return cls(spins=spins, ssum=j)


@dataclass(frozen=True)
class UpdateDraw:
    site: int
    u: float


def _apply_draw(config, site, u, beta, censored):
    n = config.spins.size
    si = config.sign * int(config.spins[site])
    p_up = 0.5 * (1.0 + math.tanh(beta * (config.ssum - si) / n))
    v = 1 if u <= p_up else -1
    if v != si:
        config.ssum += 2 * v
        config.spins[site] = np.int8(config.sign * v)
    if censored and config.ssum < 0:
        config.ssum = -config.ssum
        config.sign = -config.sign


def step(params, config, draw, censored):
    """One heat-bath update (functional: the input config is untouched).

    The chosen site is refreshed to +1 with probability
    p_plus((sum - sigma(site))/n), then the censored rule negates the whole
    configuration if the sum went negative.
    """
    out = config.copy()
    _apply_draw(out, int(draw.site), float(draw.u), params.beta, censored)
    return out


def _ptab(params):
    """p_plus((j - si)/n) lookup, indexed by (j - si) + n + 1 in [0, 2n+2]."""
    n = params.n
    return 0.5 * (1.0 + np.tanh(params.beta * np.arange(-n - 1, n + 2) / n))


# ---------------------------------------------------------------------------
# Bulk spin runs


@njit(cache=True)
def _spin_chunk(spins, state, ptab, sites, us, censored, thr_j, thr_hit, rec_ts, rec_j, rec_ptr, t_start):
    """Advance one chunk; state = [ssum, sign, thr_ptr]; returns new rec_ptr."""
    n = spins.size
    ssum = state[0]
    sign = state[1]
    tptr = state[2]
    rp = rec_ptr
    for k in range(sites.size):
        i = sites[k]
        si = sign * spins[i]
        v = 1 if us[k] <= ptab[ssum - si + n + 1] else -1
        if v != si:
            ssum += 2 * v
            spins[i] = np.int8(sign * v)
        if censored and ssum < 0:
            ssum = -ssum
            sign = -sign
        t = t_start + k + 1
        while tptr < thr_j.size and ssum >= thr_j[tptr]:
            thr_hit[tptr] = t
            tptr += 1
        if rp < rec_ts.size and t == rec_ts[rp]:
            rec_j[rp] = ssum
            rp += 1
    state[0] = ssum
    state[1] = sign
    state[2] = tptr
    return rp


@dataclass(frozen=True)
class RecordSpec:
    """What a run records: explicit times, or every stride-th step, plus
    extra upward thresholds {name: s-value} beyond the standard trio."""

    times: tuple = ()
    stride: int = 0
    thresholds: dict = field(default_factory=dict)


@dataclass(frozen=True)
class TrajectoryRecord:
    n: int
    beta: float
    censored: bool
    times: np.ndarray          # strictly increasing step indices
    magnetization: np.ndarray  # s values, on the lattice
    crossings: dict            # name -> first step with S >= threshold (None: never)
    thresholds: dict           # name -> lattice-rounded threshold (s units)
    final: SpinConfig


def _standard_thresholds(params):
    thicker = {THR_SMALL: params.n ** -0.25}
    if params.beta > 1.0:
        thicker[THR_MID] = (4.0 / 3.0) * math.sqrt(params.delta)
        thicker[THR_ZETA] = solve_zeta(params.beta)
    return thicker


def run(params, config0, steps, seed, censored, record=None):
    """Run the dynamics, recording magnetization and threshold crossings.

    Deterministic: equal (params, config0, steps, seed, censored, record)
    give bit-identical records.  Thresholds are rounded UP to the lattice
    (conservative for upward crossings).
    """
    steps = int(steps)
    if steps < 0:
        raise ValueError("steps must be >= 0")
    n = params.n
    if config0.n != n:
        raise ValueError("config size does not match params")
    rec = record if record is not None else RecordSpec()
    rng = _as_rng(seed)
    cfg = config0.copy()

    if rec.stride:
        rec_ts = np.arange(0, steps + 1, int(rec.stride), dtype=np.int64)
        if rec_ts.size == 0 or rec_ts[-1] != steps:
            rec_ts = np.append(rec_ts, steps)
    else:
        rec_ts = np.array(sorted(int(t) for t in rec.times), dtype=np.int64)
        if np.any(rec_ts < 0) or np.any(rec_ts > steps):
            raise ValueError("record times must lie in [0, steps]")
        if np.any(np.diff(rec_ts) == 0):
            raise ValueError("record times must be distinct")

    lat = MagLattice.build(n, censored)
    named = dict(_standard_thresholds(params))
    named.update({str(k): float(v) for k, v in rec.thresholds.items()})
    names = list(named)
    thr_jv = np.array([lat.round_to_lattice(named[name], side="up") for name in names], dtype=np.int64)
    order = np.argsort(thr_jv, kind="stable")
    thr_j = thr_jv[order]
    thr_hit = np.full(thr_j.size, -1, dtype=np.int64)
    ptr = 0
    while ptr < thr_j.size and cfg.ssum >= thr_j[ptr]:
        thr_hit[ptr] = 0
        ptr += 1

    rec_j = np.zeros(rec_ts.size, dtype=np.int64)
    rp = 0
    if rec_ts.size and rec_ts[0] == 0:
        rec_j[0] = cfg.ssum
        rp = 1

    state = np.array([cfg.ssum, cfg.sign, ptr], dtype=np.int64)
    ptab = _ptab(params)
    done = 0
    while done < steps:
        m = min(CHUNK, steps - done)
        sites = rng.integers(0, n, size=m, dtype=np.int64)
        us = rng.random(m)
        rp = _spin_chunk(
            cfg.spins, state, ptab, sites, us, censored,
            thr_j, thr_hit, rec_ts, rec_j, rp, done,
        )
        done += m

    crossings = {}
    thresholds = {}
    for pos, name in enumerate(names):
        where = int(np.flatnonzero(order == pos)[0])
        hit = int(thr_hit[where])
        crossings[name] = hit if hit >= 0 else None
        thresholds[name] = float(thr_j[where]) / n
    final = SpinConfig(spins=cfg.spins, ssum=int(state[0]), sign=int(state[1]))
    return TrajectoryRecord(
        n=n, beta=params.beta, censored=censored,
        times=rec_ts, magnetization=rec_j / float(n),
        crossings=crossings, thresholds=thresholds, final=final,
    )


def ensemble_magnetizations(params, config0, steps, censored, base_seed, replicas):
    """Final spin sums of independent replicas (replica k: stream (base_seed, k))."""
    n = params.n
    ptab = _ptab(params)
    empty_i = np.empty(0, dtype=np.int64)
    out = np.empty(replicas, dtype=np.int64)
    for k in range(replicas):
        rng = replica_rng(base_seed, k)
        spins = config0.spins.copy()
        state = np.array([config0.ssum, config0.sign, 0], dtype=np.int64)
        done = 0
        while done < steps:
            m = min(CHUNK, steps - done)
            sites = rng.integers(0, n, size=m, dtype=np.int64)
            us = rng.random(m)
            _spin_chunk(spins, state, ptab, sites, us, censored,
                        empty_i, empty_i, empty_i, empty_i, 0, done)
            done += m
        out[k] = state[0]
    return out


# ---------------------------------------------------------------------------
# Monotone coupling (ordinary dynamics) and the censored negative control


@njit(cache=True)
def _pair_chunk(hi, lo, sums, ptab, sites, us):
    n = hi.size
    violations = 0
    for k in range(sites.size):
        i = sites[k]
        u = us[k]
        v = 1 if u <= ptab[sums[0] - hi[i] + n + 1] else -1
        if v != hi[i]:
            sums[0] += 2 * v
            hi[i] = np.int8(v)
        w = 1 if u <= ptab[sums[1] - lo[i] + n + 1] else -1
        if w != lo[i]:
            sums[1] += 2 * w
            lo[i] = np.int8(w)
        if hi[i] < lo[i]:
            violations += 1
    return violations


def monotone_pair_step(params, hi, lo, draw):
    """One shared-(site,u) update of an ordered pair under ordinary dynamics.

    Order is preserved because the shared u is compared against update
    probabilities that are monotone in the configuration.
    """
    if not np.all(hi.resolved() >= lo.resolved()):
        raise OrderViolation("pair is not coordinatewise ordered")
    hi2, lo2 = hi.copy(), lo.copy()
    _apply_draw(hi2, int(draw.site), float(draw.u), params.beta, False)
    _apply_draw(lo2, int(draw.site), float(draw.u), params.beta, False)
    return hi2, lo2


@dataclass(frozen=True)
class PairRunResult:
    hi: SpinConfig
    lo: SpinConfig
    violations: int


def monotone_pair_run(params, hi, lo, steps, seed):
    """Shared-draw run of an ordered pair, counting order violations (expect 0)."""
    if not np.all(hi.resolved() >= lo.resolved()):
        raise OrderViolation("pair is not coordinatewise ordered")
    if hi.sign != 1 or lo.sign != 1:
        raise ValueError("monotone coupling applies to the ordinary dynamics only")
    n = params.n
    rng = _as_rng(seed)
    ptab = _ptab(params)
    sh, sl = hi.spins.copy(), lo.spins.copy()
    sums = np.array([hi.ssum, lo.ssum], dtype=np.int64)
    violations = 0
    done = 0
    steps = int(steps)
    while done < steps:
        m = min(CHUNK, steps - done)
        sites = rng.integers(0, n, size=m, dtype=np.int64)
        us = rng.random(m)
        violations += _pair_chunk(sh, sl, sums, ptab, sites, us)
        done += m
    return PairRunResult(
        hi=SpinConfig(spins=sh, ssum=int(sums[0])),
        lo=SpinConfig(spins=sl, ssum=int(sums[1])),
        violations=int(violations),
    )


@njit(cache=True)
def _censored_pair_chunk(sa, sb, state, ptab, sites, us, t_start):
    """Shared-draw censored pair; counts resolved-order violations.

    state = [sum_a, sign_a, sum_b, sign_b, violations, first_violation].
    """
    n = sa.size
    for k in range(sites.size):
        i = sites[k]
        u = us[k]
        si = state[1] * sa[i]
        v = 1 if u <= ptab[state[0] - si + n + 1] else -1
        if v != si:
            state[0] += 2 * v
            sa[i] = np.int8(state[1] * v)
        if state[0] < 0:
            state[0] = -state[0]
            state[1] = -state[1]
        sj = state[3] * sb[i]
        w = 1 if u <= ptab[state[2] - sj + n + 1] else -1
        if w != sj:
            state[2] += 2 * w
            sb[i] = np.int8(state[3] * w)
        if state[2] < 0:
            state[2] = -state[2]
            state[3] = -state[3]
        ordered = True
        for q in range(n):
            if state[1] * sa[q] < state[3] * sb[q]:
                ordered = False
                break
        if not ordered:
            state[4] += 1
            if state[5] < 0:
                state[5] = t_start + k + 1
    return state


def censored_pair_probe(params, upper, lower, steps, seed):
    """Shared-draw stepping of two CENSORED chains, watching coordinatewise order.

    The analogous construction that is monotone for ordinary dynamics breaks
    under censoring: a global negation of one chain destroys the ordering.
    Returns (violations, first_violation_step or None).
    """
    if not np.all(upper.resolved() >= lower.resolved()):
        raise OrderViolation("pair is not coordinatewise ordered")
    n = params.n
    rng = _as_rng(seed)
    ptab = _ptab(params)
    sa, sb = upper.spins.copy(), lower.spins.copy()
    state = np.array([upper.ssum, upper.sign, lower.ssum, lower.sign, 0, -1], dtype=np.int64)
    done = 0
    steps = int(steps)
    while done < steps:
        m = min(CHUNK, steps - done)
        sites = rng.integers(0, n, size=m, dtype=np.int64)
        us = rng.random(m)
        _censored_pair_chunk(sa, sb, state, ptab, sites, us, done)
        done += m
    first = int(state[5])
    return int(state[4]), (first if first >= 0 else None)


# ---------------------------------------------------------------------------
# Magnetization-chain simulation (1-D walks on the lattice)


@njit(cache=True)
def _mag_hit_chunk(k, p, q, us, k_target, upward):
    """Walk until the target index is reached; returns (k, steps_used or -1)."""
    for i in range(us.size):
        u = us[i]
        if u < p[k]:
            k += 1
        elif u >= 1.0 - q[k]:
            k -= 1
        if upward:
            if k >= k_target:
                return k, i + 1
        elif k <= k_target:
            return k, i + 1
    return k, -1


def _mag_arrays(params, censored):
    kern = build_kernel(params, censored)
    return kern.lattice, np.ascontiguousarray(kern.p), np.ascontiguousarray(kern.q)


def _resolve_state(lattice, s0):
    if isinstance(s0, str):
        if s0 == "bottom":
            return 0
        if s0 in ("top", "all-plus"):
            return lattice.nstates - 1
        raise ValueError(f"unknown start {s0!r}")
    return lattice.index_of(lattice.round_to_lattice(float(s0)))


def hitting_time(params, s0, threshold, censored, max_steps, seed):
    """First time the magnetization walk reaches the threshold.

    Upward targets (threshold above the start) are rounded up to the
    lattice, downward targets down.  Raises NotHit if max_steps pass first.
    """
    lattice, p, q = _mag_arrays(params, censored)
    k0 = _resolve_state(lattice, s0)
    s_start = lattice.j[k0] / params.n
    upward = float(threshold) >= s_start
    k_target = lattice.index_of(
        lattice.round_to_lattice(float(threshold), side="up" if upward else "down")
    )
    if (upward and k0 >= k_target) or (not upward and k0 <= k_target):
        return 0
    rng = _as_rng(seed)
    k = k0
    done = 0
    max_steps = int(max_steps)
    while done < max_steps:
        m = min(CHUNK, max_steps - done)
        us = rng.random(m)
        k, used = _mag_hit_chunk(k, p, q, us, k_target, upward)
        if used >= 0:
            return done + used
        done += m
    raise NotHit(f"threshold not reached within {max_steps} steps")


@njit(cache=True)
def _coalesce_chunk(state, p, q, ua, ub, k_pause):
    """Two censored magnetization walks; state = [ka, kb, shared].

    Independent draws until the walks are within one lattice step of each
    other or either is below the pause index; from then on both consume the
    shared draw ua (monotone rule: up if u < p, down if u >= 1-q).
    Returns steps_used_to_coalesce or -1.
    """
    ka, kb, shared = state[0], state[1], state[2]
    for i in range(ua.size):
        if shared == 0 and (abs(ka - kb) <= 1 or ka < k_pause or kb < k_pause):
            shared = 1
        u1 = ua[i]
        u2 = u1 if shared == 1 else ub[i]
        if u1 < p[ka]:
            ka += 1
        elif u1 >= 1.0 - q[ka]:
            ka -= 1
        if u2 < p[kb]:
            kb += 1
        elif u2 >= 1.0 - q[kb]:
            kb -= 1
        if ka == kb:
            state[0], state[1], state[2] = ka, kb, shared
            return i + 1
    state[0], state[1], state[2] = ka, kb, shared
    return -1


def mag_coupling_coalescence(params, s0, s0_other, max_steps, seed):
    """Coalescence time of two coupled censored magnetization walks.

    The walks run independently until they are within one lattice step of
    each other or either drops below (7/6)sqrt(delta) (where the contraction
    that drives merging fails); from then on they share draws under the
    monotone rule and merge on first meeting.  Raises NotCoalesced when
    max_steps pass first.
    """
    lattice, p, q = _mag_arrays(params, True)
    ka = _resolve_state(lattice, s0)
    kb = _resolve_state(lattice, s0_other)
    if ka == kb:
        return 0
    if params.delta <= 0:
        raise ValueError("coalescence coupling needs beta > 1")
    k_pause = lattice.index_of(
        lattice.round_to_lattice((7.0 / 6.0) * math.sqrt(params.delta), side="up")
    )
    rng = _as_rng(seed)
    state = np.array([ka, kb, 0], dtype=np.int64)
    done = 0
    max_steps = int(max_steps)
    while done < max_steps:
        m = min(CHUNK, max_steps - done)
        ua = rng.random(m)
        ub = rng.random(m)
        used = _coalesce_chunk(state, p, q, ua, ub, k_pause)
        if used >= 0:
            return done + used
        done += m
    raise NotCoalesced(f"walks did not meet within {max_steps} steps")


@njit(cache=True)
def _drift_chunk(state, p, q, ua, k_region, inv_n, nbins, sum_d, sum_d2, count):
    """Shared-draw pair; accumulates D_{t+1}-D_t by D_t bin while both walks
    are at or above the region index and D_t > 0."""
    ka, kb = state[0], state[1]
    for i in range(ua.size):
        u = ua[i]
        d_old = abs(ka - kb)
        in_region = ka >= k_region and kb >= k_region and d_old > 0
        if u < p[ka]:
            ka += 1
        elif u >= 1.0 - q[ka]:
            ka -= 1
        if u < p[kb]:
            kb += 1
        elif u >= 1.0 - q[kb]:
            kb -= 1
        if in_region:
            d_val = 2.0 * d_old * inv_n
            b = int(d_val * nbins)
            if b >= nbins:
                b = nbins - 1
            delta_d = 2.0 * (abs(ka - kb) - d_old) * inv_n
            sum_d[b] += delta_d
            sum_d2[b] += delta_d * delta_d
            count[b] += 1
    state[0], state[1] = ka, kb


@dataclass(frozen=True)
class DriftBins:
    edges: np.ndarray     # nbins+1 edges over D in (0, 1]
    mean: np.ndarray      # empirical E[D_{t+1}-D_t | bin]
    se: np.ndarray        # standard error of that mean
    count: np.ndarray


def coalescence_drift_stats(params, pairs, steps, seed, nbins=8):
    """Binned empirical drift of D_t = |S_t - S'_t| under the shared-draw rule.

    Pairs start at ((7/6)sqrt(delta) rounded up, top) and run for `steps`
    shared draws each; transitions are binned by D_t while both walks stay
    in [(7/6)sqrt(delta), 1] and D_t > 0.
    """
    lattice, p, q = _mag_arrays(params, True)
    if params.delta <= 0:
        raise ValueError("drift statistics need beta > 1")
    k_region = lattice.index_of(
        lattice.round_to_lattice((7.0 / 6.0) * math.sqrt(params.delta), side="up")
    )
    sum_d = np.zeros(nbins)
    sum_d2 = np.zeros(nbins)
    count = np.zeros(nbins, dtype=np.int64)
    steps = int(steps)
    for r in range(int(pairs)):
        rng = replica_rng(seed, r)
        state = np.array([k_region, lattice.nstates - 1], dtype=np.int64)
        done = 0
        while done < steps:
            m = min(CHUNK, steps - done)
            ua = rng.random(m)
            _drift_chunk(state, p, q, ua, k_region, 1.0 / params.n,
                         nbins, sum_d, sum_d2, count)
            done += m
    mean = np.where(count > 0, sum_d / np.maximum(count, 1), np.nan)
    var = np.where(count > 1, sum_d2 / np.maximum(count, 1) - mean**2, np.nan)
    se = np.sqrt(np.maximum(var, 0.0) / np.maximum(count, 1))
    edges = np.linspace(0.0, 1.0, nbins + 1)
    return DriftBins(edges=edges, mean=mean, se=se, count=count)


# ---------------------------------------------------------------------------
# Two-coordinate statistics


@dataclass(frozen=True)
class TwoCoordStats:
    t: int
    u_count: int        # U: sites positive now and positive in sigma_0
    v_count: int        # V: sites negative now and negative in sigma_0
    u_tilde: int
    v_tilde: int
    r: int              # |U(X_t) - U(X~_t)|
    in_xi: bool         # min(U, U0-U, V, V0-V) >= n/20 for the first chain
    in_xi_tilde: bool
    in_omega0: bool     # |S(X_t)| <= 1/2


def two_coord_experiment(params, sigma0, sigma_tilde, t_checkpoints, seed, shared_stream=False):
    """Agreement statistics of two censored chains run side by side.

    U and V count agreement with sigma_0's plus and minus sets for both
    chains; R is the U-difference.  By default the chains run independently
    (streams (seed,0) and (seed,1)); the inequalities this feeds hold for
    any coupling.  shared_stream=True drives both from stream (seed,0), so
    equal starts give identical paths and R identically 0.
    """
    n = params.n
    if abs(sigma0.s) > 0.5:
        raise ValueError("sigma0 must satisfy |S| <= 1/2")
    if sigma_tilde.n != n or sigma0.n != n:
        raise ValueError("configuration sizes must match params")
    plus0 = sigma0.resolved() == 1
    u0 = int(plus0.sum())
    v0 = n - u0
    ts = sorted(int(t) for t in t_checkpoints)
    if ts and ts[0] < 0:
        raise ValueError("checkpoints must be nonnegative")

    ptab = _ptab(params)
    empty_i = np.empty(0, dtype=np.int64)
    chains = []
    for idx, cfg in enumerate((sigma0, sigma_tilde)):
        chains.append({
            "rng": replica_rng(seed, 0 if shared_stream else idx),
            "spins": cfg.spins.copy(),
            "state": np.array([cfg.ssum, cfg.sign, 0], dtype=np.int64),
            "done": 0,
        })

    def advance(chain, target):
        while chain["done"] < target:
            m = min(CHUNK, target - chain["done"])
            sites = chain["rng"].integers(0, n, size=m, dtype=np.int64)
            us = chain["rng"].random(m)
            _spin_chunk(chain["spins"], chain["state"], ptab, sites, us, True,
                        empty_i, empty_i, empty_i, empty_i, 0, chain["done"])
            chain["done"] += m

    def stats(chain):
        resolved = chain["spins"] * np.int8(chain["state"][1])
        u = int(np.count_nonzero(plus0 & (resolved == 1)))
        v = int(np.count_nonzero(~plus0 & (resolved == -1)))
        in_xi = min(u, u0 - u, v, v0 - v) >= n / 20.0
        return u, v, in_xi, int(chain["state"][0])

    out = []
    for t in ts:
        for chain in chains:
            advance(chain, t)
        u, v, xi, ssum = stats(chains[0])
        ut, vt, xit, _ = stats(chains[1])
        out.append(TwoCoordStats(
            t=t, u_count=u, v_count=v, u_tilde=ut, v_tilde=vt,
            r=abs(u - ut), in_xi=xi, in_xi_tilde=xit,
            in_omega0=abs(ssum) <= n / 2.0,
        ))
    return out
