"""Tests for the magnetization birth-and-death chain module.

Exact small-n results are checked against the independent brute-force
enumeration in cwlab.oracle; larger-n numbers that only this module can
produce are frozen here after a dual-route computation (Sturm bisection vs
dense eigensolve, detailed-balance pi vs conductance-degree pi, bisected
t_mix vs stepwise scan).
"""

import numpy as np
import pytest

from cwlab import magchain as mc
from cwlab import oracle as oc
from cwlab.errors import (
    NeedLargerHorizon,
    NotReversible,
    Reducible,
    TooLarge,
)
from cwlab.model import ModelParams, cutoff_schedule, p_minus, p_plus

# Values frozen from dual-route runs of this module (n=1024, beta=1.2, censored).
GAP_1024 = 0.00018773428343710208          # Sturm bisection; dense eigensolve agrees to 1.5e-13
PHI_STAR_1024 = 0.0053745373853327305
PHI_CUT_1024 = 674                          # suffix cut just below zeta*n = 674.4
PI_CONSTANT_1024 = 1.1666034945516293
DIRICHLET_1024 = 0.0003005841823153223
LAMBDA2_10_13_CENS = 0.943379032779         # matches the full-kernel dense eigensolve
T_MIX_16_13 = {0.25: 43, 0.1: 77, 0.01: 162}  # stepwise-scan verified


def kernel(n, beta, censored):
    return mc.build_kernel(ModelParams(n=n, beta=beta), censored)


# ---------------------------------------------------------------------------
# Lattice plumbing


def test_lattice_shapes():
    lat = mc.MagLattice.build(8, censored=False)
    assert lat.nstates == 9
    assert lat.j[0] == -8 and lat.j[-1] == 8
    assert mc.MagLattice.build(8, censored=True).j[0] == 0
    assert mc.MagLattice.build(9, censored=True).j[0] == 1
    assert mc.MagLattice.build(9, censored=False).nstates == 10


def test_lattice_index_roundtrip():
    lat = mc.MagLattice.build(9, censored=True)
    for k, j in enumerate(lat.j):
        assert lat.index_of(int(j)) == k
    with pytest.raises(ValueError):
        lat.index_of(2)  # wrong parity
    with pytest.raises(ValueError):
        lat.index_of(11)


def test_round_to_lattice_sides():
    lat = mc.MagLattice.build(100, censored=True)
    # 0.61 * 100 = 61 sits between lattice points 60 and 62
    assert lat.round_to_lattice(0.61, side="up") == 62
    assert lat.round_to_lattice(0.61, side="down") == 60
    assert lat.round_to_lattice(0.61) == 62
    assert lat.round_to_lattice(0.60, side="up") == 60  # exact hit stays put
    assert lat.round_to_lattice(1.7) == 100             # clamped
    assert lat.round_to_lattice(-0.3, side="down") == 0


# ---------------------------------------------------------------------------
# Kernel construction


@pytest.mark.parametrize("n,beta,censored", [
    (64, 1.2, False), (64, 1.2, True), (65, 1.3, True), (1024, 1.1, True), (256, 0.8, False),
])
def test_kernel_rows(n, beta, censored):
    kern = kernel(n, beta, censored)
    rows = kern.p + kern.q + kern.h
    assert np.abs(rows - 1.0).max() <= 1e-14
    assert kern.p.min() >= 0 and kern.q.min() >= 0 and kern.h.min() > 0
    assert kern.p[-1] == 0.0          # no up-move from all-plus
    if censored:
        assert kern.q[0] == 0.0       # censoring removes the bottom down-move
    else:
        assert kern.q[0] == 0.0       # no down-move from all-minus either


def test_ordinary_kernel_formulas():
    # the rates in closed form: an up-move picks one of the (n-j)/2 minus
    # sites and flips it with probability p_plus((j+1)/n)
    n, beta = 10, 1.3
    kern = kernel(n, beta, False)
    j = kern.lattice.j.astype(float)
    assert np.abs(kern.p - (n - j) / (2 * n) * p_plus((j + 1) / n, beta)).max() == 0.0
    assert np.abs(kern.q - (n + j) / (2 * n) * p_minus((j - 1) / n, beta)).max() == 0.0


def test_censored_bottom_row_even():
    # even n: the fold sends the j=0 down-move to |j|=2, so p0 is the full
    # refresh probability p_plus(1/n) and the hold is its complement
    kern = kernel(12, 1.2, True)
    assert abs(kern.p[0] - p_plus(1.0 / 12.0, 1.2)) <= 1e-15
    assert kern.q[0] == 0.0
    assert abs(kern.h[0] - (1.0 - p_plus(1.0 / 12.0, 1.2))) <= 1e-15


def test_censored_bottom_row_odd():
    # odd n: bottom state is j=1 and its down-move folds into holding
    n, beta = 9, 1.2
    kern = kernel(n, beta, True)
    p_exp = (n - 1) / (2.0 * n) * p_plus(2.0 / n, beta)
    q_folded = (n + 1) / (2.0 * n) * p_minus(0.0, beta)
    assert abs(kern.p[0] - p_exp) <= 1e-15
    assert kern.q[0] == 0.0
    assert abs(kern.h[0] - (1.0 - p_exp)) <= 1e-15
    ordinary = kernel(n, beta, False)
    k1 = ordinary.lattice.index_of(1)
    assert abs(kern.h[0] - (ordinary.h[k1] + q_folded)) <= 1e-15


@pytest.mark.parametrize("n,beta,censored", [
    (8, 1.2, True), (8, 1.2, False), (9, 1.3, True), (9, 1.3, False), (12, 1.1, True),
])
def test_kernel_matches_lumped_oracle(n, beta, censored):
    kern = kernel(n, beta, censored)
    levels, L, witness = oc.lumped_kernel(oc.full_kernel(n, beta, censored))
    assert witness <= 1e-14
    assert np.array_equal(levels, kern.lattice.j)
    m = levels.size
    for k in range(m):
        assert abs(L[k, k] - kern.h[k]) <= 1e-14
        if k + 1 < m:
            assert abs(L[k, k + 1] - kern.p[k]) <= 1e-14
        if k >= 1:
            assert abs(L[k, k - 1] - kern.q[k]) <= 1e-14


# ---------------------------------------------------------------------------
# Drift, contraction, and the stationary law


def test_submartingale_drift_below_zeta():
    # censored chain: E[S_1 | S_0 = s] >= s for lattice s in [0, zeta - 2/n]
    for n, beta in [(1024, 1.2), (256, 1.1)]:
        params = ModelParams(n=n, beta=beta)
        kern = mc.build_kernel(params, True)
        s = kern.lattice.s
        sel = s <= params.zeta - 2.0 / n + 1e-15
        assert kern.drift()[sel].min() >= 0.0


def test_drift_sign_change_at_zeta():
    params = ModelParams(n=1024, beta=1.2)
    kern = mc.build_kernel(params, True)
    s = kern.lattice.s
    drift = kern.drift()
    assert drift[(s > 0) & (s <= params.zeta - 2.0 / params.n)].min() > 0.0
    assert drift[s >= params.zeta + 2.0 / params.n].max() < 0.0


def test_contraction_near_zeta():
    # E[|S_1 - zeta|] <= |s - zeta| on [zeta/2 + 2/n, 1 - 2/n], except within
    # one lattice step of zeta where the one-step diffusion floor ~2/n
    # necessarily dominates a vanishing |s - zeta| (measured worst excess
    # 0.23*(2/n) at the nearest state)
    params = ModelParams(n=1024, beta=1.2)
    n, zeta = params.n, params.zeta
    kern = mc.build_kernel(params, True)
    s = kern.lattice.s
    e_next = (
        kern.p * np.abs(s + 2.0 / n - zeta)
        + kern.q * np.abs(s - 2.0 / n - zeta)
        + kern.h * np.abs(s - zeta)
    )
    gain = e_next - np.abs(s - zeta)
    sel = (s >= zeta / 2 + 2.0 / n - 1e-15) & (s <= 1.0 - 2.0 / n + 1e-15)
    far = sel & (np.abs(s - zeta) >= 2.0 / n)
    near = sel & (np.abs(s - zeta) < 2.0 / n)
    assert gain[far].max() <= 0.0
    assert near.sum() <= 2
    assert gain[near].max() <= 2.0 / n


@pytest.mark.parametrize("n,beta,censored", [
    (10, 1.3, True), (10, 1.3, False), (9, 1.2, True), (12, 1.1, True),
])
def test_stationary_matches_gibbs_marginal(n, beta, censored):
    kern = kernel(n, beta, censored)
    pi = mc.stationary(kern)
    levels, probs = oc.gibbs(n, beta, censored).magnetization_marginal()
    assert np.array_equal(levels, kern.lattice.j)
    assert np.max(np.abs(pi.mass - probs) / probs) <= 1e-10


def test_stationary_detailed_balance():
    for n, beta, censored in [(1024, 1.2, True), (511, 1.3, True), (256, 0.9, False)]:
        kern = kernel(n, beta, censored)
        pi = mc.stationary(kern)
        flow_up = pi.mass[:-1] * kern.p[:-1]
        flow_dn = pi.mass[1:] * kern.q[1:]
        assert np.abs(flow_up - flow_dn).max() <= 1e-12


def test_stationary_reducible_error():
    lat = mc.MagLattice.build(4, censored=True)
    kern = mc.BirthDeathKernel(
        lattice=lat, beta=1.0,
        p=np.array([0.3, 0.0, 0.0]),
        q=np.array([0.0, 0.2, 0.1]),
        h=np.array([0.7, 0.8, 0.9]),
    )
    with pytest.raises(Reducible):
        mc.stationary(kern)


def test_stationary_concentration_band():
    params = ModelParams(n=1024, beta=1.2)
    kern = mc.build_kernel(params, True)
    pi = mc.stationary(kern)
    s = kern.lattice.s
    scale = 1.0 / np.sqrt(params.delta * params.n)
    masses = [
        float(pi.mass[np.abs(s - params.zeta) <= B * scale].sum()) for B in (2, 5, 10)
    ]
    assert masses == sorted(masses)
    assert masses[-1] >= 0.9


# ---------------------------------------------------------------------------
# Law evolution


def test_evolve_matches_oracle_censored():
    n, beta, steps = 12, 1.2, 50
    kern = kernel(n, beta, True)
    full = oc.full_kernel(n, beta, True)
    mask0 = (1 << 6) - 1  # six plus spins: spin sum 0
    v0 = np.zeros(full.nstates)
    v0[int(np.flatnonzero(full.states == mask0)[0])] = 1.0
    proj = np.array([
        oc.evolve_full(full, v0, steps)[full.j == jv].sum() for jv in kern.lattice.j
    ])
    law = mc.evolve(mc.ProbVector.point(kern.lattice, 0), kern, steps)
    assert np.abs(law.mass - proj).max() <= 1e-12


def test_evolve_matches_oracle_ordinary():
    n, beta, steps = 12, 1.2, 50
    kern = kernel(n, beta, False)
    full = oc.full_kernel(n, beta, False)
    v0 = np.zeros(full.nstates)
    v0[int(np.flatnonzero(full.states == (1 << n) - 1)[0])] = 1.0
    proj = np.array([
        oc.evolve_full(full, v0, steps)[full.j == jv].sum() for jv in kern.lattice.j
    ])
    law = mc.evolve(mc.ProbVector.point(kern.lattice, n), kern, steps)
    assert np.abs(law.mass - proj).max() <= 1e-12


@pytest.mark.parametrize("n", [64, 33])
def test_fold_identity(n):
    # law of |S_t| under the ordinary kernel == law of the censored chain
    beta = 1.15
    ko = kernel(n, beta, False)
    kc = kernel(n, beta, True)
    j0 = int(kc.lattice.j[0])
    for t in (1, 10, 100):
        ordinary = mc.evolve(mc.ProbVector.point(ko.lattice, j0), ko, t)
        censored = mc.evolve(mc.ProbVector.point(kc.lattice, j0), kc, t)
        assert np.abs(mc.fold_law(ordinary).mass - censored.mass).max() <= 1e-14


def test_flip_symmetry_of_ordinary_evolution():
    n, beta, t = 32, 1.25, 50
    kern = kernel(n, beta, False)
    up = mc.evolve(mc.ProbVector.point(kern.lattice, 6), kern, t)
    dn = mc.evolve(mc.ProbVector.point(kern.lattice, -6), kern, t)
    assert np.abs(up.mass - dn.mass[::-1]).max() <= 1e-15


def test_evolve_conserves_mass():
    kern = kernel(512, 1.2, True)
    law = mc.evolve(mc.ProbVector.point(kern.lattice, 0), kern, 2000)
    assert abs(law.mass.sum() - 1.0) <= 1e-12
    assert law.renormalizations >= 0


def test_moments_basic():
    kern = kernel(64, 1.2, True)
    pi = mc.stationary(kern)
    m1, m2, m4 = mc.moments(pi, 0.0, [1, 2, 4])
    s = kern.lattice.s
    assert abs(m1 - float(s @ pi.mass)) <= 1e-15
    assert abs(m2 - float(s**2 @ pi.mass)) <= 1e-15
    assert abs(m4 - float(s**4 @ pi.mass)) <= 1e-15
    mean = mc.moments(pi, 0.0, [1])[0]
    var = mc.moments(pi, mean, [2])[0]
    assert var >= 0.0
    with pytest.raises(ValueError):
        mc.moments(pi, 0.0, [5])


def test_exact_variance_bound():
    # var_{s0} S_t <= (5/n^2) sum_{i<t} (1 + 2 delta/n)^i up to T_1, from the
    # bottom state (s0 = 0 for even n, 1/n for odd n)
    for n, censored in [(256, False), (256, True), (255, True)]:
        params = ModelParams(n=n, beta=1.2)
        T1 = int(cutoff_schedule(params).t1)
        kern = mc.build_kernel(params, censored)
        s = kern.lattice.s
        v = mc.ProbVector.point(kern.lattice, int(kern.lattice.j[0])).mass.copy()
        partial_sum, growth = 0.0, 1.0
        for t in range(1, T1 + 1):
            v = mc._step(kern, v)
            partial_sum += growth
            growth *= 1.0 + 2.0 * params.delta / n
            mean = float(s @ v)
            var = float(((s - mean) ** 2) @ v)
            assert var <= 5.0 / n**2 * partial_sum


# ---------------------------------------------------------------------------
# TV profiles and t_mix


def test_tv_profile_matches_full_oracle():
    n, beta = 10, 1.2
    params = ModelParams(n=n, beta=beta)
    grid = [0, 1, 2, 5, 10, 20, 50]
    prof = mc.tv_profile(params, True, ["top"], grid)
    full_d = oc.tv_profile_full(oc.full_kernel(n, beta, True), (1 << n) - 1, grid)
    assert np.abs(prof.d[n] - full_d).max() <= 1e-12


def test_tv_profile_monotone_and_normalized():
    params = ModelParams(n=64, beta=1.3)
    grid = [0, 5, 10, 25, 50, 100, 200, 400]
    prof = mc.tv_profile(params, True, ["bottom", "top"], grid)
    for j0 in prof.starts:
        col = prof.d[j0]
        assert col[0] <= 1.0 and col.min() >= 0.0
        assert np.all(np.diff(col) <= 1e-15)
    worst = prof.worst()
    assert np.all(worst >= prof.d[prof.starts[0]] - 1e-15)


def test_t_mix_matches_stepwise_scan():
    params = ModelParams(n=16, beta=1.3)
    prof = mc.tv_profile(params, True, ["bottom"], [0, 50, 100, 200, 400])
    kern = prof.kernel
    pi = prof.pi
    v = mc.ProbVector.point(kern.lattice, 0).mass.copy()
    d_exact = [0.5 * np.abs(v - pi.mass).sum()]
    for _ in range(400):
        v = mc._step(kern, v)
        d_exact.append(0.5 * np.abs(v - pi.mass).sum())
    d_exact = np.array(d_exact)
    for eps, frozen in T_MIX_16_13.items():
        tm = mc.t_mix(prof, eps)
        assert tm == int(np.flatnonzero(d_exact <= eps)[0])
        assert tm == frozen


def test_t_mix_epsilon_monotone_and_cached():
    params = ModelParams(n=32, beta=1.25)
    prof = mc.tv_profile(params, True, ["bottom"], [0, 100, 200, 400, 800])
    t50 = mc.t_mix(prof, 0.5)
    t25 = mc.t_mix(prof, 0.25)
    t10 = mc.t_mix(prof, 0.1)
    assert t50 <= t25 <= t10
    assert mc.t_mix(prof, 0.25) == t25  # cached snapshots give identical answers
    # off-grid query equals a fresh evolution
    law = mc.evolve(mc.ProbVector.point(prof.kernel.lattice, 0), prof.kernel, 137)
    assert abs(prof.d_at(0, 137) - 0.5 * np.abs(law.mass - prof.pi.mass).sum()) <= 1e-14


def test_t_mix_horizon_error():
    params = ModelParams(n=64, beta=1.3)
    prof = mc.tv_profile(params, True, ["bottom"], [0, 5, 10])
    with pytest.raises(NeedLargerHorizon):
        mc.t_mix(prof, 0.01)


def test_tv_all_starts_small_n():
    params = ModelParams(n=16, beta=1.2)
    prof = mc.tv_all_starts(params, True, [0, 10, 30, 60])
    assert len(prof.starts) == prof.kernel.lattice.nstates
    worst = prof.worst()
    extremes = np.maximum(prof.d[0], prof.d[16])
    assert np.abs(worst - extremes).max() <= 1e-15  # extremes realize the worst case
    with pytest.raises(TooLarge):
        mc.tv_all_starts(ModelParams(n=66, beta=1.2), True, [0, 10])


# ---------------------------------------------------------------------------
# Conductances


def test_conductance_pi_agreement():
    for n, beta in [(256, 1.1), (1024, 1.2), (511, 1.3)]:
        kern = kernel(n, beta, True)
        prof = mc.conductance_profile(kern)
        assert prof.pi_agreement <= 1e-10
        assert 1.0 < prof.pi_constant < 2.0
        pi2 = mc.stationary_from_conductances(kern)
        pi = mc.stationary(kern)
        assert np.max(np.abs(pi2.mass - pi.mass) / pi.mass) <= 1e-10


def test_conductance_edge_measure_dual_route():
    # pi(x) p_x (detailed balance route) == c_x / sum of degrees (conductance
    # route) for every prefix cut, and the mirrored identity for suffix cuts
    kern = kernel(8, 1.2, True)
    prof = mc.conductance_profile(kern)
    pi = mc.stationary(kern)
    deg_total = prof.pi_constant * prof.c_total
    m = kern.lattice.nstates
    for k in range(m - 1):
        assert abs(pi.mass[k] * kern.p[k] - prof.c[k] / deg_total) <= 1e-12 * pi.mass[k] * kern.p[k]
    for k in range(1, m):
        assert abs(pi.mass[k] * kern.q[k] - prof.c[k - 1] / deg_total) <= 1e-12 * pi.mass[k] * kern.q[k]


def test_conductance_frozen_values():
    kern = kernel(1024, 1.2, True)
    prof = mc.conductance_profile(kern)
    assert abs(prof.phi_star - PHI_STAR_1024) <= 1e-12 * PHI_STAR_1024
    assert prof.phi_star_cut == PHI_CUT_1024
    assert prof.phi_star_side == "top"
    assert abs(prof.pi_constant - PI_CONSTANT_1024) <= 1e-12 * PI_CONSTANT_1024


def test_phi_star_brute_force_small_n():
    # check the endpoint-anchored scan against all interval cuts at n=12
    kern = kernel(12, 1.3, True)
    prof = mc.conductance_profile(kern)
    pi = mc.stationary(kern).mass
    m = kern.lattice.nstates
    best = np.inf
    for a in range(m):
        for b in range(a, m):
            mass = pi[a:b + 1].sum()
            if mass > 0.5:
                continue
            flow = 0.0
            if a > 0:
                flow += pi[a] * kern.q[a]
            if b < m - 1:
                flow += pi[b] * kern.p[b]
            best = min(best, flow / mass)
    assert prof.phi_star <= best + 1e-15


# ---------------------------------------------------------------------------
# Spectral gap


@pytest.mark.parametrize("n,beta,censored", [
    (10, 1.3, True), (8, 1.1, True), (8, 1.3, False),
])
def test_lambda2_routes_agree(n, beta, censored):
    kern = kernel(n, beta, censored)
    sturm = mc.spectral_gap(kern)
    dense = mc.spectral_gap(kern, method="dense-oracle")
    assert abs(sturm.lambda2 - dense.lambda2) <= 1e-10
    lam_full = oc.lambda2_dense(oc.full_kernel(n, beta, censored))
    assert abs(sturm.lambda2 - lam_full) <= 1e-10
    assert abs(sturm.gap - (1.0 - sturm.lambda2)) <= 1e-15
    assert sturm.lambda_min > -1.0


def test_lambda2_frozen_value():
    kern = kernel(10, 1.3, True)
    assert abs(mc.spectral_gap(kern).lambda2 - LAMBDA2_10_13_CENS) <= 1e-9


def test_lumped_spectrum_contained_in_full():
    kern = kernel(8, 1.3, True)
    res = mc.spectral_gap(kern, method="dense-oracle")
    full_eigs = oc.eigenvalues_dense(oc.full_kernel(8, 1.3, True))
    for lam in (res.lambda2, res.lambda_min):
        assert np.min(np.abs(full_eigs - lam)) <= 1e-9


def test_spectral_gap_frozen_1024():
    kern = kernel(1024, 1.2, True)
    sturm = mc.spectral_gap(kern)
    dense = mc.spectral_gap(kern, method="dense-oracle")
    assert abs(sturm.gap - GAP_1024) <= 1e-11
    assert abs(sturm.gap - dense.gap) <= 5e-13
    assert abs(sturm.dirichlet_upper - DIRICHLET_1024) <= 1e-10 * DIRICHLET_1024
    assert sturm.dirichlet_upper >= sturm.gap
    assert sturm.db_residual <= 1e-10


def test_cheeger_sandwich():
    for n, beta in [(256, 1.1), (256, 1.4), (512, 1.2)]:
        kern = kernel(n, beta, True)
        gap = mc.spectral_gap(kern).gap
        phi = mc.conductance_profile(kern).phi_star
        assert phi * phi / 2.0 <= gap <= 2.0 * phi


def test_subcritical_gap_has_no_dirichlet_field():
    kern = kernel(64, 0.9, True)
    res = mc.spectral_gap(kern)
    assert res.dirichlet_upper is None
    assert res.gap > 0.0


def test_not_reversible_guard():
    kern = kernel(16, 1.2, True)
    uniform = mc.ProbVector(
        lattice=kern.lattice, mass=np.full(kern.lattice.nstates, 1.0 / kern.lattice.nstates)
    )
    with pytest.raises(NotReversible):
        mc.spectral_gap(kern, pi=uniform)


def test_spectral_gap_rejects_unknown_method():
    with pytest.raises(ValueError):
        mc.spectral_gap(kernel(16, 1.2, True), method="qr")
