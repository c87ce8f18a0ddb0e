"""Frozen numerical tolerances used across modules and tests.

These are part of the package contract: exact-arithmetic identities are
checked at rounding-error scale, derived quantities at the scale their
algorithms guarantee.  Tests import these rather than re-inventing numbers.
"""

from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    # exact identities (float rounding only)
    row_sum: float = 1e-14          # kernel rows sum to one
    kernel_match: float = 1e-14     # folded kernel vs. brute-force lumping
    prob_mass: float = 1e-12        # probability vectors sum to one
    tv_identity: float = 1e-12      # full-dynamics TV vs. magnetization TV
    # root finding / eigenvalues
    zeta_residual: float = 1e-12    # |tanh(beta*zeta) - zeta|
    eig_bisect: float = 1e-12       # Sturm bisection interval width
    lambda2_match: float = 1e-9     # independent lambda_2 routes agree
    # derived laws
    stationary_match: float = 1e-10   # stationary law vs. Gibbs marginal
    pi_from_conductance: float = 1e-10  # stationary law rebuilt from conductances
    detailed_balance: float = 1e-10   # relative residual before NotReversible
    schedule_rel: float = 1e-9      # cutoff schedule closed forms


TOL = Tolerances()
