"""Model parameters, heat-bath probabilities and the cutoff-time schedule.

The mean-field ferromagnet on n sites at inverse temperature beta = 1 + delta
(delta > 0 is the low-temperature regime this laboratory targets).  All times
are measured in single-site updates; callers round up when an integer number
of steps is needed.
"""

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import NoPositiveRoot, OutsideRegime
from .tolerances import TOL


def p_plus(s, beta):
    """Heat-bath probability of updating a site to +1 given field s.

    Accepts scalars or arrays; p_plus(s) + p_minus(s) = 1 and
    p_minus(-s) = p_plus(s).
    """
    return 0.5 * (1.0 + np.tanh(beta * np.asarray(s)))


def p_minus(s, beta):
    """Heat-bath probability of updating a site to -1 given field s."""
    return 0.5 * (1.0 - np.tanh(beta * np.asarray(s)))


def solve_zeta(beta, tol=TOL.zeta_residual):
    """Unique positive root of tanh(beta*x) = x.

    Parameters
    ----------
    beta : float
        Inverse temperature; must exceed 1, otherwise the only root is 0
        and NoPositiveRoot is raised.

    Returns
    -------
    float
        The root, with residual |tanh(beta*zeta) - zeta| <= tol.

    Notes
    -----
    Bisection on (1e-12, 1) guarantees a bracket (the function is positive
    just above 0 and negative at 1 whenever beta > 1); a short Newton
    refinement then drives the residual to rounding level.
    """
    if not beta > 1.0:
        raise NoPositiveRoot(f"tanh({beta}*x) = x has no positive root; need beta > 1")
    lo, hi = 1e-12, 1.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if math.tanh(beta * mid) > mid:
            lo = mid
        else:
            hi = mid
    x = 0.5 * (lo + hi)
    for _ in range(50):
        t = math.tanh(beta * x)
        f = t - x
        if abs(f) <= 1e-16:
            break
        fp = beta * (1.0 - t * t) - 1.0
        x_new = x - f / fp
        if not lo <= x_new <= hi:
            x_new = 0.5 * (lo + hi)
        x = x_new
    if abs(math.tanh(beta * x) - x) > tol:
        raise NoPositiveRoot(f"root refinement stalled at beta={beta}")
    return x


@dataclass(frozen=True)
class ModelParams:
    """Size and temperature of one model instance.

    delta = beta - 1 may be negative or zero; quantities that only exist at
    low temperature (zeta, the cutoff schedule) raise when asked for there.
    """

    n: int
    beta: float

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or isinstance(self.n, bool):
            raise TypeError(f"n must be an integer, got {self.n!r}")
        if self.n < 2:
            raise ValueError(f"need at least two sites, got n={self.n}")
        if not (isinstance(self.beta, (int, float, np.floating)) and math.isfinite(self.beta)):
            raise TypeError(f"beta must be a finite number, got {self.beta!r}")
        if self.beta <= 0:
            raise ValueError(f"beta must be positive, got {self.beta}")

    @property
    def delta(self):
        return self.beta - 1.0

    @cached_property
    def zeta(self):
        return solve_zeta(self.beta)


@dataclass(frozen=True)
class CutoffSchedule:
    """The closed-form time scales of the mixing profile.

    t1, t2 cover the drift through the flat region near 0, t3 = t4 the
    contraction onto the equilibrium magnetization; the worst-case mixing
    time is t1 + t2 + t3 and the all-plus start mixes at t_n_plus = t3.
    All entries are real numbers of single-site updates (callers take
    ceilings); window_unit = n/delta is the cutoff-window scale.
    """

    n: int
    beta: float
    delta: float
    zeta: float
    t1: float
    t2: float
    t3: float
    t4: float
    t_n_worst: float
    t_n_plus: float
    window_unit: float


def cutoff_schedule(params):
    """Evaluate the cutoff schedule for params, requiring delta^2 * n > 1.

    Raises
    ------
    NoPositiveRoot
        If beta <= 1.
    OutsideRegime
        If delta^2 * n <= 1, where log(delta^2 n) <= 0 makes the closed
        forms meaningless.
    """
    zeta = solve_zeta(params.beta)  # raises NoPositiveRoot for beta <= 1
    n, delta = params.n, params.delta
    if delta * delta * n <= 1.0:
        raise OutsideRegime(
            f"delta^2*n = {delta * delta * n:.6g} <= 1 at (n={n}, beta={params.beta}); "
            "the cutoff asymptotics need delta^2*n large"
        )
    unit = n / delta
    grow = math.log(delta * delta * n)
    t1 = 0.25 * unit * grow
    contraction = zeta * zeta * params.beta / delta - 1.0
    t3 = unit * grow / (2.0 * contraction)
    return CutoffSchedule(
        n=n,
        beta=params.beta,
        delta=delta,
        zeta=zeta,
        t1=t1,
        t2=t1,
        t3=t3,
        t4=t3,
        t_n_worst=t1 + t1 + t3,
        t_n_plus=t3,
        window_unit=unit,
    )
