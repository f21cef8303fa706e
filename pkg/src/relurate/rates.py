"""Closed-form calculators: covering-entropy bound for sparse ReLU classes,
excess-risk rate exponents for the four true-model regimes, minimax
benchmark exponents, width/depth/sparsity schedules, and variance-bound
right-hand sides for the surrogate-loss inequalities.

Infinite noise / margin exponents are passed as ``math.inf``; all infinite
cases are handled by analytic limits, never by substituting a large float.
All schedule proportionality constants are fixed to 1 (only the exponents
are testable) and ceilings are applied to integer quantities.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from .errors import InputError

CASES = ("smooth_boundary", "smooth_eta", "margin", "cross_entropy")


@dataclass(frozen=True)
class RateSpec:
    """True-model regime plus its parameters.

    ``smooth_boundary`` needs (alpha, q, d); ``smooth_eta`` needs (beta, q,
    d); ``margin`` needs (alpha, q, gamma, d); ``cross_entropy`` needs
    (alpha, gamma, d).
    """

    case: str
    d: int
    alpha: Optional[float] = None
    beta: Optional[float] = None
    q: Optional[float] = None
    gamma: Optional[float] = None

    def __post_init__(self):
        if self.case not in CASES:
            raise InputError(f"case must be one of {CASES}")
        if self.d < 2:
            raise InputError("d must be >= 2")
        need = {
            "smooth_boundary": ("alpha", "q"),
            "smooth_eta": ("beta", "q"),
            "margin": ("alpha", "q", "gamma"),
            "cross_entropy": ("alpha", "gamma"),
        }[self.case]
        for name in need:
            value = getattr(self, name)
            if value is None:
                raise InputError(f"case {self.case!r} requires parameter {name!r}")
            if name == "q":
                if not (value >= 0):
                    raise InputError("q must lie in [0, inf]")
            elif name == "gamma":
                if not (value >= 1):
                    raise InputError("gamma must lie in [1, inf]")
            elif not (value > 0):
                raise InputError(f"{name} must be positive")


def entropy_bound(L: float, N: float, S: float, B: float, delta: float) -> float:
    """Upper bound on the log covering number of the sparse ReLU class with
    depth L, width N, sparsity S and parameter bound B at scale ``delta``:
    ``2 L (S + 1) log(delta^-1 (L+1)(N+1) max(B, 1))``."""
    if delta <= 0:
        raise InputError("delta must be positive")
    if L < 1 or N < 1:
        raise InputError("L and N must be >= 1")
    if S < 0:
        raise InputError("S must be >= 0")
    return 2.0 * L * (S + 1.0) * math.log((L + 1.0) * (N + 1.0) * max(B, 1.0) / delta)


def rate_exponent(spec: RateSpec) -> float:
    """Excess-risk decay exponent: the power of ``log^3 n / n`` for the hinge
    regimes, or of ``n`` (up to log factors) for the cross-entropy regime."""
    d = spec.d
    if spec.case == "smooth_boundary":
        a, q = spec.alpha, spec.q
        if math.isinf(q):
            return a / (a + (d - 1))
        return a * (q + 1) / (a * (q + 2) + (d - 1) * (q + 1))
    if spec.case == "smooth_eta":
        b, q = spec.beta, spec.q
        if math.isinf(q):
            return 1.0
        return b * (q + 1) / (b * (q + 2) + d)
    if spec.case == "margin":
        a, q, g = spec.alpha, spec.q, spec.gamma
        if math.isinf(q) and math.isinf(g):
            return 1.0
        if math.isinf(q):
            return a / (a + (d - 1) / g)
        if math.isinf(g):
            return (q + 1) / (q + 2)
        return a * (q + 1) / (a * (q + 2) + (d - 1) * (q + 1) / g)
    # cross_entropy: kappa
    a, g = spec.alpha, spec.gamma
    if math.isinf(g):
        return 1.0
    return a * g / (a * g + d - 1)


def minimax_exponent(which: str, *, alpha: Optional[float] = None,
                     beta: Optional[float] = None, q: float = 0.0,
                     d: int = 2) -> float:
    """Benchmark lower-bound exponents for report columns.

    ``boundary_lower``: a(q+1)/(a(q+2)+(d-1)q) over smooth-boundary models;
    ``eta_lower``: b(q+1)/(b(q+2)+d) over smooth class-probability models.
    """
    if which == "boundary_lower":
        if alpha is None or alpha <= 0:
            raise InputError("boundary_lower requires alpha > 0")
        if math.isinf(q):
            return alpha / (alpha + (d - 1))
        return alpha * (q + 1) / (alpha * (q + 2) + (d - 1) * q)
    if which == "eta_lower":
        if beta is None or beta <= 0:
            raise InputError("eta_lower requires beta > 0")
        if math.isinf(q):
            return 1.0
        return beta * (q + 1) / (beta * (q + 2) + d)
    raise InputError("which must be 'boundary_lower' or 'eta_lower'")


#: gap used when the exponent defining xi_n is infinite (hard-margin /
#: noiseless regimes need only some fixed gap, not a shrinking one)
XI_DEGENERATE = 0.1
#: floor applied to F_n in the cross-entropy schedule at tiny n
F_FLOOR = 0.1


@dataclass(frozen=True)
class Schedule:
    """Architecture growth rules evaluated at one sample size."""

    n: int
    xi_n: float
    epsilon_n_sq: float
    L_n: int
    N_n: int
    S_n: int
    B_n: int
    F_n: float


def architecture_schedule(spec: RateSpec, n: int) -> Schedule:
    """Evaluate the width/depth/sparsity growth rules at sample size ``n``.

    epsilon_n^2 = (log^3 n / n)^exponent (hinge cases) or
    n^-kappa log^(3 kappa + 1) n (cross-entropy); xi_n solves
    xi = eps^2 (smooth boundary), xi^gamma = eps-ish (margin and
    cross-entropy) or xi^(q+1) = eps^2 (smooth class probability); then
    L = ceil(log(1/xi)), N = ceil(xi^-(d-1)/alpha) (xi^-d/beta for the
    smooth-probability case), S = ceil(N log(1/xi)), B = ceil(1/xi), and
    F = 1 for the hinge cases or kappa(log n - 3 log log n) (floored) for
    cross-entropy.
    """
    if n < 2:
        raise InputError("n must be >= 2")
    expo = rate_exponent(spec)
    logn = math.log(n)
    if spec.case == "cross_entropy":
        eps_sq = n ** (-expo) * logn ** (3 * expo + 1)
        if math.isinf(spec.gamma):
            xi = XI_DEGENERATE
        else:
            xi = (n ** (-expo) * logn ** (3 * expo)) ** (1.0 / spec.gamma)
    else:
        eps_sq = (logn ** 3 / n) ** expo
        if spec.case == "smooth_boundary":
            xi = eps_sq
        elif spec.case == "margin":
            xi = XI_DEGENERATE if math.isinf(spec.gamma) else eps_sq ** (1.0 / spec.gamma)
        else:  # smooth_eta
            xi = XI_DEGENERATE if math.isinf(spec.q) else eps_sq ** (1.0 / (spec.q + 1))
    xi = min(xi, 0.9)

    log_inv = math.log(1.0 / xi)
    if spec.case == "smooth_eta":
        width_pow = spec.d / spec.beta
    else:
        width_pow = (spec.d - 1) / spec.alpha
    L = max(1, math.ceil(log_inv))
    N = max(1, math.ceil(xi ** -width_pow))
    S = max(1, math.ceil(N * log_inv))
    B = max(1, math.ceil(1.0 / xi))
    if spec.case == "cross_entropy":
        F = max(expo * (logn - 3.0 * math.log(logn)), F_FLOOR)
    else:
        F = 1.0
    return Schedule(n=n, xi_n=xi, epsilon_n_sq=eps_sq, L_n=L, N_n=N, S_n=S,
                    B_n=B, F_n=F)


@dataclass(frozen=True)
class VarianceBoundParams:
    """Right-hand-side parameters of a surrogate variance bound
    ``C * base^(2 - nu) * excess^nu``.

    For the hinge loss, nu = q/(q+1), base = F + 1 and C is the
    noise-dependent constant; for the logistic loss, nu = 1 and base = F.
    """

    nu: float
    constant: float
    base: float

    def __post_init__(self):
        if not 0.0 <= self.nu <= 1.0:
            raise InputError("nu must lie in [0, 1]")
        if self.constant < 0 or self.base < 0:
            raise InputError("constant and base must be nonnegative")


def hinge_variance_params(q: float, F: float, c_eta_q: float) -> VarianceBoundParams:
    nu = 1.0 if math.isinf(q) else q / (q + 1.0)
    return VarianceBoundParams(nu=nu, constant=c_eta_q, base=F + 1.0)


def logistic_variance_params(F: float, c: float) -> VarianceBoundParams:
    return VarianceBoundParams(nu=1.0, constant=c, base=F)


def variance_bound_rhs(params: VarianceBoundParams, excess: float) -> float:
    if excess < 0:
        raise InputError("excess must be nonnegative")
    if excess == 0.0 and params.nu == 0.0:
        return params.constant * params.base ** 2
    return params.constant * params.base ** (2.0 - params.nu) * excess ** params.nu


def logistic_risk_bound_rhs(f_tilde: float) -> float:
    """Scale ``F~ exp(-F~)`` of the near-deterministic-label risk bounds."""
    return f_tilde * math.exp(-f_tilde)
