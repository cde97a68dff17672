"""Worked applications: finite-size E91 key rates and fully quantum
random access code fidelity bounds.

The key-length calculator instantiates every asymptotically vanishing term
explicitly and reports an itemised breakdown:

* accumulation term at smoothing eps/4 with the tangent tradeoff function,
* a max-entropy charge for the diagonal-basis test outcomes (constant
  max-tradeoff at mu^2 per round, register dimension 3),
* error-correction leakage n * theta_ec,
* a chain-rule constant log(8/eps^2) for splitting off the test outcomes,
* a privacy-amplification slack 2 log(1/eps) + 2 (external convention; the
  two-universal-hashing analyses leave this O(1) term implicit).

Every vertex of the statistics alphabet {0, 1, perp} is infeasible: the
basis coins make P(X != perp) = mu^2 exactly for every input state, so no
single-symbol frequency is reachable and the tangent's (enormous) affine
extension never enters the accumulation constants.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .accumulation import (
    BoundResult,
    EATParams,
    TradeoffSpec,
    eat_c,
    eat_max_bound,
    eat_min_bound,
    tangent_tradeoff,
)
from .entropy import h_shannon_binary

QKD_ALPHABET = ("0", "1", "perp")
D_KEY_ROUND = 9   # A_i holds (key outcome, test outcome), each in {0, 1, perp}
D_TEST_ROUND = 3  # the test outcome alone


@dataclass(frozen=True)
class QKDParams:
    n: int
    mu: float
    e: float
    theta_ec: float
    epsilon: float
    p_omega: float = 0.5
    r: float | None = None

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if not 0.0 < self.mu < 1.0:
            raise ValueError(f"mu {self.mu} outside (0, 1)")
        if not 0.0 < self.e < 0.5:
            raise ValueError(f"e {self.e} outside (0, 1/2)")
        if not 0.0 <= self.theta_ec <= 1.0:
            raise ValueError(f"theta_ec {self.theta_ec} outside [0, 1]")
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError(f"epsilon {self.epsilon} outside (0, 1)")
        if not 0.0 < self.p_omega <= 1.0:
            raise ValueError(f"p_omega {self.p_omega} outside (0, 1]")
        if self.r is not None and not 0.0 <= self.r <= 1.0:
            raise ValueError(f"key rate {self.r} outside [0, 1]")


def qkd_asymptotic_threshold(e: float, theta_ec: float, mu: float) -> float:
    """Secure iff the key rate stays strictly below 1 - H_Sh(e) - theta - 2 mu."""
    return 1.0 - h_shannon_binary(e) - theta_ec - 2.0 * mu


def qkd_q0(mu: float, e: float) -> dict[str, float]:
    """The tangent point: test errors at rate e among the mu^2 test rounds."""
    return {"0": (1.0 - e) * mu * mu, "1": e * mu * mu, "perp": 1.0 - mu * mu}


def qkd_tradeoff(mu: float) -> TradeoffSpec:
    """Convex min-tradeoff from the entropic uncertainty relation.

    On the reachable slice q(0) + q(1) = mu^2 the bound is
    1 - 2 mu + mu^2 - H_Sh(q(1) / mu^2); off the slice no state exists, so
    the function is irrelevant there (set to 1).  The stored gradient puts
    the whole slope on the q(1) coordinate.
    """
    if not 0.0 < mu < 1.0:
        raise ValueError(f"mu {mu} outside (0, 1)")
    mu2 = mu * mu
    base = 1.0 - 2.0 * mu + mu2

    def evaluator(q) -> float:
        mass = q.get("0", 0.0) + q.get("1", 0.0)
        if abs(mass - mu2) > 1e-9:
            return 1.0
        return base - h_shannon_binary(min(max(q.get("1", 0.0) / mu2, 0.0), 1.0))

    def gradient(q) -> dict[str, float]:
        ratio = min(max(q.get("1", 0.0) / mu2, 1e-12), 1.0 - 1e-12)
        slope = -math.log2((1.0 - ratio) / ratio) / mu2
        return {"0": 0.0, "1": slope, "perp": 0.0}

    # the basis coins fix P(X != perp) = mu^2 < 1, so no vertex is reachable
    feasible = {x: False for x in QKD_ALPHABET}
    return TradeoffSpec(QKD_ALPHABET, "min", {x: 1.0 for x in QKD_ALPHABET},
                        feasible, evaluator, gradient)


@dataclass(frozen=True)
class QKDReport:
    key_bits: float
    vacuous: bool
    breakdown: dict[str, float]

    @property
    def rate(self) -> float:
        return self.key_bits / self.breakdown["n"]


def qkd_finite_key_length(params: QKDParams) -> QKDReport:
    """Extractable key length with an itemised finite-size breakdown."""
    eps = params.epsilon
    eps_eat = eps / 4.0
    tangent, h = tangent_tradeoff(qkd_tradeoff(params.mu), qkd_q0(params.mu, params.e))

    eat_params = EATParams(n=params.n, d_a=D_KEY_ROUND, epsilon=eps_eat,
                           p_omega=params.p_omega, h=h)
    eat = eat_min_bound(eat_params, tangent)

    max_tradeoff = TradeoffSpec.constant(params.mu**2, QKD_ALPHABET, kind="max",
                                         feasible={x: False for x in QKD_ALPHABET})
    max_params = EATParams(n=params.n, d_a=D_TEST_ROUND, epsilon=eps_eat,
                           p_omega=params.p_omega, h=params.mu**2)
    max_charge = eat_max_bound(max_params, max_tradeoff)

    ec_leakage = params.n * params.theta_ec
    chain_slack = math.log2(8.0 / (eps * eps))
    pa_slack = 2.0 * math.log2(1.0 / eps) + 2.0

    key = eat.value - max_charge.value - ec_leakage - chain_slack - pa_slack
    breakdown = {
        "n": float(params.n),
        "h": h,
        "eat_lower_bound": eat.value,
        "eat_c": eat_c(tangent, eat_params),
        "max_entropy_charge": max_charge.value,
        "max_entropy_c": eat_c(max_tradeoff, max_params),
        "ec_leakage": ec_leakage,
        "chain_rule_slack": chain_slack,
        "pa_slack": pa_slack,
        "key_bits": key,
        "asymptotic_threshold": qkd_asymptotic_threshold(params.e, params.theta_ec, params.mu),
    }
    vacuous = key <= 0.0 or eat.vacuous
    return QKDReport(key, vacuous, breakdown)


# ---------------------------------------------------------------------------
# fully quantum random access codes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FQRACParams:
    """(epsilon, m, n, k) random access code; f^2 = 1 - epsilon."""

    m: int
    n: int
    k: int
    f_squared: float = 1.0

    def __post_init__(self):
        if min(self.m, self.n, self.k) < 1:
            raise ValueError("m, n, k must be positive")
        if self.k > self.m:
            raise ValueError(f"k = {self.k} exceeds m = {self.m}")
        if not 0.0 < self.f_squared <= 1.0:
            raise ValueError(f"f^2 {self.f_squared} outside (0, 1]")

    @property
    def epsilon(self) -> float:
        return 1.0 - self.f_squared


@dataclass(frozen=True)
class FQRACReport:
    bound_on_fsq: float
    vacuous: bool
    condition_satisfied: bool
    necessary_satisfied: bool


LOG2_5 = math.log2(5.0)


def fqrac_bound(params: FQRACParams) -> FQRACReport:
    """Fidelity constraint f^2 < 2^(-k ((m-n-k+1)/(5m))^2 + 3).

    Also evaluates the sharper smooth-entropy condition
    sqrt(4 k log(8/f^2)) log 5 >= k (m-n-k+1)/m - log(3/f^3) and the derived
    necessary condition log(8/f^2) > k ((m-n-k+1)/(5m))^2 at the given f.
    """
    m, n, k = params.m, params.n, params.k
    margin = (m - n - k + 1) / (5.0 * m)
    exponent = -k * margin * margin + 3.0
    bound = 2.0**exponent

    f2 = params.f_squared
    f = math.sqrt(f2)
    lhs = math.sqrt(4.0 * k * math.log2(8.0 / f2)) * LOG2_5
    rhs = k * ((m - n - k + 1) / m) - math.log2(3.0 / f**3)
    condition_satisfied = lhs >= rhs
    necessary_satisfied = math.log2(8.0 / f2) > k * margin * margin
    return FQRACReport(bound, vacuous=bound >= 1.0,
                       condition_satisfied=condition_satisfied,
                       necessary_satisfied=necessary_satisfied)
