"""The exact Renyi chain rule and its Markov-conditioned bounds.

The chain rule splits H_alpha(A1 A2 | B) into H_alpha(A1 | B) plus the
entropy of A2 evaluated on a specific rotated state nu; under the Markov
condition A1 <-> B1 <-> B2 the same construction sandwiches the entropy
difference between an infimum and a supremum over states sharing the
conditional operator rho_{A2 B2 | A1 B1}.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .config import tolerances
from .entropy import h_alpha
from .ops import (
    MultipartiteOperator,
    OperatorError,
    embed,
    frac_power,
    hermitize,
    partial_trace,
    support_projector,
)
from .sampling import random_density, rng_from
from .states import conditional_operator, markov_violation


class MarkovError(ValueError):
    """The required Markov chain condition does not hold."""


@dataclass(frozen=True)
class ChainRuleWitness:
    nu_state: MultipartiteOperator
    lhs: float
    rhs_sum: float

    @property
    def residual(self) -> float:
        return abs(self.lhs - self.rhs_sum)


def build_nu(rho: MultipartiteOperator, a2: Sequence[str], sigma_b: MultipartiteOperator,
             alpha: float) -> MultipartiteOperator:
    """The chain-rule state nu_{A1 A2 B} for a given sigma_B and alpha.

    nu_{A1 B} is the normalised alpha-power of
    rho_{A1B}^{1/2} sigma_B^{(1-alpha)/alpha} rho_{A1B}^{1/2}, and the full
    state restores A2 through the conditional operator of rho:
    nu = nu_{A1B}^{1/2} rho_{A2|A1B} nu_{A1B}^{1/2}.
    """
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    a2 = list(a2)
    b = [r.label for r in sigma_b.registers]
    a1b = [r.label for r in rho.registers if r.label not in set(a2)]
    if set(b) - set(a1b):
        raise OperatorError("sigma_B registers must appear in rho and be disjoint from A2")

    rho_a1b = partial_trace(rho, a1b)
    sigma_emb = embed(frac_power(sigma_b, (1.0 - alpha) / alpha), rho_a1b.registers)
    half = frac_power(rho_a1b, 0.5)
    core = hermitize(half.entries @ sigma_emb.entries @ half.entries)
    powered = frac_power(core, alpha)
    tr = float(np.trace(powered).real)
    if tr <= 0:
        raise OperatorError("nu_{A1B} has no mass; support condition violated")
    nu_a1b = MultipartiteOperator(rho_a1b.registers, powered / tr)

    cond_op = conditional_operator(rho, a1b)
    nu_half = embed(frac_power(nu_a1b, 0.5), rho.registers)
    nu = hermitize(nu_half.entries @ cond_op.entries @ nu_half.entries)
    return MultipartiteOperator(rho.registers, nu)


def chain_rule_exact_check(rho: MultipartiteOperator, a1: Sequence[str], a2: Sequence[str],
                           alpha: float) -> ChainRuleWitness:
    """Verify H_alpha(A1 A2|B) = H_alpha(A1|B) + H_alpha(A2|A1 B)_nu.

    B is everything outside A1 and A2; nu is built with sigma_B = rho_B.
    """
    a1, a2 = list(a1), list(a2)
    b = [r.label for r in rho.registers if r.label not in set(a1) | set(a2)]
    lhs = h_alpha(rho, b, alpha)
    sigma_b = partial_trace(rho, b) if b else None
    if sigma_b is None:
        raise OperatorError("chain rule needs a nonempty conditioning system B")
    nu = build_nu(rho, a2, sigma_b, alpha)
    term1 = h_alpha(rho, b, alpha) if not a1 else h_alpha(partial_trace(rho, a1 + b), b, alpha)
    term2 = h_alpha(nu, a1 + b, alpha)
    return ChainRuleWitness(nu, lhs, term1 + term2)


def _random_supported_density(proj: np.ndarray, rng) -> np.ndarray:
    """Random density operator supported inside the given projector."""
    d = proj.shape[0]
    raw = random_density(d, rng)
    out = hermitize(proj @ raw @ proj)
    tr = float(np.trace(out).real)
    if tr <= 1e-12:
        raise OperatorError("support projector annihilated the sample")
    return out / tr


def nu_from_marginal(rho: MultipartiteOperator, a1b1: Sequence[str],
                     nu_marginal: np.ndarray) -> MultipartiteOperator:
    """Conjugate rho's conditional operator by a replacement A1B1 marginal."""
    cond_op = conditional_operator(rho, a1b1)
    marg_regs = partial_trace(rho, a1b1).registers
    half = embed(frac_power(MultipartiteOperator(marg_regs, nu_marginal), 0.5), rho.registers)
    return MultipartiteOperator(rho.registers, hermitize(half.entries @ cond_op.entries @ half.entries))


def chain_rule_markov_bounds(rho: MultipartiteOperator, a1: Sequence[str], b1: Sequence[str],
                             a2: Sequence[str], b2: Sequence[str], alpha: float,
                             samples: int = 50, seed=0):
    """Sampled bracket for H_alpha(A1A2|B1B2) - H_alpha(A1|B1).

    Requires the Markov condition A1 <-> B1 <-> B2 on the A2-traced state.
    The returned ``(inf_estimate, exact_delta, sup_estimate)`` brackets the
    exact difference because the sample set always includes the canonical
    chain-rule state, which achieves it.
    """
    a1, b1, a2, b2 = list(a1), list(b1), list(a2), list(b2)
    rng = rng_from(seed)
    reduced = partial_trace(rho, a1 + b1 + b2)
    violation = markov_violation(reduced, a1, b1, b2)
    if violation > tolerances.markov:
        raise MarkovError(f"I(A1:B2|B1) = {violation:.3e} exceeds {tolerances.markov}")

    lhs = h_alpha(rho, b1 + b2, alpha)
    rhs = h_alpha(partial_trace(rho, a1 + b1), b1, alpha)
    exact_delta = lhs - rhs

    sigma_b = partial_trace(rho, b1 + b2)
    canonical = build_nu(rho, a2, sigma_b, alpha)
    values = [h_alpha(canonical, a1 + b1 + b2, alpha)]

    proj = support_projector(partial_trace(rho, a1 + b1).entries)
    for _ in range(samples):
        marg = _random_supported_density(proj, rng)
        nu = nu_from_marginal(rho, a1 + b1, marg)
        values.append(h_alpha(nu, a1 + b1 + b2, alpha))
    return min(values), exact_delta, max(values)


def random_markov_state(rng, d_a1: int = 2, d_j: int = 2, d_c: int = 2,
                        d_a2: int = 2, d_b2: int = 2) -> MultipartiteOperator:
    """A random state obeying A1 <-> B1 <-> B2 exactly, with B1 = (J, C).

    Built as a classically indexed direct sum sum_j q_j rho^j_{A1} (x)
    |j><j|_J (x) sigma^j_{C A2 B2}, which realises the Markov block
    decomposition of B1 by construction.
    """
    from .ops import Register

    rng = rng_from(rng)
    regs = (
        Register("A1", d_a1),
        Register("J", d_j),
        Register("C", d_c),
        Register("A2", d_a2),
        Register("B2", d_b2),
    )
    q = rng.dirichlet(np.ones(d_j))
    dim = d_a1 * d_j * d_c * d_a2 * d_b2
    total = np.zeros((dim, dim), dtype=complex)
    for j in range(d_j):
        rho_j = random_density(d_a1, rng, min_eig=0.01)
        sig_j = random_density(d_c * d_a2 * d_b2, rng, min_eig=0.005)
        proj = np.zeros((d_j, d_j))
        proj[j, j] = 1.0
        total += q[j] * np.kron(np.kron(rho_j, proj), sig_j)
    return MultipartiteOperator(regs, hermitize(total))
