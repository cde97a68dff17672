"""Entropies and divergences: von Neumann, sandwiched Renyi in both
conditioning conventions, the Petz-type primed divergence, and the classical
mixture rule.

All logarithms are base 2.  The sandwiched quantities are evaluated through
eigendecompositions of the Hermitised sandwich product, with generalised
(support-restricted) powers throughout, so rank-deficient marginals are
handled without regularisation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.optimize

from .config import tolerances
from .ops import (
    MultipartiteOperator,
    OperatorError,
    frac_power,
    hermitize,
    partial_trace,
    support_projector,
)
from .states import CQState


# ---------------------------------------------------------------------------
# result containers
# ---------------------------------------------------------------------------

CLOSED_FORM = "closed_form"
EIGENSOLVE = "eigensolve"
OPTIMIZED = "optimized"
BISECTION = "bisection"


@dataclass(frozen=True)
class EntropyResult:
    """A value in bits plus how it was obtained.

    ``certified_gap`` is zero for closed-form and eigensolve paths; for
    optimised quantities it bounds the distance to the true optimum (or, for
    smooth entropies with epsilon > 0, the width of the certified interval).
    """

    value: float
    method: str = EIGENSOLVE
    certified_gap: float = 0.0

    def __post_init__(self):
        if self.method in (CLOSED_FORM, EIGENSOLVE) and self.certified_gap != 0.0:
            raise ValueError("closed-form results carry no gap")

    def __float__(self) -> float:
        return float(self.value)


@dataclass(frozen=True)
class AlphaParam:
    """Renyi parameter with its conjugate exponent alpha' = (alpha-1)/alpha."""

    alpha: float

    @property
    def alpha_prime(self) -> float:
        return (self.alpha - 1.0) / self.alpha

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")


# ---------------------------------------------------------------------------
# scalar helpers
# ---------------------------------------------------------------------------

def h_shannon_binary(e: float) -> float:
    """Binary Shannon entropy in bits, with 0 log 0 := 0."""
    if not 0.0 <= e <= 1.0:
        raise ValueError(f"binary entropy argument {e} outside [0, 1]")
    if e in (0.0, 1.0):
        return 0.0
    return float(-e * math.log2(e) - (1.0 - e) * math.log2(1.0 - e))


def g_smoothing(eps: float) -> float:
    """g(eps) = -log(1 - sqrt(1 - eps^2)); the smooth-entropy penalty."""
    if not 0.0 < eps <= 1.0:
        raise ValueError(f"smoothing parameter {eps} outside (0, 1]")
    if eps == 1.0:
        return 0.0
    return float(-math.log2(1.0 - math.sqrt(1.0 - eps * eps)))


def _eig_entropy(mat: np.ndarray) -> float:
    vals = np.linalg.eigvalsh(hermitize(mat))
    vals = vals[vals > 1e-15]
    return float(-np.sum(vals * np.log2(vals)))


def von_neumann(state) -> float:
    """Von Neumann entropy in bits."""
    if isinstance(state, CQState):
        return state.entropy()
    mat = state.entries if isinstance(state, MultipartiteOperator) else np.asarray(state)
    return _eig_entropy(mat)


def von_neumann_conditional(state, cond: Sequence[str]) -> float:
    """H(A|B) = H(AB) - H(B), eigenvalue based."""
    cond = list(cond)
    if isinstance(state, CQState):
        return state.entropy() - state.entropy(cond)
    if not cond:
        return von_neumann(state)
    return von_neumann(state) - von_neumann(partial_trace(state, cond))


# ---------------------------------------------------------------------------
# sandwiched relative Renyi entropy
# ---------------------------------------------------------------------------

def _support_leak(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Mass of rho outside the support of sigma."""
    proj = support_projector(sigma)
    comp = np.eye(sigma.shape[0]) - proj
    return float(np.trace(comp @ rho @ comp).real)


def _mat(x) -> np.ndarray:
    return x.entries if isinstance(x, MultipartiteOperator) else np.asarray(x, dtype=complex)


def _sandwich_power_sum(rho: np.ndarray, sigma: np.ndarray, alpha: float) -> float:
    """tr((sigma^((1-a)/2a) rho sigma^((1-a)/2a))^alpha) with generalised powers."""
    c = (1.0 - alpha) / (2.0 * alpha)
    w = frac_power(sigma, c)
    m = hermitize(w @ rho @ w)
    vals = np.linalg.eigvalsh(m)
    vals = vals[vals > 0]
    return float(np.sum(vals**alpha))


def relative_entropy(rho, sigma) -> float:
    """Umegaki relative entropy D(rho||sigma) in bits (the alpha -> 1 case)."""
    r = _mat(rho)
    s = _mat(sigma)
    if _support_leak(r, s) > tolerances.psd * max(float(np.trace(r).real), 1.0):
        return math.inf
    rv, rU = np.linalg.eigh(hermitize(r))
    term1 = float(np.sum(rv[rv > 1e-15] * np.log2(rv[rv > 1e-15])))
    sv, sU = np.linalg.eigh(hermitize(s))
    logs = np.where(sv > 1e-15, np.log2(np.maximum(sv, 1e-300)), 0.0)
    log_sigma = (sU * logs) @ sU.conj().T
    term2 = float(np.trace(r @ log_sigma).real)
    return term1 - term2


def d_alpha(rho, sigma, alpha: float) -> float:
    """Sandwiched relative Renyi entropy of order alpha, in bits.

    Support violation with alpha > 1 is signalled by returning ``inf``.
    """
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    r = _mat(rho)
    s = _mat(sigma)
    if alpha == 1.0:
        return relative_entropy(r, s)
    if alpha > 1.0 and _support_leak(r, s) > tolerances.psd * max(float(np.trace(r).real), 1.0):
        return math.inf
    t = _sandwich_power_sum(r, s, alpha)
    if t <= 0.0:
        return math.inf
    return float(np.log2(t) / (alpha - 1.0))


def d_alpha_prime(rho, sigma, alpha: float) -> float:
    """D'_alpha(rho||sigma) = log tr(rho^alpha sigma^(1-alpha)) / (alpha - 1)."""
    if alpha < 0:
        raise ValueError(f"alpha must be non-negative, got {alpha}")
    r = _mat(rho)
    s = _mat(sigma)
    if alpha == 1.0:
        return relative_entropy(r, s)
    if alpha == 0.0:
        val = float(np.trace(support_projector(r) @ s).real)
        return -math.log2(val) if val > 0 else math.inf
    if alpha > 1.0 and _support_leak(r, s) > tolerances.psd * max(float(np.trace(r).real), 1.0):
        return math.inf
    t = float(np.trace(frac_power(r, alpha) @ frac_power(s, 1.0 - alpha)).real)
    if t <= 0.0:
        return math.inf
    return float(np.log2(t) / (alpha - 1.0))


# ---------------------------------------------------------------------------
# conditional sandwiched entropies
# ---------------------------------------------------------------------------

def _split_cond(state: MultipartiteOperator, cond: Sequence[str]):
    """Reorder so the conditioning registers come last; return matrices."""
    cond = list(cond)
    rest = [r.label for r in state.registers if r.label not in set(cond)]
    arranged = state.reorder(rest + cond)
    sigma = partial_trace(arranged, cond) if cond else None
    d_a = int(np.prod([arranged.register(l).dim for l in rest])) if rest else 1
    return arranged.entries, (sigma.entries if sigma is not None else None), d_a


def _h_alpha_dense(state: MultipartiteOperator, cond: Sequence[str], alpha: float) -> float:
    rho, sigma_b, d_a = _split_cond(state, cond)
    if sigma_b is None:
        vals = np.linalg.eigvalsh(hermitize(rho))
        vals = vals[vals > 0]
        t = float(np.sum(vals**alpha))
    else:
        c = (1.0 - alpha) / (2.0 * alpha)
        w = np.kron(np.eye(d_a), frac_power(sigma_b, c))
        m = hermitize(w @ rho @ w)
        vals = np.linalg.eigvalsh(m)
        vals = vals[vals > 0]
        t = float(np.sum(vals**alpha))
    return float(np.log2(t) / (1.0 - alpha))


def _h_alpha_cq(state: CQState, cond: Sequence[str], alpha: float) -> float:
    """Sandwiched entropy of a cq state.

    Classical registers inside the conditioning set block-diagonalise the
    marginal; classical registers on the A side block-diagonalise the
    sandwich, so the trace splits into one term per branch, each involving
    only the quantum registers.
    """
    cond_set = set(cond)
    cls = state.classical_registers
    cond_cls_pos = [i for i, r in enumerate(cls) if r.label in cond_set]
    qs = state.quantum_registers
    q_cond = [r.label for r in qs if r.label in cond_set]
    q_dims = [r.dim for r in qs]
    d_rest = int(np.prod([r.dim for r in qs if r.label not in cond_set])) if qs else 1

    # conditioning marginal, block per conditioning-classical symbol
    marginal = state.keep([r.label for r in cls if r.label in cond_set] + q_cond)
    c = (1.0 - alpha) / (2.0 * alpha)
    w_blocks = {sym: frac_power(mat, c) for sym, mat in marginal.branches.items()}

    qs_order = [r.label for r in qs if r.label not in cond_set] + q_cond
    total = 0.0
    for sym, mat in state.branches.items():
        key = tuple(sym[i] for i in cond_cls_pos)
        if key not in w_blocks:
            continue
        if qs:
            block = MultipartiteOperator(qs, mat).reorder(qs_order).entries
        else:
            block = mat
        w = np.kron(np.eye(d_rest), w_blocks[key])
        m = hermitize(w @ block @ w)
        vals = np.linalg.eigvalsh(m)
        vals = vals[vals > 0]
        total += float(np.sum(vals**alpha))
    if total <= 0:
        return math.inf
    return float(np.log2(total) / (1.0 - alpha))


def h_alpha(state, cond: Sequence[str], alpha: float) -> float:
    """Sandwiched alpha-Renyi entropy of everything else conditioned on ``cond``.

    Equals -D_alpha(rho_AB || id_A (x) rho_B); alpha = 1 dispatches to the
    von Neumann quantity rather than taking a numerical limit.
    """
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    if alpha == 1.0:
        return von_neumann_conditional(state, cond)
    if isinstance(state, CQState):
        if not state.classical_registers:
            return _h_alpha_dense(state.to_dense(), cond, alpha)
        return _h_alpha_cq(state, cond, alpha)
    return _h_alpha_dense(state, cond, alpha)


def h_alpha_classical_mixture(state: CQState, cond: Sequence[str], alpha: float) -> float:
    """Combine per-branch entropies H_alpha(A|B)_{rho|x} over classical X.

    Returns ``(1/(1-alpha)) log sum_x p_x 2^((1-alpha) H_alpha(A|B)_{|x})``,
    where X is every classical register of the state and B = ``cond`` (the
    quantum conditioning registers).  Equals ``h_alpha(state, cond + X)``.
    """
    dist = state.classical_distribution()
    qs = state.quantum_registers
    if alpha == 1.0:
        total = 0.0
        for sym, p in dist.items():
            if p <= 0:
                continue
            branch = MultipartiteOperator(qs, state.branches[sym] / p)
            total += p * von_neumann_conditional(branch, cond)
        return total
    acc = 0.0
    for sym, p in dist.items():
        if p <= 0:
            continue
        branch = MultipartiteOperator(qs, state.branches[sym] / p)
        h = _h_alpha_dense(branch, cond, alpha)
        acc += p * 2.0 ** ((1.0 - alpha) * h)
    return float(np.log2(acc) / (1.0 - alpha))


# ---------------------------------------------------------------------------
# the uparrow variant: infimum over conditioning states
# ---------------------------------------------------------------------------

def _d_alpha_cond(rho: np.ndarray, sigma_b: np.ndarray, d_a: int, alpha: float) -> float:
    c = (1.0 - alpha) / (2.0 * alpha)
    w = np.kron(np.eye(d_a), frac_power(sigma_b, c))
    m = hermitize(w @ rho @ w)
    vals = np.linalg.eigvalsh(m)
    vals = vals[vals > 0]
    t = float(np.sum(vals**alpha))
    if t <= 0:
        return math.inf
    return float(np.log2(t) / (alpha - 1.0))


def _fixed_point_sigma(rho: np.ndarray, sigma: np.ndarray, d_a: int, alpha: float) -> np.ndarray:
    """One step of the stationarity map sigma -> ((s^(a-1)/2 tr_A[M^a] s^(a-1)/2))^(1/a)."""
    c = (1.0 - alpha) / (2.0 * alpha)
    w = np.kron(np.eye(d_a), frac_power(sigma, c))
    m = hermitize(w @ rho @ w)
    vals, vecs = np.linalg.eigh(m)
    vals = np.clip(vals, 0.0, None)
    k = (vecs * vals**alpha) @ vecs.conj().T
    d_b = sigma.shape[0]
    t = np.trace(k.reshape(d_a, d_b, d_a, d_b), axis1=0, axis2=2)
    half = frac_power(sigma, (alpha - 1.0) / 2.0)
    s_new = frac_power(hermitize(half @ t @ half), 1.0 / alpha)
    tr = float(np.trace(s_new).real)
    if tr <= 0:
        raise OperatorError("fixed-point iterate lost all mass")
    return hermitize(s_new / tr)


def _cholesky_params_to_sigma(x: np.ndarray, d: int) -> np.ndarray:
    lower = np.zeros((d, d), dtype=complex)
    idx = 0
    for i in range(d):
        for j in range(i + 1):
            if i == j:
                lower[i, j] = x[idx]
                idx += 1
            else:
                lower[i, j] = x[idx] + 1j * x[idx + 1]
                idx += 2
    sigma = lower @ lower.conj().T
    tr = float(np.trace(sigma).real)
    if tr <= 1e-300:
        return np.eye(d) / d
    return hermitize(sigma / tr)


def _sigma_to_cholesky_params(sigma: np.ndarray) -> np.ndarray:
    d = sigma.shape[0]
    # regularise so the Cholesky factor exists
    lower = np.linalg.cholesky(sigma + 1e-12 * np.eye(d))
    out = []
    for i in range(d):
        for j in range(i + 1):
            if i == j:
                out.append(lower[i, j].real)
            else:
                out.extend([lower[i, j].real, lower[i, j].imag])
    return np.asarray(out)


def h_alpha_up(state, cond: Sequence[str], alpha: float, refine: bool = True) -> EntropyResult:
    """H^up_alpha(A|B) = -inf over normalised sigma_B of D_alpha(rho_AB || id (x) sigma_B).

    Strategy: fixed-point iteration on the stationarity map starting from the
    marginal, with a derivative-free polish over a Cholesky parameterisation.
    The infimum over subnormalised sigma is attained at a normalised one
    (rescaling sigma by c <= 1 adds -log c >= 0 to the divergence), so only
    normalised candidates are searched.
    """
    if isinstance(state, CQState):
        state = state.to_dense()
    if alpha == 1.0:
        return EntropyResult(von_neumann_conditional(state, cond), EIGENSOLVE, 0.0)
    rho, sigma_b, d_a = _split_cond(state, cond)
    if sigma_b is None:
        # no conditioning system: the infimum is over the empty tensor factor
        return EntropyResult(h_alpha(state, cond, alpha), EIGENSOLVE, 0.0)

    sigma = hermitize(sigma_b / np.trace(sigma_b).real)
    best_val = _d_alpha_cond(rho, sigma, d_a, alpha)
    best_sigma = sigma
    converged = False
    for _ in range(tolerances.max_iter):
        try:
            new_sigma = _fixed_point_sigma(rho, sigma, d_a, alpha)
        except OperatorError:
            break
        val = _d_alpha_cond(rho, new_sigma, d_a, alpha)
        if val < best_val:
            best_val, best_sigma = val, new_sigma
        step = float(np.linalg.norm(new_sigma - sigma, 2))
        sigma = new_sigma
        if step < tolerances.fixed_point:
            converged = True
            break

    gap = 0.0 if converged else tolerances.fixed_point
    if refine:
        d_b = sigma_b.shape[0]

        def objective(x: np.ndarray) -> float:
            val = _d_alpha_cond(rho, _cholesky_params_to_sigma(x, d_b), d_a, alpha)
            return val if math.isfinite(val) else 1e6

        x0 = _sigma_to_cholesky_params(best_sigma)
        res = scipy.optimize.minimize(objective, x0, method="Nelder-Mead",
                                      options={"maxfev": 400, "fatol": 1e-10, "xatol": 1e-8})
        if res.fun < best_val:
            gap = max(gap, best_val - float(res.fun))
            best_val = float(res.fun)
        else:
            gap = max(gap, 0.0)
    return EntropyResult(-best_val, OPTIMIZED, gap + 1e-12)


# ---------------------------------------------------------------------------
# the primed conditional entropy and duality
# ---------------------------------------------------------------------------

def h_prime_up(state, cond: Sequence[str], alpha: float) -> float:
    """H'_alpha(A|C) = -inf_sigma D'_alpha(rho || id (x) sigma), in closed form.

    The optimal sigma is proportional to (tr_A rho^alpha)^(1/alpha), giving
    -(alpha/(alpha-1)) log tr[(tr_A rho^alpha)^(1/alpha)].
    """
    if isinstance(state, CQState):
        state = state.to_dense()
    if alpha == 1.0:
        return von_neumann_conditional(state, cond)
    rho, _, d_a = _split_cond(state, cond)
    powered = frac_power(rho, alpha)
    d_b = rho.shape[0] // d_a
    m = np.trace(powered.reshape(d_a, d_b, d_a, d_b), axis1=0, axis2=2)
    t = float(np.trace(frac_power(hermitize(m), 1.0 / alpha)).real)
    return float(-alpha / (alpha - 1.0) * np.log2(t))


def h_alpha_dual(state: MultipartiteOperator, a: Sequence[str], b: Sequence[str],
                 c: Sequence[str], alpha: float) -> float:
    """Evaluate H_alpha(A|B) through the duality -H'_{1/alpha}(A|C).

    The input must be pure on A (x) B (x) C; callers compare the result
    against the direct evaluation to exercise the duality identity.
    """
    mat = _mat(state)
    purity = float(np.trace(mat @ mat).real)
    if abs(purity - 1.0) > 1e-8 or abs(float(np.trace(mat).real) - 1.0) > 1e-8:
        raise OperatorError("duality requires a normalised pure tripartite state")
    rho_ac = partial_trace(state, list(a) + list(c))
    return -h_prime_up(rho_ac, c, 1.0 / alpha)
