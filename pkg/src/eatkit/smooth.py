"""Max-relative entropy, smooth min/max entropies, and constructive smoothing.

The epsilon = 0 quantities are exact: conditional min-entropy is the small
semidefinite program ``min tr(Z_B) s.t. id_A (x) Z_B >= rho_AB`` (block
diagonal over classical registers), and max-entropy follows through the
purification duality ``H_max(A|B) = -H_min(A|C)``.

For epsilon > 0 the classical (cq) case is solved exactly as a convex
program over smoothing allocations; a classical smoothing is optimal for a
classical state because dephasing in the classical basis fixes the state,
cannot increase the purified distance, and cannot decrease min-entropy (nor
increase max-entropy).  General quantum states get a certified interval
instead: exact purified-distance smoothing is a nonconvex search, and the
accumulation bounds only ever need one-sided comparisons.
"""

from __future__ import annotations

import math
import warnings
from typing import Sequence

import cvxpy as cp
import numpy as np

from .config import tolerances
from .entropy import (
    BISECTION,
    CLOSED_FORM,
    EIGENSOLVE,
    OPTIMIZED,
    EntropyResult,
    g_smoothing,
    h_alpha,
    h_alpha_up,
)
from .ops import (
    MultipartiteOperator,
    OperatorError,
    frac_power,
    hermitize,
    partial_trace,
    purified_distance,
    purify,
    support_projector,
)
from .states import CQState

DIMENSION_CAP = 64


class DimensionCapError(ValueError):
    """Quantum input larger than the supported desk scale."""


# ---------------------------------------------------------------------------
# max-relative entropy and its constructive smoothing
# ---------------------------------------------------------------------------

def d_max(rho, sigma) -> float:
    """D_max(rho||sigma) = log lambda_max(sigma^{-1/2} rho sigma^{-1/2})."""
    r = rho.entries if isinstance(rho, MultipartiteOperator) else np.asarray(rho, dtype=complex)
    s = sigma.entries if isinstance(sigma, MultipartiteOperator) else np.asarray(sigma, dtype=complex)
    proj = support_projector(s)
    comp = np.eye(s.shape[0]) - proj
    leak = float(np.trace(comp @ r @ comp).real)
    if leak > tolerances.psd * max(float(np.trace(r).real), 1.0):
        raise OperatorError("support of rho is not contained in support of sigma")
    inv_half = frac_power(s, -0.5)
    top = float(np.max(np.linalg.eigvalsh(hermitize(inv_half @ r @ inv_half))))
    if top <= 0:
        return -math.inf
    return float(np.log2(top))


def d_max_smooth_certificate(rho, sigma, lam: float):
    """Shave the part of rho exceeding 2^lam * sigma.

    With Delta the positive part of rho - 2^lam sigma, the gentle operator
    G = (2^lam sigma)^{1/2} (2^lam sigma + Delta)^{-1/2} yields
    rho_tilde = G rho G^dagger, which is PSD, satisfies
    rho_tilde <= 2^lam sigma (verified), and sits within
    eps = sqrt(2 tr Delta - (tr Delta)^2) of rho in purified distance.
    Returns ``(rho_tilde, eps)`` with eps measured exactly.
    """
    r = rho.entries if isinstance(rho, MultipartiteOperator) else np.asarray(rho, dtype=complex)
    s = sigma.entries if isinstance(sigma, MultipartiteOperator) else np.asarray(sigma, dtype=complex)
    scaled = (2.0**lam) * s
    diff = hermitize(r - scaled)
    vals, vecs = np.linalg.eigh(diff)
    pos = np.clip(vals, 0.0, None)
    delta = (vecs * pos) @ vecs.conj().T
    gentle = frac_power(scaled, 0.5) @ frac_power(hermitize(scaled + delta), -0.5)
    tilde = hermitize(gentle @ r @ gentle.conj().T)
    check = np.min(np.linalg.eigvalsh(hermitize(scaled - tilde)))
    if check < -1e-9:
        raise OperatorError(f"certificate failed: rho_tilde exceeds 2^lam sigma by {-check:.3e}")
    eps = purified_distance(r, tilde)
    tr_delta = float(np.trace(delta).real)
    budget = math.sqrt(max(2.0 * tr_delta - tr_delta * tr_delta, 0.0))
    if eps > budget + 1e-7:
        raise OperatorError(f"certificate failed: distance {eps:.3e} exceeds budget {budget:.3e}")
    return tilde, float(eps)


# ---------------------------------------------------------------------------
# structure extraction shared by the exact entropies
# ---------------------------------------------------------------------------

def _as_cq(state) -> CQState:
    if isinstance(state, CQState):
        return state
    # a dense operator is one quantum block even if registers carry
    # classical flags (e.g. after to_dense)
    from .ops import Register

    regs = tuple(Register(r.label, r.dim, classical=False) for r in state.registers)
    return CQState(regs, {(): state.entries})


def _blocks(state, cond: Sequence[str]):
    """Group branches by conditioning-classical symbol with quantum part
    arranged as (A_q, B_q).  Returns (groups, d_aq, d_bq) where groups maps
    y-symbols to a list of branch matrices."""
    cq = _as_cq(state)
    cond_set = set(cond)
    known = {r.label for r in cq.registers}
    if cond_set - known:
        raise OperatorError(f"unknown conditioning labels {cond_set - known}")
    cls = cq.classical_registers
    qs = cq.quantum_registers
    cond_cls_pos = [i for i, r in enumerate(cls) if r.label in cond_set]
    a_q = [r for r in qs if r.label not in cond_set]
    b_q = [r for r in qs if r.label in cond_set]
    order = [r.label for r in a_q] + [r.label for r in b_q]
    d_aq = int(np.prod([r.dim for r in a_q])) if a_q else 1
    d_bq = int(np.prod([r.dim for r in b_q])) if b_q else 1
    groups: dict[tuple, list[np.ndarray]] = {}
    for sym, mat in cq.branches.items():
        if qs:
            mat = MultipartiteOperator(qs, mat).reorder(order).entries
        y = tuple(sym[i] for i in cond_cls_pos)
        groups.setdefault(y, []).append(mat)
    return groups, d_aq, d_bq


def _check_cap(state) -> None:
    cq = _as_cq(state)
    if cq.quantum_dim > DIMENSION_CAP:
        raise DimensionCapError(
            f"quantum dimension {cq.quantum_dim} exceeds the cap {DIMENSION_CAP}"
        )


def _is_classical(state) -> bool:
    return isinstance(state, CQState) and not state.quantum_registers


def _solve_sdp(problem: cp.Problem, prefer: str = "scs") -> float:
    """Solve a small conic problem, falling back to the other solver.

    SCS handles the many-small-PSD-constraint shape far better than the
    interior-point default at these sizes (eps 1e-9 keeps it effectively
    exact); the classical smoothing programs are second-order-cone problems
    where the interior-point solver is the accurate choice.
    """
    attempts = [("scs", dict(solver=cp.SCS, eps=1e-9, max_iters=200_000)),
                ("clarabel", dict(solver=cp.CLARABEL))]
    attempts.sort(key=lambda item: item[0] != prefer)
    with warnings.catch_warnings():
        # cvxpy's complex-to-real reduction emits a spurious nested-list note
        warnings.filterwarnings("ignore", message=".*nested list.*")
        last_error = None
        for _, kwargs in attempts:
            try:
                problem.solve(**kwargs)
            except Exception as exc:  # solver unavailable or numerical failure
                last_error = exc
                continue
            if problem.status == "optimal":
                return float(problem.value)
        if problem.status in ("optimal", "optimal_inaccurate"):
            return float(problem.value)
    raise OperatorError(f"conic solve failed (status {problem.status}): {last_error}")


# ---------------------------------------------------------------------------
# exact epsilon = 0 entropies
# ---------------------------------------------------------------------------

def _diag_or_none(mats: list[np.ndarray]) -> list[np.ndarray] | None:
    diags = []
    for m in mats:
        if np.max(np.abs(m - np.diag(np.diag(m)))) > 1e-12:
            return None
        diags.append(np.diag(m).real)
    return diags


def _group_min_trace(mats: list[np.ndarray], d_aq: int, d_bq: int) -> tuple[float, bool]:
    """min tr(Z) over Z >= 0 with id_{A_q} (x) Z >= m for every block m.

    Returns (value, exact): closed forms cover a single block with trivial
    A_q (Z = m) and commuting diagonal blocks (entrywise max); everything
    else is one small semidefinite program per group.
    """
    if d_aq == 1:
        if len(mats) == 1:
            return float(np.trace(mats[0]).real), True
        diags = _diag_or_none(mats)
        if diags is not None:
            return float(np.sum(np.max(np.vstack(diags), axis=0))), True
    z = cp.Variable((d_bq, d_bq), hermitian=True)
    lifted = cp.kron(np.eye(d_aq), z) if d_aq > 1 else z
    constraints = [lifted >> m for m in mats]
    constraints.append(z >> 0)
    problem = cp.Problem(cp.Minimize(cp.real(cp.trace(z))), constraints)
    return _solve_sdp(problem), False


def h_min_zero(state, cond: Sequence[str]) -> EntropyResult:
    """Conditional min-entropy H_min(A|B) at epsilon = 0 (A = all non-cond).

    The semidefinite program min tr(Z_B) s.t. id_A (x) Z_B >= rho_AB splits
    into one independent problem per conditioning-classical symbol.
    """
    _check_cap(state)
    groups, d_aq, d_bq = _blocks(state, cond)
    if d_aq == 1 and d_bq == 1:
        # fully classical: H_min = -log sum_y max_x p(x, y)
        total = sum(max(float(m.real.item()) for m in mats) for mats in groups.values())
        return EntropyResult(-math.log2(total), CLOSED_FORM, 0.0)
    if not cond:
        top = max(float(np.max(np.linalg.eigvalsh(m))) for mats in groups.values() for m in mats)
        return EntropyResult(-math.log2(top), EIGENSOLVE, 0.0)

    total = 0.0
    all_exact = True
    for mats in groups.values():
        value, exact = _group_min_trace(mats, d_aq, d_bq)
        total += value
        all_exact = all_exact and exact
    if all_exact:
        return EntropyResult(-math.log2(total), EIGENSOLVE, 0.0)
    return EntropyResult(-math.log2(total), OPTIMIZED, 1e-7)


def h_min_zero_sigma(state, cond: Sequence[str]):
    """Min-entropy together with the optimising conditioning state sigma_B.

    Only implemented for dense (no classical registers) inputs; used to seed
    smoothing candidates.
    """
    _check_cap(state)
    groups, d_aq, d_bq = _blocks(state, cond)
    ((_, mats),) = groups.items()
    z = cp.Variable((d_bq, d_bq), hermitian=True)
    constraints = [cp.kron(np.eye(d_aq), z) >> mats[0], z >> 0]
    problem = cp.Problem(cp.Minimize(cp.real(cp.trace(z))), constraints)
    value = _solve_sdp(problem)
    sigma = hermitize(np.asarray(z.value))
    return EntropyResult(-math.log2(value), OPTIMIZED, 1e-7), sigma / max(np.trace(sigma).real, 1e-300)


def h_max_zero(state, cond: Sequence[str]) -> EntropyResult:
    """Conditional max-entropy at epsilon = 0.

    Classical states use the closed form log sum_y (sum_x sqrt(p))^2; quantum
    states go through the purification duality H_max(A|B) = -H_min(A|C).
    """
    _check_cap(state)
    if _is_classical(state):
        groups, _, _ = _blocks(state, cond)
        total = sum(
            sum(math.sqrt(max(float(m.real.item()), 0.0)) for m in mats) ** 2
            for mats in groups.values()
        )
        return EntropyResult(math.log2(total), CLOSED_FORM, 0.0)
    cq = _as_cq(state)
    dense = cq.to_dense() if isinstance(state, CQState) else state
    psi = purify(dense, env_label="_env")
    a_labels = [r.label for r in dense.registers if r.label not in set(cond)]
    rho_ac = partial_trace(psi, a_labels + ["_env"])
    inner = h_min_zero(rho_ac, ["_env"])
    return EntropyResult(-inner.value, inner.method, inner.certified_gap)


# ---------------------------------------------------------------------------
# exact classical smoothing (convex programs over allocations)
# ---------------------------------------------------------------------------

def _classical_table(state: CQState, cond: Sequence[str]):
    groups, _, _ = _blocks(state, cond)
    ys = sorted(groups)
    cols = []
    for y in ys:
        cols.append([max(float(m.real.item()), 0.0) for m in groups[y]])
    width = max(len(c) for c in cols)
    table = np.zeros((width, len(ys)))
    for j, c in enumerate(cols):
        table[: len(c), j] = c
    return table


def _classical_hmin_smooth(p: np.ndarray, eps: float) -> float:
    """Exact smooth min-entropy of a classical joint table p[x, y]."""
    target = math.sqrt(max(1.0 - eps * eps, 0.0))
    pt = cp.Variable(p.shape, nonneg=True)
    caps = cp.Variable(p.shape[1], nonneg=True)
    constraints = [cp.sum(pt) <= 1.0, cp.sum(cp.multiply(np.sqrt(p), cp.sqrt(pt))) >= target]
    for x in range(p.shape[0]):
        constraints.append(pt[x, :] <= caps)
    problem = cp.Problem(cp.Minimize(cp.sum(caps)), constraints)
    value = _solve_sdp(problem, prefer="clarabel")
    return float(-math.log2(value))


def _classical_hmax_smooth(p: np.ndarray, eps: float) -> float:
    """Exact smooth max-entropy of a classical joint table p[x, y]."""
    target = math.sqrt(max(1.0 - eps * eps, 0.0))
    u = cp.Variable(p.shape, nonneg=True)
    constraints = [
        cp.sum(cp.multiply(np.sqrt(p), u)) >= target,
        cp.sum_squares(u) <= 1.0,
    ]
    problem = cp.Problem(cp.Minimize(cp.sum_squares(cp.sum(u, axis=0))), constraints)
    value = _solve_sdp(problem, prefer="clarabel")
    return float(math.log2(value))


# ---------------------------------------------------------------------------
# smooth entropies
# ---------------------------------------------------------------------------

_ALPHA_GRID = 1.0 + np.geomspace(1e-3, 1.0, 14)


def _smoothing_candidates(dense: MultipartiteOperator, cond: Sequence[str], eps: float):
    """A few explicitly smoothed states inside the eps-ball, built by shaving
    the peak of rho against the min-entropy optimiser."""
    try:
        _, sigma = h_min_zero_sigma(dense, cond)
        a_dim = dense.dim // sigma.shape[0]
        embedded = np.kron(np.eye(a_dim), sigma) + 1e-12 * np.eye(dense.dim)
        rest = [r.label for r in dense.registers if r.label not in set(cond)]
        arranged = dense.reorder(rest + list(cond))
        lam0 = d_max(arranged.entries, embedded)
    except Exception:
        return []
    out = []
    for lam in np.linspace(lam0 - 3.0, lam0, 12, endpoint=False):
        try:
            tilde, achieved = d_max_smooth_certificate(arranged.entries, embedded, lam)
        except OperatorError:
            continue
        if achieved <= eps * (1.0 - 1e-9):
            out.append(MultipartiteOperator(arranged.registers, tilde))
            break
    return out


def h_min_smooth(state, cond: Sequence[str], epsilon: float) -> EntropyResult:
    """Smooth conditional min-entropy.

    Classical cq states are exact.  Quantum states with epsilon > 0 return a
    certified interval: ``value`` is the certified lower endpoint and
    ``certified_gap`` the interval width (upper - lower).
    """
    if not 0.0 <= epsilon < 1.0:
        raise ValueError(f"epsilon {epsilon} outside [0, 1)")
    _check_cap(state)
    if epsilon == 0.0:
        return h_min_zero(state, cond)
    if _is_classical(state):
        table = _classical_table(state, cond)
        return EntropyResult(_classical_hmin_smooth(table, epsilon), OPTIMIZED, 0.0)

    cq = _as_cq(state)
    dense = cq.to_dense() if isinstance(state, CQState) else state
    lower = h_min_zero(dense, cond).value
    for alpha in _ALPHA_GRID:
        up = h_alpha_up(dense, cond, float(alpha), refine=False)
        lower = max(lower, up.value - g_smoothing(epsilon) / (alpha - 1.0))
    for cand in _smoothing_candidates(dense, cond, epsilon):
        lower = max(lower, h_min_zero(cand, cond).value)
    d_a = int(np.prod([r.dim for r in dense.registers if r.label not in set(cond)]))
    upper = math.log2(d_a) - math.log2(1.0 - epsilon**2)
    upper = min(upper, h_max_zero(dense, cond).value - math.log2(1.0 - epsilon**2))
    return EntropyResult(lower, OPTIMIZED, max(upper - lower, 0.0))


def h_max_smooth(state, cond: Sequence[str], epsilon: float) -> EntropyResult:
    """Smooth conditional max-entropy.

    Classical cq states are exact.  Quantum states with epsilon > 0 return a
    certified interval: ``value`` is the certified upper endpoint and
    ``certified_gap`` the interval width.
    """
    if not 0.0 <= epsilon < 1.0:
        raise ValueError(f"epsilon {epsilon} outside [0, 1)")
    _check_cap(state)
    if epsilon == 0.0:
        return h_max_zero(state, cond)
    if _is_classical(state):
        table = _classical_table(state, cond)
        return EntropyResult(_classical_hmax_smooth(table, epsilon), OPTIMIZED, 0.0)

    cq = _as_cq(state)
    dense = cq.to_dense() if isinstance(state, CQState) else state
    upper = h_max_zero(dense, cond).value
    for alpha in _ALPHA_GRID:
        if alpha > 2.0:
            continue
        upper = min(upper, h_alpha(dense, cond, 1.0 / alpha) + g_smoothing(epsilon) / (alpha - 1.0))
    d_a = int(np.prod([r.dim for r in dense.registers if r.label not in set(cond)]))
    lower = max(-math.log2(d_a), h_min_zero(dense, cond).value - math.log2(1.0 / (1.0 - epsilon**2)))
    return EntropyResult(upper, OPTIMIZED, max(upper - lower, 0.0))
