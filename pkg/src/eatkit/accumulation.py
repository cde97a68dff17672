"""Tradeoff functions and the quantitative accumulation bounds.

A tradeoff function assigns to every distribution q on the statistics
alphabet a bound on the per-step conditional von Neumann entropy.  Affine
specs are stored through their vertex values f(delta_x); convex specs carry
an evaluator and a gradient and are linearised by ``tangent_tradeoff``.

Vertices whose single-symbol frequency is unreachable by the process (the
feasible-set-empty case, where the defining infimum is vacuous) are marked
infeasible.  They still define the affine extension but are excluded from
the gradient norm: the per-step entropy bound never has to be realised
there, so they impose no dimension price.  A single-symbol alphabet has a
zero-dimensional simplex and therefore gradient zero; this makes the
asymptotic-equipartition specialisation exact.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np
import scipy.optimize

from .entropy import h_alpha

LOG2_5 = math.log2(5.0)


class VacuousBound(UserWarning):
    pass


@dataclass(frozen=True)
class BoundResult:
    """A bound value plus a vacuity flag (never clamped)."""

    value: float
    vacuous: bool = False

    def __float__(self) -> float:
        return float(self.value)


# ---------------------------------------------------------------------------
# tradeoff functions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TradeoffSpec:
    """Min- or max-tradeoff function on the simplex over ``alphabet``.

    ``vertex_values`` define the affine extension f(q) = sum_x q(x) f(delta_x).
    Convex specs additionally carry ``evaluator``/``gradient`` (vertex
    coordinates); affine specs leave them as None.
    """

    alphabet: tuple[str, ...]
    kind: str
    vertex_values: dict[str, float]
    feasible: dict[str, bool] = field(default_factory=dict)
    evaluator: Callable[[Mapping[str, float]], float] | None = None
    gradient: Callable[[Mapping[str, float]], dict[str, float]] | None = None

    def __post_init__(self):
        if self.kind not in ("min", "max"):
            raise ValueError(f"kind must be 'min' or 'max', got {self.kind!r}")
        object.__setattr__(self, "alphabet", tuple(self.alphabet))
        missing = set(self.alphabet) - set(self.vertex_values)
        if missing:
            raise ValueError(f"vertex values missing for {sorted(missing)}")
        feas = {x: self.feasible.get(x, True) for x in self.alphabet}
        object.__setattr__(self, "feasible", feas)

    @property
    def is_affine(self) -> bool:
        return self.evaluator is None

    def affine_value(self, q: Mapping[str, float]) -> float:
        return float(sum(q.get(x, 0.0) * self.vertex_values[x] for x in self.alphabet))

    def __call__(self, q: Mapping[str, float]) -> float:
        if self.evaluator is not None:
            return float(self.evaluator(q))
        return self.affine_value(q)

    @staticmethod
    def constant(value: float, alphabet: Sequence[str] = ("0",), kind: str = "min",
                 feasible: Mapping[str, bool] | None = None) -> "TradeoffSpec":
        vv = {x: float(value) for x in alphabet}
        return TradeoffSpec(tuple(alphabet), kind, vv, dict(feasible or {}))


def grad_inf_norm(f: TradeoffSpec) -> float:
    """Sup norm of the affine gradient in vertex coordinates.

    Infeasible vertices are excluded; a single-symbol alphabet (point
    simplex) and an all-infeasible vertex set both give zero.
    """
    if not f.is_affine:
        raise ValueError("grad_inf_norm is defined for affine tradeoff specs")
    if len(f.alphabet) <= 1:
        return 0.0
    vals = [abs(f.vertex_values[x]) for x in f.alphabet if f.feasible[x]]
    return float(max(vals)) if vals else 0.0


def tangent_tradeoff(f: TradeoffSpec, q: Mapping[str, float]) -> tuple[TradeoffSpec, float]:
    """Tangent hyperplane to a convex (min) or concave (max) spec at q.

    Returns the affine spec with the same gradient and the threshold
    h = f(q); for an affine input it returns the input itself.
    """
    if f.is_affine:
        return f, f.affine_value(q)
    if f.gradient is None:
        raise ValueError("tangent_tradeoff needs a gradient on the convex form")
    h = float(f.evaluator(q))
    grad = f.gradient(q)
    vertex = {
        x: h + sum(grad.get(y, 0.0) * ((1.0 if y == x else 0.0) - q.get(y, 0.0)) for y in f.alphabet)
        for x in f.alphabet
    }
    affine = TradeoffSpec(f.alphabet, f.kind, vertex, dict(f.feasible))
    return affine, h


def check_gradient(f: TradeoffSpec, q: Mapping[str, float], step: float = 1e-6,
                   pairs: Sequence[tuple[str, str]] | None = None) -> float:
    """Worst deviation between the stored gradient and finite differences.

    Differences are taken along simplex directions delta_x - delta_y (the
    only well-defined part of a gradient on the simplex), by default for
    consecutive alphabet symbols.  Specs defined only on a constraint slice
    should pass the slice directions explicitly via ``pairs``.
    """
    if f.gradient is None:
        raise ValueError("no gradient stored")
    grad = f.gradient(q)
    worst = 0.0
    alphabet = f.alphabet
    if pairs is None:
        pairs = list(zip(alphabet, alphabet[1:]))
    for x, y in pairs:
        qp = dict(q)
        qm = dict(q)
        qp[x] = qp.get(x, 0.0) + step
        qp[y] = qp.get(y, 0.0) - step
        qm[x] = qm.get(x, 0.0) - step
        qm[y] = qm.get(y, 0.0) + step
        fd = (f.evaluator(qp) - f.evaluator(qm)) / (2.0 * step)
        an = grad.get(x, 0.0) - grad.get(y, 0.0)
        worst = max(worst, abs(fd - an))
    return worst


# ---------------------------------------------------------------------------
# accumulation parameters and bounds
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EATParams:
    """Inputs of the accumulation bounds."""

    n: int
    d_a: int
    epsilon: float
    p_omega: float = 1.0
    h: float = 0.0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if self.d_a < 2:
            raise ValueError(f"d_a must be >= 2, got {self.d_a}")
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError(f"epsilon {self.epsilon} outside (0, 1)")
        if not 0.0 < self.p_omega <= 1.0:
            raise ValueError(f"p_omega {self.p_omega} outside (0, 1]")


def eat_v(f: TradeoffSpec, d_a: int) -> float:
    """V = 2 ceil(||grad f||_inf) + 2 log(1 + 2 d_A)."""
    return 2.0 * math.ceil(grad_inf_norm(f)) + 2.0 * math.log2(1.0 + 2.0 * d_a)


def eat_c(f: TradeoffSpec, params: EATParams) -> float:
    """c = 2 (log(1 + 2 d_A) + ceil(||grad f||_inf)) sqrt(1 - 2 log(eps * p_Omega))."""
    prod = params.epsilon * params.p_omega
    if not 0.0 < prod < 1.0:
        raise ValueError(f"epsilon * p_omega = {prod} outside (0, 1)")
    return 2.0 * (math.log2(1.0 + 2.0 * params.d_a) + math.ceil(grad_inf_norm(f))) * math.sqrt(
        1.0 - 2.0 * math.log2(prod)
    )


def eat_min_bound(params: EATParams, f: TradeoffSpec) -> BoundResult:
    """Smooth min-entropy lower bound n h - c sqrt(n)."""
    if f.kind != "min":
        raise ValueError("eat_min_bound needs a min-tradeoff function")
    value = params.n * params.h - eat_c(f, params) * math.sqrt(params.n)
    return BoundResult(value, vacuous=value <= 0.0)


def eat_max_bound(params: EATParams, f: TradeoffSpec) -> BoundResult:
    """Smooth max-entropy upper bound n h + c sqrt(n)."""
    if f.kind != "max":
        raise ValueError("eat_max_bound needs a max-tradeoff function")
    value = params.n * params.h + eat_c(f, params) * math.sqrt(params.n)
    return BoundResult(value, vacuous=value >= params.n * math.log2(params.d_a))


def eat_renyi_bound(params: EATParams, f: TradeoffSpec, alpha: float) -> float:
    """Renyi-level bound n h - n ((alpha-1)/4) V^2 - (alpha/(alpha-1)) log(1/p_Omega)."""
    v = eat_v(f, params.d_a)
    if not 1.0 < alpha < 1.0 + 2.0 / v:
        raise ValueError(f"alpha {alpha} outside (1, 1 + 2/V) with V = {v:.4f}")
    penalty = params.n * ((alpha - 1.0) / 4.0) * v * v
    conditioning = (alpha / (alpha - 1.0)) * math.log2(1.0 / params.p_omega)
    return params.n * params.h - penalty - conditioning


def eat_alpha_star(params: EATParams, f: TradeoffSpec) -> BoundResult:
    """The Renyi order used in the proof of the min bound.

    alpha* = 1 + 2 sqrt(log(2 / (p^2 eps^2))) / (sqrt(n) V), valid (and
    non-vacuous) when n > log(2 / (p^2 eps^2)).
    """
    v = eat_v(f, params.d_a)
    level = math.log2(2.0 / (params.p_omega**2 * params.epsilon**2))
    alpha = 1.0 + 2.0 * math.sqrt(level) / (math.sqrt(params.n) * v)
    return BoundResult(alpha, vacuous=params.n <= level)


def diffi_c(d_a: int, epsilon: float) -> float:
    """Constant of the per-step-infimum specialisation: 3 log(1 + 2 d_A) sqrt(1 - 2 log eps)."""
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon {epsilon} outside (0, 1)")
    return 3.0 * math.log2(1.0 + 2.0 * d_a) * math.sqrt(1.0 - 2.0 * math.log2(epsilon))


def aep_bound(nu, cond: Sequence[str], n: int, epsilon: float) -> float:
    """IID lower bound n H(A|B) - 2 sqrt(n (1 - 2 log eps)) log(1 + 2 d_A)."""
    from .entropy import von_neumann_conditional

    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon {epsilon} outside (0, 1)")
    h = von_neumann_conditional(nu, cond)
    d_a = int(np.prod([r.dim for r in nu.registers if r.label not in set(cond)]))
    return n * h - 2.0 * math.sqrt(n * (1.0 - 2.0 * math.log2(epsilon))) * math.log2(1.0 + 2.0 * d_a)


# ---------------------------------------------------------------------------
# the dilution gadget
# ---------------------------------------------------------------------------

def tau_state(p: float, dim: int) -> np.ndarray:
    """Mixture p * maximally-entangled + (1-p) * maximally-mixed on D (x) Dbar."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"mixing weight {p} outside [0, 1]")
    d2 = dim * dim
    phi = np.zeros(d2)
    phi[:: dim + 1] = 1.0 / math.sqrt(dim)
    return p * np.outer(phi, phi) + (1.0 - p) * np.eye(d2) / d2


def tau_conditional_entropy(p: float, dim: int, alpha: float) -> float:
    """H_alpha(D|Dbar) of the mixture, in closed form.

    The marginal on Dbar is uniform for every p, so the sandwich reduces to
    a scalar rescaling: H_alpha = -log d + (1/(1-alpha)) log tr(tau^alpha),
    and the spectrum of tau is (p + (1-p)/d^2) once and (1-p)/d^2 with
    multiplicity d^2 - 1.
    """
    if dim == 1:
        return 0.0
    d2 = dim * dim
    top = p + (1.0 - p) / d2
    rest = (1.0 - p) / d2
    if alpha == 1.0:
        ent = 0.0
        for lam, mult in ((top, 1), (rest, d2 - 1)):
            if lam > 0:
                ent -= mult * lam * math.log2(lam)
        return ent - math.log2(dim)
    total = top**alpha + (d2 - 1) * rest**alpha
    return float(math.log2(total) / (1.0 - alpha) - math.log2(dim))


@dataclass(frozen=True)
class DilutionGadget:
    """Entropy-price encoder used inside the accumulation proof.

    For every symbol x it stores the mixing weight p(x) such that
    H_alpha(D|Dbar)_{tau(x)} = g_bar - f(delta_x); the marginal on Dbar is
    uniform for every x by construction.
    """

    d_d: int
    mixing_weights: dict[str, float]
    g_bar: float
    g_min: float
    g_max: float

    def tau(self, x: str) -> np.ndarray:
        return tau_state(self.mixing_weights[x], self.d_d)


def dilution_dim(f: TradeoffSpec) -> int:
    return max(int(math.ceil(2.0 ** grad_inf_norm(f))), 1)


def _solve_mixing_weight(target: float, dim: int, alpha: float) -> float:
    if dim == 1:
        if abs(target) > 1e-12:
            raise ValueError(f"target {target} unreachable with trivial gadget dimension")
        return 0.0
    log_d = math.log2(dim)
    if not -log_d - 1e-12 <= target <= log_d + 1e-12:
        raise ValueError(f"target {target} outside [-log d, log d] with d = {dim}")
    if target >= log_d:
        return 0.0
    if target <= -log_d:
        return 1.0
    # H_alpha(D|Dbar) decreases monotonically from log d at p=0 to -log d at p=1
    fn = lambda p: tau_conditional_entropy(p, dim, alpha) - target
    return float(scipy.optimize.brentq(fn, 0.0, 1.0, xtol=1e-14, rtol=8.9e-16))


def dilution_tau(f: TradeoffSpec, x: str, alpha: float) -> tuple[float, np.ndarray]:
    """Mixing weight and tau(x) achieving H_alpha(D|Dbar) = g_bar - f(delta_x)."""
    gadget = dilution_gadget(f, alpha, symbols=[x])
    p = gadget.mixing_weights[x]
    return p, gadget.tau(x)


def dilution_gadget(f: TradeoffSpec, alpha: float, symbols: Sequence[str] | None = None) -> DilutionGadget:
    if not f.is_affine:
        raise ValueError("the dilution gadget is defined for affine tradeoff specs")
    values = [f.vertex_values[x] for x in f.alphabet]
    g_min, g_max = min(values), max(values)
    g_bar = 0.5 * (g_min + g_max)
    dim = dilution_dim(f)
    weights = {}
    for x in symbols if symbols is not None else f.alphabet:
        target = g_bar - f.vertex_values[x]
        weights[x] = _solve_mixing_weight(target, dim, alpha)
    return DilutionGadget(dim, weights, g_bar, g_min, g_max)


# ---------------------------------------------------------------------------
# config file round trip
# ---------------------------------------------------------------------------

def dump_eat_config(params: EATParams, f: TradeoffSpec) -> str:
    doc = {
        "format": "eatkit-config",
        "alphabet": list(f.alphabet),
        "kind": f.kind,
        "vertex_values": {x: f.vertex_values[x] for x in f.alphabet},
        "feasible": {x: f.feasible[x] for x in f.alphabet},
        "n": params.n,
        "d_a": params.d_a,
        "epsilon": params.epsilon,
        "p_omega": params.p_omega,
        "h": params.h,
    }
    return json.dumps(doc, indent=2)


def load_eat_config(text: str) -> tuple[EATParams, TradeoffSpec]:
    doc = json.loads(text)
    if doc.get("format") != "eatkit-config":
        raise ValueError("not an eatkit accumulation config document")
    f = TradeoffSpec(
        tuple(doc["alphabet"]),
        doc["kind"],
        {str(k): float(v) for k, v in doc["vertex_values"].items()},
        {str(k): bool(v) for k, v in doc.get("feasible", {}).items()},
    )
    params = EATParams(
        n=int(doc["n"]),
        d_a=int(doc["d_a"]),
        epsilon=float(doc["epsilon"]),
        p_omega=float(doc.get("p_omega", 1.0)),
        h=float(doc.get("h", 0.0)),
    )
    return params, f
