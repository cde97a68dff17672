"""Accumulation engine: tradeoff specs, gradient conventions, the explicit
constants, the Renyi-level bound, tangents, the AEP corollary, and the
dilution gadget."""

import math

import numpy as np
import pytest

from eatkit.accumulation import (
    BoundResult,
    EATParams,
    TradeoffSpec,
    aep_bound,
    check_gradient,
    diffi_c,
    dilution_dim,
    dilution_gadget,
    dilution_tau,
    dump_eat_config,
    eat_alpha_star,
    eat_c,
    eat_max_bound,
    eat_min_bound,
    eat_renyi_bound,
    eat_v,
    grad_inf_norm,
    load_eat_config,
    tangent_tradeoff,
    tau_conditional_entropy,
    tau_state,
)
from eatkit.applications import qkd_q0, qkd_tradeoff
from eatkit.entropy import g_smoothing, h_alpha, h_shannon_binary
from eatkit.ops import MultipartiteOperator, Register
from eatkit.sampling import bell_state

LOG2_5 = math.log2(5.0)


# ---------------------------------------------------------------------------
# gradient conventions
# ---------------------------------------------------------------------------

def test_grad_inf_norm_constant_is_abs_value():
    f = TradeoffSpec.constant(-0.8, ("0", "1"))
    assert grad_inf_norm(f) == pytest.approx(0.8)


def test_grad_inf_norm_zero_one_vertices():
    f = TradeoffSpec(("0", "1"), "min", {"0": 0.0, "1": 1.0})
    assert grad_inf_norm(f) == pytest.approx(1.0)


def test_grad_inf_norm_singleton_alphabet_is_zero():
    # a point simplex has no directions, so the gradient is identically zero;
    # this is what makes the equipartition specialisation exact
    f = TradeoffSpec.constant(-1.0, ("0",))
    assert grad_inf_norm(f) == 0.0


def test_grad_inf_norm_excludes_infeasible_vertices():
    f = TradeoffSpec(("0", "1", "2"), "min", {"0": 5.0, "1": 0.25, "2": -90.0},
                     feasible={"0": False, "2": False})
    assert grad_inf_norm(f) == pytest.approx(0.25)
    none = TradeoffSpec(("0", "1"), "min", {"0": 7.0, "1": 9.0},
                        feasible={"0": False, "1": False})
    assert grad_inf_norm(none) == 0.0


def test_qkd_tangent_gradient_matches_finite_differences():
    mu, e = 0.3, 0.12
    f = qkd_tradeoff(mu)
    q0 = qkd_q0(mu, e)
    # the evaluator lives on the slice q(0) + q(1) = mu^2, so differentiate
    # along the slice direction only
    assert check_gradient(f, q0, pairs=[("0", "1")]) < 1e-5
    # the slope along the reachable slice is the scaled binary-entropy derivative
    grad = f.gradient(q0)
    expected = -math.log2((1 - e) / e) / (mu * mu)
    assert grad["1"] == pytest.approx(expected, rel=1e-9)
    tangent, _ = tangent_tradeoff(f, q0)
    assert grad_inf_norm(tangent) == 0.0  # every vertex is unreachable


# ---------------------------------------------------------------------------
# constants
# ---------------------------------------------------------------------------

def test_eat_v_values():
    f1 = TradeoffSpec(("0", "1"), "min", {"0": 0.0, "1": 1.0})
    assert eat_v(f1, 2) == pytest.approx(2.0 + 2.0 * LOG2_5, abs=1e-9)  # 6.6439
    f0 = TradeoffSpec.constant(0.0, ("0", "1"))
    assert eat_v(f0, 2) == pytest.approx(2.0 * LOG2_5, abs=1e-9)  # 4.6439, ceil(0) = 0
    f3 = TradeoffSpec(("0", "1"), "min", {"0": 0.0, "1": 0.3})
    assert eat_v(f3, 2) == pytest.approx(2.0 + 2.0 * LOG2_5, abs=1e-9)  # ceil(0.3) = 1


def test_eat_v_dominates_gadget_dimension():
    for values in ({"0": 0.0, "1": 1.0}, {"0": -0.4, "1": 2.3}, {"0": 0.0, "1": 0.0}):
        f = TradeoffSpec(("0", "1"), "min", dict(values))
        d_d = dilution_dim(f)
        assert math.log2(1 + 2 * 2 * d_d) <= eat_v(f, 2) / 2 + 1e-12


def test_eat_c_arithmetic_fixture():
    f = TradeoffSpec(("0", "1"), "min", {"0": 0.0, "1": 1.0})
    params = EATParams(n=10, d_a=2, epsilon=0.01, p_omega=1.0, h=0.5)
    expected = 2.0 * (LOG2_5 + 1.0) * math.sqrt(1.0 - 2.0 * math.log2(0.01))
    assert eat_c(f, params) == pytest.approx(expected, abs=1e-12)
    assert expected == pytest.approx(25.12, abs=0.01)


def test_eat_c_monotone_in_d_a():
    f = TradeoffSpec.constant(0.0, ("0", "1"))
    values = [
        eat_c(f, EATParams(n=10, d_a=d, epsilon=0.1, p_omega=1.0, h=0.0)) for d in (2, 3, 5, 8)
    ]
    assert all(values[i] < values[i + 1] for i in range(len(values) - 1))


def test_eat_c_limit_as_eps_p_to_one():
    f = TradeoffSpec(("0", "1"), "min", {"0": 0.0, "1": 1.0})
    c = eat_c(f, EATParams(n=10, d_a=2, epsilon=1 - 1e-12, p_omega=1.0, h=0.0))
    assert c == pytest.approx(2.0 * (LOG2_5 + 1.0), rel=1e-6)
    with pytest.raises(ValueError):
        EATParams(n=10, d_a=2, epsilon=1.5, p_omega=1.0, h=0.0)


# ---------------------------------------------------------------------------
# bounds
# ---------------------------------------------------------------------------

def min_spec():
    return TradeoffSpec(("0", "1"), "min", {"0": 0.0, "1": 1.0})


def test_eat_min_bound_fixture():
    params = EATParams(n=10**4, d_a=2, epsilon=0.01, p_omega=1.0, h=0.5)
    bound = eat_min_bound(params, min_spec())
    assert bound.value == pytest.approx(5000 - eat_c(min_spec(), params) * 100, abs=1e-9)
    assert bound.value == pytest.approx(2488, abs=1.0)
    assert not bound.vacuous


def test_eat_min_bound_vacuous_flag():
    params = EATParams(n=100, d_a=2, epsilon=0.01, p_omega=1.0, h=0.5)
    bound = eat_min_bound(params, min_spec())
    assert bound.value <= 0.0 and bound.vacuous


def test_eat_bounds_kind_mismatch():
    params = EATParams(n=100, d_a=2, epsilon=0.01, p_omega=1.0, h=0.5)
    with pytest.raises(ValueError):
        eat_max_bound(params, min_spec())
    with pytest.raises(ValueError):
        eat_min_bound(params, TradeoffSpec.constant(0.5, ("0",), kind="max"))


def test_eat_min_bound_monotonicities():
    f = min_spec()
    base = EATParams(n=10**4, d_a=2, epsilon=0.01, p_omega=0.5, h=0.5)
    more_h = EATParams(n=10**4, d_a=2, epsilon=0.01, p_omega=0.5, h=0.6)
    more_eps = EATParams(n=10**4, d_a=2, epsilon=0.05, p_omega=0.5, h=0.5)
    more_p = EATParams(n=10**4, d_a=2, epsilon=0.01, p_omega=0.9, h=0.5)
    v0 = eat_min_bound(base, f).value
    assert eat_min_bound(more_h, f).value > v0
    assert eat_min_bound(more_eps, f).value > v0
    assert eat_min_bound(more_p, f).value > v0


def test_eat_renyi_bound_values():
    f = min_spec()
    params = EATParams(n=10**4, d_a=2, epsilon=0.01, p_omega=1.0, h=0.5)
    v = eat_v(f, 2)
    alpha = 1.01
    # log term vanishes at p = 1
    assert eat_renyi_bound(params, f, alpha) == pytest.approx(
        10**4 * 0.5 - 10**4 * ((alpha - 1) / 4) * v * v, abs=1e-9
    )
    params9 = EATParams(n=10**4, d_a=2, epsilon=0.01, p_omega=0.9, h=0.5)
    expected = 5000 - 10**4 * ((alpha - 1) / 4) * v * v - (alpha / (alpha - 1)) * math.log2(1 / 0.9)
    assert eat_renyi_bound(params9, f, alpha) == pytest.approx(expected, abs=1e-9)
    # alpha -> 1+ diverges when p < 1
    assert eat_renyi_bound(params9, f, 1.0 + 1e-9) < -1e6
    with pytest.raises(ValueError):
        eat_renyi_bound(params, f, 1.5)  # outside (1, 1 + 2/V)


def test_eat_alpha_star_fixture_and_limits():
    f = min_spec()
    params = EATParams(n=10**4, d_a=2, epsilon=0.01, p_omega=1.0, h=0.5)
    star = eat_alpha_star(params, f)
    assert star.value == pytest.approx(1.01138, abs=1e-5)
    assert not star.vacuous
    v = eat_v(f, 2)
    assert 1.0 < star.value < 1.0 + 2.0 / v
    big = eat_alpha_star(EATParams(n=10**8, d_a=2, epsilon=0.01, p_omega=1.0, h=0.5), f)
    assert big.value == pytest.approx(1.0, abs=1e-3)
    tiny = eat_alpha_star(EATParams(n=10, d_a=2, epsilon=0.01, p_omega=1.0, h=0.5), f)
    assert tiny.vacuous


def test_renyi_path_recovers_direct_bound_within_one_bit():
    f = min_spec()
    params = EATParams(n=10**4, d_a=2, epsilon=0.01, p_omega=1.0, h=0.5)
    alpha = eat_alpha_star(params, f).value
    renyi = eat_renyi_bound(params, f, alpha) - g_smoothing(params.epsilon) / (alpha - 1.0)
    direct = eat_min_bound(params, f).value
    assert abs(renyi - direct) < 1.0


def test_diffi_constant_dominates_theorem_constant_for_qubits():
    # per-step-infimum corollary: gradient components are conditional
    # entropies, bounded by log d_A = 1 for qubits; the corollary's constant
    # 3 log 5 dominates the theorem's 2 (log 5 + 1) at every epsilon
    for eps in (0.3, 0.1, 0.01):
        f = TradeoffSpec(("0", "1"), "min", {"0": -1.0, "1": 1.0})
        params = EATParams(n=10, d_a=2, epsilon=eps, p_omega=1.0, h=0.0)
        assert eat_c(f, params) <= diffi_c(2, eps) + 1e-12
        assert diffi_c(2, eps) == pytest.approx(3 * LOG2_5 * math.sqrt(1 - 2 * math.log2(eps)), abs=1e-12)


# ---------------------------------------------------------------------------
# tangents
# ---------------------------------------------------------------------------

def test_tangent_of_affine_is_itself():
    f = min_spec()
    tangent, h = tangent_tradeoff(f, {"0": 0.5, "1": 0.5})
    assert tangent is f
    assert h == pytest.approx(0.5)


def test_tangent_quadratic_toy():
    evaluator = lambda q: q.get("1", 0.0) ** 2
    gradient = lambda q: {"0": 0.0, "1": 2.0 * q.get("1", 0.0)}
    f = TradeoffSpec(("0", "1"), "min", {"0": 0.0, "1": 1.0}, evaluator=evaluator, gradient=gradient)
    q = {"0": 0.5, "1": 0.5}
    tangent, h = tangent_tradeoff(f, q)
    assert h == pytest.approx(0.25)
    assert check_gradient(f, q) < 1e-5
    # tangent touches from below on the simplex (min kind)
    for t in np.linspace(0, 1, 21):
        point = {"0": 1 - t, "1": t}
        assert tangent.affine_value(point) <= evaluator(point) + 1e-12


def test_tangent_qkd_threshold_value():
    mu, e = 0.05, 0.05
    _, h = tangent_tradeoff(qkd_tradeoff(mu), qkd_q0(mu, e))
    assert h == pytest.approx(1 - 2 * mu + mu * mu - h_shannon_binary(e), abs=1e-12)
    assert h == pytest.approx(0.6161, abs=1e-4)


def test_tangent_requires_gradient():
    f = TradeoffSpec(("0", "1"), "min", {"0": 0.0, "1": 1.0}, evaluator=lambda q: 0.0)
    with pytest.raises(ValueError):
        tangent_tradeoff(f, {"0": 0.5, "1": 0.5})


# ---------------------------------------------------------------------------
# the AEP corollary
# ---------------------------------------------------------------------------

def test_aep_bound_bell_fixture():
    value = aep_bound(bell_state(), ["B"], 100, 0.1)
    by_hand = -100 - 2 * math.sqrt(100 * (1 - 2 * math.log2(0.1))) * LOG2_5
    assert value == pytest.approx(by_hand, abs=1e-9)
    assert value == pytest.approx(-228.4, abs=0.5)


def test_aep_bound_monotone_in_eps():
    values = [aep_bound(bell_state(), ["B"], 100, eps) for eps in (0.01, 0.1, 0.5, 0.9)]
    assert all(values[i] < values[i + 1] for i in range(len(values) - 1))


def test_aep_equals_eat_min_bound_under_specialization():
    # the equipartition corollary: singleton statistics alphabet, certain
    # event, constant tradeoff at the conditional entropy
    h = -1.0
    n, eps = 100, 0.1
    params = EATParams(n=n, d_a=2, epsilon=eps, p_omega=1.0, h=h)
    f = TradeoffSpec.constant(h, ("0",))
    assert aep_bound(bell_state(), ["B"], n, eps) == pytest.approx(
        eat_min_bound(params, f).value, abs=1e-9
    )


def test_aep_classical_bit_rate_approaches_one():
    regs = (Register("A", 2), Register("B", 1))
    nu = MultipartiteOperator(regs, np.diag([0.5, 0.5]))
    rate_400 = aep_bound(nu, ["B"], 400, 0.01) / 400
    rate_hi = aep_bound(nu, ["B"], 10**6, 0.01) / 10**6
    assert rate_400 < 1.0
    assert rate_hi > rate_400
    assert rate_hi == pytest.approx(1.0, abs=0.02)


# ---------------------------------------------------------------------------
# dilution gadget
# ---------------------------------------------------------------------------

def test_tau_marginal_uniform_for_all_weights():
    for dim in (2, 3):
        for p in (0.0, 0.3, 1.0):
            t = tau_state(p, dim)
            marg = np.trace(t.reshape(dim, dim, dim, dim), axis1=0, axis2=2)
            assert np.linalg.norm(marg - np.eye(dim) / dim, 2) < 1e-12


def test_tau_entropy_endpoints():
    f = TradeoffSpec(("0", "1"), "min", {"0": -1.0, "1": 1.0})
    gadget = dilution_gadget(f, 1.5)
    # targets +-log d hit the mixture endpoints
    assert gadget.mixing_weights["0"] == pytest.approx(0.0, abs=1e-12)  # target +1 = log 2
    assert gadget.mixing_weights["1"] == pytest.approx(1.0, abs=1e-12)  # target -1 = -log 2


def test_tau_entropy_closed_form_matches_dense_evaluation():
    dim, p, alpha = 2, 0.37, 1.5
    closed = tau_conditional_entropy(p, dim, alpha)
    regs = (Register("D", dim), Register("Db", dim))
    op = MultipartiteOperator(regs, tau_state(p, dim))
    assert closed == pytest.approx(h_alpha(op, ["Db"], alpha), abs=1e-12)


def test_dilution_bisection_residuals():
    f = TradeoffSpec(("0", "1", "2"), "min", {"0": -0.9, "1": 0.2, "2": 1.4})
    v = eat_v(f, 2)
    for alpha in np.linspace(1.0 + 1e-4, 1.0 + 2.0 / v - 1e-9, 7):
        gadget = dilution_gadget(f, float(alpha))
        for x in f.alphabet:
            target = gadget.g_bar - f.vertex_values[x]
            achieved = tau_conditional_entropy(gadget.mixing_weights[x], gadget.d_d, float(alpha))
            assert abs(achieved - target) < 1e-8


def test_dilution_tau_single_symbol():
    f = TradeoffSpec(("0", "1"), "min", {"0": 0.0, "1": 1.0})
    p, tau = dilution_tau(f, "1", 1.5)
    assert tau.shape == (4, 4)
    assert 0.0 <= p <= 1.0


def test_dilution_unreachable_target():
    f = TradeoffSpec(("0", "1"), "min", {"0": 0.0, "1": 0.0})  # d_D = 1
    gadget = dilution_gadget(f, 1.5)
    assert gadget.d_d == 1
    bad = TradeoffSpec(("0", "1"), "min", {"0": 0.0, "1": 0.4})
    from eatkit.accumulation import _solve_mixing_weight

    with pytest.raises(ValueError):
        _solve_mixing_weight(2.5, 2, 1.5)


# ---------------------------------------------------------------------------
# config round trip
# ---------------------------------------------------------------------------

def test_eat_config_round_trip():
    f = TradeoffSpec(("0", "1", "perp"), "min", {"0": 0.1, "1": -2.0, "perp": 0.3},
                     feasible={"perp": False})
    params = EATParams(n=1000, d_a=4, epsilon=1e-3, p_omega=0.25, h=0.05)
    text = dump_eat_config(params, f)
    params2, f2 = load_eat_config(text)
    assert params2 == params
    assert f2.vertex_values == f.vertex_values
    assert f2.feasible == f.feasible
    assert dump_eat_config(params2, f2) == text
