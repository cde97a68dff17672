"""Sequential harness: process composition, Markov checks, soundness
experiments, and the classical counterexample with brute-force oracles."""

import itertools
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from eatkit.accumulation import TradeoffSpec, aep_bound
from eatkit.chain import MarkovError
from eatkit.entropy import h_shannon_binary, von_neumann_conditional
from eatkit.ops import MultipartiteOperator, Register
from eatkit.sampling import bell_state, random_density, rng_from
from eatkit.sequential import (
    markov_necessity_counterexample,
    check_markov_chain_conditions,
    counterexample_joint_table,
    depolarized_pair,
    e91_min_tradeoff,
    e91_process,
    iid_process,
    random_markov_process,
    run_process,
    soundness_experiment,
)
from eatkit.smooth import _classical_hmin_smooth
from eatkit.states import CQState, Event


# ---------------------------------------------------------------------------
# run_process
# ---------------------------------------------------------------------------

def test_iid_process_produces_tensor_power():
    nu = bell_state()
    res = run_process(iid_process(nu, 2))
    dense = res.state.keep(["A1", "B1", "A2", "B2"]).to_dense()
    expected = np.kron(nu.entries, nu.entries)
    assert_allclose(dense.reorder(["A1", "B1", "A2", "B2"]).entries, expected, atol=1e-12)


def test_single_e91_round_matches_hand_enumeration():
    mu, p = 0.3, 0.2
    res = run_process(e91_process(1, mu, p, purify_env=False))
    assert len(res.state.branches) == 8
    dist = res.state.classical_distribution()
    pair = depolarized_pair(p)
    # computational key rounds: marginal of each qubit is maximally mixed
    for a in "01":
        assert dist[(a, "perp", "0", "0", "perp")] == pytest.approx((1 - mu) ** 2 * 0.5, abs=1e-12)
    # diagonal test rounds: same-parity probability (1-p)/2 + p/4 each
    same = (1 - p) / 2 + p / 4
    cross = p / 4
    for a in "01":
        ab = a
        assert dist[(a, ab, "1", "1", "0")] == pytest.approx(mu**2 * same, abs=1e-12)
        ab = "1" if a == "0" else "0"
        assert dist[(a, ab, "1", "1", "1")] == pytest.approx(mu**2 * cross, abs=1e-12)
    # mismatched bases are discarded
    assert dist[("perp", "perp", "0", "1", "perp")] == pytest.approx(mu * (1 - mu), abs=1e-12)
    assert dist[("perp", "perp", "1", "0", "perp")] == pytest.approx(mu * (1 - mu), abs=1e-12)


def test_chained_random_channels_preserve_trace():
    spec = random_markov_process(5, 2, r_dim=2, e_dim=2)
    res = run_process(spec)
    assert res.state.total_weight() == pytest.approx(1.0, abs=1e-10)
    for sym, mat in res.state.branches.items():
        assert np.min(np.linalg.eigvalsh(mat)) > -1e-10


def test_extraction_structure_idempotent_on_rounds():
    """tr_X of each round's output equals the pinched block structure."""
    spec = random_markov_process(9, 1, r_dim=2, e_dim=1)
    res = run_process(spec)
    # pinched A, B: the dense state is block diagonal in the computational
    # basis of (A1, B1): off-diagonal blocks between different (a, b) vanish
    dense = res.state.keep(["A1", "B1"]).to_dense().reorder(["A1", "B1"]).entries
    off = dense - np.diag(np.diag(dense))
    assert np.linalg.norm(off, 2) < 1e-12


# ---------------------------------------------------------------------------
# Markov conditions
# ---------------------------------------------------------------------------

def test_iid_markov_all_zero():
    res = run_process(iid_process(bell_state(), 3))
    assert max(check_markov_chain_conditions(res)) < 1e-10


def test_e91_markov_all_zero():
    res = run_process(e91_process(2, 0.35, 0.15))
    assert max(check_markov_chain_conditions(res)) < 1e-9


def test_random_process_markov_all_zero():
    for seed in range(4):
        res = run_process(random_markov_process(seed, 2, r_dim=2, e_dim=2))
        assert max(check_markov_chain_conditions(res)) < 1e-9


def test_counterexample_style_process_violates_markov():
    """The counterexample correlations produce a positive violation at n=2."""
    # classical: B1, B2 uniform bits; with prob 1/2, A_i = B1 xor B2 bitwise
    regs = (
        Register("A1", 2, classical=True), Register("A2", 2, classical=True),
        Register("B1", 2, classical=True), Register("B2", 2, classical=True),
    )
    branches = {}
    for b1, b2, c in itertools.product("01", "01", "01"):
        if c == "0":
            a = str(int(b1) ^ int(b2))
            key = (a, a, b1, b2)
            branches[key] = branches.get(key, 0.0) + np.array([[1 / 8]])
        else:
            for a1, a2 in itertools.product("01", "01"):
                key = (a1, a2, b1, b2)
                branches[key] = branches.get(key, 0.0) + np.array([[1 / 32]])
    state = CQState(regs, branches)
    from eatkit.states import markov_violation

    violation = markov_violation(state, ["A1"], ["B1"], ["B2"])
    assert violation > 0.01  # strictly positive: the chain condition fails


# ---------------------------------------------------------------------------
# soundness experiments
# ---------------------------------------------------------------------------

def test_soundness_iid_maximally_entangled():
    spec = iid_process(bell_state(), 3)
    rep = soundness_experiment(spec, TradeoffSpec.constant(-1.0, ("0",)), 0.1)
    assert rep.exact_hmin == pytest.approx(-3.0, abs=1e-5)
    assert rep.eat_bound < rep.exact_hmin
    assert rep.vacuous  # the bound is negative at this scale


def test_soundness_iid_uniform_classical_bit():
    regs = (Register("A", 2), Register("B", 1))
    nu = MultipartiteOperator(regs, np.diag([0.5, 0.5]))
    spec = iid_process(nu, 4)
    rep = soundness_experiment(spec, TradeoffSpec.constant(1.0, ("0",)), 0.1)
    assert rep.exact_hmin == pytest.approx(4.0, abs=1e-6)
    assert rep.slack > 0.0


def test_soundness_eat_bound_equals_aep_for_iid():
    rng = rng_from(3)
    regs = (Register("A", 2), Register("B", 2))
    nu = MultipartiteOperator(regs, random_density(4, rng))
    h = von_neumann_conditional(nu, ["B"])
    spec = iid_process(nu, 3)
    rep = soundness_experiment(spec, TradeoffSpec.constant(h, ("0",)), 0.1)
    assert rep.eat_bound == pytest.approx(aep_bound(nu, ["B"], 3, 0.1), abs=1e-9)
    assert rep.p_omega == 1.0
    assert rep.h == pytest.approx(h, abs=1e-12)


@pytest.mark.parametrize("p_depol", [0.0, 0.1, 0.25])
def test_soundness_e91_depolarizing(p_depol):
    mu, e = 0.4, 0.25
    spec = e91_process(2, mu, p_depol)
    f, h, event = e91_min_tradeoff(mu, e)
    rep = soundness_experiment(spec, f, 0.15, event)
    assert rep.markov_worst < 1e-9
    assert rep.slack > 0.0
    assert rep.h >= h - 1e-9  # branch-wise threshold is at least the tangent value


def test_soundness_rejects_markov_violation():
    """A process whose round-2 side information copies A1 aborts loudly."""
    spec = random_markov_process(11, 2, r_dim=2, e_dim=1)

    class LeakyStep:
        def __init__(self, inner):
            self.inner = inner

        def d_a(self):
            return 2

        def apply(self, state, i):
            out, rr = self.inner.apply(state, i)
            if i == 2:
                # overwrite B2 with a measured copy of A1 (both are pinched,
                # so the copy is a classical wiring on diagonal registers)
                qs = out.quantum_registers
                order = [r.label for r in qs]
                a_pos, b_pos = order.index("A1"), order.index("B2")
                dims = [r.dim for r in qs]
                n = len(dims)
                new_branches = {}
                for sym, mat in out.branches.items():
                    t = mat.reshape(dims + dims)
                    new_t = np.zeros_like(t)
                    for a in range(2):
                        sel = np.take(np.take(t, a, axis=a_pos), a, axis=n - 1 + a_pos)
                        summed = np.trace(sel, axis1=b_pos - 1 if b_pos > a_pos else b_pos,
                                          axis2=(n - 2 + b_pos) if b_pos > a_pos else (n - 1 + b_pos))
                        idx = [slice(None)] * (2 * n)
                        idx[a_pos] = a
                        idx[n + a_pos] = a
                        idx[b_pos] = a
                        idx[n + b_pos] = a
                        new_t[tuple(idx)] = summed
                    new_branches[sym] = new_t.reshape(mat.shape)
                out = CQState(out.registers, new_branches)
            return out, rr

    spec.steps[1] = LeakyStep(spec.steps[1])
    with pytest.raises(MarkovError):
        soundness_experiment(spec, TradeoffSpec.constant(-1.0, ("0", "1")), 0.1)


# ---------------------------------------------------------------------------
# the counterexample
# ---------------------------------------------------------------------------

def test_counterexample_reduced_table_is_exact():
    table = counterexample_joint_table(3)
    assert table.sum() == pytest.approx(1.0, abs=1e-12)
    # p(a = y) column structure
    assert table[0, 0] == pytest.approx((0.5 + 0.5 / 8) / 8, abs=1e-15)
    assert table[1, 0] == pytest.approx(0.5 / 64, abs=1e-15)


def test_counterexample_smoothing_matches_generic_program():
    for n in (2, 3, 4):
        generic = _classical_hmin_smooth(counterexample_joint_table(n), 0.01)
        reduced = markov_necessity_counterexample(n, 0.01).hmin_eps
        assert reduced == pytest.approx(generic, abs=2e-6)


def test_counterexample_per_step_matches_enumeration():
    """Brute force over all conditioning values at n = 3.

    The conditional distribution of (A_i, B_i) given any past values and
    future strings has A_i equal to the relevant parity of B_i with
    probability 3/4, so every conditional entropy equals H_Sh(3/4).
    """
    n, i = 3, 2  # condition on round 1 values and round 3 strings
    expected = h_shannon_binary(0.75)
    rng = rng_from(13)
    # enumerate: b1 (8 strings), b3 (8 strings), a1 (2 values)
    for b1 in range(8):
        for b3 in range(8):
            for a1 in (0, 1):
                # posterior over C given (a1, b1, b3): both explain a1 equally
                # (the unseen bits of B2 make any a1 consistent with C=0)
                # conditional p(a2 | b2): with prob 1/2, a2 = parity bit
                table = np.zeros((2, 8))
                for b2 in range(8):
                    parity_bit = ((b1 >> 1) ^ (b2 >> 1) ^ (b3 >> 1)) & 1
                    for a2 in (0, 1):
                        p = 0.5 * (a2 == parity_bit) + 0.25
                        table[a2, b2] = p / 8
                h_joint = -np.sum(table * np.log2(table))
                h_b = math.log2(8)
                assert h_joint - h_b == pytest.approx(expected, abs=1e-12)
    rep = markov_necessity_counterexample(n, 0.01)
    assert rep.per_step_values == tuple([pytest.approx(expected, abs=1e-12)] * n)


def test_counterexample_determinism_branch():
    # conditioned on C = 0 the string is a function of the B's
    rep = markov_necessity_counterexample(4, 0.01)
    assert rep.hmin_zero == pytest.approx(-math.log2(0.5 + 0.5 / 16), abs=1e-12)


def test_counterexample_gap_widens():
    values = [markov_necessity_counterexample(n, 0.01) for n in (3, 6)]
    gaps = [v.per_step_sum - v.hmin_eps for v in values]
    assert gaps[1] > gaps[0] + 1.0  # roughly linear growth
    for v in values:
        assert v.hmin_eps <= 1.2
        assert v.per_step_sum >= v.n / 2


def test_counterexample_range_check():
    with pytest.raises(ValueError):
        markov_necessity_counterexample(13)
