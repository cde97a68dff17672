"""Quantum-states module: conditional operators, events, channels,
extraction maps, Markov violation, and the state file format."""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from eatkit.ops import MultipartiteOperator, OperatorError, Register, frac_power, partial_trace
from eatkit.sampling import bell_state, random_density, random_isometry, rng_from
from eatkit.states import (
    Channel,
    CQState,
    Event,
    apply_channel,
    condition_on_event,
    conditional_operator,
    cq_from_operator,
    extraction_map,
    markov_violation,
)
from eatkit.stateio import parse_state, serialize_state


# ---------------------------------------------------------------------------
# conditional operator
# ---------------------------------------------------------------------------

def test_conditional_operator_product_factorizes():
    rng = rng_from(1)
    rho_a = random_density(2, rng)
    sig_b = random_density(2, rng, rank=1)
    regs = (Register("A", 2), Register("B", 2))
    op = MultipartiteOperator(regs, np.kron(rho_a, sig_b))
    cond = conditional_operator(op, ["B"])
    proj = frac_power(sig_b, 0.0)
    assert_allclose(cond.entries, np.kron(rho_a, proj), atol=1e-9)


def test_conditional_operator_bell_doubles():
    phi = bell_state()
    cond = conditional_operator(phi, ["B"])
    assert_allclose(cond.entries, 2.0 * phi.entries, atol=1e-10)


def test_conditional_operator_classical_conditionals():
    joint = np.diag([0.1, 0.3, 0.2, 0.4])  # p(a, b) row-major over (A, B)
    regs = (Register("A", 2), Register("B", 2))
    cond = conditional_operator(MultipartiteOperator(regs, joint), ["B"])
    # p(b=0) = 0.3, p(b=1) = 0.7
    expected = np.diag([0.1 / 0.3, 0.3 / 0.7, 0.2 / 0.3, 0.4 / 0.7])
    assert_allclose(cond.entries, expected, atol=1e-12)


def test_conditional_operator_reconstruction():
    rng = rng_from(3)
    regs = (Register("A", 2), Register("B", 3))
    rho = MultipartiteOperator(regs, random_density(6, rng))
    cond = conditional_operator(rho, ["B"])
    half = np.kron(np.eye(2), frac_power(partial_trace(rho, ["B"]).entries, 0.5))
    assert np.linalg.norm(half @ cond.entries @ half - rho.entries, 2) < 1e-9
    marg = partial_trace(cond, ["B"]).entries
    proj = frac_power(partial_trace(rho, ["B"]).entries, 0.0)
    assert np.min(np.linalg.eigvalsh(proj - marg)) > -1e-9


# ---------------------------------------------------------------------------
# events and conditioning
# ---------------------------------------------------------------------------

def uniform_two_bits():
    x = Register("X1", 2, classical=True)
    y = Register("X2", 2, classical=True)
    branches = {(a, b): np.array([[0.25]]) for a in "01" for b in "01"}
    return CQState((x, y), branches)


def test_condition_full_event_is_identity():
    state = uniform_two_bits()
    out, prob = condition_on_event(state, Event.full())
    assert prob == pytest.approx(1.0, abs=1e-12)
    assert set(out.branches) == set(state.branches)


def test_condition_point_mass():
    state = uniform_two_bits()
    out, prob = condition_on_event(state, Event.from_set({("0", "0")}))
    assert prob == pytest.approx(0.25, abs=1e-12)
    assert list(out.branches) == [("0", "0")]
    assert out.total_weight() == pytest.approx(1.0, abs=1e-12)


def test_condition_zero_probability_raises():
    state = uniform_two_bits()
    with pytest.raises(ValueError):
        condition_on_event(state, Event(lambda s: False, "impossible"))


def test_condition_complement_mixing_reconstructs():
    state = uniform_two_bits()
    ev = Event.from_set({("0", "0"), ("1", "1")})
    inside, p = condition_on_event(state, ev)
    outside, q = condition_on_event(state, Event(lambda s: not ev(s), "complement"))
    assert p + q == pytest.approx(1.0, abs=1e-12)
    rebuilt = {}
    for sym, mat in inside.branches.items():
        rebuilt[sym] = p * mat
    for sym, mat in outside.branches.items():
        rebuilt[sym] = rebuilt.get(sym, 0) + q * mat
    for sym, mat in state.branches.items():
        assert_allclose(rebuilt[sym], mat, atol=1e-12)


def test_event_probability_matches_monte_carlo():
    """Frequency event on a three-round test-statistics toy output."""
    rng = rng_from(11)
    probs = {"0": 0.55, "1": 0.05, "perp": 0.40}
    regs = tuple(Register(f"X{i}", 3, classical=True, alphabet=("0", "1", "perp")) for i in range(3))
    branches = {}
    for a in probs:
        for b in probs:
            for c in probs:
                branches[(a, b, c)] = np.array([[probs[a] * probs[b] * probs[c]]])
    state = CQState(regs, branches)
    event = Event.freq_at_most("1", 0.34)  # at most one error in three rounds
    _, p_exact = condition_on_event(state, event)
    n_samples = 20000
    symbols = list(probs)
    weights = [probs[s] for s in symbols]
    hits = 0
    for _ in range(n_samples):
        draw = tuple(rng.choice(symbols, p=weights) for _ in range(3))
        hits += event(draw)
    p_mc = hits / n_samples
    sigma = math.sqrt(p_exact * (1 - p_exact) / n_samples)
    assert abs(p_mc - p_exact) < 3 * sigma + 1e-9


# ---------------------------------------------------------------------------
# channels
# ---------------------------------------------------------------------------

def test_identity_channel():
    regs = (Register("Q", 2),)
    ch = Channel.from_map(lambda m: m, regs, (Register("Qout", 2),))
    rho = MultipartiteOperator(regs, random_density(2, rng_from(5)))
    out = apply_channel(ch, rho)
    assert_allclose(out.entries, rho.entries, atol=1e-12)
    assert ch.is_trace_preserving()


def test_measurement_channel_pinches():
    regs = (Register("Q", 2),)
    def pinch(m):
        return np.diag(np.diag(m))
    ch = Channel.from_map(pinch, regs, (Register("Qout", 2),))
    plus = np.full((2, 2), 0.5)
    out = apply_channel(ch, MultipartiteOperator(regs, plus))
    assert_allclose(out.entries, np.eye(2) / 2, atol=1e-12)


def test_random_channel_matches_stinespring_oracle():
    rng = rng_from(7)
    v = random_isometry(2, 6, rng)  # qubit -> qutrit (x) env(2)

    def fn(m):
        big = v @ m @ v.conj().T
        return np.trace(big.reshape(3, 2, 3, 2), axis1=1, axis2=3)

    ch = Channel.from_map(fn, (Register("Q", 2),), (Register("O", 3),))
    assert ch.is_trace_preserving()
    rho = random_density(2, rng)
    out = apply_channel(ch, MultipartiteOperator((Register("Q", 2),), rho))
    assert_allclose(out.entries, fn(rho), atol=1e-12)


def test_channel_acts_on_part_of_larger_state():
    rng = rng_from(9)
    regs = (Register("R", 2), Register("Q", 2))
    rho = MultipartiteOperator(regs, random_density(4, rng))
    u = np.linalg.qr(rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))[0]
    ch = Channel.from_map(lambda m: u @ m @ u.conj().T, (Register("Q", 2),), (Register("Qo", 2),))
    out = apply_channel(ch, rho)
    expected = np.kron(np.eye(2), u) @ rho.entries @ np.kron(np.eye(2), u).conj().T
    assert out.labels == ("R", "Qo")
    assert_allclose(out.entries, expected, atol=1e-12)


def test_channel_round_trip_through_cond_state():
    """Rebuilding the channel from its conditional state reproduces it."""
    rng = rng_from(13)
    v = random_isometry(2, 4, rng)

    def fn(m):
        big = v @ m @ v.conj().T
        return np.trace(big.reshape(2, 2, 2, 2), axis1=1, axis2=3)

    ch = Channel.from_map(fn, (Register("A", 2),), (Register("B", 2),))
    ch2 = Channel.from_map(ch.apply_matrix, (Register("A", 2),), (Register("B", 2),))
    assert np.linalg.norm(ch.cond_state.entries - ch2.cond_state.entries, 2) < 1e-10


def test_trace_increasing_map_rejected():
    with pytest.raises(OperatorError):
        Channel.from_map(lambda m: 2.0 * m, (Register("A", 2),), (Register("B", 2),))


# ---------------------------------------------------------------------------
# extraction maps
# ---------------------------------------------------------------------------

def comp_projectors():
    return {"0": np.diag([1.0, 0.0]), "1": np.diag([0.0, 1.0])}


def test_extraction_trivial_single_projector():
    ext = extraction_map({"y": np.eye(2)}, {"z": np.eye(2)}, lambda y, z: "c",
                         (Register("A", 2),), (Register("B", 2),))
    out = ext.apply(bell_state().reorder(["A", "B"]))
    assert list(out.branches) == [("c",)]
    assert_allclose(out.branches[("c",)], bell_state().entries, atol=1e-12)


def test_extraction_parity():
    regs = (Register("A", 2), Register("B", 2))
    rho = MultipartiteOperator(regs, random_density(4, rng_from(17)))
    ext = extraction_map(comp_projectors(), comp_projectors(), lambda y, z: str((int(y) + int(z)) % 2),
                         (regs[0],), (regs[1],))
    out = ext.apply(rho)
    diag = np.diag(rho.entries).real
    assert out.branches[("0",)].trace().real == pytest.approx(diag[0] + diag[3], abs=1e-12)
    assert out.branches[("1",)].trace().real == pytest.approx(diag[1] + diag[2], abs=1e-12)


def test_extraction_marginal_is_pinching_and_idempotent():
    regs = (Register("A", 2), Register("B", 2))
    rho = MultipartiteOperator(regs, random_density(4, rng_from(19)))
    ext = extraction_map(comp_projectors(), comp_projectors(), lambda y, z: str((int(y) + int(z)) % 2),
                         (regs[0],), (regs[1],))
    out = ext.apply(rho)
    marginal = out.keep(["A", "B"]).to_dense()
    pinched = np.diag(np.diag(rho.entries))
    assert_allclose(marginal.reorder(["A", "B"]).entries, pinched, atol=1e-12)
    # repeated application on its image only copies the existing X value
    again = ext.apply(marginal.reorder(["A", "B"]))
    for sym, mat in again.branches.items():
        assert_allclose(mat, out.branches[sym], atol=1e-12)


def test_extraction_rejects_non_orthogonal():
    skew = {"0": np.array([[1.0, 0.0], [0.0, 0.0]]), "1": np.full((2, 2), 0.5)}
    with pytest.raises(OperatorError):
        extraction_map(skew, comp_projectors(), lambda y, z: y, (Register("A", 2),), (Register("B", 2),))


def test_e91_key_round_branch_weights():
    """Hand-enumerated branch weights of the test-round statistics."""
    from eatkit.sequential import depolarized_pair, e91_process, run_process

    mu, p = 0.4, 0.2
    spec = e91_process(1, mu, p, purify_env=False)
    res = run_process(spec)
    dist = res.state.keep(["X1"]).classical_distribution()
    # diagonal-diagonal rounds happen with probability mu^2; the parity is 0
    # with conditional probability 1 - p/2 on a depolarised pair
    assert dist[("0",)] == pytest.approx(mu * mu * (1 - p / 2), abs=1e-12)
    assert dist[("1",)] == pytest.approx(mu * mu * p / 2, abs=1e-12)
    assert dist[("perp",)] == pytest.approx(1 - mu * mu, abs=1e-12)
    # all eight branches of a single round are present: 2 + 4 + 2 sifted shapes
    assert len(res.state.branches) == 8


# ---------------------------------------------------------------------------
# Markov violation
# ---------------------------------------------------------------------------

def test_markov_violation_product_is_zero():
    rng = rng_from(23)
    regs = (Register("A", 2), Register("B", 2), Register("C", 2))
    rho_ab = random_density(4, rng)
    sig_c = random_density(2, rng)
    state = MultipartiteOperator(regs, np.kron(rho_ab, sig_c))
    assert abs(markov_violation(state, ["A"], ["B"], ["C"])) < 1e-10


def test_markov_violation_classical_copy_is_zero():
    regs = tuple(Register(l, 2, classical=True) for l in "ABC")
    branches = {(b, b, b): np.array([[0.5]]) for b in "01"}
    state = CQState(regs, branches)
    assert abs(markov_violation(state, ["A"], ["B"], ["C"])) < 1e-12


def test_markov_violation_positive_for_correlated_endpoints():
    # classical: A = C uniform, B independent -> I(A:C|B) = 1 bit
    regs = tuple(Register(l, 2, classical=True) for l in "ABC")
    branches = {(a, b, a): np.array([[0.25]]) for a in "01" for b in "01"}
    state = CQState(regs, branches)
    assert markov_violation(state, ["A"], ["B"], ["C"]) == pytest.approx(1.0, abs=1e-10)


def test_markov_violation_local_unitary_invariance():
    rng = rng_from(29)
    regs = (Register("A", 2), Register("B", 2), Register("C", 2))
    rho = MultipartiteOperator(regs, random_density(8, rng))
    base = markov_violation(rho, ["A"], ["B"], ["C"])
    u = np.linalg.qr(rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))[0]
    w = np.linalg.qr(rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))[0]
    big = np.kron(np.kron(u, np.eye(2)), w)
    rotated = MultipartiteOperator(regs, big @ rho.entries @ big.conj().T)
    assert markov_violation(rotated, ["A"], ["B"], ["C"]) == pytest.approx(base, abs=1e-9)


# ---------------------------------------------------------------------------
# cq structure and the file format
# ---------------------------------------------------------------------------

def test_cq_from_operator_pinches():
    phi = bell_state()
    cq = cq_from_operator(phi, ["A"])
    assert set(cq.branches) == {("0",), ("1",)}
    assert cq.total_weight() == pytest.approx(1.0, abs=1e-12)


def test_cq_normalization_check():
    x = Register("X", 2, classical=True)
    state = CQState((x,), {("0",): np.array([[0.5]]), ("1",): np.array([[0.4]])})
    with pytest.raises(OperatorError):
        state.check_normalized()


def test_state_file_round_trip_dense():
    rho = MultipartiteOperator((Register("A", 2), Register("B", 2)),
                               random_density(4, rng_from(31)))
    text = serialize_state(rho)
    back = parse_state(text)
    assert np.array_equal(back.entries, rho.entries)  # bit-exact
    assert serialize_state(back) == text
    assert parse_state(serialize_state(back)).entries.tobytes() == rho.entries.tobytes()


def test_state_file_round_trip_cq():
    x = Register("X", 2, classical=True)
    q = Register("Q", 2)
    state = CQState((x, q), {
        ("0",): 0.25 * random_density(2, rng_from(33)),
        ("1",): 0.75 * random_density(2, rng_from(34)),
    })
    text = serialize_state(state)
    back = parse_state(text)
    assert isinstance(back, CQState)
    for sym in state.branches:
        assert np.array_equal(back.branches[sym], state.branches[sym])
    assert serialize_state(back) == text


def test_state_file_rejects_garbage():
    from eatkit.stateio import StateFormatError

    with pytest.raises(StateFormatError):
        parse_state("{not json")
    with pytest.raises(StateFormatError):
        parse_state('{"format": "something-else"}')
