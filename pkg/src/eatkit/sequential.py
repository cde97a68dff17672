"""Sequential process harness: compose per-round channels, check the Markov
conditions, compare exact conditional min-entropy against the accumulation
bound at tiny n, and reproduce the classical counterexample that shows the
Markov conditions are necessary.

Every preset keeps the Markov conditions exact *by construction*: the side
register released in round i is (half of) a fresh ancilla that is
uncorrelated with everything generated before, so
I(A_1^{i-1} : B_i | B_1^{i-1} E) = 0 identically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.optimize

from .accumulation import EATParams, TradeoffSpec, eat_min_bound, tangent_tradeoff
from .applications import D_KEY_ROUND, qkd_q0, qkd_tradeoff
from .chain import MarkovError
from .config import tolerances
from .entropy import h_shannon_binary, von_neumann_conditional
from .ops import MultipartiteOperator, Register, hermitize
from .sampling import random_density, random_unitary, rng_from
from .smooth import h_min_zero
from .states import Channel, CQState, Event, cq_product, markov_violation

KET0 = np.array([1.0, 0.0])
KET1 = np.array([0.0, 1.0])
KETP = np.array([1.0, 1.0]) / math.sqrt(2.0)
KETM = np.array([1.0, -1.0]) / math.sqrt(2.0)


@dataclass(frozen=True)
class RoundRegisters:
    a: tuple[str, ...]
    b: tuple[str, ...]
    x: str


@dataclass
class ProcessResult:
    state: CQState
    rounds: list[RoundRegisters]
    e_labels: tuple[str, ...]

    def a_labels(self) -> list[str]:
        return [l for r in self.rounds for l in r.a]

    def b_labels(self) -> list[str]:
        return [l for r in self.rounds for l in r.b]

    def x_labels(self) -> list[str]:
        return [r.x for r in self.rounds]


# ---------------------------------------------------------------------------
# round presets
# ---------------------------------------------------------------------------

class IIDPrepStep:
    """Sets (A_i, B_i) to a fixed bipartite state; X_i and R are trivial."""

    def __init__(self, nu: MultipartiteOperator):
        if len(nu.registers) != 2:
            raise ValueError("iid-prep wants a bipartite state with registers (A, B)")
        self.nu = nu

    def d_a(self) -> int:
        return self.nu.registers[0].dim

    def apply(self, state: CQState, i: int) -> tuple[CQState, RoundRegisters]:
        a, b = self.nu.registers
        regs = (
            Register(f"A{i}", a.dim),
            Register(f"B{i}", b.dim),
            Register(f"X{i}", 1, classical=True, alphabet=("0",)),
        )
        fresh = CQState(regs, {("0",): self.nu.entries})
        return cq_product(state, fresh), RoundRegisters((f"A{i}",), (f"B{i}",), f"X{i}")


class RandomRoundStep:
    """Generic adaptive Markov-compliant round on qubits.

    A fresh random two-qubit pure state is drawn; one half becomes B_i, and a
    random unitary scrambles the other half with the memory register R into
    (A_i, new R).  A_i and B_i are then pinched in the computational basis
    and X_i records the parity.
    """

    def __init__(self, rng, r_dim: int = 2):
        rng = rng_from(rng)
        self.r_dim = r_dim
        psi = rng.normal(size=4) + 1j * rng.normal(size=4)
        psi /= np.linalg.norm(psi)
        self.pair = np.outer(psi, psi.conj())  # registers (B_i, B')
        self.unitary = random_unitary(2 * r_dim, rng)  # on (R, B') -> (A_i, R)

    def d_a(self) -> int:
        return 2

    def apply(self, state: CQState, i: int) -> tuple[CQState, RoundRegisters]:
        regs = (Register(f"B{i}", 2), Register("Bfresh", 2))
        fresh = CQState(regs, {(): self.pair})
        joined = cq_product(state, fresh)

        qs = joined.quantum_registers
        labels = [r.label for r in qs]
        rest = [l for l in labels if l not in ("R", "Bfresh")]
        d_rest = int(np.prod([r.dim for r in qs if r.label in set(rest)])) if rest else 1
        new_branches = {}
        u = np.kron(np.eye(d_rest), self.unitary)
        for sym, mat in joined.branches.items():
            arranged = MultipartiteOperator(qs, mat).reorder(rest + ["R", "Bfresh"])
            new_branches[sym] = hermitize(u @ arranged.entries @ u.conj().T)
        out_regs = tuple(r for r in qs if r.label in set(rest)) + (
            Register(f"A{i}", 2),
            Register("R", self.r_dim),
        )
        cls = joined.classical_registers
        scrambled = CQState(cls + out_regs, new_branches)

        pinched = _pinch_parity(scrambled, f"A{i}", f"B{i}", f"X{i}")
        return pinched, RoundRegisters((f"A{i}",), (f"B{i}",), f"X{i}")


def _pinch_parity(state: CQState, a_label: str, b_label: str, x_label: str) -> CQState:
    """Computational-basis pinch of two qubits with X = parity."""
    qs = state.quantum_registers
    rest = [r.label for r in qs if r.label not in (a_label, b_label)]
    d_rest = int(np.prod([r.dim for r in qs if r.label in set(rest)])) if rest else 1
    x_reg = Register(x_label, 2, classical=True)
    new_branches: dict[tuple, np.ndarray] = {}
    for sym, mat in state.branches.items():
        arranged = MultipartiteOperator(qs, mat).reorder(rest + [a_label, b_label])
        for ya in range(2):
            for zb in range(2):
                proj = np.zeros((4, 4))
                proj[2 * ya + zb, 2 * ya + zb] = 1.0
                big = np.kron(np.eye(d_rest), proj)
                piece = big @ arranged.entries @ big
                if np.trace(piece).real <= 1e-15:
                    continue
                x = str((ya + zb) % 2)
                key = sym + (x,)
                new_branches[key] = new_branches.get(key, 0) + piece
    out_qs = tuple(r for r in qs if r.label in set(rest)) + (
        state.registers[[r.label for r in state.registers].index(a_label)],
        state.registers[[r.label for r in state.registers].index(b_label)],
    )
    regs = state.classical_registers + (x_reg,) + out_qs
    return CQState(regs, new_branches)


class E91RoundStep:
    """One round of the entanglement-based protocol on a stored qubit pair.

    Both parties flip independent coins with P(diagonal) = mu; the qubits
    Q_i, Qbar_i are measured (or discarded) accordingly, A_i keeps the key
    outcome when the bases agree, Abar_i the test outcome when both are
    diagonal, and X_i their parity on test rounds.
    """

    OUTCOMES = ("0", "1", "perp")

    def __init__(self, mu: float):
        if not 0.0 < mu < 1.0:
            raise ValueError(f"mu {mu} outside (0, 1)")
        self.mu = mu

    def d_a(self) -> int:
        return D_KEY_ROUND

    def apply(self, state: CQState, i: int) -> tuple[CQState, RoundRegisters]:
        mu = self.mu
        qs = state.quantum_registers
        q_label, qb_label = f"Q{i}", f"Qb{i}"
        rest = [r.label for r in qs if r.label not in (q_label, qb_label)]
        d_rest = int(np.prod([r.dim for r in qs if r.label in set(rest)])) if rest else 1
        comp = (KET0, KET1)
        diag = (KETP, KETM)
        new_branches: dict[tuple, np.ndarray] = {}

        def add(key, piece):
            if np.trace(piece).real > 1e-15:
                new_branches[key] = new_branches.get(key, 0) + piece

        p_b = {("0", "0"): (1 - mu) ** 2, ("0", "1"): (1 - mu) * mu,
               ("1", "0"): mu * (1 - mu), ("1", "1"): mu * mu}

        for sym, mat in state.branches.items():
            arranged = MultipartiteOperator(qs, mat).reorder(rest + [q_label, qb_label])
            t = arranged.entries.reshape(d_rest, 2, 2, d_rest, 2, 2)
            for (b, bb), w in p_b.items():
                if b == bb:
                    basis = comp if b == "0" else diag
                    for a_idx, va in enumerate(basis):
                        if b == "1":
                            # both measured in the diagonal basis
                            for ab_idx, vb in enumerate(basis):
                                piece = np.einsum("rabscd,a,c,b,d->rs", t,
                                                  va.conj(), va, vb.conj(), vb)
                                x = str((a_idx + ab_idx) % 2)
                                add(sym + (str(a_idx), str(ab_idx), b, bb, x),
                                    w * piece)
                        else:
                            piece = np.einsum("rabscb,a,c->rs", t, va.conj(), va)
                            add(sym + (str(a_idx), "perp", b, bb, "perp"), w * piece)
                else:
                    piece = np.einsum("rabsab->rs", t)
                    add(sym + ("perp", "perp", b, bb, "perp"), w * piece)

        out_qs = tuple(r for r in qs if r.label in set(rest))
        regs = state.classical_registers + (
            Register(f"A{i}", 3, classical=True, alphabet=self.OUTCOMES),
            Register(f"Ab{i}", 3, classical=True, alphabet=self.OUTCOMES),
            Register(f"B{i}", 2, classical=True),
            Register(f"Bb{i}", 2, classical=True),
            Register(f"X{i}", 3, classical=True, alphabet=self.OUTCOMES),
        ) + out_qs
        result = CQState(regs, new_branches)
        return result, RoundRegisters((f"A{i}", f"Ab{i}"), (f"B{i}", f"Bb{i}"), f"X{i}")


class ClassicalTableStep:
    """Classical memory chain: per memory symbol, outcomes with weights.

    ``table[mem]`` lists tuples ``(prob, a, b, x, next_mem)``; the X value
    must be a function of (a, b) so the step keeps the pinch-and-record
    structure, and the per-memory weights must sum to one.
    """

    def __init__(self, table: dict[str, list[tuple[float, str, str, str, str]]]):
        self.table = table
        seen: dict[tuple[str, str], str] = {}
        for mem, rows in table.items():
            total = sum(row[0] for row in rows)
            if abs(total - 1.0) > 1e-9:
                raise ValueError(f"weights for memory {mem!r} sum to {total}")
            for _, a, b, x, nxt in rows:
                if seen.setdefault((a, b), x) != x:
                    raise ValueError(f"X is not a function of (a, b) at ({a}, {b})")
                if nxt not in table:
                    raise ValueError(f"next memory symbol {nxt!r} has no table entry")
        self.memory_alphabet = tuple(sorted(table))
        self.a_alphabet = tuple(sorted({row[1] for rows in table.values() for row in rows}))
        self.b_alphabet = tuple(sorted({row[2] for rows in table.values() for row in rows}))
        self.x_alphabet = tuple(sorted({row[3] for rows in table.values() for row in rows}))

    def d_a(self) -> int:
        return len(self.a_alphabet)

    def apply(self, state: CQState, i: int) -> tuple[CQState, RoundRegisters]:
        cls = state.classical_registers
        mem_pos = [r.label for r in cls].index("R")
        regs_new = (
            Register(f"A{i}", len(self.a_alphabet), classical=True, alphabet=self.a_alphabet),
            Register(f"B{i}", len(self.b_alphabet), classical=True, alphabet=self.b_alphabet),
            Register(f"X{i}", len(self.x_alphabet), classical=True, alphabet=self.x_alphabet),
        )
        new_branches: dict[tuple, np.ndarray] = {}
        for sym, mat in state.branches.items():
            mem = sym[mem_pos]
            for prob, a, b, x, nxt in self.table[mem]:
                if prob <= 0:
                    continue
                key = tuple(nxt if j == mem_pos else s for j, s in enumerate(sym)) + (a, b, x)
                new_branches[key] = new_branches.get(key, 0) + prob * mat
        regs = state.classical_registers + regs_new + state.quantum_registers
        out = CQState(regs, new_branches)
        return out, RoundRegisters((f"A{i}",), (f"B{i}",), f"X{i}")


class CustomChoiStep:
    """A channel given by its conditional state M_{ABR'|R}, with the usual
    computational parity recorded as X_i afterwards."""

    def __init__(self, cond_state: np.ndarray, r_dim: int, a_dim: int = 2, b_dim: int = 2):
        self.r_dim, self.a_dim, self.b_dim = r_dim, a_dim, b_dim
        in_regs = (Register("R", r_dim),)
        out_regs = (Register("_A", a_dim), Register("_B", b_dim), Register("_R", r_dim))
        op = MultipartiteOperator(in_regs + out_regs, np.asarray(cond_state, dtype=complex))
        self.channel = Channel(in_regs, out_regs, op)
        if not self.channel.is_trace_preserving():
            raise ValueError("custom-choi steps must be trace preserving")

    def d_a(self) -> int:
        return self.a_dim

    def apply(self, state: CQState, i: int) -> tuple[CQState, RoundRegisters]:
        from .states import apply_channel

        out = apply_channel(self.channel, state)
        # relabel the fresh outputs for this round and restore the memory label
        relabeled = []
        for r in out.registers:
            if r.label == "_A":
                relabeled.append(Register(f"A{i}", r.dim))
            elif r.label == "_B":
                relabeled.append(Register(f"B{i}", r.dim))
            elif r.label == "_R":
                relabeled.append(Register("R", r.dim))
            else:
                relabeled.append(r)
        out = CQState(tuple(relabeled), out.branches)
        if self.a_dim == 2 and self.b_dim == 2:
            out = _pinch_parity(out, f"A{i}", f"B{i}", f"X{i}")
        else:
            # trivial statistics for non-qubit rounds
            x_reg = Register(f"X{i}", 1, classical=True, alphabet=("0",))
            branches = {sym + ("0",): mat for sym, mat in out.branches.items()}
            out = CQState(out.classical_registers + (x_reg,) + out.quantum_registers, branches)
        return out, RoundRegisters((f"A{i}",), (f"B{i}",), f"X{i}")


# ---------------------------------------------------------------------------
# process assembly
# ---------------------------------------------------------------------------

@dataclass
class ProcessSpec:
    n: int
    steps: list
    initial: CQState
    e_labels: tuple[str, ...] = ()
    drop_labels: tuple[str, ...] = ("R",)

    def __post_init__(self):
        if len(self.steps) != self.n:
            raise ValueError(f"need {self.n} steps, got {len(self.steps)}")


def run_process(spec: ProcessSpec) -> ProcessResult:
    state = spec.initial
    rounds: list[RoundRegisters] = []
    for i, step in enumerate(spec.steps, start=1):
        state, rr = step.apply(state, i)
        rounds.append(rr)
    keep = [r.label for r in state.registers if r.label not in set(spec.drop_labels)]
    state = state.keep(keep)
    weight = state.total_weight()
    if abs(weight - 1.0) > 1e-8:
        raise ValueError(f"process output has weight {weight}, expected 1")
    if state.quantum_dim > 64:
        raise ValueError(f"process output quantum dimension {state.quantum_dim} exceeds 64")
    return ProcessResult(state, rounds, spec.e_labels)


def check_markov_chain_conditions(result: ProcessResult) -> list[float]:
    """I(A_1^{i-1} : B_i | B_1^{i-1} E) for i = 1..n (the first entry is 0)."""
    out = [0.0]
    e = list(result.e_labels)
    for i in range(1, len(result.rounds)):
        past_a = [l for r in result.rounds[:i] for l in r.a]
        past_b = [l for r in result.rounds[:i] for l in r.b]
        b_now = list(result.rounds[i].b)
        reduced = result.state.keep(past_a + past_b + e + b_now)
        out.append(markov_violation(reduced, past_a, past_b + e, b_now))
    return out


@dataclass(frozen=True)
class SoundnessReport:
    exact_hmin: float
    eat_bound: float
    p_omega: float
    h: float
    markov_worst: float
    vacuous: bool

    @property
    def slack(self) -> float:
        return self.exact_hmin - self.eat_bound


def soundness_experiment(spec: ProcessSpec, f: TradeoffSpec, epsilon: float,
                         omega: Event | None = None) -> SoundnessReport:
    """Exact epsilon = 0 min-entropy of the conditioned output vs the bound.

    The threshold h is taken as the smallest f(freq) over the branches inside
    the event, which is the largest h the event certifies.
    """
    result = run_process(spec)
    violations = check_markov_chain_conditions(result)
    worst = max(violations) if violations else 0.0
    if worst > tolerances.markov:
        raise MarkovError(f"Markov violation {worst:.3e} exceeds {tolerances.markov}")

    omega = omega or Event.full()
    x_labels = result.x_labels()
    conditioned, p_omega = result.state.condition(omega, on=x_labels)
    p_omega = min(p_omega, 1.0)

    cls = [r.label for r in result.state.classical_registers]
    positions = [cls.index(l) for l in x_labels]
    h = math.inf
    for sym in conditioned.branches:
        xs = tuple(sym[i] for i in positions)
        freq: dict[str, float] = {}
        for s in xs:
            freq[s] = freq.get(s, 0.0) + 1.0 / len(xs)
        h = min(h, f(freq))

    keep = result.a_labels() + result.b_labels() + list(result.e_labels)
    exact = h_min_zero(conditioned.keep(keep), result.b_labels() + list(result.e_labels))

    d_a = max(step.d_a() for step in spec.steps)
    params = EATParams(n=spec.n, d_a=d_a, epsilon=epsilon, p_omega=p_omega, h=h)
    bound = eat_min_bound(params, f)
    return SoundnessReport(exact.value, bound.value, p_omega, h, worst, bound.vacuous)


# ---------------------------------------------------------------------------
# ready-made processes
# ---------------------------------------------------------------------------

def iid_process(nu: MultipartiteOperator, n: int) -> ProcessSpec:
    initial = CQState((), {(): np.array([[1.0 + 0j]])})
    return ProcessSpec(n, [IIDPrepStep(nu) for _ in range(n)], initial)


def random_markov_process(seed, n: int, r_dim: int = 2, e_dim: int = 1) -> ProcessSpec:
    """Adaptive qubit process with exact Markov structure (see module docs)."""
    rng = rng_from(seed)
    if 4**n * e_dim > 64:
        raise ValueError("registers too large for the desk-scale cap")
    regs = (Register("R", r_dim), Register("E", e_dim))
    joint = random_density(r_dim * e_dim, rng, min_eig=0.01)
    initial = CQState(regs, {(): joint})
    steps = [RandomRoundStep(rng, r_dim=r_dim) for _ in range(n)]
    return ProcessSpec(n, steps, initial, e_labels=("E",))


def depolarized_pair(p_depol: float) -> np.ndarray:
    phi = np.array([1.0, 0.0, 0.0, 1.0]) / math.sqrt(2.0)
    return (1.0 - p_depol) * np.outer(phi, phi) + p_depol * np.eye(4) / 4.0


def e91_process(n: int, mu: float, p_depol: float = 0.0, purify_env: bool = True) -> ProcessSpec:
    """n rounds on depolarised pairs; Eve holds a purification of each pair."""
    from .ops import purify as _purify

    blocks = []
    regs: list[Register] = []
    e_labels = []
    for i in range(1, n + 1):
        pair = MultipartiteOperator((Register(f"Q{i}", 2), Register(f"Qb{i}", 2)),
                                    depolarized_pair(p_depol))
        if purify_env and p_depol > 0.0:
            pure = _purify(pair, env_label=f"E{i}")
            blocks.append(pure)
            e_labels.append(f"E{i}")
        else:
            blocks.append(pair)
        regs.extend(blocks[-1].registers)
    mat = blocks[0].entries
    for blk in blocks[1:]:
        mat = np.kron(mat, blk.entries)
    initial = CQState(tuple(r for blk in blocks for r in blk.registers), {(): mat})
    steps = [E91RoundStep(mu) for _ in range(n)]
    return ProcessSpec(n, steps, initial, e_labels=tuple(e_labels), drop_labels=())


def e91_min_tradeoff(mu: float, e: float) -> tuple[TradeoffSpec, float, Event]:
    """Tangent tradeoff, threshold, and abort event for the test statistics."""
    affine, h = tangent_tradeoff(qkd_tradeoff(mu), qkd_q0(mu, e))
    return affine, h, Event.freq_at_most("1", e * mu * mu)


# ---------------------------------------------------------------------------
# the classical counterexample: Markov conditions are necessary
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CounterexampleReport:
    n: int
    epsilon: float
    hmin_eps: float
    hmin_zero: float
    per_step_values: tuple[float, ...]

    @property
    def per_step_sum(self) -> float:
        return float(sum(self.per_step_values))


def _counterexample_hmin_smooth(n: int, eps: float) -> float:
    """Exact smooth min-entropy of the reduced counterexample distribution.

    The sufficient statistic for guessing A is the XOR of the B-strings, so
    the joint is p(a, y) = 2^-n ((1/2) [a = y] + 2^-(n+1)) on 2^n x 2^n
    atoms.  The distribution is invariant under XOR shifts and linear
    automorphisms, the feasible set and objective are convex and symmetric,
    so an optimal smoothing has one value d on the diagonal and one value o
    off it; the remaining two-parameter problem is solved by bisection.
    """
    big_n = 2**n
    p_d = (0.5 + 0.5 / big_n) / big_n
    p_o = 0.5 / (big_n * big_n)
    target = math.sqrt(1.0 - eps * eps)

    def best_fidelity(d: float) -> float:
        # given the cap d on the diagonal, raise off-atoms as far as trace allows
        o_max = (1.0 - big_n * d) / (big_n * (big_n - 1.0)) if big_n * d < 1.0 else 0.0
        o = min(d, max(o_max, 0.0), 1.0)
        return big_n * math.sqrt(p_d * d) + big_n * (big_n - 1.0) * math.sqrt(p_o * o)

    hi = p_d  # no smoothing
    lo = 0.0
    if best_fidelity(hi) < target:
        raise ValueError("even the unsmoothed state misses the fidelity target")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if best_fidelity(mid) >= target:
            hi = mid
        else:
            lo = mid
    return -math.log2(big_n * hi)


def _counterexample_per_step(n: int) -> float:
    """inf over past/future conditioning of H(A_i | B_i).

    Conditioning on other rounds never biases the coin C (each unseen bit of
    B_i makes any past A consistent with either hypothesis), so A_i agrees
    with the relevant parity of B_i with probability 3/4 regardless of the
    conditioning value: the infimum is H_Sh(3/4) for every i and n.
    """
    return h_shannon_binary(0.75)


def markov_necessity_counterexample(n: int, epsilon: float = 0.01) -> CounterexampleReport:
    """Smooth min-entropy stays near one bit while per-step infima grow as n."""
    if not 1 <= n <= 12:
        raise ValueError(f"n = {n} outside the supported range 1..12")
    big_n = 2**n
    p_d = (0.5 + 0.5 / big_n) / big_n
    hmin_zero = -math.log2(big_n * p_d)
    hmin_eps = _counterexample_hmin_smooth(n, epsilon) if epsilon > 0 else hmin_zero
    per_step = tuple(_counterexample_per_step(n) for _ in range(n))
    return CounterexampleReport(n, epsilon, hmin_eps, hmin_zero, per_step)


def counterexample_joint_table(n: int) -> np.ndarray:
    """The reduced joint distribution p[a, y], exact, for oracle tests."""
    big_n = 2**n
    table = np.full((big_n, big_n), 0.5 / (big_n * big_n))
    table[np.arange(big_n), np.arange(big_n)] += 0.5 / big_n
    return table
