"""Multipartite state bookkeeping: classical-quantum states, events,
channels as conditional states, and statistics-extraction maps.

Classical registers are kept branch-wise: a :class:`CQState` stores one
(subnormalised, PSD) operator on the quantum registers per classical symbol
string, never an embedded diagonal matrix.  ``to_dense`` produces the
embedded form when a computation genuinely needs it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .config import tolerances
from .ops import (
    MultipartiteOperator,
    OperatorError,
    Register,
    _check_unique_labels,
    embed,
    frac_power,
    hermitize,
    identity,
    operator,
    partial_trace,
    tensor,
)

Symbols = tuple[str, ...]


# ---------------------------------------------------------------------------
# events
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Event:
    """A decidable subset of the classical symbol strings.

    ``predicate`` receives the symbol tuple for the classical registers the
    event refers to (in register order).
    """

    predicate: Callable[[Symbols], bool]
    description: str = "event"

    def __call__(self, symbols: Symbols) -> bool:
        return bool(self.predicate(symbols))

    @staticmethod
    def full() -> "Event":
        return Event(lambda s: True, "always")

    @staticmethod
    def from_set(members: set | frozenset) -> "Event":
        frozen = {tuple(m) for m in members}
        return Event(lambda s: tuple(s) in frozen, f"set of {len(frozen)} strings")

    @staticmethod
    def freq_at_most(symbol: str, max_fraction: float) -> "Event":
        def pred(s: Symbols) -> bool:
            if len(s) == 0:
                return True
            return s.count(symbol) / len(s) <= max_fraction + 1e-12

        return Event(pred, f"freq({symbol!r}) <= {max_fraction}")

    @staticmethod
    def freq_predicate(fn: Callable[[dict], bool]) -> "Event":
        def pred(s: Symbols) -> bool:
            n = max(len(s), 1)
            freq: dict[str, float] = {}
            for sym in s:
                freq[sym] = freq.get(sym, 0.0) + 1.0 / n
            return bool(fn(freq))

        return Event(pred, "frequency region")


# ---------------------------------------------------------------------------
# classical-quantum states
# ---------------------------------------------------------------------------

def _entropy_bits(mat: np.ndarray) -> float:
    vals = np.linalg.eigvalsh(hermitize(mat))
    vals = vals[vals > 1e-15]
    return float(-np.sum(vals * np.log2(vals)))


@dataclass
class CQState:
    """State that is classical on some registers and quantum on the rest.

    ``branches`` maps symbol tuples (ordered like the classical registers
    within ``registers``) to subnormalised PSD operators on the quantum
    registers (in their relative order within ``registers``).
    """

    registers: tuple[Register, ...]
    branches: dict[Symbols, np.ndarray] = field(repr=False)

    def __post_init__(self):
        self.registers = tuple(self.registers)
        _check_unique_labels(self.registers)
        qdim = self.quantum_dim
        cleaned: dict[Symbols, np.ndarray] = {}
        for sym, mat in self.branches.items():
            sym = tuple(sym)
            if len(sym) != len(self.classical_registers):
                raise OperatorError(f"symbol tuple {sym} does not match classical registers")
            mat = np.asarray(mat, dtype=complex)
            if mat.shape != (qdim, qdim):
                raise OperatorError(f"branch {sym}: shape {mat.shape} != ({qdim},{qdim})")
            mat = hermitize(mat)
            low = float(np.min(np.linalg.eigvalsh(mat)))
            scale = max(float(np.linalg.norm(mat, 2)), 1.0)
            if low < -tolerances.psd * scale:
                raise OperatorError(f"branch {sym} is not PSD (min eig {low:.3e})")
            if np.trace(mat).real > 1e-15:
                cleaned[sym] = mat
        self.branches = cleaned

    # -- register structure ---------------------------------------------

    @property
    def classical_registers(self) -> tuple[Register, ...]:
        return tuple(r for r in self.registers if r.classical)

    @property
    def quantum_registers(self) -> tuple[Register, ...]:
        return tuple(r for r in self.registers if not r.classical)

    @property
    def quantum_dim(self) -> int:
        qr = self.quantum_registers
        return int(np.prod([r.dim for r in qr])) if qr else 1

    def total_weight(self) -> float:
        return float(sum(np.trace(m).real for m in self.branches.values()))

    def check_normalized(self) -> None:
        w = self.total_weight()
        if abs(w - 1.0) > tolerances.norm:
            raise OperatorError(f"cq state weight {w} is not 1")

    # -- conversions -------------------------------------------------------

    def to_dense(self) -> MultipartiteOperator:
        """Embed the classical registers as diagonal blocks."""
        cls = self.classical_registers
        qs = self.quantum_registers
        cdim = int(np.prod([r.dim for r in cls])) if cls else 1
        qdim = self.quantum_dim
        out = np.zeros((cdim * qdim, cdim * qdim), dtype=complex)
        for sym, mat in self.branches.items():
            idx = 0
            for reg, s in zip(cls, sym):
                idx = idx * reg.dim + reg.alphabet.index(s)
            sl = slice(idx * qdim, (idx + 1) * qdim)
            out[sl, sl] += mat
        ordered = MultipartiteOperator(cls + qs, out)
        return ordered.reorder([r.label for r in self.registers])

    # -- marginals and conditioning ----------------------------------------

    def keep(self, labels: Sequence[str]) -> "CQState":
        """Partial trace down to the given registers (classical or quantum)."""
        keep_set = set(labels)
        unknown = keep_set - {r.label for r in self.registers}
        if unknown:
            raise OperatorError(f"unknown labels {unknown}")
        cls = self.classical_registers
        keep_cls_pos = [i for i, r in enumerate(cls) if r.label in keep_set]
        q_keep = [r.label for r in self.quantum_registers if r.label in keep_set]
        qs = self.quantum_registers
        new_branches: dict[Symbols, np.ndarray] = {}
        for sym, mat in self.branches.items():
            key = tuple(sym[i] for i in keep_cls_pos)
            op = MultipartiteOperator(qs, mat) if qs else MultipartiteOperator((), mat)
            reduced = partial_trace(op, q_keep).entries if qs else mat
            if key in new_branches:
                new_branches[key] = new_branches[key] + reduced
            else:
                new_branches[key] = reduced
        regs = tuple(r for r in self.registers if r.label in keep_set)
        return CQState(regs, new_branches)

    def classical_distribution(self) -> dict[Symbols, float]:
        return {sym: float(np.trace(m).real) for sym, m in self.branches.items()}

    def condition(self, event: Event, on: Sequence[str] | None = None) -> tuple["CQState", float]:
        return condition_on_event(self, event, on)

    def entropy(self, labels: Sequence[str] | None = None) -> float:
        """Von Neumann entropy (bits) of the marginal on ``labels``."""
        state = self if labels is None else self.keep(labels)
        probs = []
        branch_entropy = 0.0
        for sym, mat in state.branches.items():
            p = float(np.trace(mat).real)
            if p <= 1e-15:
                continue
            probs.append(p)
            branch_entropy += p * _entropy_bits(mat / p)
        p_arr = np.asarray(probs)
        h_classical = float(-np.sum(p_arr * np.log2(p_arr))) if len(p_arr) else 0.0
        return h_classical + branch_entropy


def cq_from_operator(op: MultipartiteOperator, classical_labels: Sequence[str]) -> CQState:
    """Pinch the named registers in the computational basis and split branches."""
    cls_set = set(classical_labels)
    new_regs = tuple(
        Register(r.label, r.dim, classical=True) if r.label in cls_set and not r.classical else r
        for r in op.registers
    )
    cls = tuple(r for r in new_regs if r.classical)
    qs = tuple(r for r in new_regs if not r.classical)
    ordered = op.reorder([r.label for r in cls] + [r.label for r in qs])
    cdim = int(np.prod([r.dim for r in cls])) if cls else 1
    qdim = int(np.prod([r.dim for r in qs])) if qs else 1
    mat = ordered.entries
    branches: dict[Symbols, np.ndarray] = {}
    for idx in range(cdim):
        block = mat[idx * qdim : (idx + 1) * qdim, idx * qdim : (idx + 1) * qdim]
        if np.trace(block).real <= 1e-15:
            continue
        rem, sym = idx, []
        for reg in reversed(cls):
            rem, k = divmod(rem, reg.dim)
            sym.append(reg.alphabet[k])
        branches[tuple(reversed(sym))] = np.array(block)
    state = CQState(new_regs, branches)
    return state


def cq_product(a: CQState, b: CQState) -> CQState:
    """Tensor product of two cq states (registers concatenated)."""
    regs = a.registers + b.registers
    _check_unique_labels(regs)
    branches: dict[Symbols, np.ndarray] = {}
    for sa, ma in a.branches.items():
        for sb, mb in b.branches.items():
            branches[sa + sb] = np.kron(ma, mb)
    return CQState(regs, branches)


def condition_on_event(state: CQState, omega: Event, on: Sequence[str] | None = None) -> tuple[CQState, float]:
    """Remove branches outside the event and renormalise.

    ``on`` selects which classical registers the event predicate sees
    (default: all of them, in order).  Returns the conditioned state together
    with the event probability.
    """
    cls = state.classical_registers
    if on is None:
        positions = list(range(len(cls)))
    else:
        labels = [r.label for r in cls]
        positions = [labels.index(l) for l in on]
    selected = {
        sym: mat for sym, mat in state.branches.items() if omega(tuple(sym[i] for i in positions))
    }
    prob = float(sum(np.trace(m).real for m in selected.values()))
    if prob <= 0.0:
        raise ValueError(f"event {omega.description!r} has zero probability")
    scaled = {sym: mat / prob for sym, mat in selected.items()}
    return CQState(state.registers, scaled), prob


# ---------------------------------------------------------------------------
# conditional operators
# ---------------------------------------------------------------------------

def conditional_operator(rho: MultipartiteOperator, cond: Sequence[str]) -> MultipartiteOperator:
    """rho_{A|B} = rho_B^{-1/2} rho_AB rho_B^{-1/2} with generalised inverse."""
    sigma = partial_trace(rho, cond)
    w = embed(frac_power(sigma, -0.5), rho.registers)
    return MultipartiteOperator(rho.registers, hermitize(w.entries @ rho.entries @ w.entries))


# ---------------------------------------------------------------------------
# channels as conditional states
# ---------------------------------------------------------------------------

@dataclass
class Channel:
    """Completely positive trace-non-increasing map stored as M_{B|A}.

    ``cond_state`` lives on ``in_registers + out_registers`` and equals the
    image of the unnormalised maximally entangled vector, so that
    ``apply`` reproduces the map on arbitrary inputs.
    """

    in_registers: tuple[Register, ...]
    out_registers: tuple[Register, ...]
    cond_state: MultipartiteOperator = field(repr=False)

    def __post_init__(self):
        self.in_registers = tuple(self.in_registers)
        self.out_registers = tuple(self.out_registers)
        expected = tuple(r.label for r in self.in_registers + self.out_registers)
        if self.cond_state.labels != expected:
            self.cond_state = self.cond_state.reorder(expected)
        mat = hermitize(self.cond_state.entries)
        low = float(np.min(np.linalg.eigvalsh(mat)))
        if low < -tolerances.psd * max(float(np.linalg.norm(mat, 2)), 1.0):
            raise OperatorError(f"conditional state not PSD (min eig {low:.3e})")
        marg = partial_trace(self.cond_state, [r.label for r in self.in_registers])
        gap = np.linalg.eigvalsh(np.eye(marg.dim) - marg.entries)
        if float(np.min(gap)) < -tolerances.psd * max(1.0, float(np.linalg.norm(marg.entries, 2))):
            raise OperatorError("tr_B[M_{B|A}] exceeds the identity: map increases trace")

    @property
    def dim_in(self) -> int:
        return int(np.prod([r.dim for r in self.in_registers]))

    @property
    def dim_out(self) -> int:
        return int(np.prod([r.dim for r in self.out_registers]))

    def is_trace_preserving(self) -> bool:
        marg = partial_trace(self.cond_state, [r.label for r in self.in_registers])
        return bool(np.allclose(marg.entries, np.eye(marg.dim), atol=1e-9))

    @staticmethod
    def from_map(fn: Callable[[np.ndarray], np.ndarray], in_registers, out_registers) -> "Channel":
        """Build M_{B|A} by feeding |Theta><Theta| through the map."""
        in_regs = tuple(in_registers)
        out_regs = tuple(out_registers)
        d = int(np.prod([r.dim for r in in_regs]))
        d_out = int(np.prod([r.dim for r in out_regs]))
        cond = np.zeros((d * d_out, d * d_out), dtype=complex)
        # run the map column by column on |i><j|
        images = np.empty((d, d, d_out, d_out), dtype=complex)
        for i in range(d):
            for j in range(d):
                unit = np.zeros((d, d), dtype=complex)
                unit[i, j] = 1.0
                images[i, j] = fn(unit)
        for i in range(d):
            for j in range(d):
                cond[i * d_out : (i + 1) * d_out, j * d_out : (j + 1) * d_out] = images[i, j]
        regs = in_regs + out_regs
        return Channel(in_regs, out_regs, MultipartiteOperator(regs, cond))

    @staticmethod
    def from_isometry(v: np.ndarray, in_registers, out_registers, env_dim: int = 1) -> "Channel":
        """Stinespring form: rho -> tr_env(V rho V^dagger)."""

        def fn(x: np.ndarray) -> np.ndarray:
            big = v @ x @ v.conj().T
            d_out = big.shape[0] // env_dim
            return np.trace(big.reshape(d_out, env_dim, d_out, env_dim), axis1=1, axis2=3)

        return Channel.from_map(fn, in_registers, out_registers)

    def apply_matrix(self, rho_in: np.ndarray) -> np.ndarray:
        """Apply to a matrix on exactly the input registers."""
        d, d_out = self.dim_in, self.dim_out
        m = self.cond_state.entries.reshape(d, d_out, d, d_out)
        return np.einsum("ac,abcd->bd", np.asarray(rho_in, dtype=complex), m)

    def apply(self, state: MultipartiteOperator) -> MultipartiteOperator:
        return apply_channel(self, state)


def apply_channel(ch: Channel, state) -> MultipartiteOperator | CQState:
    """Apply a channel to the matching registers of a state.

    Registers of the state not consumed by the channel are carried along
    untouched; classical structure is preserved by acting branch-wise.
    """
    if isinstance(state, CQState):
        qs = state.quantum_registers
        new_branches = {}
        template: tuple[Register, ...] = ()
        for sym, mat in state.branches.items():
            out_op = apply_channel(ch, MultipartiteOperator(qs, mat))
            template = out_op.registers
            new_branches[sym] = out_op.entries
        return CQState(state.classical_registers + template, new_branches)

    in_labels = [r.label for r in ch.in_registers]
    for lbl in in_labels:
        state.register(lbl)
    rest = [r for r in state.registers if r.label not in set(in_labels)]
    arranged = state.reorder([r.label for r in rest] + in_labels)
    dr = int(np.prod([r.dim for r in rest])) if rest else 1
    da, db = ch.dim_in, ch.dim_out
    sig = arranged.entries.reshape(dr, da, dr, da)
    m = ch.cond_state.entries.reshape(da, db, da, db)
    out = np.einsum("rasc,abcd->rbsd", sig, m)
    out = out.reshape(dr * db, dr * db)
    regs = tuple(rest) + ch.out_registers
    return MultipartiteOperator(regs, hermitize(out))


# ---------------------------------------------------------------------------
# statistics-extraction maps
# ---------------------------------------------------------------------------

@dataclass
class ExtractionMap:
    """The pinch-and-record map T(W) = sum (Pi_y (x) Pi_z) W (...) (x) |t(y,z)><t(y,z)|_X."""

    proj_a: dict[str, np.ndarray]
    proj_b: dict[str, np.ndarray]
    t: Callable[[str, str], str]
    a_registers: tuple[Register, ...]
    b_registers: tuple[Register, ...]
    x_register: Register

    def __post_init__(self):
        if not self.x_register.classical:
            raise OperatorError("X register of an extraction map must be classical")
        for fam_name, fam, regs in (
            ("A", self.proj_a, self.a_registers),
            ("B", self.proj_b, self.b_registers),
        ):
            d = int(np.prod([r.dim for r in regs]))
            total = np.zeros((d, d), dtype=complex)
            keys = list(fam)
            for i, y in enumerate(keys):
                p = np.asarray(fam[y], dtype=complex)
                if not np.allclose(p @ p, p, atol=1e-9) or not np.allclose(p, p.conj().T, atol=1e-9):
                    raise OperatorError(f"{fam_name} projector {y!r} is not an orthogonal projector")
                total += p
                for z in keys[i + 1 :]:
                    if np.linalg.norm(p @ np.asarray(fam[z]), 2) > 1e-9:
                        raise OperatorError(f"{fam_name} projectors {y!r}, {z!r} are not orthogonal")
            if not np.allclose(total, np.eye(d), atol=1e-9):
                raise OperatorError(f"{fam_name} projector family does not sum to the identity")

    @property
    def ab_registers(self) -> tuple[Register, ...]:
        return self.a_registers + self.b_registers

    def apply(self, w: MultipartiteOperator) -> CQState:
        """Returns a cq state with the classical X register appended."""
        labels = [r.label for r in self.ab_registers]
        rest = [r for r in w.registers if r.label not in set(labels)]
        arranged = w.reorder([r.label for r in rest] + labels)
        branches: dict[Symbols, np.ndarray] = {}
        for y, pa in self.proj_a.items():
            for z, pb in self.proj_b.items():
                proj = np.kron(np.asarray(pa), np.asarray(pb))
                if rest:
                    proj = np.kron(np.eye(int(np.prod([r.dim for r in rest]))), proj)
                piece = proj @ arranged.entries @ proj
                if np.trace(piece).real <= 1e-15:
                    continue
                x = self.t(y, z)
                branches[(x,)] = branches.get((x,), 0) + piece
        regs = (self.x_register,) + tuple(rest) + self.ab_registers
        return CQState(regs, {k: hermitize(v) for k, v in branches.items()})

    def apply_cq(self, state: CQState) -> CQState:
        """Branch-wise application; the new X symbol is appended to each key."""
        out_branches: dict[Symbols, np.ndarray] = {}
        qs = state.quantum_registers
        for sym, mat in state.branches.items():
            sub = self.apply(MultipartiteOperator(qs, mat))
            for (x,), piece in sub.branches.items():
                key = sym + (x,)
                out_branches[key] = out_branches.get(key, 0) + piece
        sub_qs = tuple(r for r in sub.registers if not r.classical)
        regs = state.classical_registers + (self.x_register,) + sub_qs
        return CQState(regs, out_branches)

    def pinch(self, w: MultipartiteOperator) -> MultipartiteOperator:
        """tr_X of the output: the joint pinching of W."""
        out = self.apply(w)
        return out.keep([r.label for r in out.registers if r.label != self.x_register.label]).to_dense()


def extraction_map(proj_a, proj_b, t, a_registers, b_registers, x_register=None) -> ExtractionMap:
    keys = sorted({t(y, z) for y in proj_a for z in proj_b})
    if x_register is None:
        x_register = Register("X", len(keys), classical=True, alphabet=tuple(keys))
    return ExtractionMap(dict(proj_a), dict(proj_b), t, tuple(a_registers), tuple(b_registers), x_register)


# ---------------------------------------------------------------------------
# Markov condition
# ---------------------------------------------------------------------------

def markov_violation(state, a: Sequence[str], b: Sequence[str], c: Sequence[str]) -> float:
    """Conditional mutual information I(A:C|B) in bits (zero iff A <-> B <-> C).

    Works on dense operators or cq states; the numeric criterion
    ``I(A:C|B) <= tolerances.markov`` replaces the structural block
    decomposition.
    """
    a, b, c = list(a), list(b), list(c)

    if isinstance(state, CQState):
        ent = state.entropy
    else:
        def ent(labels):
            reduced = partial_trace(state, labels)
            return _entropy_bits(reduced.entries)

    h_ab = ent(a + b)
    h_bc = ent(b + c)
    h_b = ent(b)
    h_abc = ent(a + b + c)
    return float(h_ab + h_bc - h_b - h_abc)
