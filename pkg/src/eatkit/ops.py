"""Dense complex Hermitian operator algebra on labelled registers.

Everything here works on small (total dimension <= 64) multipartite
operators.  Matrices are plain ``numpy`` arrays; the :class:`MultipartiteOperator`
wrapper adds register bookkeeping (labels, dimensions, classical flags) so
that partial traces, embeddings and reorderings can be requested by label.

Conventions:

* tensor factors are ordered as listed in ``registers`` and combined with
  ``numpy.kron`` in that order;
* logarithms are base 2 throughout the package;
* fractional powers use the generalised inverse: eigenvalues below
  ``clip * lambda_max`` are treated as exact zeros, and negative powers act
  on the support only, so that ``X @ frac_power(X, -1) @ X == X``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .config import tolerances


class OperatorError(ValueError):
    """Structural problem with an operator (non-Hermitian, not PSD, ...)."""


# ---------------------------------------------------------------------------
# registers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Register:
    """A labelled subsystem.

    ``alphabet`` is only meaningful for classical registers; it defaults to
    the decimal symbols ``"0" .. str(dim - 1)``.
    """

    label: str
    dim: int
    classical: bool = False
    alphabet: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.dim < 1:
            raise OperatorError(f"register {self.label!r} has dim {self.dim} < 1")
        if self.classical:
            if self.alphabet is None:
                object.__setattr__(self, "alphabet", tuple(str(i) for i in range(self.dim)))
            elif len(self.alphabet) != self.dim:
                raise OperatorError(
                    f"register {self.label!r}: alphabet size {len(self.alphabet)} != dim {self.dim}"
                )


def _check_unique_labels(registers: Sequence[Register]) -> None:
    labels = [r.label for r in registers]
    if len(set(labels)) != len(labels):
        raise OperatorError(f"duplicate register labels in {labels}")


# ---------------------------------------------------------------------------
# multipartite operators
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MultipartiteOperator:
    """A dense operator over an ordered list of registers."""

    registers: tuple[Register, ...]
    entries: np.ndarray = field(repr=False)

    def __post_init__(self):
        regs = tuple(self.registers)
        object.__setattr__(self, "registers", regs)
        _check_unique_labels(regs)
        mat = np.asarray(self.entries, dtype=complex)
        d = int(np.prod([r.dim for r in regs])) if regs else 1
        if mat.shape != (d, d):
            raise OperatorError(f"matrix shape {mat.shape} != ({d}, {d}) from registers")
        object.__setattr__(self, "entries", mat)

    # -- basic queries ------------------------------------------------------

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(r.label for r in self.registers)

    def register(self, label: str) -> Register:
        for r in self.registers:
            if r.label == label:
                return r
        raise OperatorError(f"unknown register label {label!r}")

    def dims(self) -> tuple[int, ...]:
        return tuple(r.dim for r in self.registers)

    def trace(self) -> float:
        return float(np.trace(self.entries).real)

    # -- structural operations ---------------------------------------------

    def reorder(self, labels: Sequence[str]) -> "MultipartiteOperator":
        """Permute the tensor factors into the order given by ``labels``."""
        if set(labels) != set(self.labels) or len(labels) != len(self.labels):
            raise OperatorError(f"reorder target {labels} is not a permutation of {self.labels}")
        perm = [self.labels.index(l) for l in labels]
        n = len(self.registers)
        dims = self.dims()
        tensor = self.entries.reshape(dims + dims)
        tensor = tensor.transpose(perm + [n + p for p in perm])
        d = self.dim
        regs = tuple(self.registers[p] for p in perm)
        return MultipartiteOperator(regs, tensor.reshape(d, d))

    def partial_trace(self, keep: Sequence[str]) -> "MultipartiteOperator":
        return partial_trace(self, keep)

    def tensor(self, other: "MultipartiteOperator") -> "MultipartiteOperator":
        return tensor(self, other)

    def matrix(self) -> np.ndarray:
        return self.entries

    def hermitized(self) -> "MultipartiteOperator":
        return MultipartiteOperator(self.registers, hermitize(self.entries))


def operator(registers: Iterable[Register], entries: np.ndarray) -> MultipartiteOperator:
    return MultipartiteOperator(tuple(registers), entries)


def tensor(*ops: MultipartiteOperator) -> MultipartiteOperator:
    regs: tuple[Register, ...] = ()
    mat = np.array([[1.0 + 0j]])
    for op in ops:
        regs = regs + op.registers
        mat = np.kron(mat, op.entries)
    return MultipartiteOperator(regs, mat)


def identity(registers: Iterable[Register]) -> MultipartiteOperator:
    regs = tuple(registers)
    d = int(np.prod([r.dim for r in regs])) if regs else 1
    return MultipartiteOperator(regs, np.eye(d, dtype=complex))


def embed(op: MultipartiteOperator, registers: Sequence[Register]) -> MultipartiteOperator:
    """Tensor ``op`` with identities so it acts on the full register list.

    The given full register list must contain ``op``'s registers (matched by
    label); the result carries the full list in the given order.
    """
    full = tuple(registers)
    own = set(op.labels)
    rest = tuple(r for r in full if r.label not in own)
    combined = tensor(identity(rest), op) if rest else op
    return combined.reorder([r.label for r in full])


def partial_trace(op: MultipartiteOperator, keep: Sequence[str]) -> MultipartiteOperator:
    """Trace out every register not listed in ``keep``.

    Kept registers stay in their original relative order; the trace is
    preserved exactly up to floating point.
    """
    keep_set = set(keep)
    for label in keep_set:
        op.register(label)  # raises on unknown label
    n = len(op.registers)
    dims = op.dims()
    keep_idx = [i for i, r in enumerate(op.registers) if r.label in keep_set]
    drop_idx = [i for i in range(n) if i not in keep_idx]
    tensor_form = op.entries.reshape(dims + dims)
    # contract each dropped index with its primed partner
    for count, i in enumerate(sorted(drop_idx, reverse=True)):
        live = n - count  # number of row indices still present
        tensor_form = np.trace(tensor_form, axis1=i, axis2=live + i)
    kept = tuple(op.registers[i] for i in keep_idx)
    d = int(np.prod([r.dim for r in kept])) if kept else 1
    return MultipartiteOperator(kept, hermitize(tensor_form.reshape(d, d)))


# ---------------------------------------------------------------------------
# spectral machinery
# ---------------------------------------------------------------------------

def hermitize(mat: np.ndarray) -> np.ndarray:
    """(X + X^dagger) / 2 — applied after every public operation."""
    return (mat + mat.conj().T) / 2


def _as_matrix(x) -> np.ndarray:
    if isinstance(x, MultipartiteOperator):
        return x.entries
    return np.asarray(x, dtype=complex)


def _check_hermitian(mat: np.ndarray) -> None:
    scale = max(np.linalg.norm(mat, 2), 1.0)
    if np.linalg.norm(mat - mat.conj().T, 2) > tolerances.herm * scale:
        raise OperatorError("operator is not Hermitian within tolerance")


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigendecomposition with eigenvalues sorted in descending order."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.eigenvectors * self.eigenvalues) @ self.eigenvectors.conj().T


def spectral(x) -> SpectralDecomposition:
    mat = hermitize(_as_matrix(x))
    _check_hermitian(_as_matrix(x))
    vals, vecs = np.linalg.eigh(mat)
    order = np.argsort(vals)[::-1]
    dec = SpectralDecomposition(vals[order], vecs[:, order])
    scale = max(np.max(np.abs(dec.eigenvalues)), 1e-300)
    err = np.linalg.norm(dec.reconstruct() - mat, 2)
    if err > tolerances.eig * max(scale, 1.0):
        raise OperatorError(f"eigendecomposition reconstruction error {err:.3e}")
    return dec


def frac_power(x, p: float):
    """Generalised fractional power ``X^p`` of a PSD operator.

    Eigenvalues below ``clip * lambda_max`` are treated as zero; for p < 0
    the power acts on the support only (Moore–Penrose semantics), and p == 0
    gives the projector onto the support.
    """
    mat = _as_matrix(x)
    _check_hermitian(mat)
    vals, vecs = np.linalg.eigh(hermitize(mat))
    lam_max = max(float(vals[-1]), 0.0)
    if vals[0] < -tolerances.psd * max(lam_max, 1.0):
        raise OperatorError(f"operator is not PSD: min eigenvalue {vals[0]:.3e}")
    cut = tolerances.clip * lam_max
    powered = np.zeros_like(vals)
    support = vals > cut
    powered[support] = vals[support] ** p if p != 0 else 1.0
    out = hermitize((vecs * powered) @ vecs.conj().T)
    if isinstance(x, MultipartiteOperator):
        return MultipartiteOperator(x.registers, out)
    return out


def support_projector(x):
    return frac_power(x, 0.0)


def schatten_alpha(x, alpha: float) -> float:
    """`(sum_i s_i^alpha)^(1/alpha)` over singular values; a norm for alpha >= 1."""
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    s = np.linalg.svd(_as_matrix(x), compute_uv=False)
    s = s[s > 0]
    if s.size == 0:
        return 0.0
    # stabilise against overflow for large alpha by factoring out the peak
    top = float(s[0])
    return float(top * np.sum((s / top) ** alpha) ** (1.0 / alpha))


# ---------------------------------------------------------------------------
# purification, fidelity, vectorisation
# ---------------------------------------------------------------------------

def purify(rho: MultipartiteOperator, env_label: str = "env") -> MultipartiteOperator:
    """Return a purification |psi><psi| with an environment of dim = rank(rho)."""
    if rho.trace() > 1.0 + tolerances.norm:
        raise OperatorError(f"trace {rho.trace():.6f} > 1, cannot purify")
    dec = spectral(rho)
    vals = np.clip(dec.eigenvalues, 0.0, None)
    lam_max = vals[0] if vals.size else 0.0
    support = np.where(vals > tolerances.clip * max(lam_max, 1e-300))[0]
    rank = max(len(support), 1)
    d = rho.dim
    psi = np.zeros(d * rank, dtype=complex)
    for k, idx in enumerate(support):
        block = np.sqrt(vals[idx]) * dec.eigenvectors[:, idx]
        psi += np.kron(block, np.eye(rank)[:, k])
    env = Register(env_label, rank)
    return MultipartiteOperator(rho.registers + (env,), np.outer(psi, psi.conj()))


def root_fidelity(rho, sigma) -> float:
    """``F(rho, sigma) = || sqrt(rho) sqrt(sigma) ||_1`` (no squaring)."""
    r = frac_power(_as_matrix(rho), 0.5)
    s = frac_power(_as_matrix(sigma), 0.5)
    return schatten_alpha(r @ s, 1.0)


def purified_distance(rho, sigma) -> float:
    """P(rho, sigma) = sqrt(1 - Fbar^2) with the generalised fidelity Fbar."""
    r = _as_matrix(rho)
    s = _as_matrix(sigma)
    tr_r = float(np.trace(r).real)
    tr_s = float(np.trace(s).real)
    gap = np.sqrt(max(1.0 - tr_r, 0.0) * max(1.0 - tr_s, 0.0))
    fbar = min(root_fidelity(r, s) + gap, 1.0)
    return float(np.sqrt(max(1.0 - fbar * fbar, 0.0)))


def op_vectorize(psi: np.ndarray, dim_a: int, dim_b: int) -> np.ndarray:
    """Matrix form of a vector on A tensor B: rows indexed by B, columns by A.

    With this convention ``op(psi) @ op(psi)^dagger == tr_A |psi><psi|`` and
    ``op((X (x) Y) psi) == Y @ op(psi) @ X^T`` in the computational bases.
    """
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    if psi.size != dim_a * dim_b:
        raise OperatorError(f"vector length {psi.size} != {dim_a} * {dim_b}")
    return psi.reshape(dim_a, dim_b).T.copy()


def theta_vector(dim: int) -> np.ndarray:
    """Unnormalised maximally entangled |Theta> = sum_i |i>|i> on A (x) Abar."""
    psi = np.zeros(dim * dim, dtype=complex)
    psi[:: dim + 1] = 1.0
    return psi
