"""Seeded random operators used by the verification suites and tests."""

from __future__ import annotations

import numpy as np

from .ops import MultipartiteOperator, Register, hermitize


def rng_from(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def random_unitary(dim: int, rng) -> np.ndarray:
    rng = rng_from(rng)
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(g)
    phases = np.diag(r).copy()
    phases /= np.abs(phases)
    return q * phases


def random_isometry(dim_in: int, dim_out: int, rng) -> np.ndarray:
    if dim_out < dim_in:
        raise ValueError("isometry needs dim_out >= dim_in")
    u = random_unitary(dim_out, rng)
    return u[:, :dim_in]


def random_pure(dim: int, rng) -> np.ndarray:
    rng = rng_from(rng)
    psi = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    psi /= np.linalg.norm(psi)
    return np.outer(psi, psi.conj())


def random_density(dim: int, rng, rank: int | None = None, min_eig: float = 0.0) -> np.ndarray:
    """Haar-ish random density matrix (partial trace of a random pure state).

    ``min_eig`` mixes in the maximally mixed state to keep the spectrum away
    from zero, which the high-power Renyi checks need for clean residuals.
    """
    rng = rng_from(rng)
    rank = rank or dim
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    rho = hermitize(rho / np.trace(rho).real)
    if min_eig > 0:
        rho = (1 - dim * min_eig) * rho + min_eig * np.eye(dim)
    return hermitize(rho)


def random_state(registers, rng, rank: int | None = None, min_eig: float = 0.0) -> MultipartiteOperator:
    regs = tuple(registers)
    dim = int(np.prod([r.dim for r in regs]))
    return MultipartiteOperator(regs, random_density(dim, rng, rank=rank, min_eig=min_eig))


def random_distribution(n: int, rng) -> np.ndarray:
    rng = rng_from(rng)
    p = rng.dirichlet(np.ones(n))
    return np.asarray(p)


def qubit_registers(*labels: str) -> tuple[Register, ...]:
    return tuple(Register(l, 2) for l in labels)


def bell_state(label_a: str = "A", label_b: str = "B") -> MultipartiteOperator:
    psi = np.array([1.0, 0.0, 0.0, 1.0], dtype=complex) / np.sqrt(2.0)
    regs = (Register(label_a, 2), Register(label_b, 2))
    return MultipartiteOperator(regs, np.outer(psi, psi.conj()))
