"""State file format shared by the library and the CLI.

A state document is JSON with a register list and either a dense complex
matrix (entries as [re, im] pairs, row-major) or a branch map for cq states.
Floats are serialised through ``repr``-faithful JSON, so a
parse -> serialize -> parse round trip is bit-exact.
"""

from __future__ import annotations

import json
from typing import Sequence

import numpy as np

from .ops import MultipartiteOperator, Register
from .states import CQState

FORMAT = "eatkit-state"


class StateFormatError(ValueError):
    pass


def _matrix_to_json(mat: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(mat, dtype=complex)]


def _matrix_from_json(rows: Sequence, dim: int) -> np.ndarray:
    mat = np.array([[complex(re, im) for re, im in row] for row in rows], dtype=complex)
    if mat.shape != (dim, dim):
        raise StateFormatError(f"matrix shape {mat.shape} does not match registers ({dim})")
    return mat


def _register_to_json(reg: Register) -> dict:
    doc = {"label": reg.label, "dim": reg.dim, "classical": reg.classical}
    if reg.classical:
        doc["alphabet"] = list(reg.alphabet)
    return doc


def _register_from_json(doc: dict) -> Register:
    alphabet = tuple(doc["alphabet"]) if doc.get("alphabet") is not None else None
    return Register(str(doc["label"]), int(doc["dim"]), bool(doc.get("classical", False)), alphabet)


def serialize_state(state) -> str:
    if isinstance(state, MultipartiteOperator):
        doc = {
            "format": FORMAT,
            "version": 1,
            "registers": [_register_to_json(r) for r in state.registers],
            "matrix": _matrix_to_json(state.entries),
        }
    elif isinstance(state, CQState):
        doc = {
            "format": FORMAT,
            "version": 1,
            "registers": [_register_to_json(r) for r in state.registers],
            "branches": [
                {"symbols": list(sym), "matrix": _matrix_to_json(mat)}
                for sym, mat in sorted(state.branches.items())
            ],
        }
    else:
        raise StateFormatError(f"cannot serialise {type(state).__name__}")
    return json.dumps(doc, indent=1)


def parse_state(text: str):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise StateFormatError(f"invalid JSON: {exc}") from exc
    if doc.get("format") != FORMAT:
        raise StateFormatError("not an eatkit state document")
    registers = tuple(_register_from_json(r) for r in doc.get("registers", []))
    if "matrix" in doc:
        dim = int(np.prod([r.dim for r in registers])) if registers else 1
        return MultipartiteOperator(registers, _matrix_from_json(doc["matrix"], dim))
    if "branches" in doc:
        qdim = int(np.prod([r.dim for r in registers if not r.classical])) or 1
        branches = {
            tuple(b["symbols"]): _matrix_from_json(b["matrix"], qdim) for b in doc["branches"]
        }
        return CQState(registers, branches)
    raise StateFormatError("state document has neither 'matrix' nor 'branches'")
