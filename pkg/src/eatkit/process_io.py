"""Process spec files: structured text describing a sequential process by
per-step channel kind and parameters.

Supported step kinds:

* ``iid-prep``: sets (A_i, B_i) to a fixed bipartite state each round;
  the state is ``"bell"``, ``{"depolarized": p}``, or an inline state
  document;
* ``e91-round``: one protocol round with parameters ``mu`` and ``p_depol``;
* ``classical-table``: a classical memory chain; the table lists, per
  memory symbol, the outcomes ``[prob, a, b, x, next_memory]``;
* ``custom-choi``: a channel given by its conditional-state (Choi) matrix
  from the memory register to (A_i, B_i, memory), followed by a
  computational-basis parity extraction.
"""

from __future__ import annotations

import json
import math

import numpy as np

from .ops import MultipartiteOperator, Register
from .sequential import (
    ClassicalTableStep,
    CustomChoiStep,
    E91RoundStep,
    IIDPrepStep,
    ProcessSpec,
    e91_process,
    iid_process,
)
from .states import Channel, CQState
from .stateio import _matrix_from_json, _matrix_to_json, parse_state


class ProcessFormatError(ValueError):
    pass


def _resolve_iid_state(doc) -> MultipartiteOperator:
    from .sampling import bell_state
    from .sequential import depolarized_pair

    if doc == "bell":
        return bell_state()
    if isinstance(doc, dict) and "depolarized" in doc:
        regs = (Register("A", 2), Register("B", 2))
        return MultipartiteOperator(regs, depolarized_pair(float(doc["depolarized"])))
    if isinstance(doc, dict):
        state = parse_state(json.dumps(doc))
        if not isinstance(state, MultipartiteOperator) or len(state.registers) != 2:
            raise ProcessFormatError("iid-prep wants a dense bipartite state")
        return state
    raise ProcessFormatError(f"unknown iid-prep state {doc!r}")


def load_process_spec(text: str) -> ProcessSpec:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProcessFormatError(f"invalid JSON: {exc}") from exc
    if doc.get("format") != "eatkit-process":
        raise ProcessFormatError("not an eatkit process document")
    steps_doc = doc.get("steps", [])
    n = int(doc.get("n", len(steps_doc)))
    if n != len(steps_doc):
        raise ProcessFormatError(f"n = {n} does not match {len(steps_doc)} steps")
    if not steps_doc:
        raise ProcessFormatError("a process needs at least one step")
    kinds = {s.get("kind") for s in steps_doc}

    if kinds == {"e91-round"}:
        first = steps_doc[0]
        mu = float(first["mu"])
        p_depol = float(first.get("p_depol", 0.0))
        if any(float(s["mu"]) != mu or float(s.get("p_depol", 0.0)) != p_depol for s in steps_doc):
            raise ProcessFormatError("e91 rounds must share mu and p_depol")
        return e91_process(n, mu, p_depol)

    if kinds == {"iid-prep"}:
        nu = _resolve_iid_state(steps_doc[0].get("state", "bell"))
        return iid_process(nu, n)

    if kinds == {"classical-table"}:
        start = str(doc.get("initial_memory", "0"))
        steps = []
        for s in steps_doc:
            table = {
                str(mem): [(float(p), str(a), str(b), str(x), str(nxt))
                           for p, a, b, x, nxt in rows]
                for mem, rows in s["table"].items()
            }
            steps.append(ClassicalTableStep(table))
        memory_reg = Register("R", len(steps[0].memory_alphabet), classical=True,
                              alphabet=steps[0].memory_alphabet)
        initial = CQState((memory_reg,), {(start,): np.array([[1.0 + 0j]])})
        return ProcessSpec(n, steps, initial, e_labels=(), drop_labels=("R",))

    if kinds == {"custom-choi"}:
        first = steps_doc[0]
        r_dim = int(first["r_dim"])
        a_dim = int(first.get("a_dim", 2))
        b_dim = int(first.get("b_dim", 2))
        steps = []
        for s in steps_doc:
            dim_in = int(s["r_dim"])
            out = dim_in * a_dim * b_dim
            cond = _matrix_from_json(s["cond_state"], dim_in * out)
            steps.append(CustomChoiStep(cond, r_dim=dim_in, a_dim=a_dim, b_dim=b_dim))
        if "initial" in doc:
            initial_op = parse_state(json.dumps(doc["initial"]))
            initial = CQState(initial_op.registers, {(): initial_op.entries})
        else:
            regs = (Register("R", r_dim),)
            initial = CQState(regs, {(): np.eye(r_dim, dtype=complex) / r_dim})
        e_labels = tuple(doc.get("e_labels", []))
        return ProcessSpec(n, steps, initial, e_labels=e_labels)

    raise ProcessFormatError(f"unsupported or mixed step kinds: {sorted(kinds)}")


def dump_process_spec(kind: str, n: int, **params) -> str:
    """Convenience writer for the homogeneous presets."""
    if kind == "e91-round":
        step = {"kind": kind, "mu": params["mu"], "p_depol": params.get("p_depol", 0.0)}
    elif kind == "iid-prep":
        step = {"kind": kind, "state": params.get("state", "bell")}
    elif kind == "classical-table":
        step = {"kind": kind, "table": params["table"]}
    elif kind == "custom-choi":
        step = {
            "kind": kind,
            "r_dim": params["r_dim"],
            "a_dim": params.get("a_dim", 2),
            "b_dim": params.get("b_dim", 2),
            "cond_state": _matrix_to_json(params["cond_state"]),
        }
    else:
        raise ProcessFormatError(f"unknown step kind {kind!r}")
    doc = {"format": "eatkit-process", "n": n, "steps": [dict(step) for _ in range(n)]}
    for key in ("initial_memory", "e_labels"):
        if key in params:
            doc[key] = params[key]
    return json.dumps(doc, indent=1)
