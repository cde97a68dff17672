"""Process spec files and the classical-table / custom-choi presets."""

import json
import math

import numpy as np
import pytest

from eatkit.accumulation import TradeoffSpec, aep_bound
from eatkit.entropy import h_shannon_binary
from eatkit.process_io import ProcessFormatError, dump_process_spec, load_process_spec
from eatkit.sampling import bell_state, random_unitary, rng_from
from eatkit.sequential import check_markov_chain_conditions, run_process, soundness_experiment
from eatkit.states import Channel
from eatkit.ops import Register


def test_e91_process_file_round():
    text = dump_process_spec("e91-round", 2, mu=0.4, p_depol=0.1)
    spec = load_process_spec(text)
    res = run_process(spec)
    assert res.state.total_weight() == pytest.approx(1.0, abs=1e-9)
    assert max(check_markov_chain_conditions(res)) < 1e-9


def test_iid_process_file_matches_aep():
    text = dump_process_spec("iid-prep", 3, state="bell")
    spec = load_process_spec(text)
    rep = soundness_experiment(spec, TradeoffSpec.constant(-1.0, ("0",)), 0.1)
    assert rep.eat_bound == pytest.approx(aep_bound(bell_state(), ["B"], 3, 0.1), abs=1e-9)


def test_classical_table_biased_coin_chain():
    # memory remembers the previous A; B is a fresh fair coin; X = a xor b
    def rows(bias):
        out = []
        for a, pa in (("0", 1 - bias), ("1", bias)):
            for b in "01":
                x = str(int(a) ^ int(b))
                out.append((pa * 0.5, a, b, x, a))
        return out

    table = {"0": rows(0.2), "1": rows(0.8)}
    text = dump_process_spec("classical-table", 3, table=table, initial_memory="0")
    spec = load_process_spec(text)
    res = run_process(spec)
    assert res.state.total_weight() == pytest.approx(1.0, abs=1e-12)
    # B is independent of the past, so the chain conditions hold exactly
    assert max(check_markov_chain_conditions(res)) < 1e-10
    # a valid constant min-tradeoff: H(A|B memory-value) >= H_Sh(0.2)
    f = TradeoffSpec.constant(h_shannon_binary(0.2), ("0", "1"))
    rep = soundness_experiment(spec, f, 0.1)
    assert rep.slack > 0.0


def test_classical_table_rejects_non_function_x():
    table = {"0": [(0.5, "0", "0", "0", "0"), (0.5, "0", "0", "1", "0")]}
    with pytest.raises(ValueError):
        load_process_spec(dump_process_spec("classical-table", 1, table=table))


def test_custom_choi_round_trip():
    rng = rng_from(3)
    # unitary scrambling of (R, fresh |0><0| pair) -> (A, B, R)
    u = random_unitary(8, rng)

    def fn(m):
        big = np.kron(m, np.diag([1.0, 0, 0, 0]).astype(complex))
        return u @ big @ u.conj().T

    ch = Channel.from_map(
        fn, (Register("R", 2),), (Register("_A", 2), Register("_B", 2), Register("_R", 2))
    )
    text = dump_process_spec("custom-choi", 2, r_dim=2, cond_state=ch.cond_state.entries)
    spec = load_process_spec(text)
    res = run_process(spec)
    assert res.state.total_weight() == pytest.approx(1.0, abs=1e-9)
    assert res.state.quantum_dim <= 64
    # note: a generic choi step need not satisfy the chain conditions;
    # this one feeds R into B, so the check reports whatever it finds
    violations = check_markov_chain_conditions(res)
    assert all(v >= -1e-9 for v in violations)


def test_process_file_errors():
    with pytest.raises(ProcessFormatError):
        load_process_spec("{broken")
    with pytest.raises(ProcessFormatError):
        load_process_spec(json.dumps({"format": "other"}))
    with pytest.raises(ProcessFormatError):
        load_process_spec(json.dumps({"format": "eatkit-process", "n": 0, "steps": []}))
    mixed = {
        "format": "eatkit-process",
        "n": 2,
        "steps": [{"kind": "iid-prep"}, {"kind": "e91-round", "mu": 0.3}],
    }
    with pytest.raises(ProcessFormatError):
        load_process_spec(json.dumps(mixed))
