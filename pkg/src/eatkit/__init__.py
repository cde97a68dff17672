"""eatkit: desk-scale numerics for entropy accumulation.

Conditional sandwiched Renyi entropies, the exact Renyi chain rule, the
entropy accumulation bound with explicit constants, and two worked
applications (finite-size entanglement-based key rates and fully quantum
random access codes), all validated against brute-force oracles on small
Hilbert spaces.
"""

from .accumulation import (
    BoundResult,
    DilutionGadget,
    EATParams,
    TradeoffSpec,
    aep_bound,
    diffi_c,
    dilution_gadget,
    dilution_tau,
    eat_alpha_star,
    eat_c,
    eat_max_bound,
    eat_min_bound,
    eat_renyi_bound,
    eat_v,
    grad_inf_norm,
    tangent_tradeoff,
)
from .applications import (
    FQRACParams,
    QKDParams,
    fqrac_bound,
    qkd_asymptotic_threshold,
    qkd_finite_key_length,
    qkd_tradeoff,
)
from .chain import ChainRuleWitness, MarkovError, build_nu, chain_rule_exact_check, chain_rule_markov_bounds
from .entropy import (
    AlphaParam,
    EntropyResult,
    d_alpha,
    d_alpha_prime,
    g_smoothing,
    h_alpha,
    h_alpha_classical_mixture,
    h_alpha_dual,
    h_alpha_up,
    h_shannon_binary,
    relative_entropy,
    von_neumann,
    von_neumann_conditional,
)
from .ops import (
    MultipartiteOperator,
    OperatorError,
    Register,
    SpectralDecomposition,
    frac_power,
    op_vectorize,
    partial_trace,
    purified_distance,
    purify,
    schatten_alpha,
    tensor,
)
from .sequential import (
    ProcessSpec,
    markov_necessity_counterexample,
    check_markov_chain_conditions,
    e91_process,
    iid_process,
    random_markov_process,
    run_process,
    soundness_experiment,
)
from .smooth import d_max, d_max_smooth_certificate, h_max_smooth, h_min_smooth
from .states import (
    Channel,
    CQState,
    Event,
    apply_channel,
    condition_on_event,
    conditional_operator,
    extraction_map,
    markov_violation,
)
from .accumulation import dump_eat_config, load_eat_config
from .process_io import dump_process_spec, load_process_spec
from .stateio import parse_state, serialize_state

__version__ = "0.1.0"
