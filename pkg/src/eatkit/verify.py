"""Seeded verification suites driving the toolkit's core identities.

Each suite runs a batch of randomised instances and reports the worst
residual (for equalities) or worst violation (for inequalities) per label.
The same functions back the `eatkit verify` command and the acceptance
tests, so a reproducer is always one seed away.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .accumulation import TradeoffSpec
from .chain import build_nu, chain_rule_exact_check
from .config import tolerances
from .entropy import (
    d_alpha,
    d_alpha_prime,
    g_smoothing,
    h_alpha,
    h_alpha_classical_mixture,
    h_alpha_up,
    h_prime_up,
    relative_entropy,
    von_neumann_conditional,
)
from .ops import (
    MultipartiteOperator,
    Register,
    frac_power,
    hermitize,
    partial_trace,
    schatten_alpha,
)
from .sampling import random_density, random_isometry, random_pure, rng_from
from .smooth import h_max_smooth, h_min_smooth
from .states import CQState, cq_from_operator, extraction_map
from .sequential import (
    markov_necessity_counterexample,
    counterexample_joint_table,
    e91_min_tradeoff,
    e91_process,
    iid_process,
    random_markov_process,
    soundness_experiment,
)

CHAIN_ALPHAS = (0.6, 1.5, 2.0, 3.0)


@dataclass
class SuiteReport:
    name: str
    seed: int
    trials: int
    entries: dict[str, float] = field(default_factory=dict)
    tols: dict[str, float] = field(default_factory=dict)

    def record(self, label: str, value: float, tol: float) -> None:
        self.entries[label] = max(self.entries.get(label, 0.0), float(value))
        self.tols[label] = tol

    @property
    def failures(self) -> list[str]:
        return [k for k, v in self.entries.items() if v > self.tols[k]]

    @property
    def passed(self) -> bool:
        return not self.failures


def _regs(*dims: int) -> tuple[Register, ...]:
    names = ("A1", "A2", "B", "C", "D")
    return tuple(Register(names[i], d) for i, d in enumerate(dims))


# ---------------------------------------------------------------------------
# chain rule
# ---------------------------------------------------------------------------

def suite_chain_rule(seed: int = 0, trials: int = 100) -> SuiteReport:
    rng = rng_from(seed)
    report = SuiteReport("chain_rule", seed, trials)
    regs = _regs(2, 2, 2)
    for _ in range(trials):
        rho = MultipartiteOperator(regs, random_density(8, rng, min_eig=1e-3))
        for alpha in CHAIN_ALPHAS:
            w = chain_rule_exact_check(rho, ["A1"], ["A2"], alpha)
            report.record(f"exact_chain_rule_alpha_{alpha}", w.residual, tolerances.chain)
            nu_marg = partial_trace(w.nu_state, ["A1", "B"])
            direct = frac_power(
                hermitize(
                    frac_power(partial_trace(rho, ["A1", "B"]), 0.5).entries
                    @ np.kron(np.eye(2), frac_power(partial_trace(rho, ["B"]), (1 - alpha) / alpha).entries)
                    @ frac_power(partial_trace(rho, ["A1", "B"]), 0.5).entries
                ),
                alpha,
            )
            direct = direct / np.trace(direct).real
            report.record("nu_marginal_consistency",
                          float(np.linalg.norm(nu_marg.entries - direct, 2)), 1e-9)
    return report


# ---------------------------------------------------------------------------
# lemma suite
# ---------------------------------------------------------------------------

def _random_sigma(dim: int, rng) -> np.ndarray:
    return random_density(dim, rng, min_eig=5e-3)


def _check_divergence_split(report: SuiteReport, rng) -> None:
    regs = _regs(2, 2, 2)
    rho = MultipartiteOperator(regs, random_density(8, rng, min_eig=1e-3))
    sigma = MultipartiteOperator((regs[2],), _random_sigma(2, rng))
    for alpha in (0.7, 1.4, 2.5):
        lhs = d_alpha(partial_trace(rho, ["A1", "B"]).entries,
                      np.kron(np.eye(2), sigma.entries), alpha)
        full = d_alpha(rho.reorder(["A1", "A2", "B"]).entries,
                       np.kron(np.eye(4), sigma.entries), alpha)
        nu = build_nu(rho, ["A2"], sigma, alpha)
        rhs = h_alpha(nu, ["A1", "B"], alpha)
        report.record("divergence_split_identity", abs((lhs - full) - rhs), 1e-8)


def _check_classical_mixture_rule(report: SuiteReport, rng) -> None:
    regs = (Register("A", 2), Register("B", 2))
    x = Register("X", 3, classical=True)
    p = rng.dirichlet(np.ones(3))
    branches = {(str(i),): p[i] * random_density(4, rng, min_eig=1e-3) for i in range(3)}
    state = CQState((x,) + regs, branches)
    for alpha in (0.8, 1.5, 2.0):
        mixture = h_alpha_classical_mixture(state, ["B"], alpha)
        direct = h_alpha(state, ["B", "X"], alpha)
        report.record("classical_mixture_rule", abs(mixture - direct), 1e-9)


def _check_purification_supremum(report: SuiteReport, rng) -> None:
    # D_alpha(rho||sigma) = sup_tau of the purification functional; the
    # supremum is attained at tau* = K^alpha / tr K^alpha with
    # K = tr_1[(sigma^{-alpha'} (x) id) |psi><psi|].
    dim = 3
    rho = random_density(dim, rng, min_eig=1e-3)
    sigma = _random_sigma(dim, rng)
    from .ops import purify

    pure = purify(MultipartiteOperator((Register("S", dim),), rho), env_label="E")
    env_dim = pure.register("E").dim
    for alpha in (1.5, 2.0):
        ap = (alpha - 1.0) / alpha
        weight = np.kron(frac_power(sigma, -ap), np.eye(env_dim))
        # K = tr_S[(sigma^{-a'} (x) id) |psi><psi|]; the functional is tr(K tau^{a'})
        km = (weight @ pure.entries).reshape(dim, env_dim, dim, env_dim)
        k = hermitize(np.trace(km, axis1=0, axis2=2))
        sup_val = math.log2(schatten_alpha(k, alpha)) / ap
        direct = d_alpha(rho, sigma, alpha)
        report.record("purification_supremum", abs(sup_val - direct), 1e-8)
        # random tau never exceeds the supremum
        tau = _random_sigma(env_dim, rng)
        val = math.log2(max(np.trace(k @ frac_power(tau, ap)).real, 1e-300)) / ap
        report.record("purification_supremum_dominance", max(val - direct, 0.0), 1e-8)


def _check_duality(report: SuiteReport, rng) -> None:
    from .entropy import h_alpha_dual

    regs = _regs(2, 2, 2)
    psi = random_pure(8, rng)
    state = MultipartiteOperator(regs, psi)
    for alpha in (0.6, 1.5, 2.0):
        direct = h_alpha(partial_trace(state, ["A1", "A2"]), ["A2"], alpha)
        dual = h_alpha_dual(state, ["A1"], ["A2"], ["B"], alpha)
        report.record("duality_h_hprime", abs(direct - dual), 1e-6)


def _check_sandwich_vn(report: SuiteReport, rng) -> None:
    regs = (Register("A", 2), Register("B", 2))
    d_a = 2
    bound = math.log2(1.0 + 2.0 * d_a)
    rho = MultipartiteOperator(regs, random_density(4, rng, min_eig=1e-4))
    h1 = von_neumann_conditional(rho, ["B"])
    for alpha in (1.0 + 0.2 / bound, 1.0 + 0.9 / bound):
        width = (alpha - 1.0) * bound * bound
        ha = h_alpha(rho, ["B"], alpha)
        hinv = h_alpha(rho, ["B"], 1.0 / alpha)
        report.record("sandwich_lower", max((h1 - width) - ha, 0.0), 1e-8)
        report.record("sandwich_middle", max(ha - hinv, 0.0), 1e-8)
        report.record("sandwich_upper", max(hinv - (h1 + width), 0.0), 1e-8)


def _check_smooth_from_renyi(report: SuiteReport, rng) -> None:
    # classical instances: the smooth entropies are exact there
    x = Register("X", 3, classical=True)
    y = Register("Y", 2, classical=True)
    p = rng.dirichlet(np.ones(6)).reshape(3, 2)
    branches = {(str(i), str(j)): np.array([[p[i, j]]]) for i in range(3) for j in range(2)}
    state = CQState((x, y), branches)
    eps = 0.1 + 0.5 * rng.random()
    hmin = h_min_smooth(state, ["Y"], eps).value
    hmax = h_max_smooth(state, ["Y"], eps).value
    dense = state.to_dense()
    for alpha in (1.3, 1.8, 2.0):
        up = h_alpha_up(dense, ["Y"], alpha, refine=False).value
        lower = up - g_smoothing(eps) / (alpha - 1.0)
        report.record("smooth_from_renyi_min", max(lower - hmin, 0.0), 1e-5)
        upper = h_alpha(dense, ["Y"], 1.0 / alpha) + g_smoothing(eps) / (alpha - 1.0)
        report.record("smooth_from_renyi_max", max(hmax - upper, 0.0), 1e-5)


def _check_append_statistics(report: SuiteReport, rng) -> None:
    regs = (Register("A", 2), Register("B", 2))
    omega = MultipartiteOperator(regs, random_density(4, rng, min_eig=1e-3))
    t_table = {("0", "0"): "0", ("0", "1"): "1", ("1", "0"): "1", ("1", "1"): "0"}
    proj = {"0": np.diag([1.0, 0.0]), "1": np.diag([0.0, 1.0])}
    ext = extraction_map(proj, proj, lambda y, z: t_table[(y, z)], (regs[0],), (regs[1],))
    out = ext.apply(omega)
    dense = out.to_dense()
    pinched = out.keep(["A", "B"]).to_dense()
    for alpha in (0.7, 1.6, 2.2):
        with_x = h_alpha(dense, ["B"], alpha)
        without = h_alpha(pinched, ["B"], alpha)
        report.record("append_statistics_h", abs(with_x - without), 1e-8)
    up_with = h_alpha_up(dense, ["B"], 1.5).value
    up_without = h_alpha_up(pinched, ["B"], 1.5).value
    report.record("append_statistics_h_up", abs(up_with - up_without), 1e-5)


def _check_mixture_conditioning(report: SuiteReport, rng) -> None:
    regs = (Register("A", 2), Register("B", 2))
    p = rng.dirichlet(np.ones(3))
    parts = [random_density(4, rng, min_eig=1e-3) for _ in range(3)]
    mixture = MultipartiteOperator(regs, sum(pi * m for pi, m in zip(p, parts)))
    for alpha in (1.4, 1.9):
        up_mix = h_alpha_up(mixture, ["B"], alpha, refine=False).value
        for pi, m in zip(p, parts):
            up_branch = h_alpha_up(MultipartiteOperator(regs, m), ["B"], alpha, refine=False).value
            lhs = up_mix - (alpha / (alpha - 1.0)) * math.log2(1.0 / pi)
            report.record("mixture_conditioning_up_above", max(lhs - up_branch, 0.0), 1e-5)
            inv = h_alpha(mixture, ["B"], 1.0 / alpha) + (alpha / (alpha - 1.0)) * math.log2(1.0 / pi)
            inv_branch = h_alpha(MultipartiteOperator(regs, m), ["B"], 1.0 / alpha)
            report.record("mixture_conditioning_inv", max(inv_branch - inv, 0.0), 1e-8)
    alpha = 0.7
    up_mix = h_alpha_up(mixture, ["B"], alpha, refine=False).value
    for pi, m in zip(p, parts):
        up_branch = h_alpha_up(MultipartiteOperator(regs, m), ["B"], alpha, refine=False).value
        lhs = up_mix - (alpha / (alpha - 1.0)) * math.log2(1.0 / pi)
        report.record("mixture_conditioning_up_below", max(up_branch - lhs, 0.0), 1e-5)


def _check_schatten_dual(report: SuiteReport, rng) -> None:
    x = random_density(2, rng, min_eig=1e-3) * (0.5 + rng.random())
    for alpha in (1.5, 2.0, 3.0, 0.7):
        ap = (alpha - 1.0) / alpha
        z_star = frac_power(x, alpha)
        z_star = z_star / np.trace(z_star).real
        val = float(np.trace(x @ frac_power(z_star, ap)).real)
        report.record("schatten_dual_closed_form", abs(val - schatten_alpha(x, alpha)), 1e-9)
    # dense Bloch-ball grid never beats the norm (alpha > 1 side)
    alpha = 2.0
    ap = 0.5
    target = schatten_alpha(x, alpha)
    best = -math.inf
    paulis = (np.array([[0, 1], [1, 0]]), np.array([[0, -1j], [1j, 0]]), np.diag([1, -1]))
    for rx in np.linspace(-1, 1, 9):
        for ry in np.linspace(-1, 1, 9):
            for rz in np.linspace(-1, 1, 9):
                if rx * rx + ry * ry + rz * rz > 1.0:
                    continue
                z = 0.5 * (np.eye(2) + rx * paulis[0] + ry * paulis[1] + rz * paulis[2])
                val = float(np.trace(x @ frac_power(z, ap)).real)
                best = max(best, val)
                report.record("schatten_dual_grid_dominated", max(val - target, 0.0), 1e-10)
    report.record("schatten_dual_grid_reaches", max(target - best, 0.0), 5e-2)


def _check_petz_expansion_bound(report: SuiteReport, rng) -> None:
    dim = 3
    rho = random_density(dim, rng, min_eig=1e-3)
    sigma = _random_sigma(dim, rng)
    d2 = d_alpha_prime(rho, sigma, 2.0)
    d0 = d_alpha_prime(rho, sigma, 0.0)
    eta = max(4.0, 2.0**d2 + 2.0 ** (-d0) + 1.0)
    log_eta = math.log2(eta)
    d1 = relative_entropy(rho, sigma)
    for frac in (0.2, 0.8):
        alpha = 1.0 + frac / log_eta
        lhs = d_alpha_prime(rho, sigma, alpha)
        rhs = d1 + (alpha - 1.0) * log_eta * log_eta
        report.record("petz_expansion_bound", max(lhs - rhs, 0.0), 1e-8)


def _check_data_processing(report: SuiteReport, rng) -> None:
    dim = 3
    rho = random_density(dim, rng, min_eig=1e-3)
    sigma = _random_sigma(dim, rng)
    v = random_isometry(dim, dim * 2, rng)

    def channel(m: np.ndarray) -> np.ndarray:
        big = v @ m @ v.conj().T
        return np.trace(big.reshape(dim, 2, dim, 2), axis1=1, axis2=3)

    for alpha in (0.5, 0.9, 1.3, 2.0):
        before = d_alpha(rho, sigma, alpha)
        after = d_alpha(channel(rho), channel(sigma), alpha)
        report.record("data_processing", max(after - before, 0.0), 1e-8)


def _check_alpha_monotone(report: SuiteReport, rng) -> None:
    regs = (Register("A", 2), Register("B", 2))
    rho = MultipartiteOperator(regs, random_density(4, rng, min_eig=1e-4))
    values = [h_alpha(rho, ["B"], a) for a in (0.5, 0.75, 1.0, 1.5, 2.0, 3.0)]
    worst = max(max(values[i + 1] - values[i], 0.0) for i in range(len(values) - 1))
    report.record("alpha_monotone", worst, 1e-9)
    sigma = _random_sigma(3, rng)
    rho2 = random_density(3, rng, min_eig=1e-3)
    dvals = [d_alpha(rho2, sigma, a) for a in (0.5, 0.9, 1.1, 2.0, 3.0)]
    worst = max(max(dvals[i] - dvals[i + 1], 0.0) for i in range(len(dvals) - 1))
    report.record("d_alpha_monotone", worst, 1e-9)


def suite_lemmas(seed: int = 0, trials: int = 50) -> SuiteReport:
    rng = rng_from(seed)
    report = SuiteReport("lemmas", seed, trials)
    for _ in range(trials):
        _check_divergence_split(report, rng)
        _check_classical_mixture_rule(report, rng)
        _check_purification_supremum(report, rng)
        _check_duality(report, rng)
        _check_sandwich_vn(report, rng)
        _check_smooth_from_renyi(report, rng)
        _check_append_statistics(report, rng)
        _check_mixture_conditioning(report, rng)
        _check_schatten_dual(report, rng)
        _check_petz_expansion_bound(report, rng)
        _check_data_processing(report, rng)
        _check_alpha_monotone(report, rng)
    return report


# ---------------------------------------------------------------------------
# accumulation soundness
# ---------------------------------------------------------------------------

def suite_eat_soundness(seed: int = 0, trials: int = 200) -> SuiteReport:
    from .sampling import bell_state

    rng = rng_from(seed)
    report = SuiteReport("eat_soundness", seed, trials)
    for t in range(trials):
        kind = t % 5
        epsilon = float(rng.uniform(0.01, 0.3))
        if kind in (0, 1, 2):
            n = int(rng.integers(1, 4))
            e_dim = 1 if n == 3 else int(rng.choice([1, 2]))
            spec = random_markov_process(rng, n, r_dim=2, e_dim=e_dim)
            values = np.sort(rng.uniform(-1.5, -1.0, size=2))
            f = TradeoffSpec(("0", "1"), "min", {"0": values[1], "1": values[0]})
            rep = soundness_experiment(spec, f, epsilon)
        elif kind == 3:
            n = int(rng.integers(1, 4))
            nu_regs = (Register("A", 2), Register("B", 2))
            nu = MultipartiteOperator(nu_regs, random_density(4, rng, min_eig=1e-3))
            h = von_neumann_conditional(nu, ["B"])
            spec = iid_process(nu, n)
            rep = soundness_experiment(spec, TradeoffSpec.constant(h, ("0",)), epsilon)
        else:
            n = int(rng.integers(1, 3))
            mu = float(rng.uniform(0.2, 0.5))
            e = float(rng.uniform(0.1, 0.3))
            p_depol = float(rng.choice([0.0, 0.1, 0.25]))
            spec = e91_process(n, mu, p_depol)
            f, _, event = e91_min_tradeoff(mu, e)
            rep = soundness_experiment(spec, f, epsilon, event)
        report.record("markov_violation", rep.markov_worst, tolerances.markov)
        report.record("soundness_negative_slack", max(-rep.slack, 0.0), 1e-6)
    return report


def suite_counterexample(ns=(3, 4, 5, 6, 7, 8), epsilon: float = 0.01) -> SuiteReport:
    report = SuiteReport("counterexample", 0, len(ns))
    for n in ns:
        rep = markov_necessity_counterexample(n, epsilon)
        report.record(f"hmin_eps_n{n}", rep.hmin_eps, 1.2)
        report.record(f"per_step_sum_n{n}", rep.per_step_sum, math.inf)
        report.record("per_step_below_half", max(n / 2.0 - rep.per_step_sum, 0.0), 0.0)
        report.record("accumulation_sum_not_exceeding_hmin",
                      max(rep.hmin_eps - rep.per_step_sum, 0.0), 0.0)
    return report


ALL_SUITES = {
    "chain_rule": suite_chain_rule,
    "lemmas": suite_lemmas,
    "eat_soundness": suite_eat_soundness,
    "counterexample": lambda seed=0, trials=6: suite_counterexample(
        tuple(range(3, min(3 + max(trials, 0), 13)))
    ),
}
