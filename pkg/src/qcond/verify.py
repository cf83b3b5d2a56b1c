"""Randomized verification of every identity and inequality the library relies on.

Each trial draws fresh instances for several check groups. Every group gets
its own seed derived from ``(master_seed, trial, group)``, so any single
failure can be regenerated from the seed stored in the report.

Slack convention: for an inequality ``lhs <= rhs`` the slack is
``rhs - lhs``; for an identity it is minus the absolute residual. A check
fails when its slack drops below ``-tolerance``.
"""
import math
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import channels as ch
from .chain import build_two_step, dpi_check, holevo_bound_check
from .conditional import (
    born_overlap,
    conditional_probs,
    conditional_states,
    evolved_projector_family,
    family_mixture,
    pinch,
)
from .errors import NotDoublyStochastic, UnknownCheck
from .generalized import (
    concavity_probe,
    generalized_qcp,
    lieb_quantity,
    random_decomposition,
    random_psd,
    spectral_decomposition,
)
from .measures import Ensemble, holevo_chi, j_per_q, mutual_information, summarize
from .states import random_density, shannon_entropy, von_neumann_entropy
from .subsystems import entanglement_bound_check, reduced_entropies, subsystem_conditional


@dataclass(frozen=True)
class Check:
    name: str
    anchor: str
    tolerance: float
    group: str


CHECKS: Dict[str, Check] = {c.name: c for c in [
    Check("column_stochastic", "sum_r p(r|q) = 1", 1e-9, "core"),
    Check("total_probability", "law of total probability: p_r = sum_q p(r|q) p_q", 1e-9, "core"),
    Check("mutual_info_identity", "I(R:Q) = S(rho_R) - J(R|Q)", 1e-10, "core"),
    Check("j_nonnegative", "information positivity: J(R|Q) >= 0", 1e-12, "core"),
    Check("i_nonnegative", "information positivity: I(R:Q) >= 0", 1e-9, "core"),
    Check("i_le_initial_entropy", "mutual information bounded by initial entropy: I(R:Q) <= S(rho_Q)", 1e-8, "core"),
    Check("j_le_final_entropy", "conditioning reduces entropy: J(R|Q) <= S(rho_R)", 1e-8, "core"),
    Check("family_mixture", "sum_q p_q E{P_q} = rho_R", 1e-9, "core"),
    Check("pinched_family", "rho_{R|q} = sum_r P_r E{P_q} P_r", 1e-9, "core"),
    Check("pinching_entropy", "pinching is more random: S(E{P_q}) <= S(rho_{R|q})", 1e-9, "core"),
    Check("born_doubly_stochastic", "Born overlaps beta(r|r_q) are doubly stochastic", 1e-9, "core"),
    Check("born_decomposition", "p(r|q) = sum_{r_q} beta(r|r_q) p(r_q|q)", 1e-9, "core"),
    Check("unital_doubly_stochastic", "unital maps give doubly stochastic p(r|q)", 1e-9, "core"),
    Check("unital_entropy_growth", "unital maps increase entropy: S(rho_Q) <= S(rho_R)", 1e-8, "core"),
    Check("concavity_channel_route",
          "sum_q p_q S(E{P_q}) <= sum_q p_q S(rho_{R|q}) <= S(rho_R)", 1e-9, "core"),
    Check("generalized_reduction", "generalized table on spectral decompositions equals p(r|q)", 1e-10, "core"),
    Check("generalized_lambda", "Lambda_rho = sum_kappa P(rho|kappa) lambda_kappa", 1e-9, "core"),
    Check("generalized_range", "Kolmogorov: 0 <= P(rho|kappa) <= 1", 1e-12, "core"),
    Check("generalized_normalization", "Kolmogorov: sum_rho P(rho|kappa) = 1", 1e-9, "core"),
    Check("concavity_ensemble", "concavity of von Neumann entropy: sum_i p_i S(rho_i) <= S(rho)", 1e-9,
          "concavity"),
    Check("chain_property", "p(s|q) = sum_r p(s|r) p(r|q)", 1e-9, "chain"),
    Check("chain_total_probability", "p_s = sum_r p(s|r) p_r = sum_q p(s|q) p_q", 1e-9, "chain"),
    Check("data_processing", "data processing: I(S:Q) <= I(R:Q)", 1e-8, "chain"),
    Check("holevo_equality", "I(R:Q) = chi of {p_q, rho_{R|q}}", 1e-9, "chain"),
    Check("holevo_bound", "Holevo bound: I(S:Q) <= chi", 1e-8, "chain"),
    Check("subsystem_bound", "-S(B|A) <= J(A|AB)", 1e-8, "subsystem"),
    Check("subsystem_conditional_entropy", "S(Tr_B P_m) <= J(A|m)", 1e-9, "subsystem"),
    Check("subsystem_mixture", "sum_m p_m Tr_B P_m = rho_A", 1e-9, "subsystem"),
    Check("lieb_positivity", "Tr[A^p K B^(1-p) K^dagger] >= 0", 1e-10, "lieb"),
    Check("lieb_concavity", "joint concavity of Tr[A^p K B^(1-p) K^dagger]", 1e-8, "lieb"),
    Check("doubly_stochastic_lemma", "H(T p) >= H(p) for doubly stochastic T", 1e-10, "lemma"),
]}

GROUPS = ("core", "concavity", "chain", "subsystem", "lieb", "lemma")

CHANNEL_KINDS = ("random", "unital", "pinching", "unitary", "depolarizing",
                 "completely_depolarizing", "dephasing", "partial_trace")

DEFAULT_MIX = {"random": 3.0, "unital": 1.0, "pinching": 1.0, "unitary": 1.0,
               "depolarizing": 1.0, "dephasing": 0.5, "partial_trace": 1.0}


@dataclass(frozen=True)
class TrialConfig:
    master_seed: int = 0
    n_trials: int = 1000
    dims: Tuple[int, ...] = (2, 3, 4, 5, 6)
    channel_mix: Dict[str, float] = field(default_factory=lambda: dict(DEFAULT_MIX))
    env_dims: str = "random"
    groups: Tuple[str, ...] = GROUPS
    tolerances: Dict[str, float] = field(default_factory=dict)
    workers: int = 1

    def __post_init__(self):
        if self.n_trials < 1:
            raise ValueError("n_trials must be at least 1")
        if not self.dims:
            raise ValueError("dims must be nonempty")
        unknown = set(self.channel_mix) - set(CHANNEL_KINDS)
        if unknown:
            raise ValueError(f"unknown channel kinds {sorted(unknown)}")
        unknown = set(self.groups) - set(GROUPS)
        if unknown:
            raise ValueError(f"unknown check groups {sorted(unknown)}")
        if self.env_dims not in ("random", "minimal", "full"):
            raise ValueError("env_dims must be 'random', 'minimal' or 'full'")
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        object.__setattr__(self, "groups", tuple(self.groups))

    def tolerance(self, name: str) -> float:
        return self.tolerances.get(name, CHECKS[name].tolerance)

    def to_dict(self) -> dict:
        return {"master_seed": self.master_seed, "n_trials": self.n_trials, "dims": list(self.dims),
                "channel_mix": dict(self.channel_mix), "env_dims": self.env_dims,
                "groups": list(self.groups),
                "tolerances": {n: self.tolerance(n) for n in CHECKS}}


def derive_seed(master_seed: int, trial: int, salt: str) -> int:
    ss = np.random.SeedSequence([int(master_seed) & 0xFFFFFFFF, int(trial), zlib.crc32(salt.encode())])
    a, b = ss.generate_state(2)
    return (int(a) << 32) | int(b)


# ---------------------------------------------------------------- generators

def random_channel_of_kind(kind: str, d: int, rng, env_dims: str = "random") -> ch.QuantumChannel:
    """Channel with output dimension ``d`` (input ``2d`` for ``partial_trace``)."""
    if kind == "random":
        env = {"random": int(rng.integers(1, d + 1)), "minimal": 1, "full": d}[env_dims]
        return ch.random_channel(d, d, env, rng)
    if kind == "unital":
        return ch.random_unital_channel(d, int(rng.integers(1, 5)), rng)
    if kind == "pinching":
        return ch.random_pinching(d, rng)
    if kind == "unitary":
        return ch.unitary_channel(ch.random_unitary(d, rng))
    if kind == "depolarizing":
        return ch.depolarizing(d, float(rng.uniform()))
    if kind == "completely_depolarizing":
        return ch.depolarizing(d, 1.0)
    if kind == "dephasing":
        return ch.dephasing(d, float(rng.uniform()))
    if kind == "partial_trace":
        return ch.partial_trace_channel(d, 2, "B")
    raise ValueError(f"unknown channel kind {kind!r}")


def _pick_kind(cfg: TrialConfig, rng) -> str:
    kinds = sorted(cfg.channel_mix)
    w = np.array([cfg.channel_mix[k] for k in kinds], dtype=float)
    return kinds[int(rng.choice(len(kinds), p=w / w.sum()))]


def _random_state(d: int, rng):
    return random_density(d, int(rng.integers(1, d + 1)), rng)


def core_instance(seed: int, cfg: TrialConfig):
    rng = np.random.default_rng(seed)
    d = int(rng.choice(cfg.dims))
    kind = _pick_kind(cfg, rng)
    channel = random_channel_of_kind(kind, d, rng, cfg.env_dims)
    rho = _random_state(channel.dim_in, rng)
    return rho, channel, kind


def birkhoff_matrix(n: int, k: int, rng) -> np.ndarray:
    """Convex combination of ``k`` random ``n x n`` permutation matrices."""
    w = rng.dirichlet(np.ones(k))
    t = np.zeros((n, n))
    for wi in w:
        t[np.arange(n), rng.permutation(n)] += wi
    return t


# ---------------------------------------------------------------- standalone checks

def check_doubly_stochastic_entropy(p, T, tol: float = 1e-9, base=2) -> Tuple[float, float, float]:
    """Return ``(H(p), H(T p), H(T p) - H(p))`` for a doubly stochastic ``T``.

    :raises NotDoublyStochastic: if a row or column sum is off by more than ``tol``
        or an entry is negative
    """
    T = np.asarray(T, dtype=float)
    p = np.asarray(p, dtype=float)
    if (T.ndim != 2 or T.shape[0] != T.shape[1] or np.any(T < -tol)
            or np.max(np.abs(T.sum(axis=0) - 1)) > tol or np.max(np.abs(T.sum(axis=1) - 1)) > tol):
        raise NotDoublyStochastic("rows and columns must each sum to 1")
    h_in = shannon_entropy(p, base)
    h_out = shannon_entropy(T @ p, base)
    return h_in, h_out, h_out - h_in


def check_concavity(ensemble: Ensemble, base=2) -> float:
    """``S(sum p_i rho_i) - sum p_i S(rho_i)``; nonnegative by concavity."""
    return holevo_chi(ensemble, base)


# ---------------------------------------------------------------- group evaluators
# Each returns {check_name: slack or None} plus an optional trace of intermediates.

def _eval_core(seed: int, cfg: TrialConfig, trace: Optional[dict] = None):
    rho, channel, kind = core_instance(seed, cfg)
    res = conditional_probs(channel, rho)
    table = res.table
    info = summarize(table)
    family = evolved_projector_family(channel, rho)
    cond = conditional_states(table)
    basis_R = table.basis_to
    s_family = [von_neumann_entropy(f) for f in family]
    s_cond = j_per_q(table)
    pinched_err = max(float(np.max(np.abs(pinch(f.matrix, basis_R) - c.matrix))) for f, c in zip(family, cond))
    born = born_overlap(basis_R, family)
    unital = ch.is_unital(channel)

    rng = np.random.default_rng([seed, 1])
    m = int(rng.integers(max(1, int(np.sum(table.p_from > 1e-12))), 2 * channel.dim_in + 1))
    dec = random_decomposition(rho, m, rng)
    gen_red = generalized_qcp(channel, spectral_decomposition(rho), basis_R)
    gen = generalized_qcp(channel, dec, basis_R)

    mean_family = float(np.dot(table.p_from, s_family))
    out = {
        "column_stochastic": -table.column_residual(),
        "total_probability": -table.total_probability_residual(),
        "mutual_info_identity": -info.identity_residual,
        "j_nonnegative": info.J,
        "i_nonnegative": info.I,
        "i_le_initial_entropy": info.S_initial - info.I,
        "j_le_final_entropy": info.S_final - info.J,
        "family_mixture": -float(np.max(np.abs(family_mixture(table.p_from, family) - res.rho_to.matrix))),
        "pinched_family": -pinched_err,
        "pinching_entropy": min(c - f for c, f in zip(s_cond, s_family)),
        "born_doubly_stochastic": -born.doubly_stochastic_residual(),
        "born_decomposition": -float(np.max(np.abs(born.decomposition() - table.probs))),
        "unital_doubly_stochastic": -table.row_residual() if unital else None,
        "unital_entropy_growth": info.S_final - info.S_initial if unital else None,
        "concavity_channel_route": min(info.J - mean_family, info.S_final - info.J),
        "generalized_reduction": -float(np.max(np.abs(gen_red.entries - table.probs))),
        "generalized_lambda": -gen.lambda_relation_residual(),
        "generalized_range": min(float(gen.entries.min()), 1.0 - float(gen.entries.max())),
        "generalized_normalization": -gen.column_residual(),
    }
    observed = {"J": info.J, "I": info.I}
    if trace is not None:
        from . import io
        trace.update({
            "kind": kind,
            "state": io.encode_density(rho),
            "channel": io.encode_channel(channel),
            "table": io.encode_table(table),
            "measures": info.to_dict(),
            "family_entropies": s_family,
            "unital": unital,
        })
    return out, observed


def _eval_concavity(seed: int, cfg: TrialConfig, trace: Optional[dict] = None):
    rng = np.random.default_rng(seed)
    d = int(rng.choice(cfg.dims))
    count = int(rng.integers(1, 2 * d * d + 1))
    states = [_random_state(d, rng) for _ in range(count)]
    ens = Ensemble(rng.dirichlet(np.ones(count)), states)
    gap = check_concavity(ens)
    if trace is not None:
        from . import io
        trace.update({"weights": ens.weights.tolist(), "states": [io.encode_density(s) for s in states],
                      "gap": gap})
    return {"concavity_ensemble": gap}, {}


def _eval_chain(seed: int, cfg: TrialConfig, trace: Optional[dict] = None):
    rng = np.random.default_rng(seed)
    d = int(rng.choice(cfg.dims))
    stage1 = random_channel_of_kind(_pick_kind(cfg, rng), d, rng, cfg.env_dims)
    kind2 = _pick_kind(cfg, rng)
    if kind2 == "partial_trace":
        kind2 = "random"
    stage2 = random_channel_of_kind(kind2, d, rng, cfg.env_dims)
    rho = _random_state(stage1.dim_in, rng)
    proc = build_two_step(rho, stage1, stage2, tol=math.inf)
    i_rq, i_sq, dpi_slack = dpi_check(proc)
    _, chi, eq_res = holevo_bound_check(proc)
    out = {
        "chain_property": -proc.chain_residual,
        "chain_total_probability": -max(proc.ps_residuals),
        "data_processing": dpi_slack,
        "holevo_equality": -eq_res,
        "holevo_bound": chi - i_sq,
    }
    if trace is not None:
        from . import io
        trace.update({"state": io.encode_density(rho), "stage1": io.encode_channel(stage1),
                      "stage2_raw": io.encode_channel(stage2),
                      "table_RQ": io.encode_table(proc.table_RQ), "table_SR": io.encode_table(proc.table_SR),
                      "table_SQ": io.encode_table(proc.table_SQ),
                      "I_RQ": i_rq, "I_SQ": i_sq, "chi": chi,
                      "raw_chain_residual": proc.raw_chain_residual})
    return out, {"raw_chain_residual": proc.raw_chain_residual}


SUBSYSTEM_DIMS = ((2, 2), (2, 3), (3, 2))


def _eval_subsystem(seed: int, cfg: TrialConfig, trace: Optional[dict] = None):
    rng = np.random.default_rng(seed)
    dA, dB = SUBSYSTEM_DIMS[int(rng.integers(len(SUBSYSTEM_DIMS)))]
    rho = _random_state(dA * dB, rng)
    pc = subsystem_conditional(rho, dA, dB, "A")
    lhs, rhs, slack = entanglement_bound_check(pc)
    per_m = j_per_q(pc.table)
    s_red = reduced_entropies(pc)
    out = {
        "subsystem_bound": slack,
        "subsystem_conditional_entropy": min(j - s for j, s in zip(per_m, s_red)),
        "subsystem_mixture": -pc.mixture_residual(),
    }
    if trace is not None:
        from . import io
        trace.update({"state": io.encode_density(rho), "dims": [dA, dB], "minus_S_B_given_A": lhs,
                      "J_A_given_AB": rhs, "table": io.encode_table(pc.table)})
    return out, {"S_B_given_A": -lhs}


LIEB_GRID = 5


def _eval_lieb(seed: int, cfg: TrialConfig, trace: Optional[dict] = None):
    rng = np.random.default_rng(seed)
    d = int(rng.choice(cfg.dims))
    mats = [random_psd(d, rng, int(rng.integers(1, d + 1))) for _ in range(4)]
    mats = [m / np.trace(m).real for m in mats]
    k = complex_matrix(rng, d)
    p = float(rng.uniform())
    value = lieb_quantity(mats[0], mats[2], k, p)
    probe = concavity_probe(mats[0], mats[1], mats[2], mats[3], k, p, LIEB_GRID)
    if trace is not None:
        trace.update({"p": p, "value": value, "slacks": probe.slacks.tolist()})
    return {"lieb_positivity": value, "lieb_concavity": probe.worst_slack}, {}


def complex_matrix(rng, d: int) -> np.ndarray:
    return (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / math.sqrt(2 * d)


def _eval_lemma(seed: int, cfg: TrialConfig, trace: Optional[dict] = None):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 9))
    p = rng.dirichlet(np.ones(n) * rng.uniform(0.2, 2.0))
    T = birkhoff_matrix(n, int(rng.integers(1, n + 2)), rng)
    h_in, h_out, slack = check_doubly_stochastic_entropy(p, T)
    if trace is not None:
        trace.update({"p": p.tolist(), "T": T.tolist(), "H_in": h_in, "H_out": h_out})
    return {"doubly_stochastic_lemma": slack}, {}


EVALUATORS: Dict[str, Callable] = {
    "core": _eval_core,
    "concavity": _eval_concavity,
    "chain": _eval_chain,
    "subsystem": _eval_subsystem,
    "lieb": _eval_lieb,
    "lemma": _eval_lemma,
}


# ---------------------------------------------------------------- aggregation

@dataclass
class CheckResult:
    name: str
    anchor: str
    tolerance: float
    trials: int = 0
    failures: int = 0
    worst_slack: Optional[float] = None
    worst_seed: Optional[int] = None
    worst_trial: Optional[int] = None

    @property
    def passed(self) -> bool:
        return self.failures == 0

    def add(self, slack: float, seed: int, trial: int) -> None:
        self.trials += 1
        if not slack >= -self.tolerance:  # NaN counts as a failure
            self.failures += 1
        if (self.worst_slack is None or slack < self.worst_slack or math.isnan(slack)
                or (slack == self.worst_slack and trial < self.worst_trial)):
            self.worst_slack, self.worst_seed, self.worst_trial = float(slack), seed, trial

    def merge(self, other: "CheckResult") -> None:
        self.trials += other.trials
        self.failures += other.failures
        if other.worst_slack is not None and (
                self.worst_slack is None or other.worst_slack < self.worst_slack
                or (other.worst_slack == self.worst_slack and other.worst_trial < self.worst_trial)):
            self.worst_slack, self.worst_seed, self.worst_trial = (
                other.worst_slack, other.worst_seed, other.worst_trial)

    def to_dict(self) -> dict:
        return {"name": self.name, "anchor": self.anchor, "tolerance": self.tolerance,
                "trials": self.trials, "failures": self.failures, "worst_slack": self.worst_slack,
                "worst_seed": self.worst_seed, "worst_trial": self.worst_trial, "passed": self.passed}


@dataclass
class VerificationReport:
    config: TrialConfig
    checks: Dict[str, CheckResult]
    observed: Dict[str, List[float]] = field(default_factory=dict)
    errors: List[dict] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.errors and all(c.passed for c in self.checks.values())

    def observe(self, key: str, value: float) -> None:
        lo, hi = self.observed.get(key, [math.inf, -math.inf])
        self.observed[key] = [min(lo, value), max(hi, value)]

    def merge(self, other: "VerificationReport") -> None:
        for name, c in other.checks.items():
            self.checks[name].merge(c)
        for key, (lo, hi) in other.observed.items():
            self.observe(key, lo)
            self.observe(key, hi)
        self.errors = sorted(self.errors + other.errors, key=lambda e: (e["trial"], e["group"]))

    def to_dict(self) -> dict:
        return {"passed": self.passed, "config": self.config.to_dict(),
                "checks": [c.to_dict() for c in self.checks.values()],
                "observed": {k: list(v) for k, v in sorted(self.observed.items())},
                "errors": list(self.errors)}


def _empty_report(cfg: TrialConfig) -> VerificationReport:
    checks = {n: CheckResult(n, c.anchor, cfg.tolerance(n)) for n, c in CHECKS.items() if c.group in cfg.groups}
    return VerificationReport(config=cfg, checks=checks)


def _run_trials(cfg: TrialConfig, trials: Sequence[int]) -> VerificationReport:
    report = _empty_report(cfg)
    for t in trials:
        for group in cfg.groups:
            seed = derive_seed(cfg.master_seed, t, group)
            try:
                slacks, observed = EVALUATORS[group](seed, cfg)
            except Exception as exc:  # a crashing instance is a failure with a reproducer
                report.errors.append({"trial": t, "group": group, "seed": seed,
                                      "error": f"{type(exc).__name__}: {exc}"})
                continue
            for name, slack in slacks.items():
                if slack is not None:
                    report.checks[name].add(float(slack), seed, t)
            for key, value in observed.items():
                report.observe(key, float(value))
    return report


def run_suite(cfg: TrialConfig = TrialConfig()) -> VerificationReport:
    """Run ``cfg.n_trials`` randomized trials over all enabled check groups.

    Failures become report entries rather than exceptions. With
    ``cfg.workers > 1`` trials are spread over processes; aggregation is a
    min/sum merge, so the report does not depend on the split.
    """
    if cfg.workers <= 1:
        return _run_trials(cfg, range(cfg.n_trials))
    chunks = [list(range(w, cfg.n_trials, cfg.workers)) for w in range(cfg.workers)]
    with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
        parts = list(pool.map(_run_trials, [cfg] * len(chunks), chunks))
    report = _empty_report(cfg)
    for part in parts:
        report.merge(part)
    return report


def reproduce(worst_seed: int, check_name: str, cfg: TrialConfig = TrialConfig(),
              expected_slack: Optional[float] = None) -> dict:
    """Regenerate one instance from its seed and return every intermediate object.

    If ``expected_slack`` is given the trace records whether the recomputed
    slack matches it bit for bit.
    """
    if check_name not in CHECKS:
        raise UnknownCheck(f"unknown check {check_name!r}; known: {sorted(CHECKS)}")
    check = CHECKS[check_name]
    trace: dict = {"check": check_name, "anchor": check.anchor, "group": check.group, "seed": int(worst_seed)}
    slacks, _ = EVALUATORS[check.group](int(worst_seed), cfg, trace)
    slack = slacks.get(check_name)
    trace["slack"] = None if slack is None else float(slack)
    trace["tolerance"] = cfg.tolerance(check_name)
    if expected_slack is not None:
        trace["expected_slack"] = float(expected_slack)
        trace["matches"] = slack is not None and float(slack) == float(expected_slack)
    return trace


def with_groups(cfg: TrialConfig, *groups: str) -> TrialConfig:
    return replace(cfg, groups=tuple(groups))
