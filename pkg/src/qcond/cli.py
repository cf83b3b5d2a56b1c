"""``qcond`` command-line interface.

Machine-readable output goes to stdout, diagnostics to stderr. Exit codes:
0 on success, 1 when a check fails, 2 on usage or input errors.
"""
import argparse
import json
import math
import os
import sys
from typing import List, Optional

import numpy as np

from . import channels as ch
from . import io
from .chain import build_two_step, dpi_check, empirical_table, holevo_bound_check, sample_trajectories, total_variation
from .conditional import conditional_probs, joint_asymmetry, paired_table
from .errors import QcondError, UnknownDemo
from .generalized import generalized_qcp, random_decomposition
from .linalg import to_json
from .measures import Ensemble, holevo_chi, summarize
from .states import bell_state, density_from_matrix, pure_state, random_density, random_pure_state
from .subsystems import entanglement_bound_check, j_given_parent, subsystem_conditional
from .verify import CHECKS, TrialConfig, reproduce, run_suite

DEFAULT_SEED = 0


class UsageError(Exception):
    pass


def _seed(value: Optional[int]) -> int:
    if value is not None:
        return value
    env = os.environ.get("QCOND_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"QCOND_SEED={env!r} is not an integer")
    return DEFAULT_SEED


def _base(args) -> object:
    return "e" if args.base == "e" else 2


def _read_doc(path: str) -> dict:
    try:
        text = sys.stdin.read() if path == "-" else open(path, encoding="utf-8").read()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}")
    return io.loads(text)


def _dims(text: str) -> List[int]:
    try:
        dims = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"dims must be comma-separated integers, got {text!r}")
    if not dims or any(d < 1 for d in dims):
        raise UsageError(f"dims must be positive, got {text!r}")
    return dims


def _emit(doc: dict, args) -> None:
    sys.stdout.write(json.dumps(doc, indent=2 if getattr(args, "pretty", False) else None, allow_nan=False))
    sys.stdout.write("\n")


def _config(args, **extra) -> dict:
    return {"seed": getattr(args, "resolved_seed", None), "base": _base(args), **extra}


# ---------------------------------------------------------------- subcommands

def cmd_state(args) -> int:
    seed = args.resolved_seed = _seed(args.seed)
    rank = args.rank if args.rank is not None else args.dim
    if not 1 <= rank <= args.dim:
        raise UsageError(f"--rank must lie in [1, {args.dim}]")
    rho = random_density(args.dim, rank, seed)
    _emit(io.encode_density(rho), args)
    return 0


def cmd_channel(args) -> int:
    seed = args.resolved_seed = _seed(args.seed)
    kind, d = args.kind, args.dim
    if kind == "random":
        chan = ch.random_channel(d, args.dim_out or d, args.env, seed)
    elif kind == "depolarizing":
        chan = ch.depolarizing(d, args.lam)
    elif kind == "dephasing":
        chan = ch.dephasing(d, args.lam)
    elif kind == "unitary":
        chan = ch.unitary_channel(ch.random_unitary(d, seed))
    elif kind == "unital":
        chan = ch.random_unital_channel(d, args.n_unitaries, seed)
    elif kind == "pinching":
        chan = ch.pinching_in_basis(np.eye(d)) if args.computational else ch.random_pinching(d, seed)
    elif kind == "partial-trace":
        dA, dB = _dims(args.dims)
        chan = ch.partial_trace_channel(dA, dB, args.which)
    elif kind == "identity":
        chan = ch.identity_channel(d)
    else:  # amplitude-damping
        chan = ch.amplitude_damping(args.lam)
    _emit(io.encode_channel(chan), args)
    return 0


def cmd_condprob(args) -> int:
    chan = io.decode_channel(_read_doc(args.channel))
    rho = io.decode_density(_read_doc(args.state))
    res = conditional_probs(chan, rho)
    if args.format == "csv":
        sys.stdout.write(io.table_to_csv(res.table))
        return 0
    doc = io.encode_table(res.table)
    doc["basis_dependent"] = res.table.basis_dependent
    doc["residuals"] = {"column_stochastic": res.table.column_residual(),
                        "total_probability": res.table.total_probability_residual()}
    if res.table.n_from == res.table.n_to:
        doc["joint_asymmetry"] = joint_asymmetry(res.table)
    doc["config"] = _config(args)
    _emit(doc, args)
    return 0


def cmd_measures(args) -> int:
    chan = io.decode_channel(_read_doc(args.channel))
    rho = io.decode_density(_read_doc(args.state))
    info = summarize(conditional_probs(chan, rho).table, _base(args))
    doc = {**info.to_dict(), "identity_residual": info.identity_residual, "config": _config(args)}
    _emit(doc, args)
    return 0


def cmd_chain(args) -> int:
    seed = args.resolved_seed = _seed(args.seed)
    rho = io.decode_density(_read_doc(args.state))
    stage1 = io.decode_channel(_read_doc(args.stage1))
    stage2 = io.decode_channel(_read_doc(args.stage2))
    base = _base(args)
    proc = build_two_step(rho, stage1, stage2, tol=math.inf)
    i_rq, i_sq, dpi_slack = dpi_check(proc, base)
    _, chi, holevo_res = holevo_bound_check(proc, base)
    tol = 1e-9
    passed = (proc.chain_residual <= tol and max(proc.ps_residuals) <= tol and dpi_slack >= -1e-8
              and holevo_res <= tol and i_sq <= chi + 1e-8)
    if args.format == "csv":
        sys.stdout.write(io.table_to_csv(proc.table_RQ, "r", "q"))
        sys.stdout.write(io.table_to_csv(proc.table_SR, "s", "r"))
        sys.stdout.write(io.table_to_csv(proc.table_SQ, "s", "q"))
        return 0 if passed else 1
    doc = {
        "tables": {"RQ": io.encode_table(proc.table_RQ), "SR": io.encode_table(proc.table_SR),
                   "SQ": io.encode_table(proc.table_SQ)},
        "I_RQ": i_rq, "I_SQ": i_sq, "chi": chi,
        "residuals": {"chain": proc.chain_residual, "chain_raw": proc.raw_chain_residual,
                      "p_s_via_r": proc.ps_residuals[0], "p_s_via_q": proc.ps_residuals[1],
                      "dpi_slack": dpi_slack, "holevo_equality": holevo_res},
        "passed": passed,
        "config": _config(args, samples=args.samples, tolerance=tol),
    }
    if args.samples:
        batch = sample_trajectories(proc, args.samples, seed)
        est_rq = empirical_table(batch, stage=1)
        est_sr = empirical_table(batch, stage=2)
        doc["empirical"] = {
            "counts": batch.counts.tolist(),
            "p_rq": est_rq.table.probs.tolist(),
            "p_sr": est_sr.table.probs.tolist(),
            "tv_rq": total_variation(est_rq.table.probs, proc.table_RQ.probs, proc.table_RQ.p_from),
            "binomial_violations": est_rq.binomial_violations(proc.table_RQ.probs)
            + est_sr.binomial_violations(proc.table_SR.probs),
        }
    _emit(doc, args)
    return 0 if passed else 1


def cmd_subsys(args) -> int:
    rho = io.decode_density(_read_doc(args.state))
    dA, dB = _dims(args.dims)
    base = _base(args)
    pc = subsystem_conditional(rho, dA, dB, args.which)
    per_m, j_total = j_given_parent(pc, base)
    lhs, rhs, slack = entanglement_bound_check(pc, base)
    doc = {"p_am": pc.table.probs.tolist(), "p_m": pc.table.p_from.tolist(), "p_a": pc.table.p_to.tolist(),
           "J_per_m": per_m, "J_A_given_AB": j_total, "S_B_given_A": -lhs, "bound_slack": slack,
           "passed": slack >= -1e-8, "config": _config(args, dims=[dA, dB], which=args.which)}
    _emit(doc, args)
    return 0 if slack >= -1e-8 else 1


def cmd_generalized(args) -> int:
    seed = args.resolved_seed = _seed(args.seed)
    chan = io.decode_channel(_read_doc(args.channel))
    rho = io.decode_density(_read_doc(args.state))
    res = conditional_probs(chan, rho)
    dec = random_decomposition(rho, args.members, seed)
    table = generalized_qcp(chan, dec, res.table.basis_to)
    doc = {"entries": table.entries.tolist(), "lambda_in": table.lambda_in.tolist(),
           "Lambda_out": table.Lambda_out.tolist(), "input_vectors": to_json(dec.vectors),
           "output_vectors": to_json(res.table.basis_to),
           "lambda_relation_residual": table.lambda_relation_residual(),
           "column_residual": table.column_residual(),
           "input_max_overlap": dec.max_overlap(),
           "config": _config(args, members=args.members)}
    _emit(doc, args)
    return 0 if table.lambda_relation_residual() <= 1e-9 else 1


def cmd_verify(args) -> int:
    seed = args.resolved_seed = _seed(args.seed)
    cfg = TrialConfig(master_seed=seed, n_trials=args.trials, dims=tuple(_dims(args.dims)), workers=args.workers)
    report = run_suite(cfg)
    doc = io.encode_report(report)
    if args.format == "csv":
        sys.stdout.write(io.report_to_csv(doc))
    else:
        _emit(doc, args)
    for c in report.checks.values():
        status = "ok  " if c.passed else "FAIL"
        print(f"{status} {c.name:32s} trials={c.trials:5d} worst_slack={c.worst_slack!r}", file=sys.stderr)
    for e in report.errors:
        print(f"ERROR trial={e['trial']} group={e['group']}: {e['error']}", file=sys.stderr)
    return 0 if report.passed else 1


def cmd_reproduce(args) -> int:
    cfg = TrialConfig(dims=tuple(_dims(args.dims)))
    trace = reproduce(args.worst_seed, args.check, cfg, args.expected_slack)
    _emit(io.encode_trace(trace), args)
    return 0 if trace.get("matches", True) else 1


# ---------------------------------------------------------------- demos

def _relation(name: str, value, predicted, tol: float) -> dict:
    residual = float(abs(np.asarray(value, dtype=float) - np.asarray(predicted, dtype=float)).max())
    return {"relation": name, "value": value, "predicted": predicted, "residual": residual,
            "tolerance": tol, "passed": residual <= tol}


def _inequality(name: str, lhs: float, rhs: float, tol: float) -> dict:
    return {"relation": name, "lhs": lhs, "rhs": rhs, "slack": rhs - lhs, "tolerance": tol,
            "passed": rhs - lhs >= -tol}


def demo_pure_state(base):
    rho = random_pure_state(3, 7)
    chan = ch.random_channel(3, 3, 2, 11)
    t = conditional_probs(chan, rho).table
    info = summarize(t, base)
    q = int(np.argmax(t.p_from))
    return {"measures": info.to_dict(), "checks": [
        _relation("I = 0", info.I, 0.0, 1e-9),
        _relation("J = S(rho_R)", info.J, info.S_final, 1e-9),
        _relation("p(r|psi) = p_r", t.probs[:, q].tolist(), t.p_to.tolist(), 1e-9),
    ]}


def demo_unitary(base):
    rho = density_from_matrix(np.diag([0.5, 0.3, 0.2]))
    chan = ch.unitary_channel(ch.random_unitary(3, 5))
    t = conditional_probs(chan, rho).table
    info = summarize(t, base)
    return {"measures": info.to_dict(), "checks": [
        _relation("paired p(r|q) = delta", paired_table(t).tolist(), np.eye(3).tolist(), 1e-9),
        _relation("J = 0", info.J, 0.0, 1e-9),
        _relation("I = S(rho_Q)", info.I, info.S_initial, 1e-9),
    ]}


def demo_depolarizing(base):
    rho = density_from_matrix(np.diag([0.75, 0.25]))
    t = conditional_probs(ch.depolarizing(2, 0.5), rho).table
    info = summarize(t, base)
    scale = 1.0 if base == 2 else math.log(2)
    return {"measures": info.to_dict(), "table": t.probs.tolist(), "checks": [
        _relation("p(r|q)", t.probs.tolist(), [[0.75, 0.25], [0.25, 0.75]], 1e-12),
        _relation("J", info.J, 0.8112781244591328 * scale, 1e-6),
        _relation("I", info.I, 0.14315587846583195 * scale, 1e-6),
        _relation("I = S(rho_R) - J", info.I, info.S_final - info.J, 1e-10),
    ]}


def demo_measurement(base):
    rho = random_density(3, 3, 3)
    meas = ch.pinching_in_basis(np.eye(3))
    t = conditional_probs(meas, rho).table
    info = summarize(t, base)
    return {"measures": info.to_dict(), "checks": [
        _inequality("S(rho_Q) <= S(rho_R)", info.S_initial, info.S_final, 1e-8),
        _relation("sum_q p(r|q) = 1", t.probs.sum(axis=1).tolist(), [1.0] * 3, 1e-9),
    ]}


def demo_bell_subsystem(base):
    pc = subsystem_conditional(bell_state(), 2, 2, "A")
    per_m, j_total = j_given_parent(pc, base)
    lhs, rhs, slack = entanglement_bound_check(pc, base)
    one = 1.0 if base == 2 else math.log(2)
    return {"p_am": pc.table.probs.tolist(), "J_per_m": per_m, "checks": [
        _relation("-S(B|A) = 1 bit", lhs, one, 1e-9),
        _relation("J(A|AB) = 1 bit", rhs, one, 1e-9),
        _inequality("-S(B|A) <= J(A|AB)", lhs, rhs, 1e-9),
    ]}


def demo_holevo(base):
    plus = np.array([1, 1]) / math.sqrt(2)
    ens = Ensemble.of([0.5, 0.5], [pure_state([1, 0]), pure_state(plus)])
    chi = holevo_chi(ens, base)
    scale = 1.0 if base == 2 else math.log(2)
    rho = random_density(2, 2, 1)
    proc = build_two_step(rho, ch.random_channel(2, 2, 2, 2), ch.random_channel(2, 2, 2, 3))
    i_rq, i_sq, _ = dpi_check(proc, base)
    _, chi_proc, res = holevo_bound_check(proc, base)
    return {"chi": chi, "process": {"I_RQ": i_rq, "I_SQ": i_sq, "chi": chi_proc}, "checks": [
        _relation("chi({|0>,|+>})", chi, 0.6008760624660786 * scale, 1e-6),
        _relation("I(R:Q) = chi", i_rq, chi_proc, 1e-9),
        _inequality("I(S:Q) <= chi", i_sq, chi_proc, 1e-8),
    ]}


DEMOS = {
    "pure-state": demo_pure_state,
    "unitary": demo_unitary,
    "depolarizing": demo_depolarizing,
    "measurement": demo_measurement,
    "bell-subsystem": demo_bell_subsystem,
    "holevo": demo_holevo,
}


def demo(name: str, base=2) -> dict:
    if name not in DEMOS:
        raise UnknownDemo(f"unknown demo {name!r}; choose from {', '.join(DEMOS)}")
    doc = DEMOS[name](base)
    doc["demo"] = name
    doc["passed"] = all(c["passed"] for c in doc["checks"])
    return doc


def cmd_demo(args) -> int:
    doc = demo(args.name, _base(args))
    doc["config"] = _config(args)
    _emit(doc, args)
    return 0 if doc["passed"] else 1


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--base", choices=["2", "e"], default="2", help="logarithm base (default 2, bits)")
    common.add_argument("--pretty", action="store_true", help="indent JSON output")

    p = argparse.ArgumentParser(prog="qcond", description="Quantum conditional probabilities and entropies.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("state", parents=[common], help="generate states")
    s_sub = s.add_subparsers(dest="state_kind", required=True)
    sr = s_sub.add_parser("random", parents=[common], help="Hilbert-Schmidt random state")
    sr.add_argument("--dim", type=int, required=True)
    sr.add_argument("--rank", type=int)
    sr.add_argument("--seed", type=int)
    sr.set_defaults(func=cmd_state)

    c = sub.add_parser("channel", parents=[common], help="generate channels")
    c.add_argument("kind", choices=["random", "depolarizing", "dephasing", "unitary", "unital", "pinching",
                                    "partial-trace", "identity", "amplitude-damping"])
    c.add_argument("--dim", type=int, default=2)
    c.add_argument("--dim-out", type=int)
    c.add_argument("--env", type=int, default=2, help="environment dimension for random channels")
    c.add_argument("--lambda", dest="lam", type=float, default=0.5)
    c.add_argument("--n-unitaries", type=int, default=3)
    c.add_argument("--computational", action="store_true", help="pinch in the computational basis")
    c.add_argument("--dims", default="2,2", help="dA,dB for partial-trace")
    c.add_argument("--which", choices=["A", "B"], default="B", help="subsystem traced out")
    c.add_argument("--seed", type=int)
    c.set_defaults(func=cmd_channel)

    for name, func, helptext in [("condprob", cmd_condprob, "conditional probability table"),
                                 ("measures", cmd_measures, "J, I and entropies")]:
        q = sub.add_parser(name, parents=[common], help=helptext)
        q.add_argument("--channel", required=True)
        q.add_argument("--state", required=True)
        if name == "condprob":
            q.add_argument("--format", choices=["json", "csv"], default="json")
        q.set_defaults(func=func)

    k = sub.add_parser("chain", parents=[common], help="two-step process analysis")
    k.add_argument("--state", required=True)
    k.add_argument("--stage1", required=True)
    k.add_argument("--stage2", required=True)
    k.add_argument("--seed", type=int)
    k.add_argument("--samples", type=int, default=0)
    k.add_argument("--format", choices=["json", "csv"], default="json")
    k.set_defaults(func=cmd_chain)

    b = sub.add_parser("subsys", parents=[common], help="subsystem conditional probabilities")
    b.add_argument("--state", required=True)
    b.add_argument("--dims", required=True)
    b.add_argument("--which", choices=["A", "B"], default="A", help="subsystem kept")
    b.set_defaults(func=cmd_subsys)

    g = sub.add_parser("generalized", parents=[common], help="generalized conditional table")
    g.add_argument("--channel", required=True)
    g.add_argument("--state", required=True)
    g.add_argument("--members", type=int, required=True)
    g.add_argument("--seed", type=int)
    g.set_defaults(func=cmd_generalized)

    v = sub.add_parser("verify", parents=[common], help="randomized verification suite")
    v.add_argument("--trials", type=int, default=1000)
    v.add_argument("--dims", default="2,3,4,5,6")
    v.add_argument("--seed", type=int)
    v.add_argument("--workers", type=int, default=1)
    v.add_argument("--format", choices=["json", "csv"], default="json")
    v.set_defaults(func=cmd_verify)

    r = sub.add_parser("reproduce", parents=[common], help="replay one verification instance")
    r.add_argument("--seed", dest="worst_seed", type=int, required=True)
    r.add_argument("--check", required=True, choices=sorted(CHECKS))
    r.add_argument("--dims", default="2,3,4,5,6")
    r.add_argument("--expected-slack", type=float, help="pass as --expected-slack=VALUE when negative")
    r.set_defaults(func=cmd_reproduce)

    d = sub.add_parser("demo", parents=[common], help="worked scenarios")
    d.add_argument("name", choices=sorted(DEMOS))
    d.set_defaults(func=cmd_demo)
    return p


def run(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    try:
        return args.func(args)
    except (UsageError, QcondError) as exc:
        print(f"qcond {args.command}: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
