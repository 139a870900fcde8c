"""Batch front-end for the protocol laboratory.

Six commands: correctness (honest runs hit their target states), twirl-check
(group-averaging identities), security (distinguisher suites per protocol),
sweep (the trap-round attack family over a p_0 grid), compose (trap round
feeding the correction round), collaborative (multi-client masking).

Every command assembles one report dict (schema_version 1) and writes it as
json or csv. All randomness is derived from a single 64-bit seed (flag,
else RSP_FORGE_SEED, else 0) through labeled streams, so the same config and
seed reproduce the report byte for byte; elapsed wall-clock goes to stdout,
never into the report. Exit status: 0 all checks pass, 1 a check failed,
2 bad usage.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import figures
from .groups import (
    ALL_ANGLES,
    Angle,
    clifford_twirl_channel,
    dephasing_twirl,
    enumerate_gf2_invertible,
    gf2_linear_twirl,
    group_by_name,
    haar_twirl_equals_clifford_twirl,
    haar_unitary,
    permutation_unitary,
    phase_state,
)
from .protocols import (
    protocol1_run,
    protocol2_run,
    protocol3_run,
    protocol4_run,
    protocol5_run,
)
from .qstate import ATOL, DensityMatrix, QuantumChannel, trace_distance
from .resources import c_rsp, ro, rr_d_channel, rsp
from .security import (
    VerificationError,
    clifford_reduced_channel,
    composed_strategy_suite,
    composition_loss_check,
    evaluate_strategy,
    p1_strategy_suite,
    p3_processing_suite,
    p3_strategy_suite,
    p4_strategy_suite,
    p5_strategy_suite,
    protocol2_sweep,
    random_density,
)
from .seeding import derive_rng
from .simulators import simulator1_channel

COMMANDS = ("correctness", "twirl-check", "security", "sweep", "compose",
            "collaborative")
PROTOCOLS = ("P1", "P2", "P3", "P4", "P5")
TWIRL_KINDS = ("clifford", "haar", "gf2", "dephasing")
DEFAULT_GRID = tuple(round(0.1 * i, 10) for i in range(11))


class UsageError(ValueError):
    """Config rejected before any computation ran."""


@dataclass
class RunConfig:
    command: str
    protocol_id: str | None = None
    n: int = 2
    theta: int | None = None
    group: str = "clifford-1q"
    clients: int = 3
    p0: tuple[float, ...] | None = None
    samples: int | None = None
    which: str = "clifford"
    seed: int = 0
    output_path: str | None = None
    output_format: str = "json"
    render_figures: bool = True


def _validate(config: RunConfig) -> None:
    if config.command not in COMMANDS:
        raise UsageError(f"unknown command {config.command!r}")
    if config.protocol_id is not None and config.protocol_id not in PROTOCOLS:
        raise UsageError(f"unknown protocol {config.protocol_id!r}")
    if config.command in ("correctness", "security") and config.protocol_id is None:
        raise UsageError(f"{config.command} needs --protocol")
    if not 0 <= config.seed < 2**64:
        raise UsageError("seed must fit in an unsigned 64-bit integer")
    if not 2 <= config.n <= 5:
        raise UsageError("n must lie in 2..5")
    if config.theta is not None and not 0 <= config.theta <= 7:
        raise UsageError("theta index must lie in 0..7")
    if config.clients < 1:
        raise UsageError("clients must be positive")
    if config.samples is not None and config.samples < 1:
        raise UsageError("samples must be positive")
    if config.p0 is not None:
        if not config.p0:
            raise UsageError("p0 grid must be nonempty")
        for v in config.p0:
            if not 0.0 <= v <= 1.0:
                raise UsageError(f"p0 value {v} outside [0, 1]")
    if config.which not in TWIRL_KINDS:
        raise UsageError(f"unknown twirl kind {config.which!r}")
    if config.output_format not in ("json", "csv"):
        raise UsageError(f"unknown format {config.output_format!r}")
    try:
        group_by_name(config.group)
    except KeyError as exc:
        raise UsageError(str(exc)) from None


def _check(name: str, ok: bool, **values) -> dict:
    return {"name": name, "pass": bool(ok), "values": _scrub(values)}


def _scrub(value):
    """Plain python types only, so json output is stable and portable."""
    if isinstance(value, dict):
        return {str(k): _scrub(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_scrub(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return float(value)
    return value


def _fidelity(rho: DensityMatrix, psi: np.ndarray) -> float:
    vec = np.asarray(psi, dtype=np.complex128).ravel()
    return float((vec.conj() @ rho.mat @ vec).real)


# ---------------------------------------------------------------------------
# correctness: honest runs land on the target states


def _correctness_p1(config: RunConfig) -> list[dict]:
    trials = config.samples or 20
    angles = [Angle(config.theta)] if config.theta is not None else list(ALL_ANGLES)
    checks = []
    for theta in angles:
        rng = derive_rng(config.seed, "correctness", "P1", str(theta.k))
        target = phase_state(theta)
        worst = 1.0
        for _ in range(trials):
            out = protocol1_run(theta, rng).final_joint_state
            worst = min(worst, _fidelity(out, target))
        gap = float(np.abs(rr_d_channel(theta).choi()
                           - simulator1_channel(theta).choi()).max())
        checks.append(_check(
            f"P1 theta={theta.k} honest output",
            worst >= 1.0 - ATOL and gap <= ATOL,
            fidelity=worst, choi_gap=gap, trials=trials))
    return checks


def _correctness_p2(config: RunConfig) -> list[dict]:
    trials = config.samples or 50
    rng = derive_rng(config.seed, "correctness", "P2", str(config.n))
    worst = 1.0
    accepted = 0
    for _ in range(trials):
        c = int(rng.integers(24))
        t = protocol2_run(config.n, c, rng)
        if not t.aborted:
            accepted += 1
            worst = min(worst, _fidelity(t.final_joint_state,
                                         _pure_of(c_rsp(c))))
    rate = accepted / trials
    return [_check(
        f"P2 n={config.n} honest output",
        rate == 1.0 and worst >= 1.0 - ATOL,
        fidelity=worst, accept_rate=rate, trials=trials)]


def _pure_of(rho: DensityMatrix) -> np.ndarray:
    vals, vecs = np.linalg.eigh(rho.mat)
    return vecs[:, -1]


def _correctness_p3(config: RunConfig) -> list[dict]:
    trials = config.samples or 20
    rng = derive_rng(config.seed, "correctness", "P3")
    worst = 1.0
    for _ in range(trials):
        u = haar_unitary(2, rng)
        out = protocol3_run(u, rng).final_joint_state
        worst = min(worst, _fidelity(out, u[:, 0]))
    return [_check("P3 honest output", worst >= 1.0 - ATOL,
                   fidelity=worst, trials=trials)]


def _correctness_p4(config: RunConfig) -> list[dict]:
    trials = config.samples or 20
    rng = derive_rng(config.seed, "correctness", "P4")
    worst = 1.0
    for _ in range(trials):
        u = haar_unitary(2, rng)
        out = protocol4_run(u, rng).final_joint_state
        worst = min(worst, _fidelity(out, u[:, 0]))
    return [_check("P4 honest output", worst >= 1.0 - ATOL,
                   fidelity=worst, trials=trials)]


def _correctness_p5(config: RunConfig) -> list[dict]:
    trials = config.samples or 10
    group = group_by_name(config.group)
    rng = derive_rng(config.seed, "correctness", "P5", config.group)
    server = DensityMatrix.computational_basis((0,) * group.num_qubits)
    worst = 0.0
    for _ in range(trials):
        u = group.sample(rng)
        t = protocol5_run(group, u, config.clients, rng)
        worst = max(worst, trace_distance(t.final_joint_state,
                                          ro(group, u, server)))
    return [_check(
        f"P5 group={config.group} clients={config.clients} honest output",
        worst <= ATOL, max_trace_distance=worst, trials=trials)]


def _run_correctness(config: RunConfig) -> dict:
    runner = {
        "P1": _correctness_p1,
        "P2": _correctness_p2,
        "P3": _correctness_p3,
        "P4": _correctness_p4,
        "P5": _correctness_p5,
    }[config.protocol_id]
    return {"checks": runner(config)}


# ---------------------------------------------------------------------------
# twirl-check: group-averaging identities on random channels


def _random_channel(rng: np.random.Generator) -> QuantumChannel:
    """Haar isometry into a 4-dim environment, traced out: a generic channel."""
    u = haar_unitary(8, rng).reshape(2, 4, 2, 4)
    return QuantumChannel([np.ascontiguousarray(u[:, e, :, 0]) for e in range(4)])


def _twirl_clifford(config: RunConfig) -> dict:
    count = config.samples or 20
    rng = derive_rng(config.seed, "twirl", "clifford")
    checks = []
    weights = []
    for i in range(count):
        probs = clifford_twirl_channel(_random_channel(rng))
        spread = max(abs(probs.p_x - probs.p_y), abs(probs.p_x - probs.p_z))
        weights.append({"I": probs.p_i, "X": probs.p_x,
                        "Y": probs.p_y, "Z": probs.p_z})
        checks.append(_check(f"channel {i:02d} p_X=p_Y=p_Z", spread <= ATOL,
                             spread=spread, **weights[-1]))
    return {"checks": checks, "pauli_weights": _scrub(weights)}


def _twirl_haar(config: RunConfig) -> dict:
    draws = config.samples or 300
    rng = derive_rng(config.seed, "twirl", "haar")
    checks = []
    for i in range(3):
        ok = haar_twirl_equals_clifford_twirl(_random_channel(rng), rng,
                                              samples=draws)
        checks.append(_check(f"channel {i} finite average is Haar-invariant",
                             ok, haar_draws=draws))
    return {"checks": checks}


def _twirl_gf2(config: RunConfig) -> dict:
    if config.n > 3:
        raise UsageError("gf2 twirl check enumerates the group; needs n <= 3")
    rng = derive_rng(config.seed, "twirl", "gf2", str(config.n))
    n = config.n
    checks = []
    for i in range(config.samples or 5):
        rho = dephasing_twirl(random_density(rng, n + 1), list(range(n)))
        fast = gf2_linear_twirl(rho, list(range(n)))
        maps = enumerate_gf2_invertible(n)
        acc = np.zeros_like(rho.mat)
        for g in maps:
            u = permutation_unitary(g).mat
            full = np.kron(u, np.eye(2, dtype=np.complex128))
            acc += full @ rho.mat @ full.conj().T
        gap = trace_distance(fast, DensityMatrix(acc / len(maps)))
        checks.append(_check(f"state {i} closed form vs enumeration ({len(maps)} maps)",
                             gap <= ATOL, trace_distance=gap))
    return {"checks": checks}


def _twirl_dephasing(config: RunConfig) -> dict:
    rng = derive_rng(config.seed, "twirl", "dephasing")
    checks = []
    for i in range(config.samples or 5):
        rho = random_density(rng, 2)
        out = dephasing_twirl(rho, [0])
        blocks = out.mat.reshape(2, 2, 2, 2)
        off = float(max(np.abs(blocks[0, :, 1, :]).max(),
                        np.abs(blocks[1, :, 0, :]).max()))
        kept = float(np.abs(blocks[0, :, 0, :]
                            - rho.mat.reshape(2, 2, 2, 2)[0, :, 0, :]).max())
        checks.append(_check(f"state {i} off-diagonal killed, diagonal kept",
                             off <= ATOL and kept <= ATOL,
                             off_diagonal=off, diagonal_change=kept))
    return {"checks": checks}


def _run_twirl(config: RunConfig) -> dict:
    return {
        "clifford": _twirl_clifford,
        "haar": _twirl_haar,
        "gf2": _twirl_gf2,
        "dephasing": _twirl_dephasing,
    }[config.which](config)


# ---------------------------------------------------------------------------
# security: distinguisher suites per protocol


def _suite_check(name: str, suite, tol: float = ATOL) -> dict:
    worst = 0.0
    worst_desc = ""
    for strategy in suite:
        rep = evaluate_strategy(strategy)
        if rep.advantage > worst:
            worst, worst_desc = rep.advantage, rep.descriptor
    values = {"max_advantage": worst, "strategies": len(suite)}
    if worst_desc:
        values["worst_strategy"] = worst_desc
    return _check(name, worst <= tol, **values)


def _security_p1(config: RunConfig) -> dict:
    rng = derive_rng(config.seed, "security", "P1")
    checks = [_suite_check("P1 strategy suite", p1_strategy_suite(rng))]
    gap = max(float(np.abs(rr_d_channel(theta).choi()
                           - simulator1_channel(theta).choi()).max())
              for theta in ALL_ANGLES)
    checks.append(_check("P1 averaged channel equals simulator circuit",
                         gap <= ATOL, max_choi_gap=gap, angles=8))
    return {"checks": checks}


def _security_p2(config: RunConfig) -> dict:
    grid = config.p0 or (0.0,)
    return _sweep_body(config.n, grid)


def _security_p3(config: RunConfig) -> dict:
    count = config.samples or 5
    rng = derive_rng(config.seed, "security", "P3")
    checks = []
    for i in range(count):
        u = haar_unitary(2, rng)
        checks.append(_suite_check(f"P3 u={i:02d} strategy suite",
                                   p3_strategy_suite(u, rng)))
    spread = 0.0
    for u_d in p3_processing_suite(rng, count=4):
        spread = max(spread, clifford_reduced_channel(u_d).mixing_spread)
    checks.append(_check("P3 twirled deviations have p_X=p_Y=p_Z",
                         spread <= ATOL, max_spread=spread, processings=8))
    return {"checks": checks}


def _security_p4(config: RunConfig) -> dict:
    rng = derive_rng(config.seed, "security", "P4")
    return {"checks": [_suite_check("P4 strategy suite", p4_strategy_suite(rng))]}


def _security_p5(config: RunConfig) -> dict:
    group = group_by_name(config.group)
    rng = derive_rng(config.seed, "security", "P5", config.group)
    suite = p5_strategy_suite(group, rng, client_count=config.clients,
                              coalitions=config.samples or 10)
    name = f"P5 group={config.group} clients={config.clients} suite"
    return {"checks": [_suite_check(name, suite)]}


def _run_security(config: RunConfig) -> dict:
    return {
        "P1": _security_p1,
        "P2": _security_p2,
        "P3": _security_p3,
        "P4": _security_p4,
        "P5": _security_p5,
    }[config.protocol_id](config)


# ---------------------------------------------------------------------------
# sweep: the trap-round attack family over a p_0 grid


def _sweep_body(n: int, grid) -> dict:
    checks = []
    rows = []
    try:
        reports = protocol2_sweep(n, grid)
    except VerificationError as exc:
        return {"checks": [_check(f"sweep n={n}", False, error=str(exc))],
                "rows": rows}
    for rep in reports:
        state = rep.extras["state"]
        closed = rep.extras["closed"]
        rows.append({k: _scrub(state[k]) for k in
                     ("n", "p_0", "p_1", "p_2", "delta_1", "delta_2",
                      "advantage", "bound")})
        gap = max(abs(state[k] - closed[k]) for k in
                  ("p_1", "p_2", "delta_1", "delta_2", "advantage"))
        checks.append(_check(
            f"n={n} p0={state['p_0']:.6g}",
            gap <= 1e-9 and rep.within_bound,
            advantage=state["advantage"], advantage_closed=closed["advantage"],
            p_1=state["p_1"], p_1_closed=closed["p_1"],
            p_2=state["p_2"], p_2_closed=closed["p_2"],
            delta_1=state["delta_1"], delta_1_closed=closed["delta_1"],
            delta_2=state["delta_2"], delta_2_closed=closed["delta_2"],
            bound=closed["bound"], closed_form_gap=gap))
    peak = max(r["advantage"] for r in rows)
    bound = rows[0]["bound"]
    checks.append(_check(f"n={n} peak advantage equals bound",
                         abs(peak - bound) <= 1e-9 if 0.0 in
                         [r["p_0"] for r in rows] else peak <= bound + 1e-9,
                         peak_advantage=peak, bound=bound))
    return {"checks": checks, "rows": rows}


def _run_sweep(config: RunConfig) -> dict:
    grid = config.p0 or DEFAULT_GRID
    return _sweep_body(config.n, grid)


def sweep_csv(config: RunConfig) -> list[str]:
    """CSV rows for the sweep at config.n over config.p0 (default 11 points)."""
    _validate(config)
    body = _run_sweep(config)
    return _sweep_rows_csv(body["rows"])


_SWEEP_COLUMNS = ("n", "p_0", "p_1", "p_2", "delta_1", "delta_2",
                  "advantage", "bound")


def _sweep_rows_csv(rows: list[dict]) -> list[str]:
    lines = [",".join(_SWEEP_COLUMNS)]
    for row in rows:
        lines.append(",".join(_fmt(row[c]) for c in _SWEEP_COLUMNS))
    return lines


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


# ---------------------------------------------------------------------------
# compose: trap round feeding the correction round


def _run_compose(config: RunConfig) -> dict:
    n = config.n
    trials = config.samples or 3
    rng = derive_rng(config.seed, "compose", str(n))
    bound = 1.0 / (2**n - 1)
    checks = []
    for i in range(trials):
        u = haar_unitary(2, rng)
        worst = 0.0
        honest = optimal = None
        for strategy in composed_strategy_suite(n, u, rng):
            rep = evaluate_strategy(strategy)
            worst = max(worst, rep.advantage)
            if strategy.descriptor.endswith("honest"):
                honest = rep.advantage
            if strategy.descriptor.endswith("optimal"):
                optimal = rep.advantage
        checks.append(_check(
            f"composed n={n} u={i} suite within bound",
            worst <= bound + 1e-9 and honest <= 1e-9
            and abs(optimal - bound) <= 1e-9,
            max_advantage=worst, honest_advantage=honest,
            optimal_advantage=optimal, bound=bound))
    for calls in (1, 2):
        try:
            budget = composition_loss_check(n, calls)
            checks.append(_check(f"loss budget for {calls} call(s)", True,
                                 calls=calls, budget=budget))
        except VerificationError as exc:
            checks.append(_check(f"loss budget for {calls} call(s)", False,
                                 calls=calls, error=str(exc)))
    return {"checks": checks}


# ---------------------------------------------------------------------------
# collaborative: multi-client masking


def _run_collaborative(config: RunConfig) -> dict:
    group = group_by_name(config.group)
    rng = derive_rng(config.seed, "collaborative", config.group)
    server = DensityMatrix.computational_basis((0,) * group.num_qubits)
    worst = 0.0
    for _ in range(3):
        u = group.sample(rng)
        t = protocol5_run(group, u, config.clients, rng)
        worst = max(worst, trace_distance(t.final_joint_state,
                                          ro(group, u, server)))
    checks = [_check("honest chain applies the requested operation",
                     worst <= ATOL, max_trace_distance=worst)]
    suite = p5_strategy_suite(group, rng, client_count=config.clients,
                              coalitions=config.samples or 10)
    by_position: dict[str, list] = {}
    for strategy in suite:
        by_position.setdefault(strategy.params["honest_position"], []).append(strategy)
    for position in sorted(by_position):
        checks.append(_suite_check(
            f"honest client {position} of {config.clients}",
            by_position[position]))
    return {"checks": checks}


# ---------------------------------------------------------------------------
# report assembly and entry point


_RUNNERS = {
    "correctness": _run_correctness,
    "twirl-check": _run_twirl,
    "security": _run_security,
    "sweep": _run_sweep,
    "compose": _run_compose,
    "collaborative": _run_collaborative,
}


def _config_echo(config: RunConfig) -> dict:
    echo = {
        "command": config.command,
        "seed": config.seed,
        "format": config.output_format,
    }
    if config.protocol_id is not None:
        echo["protocol"] = config.protocol_id
    if config.command in ("sweep", "compose") or config.protocol_id == "P2":
        echo["n"] = config.n
    if config.which != "clifford" or config.command == "twirl-check":
        echo["which"] = config.which
    if config.theta is not None:
        echo["theta"] = config.theta
    if config.command == "collaborative" or config.protocol_id == "P5":
        echo["group"] = config.group
        echo["clients"] = config.clients
    if config.p0 is not None:
        echo["p0"] = list(config.p0)
    if config.samples is not None:
        echo["samples"] = config.samples
    return echo


def run(config: RunConfig) -> tuple[int, dict]:
    """Execute one command; returns (exit status, report dict)."""
    _validate(config)
    body = _RUNNERS[config.command](config)
    ok = all(c["pass"] for c in body["checks"])
    report = {
        "schema_version": 1,
        "command": config.command,
        "config": _config_echo(config),
        "pass": ok,
    }
    report.update(body)
    return (0 if ok else 1), report


def _report_text(report: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(report, indent=2, sort_keys=True) + "\n"
    if report["command"] == "sweep" and report.get("rows"):
        return "\n".join(_sweep_rows_csv(report["rows"])) + "\n"
    lines = ["check,pass,metric,value"]
    for check in report["checks"]:
        name = check["name"].replace(",", ";")
        flag = "true" if check["pass"] else "false"
        for metric in sorted(check["values"]):
            lines.append(f"{name},{flag},{metric},{_fmt(check['values'][metric])}")
    return "\n".join(lines) + "\n"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rspforge",
        description="exact checks for remote-preparation protocols")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--protocol", choices=PROTOCOLS, dest="protocol_id",
                       required=name in ("correctness", "security"))
        p.add_argument("--n", type=int, default=2)
        p.add_argument("--theta", type=int, choices=range(8), default=None)
        p.add_argument("--group", default="clifford-1q")
        p.add_argument("--clients", type=int, default=3)
        p.add_argument("--p0", type=float, nargs="+", default=None)
        p.add_argument("--samples", type=int, default=None)
        if name == "twirl-check":
            p.add_argument("--which", choices=TWIRL_KINDS, default="clifford")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", dest="output_path", default=None)
        p.add_argument("--format", dest="output_format",
                       choices=("json", "csv"), default="json")
        p.add_argument("--no-figures", dest="render_figures",
                       action="store_false")
    return parser


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    seed = args.seed
    if seed is None:
        raw = os.environ.get("RSP_FORGE_SEED", "0")
        try:
            seed = int(raw)
        except ValueError:
            raise UsageError(f"RSP_FORGE_SEED={raw!r} is not an integer") from None
    return RunConfig(
        command=args.command,
        protocol_id=args.protocol_id,
        n=args.n,
        theta=args.theta,
        group=args.group,
        clients=args.clients,
        p0=tuple(args.p0) if args.p0 is not None else None,
        samples=args.samples,
        which=getattr(args, "which", "clifford"),
        seed=seed,
        output_path=args.output_path,
        output_format=args.output_format,
        render_figures=args.render_figures,
    )


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    started = time.perf_counter()
    try:
        config = _config_from_args(args)
        status, report = run(config)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    text = _report_text(report, config.output_format)
    if config.output_path:
        with open(config.output_path, "w") as fh:
            fh.write(text)
        print(f"report: {config.output_path}")
        if config.render_figures:
            for path in figures.render_figures(report, config.output_path):
                print(f"figure: {path}")
    else:
        sys.stdout.write(text)
    failed = sum(1 for c in report["checks"] if not c["pass"])
    verdict = "pass" if status == 0 else f"FAIL ({failed} of {len(report['checks'])})"
    print(f"{verdict}, elapsed {time.perf_counter() - started:.2f}s")
    return status


if __name__ == "__main__":
    sys.exit(main())
