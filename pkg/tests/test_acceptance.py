"""Acceptance run: eight numbered criteria, one printed verdict line each.

Run `pytest tests/test_acceptance.py -s` to watch the lines as they pass.
Every quantitative claim is checked at absolute tolerance 1e-9 unless the
line says otherwise; timing guards are generous ceilings, not benchmarks.
"""

import time

import numpy as np
import pytest

from rspforge.groups import (
    ALL_ANGLES,
    clifford_1q_group,
    clifford_index_of,
    count_gf2_invertible,
    enumerate_gf2_invertible,
    enumerate_single_qubit_cliffords,
    haar_unitary,
    z_rotations_group,
)
from rspforge.qstate import DensityMatrix
from rspforge.resources import rr_d_channel
from rspforge.security import (
    AttackStrategy,
    advantage,
    bell_state,
    clifford_reduced_channel,
    composed_strategy_suite,
    cq_trace_distance,
    evaluate_strategy,
    p1_input_states,
    p1_strategy_suite,
    p2_worlds,
    p2_worlds_enumerated,
    p2_worlds_sampled,
    p3_haar_mc,
    p3_processing_suite,
    p3_strategy_suite,
    p4_strategy_suite,
    p5_strategy_suite,
    protocol2_closed_forms,
    protocol2_sweep,
    verify_perfect_construction,
    worlds_for,
)
from rspforge.simulators import simulator1_channel

TOL = 1e-9


def _line(k: int, ok: bool, detail: str) -> None:
    print(f"criterion {k}: {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, f"criterion {k}: {detail}"


def _optimal_pair(n: int) -> tuple[AttackStrategy, AttackStrategy]:
    spike = (0,) * (n - 1) + (1,)
    zero = (0,) * n
    return (AttackStrategy.for_protocol2(n, ((1.0, spike),), ((1.0, zero),)),
            AttackStrategy.for_protocol2(n, ((1.0, spike),), ((1.0, spike),)))


def test_criterion_1_sweep_hits_bound():
    grid = [k / 10 for k in range(11)]
    pieces = []
    ok = True
    for n in (2, 3, 4, 5):
        t0 = time.perf_counter()
        rows = protocol2_sweep(n, grid, tol=TOL, enumerate_check=(n == 2))
        peaks = [max(r.advantage, r.extras["advantage_a_tail"]) for r in rows]
        best = max(range(len(grid)), key=lambda i: peaks[i])
        bound = 1.0 / (2**n - 1)
        ok_n = best == 0 and abs(peaks[0] - bound) <= TOL
        ok_n = ok_n and all(r.within_bound for r in rows)
        if n == 3:
            # literal rebuild of the orbit average at the maximizer
            for strat in _optimal_pair(3):
                fast = p2_worlds(strat)
                slow = p2_worlds_enumerated(strat)
                gap = max(cq_trace_distance(fast[0], slow[0]),
                          cq_trace_distance(fast[1], slow[1]))
                ok_n = ok_n and gap <= TOL
        if n == 4:
            strat = _optimal_pair(4)[0]
            samp = p2_worlds_sampled(strat, 40, np.random.default_rng(17))
            exact = p2_worlds(strat)
            gap = max(cq_trace_distance(samp[0], exact[0]),
                      cq_trace_distance(samp[1], exact[1]))
            ok_n = ok_n and gap <= 0.1
        elapsed = time.perf_counter() - t0
        if n == 4:
            ok_n = ok_n and elapsed < 60.0
        ok = ok and ok_n
        pieces.append(f"n={n} peak={peaks[0]:.10f} bound={bound:.10f} "
                      f"{elapsed:.1f}s")
    _line(1, ok, "; ".join(pieces))


def test_criterion_2_closed_forms():
    worst = 0.0
    for n in (2, 3):
        for p0 in (0.0, 0.25, 0.5, 0.75, 1.0):
            closed = protocol2_closed_forms(n, p0)
            zero = (0,) * n
            spike = (0,) * (n - 1) + (1,)
            if p0 >= 1.0:
                s_dist = ((1.0, zero),)
            elif p0 > 0.0:
                s_dist = ((p0, zero), (1.0 - p0, spike))
            else:
                s_dist = ((1.0, spike),)
            rep_a = evaluate_strategy(
                AttackStrategy.for_protocol2(n, s_dist, ((1.0, zero),)))
            rep_b = evaluate_strategy(
                AttackStrategy.for_protocol2(n, s_dist, ((1.0, spike),)))
            gaps = [
                abs(rep_a.accept_probability_real - closed["p_1"]),
                abs(rep_b.accept_probability_real - closed["p_2"]),
                abs(rep_a.branch_distances["accept"] - closed["delta_1"]),
                abs(rep_a.advantage - closed["advantage"]),
                abs(rep_b.advantage - closed["advantage"]),
            ]
            if closed["p_2"] > TOL:
                gaps.append(abs(rep_b.branch_distances["accept"]
                                - closed["delta_2"]))
            target = (1.0 - p0) / (2**n - 1)
            gaps.append(abs(closed["p_1"] * closed["delta_1"] - target))
            gaps.append(abs(closed["p_2"] * closed["delta_2"] - target))
            gaps.append(abs(rep_a.accept_probability_real
                            * rep_a.branch_distances["accept"] - target))
            worst = max(worst, max(gaps))
    _line(2, worst <= TOL,
          f"n in 2,3 x five p_0 values, worst deviation {worst:.2e}")


def test_criterion_3_p1_perfect():
    rng = np.random.default_rng(7)
    states = p1_input_states(np.random.default_rng(7))
    has_bell = any(s.num_qubits == 2
                   and abs(np.trace(s.mat @ bell_state().mat).real - 1.0) < 1e-12
                   for s in states)
    suite = p1_strategy_suite(rng)
    reports = verify_perfect_construction("P1", suite, tol=TOL)
    worst = max(r.advantage for r in reports)
    choi_gap = max(
        float(np.abs(rr_d_channel(theta).choi()
                     - simulator1_channel(theta).choi()).max())
        for theta in ALL_ANGLES)
    ok = (len(states) >= 50 and has_bell and len(suite) >= 8 * 50
          and worst <= TOL and choi_gap <= TOL)
    _line(3, ok,
          f"{len(suite)} strategies over 8 angles x {len(states)} inputs "
          f"(bell included: {has_bell}), worst advantage {worst:.2e}, "
          f"choi gap {choi_gap:.2e}")


def test_criterion_4_p3_perfect():
    t0 = time.perf_counter()
    rng = np.random.default_rng(11)
    worst = 0.0
    suite_len = 0
    for _ in range(20):
        u = haar_unitary(2, rng)
        suite = p3_strategy_suite(u, rng)
        suite_len = len(suite)
        reports = verify_perfect_construction("P3", suite, tol=TOL)
        worst = max(worst, max(r.advantage for r in reports))
    spread = max(clifford_reduced_channel(u_d).mixing_spread
                 for u_d in p3_processing_suite(np.random.default_rng(12),
                                                count=8))
    mc = p3_haar_mc(haar_unitary(2, np.random.default_rng(13)),
                    haar_unitary(4, np.random.default_rng(14)),
                    DensityMatrix.maximally_mixed(1), 10_000,
                    np.random.default_rng(15))
    elapsed = time.perf_counter() - t0
    ok = (worst <= TOL and spread <= TOL
          and mc["deviation"] <= 3.0 * mc["stderr"] and elapsed < 300.0)
    _line(4, ok,
          f"20 targets x {suite_len} strategies, worst advantage {worst:.2e}, "
          f"pauli weight spread {spread:.2e}, haar mc "
          f"{mc['deviation']:.2e} <= 3x{mc['stderr']:.2e}, {elapsed:.0f}s")


def test_criterion_5_p4_perfect():
    suite = p4_strategy_suite(np.random.default_rng(23))
    reports = verify_perfect_construction("P4", suite, tol=TOL)
    worst = max(r.advantage for r in reports)
    _line(5, len(suite) == 20 and worst <= TOL,
          f"{len(suite)} strategies, worst advantage {worst:.2e}")


def test_criterion_6_p5_both_groups():
    t0 = time.perf_counter()
    pieces = []
    ok = True
    for maker in (clifford_1q_group, z_rotations_group):
        group = maker()
        suite = p5_strategy_suite(group, np.random.default_rng(31))
        reports = verify_perfect_construction("P5", suite, tol=TOL)
        worst = max(r.advantage for r in reports)
        positions = sorted({s.params["honest_position"] for s in suite})
        per_pos = {p: sum(1 for s in suite
                          if s.params["honest_position"] == p)
                   for p in positions}
        ok = (ok and positions == [1, 2, 3]
              and all(v == 10 for v in per_pos.values()) and worst <= TOL)
        pieces.append(f"{group.descriptor} worst {worst:.2e}")
    elapsed = time.perf_counter() - t0
    ok = ok and elapsed < 120.0
    _line(6, ok, "; ".join(pieces) + f", 3 clients x 10 coalitions each, "
          f"{elapsed:.0f}s")


def test_criterion_7_group_facts():
    cliffords = enumerate_single_qubit_cliffords()
    closed = all(
        clifford_index_of(a.matrix @ b.matrix) in range(24)
        for a in cliffords for b in cliffords)
    counts = {n: (count_gf2_invertible(n), len(enumerate_gf2_invertible(n)))
              for n in (1, 2, 3)}
    counts_ok = all(counts[n] == (want, want)
                    for n, want in ((1, 1), (2, 6), (3, 168)))
    _line(7, len(cliffords) == 24 and closed and counts_ok,
          f"{len(cliffords)} cliffords closed under composition, "
          f"gf2 counts {[counts[n][0] for n in (1, 2, 3)]}")


def test_criterion_8_composition():
    pieces = []
    ok = True
    for n in (2, 3):
        u = haar_unitary(2, np.random.default_rng(41 + n))
        bound = 1.0 / (2**n - 1)
        zero = (0,) * n
        spike = (0,) * (n - 1) + (1,)
        honest = AttackStrategy.for_composed(n, u, ((1.0, zero),),
                                             ((1.0, zero),))
        real, ideal = worlds_for(honest)
        honest_gap = cq_trace_distance(real, ideal)
        acc = sum(block for label, block in real.items() if label[0] == "acc")
        acc = acc / np.trace(acc).real
        target = u[:, 0]
        fid = float((target.conj() @ acc @ target).real)
        inner = advantage(AttackStrategy.for_composed(
            n, u, ((1.0, spike),), ((1.0, zero),)))
        suite_ok = all(advantage(s) <= bound + TOL
                       for s in composed_strategy_suite(
                           n, u, np.random.default_rng(43)))
        ok = (ok and honest_gap <= TOL and abs(fid - 1.0) <= TOL
              and inner <= bound + TOL and suite_ok)
        pieces.append(f"n={n} fidelity {fid:.10f}, inner attack "
                      f"{inner:.10f} <= {bound:.10f}")
    _line(8, ok, "; ".join(pieces))
