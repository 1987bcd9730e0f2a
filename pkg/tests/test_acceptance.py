"""Acceptance criteria, one test each, with a one-line PASS/FAIL report.

Run ``pytest tests/test_acceptance.py -v -s`` to see the report lines; they are
also printed (uncaptured) in a normal run.
"""
import math
import time

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from oracles import harmonic_levels, rk4_pair
from squid_tip import analytic, evolve, model, spectral
from squid_tip.analytic import initial_state
from squid_tip.evolve import PulseTrain, StateVector

TD = 3e-12
PS = 1e-12


@pytest.fixture
def report(pytestconfig):
    capman = pytestconfig.pluginmanager.getplugin("capturemanager")
    lines = []

    def emit(n, ok, detail, elapsed, limit):
        ok = ok and elapsed < limit
        line = (f"[acceptance {n}] {'PASS' if ok else 'FAIL'}: {detail} "
                f"(runtime {elapsed:.1f} s, limit {limit:g} s)")
        lines.append(line)
        with capman.global_and_fixture_disabled():
            print("\n" + line, flush=True)
        return ok

    return emit


def test_criterion_1_double_well(report, scaled):
    t0 = time.perf_counter()
    params = model.SquidParams.reference()
    beta = model.beta_L(params)
    arithmetic = 2 * math.pi * 97e-12 * 4e-6 / 2.067834e-15
    es = spectral.solve(model.nondimensionalize(params), 0.0)
    n_below = spectral.levels_below_barrier(es)
    ok = abs(beta - 1.179) / 1.179 < 0.01 and beta == pytest.approx(arithmetic, rel=1e-12) \
        and n_below == 4
    assert report(1, ok, f"beta_L = {beta:.5f} (target 1.179 +- 1%), "
                  f"levels below barrier = {n_below} (target 4)", time.perf_counter() - t0, 5)


def test_criterion_2_splitting_and_period(report, scaled, b0):
    t0 = time.perf_counter()
    fine = spectral.solve(scaled, 0.0, spectral.GridSpec(n_points=2 * b0.grid.n_points), 2)
    split = b0.energies_hz[1] - b0.energies_hz[0]
    split_fine = fine.energies_hz[1] - fine.energies_hz[0]
    drift = abs(split - split_fine) / split
    traj = evolve.run_pulse_train(StateVector.superposition(b0), None, b0, sample_dt=10e-12,
                                  t_after=60e-9)
    measured = evolve.measure_period(traj)
    period = 1 / split
    rel = abs(measured - period) / period
    ok = 30e6 <= split <= 110e6 and drift < 1e-3 and rel < 0.01
    assert report(2, ok, f"(E2-E1)/h = {split / 1e6:.3f} MHz in [30, 110] "
                  f"(grid-doubling drift {drift:.1e}); free period {measured * 1e9:.4f} ns vs "
                  f"h/(E2-E1) {period * 1e9:.4f} ns, rel err {rel:.1e} (< 1e-2)",
                  time.perf_counter() - t0, 30)


def test_criterion_3_resonance_prediction(report, b0, b1, pm):
    t0 = time.perf_counter()
    g13 = analytic.resonance_spacing(b0, (1, 3), 1, TD, pm)
    g24 = analytic.resonance_spacing(b0, (2, 4), 1, TD, pm)
    bare13 = analytic.resonance_spacing(b0, (1, 3), 1)
    bare24 = analytic.resonance_spacing(b0, (2, 4), 1)
    step = 0.1 * PS
    rows = analytic.resonance_scan(None, 0.01, TD, (g13 - 1 * PS, g13 + 1 * PS), 240, step,
                                   bases=(b0, b1))
    peak = max(rows, key=lambda r: r.peak_occ3).t_s
    e13 = abs(g13 - 25.9 * PS) / (25.9 * PS)
    e24 = abs(g24 - 23.9 * PS) / (23.9 * PS)
    ok = e13 < 0.10 and e24 < 0.10 and abs(peak - g13) <= step * (1 + 1e-9)
    assert report(3, ok, f"resonant gap 1-3 = {g13 / PS:.3f} ps ({e13:.1%} from 25.9), "
                  f"2-4 = {g24 / PS:.3f} ps ({e24:.1%} from 23.9); scan peak {peak / PS:.3f} ps, "
                  f"{abs(peak - g13) / step:.2f} steps off [gap read as bare h/dE instead: "
                  f"{bare13 / PS:.3f} ps ({abs(bare13 / (25.9 * PS) - 1):.1%} off) / "
                  f"{bare24 / PS:.3f} ps ({abs(bare24 / (23.9 * PS) - 1):.1%} off)]",
                  time.perf_counter() - t0, 300)


def test_criterion_4_speedup(report, b0, b1, pm):
    t0 = time.perf_counter()
    ts = analytic.resonance_spacing(b0, (1, 3), 1, TD, pm)
    train = PulseTrain(TD, ts, 240, 0.01)
    traj = evolve.run_pulse_train(StateVector.superposition(b0), train, b0, b1)
    eff = evolve.measure_period(traj, smooth=train.period, t_max=train.duration)
    free = 2 * math.pi / (b0.energies[1] - b0.energies[0]) * b0.scaled.time_unit
    factor = free / eff
    assert report(4, factor >= 5, f"effective period {eff * 1e9:.3f} ns vs unperturbed "
                  f"{free * 1e9:.3f} ns: factor {factor:.2f} (>= 5) at t_s = {ts / PS:.3f} ps",
                  time.perf_counter() - t0, 120)


def test_criterion_5_selectivity(report, b0, b1, pm):
    t0 = time.perf_counter()
    out = []
    for ts in (analytic.resonance_spacing(b0, (1, 3), 1, TD, pm), 23.9 * PS):
        traj = evolve.run_pulse_train(StateVector.superposition(b0), PulseTrain(TD, ts, 240, 0.01),
                                      b0, b1)
        peak = traj.occupations.max(axis=0)
        out.append((ts, peak[2], peak[3]))
    r13 = out[0][2] / out[0][1]
    r24 = out[1][1] / out[1][2]
    ok = r13 < 0.25 and r24 < 0.25
    assert report(5, ok, f"at {out[0][0] / PS:.3f} ps peak occ4/occ3 = {r13:.3f}; at 23.9 ps "
                  f"peak occ3/occ4 = {r24:.3f} (both < 0.25)", time.perf_counter() - t0, 120)


ORACLE_DRAWS = []


@settings(max_examples=4, deadline=None, derandomize=True,
          suppress_health_check=[HealthCheck.function_scoped_fixture])
@given(w=st.lists(st.floats(0.0, 1.0), min_size=4, max_size=4),
       ph=st.lists(st.floats(0.0, 2 * math.pi), min_size=4, max_size=4))
def _oracle_draw(b0, b1, w, ph):
    a = np.zeros(b0.n_states, complex)
    a[:4] = np.sqrt(np.array(w) + 1e-3) * np.exp(1j * np.array(ph))
    s = StateVector.new(b0, a / np.linalg.norm(a))
    ORACLE_DRAWS.append(_oracle_compare(b0, b1, s, 8))


def _oracle_compare(b0, b1, s, n):
    train = PulseTrain(TD, 25.9 * PS, n, 0.01)
    proj = evolve.run_pulse_train(s, train, b0, b1, sample_dt=5e-12)
    direct = evolve.direct_integrate(s, train, b0, sample_dt=5e-12)
    fid = evolve.fidelity(proj.final_state, direct.final_psi)
    occ = float(np.max(np.abs(proj.occupations[-1] - direct.occupations[-1])))
    return fid, occ


def test_criterion_6_oracle_equivalence(report, b0, b1):
    t0 = time.perf_counter()
    fid, occ = _oracle_compare(b0, b1, StateVector.superposition(b0), 20)
    ORACLE_DRAWS.clear()
    _oracle_draw(b0, b1)
    worst_fid = min([fid] + [d[0] for d in ORACLE_DRAWS])
    worst_occ = max([occ] + [d[1] for d in ORACLE_DRAWS])
    ok = worst_fid >= 0.999 and worst_occ <= 1e-3
    assert report(6, ok, f"reference train (20 pulses): fidelity {fid:.6f}, max occupation diff "
                  f"{occ:.2e}; worst over {len(ORACLE_DRAWS)} random initial states (8 pulses): "
                  f"fidelity {worst_fid:.6f}, occ diff {worst_occ:.2e}",
                  time.perf_counter() - t0, 300)


def test_criterion_7_invariants(report, scaled, b0, b1, pm):
    t0 = time.perf_counter()
    psi0 = StateVector.superposition(b0)
    checks = {}
    # norm: the tipping pulse and the 20-pulse reference train
    sched = analytic.design_schedule(None, 0.01, TD, math.pi, bases=(b0, b1))
    tip = evolve.run_pulse_train(psi0, sched.train, b0, b1, sample_dt=5e-12)
    short = evolve.run_pulse_train(psi0, PulseTrain(TD, 25.9 * PS, 20, 0.01), b0, b1)
    loss = max(tip.final_state.norm_loss, short.final_state.norm_loss)
    checks["norm loss"] = (loss, loss <= 1e-3)
    ratio = max(analytic.perturbation_matrix(b0, e).forbidden_ratio() for e in (0.005, 0.01, 0.02))
    checks["forbidden/allowed"] = (ratio, ratio <= 1e-8)
    k = 2 * scaled.kinetic / 0.1**4
    grid = spectral.GridSpec(-0.5, 1.5, 65536)
    op = spectral.discretize(scaled, 0.0, grid, potential=lambda x: 0.5 * k * (x - 0.5) ** 2)
    h = spectral.eigensolve(op, 6).energies
    herr = float(np.max(np.abs(h - harmonic_levels(k, scaled.kinetic, 6)) / h))
    checks["harmonic rel err"] = (herr, herr <= 1e-6)
    frozen = evolve.run_pulse_train(psi0, PulseTrain(TD, 25.9 * PS, 30, 0.01), b0, b1,
                                    sample_dt=5e-12, t_after=10e-9)
    post = frozen.occupations[frozen.times >= 30 * (TD + 25.9 * PS)]
    drift = float(np.max(np.abs(post - post[0])))
    checks["freeze drift"] = (drift, drift <= 1e-12)
    rabi = analytic.rabi_solution(b0, pm, (1, 3))
    e = b0.energies
    tu = b0.scaled.time_unit
    ts, ys = rk4_pair(e[0], e[2], pm[1, 1], pm[3, 3], pm[1, 3], TD / tu, 1000)
    rerr = float(np.max(np.abs(rabi.upper_population(ts * tu) - np.abs(ys[:, 1]) ** 2)))
    checks["Rabi vs ODE"] = (rerr, rerr <= 1e-6)
    ok = all(c[1] for c in checks.values())
    detail = "; ".join(f"{name} {v:.1e}" for name, (v, _) in checks.items())
    assert report(7, ok, detail + " (limits 1e-3, 1e-8, 1e-6, 1e-12, 1e-6)",
                  time.perf_counter() - t0, 60)


def test_criterion_8_control_targets(report, b0, b1):
    t0 = time.perf_counter()
    psi0 = initial_state(b0)
    res = {}
    for name, theta in (("pi", math.pi), ("pi/2", math.pi / 2)):
        sched = analytic.design_schedule(None, 0.01, TD, theta, bases=(b0, b1))
        traj = evolve.run_pulse_train(psi0, sched.train, b0, b1, sample_dt=5e-12)
        res[name] = (sched, traj)
    pi_traj = res["pi"][1]
    half = res["pi/2"][1]
    imbalance = abs(half.p_left[-1] - half.p_right[-1])
    ok = pi_traj.p_right[0] > 0.95 and pi_traj.p_right[-1] < 0.05 and imbalance < 0.1
    s_pi, s_half = res["pi"][0], res["pi/2"][0]
    assert report(8, ok, f"pi: {s_pi.train.n_pulses} pulses at {s_pi.train.t_s / PS:.3f} ps, "
                  f"p_right {pi_traj.p_right[0]:.3f} -> {pi_traj.p_right[-1]:.4f} in "
                  f"{s_pi.tip_time * 1e9:.3f} ns; pi/2: {s_half.train.n_pulses} pulses, "
                  f"|p_left - p_right| = {imbalance:.3f} (< 0.1)", time.perf_counter() - t0, 120)
