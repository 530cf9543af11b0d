"""Acceptance criteria 1-12, each at its stated tolerance.

Every test records a one-line PASS/FAIL summary, printed at the end of the
session, before asserting.
"""
import math
import time
from dataclasses import replace

import numpy as np
import pytest
from conftest import random_hermitian, record_criterion

from enaqt.dynamics import evolve, initial_state, steady_state
from enaqt.experiments import Scenario, emit_csv, merge_results, resolve_params, run_scenario
from enaqt.generator import CouplingMode, ModelParams, build_generator
from enaqt.operators import product_state
from enaqt.presets import list_presets, preset_scenarios, run_preset
from enaqt.topology import AncillaWiring, Archetype, NetworkSpec, build_archetype
from enaqt.witness import Probe, nonmarkov_witness, random_orthogonal_pair

ENAQT_TOL = 1e-4
THREE_SITE = ("fig6", "fig7", "fig8", "fig9", "thresholds")
FIVE_SITE = ("fig3a", "fig3b", "fig3c", "fig4", "fig5")


class PresetCache:
    def __init__(self):
        self.results, self.seconds = {}, {}

    def __call__(self, name):
        if name not in self.results:
            start = time.perf_counter()
            self.results[name] = run_preset(name)
            self.seconds[name] = time.perf_counter() - start
        return self.results[name]


@pytest.fixture(scope="session")
def presets():
    return PresetCache()


def _finite_rows(rows):
    return [r for r in rows if math.isfinite(r["t"])]


def _curve(result, scenario, key, **where):
    rows = [r for r in result.select(scenario=scenario, **where)]
    return np.array([r["D"] for r in rows]), np.array([r[key] for r in rows], dtype=float)


def _min_R_with_enaqt(result, scenario):
    best = {}
    for r in result.select(scenario=scenario):
        best[r["R"]] = max(best.get(r["R"], -math.inf), r["sepi"])
    hits = [R for R, s in sorted(best.items()) if s > ENAQT_TOL]
    return (hits[0] if hits else math.inf), best


# 1 -------------------------------------------------------------------------

def test_criterion_01_cptp_invariants_on_every_preset(presets):
    worst = {"trace_drift": 0.0, "hermiticity": 0.0, "min_eigenvalue": 0.0}
    for name in list_presets():
        inv = presets(name).metadata["invariants"]
        worst["trace_drift"] = max(worst["trace_drift"], inv["trace_drift"])
        worst["hermiticity"] = max(worst["hermiticity"], inv["hermiticity"])
        worst["min_eigenvalue"] = min(worst["min_eigenvalue"], inv["min_eigenvalue"])
    t3 = sum(presets.seconds[n] for n in THREE_SITE)
    t5 = sum(presets.seconds[n] for n in FIVE_SITE)
    ok = (worst["trace_drift"] < 1e-9 and worst["hermiticity"] < 1e-10 and worst["min_eigenvalue"] >= -1e-8
          and t3 < 60 and t5 < 600)
    record_criterion("1", ok, f"trace drift {worst['trace_drift']:.2e}, hermiticity {worst['hermiticity']:.2e}, "
                              f"min eig {worst['min_eigenvalue']:.2e}; 3-site {t3:.0f} s, 5-site {t5:.0f} s")
    assert ok


# 2 -------------------------------------------------------------------------

ORACLE_CASES = [
    ("1 site + sink", NetworkSpec(1, [[0]]), ModelParams(J=1.0, D=0.6, N=0.4, gamma_S=1.3), "coherent"),
    ("2 sites + sink", build_archetype(Archetype.LINEAR, 2), ModelParams(J=2.0, D=0.3, N=(0.5, 0.1)), "coherent"),
    ("1 site + open ancilla + sink", NetworkSpec(1, [[0]], ancilla=AncillaWiring.communal(1, True)),
     ModelParams(J=1.0, Q=1.5, D=0.2, N=0.3, N_A=0.2, Gamma_up=0.7, Gamma_down=0.4), "mixed"),
]


def test_criterion_02_apply_matches_superoperator(rng):
    worst = 0.0
    for _, spec, params, mode in ORACLE_CASES:
        gen = build_generator(spec, params, mode)
        L = gen.superoperator()
        d = gen.dim
        for _ in range(100):
            rho = random_hermitian(d, rng)
            direct = gen.apply(rho)
            via_L = (L @ rho.reshape(-1, order="F")).reshape(d, d, order="F")
            worst = max(worst, np.linalg.norm(direct - via_L) / np.linalg.norm(via_L))
    ok = worst < 1e-12
    record_criterion("2", ok, f"max relative error {worst:.2e} over 3 scenarios x 100 inputs")
    assert ok


# 3 -------------------------------------------------------------------------

def test_criterion_03_analytic_oracles():
    one = NetworkSpec(1, [[0]])
    off = dict(gamma_up=0.0, gamma_S=0.0)
    gamma = 0.8
    gen = build_generator(one, ModelParams(**off, gamma_down=gamma))
    times = np.linspace(0, 4, 41)
    up = product_state(gen.register, [0])
    traj = evolve(initial_state(one), gen, 4.0, times, observables={"pe": lambda r: np.trace(up @ r).real})
    err_decay = np.abs(traj.observables["pe"] - np.exp(-gamma * times)).max()

    err_thermal = 0.0
    for N in (0.25, 1.0, 2.0):
        g = build_generator(one, ModelParams(gamma_up=1.0, gamma_down=1.0, gamma_S=0.0, N=N))
        rho = steady_state(g, rho0=initial_state(one))
        pe = np.trace(up @ rho).real
        err_thermal = max(err_thermal, abs(pe - N / (2 * N + 1)))

    two = build_archetype(Archetype.LINEAR, 2)
    J = 1.7
    g = build_generator(two, ModelParams(J=J, gamma_down=0.0, gamma_S=0.0))
    site2 = product_state(g.register, [1])
    traj = evolve(initial_state(two), g, 3.0, times * 0.75, observables={"p2": lambda r: np.trace(site2 @ r).real})
    err_hop = np.abs(traj.observables["p2"] - np.sin(2 * J * times * 0.75) ** 2).max()

    ok = max(err_decay, err_thermal, err_hop) < 1e-6
    record_criterion("3", ok, f"decay {err_decay:.1e}, thermal {err_thermal:.1e}, hopping {err_hop:.1e}")
    assert ok


# 4 -------------------------------------------------------------------------

def test_criterion_04a_no_enaqt_at_R1(presets):
    res = presets("fig3b")
    D, s = _curve(res, "fig3b/maximally_connected", "sep", R=1.0)
    steps = np.diff(s)
    worst = steps.max()
    ok = bool(np.all(steps <= 1e-6)) and presets.seconds["fig3b"] < 900
    record_criterion("4a", ok, f"largest SEP rise along D at R=1 is {worst:.3e} (tolerance 1e-6); "
                               f"max SEPI {np.max(s - s[0]):.3e} at D={D[np.argmax(s)]:.3g}")
    assert ok


def test_criterion_04b_interior_optimum_at_R20(presets):
    res = presets("fig3b")
    D, sepi = _curve(res, "fig3b/maximally_connected", "sepi", R=20.0)
    k = int(np.argmax(sepi))
    interior = sepi[1:-1]
    ok = bool(interior.max() > ENAQT_TOL) and 0 < k < len(D) - 1
    record_criterion("4b", ok, f"max SEPI {sepi[k]:.4f} at interior D={D[k]:.3g}")
    assert ok


# 5 -------------------------------------------------------------------------

def test_criterion_05_critical_link_ablation(presets):
    res = presets("fig3a")
    worst = {}
    for kind in Archetype:
        worst[kind.value] = max(r["sepi"] for r in res.select(scenario=f"fig3a/{kind.value}") if r["D"] > 0)
    no_link = max(worst["linear"], worst["noncritical"])
    ok = no_link <= 1e-6 and worst["loop"] > ENAQT_TOL and worst["maximally_connected"] > ENAQT_TOL
    record_criterion("5", ok, ", ".join(f"{k} max SEPI {v:.3g}" for k, v in worst.items()))
    assert ok


# 6 -------------------------------------------------------------------------

def test_criterion_06_size_trend(presets):
    res = presets("fig3c")
    thresholds = [_min_R_with_enaqt(res, f"fig3c/n{n}")[0] for n in (3, 4, 5)]
    ok = thresholds[0] >= thresholds[1] >= thresholds[2] and math.isfinite(thresholds[0])
    record_criterion("6", ok, f"minimal R with SEPI > 1e-4 for n=3,4,5: {thresholds}")
    assert ok


# 7 -------------------------------------------------------------------------

def fundamental_period(t, c):
    """Period of the lowest significant spectral line of a sampled trace."""
    dt = t[1] - t[0]
    y = (c - np.polyval(np.polyfit(t, c, 1), t)) * np.hanning(len(c))
    n = 16 * len(y)
    amp = np.abs(np.fft.rfft(y, n))
    freq = np.fft.rfftfreq(n, dt)
    floor = 2.0 / (t[-1] - t[0])
    peaks = [i for i in range(1, len(amp) - 1)
             if amp[i] > amp[i - 1] and amp[i] >= amp[i + 1] and freq[i] > floor and amp[i] >= 0.2 * amp.max()]
    return 1.0 / freq[peaks[0]]


def _trace(res, scenario, D):
    rows = _finite_rows(res.select(scenario=scenario, D=D))
    return np.array([r["t"] for r in rows]), np.array([r["coherence_l1"] for r in rows])


def test_criterion_07_coherence_phenomenology(presets):
    res = presets("fig4")
    details, ok = [], True
    peaks = {}
    for n in (3, 5):
        name = f"fig4/maximally_connected_n{n}_R20"
        d_opt = max(r["D"] for r in res.select(scenario=name))
        t, c0 = _trace(res, name, 0.0)
        _, cd = _trace(res, name, d_opt)
        period = fundamental_period(t, c0)
        threshold = 0.05 * c0.max()
        k = int(np.argmax(cd))
        below = np.flatnonzero(cd[k:] < threshold)
        t_cross = t[k + below[0]] if below.size else math.inf
        ok &= t_cross < period
        peaks[n] = cd.max()
        details.append(f"n={n}: D_opt={d_opt:.3g}, below 5% at t={t_cross:.4g} vs period {period:.4g}")

    nc = "fig4/noncritical_n5_R500"
    d_nc = max(r["D"] for r in res.select(scenario=nc))
    _, c_nc = _trace(res, nc, d_nc)
    nc_sepi = [r["sepi"] for r in res.select(scenario=nc) if not math.isfinite(r["t"]) and r["D"] > 0][0]
    comparable = c_nc.max() >= 0.9 * peaks[5]
    ok &= comparable and nc_sepi <= 1e-6
    details.append(f"non-critical R=500 at D={d_nc:.3g}: peak {c_nc.max():.3g} vs {peaks[5]:.3g}, SEPI {nc_sepi:.3g}")
    record_criterion("7", ok, "; ".join(details))
    assert ok


# 8 -------------------------------------------------------------------------

def test_criterion_08_thermal_transient(presets):
    res = presets("fig5")
    transient = max(r["sepi"] for r in _finite_rows(res.rows) if 0 < r["t"])
    steady = [r for r in res.rows if not math.isfinite(r["t"])]
    worst_ss = max(abs(r["sepi"]) for r in steady)
    min_sep = min(r["sep"] for r in steady)
    ok = transient > ENAQT_TOL and worst_ss < 1e-4
    record_criterion("8", ok, f"max transient SEPI {transient:.3g}, max |SEPI| at steady state {worst_ss:.1e}, "
                              f"steady SEP >= {min_sep:.6f}")
    assert ok


# 9 -------------------------------------------------------------------------

def _markovian_points():
    """Distinct generators with Q = 0 and no system-ancilla exchange across all presets."""
    seen = set()
    for name in list_presets():
        for scen in preset_scenarios(name):
            if scen.coupling_mode is not CouplingMode.COHERENT:
                continue
            for point in scen.grid_points():
                params = resolve_params(scen.params, point)
                if params.Q != 0 or params.D not in (0.0, max(scen.sweep.get("D", (0.0,)))):
                    continue
                key = repr((scen.network.to_dict(), params.to_dict()))
                if key not in seen:
                    seen.add(key)
                    yield scen.network, params


def test_criterion_09_markovian_contractivity():
    rng = np.random.default_rng(2024)
    worst_step, worst_w, count = -math.inf, 0.0, 0
    for net, params in _markovian_points():
        gen = build_generator(net, params)
        pair = random_orthogonal_pair(gen.register, rng, Probe.FULL)
        t_final = min(1.0, 20.0 / max(1.0, params.J))
        res = nonmarkov_witness(gen, pair, t_final, 60)
        worst_step = max(worst_step, np.diff(res.distance).max())
        worst_w = max(worst_w, res.value)
        count += 1
    ok = worst_step <= 1e-8 and worst_w <= 1e-9
    record_criterion("9", ok, f"{count} Q=0, Gamma=0 generators: largest distance step {worst_step:.1e}, "
                              f"largest witness {worst_w:.1e}")
    assert ok


# 10 ------------------------------------------------------------------------

def test_criterion_10_non_markovian_revivals(presets):
    res8 = presets("fig8")
    w_anc = res8.select(scenario="fig8/ancilla_seeded")[-1]["witness"]
    res9 = presets("fig9")
    rows = res9.select(scenario="fig9/witness_vs_Q")
    by_q = {}
    for r in rows:
        by_q[r["Q"]] = r["witness"]
    qs = sorted(by_q)
    ws = [by_q[q] for q in qs]
    growing = all(b > a for a, b in zip(ws, ws[1:]))
    ok = w_anc > 1e-3 and growing
    record_criterion("10", ok, f"ancilla-seeded witness {w_anc:.3g}; mixed witness for Q={qs}: "
                               + ", ".join(f"{w:.3g}" for w in ws))
    assert ok


# 11 ------------------------------------------------------------------------

def test_criterion_11_ancilla_thresholds(presets):
    res = presets("thresholds")
    r_none = _min_R_with_enaqt(res, "thresholds/none")[0]
    r_coh = _min_R_with_enaqt(res, "thresholds/coherent")[0]
    r_inc = _min_R_with_enaqt(res, "thresholds/incoherent")[0]
    ok = r_coh <= r_none <= r_inc and math.isfinite(r_none)
    record_criterion("11", ok, f"minimal R: coherent ancilla {r_coh}, no ancilla {r_none}, incoherent ancilla {r_inc}")
    assert ok


# 12 ------------------------------------------------------------------------

def _csv_bytes(result, tmp_path, tag):
    return emit_csv(result, tmp_path / f"{tag}.csv").read_bytes()


def test_criterion_12_determinism(presets, tmp_path):
    net = build_archetype(Archetype.LOOP, 3, AncillaWiring.communal(3, True))
    scen = Scenario("determinism", net, ModelParams(J=3.0, Q=2.0), sweep={"D": (0.0, 0.5, 2.0), "t": (0.0, 0.5, 1.0)},
                    outputs=("sep", "sepi", "coherence_l1", "witness"), steady_state=True, seed=11)
    scen = replace(scen, witness=replace(scen.witness, seed_on="random"))
    runs = [_csv_bytes(run_scenario(scen, threads), tmp_path, f"s{threads}_{i}")
            for i, threads in enumerate((1, 1, 2, 3))]
    serial = _csv_bytes(presets("thresholds"), tmp_path, "thr1")
    parallel = _csv_bytes(merge_results([run_scenario(s, 2) for s in preset_scenarios("thresholds")]), tmp_path, "thr2")
    ok = all(r == runs[0] for r in runs) and serial == parallel
    record_criterion("12", ok, f"{len(runs)} runs of a seeded scenario at 1-3 workers and a preset serial vs parallel "
                               f"{'identical' if ok else 'differ'}")
    assert ok
