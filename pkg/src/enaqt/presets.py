"""Built-in scenario sets reproducing the transport regimes.

Unless stated otherwise: gamma_down = gamma_up = gamma_S = 1, cold baths,
R varied through J, dephasing on a log grid from 1e-3 to 1e2 plus D = 0.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .dynamics import IntegratorOptions
from .experiments import (
    Scenario,
    SweepResult,
    WitnessConfig,
    merge_results,
    optimal_dephasing,
    run_scenario,
)
from .generator import CouplingMode, ModelParams
from .topology import AncillaWiring, Archetype, build_archetype

D_GRID = (0.0,) + tuple(float(x) for x in np.logspace(-3, 2, 26))
# fast oscillation of nearly pure states needs tighter steps to stay positive
TIGHT = IntegratorOptions(rel_tol=1e-10, abs_tol=1e-12)
R_SCAN = (0.1, 0.2, 0.3, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0)
BASE = ModelParams()


def _full(n: int, ancilla: AncillaWiring | None = None):
    return build_archetype(Archetype.MAXIMALLY_CONNECTED, n, ancilla)


def fig3a() -> list[Scenario]:
    return [
        Scenario(f"fig3a/{kind.value}", build_archetype(kind, 5), BASE, sweep={"R": (1, 5, 20), "D": D_GRID})
        for kind in Archetype
    ]


def fig3b() -> list[Scenario]:
    return [Scenario("fig3b/maximally_connected", _full(5), BASE, sweep={"R": (1, 5, 20), "D": D_GRID})]


def fig3c() -> list[Scenario]:
    return [Scenario(f"fig3c/n{n}", _full(n), BASE, sweep={"R": R_SCAN, "D": D_GRID}) for n in (3, 4, 5)]


def fig4() -> list[Scenario]:
    """Coherence transients at D = 0 and at the SEP-optimal D on the grid."""
    out = []
    for n in (3, 5):
        p = BASE.with_R(20)
        d_opt = optimal_dephasing(_full(n), p, D_GRID)
        out.append(Scenario(
            f"fig4/maximally_connected_n{n}_R20", _full(n), p,
            sweep={"D": (0.0, d_opt), "t": tuple(np.linspace(0.0, 0.3, 601))},
            steady_state=True,
            integrator=TIGHT,
            description=f"D_opt={d_opt:.6g}",
        ))
    p = BASE.with_R(500)
    d_opt = optimal_dephasing(_full(5), p, D_GRID)
    out.append(Scenario(
        "fig4/noncritical_n5_R500", build_archetype(Archetype.NON_CRITICAL, 5), p,
        sweep={"D": (0.0, d_opt), "t": tuple(np.linspace(0.0, 6.0 / 500, 601))},
        steady_state=True,
        integrator=TIGHT,
        description=f"D taken from the maximally connected optimum at R=500: {d_opt:.6g}",
    ))
    return out


def fig5() -> list[Scenario]:
    p = replace(BASE.with_R(5), N=(1.0, 0.0, 0.0, 0.0, 0.0))
    return [Scenario(
        "fig5/thermal_source", _full(5), p,
        sweep={"D": (0.0, 0.3, 1.0, 3.0, 10.0), "t": tuple(np.linspace(0.0, 20.0, 81))},
        steady_state=True,
    )]


def _wirings(n: int):
    for mode in ("communal", "individual"):
        for open_ in (False, True):
            wiring = AncillaWiring.communal(n, open_) if mode == "communal" else AncillaWiring.individual(n, open_to_environment=open_)
            yield f"{mode}_{'open' if open_ else 'isolated'}", wiring


def fig6() -> list[Scenario]:
    p = replace(BASE.with_R(20), Gamma_up=1.0)
    return [
        Scenario(f"fig6/{tag}", _full(3, wiring), p, CouplingMode.INCOHERENT,
                 sweep={"Gamma_ratio": (0.5, 1.0, 2.0), "D": D_GRID})
        for tag, wiring in _wirings(3)
    ]


def fig7() -> list[Scenario]:
    p = BASE.with_R(20)
    return [
        Scenario(f"fig7/communal_{'open' if o else 'isolated'}", _full(3, AncillaWiring.communal(3, o)), p,
                 sweep={"Q": (0.0, 1.0, 5.0, 10.0, 20.0, 40.0), "D": D_GRID})
        for o in (False, True)
    ]


def fig8() -> list[Scenario]:
    p = replace(BASE.with_R(20), Q=20.0)
    net = _full(3, AncillaWiring.communal(3))
    t = tuple(np.linspace(0.0, 2.0, 400))
    return [
        Scenario(f"fig8/{seed}_seeded", net, p, sweep={"t": t},
                 outputs=("sep", "coherence_l1", "witness"), witness=WitnessConfig(seed_on=seed))
        for seed in ("ancilla", "system")
    ]


def fig9() -> list[Scenario]:
    p = replace(BASE.with_R(20), Gamma_up=1.0)
    grid = [
        Scenario(f"fig9/communal_{'open' if o else 'isolated'}", _full(3, AncillaWiring.communal(3, o)), p,
                 CouplingMode.MIXED, sweep={"Q": (0.0, 1.0, 5.0, 20.0), "Gamma_ratio": (0.5, 1.0, 2.0), "D": D_GRID})
        for o in (False, True)
    ]
    witness = Scenario(
        "fig9/witness_vs_Q", _full(3, AncillaWiring.communal(3)), replace(p, Gamma_down=1.0), CouplingMode.MIXED,
        sweep={"Q": (0.1, 1.0, 10.0), "t": tuple(np.linspace(0.0, 2.0, 400))},
        outputs=("sep", "coherence_l1", "witness"), witness=WitnessConfig(seed_on="ancilla"),
    )
    return grid + [witness]


def thresholds() -> list[Scenario]:
    """3-site threshold comparison: no ancilla, coherent ancilla with Q = R, incoherent ancilla."""
    out = [Scenario("thresholds/none", _full(3), BASE, sweep={"R": R_SCAN, "D": D_GRID})]
    coh = _full(3, AncillaWiring.communal(3))
    # Q tracks R, so each R is its own scenario under one name
    out += [Scenario("thresholds/coherent", coh, replace(BASE.with_R(r), Q=r), sweep={"R": (r,), "D": D_GRID})
            for r in R_SCAN]
    inc = replace(BASE, Gamma_up=1.0, Gamma_down=1.0)
    out.append(Scenario("thresholds/incoherent", coh, inc, CouplingMode.INCOHERENT, sweep={"R": R_SCAN, "D": D_GRID}))
    return out


@dataclass(frozen=True)
class Preset:
    name: str
    build: Callable[[], list[Scenario]]
    x_axis: str
    y_axis: str
    summary: str


PRESETS = {p.name: p for p in (
    Preset("fig3a", fig3a, "D", "sep", "four 5-site archetypes, R in {1, 5, 20}"),
    Preset("fig3b", fig3b, "D", "sep", "5-site maximally connected, R in {1, 5, 20}"),
    Preset("fig3c", fig3c, "D", "sepi", "size scan 3-5 sites over an R grid"),
    Preset("fig4", fig4, "t", "coherence_l1", "coherence transients, including non-critical R=500"),
    Preset("fig5", fig5, "t", "sepi", "thermal source N_1 = 1, transient SEPI"),
    Preset("fig6", fig6, "D", "sepi", "incoherent ancilla, three ratios x communal/individual x open/isolated"),
    Preset("fig7", fig7, "D", "sepi", "coherent communal ancilla, Q sweep at R=20"),
    Preset("fig8", fig8, "t", "witness", "witness for ancilla- and system-seeded pairs, Q = R = 20"),
    Preset("fig9", fig9, "D", "sepi", "mixed coherent/incoherent ancilla grid and witness vs Q"),
    Preset("thresholds", thresholds, "D", "sepi", "3-site R thresholds with and without an ancilla"),
)}


def list_presets() -> list[str]:
    return list(PRESETS)


def preset_scenarios(name: str) -> list[Scenario]:
    try:
        return PRESETS[name].build()
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; available: {', '.join(PRESETS)}") from None


def run_preset(name: str, threads: int = 1, scenarios: list[Scenario] | None = None) -> SweepResult:
    scenarios = preset_scenarios(name) if scenarios is None else scenarios
    result = merge_results([run_scenario(s, threads) for s in scenarios])
    result.metadata["preset"] = name
    return result
