"""Scenario sweeps and result emission (CSV, SVG)."""
from __future__ import annotations

import csv
import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from functools import partial
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np
from threadpoolctl import threadpool_limits

from . import __version__
from .dynamics import (
    IntegratorOptions,
    SteadyStateMethod,
    density_residuals,
    evolve,
    initial_state,
    merge_residuals,
    steady_state,
)
from .generator import CouplingMode, ModelParams, build_generator
from .observables import coherence_l1, sep, system_coherence
from .topology import NetworkSpec
from .witness import Probe, nonmarkov_witness, orthogonal_pair, random_orthogonal_pair

SWEEP_AXES = ("R", "Q", "Gamma_ratio", "D", "t")
OUTPUTS = ("sep", "sepi", "coherence_l1", "witness")
COLUMNS = ("scenario", "D", "R", "Q", "Gamma_up", "Gamma_down", "t", "sep", "sepi", "coherence_l1", "witness")
WITNESS_OPTIONS = IntegratorOptions(rel_tol=1e-10, abs_tol=1e-12)


class ScenarioError(RuntimeError):
    pass


@dataclass(frozen=True)
class WitnessConfig:
    """Which orthogonal pair to follow; ``random`` draws a seeded pair on the full register."""

    seed_on: str = "ancilla"
    t_final: float = 5.0
    points: int = 400

    def __post_init__(self):
        if self.seed_on not in ("ancilla", "system", "random"):
            raise ValueError(f"unknown witness seed location {self.seed_on!r}")
        if self.points < 2 or not self.t_final > 0:
            raise ValueError("witness needs t_final > 0 and at least two grid points")


@dataclass(frozen=True, eq=False)
class Scenario:
    name: str
    network: NetworkSpec
    params: ModelParams = field(default_factory=ModelParams)
    coupling_mode: CouplingMode = CouplingMode.COHERENT
    sweep: dict = field(default_factory=dict)
    outputs: tuple[str, ...] = ("sep", "sepi", "coherence_l1")
    seed: int = 0
    witness: WitnessConfig | None = None
    coherence_subsystem: str = "full"
    steady_state: bool | None = None
    steady_state_method: SteadyStateMethod = SteadyStateMethod.AUTO
    integrator: IntegratorOptions = field(default_factory=IntegratorOptions)
    description: str = ""

    def __post_init__(self):
        object.__setattr__(self, "coupling_mode", CouplingMode(self.coupling_mode))
        object.__setattr__(self, "steady_state_method", SteadyStateMethod(self.steady_state_method))
        sweep = {}
        for name in self.sweep:
            if name not in SWEEP_AXES:
                raise ScenarioError(f"unknown sweep parameter {name!r}; expected one of {SWEEP_AXES}")
        for name in SWEEP_AXES:
            if name not in self.sweep:
                continue
            grid = [float(v) for v in self.sweep[name]]
            if not grid:
                raise ScenarioError(f"sweep grid for {name} is empty")
            if any(b <= a for a, b in zip(grid, grid[1:])):
                raise ScenarioError(f"sweep grid for {name} must be strictly increasing")
            if name == "t" and grid[0] < 0:
                raise ScenarioError("time grid must be non-negative")
            sweep[name] = tuple(grid)
        # SEPI is defined against D = 0, so every D sweep carries it
        if "D" in sweep and sweep["D"][0] > 0:
            sweep["D"] = (0.0,) + sweep["D"]
        elif "D" in sweep and sweep["D"][0] < 0:
            raise ScenarioError("dephasing rates must be non-negative")
        object.__setattr__(self, "sweep", sweep)
        bad = set(self.outputs) - set(OUTPUTS)
        if bad:
            raise ScenarioError(f"unknown outputs {sorted(bad)}")
        object.__setattr__(self, "outputs", tuple(self.outputs))
        if "witness" in self.outputs and self.witness is None:
            object.__setattr__(self, "witness", WitnessConfig())
        if self.coherence_subsystem not in ("full", "system"):
            raise ScenarioError("coherence_subsystem must be 'full' or 'system'")
        if "Gamma_ratio" in sweep and self.params.Gamma_up <= 0:
            raise ScenarioError("a Gamma_ratio sweep needs Gamma_up > 0")

    @property
    def include_steady_state(self) -> bool:
        return "t" not in self.sweep if self.steady_state is None else bool(self.steady_state)

    def grid_points(self) -> list[dict]:
        axes = [a for a in SWEEP_AXES if a in self.sweep and a != "t"]
        return [dict(zip(axes, vals)) for vals in itertools.product(*(self.sweep[a] for a in axes))]

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "description": self.description,
            "network": self.network.to_dict(),
            "params": self.params.to_dict(),
            "coupling_mode": self.coupling_mode.value,
            "sweep": {k: list(v) for k, v in self.sweep.items()},
            "outputs": list(self.outputs),
            "seed": self.seed,
            "witness": None if self.witness is None else asdict(self.witness),
            "coherence_subsystem": self.coherence_subsystem,
            "steady_state": self.include_steady_state,
            "steady_state_method": self.steady_state_method.value,
            "integrator": asdict(self.integrator),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ScenarioError(f"unknown scenario key(s): {sorted(unknown)}")
        w = d.get("witness")
        return cls(
            name=d["name"],
            network=NetworkSpec.from_dict(d["network"]),
            params=ModelParams.from_dict(d.get("params", {})),
            coupling_mode=d.get("coupling_mode", "coherent"),
            sweep=d.get("sweep", {}),
            outputs=tuple(d.get("outputs", ("sep", "sepi", "coherence_l1"))),
            seed=int(d.get("seed", 0)),
            witness=None if w is None else WitnessConfig(**w),
            coherence_subsystem=d.get("coherence_subsystem", "full"),
            steady_state=d.get("steady_state"),
            steady_state_method=d.get("steady_state_method", "auto"),
            integrator=IntegratorOptions(**d.get("integrator", {})),
            description=d.get("description", ""),
        )


@dataclass
class SweepResult:
    rows: list[dict]
    metadata: dict
    distance_series: list[dict] = field(default_factory=list)

    def column(self, name: str, **where) -> np.ndarray:
        """Values of one column over the rows matching ``where``."""
        out = [r[name] for r in self.rows if all(r.get(k) == v for k, v in where.items())]
        return np.array([np.nan if v is None else v for v in out], dtype=object if name == "scenario" else float)

    def select(self, **where) -> list[dict]:
        return [r for r in self.rows if all(r.get(k) == v for k, v in where.items())]


def merge_results(results: list[SweepResult]) -> SweepResult:
    rows, series, metas = [], [], []
    for r in results:
        rows.extend(r.rows)
        series.extend(r.distance_series)
        metas.append(r.metadata)
    inv: dict = {}
    for m in metas:
        inv = merge_residuals(inv, m.get("invariants", {})) if m.get("invariants") else inv
    return SweepResult(rows, {"code_version": __version__, "invariants": inv, "scenarios": metas}, series)


def resolve_params(base: ModelParams, point: dict) -> ModelParams:
    p = base
    if "R" in point:
        p = p.with_R(point["R"])
    if "Q" in point:
        p = replace(p, Q=point["Q"])
    if "Gamma_ratio" in point:
        p = replace(p, Gamma_down=point["Gamma_ratio"] * p.Gamma_up)
    if "D" in point:
        p = replace(p, D=point["D"])
    return p


def _effective_columns(params: ModelParams, mode: CouplingMode) -> dict:
    coherent_q = mode is not CouplingMode.INCOHERENT
    exchange = mode is not CouplingMode.COHERENT
    return {
        "D": params.D,
        "R": params.R,
        "Q": params.Q if coherent_q else 0.0,
        "Gamma_up": params.Gamma_up if exchange else 0.0,
        "Gamma_down": params.Gamma_down if exchange else 0.0,
    }


def _evaluate_point(scenario: Scenario, point: dict) -> dict:
    with threadpool_limits(1):
        try:
            return _evaluate_point_inner(scenario, point)
        except Exception as exc:
            raise ScenarioError(f"{scenario.name} at {point}: {exc}") from exc


def _evaluate_point_inner(scenario: Scenario, point: dict) -> dict:
    params = resolve_params(scenario.params, point)
    net = scenario.network
    gen = build_generator(net, params, scenario.coupling_mode)
    reg = gen.register
    coherence = coherence_l1 if scenario.coherence_subsystem == "full" else partial(system_coherence, register=reg)
    rho0 = initial_state(net)
    opts = scenario.integrator
    times = scenario.sweep.get("t")
    records: list[tuple[float, float, float]] = []
    residuals: dict = {}

    if times is not None:
        traj = evolve(rho0, gen, max(times[-1], 1e-12), times, opts, coherence=coherence)
        records.extend(zip(traj.times.tolist(), traj.sep.tolist(), traj.coherence.tolist()))
        residuals = merge_residuals(residuals, traj.residuals)
    if scenario.include_steady_state:
        rho = steady_state(gen, scenario.steady_state_method, opts, rho0=rho0)
        records.append((math.inf, sep(rho, reg), coherence(rho)))
        residuals = merge_residuals(residuals, density_residuals(rho))

    witness_by_t: dict[float, float] = {}
    series = None
    if "witness" in scenario.outputs:
        wcfg = scenario.witness
        if wcfg.seed_on == "random":
            pair = random_orthogonal_pair(reg, np.random.default_rng(scenario.seed), Probe.FULL)
        else:
            pair = orthogonal_pair(net, wcfg.seed_on)
        if times is not None and len(times) >= 2:
            grid = np.asarray(times)
        else:
            grid = np.linspace(0.0, wcfg.t_final, wcfg.points)
        res = nonmarkov_witness(gen, pair, float(grid[-1]), grid, WITNESS_OPTIONS)
        witness_by_t = dict(zip(res.times.tolist(), res.cumulative().tolist()))
        witness_by_t[math.inf] = res.value
        series = {"times": res.times.tolist(), "distance": res.distance.tolist(), "probe": pair.probe.value}

    cols = _effective_columns(params, scenario.coupling_mode)
    rows = []
    for t, s, c in records:
        rows.append({
            "scenario": scenario.name,
            **cols,
            "t": t,
            "sep": s if "sep" in scenario.outputs or "sepi" in scenario.outputs else None,
            "sepi": None,
            "coherence_l1": c if "coherence_l1" in scenario.outputs else None,
            "witness": witness_by_t.get(t),
        })
    return {"point": point, "rows": rows, "residuals": residuals, "series": series}


def run_scenario(scenario: Scenario, threads: int = 1) -> SweepResult:
    """Evaluate every grid point; results are collected in grid order.

    Each point is independent (own generator and propagation), so a worker
    pool changes wall time only, never the numbers.
    """
    points = scenario.grid_points()
    task = partial(_evaluate_point, scenario)
    if threads > 1 and len(points) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(task, points))
    else:
        outcomes = [task(p) for p in points]

    rows = [row for o in outcomes for row in o["rows"]]
    _fill_sepi(scenario, outcomes)
    residuals: dict = {}
    for o in outcomes:
        if o["residuals"]:
            residuals = merge_residuals(residuals, o["residuals"])
    if "sep" not in scenario.outputs:
        for r in rows:
            r["sep"] = None
    series = []
    for o in outcomes:
        if o["series"] is not None:
            series.append({"scenario": scenario.name, **_effective_columns(
                resolve_params(scenario.params, o["point"]), scenario.coupling_mode), **o["series"]})
    meta = {
        "code_version": __version__,
        "scenario": scenario.to_dict(),
        "n_points": len(points),
        "invariants": residuals,
    }
    return SweepResult(rows, meta, series)


def _fill_sepi(scenario: Scenario, outcomes: list[dict]):
    if "sepi" not in scenario.outputs or "D" not in scenario.sweep:
        return
    reference = {}
    for o in outcomes:
        if o["point"]["D"] == 0.0:
            key = tuple((k, v) for k, v in o["point"].items() if k != "D")
            reference[key] = {r["t"]: r["sep"] for r in o["rows"]}
    for o in outcomes:
        key = tuple((k, v) for k, v in o["point"].items() if k != "D")
        ref = reference[key]
        for r in o["rows"]:
            r["sepi"] = r["sep"] - ref[r["t"]]


def optimal_dephasing(network: NetworkSpec, params: ModelParams, D_grid, mode=CouplingMode.COHERENT) -> float:
    """Grid value of D with the largest steady-state SEP."""
    scen = Scenario("dopt", network, params, mode, sweep={"D": list(D_grid)}, outputs=("sep",))
    res = run_scenario(scen)
    seps = res.column("sep")
    return float(res.column("D")[int(np.argmax(seps))])


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    v = float(v)
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return format(v, ".12g")


def emit_csv(result: SweepResult, path) -> Path:
    if not result.rows:
        raise ValueError("nothing to write: empty result")
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COLUMNS)
        for r in result.rows:
            w.writerow([_fmt(r[c]) for c in COLUMNS])
    return path


def emit_distance_csv(result: SweepResult, path) -> Path | None:
    if not result.distance_series:
        return None
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("scenario", "D", "R", "Q", "Gamma_up", "Gamma_down", "probe", "t", "trace_distance"))
        for s in result.distance_series:
            for t, d in zip(s["times"], s["distance"]):
                w.writerow([s["scenario"], *(_fmt(s[k]) for k in ("D", "R", "Q", "Gamma_up", "Gamma_down")),
                            s["probe"], _fmt(t), _fmt(d)])
    return path


_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf", "#7f7f7f", "#bcbd22")
_VALUE_COLUMNS = {"sep", "sepi", "coherence_l1", "witness"}


def _curves(result: SweepResult, x_axis: str, y_axis: str, log_x: bool):
    key_cols = [c for c in COLUMNS if c not in _VALUE_COLUMNS and c != x_axis]
    varying = [c for c in key_cols if len({r[c] for r in result.rows}) > 1]
    curves: dict[tuple, list[tuple[float, float]]] = {}
    for r in result.rows:
        x, y = r[x_axis], r[y_axis]
        if x is None or y is None or not math.isfinite(x) or not math.isfinite(y):
            continue
        if log_x and x <= 0:
            continue
        key = tuple((c, r[c]) for c in varying)
        curves.setdefault(key, []).append((x, y))
    return {k: sorted(v) for k, v in curves.items() if v}


def emit_svg(result: SweepResult, x_axis: str, y_axis: str, path, log_x: bool | None = None,
             width: int = 800, height: int = 500) -> Path:
    """Line chart with one polyline per curve family."""
    if not result.rows:
        raise ValueError("nothing to plot: empty result")
    for c in (x_axis, y_axis):
        if c not in COLUMNS:
            raise ValueError(f"unknown column {c!r}")
    if log_x is None:
        xs = [r[x_axis] for r in result.rows if isinstance(r[x_axis], float) and 0 < r[x_axis] < math.inf]
        log_x = x_axis in ("D", "R", "Q") and bool(xs) and max(xs) / min(xs) > 100
    curves = _curves(result, x_axis, y_axis, log_x)
    pts = [p for c in curves.values() for p in c]
    if not pts:
        raise ValueError(f"no finite ({x_axis}, {y_axis}) data to plot")
    tx = (lambda v: math.log10(v)) if log_x else (lambda v: v)
    x_lo, x_hi = min(tx(p[0]) for p in pts), max(tx(p[0]) for p in pts)
    y_lo, y_hi = min(p[1] for p in pts), max(p[1] for p in pts)
    if x_hi == x_lo:
        x_lo, x_hi = x_lo - 0.5, x_hi + 0.5
    if y_hi == y_lo:
        y_lo, y_hi = y_lo - 0.5, y_hi + 0.5
    ml, mr, mt, mb = 80, 220, 40, 60
    pw, ph = width - ml - mr, height - mt - mb

    def sx(v):
        return ml + (tx(v) - x_lo) / (x_hi - x_lo) * pw

    def sy(v):
        return mt + ph - (v - y_lo) / (y_hi - y_lo) * ph

    title = ", ".join(sorted({r["scenario"] for r in result.rows}))
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<text x="{ml}" y="{mt - 15}" font-size="13" font-family="sans-serif">{escape(title[:100])}</text>',
        f'<line x1="{ml}" y1="{mt + ph}" x2="{ml + pw}" y2="{mt + ph}" stroke="black"/>',
        f'<line x1="{ml}" y1="{mt}" x2="{ml}" y2="{mt + ph}" stroke="black"/>',
    ]
    for k in range(5):
        fx = x_lo + k / 4 * (x_hi - x_lo)
        fy = y_lo + k / 4 * (y_hi - y_lo)
        px = ml + k / 4 * pw
        py = mt + ph - k / 4 * ph
        xlabel = f"{10 ** fx:.3g}" if log_x else f"{fx:.3g}"
        out.append(f'<text x="{px:.1f}" y="{mt + ph + 18}" font-size="11" text-anchor="middle" '
                   f'font-family="sans-serif">{xlabel}</text>')
        out.append(f'<text x="{ml - 6}" y="{py + 4:.1f}" font-size="11" text-anchor="end" '
                   f'font-family="sans-serif">{fy:.3g}</text>')
    out.append(f'<text x="{ml + pw / 2:.1f}" y="{height - 15}" font-size="13" text-anchor="middle" '
               f'font-family="sans-serif">{escape(x_axis)}{" (log)" if log_x else ""}</text>')
    out.append(f'<text x="20" y="{mt + ph / 2:.1f}" font-size="13" text-anchor="middle" font-family="sans-serif" '
               f'transform="rotate(-90 20 {mt + ph / 2:.1f})">{escape(y_axis)}</text>')
    for n, (key, line) in enumerate(curves.items()):
        colour = _PALETTE[n % len(_PALETTE)]
        coords = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in line)
        out.append(f'<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{coords}"/>')
        label = ", ".join(f"{c}={_fmt(v)}" for c, v in key) or y_axis
        ly = mt + 14 * n
        out.append(f'<text x="{ml + pw + 10}" y="{ly + 4}" font-size="10" fill="{colour}" '
                   f'font-family="sans-serif">{escape(label[:40])}</text>')
    out.append("</svg>")
    path = Path(path)
    path.write_text("\n".join(out) + "\n")
    return path
