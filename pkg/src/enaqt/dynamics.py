"""Density-matrix propagation and steady states."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .generator import MAX_SUPEROPERATOR_DIM, Generator, register_for
from .observables import coherence_l1, sep
from .operators import product_state
from .topology import NetworkSpec

HERMITICITY_TOL = 1e-10
TRACE_TOL = 1e-9
POSITIVITY_TOL = 1e-8
STEADY_RESIDUAL_TOL = 1e-8


class IntegrationError(RuntimeError):
    def __init__(self, message: str, time: float):
        super().__init__(f"{message} (t = {time:.6g})")
        self.time = time


class InvariantViolation(RuntimeError):
    pass


class SteadyStateError(RuntimeError):
    pass


class SteadyStateMethod(str, Enum):
    AUTO = "auto"
    NULL_SPACE = "nullspace"
    LONG_TIME = "longtime"


@dataclass(frozen=True)
class IntegratorOptions:
    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    max_step: float = math.inf
    hermitize_each_step: bool = True
    check_invariants: bool = True

    def __post_init__(self):
        for name in ("rel_tol", "abs_tol"):
            v = getattr(self, name)
            if not 0 < v < 1:
                raise ValueError(f"{name} must lie in (0, 1), got {v}")
        if not self.max_step > 0:
            raise ValueError("max_step must be positive")


@dataclass
class Trajectory:
    times: np.ndarray
    sep: np.ndarray | None
    coherence: np.ndarray
    observables: dict[str, np.ndarray] = field(default_factory=dict)
    states: list[np.ndarray] | None = None
    residuals: dict[str, float] = field(default_factory=dict)

    def __len__(self):
        return len(self.times)


def density_residuals(rho: np.ndarray) -> dict[str, float]:
    """Distance of rho from being a unit-trace, Hermitian, positive matrix."""
    herm = float(np.max(np.abs(rho - rho.conj().T))) if rho.size else 0.0
    h = 0.5 * (rho + rho.conj().T)
    return {
        "trace_drift": abs(complex(np.trace(rho)) - 1.0),
        "hermiticity": herm,
        "min_eigenvalue": float(np.linalg.eigvalsh(h)[0]),
    }


def check_density_matrix(rho: np.ndarray, where: str = "") -> dict[str, float]:
    res = density_residuals(rho)
    problems = []
    if res["trace_drift"] >= TRACE_TOL:
        problems.append(f"trace drift {res['trace_drift']:.3g}")
    if res["hermiticity"] >= HERMITICITY_TOL:
        problems.append(f"hermiticity residual {res['hermiticity']:.3g}")
    if res["min_eigenvalue"] < -POSITIVITY_TOL:
        problems.append(f"min eigenvalue {res['min_eigenvalue']:.3g}")
    if problems:
        raise InvariantViolation(f"invalid density matrix{' ' + where if where else ''}: " + ", ".join(problems))
    return res


def merge_residuals(acc: dict[str, float], res: dict[str, float]) -> dict[str, float]:
    if not acc:
        return dict(res)
    return {
        "trace_drift": max(acc["trace_drift"], res["trace_drift"]),
        "hermiticity": max(acc["hermiticity"], res["hermiticity"]),
        "min_eigenvalue": min(acc["min_eigenvalue"], res["min_eigenvalue"]),
    }


def initial_state(spec: NetworkSpec) -> np.ndarray:
    """Source site excited; every other qubit (sites, ancillas, sink) down."""
    return product_state(register_for(spec), excited=[spec.source_site])


# Dormand-Prince 5(4) tableau with Shampine's continuous extension.
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
]
_B = np.array([35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
_E = np.array([-71 / 57600, 0, 71 / 16695, -71 / 1920, 17253 / 339200, -22 / 525, 1 / 40])
_P = np.array([
    [1, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0, 0, 0, 0],
    [0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])
_SAFETY, _MIN_FACTOR, _MAX_FACTOR = 0.9, 0.2, 10.0


def _rms(x: np.ndarray) -> float:
    return float(np.sqrt(np.mean(np.abs(x) ** 2)))


def _hermitize(rho: np.ndarray) -> np.ndarray:
    return 0.5 * (rho + rho.conj().T)


def _initial_step(f, y0, f0, opts: IntegratorOptions, span: float) -> float:
    scale = opts.abs_tol + opts.rel_tol * np.abs(y0)
    d0, d1 = _rms(y0 / scale), _rms(f0 / scale)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, span)
    f1 = f(y0 + h0 * f0)
    d2 = _rms((f1 - f0) / scale) / h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1, span, opts.max_step)


def integrate(
    f: Callable[[np.ndarray], np.ndarray],
    y0: np.ndarray,
    t_final: float,
    record_times,
    opts: IntegratorOptions,
    on_record: Callable[[float, np.ndarray], None],
):
    """Adaptive Dormand-Prince 5(4) for an autonomous matrix ODE.

    ``on_record`` receives the dense-output state at each requested time.
    """
    rec = np.asarray(record_times, dtype=float)
    k = 0
    t = 0.0
    y = _hermitize(y0) if opts.hermitize_each_step else y0.copy()
    while k < len(rec) and rec[k] <= 0.0:
        on_record(float(rec[k]), y.copy())
        k += 1
    if k == len(rec) or t_final <= 0:
        return
    fy = f(y)
    h = _initial_step(f, y, fy, opts, t_final)
    K = [None] * 7
    while k < len(rec):
        h = min(h, opts.max_step, t_final - t)
        if h <= 16 * np.finfo(float).eps * max(abs(t), 1.0):
            raise IntegrationError("step size underflow", t)
        K[0] = fy
        for s in range(1, 6):
            dy = sum(a * K[m] for m, a in enumerate(_A[s]) if a != 0)
            K[s] = f(y + h * dy)
        y_new = y + h * sum(b * K[m] for m, b in enumerate(_B) if b != 0)
        K[6] = f(y_new)
        err = h * sum(e * K[m] for m, e in enumerate(_E) if e != 0)
        scale = opts.abs_tol + opts.rel_tol * np.maximum(np.abs(y), np.abs(y_new))
        err_norm = _rms(err / scale)
        if err_norm > 1.0:
            h *= max(_MIN_FACTOR, _SAFETY * err_norm ** -0.2)
            continue
        t_new = t + h
        if t_final - t_new < 1e-12 * max(1.0, t_final):
            t_new = t_final
        while k < len(rec) and rec[k] <= t_new:
            theta = (rec[k] - t) / h
            powers = np.array([theta, theta**2, theta**3, theta**4])
            coeff = _P @ powers
            yk = y + h * sum(c * K[m] for m, c in enumerate(coeff) if c != 0)
            if opts.hermitize_each_step:
                yk = _hermitize(yk)
            on_record(float(rec[k]), yk)
            k += 1
        if opts.hermitize_each_step:
            y_new = _hermitize(y_new)
        y, fy, t = y_new, K[6], t_new
        if t >= t_final:
            while k < len(rec):
                on_record(float(rec[k]), y.copy())
                k += 1
            return
        factor = _MAX_FACTOR if err_norm == 0 else min(_MAX_FACTOR, _SAFETY * err_norm ** -0.2)
        h *= factor


def evolve(
    rho0: np.ndarray,
    gen: Generator,
    t_final: float,
    record_times=None,
    opts: IntegratorOptions | None = None,
    observables: dict[str, Callable[[np.ndarray], float]] | None = None,
    keep_states: bool = False,
    coherence: Callable[[np.ndarray], float] | None = None,
) -> Trajectory:
    """Propagate rho0 under ``gen`` and record observables at ``record_times``.

    SEP and l1-coherence are always recorded; extra scalar observables can be
    passed by name. Each recorded state is validated unless disabled in opts.
    """
    opts = opts or IntegratorOptions()
    if not t_final > 0:
        raise ValueError("t_final must be positive")
    times = np.linspace(0.0, t_final, 401) if record_times is None else np.asarray(record_times, dtype=float)
    if times.ndim != 1 or len(times) == 0:
        raise ValueError("record_times must be a non-empty 1-d sequence")
    if (np.diff(times) <= 0).any():
        raise ValueError("record_times must be strictly increasing")
    if times[0] < 0 or times[-1] > t_final * (1 + 1e-12):
        raise ValueError("record_times must lie in [0, t_final]")
    if rho0.shape != (gen.dim, gen.dim):
        raise ValueError("initial state does not match the generator dimension")
    if opts.check_invariants:
        check_density_matrix(rho0, "at t = 0")

    observables = observables or {}
    coherence = coherence or coherence_l1
    reg = gen.register
    seps, cohs, states = [], [], []
    extra = {name: [] for name in observables}
    residuals: dict[str, float] = {}

    def record(t, rho):
        nonlocal residuals
        if opts.check_invariants:
            residuals = merge_residuals(residuals, check_density_matrix(rho, f"at t = {t:.6g}"))
        if reg.has_sink:
            seps.append(sep(rho, reg))
        cohs.append(coherence(rho))
        for name, fn in observables.items():
            extra[name].append(fn(rho))
        if keep_states:
            states.append(rho)

    integrate(gen.apply, np.asarray(rho0, dtype=complex), float(t_final), times, opts, record)
    return Trajectory(
        times=times,
        sep=np.array(seps) if reg.has_sink else None,
        coherence=np.array(cohs),
        observables={k: np.array(v) for k, v in extra.items()},
        states=states if keep_states else None,
        residuals=residuals,
    )


def _kernel_projection(L: sp.csc_matrix, rho: np.ndarray, scale: float, max_iter: int = 60) -> np.ndarray:
    """Project rho onto ker(L) along the other eigenspaces.

    Iterates the shifted resolvent s (s - L)^-1, which fixes the kernel and
    shrinks every decaying or oscillating mode by |s / (s - lambda)|.
    """
    d = rho.shape[0]
    s = 1e-5 * scale
    lu = spla.splu((s * sp.identity(d * d, dtype=complex, format="csc") - L).tocsc())
    x = rho.reshape(-1, order="F").astype(complex)
    prev = math.inf
    for _ in range(max_iter):
        x_new = s * lu.solve(x)
        x_new /= np.trace(x_new.reshape(d, d, order="F"))
        delta = np.linalg.norm(x_new - x)
        x = x_new
        # below 1e-10 the only remaining change is roundoff in the kernel weights
        if delta < 1e-13 or (delta < 1e-10 and delta > 0.5 * prev):
            break
        prev = delta
    else:
        raise SteadyStateError("kernel projection did not converge (gap too small?)")
    return x.reshape(d, d, order="F")


def _longtime(gen: Generator, rho0: np.ndarray, opts: IntegratorOptions, tol: float, horizon: float) -> np.ndarray:
    rates = gen.positive_rates()
    chunk = 1.0 / min(rates) if rates else 1.0
    chunk = min(chunk, horizon)
    # integration error feeds straight into the residual, so step well below it
    opts = replace(opts, rel_tol=min(opts.rel_tol, 1e-2 * tol), abs_tol=min(opts.abs_tol, 1e-4 * tol))
    rho, t = rho0, 0.0
    while True:
        if np.linalg.norm(gen.apply(rho)) < tol:
            return rho
        if t >= horizon:
            raise SteadyStateError(f"no convergence within the time horizon t = {horizon:.4g}")
        step = min(chunk, horizon - t)
        out = []
        integrate(gen.apply, rho, step, [step], opts, lambda _t, r: out.append(r))
        rho, t = out[0], t + step


def steady_state(
    gen: Generator,
    method: SteadyStateMethod | str = SteadyStateMethod.AUTO,
    opts: IntegratorOptions | None = None,
    rho0: np.ndarray | None = None,
    tol: float = STEADY_RESIDUAL_TOL,
    horizon: float | None = None,
) -> np.ndarray:
    """Stationary state of ``gen``.

    With ``rho0`` the result is the long-time limit reached from rho0, which is
    what transport scenarios need: the sink makes the stationary set
    degenerate (it keeps whatever it absorbed). Without ``rho0`` the stationary
    state must be unique, otherwise SteadyStateError is raised.

    AUTO uses the null-space route whenever the superoperator fits the size
    guard, long-time integration otherwise.
    """
    method = SteadyStateMethod(method)
    opts = opts or IntegratorOptions()
    if method is SteadyStateMethod.AUTO:
        method = SteadyStateMethod.NULL_SPACE if gen.dim <= MAX_SUPEROPERATOR_DIM else SteadyStateMethod.LONG_TIME
    rates = gen.positive_rates()
    scale = min([1.0] + rates)

    if method is SteadyStateMethod.NULL_SPACE:
        L = gen.superoperator()
        if rho0 is not None:
            rho = _kernel_projection(L, rho0, scale)
        else:
            d = gen.dim
            rng = np.random.default_rng(0)
            v = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
            probe = v @ v.conj().T
            probe /= np.trace(probe)
            a = _kernel_projection(L, np.eye(d, dtype=complex) / d, scale)
            b = _kernel_projection(L, probe, scale)
            gap = 0.5 * np.abs(np.linalg.eigvalsh(_hermitize(a - b))).sum()
            if gap > 1e-6:
                raise SteadyStateError("steady state is not unique; pass rho0 to select one")
            rho = a
    else:
        if rho0 is None:
            rho0 = initial_state(gen.network) if gen.network is not None else np.eye(gen.dim, dtype=complex) / gen.dim
        if horizon is None:
            horizon = 50.0 / min(rates) if rates else 50.0
        rho = _longtime(gen, rho0, opts, tol, horizon)

    rho = _hermitize(rho)
    rho = rho / np.trace(rho).real
    resid = float(np.linalg.norm(gen.apply(rho)))
    if resid >= tol:
        raise SteadyStateError(f"stationarity residual {resid:.3g} exceeds {tol:.1g}")
    if opts.check_invariants:
        check_density_matrix(rho, "at steady state")
    return rho
