"""Hamiltonian and Lindblad generator assembly for transport networks.

All energies and rates are in units of the bare qubit frequency. Every
unordered edge of the system graph contributes ``J * sigma^i . sigma^j`` once.
The sink appears only through its absorbing jump operator.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from enum import Enum
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .operators import (
    SIGMA_MINUS,
    SIGMA_PLUS,
    SIGMA_Z,
    Register,
    embed,
    embed_product,
    heisenberg_term,
)
from .topology import NetworkSpec

MAX_SUPEROPERATOR_DIM = 128


class CouplingMode(str, Enum):
    COHERENT = "coherent"
    INCOHERENT = "incoherent"
    MIXED = "mixed"


def thermal_occupation(beta: float) -> float:
    """Bose occupation 1/(e^beta - 1) of a bath at inverse temperature beta."""
    if beta <= 0 or math.isnan(beta):
        raise ValueError("beta must be positive")
    if math.isinf(beta):
        return 0.0
    return 1.0 / math.expm1(beta)


@dataclass(frozen=True)
class ModelParams:
    """Couplings, rates and bath occupations.

    ``N`` holds one occupation per system site; a scalar is broadcast and
    ``None`` means a cold bath everywhere.
    """

    J: float = 1.0
    Q: float = 0.0
    D: float = 0.0
    gamma_up: float = 1.0
    gamma_down: float = 1.0
    N: tuple[float, ...] | float | None = None
    gamma_A_up: float = 1.0
    gamma_A_down: float = 1.0
    N_A: float = 0.0
    Gamma_up: float = 0.0
    Gamma_down: float = 0.0
    gamma_S: float = 1.0

    _RATES = ("D", "gamma_up", "gamma_down", "gamma_A_up", "gamma_A_down", "N_A", "Gamma_up", "Gamma_down", "gamma_S")

    def __post_init__(self):
        for name in ("J", "Q") + self._RATES:
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite, got {v}")
        for name in self._RATES:
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative, got {getattr(self, name)}")
        if self.N is not None:
            occ = (float(self.N),) if np.isscalar(self.N) else tuple(float(x) for x in self.N)
            if any(x < 0 or not math.isfinite(x) for x in occ):
                raise ValueError("thermal occupations must be finite and non-negative")
            object.__setattr__(self, "N", occ if not np.isscalar(self.N) else float(self.N))

    @property
    def R(self) -> float:
        """Coherent-to-loss ratio J / gamma_down (inf without loss)."""
        return math.inf if self.gamma_down == 0 else self.J / self.gamma_down

    def with_R(self, R: float) -> "ModelParams":
        return replace(self, J=R * self.gamma_down)

    def occupations(self, n_sites: int) -> tuple[float, ...]:
        if self.N is None:
            return (0.0,) * n_sites
        if isinstance(self.N, float):
            return (self.N,) * n_sites
        if len(self.N) != n_sites:
            raise ValueError(f"{len(self.N)} occupations given for {n_sites} sites")
        return self.N

    def to_dict(self) -> dict:
        out = {f.name: getattr(self, f.name) for f in fields(self)}
        if isinstance(out["N"], tuple):
            out["N"] = list(out["N"])
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "ModelParams":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown parameter(s): {sorted(unknown)}")
        kw = dict(d)
        if isinstance(kw.get("N"), list):
            kw["N"] = tuple(kw["N"])
        return cls(**kw)


def register_for(spec: NetworkSpec) -> Register:
    return Register(spec.n_sites, spec.n_ancillas, has_sink=True)


def build_hamiltonian(spec: NetworkSpec, params: ModelParams, register: Register | None = None) -> np.ndarray:
    reg = register or register_for(spec)
    if reg.n_system != spec.n_sites or reg.n_ancilla != spec.n_ancillas:
        raise ValueError("register does not match the network")
    H = np.zeros((reg.dim, reg.dim), dtype=complex)
    for q in reg.system_qubits + reg.ancilla_qubits:
        H += embed(SIGMA_Z, q, reg)
    if params.J != 0:
        for i, j in spec.edges:
            H += params.J * heisenberg_term(i, j, reg)
    if spec.ancilla is not None and params.Q != 0:
        pairs = spec.ancilla.pairs()
        if not pairs:
            raise ValueError("coherent ancilla coupling requested with an empty wiring")
        for i, a in pairs:
            H += params.Q * heisenberg_term(i, reg.ancilla_qubit(a), reg)
    return H


@dataclass(frozen=True, eq=False)
class Jump:
    """A Lindblad channel rate * (L rho L^+ - {L^+ L, rho}/2)."""

    operator: np.ndarray
    rate: float
    channel: str
    label: str


@dataclass(frozen=True, eq=False)
class Generator:
    register: Register
    hamiltonian: np.ndarray
    jumps: tuple[Jump, ...]
    channels: frozenset[str]
    network: NetworkSpec | None = None
    params: ModelParams | None = None
    coupling_mode: CouplingMode = CouplingMode.COHERENT

    @cached_property
    def _effective(self):
        Heff = self.hamiltonian.astype(complex, copy=True)
        sparse_jumps = []
        d = self.dim
        # row-major vec(L rho L^+) = (L kron conj(L)) vec(rho); one matvec covers every jump
        recycle = sp.csr_matrix((d * d, d * d), dtype=complex)
        for j in self.jumps:
            L = sp.csr_matrix(j.operator)
            Ld = L.conj().T.tocsr()
            Heff -= 0.5j * j.rate * (Ld @ L).toarray()
            sparse_jumps.append((j.rate, L, Ld))
            recycle = recycle + j.rate * sp.kron(L, L.conj(), format="csr")
        return Heff, Heff.conj().T.copy(), tuple(sparse_jumps), recycle.tocsr()

    @property
    def dim(self) -> int:
        return self.register.dim

    def apply(self, rho: np.ndarray) -> np.ndarray:
        """Time derivative of rho, without forming the superoperator."""
        if rho.shape != (self.dim, self.dim):
            raise ValueError(f"state has shape {rho.shape}, generator acts on dim {self.dim}")
        Heff, Heff_dag, _, recycle = self._effective
        rho = np.ascontiguousarray(rho)
        out = -1j * (Heff @ rho - rho @ Heff_dag)
        out += (recycle @ rho.reshape(-1)).reshape(rho.shape)
        return out

    __call__ = apply

    def superoperator(self) -> sp.csc_matrix:
        """Sparse dim^2 x dim^2 matrix acting on column-stacked vec(rho)."""
        d = self.dim
        if d > MAX_SUPEROPERATOR_DIM:
            raise ValueError(f"superoperator limited to dim <= {MAX_SUPEROPERATOR_DIM}, got {d}")
        eye = sp.identity(d, dtype=complex, format="csr")
        Heff, _, sparse_jumps, _ = self._effective
        Hs = sp.csr_matrix(Heff)
        # vec(A X B) = (B^T kron A) vec(X)
        L = -1j * (sp.kron(eye, Hs) - sp.kron(Hs.conj(), eye))
        for rate, J, _ in sparse_jumps:
            L = L + rate * sp.kron(J.conj(), J)
        return L.tocsc()

    def positive_rates(self) -> list[float]:
        return [j.rate for j in self.jumps if j.rate > 0]

    def without(self, channel: str) -> "Generator":
        return replace(
            self,
            jumps=tuple(j for j in self.jumps if j.channel != channel),
            channels=self.channels - {channel},
        )


def build_generator(
    spec: NetworkSpec,
    params: ModelParams,
    coupling_mode: CouplingMode | str = CouplingMode.COHERENT,
) -> Generator:
    """Assemble -i[H, .] plus dephasing, local damping, sink, ancilla damping
    and (incoherent/mixed modes) system-ancilla exchange.

    Channels with zero rate are left out of the jump list entirely.
    """
    mode = CouplingMode(coupling_mode)
    reg = register_for(spec)
    anc = spec.ancilla
    if mode is not CouplingMode.COHERENT and (anc is None or not anc.pairs()):
        raise ValueError(f"{mode.value} coupling needs a wired ancilla")

    Q = 0.0 if mode is CouplingMode.INCOHERENT else params.Q
    H = build_hamiltonian(spec, replace(params, Q=Q), reg)
    occ = params.occupations(spec.n_sites)
    jumps: list[Jump] = []

    def add(op, rate, channel, label):
        if rate > 0:
            jumps.append(Jump(op, float(rate), channel, label))

    for i in reg.system_qubits:
        add(embed(SIGMA_Z, i, reg), params.D, "deph", f"deph[{i}]")
    for i in reg.system_qubits:
        add(embed(SIGMA_PLUS, i, reg), params.gamma_up * occ[i], "damp", f"pump[{i}]")
        add(embed(SIGMA_MINUS, i, reg), params.gamma_down * (occ[i] + 1), "damp", f"loss[{i}]")
    if anc is not None and anc.open_to_environment:
        for a, q in enumerate(reg.ancilla_qubits):
            add(embed(SIGMA_PLUS, q, reg), params.gamma_A_up * params.N_A, "ancilla_damp", f"anc_pump[{a}]")
            add(embed(SIGMA_MINUS, q, reg), params.gamma_A_down * (params.N_A + 1), "ancilla_damp", f"anc_loss[{a}]")
    sink_op = embed_product({reg.sink_qubit: SIGMA_PLUS, spec.sink_site: SIGMA_MINUS}, reg)
    add(sink_op, params.gamma_S, "sink", "sink")
    if mode is not CouplingMode.COHERENT:
        for i, a in anc.pairs():
            q = reg.ancilla_qubit(a)
            add(embed_product({i: SIGMA_PLUS, q: SIGMA_MINUS}, reg), params.Gamma_up, "sa_exchange", f"sa_up[{i},{a}]")
            add(embed_product({i: SIGMA_MINUS, q: SIGMA_PLUS}, reg), params.Gamma_down, "sa_exchange", f"sa_down[{i},{a}]")

    return Generator(
        register=reg,
        hamiltonian=H,
        jumps=tuple(jumps),
        channels=frozenset(j.channel for j in jumps),
        network=spec,
        params=params,
        coupling_mode=mode,
    )
