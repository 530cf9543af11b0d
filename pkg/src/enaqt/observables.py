"""Figures of merit: SEP, SEPI, l1-coherence, trace distance, partial trace."""
from __future__ import annotations

import numpy as np

from .operators import Register

_PROB_TOL = 1e-9


def _n_qubits(rho: np.ndarray) -> int:
    d = rho.shape[0]
    n = d.bit_length() - 1
    if rho.shape != (d, d) or 2**n != d:
        raise ValueError(f"not a qubit-register operator: shape {rho.shape}")
    return n


def partial_trace(rho: np.ndarray, keep) -> np.ndarray:
    """Reduced state on the qubits in ``keep`` (kept in ascending order)."""
    n = _n_qubits(rho)
    keep = sorted(set(int(q) for q in keep))
    if not keep:
        raise ValueError("keep must name at least one qubit")
    if keep[0] < 0 or keep[-1] >= n:
        raise IndexError(f"qubit indices {keep} out of range for {n} qubits")
    t = rho.reshape((2,) * (2 * n))
    row = list(range(n))
    col = [q + n if q in keep else q for q in range(n)]
    out_idx = keep + [q + n for q in keep]
    red = np.einsum(t, row + col, out_idx)
    dk = 2 ** len(keep)
    return red.reshape(dk, dk)


def sep(rho: np.ndarray, register: Register) -> float:
    """Sink excitation probability <up|Tr_SA(rho)|up> on the sink qubit."""
    if not register.has_sink:
        raise ValueError("register has no sink")
    if rho.shape != (register.dim, register.dim):
        raise ValueError("state does not match the register")
    q = register.sink_qubit
    n = register.n_qubits
    diag = np.real(np.diagonal(rho)).reshape(2**q, 2, 2 ** (n - q - 1))
    return float(diag[:, 0, :].sum())


def sepi(sep_at_D: float, sep_at_zero: float) -> float:
    """Improvement of SEP over the dephasing-free value."""
    for v in (sep_at_D, sep_at_zero):
        if not -_PROB_TOL <= v <= 1 + _PROB_TOL:
            raise ValueError(f"SEP value {v} outside [0, 1]")
    return sep_at_D - sep_at_zero


def coherence_l1(rho: np.ndarray) -> float:
    """Sum of the moduli of all off-diagonal entries."""
    a = np.abs(rho)
    return float(a.sum() - np.trace(a))


def system_coherence(rho: np.ndarray, register: Register) -> float:
    """l1-coherence of the reduced state of the system sites only."""
    return coherence_l1(partial_trace(rho, register.system_qubits))


def trace_distance(rho1: np.ndarray, rho2: np.ndarray) -> float:
    if rho1.shape != rho2.shape:
        raise ValueError(f"shape mismatch: {rho1.shape} vs {rho2.shape}")
    diff = rho1 - rho2
    diff = 0.5 * (diff + diff.conj().T)
    return float(0.5 * np.abs(np.linalg.eigvalsh(diff)).sum())
