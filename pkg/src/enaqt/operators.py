"""Dense qubit-register operators.

Basis convention: index 0 of each qubit is the excited state |up>, the +1
eigenvector of sigma_z. Qubit 0 is the leftmost Kronecker factor. Register
layout is system sites, then ancillas, then the sink.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np

IDENTITY = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
# raising |up><down| and lowering |down><up|
SIGMA_PLUS = np.array([[0, 1], [0, 0]], dtype=complex)
SIGMA_MINUS = np.array([[0, 0], [1, 0]], dtype=complex)
PAULIS = (SIGMA_X, SIGMA_Y, SIGMA_Z)


@dataclass(frozen=True)
class Register:
    n_system: int
    n_ancilla: int = 0
    has_sink: bool = True

    def __post_init__(self):
        if self.n_system < 1 or self.n_ancilla < 0:
            raise ValueError("need n_system >= 1 and n_ancilla >= 0")

    @property
    def n_qubits(self) -> int:
        return self.n_system + self.n_ancilla + int(self.has_sink)

    @property
    def dim(self) -> int:
        return 2**self.n_qubits

    @property
    def system_qubits(self) -> tuple[int, ...]:
        return tuple(range(self.n_system))

    @property
    def ancilla_qubits(self) -> tuple[int, ...]:
        return tuple(range(self.n_system, self.n_system + self.n_ancilla))

    @property
    def sink_qubit(self) -> int | None:
        return self.n_qubits - 1 if self.has_sink else None

    def ancilla_qubit(self, a: int) -> int:
        if not 0 <= a < self.n_ancilla:
            raise IndexError(f"ancilla {a} out of range")
        return self.n_system + a


def embed(op: np.ndarray, qubit: int, register: Register) -> np.ndarray:
    """Lift a single-qubit operator to the full register."""
    op = np.asarray(op, dtype=complex)
    if op.shape != (2, 2):
        raise ValueError(f"expected a 2x2 operator, got shape {op.shape}")
    n = register.n_qubits
    if not 0 <= qubit < n:
        raise IndexError(f"qubit {qubit} out of range for {n}-qubit register")
    left = np.eye(2**qubit, dtype=complex)
    right = np.eye(2 ** (n - qubit - 1), dtype=complex)
    return np.kron(np.kron(left, op), right)


def embed_product(factors: dict[int, np.ndarray], register: Register) -> np.ndarray:
    """Tensor product of single-qubit operators on distinct qubits."""
    for q in factors:
        if not 0 <= q < register.n_qubits:
            raise IndexError(f"qubit {q} out of range")
    mats = [np.asarray(factors.get(q, IDENTITY), dtype=complex) for q in range(register.n_qubits)]
    return reduce(np.kron, mats)


def heisenberg_term(i: int, j: int, register: Register) -> np.ndarray:
    """sigma^i . sigma^j = XX + YY + ZZ on qubits i and j."""
    if i == j:
        raise ValueError("Heisenberg term needs two distinct qubits")
    return sum(embed_product({i: p, j: p}, register) for p in PAULIS)


def _check_pair(a, b):
    if a.shape != b.shape:
        raise ValueError(f"operator shapes differ: {a.shape} vs {b.shape}")


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    _check_pair(a, b)
    return a @ b - b @ a


def anticommutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    _check_pair(a, b)
    return a @ b + b @ a


def basis_index(register: Register, excited) -> int:
    """Computational-basis index of the product state with ``excited`` qubits up."""
    n = register.n_qubits
    idx = 2**n - 1
    for q in set(excited):
        if not 0 <= q < n:
            raise IndexError(f"qubit {q} out of range")
        idx -= 2 ** (n - 1 - q)
    return idx


def product_state(register: Register, excited=()) -> np.ndarray:
    """Projector onto the product state with the given qubits excited, all others down."""
    rho = np.zeros((register.dim, register.dim), dtype=complex)
    k = basis_index(register, excited)
    rho[k, k] = 1.0
    return rho
