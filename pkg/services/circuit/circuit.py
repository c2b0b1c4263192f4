from collections import Counter
from dataclasses import dataclass
from functools import reduce

import numpy as np

from linalg import linalg
from util import ValidationError

from .gates import (
    CNOT,
    PARAMETRIC,
    FixedUnitary,
    ParamExp,
    ParamSingleQubit,
    frozen,
    gate_matrix,
    rotation,
    validate_gate,
)
from .space import ParameterPoint

STATE_NORM_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class Circuit:
    """
    An ansatz C(p_1, ..., p_k) acting on |iota>.
    Gates are listed in temporal order: later gates multiply from the left.
    """

    num_qubits: int
    gates: tuple
    num_params: int
    initial_state: np.ndarray
    param_names: tuple[str, ...] = ()

    def __post_init__(self):
        if self.num_qubits < 1:
            raise ValidationError("a circuit needs at least one qubit")
        state = np.asarray(self.initial_state)
        if state.shape != (self.dim,):
            raise ValidationError(f"initial state must have {self.dim} amplitudes, got {state.size}")
        if abs(np.linalg.norm(state) - 1) > STATE_NORM_TOL:
            raise ValidationError(f"initial state is not normalized (norm {np.linalg.norm(state):.15g})")
        for gate in self.gates:
            validate_gate(gate, self.num_qubits, self.num_params)
        if not self.param_names:
            object.__setattr__(self, "param_names", tuple(f"p{j}" for j in range(self.num_params)))
        object.__setattr__(self, "initial_state", frozen(state))

    @property
    def dim(self) -> int:
        return 2**self.num_qubits

    def gate_counts(self) -> Counter:
        return Counter(g.param_index for g in self.gates if isinstance(g, PARAMETRIC))

    def unused_params(self) -> list[int]:
        counts = self.gate_counts()
        return [j for j in range(self.num_params) if counts[j] == 0]

    def shared_params(self) -> list[int]:
        return sorted(j for j, count in self.gate_counts().items() if count > 1)

    def gate_matrices(self, coords) -> list[np.ndarray]:
        return [gate_matrix(g, coords, self.num_qubits) for g in self.gates]


def _coords(p) -> np.ndarray:
    if isinstance(p, ParameterPoint):
        return p.as_array()
    return np.asarray(p, dtype=float)


def compile_unitary(c: Circuit, p) -> np.ndarray:
    coords = _coords(p)
    if coords.shape != (c.num_params,):
        raise ValidationError(f"expected {c.num_params} parameters, got {coords.size}")
    identity = np.eye(c.dim, dtype=complex)
    return reduce(lambda acc, m: m @ acc, c.gate_matrices(coords), identity)


def apply_to_state(U, s) -> np.ndarray:
    return np.asarray(U) @ np.asarray(s, dtype=complex)


def basis_state(bits: str) -> np.ndarray:
    state = np.zeros(2 ** len(bits), dtype=complex)
    state[int(bits, 2)] = 1
    return state


def random_hermitian(rng: np.random.Generator, dim: int) -> np.ndarray:
    A = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return frozen((A + A.conj().T) / 2)


def _random_gate(rng: np.random.Generator, param_index: int | None, num_qubits: int):
    dim = 2**num_qubits
    if param_index is None:
        if num_qubits > 1 and rng.random() < 0.5:
            control, target = rng.choice(num_qubits, size=2, replace=False)
            return CNOT(control=int(control), target=int(target))
        return FixedUnitary(matrix=frozen(linalg.expm_i_hermitian(random_hermitian(rng, dim), 1.0)))

    kind = rng.integers(3)
    if kind == 0:
        return rotation("xyz"[rng.integers(3)], int(rng.integers(num_qubits)), param_index)
    sign = int(rng.choice([-1, 1]))
    if kind == 1:
        return ParamSingleQubit(
            generator=random_hermitian(rng, 2), wire=int(rng.integers(num_qubits)), param_index=param_index, sign=sign
        )
    return ParamExp(generator=random_hermitian(rng, dim), param_index=param_index, sign=sign)


def random_circuit(rng: np.random.Generator, num_qubits: int, num_params: int, num_gates: int) -> Circuit:
    """Seeded circuit mixing every gate kind. Every parameter drives at least one gate; some drive several."""
    slots = list(range(num_params))
    while len(slots) < num_gates:
        shared = num_params > 0 and rng.random() < 0.6
        slots.append(int(rng.integers(num_params)) if shared else None)
    rng.shuffle(slots)
    gates = [_random_gate(rng, j, num_qubits) for j in slots]
    dim = 2**num_qubits

    state = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return Circuit(
        num_qubits=num_qubits,
        gates=tuple(gates),
        num_params=num_params,
        initial_state=state / np.linalg.norm(state),
    )
