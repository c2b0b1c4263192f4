from dataclasses import dataclass
from functools import reduce

import numpy as np

from linalg import linalg
from util import ValidationError

PAULI = {
    "i": np.eye(2, dtype=complex),
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def frozen(matrix) -> np.ndarray:
    matrix = np.array(matrix, dtype=complex)
    matrix.setflags(write=False)
    return matrix


@dataclass(frozen=True, eq=False)
class FixedUnitary:
    matrix: np.ndarray
    source: str | None = None


@dataclass(frozen=True, eq=False)
class ParamExp:
    """e^{i sign p_j H} with H on the full register."""

    generator: np.ndarray
    param_index: int
    sign: int = -1
    source: str | None = None


@dataclass(frozen=True, eq=False)
class ParamSingleQubit:
    generator: np.ndarray  # 2x2
    wire: int
    param_index: int
    sign: int = -1
    source: str | None = None


@dataclass(frozen=True, eq=False)
class CNOT:
    control: int
    target: int


Gate = FixedUnitary | ParamExp | ParamSingleQubit | CNOT

PARAMETRIC = (ParamExp, ParamSingleQubit)


def embed_single_qubit(g, wire: int, num_qubits: int) -> np.ndarray:
    """I x ... x g x ... x I with g at tensor position `wire` (wire 0 is leftmost)."""
    if not 0 <= wire < num_qubits:
        raise ValidationError(f"wire out of range: {wire} (qubits: {num_qubits})")
    factors = [np.eye(2, dtype=complex)] * num_qubits
    factors[wire] = np.asarray(g, dtype=complex)
    return reduce(np.kron, factors, np.eye(1, dtype=complex))


def cnot_matrix(control: int, target: int, num_qubits: int) -> np.ndarray:
    dim = 2**num_qubits
    columns = np.arange(dim)
    control_bit = (columns >> (num_qubits - 1 - control)) & 1
    rows = np.where(control_bit == 1, columns ^ (1 << (num_qubits - 1 - target)), columns)
    matrix = np.zeros((dim, dim), dtype=complex)
    matrix[rows, columns] = 1
    return matrix


def validate_gate(gate, num_qubits: int, num_params: int):
    dim = 2**num_qubits

    if isinstance(gate, CNOT):
        for wire in (gate.control, gate.target):
            if not 0 <= wire < num_qubits:
                raise ValidationError(f"wire out of range: {wire} (qubits: {num_qubits})")
        if gate.control == gate.target:
            raise ValidationError("cx control and target must differ")
        return

    if isinstance(gate, FixedUnitary):
        if gate.matrix.shape != (dim, dim):
            raise ValidationError(f"fixed gate must be {dim}x{dim}, got {gate.matrix.shape[0]}x{gate.matrix.shape[1]}")
        if not linalg.is_unitary(gate.matrix):
            raise ValidationError(f"fixed gate is not unitary (defect {linalg.unitarity_defect(gate.matrix):.3e})")
        return

    if gate.sign not in (-1, 1):
        raise ValidationError(f"gate sign must be +1 or -1, got {gate.sign}")
    if not 0 <= gate.param_index < num_params:
        raise ValidationError(f"parameter index {gate.param_index} out of range (parameters: {num_params})")

    expected = 2 if isinstance(gate, ParamSingleQubit) else dim
    if gate.generator.shape != (expected, expected):
        raise ValidationError(f"generator must be {expected}x{expected}, got {gate.generator.shape}")
    linalg.check_hermitian(gate.generator)
    if isinstance(gate, ParamSingleQubit) and not 0 <= gate.wire < num_qubits:
        raise ValidationError(f"wire out of range: {gate.wire} (qubits: {num_qubits})")


def full_generator(gate, num_qubits: int) -> np.ndarray:
    if isinstance(gate, ParamSingleQubit):
        return embed_single_qubit(gate.generator, gate.wire, num_qubits)
    return np.asarray(gate.generator)


def gate_matrix(gate, coords, num_qubits: int) -> np.ndarray:
    if isinstance(gate, FixedUnitary):
        return np.asarray(gate.matrix)
    if isinstance(gate, CNOT):
        return cnot_matrix(gate.control, gate.target, num_qubits)

    angle = gate.sign * coords[gate.param_index]
    if isinstance(gate, ParamSingleQubit):
        local = linalg.expm_i_hermitian(gate.generator, angle)
        return embed_single_qubit(local, gate.wire, num_qubits)
    return linalg.expm_i_hermitian(gate.generator, angle)


def rotation(axis: str, wire: int, param_index: int, scale: float = 1.0) -> ParamSingleQubit:
    """rx/ry/rz sugar: generator scale * Pauli / 2, sign -1."""
    return ParamSingleQubit(
        generator=frozen(scale * PAULI[axis] / 2),
        wire=wire,
        param_index=param_index,
        sign=-1,
        source=f"r{axis}",
    )
