"""
The state map p -> C(p)|iota> and the unitary map p -> C(p), realified.

States are points of the real unit sphere S^{2n-1} in R^{2n}: a complex
n-vector c becomes [Re c_1, Im c_1, ..., Re c_n, Im c_n]. The global phase is
not quotiented out, so a rank may count the phase direction i*Lambda(p).
"""

from dataclasses import dataclass

import numpy as np
from scipy import linalg as sla

from circuit.circuit import Circuit, compile_unitary
from circuit.gates import PARAMETRIC, full_generator
from circuit.space import ParameterPoint, ParameterSpace
from linalg.linalg import DEFAULT_REL_TOL, check_hermitian, expm_i_hermitian
from util import ValidationError, createLogger

logger = createLogger("statemap")

SPHERE_CONVENTION = "real unit sphere S^(2n-1) in R^(2n), interleaved (Re, Im); global phase not quotiented"


def realify(v) -> np.ndarray:
    v = np.asarray(v, dtype=complex).ravel()
    return np.column_stack((v.real, v.imag)).ravel()


def complexify(x) -> np.ndarray:
    x = np.asarray(x, dtype=float).reshape(-1, 2)
    return x[:, 0] + 1j * x[:, 1]


def _coords(p) -> np.ndarray:
    if isinstance(p, ParameterPoint):
        return p.as_array()
    return np.asarray(p, dtype=float)


@dataclass(frozen=True, eq=False)
class RealJacobian:
    matrix: np.ndarray
    base_point: ParameterPoint
    one_sided: tuple[int, ...] = ()

    @property
    def rows(self) -> int:
        return self.matrix.shape[0]

    @property
    def cols(self) -> int:
        return self.matrix.shape[1]

    def to_csv(self) -> str:
        lines = ["row,col,value"]
        for (row, col), value in np.ndenumerate(self.matrix):
            lines.append(f"{row},{col},{value!r}")
        return "\n".join(lines) + "\n"


def state_vector(c: Circuit, p) -> np.ndarray:
    return compile_unitary(c, p) @ c.initial_state


def state_map(c: Circuit, p) -> np.ndarray:
    return realify(state_vector(c, p))


def _product_terms(mats, tangents, param_indices, num_params: int, operand: np.ndarray, naive: bool) -> list[np.ndarray]:
    """
    Per-parameter derivative of (M_G ... M_1) @ operand, where dM_g/dp_j = T_g M_g
    for the tangent T_g of gate g (None for fixed gates).
    Returns one array shaped like operand per parameter.
    """
    count = len(mats)
    terms = [np.zeros_like(operand) for _ in range(num_params)]

    if naive:
        for g, tangent in enumerate(tangents):
            if tangent is None:
                continue
            through = operand
            for m in mats[: g + 1]:
                through = m @ through
            step = tangent @ through
            for m in mats[g + 1 :]:
                step = m @ step
            terms[param_indices[g]] = terms[param_indices[g]] + step
        return terms

    # prefix-through-g applied to the operand, forward pass
    through = []
    current = operand
    for m in mats:
        current = m @ current
        through.append(current)

    # suffix products, backward pass: suffix[g] = M_G ... M_{g+1}
    suffix = [None] * count
    acc = np.eye(operand.shape[0], dtype=complex)
    for g in range(count - 1, -1, -1):
        suffix[g] = acc
        acc = acc @ mats[g]

    for g, tangent in enumerate(tangents):
        if tangent is None:
            continue
        terms[param_indices[g]] = terms[param_indices[g]] + suffix[g] @ (tangent @ through[g])
    return terms


def _derivative_terms(c: Circuit, coords: np.ndarray, operand: np.ndarray, naive: bool) -> list[np.ndarray]:
    tangents, indices = [], []
    for gate in c.gates:
        parametric = isinstance(gate, PARAMETRIC)
        tangents.append(1j * gate.sign * full_generator(gate, c.num_qubits) if parametric else None)
        indices.append(gate.param_index if parametric else None)
    return _product_terms(c.gate_matrices(coords), tangents, indices, c.num_params, operand, naive)


def jacobian_analytic(c: Circuit, p, naive: bool = False) -> RealJacobian:
    coords = _coords(p)
    terms = _derivative_terms(c, coords, c.initial_state, naive)
    matrix = np.column_stack([realify(t) for t in terms]) if terms else np.zeros((2 * c.dim, 0))
    return RealJacobian(matrix=matrix, base_point=ParameterPoint(tuple(coords)))


def unitary_jacobian(c: Circuit, p, naive: bool = False) -> RealJacobian:
    coords = _coords(p)
    identity = np.eye(c.dim, dtype=complex)
    terms = _derivative_terms(c, coords, identity, naive)
    matrix = np.column_stack([realify(t) for t in terms]) if terms else np.zeros((2 * c.dim**2, 0))
    return RealJacobian(matrix=matrix, base_point=ParameterPoint(tuple(coords)))


def generator_product_jacobian(generators, p, sign: int = -1, naive: bool = False) -> RealJacobian:
    """
    Jacobian of p -> e^{i sign p_G H_G} ... e^{i sign p_1 H_1} for Hermitian
    generators of any dimension, one parameter per generator. Unlike a Circuit
    the dimension need not be a power of two.
    """
    coords = _coords(p)
    generators = [check_hermitian(H) for H in generators]
    if coords.shape != (len(generators),):
        raise ValidationError(f"expected {len(generators)} parameters, got {coords.size}")
    if not generators:
        raise ValidationError("at least one generator is required")
    dim = generators[0].shape[0]
    if any(H.shape != (dim, dim) for H in generators):
        raise ValidationError("generators must share one dimension")

    mats = [expm_i_hermitian(H, sign * t) for H, t in zip(generators, coords)]
    tangents = [1j * sign * H for H in generators]
    identity = np.eye(dim, dtype=complex)
    terms = _product_terms(mats, tangents, list(range(len(generators))), len(generators), identity, naive)
    matrix = np.column_stack([realify(t) for t in terms])
    return RealJacobian(matrix=matrix, base_point=ParameterPoint(tuple(coords)))


def jacobian_fd(c: Circuit, p, h: float = 1e-5, space: ParameterSpace | None = None) -> RealJacobian:
    """Central differences with step h*max(1, |p_j|); one-sided next to closed endpoints."""
    coords = _coords(p)
    columns = []
    one_sided = []

    for j in range(c.num_params):
        step = h * max(1.0, abs(coords[j]))
        shift = np.zeros_like(coords)
        shift[j] = step
        side = space.closed_side(j, coords[j], step) if space is not None else None

        if side == "lo":
            column = (state_map(c, coords + shift) - state_map(c, coords)) / step
            one_sided.append(j)
        elif side == "hi":
            column = (state_map(c, coords) - state_map(c, coords - shift)) / step
            one_sided.append(j)
        else:
            column = (state_map(c, coords + shift) - state_map(c, coords - shift)) / (2 * step)
        columns.append(column)

    if one_sided:
        logger.warning(f"one-sided differences (first-order accuracy) for parameters {one_sided}")

    matrix = np.column_stack(columns) if columns else np.zeros((2 * c.dim, 0))
    return RealJacobian(matrix=matrix, base_point=ParameterPoint(tuple(coords)), one_sided=tuple(one_sided))


def phase_direction(c: Circuit, p) -> np.ndarray:
    return realify(1j * state_vector(c, p))


def in_column_span(matrix, vector, rel_tol: float = DEFAULT_REL_TOL, span_tol: float = 1e-8) -> bool:
    """Whether vector lies in the column span of matrix, up to span_tol relative residual."""
    matrix = np.asarray(matrix, dtype=float)
    vector = np.asarray(vector, dtype=float)
    norm = np.linalg.norm(vector)
    if norm == 0:
        return True
    if matrix.size == 0:
        return False

    U, singular_values, _ = sla.svd(matrix, full_matrices=False)
    threshold = rel_tol * singular_values[0] * max(matrix.shape)
    basis = U[:, singular_values > threshold]
    residual = vector - basis @ (basis.T @ vector)
    return bool(np.linalg.norm(residual) <= span_tol * norm)
