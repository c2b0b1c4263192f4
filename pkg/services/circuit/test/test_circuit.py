import math

import numpy as np
import pytest

from circuit.circuit import Circuit, apply_to_state, basis_state, compile_unitary, random_circuit
from circuit.gates import CNOT, PAULI, FixedUnitary, ParamExp, ParamSingleQubit, embed_single_qubit, rotation
from circuit.parser import load_circuit, parse_circuit, serialize_circuit
from circuit.space import Circle, FullLine, Interval, ParameterSpace
from linalg import linalg
from util import InputError, ValidationError

X, Y, Z, I2 = PAULI["x"], PAULI["y"], PAULI["z"], PAULI["i"]


def test_embed_single_qubit():
    np.testing.assert_array_equal(embed_single_qubit(X, 0, 2), np.kron(X, I2))
    np.testing.assert_array_equal(embed_single_qubit(I2, 1, 3), np.eye(8))
    np.testing.assert_array_equal(embed_single_qubit(Z, 1, 2), np.diag([1, -1, 1, -1]))


def test_embed_single_qubit_rejects_wire():
    with pytest.raises(ValidationError, match="wire out of range"):
        embed_single_qubit(X, 2, 2)


def test_empty_circuit_compiles_to_identity():
    c = Circuit(num_qubits=2, gates=(), num_params=0, initial_state=basis_state("00"))
    np.testing.assert_array_equal(compile_unitary(c, []), np.eye(4))


def test_param_exp_at_pi():
    c = Circuit(num_qubits=1, gates=(ParamExp(Z, 0),), num_params=1, initial_state=basis_state("0"))
    np.testing.assert_allclose(compile_unitary(c, [math.pi]), -np.eye(2), atol=1e-12)


def test_later_gates_multiply_from_the_left():
    A = np.eye(4, dtype=complex)[[1, 2, 3, 0]]
    B = np.eye(4, dtype=complex)[[0, 2, 1, 3]]
    c = Circuit(num_qubits=2, gates=(FixedUnitary(A), FixedUnitary(B)), num_params=0, initial_state=basis_state("00"))
    U = compile_unitary(c, [])
    np.testing.assert_array_equal(U, B @ A)
    s = basis_state("01")
    np.testing.assert_array_equal(apply_to_state(U, s), B @ (A @ s))


def test_apply_to_state_examples():
    np.testing.assert_array_equal(apply_to_state(np.eye(2), basis_state("0")), basis_state("0"))
    np.testing.assert_array_equal(apply_to_state(np.kron(X, I2), basis_state("00")), basis_state("10"))
    c = Circuit(num_qubits=1, gates=(rotation("y", 0, 0),), num_params=1, initial_state=basis_state("0"))
    state = apply_to_state(compile_unitary(c, [math.pi / 2]), c.initial_state)
    np.testing.assert_allclose(state, [math.cos(math.pi / 4), math.sin(math.pi / 4)], atol=1e-12)


def test_cnot_flips_target_when_control_is_set():
    c = Circuit(num_qubits=2, gates=(CNOT(0, 1),), num_params=0, initial_state=basis_state("00"))
    U = compile_unitary(c, [])
    np.testing.assert_array_equal(U @ basis_state("10"), basis_state("11"))
    np.testing.assert_array_equal(U @ basis_state("01"), basis_state("01"))


def test_single_qubit_gate_equals_embedded_generator(rng):
    G = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    G = (G + G.conj().T) / 2
    local = Circuit(3, (ParamSingleQubit(G, 1, 0, sign=1),), 1, basis_state("000"))
    full = Circuit(3, (ParamExp(embed_single_qubit(G, 1, 3), 0, sign=1),), 1, basis_state("000"))
    for p in rng.normal(size=5):
        np.testing.assert_allclose(compile_unitary(local, [p]), compile_unitary(full, [p]), atol=1e-12)


def test_random_circuits_compile_to_unitaries(rng):
    for n_q in range(1, 5):
        for _ in range(3):
            c = random_circuit(rng, n_q, num_params=8, num_gates=12)
            U = compile_unitary(c, rng.normal(size=8) * 3)
            assert linalg.unitarity_defect(U) < 1e-9


def test_compile_unitary_is_continuous(rng):
    c = random_circuit(rng, 2, num_params=4, num_gates=8)
    p = rng.normal(size=4)
    direction = rng.normal(size=4)
    steps = [1e-4, 1e-5, 1e-6]
    changes = [linalg.frobenius(compile_unitary(c, p + t * direction) - compile_unitary(c, p)) for t in steps]
    ratios = [change / t for change, t in zip(changes, steps)]
    assert ratios == pytest.approx([ratios[-1]] * 3, rel=1e-2)


def test_circuit_rejects_unnormalized_state():
    with pytest.raises(ValidationError, match="not normalized"):
        Circuit(1, (), 0, np.array([1.0, 1.0]))


def test_circuit_rejects_non_unitary_fixed_gate():
    with pytest.raises(ValidationError, match="not unitary"):
        Circuit(1, (FixedUnitary(np.diag([1.0, 2.0])),), 0, basis_state("0"))


def test_parse_minimal_file():
    c, space = parse_circuit("qubits 1\nparam t line\ninit ket 0\ngate ry 0 t\n")
    assert (c.num_qubits, c.num_params, len(c.gates)) == (1, 1, 1)
    assert c.param_names == ("t",)
    assert isinstance(space.factors[0], FullLine)


def test_parse_defaults_to_zero_state():
    c, _ = parse_circuit("qubits 2\nparam t circle\ngate rz 1 t\n")
    np.testing.assert_array_equal(c.initial_state, basis_state("00"))


def test_parse_rejects_wire_out_of_range():
    with pytest.raises(ValidationError, match="wire out of range"):
        parse_circuit("qubits 2\ngate cx 0 5\n")


def test_parse_rejects_unused_parameters():
    with pytest.raises(ValidationError, match="drive no gate"):
        parse_circuit("qubits 1\nparam a line\nparam b line\ngate rz 0 a\n")
    c, _ = parse_circuit("qubits 1\nparam a line\nparam b line\ngate rz 0 a\n", allow_unused_params=True)
    assert c.unused_params() == [1]


def test_parse_reports_line_of_unknown_directive():
    with pytest.raises(ValidationError, match="line 2"):
        parse_circuit("qubits 1\nfrobnicate\n")


def test_parse_reports_unparsable_init_amplitude():
    with pytest.raises(ValidationError, match="line 2, column 12"):
        parse_circuit("qubits 1\ninit vec 1 zz\n")


def test_parse_rejects_non_hermitian_generator(write_circuit):
    path = write_circuit(
        "qubits 1\nparam t line\ngate expgen g.mat t\n", matrices={"g.mat": "complex 2 2\n0 1\n0 0\n"}
    )
    with pytest.raises(ValidationError, match="not Hermitian"):
        load_circuit(path)


def test_parse_interval_and_circle_factors():
    _, space = parse_circuit(
        "qubits 1\nparam a interval [ 0 1 )\nparam b circle 3\ngate rx 0 a\ngate rz 0 b scale 2\n"
    )
    assert space.factors[0] == Interval(0.0, 1.0, lo_closed=True, hi_closed=False)
    assert space.factors[1] == Circle(3.0)


def test_boundary_corners_warn_or_fail():
    text = "qubits 1\nparam a interval [ 0 1 )\nparam b interval ( 0 1 ]\ngate rx 0 a\ngate rz 0 b\n"
    _, space = parse_circuit(text)
    assert any("corners" in w for w in space.warnings)
    with pytest.raises(ValidationError, match="corners"):
        parse_circuit(text, strict_boundary=True)


def test_shared_parameters_are_flagged():
    c, space = parse_circuit("qubits 2\nparam s circle\ngate rz 0 s\ngate rz 1 s\n")
    assert c.shared_params() == [0]
    assert any("shared" in w for w in space.warnings)


def test_load_circuit_missing_file(tmp_path):
    with pytest.raises(InputError, match="cannot open"):
        load_circuit(tmp_path / "nope.qc")


def test_sample_circuit_with_matrix_file(circuits_dir):
    c, _ = load_circuit(circuits_dir / "single_H.qc")
    np.testing.assert_array_equal(c.gates[0].generator, np.diag([1, 2]))


def test_serialize_then_parse_reproduces_the_circuit(rng, tmp_path):
    dim = 4
    gates = []
    for j in range(3):
        H = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        gates.append(ParamExp((H + H.conj().T) / 2, j, sign=-1 if j % 2 else 1))
        W = linalg.expm_i_hermitian((H + H.conj().T) / 2, 0.7)
        gates.append(FixedUnitary(W))
    gates.append(rotation("x", 1, 0))
    gates.append(CNOT(1, 0))
    state = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    c = Circuit(2, tuple(gates), 3, state / np.linalg.norm(state), ("a", "b", "c"))
    space = ParameterSpace(("a", "b", "c"), (FullLine(), Circle(), Interval(-1.0, 2.0, hi_closed=True)))

    serialize_circuit(c, space, tmp_path, "roundtrip")
    again, again_space = load_circuit(tmp_path / "roundtrip.qc")

    assert again.param_names == c.param_names
    assert again_space.factors == space.factors
    for p in rng.normal(size=(4, 3)) * 0.5:
        np.testing.assert_allclose(compile_unitary(again, p), compile_unitary(c, p), atol=1e-12)
    np.testing.assert_allclose(again.initial_state, c.initial_state, atol=1e-15)


def test_space_point_membership():
    space = ParameterSpace(("a", "b"), (Interval(0.0, 1.0), Circle()))
    p = space.point([0.5, 7.0])
    assert p.coords == pytest.approx((0.5, 7.0 - 2 * math.pi))
    with pytest.raises(ValidationError, match="point not in parameter space"):
        space.point([1.0, 0.0])
    with pytest.raises(ValidationError, match="point not in parameter space"):
        space.point([0.5])


def test_uniform_sampling_needs_bounded_space(rng):
    with pytest.raises(ValidationError, match="uniform measure on ℙ undefined"):
        ParameterSpace(("a",), (FullLine(),)).sample_uniform(rng)
    x = ParameterSpace(("a", "b"), (Interval(-1.0, 1.0), Circle(4.0))).sample_uniform(rng)
    assert -1 <= x[0] < 1 and 0 <= x[1] < 4
