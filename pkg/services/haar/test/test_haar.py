import math

import numpy as np
import pytest

from circuit.parser import load_circuit, parse_circuit
from haar.haar import (
    SeededSampler,
    check_density,
    compare,
    expressivity_eta,
    haar_projectors,
    haar_state_mean,
    haar_unitary,
    matrix_norm,
    pairwise_sum,
)
from linalg import linalg
from util import NumericalError, ValidationError


def test_haar_draws_are_unitary():
    sampler = SeededSampler(seed=3, dim=4)
    for _ in range(1000):
        assert linalg.unitarity_defect(haar_unitary(sampler)) < 1e-10
    assert sampler.counter == 1000


def test_one_dimensional_draws_are_phases():
    sampler = SeededSampler(seed=1, dim=1)
    for i in range(20):
        U = haar_unitary(sampler, i)
        assert U.shape == (1, 1)
        assert abs(U[0, 0]) == pytest.approx(1.0)


def test_draws_depend_only_on_seed_and_index():
    first = SeededSampler(seed=42, dim=3)
    second = SeededSampler(seed=42, dim=3)
    for i in (0, 7, 123):
        np.testing.assert_array_equal(haar_unitary(first, i), haar_unitary(second, i))
    assert not np.array_equal(haar_unitary(first, 0), haar_unitary(SeededSampler(seed=43, dim=3), 0))
    np.testing.assert_array_equal(
        haar_unitary(SeededSampler(seed=5, dim=2), 0), haar_unitary(SeededSampler(seed=5 + 2**64, dim=2), 0)
    )


def test_first_entry_has_no_phase_bias():
    sampler = SeededSampler(seed=9, dim=2)
    entries = np.array([haar_unitary(sampler, i)[0, 0] for i in range(2000)])
    assert abs(entries.mean()) < 0.05
    assert np.mean(np.abs(entries) ** 2) == pytest.approx(0.5, abs=0.03)


def test_pairwise_sum():
    assert pairwise_sum(np.arange(7.0)) == 21.0
    np.testing.assert_array_equal(pairwise_sum([np.eye(2)] * 5), 5 * np.eye(2))
    with pytest.raises(ValidationError):
        pairwise_sum([])


def test_haar_state_mean_approaches_maximally_mixed_state():
    mean = haar_state_mean(seed=2024, dim=4, samples=20000)
    assert linalg.frobenius(mean - np.eye(4) / 4) < 0.05


def test_haar_mean_error_decays_like_inverse_square_root():
    counts = [100, 1000, 10000]
    errors = []
    for n in counts:
        per_seed = [linalg.frobenius(haar_state_mean(seed, 4, n) - np.eye(4) / 4) for seed in range(5)]
        errors.append(np.mean(per_seed))
    slope = np.polyfit(np.log(counts), np.log(errors), 1)[0]
    assert slope == pytest.approx(-0.5, abs=0.2)


def test_haar_mean_is_independent_of_threads():
    one = haar_state_mean(seed=7, dim=2, samples=301, threads=1)
    four = haar_state_mean(seed=7, dim=2, samples=301, threads=4)
    np.testing.assert_array_equal(one, four)


def test_haar_projectors_use_the_given_state():
    state = np.array([0, 1], dtype=complex)
    projectors = haar_projectors(seed=1, dim=2, samples=3, state=state)
    for P in projectors:
        assert np.trace(P).real == pytest.approx(1.0)
        np.testing.assert_allclose(P @ P, P, atol=1e-12)


def test_matrix_norms():
    D = np.diag([0.5, -0.5])
    assert matrix_norm(D, "frobenius") == pytest.approx(math.sqrt(0.5))
    assert matrix_norm(D, "trace") == pytest.approx(1.0)
    with pytest.raises(ValidationError, match="unknown norm"):
        matrix_norm(D, "spectral")


def test_check_density():
    check_density(np.eye(2) / 2, "mean")
    with pytest.raises(NumericalError, match="trace"):
        check_density(np.eye(2), "mean")
    with pytest.raises(NumericalError, match="positive semidefinite"):
        check_density(np.diag([1.5, -0.5]), "mean")
    with pytest.raises(NumericalError, match="Hermitian"):
        check_density(np.array([[0.5, 1], [0, 0.5]]), "mean")


def test_constant_ansatz_distance_from_haar():
    # the ansatz mean is |0><0| and the Haar mean I/n, so eta -> sqrt((n - 1) / n)
    for n_q in (1, 2):
        c, space = parse_circuit(f"qubits {n_q}\n")
        report = expressivity_eta(c, space, param_samples=10, haar_samples=20000, seed=1)
        n = 2**n_q
        assert report.eta == pytest.approx(math.sqrt((n - 1) / n), abs=0.02)
        np.testing.assert_allclose(report.ansatz_mean_matrix, np.diag(np.eye(n)[0]), atol=1e-15)


def test_universal_single_qubit_ansatz_is_more_expressive(circuits_dir):
    rz, rz_space = load_circuit(circuits_dir / "rz_only.qc")
    euler, euler_space = load_circuit(circuits_dir / "rz_ry_rz.qc")
    narrow = expressivity_eta(rz, rz_space, param_samples=20000, haar_samples=20000, seed=11)
    wide = expressivity_eta(euler, euler_space, param_samples=20000, haar_samples=20000, seed=11)
    assert narrow.eta == pytest.approx(math.sqrt(0.5), abs=0.02)
    assert wide.eta < 0.05
    assert wide.eta < narrow.eta
    assert compare(wide, narrow, ("rz_ry_rz", "rz_only")) == "rz_ry_rz is more expressive than rz_only"


def test_self_test_eta_is_sampling_noise(circuits_dir):
    c, space = load_circuit(circuits_dir / "rz_ry_rz.qc")
    report = expressivity_eta(c, space, param_samples=2000, haar_samples=2000, seed=5, self_test=True)
    assert report.self_test
    assert report.standard_error > 0
    assert report.eta < 3 * report.standard_error


def test_trace_norm_dominates_frobenius(circuits_dir):
    c, space = load_circuit(circuits_dir / "entangler.qc")
    frobenius = expressivity_eta(c, space, param_samples=500, haar_samples=500, seed=2, bootstrap_reps=20)
    trace = expressivity_eta(
        c, space, param_samples=500, haar_samples=500, seed=2, norm="trace", bootstrap_reps=20
    )
    assert trace.eta >= frobenius.eta
    with pytest.raises(ValidationError, match="different norms"):
        compare(frobenius, trace)


def test_unbounded_parameter_space_has_no_uniform_measure(circuits_dir):
    c, space = load_circuit(circuits_dir / "rz_rz.qc")
    with pytest.raises(ValidationError, match="uniform measure"):
        expressivity_eta(c, space, param_samples=10, haar_samples=10)


def test_expressivity_is_reproducible_across_threads(circuits_dir):
    c, space = load_circuit(circuits_dir / "entangler.qc")
    one = expressivity_eta(c, space, param_samples=200, haar_samples=200, seed=8, bootstrap_reps=10, threads=1)
    four = expressivity_eta(c, space, param_samples=200, haar_samples=200, seed=8, bootstrap_reps=10, threads=4)
    assert one.eta == four.eta
    assert one.standard_error == four.standard_error
    np.testing.assert_array_equal(one.ansatz_mean_matrix, four.ansatz_mean_matrix)


def test_summary_fields():
    c, space = parse_circuit("qubits 1\n")
    summary = expressivity_eta(c, space, param_samples=5, haar_samples=5, seed=3, bootstrap_reps=5).summary()
    assert summary["seed"] == 3
    assert summary["norm"] == "frobenius"
    assert list(summary) == sorted(summary)


def test_notes_say_what_the_standard_error_measures():
    c, space = parse_circuit("qubits 1\n")
    report = expressivity_eta(c, space, param_samples=5, haar_samples=5, seed=3, bootstrap_reps=5)
    assert any(note.startswith("standard_error is the RMS norm of (D_b - D)") for note in report.notes)
