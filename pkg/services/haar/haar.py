"""
Haar-random unitaries and the expressivity distance eta of an ansatz:

    eta(C) = || mean over Haar U of U|iota><iota|U*  -  mean over p in P of |phi_p><phi_p| ||

Both averages are Monte Carlo estimates from a counter-based seeded stream,
reduced in a fixed pairwise order so results do not depend on the thread count.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg as sla

from circuit.circuit import Circuit
from circuit.space import ParameterSpace
from statemap.statemap import state_vector
from util import NumericalError, ValidationError, createLogger, parallel_map

logger = createLogger("haar")

# stream ids; each draw index gets its own generator within a stream
HAAR_STREAM = 0
PARAM_STREAM = 1
SELF_TEST_STREAM = 2
BOOTSTRAP_STREAM = 3

NORMS = ("frobenius", "trace")
REPORT_TOL = 1e-10
BOOTSTRAP_REPS = 200

REFERENCE_STATE_NOTE = (
    "Haar states are taken as U|iota> with the circuit's initial state; the Haar measure is "
    "invariant, so this has the same distribution as U|0>"
)
STANDARD_ERROR_NOTE = (
    "standard_error is the RMS norm of (D_b - D) over bootstrap resamples, where D is the Haar mean minus "
    "the ansatz mean; it measures how far the estimated difference matrix moves, not the spread of eta"
)


@dataclass
class SeededSampler:
    """Draw `index` of (seed, dim) is the same on every run and every thread count."""

    seed: int
    dim: int
    counter: int = 0
    stream: int = HAAR_STREAM

    def __post_init__(self):
        if self.dim < 1:
            raise ValidationError(f"sampler dimension must be positive, got {self.dim}")

    def rng(self, index: int) -> np.random.Generator:
        entropy = [self.seed % 2**64, self.stream, self.dim, index]
        return np.random.default_rng(np.random.SeedSequence(entropy))

    def take(self) -> int:
        index = self.counter
        self.counter += 1
        return index


def ginibre_to_haar(rng: np.random.Generator, dim: int) -> np.ndarray:
    Z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    Q, R = sla.qr(Z)
    # rescale columns so R has a positive real diagonal; plain QR is not Haar distributed
    d = np.diag(R)
    return Q * (d / np.abs(d))


def haar_unitary(sampler: SeededSampler, index: int | None = None) -> np.ndarray:
    if index is None:
        index = sampler.take()
    return ginibre_to_haar(sampler.rng(index), sampler.dim)


def pairwise_sum(arrays) -> np.ndarray:
    arrays = list(arrays)
    if not arrays:
        raise ValidationError("nothing to sum")
    while len(arrays) > 1:
        paired = [arrays[i] + arrays[i + 1] for i in range(0, len(arrays) - 1, 2)]
        if len(arrays) % 2:
            paired.append(arrays[-1])
        arrays = paired
    return arrays[0]


def projector(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())


def haar_projectors(seed: int, dim: int, samples: int, state=None, stream=HAAR_STREAM, threads=1) -> np.ndarray:
    state = np.eye(dim, dtype=complex)[0] if state is None else np.asarray(state, dtype=complex)
    sampler = SeededSampler(seed=seed, dim=dim, stream=stream)
    return np.array(parallel_map(lambda i: projector(haar_unitary(sampler, i) @ state), range(samples), threads))


def haar_state_mean(seed: int, dim: int, samples: int, state=None, threads: int = 1) -> np.ndarray:
    """Monte Carlo estimate of the Haar average of U|state><state|U*; tends to I/dim."""
    return pairwise_sum(haar_projectors(seed, dim, samples, state, threads=threads)) / samples


def ansatz_projectors(c: Circuit, space: ParameterSpace, seed: int, samples: int, threads: int = 1) -> np.ndarray:
    if not space.bounded:
        raise ValidationError("uniform measure on ℙ undefined; bound the parameter space")
    sampler = SeededSampler(seed=seed, dim=c.dim, stream=PARAM_STREAM)

    def draw(i):
        p = space.sample_uniform(sampler.rng(i))
        return projector(state_vector(c, p))

    return np.array(parallel_map(draw, range(samples), threads))


def matrix_norm(D, norm: str) -> float:
    if norm == "frobenius":
        return float(np.linalg.norm(D, "fro"))
    if norm == "trace":
        return float(np.linalg.norm(D, "nuc"))
    raise ValidationError(f"unknown norm '{norm}' (expected one of {', '.join(NORMS)})")


def check_density(M, name: str):
    deviation = np.abs(M - M.conj().T).max()
    if deviation > REPORT_TOL:
        raise NumericalError(f"{name} is not Hermitian (max deviation {deviation:.3e})")
    trace = np.trace(M).real
    if abs(trace - 1) > REPORT_TOL:
        raise NumericalError(f"{name} has trace {trace!r}, expected 1")
    smallest = float(np.linalg.eigvalsh((M + M.conj().T) / 2)[0])
    if smallest < -REPORT_TOL:
        raise NumericalError(f"{name} is not positive semidefinite (eigenvalue {smallest:.3e})")


@dataclass(frozen=True, eq=False)
class ExpressivityReport:
    eta: float
    norm_name: str
    haar_samples: int
    param_samples: int
    seed: int
    haar_mean_matrix: np.ndarray
    ansatz_mean_matrix: np.ndarray
    standard_error: float
    bootstrap_reps: int
    self_test: bool = False
    notes: tuple[str, ...] = field(default=())

    def summary(self) -> dict:
        return {
            "bootstrap_reps": self.bootstrap_reps,
            "eta": self.eta,
            "haar_samples": self.haar_samples,
            "norm": self.norm_name,
            "param_samples": self.param_samples,
            "seed": self.seed,
            "self_test": self.self_test,
            "standard_error": self.standard_error,
        }


def bootstrap_error(haar: np.ndarray, ansatz: np.ndarray, eta_matrix, norm: str, seed: int, reps: int) -> float:
    """RMS deviation of resampled difference matrices from the observed one, in the chosen norm."""
    rng = SeededSampler(seed=seed, dim=haar.shape[1], stream=BOOTSTRAP_STREAM).rng(0)
    deviations = np.empty(reps)
    for b in range(reps):
        h = haar[rng.integers(0, len(haar), len(haar))].mean(axis=0)
        a = ansatz[rng.integers(0, len(ansatz), len(ansatz))].mean(axis=0)
        deviations[b] = matrix_norm((h - a) - eta_matrix, norm)
    return float(np.sqrt(np.mean(deviations**2)))


def expressivity_eta(
    c: Circuit,
    space: ParameterSpace,
    param_samples: int,
    haar_samples: int,
    norm: str = "frobenius",
    seed: int = 0,
    self_test: bool = False,
    bootstrap_reps: int = BOOTSTRAP_REPS,
    threads: int = 1,
) -> ExpressivityReport:
    """
    With self_test the ansatz draws are replaced by an independent set of Haar
    draws, so eta measures pure sampling noise.
    """
    if norm not in NORMS:
        raise ValidationError(f"unknown norm '{norm}' (expected one of {', '.join(NORMS)})")
    if param_samples < 1 or haar_samples < 1:
        raise ValidationError("sample counts must be positive")

    haar = haar_projectors(seed, c.dim, haar_samples, c.initial_state, threads=threads)
    if self_test:
        ansatz = haar_projectors(seed, c.dim, param_samples, c.initial_state, SELF_TEST_STREAM, threads)
    else:
        ansatz = ansatz_projectors(c, space, seed, param_samples, threads)

    haar_mean = pairwise_sum(haar) / haar_samples
    ansatz_mean = pairwise_sum(ansatz) / param_samples
    check_density(haar_mean, "Haar mean")
    check_density(ansatz_mean, "ansatz mean")

    difference = haar_mean - ansatz_mean
    eta = matrix_norm(difference, norm)
    error = bootstrap_error(haar, ansatz, difference, norm, seed, bootstrap_reps)
    logger.info(f"eta = {eta:.6g} ({norm}), bootstrap SE {error:.3g}, seed {seed}")

    notes = [
        REFERENCE_STATE_NOTE,
        STANDARD_ERROR_NOTE,
        "parameters drawn from the normalized uniform product measure on ℙ",
    ]
    if self_test:
        notes.append("self-test: ansatz draws replaced by independent Haar draws")
    return ExpressivityReport(
        eta=eta,
        norm_name=norm,
        haar_samples=haar_samples,
        param_samples=param_samples,
        seed=seed,
        haar_mean_matrix=haar_mean,
        ansatz_mean_matrix=ansatz_mean,
        standard_error=error,
        bootstrap_reps=bootstrap_reps,
        self_test=self_test,
        notes=tuple(notes),
    )


def compare(first: ExpressivityReport, second: ExpressivityReport, names=("A", "B")) -> str:
    """An ansatz is more expressive than another iff its eta is smaller."""
    if first.norm_name != second.norm_name:
        raise ValidationError("cannot compare eta values computed with different norms")
    a, b = names
    if first.eta == second.eta:
        verdict = f"{a} and {b} are equally expressive"
    elif first.eta < second.eta:
        verdict = f"{a} is more expressive than {b}"
    else:
        verdict = f"{b} is more expressive than {a}"
    margin = np.hypot(first.standard_error, second.standard_error)
    if abs(first.eta - second.eta) < 3 * margin:
        verdict += " (difference within 3 combined standard errors)"
    return verdict
