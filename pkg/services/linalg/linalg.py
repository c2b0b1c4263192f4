from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import linalg as sla

from util import NumericalError, ValidationError, createLogger

logger = createLogger("linalg")

# defaults; every function below takes them as keyword overrides
HERMITIAN_TOL = 1e-12
UNITARY_TOL = 1e-10
LOG_UNITARY_TOL = 1e-8
DEFAULT_REL_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class Spectrum:
    eigenvalues: np.ndarray  # ascending
    eigenvectors: np.ndarray  # columns, unitary


@dataclass(frozen=True, eq=False)
class RankReport:
    rank: int
    singular_values: np.ndarray
    rel_tol: float
    threshold_used: float
    base_point: tuple | None = None
    phase_in_span: bool | None = None
    max_rank: int | None = None

    def summary(self) -> dict:
        return {
            "base_point": None if self.base_point is None else list(self.base_point),
            "max_rank": self.max_rank,
            "phase_in_span": self.phase_in_span,
            "rank": self.rank,
            "rel_tol": self.rel_tol,
            "singular_values": [float(s) for s in self.singular_values],
            "threshold_used": self.threshold_used,
        }


def frobenius(M) -> float:
    return float(np.linalg.norm(M))


def check_matrix(M, name="matrix") -> np.ndarray:
    M = np.asarray(M, dtype=complex)
    if M.ndim != 2:
        raise ValidationError(f"{name} must be two-dimensional, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValidationError(f"{name} has non-finite entries")
    return M


def check_hermitian(H, tol=HERMITIAN_TOL, name="generator") -> np.ndarray:
    H = check_matrix(H, name)
    if H.shape[0] != H.shape[1]:
        raise ValidationError(f"{name} must be square, got {H.shape[0]}x{H.shape[1]}")
    deviation = frobenius(H - H.conj().T)
    if deviation > tol * max(1.0, frobenius(H)):
        raise ValidationError(f"{name} is not Hermitian (|H - H*|_F = {deviation:.3e})")
    return H


def unitarity_defect(U) -> float:
    U = np.asarray(U)
    return frobenius(U.conj().T @ U - np.eye(U.shape[0]))


def is_unitary(U, tol=UNITARY_TOL) -> bool:
    U = np.asarray(U)
    return U.ndim == 2 and U.shape[0] == U.shape[1] and unitarity_defect(U) < tol


def eig_hermitian(H) -> Spectrum:
    H = check_hermitian(H)
    try:
        eigenvalues, eigenvectors = sla.eigh(H)
    except np.linalg.LinAlgError as e:
        condition = np.linalg.cond(H)
        logger.error(f"eigensolver failed on {H.shape[0]}x{H.shape[0]} matrix (condition {condition:.3e})")
        raise NumericalError(f"eigensolver did not converge: {e} (condition number {condition:.3e})") from e
    return Spectrum(eigenvalues=eigenvalues, eigenvectors=eigenvectors)


# e^{i scale H} = T diag(e^{i scale lambda_j}) T*
def expm_i_hermitian(H, scale=1.0, spectrum: Spectrum | None = None) -> np.ndarray:
    if spectrum is None:
        spectrum = eig_hermitian(H)
    T = spectrum.eigenvectors
    phases = np.exp(1j * scale * spectrum.eigenvalues)
    return (T * phases) @ T.conj().T


def hermitian_log(A, tol=LOG_UNITARY_TOL) -> np.ndarray:
    """Hermitian H with e^{iH} = A, eigenphases taken in (-pi, pi]."""
    A = check_matrix(A, "unitary")
    if A.shape[0] != A.shape[1] or unitarity_defect(A) >= tol:
        raise ValidationError("hermitian_log needs a unitary matrix")

    # A is normal, so its complex Schur form is diagonal
    T, Z = sla.schur(A, output="complex")
    phases = np.angle(np.diag(T))
    phases = np.where(phases <= -np.pi, phases + 2 * np.pi, phases)
    H = (Z * phases) @ Z.conj().T
    return (H + H.conj().T) / 2


def svd_rank(M, rel_tol=DEFAULT_REL_TOL) -> RankReport:
    M = np.asarray(M, dtype=float)
    if M.ndim == 1:
        M = M[:, None]
    if M.size == 0:
        return RankReport(rank=0, singular_values=np.zeros(0), rel_tol=rel_tol, threshold_used=0.0)

    singular_values = sla.svdvals(M)
    threshold = rel_tol * singular_values[0] * max(M.shape)
    rank = int(np.count_nonzero(singular_values > threshold))
    return RankReport(rank=rank, singular_values=singular_values, rel_tol=rel_tol, threshold_used=float(threshold))


def gram_volume(vectors) -> float:
    """sqrt(det <v_i, v_j>), the volume of the parallelepiped spanned by the vectors."""
    try:
        V = np.asarray(vectors, dtype=float)
    except ValueError as e:
        raise ValidationError("gram_volume expects vectors of equal dimension") from e
    if V.size == 0:
        return 1.0
    if V.ndim != 2:
        raise ValidationError("gram_volume expects a list of vectors of equal dimension")
    count, dim = V.shape
    if dim < count:
        raise ValidationError(f"{count} vectors in dimension {dim} cannot span a {count}-volume")

    # sqrt(det(V V^T)) == product of the singular values of V
    return float(np.prod(sla.svdvals(V)))


def directional_derivative_fd(f: Callable, A, V, h=1e-5) -> np.ndarray:
    A = np.asarray(A, dtype=complex)
    V = np.asarray(V, dtype=complex)
    return (np.asarray(f(A + h * V)) - np.asarray(f(A - h * V))) / (2 * h)
