"""
Injectivity and embedding are certified only at sample resolution: every
result here carries the resolution and tolerances it was obtained with and
is evidence, never a proof.
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import ndimage, optimize
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from circuit.gates import PARAMETRIC, full_generator
from linalg import linalg
from linalg.linalg import DEFAULT_REL_TOL, svd_rank
from util import NumericalError, ValidationError, createLogger, parallel_map

from .geometry import _point, node_ranks, slice_at, slice_region
from .grids import Region

logger = createLogger("geometry.scans")

PERIOD_VERIFY_TOL = 1e-9


@dataclass(frozen=True)
class Collision:
    first: tuple[float, ...]
    second: tuple[float, ...]
    distance: float  # in the image


def _parameter_distance(a: np.ndarray, b: np.ndarray, periods: np.ndarray) -> np.ndarray:
    """Max-norm distance; circle coordinates are compared around the circle."""
    delta = np.abs(a - b)
    circular = ~np.isnan(periods)
    if circular.any():
        reduced = np.mod(delta[..., circular], periods[circular])
        wrapped = np.minimum(reduced, periods[circular] - reduced)
        delta = delta.copy()
        delta[..., circular] = wrapped
    return delta.max(axis=-1) if delta.shape[-1] else np.zeros(delta.shape[:-1])


def injectivity_scan(fmap, points, resolution: float, collision_tol: float, threads: int = 1) -> list[Collision]:
    """
    Pairs (p, q) of sample points with |p - q|_inf >= 2 * resolution whose images
    are closer than collision_tol. An empty list means injective at this resolution.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.shape[0] < 2:
        return []

    values = np.array(parallel_map(fmap.value, points, threads))
    tree = cKDTree(values)
    pairs = tree.query_pairs(r=collision_tol, output_type="ndarray")
    if pairs.size == 0:
        return []

    # query_pairs is inclusive and unordered; apply the strict bound and sort for determinism
    pairs = pairs[np.lexsort((pairs[:, 1], pairs[:, 0]))]
    image_distance = np.linalg.norm(values[pairs[:, 0]] - values[pairs[:, 1]], axis=1)
    param_distance = _parameter_distance(points[pairs[:, 0]], points[pairs[:, 1]], fmap.periods)
    keep = (image_distance < collision_tol) & (param_distance >= 2 * resolution)

    collisions = [
        Collision(tuple(points[i]), tuple(points[j]), float(d))
        for (i, j), d in zip(pairs[keep], image_distance[keep])
    ]
    if collisions:
        logger.info(f"{len(collisions)} collision pairs at resolution {resolution}, tolerance {collision_tol}")
    return collisions


@dataclass(frozen=True)
class Periodicity:
    period: float | None
    constant: bool
    eigenvalues: tuple[float, ...]

    def describe(self) -> str:
        if self.constant:
            return "constant map: every eigenvalue is zero"
        if self.period is None:
            return "aperiodic: no common period within the denominator bound, the one-parameter map does not repeat"
        return f"periodic, T={self.period!r}"


def periodicity(H, denominator_bound: int = 10**6, atol: float = 1e-9) -> Periodicity:
    """
    Smallest T > 0 with lambda_j * T in 2 pi Z for every nonzero eigenvalue, or None.
    Ratios to the largest eigenvalue are approximated by continued fractions with
    denominators up to denominator_bound; an approximant a/b of r is accepted when
    |r b - a| <= atol.
    """
    spectrum = linalg.eig_hermitian(H)
    eigenvalues = tuple(float(v) for v in spectrum.eigenvalues)
    nonzero = [v for v in eigenvalues if abs(v) > atol]
    if not nonzero:
        logger.info("zero generator: the one-parameter map is constant")
        return Periodicity(period=None, constant=True, eigenvalues=eigenvalues)

    reference = max(nonzero, key=abs)
    lcm = 1
    for value in nonzero:
        ratio = value / reference
        approx = Fraction(ratio).limit_denominator(denominator_bound)
        if abs(ratio * approx.denominator - approx.numerator) > atol:
            return Periodicity(period=None, constant=False, eigenvalues=eigenvalues)
        lcm = math.lcm(lcm, approx.denominator)

    period = 2 * math.pi * lcm / abs(reference)
    defect = linalg.frobenius(linalg.expm_i_hermitian(H, period, spectrum) - np.eye(len(eigenvalues)))
    if defect >= PERIOD_VERIFY_TOL:
        raise NumericalError(f"period T={period!r} failed verification: |e^(iTH) - I|_F = {defect:.3e}")
    return Periodicity(period=period, constant=False, eigenvalues=eigenvalues)


def parameter_periodicity(circuit, j: int, denominator_bound: int = 10**6, atol: float = 1e-9) -> Periodicity:
    """
    Periodicity of x -> C(p + x e_j). With a single gate on p_j this is the
    periodicity of its generator. With several gates the returned T is a common
    period of all of them; it is a period of the map but need not be the smallest.
    """
    generators = [
        full_generator(g, circuit.num_qubits) for g in circuit.gates if isinstance(g, PARAMETRIC) and g.param_index == j
    ]
    if not generators:
        raise ValidationError(f"parameter {circuit.param_names[j]} drives no gate")
    if len(generators) == 1:
        return periodicity(generators[0], denominator_bound, atol)

    results = [periodicity(H, denominator_bound, atol) for H in generators]
    eigenvalues = tuple(v for r in results for v in r.eigenvalues)
    periods = [r.period for r in results if not r.constant]
    if not periods:
        return Periodicity(period=None, constant=True, eigenvalues=eigenvalues)
    if any(t is None for t in periods):
        return Periodicity(period=None, constant=False, eigenvalues=eigenvalues)

    reference = periods[0]
    lcm = 1
    for t in periods:
        approx = Fraction(t / reference).limit_denominator(denominator_bound)
        if abs(t / reference * approx.denominator - approx.numerator) > atol:
            return Periodicity(period=None, constant=False, eigenvalues=eigenvalues)
        # a common multiple of reference * n_i / d_i for all i
        lcm = math.lcm(lcm, approx.numerator)
    logger.info(f"parameter {circuit.param_names[j]} drives {len(generators)} gates; T is a common period")
    return Periodicity(period=reference * lcm, constant=False, eigenvalues=eigenvalues)


@dataclass(frozen=True, eq=False)
class GoodSet:
    region: Region
    ranks: np.ndarray
    mask: np.ndarray
    base_rank: int
    collisions: tuple[Collision, ...]
    warnings: tuple[str, ...] = field(default=())

    @property
    def node_count(self) -> int:
        return int(self.mask.sum())

    def bounding_box(self) -> list[tuple[float, float]] | None:
        if not self.mask.any():
            return None
        coords = self.region.coordinates()[self.mask.ravel()]
        return [(float(lo), float(hi)) for lo, hi in zip(coords.min(axis=0), coords.max(axis=0))]

    def compact_core(self) -> list[tuple[float, float]] | None:
        """Largest box of good nodes centred on the base node (a compact subset of the good set)."""
        if not self.mask.any():
            return None
        center = self.region.nearest_index(self.region.base)
        if not self.mask[center]:
            return None
        radius = 0
        limit = max(self.mask.shape)
        while radius < limit:
            window = tuple(
                slice(max(c - radius - 1, 0), min(c + radius + 2, n)) for c, n in zip(center, self.mask.shape)
            )
            if not self.mask[window].all():
                break
            radius += 1
        nodes = [g.nodes() for g in self.region.grid]
        return [
            (float(n[max(c - radius, 0)]), float(n[min(c + radius, len(n) - 1)])) for n, c in zip(nodes, center)
        ]

    def to_csv(self, names) -> str:
        lines = [",".join(list(names) + ["in_good_set", "rank"])]
        for local, good, rank in zip(self.region.coordinates(), self.mask.ravel(), self.ranks.ravel()):
            coords = ",".join(repr(float(v)) for v in local)
            lines.append(f"{coords},{int(good)},{rank}")
        return "\n".join(lines) + "\n"


def _wrapping_axes(fmap, region: Region) -> list[int]:
    """Region axes along circle coordinates whose grid covers one full period."""
    periods = fmap.periods
    return [
        i
        for i, (j, g) in enumerate(zip(region.axes, region.grid))
        if not np.isnan(periods[j]) and math.isclose(g.hi - g.lo, periods[j], rel_tol=1e-9)
    ]


def _wrap_labels(labels: np.ndarray, axes) -> np.ndarray:
    """Merge components that touch across the seam of each wrapping axis."""
    pairs = []
    for axis in axes:
        first, last = np.take(labels, 0, axis=axis), np.take(labels, -1, axis=axis)
        touching = (first > 0) & (last > 0)
        pairs.extend(zip(first[touching], last[touching]))
    if not pairs:
        return labels

    count = int(labels.max()) + 1
    rows, cols = np.array(pairs).T
    graph = csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(count, count))
    _, merged = connected_components(graph, directed=False)
    return np.where(labels > 0, merged[labels] + 1, 0)


def good_set_scan(
    fmap,
    q,
    box,
    resolution: float,
    rel_tol: float = DEFAULT_REL_TOL,
    collision_tol: float = 1e-6,
    threads: int = 1,
) -> GoodSet:
    """
    Discrete good set around q: on the slice through q, keep the connected
    component of q among nodes of rank r_q (flood fill), then drop every node
    taking part in a collision. `box` gives one (lo, hi) per kept coordinate.
    Along a circle coordinate whose box spans exactly one period the first and
    last nodes are neighbours, so the fill runs across the seam.
    """
    x = _point(q)
    slc = slice_at(fmap, x, rel_tol)
    region = slice_region(slc, box, resolution)
    points = region.points()

    if slc.rank == 0:
        message = "rank 0 at q: the good set is empty"
        logger.warning(message)
        empty = np.zeros(region.shape, dtype=bool)
        ranks = node_ranks(fmap, points, rel_tol, threads=threads).reshape(region.shape)
        return GoodSet(region, ranks, empty, 0, (), slc.warnings + (message,))

    ranks = node_ranks(fmap, points, rel_tol, columns=slc.kept_indices, threads=threads).reshape(region.shape)
    labels, _ = ndimage.label(ranks == slc.rank)
    labels = _wrap_labels(labels, _wrapping_axes(fmap, region))
    base_label = labels[region.nearest_index(x)]
    component = (labels == base_label) if base_label else np.zeros(region.shape, dtype=bool)

    inside = np.flatnonzero(component.ravel())
    collisions = injectivity_scan(fmap, points[inside], region.spacing, collision_tol, threads)
    mask = component.ravel().copy()
    if collisions:
        colliding = {c.first for c in collisions} | {c.second for c in collisions}
        for index in inside:
            if tuple(points[index]) in colliding:
                mask[index] = False
    mask = mask.reshape(region.shape)

    warnings = slc.warnings
    if not mask.any():
        message = "the good set is empty at this resolution"
        logger.warning(message)
        warnings += (message,)
    logger.info(f"good set: {int(mask.sum())} of {region.size} nodes, {len(collisions)} collisions")
    return GoodSet(region, ranks, mask, slc.rank, tuple(collisions), warnings)


@dataclass(frozen=True)
class EmbeddingBall:
    radius: float
    rank: int
    resolution: float
    collision_tol: float
    tested: tuple[tuple[float, bool], ...]
    diagnostics: tuple[str, ...] = ()


def _ball_passes(fmap, slc, radius, bounds, resolution, rel_tol, collision_tol, drop_tol, threads):
    box = [
        (max(c - radius, lo), min(c + radius, hi))
        for c, (lo, hi) in zip((slc.base_point[j] for j in slc.kept_indices), bounds)
    ]
    region = slice_region(slc, box, resolution)
    points = region.points()
    columns = list(slc.kept_indices)

    jacobians = parallel_map(lambda x: fmap.jacobian(x)[:, columns], points, threads)
    reports = [svd_rank(j, rel_tol) for j in jacobians]
    low = [i for i, r in enumerate(reports) if r.rank != slc.rank]
    if low:
        return False, f"rank differs from {slc.rank} at {len(low)} nodes"

    # a rank drop can sit between nodes: minimize the r-th singular value starting from the worst node
    r = slc.rank
    scale = max(float(rep.singular_values[0]) for rep in reports)

    def sigma_r(local):
        return float(svd_rank(fmap.jacobian(slc.embed(local))[:, columns], rel_tol).singular_values[r - 1])

    worst = min(range(len(reports)), key=lambda i: reports[i].singular_values[r - 1])
    result = optimize.minimize(
        lambda local: (sigma_r(local) / scale) ** 2,
        points[worst, columns],
        method="L-BFGS-B",
        bounds=box,
        options={"maxiter": 200, "ftol": 0.0, "gtol": 1e-14},
    )
    smallest = sigma_r(result.x)
    if smallest <= drop_tol * scale:
        return False, f"singular value {smallest:.3e} near {[float(v) for v in result.x]}: rank drops below {r}"

    collisions = injectivity_scan(fmap, points, resolution, collision_tol, threads)
    if collisions:
        return False, f"{len(collisions)} collision pairs"
    return True, "ok"


def local_embedding_ball(
    fmap,
    q,
    rel_tol: float = DEFAULT_REL_TOL,
    collision_tol: float = 1e-6,
    resolution: float = 0.01,
    max_radius: float | None = None,
    iterations: int = 20,
    drop_tol: float = 1e-6,
    threads: int = 1,
) -> EmbeddingBall:
    """
    Largest tested radius eps (bisection) such that on the slice ball B_eps(q) in
    the max-norm the rank stays r and no collisions are found at `resolution`.
    The ball is first tested at the largest radius the domain allows, half a
    period along circle coordinates. q on the edge of an interval gives eps = 0
    with a diagnostic.

    Between nodes the r-th singular value is minimized; a minimum at or below
    drop_tol times the largest singular value in the ball counts as a rank drop.
    """
    x = _point(q)
    slc = slice_at(fmap, x, rel_tol)
    if slc.rank == 0:
        message = "rank 0 at q: no slice ball exists"
        logger.warning(message)
        return EmbeddingBall(0.0, 0, resolution, collision_tol, (), (message,))

    # circle coordinates have no edge: the ball may reach half a period either way
    periods = fmap.periods
    bounds, reaches = [], []
    for j in slc.kept_indices:
        if not np.isnan(periods[j]):
            bounds.append((-math.inf, math.inf))
            reaches.append(periods[j] / 2)
        else:
            lo, hi = fmap.bounds()[j]
            bounds.append((lo, hi))
            reaches.append(min(x[j] - lo, hi - x[j]))
    reach = min(reaches)
    if reach <= 0:
        message = "q lies on the edge of the domain: no slice ball fits"
        logger.warning(message)
        return EmbeddingBall(0.0, slc.rank, resolution, collision_tol, (), (message,))
    if max_radius is not None:
        reach = min(reach, max_radius)
    if not math.isfinite(reach):
        reach = 1.0

    tested = []
    diagnostics = []

    def check(radius):
        passed, reason = _ball_passes(
            fmap, slc, radius, bounds, resolution, rel_tol, collision_tol, drop_tol, threads
        )
        tested.append((radius, passed))
        logger.debug(f"radius {radius:.6g}: {reason}")
        if not passed:
            diagnostics.append(f"radius {radius:.6g}: {reason}")
        return passed

    if check(reach):
        return EmbeddingBall(reach, slc.rank, resolution, collision_tol, tuple(tested), tuple(diagnostics))

    lo, hi = 0.0, reach
    for _ in range(iterations):
        mid = (lo + hi) / 2
        if check(mid):
            lo = mid
        else:
            hi = mid

    if lo == 0.0:
        diagnostics.append(f"no radius passed down to {hi:.3g} at resolution {resolution}")
        logger.warning(diagnostics[-1])
    return EmbeddingBall(lo, slc.rank, resolution, collision_tol, tuple(tested), tuple(diagnostics))
