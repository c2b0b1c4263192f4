import dataclasses
from dataclasses import dataclass, field

import numpy as np

from linalg.linalg import DEFAULT_REL_TOL, RankReport, svd_rank
from statemap.statemap import in_column_span
from util import ValidationError, createLogger, parallel_map

from .grids import GridAxis, Region

logger = createLogger("geometry")


def _point(x) -> np.ndarray:
    if hasattr(x, "as_array"):
        return x.as_array()
    return np.atleast_1d(np.asarray(x, dtype=float))


def rank_at(fmap, p, rel_tol: float = DEFAULT_REL_TOL) -> RankReport:
    x = _point(p)
    jacobian = fmap.jacobian(x)
    report = svd_rank(jacobian, rel_tol)

    phase = fmap.phase_direction(x)
    phase_in_span = None if phase is None else in_column_span(jacobian, phase, rel_tol)
    return dataclasses.replace(
        report,
        base_point=tuple(float(v) for v in x),
        phase_in_span=phase_in_span,
        max_rank=fmap.max_rank,
    )


@dataclass(frozen=True)
class ParameterPartition:
    essential: tuple[int, ...]
    superfluous: tuple[int, ...]
    rank_profile: tuple[int, ...]  # rank after parameter j was considered
    shared: tuple[int, ...] = ()

    @property
    def rank(self) -> int:
        return len(self.essential)


def _greedy_columns(jacobian: np.ndarray, rel_tol: float) -> tuple[list[int], list[int]]:
    accepted = []
    profile = []
    rank = 0
    for j in range(jacobian.shape[1]):
        candidate = accepted + [j]
        candidate_rank = svd_rank(jacobian[:, candidate], rel_tol).rank
        if candidate_rank > rank:
            accepted = candidate
            rank = candidate_rank
        profile.append(rank)
    return accepted, profile


def superfluous_params(fmap, p, rel_tol: float = DEFAULT_REL_TOL) -> ParameterPartition:
    """
    Greedy left-to-right scan: parameter j is essential iff its Jacobian column
    raises the rank of the columns accepted so far. Declaration order breaks ties.
    """
    jacobian = fmap.jacobian(_point(p))
    essential, profile = _greedy_columns(jacobian, rel_tol)
    superfluous = [j for j in range(jacobian.shape[1]) if j not in essential]

    shared = ()
    circuit = getattr(fmap, "circuit", None)
    if circuit is not None and circuit.shared_params():
        shared = tuple(circuit.shared_params())
        logger.warning(f"parameters {list(shared)} drive several gates; their columns are sums of gate contributions")

    logger.info(f"essential parameters {essential}, superfluous {superfluous}")
    return ParameterPartition(tuple(essential), tuple(superfluous), tuple(profile), shared)


@dataclass(frozen=True, eq=False)
class RankLandscape:
    axes: tuple[int, int]
    grid: tuple[GridAxis, GridAxis]
    ranks: np.ndarray
    rel_tol: float

    def to_csv(self) -> str:
        lines = ["axis1,axis2,rank"]
        first, second = self.grid[0].nodes(), self.grid[1].nodes()
        for i, x in enumerate(first):
            for j, y in enumerate(second):
                lines.append(f"{x!r},{y!r},{self.ranks[i, j]}")
        return "\n".join(lines) + "\n"

    def counts(self) -> dict[int, int]:
        values, counts = np.unique(self.ranks, return_counts=True)
        return {int(v): int(c) for v, c in zip(values, counts)}


def node_ranks(fmap, points, rel_tol: float, columns=None, threads: int = 1) -> np.ndarray:
    def rank_of(x):
        jacobian = fmap.jacobian(x)
        if columns is not None:
            jacobian = jacobian[:, list(columns)]
        return svd_rank(jacobian, rel_tol).rank

    return np.array(parallel_map(rank_of, points, threads), dtype=int)


def rank_landscape(fmap, axes, grid, frozen=None, rel_tol: float = DEFAULT_REL_TOL, threads: int = 1) -> RankLandscape:
    base = np.zeros(fmap.num_params) if frozen is None else _point(frozen)
    region = Region(base=base, axes=tuple(axes), grid=tuple(grid))
    ranks = node_ranks(fmap, region.points(), rel_tol, threads=threads).reshape(region.shape)
    return RankLandscape(axes=tuple(axes), grid=tuple(grid), ranks=ranks, rel_tol=rel_tol)


@dataclass(frozen=True, eq=False)
class Slice:
    base_point: tuple[float, ...]
    kept_indices: tuple[int, ...]
    fixed_values: dict[int, float]
    rank: int
    warnings: tuple[str, ...] = field(default=())

    def __post_init__(self):
        indices = sorted(list(self.kept_indices) + list(self.fixed_values))
        if indices != list(range(len(self.base_point))):
            raise ValidationError("kept and fixed indices must partition the parameters")

    def embed(self, local) -> np.ndarray:
        """Full parameter vector for coordinates along the kept indices."""
        x = np.array(self.base_point, dtype=float)
        x[list(self.kept_indices)] = local
        return x


def slice_at(fmap, q, rel_tol: float = DEFAULT_REL_TOL) -> Slice:
    x = _point(q)
    partition = superfluous_params(fmap, x, rel_tol)
    warnings = ()
    if partition.rank == 0:
        message = "rank 0 at the base point: the slice is degenerate (no kept coordinates)"
        logger.warning(message)
        warnings = (message,)
    if partition.shared:
        warnings += (f"parameters {list(partition.shared)} are shared; the slice treats them as one coordinate",)

    return Slice(
        base_point=tuple(float(v) for v in x),
        kept_indices=partition.essential,
        fixed_values={j: float(x[j]) for j in partition.superfluous},
        rank=partition.rank,
        warnings=warnings,
    )


@dataclass(frozen=True, eq=False)
class SliceScan:
    region: Region
    ranks: np.ndarray
    expected_rank: int

    @property
    def flagged(self) -> np.ndarray:
        """Indices (row-major) of nodes whose rank differs from the slice dimension."""
        return np.flatnonzero(self.ranks.ravel() != self.expected_rank)

    def to_csv(self, names) -> str:
        lines = [",".join(list(names) + ["rank", "flagged"])]
        for local, rank in zip(self.region.coordinates(), self.ranks.ravel()):
            coords = ",".join(repr(float(v)) for v in local)
            lines.append(f"{coords},{rank},{int(rank != self.expected_rank)}")
        return "\n".join(lines) + "\n"


def slice_region(slc: Slice, box, resolution: float) -> Region:
    return Region.box(slc.base_point, slc.kept_indices, box, resolution)


def slice_rank_scan(fmap, slc: Slice, box, resolution: float, rel_tol: float = DEFAULT_REL_TOL, threads: int = 1) -> SliceScan:
    """
    Rank of the map restricted to the slice at every node of the box (one (lo, hi)
    per kept coordinate). Constancy is only guaranteed near the base point, so
    deviating nodes are flagged, not rejected. Nodes are checked one by one, so
    a box along a circle coordinate may extend past the period.
    """
    region = slice_region(slc, box, resolution)
    ranks = node_ranks(fmap, region.points(), rel_tol, columns=slc.kept_indices, threads=threads)
    scan = SliceScan(region=region, ranks=ranks.reshape(region.shape), expected_rank=slc.rank)
    if scan.flagged.size:
        logger.warning(f"{scan.flagged.size} of {region.size} nodes deviate from rank {slc.rank}")
    return scan
