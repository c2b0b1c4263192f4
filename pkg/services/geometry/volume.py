from dataclasses import dataclass

import numpy as np

from linalg.linalg import DEFAULT_REL_TOL, gram_volume, svd_rank
from util import createLogger, parallel_map

from .geometry import _point
from .grids import Region

logger = createLogger("geometry.volume")


def _element(fmap, x, columns, rel_tol) -> float:
    jacobian = fmap.jacobian(x)[:, list(columns)]
    if svd_rank(jacobian, rel_tol).rank < len(columns):
        return 0.0
    # sqrt(det(J^T J)): the Gram determinant of the columns
    return gram_volume(jacobian.T)


def volume_element(fmap, p, rel_tol: float = DEFAULT_REL_TOL, columns=None) -> float:
    """
    Riemannian volume element sqrt(det(J^T J)) of the pullback metric at p,
    J restricted to `columns` (all parameters by default). Zero with a warning
    when those columns are rank deficient.
    """
    x = _point(p)
    columns = range(fmap.num_params) if columns is None else columns
    value = _element(fmap, x, columns, rel_tol)
    if value == 0.0:
        logger.warning(f"rank deficient at {list(map(float, x))}: volume element is 0")
    return value


@dataclass(frozen=True)
class PatchVolume:
    volume: float
    nodes: int
    deficient_nodes: int
    cell_volume: float


def patch_volume(fmap, region: Region, rel_tol: float = DEFAULT_REL_TOL, threads: int = 1) -> PatchVolume:
    """Midpoint Riemann sum of the volume element over the region, using the region axes as coordinates."""
    cell = region.cell_volume
    if cell == 0.0:
        return PatchVolume(0.0, region.size, 0, 0.0)

    elements = np.array(parallel_map(lambda x: _element(fmap, x, region.axes, rel_tol), region.points(), threads))
    deficient = int(np.count_nonzero(elements == 0.0))
    if deficient:
        logger.warning(f"{deficient} of {region.size} nodes are rank deficient and contribute 0")
    # fixed summation order keeps the result independent of the thread count
    return PatchVolume(float(np.sum(elements) * cell), region.size, deficient, cell)
