import math
from dataclasses import dataclass

import numpy as np

from util import ValidationError


@dataclass(frozen=True)
class GridAxis:
    """`steps` half-open cells over [lo, hi], sampled at cell midpoints."""

    lo: float
    hi: float
    steps: int

    def __post_init__(self):
        if self.steps < 1:
            raise ValidationError(f"grid needs at least one step, got {self.steps}")
        if self.hi < self.lo:
            raise ValidationError(f"grid needs lo <= hi, got {self.lo}:{self.hi}")

    @classmethod
    def parse(cls, spec: str) -> "GridAxis":
        parts = spec.split(":")
        if len(parts) != 3:
            raise ValidationError(f"grid axis must look like lo:hi:steps, got '{spec}'")
        try:
            return cls(float(parts[0]), float(parts[1]), int(parts[2]))
        except ValueError:
            raise ValidationError(f"grid axis must look like lo:hi:steps, got '{spec}'") from None

    @classmethod
    def with_resolution(cls, lo: float, hi: float, resolution: float) -> "GridAxis":
        if hi <= lo:
            return cls(lo, lo, 1)
        return cls(lo, hi, max(1, math.ceil((hi - lo) / resolution - 1e-9)))

    @property
    def width(self) -> float:
        return (self.hi - self.lo) / self.steps

    def nodes(self) -> np.ndarray:
        # written as a weighted mean so symmetric grids put a node exactly on 0
        i = np.arange(self.steps)
        return (self.lo * (2 * self.steps - 2 * i - 1) + self.hi * (2 * i + 1)) / (2 * self.steps)

    def spec(self) -> str:
        return f"{self.lo!r}:{self.hi!r}:{self.steps}"


@dataclass(frozen=True, eq=False)
class Region:
    """A grid over some coordinates of a base point; the other coordinates stay frozen."""

    base: np.ndarray
    axes: tuple[int, ...]
    grid: tuple[GridAxis, ...]

    def __post_init__(self):
        if len(self.axes) != len(self.grid):
            raise ValidationError("one grid axis per region axis is required")
        for axis in self.axes:
            if not 0 <= axis < len(self.base):
                raise ValidationError(f"axis {axis} out of range for {len(self.base)} parameters")

    @classmethod
    def box(cls, base, axes, bounds, resolution: float) -> "Region":
        grid = tuple(GridAxis.with_resolution(lo, hi, resolution) for lo, hi in bounds)
        return cls(base=np.asarray(base, dtype=float), axes=tuple(axes), grid=grid)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(g.steps for g in self.grid)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape)) if self.grid else 1

    @property
    def cell_volume(self) -> float:
        return float(np.prod([g.width for g in self.grid])) if self.grid else 1.0

    @property
    def spacing(self) -> float:
        widths = [g.width for g in self.grid if g.width > 0]
        return max(widths) if widths else 0.0

    def coordinates(self) -> np.ndarray:
        """Node coordinates along the region axes, row-major, shape (size, len(axes))."""
        if not self.grid:
            return np.zeros((1, 0))
        mesh = np.meshgrid(*[g.nodes() for g in self.grid], indexing="ij")
        return np.column_stack([m.ravel() for m in mesh])

    def points(self) -> np.ndarray:
        """Full parameter vectors of every node, row-major."""
        local = self.coordinates()
        points = np.tile(self.base, (local.shape[0], 1))
        if self.axes:
            points[:, list(self.axes)] = local
        return points

    def nearest_index(self, x) -> tuple[int, ...]:
        x = np.asarray(x, dtype=float)
        index = []
        for axis, g in zip(self.axes, self.grid):
            index.append(int(np.argmin(np.abs(g.nodes() - x[axis]))))
        return tuple(index)
