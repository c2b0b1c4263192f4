import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from util import ValidationError


@dataclass(frozen=True, eq=False)
class FixtureMap:
    """A differentiable map R^k -> R^m with closed-form value and Jacobian."""

    name: str
    num_params: int
    dim_out: int
    value_fn: Callable
    jacobian_fn: Callable
    domain: tuple[tuple[float, float], ...]  # open box used for default grids
    description: str = ""
    circle_periods: tuple[float, ...] | None = None  # nan for non-circular coordinates

    space = None

    @property
    def max_rank(self) -> int:
        return min(self.num_params, self.dim_out)

    @property
    def periods(self) -> np.ndarray:
        if self.circle_periods is None:
            return np.full(self.num_params, np.nan)
        return np.array(self.circle_periods, dtype=float)

    def value(self, x) -> np.ndarray:
        return np.asarray(self.value_fn(np.asarray(x, dtype=float)), dtype=float)

    def jacobian(self, x) -> np.ndarray:
        return np.asarray(self.jacobian_fn(np.asarray(x, dtype=float)), dtype=float).reshape(self.dim_out, -1)

    def phase_direction(self, x):
        return None

    def bounds(self) -> tuple[tuple[float, float], ...]:
        return self.domain


def _squares():
    return FixtureMap(
        name="squares",
        num_params=2,
        dim_out=2,
        value_fn=lambda x: [x[0] ** 2, x[1] ** 2],
        jacobian_fn=lambda x: [[2 * x[0], 0.0], [0.0, 2 * x[1]]],
        domain=((-1.0, 1.0), (-1.0, 1.0)),
        description="f(x, y) = (x^2, y^2): rank 0 at the origin, 1 on the axes, 2 elsewhere",
    )


def _rank_jump():
    return FixtureMap(
        name="rank_jump",
        num_params=2,
        dim_out=2,
        value_fn=lambda x: [x[1], x[0] ** 2 + x[1]],
        jacobian_fn=lambda x: [[0.0, 1.0], [2 * x[0], 1.0]],
        domain=((-1.0, 1.0), (-1.0, 1.0)),
        description="f(x, y) = (y, x^2 + y): rank 1 on x = 0, rank 2 arbitrarily close to it",
    )


def _figure_eight():
    return FixtureMap(
        name="figure_eight",
        num_params=1,
        dim_out=2,
        value_fn=lambda x: [math.sin(2 * x[0]), math.sin(x[0])],
        jacobian_fn=lambda x: [[2 * math.cos(2 * x[0])], [math.cos(x[0])]],
        domain=((-math.pi, math.pi),),
        description="x -> (sin 2x, sin x): an injective immersion of ]-pi, pi[ that is not an embedding",
    )


def _sphere_chart():
    def value(x):
        theta, phi = x
        return [math.sin(theta) * math.cos(phi), math.sin(theta) * math.sin(phi), math.cos(theta)]

    def jacobian(x):
        theta, phi = x
        return [
            [math.cos(theta) * math.cos(phi), -math.sin(theta) * math.sin(phi)],
            [math.cos(theta) * math.sin(phi), math.sin(theta) * math.cos(phi)],
            [-math.sin(theta), 0.0],
        ]

    return FixtureMap(
        name="sphere_chart",
        num_params=2,
        dim_out=3,
        value_fn=value,
        jacobian_fn=jacobian,
        domain=((0.0, math.pi), (0.0, 2 * math.pi)),
        description="(theta, phi) -> (sin theta cos phi, sin theta sin phi, cos theta), a chart of S^2",
    )


# columns are orthonormal, so every volume element is 1
ISOMETRY = np.array([[1.0, 0.0], [0.0, 0.6], [0.0, 0.8]])


def _isometry():
    return FixtureMap(
        name="isometry",
        num_params=2,
        dim_out=3,
        value_fn=lambda x: ISOMETRY @ x,
        jacobian_fn=lambda x: ISOMETRY,
        domain=((-1.0, 1.0), (-1.0, 1.0)),
        description="linear isometric embedding R^2 -> R^3",
    )


def _constant():
    return FixtureMap(
        name="constant",
        num_params=2,
        dim_out=2,
        value_fn=lambda x: [1.0, -1.0],
        jacobian_fn=lambda x: np.zeros((2, 2)),
        domain=((-1.0, 1.0), (-1.0, 1.0)),
        description="constant map, rank 0 everywhere",
    )


FIXTURES = {
    f.name: f for f in (_squares(), _rank_jump(), _figure_eight(), _sphere_chart(), _isometry(), _constant())
}


def get_fixture(name: str) -> FixtureMap:
    if name not in FIXTURES:
        raise ValidationError(f"unknown fixture '{name}' (available: {', '.join(sorted(FIXTURES))})")
    return FIXTURES[name]
