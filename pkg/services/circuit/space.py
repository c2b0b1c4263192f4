import math
from dataclasses import dataclass, field

import numpy as np

from util import ValidationError, createLogger

logger = createLogger("circuit.space")


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float
    lo_closed: bool = False
    hi_closed: bool = False

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValidationError(f"interval needs lo < hi, got [{self.lo}, {self.hi}]")

    @property
    def bounded(self) -> bool:
        return True

    @property
    def closed_endpoints(self) -> int:
        return int(self.lo_closed) + int(self.hi_closed)

    def bounds(self) -> tuple[float, float]:
        return self.lo, self.hi

    def canonical(self, x: float) -> float:
        return x

    def contains(self, x: float) -> bool:
        above = x >= self.lo if self.lo_closed else x > self.lo
        below = x <= self.hi if self.hi_closed else x < self.hi
        return above and below

    def describe(self) -> str:
        left = "[" if self.lo_closed else "("
        right = "]" if self.hi_closed else ")"
        return f"interval {left} {self.lo!r} {self.hi!r} {right}"


@dataclass(frozen=True)
class FullLine:
    @property
    def bounded(self) -> bool:
        return False

    @property
    def closed_endpoints(self) -> int:
        return 0

    def bounds(self) -> tuple[float, float]:
        return -math.inf, math.inf

    def canonical(self, x: float) -> float:
        return x

    def contains(self, x: float) -> bool:
        return math.isfinite(x)

    def describe(self) -> str:
        return "line"


@dataclass(frozen=True)
class Circle:
    period: float = 2 * math.pi

    def __post_init__(self):
        if not self.period > 0:
            raise ValidationError(f"circle period must be positive, got {self.period}")

    @property
    def bounded(self) -> bool:
        return True

    @property
    def closed_endpoints(self) -> int:
        return 0

    def bounds(self) -> tuple[float, float]:
        return 0.0, self.period

    def canonical(self, x: float) -> float:
        reduced = math.fmod(x, self.period)
        if reduced < 0:
            reduced += self.period
        # fmod can land exactly on the period after the shift
        return 0.0 if reduced >= self.period else reduced

    def contains(self, x: float) -> bool:
        return math.isfinite(x)

    def describe(self) -> str:
        return f"circle {self.period!r}"


Factor = Interval | FullLine | Circle


@dataclass(frozen=True)
class ParameterPoint:
    coords: tuple[float, ...]

    def as_array(self) -> np.ndarray:
        return np.array(self.coords, dtype=float)

    def __len__(self) -> int:
        return len(self.coords)


@dataclass(frozen=True)
class ParameterSpace:
    names: tuple[str, ...]
    factors: tuple[Factor, ...]
    warnings: tuple[str, ...] = field(default=(), compare=False)

    @property
    def k(self) -> int:
        return len(self.factors)

    @property
    def bounded(self) -> bool:
        return all(f.bounded for f in self.factors)

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise ValidationError(f"unknown parameter '{name}'") from None

    def periods(self) -> np.ndarray:
        return np.array([f.period if isinstance(f, Circle) else np.nan for f in self.factors])

    def canonicalize(self, coords) -> np.ndarray:
        coords = np.asarray(coords, dtype=float)
        return np.array([f.canonical(x) for f, x in zip(self.factors, coords)], dtype=float)

    def contains(self, coords) -> bool:
        coords = np.asarray(coords, dtype=float)
        if coords.shape != (self.k,):
            return False
        return all(f.contains(x) for f, x in zip(self.factors, coords))

    def point(self, coords) -> ParameterPoint:
        coords = np.asarray(coords, dtype=float).ravel()
        if coords.shape != (self.k,):
            raise ValidationError(f"point not in parameter space: expected {self.k} coordinates, got {coords.size}")
        if not self.contains(coords):
            raise ValidationError(f"point not in parameter space: {list(coords)}")
        return ParameterPoint(tuple(float(x) for x in self.canonicalize(coords)))

    def closed_side(self, j: int, x: float, h: float) -> str | None:
        """Which side of coordinate j cannot take a step of size h ('lo', 'hi' or None)."""
        factor = self.factors[j]
        if not isinstance(factor, Interval):
            return None
        if x - h < factor.lo or (x - h == factor.lo and not factor.lo_closed):
            return "lo"
        if x + h > factor.hi or (x + h == factor.hi and not factor.hi_closed):
            return "hi"
        return None

    def check_boundary(self, strict: bool = False) -> list[str]:
        cornered = [name for name, f in zip(self.names, self.factors) if f.closed_endpoints]
        if len(cornered) < 2:
            return []
        message = (
            f"parameters {', '.join(cornered)} all include boundary points; the product has corners "
            "and is not a manifold with boundary"
        )
        if strict:
            raise ValidationError(message)
        logger.warning(message)
        return [message]

    def sample_uniform(self, rng: np.random.Generator) -> np.ndarray:
        if not self.bounded:
            raise ValidationError("uniform measure on ℙ undefined; bound the parameter space")
        coords = np.empty(self.k)
        for j, factor in enumerate(self.factors):
            lo, hi = factor.bounds()
            coords[j] = lo + (hi - lo) * rng.random()
        return coords
