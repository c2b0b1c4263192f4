"""
Everything the geometry service analyzes exposes the same surface as a
FixtureMap: value(x), jacobian(x), phase_direction(x), max_rank, bounds().
"""

from dataclasses import dataclass

import numpy as np

from circuit.circuit import Circuit, compile_unitary
from circuit.space import ParameterSpace
from statemap import statemap


@dataclass(frozen=True, eq=False)
class CircuitStateMap:
    circuit: Circuit
    space: ParameterSpace | None = None
    naive: bool = False

    name = "state map"

    @property
    def num_params(self) -> int:
        return self.circuit.num_params

    @property
    def max_rank(self) -> int:
        # tangent space of S^{2n-1}
        return min(self.num_params, 2 * self.circuit.dim - 1)

    @property
    def periods(self) -> np.ndarray:
        return self.space.periods() if self.space is not None else np.full(self.num_params, np.nan)

    def value(self, x) -> np.ndarray:
        return statemap.state_map(self.circuit, x)

    def jacobian(self, x) -> np.ndarray:
        return statemap.jacobian_analytic(self.circuit, x, naive=self.naive).matrix

    def phase_direction(self, x) -> np.ndarray:
        return statemap.phase_direction(self.circuit, x)

    def bounds(self) -> tuple[tuple[float, float], ...]:
        if self.space is None:
            return tuple((-np.inf, np.inf) for _ in range(self.num_params))
        return tuple(f.bounds() for f in self.space.factors)


@dataclass(frozen=True, eq=False)
class CircuitUnitaryMap(CircuitStateMap):
    name = "unitary map"

    @property
    def max_rank(self) -> int:
        # dim U(n) = n^2
        return min(self.num_params, self.circuit.dim**2)

    def value(self, x) -> np.ndarray:
        return statemap.realify(compile_unitary(self.circuit, x))

    def jacobian(self, x) -> np.ndarray:
        return statemap.unitary_jacobian(self.circuit, x, naive=self.naive).matrix

    def phase_direction(self, x) -> np.ndarray:
        return statemap.realify(1j * compile_unitary(self.circuit, x))
