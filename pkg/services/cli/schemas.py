from typing import Literal

from pydantic import BaseModel, field_validator, model_validator

COMMANDS = ("rank", "landscape", "superfluous", "slice", "goodset", "injectivity", "expressivity", "volume", "chain")


class RunConfig(BaseModel):
    command: Literal[COMMANDS]
    command_line: str = ""

    # what to analyze
    circuit: str | None = None
    fixture: str | None = None
    compare: str | None = None
    cover: str | None = None
    map: Literal["state", "unitary"] = "state"

    # where
    at: list[float] | None = None
    a: list[float] | None = None
    b: list[float] | None = None
    param: str | None = None
    grid: list[str] | None = None
    axes: list[int] | None = None
    box: list[str] | None = None
    resolution: float = 0.05
    ball: bool = False

    # tolerances
    rel_tol: float = 1e-9
    collision_tol: float = 1e-6
    fd_step: float = 1e-5
    denominator_bound: int = 10**6

    # sampling
    samples: int = 2000
    haar_samples: int | None = None
    seed: int = 0
    norm: Literal["frobenius", "trace"] = "frobenius"
    self_test: bool = False

    threads: int = 1
    out: str | None = None
    strict_boundary: bool = False
    naive_jacobian: bool = False
    verbose: bool = False

    @field_validator("rel_tol", "collision_tol", "fd_step", "resolution")
    @classmethod
    def positive_tolerance(cls, value, info):
        if not value > 0:
            raise ValueError(f"{info.field_name} must be > 0")
        return value

    @field_validator("samples", "haar_samples", "denominator_bound", "threads")
    @classmethod
    def positive_count(cls, value, info):
        if value is not None and value < 1:
            raise ValueError(f"{info.field_name} must be a positive count")
        return value

    @model_validator(mode="after")
    def one_target(self):
        if self.command in ("chain",):
            if self.cover is None or self.a is None or self.b is None:
                raise ValueError("chain needs a cover file and both endpoints --a and --b")
            return self
        if self.command == "expressivity":
            if self.circuit is None:
                raise ValueError("expressivity needs a circuit file")
            return self
        if (self.circuit is None) == (self.fixture is None):
            raise ValueError(f"{self.command} needs exactly one of a circuit file or --fixture")
        return self

    @property
    def haar_draws(self) -> int:
        return self.samples if self.haar_samples is None else self.haar_samples

    def tolerances(self) -> dict:
        return {
            "collision_tol": self.collision_tol,
            "denominator_bound": self.denominator_bound,
            "fd_step": self.fd_step,
            "rel_tol": self.rel_tol,
        }
