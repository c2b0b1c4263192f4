from pathlib import Path

import numpy as np
import pytest

CIRCUITS = Path(__file__).resolve().parents[1] / "circuits"


@pytest.fixture
def circuits_dir() -> Path:
    return CIRCUITS


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


@pytest.fixture
def write_circuit(tmp_path):
    """Write circuit text (and optional matrix files) to tmp_path; returns the circuit path."""

    def write(text: str, name: str = "circuit.qc", matrices: dict | None = None) -> Path:
        for filename, body in (matrices or {}).items():
            (tmp_path / filename).write_text(body)
        path = tmp_path / name
        path.write_text(text)
        return path

    return write
