"""
Line-oriented circuit grammar (`#` starts a comment):

    qubits <n_q>
    param <name> line | circle [<period>] | interval <(|[> <lo> <hi> <)|]>
    init ket <bitstring> | init vec <2^n_q complex tokens>
    gate rx|ry|rz <wire> <param> [scale <s>]
    gate expgen <matrix-file> <param> [sign +|-]
    gate sq <matrix-file> <wire> <param> [sign +|-]
    gate fixed <matrix-file>
    gate cx <control> <target>

Parameter order follows declaration order. Matrix files are resolved
relative to the circuit file.
"""

import math
import re
from pathlib import Path

import numpy as np

from linalg import linalg
from linalg.matrix_io import format_complex, load_matrix, parse_tokens, split_with_columns, write_matrix
from util import InputError, ValidationError, createLogger

from .circuit import Circuit, basis_state
from .gates import CNOT, FixedUnitary, ParamExp, ParamSingleQubit, frozen, rotation
from .space import Circle, FullLine, Interval, ParameterSpace

logger = createLogger("circuit.parser")

INTERVAL = re.compile(r"^([\(\[])\s*(\S+?)\s*[,\s]\s*(\S+?)\s*([\)\]])$")


class _Line:
    def __init__(self, number: int, text: str):
        self.number = number
        self.tokens, self.columns = split_with_columns(text)

    def error(self, message: str, token: int = 0) -> ValidationError:
        column = self.columns[min(token, len(self.columns) - 1)] if self.columns else 1
        return ValidationError(f"line {self.number}, column {column}: {message}")

    def arg(self, token: int, what: str) -> str:
        if token >= len(self.tokens):
            raise self.error(f"missing {what}", len(self.tokens))
        return self.tokens[token]

    def integer(self, token: int, what: str) -> int:
        value = self.arg(token, what)
        try:
            return int(value)
        except ValueError:
            raise self.error(f"{what} must be an integer, got '{value}'", token) from None

    def real(self, token: int, what: str) -> float:
        value = self.arg(token, what)
        try:
            result = float(value)
        except ValueError:
            raise self.error(f"{what} must be a number, got '{value}'", token) from None
        if not math.isfinite(result):
            raise self.error(f"{what} must be finite", token)
        return result


class _Builder:
    def __init__(self, base_dir: Path):
        self.base_dir = base_dir
        self.num_qubits = None
        self.names = []
        self.factors = []
        self.state = None
        self.gates = []

    def require_qubits(self, line: _Line):
        if self.num_qubits is None:
            raise line.error("'qubits' must be declared first")
        return self.num_qubits

    def param(self, line: _Line, token: int) -> int:
        name = line.arg(token, "parameter name")
        if name not in self.names:
            raise line.error(f"unknown parameter '{name}'", token)
        return self.names.index(name)

    def wire(self, line: _Line, token: int) -> int:
        wire = line.integer(token, "wire")
        if not 0 <= wire < self.require_qubits(line):
            raise line.error(f"wire out of range: {wire} (qubits: {self.num_qubits})", token)
        return wire

    def matrix(self, line: _Line, token: int) -> np.ndarray:
        path = self.base_dir / line.arg(token, "matrix file")
        try:
            return load_matrix(path)
        except ValidationError as e:
            raise line.error(str(e), token) from e

    def sign(self, line: _Line, token: int) -> int:
        if token >= len(line.tokens):
            return -1
        if line.tokens[token] != "sign":
            raise line.error(f"unexpected '{line.tokens[token]}'", token)
        value = line.arg(token + 1, "sign value")
        if value not in ("+", "-"):
            raise line.error(f"sign must be + or -, got '{value}'", token + 1)
        if len(line.tokens) > token + 2:
            raise line.error(f"unexpected '{line.tokens[token + 2]}'", token + 2)
        return 1 if value == "+" else -1

    def unitary(self, line: _Line, token: int) -> np.ndarray:
        matrix = self.matrix(line, token)
        dim = 2 ** self.require_qubits(line)
        if matrix.shape != (dim, dim):
            raise line.error(f"fixed gate must be {dim}x{dim}, got {matrix.shape[0]}x{matrix.shape[1]}", token)
        if not linalg.is_unitary(matrix):
            raise line.error(f"non-unitary fixed matrix (defect {linalg.unitarity_defect(matrix):.3e})", token)
        return matrix

    def hermitian(self, line: _Line, token: int, dim: int) -> np.ndarray:
        matrix = self.matrix(line, token)
        if matrix.shape != (dim, dim):
            raise line.error(f"generator must be {dim}x{dim}, got {matrix.shape[0]}x{matrix.shape[1]}", token)
        try:
            return linalg.check_hermitian(matrix)
        except ValidationError as e:
            raise line.error(f"non-Hermitian generator: {e}", token) from e


def _qubits(b: _Builder, line: _Line):
    if b.num_qubits is not None:
        raise line.error("'qubits' declared twice")
    b.num_qubits = line.integer(1, "qubit count")
    if b.num_qubits < 1:
        raise line.error("qubit count must be positive", 1)


def _param(b: _Builder, line: _Line):
    name = line.arg(1, "parameter name")
    if name in b.names:
        raise line.error(f"parameter '{name}' declared twice", 1)
    kind = line.arg(2, "parameter kind")

    try:
        if kind == "line":
            factor = FullLine()
            extra = 3
        elif kind == "circle":
            factor = Circle(line.real(3, "period")) if len(line.tokens) > 3 else Circle()
            extra = 4
        elif kind == "interval":
            rest = " ".join(line.tokens[3:])
            match = INTERVAL.match(rest)
            if match is None:
                raise line.error("interval must look like '( lo hi ]'", 3)
            lo, hi = float(match.group(2)), float(match.group(3))
            factor = Interval(lo, hi, lo_closed=match.group(1) == "[", hi_closed=match.group(4) == "]")
            extra = len(line.tokens)
        else:
            raise line.error(f"unknown parameter kind '{kind}'", 2)
    except ValueError:
        raise line.error("interval bounds must be numbers", 3) from None
    except ValidationError as e:
        if str(e).startswith("line "):
            raise
        raise line.error(str(e), 3) from e

    if len(line.tokens) > extra:
        raise line.error(f"unexpected '{line.tokens[extra]}'", extra)
    b.names.append(name)
    b.factors.append(factor)


def _init(b: _Builder, line: _Line):
    if b.state is not None:
        raise line.error("initial state declared twice")
    n_q = b.require_qubits(line)
    kind = line.arg(1, "init kind")
    if kind == "ket":
        bits = line.arg(2, "bitstring")
        if len(bits) != n_q or set(bits) - {"0", "1"}:
            raise line.error(f"bitstring must have {n_q} binary digits, got '{bits}'", 2)
        b.state = basis_state(bits)
    elif kind == "vec":
        tokens = line.tokens[2:]
        if len(tokens) != 2**n_q:
            raise line.error(f"init vec needs {2**n_q} amplitudes, got {len(tokens)}", 2)
        b.state = np.array(parse_tokens(tokens, line.number, line.columns[2:]), dtype=complex)
        if abs(np.linalg.norm(b.state) - 1) > 1e-12:
            raise line.error(f"initial state is not normalized (norm {np.linalg.norm(b.state):.15g})", 2)
    else:
        raise line.error(f"unknown init kind '{kind}'", 1)


def _gate(b: _Builder, line: _Line):
    n_q = b.require_qubits(line)
    kind = line.arg(1, "gate kind")

    if kind in ("rx", "ry", "rz"):
        wire = b.wire(line, 2)
        index = b.param(line, 3)
        scale = 1.0
        if len(line.tokens) > 4:
            if line.tokens[4] != "scale":
                raise line.error(f"unexpected '{line.tokens[4]}'", 4)
            scale = line.real(5, "scale")
            if len(line.tokens) > 6:
                raise line.error(f"unexpected '{line.tokens[6]}'", 6)
        b.gates.append(rotation(kind[1], wire, index, scale))
    elif kind == "expgen":
        generator = b.hermitian(line, 2, 2**n_q)
        index = b.param(line, 3)
        b.gates.append(ParamExp(frozen(generator), index, b.sign(line, 4), source=line.tokens[2]))
    elif kind == "sq":
        generator = b.hermitian(line, 2, 2)
        wire = b.wire(line, 3)
        index = b.param(line, 4)
        b.gates.append(ParamSingleQubit(frozen(generator), wire, index, b.sign(line, 5), source=line.tokens[2]))
    elif kind == "fixed":
        matrix = b.unitary(line, 2)
        if len(line.tokens) > 3:
            raise line.error(f"unexpected '{line.tokens[3]}'", 3)
        b.gates.append(FixedUnitary(frozen(matrix), source=line.tokens[2]))
    elif kind == "cx":
        control, target = b.wire(line, 2), b.wire(line, 3)
        if control == target:
            raise line.error("cx control and target must differ", 3)
        if len(line.tokens) > 4:
            raise line.error(f"unexpected '{line.tokens[4]}'", 4)
        b.gates.append(CNOT(control, target))
    else:
        raise line.error(f"unknown gate '{kind}'", 1)


DIRECTIVES = {"qubits": _qubits, "param": _param, "init": _init, "gate": _gate}


def parse_circuit(
    text: str,
    base_dir=".",
    strict_boundary: bool = False,
    allow_unused_params: bool = False,
) -> tuple[Circuit, ParameterSpace]:
    b = _Builder(Path(base_dir))

    for number, raw in enumerate(text.splitlines(), start=1):
        content = raw.split("#", 1)[0]
        if not content.strip():
            continue
        line = _Line(number, content)
        directive = DIRECTIVES.get(line.tokens[0])
        if directive is None:
            raise line.error(f"unknown directive '{line.tokens[0]}'")
        directive(b, line)

    if b.num_qubits is None:
        raise ValidationError("line 1, column 1: missing 'qubits' declaration")

    circuit = Circuit(
        num_qubits=b.num_qubits,
        gates=tuple(b.gates),
        num_params=len(b.names),
        initial_state=b.state if b.state is not None else basis_state("0" * b.num_qubits),
        param_names=tuple(b.names),
    )

    unused = [circuit.param_names[j] for j in circuit.unused_params()]
    if unused:
        message = f"parameters drive no gate: {', '.join(unused)}"
        if not allow_unused_params:
            raise ValidationError(message)
        logger.warning(message)

    space = ParameterSpace(names=tuple(b.names), factors=tuple(b.factors))
    warnings = space.check_boundary(strict=strict_boundary)
    if circuit.shared_params():
        shared = ", ".join(circuit.param_names[j] for j in circuit.shared_params())
        message = f"parameters shared by several gates: {shared}; slice constructions assume independent coordinates"
        logger.warning(message)
        warnings.append(message)
    space = ParameterSpace(names=space.names, factors=space.factors, warnings=tuple(warnings))

    logger.info(f"parsed circuit: {circuit.num_qubits} qubits, {len(circuit.gates)} gates, {circuit.num_params} params")
    return circuit, space


def load_circuit(path, **kwargs) -> tuple[Circuit, ParameterSpace]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise InputError(f"cannot open {path}: {e.strerror}") from e
    try:
        return parse_circuit(text, base_dir=path.parent, **kwargs)
    except ValidationError as e:
        raise ValidationError(f"{path}: {e}") from e


def serialize_circuit(circuit: Circuit, space: ParameterSpace, directory, stem: str = "circuit") -> str:
    """Write the circuit back to the grammar. Gate matrices go to `<stem>_g<i>.mat` next to it."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)

    lines = [f"qubits {circuit.num_qubits}"]
    for name, factor in zip(space.names, space.factors):
        lines.append(f"param {name} {factor.describe()}")
    lines.append("init vec " + " ".join(format_complex(z) for z in circuit.initial_state))

    for i, gate in enumerate(circuit.gates):
        if isinstance(gate, CNOT):
            lines.append(f"gate cx {gate.control} {gate.target}")
            continue

        filename = f"{stem}_g{i}.mat"
        if isinstance(gate, FixedUnitary):
            (directory / filename).write_text(write_matrix(gate.matrix), encoding="utf-8")
            lines.append(f"gate fixed {filename}")
            continue

        (directory / filename).write_text(write_matrix(gate.generator), encoding="utf-8")
        name = circuit.param_names[gate.param_index]
        sign = "+" if gate.sign > 0 else "-"
        if isinstance(gate, ParamSingleQubit):
            lines.append(f"gate sq {filename} {gate.wire} {name} sign {sign}")
        else:
            lines.append(f"gate expgen {filename} {name} sign {sign}")

    text = "\n".join(lines) + "\n"
    (directory / f"{stem}.qc").write_text(text, encoding="utf-8")
    return text
