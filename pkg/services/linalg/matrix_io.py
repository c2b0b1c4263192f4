"""
Plain-text matrix format shared by circuit files and report dumps:

    complex <rows> <cols>
    1 0.5-0.5i -1i
    ...

Lines starting with `#` are comments. Parsing never depends on the locale.
"""

from pathlib import Path

import numpy as np

from util import InputError, ValidationError


def parse_complex(token: str) -> complex:
    body = token.strip()
    if not body:
        raise ValueError("empty token")

    if not body.endswith("i"):
        return complex(float(body), 0.0)

    body = body[:-1]
    # the split point is the last sign that does not belong to an exponent
    split = 0
    for k in range(len(body) - 1, 0, -1):
        if body[k] in "+-" and body[k - 1] not in "eE":
            split = k
            break

    real_part, imag_part = body[:split], body[split:]
    if imag_part in ("", "+"):
        imag = 1.0
    elif imag_part == "-":
        imag = -1.0
    else:
        imag = float(imag_part)
    return complex(float(real_part) if real_part else 0.0, imag)


def format_complex(z: complex) -> str:
    z = complex(z)
    if z.imag == 0:
        return f"{z.real:.17g}"
    if z.real == 0:
        return f"{z.imag:.17g}i"
    return f"{z.real:.17g}{z.imag:+.17g}i"


def parse_tokens(tokens, line_no: int, columns) -> list[complex]:
    values = []
    for token, col in zip(tokens, columns):
        try:
            values.append(parse_complex(token))
        except ValueError:
            raise ValidationError(f"line {line_no}, column {col}: cannot parse complex number '{token}'") from None
    return values


def split_with_columns(line: str) -> tuple[list[str], list[int]]:
    tokens, columns = [], []
    col = 0
    for token in line.split():
        col = line.index(token, col)
        tokens.append(token)
        columns.append(col + 1)
        col += len(token)
    return tokens, columns


def read_matrix(text: str) -> np.ndarray:
    rows = None
    cols = None
    data = []

    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        tokens, columns = split_with_columns(line)

        if rows is None:
            if len(tokens) != 3 or tokens[0] != "complex":
                raise ValidationError(f"line {line_no}, column 1: expected header 'complex <rows> <cols>'")
            try:
                rows, cols = int(tokens[1]), int(tokens[2])
            except ValueError:
                raise ValidationError(f"line {line_no}, column {columns[1]}: matrix size must be integers") from None
            if rows < 0 or cols < 0:
                raise ValidationError(f"line {line_no}, column {columns[1]}: matrix size must be non-negative")
            continue

        if len(tokens) != cols:
            raise ValidationError(f"line {line_no}, column 1: expected {cols} entries, found {len(tokens)}")
        if len(data) == rows:
            raise ValidationError(f"line {line_no}, column 1: more than {rows} rows")
        data.append(parse_tokens(tokens, line_no, columns))

    if rows is None:
        raise ValidationError("line 1, column 1: empty matrix file")
    if len(data) != rows:
        raise ValidationError(f"expected {rows} rows, found {len(data)}")

    matrix = np.array(data, dtype=complex).reshape(rows, cols)
    if not np.all(np.isfinite(matrix)):
        raise ValidationError("matrix has non-finite entries")
    return matrix


def write_matrix(matrix) -> str:
    matrix = np.atleast_2d(np.asarray(matrix, dtype=complex))
    lines = [f"complex {matrix.shape[0]} {matrix.shape[1]}"]
    for row in matrix:
        lines.append(" ".join(format_complex(z) for z in row))
    return "\n".join(lines) + "\n"


def load_matrix(path) -> np.ndarray:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise InputError(f"cannot open {path}: {e.strerror}") from e
    try:
        return read_matrix(text)
    except ValidationError as e:
        raise ValidationError(f"{path}: {e}") from e
