import numpy as np

TOOL = "qcmaps"
VERSION = "1.0.0"


def provenance(config) -> str:
    """Comment header that makes every output file reproducible on its own."""
    lines = [
        f"# tool: {TOOL} {VERSION}",
        f"# command: {config.command_line or config.command}",
        f"# seed: {config.seed}",
    ]
    lines += [f"# {key}: {value!r}" for key, value in sorted(config.tolerances().items())]
    return "\n".join(lines) + "\n"


def with_header(config, body: str) -> str:
    return provenance(config) + body


def _format(value) -> str:
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, np.ndarray):
        value = value.tolist()
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_format(v) for v in value) + "]"
    if isinstance(value, dict):
        return "{" + ", ".join(f"{k}: {_format(value[k])}" for k in sorted(value)) + "}"
    if value is None:
        return "none"
    return str(value)


def format_report(headline, fields: dict, warnings=()) -> str:
    """Headline lines, then `key: value` in sorted key order, then warnings."""
    lines = list(headline)
    lines += [f"{key}: {_format(fields[key])}" for key in sorted(fields)]
    lines += [f"warning: {w}" for w in warnings]
    return "\n".join(lines) + "\n"


def matrix_csv(M) -> str:
    lines = ["row,col,value"]
    for (row, col), value in np.ndenumerate(np.asarray(M, dtype=float)):
        lines.append(f"{row},{col},{value!r}")
    return "\n".join(lines) + "\n"


def collisions_csv(collisions, names) -> str:
    names = list(names)
    header = [f"p_{n}" for n in names] + [f"q_{n}" for n in names] + ["distance"]
    lines = [",".join(header)]
    for c in collisions:
        lines.append(",".join(repr(float(v)) for v in (*c.first, *c.second, c.distance)))
    return "\n".join(lines) + "\n"
