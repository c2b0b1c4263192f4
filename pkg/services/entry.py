import argparse
import shlex
import sys
from pathlib import Path

from util import AnalysisError, InputError, ValidationError, createLogger

logger = createLogger("entry")

# flags whose values may start with a minus sign, e.g. --grid -1:1:101,-1:1:101
VALUE_FLAGS = ("--at", "--a", "--b", "--grid", "--box")


# This module is a sort of "router"
# Given a service name (ie, cli) it will import it dynamically
# and invoke its main function with the payload
def call(service, payload):
    module_name = "{0}.{0}".format(service)

    m = __import__(module_name, fromlist=["main"])
    return m.main(payload)


class ArgumentParser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage, which is the I/O exit code here
    def error(self, message):
        raise ValidationError(message)


def _floats(text):
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got '{text}'") from None


def _list(text):
    return [v for v in text.split(",") if v]


def _ints(text):
    try:
        return [int(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got '{text}'") from None


def build_parser():
    common = ArgumentParser(add_help=False)
    common.add_argument("--rel-tol", type=float)
    common.add_argument("--collision-tol", type=float)
    common.add_argument("--fd-step", type=float)
    common.add_argument("--seed", type=int)
    common.add_argument("--threads", type=int)
    common.add_argument("--out")
    common.add_argument("--strict-boundary", action="store_true", default=None)
    common.add_argument("--naive-jacobian", action="store_true", default=None)
    common.add_argument("--verbose", action="store_true", default=None)

    target = ArgumentParser(add_help=False)
    target.add_argument("circuit", nargs="?")
    target.add_argument("--fixture")
    target.add_argument("--map", choices=("state", "unitary"))
    target.add_argument("--at", type=_floats)

    region = ArgumentParser(add_help=False)
    region.add_argument("--grid", type=_list)
    region.add_argument("--axes", type=_ints)
    region.add_argument("--box", type=_list)
    region.add_argument("--resolution", type=float)

    parser = ArgumentParser(prog="qcmaps", description="Geometry and expressivity of parameterized quantum circuits")
    commands = parser.add_subparsers(dest="command", required=True)

    commands.add_parser("rank", parents=[common, target], help="rank of the state or unitary map at a point")
    commands.add_parser("landscape", parents=[common, target, region], help="rank over a two-axis grid")
    commands.add_parser("superfluous", parents=[common, target], help="essential and superfluous parameters")
    commands.add_parser("slice", parents=[common, target, region], help="slice through a point, optional rank scan")
    commands.add_parser("goodset", parents=[common, target, region], help="discrete good set around a point")
    commands.add_parser("volume", parents=[common, target, region], help="volume element or patch volume")

    injectivity = commands.add_parser("injectivity", parents=[common, target, region], help="periodicity and collisions")
    injectivity.add_argument("--param")
    injectivity.add_argument("--denominator-bound", type=int)
    injectivity.add_argument("--ball", action="store_true", default=None)

    expressivity = commands.add_parser("expressivity", parents=[common], help="expressivity distance eta")
    expressivity.add_argument("circuit")
    expressivity.add_argument("--compare")
    expressivity.add_argument("--samples", type=int)
    expressivity.add_argument("--haar-samples", type=int)
    expressivity.add_argument("--norm", choices=("frobenius", "trace"))
    expressivity.add_argument("--self-test", action="store_true", default=None)

    chain = commands.add_parser("chain", parents=[common], help="open chain of cover boxes between two points")
    chain.add_argument("cover")
    chain.add_argument("--a", type=_floats, required=True)
    chain.add_argument("--b", type=_floats, required=True)

    return parser


def attach_values(argv):
    """Turn `--grid -1:1:3` into `--grid=-1:1:3` so argparse does not read the value as a flag."""
    result = []
    i = 0
    while i < len(argv):
        if argv[i] in VALUE_FLAGS and i + 1 < len(argv):
            result.append(f"{argv[i]}={argv[i + 1]}")
            i += 2
        else:
            result.append(argv[i])
            i += 1
    return result


def to_payload(argv):
    args = build_parser().parse_args(attach_values(argv))
    payload = {key: value for key, value in vars(args).items() if value is not None}
    payload["command_line"] = shlex.join(["qcmaps", *argv])
    return payload


def write_files(out, files):
    directory = Path(out)
    try:
        directory.mkdir(parents=True, exist_ok=True)
        for name, content in files.items():
            (directory / name).write_text(content, encoding="utf-8")
    except OSError as e:
        raise InputError(f"cannot write to {directory}: {e.strerror}") from e
    logger.info(f"wrote {len(files)} files to {directory}")


def run(argv) -> int:
    try:
        payload = to_payload(argv)
        result = call("cli", payload)
        if payload.get("out"):
            write_files(payload["out"], result["files"])
    except AnalysisError as e:
        logger.error(str(e))
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code

    print(result["report"], end="")
    return 0


if __name__ == "__main__":
    sys.exit(run(sys.argv[1:]))
