import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pydantic

from circuit.circuit import Circuit
from circuit.parser import load_circuit
from circuit.space import ParameterSpace
from geometry import chains, geometry, scans, volume
from geometry.fixtures import get_fixture
from geometry.grids import GridAxis, Region
from geometry.maps import CircuitStateMap, CircuitUnitaryMap
from haar import haar
from linalg.matrix_io import write_matrix
from statemap import statemap
from util import DictObj, ValidationError, createLogger, setLogLevel

from . import output
from .schemas import RunConfig

logger = createLogger("cli")


class Payload(DictObj):
    command: str
    circuit: str
    fixture: str
    # plus any RunConfig field, see schemas.py


def main(dataDict) -> dict:
    data = Payload(dataDict)
    if data.get("verbose"):
        setLogLevel(logging.DEBUG)

    try:
        config = RunConfig(**data.toDict())
    except pydantic.ValidationError as e:
        raise ValidationError(_describe(e)) from None

    logger.info(f"running {config.command} (seed {config.seed}, {config.threads} threads)")
    return COMMANDS[config.command](config)


def _describe(error: pydantic.ValidationError) -> str:
    messages = []
    for e in error.errors():
        where = ".".join(str(part) for part in e["loc"]) or "config"
        messages.append(f"{where}: {e['msg'].removeprefix('Value error, ')}")
    return "; ".join(messages)


@dataclass(frozen=True, eq=False)
class Target:
    fmap: object
    names: tuple[str, ...]
    circuit: Circuit | None = None
    space: ParameterSpace | None = None

    @property
    def warnings(self) -> tuple[str, ...]:
        return self.space.warnings if self.space is not None else ()

    def point(self, coords) -> np.ndarray:
        if self.space is not None:
            return self.space.point(coords).as_array()
        coords = np.asarray(coords, dtype=float)
        if coords.shape != (self.fmap.num_params,):
            raise ValidationError(
                f"point not in parameter space: expected {self.fmap.num_params} coordinates, got {coords.size}"
            )
        return coords

    def index(self, token: str) -> int:
        if token.isdigit():
            j = int(token)
            if j >= len(self.names):
                raise ValidationError(f"parameter index {j} out of range for {len(self.names)} parameters")
            return j
        if token not in self.names:
            raise ValidationError(f"unknown parameter '{token}'")
        return self.names.index(token)


def _target(config: RunConfig) -> Target:
    if config.fixture is not None:
        fmap = get_fixture(config.fixture)
        return Target(fmap=fmap, names=tuple(f"x{j}" for j in range(fmap.num_params)))

    circuit, space = load_circuit(config.circuit, strict_boundary=config.strict_boundary)
    kind = CircuitUnitaryMap if config.map == "unitary" else CircuitStateMap
    fmap = kind(circuit, space, naive=config.naive_jacobian)
    return Target(fmap=fmap, names=circuit.param_names, circuit=circuit, space=space)


def _at(config: RunConfig, target: Target) -> np.ndarray:
    if config.at is None:
        raise ValidationError(f"{config.command} needs a point: --at p1,p2,...")
    return target.point(config.at)


def _base(config: RunConfig, target: Target) -> np.ndarray:
    if config.at is None:
        return np.zeros(target.fmap.num_params)
    return target.point(config.at)


def _grid(config: RunConfig) -> tuple[GridAxis, ...]:
    return tuple(GridAxis.parse(spec) for spec in config.grid)


def _axes(config: RunConfig, target: Target, count: int) -> tuple[int, ...]:
    axes = tuple(config.axes) if config.axes is not None else tuple(range(count))
    if len(axes) != count:
        raise ValidationError(f"{count} grid axes given for {len(axes)} parameter axes")
    for axis in axes:
        if not 0 <= axis < target.fmap.num_params:
            raise ValidationError(f"axis {axis} out of range for {target.fmap.num_params} parameters")
    return axes


def _box(config: RunConfig, target: Target, kept) -> list[tuple[float, float]]:
    """One (lo, hi) per kept coordinate: from --box, else the domain bounds."""
    if config.box is None:
        bounds = [target.fmap.bounds()[j] for j in kept]
        if not all(np.isfinite(b).all() for b in bounds):
            raise ValidationError("unbounded coordinates need an explicit --box lo:hi,...")
        return bounds
    if len(config.box) != len(kept):
        raise ValidationError(f"--box needs {len(kept)} sides lo:hi, one per kept coordinate, got {len(config.box)}")
    sides = []
    for spec in config.box:
        parts = spec.split(":")
        try:
            if len(parts) != 2:
                raise ValueError
            sides.append((float(parts[0]), float(parts[1])))
        except ValueError:
            raise ValidationError(f"box side must look like lo:hi, got '{spec}'") from None
    return sides


def _result(config: RunConfig, report: str, files: dict) -> dict:
    return {
        "report": report,
        "files": {name: output.with_header(config, body) for name, body in files.items()},
    }


def cmd_rank(config: RunConfig) -> dict:
    target = _target(config)
    x = _at(config, target)
    report = geometry.rank_at(target.fmap, x, config.rel_tol)
    jacobian = target.fmap.jacobian(x)

    fields = report.summary()
    fields["map"] = target.fmap.name
    warnings = list(target.warnings)
    if target.circuit is not None:
        fields["sphere_convention"] = statemap.SPHERE_CONVENTION
        if config.map == "state":
            fd = statemap.jacobian_fd(target.circuit, x, h=config.fd_step, space=target.space)
            fields["fd_max_deviation"] = float(np.abs(fd.matrix - jacobian).max())
        else:
            below = report.rank < target.circuit.dim**2
            fields["measure_zero_in_unitary_group"] = below
            if below:
                warnings.append(f"rank below n^2 = {target.circuit.dim ** 2}: the image has volume zero in U(n)")

    text = output.format_report([f"rank {report.rank} of max {report.max_rank}"], fields, warnings)
    return _result(config, text, {"rank.txt": text, "jacobian.csv": output.matrix_csv(jacobian)})


def cmd_landscape(config: RunConfig) -> dict:
    target = _target(config)
    if config.grid is None or len(config.grid) != 2:
        raise ValidationError("landscape needs a two-axis --grid lo:hi:N,lo:hi:N")
    grid = _grid(config)
    axes = _axes(config, target, 2)
    landscape = geometry.rank_landscape(target.fmap, axes, grid, _base(config, target), config.rel_tol, config.threads)

    names = [target.names[a] for a in axes]
    fields = {
        "axes": names,
        "grid": [g.spec() for g in grid],
        "nodes_per_rank": landscape.counts(),
        "rel_tol": config.rel_tol,
    }
    headline = [f"rank landscape over {names[0]} x {names[1]}: {grid[0].steps}x{grid[1].steps} nodes"]
    text = output.format_report(headline, fields, target.warnings)
    return _result(config, text, {"landscape.csv": landscape.to_csv()})


def cmd_superfluous(config: RunConfig) -> dict:
    target = _target(config)
    partition = geometry.superfluous_params(target.fmap, _at(config, target), config.rel_tol)
    essential = [target.names[j] for j in partition.essential]
    superfluous = [target.names[j] for j in partition.superfluous]

    fields = {
        "essential": essential,
        "rank": partition.rank,
        "rank_profile": list(partition.rank_profile),
        "shared": [target.names[j] for j in partition.shared],
        "superfluous": superfluous,
        "tie_break": "declaration order",
    }
    headline = [f"rank {partition.rank}: {len(superfluous)} superfluous of {len(target.names)} parameters"]
    text = output.format_report(headline, fields, target.warnings)
    return _result(config, text, {"superfluous.txt": text})


def cmd_slice(config: RunConfig) -> dict:
    target = _target(config)
    slc = geometry.slice_at(target.fmap, _at(config, target), config.rel_tol)
    kept = [target.names[j] for j in slc.kept_indices]

    fields = {
        "fixed": {target.names[j]: v for j, v in slc.fixed_values.items()},
        "kept": kept,
        "rank": slc.rank,
    }
    files = {}
    if config.box is not None and slc.rank > 0:
        scan = geometry.slice_rank_scan(
            target.fmap, slc, _box(config, target, slc.kept_indices), config.resolution, config.rel_tol, config.threads
        )
        fields["flagged_nodes"] = int(scan.flagged.size)
        fields["scanned_nodes"] = scan.region.size
        fields["resolution"] = config.resolution
        files["slice_scan.csv"] = scan.to_csv(kept)

    headline = [f"slice of dimension {slc.rank} through {list(slc.base_point)}"]
    text = output.format_report(headline, fields, target.warnings + slc.warnings)
    files["slice.txt"] = text
    return _result(config, text, files)


def cmd_goodset(config: RunConfig) -> dict:
    target = _target(config)
    q = _at(config, target)
    slc = geometry.slice_at(target.fmap, q, config.rel_tol)
    box = _box(config, target, slc.kept_indices)
    good = scans.good_set_scan(
        target.fmap, q, box, config.resolution, config.rel_tol, config.collision_tol, config.threads
    )
    kept = [target.names[j] for j in good.region.axes]

    fields = {
        "bounding_box": good.bounding_box(),
        "collision_pairs": len(good.collisions),
        "compact_core": good.compact_core(),
        "kept": kept,
        "method": "flood fill from q over the slice grid (connected component of q), collisions removed",
        "nodes": good.node_count,
        "rank": good.base_rank,
        "resolution": config.resolution,
        "scanned_nodes": good.region.size,
    }
    headline = [f"good set: {good.node_count} of {good.region.size} nodes at rank {good.base_rank}"]
    text = output.format_report(headline, fields, target.warnings + good.warnings)
    return _result(config, text, {"goodset.csv": good.to_csv(kept), "goodset.txt": text})


def cmd_injectivity(config: RunConfig) -> dict:
    target = _target(config)
    headline, fields, files = [], {}, {}

    if config.param is not None:
        if target.circuit is None:
            raise ValidationError("--param needs a circuit file")
        j = target.index(config.param)
        result = scans.parameter_periodicity(target.circuit, j, config.denominator_bound)
        headline.append(result.describe())
        fields["eigenvalues"] = list(result.eigenvalues)
        fields["param"] = target.names[j]
        fields["period"] = result.period

    if config.grid is not None:
        grid = _grid(config)
        region = Region(base=_base(config, target), axes=_axes(config, target, len(grid)), grid=grid)
        collisions = scans.injectivity_scan(
            target.fmap, region.points(), region.spacing, config.collision_tol, config.threads
        )
        if collisions:
            headline.append(f"{len(collisions)} collision pairs at resolution {region.spacing!r}")
        else:
            headline.append(f"no collisions at resolution {region.spacing!r}: injective at this resolution")
        fields["collision_pairs"] = len(collisions)
        fields["scanned_nodes"] = region.size
        files["collisions.csv"] = output.collisions_csv(collisions, target.names)

    if config.ball:
        ball = scans.local_embedding_ball(
            target.fmap, _at(config, target), config.rel_tol, config.collision_tol, config.resolution,
            threads=config.threads,
        )
        headline.append(f"embedding ball radius {ball.radius!r} at resolution {ball.resolution!r}")
        fields["ball_diagnostics"] = list(ball.diagnostics)
        fields["ball_radii_tested"] = len(ball.tested)

    if not headline:
        raise ValidationError("injectivity needs --param, --grid or --ball")
    text = output.format_report(headline, fields, target.warnings)
    files["injectivity.txt"] = text
    return _result(config, text, files)


def _expressivity(config: RunConfig, path: str) -> tuple[haar.ExpressivityReport, ParameterSpace]:
    circuit, space = load_circuit(path, strict_boundary=config.strict_boundary)
    report = haar.expressivity_eta(
        circuit, space, config.samples, config.haar_draws, config.norm, config.seed, config.self_test,
        threads=config.threads,
    )
    return report, space


def cmd_expressivity(config: RunConfig) -> dict:
    report, space = _expressivity(config, config.circuit)
    name = Path(config.circuit).stem
    headline = [f"eta({name}) = {report.eta!r} ({report.norm_name} norm, SE {report.standard_error:.3g})"]
    warnings = list(space.warnings)
    files = {
        "haar_mean.mat": write_matrix(report.haar_mean_matrix),
        "ansatz_mean.mat": write_matrix(report.ansatz_mean_matrix),
    }

    if config.self_test:
        passed = report.eta < 3 * report.standard_error
        headline.append(f"self-test {'passed' if passed else 'FAILED'}: eta {'<' if passed else '>='} 3 SE")
        if not passed:
            warnings.append("self-test eta exceeds three bootstrap standard errors")

    fields = report.summary()
    if config.compare is not None:
        other, other_space = _expressivity(config, config.compare)
        other_name = Path(config.compare).stem
        headline.append(f"eta({other_name}) = {other.eta!r} ({other.norm_name} norm, SE {other.standard_error:.3g})")
        headline.append(haar.compare(report, other, (name, other_name)))
        fields["compare_eta"] = other.eta
        fields["compare_standard_error"] = other.standard_error
        warnings += other_space.warnings
        files["compare_ansatz_mean.mat"] = write_matrix(other.ansatz_mean_matrix)

    text = output.format_report(headline, fields, list(report.notes) + warnings)
    files["expressivity.txt"] = text
    return _result(config, text, files)


def cmd_volume(config: RunConfig) -> dict:
    target = _target(config)
    fields = {"rel_tol": config.rel_tol}

    if config.grid is None and config.at is not None:
        x = _at(config, target)
        columns = None
        if target.circuit is not None:
            columns = geometry.slice_at(target.fmap, x, config.rel_tol).kept_indices
            fields["kept"] = [target.names[j] for j in columns]
        value = volume.volume_element(target.fmap, x, config.rel_tol, columns)
        fields["volume_element"] = value
        warnings = list(target.warnings)
        if value == 0.0:
            warnings.append("rank deficient at this point: volume element is 0")
        text = output.format_report([f"volume element {value!r} at {list(map(float, x))}"], fields, warnings)
        return _result(config, text, {"volume.txt": text})

    if config.grid is not None:
        grid = _grid(config)
        region = Region(base=_base(config, target), axes=_axes(config, target, len(grid)), grid=grid)
    else:
        bounds = target.fmap.bounds()
        if not np.isfinite(np.asarray(bounds, dtype=float)).all():
            raise ValidationError("unbounded parameter space: give a --grid for the patch")
        base = np.array([(lo + hi) / 2 for lo, hi in bounds])
        region = Region.box(base, range(len(bounds)), bounds, config.resolution)

    patch = volume.patch_volume(target.fmap, region, config.rel_tol, config.threads)
    fields.update(
        axes=[target.names[a] for a in region.axes],
        deficient_nodes=patch.deficient_nodes,
        grid=[g.spec() for g in region.grid],
        nodes=patch.nodes,
        volume=patch.volume,
    )
    warnings = list(target.warnings)
    if patch.deficient_nodes:
        warnings.append(f"{patch.deficient_nodes} rank-deficient nodes contribute 0")
    text = output.format_report([f"patch volume {patch.volume!r}"], fields, warnings)
    return _result(config, text, {"volume.txt": text})


def cmd_chain(config: RunConfig) -> dict:
    cover = chains.load_cover(config.cover)
    chain = chains.open_chain(cover, config.a, config.b)
    fields = {"a": config.a, "b": config.b, "boxes_in_cover": len(cover.boxes)}
    if chain is None:
        text = output.format_report(["no chain: the cover's intersection graph separates a and b"], fields)
        return _result(config, text, {"chain.txt": ""})

    fields["chain"] = list(chain.names)
    text = output.format_report([f"chain of {len(chain)} boxes"], fields)
    return _result(config, text, {"chain.txt": chain.to_text()})


COMMANDS = {
    "rank": cmd_rank,
    "landscape": cmd_landscape,
    "superfluous": cmd_superfluous,
    "slice": cmd_slice,
    "goodset": cmd_goodset,
    "injectivity": cmd_injectivity,
    "expressivity": cmd_expressivity,
    "volume": cmd_volume,
    "chain": cmd_chain,
}
