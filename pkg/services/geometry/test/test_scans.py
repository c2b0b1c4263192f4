import math

import numpy as np
import pytest

from circuit.parser import load_circuit, parse_circuit
from geometry.fixtures import FIXTURES, FixtureMap
from geometry.grids import GridAxis, Region
from geometry.maps import CircuitStateMap
from geometry.scans import (
    good_set_scan,
    injectivity_scan,
    local_embedding_ball,
    parameter_periodicity,
    periodicity,
)
from util import ValidationError

squares = FIXTURES["squares"]
figure_eight = FIXTURES["figure_eight"]

RZ_LINE = "qubits 1\nparam a line\ngate rz 0 a\n"


def rz_line_map():
    c, space = parse_circuit(RZ_LINE)
    return CircuitStateMap(c, space)


def axis_points(lo, hi, resolution):
    return GridAxis.with_resolution(lo, hi, resolution).nodes()[:, None]


def test_figure_eight_is_injective_at_resolution():
    points = axis_points(-math.pi + 0.01, math.pi - 0.01, 1e-3)
    assert injectivity_scan(figure_eight, points, 1e-3, 1e-6) == []


def test_rz_collisions_four_pi_apart():
    # the state picks up a sign after 2 pi and returns after 4 pi
    region = Region(base=np.zeros(1), axes=(0,), grid=(GridAxis(0.0, 8 * math.pi, 64),))
    collisions = injectivity_scan(rz_line_map(), region.points(), region.spacing, 1e-6)
    assert len(collisions) == 32
    for c in collisions:
        assert c.second[0] - c.first[0] == pytest.approx(4 * math.pi)
        assert c.distance < 1e-6


def test_collisions_do_not_depend_on_threads():
    region = Region(base=np.zeros(1), axes=(0,), grid=(GridAxis(0.0, 8 * math.pi, 64),))
    one = injectivity_scan(rz_line_map(), region.points(), region.spacing, 1e-6, threads=1)
    three = injectivity_scan(rz_line_map(), region.points(), region.spacing, 1e-6, threads=3)
    assert one == three


def test_nodes_closer_than_twice_the_resolution_are_not_collisions():
    points = axis_points(0.0, 1.0, 0.01)
    # images of nodes less than 0.1 apart can be within 0.05 of each other
    assert injectivity_scan(figure_eight, points, 0.05, 0.05) == []


def test_single_point_scan():
    assert injectivity_scan(figure_eight, [[0.3]], 0.1, 1e-6) == []


def test_periodicity_commensurable():
    result = periodicity(np.diag([1.0, 2.0]))
    assert result.period == pytest.approx(2 * math.pi)
    assert result.describe().startswith("periodic, T=6.28318530717958")


def test_periodicity_incommensurable():
    result = periodicity(np.diag([1.0, math.sqrt(2)]))
    assert result.period is None
    assert not result.constant
    assert result.describe().startswith("aperiodic")


def test_periodicity_of_zero_generator():
    result = periodicity(np.zeros((2, 2)))
    assert result.constant
    assert "constant" in result.describe()


def test_periodicity_of_rational_spectrum():
    # eigenvalues 1/2 and 1/3: T = lcm(4 pi, 6 pi)
    result = periodicity(np.diag([0.5, 1 / 3]))
    assert result.period == pytest.approx(12 * math.pi)


def test_parameter_periodicity_single_gate(circuits_dir):
    c, _ = load_circuit(circuits_dir / "single_H.qc")
    assert parameter_periodicity(c, 0).period == pytest.approx(2 * math.pi)


def test_parameter_periodicity_shared_parameter(circuits_dir):
    c, _ = load_circuit(circuits_dir / "entangler.qc")
    # rz generators Z/2 on either wire: eigenvalues +-1/2, period 4 pi
    assert parameter_periodicity(c, 2).period == pytest.approx(4 * math.pi)


def test_parameter_periodicity_of_unused_parameter():
    c, _ = parse_circuit("qubits 1\nparam a line\nparam b line\ngate rz 0 a\n", allow_unused_params=True)
    with pytest.raises(ValidationError, match="drives no gate"):
        parameter_periodicity(c, 1)


def test_good_set_of_squares_is_the_open_quadrant():
    good = good_set_scan(squares, [0.3, 0.4], [(-0.55, 0.55), (-0.55, 0.55)], 0.1)
    assert good.base_rank == 2
    assert good.node_count == 25
    assert good.collisions == ()
    box = good.bounding_box()
    assert box[0] == pytest.approx((0.1, 0.5))
    assert box[1] == pytest.approx((0.1, 0.5))
    core = good.compact_core()
    assert core[0] == pytest.approx((0.1, 0.5))
    assert core[1] == pytest.approx((0.2, 0.5))


def test_good_set_csv():
    good = good_set_scan(squares, [0.3, 0.4], [(-0.55, 0.55), (-0.55, 0.55)], 0.1)
    lines = good.to_csv(["x", "y"]).splitlines()
    assert lines[0] == "x,y,in_good_set,rank"
    assert len(lines) == 122
    assert sum(line.split(",")[2] == "1" for line in lines[1:]) == 25


def test_good_set_drops_colliding_nodes():
    good = good_set_scan(rz_line_map(), [0.1], [(-1.0, 14.0)], 0.05, collision_tol=0.01)
    assert good.collisions
    assert 0 < good.node_count < good.region.size
    colliding = {c.first for c in good.collisions} | {c.second for c in good.collisions}
    for point, kept in zip(good.region.points(), good.mask.ravel()):
        if tuple(point) in colliding:
            assert not kept



def _arc_value(x):
    c = max(0.0, math.cos(x[0]))
    return [c * c * math.cos(x[0]), c * c * math.sin(x[0])]


def _arc_jacobian(x):
    c = max(0.0, math.cos(x[0]))
    h, dh = c * c, -2 * c * math.sin(x[0])
    return [[dh * math.cos(x[0]) - h * math.sin(x[0])], [dh * math.sin(x[0]) + h * math.cos(x[0])]]


# rank 1 where cos t > 0, identically zero elsewhere; that arc straddles the seam at 0
arc = FixtureMap(
    name="arc",
    num_params=1,
    dim_out=2,
    value_fn=_arc_value,
    jacobian_fn=_arc_jacobian,
    domain=((0.0, 2 * math.pi),),
    circle_periods=(2 * math.pi,),
)


def test_good_set_runs_across_the_circle_seam():
    good = good_set_scan(arc, [0.1], [(0.0, 2 * math.pi)], 2 * math.pi / 40)
    assert good.region.shape == (40,)
    assert good.collisions == ()
    assert good.node_count == 20
    assert good.mask[:10].all() and good.mask[30:].all()
    assert not good.mask[10:30].any()


def test_good_set_does_not_wrap_a_partial_period():
    good = good_set_scan(arc, [0.1], [(0.0, 1.9 * math.pi)], 2 * math.pi / 40)
    assert good.node_count < 20
    assert not good.mask[-1]

def test_good_set_at_rank_zero_is_empty():
    good = good_set_scan(squares, [0.0, 0.0], [], 0.1)
    assert good.base_rank == 0
    assert good.node_count == 0
    assert any("rank 0" in w for w in good.warnings)
    assert good.bounding_box() is None


def test_good_set_is_independent_of_threads():
    one = good_set_scan(squares, [0.3, 0.4], [(-0.55, 0.55), (-0.55, 0.55)], 0.1, threads=1)
    four = good_set_scan(squares, [0.3, 0.4], [(-0.55, 0.55), (-0.55, 0.55)], 0.1, threads=4)
    np.testing.assert_array_equal(one.mask, four.mask)
    np.testing.assert_array_equal(one.ranks, four.ranks)


def test_embedding_ball_of_figure_eight_reaches_the_domain():
    ball = local_embedding_ball(figure_eight, [0.0])
    assert ball.radius == pytest.approx(math.pi)
    assert ball.rank == 1
    assert ball.tested == ((math.pi, True),)


def test_embedding_ball_of_squares_stops_at_the_axis():
    ball = local_embedding_ball(squares, [0.3, 0.4], resolution=0.05)
    assert 0.299 < ball.radius < 0.3
    assert ball.diagnostics
    assert any(not passed for _, passed in ball.tested)


def test_embedding_ball_respects_max_radius():
    ball = local_embedding_ball(squares, [0.3, 0.4], resolution=0.05, max_radius=0.1)
    assert ball.radius == pytest.approx(0.1)


def test_embedding_ball_at_rank_zero():
    ball = local_embedding_ball(squares, [0.0, 0.0])
    assert ball.radius == 0.0
    assert ball.rank == 0
    assert ball.diagnostics


@pytest.mark.parametrize("q", [0.0, 2 * math.pi - 0.01])
def test_embedding_ball_on_a_circle_reaches_half_a_period(q):
    c, space = parse_circuit("qubits 1\nparam t circle\ngate ry 0 t\n")
    ball = local_embedding_ball(CircuitStateMap(c, space), [q], resolution=0.05)
    assert ball.radius == pytest.approx(math.pi)
    assert ball.rank == 1
    assert ball.diagnostics == ()
    assert [passed for _, passed in ball.tested] == [True]


def test_embedding_ball_on_the_edge_of_an_interval():
    ball = local_embedding_ball(squares, [-1.0, 0.5])
    assert ball.radius == 0.0
    assert ball.rank == 2
    assert "edge of the domain" in ball.diagnostics[0]
