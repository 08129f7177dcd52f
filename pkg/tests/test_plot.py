import pytest

from hyra.corpus import build_tank
from hyra.errors import ModelFormatError
from hyra.plot import project_csv, projection_to_csv, projection_to_svg
from hyra.reach import reach, segments_to_csv
from hyra.simulate import Integrator, SimOptions, simulate, trajectory_to_csv


def flowpipe_csv():
    bundle = build_tank()
    return segments_to_csv(reach(bundle), bundle.automaton.vars.state_vars)


def trajectory_csv():
    bundle = build_tank()
    traj = simulate(bundle, [0.5, 0.25, 0.2], Integrator.HEUN, SimOptions(step=0.05))
    return trajectory_to_csv(traj, bundle.automaton.vars.state_vars)


def test_flowpipe_projection_to_rectangles():
    proj = project_csv(flowpipe_csv(), "x2", "x3")
    assert proj.kind == "flowpipe"
    assert proj.rects and not proj.points
    svg = projection_to_svg(proj)
    assert svg.count("<rect") == len(proj.rects) + 1  # + background
    csv = projection_to_csv(proj)
    assert csv.splitlines()[0] == "lo_x2,hi_x2,lo_x3,hi_x3"
    assert len(csv.splitlines()) == 1 + len(proj.rects)


def test_trajectory_projection_to_polyline():
    proj = project_csv(trajectory_csv(), "x1", "x2")
    assert proj.kind == "trajectory"
    svg = projection_to_svg(proj)
    assert svg.count("<polyline") == 1


def test_multi_run_export_breaks_the_polyline():
    body = trajectory_csv().splitlines()
    merged = ["run," + body[0]]
    merged += [f"0,{line}" for line in body[1:]]
    merged += [f"1,{line}" for line in body[1:]]
    proj = project_csv("\n".join(merged), "x1", "x2")
    svg = projection_to_svg(proj)
    assert svg.count("<polyline") == 2


def test_svg_is_a_pure_function_of_the_input():
    text = flowpipe_csv()
    a = projection_to_svg(project_csv(text, "x1", "x3"))
    b = projection_to_svg(project_csv(text, "x1", "x3"))
    assert a == b


def test_unknown_variable_rejected():
    with pytest.raises(ModelFormatError):
        project_csv(flowpipe_csv(), "x1", "nope")


def test_unrecognized_header_rejected():
    with pytest.raises(ModelFormatError):
        project_csv("a,b,c\n1,2,3\n", "a", "b")
