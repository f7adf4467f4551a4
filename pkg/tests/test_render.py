import pytest

from intentnet.errors import LayoutError, MismatchError, NoOutcomeError
from intentnet.render import (
    RenderSpec,
    color_for,
    dot_to_svg,
    render_dot,
    render_report,
)
from intentnet.solver import CapacityPlan, optimize


@pytest.fixture
def triangle_plan(triangle_problem):
    return optimize(triangle_problem)


class TestColorClasses:
    @pytest.mark.parametrize("utilization,expected", [
        (0.0, "green"), (0.49, "green"),
        (0.5, "yellow"), (0.69, "yellow"),
        (0.7, "orange"), (0.75, "orange"), (0.79, "orange"),
        (0.8, "red"), (1.0, "red"),
    ])
    def test_boundaries_closed_on_the_left(self, utilization, expected):
        assert color_for(utilization, RenderSpec()) == expected

    def test_thresholds_must_increase(self):
        with pytest.raises(ValueError):
            RenderSpec(congestion_thresholds=(0.7, 0.5, 0.8))


class TestRenderDot:
    def test_triangle_with_plan(self, triangle, triangle_plan):
        dot = render_dot(triangle, triangle_plan)
        assert dot.count("style=dashed") == 3
        assert dot.count("style=solid") == 3
        assert '"A" -- "C" [style=solid, color=orange, label="150/200"];' in dot

    def test_layers_styled_consistently(self, triangle, triangle_plan):
        dot = render_dot(triangle, triangle_plan)
        for line in dot.splitlines():
            if "--" not in line:
                continue
            assert ("style=dashed" in line) != ("style=solid" in line)

    def test_without_plan_ip_edges_uncolored(self, triangle):
        dot = render_dot(triangle, None)
        assert "color=" not in dot
        assert dot.count("style=solid") == 3

    def test_plan_with_unknown_link_is_mismatch(self, triangle):
        plan = CapacityPlan(routes=(), modules={"L9": 1}, link_load_gbps={"L9": 10.0},
                            utilization={"L9": 0.1})
        with pytest.raises(MismatchError, match="L9"):
            render_dot(triangle, plan)

    def test_deterministic_bytes(self, triangle, triangle_plan):
        assert render_dot(triangle, triangle_plan) == render_dot(triangle, triangle_plan)

    def test_effective_capacity_uses_installed_modules(self, triangle, triangle_plan):
        from intentnet.netmodel import AddCapacity, apply_action

        grown = apply_action(triangle, AddCapacity("L3", 5))
        dot = render_dot(grown, triangle_plan)
        assert 'label="150/500"' in dot  # 5 installed modules beat the 2 planned


class TestDotToSvg:
    def test_triangle_svg_counts(self, triangle, triangle_plan):
        svg = dot_to_svg(render_dot(triangle, triangle_plan))
        assert svg.count("stroke-dasharray") == 3
        assert svg.count("<line ") == 6
        assert svg.count("<circle ") == 3

    def test_identical_input_identical_bytes(self, triangle, triangle_plan):
        dot = render_dot(triangle, triangle_plan)
        assert dot_to_svg(dot) == dot_to_svg(dot)

    def test_missing_pos_in_coords_mode_is_layout_error(self):
        dot = 'graph topology {\n  "A" [label="A"];\n}\n'
        with pytest.raises(LayoutError):
            dot_to_svg(dot, RenderSpec(layout="coords"))

    def test_circular_layout_needs_no_positions(self, triangle):
        spec = RenderSpec(layout="circular")
        svg = dot_to_svg(render_dot(triangle, None, spec), spec)
        assert svg.count("<circle ") == 3

    def test_svg_is_self_contained(self, triangle, triangle_plan):
        svg = dot_to_svg(render_dot(triangle, triangle_plan))
        assert svg.startswith('<?xml version="1.0"')
        assert "</svg>" in svg
        assert "http://www.w3.org/2000/svg" in svg

    def test_colors_carried_through(self, triangle, triangle_plan):
        svg = dot_to_svg(render_dot(triangle, triangle_plan))
        assert 'stroke="orange"' in svg


class TestRenderReport:
    def test_completed_session_report(self, session_dir, capacity_backend):
        from conftest import make_request
        from intentnet import pipeline

        session = pipeline.new_session(make_request(), base_dir=session_dir)
        pipeline.run_session(session, "auto", capacity_backend)
        report = render_report(session)
        assert "Total cost: 2.0" in report
        assert "HI: 0" in report
        assert "Completion: 3/3 steps" in report
        assert "plan.json" in report and "topology.svg" in report

    def test_incomplete_session_flags_fraction(self, session_dir, capacity_backend):
        from conftest import make_request
        from intentnet import pipeline

        session = pipeline.new_session(make_request(), base_dir=session_dir)
        outcome = pipeline.run_session(session, "auto", capacity_backend)
        outcome.complete = False
        outcome.completion_fraction = 1 / 3
        report = render_report(session)
        assert "INCOMPLETE" in report

    def test_no_outcome_rejected(self, session_dir):
        from conftest import make_request
        from intentnet import pipeline

        session = pipeline.new_session(make_request(), base_dir=session_dir)
        with pytest.raises(NoOutcomeError):
            render_report(session)
