import math

import pytest

from intentnet import pipeline
from intentnet.errors import ExtractionFailedError
from intentnet.evaluation import (
    CSV_HEADER,
    EvalRecord,
    EvalSummary,
    aggregate,
    append_record,
    default_rubric,
    export_report,
    hlp_accuracy,
    parse_report,
    read_records,
    score_output,
    snap_to_anchor,
)
from intentnet.gateway import ReplayBackend, ReplayEntry


def evaluator(*entries) -> ReplayBackend:
    return ReplayBackend(script=tuple(ReplayEntry(match=m, response=r) for m, r in entries))


def make_plan(*signature):
    steps = [pipeline.Step(id=i + 1, description=f"step {i+1}", action=action, tool=tool,
                           args={"path": "traffic.csv"} if action == "read_file" else
                                ({"text": "x"} if action == "emit_artifact" else {}))
             for i, (action, tool) in enumerate(signature)]
    return pipeline.Plan(steps=steps)


GOLDEN = (("read_file", "read_traffic_matrix"),
          ("call_tool", "solve_capacity"),
          ("call_tool", "render_topology"))


class TestScoreOutput:
    def test_grid_answer_recorded(self):
        backend = evaluator(("Module under evaluation: analyzer", "0.8"))
        record = score_output(backend, default_rubric(), "analyzer", "a fine report")
        assert record.score == 0.8
        assert record.evaluator == "llm"
        assert record.notes == ""

    def test_off_grid_snapped_with_note(self):
        backend = evaluator(("Module under evaluation", "0.75"))
        record = score_output(backend, default_rubric(), "planner", "output")
        assert record.score == 0.8
        assert "snapped from 0.75" in record.notes

    def test_prose_twice_fails(self):
        backend = evaluator(("", "that was lovely work, no score from me"))
        with pytest.raises(ExtractionFailedError):
            score_output(backend, default_rubric(), "executor", "output")

    def test_reprompt_can_recover(self):
        backend = evaluator(
            ("exactly one score", "0.6"),
            ("Module under evaluation", "hard to say"),
        )
        record = score_output(backend, default_rubric(), "calculator", "output")
        assert record.score == 0.6

    def test_unknown_module_rejected(self):
        backend = evaluator(("", "0.8"))
        with pytest.raises(ValueError):
            score_output(backend, default_rubric(), "optimizer", "output")

    def test_snap_midpoint_goes_down(self):
        assert snap_to_anchor(0.5) == 0.4
        assert snap_to_anchor(0.9) == 0.8
        assert snap_to_anchor(0.91) == 1.0


class TestEvalRecord:
    def test_score_must_sit_on_grid(self):
        with pytest.raises(ValueError):
            EvalRecord(module="analyzer", method="cot", score=0.75)

    def test_negative_hi_rejected(self):
        with pytest.raises(ValueError):
            EvalRecord(module="analyzer", method="cot", score=0.8, hi=-1)

    def test_jsonl_roundtrip(self, tmp_path):
        path = tmp_path / "records.jsonl"
        records = [EvalRecord("analyzer", "rag", 0.8, hi=1, task_id="t1"),
                   EvalRecord("calculator", "zero_shot", 0.2, hi=3, evaluator="human")]
        for record in records:
            append_record(path, record)
        assert read_records(path) == records


class TestHlpAccuracy:
    def test_identical_plans_score_one(self):
        assert hlp_accuracy(make_plan(*GOLDEN), make_plan(*GOLDEN)) == 1.0

    def test_missing_render_step_scores_two_thirds(self):
        partial = make_plan(GOLDEN[0], GOLDEN[1])
        assert hlp_accuracy(partial, make_plan(*GOLDEN)) == pytest.approx(2 / 3)

    def test_disjoint_plans_score_zero(self):
        other = make_plan(("emit_artifact", None), ("call_tool", "rag_search"))
        assert hlp_accuracy(other, make_plan(*GOLDEN)) == 0.0

    def test_order_matters(self):
        shuffled = make_plan(GOLDEN[2], GOLDEN[1], GOLDEN[0])
        assert hlp_accuracy(shuffled, make_plan(*GOLDEN)) < 1.0

    def test_removing_matched_step_never_raises_score(self):
        golden = make_plan(*GOLDEN)
        full = make_plan(*GOLDEN)
        score = hlp_accuracy(full, golden)
        for drop in range(3):
            kept = [GOLDEN[i] for i in range(3) if i != drop]
            assert hlp_accuracy(make_plan(*kept), golden) <= score

    def test_extra_steps_do_not_hurt(self):
        padded = make_plan(GOLDEN[0], ("call_tool", "rag_search"), GOLDEN[1], GOLDEN[2])
        assert hlp_accuracy(padded, make_plan(*GOLDEN)) == 1.0


class TestAggregate:
    def test_cell_mean(self):
        records = [EvalRecord("analyzer", "cot", 0.8), EvalRecord("analyzer", "cot", 0.6)]
        summary = aggregate(records)
        cell = summary.cells[("analyzer", "cot")]
        assert cell.mean_score == pytest.approx(0.7)
        assert cell.n == 2

    def test_empty_cells_absent_not_zero(self):
        summary = aggregate([EvalRecord("analyzer", "cot", 0.8)])
        assert ("planner", "rag") not in summary.cells
        assert len(summary.cells) == 1

    def test_zero_records_all_absent(self):
        assert aggregate([]).cells == {}

    def test_completion_rate(self):
        class FakeSession:
            def __init__(self, complete):
                self.outcome = pipeline.SessionOutcome(
                    complete=complete, completion_fraction=1.0 if complete else 0.5)
                self.plan = make_plan(*GOLDEN)

        sessions = [FakeSession(True), FakeSession(True), FakeSession(True), FakeSession(False)]
        summary = aggregate([], sessions=sessions, golden_plan=make_plan(*GOLDEN))
        assert summary.completion_rate == 0.75
        assert summary.hlp_accuracy == 1.0

    def test_mean_hi(self):
        records = [EvalRecord("calculator", "rag", 0.4, hi=2),
                   EvalRecord("calculator", "rag", 0.6, hi=4)]
        assert aggregate(records).cells[("calculator", "rag")].mean_hi == 3.0


class TestExport:
    def full_grid_summary(self) -> EvalSummary:
        records = []
        for module in ("analyzer", "planner", "calculator", "executor"):
            for method in ("zero_shot", "few_shot", "cot", "rag"):
                records.append(EvalRecord(module, method, 0.6, hi=1))
        return aggregate(records)

    def test_full_grid_has_sixteen_rows(self):
        text = export_report(self.full_grid_summary(), "csv")
        lines = text.strip().splitlines()
        assert lines[0] == ",".join(CSV_HEADER)
        assert len(lines) == 17

    def test_empty_summary_header_only(self):
        assert export_report(aggregate([]), "csv").strip() == ",".join(CSV_HEADER)

    def test_deterministic_bytes(self):
        summary = self.full_grid_summary()
        assert export_report(summary, "csv") == export_report(summary, "csv")
        assert export_report(summary, "json") == export_report(summary, "json")

    def test_markdown_has_anchor_legend(self):
        text = export_report(self.full_grid_summary(), "markdown")
        assert "## Score anchors" in text
        assert "- 0.2:" in text

    def test_export_after_parse_is_lossless_csv(self):
        text = export_report(self.full_grid_summary(), "csv")
        assert export_report(parse_report(text, "csv"), "csv") == text

    def test_export_after_parse_is_lossless_json(self):
        summary = aggregate([EvalRecord("analyzer", "cot", 0.8, hi=1)])
        text = export_report(summary, "json")
        assert export_report(parse_report(text, "json"), "json") == text

    def test_scores_stay_in_unit_interval(self):
        summary = self.full_grid_summary()
        for cell in summary.cells.values():
            assert 0.0 <= cell.mean_score <= 1.0
            assert not math.isnan(cell.mean_hi)
