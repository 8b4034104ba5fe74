import pytest

from core.schemas import MatrixPayload, MeasurePayload
from src.cases import (
    ARVESON_SOURCE,
    ARVESON_TARGET,
    CARPENTER_TARGET,
    HORN_SOURCE,
    HORN_TARGET,
    get_all_case_ids,
    get_case,
)
from src.config import MajlabConfig
from src.errors import OutOfRange
from src.runner import MajlabRunner


@pytest.mark.parametrize("case_id", get_all_case_ids())
def test_bundled_case_is_reproduced(runner, case_id):
    report = runner.run_case(case_id)
    assert report.verdicts["reproduced"], report.verdicts["checks"]
    assert report.exit_code == 0
    assert report.subcommand == f"repro {case_id}"


def test_unknown_case():
    with pytest.raises(OutOfRange):
        get_case("nope")


def test_check_reports_certificate_for_horn_pair(runner):
    report = runner.check(MeasurePayload(**HORN_TARGET), MeasurePayload(**HORN_SOURCE))
    assert report.exit_code == 2
    assert report.verdicts["feasible"] is False
    assert report.verdicts["hull_contains_target"] is True
    assert report.verdicts["barycenters_equal"] is True
    assert "certificate" in report.verdicts


def test_inputs_digest_is_stable(runner):
    a = runner.check(MeasurePayload(**HORN_TARGET), MeasurePayload(**HORN_SOURCE))
    b = runner.check(MeasurePayload(**HORN_TARGET), MeasurePayload(**HORN_SOURCE))
    assert a.inputs_digest == b.inputs_digest
    c = runner.check(MeasurePayload(**HORN_SOURCE), MeasurePayload(**HORN_TARGET))
    assert c.inputs_digest != a.inputs_digest


def test_birkhoff_report_carries_inflation(runner):
    payload = MatrixPayload(rows=2, cols=2, re=[["1/3", "2/3"], ["2/3", "1/3"]])
    report = runner.birkhoff(payload)
    assert report.backend == "exact"
    assert report.max_errors["reconstruction"] == "0"
    assert report.achieved["inflation_m"] == 3
    assert "inflation" in runner.unitaries


def test_schur_horn_report_uses_configured_depth(runner):
    report = runner.ii1_schur_horn(MeasurePayload(**ARVESON_TARGET), MeasurePayload(**ARVESON_SOURCE))
    assert report.achieved["depth"] == runner.config.depth
    assert report.verdicts["block_trace_bound_met"] is True
    assert report.achieved["block_traces"] == ["1", "1", "1"]
    shallow = runner.ii1_schur_horn(MeasurePayload(**ARVESON_TARGET), MeasurePayload(**ARVESON_SOURCE),
                                    depth=0)
    assert shallow.achieved["block_traces"] == ["0", "0", "0"]
    assert shallow.verdicts["achieved_equals_target"] is True


def test_carpenter_report(runner):
    report = runner.ii1_carpenter(MeasurePayload(**CARPENTER_TARGET))
    assert report.verdicts["achieved_equals_target"]
    assert report.achieved["resolution"] == 24
    assert report.max_errors["projection_defect"] <= 1e-10


def test_unitary_report(runner):
    target = MeasurePayload(n=2, atoms=[["0", "0"], ["3/5", "4/5"]], weights=["1/2", "1/2"])
    report = runner.ii1_unitary(target)
    assert report.verdicts["achieved_equals_target"]
    assert report.max_errors["unitary_operator_defect"] <= 1e-10


def test_orthoproj_report_refuses_oversized_atoms(runner):
    target = MeasurePayload(n=2, atoms=[["2/3", "1/2"]], weights=["1"])
    report = runner.ii1_orthoproj(target)
    assert report.exit_code == 2
    assert report.verdicts == {"feasible": False}


def test_suite_reports_do_not_depend_on_worker_count():
    cases = ["simplex", "arveson3x3", "irrational"]
    serial = MajlabRunner(MajlabConfig(seed=5, threads=1)).run_suite(cases)
    pooled = MajlabRunner(MajlabConfig(seed=5, threads=3)).run_suite(cases)
    assert [r.model_dump() for r in serial] == [r.model_dump() for r in pooled]
