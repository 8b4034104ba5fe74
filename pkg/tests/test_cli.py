import json

import pytest

from core.schemas import MatrixPayload
from src.cases import ARVESON_SOURCE, ARVESON_TARGET, HORN_SOURCE, HORN_TARGET, SEGMENT, get_all_case_ids
from src.cli import main


@pytest.fixture
def write(tmp_path):
    def _write(name, payload):
        path = tmp_path / name
        path.write_text(payload if isinstance(payload, str) else json.dumps(payload))
        return str(path)
    return _write


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_horn_pair_exits_with_certified_negative(capsys, write):
    code, out, _ = run(capsys, "check", "--target", write("t.json", HORN_TARGET),
                       "--source", write("s.json", HORN_SOURCE))
    assert code == 2
    report = json.loads(out)
    assert report["subcommand"] == "check"
    assert report["verdicts"]["feasible"] is False
    assert report["exit_code"] == 2


def test_measure_majorizes_itself(capsys, write):
    path = write("a.json", ARVESON_SOURCE)
    code, out, _ = run(capsys, "check", "--target", path, "--source", path, "--seed", "1")
    assert code == 0
    assert json.loads(out)["verdicts"]["feasible"] is True


def test_float_flag_selects_float_backend(capsys, write):
    code, out, _ = run(capsys, "check", "--target", write("t.json", ARVESON_TARGET),
                       "--source", write("s.json", ARVESON_SOURCE), "--float", "--seed", "1")
    assert code == 0
    assert json.loads(out)["backend"] == "float"


def test_bad_json_exits_with_one(capsys, caplog, write):
    path = write("bad.json", "{not json")
    code, out, _ = run(capsys, "check", "--target", path, "--source", path)
    assert code == 1
    assert out == ""
    assert "not JSON" in caplog.text


def test_invalid_payload_prints_schema(capsys, write):
    path = write("bad.json", {"n": 2, "atoms": [["0"]], "weights": ["1"]})
    code, _, err = run(capsys, "check", "--target", path, "--source", path)
    assert code == 1
    assert "MeasurePayload" in err
    assert '"properties"' in err


def test_missing_file_exits_with_one(capsys, caplog, tmp_path):
    missing = str(tmp_path / "missing.json")
    code, _, _ = run(capsys, "check", "--target", missing, "--source", missing)
    assert code == 1
    assert "cannot read" in caplog.text


@pytest.mark.parametrize("argv", [["frobnicate"], [], ["repro", "nope"], ["ii1", "scalar"]])
def test_usage_errors_exit_with_one(capsys, argv):
    code, _, _ = run(capsys, *argv)
    assert code == 1


def test_runs_are_deterministic(capsys, write):
    args = ["check", "--target", write("t.json", ARVESON_TARGET),
            "--source", write("s.json", ARVESON_SOURCE), "--seed", "11"]
    first = run(capsys, *args)
    second = run(capsys, *args)
    assert first == second


def test_report_goes_to_out_file(capsys, write, tmp_path):
    out_path = tmp_path / "reports" / "check.json"
    code, out, _ = run(capsys, "check", "--target", write("t.json", ARVESON_TARGET),
                       "--source", write("s.json", ARVESON_SOURCE), "--out", str(out_path))
    assert code == 0
    assert out == ""
    assert json.loads(out_path.read_text())["verdicts"]["feasible"] is True


def test_timing_fills_wall_time(capsys, write):
    code, out, _ = run(capsys, "certify", "irrational", "--a", "1/2", "--m", "2", "--timing")
    assert code == 0
    assert json.loads(out)["wall_time"] >= 0


def test_irrational_certificate(capsys):
    code, out, _ = run(capsys, "certify", "irrational", "--a", "0.7071067811865476", "--m", "10")
    assert code == 2
    report = json.loads(out)
    assert report["verdicts"]["obstructed"] is True
    assert abs(report["achieved"]["distance"] - 0.0711) < 1e-4


def test_unitary_engine_writes_matrix(capsys, write, tmp_path):
    target = {"n": 2, "atoms": [["0", "0"], ["3/5", "4/5"]], "weights": ["1/2", "1/2"]}
    matrix_path = tmp_path / "V.json"
    code, out, _ = run(capsys, "ii1", "unitary", "--target", write("t.json", target),
                       "--unitary", str(matrix_path))
    assert code == 0
    assert json.loads(out)["verdicts"]["achieved_equals_target"] is True
    payload = MatrixPayload.model_validate_json(matrix_path.read_text())
    assert payload.rows == payload.cols == 4


def test_bh_index(capsys, write):
    vertices = write("x.json", SEGMENT)
    phi = write("phi.json", {"phi": [0]})
    present = run(capsys, "bh", "index", "--vertices", vertices, "--phi", phi,
                  "--prefix", write("p1.json", {"n": 1, "entries": [["1"]]}))
    absent = run(capsys, "bh", "index", "--vertices", vertices, "--phi", phi,
                 "--prefix", write("p2.json", {"n": 1, "entries": [["-1/2"]]}))
    assert present[0] == 0
    assert json.loads(present[1])["achieved"]["coefficients"] == [1, -1]
    assert absent[0] == 2
    assert json.loads(absent[1])["verdicts"]["present"] is False


def test_bh_synth_constant_target(capsys, write):
    vertices = write("x.json", {"n": 2, "vertices": [["0", "0"], ["1", "0"], ["0", "1"]]})
    target = write("d.json", {"n": 2, "entries": [["1/3", "1/3"]]})
    code, out, _ = run(capsys, "bh", "synth", "--vertices", vertices, "--target", target,
                       "--size", "60")
    assert code == 0
    report = json.loads(out)
    assert report["achieved"]["size"] == 60
    assert report["verdicts"]["within_bound"] is True


def test_bh_quantize(capsys, write):
    code, out, _ = run(capsys, "bh", "quantize", "--vertices", write("x.json", SEGMENT),
                       "--target", write("d.json", {"n": 1, "entries": [["0"], [0.3]]}),
                       "--eps", "1/10")
    assert code == 0
    report = json.loads(out)
    assert report["achieved"]["target"]["entries"] == [["1/16"], ["3/10"]]
    assert report["verdicts"]["within_eps"] is True


def test_repro_single_case(capsys):
    code, out, _ = run(capsys, "repro", "irrational")
    assert code == 0
    report = json.loads(out)
    assert report["subcommand"] == "repro irrational"
    assert report["verdicts"]["reproduced"] is True


def test_repro_all(capsys):
    code, out, err = run(capsys, "repro", "all", "--seed", "3")
    assert code == 0
    reports = json.loads(out)
    assert [r["subcommand"] for r in reports] == [f"repro {c}" for c in get_all_case_ids()]
    assert all(r["verdicts"]["reproduced"] for r in reports)
    assert err.count("Reproduced:") == len(reports)


def test_unseeded_runs_replay_byte_for_byte(capsys, write):
    circulant = {"rows": 3, "cols": 3, "re": [["1/2", "1/3", "1/6"], ["1/6", "1/2", "1/3"],
                                              ["1/3", "1/6", "1/2"]]}
    matrix = write("d.json", circulant)
    target = write("t.json", {"n": 1, "atoms": [["1/2"]], "weights": ["1"]})
    source = write("s.json", {"n": 1, "atoms": [["0"], ["1"]], "weights": ["1/2", "1/2"]})
    for argv in (["birkhoff", matrix], ["check", "--target", target, "--source", source]):
        first = run(capsys, *argv)
        second = run(capsys, *argv)
        assert first[0] == 0
        assert json.loads(first[1])["backend"] == "exact"
        assert first[1] == second[1]


def test_bh_synth_multiplicity_floor_flag(capsys, write):
    vertices = write("x.json", {"n": 2, "vertices": [["0", "0"], ["1", "0"], ["0", "1"]]})
    target = write("d.json", {"n": 2, "entries": [["1/20", "1/20"]]})
    argv = ["bh", "synth", "--vertices", vertices, "--target", target, "--size", "600"]
    code, out, _ = run(capsys, *argv)
    assert code == 1
    assert out == ""
    code, out, _ = run(capsys, *argv, "--no-floor")
    assert code == 0
    report = json.loads(out)
    assert report["verdicts"]["multiplicity_floor_met"] is False
    assert report["achieved"]["multiplicities"] == [540, 30, 30]


def test_schur_horn_depth_flag(capsys, write):
    target, source = write("t.json", ARVESON_TARGET), write("s.json", ARVESON_SOURCE)
    code, out, _ = run(capsys, "ii1", "schur-horn", "--target", target, "--source", source,
                       "--depth", "2")
    assert code == 0
    report = json.loads(out)
    assert report["achieved"]["depth"] == 2
    assert report["verdicts"]["block_trace_bound_met"] is True
    assert report["verdicts"]["achieved_equals_target"] is True
