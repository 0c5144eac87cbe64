import json

import numpy as np
import pytest

from schurlift.cli import (
    EXIT_INCONCLUSIVE,
    EXIT_INFEASIBLE,
    EXIT_SOLVED,
    instance_to_dict,
    main,
    parse_instance,
    report_to_json,
    run,
)
from schurlift.errors import ParseError, ValidationError

MOEBIUS = {
    "geometry": "ball",
    "m": 1,
    "n": 1,
    "dE": 1,
    "dEstar": 1,
    "nodes": [[[0.0, 0.0]]],
    "targets": [[[[0.5, 0.0]]]],
    "mode": "np-ball",
    "options": {},
}

BIDISC = {
    "geometry": "polydisc",
    "gamma": [1, 1],
    "n": 2,
    "dE": 1,
    "dEstar": 1,
    "nodes": [
        [[0.3, 0.0], [0.1, 0.2]],
        [[-0.2, 0.1], [0.35, 0.0]],
    ],
    "targets": [[[[0.25, 0.05]]], [[[-0.15, 0.0]]]],
    "mode": "lift-polydisc",
    "options": {"max_iter": 10000},
}


def test_parse_minimal_instance():
    inst = parse_instance(json.dumps(MOEBIUS))
    assert inst.spec.geometry == "ball"
    assert inst.spec.m == 1
    assert inst.nodes == [(0j,)]
    assert inst.targets[0][0, 0] == 0.5


def test_parse_rejects_bad_json():
    with pytest.raises(ParseError):
        parse_instance("{not json")


def test_parse_rejects_boundary_node():
    doc = dict(MOEBIUS, nodes=[[[1.0, 0.0]]])
    with pytest.raises(ValidationError):
        parse_instance(json.dumps(doc))


def test_parse_rejects_wrong_target_rows():
    doc = dict(MOEBIUS, targets=[[[[0.5, 0.0]], [[0.1, 0.0]]]])
    with pytest.raises(ValidationError):
        parse_instance(json.dumps(doc))


def test_parse_rejects_unknown_mode():
    doc = dict(MOEBIUS, mode="optimize")
    with pytest.raises(ValidationError):
        parse_instance(json.dumps(doc))


def test_parse_requires_p_for_composite():
    doc = dict(MOEBIUS, mode="lift-pm")
    with pytest.raises(ParseError):
        parse_instance(json.dumps(doc))


def test_round_trip_is_idempotent():
    inst = parse_instance(json.dumps(MOEBIUS))
    doc1 = instance_to_dict(inst)
    doc2 = instance_to_dict(parse_instance(json.dumps(doc1)))
    assert json.dumps(doc1, sort_keys=True) == json.dumps(doc2, sort_keys=True)


def test_run_moebius_solved():
    inst = parse_instance(json.dumps(MOEBIUS))
    report, code = run(inst)
    assert code == EXIT_SOLVED
    assert report["status"] == "solved"
    assert report["certificates"]["max_node_residual"] <= 1e-10
    assert report["colligation"]["kind"] == "unitary"
    assert len(report["nodes"]) == 1


def test_run_infeasible_two_node():
    doc = dict(
        MOEBIUS,
        nodes=[[[0.0, 0.0]], [[0.1, 0.0]]],
        targets=[[[[0.0, 0.0]]], [[[0.9, 0.0]]]],
    )
    inst = parse_instance(json.dumps(doc))
    report, code = run(inst)
    assert code == EXIT_INFEASIBLE
    assert report["status"] == "infeasible"
    assert report["certificates"]["pick_min_eig"] < -1e-6


def test_run_polydisc_solved_and_inconclusive():
    inst = parse_instance(json.dumps(BIDISC))
    report, code = run(inst)
    assert code == EXIT_SOLVED
    assert report["certificates"]["feasibility"]["iterations"] <= 10000

    capped = dict(BIDISC, options={"max_iter": 1, "feasibility_tol": 1e-14})
    inst = parse_instance(json.dumps(capped))
    report, code = run(inst)
    assert code == EXIT_INCONCLUSIVE
    assert report["status"] == "inconclusive"


def test_run_lift_pm_mode():
    doc = dict(
        MOEBIUS,
        mode="lift-pm",
        p=2,
        nodes=[[[0.2, 0.0]], [[-0.3, 0.1]]],
        targets=[[[[0.4, 0.0]]], [[[0.1, -0.2]]]],
    )
    inst = parse_instance(json.dumps(doc))
    report, code = run(inst)
    assert code == EXIT_SOLVED
    assert report["certificates"]["dilation_isometry_residual"] <= 1e-10
    a, b = report["certificates"]["positivity_min_eigs"]
    assert abs(a - b) <= 1e-10


def test_run_factorize_mode():
    doc = dict(
        MOEBIUS,
        mode="factorize",
        p=3,
        nodes=[[[0.2, 0.0]]],
        targets=[[[[0.4, 0.0]]]],
        options={"samples": 40, "seed": 1},
    )
    inst = parse_instance(json.dumps(doc))
    report, code = run(inst)
    assert code == EXIT_SOLVED
    assert report["certificates"]["factorization"]["pass"] is True


def test_run_certify_mode():
    doc = dict(MOEBIUS, mode="certify", options={"samples": 60, "seed": 2})
    inst = parse_instance(json.dumps(doc))
    report, code = run(inst, certify=True)
    assert code == EXIT_SOLVED
    assert report["certificates"]["schur_agler"]["pass"] is True


def test_report_determinism():
    inst1 = parse_instance(json.dumps(MOEBIUS))
    inst2 = parse_instance(json.dumps(MOEBIUS))
    text1 = report_to_json(run(inst1)[0])
    text2 = report_to_json(run(inst2)[0])
    assert text1 == text2


def test_error_report_on_ill_conditioned(tmp_path):
    doc = dict(
        MOEBIUS,
        nodes=[[[0.3, 0.0]], [[0.3, 1e-12]]],
        targets=[[[[0.1, 0.0]]], [[[0.1, 0.0]]]],
    )
    inst = parse_instance(json.dumps(doc))
    report, code = run(inst)
    assert code == 1
    assert report["status"] == "error"
    assert report["error"]["type"] == "IllConditioned"


def test_main_solve_and_scan(tmp_path, capsys):
    path = tmp_path / "inst.json"
    path.write_text(json.dumps(MOEBIUS))
    code = main(["solve", str(path)])
    out = capsys.readouterr().out
    assert code == EXIT_SOLVED
    assert json.loads(out)["status"] == "solved"

    csv_path = tmp_path / "scan.csv"
    code = main(["scan", str(path), "--grid", "5:8:0.9", "--csv-out", str(csv_path)])
    capsys.readouterr()
    assert code == EXIT_SOLVED
    lines = csv_path.read_text().strip().split("\n")
    assert lines[0] == "re(z1),im(z1),opnorm"
    assert len(lines) == 41


def test_main_missing_file(capsys):
    code = main(["solve", "/nonexistent/instance.json"])
    out = capsys.readouterr().out
    assert code == 1
    assert json.loads(out)["status"] == "error"


def test_main_byte_identical_runs(tmp_path, capsys):
    path = tmp_path / "inst.json"
    path.write_text(json.dumps(dict(MOEBIUS, mode="certify", options={"samples": 30, "seed": 7})))
    main(["certify", str(path)])
    first = capsys.readouterr().out
    main(["certify", str(path)])
    second = capsys.readouterr().out
    assert first == second
