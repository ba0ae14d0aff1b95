import json
import subprocess
import sys

import pytest
from conftest import NETWORKS

from penbounds.cli import main


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def structured(capsys, *argv):
    code, out, err = run(capsys, *argv, "--format", "structured")
    return code, (json.loads(out) if out else None), err


def bounds_by_kind(doc):
    return {b["bound_kind"]: b for b in doc["bounds"]}


def test_bounds_triangle(capsys):
    code, doc, _ = structured(capsys, "bounds", "--network", NETWORKS / "triangle.json")
    assert code == 0
    b = bounds_by_kind(doc)
    assert b["weakest_cut"]["value"] == 2.0
    assert b["partition_pure"]["value"] == 1.5 and b["partition_pure"]["exact"] == "3/2"
    assert b["devetak_winter"]["value"] == 1.0


def test_bounds_eight_node(capsys):
    code, doc, _ = structured(capsys, "bounds", "--network", NETWORKS / "eight_node.json")
    b = bounds_by_kind(doc)
    assert code == 0
    assert b["weakest_cut"]["value"] == 3.0
    assert b["partition_pure"]["value"] == 2.5
    assert len(b["partition_pure"]["witness"]["blocks"]) == 3


def test_bounds_seekers_override(capsys):
    code, doc, _ = structured(capsys, "bounds", "--network", NETWORKS / "eight_node.json", "--seekers", "1,8")
    assert code == 0
    assert doc["network"]["seekers"] == [1, 8]


def test_bounds_tree_has_tree_exact_row(capsys):
    code, doc, _ = structured(capsys, "bounds", "--network", NETWORKS / "helper_tree.json")
    assert code == 0
    assert bounds_by_kind(doc)["tree_exact"]["value"] == 1.0


def test_bounds_human_output_lists_rows(capsys):
    code, out, _ = run(capsys, "bounds", "--network", NETWORKS / "triangle.json")
    assert code == 0
    assert "weakest_cut" in out and "3/2" in out and "devetak_winter" in out


@pytest.mark.parametrize(
    "rounds, rate, gap",
    [(2, 1.5, 0.0), (1, 1.0, 0.5)],
)
def test_simulate_triangle(capsys, rounds, rate, gap):
    code, doc, _ = structured(
        capsys, "simulate", "--network", NETWORKS / "triangle.json", "--rounds", rounds, "--audit-trials", 300
    )
    assert code == 0
    assert doc["rate"] == rate
    assert doc["gap"] == pytest.approx(gap)
    assert doc["audit"]["passed"]
    assert len(set(doc["transcript"]["keys"].values())) == 1


def test_simulate_path(capsys):
    code, doc, _ = structured(
        capsys, "simulate", "--network", NETWORKS / "path4.json", "--rounds", 5, "--audit-trials", 100
    )
    assert code == 0 and doc["rate"] == 1.0


def test_simulate_requires_all_seekers(capsys):
    code, _, err = run(capsys, "simulate", "--network", NETWORKS / "helper_tree.json")
    assert code == 2
    assert "secrecy-seeking" in err


def test_simulate_requires_bell_edges(capsys):
    code, _, _ = run(capsys, "simulate", "--network", NETWORKS / "mixed_weights.json")
    assert code == 2


def test_verify_gme_triangle(capsys):
    code, doc, _ = structured(
        capsys, "verify-gme", "--network", NETWORKS / "triangle.json", "--samples", 100, "--trials", 50
    )
    assert code == 0
    assert doc["passed"]
    assert doc["identity"]["identity_value"] == pytest.approx(2.0, abs=1e-8)


def test_bb84_ceiling(capsys):
    code, doc, _ = structured(capsys, "bb84", "--resolution", 500)
    assert code == 0
    assert doc["ceiling"] == pytest.approx(0.18872, abs=1e-4)


def test_bb84_ghz_flag(capsys):
    code, doc, _ = structured(capsys, "bb84", "--correlators", "1,1,1")
    assert code == 0
    assert doc["pen3_feasible"] is False
    assert doc["flag"] == "infeasible in PEN-3"
    code, out, _ = run(capsys, "bb84", "--state", "ghz")
    assert "infeasible in PEN-3" in out


def test_bb84_bad_input(capsys):
    assert run(capsys, "bb84", "--correlators", "1,1")[0] == 1
    assert run(capsys, "bb84", "--state", "werner")[0] == 1
    assert run(capsys, "bb84", "--correlators", "2,0,0")[0] == 1


def test_report_includes_packing(capsys):
    code, doc, _ = structured(capsys, "report", "--network", NETWORKS / "triangle.json")
    assert code == 0
    assert doc["fractional_packing"]["value"] == pytest.approx(1.5)


def test_structured_output_is_byte_identical(capsys):
    args = ("simulate", "--network", NETWORKS / "triangle.json", "--rounds", 2, "--seed", "0x1234",
            "--audit-trials", 50, "--format", "structured")
    first = run(capsys, *args)[1]
    second = run(capsys, *args)[1]
    assert first == second
    other = run(capsys, *args[:-2], "--format", "structured", "--seed", "7")[1]
    assert json.loads(other)["transcript"]["seed"] == 7


def test_default_seed_is_documented_constant(capsys):
    _, doc, _ = structured(capsys, "simulate", "--network", NETWORKS / "triangle.json", "--audit-trials", 10)
    assert doc["transcript"]["seed"] == 0x5EED


def test_exit_code_input_errors(capsys, tmp_path):
    assert run(capsys, "bounds", "--network", tmp_path / "missing.json")[0] == 1
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"n_vertices": 2, "seekers": [1, 2], "edges": [{"u": 1, "v": 3, "state": {"type": "bell"}}]}))
    code, _, err = run(capsys, "bounds", "--network", bad)
    assert code == 1 and "edge 0" in err
    assert run(capsys, "bounds")[0] == 1
    assert run(capsys, "nonsense")[0] == 1


def test_exit_code_limit_error(capsys, tmp_path):
    n = 13
    doc = {
        "n_vertices": n,
        "seekers": [1, n],
        "edges": [{"u": k, "v": k + 1, "state": {"type": "bell"}} for k in range(1, n)] + [
            {"u": 1, "v": n, "state": {"type": "bell"}}
        ],
    }
    path = tmp_path / "big.json"
    path.write_text(json.dumps(doc))
    assert run(capsys, "bounds", "--network", path)[0] == 2


def test_console_script_entry_point():
    res = subprocess.run(
        [sys.executable, "-m", "penbounds.cli", "bounds", "--network", str(NETWORKS / "triangle.json")],
        capture_output=True,
        text=True,
    )
    assert res.returncode == 0
    assert "3/2" in res.stdout
