"""Command-line entry point: exit codes and artifacts."""

from __future__ import annotations

import io
import json

import pytest
from rich.console import Console

from hiermdp.instances import bundled_example_path, save_instance, tiny_corpus
from hiermdp.main import main
from hiermdp.utils import stream_csv_file

EXAMPLE1 = str(bundled_example_path("example1"))
EXAMPLE2 = str(bundled_example_path("example2"))


def _run(*argv: str) -> tuple[int, str]:
    buffer = io.StringIO()
    code = main(list(argv), console=Console(file=buffer, width=200))
    return code, buffer.getvalue()


# ============================================================================
# solve
# ============================================================================

def test_solve_writes_artifacts(tmp_path) -> None:
    code, _ = _run("solve", EXAMPLE2, "--output-dir", str(tmp_path))
    assert code == 0
    for framework in ("copt", "fopt"):
        document = json.loads((tmp_path / f"example2_{framework}.json").read_text())
        assert document["framework"] == framework
        assert document["converged"]
        assert document["global_policy"] == [[1], [1]]
        assert document["first_actions"] == [[1], [1]]
        rows = list(stream_csv_file(tmp_path / f"example2_{framework}_values.csv"))
        assert [row["state_index"] for row in rows] == ["0", "1"]
        assert float(rows[0]["value"]) == pytest.approx(89.6, abs=1e-6)
        assert json.loads(rows[1]["components"]) == [1]


def test_solve_single_framework_json_only(tmp_path) -> None:
    code, _ = _run("solve", EXAMPLE1, "--framework", "copt", "--format", "json", "--output-dir", str(tmp_path))
    assert code == 0
    assert sorted(p.name for p in tmp_path.iterdir()) == ["example1_copt.json"]
    document = json.loads((tmp_path / "example1_copt.json").read_text())
    assert document["first_actions"] == [[0], [1]]
    assert all(policy["state"] is not None for policy in document["local_policies"])


def test_solve_is_deterministic(tmp_path) -> None:
    for run in ("a", "b"):
        assert _run("solve", EXAMPLE1, "--output-dir", str(tmp_path / run))[0] == 0
    for name in ("example1_copt.json", "example1_fopt.json", "example1_copt_values.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_solve_non_convergence(tmp_path) -> None:
    code, output = _run("solve", EXAMPLE1, "--max-iter", "3", "--output-dir", str(tmp_path))
    assert code == 2
    document = json.loads((tmp_path / "example1_fopt.json").read_text())
    assert not document["converged"]
    assert document["iterations"] == 3
    assert "no" in output


def test_solve_refuses_oversized_joint_space(tmp_path) -> None:
    code, output = _run("solve", EXAMPLE1, "--copt-state-cap", "1", "--output-dir", str(tmp_path))
    assert code == 1
    assert "refused" in output


def test_invalid_epsilon(tmp_path) -> None:
    code, output = _run("solve", EXAMPLE1, "--epsilon=0", "--output-dir", str(tmp_path))
    assert code == 1
    assert "epsilon" in output


def test_missing_instance(tmp_path) -> None:
    code, _ = _run("solve", str(tmp_path / "absent.json"), "--output-dir", str(tmp_path))
    assert code == 1


def test_malformed_instance(tmp_path) -> None:
    path = tmp_path / "bad.json"
    path.write_text('{"K": 2,\n "B": 1,\n')
    code, output = _run("solve", str(path), "--output-dir", str(tmp_path))
    assert code == 1
    assert "line" in output


def test_invalid_instance_lists_violations(tmp_path) -> None:
    document = json.loads(open(EXAMPLE1).read())
    document["subprocesses"][0]["transition"][0][0] = [0.5, 0.6]
    path = tmp_path / "invalid.json"
    path.write_text(json.dumps(document))
    code, output = _run("check", str(path), "--output-dir", str(tmp_path))
    assert code == 1
    assert "row sum 1.1" in output


# ============================================================================
# compare / check
# ============================================================================

def test_compare_exit_codes(tmp_path) -> None:
    assert _run("compare", EXAMPLE1, "--output-dir", str(tmp_path))[0] == 3
    assert _run("compare", EXAMPLE2, "--output-dir", str(tmp_path))[0] == 0
    report = json.loads((tmp_path / "example1_compare.json").read_text())
    assert not report["equivalent"]
    rows = list(stream_csv_file(tmp_path / "example2_compare.csv"))
    assert list(rows[0]) == ["state_index", "components", "V_copt", "V_fopt", "lower_envelope", "gap"]


def test_compare_non_convergence_keeps_partial_result(tmp_path) -> None:
    code, output = _run("compare", EXAMPLE1, "--max-iter", "3", "--output-dir", str(tmp_path))
    assert code == 2
    assert "not converged" in output
    # COpt runs first and is the one that stops
    document = json.loads((tmp_path / "example1_copt.json").read_text())
    assert not document["converged"]
    assert document["iterations"] == 3
    assert (tmp_path / "example1_copt_values.csv").exists()
    assert not (tmp_path / "example1_compare.json").exists()


def test_check_exit_codes(tmp_path) -> None:
    assert _run("check", EXAMPLE2, "--output-dir", str(tmp_path))[0] == 0
    assert _run("check", EXAMPLE1, "--output-dir", str(tmp_path))[0] == 3
    assert _run("check", EXAMPLE2, "--policy-cap", "1", "--output-dir", str(tmp_path / "capped"))[0] == 4
    report = json.loads((tmp_path / "example1_assumptions.json").read_text())
    a4 = next(a for a in report["assumptions"] if a["name"] == "A4")
    assert a4["verdict"] == "fails"
    assert a4["witness"]["upper_set"] == [1]
    assert a4["witness"]["context"]["allocation"] == [1]


def test_check_single_state_instance(tmp_path) -> None:
    document = {
        "name": "single",
        "subprocesses": [{"transition": [[[1.0]], [[1.0]]], "reward": [[0.0, 1.0]]}],
        "K": 2, "B": 1, "budget_mode": "exactly", "T": 1, "beta": 0.9, "gamma": 0.9,
    }
    path = tmp_path / "single.json"
    path.write_text(json.dumps(document))
    assert _run("check", str(path), "--output-dir", str(tmp_path))[0] == 0


# ============================================================================
# paper-examples / oracle-verify
# ============================================================================

@pytest.mark.slow
def test_paper_examples_pass(tmp_path) -> None:
    code, output = _run(
        "paper-examples", "--episodes", "2000", "--horizon", "1200", "--output-dir", str(tmp_path),
    )
    assert code == 0, output
    summary = json.loads((tmp_path / "paper_examples.json").read_text())
    assert summary["passed"] == 8
    assert summary["failed"] == 0


def test_paper_examples_with_corrupted_data(tmp_path) -> None:
    data = tmp_path / "data"
    data.mkdir()
    (data / "example1.json").write_text("{ not json")
    (data / "example2.json").write_text("{}")
    code, output = _run("paper-examples", "--data-dir", str(data), "--output-dir", str(tmp_path))
    assert code == 1
    assert "parse error" in output


def test_oracle_verify_instance(tmp_path) -> None:
    code, _ = _run("oracle-verify", EXAMPLE1, "--output-dir", str(tmp_path))
    assert code == 0
    summary = json.loads((tmp_path / "oracle_verify.json").read_text())
    assert summary["passed"] == 1


@pytest.mark.slow
def test_oracle_verify_corpus(tmp_path) -> None:
    code, output = _run("oracle-verify", "--corpus", "5", "--seed", "2", "--output-dir", str(tmp_path))
    assert code == 0, output


def test_oracle_verify_saved_instance(tmp_path) -> None:
    model = tiny_corpus(4, 1)[0]
    path = save_instance(model, tmp_path / "tiny.json")
    assert _run("oracle-verify", str(path), "--output-dir", str(tmp_path))[0] == 0
