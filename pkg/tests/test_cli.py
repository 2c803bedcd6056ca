"""
End-to-end tests of the phi4-flow command line on small configurations.
"""
import io
import json
import os
import tempfile
from contextlib import redirect_stdout

import pytest

from phi4flow.cli import main
from phi4flow.config import DEFAULT_SIX_POINT
from phi4flow.errors import EXIT_INCONCLUSIVE, EXIT_OK
from phi4flow.utils import load_csv, load_json


def _write_config(directory, data):
    data = dict(data)
    data.setdefault("output", {"directory": os.path.join(directory, "out")})
    path = os.path.join(directory, "config.json")
    with open(path, "w") as fh:
        json.dump(data, fh)
    return path


def test_schema():
    print("\n[Test 1] schema prints the configuration schema")
    buffer = io.StringIO()
    with redirect_stdout(buffer):
        code = main(["schema"])
    assert code == EXIT_OK
    schema = json.loads(buffer.getvalue())
    assert "task" in schema["properties"]


def test_config_errors_exit_2():
    print("\n[Test 2] Configuration errors")
    assert main(["eval"]) == 2
    with tempfile.TemporaryDirectory() as tmp:
        assert main(["eval", "--config", os.path.join(tmp, "missing.json")]) == 2
        bad = _write_config(tmp, {"regulator": {"a0": 2.0}})
        assert main(["eval", "--config", bad]) == 2
        good = _write_config(tmp, {})
        assert main(["verify", "bogus", "--config", good]) == 2
        assert main(["eval", "--config", good, "--threads", "0"]) == 2


def test_out_of_scope_exit_3():
    print("\n[Test 3] Out-of-scope index")
    with tempfile.TemporaryDirectory() as tmp:
        path = _write_config(tmp, {"task": {"loop": 2, "legs": 4}})
        assert main(["eval", "--config", path]) == 3


def test_eval_tree_six_point():
    print("\n[Test 4] eval writes a unit-annotated table")
    with tempfile.TemporaryDirectory() as tmp:
        path = _write_config(tmp, {
            "regulator": {"a0": 0.25, "a": 1.0},
            "task": {"loop": 0, "legs": 6, "method": "closed_form", "momenta": [DEFAULT_SIX_POINT, DEFAULT_SIX_POINT]},
        })
        assert main(["eval", "--config", path]) == EXIT_OK
        table = load_csv(os.path.join(tmp, "out", "eval", "eval.csv"))
        print(f"  columns: {list(table.columns)}")
        assert "value[mass^(4-n)]" in table.columns
        assert "a0[1/mass]" in table.columns
        assert len(table) == 2
        assert table["value[mass^(4-n)]"].iloc[0] == table["value[mass^(4-n)]"].iloc[1]
        assert table["value[mass^(4-n)]"].iloc[0] < 0.0


def test_verify_delta():
    print("\n[Test 5] verify delta")
    with tempfile.TemporaryDirectory() as tmp:
        path = _write_config(tmp, {})
        out = os.path.join(tmp, "override")
        assert main(["verify", "delta", "--config", path, "--output-dir", out, "--emit-gnuplot"]) == EXIT_OK
        report = load_json(os.path.join(out, "verify", "report.json"))
        assert report["status"] == "PASS"
        assert len(report["suites"]) > 0
        assert any(name.endswith(".gp") for name in os.listdir(os.path.join(out, "verify")))


def test_verify_inconclusive_exit():
    print("\n[Test 6] Too narrow a power-counting window is inconclusive")
    with tempfile.TemporaryDirectory() as tmp:
        path = _write_config(tmp, {
            "task": {"power_counting_suite": {"a_list": [0.25, 0.2], "method": "closed_form"}},
        })
        assert main(["verify", "power-counting", "--config", path]) == EXIT_INCONCLUSIVE
        assert main(["verify", "power-counting", "--ln", "0,4", "--config", path]) == EXIT_INCONCLUSIVE


def test_counterterms_and_oracle():
    print("\n[Test 7] counterterms and oracle tables")
    with tempfile.TemporaryDirectory() as tmp:
        path = _write_config(tmp, {
            "regulator": {"a0": 0.25, "a": 1.0, "a0_list": [0.25, 0.125]},
            "task": {"loop": 0, "legs": 6, "loops": [0], "momenta": [DEFAULT_SIX_POINT]},
        })
        assert main(["counterterms", "--config", path]) == EXIT_OK
        table = load_csv(os.path.join(tmp, "out", "counterterms", "counterterms.csv"))
        assert list(table.columns) == ["a0[1/mass]", "l[1]", "d[mass^2]", "b[1]", "c[1]", "error[mass^(4-n)]"]
        assert (table["d[mass^2]"] == 0.0).all()

        assert main(["oracle", "--config", path]) == EXIT_OK
        oracle = load_csv(os.path.join(tmp, "out", "oracle", "oracle.csv"))
        assert oracle["quantity[-]"].iloc[0] == "tree_six_point_sum_10_channels"
        assert list(oracle.columns) == ["row[1]", "quantity[-]", "unit[-]", "value[see unit]"]
        assert oracle["unit[-]"].iloc[0] == "mass^-2"

        path = _write_config(tmp, {
            "regulator": {"a0": 0.25, "a": 1.0},
            "task": {"loop": 1, "legs": 2},
        })
        assert main(["oracle", "--config", path]) == EXIT_OK
        oracle = load_csv(os.path.join(tmp, "out", "oracle", "oracle.csv")).set_index("quantity[-]")
        print(f"  oracle units: {dict(oracle['unit[-]'])}")
        assert oracle.loc["tadpole_heat_kernel", "unit[-]"] == "mass^2"
        assert oracle.loc["d_1_heat_kernel", "unit[-]"] == "mass^2"
        assert oracle.loc["c_1_bubble", "unit[-]"] == "1"
        assert oracle.loc["d_1_zone_quadrature", "value[see unit]"] == pytest.approx(
            oracle.loc["d_1_heat_kernel", "value[see unit]"], rel=1e-7)

def _read_tree(root):
    files = {}
    for directory, _, names in os.walk(root):
        for name in names:
            path = os.path.join(directory, name)
            with open(path, "rb") as fh:
                files[os.path.relpath(path, root)] = fh.read()
    return files


def test_outputs_are_byte_identical():
    print("\n[Test 8] Repeated runs write byte-identical outputs")
    with tempfile.TemporaryDirectory() as tmp:
        path = _write_config(tmp, {
            "regulator": {"a0": 0.25, "a": 1.0},
            "task": {"loop": 0, "legs": 6, "method": "closed_form", "momenta": [DEFAULT_SIX_POINT]},
        })
        runs = []
        for name in ("first", "second"):
            out = os.path.join(tmp, name)
            assert main(["eval", "--config", path, "--output-dir", out]) == EXIT_OK
            assert main(["verify", "delta", "--config", path, "--output-dir", out]) == EXIT_OK
            runs.append(_read_tree(out))
        print(f"  compared files: {sorted(runs[0])}")
        assert len(runs[0]) > 1
        assert runs[0] == runs[1]



if __name__ == "__main__":
    test_schema()
    test_config_errors_exit_2()
    test_out_of_scope_exit_3()
    test_eval_tree_six_point()
    test_verify_delta()
    test_verify_inconclusive_exit()
    test_counterterms_and_oracle()
    test_outputs_are_byte_identical()
