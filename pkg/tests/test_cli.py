import json
from pathlib import Path

import numpy as np
import pytest

from polycredal import exhaustive_scan, parse_network
from polycredal.cli import main

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def small_net_path(tmp_path):
    path = tmp_path / "net.json"
    code = main(
        [
            "generate", "--nodes", "4", "--categories", "2..2", "--vertices", "2..2",
            "--seed", "12", "--output", str(path),
        ]
    )
    assert code == 0
    return path


def _infer(path, tmp_path, algorithm, *extra):
    out = tmp_path / f"report-{algorithm}.json"
    net = parse_network(path)
    code = main(
        [
            "infer", "--network", str(path), "--query", net.names[0],
            "--algorithm", algorithm, "--output", str(out), *extra,
        ]
    )
    return code, (json.loads(out.read_text()) if out.exists() else None)


class TestGenerate:
    def test_deterministic_bytes(self, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        for target in (a, b):
            assert main(
                ["generate", "--nodes", "3", "--seed", "5", "--output", str(target)]
            ) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_output_reparses(self, small_net_path):
        net = parse_network(small_net_path)
        assert len(net.variables) == 4

    def test_bad_range_is_invalid_input(self, capsys):
        assert main(["generate", "--nodes", "3", "--categories", "5..2"]) == 2

    def test_single_node(self, tmp_path):
        out = tmp_path / "one.json"
        assert main(["generate", "--nodes", "1", "--output", str(out)]) == 0
        assert len(parse_network(out).variables) == 1


class TestInfer:
    def test_unknown_algorithm_is_usage_error(self, small_net_path, tmp_path):
        code, _ = _infer(small_net_path, tmp_path, "nosuch")
        assert code == 1

    def test_unknown_variable_is_input_error(self, small_net_path):
        code = main(
            [
                "infer", "--network", str(small_net_path), "--query", "NOPE",
                "--algorithm", "ar",
            ]
        )
        assert code == 2

    def test_malformed_network_is_input_error(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{}")
        code = main(["infer", "--network", str(bad), "--query", "X", "--algorithm", "ar"])
        assert code == 2

    def test_report_contents(self, small_net_path, tmp_path):
        code, doc = _infer(small_net_path, tmp_path, "ar")
        assert code == 0
        assert doc["tool"]["name"] == "polycredal"
        assert doc["input_digest"].startswith("sha256:")
        net = parse_network(small_net_path)
        cats = net.variable(net.names[0]).categories
        assert set(doc["intervals"]) == set(cats)
        for lo, hi in doc["intervals"].values():
            assert 0.0 <= lo <= hi <= 1.0

    def test_bnb_matches_exhaustive(self, small_net_path, tmp_path):
        code_b, doc_b = _infer(small_net_path, tmp_path, "bnb", "--epsilon", "0")
        code_e, doc_e = _infer(small_net_path, tmp_path, "exhaustive")
        assert code_b == code_e == 0
        for cat, (lo, hi) in doc_e["intervals"].items():
            assert doc_b["intervals"][cat][0] == pytest.approx(lo, abs=1e-9)
            assert doc_b["intervals"][cat][1] == pytest.approx(hi, abs=1e-9)

    def test_all_algorithms_nest(self, small_net_path, tmp_path):
        docs = {}
        for alg in ("ar", "ar-plus", "local-search", "exhaustive"):
            code, docs[alg] = _infer(small_net_path, tmp_path, alg)
            assert code == 0
        for cat, (lo, hi) in docs["exhaustive"]["intervals"].items():
            assert docs["ar-plus"]["intervals"][cat][0] <= lo + 1e-9
            assert docs["ar-plus"]["intervals"][cat][1] >= hi - 1e-9
            assert docs["ar"]["intervals"][cat][0] <= docs["ar-plus"]["intervals"][cat][0] + 1e-9
            assert docs["ar"]["intervals"][cat][1] >= docs["ar-plus"]["intervals"][cat][1] - 1e-9
            assert docs["local-search"]["intervals"][cat][0] >= lo - 1e-9
            assert docs["local-search"]["intervals"][cat][1] <= hi + 1e-9

    def test_evidence_flag(self, small_net_path, tmp_path):
        net = parse_network(small_net_path)
        ev_var = net.names[-1]
        ev_cat = net.variable(ev_var).categories[0]
        out = tmp_path / "ev.json"
        code = main(
            [
                "infer", "--network", str(small_net_path), "--query", net.names[0],
                "--evidence", f"{ev_var}={ev_cat}", "--algorithm", "exhaustive",
                "--output", str(out),
            ]
        )
        assert code == 0
        doc = json.loads(out.read_text())
        scan = exhaustive_scan(net, net.names[0], {ev_var: 0})
        cats = net.variable(net.names[0]).categories
        for c, cat in enumerate(cats):
            assert doc["intervals"][cat][0] == pytest.approx(scan.intervals.lower[c])
            assert doc["intervals"][cat][1] == pytest.approx(scan.intervals.upper[c])

    def test_infeasible_evidence_exit_code(self, tmp_path):
        doc = {
            "variables": [
                {"name": "X", "categories": ["a", "b"], "parents": []},
                {"name": "Y", "categories": ["u", "v"], "parents": ["X"]},
            ],
            "credal_sets": {
                "X": {"": [[1.0, 0.0]]},
                "Y": {"a": [[1.0, 0.0]], "b": [[0.0, 1.0]]},
            },
        }
        path = tmp_path / "net.json"
        path.write_text(json.dumps(doc))
        code = main(
            [
                "infer", "--network", str(path), "--query", "X",
                "--evidence", "Y=v", "--algorithm", "exhaustive",
            ]
        )
        assert code == 3

    def test_resource_cap_exit_code(self, tmp_path):
        # 8 vertices in each of >= 9 local sets: far beyond the enumeration cap
        path = tmp_path / "net.json"
        main(["generate", "--nodes", "9", "--categories", "2..2", "--vertices",
              "8..8", "--seed", "2", "--output", str(path)])
        net = parse_network(path)
        code = main(
            [
                "infer", "--network", str(path), "--query", net.names[0],
                "--algorithm", "exhaustive",
            ]
        )
        assert code == 4

    def test_deterministic_reports_modulo_timing(self, small_net_path, tmp_path):
        _, a = _infer(small_net_path, tmp_path, "bnb", "--seed", "3")
        _, b = _infer(small_net_path, tmp_path, "bnb", "--seed", "3")
        a["stats"].pop("wall_time")
        b["stats"].pop("wall_time")
        assert a == b


class TestBenchmarkCommand:
    def test_small_benchmark_runs(self, tmp_path):
        out = tmp_path / "bench.json"
        code = main(
            [
                "benchmark", "--ensemble-size", "3", "--nodes", "4",
                "--categories", "2..2", "--vertices", "1..2",
                "--algorithms", "ar,ar-plus", "--seed", "11", "--output", str(out),
            ]
        )
        assert code == 0
        doc = json.loads(out.read_text())
        assert doc["aggregates"]["ar-plus"]["mean_interval_length"] <= (
            doc["aggregates"]["ar"]["mean_interval_length"] + 1e-12
        )

    def test_empty_algorithm_list_is_usage_error(self):
        assert main(
            ["benchmark", "--ensemble-size", "1", "--nodes", "3", "--algorithms", ","]
        ) == 1

    def test_missing_required_flag_is_usage_error(self):
        assert main(["benchmark", "--algorithms", "ar"]) == 1
