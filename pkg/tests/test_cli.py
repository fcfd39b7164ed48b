"""End-to-end CLI behavior: subcommands, exit codes, artifact routing."""

import json

import pytest

from cyberdep.cli import main
from cyberdep.graphio import graph_to_json_bytes, load_graph_json
from conftest import jsonl_bytes, make_topology, equal_flow_rows


@pytest.fixture
def capture_file(tmp_path):
    topo = make_topology(3)
    path = tmp_path / "capture.jsonl"
    path.write_bytes(jsonl_bytes(equal_flow_rows(topo, 4)))
    return path


@pytest.fixture
def topo_file(tmp_path):
    topo_doc = {
        "label": "three-field",
        "devices": [
            {"name": "scada", "role": "scada", "addrs": ["10.9.0.1"]},
            {"name": "dev-01", "role": "field", "addrs": ["10.9.1.1"]},
            {"name": "dev-02", "role": "field", "addrs": ["10.9.1.2"]},
            {"name": "dev-03", "role": "field", "addrs": ["10.9.1.3"]},
        ],
    }
    path = tmp_path / "topo.json"
    path.write_text(json.dumps(topo_doc))
    return path


@pytest.fixture
def graph_file(tmp_path, sample_graph):
    path = tmp_path / "graph.json"
    path.write_bytes(graph_to_json_bytes(sample_graph))
    return path


class TestBuild:
    def test_writes_graph_json(self, capture_file, topo_file, tmp_path, capsys):
        out = tmp_path / "graph.json"
        rc = main(["build", "--in", str(capture_file), "--topo", str(topo_file),
                   "--out", str(out)])
        assert rc == 0
        graph = load_graph_json(out.read_bytes())
        assert len(graph.edges) == 3
        assert all(e.sink == "scada" for e in graph.edges)
        err = capsys.readouterr().err
        assert "parsed 12/12" in err
        assert "3 edges" in err

    def test_stdout_when_no_out(self, capture_file, topo_file, capsys):
        rc = main(["build", "--in", str(capture_file), "--topo", str(topo_file)])
        assert rc == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["normalization"] == "global"

    def test_format_inferred_from_suffix(self, capture_file, topo_file, tmp_path):
        out = tmp_path / "graph.dot"
        assert main(["build", "--in", str(capture_file), "--topo", str(topo_file),
                     "--out", str(out)]) == 0
        assert out.read_text().startswith("digraph dependency_graph {")

    def test_format_flag_wins_over_suffix(self, capture_file, topo_file, tmp_path):
        out = tmp_path / "graph.dot"
        assert main(["build", "--in", str(capture_file), "--topo", str(topo_file),
                     "--out", str(out), "--format", "json"]) == 0
        json.loads(out.read_text())

    def test_per_sink_normalization(self, capture_file, topo_file, tmp_path):
        out = tmp_path / "g.json"
        assert main(["build", "--in", str(capture_file), "--topo", str(topo_file),
                     "--normalization", "per-sink", "--out", str(out)]) == 0
        graph = load_graph_json(out.read_bytes())
        assert graph.normalization.value == "per-sink"

    def test_no_scada_collapse_keeps_directions(self, capture_file, topo_file, tmp_path):
        out = tmp_path / "g.json"
        assert main(["build", "--in", str(capture_file), "--topo", str(topo_file),
                     "--no-scada-collapse", "--out", str(out)]) == 0
        graph = load_graph_json(out.read_bytes())
        assert graph.edge("scada", "dev-01") is not None
        assert graph.edge("dev-01", "scada") is not None

    def test_default_topology_used_when_no_topo_flag(self, tmp_path, capsys):
        rows = [{"ts_us": 1, "src": "10.0.0.10", "dst": "10.0.1.20",
                 "proto": "dnp3", "dnp3_fn": "read"}]
        capture = tmp_path / "c.jsonl"
        capture.write_bytes(jsonl_bytes(rows))
        assert main(["build", "--in", str(capture)]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["edges"][0]["source"] == "load-5"

    def test_missing_input_exits_1(self, tmp_path, capsys):
        rc = main(["build", "--in", str(tmp_path / "absent.jsonl")])
        assert rc == 1
        assert "not found" in capsys.readouterr().err

    def test_missing_topology_exits_1(self, capture_file, tmp_path, capsys):
        rc = main(["build", "--in", str(capture_file),
                   "--topo", str(tmp_path / "no-topo.json")])
        assert rc == 1
        assert "topology" in capsys.readouterr().err

    def test_verbose_lists_rejections_and_unmapped(self, topo_file, tmp_path, capsys):
        rows = jsonl_bytes([
            {"ts_us": 1, "src": "10.9.0.1", "dst": "10.9.1.1", "proto": "dnp3", "dnp3_fn": "read"},
            {"ts_us": 2, "src": "10.9.0.1", "dst": "192.0.2.200", "proto": "dnp3", "dnp3_fn": "read"},
        ]) + b"{broken\n"
        capture = tmp_path / "messy.jsonl"
        capture.write_bytes(rows)
        rc = main(["build", "-v", "--in", str(capture), "--topo", str(topo_file),
                   "--out", str(tmp_path / "g.json")])
        assert rc == 0
        err = capsys.readouterr().err
        assert "rejected line 3" in err
        assert "unmapped address 192.0.2.200" in err


class TestExport:
    def test_json_to_dot(self, graph_file, tmp_path):
        out = tmp_path / "g.dot"
        assert main(["export", "--in", str(graph_file), "--format", "dot",
                     "--out", str(out)]) == 0
        assert 'P1 -> F4 [label="0.30"];' in out.read_text()

    def test_json_to_graphml_stdout(self, graph_file, capsysbinary):
        assert main(["export", "--in", str(graph_file), "--format", "graphml"]) == 0
        out = capsysbinary.readouterr().out
        assert out.startswith(b"<?xml")
        assert b"graphml" in out

    def test_json_to_json_round_trip(self, graph_file, tmp_path, sample_graph):
        out = tmp_path / "copy.json"
        assert main(["export", "--in", str(graph_file), "--format", "json",
                     "--out", str(out)]) == 0
        assert load_graph_json(out.read_bytes()) == sample_graph

    def test_corrupt_graph_exits_1(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text("{]")
        assert main(["export", "--in", str(bad), "--format", "dot"]) == 1
        assert "error" in capsys.readouterr().err


class TestQuery:
    def test_two_active_parents(self, graph_file, capsys):
        assert main(["query", "--in", str(graph_file), "--target", "F4",
                     "--active", "P1,P9"]) == 0
        assert capsys.readouterr().out == "0.86\n"

    def test_single_active_parent(self, graph_file, capsys):
        assert main(["query", "--in", str(graph_file), "--target", "F4",
                     "--active", "P9"]) == 0
        assert capsys.readouterr().out == "0.8\n"

    def test_no_evidence(self, graph_file, capsys):
        assert main(["query", "--in", str(graph_file), "--target", "F4"]) == 0
        assert capsys.readouterr().out == "0\n"

    def test_unknown_target_exits_1(self, graph_file, capsys):
        assert main(["query", "--in", str(graph_file), "--target", "F99"]) == 1
        assert "F99" in capsys.readouterr().err

    def test_non_parent_evidence_exits_1(self, graph_file, capsys):
        assert main(["query", "--in", str(graph_file), "--target", "F7",
                     "--active", "P9"]) == 1
        assert "not a parent" in capsys.readouterr().err


class TestSynth:
    def test_builtin_profile_writes_n_lines(self, tmp_path):
        out = tmp_path / "cap.jsonl"
        assert main(["synth", "--profile", "baseline", "--n", "40", "--seed", "5",
                     "--out", str(out)]) == 0
        assert out.read_bytes().count(b"\n") == 40

    def test_seed_reproducible(self, tmp_path):
        a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        for out in (a, b):
            assert main(["synth", "--profile", "dos_only", "--n", "100",
                         "--seed", "11", "--out", str(out)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_profile_document(self, tmp_path, topo_file):
        doc = {"scenario": "baseline", "weights": {"dev-01": 1.0}, "n_messages": 7}
        prof = tmp_path / "profile.json"
        prof.write_text(json.dumps(doc))
        out = tmp_path / "cap.jsonl"
        assert main(["synth", "--profile", str(prof), "--topo", str(topo_file),
                     "--out", str(out)]) == 0
        assert out.read_bytes().count(b"\n") == 7

    def test_profile_document_overrides(self, tmp_path, topo_file):
        doc = {"scenario": "baseline", "weights": {"dev-01": 1.0}, "n_messages": 7}
        prof = tmp_path / "profile.json"
        prof.write_text(json.dumps(doc))
        out = tmp_path / "cap.jsonl"
        assert main(["synth", "--profile", str(prof), "--topo", str(topo_file),
                     "--n", "3", "--seed", "9", "--out", str(out)]) == 0
        assert out.read_bytes().count(b"\n") == 3

    def test_unknown_profile_exits_1(self, capsys):
        assert main(["synth", "--profile", "nonesuch"]) == 1
        assert "neither a built-in" in capsys.readouterr().err

    def test_noise_fraction(self, tmp_path):
        out = tmp_path / "cap.jsonl"
        assert main(["synth", "--profile", "baseline", "--n", "100",
                     "--noise-fraction", "0.1", "--out", str(out)]) == 0
        lines = out.read_bytes().splitlines()
        assert len(lines) == 110
        assert sum(1 for l in lines if b'"proto":"tcp"' in l) == 10


class TestCompare:
    def make_manifest(self, tmp_path, entries):
        for name, seed, profile in entries:
            out = tmp_path / name
            assert main(["synth", "--profile", profile, "--n", "3000",
                         "--seed", str(seed), "--out", str(out)]) == 0
        manifest = [
            {"scenario": profile, "run_id": seed, "capture": name}
            for name, seed, profile in entries
        ]
        path = tmp_path / "manifest.json"
        path.write_text(json.dumps(manifest))
        return path

    def test_json_report(self, tmp_path, capsys):
        manifest = self.make_manifest(tmp_path, [
            ("b1.jsonl", 1, "baseline"),
            ("b2.jsonl", 2, "baseline"),
            ("d1.jsonl", 1, "dos_only"),
        ])
        out = tmp_path / "report.json"
        assert main(["compare", "--in", str(manifest), "--out", str(out)]) == 0
        doc = json.loads(out.read_text())
        assert doc["reference"] == {"scenario": "baseline", "run_id": 1}
        assert doc["flags"]["baseline_uniform"] is True
        assert doc["flags"]["dos_top2"] is True
        assert doc["flags"]["mitigation_pattern"] is None
        assert len(doc["deltas"]) == 2

    def test_text_report(self, tmp_path, capsys):
        manifest = self.make_manifest(tmp_path, [
            ("b1.jsonl", 1, "baseline"),
            ("m1.jsonl", 1, "with_mitigation"),
        ])
        assert main(["compare", "--in", str(manifest), "--format", "text"]) == 0
        text = capsys.readouterr().out
        assert text.startswith("reference: baseline run 1")
        assert "with_mitigation run 1" in text
        assert "flags:" in text

    def test_uniformity_tol_flag(self, tmp_path, capsys):
        manifest = self.make_manifest(tmp_path, [("b1.jsonl", 1, "baseline")])
        assert main(["compare", "--in", str(manifest), "--uniformity-tol", "0.0"]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["flags"]["baseline_uniform"] is False  # sampled, never exact

    def test_empty_manifest_exits_1(self, tmp_path, capsys):
        path = tmp_path / "manifest.json"
        path.write_text("[]")
        assert main(["compare", "--in", str(path)]) == 1
        assert "non-empty" in capsys.readouterr().err

    def test_duplicate_run_exits_1(self, tmp_path, capsys):
        manifest = self.make_manifest(tmp_path, [("b1.jsonl", 1, "baseline")])
        doc = json.loads(manifest.read_text())
        manifest.write_text(json.dumps(doc + doc))
        assert main(["compare", "--in", str(manifest)]) == 1
        assert "duplicate run" in capsys.readouterr().err

    def test_unknown_scenario_exits_1(self, tmp_path, capsys):
        path = tmp_path / "manifest.json"
        path.write_text(json.dumps([{"scenario": "zombie", "run_id": 1, "capture": "x"}]))
        assert main(["compare", "--in", str(path)]) == 1
        assert "unknown scenario" in capsys.readouterr().err

    def test_capture_paths_relative_to_manifest(self, tmp_path):
        sub = tmp_path / "runs"
        sub.mkdir()
        assert main(["synth", "--profile", "baseline", "--n", "500", "--seed", "1",
                     "--out", str(sub / "b1.jsonl")]) == 0
        manifest = sub / "manifest.json"
        manifest.write_text(json.dumps(
            [{"scenario": "baseline", "run_id": 1, "capture": "b1.jsonl"}]
        ))
        # invoked from elsewhere, the capture must still resolve
        assert main(["compare", "--in", str(manifest), "--out",
                     str(tmp_path / "r.json")]) == 0


class TestUsageErrors:
    def test_no_subcommand(self):
        with pytest.raises(SystemExit) as exc:
            main([])
        assert exc.value.code == 2

    def test_unknown_flag(self):
        with pytest.raises(SystemExit) as exc:
            main(["build", "--in", "x", "--frobnicate"])
        assert exc.value.code == 2

    def test_bad_format_choice(self):
        with pytest.raises(SystemExit) as exc:
            main(["export", "--in", "x", "--format", "png"])
        assert exc.value.code == 2

    def test_missing_required_flag(self):
        with pytest.raises(SystemExit) as exc:
            main(["query", "--target", "F4"])
        assert exc.value.code == 2
