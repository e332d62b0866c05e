import csv
import hashlib
import json
import os

import pytest

from ccdiv.cli import EXIT_INFEASIBLE, EXIT_OK, EXIT_USAGE, build_config, main, make_parser
from ccdiv.diversity import Member, Population
from ccdiv.graph import CoverageGraph, generate_random_graph
from ccdiv.instance import (
    ChanceInstance,
    FeatureKind,
    load_instance,
    sample_initial_instance,
    serialize_instance,
)
from ccdiv.ratio import RatioReport
from ccdiv.report import five_number_summary, summarize
from ccdiv.storage import CheckpointError, read_population, write_population

SMALL = ["--random-n", "30", "--random-p", "0.1", "--mu", "3", "--solver-evals", "500",
         "--r", "3", "--init-iterations", "40"]


def digest(path):
    return hashlib.sha256(open(path, "rb").read()).hexdigest()


def tree_digest(directory):
    return {name: digest(os.path.join(directory, name)) for name in sorted(os.listdir(directory))}


def fake_population(features):
    g = CoverageGraph.from_edges(3, [(0, 1)])
    members = [Member(ChanceInstance(g, [f] * 3, [1.0] * 3, 10.0, 0.05, 100.0), f, 1.5)
               for f in features]
    pop = Population(members, FeatureKind.FT1, 1.4, iteration=3, seed=1)
    pop.resort()
    return pop


class TestRandomGraph:
    def test_deterministic_file(self, tmp_path, capsys):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        assert main(["random-graph", "--n", "500", "--p", "0.02", "--seed", "3", "--out", str(a)]) == 0
        assert main(["random-graph", "--n", "500", "--p", "0.02", "--seed", "3", "--out", str(b)]) == 0
        assert digest(a) == digest(b)
        assert "nodes=500" in capsys.readouterr().out

    def test_empty_and_complete(self, tmp_path):
        out = tmp_path / "g.json"
        main(["random-graph", "--n", "4", "--p", "0", "--out", str(out)])
        assert json.loads(out.read_text())["edges"] == []
        main(["random-graph", "--n", "4", "--p", "1", "--out", str(out)])
        assert len(json.loads(out.read_text())["edges"]) == 6

    def test_unwritable(self, tmp_path):
        code = main(["random-graph", "--n", "4", "--p", "0.5", "--out", str(tmp_path / "no" / "g.json")])
        assert code == EXIT_USAGE

    def test_import_mtx(self, tmp_path):
        src = tmp_path / "g.mtx"
        src.write_text("%%MatrixMarket matrix coordinate pattern symmetric\n3 3 2\n2 1\n3 2\n")
        out = tmp_path / "g.json"
        assert main(["import-graph", str(src), "--out", str(out)]) == 0
        assert json.loads(out.read_text()) == {"n": 3, "edges": [[0, 1], [1, 2]]}


class TestCheckpoint:
    def test_round_trip(self, tmp_path):
        pop = fake_population([8.0, 1.0, 7.0, 3.0])
        write_population(pop, tmp_path)
        back = read_population(tmp_path)
        assert back.population.features == [1.0, 3.0, 7.0, 8.0]
        assert back.manifest["D_s"] == 12
        assert back.manifest["members"][0]["contribution"] == "inf"
        assert back.manifest["iteration"] == 3
        assert all(m.instance.graph_ref == "graph.json" for m in back.population.members)

    def test_tampered_member_rejected(self, tmp_path):
        write_population(fake_population([1.0, 3.0, 7.0]), tmp_path)
        path = tmp_path / "member_001.json"
        doc = json.loads(path.read_text())
        doc["mu"] = [50.0, 50.0, 50.0]
        path.write_text(json.dumps(doc))
        with pytest.raises(CheckpointError):
            read_population(tmp_path)

    def test_threshold_violation_rejected(self, tmp_path):
        write_population(fake_population([1.0, 3.0, 7.0]), tmp_path)
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        manifest["threshold"] = 9.0
        (tmp_path / "manifest.json").write_text(json.dumps(manifest))
        with pytest.raises(CheckpointError, match="threshold"):
            read_population(tmp_path)


class TestReportStats:
    def test_table_layout(self):
        s = summarize("x", "ft1", [1, 3, 7, 8])
        assert (s.minimum, s.maximum, s.average) == (1.0, 8.0, 4.75)
        assert s.diversity == 12

    def test_quartiles(self):
        assert five_number_summary([1, 3, 7, 8]) == (1, 2.0, 5.0, 7.5, 8)
        assert five_number_summary([1, 2, 3, 4, 5]) == (1, 2, 3, 4, 5)
        assert five_number_summary([4, 1]) == (1, 1, 2.5, 4, 4)

    def test_single_member(self):
        with pytest.raises(ValueError):
            summarize("x", "ft1", [3.0])

    def test_report_command(self, tmp_path):
        write_population(fake_population([1.0, 3.0, 7.0, 8.0]), tmp_path / "a")
        write_population(fake_population([2.0, 4.0, 6.0]), tmp_path / "b")
        out = tmp_path / "rep"
        assert main(["report", str(tmp_path / "a"), str(tmp_path / "b"), "--out-dir", str(out)]) == 0
        rows = list(csv.DictReader(open(out / "summary.csv", encoding="utf-8")))
        assert [float(r["D_s"]) for r in rows] == [12.0, 4.0]
        assert float(rows[0]["average"]) == 4.75
        box = list(csv.DictReader(open(out / "boxstats.csv", encoding="utf-8")))
        assert [float(box[0][k]) for k in ("min", "q1", "median", "q3", "max")] == [1, 2, 5, 7.5, 8]

    def test_mixed_features_rejected(self, tmp_path):
        write_population(fake_population([1.0, 3.0, 7.0]), tmp_path / "a")
        write_population(fake_population([1.0, 3.0, 7.0]).rekey("ft2"), tmp_path / "b")
        args = ["report", str(tmp_path / "a"), str(tmp_path / "b"), "--out-dir", str(tmp_path / "r")]
        assert main(args) == EXIT_USAGE
        assert main(args + ["--feature", "ft1"]) == EXIT_OK


class TestRatioCommand:
    def test_identical_solvers_give_one(self, tmp_path, capsys):
        # with zero cost every solver covers the whole graph
        g = generate_random_graph(10, 0.3, 1)
        inst = ChanceInstance(g, [0.0] * 10, [0.0] * 10, 1.0, 0.05, 10.0)
        path = tmp_path / "i.json"
        path.write_text(serialize_instance(inst))
        assert main(["ratio", str(path), "--solver-evals", "3000", "--r", "3"]) == 0
        rep = RatioReport.from_dict(json.loads(capsys.readouterr().out))
        assert rep.discounted == 1.0

    def test_rerun_identical(self, tmp_path, capsys):
        g = generate_random_graph(20, 0.2, 1)
        path = tmp_path / "i.json"
        path.write_text(serialize_instance(sample_initial_instance(g, 3)))
        args = ["ratio", str(path), "--pair", "ea-fga", "--solver-evals", "300", "--r", "4", "--seed", "5"]
        main(args)
        first = capsys.readouterr().out
        main(args)
        assert capsys.readouterr().out == first

    def test_single_run_is_usage_error(self, tmp_path):
        path = tmp_path / "i.json"
        path.write_text(serialize_instance(ChanceInstance(CoverageGraph.from_edges(2, []), [1, 1], [0, 0], 5, 0.05, 10)))
        assert main(["ratio", str(path), "--r", "1"]) == EXIT_USAGE

    def test_invalid_instance(self, tmp_path):
        path = tmp_path / "i.json"
        path.write_text('{"graph": {"n": 2, "edges": []}, "mu": [1, -1], "var": [0, 0], '
                        '"budget": 5, "alpha": 0.05, "mu_max": 10}')
        assert main(["ratio", str(path)]) == EXIT_USAGE


class TestPipeline:
    def test_gen_evolve_report(self, tmp_path, capsys):
        init, evolved = tmp_path / "init", tmp_path / "evolved"
        assert main(["gen-initial", *SMALL, "--seed", "1", "--out", str(init)]) == EXIT_OK
        manifest = json.loads((init / "manifest.json").read_text())
        assert len(manifest["members"]) == 3
        r_min = min(m["r_prime"] for m in manifest["members"])
        assert manifest["threshold"] == pytest.approx(0.8 * (r_min - 1) + 1, abs=1e-12)

        assert main(["evolve", str(init), *SMALL, "--iterations", "6", "--seed", "1",
                     "--out", str(evolved)]) == EXIT_OK
        out = capsys.readouterr().out
        assert "initial D_s=" in out and "final D_s=" in out
        rows = list(csv.DictReader(open(evolved / "trajectory.csv", encoding="utf-8")))
        assert len(rows) == 6
        assert list(rows[0]) == ["iteration", "accepted", "child_feature", "child_r_prime", "D_s_after"]
        for member in json.loads((evolved / "manifest.json").read_text())["members"]:
            load_instance(evolved / member["file"])

        assert main(["report", str(init), str(evolved), "--out-dir", str(tmp_path / "rep")]) == EXIT_OK

    def test_zero_iterations_keeps_diversity(self, tmp_path, capsys):
        init = tmp_path / "init"
        assert main(["gen-initial", *SMALL, "--seed", "2", "--out", str(init)]) == EXIT_OK
        capsys.readouterr()
        assert main(["evolve", str(init), *SMALL, "--iterations", "0", "--out", str(tmp_path / "e")]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0].split("=")[1] == lines[1].split("=")[1]

    def test_non_discriminating_generation_fails(self, tmp_path, capsys):
        # on a complete graph any one affordable node covers everything, so both solvers tie
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"random_n": 60, "random_p": 1.0, "mu": 3, "solver_evals": 200,
                                   "r": 2, "init_iterations": 0}))
        code = main(["gen-initial", "--config", str(cfg), "--out", str(tmp_path / "p")])
        assert code == EXIT_INFEASIBLE
        assert "not discriminating" in capsys.readouterr().err
        assert not (tmp_path / "p" / "manifest.json").exists()

    def test_config_file_and_flag_override(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"mu": 7, "r": 4, "feature": "ft2"}))
        args = make_parser().parse_args(["gen-initial", "--desk", "--config", str(cfg), "--r", "5"])
        rc = build_config(args)
        assert (rc.mu, rc.r, rc.feature, rc.random_n, rc.solver_evals) == (7, 5, "ft2", 50, 2000)

    @pytest.mark.parametrize("bad", [["--mu", "2"], ["--r", "1"], ["--theta", "1.5"], ["--pair", "ea-sa"]])
    def test_usage_errors(self, tmp_path, bad):
        # argparse rejects bad choices itself, also with exit status 2
        try:
            code = main(["gen-initial", "--desk", *bad, "--out", str(tmp_path / "p")])
        except SystemExit as exc:
            code = exc.code
        assert code == EXIT_USAGE
