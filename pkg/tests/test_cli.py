import json

import numpy as np
import pytest
from numpy.testing import assert_allclose

import beambook as bb
from beambook.cli import main


def write_config(path, **overrides):
    config = {
        "arrays": [
            {
                "id": "ula",
                "synthetic": {
                    "elements": 4,
                    "spacing_lambda": 0.65,
                    "pattern_q": 0,
                    "sampling_factor": 120,
                },
            }
        ],
        "algorithm": {"name": "benchmark", "size": 4, "phase_bits": 5, "seed": 0},
        "evaluation": {"directions": {"kind": "generator"}, "percentiles": [20, 50]},
        "output_dir": "out",
    }
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(config.get(key), dict):
            config[key].update(value)
        else:
            config[key] = value
    path.write_text(json.dumps(config, indent=2))
    return path


class TestGenEfield:
    def test_default_sampling_writes_241_directions(self, tmp_path):
        rc = main(["gen-efield", "--elements", "4", "--spacing-lambda", "0.65",
                   "--pattern-q", "0", "--out", str(tmp_path)])
        assert rc == 0
        grid = bb.load_efield(tmp_path / "efield.csv")
        assert grid.theta_axis.size == 241
        sidecar = json.loads((tmp_path / "efield.spec.json").read_text())
        assert sidecar["sampling_factor"] == 120

    def test_invalid_elements_exits_2(self, tmp_path):
        rc = main(["gen-efield", "--elements", "0", "--spacing-lambda", "0.5",
                   "--out", str(tmp_path)])
        assert rc == 2

    def test_rerun_byte_identical(self, tmp_path):
        args = ["gen-efield", "--elements", "3", "--spacing-lambda", "0.5", "--out"]
        main(args + [str(tmp_path / "a")])
        main(args + [str(tmp_path / "b")])
        assert (tmp_path / "a/efield.csv").read_bytes() == (tmp_path / "b/efield.csv").read_bytes()
        assert (tmp_path / "a/efield.spec.json").read_bytes() == (tmp_path / "b/efield.spec.json").read_bytes()

    def test_env_var_sets_default_output_dir(self, tmp_path, monkeypatch):
        monkeypatch.setenv("BEAMBOOK_OUT", str(tmp_path / "envout"))
        monkeypatch.chdir(tmp_path)
        rc = main(["gen-efield", "--elements", "2", "--spacing-lambda", "0.5"])
        assert rc == 0
        assert (tmp_path / "envout" / "efield.csv").exists()


class TestDesign:
    def test_benchmark_produces_reference_codewords(self, tmp_path):
        config = write_config(tmp_path / "cfg.json", output_dir=str(tmp_path / "out"))
        assert main(["design", "--config", str(config)]) == 0
        cb = bb.load_codebook(tmp_path / "out" / "codebook.json")
        assert cb.size == 4 and cb.phase_bits == 5
        expected = bb.benchmark_codebook(
            bb.SyntheticUlaSpec(4, 0.65), 4, bb.PhaseSpec.discrete(5), array_ids=["ula"]
        )
        for a, b in zip(cb.entries, expected.entries):
            assert np.array_equal(a.weights.weights, b.weights.weights)

    def test_same_seed_byte_identical(self, tmp_path):
        config = write_config(
            tmp_path / "cfg.json",
            algorithm={"name": "kmeans", "size": 4, "phase_bits": 5, "seed": 7,
                       "init": "benchmark", "n_randomizations": 200},
        )
        main(["design", "--config", str(config), "--output-dir", str(tmp_path / "r1")])
        main(["design", "--config", str(config), "--output-dir", str(tmp_path / "r2")])
        assert (tmp_path / "r1/codebook.json").read_bytes() == (tmp_path / "r2/codebook.json").read_bytes()
        assert (tmp_path / "r1/design_log.json").read_bytes() == (tmp_path / "r2/design_log.json").read_bytes()

    def test_design_log_carries_trace_and_seed(self, tmp_path):
        config = write_config(
            tmp_path / "cfg.json",
            algorithm={"name": "greedy", "size": 3, "phase_bits": 5, "seed": 11,
                       "candidates": {"count": 16, "method": "eigen"}},
            output_dir=str(tmp_path / "out"),
        )
        assert main(["design", "--config", str(config)]) == 0
        log = json.loads((tmp_path / "out" / "design_log.json").read_text())
        assert log["seed"] == 11
        assert len(log["trace_db"]) == 3
        assert log["trace_db"] == sorted(log["trace_db"])

    def test_kmeans_config_reproduces_reference_median(self, tmp_path):
        config = write_config(
            tmp_path / "cfg.json",
            algorithm={"name": "kmeans", "size": 4, "phase_bits": 5, "seed": 12345,
                       "init": "benchmark", "n_randomizations": 1000},
            output_dir=str(tmp_path / "out"),
        )
        assert main(["design", "--config", str(config)]) == 0
        assert main(["eval", "--config", str(config),
                     "--codebook", str(tmp_path / "out/codebook.json")]) == 0
        stats = json.loads((tmp_path / "out/stats.json").read_text())
        assert abs(stats["percentiles"]["50"] - 5.38) <= 0.2

    def test_kmeans_greedy_init_variant(self, tmp_path):
        config = write_config(
            tmp_path / "cfg.json",
            algorithm={"name": "kmeans", "size": 3, "phase_bits": 5, "seed": 4,
                       "init": "greedy", "candidates": {"count": 16, "method": "eigen"},
                       "n_randomizations": 100},
            output_dir=str(tmp_path / "out"),
        )
        assert main(["design", "--config", str(config)]) == 0
        assert bb.load_codebook(tmp_path / "out/codebook.json").size == 3

    def test_bad_config_exits_2(self, tmp_path):
        config = tmp_path / "cfg.json"
        config.write_text(json.dumps({"arrays": [], "algorithm": {"name": "kmeans", "size": 4}}))
        assert main(["design", "--config", str(config)]) == 2

    def test_unknown_algorithm_exits_2(self, tmp_path):
        config = write_config(tmp_path / "cfg.json", algorithm={"name": "magic", "size": 4})
        assert main(["design", "--config", str(config)]) == 2


class TestEval:
    @pytest.fixture()
    def designed(self, tmp_path):
        config = write_config(tmp_path / "cfg.json", output_dir=str(tmp_path / "out"))
        main(["design", "--config", str(config)])
        return config, tmp_path / "out"

    def test_emits_all_artifacts(self, designed):
        config, out = designed
        rc = main(["eval", "--config", str(config), "--codebook", str(out / "codebook.json")])
        assert rc == 0
        for name in ("pattern.csv", "bound.csv", "gap.csv", "stats.json", "summary.txt"):
            assert (out / name).exists()
        stats = json.loads((out / "stats.json").read_text())
        assert set(stats["percentiles"]) == {"20", "50"}
        gap = np.loadtxt(out / "gap.csv", delimiter=",", skiprows=1)
        assert np.all(gap[:, 3] >= 0.0)

    def test_single_beam_pattern_equals_beam_pattern(self, tmp_path):
        config = write_config(
            tmp_path / "cfg.json",
            algorithm={"name": "benchmark", "size": 1, "phase_bits": 5},
            output_dir=str(tmp_path / "out"),
        )
        main(["design", "--config", str(config)])
        main(["eval", "--config", str(config), "--codebook", str(tmp_path / "out/codebook.json")])
        rows = np.loadtxt(tmp_path / "out/pattern.csv", delimiter=",", skiprows=1)
        grid, dirs = bb.generate_ula_efield(bb.SyntheticUlaSpec(4, 0.65, sampling_factor=120))
        cb = bb.load_codebook(tmp_path / "out/codebook.json")
        expected = bb.beam_pattern(grid, cb.entries[0].weights, dirs)
        assert_allclose(rows[:, 3], expected.gains_db, atol=1e-12)

    def test_bound_only_mode(self, designed):
        config, out = designed
        rc = main(["eval", "--config", str(config), "--output-dir", str(out / "bound_only")])
        assert rc == 0
        assert (out / "bound_only" / "bound.csv").exists()
        assert not (out / "bound_only" / "pattern.csv").exists()

    def test_size_mismatch_exits_2(self, tmp_path, designed):
        config, out = designed
        other = bb.benchmark_codebook(
            bb.SyntheticUlaSpec(6, 0.5), 2, bb.PhaseSpec.discrete(5), array_ids=["ula"]
        )
        bb.save_codebook(other, tmp_path / "wrong.json")
        rc = main(["eval", "--config", str(config), "--codebook", str(tmp_path / "wrong.json")])
        assert rc == 2


class TestCompare:
    def test_three_codebooks_ordered_rows(self, tmp_path):
        bench = write_config(tmp_path / "bench.json")
        c3 = write_config(tmp_path / "c3.json", algorithm={"name": "3c", "size": 4, "phase_bits": 5})
        km = write_config(
            tmp_path / "km.json",
            algorithm={"name": "kmeans", "size": 4, "phase_bits": 5, "seed": 12345,
                       "init": "benchmark", "n_randomizations": 300},
        )
        out = tmp_path / "cmp"
        rc = main(["compare", "--configs", str(bench), str(c3), str(km), "--output-dir", str(out)])
        assert rc == 0
        lines = (out / "compare.csv").read_text().splitlines()
        assert lines[0].startswith("config,algorithm,size,mean_db,median_db")
        assert len(lines) == 4
        names = [line.split(",")[0] for line in lines[1:]]
        assert names == ["bench", "c3", "km"]
        medians = [float(line.split(",")[4]) for line in lines[1:]]
        assert medians[0] < medians[1] < medians[2]

    def test_identical_configs_identical_rows(self, tmp_path):
        a = write_config(tmp_path / "a.json")
        b = write_config(tmp_path / "b.json")
        out = tmp_path / "cmp"
        main(["compare", "--configs", str(a), str(b), "--output-dir", str(out)])
        lines = (out / "compare.csv").read_text().splitlines()
        assert lines[1].split(",")[1:] == lines[2].split(",")[1:]

    def test_single_config_exits_2(self, tmp_path):
        a = write_config(tmp_path / "a.json")
        assert main(["compare", "--configs", str(a)]) == 2


class TestSelfcheck:
    def test_validates_emitted_artifacts(self, tmp_path):
        config = write_config(tmp_path / "cfg.json", output_dir=str(tmp_path / "out"))
        main(["design", "--config", str(config)])
        main(["eval", "--config", str(config), "--codebook", str(tmp_path / "out/codebook.json")])
        main(["gen-efield", "--elements", "2", "--spacing-lambda", "0.5", "--out", str(tmp_path / "out")])
        assert main(["selfcheck", str(tmp_path / "out")]) == 0

    def test_detects_corruption(self, tmp_path):
        config = write_config(tmp_path / "cfg.json", output_dir=str(tmp_path / "out"))
        main(["design", "--config", str(config)])
        cb_path = tmp_path / "out/codebook.json"
        data = json.loads(cb_path.read_text())
        data["entries"][0]["weights"][0] = [5.0, 0.0]  # breaks unit magnitude
        cb_path.write_text(json.dumps(data))
        assert main(["selfcheck", str(cb_path)]) == 1

    def test_missing_path_exits_2(self, tmp_path):
        assert main(["selfcheck", str(tmp_path / "nope.csv")]) == 2


class TestRegionWorkflow:
    def test_region_restricted_design_concentrates_beams(self, tmp_path):
        # beams designed for the upper hemisphere leave a much larger gap
        # in the excluded lower hemisphere
        config = write_config(
            tmp_path / "cfg.json",
            arrays=[{"id": "ula", "synthetic": {"elements": 4, "spacing_lambda": 0.5,
                                                "pattern_q": 1, "sampling_factor": 60}}],
            algorithm={"name": "kmeans", "size": 4, "phase_bits": 5, "seed": 3,
                       "init": "uniform", "n_randomizations": 300,
                       "region": {"theta": [0.0, 90.0]}},
            output_dir=str(tmp_path / "out"),
        )
        assert main(["design", "--config", str(config)]) == 0
        cb = bb.load_codebook(tmp_path / "out/codebook.json")
        grid, dirs = bb.generate_ula_efield(bb.SyntheticUlaSpec(4, 0.5, element_pattern_q=1, sampling_factor=60))
        comp = bb.composite_pattern(grid, cb, dirs)
        bound = bb.upper_bound_pattern(grid, dirs)
        gap = bb.gap_map(comp, bound).gains_db
        inside = dirs.theta <= 90.0
        strong = bound.gains_db > bound.gains_db.max() - 10.0
        gap_in = gap[inside & strong].mean()
        gap_out = gap[(~inside) & strong].mean()
        assert gap_out > gap_in
