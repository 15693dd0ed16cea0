import json
from pathlib import Path

import numpy as np
import pytest

import kahlerlab as kl
from kahlerlab.cli import ExperimentConfig, bump_measure, config_from_args, build_parser, main


class TestConfig:
    def test_defaults_validate(self):
        for name in ("convexity", "bergman-tv", "perturbation"):
            ExperimentConfig(experiment=name).validate()

    def test_empty_k_list_rejected(self):
        cfg = ExperimentConfig(experiment="bergman-tv", k_list=[])
        with pytest.raises(kl.ConfigError) as err:
            cfg.validate()
        assert "k_list" in err.value.fields

    def test_bad_experiment_rejected(self):
        with pytest.raises(kl.ConfigError) as err:
            ExperimentConfig(experiment="nope").validate()
        assert "experiment" in err.value.fields

    def test_bad_tolerance_rejected(self):
        cfg = ExperimentConfig(experiment="convexity", tolerances={"second_diff_slack": -1.0})
        with pytest.raises(kl.ConfigError):
            cfg.validate()

    def test_flag_overrides(self):
        parser = build_parser()
        args = parser.parse_args(
            ["bergman-tv", "--k", "8,16", "--seed", "3", "--grid-n", "256",
             "--tol-override", "min_eig=1e-5"]
        )
        cfg = config_from_args(args)
        assert cfg.k_list == [8, 16]
        assert cfg.seed == 3
        assert cfg.grid["N"] == 256
        assert cfg.tolerances["min_eig"] == 1e-5


class TestCorpus:
    def test_index_zero_is_reference(self):
        corpus = kl.generate_corpus(0, 1)
        assert np.max(np.abs(corpus[0].g)) == 0.0

    def test_deterministic(self):
        a = kl.generate_corpus(3, 5)
        b = kl.generate_corpus(3, 5)
        for u, v in zip(a, b):
            assert np.array_equal(u.g, v.g)

    def test_all_valid(self):
        for u in kl.generate_corpus(1, 8):
            u.validate()

    def test_contains_low_regularity_profile(self):
        corpus = kl.generate_corpus(0, 3)
        # second derivative jumps: discrete third differences spike at the splice
        d2 = np.diff(corpus[1].g, 2)
        assert np.max(np.abs(np.diff(d2))) > 1e-7

    def test_different_seeds_differ(self):
        a = kl.generate_corpus(0, 4)[3]
        b = kl.generate_corpus(1, 4)[3]
        assert not np.array_equal(a.g, b.g)


class TestRun:
    def test_bergman_tv_run(self, tmp_path):
        cfg = ExperimentConfig(
            experiment="bergman-tv",
            grid={"N": 256, "S": 40.0, "t_nodes": 9},
            k_list=[8, 16],
            output_dir=str(tmp_path / "tv"),
            corpus_count=2,
        )
        assert kl.run(cfg) == 0
        manifest = json.loads((tmp_path / "tv" / "manifest.json").read_text())
        assert manifest["manifest_version"] == 1
        assert manifest["pass"] is True
        assert (tmp_path / "tv" / "bergman_tv.csv").exists()
        assert (tmp_path / "tv" / "plot_bergman_tv.py").exists()

    def test_deterministic_outputs(self, tmp_path):
        outs = []
        for name in ("a", "b"):
            cfg = ExperimentConfig(
                experiment="bergman-tv",
                grid={"N": 256, "S": 40.0, "t_nodes": 9},
                k_list=[8, 16],
                seed=5,
                output_dir=str(tmp_path / name),
                corpus_count=2,
            )
            kl.run(cfg)
            outs.append((tmp_path / name / "bergman_tv.csv").read_bytes())
        assert outs[0] == outs[1]

    def test_violation_sets_exit_code(self, tmp_path):
        cfg = ExperimentConfig(
            experiment="bergman-tv",
            grid={"N": 256, "S": 40.0, "t_nodes": 9},
            k_list=[16, 8],  # deliberately increasing TV order: trend check fails
            output_dir=str(tmp_path / "bad"),
            corpus_count=2,
        )
        assert kl.run(cfg) == 1
        manifest = json.loads((tmp_path / "bad" / "manifest.json").read_text())
        assert manifest["pass"] is False
        assert "bergman-tv" in manifest["first_violation"]

    def test_main_config_error_exit(self, tmp_path):
        code = main(["bergman-tv", "--k", "x,y", "--out", str(tmp_path / "z")])
        assert code == 2

    def test_generate_corpus_command(self, tmp_path):
        code = main(["generate-corpus", "--count", "3", "--grid-n", "128", "--out", str(tmp_path)])
        assert code == 0
        doc = json.loads((tmp_path / "corpus.json").read_text())
        assert len(doc) == 3
        back = kl.SymplecticPotential.from_dict(doc[1])
        back.validate()


def test_bump_measure_probability():
    mu = bump_measure()
    assert abs(np.sum(mu.weights() * mu.density) - 1.0) < 1e-14
    assert np.min(mu.density) >= 0.0
