"""Run-configuration file parsing."""

import math

import pytest

from deflicker.config import CliConfig, ConfigError, parse_config


def write(tmp_path, text):
    path = tmp_path / "run.cfg"
    path.write_text(text, encoding="utf-8")
    return path


class TestParseConfig:
    def test_empty_file_gives_defaults(self, tmp_path):
        cfg = parse_config(write(tmp_path, ""))
        assert cfg == CliConfig()

    def test_all_keys(self, tmp_path):
        cfg = parse_config(write(tmp_path, "\n".join([
            "ac_frequency = 60",
            "gamma_w = 2.0",
            "exposure_time = 2.5e-3",
            "row_readout_time = 6.25e-4",
            "phases = 0, 1.5, 3.0",
            "orientation = vertical",
            "model.channels = 8,16,24",
            "model.blocks = 1,1,1",
            "model.heads = 1,2,4",
            "model.window = 4",
            "model.gamma = 2.0",
            "train.lr = 1e-3",
            "train.steps = 50",
            "seed = 9",
        ])))
        assert cfg.ac_frequency == 60.0
        assert cfg.gamma_w == 2.0
        assert cfg.exposure_time == 2.5e-3
        assert cfg.row_readout_time == 6.25e-4
        assert cfg.phases == (0.0, 1.5, 3.0)
        assert cfg.orientation == "vertical"
        assert cfg.model_channels == (8, 16, 24)
        assert cfg.model_blocks == (1, 1, 1)
        assert cfg.model_heads == (1, 2, 4)
        assert cfg.model_window == 4
        assert cfg.model_gamma == 2.0
        assert cfg.train_lr == 1e-3
        assert cfg.train_steps == 50
        assert cfg.seed == 9

    def test_comments_and_blanks_ignored(self, tmp_path):
        cfg = parse_config(write(tmp_path, "\n".join([
            "# a comment", "", "   ", "seed = 3", "# seed = 99",
        ])))
        assert cfg.seed == 3

    def test_orientation_stripes_suffix(self, tmp_path):
        cfg = parse_config(write(tmp_path, "orientation = vertical-stripes\n"))
        assert cfg.orientation == "vertical"

    def test_unknown_key_reports_line(self, tmp_path):
        with pytest.raises(ConfigError, match="line 2.*frequenzy"):
            parse_config(write(tmp_path, "seed = 1\nfrequenzy = 50\n"))

    def test_bad_value_reports_line(self, tmp_path):
        with pytest.raises(ConfigError, match="line 1.*train.steps"):
            parse_config(write(tmp_path, "train.steps = soon\n"))
        with pytest.raises(ConfigError, match="line 3"):
            parse_config(write(tmp_path, "seed = 1\n# ok\nphases = 1,2\n"))

    def test_missing_equals_reports_line(self, tmp_path):
        with pytest.raises(ConfigError, match="line 1.*key=value"):
            parse_config(write(tmp_path, "just some words\n"))

    def test_config_error_is_value_error(self, tmp_path):
        # the CLI maps parse failures by catching ValueError subclasses
        assert issubclass(ConfigError, ValueError)


class TestBuilders:
    def test_flicker_params(self):
        cfg = CliConfig(ac_frequency=60.0, gamma_w=2.0, exposure_time=2e-3,
                        row_readout_time=1e-4, phases=(0.1, 0.2, 0.3),
                        orientation="vertical")
        fp = cfg.flicker_params()
        assert fp.ac_frequency == 60.0
        assert fp.gamma_w == 2.0
        assert fp.phase_offsets == (0.1, 0.2, 0.3)
        assert fp.orientation == "vertical"

    def test_model_config(self):
        cfg = CliConfig(model_channels=(8, 16, 24), model_blocks=(1, 2, 1),
                        model_heads=(1, 2, 4), model_window=4, model_gamma=2.5)
        mc = cfg.model_config()
        assert mc.channels == (8, 16, 24)
        assert mc.blocks == (1, 2, 1)
        assert mc.window == 4
        assert mc.gamma == 2.5

    def test_default_phases_span_the_cycle(self):
        cfg = CliConfig()
        assert cfg.phases == (0.0, pytest.approx(2 * math.pi / 3),
                              pytest.approx(4 * math.pi / 3))

    def test_invalid_combination_surfaces_in_builder(self):
        # 30 channels cannot split over the default 4 heads of stage 3
        cfg = CliConfig(model_channels=(32, 64, 30))
        with pytest.raises(ValueError):
            cfg.model_config()
