import pytest

from fmcw_rdd.cnn import ArchitectureSpec, param_count
from fmcw_rdd.config import ExperimentConfig, load_config, preset
from fmcw_rdd.radar_sim import ConfigError


def test_desk_default():
    cfg = load_config()
    assert cfg.scale == "desk"
    assert (cfg.radar.N, cfg.radar.M) == (128, 32)
    assert cfg.splits == (200, 25, 25)
    assert cfg.group_size == 8


def test_paper_preset():
    cfg = preset("paper")
    assert (cfg.radar.N, cfg.radar.M) == (512, 128)
    assert cfg.splits == (2500, 250, 250)
    assert cfg.arch == ArchitectureSpec((512, 32, 16, 2))
    assert param_count(cfg.arch) == 162226
    assert cfg.sample_sizes == tuple(range(50, 601, 50)) and len(cfg.sample_sizes) == 12
    assert cfg.repetitions == 20 and cfg.pretrain_size == 500
    assert len(cfg.sweep_layers) * len(cfg.sweep_max_kernels) == 54


def test_file_overrides(tmp_path):
    p = tmp_path / "c.ini"
    p.write_text(
        "[experiment]\narch = 8,8,2\nsplits = 40, 8, 8\nmethods = clean, interfered\n"
        "[sampling]\nsnir_db = 20, 25\n[train]\nepochs = 3\nlr = 0.01\n[cfar]\nscale_alpha = 30\n"
        "[radar]\nM = 64\n"
    )
    cfg = load_config(p)
    assert cfg.arch.kernel_counts == (8, 8, 2)
    assert cfg.splits == (40, 8, 8)
    assert cfg.methods == ("clean", "interfered")
    assert cfg.bounds.snir_db == (20.0, 25.0)
    assert (cfg.train.epochs, cfg.train.lr) == (3, 0.01)
    assert cfg.cfar.scale_alpha == 30.0
    assert cfg.radar.M == 64


def test_scale_argument_beats_file(tmp_path):
    p = tmp_path / "c.ini"
    p.write_text("[experiment]\nscale = desk\n")
    assert load_config(p, "paper").scale == "paper"


@pytest.mark.parametrize(
    "text",
    [
        "[bogus]\nx = 1\n",
        "[train]\nnope = 1\n",
        "[train]\nepochs = many\n",
        "[sampling]\nrange_m = 10, 5\n",
        "[experiment]\narch = 3,2\n",
        "[experiment]\nmethods = magic\n",
        "[radar]\nN = 1\n",
        "not an ini file",
    ],
)
def test_bad_files_are_config_errors(tmp_path, text):
    p = tmp_path / "c.ini"
    p.write_text(text)
    with pytest.raises(ConfigError):
        load_config(p)


def test_missing_file_and_bad_scale(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.ini")
    with pytest.raises(ConfigError):
        preset("huge")


def test_experiment_config_validation():
    with pytest.raises(ConfigError):
        ExperimentConfig(group_size=0)
    with pytest.raises(ConfigError):
        ExperimentConfig(splits=(0, 0, 0))
