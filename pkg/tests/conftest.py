import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from fmcw_rdd.radar_sim import DESK_CONFIG, PAPER_CONFIG, RadarConfig

settings.register_profile(
    "repo",
    deadline=None,
    derandomize=True,
    max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("repo")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def paper_cfg():
    return PAPER_CONFIG


@pytest.fixture
def desk_cfg():
    return DESK_CONFIG


@pytest.fixture
def tiny_cfg():
    # 32 x 16 frames keep simulator-level tests fast
    return RadarConfig(B=0.0675e9 / 4, T=0.8e-6, T_r=6.4e-6, N=32, M=16)


TINY_INI = """\
[experiment]
arch = 4,2
splits = 16, 8, 8
group_size = 4
sweep_layers = 2, 3
sweep_max_kernels = 4, 8
sample_sizes = 4, 8
repetitions = 2
pretrain_size = 8

[radar]
B = 16875000.0
T = 8e-7
T_r = 6.4e-6
N = 32
M = 16

[sampling]
n_objects = 1, 4
range_m = 5, 60

[alt_sampling]
n_objects = 2, 5
range_m = 5, 40

[train]
epochs = 2
batch_size = 4
"""


@pytest.fixture
def tiny_ini(tmp_path):
    p = tmp_path / "tiny.ini"
    p.write_text(TINY_INI)
    return p


@pytest.fixture
def tiny_experiment(tiny_ini):
    from fmcw_rdd.config import load_config

    return load_config(tiny_ini)
