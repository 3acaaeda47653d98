"""FMCW radar interference-mitigation lab: simulation, range-Doppler
processing, classical mitigation, a numpy CNN denoiser and SINR scoring."""
from .cnn import ArchitectureSpec, ModelState, init_model, param_count
from .config import ExperimentConfig, load_config, preset
from .detection import CfarParams, ca_cfar, sinr, sinr_cdf
from .mitigation import ImatParams, imat, ramp_filter, zeroing
from .radar_sim import (
    DESK_CONFIG,
    PAPER_CONFIG,
    IFFrame,
    InterfererSpec,
    ObjectSpec,
    RadarConfig,
    ScenarioSpec,
    SamplingBounds,
    sample_scenario,
    simulate,
)
from .rd_pipeline import doppler_dft, magnitude_db, range_dft, rd_map

__version__ = "0.1.0"
