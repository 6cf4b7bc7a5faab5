"""In-band full-duplex self-interference cancellation simulator.

Deterministic complex-baseband models of the transmit chain, circulator
leakage, a tunable RF canceller, and a whitened recursive-least-squares
digital canceller with a multiplication-free coordinate-descent inner solver,
plus the experiment harness that reproduces the staged cancellation budget.
"""

from .analog import (
    PaModel,
    ReceiverConfig,
    SiChannel,
    VectorModulatorState,
    apply_si_channel,
    circulator_leakage_default,
    combine_at_lna,
    pa_amplify,
    receive,
    rfsic_path,
)
from .basis import (
    BasisConfig,
    WhiteningTransform,
    basis_generate,
    build_regressor,
    estimate_covariance,
    whiten,
    whitening_from_covariance,
)
from .canceller import CancellationResult, cancel_stream, convergence_sample
from .config import (
    DsicConfig,
    ExperimentConfig,
    RfsicConfig,
    SeedConfig,
    SoiConfig,
    default_config,
    load_config,
    save_config,
)
from .dcd import DcdParams, OpCounters, dcd_solve
from .errors import ConfigError, NumericalError, SimulationError, TuningError
from .experiments import (
    CancellationReport,
    ShowcaseResult,
    SweepGrid,
    run_combined_showcase,
    run_dsic_showcase,
    run_rfsic_showcase,
    run_sweep,
)
from .measure import band_power_db, measure_power, psd_estimate
from .rls import RlsState, regenerate_si, rls_step
from .sequence import ComplexSequence
from .tuner import TuneResult, TunerConfig, tune
from .waveform import WaveformConfig, generate_soi, generate_tx

__version__ = "0.1.0"

__all__ = [
    "BasisConfig",
    "CancellationReport",
    "CancellationResult",
    "ComplexSequence",
    "ConfigError",
    "DcdParams",
    "DsicConfig",
    "ExperimentConfig",
    "NumericalError",
    "OpCounters",
    "PaModel",
    "ReceiverConfig",
    "RfsicConfig",
    "RlsState",
    "SeedConfig",
    "ShowcaseResult",
    "SiChannel",
    "SimulationError",
    "SoiConfig",
    "SweepGrid",
    "TuneResult",
    "TunerConfig",
    "TuningError",
    "VectorModulatorState",
    "WaveformConfig",
    "WhiteningTransform",
    "apply_si_channel",
    "band_power_db",
    "basis_generate",
    "build_regressor",
    "cancel_stream",
    "circulator_leakage_default",
    "combine_at_lna",
    "convergence_sample",
    "dcd_solve",
    "default_config",
    "estimate_covariance",
    "generate_soi",
    "generate_tx",
    "load_config",
    "measure_power",
    "pa_amplify",
    "psd_estimate",
    "receive",
    "regenerate_si",
    "rfsic_path",
    "rls_step",
    "run_combined_showcase",
    "run_dsic_showcase",
    "run_rfsic_showcase",
    "run_sweep",
    "save_config",
    "tune",
    "whiten",
    "whitening_from_covariance",
]
