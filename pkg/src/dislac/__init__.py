"""Simulation and analysis toolkit for cooperative LEO sensing, positioning
and communication: link geometry, OFDM radar metrics, collaborative WMMSE
beamforming with signaling accounting, and multistatic sensing fusion."""

from .beamforming import (
    OverheadLedger,
    Topology,
    TopologyKind,
    WmmseConfig,
    overhead_model,
    s3_baseline,
    wmmse_centralized,
    wmmse_decentralized,
)
from .channel import (
    ArrayGeometry,
    ChannelStats,
    NoiseModel,
    StatisticalCsi,
    channel_stats,
    hardening_rate,
    hardening_rates,
    path_gain,
)
from .geometry import (
    ConstellationSpec,
    EcefVector,
    GroundTerminal,
    LinkObservables,
    SatelliteState,
    delay_doppler_profile,
    feasibility_mask,
    link_observables,
    sample_constellation,
    slant_range,
)
from .runner import ExperimentSpec, RunManifest, emit_csv, load_config, rerun_from_manifest, run_experiment
from .seeding import derive_seed
from .sensing import (
    EstimatorKind,
    SensingScene,
    default_scene,
    estimate_dfe,
    estimate_local,
    fuse_lef,
    monte_carlo_rmse,
    run_bench,
    simulate_echoes,
)
from .waveform import OfdmConfig, RadarMetrics, metrics_sweep, radar_metrics, required_config

__version__ = "0.1.0"
