//! Scenario files, waveform comparison runs, CSV artifacts and benchmarks.

mod config;
mod run;

pub use config::{
    parse_config, parse_waveforms, BenchmarkSection, DopplerSpec, FixedPointSection, Preset,
    RadarSection, ScenarioConfig, TargetSpec,
};
pub use run::{
    discrepancies, resolve_out_dir, run_benchmarks, run_comparison, write_range_profile_csv,
    write_rd_map_csv, BenchRow, BenchmarkTable, Derivations, Discrepancy, ExitStatus,
    OracleCheck, OrderingCheck, RunSummary, Speedup, Timings, WaveformResult,
};

/// Environment variable that fixes the worker thread count.
pub const THREADS_ENV: &str = "ISACSIM_THREADS";
