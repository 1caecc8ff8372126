use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::ScenarioConfig;
use crate::bench::{median_time, time_once};
use crate::error::{Error, Result};
use crate::fxp::{precision_sweep, FixedPointFormat, SweepRow};
use crate::rsp::{
    detect_peak, matched_filter_rd, max_relative_deviation, pslr_db, range_doppler,
    time_domain_oracle, Detection, DopplerGrid, OracleLimits, Pslr, RangeDopplerMap,
    ReferenceBank, DEFAULT_MAINLOBE_HALFWIDTH,
};
use crate::scene::{synthesize_echo, DataCube, TargetModel};
use crate::waveform::{build_schedule, FrameSchedule, ScheduleKind, WaveformParams};
use crate::SPEED_OF_LIGHT;

/// Process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExitStatus {
    Success,
    /// Reading or writing files failed.
    Io,
    Config,
    Scenario,
    /// At least one waveform failed.
    Partial,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        match self {
            Self::Success => 0,
            Self::Io => 1,
            Self::Config => 2,
            Self::Scenario => 3,
            Self::Partial => 4,
        }
    }

    pub fn for_error(e: &Error) -> Self {
        match e {
            Error::Config { .. } => Self::Config,
            Error::Scenario(_) => Self::Scenario,
            Error::Io(_) => Self::Io,
            _ => Self::Partial,
        }
    }
}

/// Radar quantities derived from the configured parameters.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Derivations {
    pub carrier_freq_hz: f64,
    pub bandwidth_hz: f64,
    pub pri_s: f64,
    pub cpi_s: f64,
    pub wavelength_m: f64,
    pub samples_per_pri: usize,
    pub packets_per_cpi: usize,
    pub code_length: usize,
    /// `c/(2·BW)`.
    pub range_resolution_m: f64,
    /// `λ/(4·T_pri)`.
    pub max_unambiguous_velocity_mps: f64,
    /// `λ/(2·T_CPI)`.
    pub velocity_resolution_mps: f64,
    /// `c·N·T_s/2`.
    pub max_range_listening_m: f64,
    /// `c·T_pri/2`.
    pub max_range_pri_m: f64,
}

impl Derivations {
    pub fn from_params(p: &WaveformParams) -> Self {
        Self {
            carrier_freq_hz: p.carrier_freq_hz(),
            bandwidth_hz: p.bandwidth_hz(),
            pri_s: p.pri_s(),
            cpi_s: p.cpi_s(),
            wavelength_m: p.wavelength_m(),
            samples_per_pri: p.samples_per_pri(),
            packets_per_cpi: p.packets_per_cpi(),
            code_length: p.code_length(),
            range_resolution_m: p.range_resolution_m(),
            max_unambiguous_velocity_mps: p.max_unambiguous_velocity_mps(),
            velocity_resolution_mps: p.velocity_resolution_mps(),
            max_range_listening_m: p.max_range_listening_m(),
            max_range_pri_m: SPEED_OF_LIGHT * p.pri_s() / 2.0,
        }
    }
}

/// A nominal radar figure that the configured parameters do not reproduce.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Discrepancy {
    pub quantity: String,
    pub nominal: f64,
    pub derived: Vec<(String, f64)>,
    pub note: String,
}

/// The two nominal figures of the 60 GHz parameter set that do not follow from
/// its other entries. Both derivations are reported, neither is adjusted.
pub fn discrepancies(d: &Derivations) -> Vec<Discrepancy> {
    vec![
        Discrepancy {
            quantity: "velocity_resolution_mps".into(),
            nominal: 0.3,
            derived: vec![("lambda/(2*T_CPI)".into(), d.velocity_resolution_mps)],
            note: format!(
                "nominal 0.3 m/s does not match lambda/(2*T_CPI) = {:.4} m/s; the Doppler grid uses the derived value",
                d.velocity_resolution_mps
            ),
        },
        Discrepancy {
            quantity: "max_unambiguous_range_m".into(),
            nominal: 44.0,
            derived: vec![
                ("c*N*T_s/2".into(), d.max_range_listening_m),
                ("c*T_pri/2".into(), d.max_range_pri_m),
            ],
            note: format!(
                "nominal 44 m matches the N-sample listening window c*N*T_s/2 = {:.1} m, not c*T_pri/2 = {:.0} m; the scene guard defaults to the listening window",
                d.max_range_listening_m, d.max_range_pri_m
            ),
        },
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Timings {
    pub synthesis_s: f64,
    pub rsp_s: f64,
    pub oracle_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleCheck {
    /// `max|χ_fft − χ_oracle| / max|χ_fft|`.
    pub max_relative_deviation: Option<f64>,
    pub notice: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WaveformResult {
    pub waveform: String,
    pub ok: bool,
    pub error: Option<String>,
    pub detection: Option<Detection>,
    /// Range cut at the detected Doppler bin.
    pub pslr: Option<Pslr>,
    pub timings: Option<Timings>,
    pub oracle: Option<OracleCheck>,
    pub fixed_point: Vec<SweepRow>,
    pub fixed_point_sqnr_monotone: Option<bool>,
    pub artifacts: Vec<String>,
}

impl WaveformResult {
    fn failed(kind: ScheduleKind, e: &Error) -> Self {
        Self {
            waveform: kind.name().into(),
            ok: false,
            error: Some(e.to_string()),
            detection: None,
            pslr: None,
            timings: None,
            oracle: None,
            fixed_point: Vec::new(),
            fixed_point_sqnr_monotone: None,
            artifacts: Vec::new(),
        }
    }
}

/// `fmcw < pmcw < golay ≤ golay-dr` on PSLR, when all four ran.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderingCheck {
    pub expected: String,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub path: String,
    pub median_s: f64,
    pub samples_s: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Speedup {
    pub name: String,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct BenchmarkTable {
    pub waveform: Option<String>,
    pub rows: Vec<BenchRow>,
    pub speedups: Vec<Speedup>,
    pub notices: Vec<String>,
}

impl BenchmarkTable {
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub tool: String,
    pub version: String,
    pub exit_code: i32,
    pub warnings: Vec<String>,
    pub radar: Derivations,
    pub discrepancies: Vec<Discrepancy>,
    pub doppler_bins: usize,
    pub targets: Vec<String>,
    pub waveforms: Vec<WaveformResult>,
    pub pslr_ordering: Option<OrderingCheck>,
    pub benchmark: BenchmarkTable,
    /// Text that re-parses to the configuration used.
    pub config_echo: String,
}

impl RunSummary {
    pub fn status(&self) -> ExitStatus {
        match self.exit_code {
            0 => ExitStatus::Success,
            1 => ExitStatus::Io,
            2 => ExitStatus::Config,
            3 => ExitStatus::Scenario,
            _ => ExitStatus::Partial,
        }
    }

    pub fn result(&self, kind: ScheduleKind) -> Option<&WaveformResult> {
        self.waveforms.iter().find(|w| w.waveform == kind.name())
    }
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    f(&mut w)?;
    w.flush()?;
    Ok(())
}

fn write_row(w: &mut impl Write, label: Option<&str>, values: &[f64]) -> std::io::Result<()> {
    if let Some(l) = label {
        write!(w, "{l}")?;
    }
    for (i, v) in values.iter().enumerate() {
        if i > 0 || label.is_some() {
            w.write_all(b",")?;
        }
        write!(w, "{v:.8e}")?;
    }
    w.write_all(b"\n")
}

/// Range axis line, Doppler-velocity axis line, then one line of `Q` magnitudes per
/// Doppler bin.
pub fn write_rd_map_csv(path: &Path, map: &RangeDopplerMap) -> Result<()> {
    write_file(path, |w| {
        write_row(w, Some("range_m"), &map.range_axis_m)?;
        write_row(w, Some("velocity_mps"), &map.doppler_axis_mps)?;
        for j in 0..map.doppler_bins() {
            write_row(w, None, map.row(j))?;
        }
        Ok(())
    })
}

pub fn write_range_profile_csv(path: &Path, map: &RangeDopplerMap, doppler_bin: usize) -> Result<()> {
    write_file(path, |w| {
        writeln!(w, "range_m,magnitude")?;
        for (r, v) in map.range_axis_m.iter().zip(map.row(doppler_bin)) {
            writeln!(w, "{r:.8e},{v:.8e}")?;
        }
        Ok(())
    })
}

struct Prepared {
    schedule: FrameSchedule,
    cube: DataCube,
    bank: ReferenceBank,
}

fn prepare(
    kind: ScheduleKind,
    config: &ScenarioConfig,
    params: &WaveformParams,
    targets: &[TargetModel],
) -> Result<(Prepared, f64)> {
    let schedule = build_schedule(kind, params, config.code_seed)?;
    let (cube, synthesis_s) =
        time_once(|| synthesize_echo(&schedule, targets, params, &config.echo_options()));
    let cube = cube?;
    let bank = ReferenceBank::from_schedule(&schedule);
    Ok((
        Prepared {
            schedule,
            cube,
            bank,
        },
        synthesis_s,
    ))
}

fn run_waveform(
    kind: ScheduleKind,
    config: &ScenarioConfig,
    params: &WaveformParams,
    targets: &[TargetModel],
    grid: &DopplerGrid,
    out_dir: &Path,
) -> Result<WaveformResult> {
    let (prep, synthesis_s) = prepare(kind, config, params, targets)?;
    let (map, rsp_s) = time_once(|| range_doppler(&prep.cube, &prep.bank, grid));
    let map = map?;

    let name = kind.name();
    let rd_name = format!("rd_map_{name}.csv");
    write_rd_map_csv(&out_dir.join(&rd_name), &map)?;
    let mut artifacts = vec![rd_name];

    let detection = detect_peak(&map)?;
    let profile_name = format!("range_profile_{name}.csv");
    write_range_profile_csv(&out_dir.join(&profile_name), &map, detection.doppler_bin)?;
    artifacts.push(profile_name);
    let pslr = pslr_db(map.row(detection.doppler_bin), DEFAULT_MAINLOBE_HALFWIDTH)?;

    let (oracle, oracle_s) = if config.oracle {
        match time_once(|| {
            time_domain_oracle(&prep.cube, &prep.schedule, grid, OracleLimits::default())
        }) {
            (Ok(o), t) => (
                Some(OracleCheck {
                    max_relative_deviation: Some(max_relative_deviation(&map, &o)),
                    notice: None,
                }),
                Some(t),
            ),
            (Err(e @ Error::OracleRefused { .. }), _) => (
                Some(OracleCheck {
                    max_relative_deviation: None,
                    notice: Some(e.to_string()),
                }),
                None,
            ),
            (Err(e), _) => return Err(e),
        }
    } else {
        (None, None)
    };

    let (fixed_point, monotone) = if config.fixed_point.formats.is_empty() {
        (Vec::new(), None)
    } else {
        let s = precision_sweep(
            &prep.cube,
            &prep.bank,
            grid,
            &config.fixed_point.formats,
            config.fixed_point.mode,
            1,
        )?;
        (s.rows, Some(s.sqnr_monotone))
    };

    Ok(WaveformResult {
        waveform: name.into(),
        ok: true,
        error: None,
        detection: Some(detection),
        pslr: Some(pslr),
        timings: Some(Timings {
            synthesis_s,
            rsp_s,
            oracle_s,
        }),
        oracle,
        fixed_point,
        fixed_point_sqnr_monotone: monotone,
        artifacts,
    })
}

fn pslr_ordering(results: &[WaveformResult]) -> Option<OrderingCheck> {
    let get = |k: ScheduleKind| {
        results
            .iter()
            .find(|r| r.waveform == k.name())
            .and_then(|r| r.pslr)
            .map(Pslr::db)
    };
    let f = get(ScheduleKind::Fmcw)?;
    let p = get(ScheduleKind::Pmcw)?;
    let g = get(ScheduleKind::GolayStandard)?;
    let d = get(ScheduleKind::GolayDopplerResilient)?;
    Some(OrderingCheck {
        expected: "fmcw < pmcw < golay <= golay-dr".into(),
        holds: f < p && p < g && g <= d,
    })
}

/// Times the processing paths on the first waveform's cube.
pub fn run_benchmarks(config: &ScenarioConfig) -> Result<BenchmarkTable> {
    if !config.benchmark.enabled {
        return Ok(BenchmarkTable::default());
    }
    let params = config.params()?;
    let grid = config.doppler.grid(&params)?;
    let targets = config.target_models();
    let kind = config.waveforms[0];
    let (prep, _) = prepare(kind, config, &params, &targets)?;
    let (warmup, repeats) = (config.benchmark.warmup, config.benchmark.repeats);
    let mut t = BenchmarkTable {
        waveform: Some(kind.name().into()),
        ..Default::default()
    };

    let push = |t: &mut BenchmarkTable, path: String, timing: crate::bench::Timing| {
        t.rows.push(BenchRow {
            path,
            median_s: timing.median_s,
            samples_s: timing.samples_s,
        });
    };

    let fft = median_time(warmup, repeats, || range_doppler(&prep.cube, &prep.bank, &grid));
    let fft_s = fft.median_s;
    push(&mut t, "fft".into(), fft);
    let steer = median_time(warmup, repeats, || {
        matched_filter_rd(&prep.cube, &prep.bank, &grid)
    });
    let steer_s = steer.median_s;
    push(&mut t, "explicit-steering".into(), steer);
    if grid.is_fft_aligned(&params) {
        t.speedups.push(Speedup {
            name: "slow-time FFT over explicit steering".into(),
            ratio: steer_s / fft_s,
        });
    }

    let limits = OracleLimits::default();
    if limits.admits(params.samples_per_pri(), params.packets_per_cpi(), grid.len()) {
        let o = median_time(warmup.min(1), repeats, || {
            time_domain_oracle(&prep.cube, &prep.schedule, &grid, limits)
        });
        t.speedups.push(Speedup {
            name: "fft over time-domain oracle".into(),
            ratio: o.median_s / fft_s,
        });
        push(&mut t, "time-domain-oracle".into(), o);
    } else {
        t.notices.push(format!(
            "time-domain oracle skipped: Q*P*J = {} exceeds {}; benchmark restricted to FFT paths",
            params.samples_per_pri() * params.packets_per_cpi() * grid.len(),
            limits.max_work
        ));
    }

    let formats = if config.fixed_point.formats.is_empty() {
        vec![FixedPointFormat::new(24, 1)?]
    } else {
        config.fixed_point.formats.clone()
    };
    let sweep = precision_sweep(
        &prep.cube,
        &prep.bank,
        &grid,
        &formats,
        config.fixed_point.mode,
        repeats,
    )?;
    for row in &sweep.rows {
        t.rows.push(BenchRow {
            path: format!("fixed{}", row.report.format),
            median_s: row.runtime_s,
            samples_s: Vec::new(),
        });
        t.speedups.push(Speedup {
            name: format!("double over fixed{}", row.report.format),
            ratio: row.runtime_s / sweep.double_runtime_s,
        });
    }
    Ok(t)
}

/// Runs every configured waveform, writes CSVs and `summary.json` into `out_dir`.
///
/// Per-waveform failures are recorded in the summary rather than returned; the
/// summary's exit code says what happened. Only I/O and parameter errors that
/// affect every waveform are returned as `Err`.
pub fn run_comparison(config: &ScenarioConfig, out_dir: &Path) -> Result<RunSummary> {
    let params = config.params()?;
    let grid = config.doppler.grid(&params)?;
    fs::create_dir_all(out_dir)?;
    let targets = config.target_models();

    let mut status = ExitStatus::Success;
    let mut results = Vec::with_capacity(config.waveforms.len());
    for &kind in &config.waveforms {
        match run_waveform(kind, config, &params, &targets, &grid, out_dir) {
            Ok(r) => results.push(r),
            Err(e @ Error::Io(_)) => return Err(e),
            Err(e) => {
                let s = ExitStatus::for_error(&e);
                if status != ExitStatus::Scenario {
                    status = s;
                }
                results.push(WaveformResult::failed(kind, &e));
            }
        }
    }

    let mut warnings = config.warnings.clone();
    let benchmark = match run_benchmarks(config) {
        Ok(b) => b,
        Err(e) => {
            warnings.push(format!("benchmark skipped: {e}"));
            BenchmarkTable::default()
        }
    };

    let radar = Derivations::from_params(&params);
    let summary = RunSummary {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        exit_code: status.code(),
        warnings,
        discrepancies: discrepancies(&radar),
        radar,
        doppler_bins: grid.len(),
        targets: targets.iter().map(|t| t.descriptor.clone()).collect(),
        pslr_ordering: pslr_ordering(&results),
        waveforms: results,
        benchmark,
        config_echo: config.to_config_text(),
    };
    let json = serde_json::to_string_pretty(&summary)
        .map_err(|e| Error::Io(format!("cannot serialize summary: {e}")))?;
    fs::write(out_dir.join("summary.json"), json + "\n")?;
    Ok(summary)
}

/// Output directory: explicit argument, then the config's `output_dir`, then `out`.
pub fn resolve_out_dir(config: &ScenarioConfig, explicit: Option<PathBuf>) -> PathBuf {
    explicit
        .or_else(|| config.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"))
}
