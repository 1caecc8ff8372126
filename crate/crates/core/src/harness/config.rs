//! Scenario files: `key = value` lines grouped under `[section]` headers.
//!
//! ```text
//! [radar]
//! preset = ci
//! bandwidth_hz = 1.76e9
//!
//! [run]
//! waveforms = fmcw, pmcw, golay, golay-dr
//! code_seed = 1
//! noise_seed = 2
//! scene_seed = 3
//!
//! [target]
//! kind = point
//! position_m = 12, 9, 0
//! velocity_mps = 1.6, 1.2, 0
//! ```
//!
//! `#` and `;` start comments. `[target]` may repeat; every other section may
//! appear once. A repeated key inside one section is last-wins with a warning.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fxp::{FixedPointFormat, FxpMode};
use crate::rsp::DopplerGrid;
use crate::scene::{
    make_car, make_pedestrian, CarSpec, EchoOptions, Noise, PathLoss, PedestrianSpec, RangeGuard,
    TargetModel, Vec3,
};
use crate::waveform::{PulseShape, ScheduleKind, WaveformParams};

/// Named radar parameter sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// 60 GHz, 1.76 GHz, 2 µs PRI, 4 ms CPI.
    #[default]
    Table1,
    /// Same radar with a 128 µs CPI (P = 64).
    Ci,
}

impl Preset {
    pub fn from_name(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "table1" | "table-1" | "full" => Some(Self::Table1),
            "ci" | "small" => Some(Self::Ci),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Table1 => "table1",
            Self::Ci => "ci",
        }
    }

    pub fn params(self) -> WaveformParams {
        match self {
            Self::Table1 => WaveformParams::table1(),
            Self::Ci => WaveformParams::ci(),
        }
    }
}

/// `[radar]`: a preset plus optional overrides.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct RadarSection {
    pub preset: Preset,
    pub carrier_freq_hz: Option<f64>,
    pub bandwidth_hz: Option<f64>,
    pub pri_s: Option<f64>,
    pub cpi_s: Option<f64>,
    pub code_length: Option<usize>,
    pub amplitude: Option<f64>,
    pub pulse_shape: PulseShape,
    pub path_loss: PathLoss,
    pub range_guard: RangeGuard,
}

impl RadarSection {
    pub fn params(&self) -> Result<WaveformParams> {
        let base = self.preset.params();
        let mut p = WaveformParams::new(
            self.carrier_freq_hz.unwrap_or(base.carrier_freq_hz()),
            self.bandwidth_hz.unwrap_or(base.bandwidth_hz()),
            self.pri_s.unwrap_or(base.pri_s()),
            self.cpi_s.unwrap_or(base.cpi_s()),
        )?;
        if let Some(n) = self.code_length {
            p = p.with_code_length(n)?;
        }
        if let Some(a) = self.amplitude {
            p = p.with_amplitude(a)?;
        }
        p.with_pulse_shape(self.pulse_shape)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TargetSpec {
    Point {
        position_m: Vec3,
        velocity_mps: Vec3,
        rcs_dbsm: f64,
    },
    Pedestrian(PedestrianSpec),
    Car(CarSpec),
}

impl TargetSpec {
    pub fn build(&self) -> TargetModel {
        match self {
            Self::Point {
                position_m,
                velocity_mps,
                rcs_dbsm,
            } => TargetModel::single_point(*position_m, *velocity_mps, *rcs_dbsm),
            Self::Pedestrian(s) => make_pedestrian(s),
            Self::Car(s) => make_car(s),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(tag = "grid", rename_all = "lowercase")]
pub enum DopplerSpec {
    /// `J = P` bins on the slow-time FFT grid.
    #[default]
    Fft,
    /// `bins` points spanning `±f_max` inclusive.
    Uniform { bins: usize },
}

impl DopplerSpec {
    pub fn grid(&self, params: &WaveformParams) -> Result<DopplerGrid> {
        match *self {
            Self::Fft => Ok(DopplerGrid::fft(params)),
            Self::Uniform { bins } => DopplerGrid::uniform(params, bins),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct FixedPointSection {
    /// Empty disables the fixed-point comparison.
    pub formats: Vec<FixedPointFormat>,
    pub mode: FxpMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BenchmarkSection {
    pub enabled: bool,
    pub warmup: usize,
    pub repeats: usize,
}

impl Default for BenchmarkSection {
    fn default() -> Self {
        Self {
            enabled: false,
            warmup: 1,
            repeats: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioConfig {
    pub radar: RadarSection,
    pub waveforms: Vec<ScheduleKind>,
    pub code_seed: u64,
    pub noise_seed: u64,
    pub scene_seed: u64,
    /// `None` is noise off.
    pub snr_db: Option<f64>,
    /// Cross-check every map against the time-domain oracle.
    pub oracle: bool,
    pub output_dir: Option<PathBuf>,
    pub targets: Vec<TargetSpec>,
    pub doppler: DopplerSpec,
    pub fixed_point: FixedPointSection,
    pub benchmark: BenchmarkSection,
    /// Diagnostics that did not stop parsing (duplicate keys).
    #[serde(skip)]
    pub warnings: Vec<String>,
}

impl ScenarioConfig {
    pub fn params(&self) -> Result<WaveformParams> {
        self.radar.params()
    }

    pub fn echo_options(&self) -> EchoOptions {
        EchoOptions {
            noise: match self.snr_db {
                Some(snr_db) => Noise::SnrDb {
                    snr_db,
                    seed: self.noise_seed,
                },
                None => Noise::Off,
            },
            path_loss: self.radar.path_loss,
            range_guard: self.radar.range_guard,
        }
    }

    pub fn target_models(&self) -> Vec<TargetModel> {
        self.targets.iter().map(TargetSpec::build).collect()
    }

    /// Canonical text that parses back to an equal config (warnings aside).
    pub fn to_config_text(&self) -> String {
        let mut s = String::new();
        let r = &self.radar;
        let _ = writeln!(s, "[radar]");
        let _ = writeln!(s, "preset = {}", r.preset.name());
        let opt = |s: &mut String, k: &str, v: Option<f64>| {
            if let Some(v) = v {
                let _ = writeln!(s, "{k} = {v:?}");
            }
        };
        opt(&mut s, "carrier_freq_hz", r.carrier_freq_hz);
        opt(&mut s, "bandwidth_hz", r.bandwidth_hz);
        opt(&mut s, "pri_s", r.pri_s);
        opt(&mut s, "cpi_s", r.cpi_s);
        if let Some(n) = r.code_length {
            let _ = writeln!(s, "code_length = {n}");
        }
        opt(&mut s, "amplitude", r.amplitude);
        let _ = match r.pulse_shape {
            PulseShape::Identity => writeln!(s, "pulse_shape = identity"),
            PulseShape::RaisedCosine { rolloff } => {
                writeln!(s, "pulse_shape = raised-cosine:{rolloff:?}")
            }
        };
        let _ = writeln!(
            s,
            "path_loss = {}",
            match r.path_loss {
                PathLoss::Off => "off",
                PathLoss::InverseSquare => "inverse-square",
            }
        );
        let _ = writeln!(
            s,
            "range_guard = {}",
            match r.range_guard {
                RangeGuard::ListeningWindow => "listening",
                RangeGuard::Pri => "pri",
            }
        );

        let _ = writeln!(s, "\n[run]");
        let names: Vec<&str> = self.waveforms.iter().map(|k| k.name()).collect();
        let _ = writeln!(s, "waveforms = {}", names.join(", "));
        let _ = writeln!(s, "code_seed = {}", self.code_seed);
        let _ = writeln!(s, "noise_seed = {}", self.noise_seed);
        let _ = writeln!(s, "scene_seed = {}", self.scene_seed);
        let _ = match self.snr_db {
            Some(v) => writeln!(s, "snr_db = {v:?}"),
            None => writeln!(s, "snr_db = off"),
        };
        let _ = writeln!(s, "oracle = {}", self.oracle);
        if let Some(d) = &self.output_dir {
            let _ = writeln!(s, "output_dir = {}", d.display());
        }

        let v3 = |v: &Vec3| format!("{:?}, {:?}, {:?}", v[0], v[1], v[2]);
        for t in &self.targets {
            let _ = writeln!(s, "\n[target]");
            match t {
                TargetSpec::Point {
                    position_m,
                    velocity_mps,
                    rcs_dbsm,
                } => {
                    let _ = writeln!(s, "kind = point");
                    let _ = writeln!(s, "position_m = {}", v3(position_m));
                    let _ = writeln!(s, "velocity_mps = {}", v3(velocity_mps));
                    let _ = writeln!(s, "rcs_dbsm = {rcs_dbsm:?}");
                }
                TargetSpec::Pedestrian(p) => {
                    let _ = writeln!(s, "kind = pedestrian");
                    let _ = writeln!(s, "center_m = {}", v3(&p.center_m));
                    let _ = writeln!(s, "speed_mps = {:?}", p.speed_mps);
                    let _ = writeln!(s, "rcs_dbsm = {:?}", p.rcs_dbsm);
                    let _ = writeln!(s, "micro_motion_mps = {:?}", p.micro_motion_mps);
                    let _ = writeln!(s, "seed = {}", p.seed);
                }
                TargetSpec::Car(c) => {
                    let _ = writeln!(s, "kind = car");
                    let _ = writeln!(s, "center_m = {}", v3(&c.center_m));
                    let _ = writeln!(s, "speed_mps = {:?}", c.speed_mps);
                    let _ = writeln!(s, "rcs_dbsm = {:?}", c.rcs_dbsm);
                    let _ = writeln!(s, "scatterers = {}", c.scatterers);
                    let _ = writeln!(s, "length_m = {:?}", c.length_m);
                    let _ = writeln!(s, "width_m = {:?}", c.width_m);
                    let _ = writeln!(s, "seed = {}", c.seed);
                }
            }
        }

        let _ = writeln!(s, "\n[doppler]");
        let _ = match self.doppler {
            DopplerSpec::Fft => writeln!(s, "grid = fft"),
            DopplerSpec::Uniform { bins } => writeln!(s, "grid = uniform\nbins = {bins}"),
        };

        let _ = writeln!(s, "\n[fixed_point]");
        let f: Vec<String> = self
            .fixed_point
            .formats
            .iter()
            .map(|f| format!("{}:{}", f.word_bits(), f.integer_bits()))
            .collect();
        let _ = writeln!(s, "formats = {}", f.join(", "));
        let _ = writeln!(
            s,
            "mode = {}",
            match self.fixed_point.mode {
                FxpMode::FullChain => "full-chain",
                FxpMode::CoreOnly => "core-only",
            }
        );

        let b = &self.benchmark;
        let _ = writeln!(s, "\n[benchmark]");
        let _ = writeln!(s, "enabled = {}", b.enabled);
        let _ = writeln!(s, "warmup = {}", b.warmup);
        let _ = writeln!(s, "repeats = {}", b.repeats);
        s
    }
}

/// One `key = value` with its source line.
#[derive(Debug, Clone)]
struct Entry {
    line: usize,
    value: String,
}

#[derive(Debug)]
struct Section {
    name: String,
    line: usize,
    entries: HashMap<String, Entry>,
}

impl Section {
    fn take(&mut self, key: &str) -> Option<Entry> {
        self.entries.remove(key)
    }

    fn finish(self) -> Result<()> {
        if let Some((k, e)) = self.entries.into_iter().min_by_key(|(_, e)| e.line) {
            return Err(err(e.line, &k, format!("unknown key in [{}]", self.name)));
        }
        Ok(())
    }
}

fn err(line: usize, key: &str, message: impl Into<String>) -> Error {
    Error::Config {
        line,
        key: Some(key.to_string()),
        message: message.into(),
    }
}

fn tokenize(text: &str) -> Result<(Vec<Section>, Vec<String>)> {
    let mut sections: Vec<Section> = Vec::new();
    let mut warnings = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split(['#', ';']).next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        if let Some(name) = body.strip_prefix('[') {
            let name = name.strip_suffix(']').ok_or_else(|| Error::Config {
                line,
                key: None,
                message: format!("malformed section header `{body}`"),
            })?;
            sections.push(Section {
                name: name.trim().to_ascii_lowercase(),
                line,
                entries: HashMap::new(),
            });
            continue;
        }
        let (k, v) = body.split_once('=').ok_or_else(|| Error::Config {
            line,
            key: None,
            message: format!("expected `key = value`, got `{body}`"),
        })?;
        let key = k.trim().to_ascii_lowercase();
        let section = sections.last_mut().ok_or_else(|| {
            err(line, &key, "key outside of any section")
        })?;
        let entry = Entry {
            line,
            value: v.trim().to_string(),
        };
        if let Some(prev) = section.entries.insert(key.clone(), entry) {
            warnings.push(format!(
                "line {line}: duplicate key `{key}` in [{}] (first at line {}); last value wins",
                section.name, prev.line
            ));
        }
    }
    Ok((sections, warnings))
}

fn parse_f64(e: &Entry, key: &str) -> Result<f64> {
    let v: f64 = e
        .value
        .parse()
        .map_err(|_| err(e.line, key, format!("`{}` is not a number", e.value)))?;
    if !v.is_finite() {
        return Err(err(e.line, key, "value must be finite"));
    }
    Ok(v)
}

fn parse_positive(e: &Entry, key: &str) -> Result<f64> {
    let v = parse_f64(e, key)?;
    if v <= 0.0 {
        return Err(err(e.line, key, format!("must be positive, got {v}")));
    }
    Ok(v)
}

fn parse_u64(e: &Entry, key: &str) -> Result<u64> {
    e.value
        .parse()
        .map_err(|_| err(e.line, key, format!("`{}` is not a non-negative integer", e.value)))
}

fn parse_usize(e: &Entry, key: &str) -> Result<usize> {
    e.value
        .parse()
        .map_err(|_| err(e.line, key, format!("`{}` is not a non-negative integer", e.value)))
}

fn parse_bool(e: &Entry, key: &str) -> Result<bool> {
    match e.value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(err(e.line, key, format!("`{}` is not a boolean", e.value))),
    }
}

fn parse_vec3(e: &Entry, key: &str) -> Result<Vec3> {
    let parts: Vec<&str> = e.value.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(err(e.line, key, "expected three comma-separated numbers"));
    }
    let mut v = [0.0; 3];
    for (slot, s) in v.iter_mut().zip(parts) {
        *slot = s
            .parse()
            .ok()
            .filter(|x: &f64| x.is_finite())
            .ok_or_else(|| err(e.line, key, format!("`{s}` is not a finite number")))?;
    }
    Ok(v)
}

fn list(value: &str) -> impl Iterator<Item = &str> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty())
}

/// Like [`list`] but keeps `<W,I>` together.
fn format_list(value: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let (mut depth, mut start) = (0i32, 0);
    for (i, ch) in value.char_indices() {
        match ch {
            '<' => depth += 1,
            '>' => depth -= 1,
            ',' if depth == 0 => {
                out.push(value[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(value[start..].trim());
    out.retain(|s| !s.is_empty());
    out
}

fn parse_radar(mut s: Section) -> Result<RadarSection> {
    let mut r = RadarSection::default();
    if let Some(e) = s.take("preset") {
        r.preset = Preset::from_name(&e.value)
            .ok_or_else(|| err(e.line, "preset", format!("unknown preset `{}`", e.value)))?;
    }
    for (key, slot) in [
        ("carrier_freq_hz", &mut r.carrier_freq_hz),
        ("bandwidth_hz", &mut r.bandwidth_hz),
        ("pri_s", &mut r.pri_s),
        ("cpi_s", &mut r.cpi_s),
        ("amplitude", &mut r.amplitude),
    ] {
        if let Some(e) = s.take(key) {
            *slot = Some(parse_positive(&e, key)?);
        }
    }
    let code_line = s.take("code_length").map(|e| -> Result<usize> {
        let n = parse_usize(&e, "code_length")?;
        if n == 0 {
            return Err(err(e.line, "code_length", "must be at least 1"));
        }
        r.code_length = Some(n);
        Ok(e.line)
    });
    let code_line = code_line.transpose()?;
    if let Some(e) = s.take("pulse_shape") {
        let v = e.value.to_ascii_lowercase();
        r.pulse_shape = if v == "identity" || v == "rect" {
            PulseShape::Identity
        } else if let Some(b) = v.strip_prefix("raised-cosine") {
            let b = b.trim_start_matches(':').trim();
            let rolloff = if b.is_empty() {
                0.25
            } else {
                b.parse::<f64>()
                    .ok()
                    .filter(|x| (0.0..=1.0).contains(x))
                    .ok_or_else(|| err(e.line, "pulse_shape", "rolloff must be in [0, 1]"))?
            };
            PulseShape::RaisedCosine { rolloff }
        } else {
            return Err(err(e.line, "pulse_shape", format!("unknown pulse shape `{}`", e.value)));
        };
    }
    if let Some(e) = s.take("path_loss") {
        r.path_loss = match e.value.to_ascii_lowercase().as_str() {
            "off" | "none" => PathLoss::Off,
            "inverse-square" | "inverse_square" | "1/r2" => PathLoss::InverseSquare,
            _ => return Err(err(e.line, "path_loss", format!("unknown law `{}`", e.value))),
        };
    }
    if let Some(e) = s.take("range_guard") {
        r.range_guard = match e.value.to_ascii_lowercase().as_str() {
            "listening" | "listening-window" => RangeGuard::ListeningWindow,
            "pri" => RangeGuard::Pri,
            _ => return Err(err(e.line, "range_guard", format!("unknown guard `{}`", e.value))),
        };
    }
    let line = s.line;
    s.finish()?;
    r.params().map_err(|e| Error::Config {
        line: code_line.unwrap_or(line),
        key: code_line.map(|_| "code_length".to_string()),
        message: e.to_string(),
    })?;
    Ok(r)
}

fn parse_target(mut s: Section, index: usize, scene_seed: u64) -> Result<TargetSpec> {
    let kind = s
        .take("kind")
        .ok_or_else(|| err(s.line, "kind", "[target] needs a kind (point, pedestrian, car)"))?;
    let seed = match s.take("seed") {
        Some(e) => parse_u64(&e, "seed")?,
        None => scene_seed.wrapping_add(index as u64),
    };
    let f = |s: &mut Section, key: &str, default: f64| -> Result<f64> {
        s.take(key).map_or(Ok(default), |e| parse_f64(&e, key))
    };
    let spec = match kind.value.to_ascii_lowercase().as_str() {
        "point" | "single_point" | "single-point" => {
            let position_m = s
                .take("position_m")
                .ok_or_else(|| err(s.line, "position_m", "point target needs a position"))
                .and_then(|e| parse_vec3(&e, "position_m"))?;
            let velocity_mps = match s.take("velocity_mps") {
                Some(e) => parse_vec3(&e, "velocity_mps")?,
                None => [0.0; 3],
            };
            TargetSpec::Point {
                position_m,
                velocity_mps,
                rcs_dbsm: f(&mut s, "rcs_dbsm", 0.0)?,
            }
        }
        "pedestrian" => {
            let d = PedestrianSpec::default();
            let center_m = match s.take("center_m") {
                Some(e) => parse_vec3(&e, "center_m")?,
                None => d.center_m,
            };
            TargetSpec::Pedestrian(PedestrianSpec {
                center_m,
                speed_mps: f(&mut s, "speed_mps", d.speed_mps)?,
                rcs_dbsm: f(&mut s, "rcs_dbsm", d.rcs_dbsm)?,
                micro_motion_mps: f(&mut s, "micro_motion_mps", d.micro_motion_mps)?,
                seed,
            })
        }
        "car" => {
            let d = CarSpec::default();
            let center_m = match s.take("center_m") {
                Some(e) => parse_vec3(&e, "center_m")?,
                None => d.center_m,
            };
            let scatterers = match s.take("scatterers") {
                Some(e) => match parse_usize(&e, "scatterers")? {
                    0 => return Err(err(e.line, "scatterers", "must be at least 1")),
                    n => n,
                },
                None => d.scatterers,
            };
            TargetSpec::Car(CarSpec {
                center_m,
                speed_mps: f(&mut s, "speed_mps", d.speed_mps)?,
                rcs_dbsm: f(&mut s, "rcs_dbsm", d.rcs_dbsm)?,
                scatterers,
                length_m: f(&mut s, "length_m", d.length_m)?,
                width_m: f(&mut s, "width_m", d.width_m)?,
                seed,
            })
        }
        other => {
            return Err(err(kind.line, "kind", format!("unknown target kind `{other}`")));
        }
    };
    s.finish()?;
    Ok(spec)
}

/// Parses and validates a scenario file.
pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    let (sections, warnings) = tokenize(text)?;
    let mut radar = None;
    let mut run = None;
    let mut targets = Vec::new();
    let mut doppler = None;
    let mut fixed = None;
    let mut bench = None;
    for s in sections {
        let slot = match s.name.as_str() {
            "target" => {
                targets.push(s);
                continue;
            }
            "radar" => &mut radar,
            "run" => &mut run,
            "doppler" => &mut doppler,
            "fixed_point" | "fixed-point" => &mut fixed,
            "benchmark" => &mut bench,
            other => {
                return Err(Error::Config {
                    line: s.line,
                    key: None,
                    message: format!("unknown section [{other}]"),
                })
            }
        };
        if let Some(prev) = slot.as_ref().map(|p: &Section| p.line) {
            return Err(Error::Config {
                line: s.line,
                key: None,
                message: format!("section [{}] repeated (first at line {prev})", s.name),
            });
        }
        *slot = Some(s);
    }

    let radar = match radar {
        Some(s) => parse_radar(s)?,
        None => RadarSection::default(),
    };

    let mut run = run.ok_or_else(|| Error::Config {
        line: 0,
        key: None,
        message: "missing mandatory section [run]".into(),
    })?;
    let run_line = run.line;
    let seed = |run: &mut Section, key: &str| -> Result<u64> {
        let e = run.take(key).ok_or_else(|| {
            err(run_line, key, "seed is mandatory (runs must be reproducible)")
        })?;
        parse_u64(&e, key)
    };
    let code_seed = seed(&mut run, "code_seed")?;
    let noise_seed = seed(&mut run, "noise_seed")?;
    let scene_seed = seed(&mut run, "scene_seed")?;
    let waveforms = match run.take("waveforms") {
        Some(e) => parse_waveforms(&e.value).map_err(|m| err(e.line, "waveforms", m))?,
        None => ScheduleKind::ALL.to_vec(),
    };
    let snr_db = match run.take("snr_db") {
        Some(e) if matches!(e.value.to_ascii_lowercase().as_str(), "off" | "none") => None,
        Some(e) => Some(parse_f64(&e, "snr_db")?),
        None => None,
    };
    let oracle = run
        .take("oracle")
        .map_or(Ok(false), |e| parse_bool(&e, "oracle"))?;
    let output_dir = run.take("output_dir").map(|e| PathBuf::from(e.value));
    run.finish()?;

    let targets = targets
        .into_iter()
        .enumerate()
        .map(|(i, s)| parse_target(s, i, scene_seed))
        .collect::<Result<Vec<_>>>()?;

    let doppler = match doppler {
        None => DopplerSpec::Fft,
        Some(mut s) => {
            let grid = s.take("grid");
            let bins = s.take("bins");
            let name = grid.as_ref().map(|e| e.value.to_ascii_lowercase());
            let uniform = match name.as_deref() {
                Some("fft") => false,
                Some("uniform") => true,
                None => bins.is_some(),
                Some(g) => {
                    let line = grid.as_ref().map_or(s.line, |e| e.line);
                    return Err(err(line, "grid", format!("unknown grid `{g}` (fft, uniform)")));
                }
            };
            let spec = match (uniform, bins) {
                (false, None) => DopplerSpec::Fft,
                (false, Some(e)) => {
                    return Err(err(e.line, "bins", "`bins` only applies to grid = uniform"));
                }
                (true, None) => return Err(err(s.line, "bins", "uniform grid needs `bins`")),
                (true, Some(e)) => {
                    let n = parse_usize(&e, "bins")?;
                    if n < 2 {
                        return Err(err(e.line, "bins", "need at least 2 bins"));
                    }
                    DopplerSpec::Uniform { bins: n }
                }
            };
            s.finish()?;
            spec
        }
    };

    let fixed_point = match fixed {
        None => FixedPointSection::default(),
        Some(mut s) => {
            let mut f = FixedPointSection::default();
            if let Some(e) = s.take("formats") {
                for item in format_list(&e.value) {
                    f.formats.push(
                        FixedPointFormat::parse(item)
                            .map_err(|x| err(e.line, "formats", x.to_string()))?,
                    );
                }
            }
            if let Some(e) = s.take("mode") {
                f.mode = FxpMode::from_name(&e.value).ok_or_else(|| {
                    err(e.line, "mode", format!("unknown mode `{}` (full-chain, core-only)", e.value))
                })?;
            }
            s.finish()?;
            f
        }
    };

    let benchmark = match bench {
        None => BenchmarkSection::default(),
        Some(mut s) => {
            let mut b = BenchmarkSection {
                enabled: true,
                ..Default::default()
            };
            if let Some(e) = s.take("enabled") {
                b.enabled = parse_bool(&e, "enabled")?;
            }
            if let Some(e) = s.take("warmup") {
                b.warmup = parse_usize(&e, "warmup")?;
            }
            if let Some(e) = s.take("repeats") {
                b.repeats = parse_usize(&e, "repeats")?;
                if b.repeats == 0 {
                    return Err(err(e.line, "repeats", "must be at least 1"));
                }
            }
            s.finish()?;
            b
        }
    };

    Ok(ScenarioConfig {
        radar,
        waveforms,
        code_seed,
        noise_seed,
        scene_seed,
        snr_db,
        oracle,
        output_dir,
        targets,
        doppler,
        fixed_point,
        benchmark,
        warnings,
    })
}

/// Comma-separated waveform names; duplicates are dropped, order kept.
pub fn parse_waveforms(s: &str) -> std::result::Result<Vec<ScheduleKind>, String> {
    let mut out = Vec::new();
    for name in list(s) {
        let k = if name.eq_ignore_ascii_case("all") {
            for k in ScheduleKind::ALL {
                if !out.contains(&k) {
                    out.push(k);
                }
            }
            continue;
        } else {
            ScheduleKind::from_name(name).ok_or_else(|| {
                format!("unknown waveform `{name}` (fmcw, pmcw, golay, golay-dr)")
            })?
        };
        if !out.contains(&k) {
            out.push(k);
        }
    }
    if out.is_empty() {
        return Err("at least one waveform is required".into());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[run]\ncode_seed = 1\nnoise_seed = 2\nscene_seed = 3\n";

    fn config_err(text: &str) -> (usize, Option<String>, String) {
        match parse_config(text) {
            Err(Error::Config { line, key, message }) => (line, key, message),
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn minimal_config_gets_table1() {
        let c = parse_config(MINIMAL).unwrap();
        let p = c.params().unwrap();
        assert_eq!(p.carrier_freq_hz(), 60e9);
        assert_eq!(p.bandwidth_hz(), 1.76e9);
        assert_eq!(p.pri_s(), 2e-6);
        assert_eq!(p.cpi_s(), 4e-3);
        assert_eq!(c.waveforms, ScheduleKind::ALL.to_vec());
        assert_eq!(c.snr_db, None);
        assert!(c.targets.is_empty());
        assert!(!c.benchmark.enabled);
        assert!(c.warnings.is_empty());
    }

    #[test]
    fn negative_bandwidth_names_the_key() {
        let (line, key, _) = config_err(&format!("[radar]\nbandwidth_hz = -1e9\n{MINIMAL}"));
        assert_eq!(line, 2);
        assert_eq!(key.as_deref(), Some("bandwidth_hz"));
        let msg = parse_config(&format!("[radar]\nbandwidth_hz = -1e9\n{MINIMAL}"))
            .unwrap_err()
            .to_string();
        assert!(msg.contains("bandwidth_hz"), "{msg}");
    }

    #[test]
    fn duplicate_key_is_last_wins_with_warning() {
        let c = parse_config(&format!("{MINIMAL}code_seed = 9\n")).unwrap();
        assert_eq!(c.code_seed, 9);
        assert_eq!(c.warnings.len(), 1);
        assert!(c.warnings[0].contains("code_seed"));
        assert!(c.warnings[0].starts_with("line 5"));
    }

    #[test]
    fn unknown_key_and_section() {
        let (line, key, _) = config_err(&format!("{MINIMAL}colour = red\n"));
        assert_eq!((line, key.as_deref()), (5, Some("colour")));
        let (line, key, msg) = config_err(&format!("{MINIMAL}[radr]\n"));
        assert_eq!((line, key), (5, None));
        assert!(msg.contains("radr"));
    }

    #[test]
    fn missing_run_or_seed() {
        let (_, _, msg) = config_err("[radar]\npreset = ci\n");
        assert!(msg.contains("[run]"));
        let (line, key, _) = config_err("[run]\ncode_seed = 1\nnoise_seed = 2\n");
        assert_eq!((line, key.as_deref()), (1, Some("scene_seed")));
    }

    #[test]
    fn out_of_range_values() {
        let (l, k, _) = config_err(&format!("[radar]\npreset = ci\ncode_length = 4000\n{MINIMAL}"));
        assert_eq!((l, k.as_deref()), (3, Some("code_length")));
        let (l, k, _) = config_err(&format!("{MINIMAL}waveforms = fmcw, ofdm\n"));
        assert_eq!((l, k.as_deref()), (5, Some("waveforms")));
        let (l, k, _) = config_err(&format!("{MINIMAL}[fixed_point]\nformats = 24:1, 70:1\n"));
        assert_eq!((l, k.as_deref()), (6, Some("formats")));
        let (l, k, _) = config_err(&format!("{MINIMAL}[doppler]\ngrid = uniform\nbins = 1\n"));
        assert_eq!((l, k.as_deref()), (7, Some("bins")));
        let (l, k, _) = config_err(&format!("{MINIMAL}[target]\nkind = boat\n"));
        assert_eq!((l, k.as_deref()), (6, Some("kind")));
        let (l, k, _) = config_err(&format!("{MINIMAL}[target]\nkind = point\nposition_m = 1, 2\n"));
        assert_eq!((l, k.as_deref()), (7, Some("position_m")));
        let (l, _, _) = config_err("code_seed = 1\n");
        assert_eq!(l, 1);
    }

    #[test]
    fn full_config_round_trips() {
        let text = "\
# comment
[radar]
preset = ci
carrier_freq_hz = 6e10 ; inline comment
code_length = 256
pulse_shape = raised-cosine:0.35
path_loss = off
range_guard = pri

[run]
waveforms = golay-dr, fmcw
code_seed = 11
noise_seed = 12
scene_seed = 13
snr_db = 20
oracle = yes
output_dir = out/run1

[target]
kind = point
position_m = 12, 9, 0
velocity_mps = 1.6, 1.2, 0
rcs_dbsm = -3

[target]
kind = pedestrian

[target]
kind = car
speed_mps = -8
scatterers = 16

[doppler]
grid = uniform
bins = 33

[fixed_point]
formats = 16:1, <24,1>
mode = core-only

[benchmark]
repeats = 3
";
        let c = parse_config(text).unwrap();
        assert_eq!(c.radar.preset, Preset::Ci);
        assert_eq!(c.params().unwrap().code_length(), 256);
        assert_eq!(c.waveforms, vec![ScheduleKind::GolayDopplerResilient, ScheduleKind::Fmcw]);
        assert_eq!(c.snr_db, Some(20.0));
        assert_eq!(c.targets.len(), 3);
        match &c.targets[1] {
            TargetSpec::Pedestrian(p) => assert_eq!(p.seed, 14),
            t => panic!("{t:?}"),
        }
        assert_eq!(c.doppler, DopplerSpec::Uniform { bins: 33 });
        assert_eq!(c.fixed_point.formats.len(), 2);
        assert!(c.benchmark.enabled);
        assert_eq!(c.benchmark.repeats, 3);

        let echo = c.to_config_text();
        assert_eq!(parse_config(&echo).unwrap(), c);
        let min = parse_config(MINIMAL).unwrap();
        assert_eq!(parse_config(&min.to_config_text()).unwrap(), min);
    }

    #[test]
    fn waveform_lists() {
        assert_eq!(parse_waveforms("all").unwrap(), ScheduleKind::ALL.to_vec());
        assert_eq!(parse_waveforms("pmcw,pmcw").unwrap(), vec![ScheduleKind::Pmcw]);
        assert!(parse_waveforms(" , ").is_err());
    }
}
