//! Fixed-point emulation of the matched-filter chain.
//!
//! Values are carried as `f64` but snapped onto the `⟨W, I⟩` grid at each
//! quantization point, with a power-of-two block scale chosen per block. For
//! `W ≤ 53` every snapped value is exactly representable, so the emulation is
//! bit-exact with respect to the integer mantissas in [`QuantizedCube`].
//!
//! Quantization points (full chain): input cube, every FFT stage, post-FFT
//! spectra, reference spectra, matched products, post-steering rows and post-IFFT
//! rows. The core-only mode runs both fast-time FFTs in double precision.

mod fft;
mod format;

pub use fft::FixedFft;
pub use format::{quantize, quantize_samples, FixedPointFormat, QuantizedCube, Scaling};

use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Serialize, Serializer};

use crate::bench::median_time;
use crate::error::{Error, Result};
use crate::rsp::{
    detect_peak, pslr_db, range_doppler, steering_vector, DopplerGrid, Pslr, RangeDopplerMap,
    ReferenceBank, DEFAULT_MAINLOBE_HALFWIDTH,
};
use crate::scene::DataCube;
use crate::C64;
use fft::{block_snap, snap_scaled};

/// Which part of the chain runs in fixed point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FxpMode {
    #[default]
    FullChain,
    /// Only the reference multiply and the Doppler steering sum.
    CoreOnly,
}

impl FxpMode {
    pub fn from_name(s: &str) -> Option<Self> {
        match s.trim() {
            "full-chain" | "full_chain" | "full" => Some(Self::FullChain),
            "core-only" | "core_only" | "core" => Some(Self::CoreOnly),
            _ => None,
        }
    }
}

/// Saturated components above this fraction raise a warning.
pub const SATURATION_WARNING_FRACTION: f64 = 0.01;

/// Fixed-point map compared with the double-precision map.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FxpReport {
    pub format: FixedPointFormat,
    pub mode: FxpMode,
    /// `10·log10(Σ|χ|² / Σ(|χ| − |χ_q|)²)` over the magnitude maps.
    #[serde(serialize_with = "finite_or_null")]
    pub sqnr_db: f64,
    pub peak_agree: bool,
    pub double_peak: (usize, usize),
    pub fixed_peak: Option<(usize, usize)>,
    pub pslr_double: Option<Pslr>,
    pub pslr_fixed: Option<Pslr>,
    /// `pslr_fixed − pslr_double`; `None` when either side has no finite PSLR.
    pub pslr_delta_db: Option<f64>,
    pub saturation_count: usize,
    pub quantized_components: usize,
    pub warnings: Vec<String>,
}

fn finite_or_null<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_none()
    }
}

#[derive(Default)]
struct Tally {
    saturated: usize,
    total: usize,
}

impl Tally {
    fn add(&mut self, saturated: usize, components: usize) {
        self.saturated += saturated;
        self.total += components;
    }
}

fn max_component(buf: &[C64]) -> f64 {
    buf.par_iter()
        .map(|v| v.re.abs().max(v.im.abs()))
        .reduce(|| 0.0, f64::max)
}

/// One block scale for the whole buffer, snapped in chunks of `chunk`.
fn snap_whole(buf: &mut [C64], chunk: usize, format: &FixedPointFormat, t: &mut Tally) {
    let scale = format.block_scale(max_component(buf));
    let sat: usize = buf
        .par_chunks_mut(chunk.max(1))
        .map(|c| snap_scaled(c, format, scale))
        .sum();
    t.add(sat, 2 * buf.len());
}

/// Independent block scale per chunk.
fn snap_chunks(buf: &mut [C64], chunk: usize, format: &FixedPointFormat, t: &mut Tally) {
    let sat: usize = buf
        .par_chunks_mut(chunk.max(1))
        .map(|c| block_snap(c, format))
        .sum();
    t.add(sat, 2 * buf.len());
}

fn fft_columns(data: &mut [C64], n: usize, inverse: bool, format: Option<&FixedPointFormat>) {
    match format {
        Some(f) => {
            let fft = FixedFft::new(n, inverse, *f);
            data.par_chunks_mut(n).for_each(|c| fft.process(c));
        }
        None => {
            let mut planner = FftPlanner::new();
            let fft = if inverse {
                planner.plan_fft_inverse(n)
            } else {
                planner.plan_fft_forward(n)
            };
            data.par_chunks_mut(n).for_each(|c| fft.process(c));
        }
    }
}

fn check_shapes(cube: &DataCube, bank: &ReferenceBank, grid: &DopplerGrid) -> Result<()> {
    if cube.fast_len() != bank.fast_len() || cube.slow_len() != bank.packets() {
        return Err(Error::Processing(format!(
            "cube is {}×{}, reference bank is {}×{}",
            cube.fast_len(),
            cube.slow_len(),
            bank.fast_len(),
            bank.packets()
        )));
    }
    if grid.is_empty() {
        return Err(Error::Processing("empty Doppler grid".into()));
    }
    Ok(())
}

/// Fixed-point range-Doppler map plus saturation statistics.
fn fixed_map(
    cube: &DataCube,
    bank: &ReferenceBank,
    grid: &DopplerGrid,
    format: FixedPointFormat,
    mode: FxpMode,
) -> Result<(RangeDopplerMap, Tally)> {
    check_shapes(cube, bank, grid)?;
    let q = cube.fast_len();
    let packets = cube.slow_len();
    let full = mode == FxpMode::FullChain;
    let mut t = Tally::default();

    // input
    let mut y = quantize(cube, format, Scaling::MaxAbs)?.dequantize();
    if full {
        t.add(0, 2 * y.len());
    } else {
        // core-only: the cube arrives in double precision
        y.copy_from_slice(cube.samples());
    }
    fft_columns(&mut y, q, false, full.then_some(&format));
    snap_whole(&mut y, q, &format, &mut t);

    // reference spectra
    let refs: Vec<Vec<C64>> = bank
        .distinct_spectra()
        .iter()
        .map(|s| {
            let mut s = s.clone();
            snap_chunks(&mut s, q, &format, &mut t);
            s
        })
        .collect();
    y.par_chunks_mut(q).enumerate().for_each(|(p, col)| {
        for (v, r) in col.iter_mut().zip(&refs[bank.packet_ref(p)]) {
            *v *= r;
        }
    });
    snap_whole(&mut y, q, &format, &mut t);

    // Doppler steering, rows of length q
    let mut rows = if grid.is_fft_aligned(&cube.params) {
        let mut cols = vec![C64::new(0.0, 0.0); q * packets];
        cols.par_chunks_mut(packets).enumerate().for_each(|(qi, col)| {
            for (p, v) in col.iter_mut().enumerate() {
                *v = y[p * q + qi];
            }
        });
        fft_columns(&mut cols, packets, true, Some(&format));
        let centre = packets / 2;
        let mut rows = vec![C64::new(0.0, 0.0); q * packets];
        rows.par_chunks_mut(q).enumerate().for_each(|(j, row)| {
            let k = (j + packets - centre) % packets;
            for (qi, v) in row.iter_mut().enumerate() {
                *v = cols[qi * packets + k];
            }
        });
        rows
    } else {
        let tw = FixedPointFormat::new(
            format.word_bits(),
            format.integer_bits().max(2).min(format.word_bits()),
        )?;
        let pri = cube.params.pri_s();
        let mut rows = vec![C64::new(0.0, 0.0); q * grid.len()];
        rows.par_chunks_mut(q)
            .zip(grid.frequencies_hz.par_iter())
            .for_each(|(row, &f)| {
                let mut w = steering_vector(f, packets, pri);
                snap_scaled(&mut w, &tw, 1.0);
                for (p, wp) in w.iter().enumerate() {
                    for (a, v) in row.iter_mut().zip(&y[p * q..(p + 1) * q]) {
                        *a += v * wp;
                    }
                }
            });
        rows
    };
    snap_chunks(&mut rows, q, &format, &mut t);

    // back to range
    fft_columns(&mut rows, q, true, full.then_some(&format));
    let norm = 1.0 / q as f64;
    rows.par_iter_mut().for_each(|v| *v *= norm);
    if full {
        snap_chunks(&mut rows, q, &format, &mut t);
    }

    let values = rows.par_iter().map(|v| v.norm()).collect();
    Ok((RangeDopplerMap::from_rows(&cube.params, grid, values), t))
}

fn profile_pslr(map: &RangeDopplerMap, doppler_bin: usize) -> Option<Pslr> {
    pslr_db(map.row(doppler_bin), DEFAULT_MAINLOBE_HALFWIDTH).ok()
}

/// SQNR in dB between magnitude maps; `+∞` when they are identical.
pub fn sqnr_db(reference: &RangeDopplerMap, test: &RangeDopplerMap) -> f64 {
    let (sig, err) = reference
        .values()
        .iter()
        .zip(test.values())
        .fold((0.0, 0.0), |(s, e), (a, b)| (s + a * a, e + (a - b) * (a - b)));
    if err == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (sig / err).log10()
    }
}

fn compare(
    double: &RangeDopplerMap,
    fixed: &RangeDopplerMap,
    format: FixedPointFormat,
    mode: FxpMode,
    tally: Tally,
) -> Result<FxpReport> {
    let d = detect_peak(double)?;
    let f = detect_peak(fixed).ok();
    let pslr_double = profile_pslr(double, d.doppler_bin);
    let pslr_fixed = f.as_ref().and_then(|f| profile_pslr(fixed, f.doppler_bin));
    let pslr_delta_db = match (pslr_double, pslr_fixed) {
        (Some(Pslr::Db(a)), Some(Pslr::Db(b))) => Some(b - a),
        _ => None,
    };
    let mut warnings = Vec::new();
    if tally.total > 0
        && tally.saturated as f64 > SATURATION_WARNING_FRACTION * tally.total as f64
    {
        warnings.push(format!(
            "pervasive saturation: {} of {} components clipped",
            tally.saturated, tally.total
        ));
    }
    if f.is_none() {
        warnings.push("fixed-point map is identically zero".into());
    }
    Ok(FxpReport {
        format,
        mode,
        sqnr_db: sqnr_db(double, fixed),
        peak_agree: f
            .as_ref()
            .is_some_and(|f| (f.range_bin, f.doppler_bin) == (d.range_bin, d.doppler_bin)),
        double_peak: (d.range_bin, d.doppler_bin),
        fixed_peak: f.map(|f| (f.range_bin, f.doppler_bin)),
        pslr_double,
        pslr_fixed,
        pslr_delta_db,
        saturation_count: tally.saturated,
        quantized_components: tally.total,
        warnings,
    })
}

/// Runs the chain at `format` and compares it with the double-precision map.
pub fn quantized_matched_filter(
    cube: &DataCube,
    bank: &ReferenceBank,
    grid: &DopplerGrid,
    format: FixedPointFormat,
    mode: FxpMode,
) -> Result<(RangeDopplerMap, FxpReport)> {
    let double = range_doppler(cube, bank, grid)?;
    let (fixed, tally) = fixed_map(cube, bank, grid, format, mode)?;
    let report = compare(&double, &fixed, format, mode, tally)?;
    Ok((fixed, report))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub word_bits: u32,
    pub integer_bits: u32,
    #[serde(serialize_with = "finite_or_null")]
    pub sqnr_db: f64,
    pub peak_agree: bool,
    pub pslr_delta_db: Option<f64>,
    pub runtime_s: f64,
    pub report: FxpReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrecisionSweep {
    pub rows: Vec<SweepRow>,
    /// Median runtime of the double-precision chain on the same input.
    pub double_runtime_s: f64,
    pub sqnr_monotone: bool,
}

/// SQNR must not drop by more than `tolerance_db` as `W` grows with `I` held fixed.
pub fn sqnr_monotone(rows: &[SweepRow], tolerance_db: f64) -> bool {
    let mut sorted: Vec<&SweepRow> = rows.iter().collect();
    sorted.sort_by_key(|r| (r.integer_bits, r.word_bits));
    sorted.windows(2).all(|w| {
        w[0].integer_bits != w[1].integer_bits || w[1].sqnr_db >= w[0].sqnr_db - tolerance_db
    })
}

/// Runs every format, timing each with a median of `repeats` runs.
pub fn precision_sweep(
    cube: &DataCube,
    bank: &ReferenceBank,
    grid: &DopplerGrid,
    formats: &[FixedPointFormat],
    mode: FxpMode,
    repeats: usize,
) -> Result<PrecisionSweep> {
    if formats.is_empty() {
        return Err(Error::Parameter("precision sweep needs at least one format".into()));
    }
    let mut double = None;
    let double_runtime_s = median_time(0, repeats, || {
        double = Some(range_doppler(cube, bank, grid));
    })
    .median_s;
    let double = double.expect("timed at least once")?;

    let mut rows = Vec::with_capacity(formats.len());
    for &format in formats {
        let mut out = None;
        let timing = median_time(0, repeats, || {
            out = Some(fixed_map(cube, bank, grid, format, mode));
        });
        let (fixed, tally) = out.expect("timed at least once")?;
        let report = compare(&double, &fixed, format, mode, tally)?;
        rows.push(SweepRow {
            word_bits: format.word_bits(),
            integer_bits: format.integer_bits(),
            sqnr_db: report.sqnr_db,
            peak_agree: report.peak_agree,
            pslr_delta_db: report.pslr_delta_db,
            runtime_s: timing.median_s,
            report,
        });
    }
    let sqnr_monotone = sqnr_monotone(&rows, 3.0);
    Ok(PrecisionSweep {
        rows,
        double_runtime_s,
        sqnr_monotone,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{synthesize_echo, EchoOptions, TargetModel};
    use crate::waveform::{build_schedule, ScheduleKind, WaveformParams};

    fn scene(kind: ScheduleKind) -> (DataCube, ReferenceBank, DopplerGrid) {
        let params = WaveformParams::ci();
        let schedule = build_schedule(kind, &params, 0).unwrap();
        let target = TargetModel::single_point([12.0, 9.0, 0.0], [1.6, 1.2, 0.0], 0.0);
        let cube = synthesize_echo(&schedule, &[target], &params, &EchoOptions::default()).unwrap();
        (
            cube,
            ReferenceBank::from_schedule(&schedule),
            DopplerGrid::fft(&params),
        )
    }

    fn fmt(w: u32, i: u32) -> FixedPointFormat {
        FixedPointFormat::new(w, i).unwrap()
    }

    #[test]
    fn very_wide_format_is_transparent() {
        let (cube, bank, grid) = scene(ScheduleKind::Fmcw);
        let (_, r) = quantized_matched_filter(&cube, &bank, &grid, fmt(53, 2), FxpMode::FullChain)
            .unwrap();
        assert!(r.peak_agree);
        assert!(r.sqnr_db > 200.0, "{}", r.sqnr_db);
        assert_eq!(r.saturation_count, 0);
    }

    #[test]
    fn q24_keeps_peak_and_pslr() {
        for kind in [ScheduleKind::Fmcw, ScheduleKind::Pmcw, ScheduleKind::GolayStandard] {
            let (cube, bank, grid) = scene(kind);
            for mode in [FxpMode::FullChain, FxpMode::CoreOnly] {
                let (_, r) =
                    quantized_matched_filter(&cube, &bank, &grid, fmt(24, 1), mode).unwrap();
                assert!(r.peak_agree, "{kind:?} {mode:?}");
                assert_eq!(r.double_peak.0, 176);
                assert!(r.pslr_delta_db.unwrap().abs() < 0.5, "{kind:?}: {r:?}");
            }
        }
    }

    #[test]
    fn narrow_format_does_not_crash() {
        let (cube, bank, grid) = scene(ScheduleKind::Pmcw);
        let (map, r) =
            quantized_matched_filter(&cube, &bank, &grid, fmt(8, 1), FxpMode::FullChain).unwrap();
        assert_eq!(map.range_bins(), cube.fast_len());
        assert!(r.sqnr_db.is_finite());
        assert!(r.sqnr_db < 80.0);
    }

    #[test]
    fn uniform_grid_uses_direct_steering() {
        let (cube, bank, _) = scene(ScheduleKind::GolayDopplerResilient);
        let grid = DopplerGrid::uniform(&cube.params, 9).unwrap();
        let (_, r) = quantized_matched_filter(&cube, &bank, &grid, fmt(32, 1), FxpMode::FullChain)
            .unwrap();
        assert!(r.sqnr_db > 120.0, "{}", r.sqnr_db);
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let (cube, bank, grid) = scene(ScheduleKind::Fmcw);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| fixed_map(&cube, &bank, &grid, fmt(16, 1), FxpMode::FullChain).unwrap().0)
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn sweep_rows_and_monotonicity() {
        let (cube, bank, grid) = scene(ScheduleKind::Fmcw);
        let formats = [fmt(16, 1), fmt(24, 1), fmt(32, 1)];
        let s = precision_sweep(&cube, &bank, &grid, &formats, FxpMode::FullChain, 1).unwrap();
        assert_eq!(s.rows.len(), 3);
        assert!(s.sqnr_monotone);
        assert!(s.rows[0].sqnr_db < s.rows[1].sqnr_db && s.rows[1].sqnr_db < s.rows[2].sqnr_db);
        assert!(s.rows[1].peak_agree);

        let one = precision_sweep(&cube, &bank, &grid, &formats[..1], FxpMode::CoreOnly, 1).unwrap();
        assert_eq!(one.rows.len(), 1);
        assert!(precision_sweep(&cube, &bank, &grid, &[], FxpMode::CoreOnly, 1).is_err());
    }

    #[test]
    fn non_finite_input_is_rejected() {
        let (mut cube, bank, grid) = scene(ScheduleKind::Fmcw);
        cube.samples_mut()[0] = C64::new(f64::INFINITY, 0.0);
        let r = quantized_matched_filter(&cube, &bank, &grid, fmt(16, 1), FxpMode::FullChain);
        assert!(matches!(r, Err(Error::Data(_))));
    }

    #[test]
    fn report_serializes_infinite_sqnr_as_null() {
        let mut map = RangeDopplerMap::zeros(8, 2);
        map.set(0, 3, 1.0);
        let r = compare(&map, &map.clone(), fmt(24, 1), FxpMode::FullChain, Tally::default())
            .unwrap();
        let v = serde_json::to_value(&r).unwrap();
        assert!(v["sqnr_db"].is_null());
        assert_eq!(v["format"], "<24,1>");
        assert_eq!(v["mode"], "full-chain");
    }

    #[test]
    fn sweep_monotone_tolerance() {
        let row = |w, s| SweepRow {
            word_bits: w,
            integer_bits: 1,
            sqnr_db: s,
            peak_agree: true,
            pslr_delta_db: None,
            runtime_s: 0.0,
            report: compare(
                &{
                    let mut m = RangeDopplerMap::zeros(8, 1);
                    m.set(0, 0, 1.0);
                    m
                },
                &{
                    let mut m = RangeDopplerMap::zeros(8, 1);
                    m.set(0, 0, 1.0);
                    m
                },
                fmt(w, 1),
                FxpMode::FullChain,
                Tally::default(),
            )
            .unwrap(),
        };
        assert!(sqnr_monotone(&[row(16, 90.0), row(24, 88.0)], 3.0));
        assert!(!sqnr_monotone(&[row(16, 90.0), row(24, 80.0)], 3.0));
    }
}
