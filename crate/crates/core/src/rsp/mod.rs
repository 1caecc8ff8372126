//! Radar signal processing: fast-time FFT, per-packet frequency-domain matched
//! filtering, Doppler steering, IFFT back to range, peak detection and PSLR.
//!
//! For Doppler hypothesis `f_j` the map is
//!
//! ```text
//! χ[q, j] = IFFT_q { Σ_p exp(+j2π·f_j·p·T_pri) · S̃[·, p] ⊙ conj(s̃_p) } / Q
//! ```
//!
//! which is the diagonal of `S̃ · w_j · s̃†` computed element-wise. The reference
//! `s_p` is the frame sent in packet `p`, normalized to unit peak amplitude, so the
//! peak of a unit scatterer scales with `√A_s·|σ|`.

mod detect;
mod grid;
mod oracle;

pub use detect::{detect_peak, pslr_db, Detection, Pslr, DEFAULT_MAINLOBE_HALFWIDTH};
pub use grid::DopplerGrid;
pub use oracle::{time_domain_oracle, OracleLimits};

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::scene::DataCube;
use crate::waveform::{Frame, FrameSchedule, ScheduleKind, WaveformParams};
use crate::C64;

/// Magnitude surface `|χ|`, `J` Doppler rows × `Q` range columns.
#[derive(Debug, Clone, PartialEq)]
pub struct RangeDopplerMap {
    values: Vec<f64>,
    q: usize,
    j: usize,
    /// `r_q = q·c·T_s/2`.
    pub range_axis_m: Vec<f64>,
    pub doppler_axis_hz: Vec<f64>,
    /// `v_j = f_j·λ/2`.
    pub doppler_axis_mps: Vec<f64>,
}

impl RangeDopplerMap {
    /// Blank map with index axes; mostly useful in tests.
    pub fn zeros(range_bins: usize, doppler_bins: usize) -> Self {
        Self {
            values: vec![0.0; range_bins * doppler_bins],
            q: range_bins,
            j: doppler_bins,
            range_axis_m: (0..range_bins).map(|i| i as f64).collect(),
            doppler_axis_hz: (0..doppler_bins).map(|i| i as f64).collect(),
            doppler_axis_mps: (0..doppler_bins).map(|i| i as f64).collect(),
        }
    }

    pub(crate) fn from_rows(
        params: &WaveformParams,
        grid: &DopplerGrid,
        values: Vec<f64>,
    ) -> Self {
        let q = params.samples_per_pri();
        let lambda = params.wavelength_m();
        debug_assert_eq!(values.len(), q * grid.len());
        Self {
            values,
            q,
            j: grid.len(),
            range_axis_m: (0..q).map(|i| i as f64 * params.range_bin_m()).collect(),
            doppler_axis_hz: grid.frequencies_hz.clone(),
            doppler_axis_mps: grid.frequencies_hz.iter().map(|f| f * lambda / 2.0).collect(),
        }
    }

    pub fn range_bins(&self) -> usize {
        self.q
    }

    pub fn doppler_bins(&self) -> usize {
        self.j
    }

    pub fn value(&self, doppler_bin: usize, range_bin: usize) -> f64 {
        self.values[doppler_bin * self.q + range_bin]
    }

    pub fn set(&mut self, doppler_bin: usize, range_bin: usize, v: f64) {
        self.values[doppler_bin * self.q + range_bin] = v;
    }

    /// Range profile at one Doppler bin.
    pub fn row(&self, doppler_bin: usize) -> &[f64] {
        &self.values[doppler_bin * self.q..(doppler_bin + 1) * self.q]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

/// `max |a − b| / max |a|` over all cells.
pub fn max_relative_deviation(a: &RangeDopplerMap, b: &RangeDopplerMap) -> f64 {
    assert_eq!(a.values.len(), b.values.len(), "map shapes differ");
    let peak = a.max();
    let diff = a
        .values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    if peak == 0.0 {
        diff
    } else {
        diff / peak
    }
}

/// Frame samples scaled to unit peak amplitude; this is what the receiver correlates with.
pub fn reference_samples(frame: &Frame) -> Vec<C64> {
    let peak = frame.max_magnitude();
    if peak == 0.0 {
        return frame.samples.clone();
    }
    frame.samples.iter().map(|s| s / peak).collect()
}

/// Conjugated reference spectra, one per distinct frame, with a per-packet index.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceBank {
    pub kind: ScheduleKind,
    spectra: Vec<Vec<C64>>,
    packet_ref: Vec<usize>,
}

impl ReferenceBank {
    pub fn from_schedule(schedule: &FrameSchedule) -> Self {
        let frames = schedule.distinct_frames();
        let q = frames.first().map_or(0, Frame::len);
        let fft = FftPlanner::new().plan_fft_forward(q.max(1));
        let spectra = frames
            .iter()
            .map(|f| {
                let mut buf = reference_samples(f);
                if !buf.is_empty() {
                    fft.process(&mut buf);
                }
                buf.iter_mut().for_each(|v| *v = v.conj());
                buf
            })
            .collect();
        Self {
            kind: schedule.kind,
            spectra,
            packet_ref: (0..schedule.len()).map(|p| schedule.frame_index(p)).collect(),
        }
    }

    /// Spectrum applied to packet `p`.
    pub fn spectrum(&self, p: usize) -> &[C64] {
        &self.spectra[self.packet_ref[p]]
    }

    pub fn distinct_spectra(&self) -> &[Vec<C64>] {
        &self.spectra
    }

    pub fn packets(&self) -> usize {
        self.packet_ref.len()
    }

    pub fn fast_len(&self) -> usize {
        self.spectra.first().map_or(0, Vec::len)
    }

    pub fn packet_ref(&self, p: usize) -> usize {
        self.packet_ref[p]
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

fn plan(q: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    let mut planner = FftPlanner::new();
    if inverse {
        planner.plan_fft_inverse(q)
    } else {
        planner.plan_fft_forward(q)
    }
}

/// Column-wise Q-point FFT of the cube (unnormalized), packet-major like the input.
pub fn fast_time_fft(cube: &DataCube) -> Vec<C64> {
    transform_columns(cube.samples(), cube.fast_len(), false)
}

/// Inverse of [`fast_time_fft`], including the `1/Q` factor.
pub fn fast_time_ifft(spectrum: &[C64], q: usize) -> Vec<C64> {
    let mut out = transform_columns(spectrum, q, true);
    let s = 1.0 / q as f64;
    out.iter_mut().for_each(|v| *v *= s);
    out
}

fn transform_columns(data: &[C64], q: usize, inverse: bool) -> Vec<C64> {
    let fft = plan(q, inverse);
    let mut out = data.to_vec();
    out.par_chunks_mut(q).for_each_init(
        || vec![C64::new(0.0, 0.0); fft.get_inplace_scratch_len()],
        |scratch, col| fft.process_with_scratch(col, scratch),
    );
    out
}

/// `S̃[·,p] ⊙ conj(s̃_p)` for every packet.
fn matched_products(cube: &DataCube, bank: &ReferenceBank) -> Vec<C64> {
    let q = cube.fast_len();
    let mut y = fast_time_fft(cube);
    y.par_chunks_mut(q).enumerate().for_each(|(p, col)| {
        for (v, r) in col.iter_mut().zip(bank.spectrum(p)) {
            *v *= r;
        }
    });
    y
}

/// Steering weights `exp(+j2π·f·p·T_pri)` for `p = 0..P`.
pub fn steering_vector(f_hz: f64, packets: usize, pri_s: f64) -> Vec<C64> {
    (0..packets)
        .map(|p| C64::from_polar(1.0, 2.0 * PI * f_hz * p as f64 * pri_s))
        .collect()
}

/// Frequency-domain matched filter with explicit Doppler steering for every grid bin.
///
/// Cost is `O(J·(P·Q + Q·log Q))`. Each Doppler row accumulates packets in index
/// order, so the result does not depend on how rows are spread over threads.
pub fn matched_filter_rd(
    cube: &DataCube,
    bank: &ReferenceBank,
    grid: &DopplerGrid,
) -> Result<RangeDopplerMap> {
    check_shapes(cube, bank, grid)?;
    let q = cube.fast_len();
    let packets = cube.slow_len();
    let pri = cube.params.pri_s();
    let y = matched_products(cube, bank);
    let ifft = plan(q, true);
    let norm = 1.0 / q as f64;

    let mut values = vec![0.0; q * grid.len()];
    values
        .par_chunks_mut(q)
        .zip(grid.frequencies_hz.par_iter())
        .for_each(|(row, &f)| {
            let w = steering_vector(f, packets, pri);
            let mut acc = vec![C64::new(0.0, 0.0); q];
            for (p, wp) in w.iter().enumerate() {
                for (a, v) in acc.iter_mut().zip(&y[p * q..(p + 1) * q]) {
                    *a += v * wp;
                }
            }
            ifft.process(&mut acc);
            for (out, a) in row.iter_mut().zip(&acc) {
                *out = a.norm() * norm;
            }
        });
    Ok(RangeDopplerMap::from_rows(&cube.params, grid, values))
}

/// Same map as [`matched_filter_rd`] for the FFT-aligned grid, with the steering sum
/// done as a P-point slow-time FFT per range-frequency bin.
pub fn matched_filter_rd_fft(
    cube: &DataCube,
    bank: &ReferenceBank,
    grid: &DopplerGrid,
) -> Result<RangeDopplerMap> {
    check_shapes(cube, bank, grid)?;
    if !grid.is_fft_aligned(&cube.params) {
        return Err(Error::Processing(
            "slow-time FFT path needs the FFT-aligned Doppler grid".into(),
        ));
    }
    let q = cube.fast_len();
    let packets = cube.slow_len();
    let y = matched_products(cube, bank);

    // slow-time transform: Σ_p Y_p·exp(+j2π·k·p/P) is an unnormalized inverse DFT
    let slow = plan(packets, true);
    let mut columns = vec![C64::new(0.0, 0.0); q * packets];
    columns.par_chunks_mut(packets).enumerate().for_each(|(qi, col)| {
        for (p, v) in col.iter_mut().enumerate() {
            *v = y[p * q + qi];
        }
        slow.process(col);
    });

    let centre = packets / 2;
    let ifft = plan(q, true);
    let norm = 1.0 / q as f64;
    let mut values = vec![0.0; q * packets];
    values.par_chunks_mut(q).enumerate().for_each(|(j, row)| {
        let k = (j + packets - centre) % packets;
        let mut acc: Vec<C64> = (0..q).map(|qi| columns[qi * packets + k]).collect();
        ifft.process(&mut acc);
        for (out, a) in row.iter_mut().zip(&acc) {
            *out = a.norm() * norm;
        }
    });
    Ok(RangeDopplerMap::from_rows(&cube.params, grid, values))
}

/// Uses the slow-time FFT when the grid allows it, explicit steering otherwise.
pub fn range_doppler(
    cube: &DataCube,
    bank: &ReferenceBank,
    grid: &DopplerGrid,
) -> Result<RangeDopplerMap> {
    if grid.is_fft_aligned(&cube.params) {
        matched_filter_rd_fft(cube, bank, grid)
    } else {
        matched_filter_rd(cube, bank, grid)
    }
}
