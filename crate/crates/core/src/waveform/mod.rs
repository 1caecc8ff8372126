//! Discrete complex-baseband transmit frames and per-packet schedules.
//!
//! Every waveform is sampled at `T_s = 1/BW` and occupies the first
//! `code_length` samples of a `Q`-sample PRI; the rest of the PRI is
//! listening time and is zero.

mod golay;
mod ptm;

pub use golay::{aperiodic_autocorrelation, golay_pair, GolayPair};
pub use ptm::{ptm_bit, ptm_sequence, PtmSequence};

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{C64, SPEED_OF_LIGHT};

/// Transmit pulse shaping applied to the chip sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub enum PulseShape {
    /// Rectangular chips, one sample per chip.
    #[default]
    Identity,
    /// Raised-cosine FIR whose spectrum fits inside the sampling band.
    RaisedCosine { rolloff: f64 },
}

/// Radar timing and bandwidth parameters together with the derived sample grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveformParams {
    carrier_freq_hz: f64,
    bandwidth_hz: f64,
    pri_s: f64,
    cpi_s: f64,
    sample_period_s: f64,
    samples_per_pri: usize,
    packets_per_cpi: usize,
    code_length: usize,
    amplitude: f64,
    pulse_shape: PulseShape,
}

impl WaveformParams {
    /// 60 GHz, 1.76 GHz bandwidth, 2 µs PRI, 4 ms CPI (Q = 3520, P = 2000).
    pub fn table1() -> Self {
        Self::new(60e9, 1.76e9, 2e-6, 4e-3).expect("table1 parameters are valid")
    }

    /// The `table1` radar with a 128 µs CPI (P = 64), small enough for quick runs.
    pub fn ci() -> Self {
        Self::new(60e9, 1.76e9, 2e-6, 128e-6).expect("ci parameters are valid")
    }

    /// Derives `T_s = 1/BW`, `Q = round(T_pri/T_s)` and `P = round(T_CPI/T_pri)`.
    /// Code length defaults to `min(512, Q)`, amplitude to 1.
    pub fn new(carrier_freq_hz: f64, bandwidth_hz: f64, pri_s: f64, cpi_s: f64) -> Result<Self> {
        for (name, v) in [
            ("carrier_freq_hz", carrier_freq_hz),
            ("bandwidth_hz", bandwidth_hz),
            ("pri_s", pri_s),
            ("cpi_s", cpi_s),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Parameter(format!("{name} must be positive, got {v}")));
            }
        }
        let sample_period_s = 1.0 / bandwidth_hz;
        let samples_per_pri = (pri_s / sample_period_s).round() as usize;
        let packets_per_cpi = (cpi_s / pri_s).round() as usize;
        if samples_per_pri == 0 {
            return Err(Error::Parameter("PRI shorter than one sample".into()));
        }
        if packets_per_cpi == 0 {
            return Err(Error::Parameter("CPI shorter than one PRI".into()));
        }
        Ok(Self {
            carrier_freq_hz,
            bandwidth_hz,
            pri_s,
            cpi_s,
            sample_period_s,
            samples_per_pri,
            packets_per_cpi,
            code_length: samples_per_pri.min(512),
            amplitude: 1.0,
            pulse_shape: PulseShape::Identity,
        })
    }

    pub fn with_code_length(mut self, n: usize) -> Result<Self> {
        if n == 0 || n > self.samples_per_pri {
            return Err(Error::Parameter(format!(
                "code_length {n} must be in 1..={}",
                self.samples_per_pri
            )));
        }
        self.code_length = n;
        Ok(self)
    }

    pub fn with_amplitude(mut self, amplitude: f64) -> Result<Self> {
        if !(amplitude.is_finite() && amplitude > 0.0) {
            return Err(Error::Parameter(format!("amplitude must be positive, got {amplitude}")));
        }
        self.amplitude = amplitude;
        Ok(self)
    }

    pub fn with_pulse_shape(mut self, shape: PulseShape) -> Result<Self> {
        if let PulseShape::RaisedCosine { rolloff } = shape {
            if !(rolloff > 0.0 && rolloff <= 1.0) {
                return Err(Error::Parameter(format!("rolloff must be in (0, 1], got {rolloff}")));
            }
        }
        self.pulse_shape = shape;
        Ok(self)
    }

    pub fn carrier_freq_hz(&self) -> f64 {
        self.carrier_freq_hz
    }
    pub fn bandwidth_hz(&self) -> f64 {
        self.bandwidth_hz
    }
    pub fn pri_s(&self) -> f64 {
        self.pri_s
    }
    /// CPI as requested; the processed interval is `P·T_pri`.
    pub fn cpi_s(&self) -> f64 {
        self.cpi_s
    }
    pub fn sample_period_s(&self) -> f64 {
        self.sample_period_s
    }
    /// Q, fast-time samples per PRI.
    pub fn samples_per_pri(&self) -> usize {
        self.samples_per_pri
    }
    /// P, packets per CPI.
    pub fn packets_per_cpi(&self) -> usize {
        self.packets_per_cpi
    }
    /// N, active chips per pulse.
    pub fn code_length(&self) -> usize {
        self.code_length
    }
    /// √A_s.
    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }
    pub fn pulse_shape(&self) -> PulseShape {
        self.pulse_shape
    }

    pub fn wavelength_m(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_freq_hz
    }

    /// `c/(2·BW)`, equal to the range-bin spacing `c·T_s/2`.
    pub fn range_resolution_m(&self) -> f64 {
        SPEED_OF_LIGHT / (2.0 * self.bandwidth_hz)
    }

    pub fn range_bin_m(&self) -> f64 {
        SPEED_OF_LIGHT * self.sample_period_s / 2.0
    }

    /// `λ/(4·T_pri)`, the velocity at `f_D = 1/(2·T_pri)`.
    pub fn max_unambiguous_velocity_mps(&self) -> f64 {
        self.wavelength_m() / (4.0 * self.pri_s)
    }

    /// `λ/(2·P·T_pri)`.
    pub fn velocity_resolution_mps(&self) -> f64 {
        self.wavelength_m() / (2.0 * self.packets_per_cpi as f64 * self.pri_s)
    }

    /// `1/(2·T_pri)`.
    pub fn max_doppler_hz(&self) -> f64 {
        1.0 / (2.0 * self.pri_s)
    }

    /// `c·N·T_s/2`: the range at which the echo start leaves the first code length of the PRI.
    pub fn max_range_listening_m(&self) -> f64 {
        SPEED_OF_LIGHT * self.code_length as f64 * self.sample_period_s / 2.0
    }

    /// `c·Q·T_s/2`: the full PRI.
    pub fn max_range_pri_m(&self) -> f64 {
        SPEED_OF_LIGHT * self.samples_per_pri as f64 * self.sample_period_s / 2.0
    }

    pub fn doppler_hz(&self, radial_velocity_mps: f64) -> f64 {
        2.0 * radial_velocity_mps / self.wavelength_m()
    }
}

/// Which waveform a frame carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FrameLabel {
    Fmcw,
    Pmcw,
    GolayA,
    GolayB,
}

/// One PRI of transmit samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub samples: Vec<C64>,
    pub label: FrameLabel,
}

impl Frame {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn max_magnitude(&self) -> f64 {
        self.samples.iter().map(|s| s.norm()).fold(0.0, f64::max)
    }
}

/// Linear chirp over the active window, sweeping `0 → BW` in `N·T_s`.
///
/// Phase is `π·(BW/T_chirp)·(q·T_s)²`, which with `BW·T_s = 1` reduces to `π·q²/N`.
pub fn generate_fmcw(params: &WaveformParams) -> Frame {
    let n = params.code_length;
    let t_chirp = n as f64 * params.sample_period_s;
    let slope = params.bandwidth_hz / t_chirp;
    let chips: Vec<C64> = (0..n)
        .map(|q| {
            let t = q as f64 * params.sample_period_s;
            C64::from_polar(1.0, PI * slope * t * t)
        })
        .collect();
    finish_frame(params, chips, FrameLabel::Fmcw)
}

/// Seeded random binary chips, DBPSK-encoded.
pub fn generate_pmcw(params: &WaveformParams, seed: u64) -> Frame {
    let chips = pmcw_chips(params.code_length, seed);
    generate_pmcw_from_chips(params, &chips)
}

/// The binary chip sequence `c ∈ {0,1}^N` drawn for `seed`.
pub fn pmcw_chips(n: usize, seed: u64) -> Vec<bool> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random::<bool>()).collect()
}

/// Differential encoding: `d[0] = +1`, `d[k] = d[k−1]·(−1)^{c[k]}`.
pub fn dpsk_encode(chips: &[bool]) -> Vec<i8> {
    let mut out = Vec::with_capacity(chips.len());
    let mut d: i8 = 1;
    for (k, &c) in chips.iter().enumerate() {
        if k > 0 && c {
            d = -d;
        }
        out.push(d);
    }
    out
}

pub fn generate_pmcw_from_chips(params: &WaveformParams, chips: &[bool]) -> Frame {
    let symbols = dpsk_encode(&chips[..chips.len().min(params.code_length)]);
    finish_frame(params, binary_chips(&symbols), FrameLabel::Pmcw)
}

/// Frame carrying a ±1 code (one Golay member, for instance).
pub fn binary_frame(params: &WaveformParams, code: &[i8], label: FrameLabel) -> Result<Frame> {
    if code.len() > params.samples_per_pri {
        return Err(Error::Parameter(format!(
            "code of length {} does not fit a {}-sample PRI",
            code.len(),
            params.samples_per_pri
        )));
    }
    Ok(finish_frame(params, binary_chips(code), label))
}

fn binary_chips(code: &[i8]) -> Vec<C64> {
    code.iter().map(|&c| C64::new(f64::from(c), 0.0)).collect()
}

fn finish_frame(params: &WaveformParams, chips: Vec<C64>, label: FrameLabel) -> Frame {
    let q = params.samples_per_pri;
    let mut samples = chips;
    samples.resize(q, C64::new(0.0, 0.0));
    if let PulseShape::RaisedCosine { rolloff } = params.pulse_shape {
        samples = raised_cosine_filter(&samples, rolloff);
    }
    let scale = params.amplitude;
    for s in &mut samples {
        *s *= scale;
    }
    Frame { samples, label }
}

const RC_SPAN_SYMBOLS: f64 = 8.0;

/// Raised-cosine impulse response with symbol period `1 + rolloff` samples, so the
/// occupied band `(1+β)/(2T)` equals the Nyquist band. Output is truncated to the
/// input length and rescaled to unit peak magnitude.
fn raised_cosine_filter(x: &[C64], rolloff: f64) -> Vec<C64> {
    let period = 1.0 + rolloff;
    let half = (RC_SPAN_SYMBOLS * period).ceil() as isize;
    let taps: Vec<f64> = (-half..=half)
        .map(|n| raised_cosine(n as f64 / period, rolloff))
        .collect();
    let len = x.len() as isize;
    let mut y = vec![C64::new(0.0, 0.0); x.len()];
    for (i, out) in y.iter_mut().enumerate() {
        let mut acc = C64::new(0.0, 0.0);
        for (t, &h) in taps.iter().enumerate() {
            let j = i as isize - (t as isize - half);
            if (0..len).contains(&j) {
                acc += x[j as usize] * h;
            }
        }
        *out = acc;
    }
    let peak = y.iter().map(|s| s.norm()).fold(0.0, f64::max);
    if peak > 0.0 {
        for s in &mut y {
            *s /= peak;
        }
    }
    y
}

fn raised_cosine(t: f64, beta: f64) -> f64 {
    let sinc = |x: f64| if x == 0.0 { 1.0 } else { (PI * x).sin() / (PI * x) };
    let denom = 1.0 - (2.0 * beta * t).powi(2);
    if denom.abs() < 1e-12 {
        PI / 4.0 * sinc(1.0 / (2.0 * beta))
    } else {
        sinc(t) * (PI * beta * t).cos() / denom
    }
}

/// How frames are assigned to packets across the CPI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ScheduleKind {
    Fmcw,
    Pmcw,
    /// Golay pair sent as the conventional alternating train `a, b, a, b, …`.
    GolayStandard,
    /// Golay pair ordered by the PTM sequence: `a` where the bit is 0, `b` where it is 1.
    GolayDopplerResilient,
}

impl ScheduleKind {
    pub const ALL: [ScheduleKind; 4] = [
        ScheduleKind::Fmcw,
        ScheduleKind::Pmcw,
        ScheduleKind::GolayStandard,
        ScheduleKind::GolayDopplerResilient,
    ];

    /// Short name used in config files and artifact names.
    pub fn name(self) -> &'static str {
        match self {
            ScheduleKind::Fmcw => "fmcw",
            ScheduleKind::Pmcw => "pmcw",
            ScheduleKind::GolayStandard => "golay",
            ScheduleKind::GolayDopplerResilient => "golay-dr",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }
}

/// The per-packet sequence of frames over one CPI.
///
/// Distinct frames are stored once; `frame(p)` resolves the frame sent in packet `p`,
/// which is also the reference the receiver correlates packet `p` against.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSchedule {
    pub kind: ScheduleKind,
    frames: Vec<Frame>,
    packet_frame: Vec<usize>,
}

impl FrameSchedule {
    pub fn new(kind: ScheduleKind, frames: Vec<Frame>, packet_frame: Vec<usize>) -> Result<Self> {
        if let Some(&bad) = packet_frame.iter().find(|&&i| i >= frames.len()) {
            return Err(Error::Parameter(format!("packet references missing frame {bad}")));
        }
        if let Some(first) = frames.first() {
            if frames.iter().any(|f| f.len() != first.len()) {
                return Err(Error::Parameter("frames differ in length".into()));
            }
        }
        Ok(Self {
            kind,
            frames,
            packet_frame,
        })
    }

    /// Number of packets, P.
    pub fn len(&self) -> usize {
        self.packet_frame.len()
    }

    pub fn is_empty(&self) -> bool {
        self.packet_frame.is_empty()
    }

    pub fn frame(&self, p: usize) -> &Frame {
        &self.frames[self.packet_frame[p]]
    }

    pub fn frame_index(&self, p: usize) -> usize {
        self.packet_frame[p]
    }

    pub fn distinct_frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn iter(&self) -> impl Iterator<Item = &Frame> + '_ {
        self.packet_frame.iter().map(move |&i| &self.frames[i])
    }

    /// Reference sequence the receiver correlates packet `p` against.
    pub fn reference(&self, p: usize) -> &Frame {
        self.frame(p)
    }
}

/// Builds the CPI schedule. `seed` drives the PMCW chip draw and is ignored otherwise.
pub fn build_schedule(
    kind: ScheduleKind,
    params: &WaveformParams,
    seed: u64,
) -> Result<FrameSchedule> {
    let p = params.packets_per_cpi;
    match kind {
        ScheduleKind::Fmcw => FrameSchedule::new(kind, vec![generate_fmcw(params)], vec![0; p]),
        ScheduleKind::Pmcw => {
            FrameSchedule::new(kind, vec![generate_pmcw(params, seed)], vec![0; p])
        }
        ScheduleKind::GolayStandard | ScheduleKind::GolayDopplerResilient => {
            let n = params.code_length;
            if !n.is_power_of_two() || n < 2 {
                return Err(Error::Parameter(format!(
                    "Golay schedules need a power-of-two code length, got {n}"
                )));
            }
            let pair = golay_pair(n.trailing_zeros())?;
            let frames = vec![
                binary_frame(params, &pair.a, FrameLabel::GolayA)?,
                binary_frame(params, &pair.b, FrameLabel::GolayB)?,
            ];
            let order: Vec<usize> = if kind == ScheduleKind::GolayStandard {
                (0..p).map(|i| i % 2).collect()
            } else {
                (0..p).map(|i| usize::from(ptm_bit(i))).collect()
            };
            FrameSchedule::new(kind, frames, order)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> WaveformParams {
        WaveformParams::new(60e9, 1.76e9, 2e-6, 8e-6).unwrap()
    }

    #[test]
    fn table1_derived_grid() {
        let p = WaveformParams::table1();
        assert_eq!(p.samples_per_pri(), 3520);
        assert_eq!(p.packets_per_cpi(), 2000);
        assert_eq!(p.code_length(), 512);
        assert!((p.sample_period_s() * p.samples_per_pri() as f64 - p.pri_s()).abs() < p.sample_period_s());
        // 512 chips at 1/1.76 GHz
        assert!((p.code_length() as f64 * p.sample_period_s() - 290.909e-9).abs() < 1e-12);
    }

    #[test]
    fn invalid_params_are_rejected() {
        assert!(WaveformParams::new(60e9, -1.0, 2e-6, 4e-3).is_err());
        assert!(WaveformParams::new(60e9, 1.76e9, 0.0, 4e-3).is_err());
        assert!(WaveformParams::ci().with_code_length(4000).is_err());
        assert!(WaveformParams::ci().with_amplitude(0.0).is_err());
    }

    #[test]
    fn fmcw_starts_at_zero_phase() {
        let params = small().with_amplitude(2.0).unwrap();
        let f = generate_fmcw(&params);
        assert_eq!(f.samples[0], C64::new(2.0, 0.0));
        assert_eq!(f.len(), params.samples_per_pri());
        assert!(f.samples[512..].iter().all(|s| *s == C64::new(0.0, 0.0)));
        for s in &f.samples[..512] {
            assert!((s.norm() - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn fmcw_sweeps_full_band() {
        // finite difference of the unwrapped phase at the last active sample
        let params = small();
        let f = generate_fmcw(&params);
        let n = params.code_length();
        let mut unwrapped = vec![f.samples[0].arg()];
        for q in 1..n {
            let mut d = f.samples[q].arg() - f.samples[q - 1].arg();
            // instantaneous frequency rises through [0, BW): increments live in [0, 2π)
            d = d.rem_euclid(2.0 * PI);
            unwrapped.push(unwrapped[q - 1] + d);
        }
        let last = unwrapped[n - 1] - unwrapped[n - 2];
        let target = 2.0 * PI * params.bandwidth_hz() * params.sample_period_s();
        assert!((last - target).abs() / target < 0.01, "{last} vs {target}");
    }

    #[test]
    fn dpsk_of_zeros_is_constant() {
        let params = small();
        let f = generate_pmcw_from_chips(&params, &vec![false; 512]);
        assert!(f.samples[..512].iter().all(|s| *s == C64::new(1.0, 0.0)));
    }

    #[test]
    fn dpsk_rule_holds() {
        let chips: Vec<bool> = (0..64).map(|k| k % 2 == 1).collect();
        let d = dpsk_encode(&chips);
        assert_eq!(d[0], 1);
        for k in 1..d.len() {
            let expect = if chips[k] { -1 } else { 1 };
            assert_eq!(d[k] * d[k - 1], expect);
        }
    }

    #[test]
    fn pmcw_seed_7_has_peak_n() {
        let params = WaveformParams::ci();
        let f = generate_pmcw(&params, 7);
        let code: Vec<i8> = f.samples[..512].iter().map(|s| s.re as i8).collect();
        assert!(f.samples[..512].iter().all(|s| s.norm() == 1.0));
        let r = aperiodic_autocorrelation(&code);
        assert_eq!(r[0], 512);
        assert!(r[1..].iter().all(|&x| x.abs() < 512));
    }

    #[test]
    fn schedules() {
        let params = WaveformParams::new(60e9, 1.76e9, 2e-6, 8e-6).unwrap();
        assert_eq!(params.packets_per_cpi(), 4);
        let dr = build_schedule(ScheduleKind::GolayDopplerResilient, &params, 0).unwrap();
        let labels: Vec<_> = dr.iter().map(|f| f.label).collect();
        use FrameLabel::*;
        assert_eq!(labels, vec![GolayA, GolayB, GolayB, GolayA]);
        let std = build_schedule(ScheduleKind::GolayStandard, &params, 0).unwrap();
        let labels: Vec<_> = std.iter().map(|f| f.label).collect();
        assert_eq!(labels, vec![GolayA, GolayB, GolayA, GolayB]);
        let a = build_schedule(ScheduleKind::Pmcw, &params, 11).unwrap();
        let b = build_schedule(ScheduleKind::Pmcw, &params, 11).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 4);
        let fm = build_schedule(ScheduleKind::Fmcw, &params, 0).unwrap();
        assert!(fm.iter().all(|f| f == fm.frame(0)));
    }

    #[test]
    fn golay_needs_power_of_two() {
        let params = WaveformParams::ci().with_code_length(500).unwrap();
        assert!(build_schedule(ScheduleKind::GolayStandard, &params, 0).is_err());
        assert!(build_schedule(ScheduleKind::Pmcw, &params, 0).is_ok());
    }

    #[test]
    fn raised_cosine_respects_amplitude() {
        let params = small()
            .with_amplitude(0.5)
            .unwrap()
            .with_pulse_shape(PulseShape::RaisedCosine { rolloff: 0.25 })
            .unwrap();
        for kind in ScheduleKind::ALL {
            let s = build_schedule(kind, &params, 3).unwrap();
            for f in s.distinct_frames() {
                assert!(f.max_magnitude() <= 0.5 + 1e-12);
                assert_eq!(f.len(), params.samples_per_pri());
            }
        }
    }
}
