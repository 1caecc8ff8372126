use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::waveform::WaveformParams;

/// Doppler hypotheses `f_j` searched by the steering stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DopplerGrid {
    pub frequencies_hz: Vec<f64>,
    pub spacing_hz: f64,
}

impl DopplerGrid {
    /// `J = P` bins at `Δf = 1/(P·T_pri)` starting from `−f_max`; bin `⌊P/2⌋` is zero Doppler.
    pub fn fft(params: &WaveformParams) -> Self {
        let p = params.packets_per_cpi();
        let df = 1.0 / (p as f64 * params.pri_s());
        let centre = (p / 2) as f64;
        Self {
            frequencies_hz: (0..p).map(|j| (j as f64 - centre) * df).collect(),
            spacing_hz: df,
        }
    }

    /// `bins` points spanning `[−f_max, +f_max]` inclusive.
    pub fn uniform(params: &WaveformParams, bins: usize) -> Result<Self> {
        if bins < 2 {
            return Err(Error::Parameter(format!("Doppler grid needs ≥ 2 bins, got {bins}")));
        }
        let f_max = params.max_doppler_hz();
        let df = 2.0 * f_max / (bins - 1) as f64;
        let mid = (bins - 1) as f64 / 2.0;
        Ok(Self {
            frequencies_hz: (0..bins).map(|j| (j as f64 - mid) * df).collect(),
            spacing_hz: df,
        })
    }

    pub fn len(&self) -> usize {
        self.frequencies_hz.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies_hz.is_empty()
    }

    /// True when the grid is exactly [`DopplerGrid::fft`] for these parameters, which lets
    /// the steering stage run as a slow-time FFT.
    pub fn is_fft_aligned(&self, params: &WaveformParams) -> bool {
        *self == Self::fft(params)
    }

    pub fn nearest_bin(&self, f_hz: f64) -> usize {
        let mut best = 0;
        for (j, f) in self.frequencies_hz.iter().enumerate() {
            if (f - f_hz).abs() < (self.frequencies_hz[best] - f_hz).abs() {
                best = j;
            }
        }
        best
    }
}
