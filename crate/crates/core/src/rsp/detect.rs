use serde::{Deserialize, Serialize};

use super::RangeDopplerMap;
use crate::error::{Error, Result};

/// Localized peak of a range-Doppler map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub range_m: f64,
    pub velocity_mps: f64,
    pub doppler_hz: f64,
    pub peak_magnitude: f64,
    pub range_bin: usize,
    pub doppler_bin: usize,
}

/// Global maximum; ties go to the smallest range bin, then the smallest Doppler bin.
pub fn detect_peak(map: &RangeDopplerMap) -> Result<Detection> {
    if map.range_bins() == 0 || map.doppler_bins() == 0 {
        return Err(Error::Processing("empty range-Doppler map".into()));
    }
    let mut best = (0usize, 0usize);
    let mut best_v = f64::NEG_INFINITY;
    for q in 0..map.range_bins() {
        for j in 0..map.doppler_bins() {
            let v = map.value(j, q);
            if v > best_v {
                best_v = v;
                best = (q, j);
            }
        }
    }
    if best_v <= 0.0 {
        return Err(Error::NoDetection);
    }
    let (q, j) = best;
    Ok(Detection {
        range_m: map.range_axis_m[q],
        velocity_mps: map.doppler_axis_mps[j],
        doppler_hz: map.doppler_axis_hz[j],
        peak_magnitude: best_v,
        range_bin: q,
        doppler_bin: j,
    })
}

/// Peak-to-sidelobe ratio. `NoSidelobe` when everything outside the mainlobe is exactly zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Pslr {
    Db(f64),
    NoSidelobe,
}

impl Pslr {
    /// dB value, `+∞` for [`Pslr::NoSidelobe`].
    pub fn db(self) -> f64 {
        match self {
            Pslr::Db(v) => v,
            Pslr::NoSidelobe => f64::INFINITY,
        }
    }
}

impl Serialize for Pslr {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Pslr::Db(v) => s.serialize_f64(*v),
            Pslr::NoSidelobe => s.serialize_str("no_sidelobe"),
        }
    }
}

pub const DEFAULT_MAINLOBE_HALFWIDTH: usize = 2;

/// `20·log10(peak / max outside ±halfwidth bins of the peak)`.
pub fn pslr_db(profile: &[f64], mainlobe_halfwidth: usize) -> Result<Pslr> {
    if profile.len() < 2 * mainlobe_halfwidth + 1 {
        return Err(Error::Parameter(format!(
            "profile of {} bins is shorter than the {}-bin mainlobe",
            profile.len(),
            2 * mainlobe_halfwidth + 1
        )));
    }
    let (peak_idx, peak) = profile
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
    if !(peak > 0.0) {
        return Err(Error::NoDetection);
    }
    let side = profile
        .iter()
        .enumerate()
        .filter(|(i, _)| i.abs_diff(peak_idx) > mainlobe_halfwidth)
        .map(|(_, &v)| v)
        .fold(0.0, f64::max);
    if side == 0.0 {
        Ok(Pslr::NoSidelobe)
    } else {
        Ok(Pslr::Db(20.0 * (peak / side).log10()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pslr_examples() {
        assert_eq!(pslr_db(&[0.0, 0.0, 1.0, 0.0, 0.0], 1).unwrap(), Pslr::NoSidelobe);
        let v = pslr_db(&[0.1, 0.0, 1.0, 0.0, 0.1], 1).unwrap().db();
        assert!((v - 20.0).abs() < 1e-12);
        assert!(matches!(pslr_db(&[1.0, 0.5], 1), Err(Error::Parameter(_))));
        assert!(matches!(pslr_db(&[0.0; 8], 2), Err(Error::NoDetection)));
    }

    #[test]
    fn single_cell_map() {
        let mut map = RangeDopplerMap::zeros(10, 8);
        map.set(7, 3, 2.5);
        let d = detect_peak(&map).unwrap();
        assert_eq!((d.range_bin, d.doppler_bin), (3, 7));
        assert_eq!(d.peak_magnitude, 2.5);
    }

    #[test]
    fn ties_prefer_low_range_then_low_doppler() {
        let mut map = RangeDopplerMap::zeros(10, 8);
        map.set(5, 6, 1.0);
        map.set(2, 6, 1.0);
        map.set(1, 9, 1.0);
        let d = detect_peak(&map).unwrap();
        assert_eq!((d.range_bin, d.doppler_bin), (6, 2));
    }

    #[test]
    fn zero_map_has_no_detection() {
        assert_eq!(detect_peak(&RangeDopplerMap::zeros(4, 4)), Err(Error::NoDetection));
    }
}
