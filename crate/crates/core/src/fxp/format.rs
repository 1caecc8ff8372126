use std::fmt;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::scene::DataCube;
use crate::C64;

/// Two's-complement `⟨W, I⟩`: `W` bits in total, `I` integer bits including the sign.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FixedPointFormat {
    word_bits: u32,
    integer_bits: u32,
}

impl FixedPointFormat {
    pub fn new(word_bits: u32, integer_bits: u32) -> Result<Self> {
        if !(2..=64).contains(&word_bits) {
            return Err(Error::Parameter(format!("word length must be in 2..=64, got {word_bits}")));
        }
        if !(1..=word_bits).contains(&integer_bits) {
            return Err(Error::Parameter(format!(
                "integer bits must be in 1..={word_bits}, got {integer_bits}"
            )));
        }
        Ok(Self {
            word_bits,
            integer_bits,
        })
    }

    pub fn word_bits(&self) -> u32 {
        self.word_bits
    }

    pub fn integer_bits(&self) -> u32 {
        self.integer_bits
    }

    pub fn fraction_bits(&self) -> u32 {
        self.word_bits - self.integer_bits
    }

    /// `2^{−(W−I)}`.
    pub fn step(&self) -> f64 {
        2f64.powi(-(self.fraction_bits() as i32))
    }

    /// `2^{I−1} − 2^{−(W−I)}`.
    pub fn max_value(&self) -> f64 {
        2f64.powi(self.integer_bits as i32 - 1) - self.step()
    }

    /// `−2^{I−1}`.
    pub fn min_value(&self) -> f64 {
        -(2f64.powi(self.integer_bits as i32 - 1))
    }

    pub fn max_mantissa(&self) -> i64 {
        if self.word_bits == 64 {
            i64::MAX
        } else {
            (1i64 << (self.word_bits - 1)) - 1
        }
    }

    pub fn min_mantissa(&self) -> i64 {
        if self.word_bits == 64 {
            i64::MIN
        } else {
            -(1i64 << (self.word_bits - 1))
        }
    }

    /// Parses `W:I`, `<W,I>` or `W,I`.
    pub fn parse(s: &str) -> Result<Self> {
        let t = s.trim().trim_start_matches('<').trim_end_matches('>');
        let mut it = t.split([':', ',']).map(str::trim);
        let (w, i) = match (it.next(), it.next(), it.next()) {
            (Some(w), Some(i), None) => (w, i),
            _ => return Err(Error::Parameter(format!("fixed-point format `{s}` is not W:I"))),
        };
        let w = w
            .parse()
            .map_err(|_| Error::Parameter(format!("bad word length in `{s}`")))?;
        let i = i
            .parse()
            .map_err(|_| Error::Parameter(format!("bad integer bits in `{s}`")))?;
        Self::new(w, i)
    }

    /// Rounds `x / scale` to the nearest mantissa (ties to even), saturating at the
    /// range limits. Returns the mantissa and whether it saturated.
    pub fn quantize_component(&self, x: f64, scale: f64) -> (i64, bool) {
        let y = x / scale * 2f64.powi(self.fraction_bits() as i32);
        let r = y.round_ties_even();
        let lim = 2f64.powi(self.word_bits as i32 - 1);
        if r >= lim {
            (self.max_mantissa(), true)
        } else if r < -lim {
            (self.min_mantissa(), true)
        } else {
            (r as i64, false)
        }
    }

    pub fn dequantize_component(&self, mantissa: i64, scale: f64) -> f64 {
        mantissa as f64 * self.step() * scale
    }

    /// Smallest power of two `s` with `max_abs / s ≤ max_value`.
    pub fn block_scale(&self, max_abs: f64) -> f64 {
        if !(max_abs > 0.0) {
            return 1.0;
        }
        let limit = self.max_value();
        let mut e = (max_abs / limit).log2().ceil() as i32;
        while max_abs / 2f64.powi(e) > limit {
            e += 1;
        }
        while e > i32::MIN + 1 && max_abs / 2f64.powi(e - 1) <= limit {
            e -= 1;
        }
        2f64.powi(e)
    }
}

impl fmt::Display for FixedPointFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{},{}>", self.word_bits, self.integer_bits)
    }
}

impl Serialize for FixedPointFormat {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// Pre-scaling applied before rounding.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scaling {
    /// Divide by the power of two that brings the largest component into range.
    MaxAbs,
    /// Divide by a fixed factor.
    Fixed(f64),
}

/// Quantized signal: integer mantissas for the real and imaginary parts.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedCube {
    pub re: Vec<i64>,
    pub im: Vec<i64>,
    pub fast_len: usize,
    pub slow_len: usize,
    pub format: FixedPointFormat,
    /// Real value of one unit of `step()`; values are `mantissa · step · scale`.
    pub scale: f64,
    pub saturation_count: usize,
}

impl QuantizedCube {
    pub fn dequantize(&self) -> Vec<C64> {
        self.re
            .iter()
            .zip(&self.im)
            .map(|(&r, &i)| {
                C64::new(
                    self.format.dequantize_component(r, self.scale),
                    self.format.dequantize_component(i, self.scale),
                )
            })
            .collect()
    }
}

fn check_finite(samples: &[C64]) -> Result<()> {
    if let Some(i) = samples.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
        return Err(Error::Data(format!("non-finite sample at index {i}")));
    }
    Ok(())
}

fn resolve_scale(samples: &[C64], format: &FixedPointFormat, scaling: Scaling) -> Result<f64> {
    match scaling {
        Scaling::Fixed(s) if s.is_finite() && s > 0.0 => Ok(s),
        Scaling::Fixed(s) => Err(Error::Parameter(format!("scale must be positive, got {s}"))),
        Scaling::MaxAbs => {
            let m = samples
                .iter()
                .map(|v| v.re.abs().max(v.im.abs()))
                .fold(0.0, f64::max);
            Ok(format.block_scale(m))
        }
    }
}

/// Quantizes a packet-major sample block with `fast_len` samples per packet.
pub fn quantize_samples(
    samples: &[C64],
    fast_len: usize,
    format: FixedPointFormat,
    scaling: Scaling,
) -> Result<QuantizedCube> {
    check_finite(samples)?;
    let scale = resolve_scale(samples, &format, scaling)?;
    let mut sat = 0;
    let mut re = Vec::with_capacity(samples.len());
    let mut im = Vec::with_capacity(samples.len());
    for v in samples {
        let (r, sr) = format.quantize_component(v.re, scale);
        let (i, si) = format.quantize_component(v.im, scale);
        sat += usize::from(sr) + usize::from(si);
        re.push(r);
        im.push(i);
    }
    Ok(QuantizedCube {
        re,
        im,
        fast_len,
        slow_len: if fast_len == 0 { 0 } else { samples.len() / fast_len },
        format,
        scale,
        saturation_count: sat,
    })
}

pub fn quantize(cube: &DataCube, format: FixedPointFormat, scaling: Scaling) -> Result<QuantizedCube> {
    quantize_samples(cube.samples(), cube.fast_len(), format, scaling)
}
