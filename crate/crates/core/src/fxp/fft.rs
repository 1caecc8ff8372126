//! Mixed-radix Stockham FFT with quantized twiddles and block-floating-point
//! requantization after every stage.

use std::f64::consts::PI;

use super::format::FixedPointFormat;
use crate::C64;

#[derive(Debug, Clone)]
struct Stage {
    radix: usize,
    /// Elements already combined (`l`).
    stride: usize,
    /// Butterflies per stride slot (`m = n / (l·r)`).
    span: usize,
    /// `w^{j·p}` for `j < span`, `p < radix`, laid out `j·radix + p`.
    twiddles: Vec<C64>,
    /// `ω_r^{t·p}` for the radix-`r` DFT, laid out `p·radix + t`.
    kernel: Vec<C64>,
}

/// Fixed-point FFT of one length, forward or inverse (unnormalized either way).
#[derive(Debug, Clone)]
pub struct FixedFft {
    len: usize,
    inverse: bool,
    format: FixedPointFormat,
    stages: Vec<Stage>,
}

fn factorize(mut n: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut f = 2;
    while n > 1 {
        while n.is_multiple_of(f) {
            out.push(f);
            n /= f;
        }
        f += 1;
        if f * f > n && n > 1 {
            out.push(n);
            break;
        }
    }
    out
}

fn snap_unit(v: C64, fmt: &FixedPointFormat) -> C64 {
    let (r, _) = fmt.quantize_component(v.re, 1.0);
    let (i, _) = fmt.quantize_component(v.im, 1.0);
    C64::new(fmt.dequantize_component(r, 1.0), fmt.dequantize_component(i, 1.0))
}

impl FixedFft {
    /// Twiddles are stored with at least two integer bits so that `±1` is exact.
    pub fn new(len: usize, inverse: bool, format: FixedPointFormat) -> Self {
        let tw_fmt = FixedPointFormat::new(
            format.word_bits(),
            format.integer_bits().max(2).min(format.word_bits()),
        )
        .expect("twiddle format is valid whenever the data format is");
        let sign = if inverse { 1.0 } else { -1.0 };
        let mut stages = Vec::new();
        let mut stride = 1;
        let mut ns = len;
        for radix in factorize(len) {
            let span = ns / radix;
            let twiddles = (0..span)
                .flat_map(|j| {
                    (0..radix).map(move |p| {
                        C64::from_polar(1.0, sign * 2.0 * PI * (j * p) as f64 / ns as f64)
                    })
                })
                .map(|w| snap_unit(w, &tw_fmt))
                .collect();
            let kernel = (0..radix)
                .flat_map(|p| {
                    (0..radix).map(move |t| {
                        C64::from_polar(1.0, sign * 2.0 * PI * ((t * p) % radix) as f64 / radix as f64)
                    })
                })
                .map(|w| snap_unit(w, &tw_fmt))
                .collect();
            stages.push(Stage {
                radix,
                stride,
                span,
                twiddles,
                kernel,
            });
            stride *= radix;
            ns = span;
        }
        Self {
            len,
            inverse,
            format,
            stages,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn is_inverse(&self) -> bool {
        self.inverse
    }

    pub fn format(&self) -> FixedPointFormat {
        self.format
    }

    /// Transforms `buf` in place. `buf` is expected to already sit on the format grid;
    /// each stage output is rescaled by a power of two and snapped back onto it.
    pub fn process(&self, buf: &mut [C64]) {
        assert_eq!(buf.len(), self.len, "FixedFft length mismatch");
        let mut src = buf.to_vec();
        let mut dst = vec![C64::new(0.0, 0.0); self.len];
        let mut a = vec![C64::new(0.0, 0.0); self.stages.iter().map(|s| s.radix).max().unwrap_or(1)];
        for st in &self.stages {
            let (r, l, m) = (st.radix, st.stride, st.span);
            for j in 0..m {
                for k in 0..l {
                    for (t, at) in a.iter_mut().enumerate().take(r) {
                        *at = src[k + l * (j + m * t)];
                    }
                    for p in 0..r {
                        let y = if r == 2 {
                            if p == 0 {
                                a[0] + a[1]
                            } else {
                                a[0] - a[1]
                            }
                        } else {
                            let ker = &st.kernel[p * r..(p + 1) * r];
                            a[..r].iter().zip(ker).map(|(x, w)| x * w).sum()
                        };
                        let w = st.twiddles[j * r + p];
                        dst[k + l * (r * j + p)] = if j == 0 || p == 0 { y } else { y * w };
                    }
                }
            }
            block_snap(&mut dst, &self.format);
            std::mem::swap(&mut src, &mut dst);
        }
        buf.copy_from_slice(&src);
    }
}

/// Rescales `buf` by the tightest power of two and rounds onto the format grid.
pub(crate) fn block_snap(buf: &mut [C64], format: &FixedPointFormat) -> usize {
    let m = buf.iter().map(|v| v.re.abs().max(v.im.abs())).fold(0.0, f64::max);
    let scale = format.block_scale(m);
    snap_scaled(buf, format, scale)
}

pub(crate) fn snap_scaled(buf: &mut [C64], format: &FixedPointFormat, scale: f64) -> usize {
    let mut sat = 0;
    for v in buf.iter_mut() {
        let (r, sr) = format.quantize_component(v.re, scale);
        let (i, si) = format.quantize_component(v.im, scale);
        sat += usize::from(sr) + usize::from(si);
        *v = C64::new(
            format.dequantize_component(r, scale),
            format.dequantize_component(i, scale),
        );
    }
    sat
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rustfft::FftPlanner;

    fn random(n: usize, seed: u64) -> Vec<C64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| C64::new(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)))
            .collect()
    }

    fn rel_err(a: &[C64], b: &[C64]) -> f64 {
        let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
        let den: f64 = b.iter().map(|y| y.norm_sqr()).sum();
        (num / den).sqrt()
    }

    #[test]
    fn factors() {
        assert_eq!(factorize(3520), vec![2, 2, 2, 2, 2, 2, 5, 11]);
        assert_eq!(factorize(2000), vec![2, 2, 2, 2, 5, 5, 5]);
        assert_eq!(factorize(13), vec![13]);
        assert_eq!(factorize(1), Vec::<usize>::new());
    }

    #[test]
    fn wide_format_matches_rustfft() {
        let fmt = FixedPointFormat::new(64, 2).unwrap();
        for &(n, inverse) in &[(64usize, false), (3520, false), (2000, true), (45, true), (7, false)] {
            let x = random(n, n as u64);
            let mut ours = x.clone();
            FixedFft::new(n, inverse, fmt).process(&mut ours);
            let mut reference = x;
            let mut planner = FftPlanner::new();
            let plan = if inverse {
                planner.plan_fft_inverse(n)
            } else {
                planner.plan_fft_forward(n)
            };
            plan.process(&mut reference);
            assert!(rel_err(&ours, &reference) < 1e-12, "n = {n}");
        }
    }

    #[test]
    fn error_shrinks_with_word_length() {
        let x = random(3520, 1);
        let mut reference = x.clone();
        FftPlanner::new().plan_fft_forward(3520).process(&mut reference);
        let mut prev = f64::INFINITY;
        for w in [12, 16, 24, 32] {
            let fmt = FixedPointFormat::new(w, 1).unwrap();
            let mut ours = x.clone();
            block_snap(&mut ours, &fmt);
            FixedFft::new(3520, false, fmt).process(&mut ours);
            let e = rel_err(&ours, &reference);
            assert!(e < prev, "W = {w}: {e} vs {prev}");
            // a handful of LSBs of noise per stage at most
            assert!(e < 64.0 * 2f64.powi(1 - w as i32), "W = {w}: {e}");
            prev = e;
        }
    }

    #[test]
    fn impulse_gives_flat_spectrum() {
        let fmt = FixedPointFormat::new(16, 1).unwrap();
        let mut x = vec![C64::new(0.0, 0.0); 3520];
        x[0] = C64::new(0.5, 0.0);
        FixedFft::new(3520, false, fmt).process(&mut x);
        assert!(x.iter().all(|v| *v == C64::new(0.5, 0.0)));
    }
}
