//! Binary Golay complementary pairs.

use crate::error::{Error, Result};

/// Two ±1 sequences whose aperiodic autocorrelations sum to `2N·δ[k]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GolayPair {
    pub a: Vec<i8>,
    pub b: Vec<i8>,
}

impl GolayPair {
    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    /// Checks `R_a[k] + R_b[k] = 2N·δ[k]` exactly.
    pub fn is_complementary(&self) -> bool {
        let n = self.a.len() as i64;
        if self.b.len() != self.a.len() {
            return false;
        }
        let ra = aperiodic_autocorrelation(&self.a);
        let rb = aperiodic_autocorrelation(&self.b);
        ra.iter()
            .zip(&rb)
            .enumerate()
            .all(|(k, (x, y))| x + y == if k == 0 { 2 * n } else { 0 })
    }
}

/// Builds a pair of length `2^n_log2` by recursive doubling from `a = b = [+1]`:
/// `a' = a‖b`, `b' = a‖−b`.
pub fn golay_pair(n_log2: u32) -> Result<GolayPair> {
    if !(1..=16).contains(&n_log2) {
        return Err(Error::Parameter(format!(
            "golay n_log2 must be in 1..=16, got {n_log2}"
        )));
    }
    let mut a: Vec<i8> = vec![1];
    let mut b: Vec<i8> = vec![1];
    for _ in 0..n_log2 {
        let mut na = Vec::with_capacity(a.len() * 2);
        na.extend_from_slice(&a);
        na.extend_from_slice(&b);
        let mut nb = Vec::with_capacity(a.len() * 2);
        nb.extend_from_slice(&a);
        nb.extend(b.iter().map(|&x| -x));
        a = na;
        b = nb;
    }
    Ok(GolayPair { a, b })
}

/// Aperiodic autocorrelation `R[k] = Σ x[n]·x[n+k]` for lags `0..N`.
pub fn aperiodic_autocorrelation(x: &[i8]) -> Vec<i64> {
    let n = x.len();
    (0..n)
        .map(|k| {
            x[..n - k]
                .iter()
                .zip(&x[k..])
                .map(|(&u, &v)| i64::from(u) * i64::from(v))
                .sum()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_doubling_step() {
        let p = golay_pair(1).unwrap();
        assert_eq!(p.a, vec![1, 1]);
        assert_eq!(p.b, vec![1, -1]);
    }

    #[test]
    fn length_512_pair_sums_to_delta() {
        let p = golay_pair(9).unwrap();
        assert_eq!(p.len(), 512);
        let ra = aperiodic_autocorrelation(&p.a);
        let rb = aperiodic_autocorrelation(&p.b);
        assert_eq!(ra[0] + rb[0], 1024);
        for k in 1..512 {
            assert_eq!(ra[k] + rb[k], 0, "lag {k}");
            assert_eq!(ra[k], -rb[k]);
        }
    }

    #[test]
    fn out_of_range_sizes_are_rejected() {
        assert!(matches!(golay_pair(0), Err(Error::Parameter(_))));
        assert!(matches!(golay_pair(17), Err(Error::Parameter(_))));
    }

    #[test]
    fn complementarity_all_sizes() {
        // lag-by-lag check is quadratic; 2^14..2^16 are covered spectrally below
        for n in 1..=13 {
            assert!(golay_pair(n).unwrap().is_complementary(), "n_log2={n}");
        }
    }

    #[test]
    fn complementarity_large_sizes_via_spectrum() {
        // |A(f)|² + |B(f)|² = 2N on every FFT bin of length ≥ 2N is equivalent to the
        // autocorrelation identity; integer-valued so a tolerance of 1e-6 is exact enough.
        use rustfft::{num_complex::Complex, FftPlanner};
        for n_log2 in 14..=16 {
            let p = golay_pair(n_log2).unwrap();
            let n = p.len();
            let m = 2 * n;
            let fft = FftPlanner::<f64>::new().plan_fft_forward(m);
            let spec = |x: &[i8]| {
                let mut buf: Vec<Complex<f64>> = x
                    .iter()
                    .map(|&v| Complex::new(f64::from(v), 0.0))
                    .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
                    .take(m)
                    .collect();
                fft.process(&mut buf);
                buf
            };
            let (sa, sb) = (spec(&p.a), spec(&p.b));
            for (x, y) in sa.iter().zip(&sb) {
                assert!((x.norm_sqr() + y.norm_sqr() - 2.0 * n as f64).abs() < 1e-6);
            }
        }
    }
}
