//! Brute-force time-domain matched filter, kept deliberately slow as a reference.

use rayon::prelude::*;

use super::{reference_samples, steering_vector, DopplerGrid, RangeDopplerMap};
use crate::error::{Error, Result};
use crate::scene::DataCube;
use crate::waveform::FrameSchedule;
use crate::C64;

/// Upper bound on `Q·P·J` accepted by [`time_domain_oracle`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleLimits {
    pub max_work: u64,
}

impl Default for OracleLimits {
    fn default() -> Self {
        Self { max_work: 1 << 24 }
    }
}

impl OracleLimits {
    pub fn admits(&self, q: usize, p: usize, j: usize) -> bool {
        (q as u64) * (p as u64) * (j as u64) <= self.max_work
    }
}

/// Direct circular cross-correlation of every packet with its reference, then a
/// Doppler-steered coherent sum over packets.
pub fn time_domain_oracle(
    cube: &DataCube,
    schedule: &FrameSchedule,
    grid: &DopplerGrid,
    limits: OracleLimits,
) -> Result<RangeDopplerMap> {
    let q = cube.fast_len();
    let packets = cube.slow_len();
    if !limits.admits(q, packets, grid.len()) {
        return Err(Error::OracleRefused {
            work: (q * packets * grid.len()) as u64,
            limit: limits.max_work,
        });
    }
    if schedule.len() != packets || schedule.frame(0).len() != q {
        return Err(Error::Processing("schedule does not match the cube".into()));
    }
    if grid.is_empty() {
        return Err(Error::Processing("empty Doppler grid".into()));
    }

    // only the nonzero reference taps matter
    let refs: Vec<Vec<(usize, C64)>> = schedule
        .distinct_frames()
        .iter()
        .map(|f| {
            reference_samples(f)
                .into_iter()
                .enumerate()
                .filter(|(_, v)| v.norm_sqr() > 0.0)
                .map(|(n, v)| (n, v.conj()))
                .collect()
        })
        .collect();

    // c_p[k] = Σ_n x_p[(n + k) mod Q] · conj(s_p[n])
    let mut corr = vec![C64::new(0.0, 0.0); q * packets];
    corr.par_chunks_mut(q).enumerate().for_each(|(p, out)| {
        let x = cube.packet(p);
        let taps = &refs[schedule.frame_index(p)];
        for (k, o) in out.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for &(n, s) in taps {
                acc += x[(n + k) % q] * s;
            }
            *o = acc;
        }
    });

    let pri = cube.params.pri_s();
    let mut values = vec![0.0; q * grid.len()];
    values
        .par_chunks_mut(q)
        .zip(grid.frequencies_hz.par_iter())
        .for_each(|(row, &f)| {
            let w = steering_vector(f, packets, pri);
            for (k, out) in row.iter_mut().enumerate() {
                let mut acc = C64::new(0.0, 0.0);
                for (p, wp) in w.iter().enumerate() {
                    acc += corr[p * q + k] * wp;
                }
                *out = acc.norm();
            }
        });
    Ok(RangeDopplerMap::from_rows(&cube.params, grid, values))
}
