//! Point and extended targets, and synthesis of the received fast-time × slow-time cube.
//!
//! The access point sits at the origin. Each scatterer contributes a copy of the
//! packet's transmit frame delayed by `q_b = round(2·r_b/(c·T_s))` samples and
//! rotated by `exp(−j·4π·(r_b(p) − r_b(0))/λ)`, which for constant radial speed is
//! the familiar `exp(−j2π·f_D·p·T_pri)`. Range is frozen at its CPI-start value for
//! the delay (stop-and-hop).

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::waveform::{FrameSchedule, WaveformParams};
use crate::{C64, SPEED_OF_LIGHT};

pub type Vec3 = [f64; 3];

fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

fn add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

fn scale(a: Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointScatterer {
    pub position_m: Vec3,
    pub velocity_mps: Vec3,
    /// σ_b, linear amplitude.
    pub reflectivity: C64,
}

impl PointScatterer {
    pub fn range_m(&self) -> f64 {
        norm(self.position_m)
    }

    /// Projection of the velocity on the line of sight; positive when receding.
    pub fn radial_velocity_mps(&self) -> f64 {
        dot(self.position_m, self.velocity_mps) / self.range_m()
    }

    pub fn range_at(&self, t_s: f64) -> f64 {
        norm(add(self.position_m, scale(self.velocity_mps, t_s)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TargetKind {
    SinglePoint,
    Cluster,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetModel {
    pub kind: TargetKind,
    pub scatterers: Vec<PointScatterer>,
    pub bulk_rcs_dbsm: f64,
    pub descriptor: String,
}

impl TargetModel {
    /// One isotropic scatterer with `|σ|² = 10^{rcs/10}`.
    pub fn single_point(position_m: Vec3, velocity_mps: Vec3, rcs_dbsm: f64) -> Self {
        Self {
            kind: TargetKind::SinglePoint,
            scatterers: vec![PointScatterer {
                position_m,
                velocity_mps,
                reflectivity: C64::new(dbsm_to_amplitude(rcs_dbsm), 0.0),
            }],
            bulk_rcs_dbsm: rcs_dbsm,
            descriptor: "single point".into(),
        }
    }

    /// `Σ|σ_b|²`.
    pub fn total_power(&self) -> f64 {
        self.scatterers.iter().map(|s| s.reflectivity.norm_sqr()).sum()
    }
}

pub fn dbsm_to_amplitude(rcs_dbsm: f64) -> f64 {
    10f64.powf(rcs_dbsm / 20.0)
}

/// Line-of-sight unit vector and a horizontal unit vector perpendicular to it.
fn local_frame(center: Vec3) -> (Vec3, Vec3) {
    let r = norm(center);
    let u = scale(center, 1.0 / r);
    let h = (u[0] * u[0] + u[1] * u[1]).sqrt();
    let e = if h > 1e-12 {
        [-u[1] / h, u[0] / h, 0.0]
    } else {
        [0.0, 1.0, 0.0]
    };
    (u, e)
}

/// Uniform power split with seeded random phases.
fn split_reflectivity(count: usize, rcs_dbsm: f64, rng: &mut ChaCha8Rng) -> Vec<C64> {
    let amp = (10f64.powf(rcs_dbsm / 10.0) / count as f64).sqrt();
    (0..count)
        .map(|_| C64::from_polar(amp, rng.random_range(0.0..2.0 * PI)))
        .collect()
}

/// Synthetic walking pedestrian: 27 scatterers in a 0.5 m × 1.8 m × 0.3 m box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PedestrianSpec {
    /// Body centroid.
    pub center_m: Vec3,
    /// Bulk speed along the line of sight, positive receding.
    pub speed_mps: f64,
    pub rcs_dbsm: f64,
    /// Half-width of the uniform limb-speed perturbation.
    pub micro_motion_mps: f64,
    pub seed: u64,
}

impl Default for PedestrianSpec {
    fn default() -> Self {
        Self {
            center_m: [8.0, 6.0, 0.0],
            speed_mps: 2.0,
            rcs_dbsm: 0.0,
            micro_motion_mps: 1.0,
            seed: 0,
        }
    }
}

/// (lateral, depth, height) offsets in metres from the body centroid.
const PEDESTRIAN_LAYOUT: [(f64, f64, f64); 27] = [
    // head, neck
    (0.0, 0.0, 0.82),
    (0.0, 0.0, 0.66),
    // shoulders and torso
    (-0.2, 0.0, 0.58),
    (0.2, 0.0, 0.58),
    (0.0, 0.1, 0.45),
    (0.0, -0.1, 0.45),
    (-0.12, 0.05, 0.3),
    (0.12, -0.05, 0.3),
    (0.0, 0.12, 0.15),
    (0.0, -0.12, 0.15),
    (0.0, 0.0, 0.0),
    // arms
    (-0.25, 0.05, 0.4),
    (0.25, -0.05, 0.4),
    (-0.25, 0.1, 0.18),
    (0.25, -0.1, 0.18),
    (-0.24, 0.15, -0.02),
    (0.24, -0.15, -0.02),
    // pelvis
    (-0.1, 0.0, -0.1),
    (0.1, 0.0, -0.1),
    // legs
    (-0.1, 0.08, -0.3),
    (0.1, -0.08, -0.3),
    (-0.1, 0.12, -0.5),
    (0.1, -0.12, -0.5),
    (-0.1, 0.15, -0.7),
    (0.1, -0.15, -0.7),
    (-0.1, 0.15, -0.9),
    (0.1, -0.15, -0.9),
];

pub fn make_pedestrian(spec: &PedestrianSpec) -> TargetModel {
    let (u, e) = local_frame(spec.center_m);
    let z = [0.0, 0.0, 1.0];
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let sigmas = split_reflectivity(PEDESTRIAN_LAYOUT.len(), spec.rcs_dbsm, &mut rng);
    let scatterers = PEDESTRIAN_LAYOUT
        .iter()
        .zip(sigmas)
        .map(|(&(lat, depth, height), reflectivity)| {
            let position_m = add(
                spec.center_m,
                add(scale(e, lat), add(scale(u, depth), scale(z, height))),
            );
            let jitter = if spec.micro_motion_mps > 0.0 {
                rng.random_range(-spec.micro_motion_mps..=spec.micro_motion_mps)
            } else {
                0.0
            };
            PointScatterer {
                position_m,
                velocity_mps: scale(u, spec.speed_mps + jitter),
                reflectivity,
            }
        })
        .collect();
    TargetModel {
        kind: TargetKind::Cluster,
        scatterers,
        bulk_rcs_dbsm: spec.rcs_dbsm,
        descriptor: format!(
            "pedestrian: 27 scatterers, {} m/s bulk, ±{} m/s limb motion",
            spec.speed_mps, spec.micro_motion_mps
        ),
    }
}

/// Synthetic mid-size car: scatterers spread over a length × width footprint, rigid motion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CarSpec {
    /// Footprint centre; the long axis points along the line of sight.
    pub center_m: Vec3,
    pub speed_mps: f64,
    pub rcs_dbsm: f64,
    pub scatterers: usize,
    pub length_m: f64,
    pub width_m: f64,
    pub seed: u64,
}

impl Default for CarSpec {
    fn default() -> Self {
        Self {
            center_m: [20.0, 5.0, 0.0],
            speed_mps: 10.0,
            rcs_dbsm: 10.0,
            scatterers: 64,
            length_m: 4.4,
            width_m: 1.7,
            seed: 0,
        }
    }
}

/// Scatterers are stratified uniformly along the length (so the range extent is
/// covered without gaps) and placed at seeded lateral offsets across the width.
pub fn make_car(spec: &CarSpec) -> TargetModel {
    let (u, e) = local_frame(spec.center_m);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let count = spec.scatterers.max(1);
    let sigmas = split_reflectivity(count, spec.rcs_dbsm, &mut rng);
    let velocity = scale(u, spec.speed_mps);
    let scatterers = sigmas
        .into_iter()
        .enumerate()
        .map(|(i, reflectivity)| {
            let along = if count == 1 {
                0.0
            } else {
                -spec.length_m / 2.0 + spec.length_m * i as f64 / (count - 1) as f64
            };
            let lateral = rng.random_range(-spec.width_m / 2.0..=spec.width_m / 2.0);
            PointScatterer {
                position_m: add(spec.center_m, add(scale(u, along), scale(e, lateral))),
                velocity_mps: velocity,
                reflectivity,
            }
        })
        .collect();
    TargetModel {
        kind: TargetKind::Cluster,
        scatterers,
        bulk_rcs_dbsm: spec.rcs_dbsm,
        descriptor: format!(
            "car: {count} scatterers over {} m × {} m, {} m/s rigid",
            spec.length_m, spec.width_m, spec.speed_mps
        ),
    }
}

/// Amplitude path-loss law applied to σ_b.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum PathLoss {
    Off,
    /// σ_b / r_b², two-way free space in amplitude.
    #[default]
    InverseSquare,
}

/// Maximum range accepted for a scatterer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum RangeGuard {
    /// `c·N·T_s/2`: the echo must start within the first code length of the PRI.
    #[default]
    ListeningWindow,
    /// `c·Q·T_s/2`: anywhere inside the PRI (late echoes are truncated).
    Pri,
}

/// Receiver noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub enum Noise {
    #[default]
    Off,
    /// Per-sample SNR of the strongest scatterer's echo. With no scatterers the
    /// reference is a unit-reflectivity echo.
    SnrDb { snr_db: f64, seed: u64 },
    /// Absolute complex noise power per sample.
    Power { power: f64, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct EchoOptions {
    pub noise: Noise,
    pub path_loss: PathLoss,
    pub range_guard: RangeGuard,
}

/// Received samples arranged fast time × slow time. Packet `p` is stored contiguously.
#[derive(Debug, Clone, PartialEq)]
pub struct DataCube {
    samples: Vec<C64>,
    q: usize,
    p: usize,
    pub params: WaveformParams,
    pub noise_seed: Option<u64>,
    pub snr_db: Option<f64>,
    pub noise_power: f64,
}

impl DataCube {
    pub fn zeros(params: &WaveformParams) -> Self {
        let (q, p) = (params.samples_per_pri(), params.packets_per_cpi());
        Self {
            samples: vec![C64::new(0.0, 0.0); q * p],
            q,
            p,
            params: params.clone(),
            noise_seed: None,
            snr_db: None,
            noise_power: 0.0,
        }
    }

    /// Wraps packet-major samples (`p·Q + q`).
    pub fn from_samples(params: &WaveformParams, samples: Vec<C64>) -> Result<Self> {
        let (q, p) = (params.samples_per_pri(), params.packets_per_cpi());
        if samples.len() != q * p {
            return Err(Error::Processing(format!(
                "cube needs {} samples, got {}",
                q * p,
                samples.len()
            )));
        }
        Ok(Self {
            samples,
            ..Self::zeros_shell(params)
        })
    }

    fn zeros_shell(params: &WaveformParams) -> Self {
        Self {
            samples: Vec::new(),
            q: params.samples_per_pri(),
            p: params.packets_per_cpi(),
            params: params.clone(),
            noise_seed: None,
            snr_db: None,
            noise_power: 0.0,
        }
    }

    pub fn fast_len(&self) -> usize {
        self.q
    }

    pub fn slow_len(&self) -> usize {
        self.p
    }

    pub fn get(&self, q: usize, p: usize) -> C64 {
        self.samples[p * self.q + q]
    }

    pub fn packet(&self, p: usize) -> &[C64] {
        &self.samples[p * self.q..(p + 1) * self.q]
    }

    pub fn packet_mut(&mut self, p: usize) -> &mut [C64] {
        &mut self.samples[p * self.q..(p + 1) * self.q]
    }

    pub fn packets(&self) -> impl Iterator<Item = &[C64]> + '_ {
        self.samples.chunks(self.q)
    }

    pub fn samples(&self) -> &[C64] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [C64] {
        &mut self.samples
    }
}

/// A scatterer resolved to the quantities the synthesis loop needs.
struct Echo {
    delay: usize,
    gain: C64,
    scatterer: PointScatterer,
    r0: f64,
}

fn resolve_echoes(
    targets: &[TargetModel],
    params: &WaveformParams,
    opts: &EchoOptions,
) -> Result<Vec<Echo>> {
    let max_range = match opts.range_guard {
        RangeGuard::ListeningWindow => params.max_range_listening_m(),
        RangeGuard::Pri => params.max_range_pri_m(),
    };
    let v_max = params.max_unambiguous_velocity_mps();
    let mut echoes = Vec::new();
    for (t, target) in targets.iter().enumerate() {
        for (b, s) in target.scatterers.iter().enumerate() {
            let r = s.range_m();
            if !(r.is_finite() && r > 0.0) {
                return Err(Error::Scenario(format!(
                    "target {t} scatterer {b}: range must be positive, got {r}"
                )));
            }
            if r >= max_range {
                return Err(Error::Scenario(format!(
                    "target {t} scatterer {b}: range {r:.3} m is beyond the unambiguous range {max_range:.3} m"
                )));
            }
            let vr = s.radial_velocity_mps();
            if vr.abs() > v_max {
                return Err(Error::Scenario(format!(
                    "target {t} scatterer {b}: radial velocity {vr:.3} m/s exceeds ±{v_max:.3} m/s"
                )));
            }
            let delay = (2.0 * r / (SPEED_OF_LIGHT * params.sample_period_s())).round() as usize;
            if delay >= params.samples_per_pri() {
                return Err(Error::Scenario(format!(
                    "target {t} scatterer {b}: delay {delay} samples does not fit the PRI"
                )));
            }
            let gain = match opts.path_loss {
                PathLoss::Off => s.reflectivity,
                PathLoss::InverseSquare => s.reflectivity / (r * r),
            };
            echoes.push(Echo {
                delay,
                gain,
                scatterer: *s,
                r0: r,
            });
        }
    }
    Ok(echoes)
}

/// Delay in samples for a scatterer at range `r`.
pub fn delay_samples(params: &WaveformParams, range_m: f64) -> usize {
    (2.0 * range_m / (SPEED_OF_LIGHT * params.sample_period_s())).round() as usize
}

/// Synthesizes the received cube for `schedule` reflected by `targets`.
///
/// Packets are generated independently (in parallel) and the noise stream for
/// packet `p` is stream `p` of a ChaCha generator keyed by the noise seed, so the
/// result does not depend on the thread count.
pub fn synthesize_echo(
    schedule: &FrameSchedule,
    targets: &[TargetModel],
    params: &WaveformParams,
    opts: &EchoOptions,
) -> Result<DataCube> {
    let q_len = params.samples_per_pri();
    let p_len = params.packets_per_cpi();
    if schedule.len() != p_len {
        return Err(Error::Processing(format!(
            "schedule has {} packets, parameters expect {p_len}",
            schedule.len()
        )));
    }
    if schedule.distinct_frames().iter().any(|f| f.len() != q_len) {
        return Err(Error::Processing("frame length differs from Q".into()));
    }
    let echoes = resolve_echoes(targets, params, opts)?;

    let peak_tx = schedule
        .distinct_frames()
        .iter()
        .map(|f| f.max_magnitude())
        .fold(0.0, f64::max);
    let (noise_power, noise_seed, snr_db) = match opts.noise {
        Noise::Off => (0.0, None, None),
        Noise::Power { power, seed } => {
            if !(power.is_finite() && power >= 0.0) {
                return Err(Error::Parameter(format!("noise power must be ≥ 0, got {power}")));
            }
            (power, Some(seed), None)
        }
        Noise::SnrDb { snr_db, seed } => {
            if !snr_db.is_finite() {
                return Err(Error::Parameter("snr_db must be finite".into()));
            }
            let strongest = echoes
                .iter()
                .map(|e| e.gain.norm_sqr())
                .fold(None, |m: Option<f64>, g| Some(m.map_or(g, |m| m.max(g))))
                .unwrap_or(1.0);
            let signal = strongest * peak_tx * peak_tx;
            (signal / 10f64.powf(snr_db / 10.0), Some(seed), Some(snr_db))
        }
    };

    let lambda = params.wavelength_m();
    let pri = params.pri_s();
    let mut cube = DataCube::zeros(params);
    cube.noise_seed = noise_seed;
    cube.snr_db = snr_db;
    cube.noise_power = noise_power;

    cube.samples
        .par_chunks_mut(q_len)
        .enumerate()
        .for_each(|(p, column)| {
            let frame = &schedule.frame(p).samples;
            for echo in &echoes {
                let dr = echo.scatterer.range_at(p as f64 * pri) - echo.r0;
                let rot = C64::from_polar(1.0, -4.0 * PI * dr / lambda);
                let g = echo.gain * rot;
                let span = q_len - echo.delay;
                for (out, &s) in column[echo.delay..].iter_mut().zip(&frame[..span]) {
                    *out += g * s;
                }
            }
            if let Some(seed) = noise_seed {
                if noise_power > 0.0 {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream(p as u64);
                    let sd = (noise_power / 2.0).sqrt();
                    for out in column.iter_mut() {
                        let re: f64 = StandardNormal.sample(&mut rng);
                        let im: f64 = StandardNormal.sample(&mut rng);
                        *out += C64::new(re * sd, im * sd);
                    }
                }
            }
        });
    Ok(cube)
}
