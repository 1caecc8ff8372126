//! Simulation and signal processing for comparing millimeter-wave ISAC
//! waveforms: FMCW, PMCW (DBPSK), a Golay complementary pair sent as an
//! alternating pulse train, and the same pair scheduled by the
//! Prouhet-Thue-Morse sequence for Doppler resilience.
//!
//! The crate is organised along the processing chain:
//!
//! - [`waveform`] builds complex-baseband transmit frames and per-packet schedules.
//! - [`scene`] places point scatterers and synthesizes the received fast-time x slow-time cube.
//! - [`rsp`] runs the frequency-domain matched filter with Doppler steering, peak detection and PSLR.
//! - [`fxp`] emulates the same chain in two's-complement fixed point.
//! - [`harness`] parses scenario files, runs comparisons, writes CSV artifacts and benchmarks.
//!
//! ```
//! use isacsim::prelude::*;
//!
//! let params = WaveformParams::ci();
//! let schedule = build_schedule(ScheduleKind::GolayDopplerResilient, &params, 0).unwrap();
//! let target = TargetModel::single_point([12.0, 9.0, 0.0], [1.6, 1.2, 0.0], 0.0);
//! let cube = synthesize_echo(&schedule, &[target], &params, &EchoOptions::default()).unwrap();
//!
//! let bank = ReferenceBank::from_schedule(&schedule);
//! let grid = DopplerGrid::fft(&params);
//! let map = range_doppler(&cube, &bank, &grid).unwrap();
//! let det = detect_peak(&map).unwrap();
//! assert_eq!(det.range_bin, 176);
//! ```

pub mod bench;
pub mod error;
pub mod fxp;
pub mod harness;
pub mod rsp;
pub mod scene;
pub mod waveform;

pub use error::{Error, Result};

/// Complex sample type used throughout.
pub type C64 = num_complex::Complex<f64>;

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

pub mod prelude {
    pub use crate::error::{Error, Result};
    pub use crate::fxp::{
        precision_sweep, quantize, quantized_matched_filter, FixedPointFormat, FxpMode,
        FxpReport, QuantizedCube, Scaling,
    };
    pub use crate::rsp::{
        detect_peak, fast_time_fft, matched_filter_rd, pslr_db, range_doppler,
        time_domain_oracle, Detection, DopplerGrid, OracleLimits, Pslr, RangeDopplerMap,
        ReferenceBank,
    };
    pub use crate::scene::{
        make_car, make_pedestrian, synthesize_echo, CarSpec, DataCube, EchoOptions, Noise,
        PathLoss, PedestrianSpec, PointScatterer, RangeGuard, TargetKind, TargetModel,
    };
    pub use crate::waveform::{
        build_schedule, generate_fmcw, generate_pmcw, golay_pair, ptm_sequence, Frame,
        FrameLabel, FrameSchedule, GolayPair, PtmSequence, PulseShape, ScheduleKind,
        WaveformParams,
    };
    pub use crate::C64;
}

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/waveforms.md")]
    mod waveforms {}
    #[doc = include_str!("../../../book/src/golay-ptm.md")]
    mod golay_ptm {}
    #[doc = include_str!("../../../book/src/scene.md")]
    mod scene {}
    #[doc = include_str!("../../../book/src/matched-filter.md")]
    mod matched_filter {}
    #[doc = include_str!("../../../book/src/fixed-point.md")]
    mod fixed_point {}
    #[doc = include_str!("../../../book/src/harness.md")]
    mod harness {}
}
