//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits non-zero if
//! any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use isacsim::harness::{discrepancies, parse_config, run_comparison, Derivations};
use isacsim::prelude::*;
use isacsim::rsp::{max_relative_deviation, DEFAULT_MAINLOBE_HALFWIDTH};
use isacsim::waveform::aperiodic_autocorrelation;

type Outcome = std::result::Result<String, String>;

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Point scatterer at [12, 9, 0] m receding at 2 m/s, noise off, 64-packet CPI.
fn point_scene(kind: ScheduleKind, velocity: [f64; 3]) -> (FrameSchedule, DataCube) {
    let params = WaveformParams::ci();
    let schedule = build_schedule(kind, &params, 0).unwrap();
    let target = TargetModel::single_point([12.0, 9.0, 0.0], velocity, 0.0);
    let cube = synthesize_echo(&schedule, &[target], &params, &EchoOptions::default()).unwrap();
    (schedule, cube)
}

const MOVING: [f64; 3] = [1.6, 1.2, 0.0];
const STATIC: [f64; 3] = [0.0; 3];

struct Measured {
    detection: Detection,
    pslr: Pslr,
    map: RangeDopplerMap,
}

fn measure(kind: ScheduleKind, velocity: [f64; 3]) -> Measured {
    let (schedule, cube) = point_scene(kind, velocity);
    let bank = ReferenceBank::from_schedule(&schedule);
    let map = range_doppler(&cube, &bank, &DopplerGrid::fft(&cube.params)).unwrap();
    let detection = detect_peak(&map).unwrap();
    let pslr = pslr_db(map.row(detection.doppler_bin), DEFAULT_MAINLOBE_HALFWIDTH).unwrap();
    Measured {
        detection,
        pslr,
        map,
    }
}

fn golay_identity() -> Outcome {
    let start = Instant::now();
    let mut bad = Vec::new();
    for k in 1..=9 {
        let pair = golay_pair(k).unwrap();
        let n = pair.len() as i64;
        let ra = aperiodic_autocorrelation(&pair.a);
        let rb = aperiodic_autocorrelation(&pair.b);
        let ok = ra
            .iter()
            .zip(&rb)
            .enumerate()
            .all(|(lag, (x, y))| x + y == if lag == 0 { 2 * n } else { 0 });
        if !ok {
            bad.push(n);
        }
    }
    let t = start.elapsed().as_secs_f64();
    check(
        bad.is_empty() && t < 1.0,
        format!("N = 2..512 exact, failures {bad:?}, {t:.3} s (limit 1 s)"),
    )
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for scene in 0..20 {
        let q: usize = rng.random_range(64..=512);
        let n = 1usize << rng.random_range(4..=(q.ilog2()));
        let p: usize = rng.random_range(4..=64);
        let bw = 1.76e9;
        let pri = q as f64 / bw;
        let params = WaveformParams::new(60e9, bw, pri, p as f64 * pri)
            .unwrap()
            .with_code_length(n)
            .unwrap();
        let kind = ScheduleKind::ALL[scene % 4];
        let schedule = build_schedule(kind, &params, scene as u64).unwrap();
        let max_r = params.max_range_listening_m();
        let v_max = params.max_unambiguous_velocity_mps();
        let targets: Vec<TargetModel> = (0..rng.random_range(1..=4))
            .map(|i| {
                let r = rng.random_range(0.1 * max_r..0.9 * max_r);
                let v = if i % 2 == 0 {
                    0.0
                } else {
                    rng.random_range(-0.9 * v_max..0.9 * v_max)
                };
                TargetModel::single_point([r, 0.0, 0.0], [v, 0.0, 0.0], rng.random_range(-10.0..10.0))
            })
            .collect();
        let cube = synthesize_echo(&schedule, &targets, &params, &EchoOptions::default()).unwrap();
        let grid = if rng.random_bool(0.5) {
            DopplerGrid::fft(&params)
        } else {
            DopplerGrid::uniform(&params, rng.random_range(2..=65)).unwrap()
        };
        let bank = ReferenceBank::from_schedule(&schedule);
        let fast = range_doppler(&cube, &bank, &grid).unwrap();
        let slow = time_domain_oracle(&cube, &schedule, &grid, OracleLimits::default()).unwrap();
        worst = worst.max(max_relative_deviation(&fast, &slow));
    }
    let t = start.elapsed().as_secs_f64();
    check(
        worst < 1e-6 && t < 60.0,
        format!("20 random scenes, worst relative deviation {worst:.3e} (limit 1e-6), {t:.2} s (limit 60 s)"),
    )
}

fn localization() -> Outcome {
    let start = Instant::now();
    let params = WaveformParams::ci();
    let grid = DopplerGrid::fft(&params);
    let f_d = params.doppler_hz(2.0);
    let want_j = grid.nearest_bin(f_d) as i64;
    let mut lines = Vec::new();
    let mut ok = true;
    for kind in ScheduleKind::ALL {
        let m = measure(kind, MOVING);
        let d = m.detection;
        let hit = (d.range_bin as i64 - 176).abs() <= 1 && (d.doppler_bin as i64 - want_j).abs() <= 1;
        ok &= hit;
        lines.push(format!("{} bin ({}, {})", kind.name(), d.range_bin, d.doppler_bin));
    }
    let t = start.elapsed().as_secs_f64();
    check(
        ok && t < 30.0,
        format!(
            "expect range bin 176±1, Doppler bin {want_j}±1 ({f_d:.1} Hz); {}; {t:.2} s (limit 30 s)",
            lines.join(", ")
        ),
    )
}

fn pslr_values() -> Outcome {
    let v: Vec<f64> = ScheduleKind::ALL
        .iter()
        .map(|&k| measure(k, MOVING).pslr.db())
        .collect();
    let (f, p, g, d) = (v[0], v[1], v[2], v[3]);
    let soft = [
        ("fmcw 8±3", (f - 8.0).abs() <= 3.0),
        ("pmcw 13±3", (p - 13.0).abs() <= 3.0),
        ("golay 43±5", (g - 43.0).abs() <= 5.0),
        ("golay-dr >= golay", d >= g),
    ];
    let ordering = f < p && p < g && g <= d;
    let misses: Vec<&str> = soft.iter().filter(|s| !s.1).map(|s| s.0).collect();
    check(
        misses.is_empty() && ordering,
        format!(
            "PSLR fmcw {f:.2} dB, pmcw {p:.2} dB, golay {g:.2} dB, golay-dr {d:.2} dB; \
             out of tolerance: {misses:?}; ordering fmcw < pmcw < golay <= golay-dr {}",
            if ordering { "holds" } else { "violated" }
        ),
    )
}

fn doppler_resilience() -> Outcome {
    let dr = measure(ScheduleKind::GolayDopplerResilient, MOVING).pslr.db();
    let std = measure(ScheduleKind::GolayStandard, MOVING).pslr.db();
    check(
        dr >= 60.0 && dr - std >= 5.0,
        format!("golay-dr sidelobes -{dr:.1} dB (limit -60 dB), golay -{std:.1} dB, gap {:.1} dB (limit 5 dB)", dr - std),
    )
}

fn static_complementarity() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for kind in [ScheduleKind::GolayStandard, ScheduleKind::GolayDopplerResilient] {
        let m = measure(kind, STATIC);
        let zero = m.map.doppler_bins() / 2;
        let pslr = pslr_db(m.map.row(zero), DEFAULT_MAINLOBE_HALFWIDTH).unwrap().db();
        ok &= pslr >= 250.0 && m.detection.doppler_bin == zero;
        parts.push(format!("{} -{pslr:.1} dB", kind.name()));
    }
    check(ok, format!("static sidelobes {} (limit -250 dB)", parts.join(", ")))
}

fn fixed_point() -> Outcome {
    let q24 = FixedPointFormat::new(24, 1).unwrap();
    // PSLRs deeper than the format's dynamic range are double-precision roundoff
    let resolvable_db = 6.02 * q24.word_bits() as f64;
    let mut ok = true;
    let mut parts = Vec::new();
    for kind in ScheduleKind::ALL {
        let (schedule, cube) = point_scene(kind, MOVING);
        let bank = ReferenceBank::from_schedule(&schedule);
        let grid = DopplerGrid::fft(&cube.params);
        let (_, r) = quantized_matched_filter(&cube, &bank, &grid, q24, FxpMode::FullChain).unwrap();
        let same_range = r.fixed_peak.map(|p| p.0) == Some(r.double_peak.0);
        let pd = r.pslr_double.map_or(f64::NAN, Pslr::db);
        let pf = r.pslr_fixed.map_or(f64::NAN, Pslr::db);
        let pslr_ok = if pd < resolvable_db {
            r.pslr_delta_db.is_some_and(|x| x.abs() <= 0.5)
        } else {
            true
        };
        ok &= same_range && pslr_ok;
        parts.push(format!(
            "{}: bin {}/{}, PSLR {pd:.2}/{pf:.2} dB{}",
            kind.name(),
            r.double_peak.0,
            r.fixed_peak.map_or(-1, |p| p.0 as i64),
            if pd < resolvable_db { "" } else { " (below 24-bit floor, not compared)" }
        ));
    }
    let (schedule, cube) = point_scene(ScheduleKind::Fmcw, MOVING);
    let sweep = precision_sweep(
        &cube,
        &ReferenceBank::from_schedule(&schedule),
        &DopplerGrid::fft(&cube.params),
        &[16, 24, 32].map(|w| FixedPointFormat::new(w, 1).unwrap()),
        FxpMode::FullChain,
        1,
    )
    .unwrap();
    let sqnr: Vec<String> = sweep.rows.iter().map(|r| format!("{:.1}", r.sqnr_db)).collect();
    let increasing = sweep.rows.windows(2).all(|w| w[1].sqnr_db >= w[0].sqnr_db);
    ok &= increasing && sweep.sqnr_monotone;
    check(
        ok,
        format!("<24,1> full chain: {}; SQNR <16,1>/<24,1>/<32,1> = {} dB", parts.join("; "), sqnr.join("/")),
    )
}

fn sig3(x: f64) -> String {
    format!("{:.2e}", x)
}

fn table_derivations() -> Outcome {
    let p = WaveformParams::table1();
    let d = Derivations::from_params(&p);
    let res_ok = sig3(d.range_resolution_m) == sig3(0.0852);
    let vmax_ok = sig3(d.max_unambiguous_velocity_mps) == sig3(625.0);

    let dir = tempfile::tempdir().unwrap();
    let cfg = parse_config(
        "[radar]\npreset = ci\n[run]\nwaveforms = fmcw\ncode_seed = 0\nnoise_seed = 0\nscene_seed = 0\n\
         [target]\nkind = point\nposition_m = 12, 9, 0\n",
    )
    .unwrap();
    let s = run_comparison(&cfg, dir.path()).unwrap();
    let json: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("summary.json")).unwrap(),
    )
    .unwrap();
    let disc = &json["discrepancies"];
    let reported = disc[0]["nominal"] == 0.3
        && disc[1]["nominal"] == 44.0
        && s.discrepancies == discrepancies(&Derivations::from_params(&WaveformParams::ci()));
    let t1 = discrepancies(&d);
    let vres = t1[0].derived[0].1;
    let (listen, pri) = (t1[1].derived[0].1, t1[1].derived[1].1);
    let values_ok = (vres - 0.625).abs() < 1e-3 && (listen - 43.6).abs() < 0.05 && (pri - 300.0).abs() < 0.5;
    check(
        res_ok && vmax_ok && reported && values_ok,
        format!(
            "range resolution {:.4} m, max velocity {:.1} m/s; reported: velocity resolution 0.3 vs {vres:.4} m/s, max range 44 vs {listen:.1}/{pri:.1} m",
            d.range_resolution_m, d.max_unambiguous_velocity_mps
        ),
    )
}

fn determinism() -> Outcome {
    let text = "\
[radar]
preset = ci
[run]
code_seed = 5
noise_seed = 6
scene_seed = 7
snr_db = 10
[target]
kind = point
position_m = 12, 9, 0
velocity_mps = 1.6, 1.2, 0
[target]
kind = pedestrian
[target]
kind = car
center_m = 20, 5, 0
";
    let cfg = parse_config(text).unwrap();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let sa = run_comparison(&cfg, a.path()).unwrap();
    run_comparison(&cfg, b.path()).unwrap();
    let mut compared = 0;
    let mut differing = Vec::new();
    for w in &sa.waveforms {
        for f in &w.artifacts {
            compared += 1;
            if std::fs::read(a.path().join(f)).unwrap() != std::fs::read(b.path().join(f)).unwrap() {
                differing.push(f.clone());
            }
        }
    }
    check(
        compared == 8 && differing.is_empty(),
        format!("{compared} CSVs compared byte for byte, differing {differing:?}"),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("1 golay identity", golay_identity),
        ("2 oracle equivalence", oracle_equivalence),
        ("3 localization", localization),
        ("4 pslr values", pslr_values),
        ("5 doppler resilience", doppler_resilience),
        ("6 static complementarity", static_complementarity),
        ("7 fixed point", fixed_point),
        ("8 parameter derivations", table_derivations),
        ("9 determinism", determinism),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        match f() {
            Ok(d) => println!("PASS  {name}: {d}"),
            Err(d) => {
                failed += 1;
                println!("FAIL  {name}: {d}");
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
