use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use isacsim::harness::{
    parse_config, parse_waveforms, resolve_out_dir, run_comparison, ExitStatus, Preset,
    THREADS_ENV,
};
use isacsim::Error;

#[derive(Parser)]
#[command(name = "isacsim", version, about = "Compare ISAC radar waveforms on simulated scenes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario described by a config file.
    Run {
        config: PathBuf,
        /// Output directory (overrides `output_dir` in the config).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Radar parameter set: table1 or ci.
        #[arg(long)]
        preset: Option<String>,
        /// Comma-separated subset of fmcw, pmcw, golay, golay-dr.
        #[arg(long)]
        waveforms: Option<String>,
        /// Run benchmarks even if the config does not ask for them.
        #[arg(long)]
        bench: bool,
        /// Cross-check each map against the time-domain oracle.
        #[arg(long)]
        oracle: bool,
    },
}

fn fail(status: ExitStatus, msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("isacsim: {msg}");
    ExitCode::from(status.code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    if let Ok(v) = std::env::var(THREADS_ENV) {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                    eprintln!("isacsim: warning: {e}");
                }
            }
            _ => eprintln!("isacsim: warning: ignoring {THREADS_ENV}={v}"),
        }
    }

    let Command::Run {
        config,
        out,
        preset,
        waveforms,
        bench,
        oracle,
    } = cli.command;

    let text = match fs::read_to_string(&config) {
        Ok(t) => t,
        Err(e) => return fail(ExitStatus::Config, format!("{}: {e}", config.display())),
    };
    let mut cfg = match parse_config(&text) {
        Ok(c) => c,
        Err(e) => return fail(ExitStatus::Config, format!("{}: {e}", config.display())),
    };
    if let Some(p) = preset {
        match Preset::from_name(&p) {
            Some(p) => cfg.radar.preset = p,
            None => return fail(ExitStatus::Config, format!("unknown preset `{p}` (table1, ci)")),
        }
    }
    if let Some(w) = waveforms {
        match parse_waveforms(&w) {
            Ok(w) => cfg.waveforms = w,
            Err(m) => return fail(ExitStatus::Config, format!("--waveforms: {m}")),
        }
    }
    cfg.benchmark.enabled |= bench;
    cfg.oracle |= oracle;
    for w in &cfg.warnings {
        eprintln!("isacsim: warning: {w}");
    }

    let out_dir = resolve_out_dir(&cfg, out);
    let summary = match run_comparison(&cfg, &out_dir) {
        Ok(s) => s,
        Err(e) => {
            let status = match e {
                Error::Parameter(_) => ExitStatus::Config,
                ref e => ExitStatus::for_error(e),
            };
            return fail(status, e);
        }
    };

    for w in &summary.waveforms {
        match (&w.detection, &w.pslr, &w.error) {
            (Some(d), Some(p), _) => println!(
                "{:<9} range {:>8.3} m  velocity {:>8.3} m/s  PSLR {}",
                w.waveform,
                d.range_m,
                d.velocity_mps,
                match p.db() {
                    x if x.is_finite() => format!("{x:.2} dB"),
                    _ => "no sidelobe".into(),
                }
            ),
            (_, _, Some(e)) => eprintln!("isacsim: {}: {e}", w.waveform),
            _ => {}
        }
    }
    for r in &summary.benchmark.rows {
        println!("bench {:<20} {:.6} s", r.path, r.median_s);
    }
    for s in &summary.benchmark.speedups {
        println!("speedup {:<40} {:.2}x", s.name, s.ratio);
    }
    for n in &summary.benchmark.notices {
        eprintln!("isacsim: {n}");
    }
    println!("summary written to {}", out_dir.join("summary.json").display());
    ExitCode::from(summary.exit_code as u8)
}
