use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use serde_json::Value;
use tdrc::harness::{
    benchmark, distance_to_fec, eye_diagram, link_output, relative_gain, run_pipeline, sweep, write_distance_csv,
    write_eye_csv, write_histogram_csv, ExperimentConfig, Seeds, Stream, SweepResult, PRESETS,
};
use tdrc::signal::write_electrical;

const DEFAULT_PRESET: &str = "short-reservoir-fig5";

#[derive(Parser)]
#[command(name = "tdrc", version, about = "Fiber-link and photonic reservoir experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON experiment config; a `preset` key inside selects its base.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Base preset, overriding any `preset` key of the config.
    #[arg(long, global = true)]
    preset: Option<String>,
    /// Master seed; every stream seed is derived from it.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, env = "TDRC_OUT", default_value = "results")]
    out: PathBuf,
    /// Worker threads for sweeps and benchmarks (default: all cores).
    #[arg(long, global = true, env = "TDRC_WORKERS")]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Transmit the training stream and store the received photocurrent.
    SimulateLink,
    /// One end-to-end pipeline run.
    Run,
    /// Cartesian parameter sweep (resumes an existing sweep.csv).
    Sweep,
    /// Bypass, NoMask, ELM and RC over the configured windows.
    Benchmark,
    /// Longest distance meeting the BER target, per mode.
    Distance,
    /// Eye-diagram traces and decision-point histogram.
    Eye,
    /// Print the resolved config as JSON.
    ShowConfig,
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut value = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?
        }
        None => Value::Object(Default::default()),
    };
    let Some(obj) = value.as_object_mut() else {
        bail!("config must be a JSON object");
    };
    if let Some(p) = &cli.preset {
        obj.insert("preset".into(), Value::String(p.clone()));
    } else if cli.config.is_none() {
        obj.insert("preset".into(), Value::String(DEFAULT_PRESET.into()));
    }
    let mut cfg = ExperimentConfig::from_json(&value.to_string())
        .with_context(|| format!("resolving config (presets: {})", PRESETS.join(", ")))?;
    if let Some(seed) = cli.seed {
        cfg.seeds = Seeds::from_master(seed);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn out_file(dir: &Path, name: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))?;
    Ok(dir.join(name))
}

fn report(result: &SweepResult, path: &Path) {
    eprintln!(
        "{} rows written to {} ({} resumed, {} failed)",
        result.rows.len(),
        path.display(),
        result.resumed_rows,
        result.failures()
    );
    if let Some(best) = result.best() {
        let axes: Vec<String> = result
            .axis_names
            .iter()
            .zip(&best.axes)
            .map(|(n, v)| format!("{n}={v}"))
            .collect();
        println!(
            "best: row {} {} mode={} repetition={} mask={} ber={}",
            best.row,
            axes.join(" "),
            best.mode,
            best.repetition,
            best.mask_id,
            best.ber().unwrap_or(f64::NAN)
        );
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let cfg = load_config(&cli)?;
    let start = Instant::now();
    match cli.command {
        Command::ShowConfig => println!("{}", cfg.to_json()),
        Command::SimulateLink => {
            let out = link_output(&cfg, &cfg.seeds, Stream::Train).context("simulate-link")?;
            let wave_path = out_file(&cli.out, "link_train.tdrc")?;
            write_electrical(&wave_path, &out.wave).context("writing received waveform")?;
            let bits_path = out_file(&cli.out, "link_train_bits.csv")?;
            let mut text = String::from("bit\n");
            for b in &out.bits.bits {
                text.push_str(if *b == 1 { "1\n" } else { "0\n" });
            }
            std::fs::write(&bits_path, text).with_context(|| format!("writing {}", bits_path.display()))?;
            eprintln!(
                "{} bits over {} km: {} samples at {} GS/s -> {}",
                out.bits.len(),
                cfg.link.total_ssmf_km,
                out.wave.len(),
                out.wave.sample_rate_hz / 1e9,
                wave_path.display()
            );
        }
        Command::Run => {
            let score = run_pipeline(&cfg).context("run")?;
            let json = serde_json::to_string_pretty(&score)?;
            std::fs::write(out_file(&cli.out, "run.json")?, &json)?;
            println!("{json}");
        }
        Command::Sweep => {
            let path = out_file(&cli.out, "sweep.csv")?;
            let r = sweep(&cfg, Some(&path), cli.workers).context("sweep")?;
            report(&r, &path);
        }
        Command::Benchmark => {
            let path = out_file(&cli.out, "benchmark.csv")?;
            let r = benchmark(&cfg, Some(&path), cli.workers).context("benchmark")?;
            report(&r, &path);
        }
        Command::Distance => {
            let mut results = Vec::new();
            for &mode in &cfg.distance.modes {
                let r = distance_to_fec(&cfg, mode).with_context(|| format!("distance search for {mode}"))?;
                println!("{mode}: z* = {} km (BER target {})", r.z_star_km, r.ber_target);
                results.push(r);
            }
            for pair in results.windows(2) {
                println!(
                    "gain {} -> {}: {:.1}%",
                    pair[0].mode,
                    pair[1].mode,
                    100.0 * relative_gain(pair[0].z_star_km, pair[1].z_star_km)
                );
            }
            write_distance_csv(&out_file(&cli.out, "distance.csv")?, &results)?;
        }
        Command::Eye => {
            let eye = eye_diagram(&cfg).context("eye")?;
            write_eye_csv(&out_file(&cli.out, "eye.csv")?, &eye)?;
            write_histogram_csv(&out_file(&cli.out, "histogram.csv")?, &eye)?;
            eprintln!("{} traces, {} histogram bins -> {}", eye.traces.len(), eye.counts_zero.len(), cli.out.display());
        }
    }
    eprintln!("done in {:.1} s", start.elapsed().as_secs_f64());
    Ok(())
}
