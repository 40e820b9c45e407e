use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;
use serde_json::Value;

use episim::city::{grid_city_file, GridSpec, WeightFn};
use episim::engine::{apply_override, run_batch, RunConfig};
use episim::report::{self, BatchOutput, SERIES};

#[derive(Parser)]
#[command(name = "episim", version, about = "Agent-based epidemic simulation with testing policies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a batch and write timeseries.csv, geo.csv and resolved_config.json.
    Run(RunArgs),
    /// Write a synthetic grid city file.
    Gencity(GencityArgs),
    /// Run several configs and merge their batch means side by side.
    Compare(CompareArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Override a config value by dotted path, e.g. `--set trigger.tau=0.3`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

#[derive(Args)]
struct GencityArgs {
    #[arg(long)]
    rows: usize,
    #[arg(long)]
    cols: usize,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "random")]
    weights: Weights,
    #[arg(long)]
    destinations: Option<usize>,
    #[arg(long)]
    visit_fraction: Option<f64>,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum Weights {
    Uniform,
    Random,
}

#[derive(Args)]
struct CompareArgs {
    /// Two or more configs differing only in policy, intervention, lbt or trigger settings.
    #[arg(long = "config", required = true, num_args = 1)]
    configs: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Err(e) = dispatch(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Gencity(a) => cmd_gencity(a),
        Command::Compare(a) => cmd_compare(a),
    }
}

fn load_config(path: &Path, overrides: &[String]) -> Result<RunConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    let mut value: Value = serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
    // fill defaults first so overrides may target keys the file omits
    let mut full =
        RunConfig::from_value(value.clone()).with_context(|| format!("invalid config {}", path.display()))?.to_value();
    for o in overrides {
        let (key, raw) = o.split_once('=').with_context(|| format!("override `{o}` is not KEY=VALUE"))?;
        apply_override(&mut full, key.trim(), raw.trim())?;
    }
    value = full;
    let mut cfg = RunConfig::from_value(value).context("config after overrides")?;
    cfg.resolve_paths(path.parent().unwrap_or(Path::new(".")));
    cfg.validate()?;
    Ok(cfg)
}

fn thread_pool(threads: usize) -> Result<rayon::ThreadPool> {
    ensure!(threads >= 1, "--threads must be at least 1");
    Ok(rayon::ThreadPoolBuilder::new().num_threads(threads).build()?)
}

fn batch(cfg: &RunConfig, threads: usize) -> Result<BatchOutput> {
    let pool = thread_pool(threads)?;
    Ok(pool.install(|| run_batch(cfg))?)
}

fn cmd_run(a: RunArgs) -> Result<()> {
    let cfg = load_config(&a.config, &a.overrides)?;
    info!("config hash {}", cfg.hash());
    let out = batch(&cfg, a.threads)?;

    // write into a scratch dir first so a failure leaves no partial outputs
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let tmp = a.out.join(".episim-partial");
    fs::create_dir_all(&tmp)?;
    let written = (|| -> Result<()> {
        report::export_batch_timeseries(&out, tmp.join("timeseries.csv"))?;
        report::export_batch_geo(&out, tmp.join("geo.csv"))?;
        fs::write(tmp.join("resolved_config.json"), cfg.to_json_pretty())?;
        for f in ["timeseries.csv", "geo.csv", "resolved_config.json"] {
            fs::rename(tmp.join(f), a.out.join(f))?;
        }
        Ok(())
    })();
    let _ = fs::remove_dir_all(&tmp);
    written.with_context(|| format!("writing outputs to {}", a.out.display()))
}

fn cmd_gencity(a: GencityArgs) -> Result<()> {
    ensure!(a.rows >= 1 && a.cols >= 1, "rows and cols must be at least 1");
    let mut spec = GridSpec::new(a.rows, a.cols).with_seed(a.seed).with_weights(match a.weights {
        Weights::Uniform => WeightFn::Uniform,
        Weights::Random => WeightFn::Random,
    });
    if let Some(d) = a.destinations {
        spec = spec.with_destinations(d);
    }
    if let Some(v) = a.visit_fraction {
        spec = spec.with_visit_fraction(v);
    }
    spec.validate().map_err(anyhow::Error::msg)?;
    let mut text = serde_json::to_string_pretty(&grid_city_file(&spec))?;
    text.push('\n');
    fs::write(&a.out, text).with_context(|| format!("writing {}", a.out.display()))?;
    Ok(())
}

/// Keys that may differ between compared configs.
const COMPARABLE: [&str; 4] = ["policy", "intervention", "lbt", "trigger"];

fn check_comparable(configs: &[(String, RunConfig)]) -> Result<()> {
    let strip = |c: &RunConfig| {
        let mut v = c.to_value();
        if let Value::Object(m) = &mut v {
            for k in COMPARABLE {
                m.remove(k);
            }
        }
        v
    };
    let (first_name, first) = &configs[0];
    let base = strip(first);
    for (name, c) in &configs[1..] {
        let v = strip(c);
        if v != base {
            let differing: Vec<&String> = match (&base, &v) {
                (Value::Object(a), Value::Object(b)) => a.keys().filter(|k| a.get(*k) != b.get(*k)).collect(),
                _ => Vec::new(),
            };
            bail!(
                "configs {first_name} and {name} differ outside {}: {}",
                COMPARABLE.join("/"),
                differing.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(", ")
            );
        }
    }
    Ok(())
}

fn config_label(path: &Path, taken: &[String]) -> String {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "config".into());
    let mut label = stem.clone();
    let mut k = 2;
    while taken.contains(&label) {
        label = format!("{stem}_{k}");
        k += 1;
    }
    label
}

fn cmd_compare(a: CompareArgs) -> Result<()> {
    ensure!(a.configs.len() >= 2, "compare needs at least two --config files");
    let mut configs: Vec<(String, RunConfig)> = Vec::new();
    for p in &a.configs {
        let labels: Vec<String> = configs.iter().map(|(l, _)| l.clone()).collect();
        configs.push((config_label(p, &labels), load_config(p, &a.overrides)?));
    }
    check_comparable(&configs)?;

    let mut outputs = Vec::new();
    for (label, cfg) in &configs {
        info!("running {label}");
        outputs.push(batch(cfg, a.threads)?);
    }

    let days = outputs[0].days();
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let mut header = vec!["day".to_string()];
    for (label, _) in &configs {
        for s in SERIES {
            header.push(format!("{label}.{s}_mean"));
            header.push(format!("{label}.{s}_std"));
        }
    }
    w.write_record(&header)?;
    for d in 0..days {
        let mut row = vec![outputs[0].runs[0].days[d].day.to_string()];
        for out in &outputs {
            for s in 0..SERIES.len() {
                row.push(format!("{}", out.mean[s][d]));
                row.push(format!("{}", out.std[s][d]));
            }
        }
        w.write_record(&row)?;
    }
    let bytes = w.into_inner().map_err(|e| anyhow::anyhow!("{e}"))?;
    fs::write(&a.out, bytes).with_context(|| format!("writing {}", a.out.display()))?;
    Ok(())
}
