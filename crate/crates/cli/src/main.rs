//! `tfot`: simulate scenarios, run the tracker, evaluate OSPA and evaluate
//! the clutter and distance bounds.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use tfot::harness::experiment::track_scenario;
use tfot::harness::records::{fmt_real, write_records_file};
use tfot::harness::scenario_io::{read_scenario_file, write_scenario_file};
use tfot::harness::{load_config, run_experiment, run_seed, write_artifacts, RunConfig};
use tfot::initiation::false_alarm_prob;
use tfot::metrics::{ospa_components, OspaConfig};
use tfot::probbounds;
use tfot::simulator::generate;
use tfot::{Error, Position2};

#[derive(Parser)]
#[command(name = "tfot", version, about = "Model-free single-target detection and tracking")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate scenario files, one per run.
    Simulate(CommonArgs),
    /// Run the tracker over scenario files.
    Track {
        #[command(flatten)]
        common: CommonArgs,
        /// Scenario files written by `simulate`.
        #[arg(required = true)]
        scenarios: Vec<PathBuf>,
    },
    /// Monte Carlo: simulate, track and score every run.
    Run(CommonArgs),
    /// Per-scan OSPA between two point-set CSVs with columns k,x,y.
    Ospa {
        #[arg(long)]
        estimates: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long, default_value_t = 1000.0)]
        c: f64,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
    },
    /// Clutter-rate and distance bounds.
    #[command(subcommand)]
    Bounds(BoundsCmd),
}

#[derive(Args)]
struct CommonArgs {
    /// TOML run configuration; defaults are used when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Number of Monte Carlo runs (overrides the configuration).
    #[arg(long)]
    runs: Option<u32>,
    /// Master seed (overrides the configuration).
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (overrides the configuration).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

#[derive(Subcommand)]
enum BoundsCmd {
    /// Largest clutter rate keeping all clutter of a scan away from a point
    /// with probability p_r: from --p1, or from --d-o and --area.
    Clutter {
        #[arg(long, conflicts_with_all = ["d_o", "area"])]
        p1: Option<f64>,
        #[arg(long, requires = "area")]
        d_o: Option<f64>,
        #[arg(long, requires = "d_o")]
        area: Option<f64>,
        #[arg(long)]
        pr: f64,
    },
    /// Probability that a uniform point falls within d_o of a given point.
    Near {
        #[arg(long)]
        d_o: f64,
        #[arg(long)]
        area: f64,
    },
    /// Probability that all clutter of a scan stays farther than d_o.
    Far {
        #[arg(long)]
        p1: f64,
        #[arg(long)]
        rate: f64,
    },
    /// Gaussian confidence that the normalized distance stays within tau.
    Gaussian {
        #[arg(long, default_value_t = 2)]
        dim: u32,
        #[arg(long)]
        tau: f64,
    },
    /// Unimodal (Vysochanskij–Petunin) lower bound on the same confidence.
    Vp {
        #[arg(long, default_value_t = 2)]
        dim: u32,
        #[arg(long)]
        tau: f64,
    },
    /// Chebyshev bound on Pr[|x| >= a] for a zero-mean scalar.
    Chebyshev {
        #[arg(long)]
        variance: f64,
        #[arg(long)]
        a: f64,
    },
    /// False-alarm probability of Ts-of-T confirmation.
    Pfa {
        #[arg(long)]
        ts: usize,
        #[arg(long)]
        window: usize,
        #[arg(long)]
        pr: f64,
    },
}

/// Exit codes: 2 for configuration and argument errors, 3 for anything
/// that fails at run time.
fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::Config(_) | Error::InvalidArgument(_)) => 2,
        _ if err.downcast_ref::<UsageError>().is_some() => 2,
        _ => 3,
    }
}

#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn dispatch(cmd: Command) -> anyhow::Result<()> {
    match cmd {
        Command::Simulate(args) => simulate(&args),
        Command::Track { common, scenarios } => track(&common, &scenarios),
        Command::Run(args) => run(&args),
        Command::Ospa { estimates, truth, c, p } => ospa(&estimates, &truth, OspaConfig { c, p }),
        Command::Bounds(b) => bounds(b),
    }
}

fn resolve_config(args: &CommonArgs) -> anyhow::Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(path) => {
            let (cfg, warnings) = load_config(path)?;
            for w in warnings {
                eprintln!("warning: {w}");
            }
            cfg
        }
        None => RunConfig::default(),
    };
    if let Some(runs) = args.runs {
        cfg.monte_carlo.runs = runs;
    }
    if let Some(seed) = args.seed {
        cfg.monte_carlo.master_seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.output.dir = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn simulate(args: &CommonArgs) -> anyhow::Result<()> {
    let cfg = resolve_config(args)?;
    let dir = &cfg.output.dir;
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    for i in 0..cfg.monte_carlo.runs {
        let scenario = generate(&cfg.scenario, run_seed(cfg.monte_carlo.master_seed, u64::from(i)))?;
        write_scenario_file(&dir.join(format!("scenario_{i:04}.csv")), &scenario)?;
    }
    println!("wrote {} scenario files to {}", cfg.monte_carlo.runs, dir.display());
    Ok(())
}

fn track(args: &CommonArgs, scenarios: &[PathBuf]) -> anyhow::Result<()> {
    let cfg = resolve_config(args)?;
    let dir = &cfg.output.dir;
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    for (i, path) in scenarios.iter().enumerate() {
        let scenario = read_scenario_file(path)?;
        let result = track_scenario(&scenario, &cfg.tracker, &cfg.ospa, i as u32, 0)?;
        let mut records = result.records.clone();
        if !cfg.output.record_timing {
            records.iter_mut().for_each(|r| r.step_micros = None);
        }
        let stem = path.file_stem().map_or_else(|| format!("run{i}"), |s| s.to_string_lossy().into_owned());
        let out = dir.join(format!("{stem}_track.csv"));
        write_records_file(&out, &records)?;
        let mean = result.ospa.mean_over(1, u32::MAX).unwrap_or(0.0);
        println!("{}: mean OSPA {mean:.2} m -> {}", path.display(), out.display());
    }
    Ok(())
}

fn run(args: &CommonArgs) -> anyhow::Result<()> {
    let cfg = resolve_config(args)?;
    let exp = run_experiment(&cfg, args.threads)?;
    write_artifacts(&cfg.output.dir, &exp, cfg.output.record_timing)?;
    let s = &exp.summary;
    println!("runs completed: {}/{}", s.completed, s.runs);
    for f in &s.failed_runs {
        eprintln!("run {} failed: {}", f.run_id, f.message);
    }
    for life in &s.lives {
        println!(
            "life [{}, {}]: confirmed in {}/{} (mean latency {}), terminated in {}/{} (mean latency {})",
            life.birth,
            life.death,
            life.confirmation.observed,
            life.confirmation.lives,
            life.confirmation.mean.map_or("-".into(), |m| format!("{m:.2}")),
            life.termination.observed,
            life.termination.lives,
            life.termination.mean.map_or("-".into(), |m| format!("{m:.2}")),
        );
    }
    println!("false tracks per run: {:.4}", s.false_track_rate);
    if let Some(m) = s.mean_ospa_over(1, u32::MAX) {
        println!("mean OSPA over all scans: {m:.2} m");
    }
    if let Some(t) = &exp.timing {
        println!("tracker step: mean {:.1} us, p95 {:.1} us", t.mean, t.p95);
    }
    println!("artifacts in {}", cfg.output.dir.display());
    Ok(())
}

fn read_point_sets(path: &Path) -> anyhow::Result<BTreeMap<u32, Vec<Position2>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let mut sets: BTreeMap<u32, Vec<Position2>> = BTreeMap::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let field = |j: usize| rec.get(j).unwrap_or("").trim();
        let k: u32 = field(0)
            .parse()
            .with_context(|| format!("{}:{line}: bad scan index", path.display()))?;
        let entry = sets.entry(k).or_default();
        if field(1).is_empty() && field(2).is_empty() {
            continue; // scan with no points
        }
        let x: f64 = field(1).parse().with_context(|| format!("{}:{line}: bad x", path.display()))?;
        let y: f64 = field(2).parse().with_context(|| format!("{}:{line}: bad y", path.display()))?;
        entry.push(Position2::new(x, y));
    }
    Ok(sets)
}

fn ospa(est_path: &Path, truth_path: &Path, cfg: OspaConfig) -> anyhow::Result<()> {
    cfg.validate()?;
    let est = read_point_sets(est_path)?;
    let truth = read_point_sets(truth_path)?;
    let scans: std::collections::BTreeSet<u32> = est.keys().chain(truth.keys()).copied().collect();
    println!("k,ospa,loc,card");
    let mut sum = 0.0;
    for &k in &scans {
        let empty = Vec::new();
        let c = ospa_components(est.get(&k).unwrap_or(&empty), truth.get(&k).unwrap_or(&empty), &cfg)?;
        sum += c.ospa;
        println!("{k},{},{},{}", fmt_real(c.ospa), fmt_real(c.loc), fmt_real(c.card));
    }
    if !scans.is_empty() {
        eprintln!("mean OSPA over {} scans: {:.4}", scans.len(), sum / scans.len() as f64);
    }
    Ok(())
}

fn bounds(cmd: BoundsCmd) -> anyhow::Result<()> {
    let value = match cmd {
        BoundsCmd::Clutter { p1, d_o, area, pr } => match (p1, d_o, area) {
            (Some(p1), None, None) => probbounds::max_clutter_rate_from_p1(p1, pr)?,
            (None, Some(d), Some(s)) => probbounds::max_clutter_rate(d, s, pr)?,
            _ => bail!(UsageError("give either --p1 or both --d-o and --area".into())),
        },
        BoundsCmd::Near { d_o, area } => probbounds::near_prob(d_o, area)?,
        BoundsCmd::Far { p1, rate } => probbounds::all_far_prob(p1, rate)?,
        BoundsCmd::Gaussian { dim, tau } => probbounds::gaussian_confidence(dim, tau)?,
        BoundsCmd::Vp { dim, tau } => probbounds::vp_bound(dim, tau)?,
        BoundsCmd::Chebyshev { variance, a } => probbounds::chebyshev_bound(variance, a)?,
        BoundsCmd::Pfa { ts, window, pr } => false_alarm_prob(ts, window, pr)?,
    };
    println!("{value:.6}");
    Ok(())
}
