//! `dopamine` command-line tool.
//!
//! Exit status is 0 whenever the requested work ran, including runs that
//! diverged and timings that failed (both are recorded in the outputs). Bad
//! configs, unknown presets and malformed arguments exit with status 2;
//! I/O failures exit with status 1.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use dopamine::analysis::{
    time_optimizer, write_timing_csv, CiMethod, LandscapeConfig, TimedOptimizer, TimingConfig, TimingPhase,
};
use dopamine::data::{integrate, make_windows, Integrator, Normalization, System};
use dopamine::experiment::{
    compare, load_run, preset, preset_names, run_experiment, run_landscape, write_comparison_csv, ExperimentConfig,
    OptimizerId, RunStatus,
};
use dopamine::nn::{Architecture, Network, RnnSpec};
use dopamine::rng::{stream_rng, Stream};

#[derive(Parser)]
#[command(name = "dopamine", version, about = "Derivative-free training with weight perturbation and Dopamine learning rates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a Lorenz or Rössler trajectory and write it as CSV (t,x,y,z).
    GenData(GenData),
    /// Train every seed of a preset or config file.
    Train(Train),
    /// Loss landscape around a trained run.
    Landscape(Landscape),
    /// Per-step wall time of optimizers across sequence lengths.
    Timing(Timing),
    /// Mean final loss and 95% CI per optimizer over run directories.
    Compare(Compare),
    /// List the built-in presets.
    Presets,
}

#[derive(Clone, Copy, ValueEnum)]
enum SystemArg {
    Lorenz,
    Rossler,
}

#[derive(Clone, Copy, ValueEnum)]
enum IntegratorArg {
    Euler,
    Rk4,
}

#[derive(Args)]
struct GenData {
    #[arg(long, value_enum, default_value = "lorenz")]
    system: SystemArg,
    #[arg(long, default_value_t = 5000)]
    length: usize,
    #[arg(long, default_value_t = 0.01)]
    dt: f64,
    #[arg(long, value_enum, default_value = "euler")]
    integrator: IntegratorArg,
    /// Scale every coordinate to [0, 1].
    #[arg(long)]
    normalize: bool,
    #[arg(long, default_value = "trajectory.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct Train {
    /// Built-in preset name (see `dopamine presets`).
    #[arg(long, conflicts_with = "config", required_unless_present = "config")]
    preset: Option<String>,
    /// TOML config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the number of seeds.
    #[arg(long)]
    seeds: Option<usize>,
    /// Output root; each seed goes to OUT/<name>/seed-<k>.
    #[arg(long, default_value = "runs")]
    out: PathBuf,
    /// Config overrides, `section.key=value`, repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Args)]
struct Landscape {
    /// Run directory written by `train`.
    #[arg(long)]
    model: PathBuf,
    #[arg(long, default_value_t = 101)]
    steps: usize,
    #[arg(long, default_value = "-20,20", value_parser = parse_range, allow_hyphen_values = true)]
    alpha: (f64, f64),
    #[arg(long, default_value = "-15,15", value_parser = parse_range, allow_hyphen_values = true)]
    beta: (f64, f64),
    /// Scale each direction row to the norm of the matching parameter row.
    #[arg(long)]
    filter_normalize: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Defaults to `<model>/landscape.csv`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum PhaseArg {
    Update,
    ForwardUpdate,
}

#[derive(Args)]
struct Timing {
    /// Comma-separated optimizer ids.
    #[arg(long, default_value = "dopamine2,sgd,adam")]
    optimizers: String,
    /// `A..B` for the powers of two from A to B, or a comma-separated list.
    #[arg(long, default_value = "16..1024")]
    seq_lens: String,
    #[arg(long, value_enum, default_value = "update")]
    phase: PhaseArg,
    #[arg(long, default_value_t = 64)]
    hidden: usize,
    #[arg(long, default_value_t = 16)]
    samples: usize,
    #[arg(long, default_value_t = 10)]
    trials: usize,
    #[arg(long, default_value_t = 2)]
    warmup: usize,
    /// Working-memory cap per step, in MiB.
    #[arg(long)]
    memory_mib: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "timing.csv")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum CiArg {
    Normal,
    T,
}

#[derive(Args)]
struct Compare {
    /// Run directories or roots containing them.
    #[arg(required = true)]
    dirs: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "normal")]
    ci: CiArg,
    /// Defaults to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// A config problem: reported with exit status 2.
#[derive(Debug)]
struct ConfigError(String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn config_error(e: impl std::fmt::Display) -> anyhow::Error {
    ConfigError(e.to_string()).into()
}

fn parse_range(s: &str) -> std::result::Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected LO,HI")?;
    let lo = a.trim().parse::<f64>().map_err(|e| e.to_string())?;
    let hi = b.trim().parse::<f64>().map_err(|e| e.to_string())?;
    if lo < hi {
        Ok((lo, hi))
    } else {
        Err(format!("empty range {lo}..{hi}"))
    }
}

fn parse_seq_lens(s: &str) -> Result<Vec<usize>> {
    let lens: Vec<usize> = if let Some((a, b)) = s.split_once("..") {
        let (lo, hi): (usize, usize) = (a.trim().parse()?, b.trim().parse()?);
        if lo == 0 || lo > hi {
            bail!("bad range {s}");
        }
        std::iter::successors(Some(lo), |&t| t.checked_mul(2)).take_while(|&t| t <= hi).collect()
    } else {
        s.split(',').map(|t| t.trim().parse()).collect::<std::result::Result<_, _>>()?
    };
    if lens.is_empty() || lens.contains(&0) {
        bail!("no usable sequence lengths in {s}");
    }
    Ok(lens)
}

fn parse_overrides(raw: &[String]) -> Result<Vec<(String, String)>> {
    raw.iter()
        .map(|kv| {
            kv.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .ok_or_else(|| config_error(format!("override `{kv}` is not KEY=VALUE")))
        })
        .collect()
}

fn gen_data(args: GenData) -> Result<()> {
    let system = match args.system {
        SystemArg::Lorenz => System::lorenz(),
        SystemArg::Rossler => System::rossler(),
    };
    let integrator = match args.integrator {
        IntegratorArg::Euler => Integrator::Euler,
        IntegratorArg::Rk4 => Integrator::Rk4,
    };
    let mut traj = integrate(system, [1.0, 0.0, 0.0], args.dt, args.length, integrator).map_err(config_error)?;
    if args.normalize {
        let mut flat = traj.flat();
        Normalization::fit(&flat, 3).apply(&mut flat);
        traj.states = flat.chunks_exact(3).map(|p| [p[0], p[1], p[2]]).collect();
    }
    traj.write_csv(&args.out).with_context(|| format!("writing {}", args.out.display()))?;
    println!("wrote {} points to {}", traj.len(), args.out.display());
    Ok(())
}

fn train(args: Train) -> Result<()> {
    let base = match (&args.preset, &args.config) {
        (Some(name), _) => preset(name).map_err(config_error)?,
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            ExperimentConfig::from_toml(&text).map_err(config_error)?
        }
        (None, None) => unreachable!("clap requires one of --preset / --config"),
    };
    let mut overrides = parse_overrides(&args.overrides)?;
    if let Some(n) = args.seeds {
        overrides.push(("training.seeds".into(), n.to_string()));
    }
    overrides.push(("training.out_dir".into(), args.out.display().to_string()));
    let config = base.with_overrides(&overrides).map_err(config_error)?;

    println!("{}: {} seed(s) from {}", config.name, config.training.seeds, config.training.base_seed);
    let records = run_experiment(&config)?;
    for r in &records {
        let status = match r.status {
            RunStatus::Ok => "ok".to_string(),
            RunStatus::Diverged => format!("diverged at epoch {}", r.diverged_at.unwrap_or(0)),
        };
        let acc = r.accuracy.map(|a| format!(" accuracy {a:.3} corners {}/4", r.canonical_correct.unwrap_or(0))).unwrap_or_default();
        println!(
            "  seed {:>3}: {} {:.6} -> {:.6}{acc} ({status}, {:.1}s)",
            r.seed, r.loss_kind, r.initial_loss, r.final_loss, r.train_seconds
        );
    }
    println!("artifacts in {}", args.out.join(&config.name).display());
    Ok(())
}

fn landscape(args: Landscape) -> Result<()> {
    let (record, network, config) =
        load_run(&args.model).with_context(|| format!("loading run from {}", args.model.display()))?;
    let cfg = LandscapeConfig {
        range0: args.alpha,
        range1: args.beta,
        steps0: args.steps,
        steps1: args.steps,
        filter_normalize: args.filter_normalize,
        seed: args.seed,
    };
    let grid = run_landscape(&config, &network, record.seed, &cfg).map_err(config_error)?;
    let out = args.out.unwrap_or_else(|| args.model.join("landscape.csv"));
    grid.write_csv(&out).with_context(|| format!("writing {}", out.display()))?;
    let (am, c) = (grid.argmin(), grid.center_index());
    println!(
        "minimum {:.6} at alpha {:.3}, beta {:.3}; centre loss {:.6}; wrote {}",
        grid.losses[am.0][am.1],
        grid.alphas[am.0],
        grid.betas[am.1],
        grid.losses[c.0][c.1],
        out.display()
    );
    Ok(())
}

/// The optimizer `id` with the scaled Rössler preset's hyperparameters.
fn timed_optimizer(id: OptimizerId, params: &dopamine::ParamSet) -> Result<TimedOptimizer> {
    let cfg = preset(&format!("rossler-{id}-scaled")).map_err(config_error)?.optimizer;
    Ok(if id.is_gradient_based() {
        TimedOptimizer::Gradient(cfg.gradient(params)?)
    } else {
        TimedOptimizer::Perturbation(cfg.perturbation(params)?)
    })
}

fn timing(args: Timing) -> Result<()> {
    let ids: Vec<OptimizerId> =
        args.optimizers.split(',').map(|s| s.trim().parse()).collect::<std::result::Result<_, _>>().map_err(config_error)?;
    let lens = parse_seq_lens(&args.seq_lens).map_err(config_error)?;
    if args.hidden == 0 || args.samples == 0 || args.trials == 0 {
        return Err(config_error("hidden, samples and trials must be positive"));
    }
    let spec = RnnSpec::new(3, args.hidden, 3);
    let params = Network::init(Architecture::Rnn(spec.clone()), &mut stream_rng(args.seed, Stream::Init))?.params;
    let longest = *lens.iter().max().expect("non-empty");
    let traj = integrate(System::lorenz(), [1.0, 0.0, 0.0], 0.01, longest + 2, Integrator::Euler)?;
    let series = make_windows(&traj.flat(), 3, 1, true)?.series().to_vec();
    let config = TimingConfig {
        warmup: args.warmup,
        trials: args.trials,
        phase: match args.phase {
            PhaseArg::Update => TimingPhase::UpdateOnly,
            PhaseArg::ForwardUpdate => TimingPhase::ForwardUpdate,
        },
        samples: args.samples,
        memory_budget: args.memory_mib.map(|m| (m * (1 << 20) as f64) as usize),
        seed: args.seed,
        ..Default::default()
    };
    let mut records = Vec::new();
    for id in ids {
        let opt = timed_optimizer(id, &params)?;
        for r in time_optimizer(id.as_str(), &opt, &spec, &params, &series, 3, &lens, &config) {
            match &r.failure {
                Some(why) => println!("{:>10} T={:<6} failed: {why}", r.optimizer, r.seq_len),
                None => println!(
                    "{:>10} T={:<6} mean {:.3e}s  sem {:.1e}s  median {:.3e}s",
                    r.optimizer, r.seq_len, r.mean_s, r.sem_s, r.median_s
                ),
            }
            records.push(r);
        }
    }
    write_timing_csv(&args.out, &records).with_context(|| format!("writing {}", args.out.display()))?;
    println!("wrote {}", args.out.display());
    Ok(())
}

fn compare_cmd(args: Compare) -> Result<()> {
    let method = match args.ci {
        CiArg::Normal => CiMethod::Normal,
        CiArg::T => CiMethod::StudentT,
    };
    for d in &args.dirs {
        if !d.exists() {
            return Err(config_error(format!("{} does not exist", d.display())));
        }
    }
    let rows = compare(&args.dirs, method).map_err(|e| match e {
        dopamine::Error::Io(_) | dopamine::Error::Json(_) => anyhow::Error::from(e),
        other => config_error(other),
    })?;
    match &args.out {
        Some(path) => {
            write_comparison_csv(&rows, std::fs::File::create(path)?)?;
            println!("wrote {}", path.display());
        }
        None => write_comparison_csv(&rows, std::io::stdout().lock())?,
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenData(a) => gen_data(a),
        Command::Train(a) => train(a),
        Command::Landscape(a) => landscape(a),
        Command::Timing(a) => timing(a),
        Command::Compare(a) => compare_cmd(a),
        Command::Presets => {
            let mut out = std::io::stdout().lock();
            for name in preset_names() {
                // A closed pipe (`dopamine presets | head`) is not an error.
                if writeln!(out, "{name}").is_err() {
                    break;
                }
            }
            Ok(())
        }
    }
}

fn is_config_error(e: &anyhow::Error) -> bool {
    e.chain().any(|c| c.is::<ConfigError>())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if is_config_error(&e) {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
