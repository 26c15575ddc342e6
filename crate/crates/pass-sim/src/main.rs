//! Command-line front end: seeded experiment runs, the analytic
//! in-waveguide gain table, and per-iteration convergence traces.

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use pass_sim::channel::{avg_gain_over_length, gain_ratio_params};
use pass_sim::config::load_spec;
use pass_sim::error::Error;
use pass_sim::experiment::{
    emit_csv, render_convergence_csv, run_experiment, ExperimentSpec, Framework, LossCase,
    Objective,
};

#[derive(Parser)]
#[command(
    name = "pass-sim",
    about = "Segmented pinching-antenna uplink simulator",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a seeded Monte Carlo experiment and write aggregate CSV.
    Run(RunArgs),
    /// Print the analytic average in-waveguide gain table over segment counts.
    Gain(GainArgs),
    /// Emit per-iteration solver traces for one seeded channel draw.
    Converge(ConvergeArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Experiment configuration file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the trial count.
    #[arg(long)]
    trials: Option<usize>,
    /// Override the segment count.
    #[arg(long)]
    segments: Option<usize>,
    /// Override the waveguide length in meters.
    #[arg(long)]
    length: Option<f64>,
    /// Restrict to one protocol: ss, sa, or sm.
    #[arg(long)]
    protocol: Option<String>,
    /// Objective override: mse or wsr.
    #[arg(long)]
    objective: Option<String>,
    /// Loss case override: case1 (lossless) or case2.
    #[arg(long)]
    loss_case: Option<String>,
}

#[derive(Args)]
struct GainArgs {
    /// Amplitude attenuation coefficient in 1/m.
    #[arg(long, default_value_t = 0.0092)]
    alpha: f64,
    /// Waveguide length in meters.
    #[arg(long, default_value_t = 20.0)]
    length: f64,
    /// Segment counts: a single integer, "a..b", or "a,b,c".
    #[arg(long, default_value = "1..8")]
    segments: String,
}

#[derive(Args)]
struct ConvergeArgs {
    /// Experiment configuration file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(args) => run_cmd(args),
        Command::Gain(args) => gain_cmd(args),
        Command::Converge(args) => converge_cmd(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn apply_run_overrides(args: &RunArgs, spec: &mut ExperimentSpec) -> Result<(), Error> {
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    if let Some(trials) = args.trials {
        spec.trials = trials;
    }
    if let Some(m) = args.segments {
        spec.scenario.num_segments = m;
        spec.scenario.feed_x = (0..m)
            .map(|i| i as f64 * spec.scenario.area_x / m as f64)
            .collect();
    }
    if let Some(len) = args.length {
        spec.scenario.area_x = len;
        let m = spec.scenario.num_segments;
        spec.scenario.feed_x = (0..m).map(|i| i as f64 * len / m as f64).collect();
    }
    if let Some(protocol) = &args.protocol {
        let framework = match protocol.to_ascii_lowercase().as_str() {
            "ss" => Framework::JccSs,
            "sa" => Framework::JccSa,
            "sm" => Framework::JccSm,
            other => return Err(Error::Config(format!("unknown protocol '{other}'"))),
        };
        spec.frameworks = vec![framework];
    }
    if let Some(objective) = &args.objective {
        spec.objective = Objective::parse(objective)?;
    }
    if let Some(case) = &args.loss_case {
        spec.loss_case = LossCase::parse(case)?;
    }
    spec.scenario.validate()?;
    spec.validate()
}

fn run_cmd(args: RunArgs) -> Result<(), Error> {
    let mut spec = load_spec(&args.config)?;
    apply_run_overrides(&args, &mut spec)?;
    let result = run_experiment(&spec)?;
    emit_csv(&result, &args.out)?;
    println!(
        "wrote {} rows ({} trials, seed {}) to {}",
        result.rows.len() * 4,
        result.trials,
        result.seed,
        args.out.display()
    );
    Ok(())
}

fn parse_segment_list(text: &str) -> Result<Vec<usize>, Error> {
    let bad = |t: &str| Error::Config(format!("cannot parse segment list '{t}'"));
    if let Some((a, b)) = text.split_once("..") {
        let lo: usize = a.trim().parse().map_err(|_| bad(text))?;
        let hi: usize = b.trim().parse().map_err(|_| bad(text))?;
        if lo == 0 || hi < lo {
            return Err(bad(text));
        }
        return Ok((lo..=hi).collect());
    }
    let values: Result<Vec<usize>, _> = text
        .split(',')
        .map(|part| part.trim().parse::<usize>())
        .collect();
    let values = values.map_err(|_| bad(text))?;
    if values.is_empty() || values.contains(&0) {
        return Err(bad(text));
    }
    Ok(values)
}

fn gain_cmd(args: GainArgs) -> Result<(), Error> {
    if args.length <= 0.0 || args.alpha < 0.0 {
        return Err(Error::Config(
            "length must be positive, alpha nonnegative".into(),
        ));
    }
    let segments = parse_segment_list(&args.segments)?;
    println!(
        "{:>4} {:>14} {:>14} {:>10}",
        "M", "segmented", "conventional", "ratio"
    );
    for m in segments {
        let seg = avg_gain_over_length(args.alpha, args.length / m as f64);
        let conv = avg_gain_over_length(args.alpha, args.length);
        let ratio = gain_ratio_params(args.alpha, args.length, m);
        println!("{m:>4} {seg:>14.8} {conv:>14.8} {ratio:>10.6}");
    }
    Ok(())
}

fn converge_cmd(args: ConvergeArgs) -> Result<(), Error> {
    let mut spec = load_spec(&args.config)?;
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    let text = render_convergence_csv(&spec)?;
    std::fs::write(&args.out, text)?;
    println!("wrote convergence traces to {}", args.out.display());
    Ok(())
}
