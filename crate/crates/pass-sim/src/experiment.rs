//! Seeded Monte Carlo experiment runner with baselines and CSV emission.
//!
//! Every artifact this module produces is a pure function of the
//! experiment spec and its 64-bit seed. UE positions for trial t come from
//! an independent counter-based substream (ChaCha8, stream = t + 1), so a
//! given trial draws the same positions no matter how many trials run or
//! in which order; frameworks are compared pairwise on identical draws.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channel::{composite_channel, free_space_channel, place_pas, select_segment, ChannelSet};
use crate::error::Error;
use crate::mse_solver::{ao_mmse, default_initial_beams, SolverConfig, SolverReport};
use crate::protocol::{effective_channel, EffectiveChannel, ProtocolKind};
use crate::scenario::{dbm_to_watts, Scenario, UePosition};
use crate::wsr_solver::{ao_wmmse, wsr_initial_beams};

/// Transceiver architecture under evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Framework {
    /// Fixed half-wavelength antenna array at the first feed point,
    /// free-space channels, vector receivers.
    Mimo,
    /// Single continuous waveguide with one repositionable antenna.
    ConvPass,
    JccSs,
    JccSa,
    JccSm,
}

impl Framework {
    pub const ALL: [Framework; 5] = [
        Framework::Mimo,
        Framework::ConvPass,
        Framework::JccSs,
        Framework::JccSa,
        Framework::JccSm,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            Framework::Mimo => "MIMO",
            Framework::ConvPass => "ConvPASS",
            Framework::JccSs => "JCC-SS",
            Framework::JccSa => "JCC-SA",
            Framework::JccSm => "JCC-SM",
        }
    }

    pub fn parse(text: &str) -> Result<Self, Error> {
        match text.to_ascii_uppercase().as_str() {
            "MIMO" => Ok(Framework::Mimo),
            "CONVPASS" | "CONV-PASS" => Ok(Framework::ConvPass),
            "JCC-SS" | "SS" => Ok(Framework::JccSs),
            "JCC-SA" | "SA" => Ok(Framework::JccSa),
            "JCC-SM" | "SM" => Ok(Framework::JccSm),
            other => Err(Error::Config(format!("unknown framework '{other}'"))),
        }
    }
}

/// Objective the solvers optimize in a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    Mse,
    Wsr,
}

impl Objective {
    pub fn label(&self) -> &'static str {
        match self {
            Objective::Mse => "mse",
            Objective::Wsr => "wsr",
        }
    }

    pub fn parse(text: &str) -> Result<Self, Error> {
        match text.to_ascii_lowercase().as_str() {
            "mse" => Ok(Objective::Mse),
            "wsr" => Ok(Objective::Wsr),
            other => Err(Error::Config(format!("unknown objective '{other}'"))),
        }
    }
}

/// Whether the dielectric attenuation is switched off (case 1) or active
/// (case 2).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossCase {
    CaseI,
    CaseII,
}

impl LossCase {
    pub fn label(&self) -> &'static str {
        match self {
            LossCase::CaseI => "case1",
            LossCase::CaseII => "case2",
        }
    }

    pub fn parse(text: &str) -> Result<Self, Error> {
        match text.to_ascii_lowercase().as_str() {
            "case1" | "casei" | "lossless" => Ok(LossCase::CaseI),
            "case2" | "caseii" | "lossy" => Ok(LossCase::CaseII),
            other => Err(Error::Config(format!("unknown loss case '{other}'"))),
        }
    }
}

/// Parameter swept across experiment points.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepName {
    Segments,
    Length,
    NoiseDbm,
}

impl SweepName {
    pub fn label(&self) -> &'static str {
        match self {
            SweepName::Segments => "segments",
            SweepName::Length => "length",
            SweepName::NoiseDbm => "noise_dbm",
        }
    }

    pub fn parse(text: &str) -> Result<Self, Error> {
        match text.to_ascii_lowercase().as_str() {
            "segments" => Ok(SweepName::Segments),
            "length" => Ok(SweepName::Length),
            "noise_dbm" => Ok(SweepName::NoiseDbm),
            other => Err(Error::Config(format!("unknown sweep '{other}'"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Sweep {
    pub name: SweepName,
    pub values: Vec<f64>,
}

/// Full description of one experiment.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub scenario: Scenario,
    pub frameworks: Vec<Framework>,
    pub objective: Objective,
    pub sweep: Option<Sweep>,
    pub trials: usize,
    pub seed: u64,
    pub loss_case: LossCase,
    pub solver: SolverConfig,
}

impl ExperimentSpec {
    pub fn desk_default(objective: Objective) -> Self {
        let scenario = Scenario::default_desk();
        let solver = SolverConfig::from_scenario(&scenario);
        Self {
            scenario,
            frameworks: Framework::ALL.to_vec(),
            objective,
            sweep: None,
            trials: 100,
            seed: 7,
            loss_case: LossCase::CaseII,
            solver,
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be >= 1".into()));
        }
        if self.frameworks.is_empty() {
            return Err(Error::Config("at least one framework required".into()));
        }
        if let Some(sweep) = &self.sweep {
            if sweep.values.is_empty() {
                return Err(Error::Config("sweep_values must be nonempty".into()));
            }
            for &v in &sweep.values {
                match sweep.name {
                    SweepName::Segments => {
                        if v < 1.0 || v.fract() != 0.0 {
                            return Err(Error::Config(format!(
                                "segment sweep value {v} must be a positive integer"
                            )));
                        }
                    }
                    SweepName::Length => {
                        if v <= 0.0 {
                            return Err(Error::Config(format!(
                                "length sweep value {v} must be positive"
                            )));
                        }
                    }
                    SweepName::NoiseDbm => {}
                }
            }
        }
        self.scenario.validate()
    }
}

/// One framework's outcome on one trial.
#[derive(Debug, Clone)]
pub struct TrialRecord {
    pub framework: Framework,
    pub sweep_value: f64,
    pub trial: usize,
    pub mse_per_ue: f64,
    pub wsr: f64,
    pub sinr_mean_linear: f64,
    pub iterations: usize,
    pub converged: bool,
    pub rate_feasible: bool,
}

/// Sample mean and standard error of one metric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricSummary {
    pub mean: f64,
    pub stderr: f64,
}

fn summarize(values: &[f64]) -> MetricSummary {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return MetricSummary { mean, stderr: 0.0 };
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    MetricSummary {
        mean,
        stderr: (var / n).sqrt(),
    }
}

/// Aggregated metrics for one (framework, sweep value) cell.
#[derive(Debug, Clone)]
pub struct ResultRow {
    pub framework: Framework,
    pub sweep_name: String,
    pub sweep_value: f64,
    pub mse_per_ue: MetricSummary,
    pub sinr_linear: MetricSummary,
    /// 10 log10 of the mean linear SINR.
    pub sinr_db: f64,
    pub wsr: MetricSummary,
    pub iterations: MetricSummary,
}

/// Aggregates plus the per-trial records they came from.
#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub rows: Vec<ResultRow>,
    pub records: Vec<TrialRecord>,
    pub trials: usize,
    pub seed: u64,
}

/// Scenario for the single-continuous-waveguide baseline: one segment
/// spanning the full area, fed at its left edge.
pub fn conv_pass_scenario(scenario: &Scenario) -> Scenario {
    let mut s = scenario.clone();
    s.num_segments = 1;
    s.feed_x = vec![0.0];
    s
}

/// Fixed-array baseline channels: `num_segments` antennas at
/// half-wavelength spacing from the first feed point, free-space
/// propagation only, no repositioning.
pub fn baseline_mimo_channels(
    ues: &[UePosition],
    scenario: &Scenario,
) -> Result<ChannelSet, Error> {
    let spacing = scenario.wavelength() / 2.0;
    let base = scenario.feed_x[0];
    let mut coefficients = Vec::with_capacity(ues.len());
    for ue in ues {
        let mut row = Vec::with_capacity(scenario.num_segments);
        for m in 0..scenario.num_segments {
            row.push(free_space_channel(ue, base + m as f64 * spacing, scenario)?);
        }
        coefficients.push(row);
    }
    Ok(ChannelSet { coefficients })
}

/// Effective channel a framework presents to the solvers for one trial.
pub fn framework_channel(
    framework: Framework,
    ues: &[UePosition],
    scenario: &Scenario,
) -> Result<(EffectiveChannel, Scenario), Error> {
    match framework {
        Framework::Mimo => {
            let channels = baseline_mimo_channels(ues, scenario)?;
            Ok((
                effective_channel(&channels, ProtocolKind::SegmentMultiplexing, scenario),
                scenario.clone(),
            ))
        }
        Framework::ConvPass => {
            let s1 = conv_pass_scenario(scenario);
            let placement = place_pas(ues, &s1);
            let channels = composite_channel(ues, &placement, &s1)?;
            Ok((
                effective_channel(&channels, ProtocolKind::SegmentSelection(0), &s1),
                s1,
            ))
        }
        Framework::JccSs | Framework::JccSa | Framework::JccSm => {
            let placement = place_pas(ues, scenario);
            let channels = composite_channel(ues, &placement, scenario)?;
            let kind = match framework {
                Framework::JccSs => ProtocolKind::SegmentSelection(select_segment(&channels)),
                Framework::JccSa => ProtocolKind::SegmentAggregation,
                _ => ProtocolKind::SegmentMultiplexing,
            };
            Ok((effective_channel(&channels, kind, scenario), scenario.clone()))
        }
    }
}

fn apply_sweep(base: &Scenario, sweep: Option<(&SweepName, f64)>) -> Scenario {
    let mut s = base.clone();
    if let Some((name, value)) = sweep {
        match name {
            SweepName::Segments => {
                let m = value as usize;
                s.num_segments = m;
                s.feed_x = (0..m).map(|i| i as f64 * s.area_x / m as f64).collect();
            }
            SweepName::Length => {
                s.area_x = value;
                let m = s.num_segments;
                s.feed_x = (0..m).map(|i| i as f64 * value / m as f64).collect();
            }
            SweepName::NoiseDbm => {
                s.noise_watts = dbm_to_watts(value);
            }
        }
    }
    s
}

fn apply_loss_case(scenario: &Scenario, case: LossCase) -> Scenario {
    match case {
        LossCase::CaseI => scenario.lossless(),
        LossCase::CaseII => scenario.clone(),
    }
}

/// Uniform UE draws for one trial from its dedicated substream.
pub fn draw_ues(seed: u64, trial: usize, scenario: &Scenario) -> Vec<UePosition> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64 + 1);
    (0..scenario.num_ues)
        .map(|_| {
            let ux: f64 = rng.gen();
            let uy: f64 = rng.gen();
            UePosition::new(ux * scenario.area_x, uy * 2.0 * scenario.area_half_y)
        })
        .collect()
}

/// Run one framework on one set of UE positions, returning the solver
/// report together with the scenario the solver saw.
pub fn run_framework(
    framework: Framework,
    ues: &[UePosition],
    scenario: &Scenario,
    objective: Objective,
    config: &SolverConfig,
) -> Result<(SolverReport, Scenario), Error> {
    let (eff, solver_scenario) = framework_channel(framework, ues, scenario)?;
    let report = match objective {
        Objective::Mse => ao_mmse(
            default_initial_beams(&eff, &solver_scenario),
            &eff,
            &solver_scenario,
            config,
        )?,
        Objective::Wsr => ao_wmmse(
            wsr_initial_beams(&eff, &solver_scenario),
            &eff,
            &solver_scenario,
            config,
        )?,
    };
    Ok((report, solver_scenario))
}

/// Execute the experiment: for every sweep point and trial, draw UEs,
/// build channels, run every framework's solver, and aggregate.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult, Error> {
    spec.validate()?;
    let sweep_points: Vec<(Option<&Sweep>, f64)> = match &spec.sweep {
        Some(sweep) => sweep.values.iter().map(|&v| (Some(sweep), v)).collect(),
        None => vec![(None, f64::NAN)],
    };
    let mut records = Vec::new();
    for framework in &spec.frameworks {
        for (sweep, value) in &sweep_points {
            let swept = apply_sweep(
                &spec.scenario,
                sweep.map(|sw| (&sw.name, *value)),
            );
            let scenario = apply_loss_case(&swept, spec.loss_case);
            let config = SolverConfig {
                max_iters: spec.solver.max_iters,
                tol_rel: spec.solver.tol_rel,
                rate_targets: scenario
                    .rate_min_bps_hz
                    .iter()
                    .map(|r| 2f64.powf(*r) - 1.0)
                    .collect(),
                infeasibility: spec.solver.infeasibility,
            };
            for trial in 0..spec.trials {
                let ues = draw_ues(spec.seed, trial, &scenario);
                let (report, _) =
                    run_framework(*framework, &ues, &scenario, spec.objective, &config)?;
                let k = scenario.num_ues as f64;
                let sinr = report.final_sinr();
                records.push(TrialRecord {
                    framework: *framework,
                    sweep_value: *value,
                    trial,
                    mse_per_ue: report.final_mse() / k,
                    wsr: report.final_wsr(),
                    sinr_mean_linear: sinr.iter().sum::<f64>() / k,
                    iterations: report.iterations_used,
                    converged: report.converged,
                    rate_feasible: report.rate_feasible.iter().all(|&ok| ok),
                });
            }
        }
    }

    let mut rows = Vec::new();
    for framework in &spec.frameworks {
        for (_, value) in &sweep_points {
            let cell: Vec<&TrialRecord> = records
                .iter()
                .filter(|r| {
                    r.framework == *framework
                        && (r.sweep_value == *value
                            || (r.sweep_value.is_nan() && value.is_nan()))
                })
                .collect();
            let pull = |f: &dyn Fn(&TrialRecord) -> f64| -> Vec<f64> {
                cell.iter().map(|r| f(r)).collect()
            };
            let sinr_linear = summarize(&pull(&|r| r.sinr_mean_linear));
            rows.push(ResultRow {
                framework: *framework,
                sweep_name: spec
                    .sweep
                    .as_ref()
                    .map_or_else(|| "none".to_string(), |sw| sw.name.label().to_string()),
                sweep_value: *value,
                mse_per_ue: summarize(&pull(&|r| r.mse_per_ue)),
                sinr_db: 10.0 * sinr_linear.mean.max(f64::MIN_POSITIVE).log10(),
                sinr_linear,
                wsr: summarize(&pull(&|r| r.wsr)),
                iterations: summarize(&pull(&|r| r.iterations as f64)),
            });
        }
    }
    Ok(ExperimentResult {
        rows,
        records,
        trials: spec.trials,
        seed: spec.seed,
    })
}

/// Serialize aggregate rows: one line per (framework, sweep value, metric),
/// header included, '.' decimal separator, framework-then-sweep-then-metric
/// order. Shortest-roundtrip float formatting keeps reruns byte-identical.
pub fn render_csv(result: &ExperimentResult) -> String {
    let mut out = String::from("framework,sweep_name,sweep_value,metric_name,mean,stderr,trials,seed\n");
    for row in &result.rows {
        let sweep_value = if row.sweep_value.is_nan() {
            "none".to_string()
        } else {
            format!("{}", row.sweep_value)
        };
        let metrics: [(&str, f64, f64); 4] = [
            ("mse_per_ue", row.mse_per_ue.mean, row.mse_per_ue.stderr),
            ("sinr_db", row.sinr_db, 0.0),
            ("wsr", row.wsr.mean, row.wsr.stderr),
            ("iterations", row.iterations.mean, row.iterations.stderr),
        ];
        for (name, mean, stderr) in metrics {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                row.framework.label(),
                row.sweep_name,
                sweep_value,
                name,
                mean,
                stderr,
                result.trials,
                result.seed
            ));
        }
    }
    out
}

/// Write the aggregate CSV to disk.
pub fn emit_csv(result: &ExperimentResult, path: &std::path::Path) -> Result<(), Error> {
    std::fs::write(path, render_csv(result))?;
    Ok(())
}

/// A parsed CSV line of [`render_csv`] output.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRecord {
    pub framework: String,
    pub sweep_name: String,
    pub sweep_value: String,
    pub metric_name: String,
    pub mean: f64,
    pub stderr: f64,
    pub trials: usize,
    pub seed: u64,
}

/// Parse CSV text produced by [`render_csv`] (used by the round-trip
/// checks and downstream tooling).
pub fn parse_csv(text: &str) -> Result<Vec<CsvRecord>, Error> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Config("empty csv".into()))?;
    if header != "framework,sweep_name,sweep_value,metric_name,mean,stderr,trials,seed" {
        return Err(Error::Config("unexpected csv header".into()));
    }
    let mut records = Vec::new();
    for (i, line) in lines.enumerate() {
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 8 {
            return Err(Error::Config(format!("csv line {} malformed", i + 2)));
        }
        let parse_f = |s: &str| -> Result<f64, Error> {
            s.parse()
                .map_err(|_| Error::Config(format!("bad number '{s}'")))
        };
        records.push(CsvRecord {
            framework: parts[0].to_string(),
            sweep_name: parts[1].to_string(),
            sweep_value: parts[2].to_string(),
            metric_name: parts[3].to_string(),
            mean: parse_f(parts[4])?,
            stderr: parse_f(parts[5])?,
            trials: parts[6]
                .parse()
                .map_err(|_| Error::Config("bad trials".into()))?,
            seed: parts[7]
                .parse()
                .map_err(|_| Error::Config("bad seed".into()))?,
        });
    }
    Ok(records)
}

/// Per-iteration convergence traces for one seeded trial of each
/// framework, as CSV text (for plotting convergence behaviour).
pub fn render_convergence_csv(spec: &ExperimentSpec) -> Result<String, Error> {
    spec.validate()?;
    let scenario = apply_loss_case(&spec.scenario, spec.loss_case);
    let config = SolverConfig {
        max_iters: spec.solver.max_iters,
        tol_rel: spec.solver.tol_rel,
        rate_targets: scenario
            .rate_min_bps_hz
            .iter()
            .map(|r| 2f64.powf(*r) - 1.0)
            .collect(),
        infeasibility: spec.solver.infeasibility,
    };
    let ues = draw_ues(spec.seed, 0, &scenario);
    let mut out = String::from("framework,iteration,mse_per_ue,mean_sinr_db,wsr\n");
    for framework in &spec.frameworks {
        let (report, solver_scenario) =
            run_framework(*framework, &ues, &scenario, spec.objective, &config)?;
        let k = solver_scenario.num_ues as f64;
        for (i, mse) in report.mse_trace.iter().enumerate() {
            let sinr_mean = report.sinr_trace[i].iter().sum::<f64>() / k;
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                framework.label(),
                i + 1,
                mse / k,
                10.0 * sinr_mean.max(f64::MIN_POSITIVE).log10(),
                report.wsr_trace[i]
            ));
        }
    }
    Ok(out)
}
