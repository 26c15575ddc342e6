//! Experiment configuration files: flat TOML with scalar, string, and
//! array values. Unknown keys are rejected so typos fail loudly.

use serde::Deserialize;
use std::path::Path;

use crate::error::Error;
use crate::experiment::{
    ExperimentSpec, Framework, LossCase, Objective, Sweep, SweepName,
};
use crate::mse_solver::{InfeasibilityPolicy, SolverConfig};
use crate::scenario::{dbm_to_watts, Scenario, SPEED_OF_LIGHT};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    area_x: Option<f64>,
    area_half_y: Option<f64>,
    height: Option<f64>,
    segments: Option<usize>,
    carrier_ghz: Option<f64>,
    n_eff: Option<f64>,
    kappa0_db_per_m: Option<f64>,
    min_spacing: Option<f64>,
    ues: Option<usize>,
    p_max_dbm: Option<f64>,
    noise_dbm: Option<f64>,
    rate_min: Option<f64>,
    mse_budget: Option<f64>,
    weights: Option<Vec<f64>>,

    trials: Option<usize>,
    seed: Option<u64>,
    frameworks: Option<Vec<String>>,
    objective: Option<String>,
    loss_case: Option<String>,
    sweep_name: Option<String>,
    sweep_values: Option<Vec<f64>>,

    max_iters: Option<usize>,
    tol_rel: Option<f64>,
    infeasibility: Option<String>,
}

/// Load an experiment spec from a TOML file.
pub fn load_spec(path: &Path) -> Result<ExperimentSpec, Error> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    spec_from_str(&text)
}

/// Parse an experiment spec from TOML text.
pub fn spec_from_str(text: &str) -> Result<ExperimentSpec, Error> {
    let file: ConfigFile =
        toml::from_str(text).map_err(|e| Error::Config(format!("config parse: {e}")))?;
    let mut scenario = Scenario::default_desk();

    if let Some(v) = file.area_x {
        scenario.area_x = v;
    }
    if let Some(v) = file.area_half_y {
        scenario.area_half_y = v;
    }
    if let Some(v) = file.height {
        scenario.height = v;
    }
    if let Some(v) = file.segments {
        scenario.num_segments = v;
    }
    if let Some(v) = file.carrier_ghz {
        scenario.carrier_freq = v * 1e9;
    }
    if let Some(v) = file.n_eff {
        scenario.n_eff = v;
    }
    if let Some(v) = file.kappa0_db_per_m {
        scenario.kappa0_db_per_m = v;
    }
    if let Some(v) = file.ues {
        scenario.num_ues = v;
    }
    // Rebuild the derived per-UE vectors and feeds against the final sizes.
    scenario.feed_x = (0..scenario.num_segments)
        .map(|m| m as f64 * scenario.area_x / scenario.num_segments as f64)
        .collect();
    let k = scenario.num_ues;
    let p_w = dbm_to_watts(file.p_max_dbm.unwrap_or(10.0));
    scenario.p_max_watts = vec![p_w; k];
    scenario.noise_watts = dbm_to_watts(file.noise_dbm.unwrap_or(-90.0));
    scenario.rate_min_bps_hz = vec![file.rate_min.unwrap_or(0.2); k];
    if let Some(v) = file.mse_budget {
        scenario.mse_budget = v;
    }
    scenario.weights = match file.weights {
        Some(w) => {
            if w.len() != k {
                return Err(Error::Config(format!(
                    "weights length {} does not match ues {k}",
                    w.len()
                )));
            }
            w
        }
        None => vec![1.0; k],
    };
    scenario.min_spacing = file
        .min_spacing
        .unwrap_or_else(|| SPEED_OF_LIGHT / scenario.carrier_freq / 2.0);
    scenario.validate()?;

    let frameworks = match file.frameworks {
        Some(names) => names
            .iter()
            .map(|n| Framework::parse(n))
            .collect::<Result<Vec<_>, _>>()?,
        None => Framework::ALL.to_vec(),
    };
    let objective = match file.objective {
        Some(o) => Objective::parse(&o)?,
        None => Objective::Mse,
    };
    let loss_case = match file.loss_case {
        Some(c) => LossCase::parse(&c)?,
        None => LossCase::CaseII,
    };
    let sweep = match (file.sweep_name, file.sweep_values) {
        (Some(name), Some(values)) => Some(Sweep {
            name: SweepName::parse(&name)?,
            values,
        }),
        (None, None) => None,
        _ => {
            return Err(Error::Config(
                "sweep_name and sweep_values must be given together".into(),
            ))
        }
    };
    let infeasibility = match file.infeasibility.as_deref() {
        None | Some("clamp") => InfeasibilityPolicy::ClampToPower,
        Some("error") => InfeasibilityPolicy::Error,
        Some(other) => {
            return Err(Error::Config(format!(
                "unknown infeasibility policy '{other}'"
            )))
        }
    };
    let mut solver = SolverConfig::from_scenario(&scenario);
    if let Some(v) = file.max_iters {
        if v == 0 {
            return Err(Error::Config("max_iters must be >= 1".into()));
        }
        solver.max_iters = v;
    }
    if let Some(v) = file.tol_rel {
        if v <= 0.0 {
            return Err(Error::Config("tol_rel must be positive".into()));
        }
        solver.tol_rel = v;
    }
    solver.infeasibility = infeasibility;

    let spec = ExperimentSpec {
        scenario,
        frameworks,
        objective,
        sweep,
        trials: file.trials.unwrap_or(100),
        seed: file.seed.unwrap_or(7),
        loss_case,
        solver,
    };
    spec.validate()?;
    Ok(spec)
}
