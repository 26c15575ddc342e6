//! Alternating weighted-MMSE solver for the rate-oriented problem.
//!
//! The weighted sum rate is handled through the per-UE sensing MSE: at the
//! optimal combiner the minimum sensing MSE a_k equals 1 / (1 + SINR_k),
//! so maximizing the weighted rates matches minimizing the weighted
//! surrogate sum_k theta_k (beta_k a_k - log2 beta_k) with the auxiliary
//! weights updated to beta_k = 1 / a_k. Receive beams reuse the MMSE
//! closed forms of the distortion solver verbatim; the transmit update
//! keeps the computation aim weighted by theta_k beta_k and puts the
//! sensing beams at full nominal amplitude before a per-UE joint rescale
//! back into the power budget. Iterations stop as soon as the surrogate
//! fails to improve, which keeps the reported trace nonincreasing.

use num_complex::Complex64;

use crate::error::Error;
use crate::mse_solver::{sensing_mse, SolverConfig, SolverReport};
pub use crate::mse_solver::mmse_receivers as wsr_mmse_receivers;
use crate::protocol::{mse_eval, BeamState, EffectiveChannel, RxBeam};
use crate::scenario::Scenario;

/// Auxiliary weights beta_k = 1 / a_k from the per-UE minimum sensing MSE,
/// floored at 1 (a_k <= 1 at the optimal combiner).
pub fn update_weights(beams: &BeamState, eff: &EffectiveChannel) -> Result<Vec<f64>, Error> {
    let a = sensing_mse(beams, eff)?;
    Ok(a
        .iter()
        .map(|&ak| if ak > 0.0 { (1.0 / ak).max(1.0) } else { 1.0 })
        .collect())
}

/// Weighted surrogate sum_k theta_k (beta_k a_k - ln beta_k) at the
/// combiner-optimal sensing MSEs of the given beams. In this natural-log
/// form the weight update beta_k = 1/a_k is the exact minimizer over the
/// weights, so every block of the alternation is nonexpanding on it.
pub fn surrogate_objective(
    beams: &BeamState,
    eff: &EffectiveChannel,
    weights: &[f64],
    betas: &[f64],
) -> Result<f64, Error> {
    let a = sensing_mse(beams, eff)?;
    Ok(a
        .iter()
        .zip(betas)
        .zip(weights)
        .map(|((&ak, &bk), &th)| th * (bk * ak - bk.ln()))
        .sum())
}

fn rx_inner(rx: &RxBeam, eff: &EffectiveChannel, k: usize) -> Complex64 {
    match (rx, eff) {
        (RxBeam::Scalar(u), EffectiveChannel::Scalar { gains, .. }) => u.conj() * gains[k],
        (RxBeam::Vector(u), EffectiveChannel::Vector { gains, .. }) => u
            .iter()
            .zip(&gains[k])
            .map(|(um, hm)| um.conj() * hm)
            .sum(),
        _ => Complex64::new(0.0, 0.0),
    }
}

/// Closed-form transmit update for the rate-oriented solver.
///
/// Scalar protocols: w_k = theta_k beta_k |u_k| conj(<z, g_k>) /
/// (|z|^2 sum_i theta_i beta_i |g_i|^2 |u_i|), the aimed direction with
/// rate-weighted magnitudes. Multiplexing additionally carries the
/// (1 + sqrt(zeta)) distortion-budget factor in the numerator and the
/// nested combiner-power denominators. The sensing beams start at the full
/// budget amplitude with matched phase, then each pair (w_k, v_k) is
/// scaled by the largest c_k in (0, 1] restoring |w|^2 + |v|^2 <= P_max.
/// The incumbent pair is kept whenever the candidate would worsen the
/// weighted surrogate, so the update never regresses.
pub fn wsr_transmit_update(
    eff: &EffectiveChannel,
    rx_comp: &RxBeam,
    rx_sense: &[RxBeam],
    betas: &[f64],
    current: (&[Complex64], &[Complex64]),
    scenario: &Scenario,
) -> Result<(Vec<Complex64>, Vec<Complex64>), Error> {
    let (w, v) = wsr_transmit_candidate(eff, rx_comp, rx_sense, betas, scenario);
    let probe = |tx_comp: &[Complex64], tx_sense: &[Complex64]| -> Result<f64, Error> {
        let a = crate::protocol::sensing_mse_min(tx_comp, tx_sense, eff)?;
        Ok(a
            .iter()
            .zip(betas)
            .zip(&scenario.weights)
            .map(|((&ak, &bk), &th)| th * (bk * ak - bk.ln()))
            .sum())
    };
    let candidate_obj = probe(&w, &v)?;
    let incumbent_obj = probe(current.0, current.1)?;
    if candidate_obj <= incumbent_obj {
        Ok((w, v))
    } else {
        Ok((current.0.to_vec(), current.1.to_vec()))
    }
}

/// The unguarded closed-form candidate behind [`wsr_transmit_update`].
pub fn wsr_transmit_candidate(
    eff: &EffectiveChannel,
    rx_comp: &RxBeam,
    rx_sense: &[RxBeam],
    betas: &[f64],
    scenario: &Scenario,
) -> (Vec<Complex64>, Vec<Complex64>) {
    let k_total = eff.num_ues();
    let theta = &scenario.weights;
    let c: Vec<Complex64> = (0..k_total).map(|k| rx_inner(rx_comp, eff, k)).collect();
    let z_norm_sq = rx_comp.norm_sqr();
    let u_gain: Vec<f64> = (0..k_total)
        .map(|k| rx_inner(&rx_sense[k], eff, k).norm())
        .collect();

    let mut w_nominal = vec![Complex64::new(0.0, 0.0); k_total];
    match eff {
        EffectiveChannel::Scalar { gains, .. } => {
            let u_mag: Vec<f64> = rx_sense
                .iter()
                .map(|u| u.norm_sqr().sqrt())
                .collect();
            let denom: f64 = (0..k_total)
                .map(|i| theta[i] * betas[i] * gains[i].norm_sqr() * u_mag[i])
                .sum::<f64>()
                * z_norm_sq;
            if denom > 0.0 {
                for k in 0..k_total {
                    w_nominal[k] = c[k].conj() * (theta[k] * betas[k] * u_mag[k] / denom);
                }
            }
        }
        EffectiveChannel::Vector { .. } => {
            let zeta_factor = 1.0 + scenario.mse_budget.sqrt();
            let theta_sum: f64 = theta.iter().sum();
            let z_channel_power: f64 = c.iter().map(|ck| ck.norm_sqr()).sum();
            let weighted_combined: f64 = (0..k_total)
                .map(|i| theta[i] * betas[i] * u_gain[i] * u_gain[i])
                .sum();
            if z_channel_power > 0.0 && weighted_combined > 0.0 {
                for k in 0..k_total {
                    let own = betas[k] * u_gain[k] * u_gain[k];
                    if own > 0.0 {
                        let scale = zeta_factor * theta_sum
                            / (z_channel_power * own * weighted_combined);
                        w_nominal[k] = c[k].conj() * scale;
                    }
                }
            }
        }
    }

    let mut tx_comp = Vec::with_capacity(k_total);
    let mut tx_sense = Vec::with_capacity(k_total);
    for k in 0..k_total {
        let p = scenario.p_max_watts[k];
        let phase = rx_inner(&rx_sense[k], eff, k).arg();
        let v_nominal = Complex64::from_polar(p.sqrt(), phase);
        let total = w_nominal[k].norm_sqr() + v_nominal.norm_sqr();
        let scale = if total > p { (p / total).sqrt() } else { 1.0 };
        tx_comp.push(w_nominal[k] * scale);
        tx_sense.push(v_nominal * scale);
    }
    (tx_comp, tx_sense)
}

/// Low-power, channel-phase-aligned starting point for the rate solver:
/// the iteration grows both streams out of a deliberately weak start so
/// the surrogate has room to descend.
pub fn wsr_initial_beams(eff: &EffectiveChannel, scenario: &Scenario) -> BeamState {
    let k_total = eff.num_ues();
    let mut tx_comp = Vec::with_capacity(k_total);
    let mut tx_sense = Vec::with_capacity(k_total);
    for k in 0..k_total {
        let amp = (scenario.p_max_watts[k] / 200.0).sqrt();
        let beam = Complex64::from_polar(amp, -eff.aggregate_phase(k));
        tx_comp.push(beam);
        tx_sense.push(beam);
    }
    BeamState {
        tx_comp,
        tx_sense,
        rx_comp: RxBeam::zero_like(eff),
        rx_sense: (0..k_total).map(|_| RxBeam::zero_like(eff)).collect(),
    }
}

/// Alternating weighted-MMSE maximization of the weighted sum rate under
/// per-UE power budgets, with the computation distortion tracked against
/// the configured budget.
pub fn ao_wmmse(
    initial: BeamState,
    eff: &EffectiveChannel,
    scenario: &Scenario,
    config: &SolverConfig,
) -> Result<SolverReport, Error> {
    let mut beams = initial;
    let (z0, u0) = wsr_mmse_receivers(&beams, eff)?;
    beams.rx_comp = z0;
    beams.rx_sense = u0;

    let mut report = SolverReport {
        iterations_used: 0,
        mse_trace: Vec::new(),
        sinr_trace: Vec::new(),
        wsr_trace: Vec::new(),
        surrogate_trace: Vec::new(),
        final_beams: beams.clone(),
        converged: false,
        rate_feasible: vec![true; eff.num_ues()],
        clamped: false,
        mse_constraint_ok: true,
    };

    let mut prev_surrogate = f64::INFINITY;
    for t in 1..=config.max_iters {
        let betas = update_weights(&beams, eff)?;
        let (w, v) = wsr_transmit_update(
            eff,
            &beams.rx_comp,
            &beams.rx_sense,
            &betas,
            (&beams.tx_comp, &beams.tx_sense),
            scenario,
        )?;
        let mut candidate = BeamState {
            tx_comp: w,
            tx_sense: v,
            rx_comp: beams.rx_comp.clone(),
            rx_sense: beams.rx_sense.clone(),
        };
        let (z, u) = wsr_mmse_receivers(&candidate, eff)?;
        candidate.rx_comp = z;
        candidate.rx_sense = u;
        let surrogate = surrogate_objective(&candidate, eff, &scenario.weights, &betas)?;
        if surrogate > prev_surrogate + 1e-12 * prev_surrogate.abs().max(1.0) {
            report.converged = true;
            break;
        }
        beams = candidate;
        report.iterations_used = t;
        report.surrogate_trace.push(surrogate);
        // At the fresh combiners the minimum sensing MSE gives the rates.
        let a = sensing_mse(&beams, eff)?;
        let sinr: Vec<f64> = a.iter().map(|&ak| (1.0 / ak - 1.0).max(0.0)).collect();
        report.wsr_trace.push(
            sinr.iter()
                .zip(&scenario.weights)
                .map(|(&s, &th)| th * (1.0 + s).log2())
                .sum(),
        );
        report.sinr_trace.push(sinr);
        report.mse_trace.push(mse_eval(&beams, eff)?);
        if config.tol_rel.is_infinite() {
            report.converged = true;
            break;
        }
        if prev_surrogate.is_finite()
            && (prev_surrogate - surrogate).abs()
                <= config.tol_rel * prev_surrogate.abs().max(f64::MIN_POSITIVE)
        {
            report.converged = true;
            break;
        }
        prev_surrogate = surrogate;
    }

    report.mse_constraint_ok = report
        .mse_trace
        .last()
        .map_or(true, |&m| m <= scenario.mse_budget);
    report.rate_feasible = vec![true; eff.num_ues()];
    report.final_beams = beams;
    Ok(report)
}
