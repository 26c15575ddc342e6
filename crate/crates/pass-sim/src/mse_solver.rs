//! Alternating MMSE solver for the computation-oriented distortion problem.
//!
//! Each iteration runs three blocks: closed-form MMSE receive beams for the
//! fixed transmitters, a K x K linear system that pins the sensing powers
//! at the rate floors, and a scale-contracted transmit update that aims the
//! computation beams at the unit aggregation target inside the remaining
//! power budget. Iterations that fail to improve the receiver-optimal
//! distortion terminate the loop, so the reported trace is nonincreasing.

use num_complex::Complex64;

use crate::error::Error;
use crate::linalg::{solve_complex, solve_complex_multi, solve_real};
use crate::protocol::{
    mse_eval, sensing_mse_min, sinr_eval, BeamState, EffectiveChannel, RxBeam,
};
use crate::scenario::Scenario;

/// What to do when the sensing-power system leaves the feasible box.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InfeasibilityPolicy {
    /// Abort the solve with [`Error::InfeasibleRates`].
    Error,
    /// Clamp the offending power into [0, P_max] and flag the UE.
    ClampToPower,
}

/// Iteration limits and rate targets for either alternating solver.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub max_iters: usize,
    /// Relative-change stopping threshold on the tracked objective.
    pub tol_rel: f64,
    /// Per-UE SINR targets gamma_k = 2^rate_min - 1.
    pub rate_targets: Vec<f64>,
    pub infeasibility: InfeasibilityPolicy,
}

impl SolverConfig {
    pub fn from_scenario(scenario: &Scenario) -> Self {
        Self {
            max_iters: 100,
            tol_rel: 1e-6,
            rate_targets: scenario
                .rate_min_bps_hz
                .iter()
                .map(|r| 2f64.powf(*r) - 1.0)
                .collect(),
            infeasibility: InfeasibilityPolicy::ClampToPower,
        }
    }
}

/// Outcome of one alternating solve.
#[derive(Debug, Clone)]
pub struct SolverReport {
    pub iterations_used: usize,
    /// Computation distortion after each iteration.
    pub mse_trace: Vec<f64>,
    /// Per-iteration, per-UE sensing SINR.
    pub sinr_trace: Vec<Vec<f64>>,
    /// Weighted sum rate after each iteration.
    pub wsr_trace: Vec<f64>,
    /// Weighted-MMSE surrogate after each iteration (rate solver only).
    pub surrogate_trace: Vec<f64>,
    pub final_beams: BeamState,
    pub converged: bool,
    /// Whether each UE's rate floor holds at the final beams.
    pub rate_feasible: Vec<bool>,
    /// Whether any sensing power had to be clamped along the way.
    pub clamped: bool,
    /// Final distortion within the configured budget (rate solver only).
    pub mse_constraint_ok: bool,
}

impl SolverReport {
    pub fn final_mse(&self) -> f64 {
        self.mse_trace.last().copied().unwrap_or(f64::NAN)
    }

    pub fn final_wsr(&self) -> f64 {
        self.wsr_trace.last().copied().unwrap_or(f64::NAN)
    }

    pub fn final_sinr(&self) -> &[f64] {
        self.sinr_trace.last().map_or(&[], Vec::as_slice)
    }
}

/// Equal-split, channel-phase-aligned starting point:
/// w = v = sqrt(P/2) * exp(-j * aggregate channel phase).
pub fn default_initial_beams(eff: &EffectiveChannel, scenario: &Scenario) -> BeamState {
    let k_total = eff.num_ues();
    let mut tx_comp = Vec::with_capacity(k_total);
    let mut tx_sense = Vec::with_capacity(k_total);
    for k in 0..k_total {
        let amp = (scenario.p_max_watts[k] / 2.0).sqrt();
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

/// Closed-form MMSE receive beams for fixed transmit beams.
///
/// Scalar protocols: z = a / (|a|^2 + sum |g v|^2 + sigma_eff^2) with
/// a = sum_k g_k w_k, and u_k = g_k v_k / (|a|^2 + sum_{i != k} |g_i v_i|^2
/// + sigma_eff^2). Multiplexing: z = R^{-1} a with R the received
/// covariance, and u_k the solution of Omega u = H_k v_k against the full
/// signal-plus-noise covariance.
pub fn mmse_receivers(
    beams: &BeamState,
    eff: &EffectiveChannel,
) -> Result<(RxBeam, Vec<RxBeam>), Error> {
    match eff {
        EffectiveChannel::Scalar { gains, noise_power } => {
            let a: Complex64 = gains
                .iter()
                .zip(&beams.tx_comp)
                .map(|(g, w)| g * w)
                .sum();
            let sense_pow: Vec<f64> = gains
                .iter()
                .zip(&beams.tx_sense)
                .map(|(g, v)| (g * v).norm_sqr())
                .collect();
            let total_sense: f64 = sense_pow.iter().sum();
            let z = a / (a.norm_sqr() + total_sense + noise_power);
            let u = gains
                .iter()
                .zip(&beams.tx_sense)
                .enumerate()
                .map(|(k, (g, v))| {
                    let den = a.norm_sqr() + (total_sense - sense_pow[k]) + noise_power;
                    RxBeam::Scalar(g * v / den)
                })
                .collect();
            Ok((RxBeam::Scalar(z), u))
        }
        EffectiveChannel::Vector { gains, noise_power } => {
            let m = eff.dim();
            let k_total = gains.len();
            let mut a = vec![Complex64::new(0.0, 0.0); m];
            for (h, w) in gains.iter().zip(&beams.tx_comp) {
                for (r, hm) in h.iter().enumerate() {
                    a[r] += hm * w;
                }
            }
            // R = a a^H + sum_k |v_k|^2 H_k H_k^H + sigma^2 I.
            let mut r_mat = vec![vec![Complex64::new(0.0, 0.0); m]; m];
            for r in 0..m {
                for c in 0..m {
                    r_mat[r][c] = a[r] * a[c].conj();
                }
            }
            for (h, v) in gains.iter().zip(&beams.tx_sense) {
                let p = v.norm_sqr();
                for r in 0..m {
                    for c in 0..m {
                        r_mat[r][c] += h[r] * h[c].conj() * p;
                    }
                }
            }
            for (r, row) in r_mat.iter_mut().enumerate() {
                row[r] += noise_power;
            }
            let z = solve_complex(r_mat, a)?;

            // Omega = sum_i (|w_i|^2 + |v_i|^2) H_i H_i^H + sigma^2 I,
            // shared by every UE's sensing combiner.
            let mut omega = vec![vec![Complex64::new(0.0, 0.0); m]; m];
            for (i, h) in gains.iter().enumerate() {
                let p = beams.tx_comp[i].norm_sqr() + beams.tx_sense[i].norm_sqr();
                for r in 0..m {
                    for c in 0..m {
                        omega[r][c] += h[r] * h[c].conj() * p;
                    }
                }
            }
            for (r, row) in omega.iter_mut().enumerate() {
                row[r] += noise_power;
            }
            let rhs: Vec<Vec<Complex64>> = (0..m)
                .map(|r| {
                    (0..k_total)
                        .map(|k| gains[k][r] * beams.tx_sense[k])
                        .collect()
                })
                .collect();
            let solved = solve_complex_multi(omega, rhs)?;
            let u = (0..k_total)
                .map(|k| RxBeam::Vector((0..m).map(|r| solved[r][k]).collect()))
                .collect();
            Ok((RxBeam::Vector(z), u))
        }
    }
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

/// Sensing powers |v_k|^2 solving the rate floors at equality:
/// (1/gamma_k) c_kk x_k - sum_{i != k} c_ki x_i = sum_i c_ki |w_i|^2 +
/// sigma_eff^2, with c_ki = |<u_k, g_i>|^2 scaled by the combiner norm.
/// UEs with gamma = 0 keep x = 0. Returns the powers and per-UE
/// feasibility flags (false where clamping was applied).
pub fn rate_power_system(
    beams: &BeamState,
    eff: &EffectiveChannel,
    receivers: &[RxBeam],
    scenario: &Scenario,
    config: &SolverConfig,
) -> Result<(Vec<f64>, Vec<bool>), Error> {
    let k_total = eff.num_ues();
    let mut powers = vec![0.0; k_total];
    let mut feasible = vec![true; k_total];
    let mut active = Vec::new();
    for k in 0..k_total {
        if config.rate_targets[k] <= 0.0 {
            continue; // rate floor vacuous, zero sensing power suffices
        }
        if receivers[k].norm_sqr() == 0.0 {
            // Without a combiner the floor cannot be met at any power.
            match config.infeasibility {
                InfeasibilityPolicy::Error => {
                    return Err(Error::InfeasibleRates { ue: k, v_sq: 0.0 });
                }
                InfeasibilityPolicy::ClampToPower => {
                    feasible[k] = false;
                    continue;
                }
            }
        }
        active.push(k);
    }
    if active.is_empty() {
        return Ok((powers, feasible));
    }
    let n = active.len();
    let mut a = vec![vec![0.0; n]; n];
    let mut b = vec![0.0; n];
    for (row, &k) in active.iter().enumerate() {
        let u_norm_sq = receivers[k].norm_sqr();
        let coeff: Vec<f64> = (0..k_total)
            .map(|i| rx_inner(&receivers[k], eff, i).norm_sqr() / u_norm_sq)
            .collect();
        let mut rhs = eff.noise_power();
        for i in 0..k_total {
            rhs += coeff[i] * beams.tx_comp[i].norm_sqr();
        }
        for (col, &i) in active.iter().enumerate() {
            a[row][col] = if i == k {
                coeff[i] / config.rate_targets[k]
            } else {
                -coeff[i]
            };
        }
        b[row] = rhs;
    }
    let solution = match solve_real(a, b) {
        Ok(x) => x,
        Err(Error::SingularCovariance) => match config.infeasibility {
            InfeasibilityPolicy::Error => {
                return Err(Error::InfeasibleRates {
                    ue: active[0],
                    v_sq: f64::NAN,
                });
            }
            // A singular system sits exactly on the feasibility boundary;
            // saturate the active UEs and let the flags record it.
            InfeasibilityPolicy::ClampToPower => vec![f64::NAN; n],
        },
        Err(e) => return Err(e),
    };
    for (row, &k) in active.iter().enumerate() {
        let mut x = solution[row];
        if x.is_nan() || x < -1e-12 || x > scenario.p_max_watts[k] {
            match config.infeasibility {
                InfeasibilityPolicy::Error => {
                    return Err(Error::InfeasibleRates { ue: k, v_sq: x });
                }
                InfeasibilityPolicy::ClampToPower => {
                    x = if x.is_nan() { scenario.p_max_watts[k] } else { x };
                    x = x.clamp(0.0, scenario.p_max_watts[k]);
                    feasible[k] = false;
                }
            }
        }
        powers[k] = x.max(0.0);
    }
    Ok((powers, feasible))
}

/// Closed-form transmit update for fixed receivers and sensing powers.
///
/// The computation beams keep the aimed direction conj(<z, g_k>) and take
/// the amplitudes minimizing the aggregation mismatch |z^H sum g_k w_k -
/// 1|^2 inside the residual per-UE budgets: the minimum-norm multiplier
/// solution, clipped user by user, and full saturation when the unit
/// target is out of reach. The sensing beams take the allocated amplitude
/// with matched phase.
pub fn transmit_update(
    eff: &EffectiveChannel,
    rx_comp: &RxBeam,
    rx_sense: &[RxBeam],
    sensing_powers: &[f64],
    scenario: &Scenario,
) -> (Vec<Complex64>, Vec<Complex64>) {
    let k_total = eff.num_ues();
    let c: Vec<Complex64> = (0..k_total).map(|k| rx_inner(rx_comp, eff, k)).collect();
    let radii: Vec<f64> = (0..k_total)
        .map(|k| (scenario.p_max_watts[k] - sensing_powers[k]).max(0.0).sqrt())
        .collect();
    let amps = aimed_amplitudes(&c, &radii);
    let mut tx_comp = Vec::with_capacity(k_total);
    let mut tx_sense = Vec::with_capacity(k_total);
    for k in 0..k_total {
        let ck = c[k];
        let w = if ck.norm() > 0.0 {
            ck.conj() / ck.norm() * amps[k]
        } else {
            Complex64::new(0.0, 0.0)
        };
        tx_comp.push(w);
        let phase = rx_inner(&rx_sense[k], eff, k).arg();
        tx_sense.push(Complex64::from_polar(sensing_powers[k].sqrt(), phase));
    }
    (tx_comp, tx_sense)
}

/// Amplitudes x_k in [0, r_k] minimizing (sum_k |c_k| x_k - 1)^2: saturate
/// everything when the target is unreachable, otherwise the minimum-norm
/// multiplier solution x_k = min(mu |c_k|, r_k) with mu fixed by a
/// breakpoint scan.
fn aimed_amplitudes(c: &[Complex64], radii: &[f64]) -> Vec<f64> {
    let a: Vec<f64> = c.iter().map(|ck| ck.norm()).collect();
    let reach: f64 = a.iter().zip(radii).map(|(ak, rk)| ak * rk).sum();
    if reach <= 1.0 {
        return radii.to_vec();
    }
    // Breakpoints mu_k = r_k / a_k where user k's budget clips.
    let mut order: Vec<usize> = (0..a.len()).filter(|&k| a[k] > 0.0).collect();
    order.sort_by(|&i, &j| (radii[i] / a[i]).total_cmp(&(radii[j] / a[j])));
    let mut unclipped_sq: f64 = order.iter().map(|&k| a[k] * a[k]).sum();
    let mut clipped_sum = 0.0;
    let mut mu = if unclipped_sq > 0.0 { 1.0 / unclipped_sq } else { 0.0 };
    for &k in &order {
        let breakpoint = radii[k] / a[k];
        if mu <= breakpoint {
            break;
        }
        // User k saturates; redistribute the remaining target.
        clipped_sum += a[k] * radii[k];
        unclipped_sq -= a[k] * a[k];
        if unclipped_sq <= 0.0 {
            mu = f64::INFINITY;
            break;
        }
        mu = (1.0 - clipped_sum) / unclipped_sq;
    }
    a.iter()
        .zip(radii)
        .map(|(&ak, &rk)| if ak > 0.0 { (mu * ak).min(rk) } else { 0.0 })
        .collect()
}

/// Alternating MMSE minimization of the computation distortion under rate
/// floors and per-UE power budgets.
pub fn ao_mmse(
    initial: BeamState,
    eff: &EffectiveChannel,
    scenario: &Scenario,
    config: &SolverConfig,
) -> Result<SolverReport, Error> {
    let mut beams = initial;
    let (z0, u0) = mmse_receivers(&beams, eff)?;
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

    let mut prev_mse = f64::INFINITY;
    for t in 1..=config.max_iters {
        let (sense_pow, feas) =
            rate_power_system(&beams, eff, &beams.rx_sense, scenario, config)?;
        let (w, v) = transmit_update(eff, &beams.rx_comp, &beams.rx_sense, &sense_pow, scenario);
        let mut candidate = BeamState {
            tx_comp: w,
            tx_sense: v,
            rx_comp: beams.rx_comp.clone(),
            rx_sense: beams.rx_sense.clone(),
        };
        let (z, u) = mmse_receivers(&candidate, eff)?;
        candidate.rx_comp = z;
        candidate.rx_sense = u;
        let mse = mse_eval(&candidate, eff)?;
        if mse > prev_mse * (1.0 + 1e-12) + 1e-15 {
            // A non-improving step means the alternation has stalled.
            report.converged = true;
            break;
        }
        beams = candidate;
        report.iterations_used = t;
        report.clamped |= feas.iter().any(|ok| !ok);
        report.mse_trace.push(mse);
        let sinr = sinr_eval(&beams, eff)?;
        report.wsr_trace.push(
            sinr.iter()
                .zip(&scenario.weights)
                .map(|(&s, &th)| th * (1.0 + s).log2())
                .sum(),
        );
        report.sinr_trace.push(sinr);
        if config.tol_rel.is_infinite() {
            report.converged = true;
            break;
        }
        if prev_mse.is_finite()
            && (prev_mse - mse).abs() <= config.tol_rel * prev_mse.max(f64::MIN_POSITIVE)
        {
            report.converged = true;
            break;
        }
        prev_mse = mse;
    }

    let final_sinr = sinr_eval(&beams, eff)?;
    report.rate_feasible = final_sinr
        .iter()
        .zip(&config.rate_targets)
        .map(|(&s, &g)| s >= g * (1.0 - 1e-6) - 1e-15)
        .collect();
    report.mse_constraint_ok = report.final_mse() <= scenario.mse_budget;
    report.final_beams = beams;
    Ok(report)
}

/// Per-UE minimum sensing MSE at the current transmit beams; re-exported
/// convenience for weight updates and diagnostics.
pub fn sensing_mse(beams: &BeamState, eff: &EffectiveChannel) -> Result<Vec<f64>, Error> {
    sensing_mse_min(&beams.tx_comp, &beams.tx_sense, eff)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{composite_channel, place_pas, select_segment};
    use crate::protocol::{effective_channel, ProtocolKind};
    use crate::scenario::UePosition;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn desk_effective(seed: u64, protocol: &str) -> (EffectiveChannel, Scenario) {
        let s = Scenario::default_desk();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ues: Vec<UePosition> = (0..s.num_ues)
            .map(|_| {
                UePosition::new(
                    rng.gen_range(0.0..s.area_x),
                    rng.gen_range(0.0..2.0 * s.area_half_y),
                )
            })
            .collect();
        let placement = place_pas(&ues, &s);
        let channels = composite_channel(&ues, &placement, &s).unwrap();
        let kind = match protocol {
            "SS" => ProtocolKind::SegmentSelection(select_segment(&channels)),
            "SA" => ProtocolKind::SegmentAggregation,
            _ => ProtocolKind::SegmentMultiplexing,
        };
        (effective_channel(&channels, kind, &s), s)
    }

    #[test]
    fn receivers_zero_for_zero_transmit_comp() {
        let (eff, s) = desk_effective(1, "SS");
        let mut beams = default_initial_beams(&eff, &s);
        for w in beams.tx_comp.iter_mut() {
            *w = Complex64::new(0.0, 0.0);
        }
        let (z, _) = mmse_receivers(&beams, &eff).unwrap();
        assert_eq!(z.norm_sqr(), 0.0);
    }

    #[test]
    fn receiver_magnitude_shrinks_with_noise() {
        let (eff, s) = desk_effective(2, "SS");
        let beams = default_initial_beams(&eff, &s);
        let mut prev = f64::INFINITY;
        for boost in [1.0, 1e3, 1e6, 1e9] {
            let noisy = match &eff {
                EffectiveChannel::Scalar { gains, noise_power } => EffectiveChannel::Scalar {
                    gains: gains.clone(),
                    noise_power: noise_power * boost,
                },
                EffectiveChannel::Vector { gains, noise_power } => EffectiveChannel::Vector {
                    gains: gains.clone(),
                    noise_power: noise_power * boost,
                },
            };
            let (z, _) = mmse_receivers(&beams, &noisy).unwrap();
            let mag = z.norm_sqr();
            assert!(mag < prev);
            prev = mag;
        }
    }

    #[test]
    fn sm_receivers_satisfy_stationarity() {
        // Omega u = H v must hold to near machine precision.
        let (eff, s) = desk_effective(3, "SM");
        let beams = default_initial_beams(&eff, &s);
        let (_, u) = mmse_receivers(&beams, &eff).unwrap();
        if let EffectiveChannel::Vector { gains, noise_power } = &eff {
            let m = eff.dim();
            let mut omega = vec![vec![Complex64::new(0.0, 0.0); m]; m];
            for (i, h) in gains.iter().enumerate() {
                let p = beams.tx_comp[i].norm_sqr() + beams.tx_sense[i].norm_sqr();
                for r in 0..m {
                    for c in 0..m {
                        omega[r][c] += h[r] * h[c].conj() * p;
                    }
                }
            }
            for (r, row) in omega.iter_mut().enumerate() {
                row[r] += noise_power;
            }
            for (k, uk) in u.iter().enumerate() {
                let uk = match uk {
                    RxBeam::Vector(v) => v,
                    _ => unreachable!(),
                };
                let target: Vec<Complex64> = gains[k]
                    .iter()
                    .map(|h| h * beams.tx_sense[k])
                    .collect();
                let target_norm: f64 = target.iter().map(|t| t.norm_sqr()).sum::<f64>().sqrt();
                for r in 0..m {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for c in 0..m {
                        acc += omega[r][c] * uk[c];
                    }
                    assert!(
                        (acc - target[r]).norm() <= 1e-10 * target_norm,
                        "UE {k} residual row {r}"
                    );
                }
            }
        }
    }

    #[test]
    fn single_user_rate_power_closed_form() {
        let g = Complex64::new(3e-4, 1e-4);
        let eff = EffectiveChannel::Scalar {
            gains: vec![g],
            noise_power: 1e-12,
        };
        let mut s = Scenario::default_desk();
        s.num_ues = 1;
        s.p_max_watts = vec![0.01];
        s.rate_min_bps_hz = vec![0.5];
        s.weights = vec![1.0];
        let config = SolverConfig::from_scenario(&s);
        let gamma = config.rate_targets[0];
        let w = Complex64::new(0.05, 0.0);
        let u = RxBeam::Scalar(Complex64::new(0.3, -0.1));
        let beams = BeamState {
            tx_comp: vec![w],
            tx_sense: vec![Complex64::new(0.0, 0.0)],
            rx_comp: RxBeam::Scalar(Complex64::new(1.0, 0.0)),
            rx_sense: vec![u.clone()],
        };
        let (powers, feas) =
            rate_power_system(&beams, &eff, &[u.clone()], &s, &config).unwrap();
        // K = 1: |v|^2 = gamma (|u g w|^2 + sigma^2 |u|^2) / |u g|^2.
        let u_val = match u {
            RxBeam::Scalar(x) => x,
            _ => unreachable!(),
        };
        let expected = gamma * ((u_val.conj() * g * w).norm_sqr() + 1e-12 * u_val.norm_sqr())
            / (u_val.conj() * g).norm_sqr();
        assert!(feas[0]);
        assert!((powers[0] - expected).abs() <= 1e-12 * expected);
    }

    #[test]
    fn zero_rate_targets_need_no_sensing_power() {
        let (eff, mut s) = desk_effective(4, "SA");
        s.rate_min_bps_hz = vec![0.0; s.num_ues];
        let config = SolverConfig::from_scenario(&s);
        let beams = default_initial_beams(&eff, &s);
        let (z, u) = mmse_receivers(&beams, &eff).unwrap();
        let mut beams = beams;
        beams.rx_comp = z;
        beams.rx_sense = u.clone();
        let (powers, feas) = rate_power_system(&beams, &eff, &u, &s, &config).unwrap();
        assert!(powers.iter().all(|&x| x == 0.0));
        assert!(feas.iter().all(|&ok| ok));
    }

    #[test]
    fn rate_power_matches_dense_solve_oracle() {
        // Independent Gaussian elimination without pivoting, K = 3.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let k = 3;
        let gains: Vec<Complex64> = (0..k)
            .map(|_| Complex64::new(rng.gen_range(0.1..1.0), rng.gen_range(-0.5..0.5)))
            .collect();
        let eff = EffectiveChannel::Scalar {
            gains: gains.clone(),
            noise_power: 0.01,
        };
        let mut s = Scenario::default_desk();
        s.num_ues = k;
        s.p_max_watts = vec![1e6; k]; // wide open box to keep solutions inside
        s.rate_min_bps_hz = vec![0.3; k];
        s.weights = vec![1.0; k];
        let config = SolverConfig::from_scenario(&s);
        let w: Vec<Complex64> = (0..k)
            .map(|_| Complex64::new(rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3)))
            .collect();
        let u: Vec<RxBeam> = (0..k)
            .map(|_| {
                RxBeam::Scalar(Complex64::new(
                    rng.gen_range(0.2..1.0),
                    rng.gen_range(-1.0..1.0),
                ))
            })
            .collect();
        let beams = BeamState {
            tx_comp: w.clone(),
            tx_sense: vec![Complex64::new(0.0, 0.0); k],
            rx_comp: RxBeam::Scalar(Complex64::new(1.0, 0.0)),
            rx_sense: u.clone(),
        };
        let (powers, _) = rate_power_system(&beams, &eff, &u, &s, &config).unwrap();

        // Oracle: assemble and eliminate by hand (scalar receivers cancel).
        let gamma = &config.rate_targets;
        let mut a = vec![vec![0.0f64; k]; k];
        let mut b = vec![0.0f64; k];
        for kk in 0..k {
            for i in 0..k {
                let gi2 = gains[i].norm_sqr();
                a[kk][i] = if i == kk { gi2 / gamma[kk] } else { -gi2 };
                b[kk] += gi2 * w[i].norm_sqr();
            }
            b[kk] += 0.01;
        }
        for col in 0..k {
            for row in col + 1..k {
                let f = a[row][col] / a[col][col];
                for c in col..k {
                    a[row][c] -= f * a[col][c];
                }
                b[row] -= f * b[col];
            }
        }
        let mut oracle = vec![0.0f64; k];
        for row in (0..k).rev() {
            let mut acc = b[row];
            for c in row + 1..k {
                acc -= a[row][c] * oracle[c];
            }
            oracle[row] = acc / a[row][row];
        }
        for kk in 0..k {
            assert!(
                (powers[kk] - oracle[kk]).abs() <= 1e-10 * oracle[kk].abs().max(1.0),
                "UE {kk}: {} vs oracle {}",
                powers[kk],
                oracle[kk]
            );
        }
    }

    #[test]
    fn infeasible_rates_error_policy() {
        let (eff, mut s) = desk_effective(6, "SS");
        s.rate_min_bps_hz = vec![3.0; s.num_ues]; // impossible with one chain and 4 UEs
        let mut config = SolverConfig::from_scenario(&s);
        config.infeasibility = InfeasibilityPolicy::Error;
        let beams = default_initial_beams(&eff, &s);
        let (z, u) = mmse_receivers(&beams, &eff).unwrap();
        let mut beams = beams;
        beams.rx_comp = z;
        beams.rx_sense = u.clone();
        assert!(matches!(
            rate_power_system(&beams, &eff, &u, &s, &config),
            Err(Error::InfeasibleRates { .. })
        ));
    }

    #[test]
    fn transmit_update_exhausted_budget_zeroes_comp() {
        let (eff, s) = desk_effective(7, "SS");
        let beams = default_initial_beams(&eff, &s);
        let (z, u) = mmse_receivers(&beams, &eff).unwrap();
        let full: Vec<f64> = s.p_max_watts.clone();
        let (w, v) = transmit_update(&eff, &z, &u, &full, &s);
        for k in 0..s.num_ues {
            assert_eq!(w[k], Complex64::new(0.0, 0.0));
            assert!((v[k].norm_sqr() - s.p_max_watts[k]).abs() < 1e-15);
        }
    }

    #[test]
    fn transmit_update_real_positive_for_real_channel() {
        let eff = EffectiveChannel::Scalar {
            gains: vec![Complex64::new(4e-4, 0.0)],
            noise_power: 1e-12,
        };
        let mut s = Scenario::default_desk();
        s.num_ues = 1;
        s.p_max_watts = vec![0.01];
        s.rate_min_bps_hz = vec![0.2];
        s.weights = vec![1.0];
        let z = RxBeam::Scalar(Complex64::new(2.0, 0.0));
        let u = vec![RxBeam::Scalar(Complex64::new(1.0, 0.0))];
        let (w, v) = transmit_update(&eff, &z, &u, &[0.004], &s);
        assert!(w[0].im.abs() < 1e-15 && w[0].re > 0.0);
        assert!(v[0].im.abs() < 1e-15 && v[0].re > 0.0);
        // Budget respected with equality for a single user.
        assert!((w[0].norm_sqr() + v[0].norm_sqr() - 0.01).abs() < 1e-12);
    }

    #[test]
    fn transmit_update_beats_random_directions() {
        // The aimed computation beams reach a distortion no random
        // power-feasible pair with the same sensing powers improves on.
        let (eff, s) = desk_effective(8, "SS");
        let init = default_initial_beams(&eff, &s);
        let (z, u) = mmse_receivers(&init, &eff).unwrap();
        let sense_pow = vec![0.002; s.num_ues];
        let (w, v) = transmit_update(&eff, &z, &u, &sense_pow, &s);
        let closed = BeamState {
            tx_comp: w,
            tx_sense: v,
            rx_comp: z.clone(),
            rx_sense: u.clone(),
        };
        let closed_mse = mse_eval(&closed, &eff).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut beaten = 0;
        for _ in 0..10_000 {
            let mut cand = closed.clone();
            for k in 0..s.num_ues {
                let residual = (s.p_max_watts[k] - sense_pow[k]).max(0.0);
                let amp = rng.gen_range(0.0..residual.sqrt());
                let phase = rng.gen_range(0.0..std::f64::consts::TAU);
                cand.tx_comp[k] = Complex64::from_polar(amp, phase);
                cand.tx_sense[k] = Complex64::from_polar(
                    sense_pow[k].sqrt(),
                    rng.gen_range(0.0..std::f64::consts::TAU),
                );
            }
            if mse_eval(&cand, &eff).unwrap() < closed_mse - 1e-12 {
                beaten += 1;
            }
        }
        assert_eq!(beaten, 0, "random sampling improved on the closed form");
    }

    #[test]
    fn ao_mmse_single_iteration_with_infinite_tolerance() {
        let (eff, s) = desk_effective(9, "SA");
        let mut config = SolverConfig::from_scenario(&s);
        config.tol_rel = f64::INFINITY;
        let report = ao_mmse(default_initial_beams(&eff, &s), &eff, &s, &config).unwrap();
        assert_eq!(report.iterations_used, 1);
        assert!(report.converged);
    }

    #[test]
    fn ao_mmse_trace_monotone_and_converges() {
        for protocol in ["SS", "SA", "SM"] {
            for seed in 0..10 {
                let (eff, s) = desk_effective(100 + seed, protocol);
                let config = SolverConfig::from_scenario(&s);
                let report =
                    ao_mmse(default_initial_beams(&eff, &s), &eff, &s, &config).unwrap();
                assert!(report.converged, "{protocol} seed {seed} did not converge");
                assert!(
                    report.iterations_used <= 25,
                    "{protocol} seed {seed}: {} iterations",
                    report.iterations_used
                );
                for pair in report.mse_trace.windows(2) {
                    assert!(
                        pair[1] <= pair[0] + 1e-9,
                        "{protocol} seed {seed}: trace increased {} -> {}",
                        pair[0],
                        pair[1]
                    );
                }
                assert!(report.final_beams.power_feasible(&s));
            }
        }
    }

    #[test]
    fn receiver_perturbations_never_help() {
        let (eff, s) = desk_effective(11, "SM");
        let config = SolverConfig::from_scenario(&s);
        let report = ao_mmse(default_initial_beams(&eff, &s), &eff, &s, &config).unwrap();
        let beams = report.final_beams;
        let base = mse_eval(&beams, &eff).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..100 {
            let mut perturbed = beams.clone();
            if let RxBeam::Vector(z) = &mut perturbed.rx_comp {
                let mut delta: Vec<Complex64> = (0..z.len())
                    .map(|_| {
                        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                    })
                    .collect();
                let norm: f64 = delta.iter().map(|d| d.norm_sqr()).sum::<f64>().sqrt();
                for (zm, d) in z.iter_mut().zip(delta.iter_mut()) {
                    *zm += *d / norm * 1e-3;
                }
            }
            let worse = mse_eval(&perturbed, &eff).unwrap();
            assert!(worse >= base - 1e-12);
        }
    }
}
