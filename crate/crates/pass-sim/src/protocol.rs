//! Uplink operating protocols and exact metric evaluation.
//!
//! Three ways of wiring the segmented waveguide to the RF front end:
//! segment selection keeps one segment (scalar channel, noise sigma^2),
//! segment aggregation sums all segments into one chain (scalar channel,
//! noise M*sigma^2), and segment multiplexing gives each segment its own
//! chain (length-M channel vectors, per-branch noise sigma^2).
//!
//! The computation distortion treats the aggregate beamforming gain against
//! a unit target: MSE = |z^H sum_k g_k w_k - 1|^2 + sum_k |z^H g_k v_k|^2 +
//! sigma_eff^2 ||z||^2, which is the expectation of |x' - s|^2 over
//! unit-power symbols and noise when every UE carries the shared
//! computation symbol. The sensing SINR uses the incoherent interference
//! form, so that the minimum per-UE sensing MSE at the optimal combiner
//! equals 1 / (1 + SINR).

use num_complex::Complex64;

use crate::channel::ChannelSet;
use crate::error::Error;
use crate::linalg::solve_complex_multi;
use crate::scenario::Scenario;

/// Waveguide-to-RF-chain operating protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProtocolKind {
    /// One segment (zero-based index) switched to the single RF chain.
    SegmentSelection(usize),
    /// All segments summed into the single RF chain.
    SegmentAggregation,
    /// One RF chain per segment.
    SegmentMultiplexing,
}

impl ProtocolKind {
    pub fn label(&self) -> &'static str {
        match self {
            ProtocolKind::SegmentSelection(_) => "SS",
            ProtocolKind::SegmentAggregation => "SA",
            ProtocolKind::SegmentMultiplexing => "SM",
        }
    }
}

/// Per-UE effective uplink channel together with the effective noise power
/// seen by the receive chain(s).
#[derive(Debug, Clone, PartialEq)]
pub enum EffectiveChannel {
    Scalar {
        gains: Vec<Complex64>,
        noise_power: f64,
    },
    Vector {
        gains: Vec<Vec<Complex64>>,
        noise_power: f64,
    },
}

impl EffectiveChannel {
    pub fn num_ues(&self) -> usize {
        match self {
            EffectiveChannel::Scalar { gains, .. } => gains.len(),
            EffectiveChannel::Vector { gains, .. } => gains.len(),
        }
    }

    /// Receive dimensionality: 1 for scalar protocols, M for multiplexing.
    pub fn dim(&self) -> usize {
        match self {
            EffectiveChannel::Scalar { .. } => 1,
            EffectiveChannel::Vector { gains, .. } => gains.first().map_or(0, Vec::len),
        }
    }

    pub fn noise_power(&self) -> f64 {
        match self {
            EffectiveChannel::Scalar { noise_power, .. }
            | EffectiveChannel::Vector { noise_power, .. } => *noise_power,
        }
    }

    /// Channel-aggregate phase per UE, used to align initial beams.
    pub fn aggregate_phase(&self, k: usize) -> f64 {
        match self {
            EffectiveChannel::Scalar { gains, .. } => gains[k].arg(),
            EffectiveChannel::Vector { gains, .. } => {
                gains[k].iter().sum::<Complex64>().arg()
            }
        }
    }
}

/// A receive beam: scalar for SS/SA, length-M vector for SM.
#[derive(Debug, Clone, PartialEq)]
pub enum RxBeam {
    Scalar(Complex64),
    Vector(Vec<Complex64>),
}

impl RxBeam {
    pub fn zero_like(eff: &EffectiveChannel) -> Self {
        match eff {
            EffectiveChannel::Scalar { .. } => RxBeam::Scalar(Complex64::new(0.0, 0.0)),
            EffectiveChannel::Vector { .. } => {
                RxBeam::Vector(vec![Complex64::new(0.0, 0.0); eff.dim()])
            }
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        match self {
            RxBeam::Scalar(z) => z.norm_sqr(),
            RxBeam::Vector(z) => z.iter().map(Complex64::norm_sqr).sum(),
        }
    }
}

/// Transmit pairs (w_k, v_k) and receive beams under one protocol.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamState {
    /// Transmit computation beamforming w_k.
    pub tx_comp: Vec<Complex64>,
    /// Transmit sensing beamforming v_k.
    pub tx_sense: Vec<Complex64>,
    /// Receive computation beam z.
    pub rx_comp: RxBeam,
    /// Receive sensing beam u_k per UE.
    pub rx_sense: Vec<RxBeam>,
}

impl BeamState {
    /// Per-UE power budgets hold up to a 1e-9 tolerance.
    pub fn power_feasible(&self, scenario: &Scenario) -> bool {
        self.tx_comp
            .iter()
            .zip(&self.tx_sense)
            .zip(&scenario.p_max_watts)
            .all(|((w, v), &p)| w.norm_sqr() + v.norm_sqr() <= p + 1e-9)
    }
}

/// Collapse a channel set into the protocol's effective form.
pub fn effective_channel(
    channels: &ChannelSet,
    protocol: ProtocolKind,
    scenario: &Scenario,
) -> EffectiveChannel {
    let sigma_sq = scenario.noise_watts;
    match protocol {
        ProtocolKind::SegmentSelection(m) => EffectiveChannel::Scalar {
            gains: channels.coefficients.iter().map(|row| row[m]).collect(),
            noise_power: sigma_sq,
        },
        ProtocolKind::SegmentAggregation => EffectiveChannel::Scalar {
            gains: channels
                .coefficients
                .iter()
                .map(|row| row.iter().sum())
                .collect(),
            noise_power: channels.num_segments() as f64 * sigma_sq,
        },
        ProtocolKind::SegmentMultiplexing => EffectiveChannel::Vector {
            gains: channels.coefficients.clone(),
            noise_power: sigma_sq,
        },
    }
}

fn check_dims(beams: &BeamState, eff: &EffectiveChannel) -> Result<(), Error> {
    let k = eff.num_ues();
    if beams.tx_comp.len() != k || beams.tx_sense.len() != k || beams.rx_sense.len() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            got: beams.tx_comp.len(),
        });
    }
    let want = eff.dim();
    let rx_dim = |b: &RxBeam| match b {
        RxBeam::Scalar(_) => 1,
        RxBeam::Vector(v) => v.len(),
    };
    let scalar_eff = matches!(eff, EffectiveChannel::Scalar { .. });
    let ok = |b: &RxBeam| {
        if scalar_eff {
            matches!(b, RxBeam::Scalar(_))
        } else {
            rx_dim(b) == want
        }
    };
    if !ok(&beams.rx_comp) || !beams.rx_sense.iter().all(ok) {
        return Err(Error::DimensionMismatch {
            expected: want,
            got: rx_dim(&beams.rx_comp),
        });
    }
    Ok(())
}

/// Inner product z^H h for a receive beam against one UE's channel.
fn combine(rx: &RxBeam, eff: &EffectiveChannel, k: usize) -> Complex64 {
    match (rx, eff) {
        (RxBeam::Scalar(z), EffectiveChannel::Scalar { gains, .. }) => z.conj() * gains[k],
        (RxBeam::Vector(z), EffectiveChannel::Vector { gains, .. }) => z
            .iter()
            .zip(&gains[k])
            .map(|(zm, hm)| zm.conj() * hm)
            .sum(),
        _ => Complex64::new(0.0, 0.0),
    }
}

/// Computation distortion of the recovered aggregate.
pub fn mse_eval(beams: &BeamState, eff: &EffectiveChannel) -> Result<f64, Error> {
    check_dims(beams, eff)?;
    let k_total = eff.num_ues();
    let mut aggregate = Complex64::new(0.0, 0.0);
    let mut leakage = 0.0;
    for k in 0..k_total {
        let zh = combine(&beams.rx_comp, eff, k);
        aggregate += zh * beams.tx_comp[k];
        leakage += (zh * beams.tx_sense[k]).norm_sqr();
    }
    let mismatch = (aggregate - Complex64::new(1.0, 0.0)).norm_sqr();
    let noise = eff.noise_power() * beams.rx_comp.norm_sqr();
    Ok(mismatch + leakage + noise)
}

/// Per-UE sensing SINR at the current receive beams. A zero receive beam
/// yields SINR 0 by convention.
pub fn sinr_eval(beams: &BeamState, eff: &EffectiveChannel) -> Result<Vec<f64>, Error> {
    check_dims(beams, eff)?;
    let k_total = eff.num_ues();
    let mut out = Vec::with_capacity(k_total);
    for k in 0..k_total {
        let u = &beams.rx_sense[k];
        let u_norm_sq = u.norm_sqr();
        if u_norm_sq == 0.0 {
            out.push(0.0);
            continue;
        }
        let mut signal = 0.0;
        let mut interference = 0.0;
        for i in 0..k_total {
            let uh = combine(u, eff, i);
            let sense = (uh * beams.tx_sense[i]).norm_sqr();
            interference += (uh * beams.tx_comp[i]).norm_sqr();
            if i == k {
                signal = sense;
            } else {
                interference += sense;
            }
        }
        let denom = interference + eff.noise_power() * u_norm_sq;
        out.push(if denom > 0.0 { signal / denom } else { 0.0 });
    }
    Ok(out)
}

/// Weighted sum rate sum_k theta_k log2(1 + SINR_k).
pub fn wsr_eval(
    beams: &BeamState,
    eff: &EffectiveChannel,
    weights: &[f64],
) -> Result<f64, Error> {
    let sinr = sinr_eval(beams, eff)?;
    Ok(sinr
        .iter()
        .zip(weights)
        .map(|(&s, &theta)| theta * (1.0 + s).log2())
        .sum())
}

/// Minimum per-UE sensing MSE over the receive beam, a_k = 1 - q_k with
/// q_k the matched quadratic form against the full signal-plus-noise
/// covariance. Equals 1 / (1 + SINR_k) at the optimal combiner.
pub fn sensing_mse_min(
    tx_comp: &[Complex64],
    tx_sense: &[Complex64],
    eff: &EffectiveChannel,
) -> Result<Vec<f64>, Error> {
    let k_total = eff.num_ues();
    match eff {
        EffectiveChannel::Scalar { gains, noise_power } => {
            let omega: f64 = gains
                .iter()
                .enumerate()
                .map(|(i, g)| {
                    g.norm_sqr() * (tx_comp[i].norm_sqr() + tx_sense[i].norm_sqr())
                })
                .sum::<f64>()
                + noise_power;
            Ok((0..k_total)
                .map(|k| {
                    let q = (gains[k] * tx_sense[k]).norm_sqr() / omega;
                    (1.0 - q).max(0.0)
                })
                .collect())
        }
        EffectiveChannel::Vector { gains, noise_power } => {
            let m = eff.dim();
            let mut omega = vec![vec![Complex64::new(0.0, 0.0); m]; m];
            for (i, h) in gains.iter().enumerate() {
                let p = tx_comp[i].norm_sqr() + tx_sense[i].norm_sqr();
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
                .map(|r| (0..k_total).map(|k| gains[k][r] * tx_sense[k]).collect())
                .collect();
            let solved = solve_complex_multi(omega, rhs)?;
            Ok((0..k_total)
                .map(|k| {
                    let q: Complex64 = (0..m)
                        .map(|r| (gains[k][r] * tx_sense[k]).conj() * solved[r][k])
                        .sum();
                    (1.0 - q.re).max(0.0)
                })
                .collect())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{composite_channel, place_pas};
    use crate::scenario::UePosition;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cplx(rng: &mut ChaCha8Rng) -> Complex64 {
        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    }

    fn random_scalar_state(
        rng: &mut ChaCha8Rng,
        k: usize,
    ) -> (BeamState, EffectiveChannel) {
        let gains: Vec<Complex64> = (0..k).map(|_| cplx(rng)).collect();
        let eff = EffectiveChannel::Scalar {
            gains,
            noise_power: rng.gen_range(0.01..0.5),
        };
        let beams = BeamState {
            tx_comp: (0..k).map(|_| cplx(rng)).collect(),
            tx_sense: (0..k).map(|_| cplx(rng)).collect(),
            rx_comp: RxBeam::Scalar(cplx(rng)),
            rx_sense: (0..k).map(|_| RxBeam::Scalar(cplx(rng))).collect(),
        };
        (beams, eff)
    }

    fn random_vector_state(
        rng: &mut ChaCha8Rng,
        k: usize,
        m: usize,
    ) -> (BeamState, EffectiveChannel) {
        let gains: Vec<Vec<Complex64>> = (0..k)
            .map(|_| (0..m).map(|_| cplx(rng)).collect())
            .collect();
        let eff = EffectiveChannel::Vector {
            gains,
            noise_power: rng.gen_range(0.01..0.5),
        };
        let beams = BeamState {
            tx_comp: (0..k).map(|_| cplx(rng)).collect(),
            tx_sense: (0..k).map(|_| cplx(rng)).collect(),
            rx_comp: RxBeam::Vector((0..m).map(|_| cplx(rng)).collect()),
            rx_sense: (0..k)
                .map(|_| RxBeam::Vector((0..m).map(|_| cplx(rng)).collect()))
                .collect(),
        };
        (beams, eff)
    }

    #[test]
    fn single_segment_protocols_coincide() {
        let mut s = Scenario::default_desk();
        s.num_segments = 1;
        s.feed_x = vec![0.0];
        let ues = vec![UePosition::new(4.0, 3.0), UePosition::new(15.0, 18.0)];
        let placement = place_pas(&ues, &s);
        let channels = composite_channel(&ues, &placement, &s).unwrap();
        let ss = effective_channel(&channels, ProtocolKind::SegmentSelection(0), &s);
        let sa = effective_channel(&channels, ProtocolKind::SegmentAggregation, &s);
        let sm = effective_channel(&channels, ProtocolKind::SegmentMultiplexing, &s);
        for k in 0..2 {
            let g_ss = match &ss {
                EffectiveChannel::Scalar { gains, .. } => gains[k],
                _ => unreachable!(),
            };
            let g_sa = match &sa {
                EffectiveChannel::Scalar { gains, .. } => gains[k],
                _ => unreachable!(),
            };
            let g_sm = match &sm {
                EffectiveChannel::Vector { gains, .. } => gains[k][0],
                _ => unreachable!(),
            };
            assert!((g_ss - g_sa).norm() < 1e-12);
            assert!((g_ss - g_sm).norm() < 1e-12);
        }
        assert_eq!(ss.noise_power(), sa.noise_power());
        assert_eq!(ss.noise_power(), sm.noise_power());
    }

    #[test]
    fn aggregation_cancels_opposite_phasors() {
        let channels = ChannelSet {
            coefficients: vec![vec![
                Complex64::new(0.3, 0.4),
                Complex64::new(-0.3, -0.4),
            ]],
        };
        let mut s = Scenario::default_desk();
        s.num_segments = 2;
        s.feed_x = vec![0.0, 10.0];
        s.num_ues = 1;
        let eff = effective_channel(&channels, ProtocolKind::SegmentAggregation, &s);
        match eff {
            EffectiveChannel::Scalar { gains, noise_power } => {
                assert!(gains[0].norm() < 1e-15);
                assert!((noise_power - 2.0 * s.noise_watts).abs() < 1e-24);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn aggregation_matches_naive_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let k = 3;
        let m = 5;
        let channels = ChannelSet {
            coefficients: (0..k)
                .map(|_| (0..m).map(|_| cplx(&mut rng)).collect())
                .collect(),
        };
        let mut s = Scenario::default_desk();
        s.num_segments = m;
        s.feed_x = (0..m).map(|i| i as f64 * 4.0).collect();
        s.num_ues = k;
        let eff = effective_channel(&channels, ProtocolKind::SegmentAggregation, &s);
        if let EffectiveChannel::Scalar { gains, .. } = eff {
            for (kk, g) in gains.iter().enumerate() {
                let mut acc = Complex64::new(0.0, 0.0);
                for mm in 0..m {
                    acc += channels.coefficients[kk][mm];
                }
                assert!((g - acc).norm() < 1e-15);
            }
        } else {
            unreachable!();
        }
    }

    #[test]
    fn mse_is_one_with_zero_receive_beam() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (mut beams, eff) = random_scalar_state(&mut rng, 3);
        beams.rx_comp = RxBeam::Scalar(Complex64::new(0.0, 0.0));
        assert!((mse_eval(&beams, &eff).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn mse_vanishes_for_perfect_single_user_aggregation() {
        let g = Complex64::new(0.7, -0.2);
        let w = Complex64::new(0.4, 0.9);
        let eff = EffectiveChannel::Scalar {
            gains: vec![g],
            noise_power: 0.0,
        };
        let z = (g * w).finv().conj(); // z^H g w = 1
        let beams = BeamState {
            tx_comp: vec![w],
            tx_sense: vec![Complex64::new(0.0, 0.0)],
            rx_comp: RxBeam::Scalar(z),
            rx_sense: vec![RxBeam::Scalar(Complex64::new(0.0, 0.0))],
        };
        assert!(mse_eval(&beams, &eff).unwrap() < 1e-24);
    }

    /// Unit-variance circular complex Gaussian via Box-Muller.
    fn complex_gaussian(rng: &mut ChaCha8Rng) -> Complex64 {
        let u1: f64 = rng.gen_range(1e-12..1.0);
        let u2: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let r = (-2.0 * u1.ln()).sqrt() * (0.5f64).sqrt();
        Complex64::new(r * u2.cos(), r * u2.sin())
    }

    /// Signal-level oracle: sample mean of |x' - s|^2 over unit-power
    /// symbol and noise draws, with the shared computation symbol model.
    fn monte_carlo_mse(
        beams: &BeamState,
        eff: &EffectiveChannel,
        draws: usize,
        rng: &mut ChaCha8Rng,
    ) -> (f64, f64) {
        let k_total = eff.num_ues();
        let dim = eff.dim();
        let sigma = eff.noise_power().sqrt();
        let mut mean = 0.0;
        let mut m2 = 0.0;
        for n in 1..=draws {
            let s_sym = complex_gaussian(rng);
            let mut received = vec![Complex64::new(0.0, 0.0); dim];
            for k in 0..k_total {
                let s_prime = complex_gaussian(rng);
                let tx = beams.tx_comp[k] * s_sym + beams.tx_sense[k] * s_prime;
                match eff {
                    EffectiveChannel::Scalar { gains, .. } => received[0] += gains[k] * tx,
                    EffectiveChannel::Vector { gains, .. } => {
                        for (r, h) in gains[k].iter().enumerate() {
                            received[r] += h * tx;
                        }
                    }
                }
            }
            for r in received.iter_mut() {
                *r += complex_gaussian(rng) * sigma;
            }
            let x_prime = match &beams.rx_comp {
                RxBeam::Scalar(z) => z.conj() * received[0],
                RxBeam::Vector(z) => z
                    .iter()
                    .zip(&received)
                    .map(|(zm, ym)| zm.conj() * ym)
                    .sum(),
            };
            let err = (x_prime - s_sym).norm_sqr();
            let delta = err - mean;
            mean += delta / n as f64;
            m2 += delta * (err - mean);
        }
        let var = m2 / (draws as f64 - 1.0);
        (mean, (var / draws as f64).sqrt())
    }

    #[test]
    fn mse_matches_signal_level_monte_carlo() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for trial in 0..10 {
            let (beams, eff) = if trial % 2 == 0 {
                random_scalar_state(&mut rng, 3)
            } else {
                random_vector_state(&mut rng, 2, 3)
            };
            let analytic = mse_eval(&beams, &eff).unwrap();
            let (sampled, stderr) = monte_carlo_mse(&beams, &eff, 200_000, &mut rng);
            assert!(
                (analytic - sampled).abs() <= 3.0 * stderr.max(1e-9),
                "trial {trial}: analytic {analytic} vs sampled {sampled} (se {stderr})"
            );
        }
    }

    #[test]
    fn sinr_zero_when_sensing_beam_off() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (mut beams, eff) = random_scalar_state(&mut rng, 3);
        beams.tx_sense[1] = Complex64::new(0.0, 0.0);
        let sinr = sinr_eval(&beams, &eff).unwrap();
        assert_eq!(sinr[1], 0.0);
    }

    #[test]
    fn sinr_invariant_to_receive_scaling() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let (mut beams, eff) = random_vector_state(&mut rng, 3, 4);
        let base = sinr_eval(&beams, &eff).unwrap();
        let c = Complex64::new(-2.3, 0.7);
        for u in beams.rx_sense.iter_mut() {
            if let RxBeam::Vector(v) = u {
                for x in v.iter_mut() {
                    *x *= c;
                }
            }
        }
        let scaled = sinr_eval(&beams, &eff).unwrap();
        for (a, b) in base.iter().zip(&scaled) {
            assert!((a - b).abs() <= 1e-12 * a.max(1.0));
        }
    }

    #[test]
    fn sinr_matches_naive_accumulation() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (beams, eff) = random_scalar_state(&mut rng, 4);
        let sinr = sinr_eval(&beams, &eff).unwrap();
        if let (EffectiveChannel::Scalar { gains, noise_power }, RxBeam::Scalar(_)) =
            (&eff, &beams.rx_comp)
        {
            for k in 0..4 {
                let u = match beams.rx_sense[k] {
                    RxBeam::Scalar(u) => u,
                    _ => unreachable!(),
                };
                let num = (u.conj() * gains[k] * beams.tx_sense[k]).norm_sqr();
                let mut den = noise_power * u.norm_sqr();
                for i in 0..4 {
                    den += (u.conj() * gains[i] * beams.tx_comp[i]).norm_sqr();
                    if i != k {
                        den += (u.conj() * gains[i] * beams.tx_sense[i]).norm_sqr();
                    }
                }
                assert!((sinr[k] - num / den).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn wsr_trivial_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let (mut beams, eff) = random_scalar_state(&mut rng, 2);
        let weights = vec![1.5, 2.5];
        for v in beams.tx_sense.iter_mut() {
            *v = Complex64::new(0.0, 0.0);
        }
        assert_eq!(wsr_eval(&beams, &eff, &weights).unwrap(), 0.0);

        let (beams, eff) = random_scalar_state(&mut rng, 2);
        let w1 = wsr_eval(&beams, &eff, &[1.0, 1.0]).unwrap();
        let w2 = wsr_eval(&beams, &eff, &[2.0, 2.0]).unwrap();
        assert!((w2 - 2.0 * w1).abs() < 1e-12);
    }

    #[test]
    fn wsr_single_user_log_identity() {
        // SINR of 3 at unit weight is exactly 2 bit/s/Hz.
        let g = Complex64::new(1.0, 0.0);
        let eff = EffectiveChannel::Scalar {
            gains: vec![g],
            noise_power: 1.0,
        };
        let beams = BeamState {
            tx_comp: vec![Complex64::new(0.0, 0.0)],
            tx_sense: vec![Complex64::new(3f64.sqrt(), 0.0)],
            rx_comp: RxBeam::Scalar(Complex64::new(1.0, 0.0)),
            rx_sense: vec![RxBeam::Scalar(Complex64::new(1.0, 0.0))],
        };
        let wsr = wsr_eval(&beams, &eff, &[1.0]).unwrap();
        assert!((wsr - 2.0).abs() < 1e-12);
    }

    #[test]
    fn mse_invariant_under_common_phase_rotation() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let (mut beams, eff) = random_vector_state(&mut rng, 3, 2);
            let base = mse_eval(&beams, &eff).unwrap();
            let phase = Complex64::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU));
            for w in beams.tx_comp.iter_mut() {
                *w *= phase;
            }
            for v in beams.tx_sense.iter_mut() {
                *v *= phase;
            }
            if let RxBeam::Vector(z) = &mut beams.rx_comp {
                for x in z.iter_mut() {
                    *x *= phase;
                }
            }
            let rotated = mse_eval(&beams, &eff).unwrap();
            assert!((base - rotated).abs() <= 1e-12 * base.max(1.0));
        }
    }

    #[test]
    fn evaluations_agree_across_protocols_at_single_segment() {
        let mut s = Scenario::default_desk();
        s.num_segments = 1;
        s.feed_x = vec![0.0];
        s.num_ues = 2;
        let ues = vec![UePosition::new(4.0, 3.0), UePosition::new(15.0, 18.0)];
        let placement = place_pas(&ues, &s);
        let channels = composite_channel(&ues, &placement, &s).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let w: Vec<Complex64> = (0..2).map(|_| cplx(&mut rng) * 0.05).collect();
        let v: Vec<Complex64> = (0..2).map(|_| cplx(&mut rng) * 0.05).collect();
        let z = cplx(&mut rng) * 1e4;
        let u: Vec<Complex64> = (0..2).map(|_| cplx(&mut rng) * 1e4).collect();

        let scalar_beams = |_: &EffectiveChannel| BeamState {
            tx_comp: w.clone(),
            tx_sense: v.clone(),
            rx_comp: RxBeam::Scalar(z),
            rx_sense: u.iter().map(|&x| RxBeam::Scalar(x)).collect(),
        };
        let vector_beams = BeamState {
            tx_comp: w.clone(),
            tx_sense: v.clone(),
            rx_comp: RxBeam::Vector(vec![z]),
            rx_sense: u.iter().map(|&x| RxBeam::Vector(vec![x])).collect(),
        };
        let ss = effective_channel(&channels, ProtocolKind::SegmentSelection(0), &s);
        let sa = effective_channel(&channels, ProtocolKind::SegmentAggregation, &s);
        let sm = effective_channel(&channels, ProtocolKind::SegmentMultiplexing, &s);
        let mse_ss = mse_eval(&scalar_beams(&ss), &ss).unwrap();
        let mse_sa = mse_eval(&scalar_beams(&sa), &sa).unwrap();
        let mse_sm = mse_eval(&vector_beams, &sm).unwrap();
        assert!((mse_ss - mse_sa).abs() <= 1e-12 * mse_ss.max(1.0));
        assert!((mse_ss - mse_sm).abs() <= 1e-12 * mse_ss.max(1.0));
        let s_ss = sinr_eval(&scalar_beams(&ss), &ss).unwrap();
        let s_sm = sinr_eval(&vector_beams, &sm).unwrap();
        for (a, b) in s_ss.iter().zip(&s_sm) {
            assert!((a - b).abs() <= 1e-12 * a.max(1.0));
        }
    }

    #[test]
    fn sensing_mse_bounds_and_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let (beams, eff) = random_vector_state(&mut rng, 3, 4);
        let a = sensing_mse_min(&beams.tx_comp, &beams.tx_sense, &eff).unwrap();
        for &ak in &a {
            assert!(ak > 0.0 && ak <= 1.0);
        }
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let (beams, _) = random_scalar_state(&mut rng, 3);
        let (_, eff_vec) = random_vector_state(&mut rng, 3, 4);
        assert!(matches!(
            mse_eval(&beams, &eff_vec),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
