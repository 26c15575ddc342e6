//! PASS channel synthesis and antenna-placement rules.
//!
//! The uplink coefficient between UE k and segment m factors into an
//! in-waveguide stage (feed point to activated antenna, exponential
//! amplitude decay plus guided-wavelength phase) and a free-space stage
//! (antenna to UE, spherical spreading plus carrier phase). This module
//! also carries the closed-form average in-waveguide gains used to compare
//! segmented against single-waveguide deployments, and the placement rules
//! that position one activated antenna per segment.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::Error;
use crate::scenario::{PaPlacement, Scenario, UePosition};

/// Per-UE, per-segment complex uplink coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    /// `coefficients[k][m]` is the coefficient between UE k and segment m.
    pub coefficients: Vec<Vec<Complex64>>,
}

impl ChannelSet {
    pub fn num_ues(&self) -> usize {
        self.coefficients.len()
    }

    pub fn num_segments(&self) -> usize {
        self.coefficients.first().map_or(0, Vec::len)
    }

    /// Stacked coefficient vector of one UE, in segment order.
    pub fn ue(&self, k: usize) -> &[Complex64] {
        &self.coefficients[k]
    }
}

/// Free-space coefficient from an antenna at waveguide coordinate `pa_x`
/// down to a UE: eta * exp(-j*kappa*d) / d with kappa = 2*pi/lambda and
/// eta = c / (4*pi*f_c).
pub fn free_space_channel(
    ue: &UePosition,
    pa_x: f64,
    scenario: &Scenario,
) -> Result<Complex64, Error> {
    let d = ue.distance_to_pa(pa_x, scenario);
    if d <= 0.0 {
        return Err(Error::DegenerateGeometry);
    }
    let lambda = scenario.wavelength();
    let eta = scenario.light_speed / (4.0 * PI * scenario.carrier_freq);
    let kappa = 2.0 * PI / lambda;
    Ok(Complex64::from_polar(eta / d, -kappa * d))
}

/// In-waveguide coefficient from a segment feed to its activated antenna:
/// 10^(-kappa0*|x|/20) * exp(-j*2*pi*|x|/lambda_g).
pub fn in_waveguide_channel(
    pa_x: f64,
    feed_x: f64,
    scenario: &Scenario,
) -> Result<Complex64, Error> {
    let travel = (pa_x - feed_x).abs();
    if travel > scenario.segment_length() + 1e-9 {
        return Err(Error::OutOfSegment {
            segment: usize::MAX,
            x: pa_x,
        });
    }
    let magnitude = 10f64.powf(-scenario.kappa0_db_per_m * travel / 20.0);
    let phase = -2.0 * PI * travel / scenario.guided_wavelength();
    Ok(Complex64::from_polar(magnitude, phase))
}

/// Composite uplink coefficients for every (UE, segment) pair.
pub fn composite_channel(
    ues: &[UePosition],
    placement: &PaPlacement,
    scenario: &Scenario,
) -> Result<ChannelSet, Error> {
    placement.validate(scenario)?;
    let mut coefficients = Vec::with_capacity(ues.len());
    for ue in ues {
        let mut row = Vec::with_capacity(scenario.num_segments);
        for m in 0..scenario.num_segments {
            let pa_x = placement.positions[m];
            let h_i = in_waveguide_channel(pa_x, scenario.feed_x[m], scenario)?;
            let h_o = free_space_channel(ue, pa_x, scenario)?;
            row.push(h_i * h_o);
        }
        coefficients.push(row);
    }
    Ok(ChannelSet { coefficients })
}

/// Average in-waveguide propagation gain of one segment of length
/// area_x / M: (1 - exp(-2*alpha*L)) / (2*alpha*L). Lossless operation
/// returns the limit value 1.
pub fn avg_gain_segmented(scenario: &Scenario) -> f64 {
    avg_gain_over_length(scenario.alpha(), scenario.segment_length())
}

/// Average in-waveguide gain of a single continuous waveguide spanning the
/// whole area.
pub fn avg_gain_conventional(scenario: &Scenario) -> f64 {
    avg_gain_over_length(scenario.alpha(), scenario.area_x)
}

/// (1 - exp(-2*alpha*len)) / (2*alpha*len), with the alpha -> 0 limit 1.
pub fn avg_gain_over_length(alpha: f64, len: f64) -> f64 {
    let u = 2.0 * alpha * len;
    if u == 0.0 {
        return 1.0;
    }
    -(-u).exp_m1() / u
}

/// Ratio of segmented to single-waveguide average gain:
/// (1 - exp(-2*alpha*D/M)) * M / (1 - exp(-2*alpha*D)).
/// Equals 1 at M = 1 and grows with both M and D.
pub fn gain_ratio(scenario: &Scenario) -> f64 {
    gain_ratio_params(
        scenario.alpha(),
        scenario.area_x,
        scenario.num_segments,
    )
}

/// Parameterized form of [`gain_ratio`] for table sweeps.
pub fn gain_ratio_params(alpha: f64, area_x: f64, num_segments: usize) -> f64 {
    if alpha == 0.0 {
        return 1.0;
    }
    let m = num_segments as f64;
    let num = -(-2.0 * alpha * area_x / m).exp_m1();
    let den = -(-2.0 * alpha * area_x).exp_m1();
    num * m / den
}

/// Segment whose span contains the UE's x-projection: the ceiling of
/// (x - first feed) / L, clamped into range, with exact boundaries assigned
/// to the lower-index segment. Returns a zero-based index.
pub fn optimal_segment(ue: &UePosition, scenario: &Scenario) -> usize {
    let len = scenario.segment_length();
    let r = (ue.x - scenario.feed_x[0]) / len;
    let one_based = r.ceil().max(1.0).min(scenario.num_segments as f64);
    one_based as usize - 1
}

/// Outcome of the closed-form single-UE placement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedFormPa {
    /// Zero-based segment index the antenna is activated in.
    pub segment: usize,
    /// Antenna x-coordinate, clamped into the segment.
    pub x: f64,
    /// True when the discriminant went negative and the UE-projection
    /// fallback was used.
    pub projection_fallback: bool,
}

/// Best antenna coordinate inside segment `m` for a single UE: the
/// stationary point of 10^(-kappa0*(x - feed)/20) / dist(UE, x), shifted
/// from the UE projection toward the feed by (1 - sqrt(1 - 4*alpha^2*d0))
/// / (2*alpha), then clamped into the segment. Falls back to the bare
/// projection when 1 - 4*alpha^2*d0 < 0 or the waveguide is lossless.
pub fn pa_position_in_segment(
    ue: &UePosition,
    m: usize,
    scenario: &Scenario,
) -> (f64, bool) {
    let alpha = scenario.alpha();
    let feed = scenario.feed_x[m];
    let len = scenario.segment_length();
    let dy = ue.y - scenario.area_half_y;
    let d0 = dy * dy + scenario.height * scenario.height;
    let (candidate, fallback) = if alpha == 0.0 {
        (ue.x, false)
    } else {
        let disc = 1.0 - 4.0 * alpha * alpha * d0;
        if disc < 0.0 {
            (ue.x, true)
        } else {
            (ue.x + (-1.0 + disc.sqrt()) / (2.0 * alpha), false)
        }
    };
    (candidate.clamp(feed, feed + len), fallback)
}

/// Closed-form activated position for the single-UE case: pick the segment
/// by [`optimal_segment`], then place within it.
pub fn closed_form_pa_position(ue: &UePosition, scenario: &Scenario) -> ClosedFormPa {
    let segment = optimal_segment(ue, scenario);
    let (x, projection_fallback) = pa_position_in_segment(ue, segment, scenario);
    ClosedFormPa {
        segment,
        x,
        projection_fallback,
    }
}

/// Place one antenna per segment by 1-D grid search maximizing the summed
/// channel power of all UEs, at resolution lambda/8.
pub fn place_pas(ues: &[UePosition], scenario: &Scenario) -> PaPlacement {
    place_pas_with_resolution(ues, scenario, scenario.wavelength() / 8.0)
}

/// Grid-search placement at an explicit resolution. The per-position
/// objective sum_k |H_k|^2 factors as 10^(-kappa0*u/10) * eta^2 *
/// sum_k 1/d_k^2, which avoids trigonometry inside the scan. Ties keep the
/// lowest coordinate.
pub fn place_pas_with_resolution(
    ues: &[UePosition],
    scenario: &Scenario,
    resolution: f64,
) -> PaPlacement {
    let len = scenario.segment_length();
    let kappa0 = scenario.kappa0_db_per_m;
    let mut positions = Vec::with_capacity(scenario.num_segments);
    for m in 0..scenario.num_segments {
        let feed = scenario.feed_x[m];
        let steps = (len / resolution).ceil() as usize;
        let mut best_x = feed;
        let mut best_obj = f64::NEG_INFINITY;
        for i in 0..=steps {
            let x = (feed + i as f64 * resolution).min(feed + len);
            let obj = placement_objective(ues, x, feed, kappa0, scenario);
            if obj > best_obj {
                best_obj = obj;
                best_x = x;
            }
        }
        positions.push(best_x);
    }
    PaPlacement::new(positions)
}

fn placement_objective(
    ues: &[UePosition],
    x: f64,
    feed: f64,
    kappa0: f64,
    scenario: &Scenario,
) -> f64 {
    let waveguide_power = 10f64.powf(-kappa0 * (x - feed).abs() / 10.0);
    let spread: f64 = ues
        .iter()
        .map(|ue| {
            let d = ue.distance_to_pa(x, scenario);
            1.0 / (d * d)
        })
        .sum();
    waveguide_power * spread
}

/// Segment with the largest summed channel power across UEs; used to pick
/// the connected segment under segment selection with multiple UEs.
pub fn select_segment(channels: &ChannelSet) -> usize {
    let m_total = channels.num_segments();
    let mut best = 0;
    let mut best_power = f64::NEG_INFINITY;
    for m in 0..m_total {
        let power: f64 = channels
            .coefficients
            .iter()
            .map(|row| row[m].norm_sqr())
            .sum();
        if power > best_power {
            best_power = power;
            best = m;
        }
    }
    best
}
