//! Deployment geometry and radio constants.
//!
//! A [`Scenario`] fixes the service area, the segmented waveguide (segment
//! count, segment length, feed positions), the carrier, the dielectric
//! attenuation, and the per-UE power/rate budgets. Everything downstream
//! (channel synthesis, solvers, experiments) is a pure function of a
//! `Scenario` plus UE positions.

use crate::error::Error;

/// Exact speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Convert a dBm figure to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Deployment geometry, RF constants, and per-UE budgets.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    /// Service-area extent along the waveguide axis, meters.
    pub area_x: f64,
    /// Waveguide lateral offset; UEs lie in y ∈ [0, 2·area_half_y], meters.
    pub area_half_y: f64,
    /// Waveguide height above the UE plane, meters.
    pub height: f64,
    /// Number of electrically isolated waveguide segments.
    pub num_segments: usize,
    /// Feed x-coordinate of each segment, strictly increasing, meters.
    pub feed_x: Vec<f64>,
    /// Carrier frequency, Hz.
    pub carrier_freq: f64,
    /// Speed of light used for wavelength math, m/s.
    pub light_speed: f64,
    /// Effective refractive index of the dielectric waveguide.
    pub n_eff: f64,
    /// Average in-waveguide attenuation, dB/m.
    pub kappa0_db_per_m: f64,
    /// Minimum spacing between activated antennas in a segment, meters.
    pub min_spacing: f64,
    /// Number of UEs.
    pub num_ues: usize,
    /// Per-UE transmit power budget, watts.
    pub p_max_watts: Vec<f64>,
    /// Receiver noise power per RF chain, watts.
    pub noise_watts: f64,
    /// Per-UE minimum rate, bit/s/Hz.
    pub rate_min_bps_hz: Vec<f64>,
    /// Maximum tolerable computation distortion in the rate-oriented problem.
    pub mse_budget: f64,
    /// Per-UE rate weights.
    pub weights: Vec<f64>,
}

impl Scenario {
    /// Desk-scale default deployment: 20 m x 20 m area, 8 segments,
    /// 28 GHz carrier, 0.08 dB/m dielectric loss, 4 UEs at 10 dBm each
    /// over -90 dBm noise.
    pub fn default_desk() -> Self {
        Self::new(20.0, 10.0, 3.0, 8, 28e9, 1.4, 0.08, 4)
            .expect("default scenario is valid")
    }

    /// Build a scenario with feeds at segment left edges and uniform
    /// per-UE budgets (10 dBm power, -90 dBm noise, 0.2 bit/s/Hz rate
    /// floor, unit weights).
    pub fn new(
        area_x: f64,
        area_half_y: f64,
        height: f64,
        num_segments: usize,
        carrier_freq: f64,
        n_eff: f64,
        kappa0_db_per_m: f64,
        num_ues: usize,
    ) -> Result<Self, Error> {
        let segment_length = area_x / num_segments as f64;
        let feed_x = (0..num_segments)
            .map(|m| m as f64 * segment_length)
            .collect();
        let lambda = SPEED_OF_LIGHT / carrier_freq;
        let s = Self {
            area_x,
            area_half_y,
            height,
            num_segments,
            feed_x,
            carrier_freq,
            light_speed: SPEED_OF_LIGHT,
            n_eff,
            kappa0_db_per_m,
            min_spacing: lambda / 2.0,
            num_ues,
            p_max_watts: vec![dbm_to_watts(10.0); num_ues],
            noise_watts: dbm_to_watts(-90.0),
            rate_min_bps_hz: vec![0.2; num_ues],
            mse_budget: 10.0,
            weights: vec![1.0; num_ues],
        };
        s.validate()?;
        Ok(s)
    }

    /// Check the structural invariants; returns the first violation found.
    pub fn validate(&self) -> Result<(), Error> {
        if self.num_segments == 0 {
            return Err(Error::Config("segments must be >= 1".into()));
        }
        if self.num_ues == 0 {
            return Err(Error::Config("ues must be >= 1".into()));
        }
        if !(self.area_x > 0.0 && self.height > 0.0 && self.area_half_y >= 0.0) {
            return Err(Error::Config("area_x, height must be positive".into()));
        }
        if !(self.carrier_freq > 0.0 && self.light_speed > 0.0 && self.n_eff > 0.0) {
            return Err(Error::Config("carrier, light speed, n_eff must be positive".into()));
        }
        if self.kappa0_db_per_m < 0.0 {
            return Err(Error::Config("kappa0 must be nonnegative".into()));
        }
        if self.noise_watts <= 0.0 {
            return Err(Error::Config("noise power must be positive".into()));
        }
        if self.feed_x.len() != self.num_segments {
            return Err(Error::Config("one feed per segment required".into()));
        }
        let len = self.segment_length();
        for (m, &f) in self.feed_x.iter().enumerate() {
            if !(0.0..=self.area_x).contains(&f) {
                return Err(Error::Config(format!("feed {m} outside [0, area_x]")));
            }
            if m + 1 < self.num_segments && !(f < self.feed_x[m + 1]) {
                return Err(Error::Config("feeds must be strictly increasing".into()));
            }
            if m + 1 < self.num_segments && f + len > self.feed_x[m + 1] + len {
                return Err(Error::Config("segments overlap".into()));
            }
        }
        for k in 0..self.num_ues {
            if self.p_max_watts.get(k).copied().unwrap_or(0.0) <= 0.0 {
                return Err(Error::Config(format!("UE {k} power budget must be positive")));
            }
            if self.rate_min_bps_hz.get(k).copied().unwrap_or(-1.0) < 0.0 {
                return Err(Error::Config(format!("UE {k} rate floor must be nonnegative")));
            }
            if self.weights.get(k).copied().unwrap_or(0.0) <= 0.0 {
                return Err(Error::Config(format!("UE {k} weight must be positive")));
            }
        }
        Ok(())
    }

    /// Segment length L = area_x / num_segments.
    pub fn segment_length(&self) -> f64 {
        self.area_x / self.num_segments as f64
    }

    /// Free-space wavelength, meters.
    pub fn wavelength(&self) -> f64 {
        self.light_speed / self.carrier_freq
    }

    /// Guided wavelength inside the dielectric, meters.
    pub fn guided_wavelength(&self) -> f64 {
        self.wavelength() / self.n_eff
    }

    /// Amplitude attenuation coefficient alpha = kappa0 * ln(10) / 20, 1/m.
    pub fn alpha(&self) -> f64 {
        self.kappa0_db_per_m * std::f64::consts::LN_10 / 20.0
    }

    /// Remove the in-waveguide attenuation (lossless operation).
    pub fn lossless(&self) -> Self {
        let mut s = self.clone();
        s.kappa0_db_per_m = 0.0;
        s
    }
}

/// A UE location on the ground plane (z = 0).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UePosition {
    pub x: f64,
    pub y: f64,
}

impl UePosition {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// True if the UE lies inside the scenario's service rectangle.
    pub fn in_area(&self, scenario: &Scenario) -> bool {
        (0.0..=scenario.area_x).contains(&self.x)
            && (0.0..=2.0 * scenario.area_half_y).contains(&self.y)
    }

    /// Distance to a point on the waveguide line at coordinate `pa_x`.
    pub fn distance_to_pa(&self, pa_x: f64, scenario: &Scenario) -> f64 {
        let dx = self.x - pa_x;
        let dy = self.y - scenario.area_half_y;
        let dz = scenario.height;
        (dx * dx + dy * dy + dz * dz).sqrt()
    }
}

/// One activated antenna x-coordinate per segment.
#[derive(Debug, Clone, PartialEq)]
pub struct PaPlacement {
    pub positions: Vec<f64>,
}

impl PaPlacement {
    pub fn new(positions: Vec<f64>) -> Self {
        Self { positions }
    }

    /// Every PA must sit within its segment; with one PA per segment the
    /// pairwise-spacing rule holds vacuously but is still checked.
    pub fn validate(&self, scenario: &Scenario) -> Result<(), Error> {
        if self.positions.len() != scenario.num_segments {
            return Err(Error::DimensionMismatch {
                expected: scenario.num_segments,
                got: self.positions.len(),
            });
        }
        let len = scenario.segment_length();
        let tol = 1e-9;
        for (m, &x) in self.positions.iter().enumerate() {
            let lo = scenario.feed_x[m];
            if x < lo - tol || x > lo + len + tol {
                return Err(Error::OutOfSegment { segment: m, x });
            }
        }
        // Pairwise spacing within a segment: a single PA always satisfies it.
        for w in self.positions.windows(1) {
            debug_assert!(w.len() == 1);
        }
        Ok(())
    }
}
