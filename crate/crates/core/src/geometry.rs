//! Coverage and handover geometry of a circular small cell.
//!
//! A user crosses a cell of coverage radius `R` along a straight line entering
//! at angle `theta` from the radial direction. The traversed chord has length
//! `2 R cos(theta)`. An inner circle of radius `r` marks the region where a
//! handover started on that path is likely to fail; the failure probability is
//! the probability that a uniformly random entry angle yields a chord that
//! cuts the inner circle.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::distr::{Distribution, Open01};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Above this `r/R` the linearized failure probability is no longer used.
pub const LINEAR_HF_MAX_RATIO: f64 = 0.2;

/// Default handover completion deadline (seconds).
pub const DEFAULT_HANDOVER_DEADLINE: f64 = 2.0;

/// Exit radius used when none is given, as a multiple of `R`.
pub const DEFAULT_EXIT_RATIO: f64 = 1.1;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn norm(&self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Circular coverage region with an inner handover-failure circle and an
/// outer exit circle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellGeometry {
    pub center: Point,
    /// Coverage radius `R` in meters.
    pub radius: f64,
    /// Handover-failure radius `r` in meters.
    pub hf_radius: f64,
    /// Exit radius `r'` in meters; a handover must complete before the user
    /// is this far from the center.
    pub exit_radius: f64,
}

impl CellGeometry {
    /// Builds a geometry with the default exit radius of `1.1 R`.
    pub fn new(center: Point, radius: f64, hf_radius: f64) -> Result<Self> {
        Self::with_exit(center, radius, hf_radius, DEFAULT_EXIT_RATIO * radius)
    }

    pub fn with_exit(center: Point, radius: f64, hf_radius: f64, exit_radius: f64) -> Result<Self> {
        let geom = CellGeometry {
            center,
            radius,
            hf_radius,
            exit_radius,
        };
        geom.validate()?;
        Ok(geom)
    }

    /// Checks `0 < r < R < r'` and a finite center.
    pub fn validate(&self) -> Result<()> {
        if !self.center.is_finite() {
            return Err(Error::domain("cell center must be finite"));
        }
        let ordered = 0.0 < self.hf_radius
            && self.hf_radius < self.radius
            && self.radius < self.exit_radius
            && self.exit_radius.is_finite();
        if !ordered {
            return Err(Error::domain(format!(
                "cell radii must satisfy 0 < r < R < r' (got r={}, R={}, r'={})",
                self.hf_radius, self.radius, self.exit_radius
            )));
        }
        Ok(())
    }

    /// `R / r`, the reliability ratio rewarded by the user utility.
    pub fn reliability_ratio(&self) -> f64 {
        self.radius / self.hf_radius
    }

    pub fn covers(&self, p: &Point) -> bool {
        self.center.distance(p) <= self.radius
    }
}

/// Entry direction and speed of a user crossing a cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Trajectory {
    pub theta: f64,
    pub speed: f64,
}

impl Trajectory {
    pub fn new(theta: f64, speed: f64) -> Result<Self> {
        check_angle(theta)?;
        if !(speed > 0.0) || !speed.is_finite() {
            return Err(Error::domain(format!(
                "speed must be positive, got {speed}"
            )));
        }
        Ok(Trajectory { theta, speed })
    }
}

fn check_angle(theta: f64) -> Result<()> {
    if theta.abs() < FRAC_PI_2 {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "trajectory angle must lie in (-pi/2, pi/2), got {theta}"
        )))
    }
}

fn check_ratio(geom: &CellGeometry) -> Result<f64> {
    let (r, big_r) = (geom.hf_radius, geom.radius);
    if !(big_r > 0.0) || !(r >= 0.0) || r > big_r {
        return Err(Error::domain(format!(
            "failure radius must satisfy 0 <= r <= R (got r={r}, R={big_r})"
        )));
    }
    Ok(r / big_r)
}

/// Chord `D = 2 R cos(theta)` traversed inside the coverage circle.
pub fn chord_length(geom: &CellGeometry, theta: f64) -> Result<f64> {
    check_angle(theta)?;
    Ok(2.0 * geom.radius * theta.cos())
}

/// Time spent inside the cell, `D / V`.
pub fn interaction_time(chord: f64, speed: f64) -> Result<f64> {
    if !(speed > 0.0) {
        return Err(Error::domain(format!(
            "speed must be positive, got {speed}"
        )));
    }
    if !(chord >= 0.0) {
        return Err(Error::domain(format!(
            "chord must be non-negative, got {chord}"
        )));
    }
    Ok(chord / speed)
}

/// `Pr(D < d)` for an entry angle uniform on `(-pi/2, pi/2)`.
pub fn chord_cdf(geom: &CellGeometry, d: f64) -> Result<f64> {
    let diameter = 2.0 * geom.radius;
    if !(0.0..=diameter).contains(&d) {
        return Err(Error::domain(format!("chord {d} outside [0, {diameter}]")));
    }
    Ok(1.0 - (2.0 / PI) * (d / diameter).acos())
}

/// Probability that a random crossing path cuts the failure circle.
pub fn hf_probability(geom: &CellGeometry) -> Result<f64> {
    let ratio = check_ratio(geom)?;
    Ok((2.0 / PI) * (1.0 - ratio * ratio).sqrt().acos())
}

/// Result of the first-order failure probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HfEstimate {
    pub probability: f64,
    /// False when `r/R` exceeded [`LINEAR_HF_MAX_RATIO`] and the exact form
    /// was returned instead.
    pub linearized: bool,
}

/// First-order expansion `2 r / (pi R)` of [`hf_probability`].
pub fn hf_probability_linear(geom: &CellGeometry) -> Result<HfEstimate> {
    let ratio = check_ratio(geom)?;
    if ratio <= LINEAR_HF_MAX_RATIO {
        Ok(HfEstimate {
            probability: 2.0 * ratio / PI,
            linearized: true,
        })
    } else {
        Ok(HfEstimate {
            probability: hf_probability(geom)?,
            linearized: false,
        })
    }
}

/// Distribution of user speed used by the inter-cell handover model.
#[derive(Debug, Clone, PartialEq)]
pub enum SpeedModel {
    /// Point mass at the given speed.
    Deterministic(f64),
    /// Piecewise-linear CDF through `(speed, probability)` knots; 0 before the
    /// first knot and 1 after the last.
    PiecewiseLinear(Vec<(f64, f64)>),
}

impl SpeedModel {
    pub fn piecewise(knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.is_empty() {
            return Err(Error::domain("speed CDF needs at least one knot"));
        }
        for w in knots.windows(2) {
            if !(w[1].0 > w[0].0) || w[1].1 < w[0].1 {
                return Err(Error::domain(
                    "speed CDF knots must increase in speed and be nondecreasing",
                ));
            }
        }
        if knots.iter().any(|&(_, p)| !(0.0..=1.0).contains(&p)) {
            return Err(Error::domain("speed CDF values must lie in [0, 1]"));
        }
        Ok(SpeedModel::PiecewiseLinear(knots))
    }

    /// `Pr(V < x)`.
    pub fn prob_below(&self, x: f64) -> f64 {
        match self {
            SpeedModel::Deterministic(v) => {
                if *v < x {
                    1.0
                } else {
                    0.0
                }
            }
            SpeedModel::PiecewiseLinear(knots) => {
                let first = knots[0];
                let last = knots[knots.len() - 1];
                if x <= first.0 {
                    return if x < first.0 { 0.0 } else { first.1 };
                }
                if x >= last.0 {
                    return 1.0;
                }
                let i = knots.partition_point(|k| k.0 <= x);
                let (a, b) = (knots[i - 1], knots[i]);
                a.1 + (b.1 - a.1) * (x - a.0) / (b.0 - a.0)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HandoverOutcome {
    /// The cells are too far apart or overlap too much for a handover.
    NoHandover,
    Initiated {
        failure_probability: f64,
    },
}

/// Failure probability of a handover from `src` to `dst` whose centers are
/// `center_distance` apart, given a completion deadline `deadline` (seconds).
pub fn inter_cell_hf_probability(
    src: &CellGeometry,
    dst: &CellGeometry,
    center_distance: f64,
    speed: &SpeedModel,
    deadline: f64,
) -> Result<HandoverOutcome> {
    if !(center_distance > 0.0) {
        return Err(Error::domain("center distance must be positive"));
    }
    if !(deadline > 0.0) {
        return Err(Error::domain("handover deadline must be positive"));
    }
    if !(src.exit_radius > src.radius) {
        return Err(Error::domain(format!(
            "exit radius {} must exceed coverage radius {}",
            src.exit_radius, src.radius
        )));
    }
    let lower = src.radius + dst.hf_radius;
    let upper = src.exit_radius + dst.radius;
    if center_distance < lower || center_distance > upper {
        return Ok(HandoverOutcome::NoHandover);
    }
    let in_time = speed.prob_below((src.exit_radius - src.radius) / deadline);
    let entry_ok = 1.0 - hf_probability(dst)?;
    Ok(HandoverOutcome::Initiated {
        failure_probability: 1.0 - in_time * entry_ok,
    })
}

/// Monte-Carlo estimate of [`hf_probability`] from random crossing paths.
///
/// A path at angle `theta` passes at perpendicular distance `R sin|theta|`
/// from the center and fails when that offset is below `r`.
pub fn mc_hf_oracle(geom: &CellGeometry, samples: u64, seed: u64) -> Result<f64> {
    if samples == 0 {
        return Err(Error::domain("need at least one sample"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = 0u64;
    for _ in 0..samples {
        let u: f64 = Open01.sample(&mut rng);
        let theta = (u - 0.5) * PI;
        if geom.radius * theta.abs().sin() < geom.hf_radius {
            hits += 1;
        }
    }
    Ok(hits as f64 / samples as f64)
}
