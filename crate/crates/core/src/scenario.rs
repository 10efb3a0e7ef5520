//! Random two-tier network instances and hand-written fixtures.
//!
//! A scenario is one macro cell at the origin overlaid with picocells and
//! users dropped uniformly in the macro disk. All randomness comes from a
//! master seed split into labeled sub-streams, so changing the number of
//! picocells leaves user draws untouched.

use std::f64::consts::PI;

use rand::distr::{Distribution, Open01};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::context::{SmallCellProfile, UserProfile};
use crate::error::{Error, Result};
use crate::geometry::{CellGeometry, Point, DEFAULT_EXIT_RATIO};
use crate::radio::{realize_channels, ChannelMatrix, RadioConfig};
use crate::seeding::substream;

const STREAM_USER_POSITIONS: u64 = 1;
const STREAM_USER_PROFILES: u64 = 2;
const STREAM_CELL_POSITIONS: u64 = 3;
const STREAM_CELL_PARAMS: u64 = 4;
const STREAM_CHANNELS: u64 = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Macro cell radius in meters.
    pub macro_radius: f64,
    pub n_users: usize,
    pub n_picos: usize,
    pub quota: usize,
    /// Urgency coefficient range (milliseconds).
    pub tau_range: [f64; 2],
    /// Picocell coverage radius range (meters).
    pub pico_radius_range: [f64; 2],
    /// Range of the `r / R` ratio.
    pub hf_ratio_range: [f64; 2],
    /// Handover preparation time range (seconds).
    pub prep_time_range: [f64; 2],
    /// User speed range (m/s).
    pub speed_range: [f64; 2],
    /// Exit radius as a multiple of the coverage radius.
    pub exit_ratio: f64,
    pub radio: RadioConfig,
    /// Users reject cells whose handover-failure probability reaches this.
    pub hf_threshold: f64,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            macro_radius: 1000.0,
            n_users: 60,
            n_picos: 20,
            quota: 4,
            tau_range: [0.5, 5.0],
            pico_radius_range: [100.0, 300.0],
            hf_ratio_range: [0.02, 0.1],
            prep_time_range: [1.0, 10.0],
            speed_range: [1.0, 15.0],
            exit_ratio: DEFAULT_EXIT_RATIO,
            radio: RadioConfig::default(),
            hf_threshold: 0.05,
            seed: 0,
        }
    }
}

fn check_range(name: &str, r: [f64; 2], lower: f64, strict: bool) -> Result<()> {
    let [lo, hi] = r;
    let above = if strict { lo > lower } else { lo >= lower };
    if !(lo.is_finite() && hi.is_finite()) || lo > hi || !above {
        let bound = if strict { ">" } else { ">=" };
        return Err(Error::config(format!(
            "{name} must be a finite range [min, max] with min <= max and min {bound} {lower}, got [{lo}, {hi}]"
        )));
    }
    Ok(())
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.macro_radius > 0.0) || !self.macro_radius.is_finite() {
            return Err(Error::config("macro_radius must be positive"));
        }
        if self.n_users == 0 {
            return Err(Error::config("n_users must be at least 1"));
        }
        if self.n_picos == 0 {
            return Err(Error::config("n_picos must be at least 1"));
        }
        if self.quota == 0 {
            return Err(Error::config("quota must be at least 1"));
        }
        check_range("tau_range", self.tau_range, 0.0, true)?;
        check_range("pico_radius_range", self.pico_radius_range, 0.0, true)?;
        check_range("hf_ratio_range", self.hf_ratio_range, 0.0, true)?;
        if self.hf_ratio_range[1] >= 1.0 {
            return Err(Error::config("hf_ratio_range must stay below 1"));
        }
        check_range("prep_time_range", self.prep_time_range, 0.0, false)?;
        check_range("speed_range", self.speed_range, 0.0, false)?;
        if !(self.exit_ratio > 1.0) || !self.exit_ratio.is_finite() {
            return Err(Error::config("exit_ratio must exceed 1"));
        }
        if !(self.hf_threshold > 0.0 && self.hf_threshold <= 1.0) {
            return Err(Error::config("hf_threshold must lie in (0, 1]"));
        }
        self.radio.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MacroStation {
    pub position: Point,
    /// Transmit power in watts.
    pub tx_power: f64,
}

/// One realized network instance. Channel column 0 is the macro cell,
/// column `j + 1` picocell `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub macro_radius: f64,
    pub mbs: MacroStation,
    pub cells: Vec<SmallCellProfile>,
    pub users: Vec<UserProfile>,
    pub channels: ChannelMatrix,
    pub radio: RadioConfig,
    pub hf_threshold: f64,
    pub seed: Option<u64>,
}

impl Scenario {
    pub fn station_powers(&self) -> Vec<f64> {
        std::iter::once(self.mbs.tx_power)
            .chain(self.cells.iter().map(|c| c.tx_power))
            .collect()
    }

    pub fn station_positions(&self) -> Vec<Point> {
        std::iter::once(self.mbs.position)
            .chain(self.cells.iter().map(|c| c.geometry.center))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        self.radio.validate()?;
        if !(self.mbs.tx_power > 0.0) || !self.mbs.position.is_finite() {
            return Err(Error::domain(
                "mbs needs a finite position and positive power",
            ));
        }
        if self.users.is_empty() || self.cells.is_empty() {
            return Err(Error::domain(
                "scenario needs at least one user and one cell",
            ));
        }
        for (i, u) in self.users.iter().enumerate() {
            if u.id != i {
                return Err(Error::domain(format!(
                    "users[{i}] has id {}, expected {i}",
                    u.id
                )));
            }
            u.validate()?;
            if u.position.distance(&self.mbs.position) > self.macro_radius {
                return Err(Error::domain(format!(
                    "user {i} lies outside the macro radius"
                )));
            }
        }
        for (j, c) in self.cells.iter().enumerate() {
            if c.id != j {
                return Err(Error::domain(format!(
                    "cells[{j}] has id {}, expected {j}",
                    c.id
                )));
            }
            c.validate()?;
            if c.geometry.center.distance(&self.mbs.position) > self.macro_radius {
                return Err(Error::domain(format!(
                    "cell {j} lies outside the macro radius"
                )));
            }
        }
        if self.channels.n_users() != self.users.len()
            || self.channels.n_stations() != self.cells.len() + 1
        {
            return Err(Error::domain(format!(
                "channel matrix is {}x{}, expected {}x{}",
                self.channels.n_users(),
                self.channels.n_stations(),
                self.users.len(),
                self.cells.len() + 1
            )));
        }
        if !(self.hf_threshold > 0.0 && self.hf_threshold <= 1.0) {
            return Err(Error::domain("hf_threshold must lie in (0, 1]"));
        }
        Ok(())
    }
}

fn rng_for(seed: u64, label: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(substream(seed, label))
}

fn uniform(rng: &mut impl Rng, [lo, hi]: [f64; 2]) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

/// Uniform point in a disk of radius `radius` around the origin.
pub fn sample_disk(rng: &mut impl Rng, radius: f64) -> Point {
    let rho = radius * rng.random::<f64>().sqrt();
    let phi = 2.0 * PI * rng.random::<f64>();
    Point::new(rho * phi.cos(), rho * phi.sin())
}

/// Draws a scenario; identical configs give bitwise-identical scenarios.
pub fn generate(config: &ScenarioConfig) -> Result<Scenario> {
    config.validate()?;
    let seed = config.seed;

    let mut pos = rng_for(seed, STREAM_USER_POSITIONS);
    let mut prof = rng_for(seed, STREAM_USER_PROFILES);
    let users: Vec<UserProfile> = (0..config.n_users)
        .map(|id| {
            let position = sample_disk(&mut pos, config.macro_radius);
            let tau = uniform(&mut prof, config.tau_range);
            let u: f64 = Open01.sample(&mut prof);
            let speed = uniform(&mut prof, config.speed_range);
            UserProfile {
                id,
                position,
                tau,
                theta: (u - 0.5) * PI,
                speed,
            }
        })
        .collect();

    let mut cpos = rng_for(seed, STREAM_CELL_POSITIONS);
    let mut cpar = rng_for(seed, STREAM_CELL_PARAMS);
    let cells = (0..config.n_picos)
        .map(|id| {
            let center = sample_disk(&mut cpos, config.macro_radius);
            let radius = uniform(&mut cpar, config.pico_radius_range);
            let ratio = uniform(&mut cpar, config.hf_ratio_range);
            let prep_time = uniform(&mut cpar, config.prep_time_range);
            let geometry = CellGeometry::with_exit(
                center,
                radius,
                ratio * radius,
                config.exit_ratio * radius,
            )?;
            Ok(SmallCellProfile {
                id,
                geometry,
                quota: config.quota,
                prep_time,
                tx_power: config.radio.tx_power_pico,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mbs = MacroStation {
        position: Point::ORIGIN,
        tx_power: config.radio.tx_power_macro,
    };
    let stations: Vec<Point> = std::iter::once(mbs.position)
        .chain(cells.iter().map(|c| c.geometry.center))
        .collect();
    let user_positions: Vec<Point> = users.iter().map(|u| u.position).collect();
    let channels = realize_channels(
        &user_positions,
        &stations,
        &config.radio,
        substream(seed, STREAM_CHANNELS),
    )?;

    Ok(Scenario {
        macro_radius: config.macro_radius,
        mbs,
        cells,
        users,
        channels,
        radio: config.radio.clone(),
        hf_threshold: config.hf_threshold,
        seed: Some(seed),
    })
}

fn default_macro_radius() -> f64 {
    1000.0
}

fn default_hf_threshold() -> f64 {
    0.05
}

/// On-disk fixture layout (TOML). Without `channels` the gains are pure
/// path loss.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FixtureDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(default = "default_macro_radius")]
    macro_radius: f64,
    #[serde(default = "default_hf_threshold")]
    hf_threshold: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    channels: Option<Vec<Vec<f64>>>,
    mbs: MacroStation,
    #[serde(default)]
    radio: RadioConfig,
    cells: Vec<SmallCellProfile>,
    users: Vec<UserProfile>,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())]
        .bytes()
        .filter(|&b| b == b'\n')
        .count()
        + 1
}

/// Parses a TOML fixture into a scenario without any randomness.
pub fn load_fixture(text: &str) -> Result<Scenario> {
    let doc: FixtureDoc = {
        let de = toml::Deserializer::parse(text).map_err(|e| Error::Parse {
            line: e.span().map(|s| line_of(text, s.start)),
            field: None,
            message: e.message().to_string(),
        })?;
        serde_path_to_error::deserialize(de).map_err(|e| {
            let field = e.path().to_string();
            let inner = e.into_inner();
            Error::Parse {
                line: inner.span().map(|s| line_of(text, s.start)),
                field: Some(field),
                message: inner.message().to_string(),
            }
        })?
    };

    let channels = match doc.channels {
        Some(rows) => ChannelMatrix::from_rows(rows).map_err(|e| Error::Parse {
            line: None,
            field: Some("channels".into()),
            message: e.to_string(),
        })?,
        None => {
            let radio = RadioConfig {
                fading: false,
                ..doc.radio.clone()
            };
            let users: Vec<Point> = doc.users.iter().map(|u| u.position).collect();
            let stations: Vec<Point> = std::iter::once(doc.mbs.position)
                .chain(doc.cells.iter().map(|c| c.geometry.center))
                .collect();
            realize_channels(&users, &stations, &radio, 0)?
        }
    };
    let scenario = Scenario {
        macro_radius: doc.macro_radius,
        mbs: doc.mbs,
        cells: doc.cells,
        users: doc.users,
        channels,
        radio: doc.radio,
        hf_threshold: doc.hf_threshold,
        seed: doc.seed,
    };
    scenario.validate().map_err(|e| Error::Parse {
        line: None,
        field: None,
        message: e.to_string(),
    })?;
    Ok(scenario)
}

/// Writes a scenario as a fixture with explicit channel gains.
pub fn to_fixture(scenario: &Scenario) -> Result<String> {
    let doc = FixtureDoc {
        seed: scenario.seed,
        macro_radius: scenario.macro_radius,
        hf_threshold: scenario.hf_threshold,
        channels: Some(scenario.channels.rows()),
        mbs: scenario.mbs,
        radio: scenario.radio.clone(),
        cells: scenario.cells.clone(),
        users: scenario.users.clone(),
    };
    toml::to_string(&doc).map_err(|e| Error::domain(format!("fixture serialization failed: {e}")))
}
