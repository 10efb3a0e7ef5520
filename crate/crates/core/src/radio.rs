//! Downlink channel realization and the load-dependent rate metric.
//!
//! Base station column 0 is always the macro cell; picocell `j` lives in
//! column `j + 1`. Bandwidth is normalized to 1 Hz so rates are spectral
//! efficiencies.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;

/// Distances below this are clamped when computing path loss (meters).
pub const MIN_DISTANCE: f64 = 1.0;

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadioConfig {
    /// Noise power in watts.
    pub noise_power: f64,
    pub pathloss_exponent: f64,
    /// Scale of the Rayleigh amplitude; the power gain is exponential with
    /// mean `2 * scale^2`.
    pub rayleigh_scale: f64,
    /// Picocell transmit power in watts.
    pub tx_power_pico: f64,
    /// Macro transmit power in watts.
    pub tx_power_macro: f64,
    pub min_sinr_db: f64,
    /// When false the fading gain is fixed to 1.
    pub fading: bool,
    /// When false the minimum SINR is not used to filter cells.
    pub sinr_floor: bool,
}

impl Default for RadioConfig {
    fn default() -> Self {
        RadioConfig {
            noise_power: dbm_to_watts(-121.0),
            pathloss_exponent: 3.0,
            rayleigh_scale: 2.0,
            tx_power_pico: dbm_to_watts(30.0),
            tx_power_macro: dbm_to_watts(46.0),
            min_sinr_db: 9.56,
            fading: true,
            sinr_floor: true,
        }
    }
}

impl RadioConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.noise_power > 0.0) || !self.noise_power.is_finite() {
            return Err(Error::config("radio.noise_power must be positive"));
        }
        if !(self.pathloss_exponent >= 2.0) || !self.pathloss_exponent.is_finite() {
            return Err(Error::config("radio.pathloss_exponent must be at least 2"));
        }
        if !(self.rayleigh_scale > 0.0) || !self.rayleigh_scale.is_finite() {
            return Err(Error::config("radio.rayleigh_scale must be positive"));
        }
        if !(self.tx_power_pico > 0.0 && self.tx_power_macro > 0.0)
            || !(self.tx_power_pico.is_finite() && self.tx_power_macro.is_finite())
        {
            return Err(Error::config("radio transmit powers must be positive"));
        }
        if !self.min_sinr_db.is_finite() {
            return Err(Error::config("radio.min_sinr_db must be finite"));
        }
        Ok(())
    }

    pub fn min_sinr(&self) -> f64 {
        db_to_linear(self.min_sinr_db)
    }

    /// Whether `sinr` clears the configured floor (always true when the floor
    /// is disabled).
    pub fn passes_floor(&self, sinr: f64) -> bool {
        !self.sinr_floor || sinr >= self.min_sinr()
    }
}

/// Power gains between every user (row) and base station (column).
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    n_users: usize,
    n_stations: usize,
    gains: Vec<f64>,
}

impl ChannelMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n_users = rows.len();
        let n_stations = rows.first().map_or(0, Vec::len);
        let mut gains = Vec::with_capacity(n_users * n_stations);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n_stations {
                return Err(Error::domain(format!(
                    "channel row {i} has {} entries, expected {n_stations}",
                    row.len()
                )));
            }
            if let Some(bad) = row.iter().find(|g| !(**g >= 0.0) || !g.is_finite()) {
                return Err(Error::domain(format!(
                    "channel row {i} has invalid gain {bad}"
                )));
            }
            gains.extend(row);
        }
        Ok(ChannelMatrix {
            n_users,
            n_stations,
            gains,
        })
    }

    pub fn n_users(&self) -> usize {
        self.n_users
    }

    pub fn n_stations(&self) -> usize {
        self.n_stations
    }

    pub fn gain(&self, user: usize, station: usize) -> f64 {
        self.gains[user * self.n_stations + station]
    }

    pub fn row(&self, user: usize) -> &[f64] {
        &self.gains[user * self.n_stations..(user + 1) * self.n_stations]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.gains
            .chunks(self.n_stations.max(1))
            .map(<[f64]>::to_vec)
            .collect()
    }
}

/// Draws `c_ij = g_ij * max(d_ij, 1)^(-alpha)` for every user/station pair.
///
/// `g_ij` is the squared magnitude of a Rayleigh amplitude (exponential power
/// gain), or 1 when fading is disabled. Draw order is row-major so the matrix
/// depends only on the seed and the two position lists.
pub fn realize_channels(
    users: &[Point],
    stations: &[Point],
    config: &RadioConfig,
    seed: u64,
) -> Result<ChannelMatrix> {
    if users.iter().chain(stations).any(|p| !p.is_finite()) {
        return Err(Error::domain("user and station positions must be finite"));
    }
    let mean_gain = 2.0 * config.rayleigh_scale * config.rayleigh_scale;
    let fading = Exp::new(1.0 / mean_gain)
        .map_err(|e| Error::config(format!("invalid fading scale: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gains = Vec::with_capacity(users.len() * stations.len());
    for u in users {
        for s in stations {
            let d = u.distance(s).max(MIN_DISTANCE);
            let g = if config.fading {
                fading.sample(&mut rng)
            } else {
                1.0
            };
            gains.push(g * d.powf(-config.pathloss_exponent));
        }
    }
    Ok(ChannelMatrix {
        n_users: users.len(),
        n_stations: stations.len(),
        gains,
    })
}

/// `P_j c_ij / (sum_{k != j} P_k c_ik + noise)`, with every other station
/// (macro included) interfering.
pub fn sinr(
    channels: &ChannelMatrix,
    powers: &[f64],
    noise: f64,
    user: usize,
    station: usize,
) -> f64 {
    let row = channels.row(user);
    let interference: f64 = row
        .iter()
        .zip(powers)
        .enumerate()
        .filter(|(k, _)| *k != station)
        .map(|(_, (c, p))| p * c)
        .sum();
    powers[station] * row[station] / (interference + noise)
}

/// Spectral efficiency shared equally among `load` users.
pub fn rate_over_load(sinr: f64, load: usize) -> f64 {
    (1.0 + sinr).log2() / load.max(1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn pathloss_without_fading() {
        let cfg = RadioConfig {
            fading: false,
            ..RadioConfig::default()
        };
        let ch = realize_channels(&[Point::new(10.0, 0.0)], &[Point::ORIGIN], &cfg, 7).unwrap();
        assert_relative_eq!(ch.gain(0, 0), 1e-3, epsilon = 1e-15);
        // coincident positions are clamped to 1 m
        let ch = realize_channels(&[Point::ORIGIN], &[Point::ORIGIN], &cfg, 7).unwrap();
        assert_eq!(ch.gain(0, 0), 1.0);
    }

    #[test]
    fn realization_is_reproducible() {
        let users = [Point::new(3.0, 4.0), Point::new(-50.0, 20.0)];
        let stations = [
            Point::ORIGIN,
            Point::new(100.0, 0.0),
            Point::new(0.0, -80.0),
        ];
        let cfg = RadioConfig::default();
        let a = realize_channels(&users, &stations, &cfg, 11).unwrap();
        let b = realize_channels(&users, &stations, &cfg, 11).unwrap();
        let c = realize_channels(&users, &stations, &cfg, 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(realize_channels(&[Point::new(f64::INFINITY, 0.0)], &stations, &cfg, 1).is_err());
    }

    #[test]
    fn fading_mean_matches_exponential_moment() {
        // Gain at 1 m equals the fading draw itself.
        let cfg = RadioConfig::default();
        let users = vec![Point::ORIGIN; 1_000_000];
        let ch = realize_channels(&users, &[Point::ORIGIN], &cfg, 3).unwrap();
        let mean = (0..ch.n_users()).map(|i| ch.gain(i, 0)).sum::<f64>() / ch.n_users() as f64;
        let expected = 2.0 * cfg.rayleigh_scale.powi(2);
        assert!((mean - expected).abs() / expected < 0.01, "mean {mean}");
    }

    #[test]
    fn sinr_examples() {
        let single = ChannelMatrix::from_rows(vec![vec![2e-6]]).unwrap();
        assert_relative_eq!(sinr(&single, &[1.5], 1e-9, 0, 0), 1.5 * 2e-6 / 1e-9);

        let twin = ChannelMatrix::from_rows(vec![vec![1e-3, 1e-3]]).unwrap();
        let s = sinr(&twin, &[2.0, 2.0], 1e-300, 0, 0);
        assert_relative_eq!(s, 1.0, epsilon = 1e-12);

        let three = ChannelMatrix::from_rows(vec![vec![1e-4, 3e-5, 8e-6]]).unwrap();
        let powers = [40.0, 1.0, 0.5];
        let noise = 1e-7;
        let direct = 1.0 * 3e-5 / (40.0 * 1e-4 + 0.5 * 8e-6 + noise);
        assert_relative_eq!(
            sinr(&three, &powers, noise, 0, 1),
            direct,
            max_relative = 1e-12
        );
    }

    #[test]
    fn rate_examples() {
        assert_eq!(rate_over_load(3.0, 1), 2.0);
        assert_eq!(rate_over_load(3.0, 4), 0.5);
        assert_eq!(rate_over_load(3.0, 0), 2.0);
    }

    #[test]
    fn matrix_rows_validated() {
        assert!(ChannelMatrix::from_rows(vec![vec![1.0, 2.0], vec![1.0]]).is_err());
        assert!(ChannelMatrix::from_rows(vec![vec![-1.0]]).is_err());
        assert!(ChannelMatrix::from_rows(vec![vec![f64::NAN]]).is_err());
        let m = ChannelMatrix::from_rows(vec![vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(m.rows(), vec![vec![1.0, 2.0], vec![3.0, 4.0]]);
    }

    #[test]
    fn unit_conversions() {
        assert_relative_eq!(dbm_to_watts(30.0), 1.0);
        assert_relative_eq!(dbm_to_watts(46.0), 39.810_717_055_349_73, epsilon = 1e-9);
        assert_relative_eq!(db_to_linear(9.56), 9.036_494_737_223_028, epsilon = 1e-9);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn rate_divides_by_load(s in 0.0f64..1e4, k in 1usize..64) {
                let one = rate_over_load(s, 1);
                prop_assert!((rate_over_load(s, k) - one / k as f64).abs() <= 1e-12 * one.max(1.0));
                if s > 0.0 {
                    prop_assert!(rate_over_load(s, k + 1) < rate_over_load(s, k));
                }
            }

            #[test]
            fn sinr_scale_invariant(
                gains in proptest::collection::vec(1e-9f64..1e-2, 2..6),
                powers in proptest::collection::vec(0.1f64..50.0, 6),
                noise in 1e-12f64..1e-6,
                scale in 1e-3f64..1e3,
                pick in 0usize..6,
            ) {
                let n = gains.len();
                let j = pick % n;
                let ch = ChannelMatrix::from_rows(vec![gains.clone()]).unwrap();
                let p = &powers[..n];
                let scaled: Vec<f64> = p.iter().map(|x| x * scale).collect();
                let a = sinr(&ch, p, noise, 0, j);
                let b = sinr(&ch, &scaled, noise * scale, 0, j);
                prop_assert!((a - b).abs() <= 1e-9 * a.max(1e-300));

                let brute: f64 = (0..n).filter(|&k| k != j).map(|k| p[k] * gains[k]).sum::<f64>() + noise;
                let from_op = p[j] * gains[j] / a;
                prop_assert!((brute - from_op).abs() <= 1e-12 * brute);
            }
        }
    }
}
