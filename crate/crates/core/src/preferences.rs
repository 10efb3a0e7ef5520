//! Matching-dependent utilities and preference lists for users and cells.
//!
//! [`Market`] freezes everything about a scenario that does not depend on the
//! matching (link SINRs, acceptability, quotas) so utilities can be
//! re-evaluated cheaply against any number of candidate matchings.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::context::{is_acceptable_to_cell, is_acceptable_to_user};
use crate::error::{Error, Result};
use crate::matching::Matching;
use crate::radio::{rate_over_load, sinr};
use crate::scenario::Scenario;

/// Knobs of the association game that are not part of the scenario itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GameConfig {
    /// Reliability factor standing in for `R/r` when a user is macro-served.
    pub macro_reliability: f64,
    /// Quota used for the macro cell in the offloading term; `None` means
    /// `ceil(N / M)` with a single macro cell.
    pub mbs_effective_quota: Option<usize>,
    /// Only cells whose coverage disk contains the user are candidates.
    pub require_coverage: bool,
    /// Upper bound on the outer fixed-point iterations.
    pub max_outer: usize,
    /// The max-SINR baseline enforces cell quotas.
    pub baseline_quota: bool,
}

impl Default for GameConfig {
    fn default() -> Self {
        GameConfig {
            macro_reliability: 1.0,
            mbs_effective_quota: None,
            require_coverage: true,
            max_outer: 100,
            baseline_quota: true,
        }
    }
}

impl GameConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.macro_reliability > 0.0) || !self.macro_reliability.is_finite() {
            return Err(Error::config("game.macro_reliability must be positive"));
        }
        if self.mbs_effective_quota == Some(0) {
            return Err(Error::config("game.mbs_effective_quota must be at least 1"));
        }
        if self.max_outer == 0 {
            return Err(Error::config("game.max_outer must be at least 1"));
        }
        Ok(())
    }
}

/// User utility from the cell reliability ratio `R/r` and the rate over load.
pub fn user_utility_value(reliability_ratio: f64, rate_over_load: f64) -> f64 {
    reliability_ratio * rate_over_load
}

/// Cell utility of admitting a user with urgency `tau` who arrives from a
/// cell holding `k_prev` users out of quota `q_prev`. Natural logarithm;
/// negative when the source cell is lightly loaded.
pub fn cell_utility_value(tau: f64, k_prev: usize, q_prev: usize) -> f64 {
    (1.0 + (k_prev.max(1) as f64 / q_prev as f64).ln()) / tau
}

/// Agents of the opposite side ordered from most to least preferred.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreferenceList {
    pub owner: usize,
    pub ranked: Vec<usize>,
}

impl PreferenceList {
    /// Sorts `(id, utility)` pairs by descending utility, lower id first on ties.
    pub fn from_scored(owner: usize, mut scored: Vec<(usize, f64)>) -> Self {
        scored.sort_by(|a, b| match b.1.total_cmp(&a.1) {
            Ordering::Equal => a.0.cmp(&b.0),
            other => other,
        });
        scored.dedup_by_key(|s| s.0);
        PreferenceList {
            owner,
            ranked: scored.into_iter().map(|(id, _)| id).collect(),
        }
    }

    pub fn position(&self, id: usize) -> Option<usize> {
        self.ranked.iter().position(|&x| x == id)
    }
}

/// Matching-independent view of a scenario.
#[derive(Debug, Clone)]
pub struct Market {
    n_users: usize,
    n_cells: usize,
    quotas: Vec<usize>,
    mbs_quota: usize,
    reliability: Vec<f64>,
    tau: Vec<f64>,
    macro_reliability: f64,
    /// Row-major `n_users x n_cells`.
    pico_sinr: Vec<f64>,
    macro_sinr: Vec<f64>,
    user_accepts: Vec<bool>,
    cell_accepts: Vec<bool>,
    /// Cells eligible for max-SINR association (coverage and SINR floor only).
    radio_eligible: Vec<bool>,
}

impl Market {
    pub fn new(scenario: &Scenario, game: &GameConfig) -> Result<Self> {
        game.validate()?;
        let n_users = scenario.users.len();
        let n_cells = scenario.cells.len();
        let powers = scenario.station_powers();
        let noise = scenario.radio.noise_power;
        let mut pico_sinr = Vec::with_capacity(n_users * n_cells);
        let mut macro_sinr = Vec::with_capacity(n_users);
        let mut user_accepts = Vec::with_capacity(n_users * n_cells);
        let mut cell_accepts = Vec::with_capacity(n_users * n_cells);
        let mut radio_eligible = Vec::with_capacity(n_users * n_cells);
        for (i, user) in scenario.users.iter().enumerate() {
            macro_sinr.push(sinr(&scenario.channels, &powers, noise, i, 0));
            for (j, cell) in scenario.cells.iter().enumerate() {
                let s = sinr(&scenario.channels, &powers, noise, i, j + 1);
                let in_range = !game.require_coverage || cell.geometry.covers(&user.position);
                pico_sinr.push(s);
                user_accepts.push(
                    in_range
                        && is_acceptable_to_user(cell, scenario.hf_threshold, s, &scenario.radio)?,
                );
                cell_accepts.push(is_acceptable_to_cell(user, cell)?);
                radio_eligible.push(in_range && scenario.radio.passes_floor(s));
            }
        }
        Ok(Market {
            n_users,
            n_cells,
            quotas: scenario.cells.iter().map(|c| c.quota).collect(),
            mbs_quota: game.mbs_effective_quota.unwrap_or(n_users.max(1)),
            reliability: scenario
                .cells
                .iter()
                .map(|c| c.geometry.reliability_ratio())
                .collect(),
            tau: scenario.users.iter().map(|u| u.tau).collect(),
            macro_reliability: game.macro_reliability,
            pico_sinr,
            macro_sinr,
            user_accepts,
            cell_accepts,
            radio_eligible,
        })
    }

    pub fn n_users(&self) -> usize {
        self.n_users
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn quotas(&self) -> &[usize] {
        &self.quotas
    }

    pub fn quota(&self, cell: usize) -> usize {
        self.quotas[cell]
    }

    pub fn mbs_quota(&self) -> usize {
        self.mbs_quota
    }

    pub fn reliability(&self, cell: usize) -> f64 {
        self.reliability[cell]
    }

    pub fn tau(&self, user: usize) -> f64 {
        self.tau[user]
    }

    pub fn pico_sinr(&self, user: usize, cell: usize) -> f64 {
        self.pico_sinr[user * self.n_cells + cell]
    }

    pub fn macro_sinr(&self, user: usize) -> f64 {
        self.macro_sinr[user]
    }

    pub fn user_accepts(&self, user: usize, cell: usize) -> bool {
        self.user_accepts[user * self.n_cells + cell]
    }

    pub fn cell_accepts(&self, user: usize, cell: usize) -> bool {
        self.cell_accepts[user * self.n_cells + cell]
    }

    pub fn mutually_acceptable(&self, user: usize, cell: usize) -> bool {
        self.user_accepts(user, cell) && self.cell_accepts(user, cell)
    }

    pub fn radio_eligible(&self, user: usize, cell: usize) -> bool {
        self.radio_eligible[user * self.n_cells + cell]
    }

    /// Occupancy `cell` would have with `user` admitted. A full cell has to
    /// release a member to admit a newcomer, so the load never exceeds quota.
    pub fn prospective_load(&self, matching: &Matching, user: usize, cell: usize) -> usize {
        let load = matching.load(cell);
        if matching.server(user) == Some(cell) {
            load
        } else {
            (load + 1).min(self.quotas[cell])
        }
    }

    /// Utility `user` would get from `cell` if admitted under `matching`.
    pub fn user_utility(&self, matching: &Matching, user: usize, cell: usize) -> f64 {
        let load = self.prospective_load(matching, user, cell);
        user_utility_value(
            self.reliability[cell],
            rate_over_load(self.pico_sinr(user, cell), load),
        )
    }

    /// Utility `user` actually obtains under `matching`, macro fallback included.
    pub fn realized_user_utility(&self, matching: &Matching, user: usize) -> f64 {
        match matching.server(user) {
            Some(cell) => user_utility_value(
                self.reliability[cell],
                rate_over_load(self.pico_sinr(user, cell), matching.load(cell)),
            ),
            None => user_utility_value(
                self.macro_reliability,
                rate_over_load(self.macro_sinr(user), matching.macro_load()),
            ),
        }
    }

    /// Utility `cell` assigns to `user`, driven by the load of the cell the
    /// user is served by under `matching`.
    pub fn cell_utility(&self, matching: &Matching, _cell: usize, user: usize) -> f64 {
        let (k_prev, q_prev) = match matching.server(user) {
            Some(prev) => (matching.load(prev), self.quotas[prev]),
            None => (matching.macro_load(), self.mbs_quota),
        };
        cell_utility_value(self.tau[user], k_prev, q_prev)
    }

    /// Sum of the cell's utilities over the users it serves.
    pub fn realized_cell_utility(&self, matching: &Matching, cell: usize) -> f64 {
        matching
            .members(cell)
            .iter()
            .map(|&u| self.cell_utility(matching, cell, u))
            .sum()
    }

    pub fn candidate_cells(&self, user: usize) -> Vec<usize> {
        (0..self.n_cells)
            .filter(|&j| self.mutually_acceptable(user, j))
            .collect()
    }

    pub fn candidate_users(&self, cell: usize) -> Vec<usize> {
        (0..self.n_users)
            .filter(|&i| self.mutually_acceptable(i, cell))
            .collect()
    }

    pub fn build_user_preferences(
        &self,
        matching: &Matching,
        user: usize,
        candidates: &[usize],
    ) -> PreferenceList {
        let scored = candidates
            .iter()
            .map(|&j| (j, self.user_utility(matching, user, j)))
            .collect();
        PreferenceList::from_scored(user, scored)
    }

    pub fn build_cell_preferences(
        &self,
        matching: &Matching,
        cell: usize,
        applicants: &[usize],
    ) -> PreferenceList {
        let scored = applicants
            .iter()
            .map(|&i| (i, self.cell_utility(matching, cell, i)))
            .collect();
        PreferenceList::from_scored(cell, scored)
    }

    /// Preference lists of every agent, restricted to mutually acceptable
    /// partners and evaluated under `matching`.
    pub fn all_preferences(
        &self,
        matching: &Matching,
    ) -> (Vec<PreferenceList>, Vec<PreferenceList>) {
        let users = (0..self.n_users)
            .map(|i| self.build_user_preferences(matching, i, &self.candidate_cells(i)))
            .collect();
        let cells = (0..self.n_cells)
            .map(|j| self.build_cell_preferences(matching, j, &self.candidate_users(j)))
            .collect();
        (users, cells)
    }
}
