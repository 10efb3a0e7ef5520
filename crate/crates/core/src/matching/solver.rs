use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::{deferred_acceptance_round, verify_stability, Matching};
use crate::error::Result;
use crate::preferences::{GameConfig, Market};
use crate::scenario::Scenario;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// Two consecutive matchings were identical.
    Converged,
    /// A matching seen at an earlier iteration came back.
    Cycle,
    /// The iteration cap was hit.
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    /// Fixed point when converged, otherwise the visited matching with the
    /// largest total user utility.
    pub matching: Matching,
    pub outer_iterations: usize,
    /// Deferred-acceptance proposal rounds summed over all outer iterations.
    pub inner_proposal_rounds: usize,
    /// Proposals summed over all outer iterations.
    pub proposals: usize,
    pub converged: bool,
    pub cycle_detected: bool,
    pub termination: Termination,
    pub stable: bool,
    pub blocking_pairs: usize,
}

impl SolveReport {
    /// One JSON object on a single line.
    pub fn to_record_line(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }

    pub fn from_record_line(line: &str) -> Result<Self> {
        serde_json::from_str(line).map_err(|e| crate::Error::Parse {
            line: Some(e.line()),
            field: None,
            message: e.to_string(),
        })
    }

    /// Proposals per user over the whole run.
    pub fn proposals_per_user(&self) -> f64 {
        let n = self.matching.n_users();
        if n == 0 {
            0.0
        } else {
            self.proposals as f64 / n as f64
        }
    }
}

pub fn solve(scenario: &Scenario, game: &GameConfig) -> Result<SolveReport> {
    let market = Market::new(scenario, game)?;
    Ok(solve_market(&market, game.max_outer))
}

/// Iterates deferred acceptance with preferences rebuilt from the previous
/// matching until the matching stops changing, revisits an earlier state, or
/// `max_outer` iterations have run. Starts with every user on the macro cell.
pub fn solve_market(market: &Market, max_outer: usize) -> SolveReport {
    let mut current = Matching::all_macro(market.n_users(), market.n_cells());
    let mut seen: HashSet<Matching> = HashSet::new();
    seen.insert(current.clone());
    let mut best = (total_user_utility(market, &current), current.clone());
    let mut rounds = 0;
    let mut proposals = 0;
    let mut iterations = 0;
    let mut termination = Termination::IterationLimit;

    while iterations < max_outer {
        iterations += 1;
        let (user_prefs, cell_prefs) = market.all_preferences(&current);
        let outcome = deferred_acceptance_round(&user_prefs, &cell_prefs, market.quotas());
        rounds += outcome.rounds;
        proposals += outcome.proposals;
        debug_assert!(outcome.proposals <= market.n_users() * market.n_cells());
        debug_assert!(outcome.matching.audit(market.quotas()).is_ok());
        let next = outcome.matching;
        if next == current {
            termination = Termination::Converged;
            break;
        }
        if !seen.insert(next.clone()) {
            termination = Termination::Cycle;
            current = next;
            break;
        }
        let score = total_user_utility(market, &next);
        if score > best.0 {
            best = (score, next.clone());
        }
        current = next;
    }

    let converged = termination == Termination::Converged;
    let matching = if converged { current } else { best.1 };
    let stability = verify_stability(market, &matching);
    SolveReport {
        matching,
        outer_iterations: iterations,
        inner_proposal_rounds: rounds,
        proposals,
        converged,
        cycle_detected: termination == Termination::Cycle,
        termination,
        stable: stability.stable,
        blocking_pairs: stability.blocking.len(),
    }
}

fn total_user_utility(market: &Market, matching: &Matching) -> f64 {
    (0..market.n_users())
        .map(|u| market.realized_user_utility(matching, u))
        .sum()
}
