use serde::{Deserialize, Serialize};

use super::Matching;
use crate::preferences::Market;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockingPair {
    pub user: usize,
    pub cell: usize,
    /// Member the cell drops to make room, if it was full.
    pub evicted: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub stable: bool,
    pub blocking: Vec<BlockingPair>,
}

/// Searches for user/cell pairs that both gain from a one-step deviation.
///
/// For every mutually acceptable pair `(n, p)` with `p` not serving `n`, the
/// deviation moves `n` into `p`; a full `p` drops its least preferred member
/// to the macro cell. The user blocks when its utility recomputed under the
/// deviated matching strictly exceeds its current utility. The cell blocks
/// when it had a free slot, or when it ranks `n` strictly above the member it
/// drops. Cell rankings use the offloading utility of each user's serving
/// cell in `matching`, the same ranking the cell applies during deferred
/// acceptance.
pub fn verify_stability(market: &Market, matching: &Matching) -> StabilityReport {
    let mut blocking = Vec::new();
    for cell in 0..market.n_cells() {
        let members = matching.members(cell);
        let full = members.len() >= market.quota(cell);
        let weakest = if full {
            members
                .iter()
                .map(|&u| (u, market.cell_utility(matching, cell, u)))
                .min_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)))
        } else {
            None
        };
        for user in 0..market.n_users() {
            if matching.server(user) == Some(cell) || !market.mutually_acceptable(user, cell) {
                continue;
            }
            let cell_gains = match weakest {
                None => true,
                Some((_, floor)) => market.cell_utility(matching, cell, user) > floor,
            };
            if !cell_gains {
                continue;
            }
            let mut deviated = matching.clone();
            let evicted = weakest.map(|w| w.0);
            if let Some(w) = evicted {
                deviated.assign(w, None);
            }
            deviated.assign(user, Some(cell));
            let before = market.realized_user_utility(matching, user);
            let after = market.realized_user_utility(&deviated, user);
            if after > before {
                blocking.push(BlockingPair {
                    user,
                    cell,
                    evicted,
                });
            }
        }
    }
    StabilityReport {
        stable: blocking.is_empty(),
        blocking,
    }
}
