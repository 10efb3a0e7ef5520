use super::Matching;
use crate::error::Result;
use crate::preferences::{GameConfig, Market};
use crate::scenario::Scenario;

/// Context-unaware association: each user picks the picocell with the
/// strongest SINR among those it can hear (coverage and SINR floor per the
/// game and radio settings). Handover reliability, preparation time, load and
/// urgency are ignored. With quotas enforced a cell keeps its strongest
/// applicants and the rest go to the macro cell.
pub fn max_sinr_baseline(scenario: &Scenario, game: &GameConfig) -> Result<Matching> {
    let market = Market::new(scenario, game)?;
    Ok(max_sinr_matching(&market, game.baseline_quota))
}

pub fn max_sinr_matching(market: &Market, enforce_quota: bool) -> Matching {
    let mut applicants: Vec<Vec<(usize, f64)>> = vec![Vec::new(); market.n_cells()];
    for user in 0..market.n_users() {
        let best = (0..market.n_cells())
            .filter(|&j| market.radio_eligible(user, j))
            .map(|j| (j, market.pico_sinr(user, j)))
            .fold(None, |acc: Option<(usize, f64)>, cand| match acc {
                Some(a) if a.1 >= cand.1 => Some(a),
                _ => Some(cand),
            });
        if let Some((cell, s)) = best {
            applicants[cell].push((user, s));
        }
    }
    let mut matching = Matching::all_macro(market.n_users(), market.n_cells());
    for (cell, mut list) in applicants.into_iter().enumerate() {
        list.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        let keep = if enforce_quota {
            market.quota(cell).min(list.len())
        } else {
            list.len()
        };
        for &(user, _) in &list[..keep] {
            matching.assign(user, Some(cell));
        }
    }
    matching
}
