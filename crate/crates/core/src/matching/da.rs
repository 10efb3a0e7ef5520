use super::Matching;
use crate::preferences::PreferenceList;

/// Result of one deferred-acceptance run over frozen preferences.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DaOutcome {
    pub matching: Matching,
    /// Synchronous proposal rounds until no free user had a cell left to try.
    pub rounds: usize,
    pub proposals: usize,
    /// Proposals made by each user.
    pub proposals_by_user: Vec<usize>,
}

/// User-proposing deferred acceptance with cell quotas.
///
/// `user_prefs[i]` ranks cells for user `i`; `cell_prefs[j]` ranks the users
/// cell `j` is willing to hold. A user absent from a cell's list is rejected
/// outright. Users that exhaust their list stay on the macro cell. Each user
/// proposes to each cell at most once.
pub fn deferred_acceptance_round(
    user_prefs: &[PreferenceList],
    cell_prefs: &[PreferenceList],
    quotas: &[usize],
) -> DaOutcome {
    let n_users = user_prefs.len();
    let n_cells = quotas.len();
    let rank: Vec<Vec<Option<usize>>> = cell_prefs
        .iter()
        .map(|list| {
            let mut r = vec![None; n_users];
            for (pos, &u) in list.ranked.iter().enumerate() {
                if u < n_users {
                    r[u] = Some(pos);
                }
            }
            r
        })
        .collect();

    let mut next = vec![0usize; n_users];
    let mut held = vec![false; n_users];
    let mut waiting: Vec<Vec<usize>> = vec![Vec::new(); n_cells];
    let mut proposals_by_user = vec![0usize; n_users];
    let mut rounds = 0;
    let mut touched = vec![false; n_cells];

    loop {
        let proposers: Vec<usize> = (0..n_users)
            .filter(|&u| !held[u] && next[u] < user_prefs[u].ranked.len())
            .collect();
        if proposers.is_empty() {
            break;
        }
        rounds += 1;
        for u in proposers {
            let cell = user_prefs[u].ranked[next[u]];
            next[u] += 1;
            proposals_by_user[u] += 1;
            if rank[cell][u].is_some() {
                waiting[cell].push(u);
                held[u] = true;
                touched[cell] = true;
            }
        }
        for cell in 0..n_cells {
            if !std::mem::take(&mut touched[cell]) {
                continue;
            }
            let list = &mut waiting[cell];
            list.sort_by_key(|&u| rank[cell][u]);
            for u in list.drain(quotas[cell].min(list.len())..) {
                held[u] = false;
            }
        }
    }

    let mut matching = Matching::all_macro(n_users, n_cells);
    for (cell, members) in waiting.iter().enumerate() {
        for &u in members {
            matching.assign(u, Some(cell));
        }
    }
    DaOutcome {
        matching,
        rounds,
        proposals: proposals_by_user.iter().sum(),
        proposals_by_user,
    }
}
