//! Brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use cellmatch::matching::Matching;
use cellmatch::preferences::{Market, PreferenceList};
use rand::seq::SliceRandom;
use rand::Rng;

/// A random two-sided market with strict, possibly partial lists.
pub struct RandomMarket {
    pub user_prefs: Vec<PreferenceList>,
    pub cell_prefs: Vec<PreferenceList>,
    pub quotas: Vec<usize>,
}

pub fn random_market(rng: &mut impl Rng, max_users: usize, max_cells: usize) -> RandomMarket {
    let n = rng.random_range(1..=max_users);
    let p = rng.random_range(1..=max_cells);
    let quotas = (0..p).map(|_| rng.random_range(1..=3)).collect();
    let mut list = |owner: usize, len: usize| {
        let mut ids: Vec<usize> = (0..len).filter(|_| rng.random_bool(0.8)).collect();
        ids.shuffle(rng);
        PreferenceList { owner, ranked: ids }
    };
    let user_prefs = (0..n).map(|i| list(i, p)).collect();
    let cell_prefs = (0..p).map(|j| list(j, n)).collect();
    RandomMarket {
        user_prefs,
        cell_prefs,
        quotas,
    }
}

fn rank(list: &PreferenceList, id: usize) -> Option<usize> {
    list.ranked.iter().position(|&x| x == id)
}

/// Every assignment of users to acceptable cells or the macro cell that
/// respects the quotas.
pub fn feasible_assignments(
    user_options: &[Vec<usize>],
    quotas: &[usize],
) -> Vec<Vec<Option<usize>>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(user_options.len());
    let mut load = vec![0usize; quotas.len()];
    fn go(
        i: usize,
        opts: &[Vec<usize>],
        quotas: &[usize],
        cur: &mut Vec<Option<usize>>,
        load: &mut [usize],
        out: &mut Vec<Vec<Option<usize>>>,
    ) {
        if i == opts.len() {
            out.push(cur.clone());
            return;
        }
        cur.push(None);
        go(i + 1, opts, quotas, cur, load, out);
        cur.pop();
        for &c in &opts[i] {
            if load[c] < quotas[c] {
                load[c] += 1;
                cur.push(Some(c));
                go(i + 1, opts, quotas, cur, load, out);
                cur.pop();
                load[c] -= 1;
            }
        }
    }
    go(0, user_options, quotas, &mut current, &mut load, &mut out);
    out
}

/// Blocking pairs of `assignment` under fixed strict preferences. Only pairs
/// listed by both sides count.
pub fn frozen_blocking_pairs(
    m: &RandomMarket,
    assignment: &[Option<usize>],
) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    for (u, prefs) in m.user_prefs.iter().enumerate() {
        for &c in &prefs.ranked {
            if assignment[u] == Some(c) {
                break;
            }
            let Some(ru) = rank(&m.cell_prefs[c], u) else {
                continue;
            };
            let members: Vec<usize> = (0..assignment.len())
                .filter(|&v| assignment[v] == Some(c))
                .collect();
            let wants = members.len() < m.quotas[c]
                || members
                    .iter()
                    .any(|&v| rank(&m.cell_prefs[c], v).is_none_or(|rv| ru < rv));
            if wants {
                pairs.push((u, c));
            }
        }
    }
    pairs
}

/// Mutually listed options of every user.
pub fn mutual_options(m: &RandomMarket) -> Vec<Vec<usize>> {
    m.user_prefs
        .iter()
        .enumerate()
        .map(|(u, p)| {
            p.ranked
                .iter()
                .copied()
                .filter(|&c| rank(&m.cell_prefs[c], u).is_some())
                .collect()
        })
        .collect()
}

/// Stable assignments under fixed preferences, by enumeration.
pub fn stable_assignments(m: &RandomMarket) -> Vec<Vec<Option<usize>>> {
    feasible_assignments(&mutual_options(m), &m.quotas)
        .into_iter()
        .filter(|a| frozen_blocking_pairs(m, a).is_empty())
        .collect()
}

/// `true` when user `u` weakly prefers `a` to `b`.
pub fn user_weakly_prefers(m: &RandomMarket, u: usize, a: Option<usize>, b: Option<usize>) -> bool {
    let pos = |x: Option<usize>| {
        x.and_then(|c| rank(&m.user_prefs[u], c))
            .unwrap_or(usize::MAX)
    };
    pos(a) <= pos(b)
}

/// Blocking pairs found by enumerating every matching `mu2` that moves `user`
/// into `cell` and sends any subset of the cell's members to the macro cell.
/// The user must gain under `mu2`; the cell must rank the user above every
/// member it drops, and may only skip dropping anyone if it has room.
pub fn exhaustive_blocking(market: &Market, mu: &Matching) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    for cell in 0..market.n_cells() {
        let members = mu.members(cell).to_vec();
        for user in 0..market.n_users() {
            if mu.server(user) == Some(cell) || !market.mutually_acceptable(user, cell) {
                continue;
            }
            let incoming = market.cell_utility(mu, cell, user);
            let before = market.realized_user_utility(mu, user);
            let found = (0u32..1 << members.len()).any(|mask| {
                let dropped: Vec<usize> = (0..members.len())
                    .filter(|k| mask & (1 << k) != 0)
                    .map(|k| members[k])
                    .collect();
                if members.len() - dropped.len() + 1 > market.quota(cell) {
                    return false;
                }
                if dropped
                    .iter()
                    .any(|&d| market.cell_utility(mu, cell, d) >= incoming)
                {
                    return false;
                }
                let mut mu2 = mu.clone();
                for &d in &dropped {
                    mu2.assign(d, None);
                }
                mu2.assign(user, Some(cell));
                market.realized_user_utility(&mu2, user) > before
            });
            if found {
                pairs.push((user, cell));
            }
        }
    }
    pairs
}

/// Every feasible matching of a market's mutually acceptable pairs.
pub fn all_matchings(market: &Market) -> Vec<Matching> {
    let opts: Vec<Vec<usize>> = (0..market.n_users())
        .map(|u| market.candidate_cells(u))
        .collect();
    feasible_assignments(&opts, market.quotas())
        .into_iter()
        .map(|a| Matching::from_assignment(&a, market.n_cells()).unwrap())
        .collect()
}
