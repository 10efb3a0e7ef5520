//! Many-to-one user/cell matching: the assignment structure, user-proposing
//! deferred acceptance, the externality fixed-point solver, the stability
//! verifier and the max-SINR baseline.

mod baseline;
mod da;
mod solver;
mod stability;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use baseline::{max_sinr_baseline, max_sinr_matching};
pub use da::{deferred_acceptance_round, DaOutcome};
pub use solver::{solve, solve_market, SolveReport, Termination};
pub use stability::{verify_stability, BlockingPair, StabilityReport};

/// Assignment of users to picocells; a user without a picocell is served by
/// the macro cell.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Matching {
    user_to_cell: Vec<Option<usize>>,
    /// Members of each cell in ascending user order.
    cell_to_users: Vec<Vec<usize>>,
}

impl Matching {
    /// Every user on the macro cell.
    pub fn all_macro(n_users: usize, n_cells: usize) -> Self {
        Matching {
            user_to_cell: vec![None; n_users],
            cell_to_users: vec![Vec::new(); n_cells],
        }
    }

    /// Builds a matching from each user's server.
    pub fn from_assignment(assignment: &[Option<usize>], n_cells: usize) -> Result<Self> {
        let mut m = Matching::all_macro(assignment.len(), n_cells);
        for (user, &server) in assignment.iter().enumerate() {
            if let Some(cell) = server {
                if cell >= n_cells {
                    return Err(Error::domain(format!(
                        "user {user} assigned to unknown cell {cell}"
                    )));
                }
            }
            m.assign(user, server);
        }
        Ok(m)
    }

    pub fn n_users(&self) -> usize {
        self.user_to_cell.len()
    }

    pub fn n_cells(&self) -> usize {
        self.cell_to_users.len()
    }

    /// Serving picocell of `user`, `None` for the macro cell.
    pub fn server(&self, user: usize) -> Option<usize> {
        self.user_to_cell[user]
    }

    pub fn members(&self, cell: usize) -> &[usize] {
        &self.cell_to_users[cell]
    }

    pub fn load(&self, cell: usize) -> usize {
        self.cell_to_users[cell].len()
    }

    pub fn macro_load(&self) -> usize {
        self.user_to_cell.iter().filter(|s| s.is_none()).count()
    }

    pub fn macro_users(&self) -> Vec<usize> {
        (0..self.n_users())
            .filter(|&u| self.user_to_cell[u].is_none())
            .collect()
    }

    pub fn assignment(&self) -> &[Option<usize>] {
        &self.user_to_cell
    }

    /// Moves `user` to `server`, keeping both directions consistent.
    pub fn assign(&mut self, user: usize, server: Option<usize>) {
        if let Some(old) = self.user_to_cell[user] {
            self.cell_to_users[old].retain(|&u| u != user);
        }
        if let Some(new) = server {
            let members = &mut self.cell_to_users[new];
            let at = members.partition_point(|&u| u < user);
            members.insert(at, user);
        }
        self.user_to_cell[user] = server;
    }

    /// Checks quotas and that both directions of the map agree.
    pub fn audit(&self, quotas: &[usize]) -> Result<()> {
        if quotas.len() != self.n_cells() {
            return Err(Error::domain("quota list does not match cell count"));
        }
        self.audit_links()?;
        for (cell, members) in self.cell_to_users.iter().enumerate() {
            if members.len() > quotas[cell] {
                return Err(Error::domain(format!(
                    "cell {cell} holds {} users over quota {}",
                    members.len(),
                    quotas[cell]
                )));
            }
        }
        Ok(())
    }

    /// Consistency of the two directions only, no quota check.
    pub fn audit_links(&self) -> Result<()> {
        for (cell, members) in self.cell_to_users.iter().enumerate() {
            if members.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::domain(format!(
                    "cell {cell} member list not strictly ordered"
                )));
            }
            if let Some(&u) = members
                .iter()
                .find(|&&u| self.user_to_cell.get(u) != Some(&Some(cell)))
            {
                return Err(Error::domain(format!(
                    "cell {cell} lists user {u} who is served elsewhere"
                )));
            }
        }
        for (user, server) in self.user_to_cell.iter().enumerate() {
            if let Some(cell) = *server {
                if cell >= self.n_cells() || self.cell_to_users[cell].binary_search(&user).is_err()
                {
                    return Err(Error::domain(format!(
                        "user {user} not listed by its cell {cell}"
                    )));
                }
            }
        }
        Ok(())
    }
}

impl fmt::Display for Matching {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (cell, members) in self.cell_to_users.iter().enumerate() {
            writeln!(f, "cell {cell}: {members:?}")?;
        }
        write!(f, "macro: {:?}", self.macro_users())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn assign_keeps_both_directions() {
        let mut m = Matching::all_macro(4, 2);
        m.assign(2, Some(1));
        m.assign(0, Some(1));
        m.assign(3, Some(0));
        assert_eq!(m.members(1), &[0, 2]);
        assert_eq!(m.macro_load(), 1);
        m.assign(2, Some(0));
        assert_eq!(m.members(0), &[2, 3]);
        assert_eq!(m.members(1), &[0]);
        m.assign(0, None);
        assert_eq!(m.macro_users(), vec![0, 1]);
        m.audit(&[2, 2]).unwrap();
        assert!(m.audit(&[1, 2]).is_err());
    }

    #[test]
    fn from_assignment_rejects_unknown_cells() {
        assert!(Matching::from_assignment(&[Some(3)], 2).is_err());
        let m = Matching::from_assignment(&[Some(1), None, Some(1)], 2).unwrap();
        assert_eq!(m.members(1), &[0, 2]);
    }
}
