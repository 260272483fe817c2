use std::iter::Sum;
use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};

/// Oracle and randomness cost of a run. Counters only grow.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainBudget {
    pub f_evals: u64,
    pub rho_evals: u64,
    pub membership_calls: u64,
    pub rng_draws: u64,
}

impl ChainBudget {
    pub fn new() -> Self {
        Self::default()
    }
}

impl AddAssign for ChainBudget {
    fn add_assign(&mut self, rhs: Self) {
        self.f_evals += rhs.f_evals;
        self.rho_evals += rhs.rho_evals;
        self.membership_calls += rhs.membership_calls;
        self.rng_draws += rhs.rng_draws;
    }
}

impl Add for ChainBudget {
    type Output = Self;

    fn add(mut self, rhs: Self) -> Self {
        self += rhs;
        self
    }
}

impl Sum for ChainBudget {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::default(), Add::add)
    }
}
