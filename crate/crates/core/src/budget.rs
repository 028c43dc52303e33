use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Total-variation budget above which a computed measure is no longer trusted.
pub const BUDGET_ABORT: f64 = 0.5;

/// Certified total-variation distance between a computed measure and the exact one.
///
/// Mass removed on purpose (pruning) and mass removed by clamping negative FFT
/// round-off are tracked separately so reports can attribute the slack.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ErrorBudget {
    pub pruned_mass: f64,
    pub fft_residual: f64,
}

impl ErrorBudget {
    pub const ZERO: ErrorBudget = ErrorBudget {
        pruned_mass: 0.0,
        fft_residual: 0.0,
    };

    pub fn total(&self) -> f64 {
        self.pruned_mass + self.fft_residual
    }

    pub fn scaled(&self, factor: f64) -> ErrorBudget {
        ErrorBudget {
            pruned_mass: self.pruned_mass * factor,
            fft_residual: self.fft_residual * factor,
        }
    }

    pub fn check(self) -> Result<Self> {
        let budget = self.total();
        if budget.is_nan() || budget >= BUDGET_ABORT {
            Err(Error::BudgetExceeded { budget })
        } else {
            Ok(self)
        }
    }
}

impl Add for ErrorBudget {
    type Output = ErrorBudget;

    fn add(self, rhs: ErrorBudget) -> ErrorBudget {
        ErrorBudget {
            pruned_mass: self.pruned_mass + rhs.pruned_mass,
            fft_residual: self.fft_residual + rhs.fft_residual,
        }
    }
}

impl AddAssign for ErrorBudget {
    fn add_assign(&mut self, rhs: ErrorBudget) {
        *self = *self + rhs;
    }
}
