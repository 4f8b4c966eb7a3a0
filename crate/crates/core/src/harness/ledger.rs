use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Running account of the training and evaluation budgets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BudgetLedger {
    pub b_train: u64,
    /// `None` in transparent mode, where evaluations are free.
    pub b_eval: Option<u64>,
    pub used_train: u64,
    pub used_eval: u64,
}

impl BudgetLedger {
    pub fn new(b_train: u64) -> Result<Self> {
        if b_train == 0 {
            return Err(Error::Config("training budget must be positive".into()));
        }
        Ok(BudgetLedger {
            b_train,
            b_eval: None,
            used_train: 0,
            used_eval: 0,
        })
    }

    pub fn with_eval(b_train: u64, b_eval: u64) -> Result<Self> {
        if b_eval == 0 {
            return Err(Error::Config("evaluation budget must be positive".into()));
        }
        let mut ledger = Self::new(b_train)?;
        ledger.b_eval = Some(b_eval);
        Ok(ledger)
    }

    pub fn remaining_train(&self) -> u64 {
        self.b_train - self.used_train
    }

    pub fn remaining_eval(&self) -> Option<u64> {
        self.b_eval.map(|b| b - self.used_eval)
    }

    pub fn would_overflow_train(&self, size: u64) -> bool {
        self.used_train.saturating_add(size) > self.b_train
    }

    pub fn would_overflow_eval(&self, size: u64) -> bool {
        match self.b_eval {
            Some(b) => self.used_eval.saturating_add(size) > b,
            None => false,
        }
    }

    /// Charges a round. Callers check for overflow first.
    pub(crate) fn charge(&mut self, train: u64, eval: u64) {
        debug_assert!(!self.would_overflow_train(train));
        debug_assert!(!self.would_overflow_eval(eval));
        self.used_train += train;
        if self.b_eval.is_some() {
            self.used_eval += eval;
        }
    }

    pub fn invariants_hold(&self) -> bool {
        self.used_train <= self.b_train && self.b_eval.is_none_or(|b| self.used_eval <= b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overflow_checks() {
        let mut l = BudgetLedger::with_eval(10, 3).unwrap();
        assert!(!l.would_overflow_train(10));
        assert!(l.would_overflow_train(11));
        l.charge(4, 2);
        assert_eq!(l.remaining_train(), 6);
        assert_eq!(l.remaining_eval(), Some(1));
        assert!(l.would_overflow_eval(2));
        assert!(l.invariants_hold());
    }

    #[test]
    fn zero_budgets_rejected() {
        assert!(BudgetLedger::new(0).is_err());
        assert!(BudgetLedger::with_eval(5, 0).is_err());
    }

    #[test]
    fn transparent_ledger_ignores_eval() {
        let mut l = BudgetLedger::new(5).unwrap();
        assert!(!l.would_overflow_eval(u64::MAX));
        l.charge(5, 100);
        assert_eq!(l.used_eval, 0);
    }
}
