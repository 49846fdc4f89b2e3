use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Observed columns: running variable `D`, outcome `Y`, optional treatment
/// `A`, and `q` placebo outcome (`W`) and placebo treatment (`Z`) columns.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Sample {
    pub running: Vec<f64>,
    pub outcome: Vec<f64>,
    pub treatment: Option<Vec<f64>>,
    pub placebo_outcomes: Vec<Vec<f64>>,
    pub placebo_treatments: Vec<Vec<f64>>,
}

impl Sample {
    pub fn new(
        running: Vec<f64>,
        outcome: Vec<f64>,
        treatment: Option<Vec<f64>>,
        placebo_outcomes: Vec<Vec<f64>>,
        placebo_treatments: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let s = Sample { running, outcome, treatment, placebo_outcomes, placebo_treatments };
        s.check_shape()?;
        Ok(s)
    }

    pub fn n(&self) -> usize {
        self.running.len()
    }

    pub fn q(&self) -> usize {
        self.placebo_outcomes.len()
    }

    pub fn check_shape(&self) -> Result<()> {
        let n = self.n();
        if n == 0 {
            return Err(Error::invalid("sample is empty"));
        }
        if self.outcome.len() != n {
            return Err(Error::invalid("outcome length differs from running variable"));
        }
        if self.treatment.as_ref().is_some_and(|a| a.len() != n) {
            return Err(Error::invalid("treatment length differs from running variable"));
        }
        if self.placebo_outcomes.len() != self.placebo_treatments.len() {
            return Err(Error::invalid("placebo outcomes and placebo treatments must have the same dimension"));
        }
        if self.placebo_outcomes.iter().chain(&self.placebo_treatments).any(|c| c.len() != n) {
            return Err(Error::invalid("placebo column length differs from running variable"));
        }
        let all = self
            .running
            .iter()
            .chain(&self.outcome)
            .chain(self.treatment.iter().flatten())
            .chain(self.placebo_outcomes.iter().flatten())
            .chain(self.placebo_treatments.iter().flatten());
        if all.clone().any(|v| !v.is_finite()) {
            return Err(Error::invalid("sample contains non-finite values"));
        }
        Ok(())
    }

    /// Requires at least two distinct running-variable values strictly on
    /// each side of the cutoff.
    pub fn check_support(&self, cutoff: f64) -> Result<()> {
        let distinct = |pred: &dyn Fn(f64) -> bool| {
            let mut v: Vec<f64> = self.running.iter().copied().filter(|&d| pred(d)).collect();
            v.sort_by(f64::total_cmp);
            v.dedup();
            v.len()
        };
        let left = distinct(&|d| d < cutoff);
        let right = distinct(&|d| d > cutoff);
        if left < 2 || right < 2 {
            return Err(Error::invalid(alloc::format!(
                "need two distinct running-variable values on each side of the cutoff (left {left}, right {right})"
            )));
        }
        Ok(())
    }

    pub fn require_placebos(&self) -> Result<()> {
        if self.q() == 0 {
            return Err(Error::invalid("placebo outcome and placebo treatment columns are required"));
        }
        Ok(())
    }
}
