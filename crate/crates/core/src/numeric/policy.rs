//! Working precision and tolerance settings for numerical evaluation.

use serde::Serialize;

use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PrecisionPolicy {
    /// Working precision in decimal digits.
    pub digits: u32,
    /// Absolute tolerance on matrix entries.
    pub tolerance: f64,
    /// Largest Taylor order per step.
    pub max_order: usize,
    /// Step length as a fraction of the distance to the nearest singular point.
    pub step_ratio: f64,
    /// Factor applied to a step that failed to converge.
    pub shrink: f64,
    /// Regularization offsets, relative to the local radius.
    pub epsilons: Vec<f64>,
}

impl Default for PrecisionPolicy {
    fn default() -> Self {
        PrecisionPolicy {
            digits: 50,
            tolerance: 1e-30,
            max_order: 0,
            step_ratio: 0.25,
            shrink: 0.5,
            epsilons: vec![1e-2, 1e-3, 1e-4],
        }
    }
}

impl PrecisionPolicy {
    pub fn with_digits(digits: u32, tolerance: f64) -> Self {
        PrecisionPolicy { digits, tolerance, ..Default::default() }
    }

    /// Checks `W >= -log10(tau) + 10` and a strictly decreasing schedule of at least two offsets.
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0 && self.tolerance < 1.0) {
            return Err(Error::Input(format!("tolerance {} must lie in (0, 1)", self.tolerance)));
        }
        let need = -self.tolerance.log10() + 10.0;
        if (self.digits as f64) < need {
            return Err(Error::Input(format!(
                "precision of {} digits is below the {} digits required for tolerance {:e}",
                self.digits,
                need.ceil(),
                self.tolerance
            )));
        }
        if self.epsilons.len() < 2 {
            return Err(Error::Input("the offset schedule needs at least two entries".into()));
        }
        if self.epsilons.iter().any(|e| !(*e > 0.0 && *e < 1.0)) || self.epsilons.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::Input("offsets must lie in (0, 1) and decrease strictly".into()));
        }
        if !(self.step_ratio > 0.0 && self.step_ratio < 1.0) || !(self.shrink > 0.0 && self.shrink < 1.0) {
            return Err(Error::Input("step ratio and shrink factor must lie in (0, 1)".into()));
        }
        Ok(())
    }

    /// MPFR precision in bits, with guard bits.
    pub fn bits(&self) -> u32 {
        (self.digits as f64 * std::f64::consts::LOG2_10).ceil() as u32 + 64
    }

    /// Relative size below which series terms are dropped.
    pub fn series_tol(&self) -> f64 {
        10f64.powi(-(self.digits as i32) - 6)
    }

    pub fn taylor_cap(&self) -> usize {
        if self.max_order > 0 {
            self.max_order
        } else {
            4 * self.digits as usize + 60
        }
    }
}
