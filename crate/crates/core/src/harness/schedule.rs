use std::fmt;

use crate::error::{invalid, Result};

/// Step size as a function of the 1-based iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LrSchedule {
    Constant(f64),
    /// `c / t`.
    InvT(f64),
    /// `c / t^power`.
    InvPow { c: f64, power: f64 },
}

impl LrSchedule {
    pub fn rate(&self, t: usize) -> f64 {
        let t = t.max(1) as f64;
        match *self {
            LrSchedule::Constant(c) => c,
            LrSchedule::InvT(c) => c / t,
            LrSchedule::InvPow { c, power } => c / t.powf(power),
        }
    }

    /// `(sum eta_t = inf, sum eta_t^2 < inf)`.
    pub fn robbins_monro(&self) -> (bool, bool) {
        match *self {
            LrSchedule::Constant(c) => (c > 0.0, c == 0.0),
            LrSchedule::InvT(c) => (c > 0.0, true),
            LrSchedule::InvPow { c, power } => (c > 0.0 && power <= 1.0, c == 0.0 || power > 0.5),
        }
    }

    pub fn parse(name: &str, lr: f64, power: Option<f64>) -> Result<Self> {
        if !(lr.is_finite() && lr > 0.0) {
            return invalid(format!("lr must be positive, got {lr}"));
        }
        match name {
            "constant" => Ok(LrSchedule::Constant(lr)),
            "inv_t" | "c/t" => Ok(LrSchedule::InvT(lr)),
            "inv_pow" => match power {
                Some(p) if p > 0.0 && p.is_finite() => Ok(LrSchedule::InvPow { c: lr, power: p }),
                _ => invalid("inv_pow schedule needs lr_power > 0"),
            },
            other => invalid(format!("unknown lr schedule {other:?}")),
        }
    }
}

impl fmt::Display for LrSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LrSchedule::Constant(c) => write!(f, "constant({c})"),
            LrSchedule::InvT(c) => write!(f, "{c}/t"),
            LrSchedule::InvPow { c, power } => write!(f, "{c}/t^{power}"),
        }
    }
}
