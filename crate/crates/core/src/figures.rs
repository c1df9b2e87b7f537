//! The two worked instances used throughout the tests and the `replay`
//! command. Both live on an 8 km segment with the leftmost agent at 0.

use std::fmt;
use std::str::FromStr;

use crate::model::{
    Instance,
    PreferenceType::{Dislike as H, Like as L},
};

/// Gaps 1, 4, 2, 1; agent 4 is the one tempted to misreport.
pub fn fig1() -> Instance {
    Instance::new(8.0, vec![0.0, 1.0, 5.0, 7.0, 8.0], vec![L, H, L, H, L]).expect("valid built-in instance")
}

/// Gaps 1, 4, 1.5, 1.5; counterexample for placing the facility at the
/// relocated optimum and letting agents trade.
pub fn fig2() -> Instance {
    Instance::new(8.0, vec![0.0, 1.0, 5.0, 6.5, 8.0], vec![L, L, H, H, H]).expect("valid built-in instance")
}

/// Index of the agent whose misreport both figures illustrate (agent 4).
pub const DEVIATOR: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Figure {
    Fig1,
    Fig2,
}

impl Figure {
    pub fn instance(self) -> Instance {
        match self {
            Figure::Fig1 => fig1(),
            Figure::Fig2 => fig2(),
        }
    }

    pub fn token(self) -> &'static str {
        match self {
            Figure::Fig1 => "fig1",
            Figure::Fig2 => "fig2",
        }
    }
}

impl fmt::Display for Figure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for Figure {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fig1" => Ok(Figure::Fig1),
            "fig2" => Ok(Figure::Fig2),
            other => Err(format!("unknown figure {other:?} (expected fig1 or fig2)")),
        }
    }
}
