use serde::{Deserialize, Serialize};

/// A variance ratio expressed in decibels (factor 10, not 20).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
pub struct Decibels(pub f64);

impl Decibels {
    pub fn from_linear(ratio: f64) -> Self {
        Decibels(10.0 * ratio.log10())
    }

    pub fn to_linear(self) -> f64 {
        10f64.powf(self.0 / 10.0)
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl std::fmt::Display for Decibels {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} dB", self.0)
    }
}

pub fn db_to_linear(x: Decibels) -> f64 {
    x.to_linear()
}

pub fn linear_to_db(ratio: f64) -> Decibels {
    Decibels::from_linear(ratio)
}
