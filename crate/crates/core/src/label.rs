use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Veracity label. `False` is class index 0 and SVM sign −1; `True` is
/// index 1 and sign +1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    False,
    True,
}

impl Label {
    pub const ALL: [Label; 2] = [Label::False, Label::True];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Self {
        if i == 0 {
            Label::False
        } else {
            Label::True
        }
    }

    pub fn sign(self) -> f64 {
        match self {
            Label::False => -1.0,
            Label::True => 1.0,
        }
    }

    /// Non-negative values map to `True`.
    pub fn from_decision(value: f64) -> Self {
        if value >= 0.0 {
            Label::True
        } else {
            Label::False
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Label::False => "false",
            Label::True => "true",
        }
    }
}

impl std::fmt::Display for Label {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "false" => Ok(Label::False),
            "true" => Ok(Label::True),
            _ => Err(Error::invalid(format!("unknown label `{s}`"))),
        }
    }
}
