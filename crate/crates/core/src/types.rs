use std::fmt;

use serde::{Deserialize, Serialize};

/// Opaque player identifier.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UserId(pub u32);

impl fmt::Display for UserId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<u32> for UserId {
    fn from(v: u32) -> Self {
        UserId(v)
    }
}

/// A binary judgement about a target: `Cheater` is a "true" ballot.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    Normal,
    Cheater,
}

impl Verdict {
    pub fn from_bool(is_cheater: bool) -> Self {
        if is_cheater {
            Verdict::Cheater
        } else {
            Verdict::Normal
        }
    }

    pub fn is_cheater(self) -> bool {
        matches!(self, Verdict::Cheater)
    }

    pub fn inverted(self) -> Self {
        match self {
            Verdict::Normal => Verdict::Cheater,
            Verdict::Cheater => Verdict::Normal,
        }
    }
}

/// The true nature of a player.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Normal,
    Cheater,
}

impl Role {
    /// The verdict a perfect detector would return for this role.
    pub fn verdict(self) -> Verdict {
        match self {
            Role::Normal => Verdict::Normal,
            Role::Cheater => Verdict::Cheater,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Role::Normal => "normal",
            Role::Cheater => "cheater",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Role {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "normal" => Ok(Role::Normal),
            "cheater" => Ok(Role::Cheater),
            other => Err(format!("unknown role {other:?}")),
        }
    }
}

/// One voter's verdict about one target.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ballot {
    pub voter: UserId,
    pub target: UserId,
    pub verdict: Verdict,
}

impl Ballot {
    pub fn new(voter: impl Into<UserId>, target: impl Into<UserId>, verdict: Verdict) -> Self {
        Ballot {
            voter: voter.into(),
            target: target.into(),
            verdict,
        }
    }

    pub fn is_self(&self) -> bool {
        self.voter == self.target
    }
}
