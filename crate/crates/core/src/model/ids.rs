use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Unordered candidate pair stored as `(i, j)` with `i < j`.
pub type Pair = (usize, usize);

/// Normalise two node ids into a [`Pair`].
pub fn pair(a: usize, b: usize) -> Pair {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Orientation of a pair relative to its column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Direction {
    /// `i -> j`
    Fwd,
    /// `j -> i`
    Bwd,
}

impl Direction {
    pub fn flip(self) -> Self {
        match self {
            Direction::Fwd => Direction::Bwd,
            Direction::Bwd => Direction::Fwd,
        }
    }

    /// Directed `(from, to)` for this orientation of `p`.
    pub fn orient(self, p: Pair) -> (usize, usize) {
        match self {
            Direction::Fwd => p,
            Direction::Bwd => (p.1, p.0),
        }
    }

    /// Orientation of `p` that matches the directed edge `from -> to`.
    pub fn of(from: usize, to: usize) -> Self {
        if from < to {
            Direction::Fwd
        } else {
            Direction::Bwd
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Fwd => "FWD",
            Direction::Bwd => "BWD",
        }
    }
}

/// Cascade tiers in lattice order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Tier {
    #[serde(rename = "L0")]
    L0,
    #[serde(rename = "L1")]
    L1,
    #[serde(rename = "L_LSNM")]
    Lsnm,
    #[serde(rename = "L_IGCI")]
    Igci,
    #[serde(rename = "L_STEIN")]
    Stein,
    #[serde(rename = "L_MDL")]
    Mdl,
    #[serde(rename = "L2")]
    L2,
    #[serde(rename = "L_PEIT")]
    Peit,
}

impl Tier {
    pub const ALL: [Tier; 8] = [
        Tier::L0,
        Tier::L1,
        Tier::Lsnm,
        Tier::Igci,
        Tier::Stein,
        Tier::Mdl,
        Tier::L2,
        Tier::Peit,
    ];

    /// Tiers gated by a precondition other than "always".
    pub const SAFE: [Tier; 5] = [Tier::Lsnm, Tier::Igci, Tier::Stein, Tier::Mdl, Tier::Peit];

    pub fn as_str(self) -> &'static str {
        match self {
            Tier::L0 => "L0",
            Tier::L1 => "L1",
            Tier::Lsnm => "L_LSNM",
            Tier::Igci => "L_IGCI",
            Tier::Stein => "L_STEIN",
            Tier::Mdl => "L_MDL",
            Tier::L2 => "L2",
            Tier::Peit => "L_PEIT",
        }
    }
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Tier {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let up = s.trim().to_ascii_uppercase().replace('-', "_");
        Tier::ALL
            .into_iter()
            .find(|t| t.as_str() == up || t.as_str().trim_start_matches("L_") == up)
            .ok_or_else(|| format!("unknown tier `{s}`"))
    }
}

/// Query-minimisation mechanisms M1 to M15.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Mechanism(u8);

impl Mechanism {
    pub const SKELETON: Mechanism = Mechanism(1);
    pub const MEDIATOR: Mechanism = Mechanism(2);
    pub const CASCADE: Mechanism = Mechanism(3);
    pub const GATES: Mechanism = Mechanism(4);
    pub const GUARD: Mechanism = Mechanism(5);
    pub const PROPAGATION: Mechanism = Mechanism(6);
    pub const REAUDIT: Mechanism = Mechanism(7);
    pub const TRANSITIVE_DSEP: Mechanism = Mechanism(8);
    pub const CLASSICAL_CODES: Mechanism = Mechanism(9);
    pub const REGIME_CODES: Mechanism = Mechanism(10);
    pub const PER_EDGE: Mechanism = Mechanism(11);
    pub const INFO_VALUE: Mechanism = Mechanism(12);
    pub const META_HUB: Mechanism = Mechanism(13);
    pub const NODE_CHILDREN: Mechanism = Mechanism(14);
    pub const MISSING_EDGE: Mechanism = Mechanism(15);

    pub fn new(id: u8) -> Option<Self> {
        (1..=15).contains(&id).then_some(Mechanism(id))
    }

    pub fn id(self) -> u8 {
        self.0
    }
}

impl fmt::Display for Mechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "M{}", self.0)
    }
}

/// Who made a decision: a mechanism, a cascade tier, or the oracle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Provenance {
    Mechanism(Mechanism),
    Tier(Tier),
    Oracle,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::Mechanism(m) => m.fmt(f),
            Provenance::Tier(t) => t.fmt(f),
            Provenance::Oracle => f.write_str("ORACLE"),
        }
    }
}

impl FromStr for Provenance {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "ORACLE" {
            return Ok(Provenance::Oracle);
        }
        if let Some(rest) = s.strip_prefix('M') {
            if let Some(m) = rest.parse::<u8>().ok().and_then(Mechanism::new) {
                return Ok(Provenance::Mechanism(m));
            }
        }
        s.parse::<Tier>().map(Provenance::Tier)
    }
}

impl Serialize for Provenance {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Provenance {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn provenance_round_trips() {
        for s in ["M1", "M15", "L0", "L_PEIT", "L_STEIN", "ORACLE"] {
            assert_eq!(s.parse::<Provenance>().unwrap().to_string(), s);
        }
        assert!("M16".parse::<Provenance>().is_err());
        assert!("L9".parse::<Provenance>().is_err());
    }

    #[test]
    fn tier_parses_loosely() {
        assert_eq!("stein".parse::<Tier>().unwrap(), Tier::Stein);
        assert_eq!("L_MDL".parse::<Tier>().unwrap(), Tier::Mdl);
        assert_eq!("l2".parse::<Tier>().unwrap(), Tier::L2);
    }

    #[test]
    fn direction_orients() {
        assert_eq!(Direction::Bwd.orient((1, 4)), (4, 1));
        assert_eq!(Direction::of(4, 1), Direction::Bwd);
        assert_eq!(pair(5, 2), (2, 5));
    }
}
