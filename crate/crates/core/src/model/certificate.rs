use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Per-edge certificate. The set is closed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CertificateCode {
    ResolvedDecisive,
    ResolvedMediated,
    ImpossibleR1,
    ImpossibleLatentLikely,
    ImpossibleRegressorInconsistent,
    ImpossibleNonlinearWeak,
    ImpossibleHocAmbiguous,
    ImpossibleAmbiguous,
    ImpossibleL0DisagreesWithHighTier,
    ImpossibleCircular,
    ImpossibleBinaryContinuous,
    ImpossibleCount,
    ImpossibleHighCardinalityDiscrete,
}

impl CertificateCode {
    pub const ALL: [CertificateCode; 13] = [
        CertificateCode::ResolvedDecisive,
        CertificateCode::ResolvedMediated,
        CertificateCode::ImpossibleR1,
        CertificateCode::ImpossibleLatentLikely,
        CertificateCode::ImpossibleRegressorInconsistent,
        CertificateCode::ImpossibleNonlinearWeak,
        CertificateCode::ImpossibleHocAmbiguous,
        CertificateCode::ImpossibleAmbiguous,
        CertificateCode::ImpossibleL0DisagreesWithHighTier,
        CertificateCode::ImpossibleCircular,
        CertificateCode::ImpossibleBinaryContinuous,
        CertificateCode::ImpossibleCount,
        CertificateCode::ImpossibleHighCardinalityDiscrete,
    ];

    pub fn is_impossible(self) -> bool {
        !matches!(
            self,
            CertificateCode::ResolvedDecisive | CertificateCode::ResolvedMediated
        )
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CertificateCode::ResolvedDecisive => "RESOLVED_DECISIVE",
            CertificateCode::ResolvedMediated => "RESOLVED_MEDIATED",
            CertificateCode::ImpossibleR1 => "IMPOSSIBLE_R1",
            CertificateCode::ImpossibleLatentLikely => "IMPOSSIBLE_LATENT_LIKELY",
            CertificateCode::ImpossibleRegressorInconsistent => {
                "IMPOSSIBLE_REGRESSOR_INCONSISTENT"
            }
            CertificateCode::ImpossibleNonlinearWeak => "IMPOSSIBLE_NONLINEAR_WEAK",
            CertificateCode::ImpossibleHocAmbiguous => "IMPOSSIBLE_HOC_AMBIGUOUS",
            CertificateCode::ImpossibleAmbiguous => "IMPOSSIBLE_AMBIGUOUS",
            CertificateCode::ImpossibleL0DisagreesWithHighTier => {
                "IMPOSSIBLE_L0_DISAGREES_WITH_HIGH_TIER"
            }
            CertificateCode::ImpossibleCircular => "IMPOSSIBLE_CIRCULAR",
            CertificateCode::ImpossibleBinaryContinuous => "IMPOSSIBLE_BINARY_CONTINUOUS",
            CertificateCode::ImpossibleCount => "IMPOSSIBLE_COUNT",
            CertificateCode::ImpossibleHighCardinalityDiscrete => {
                "IMPOSSIBLE_HIGH_CARDINALITY_DISCRETE"
            }
        }
    }
}

impl fmt::Display for CertificateCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CertificateCode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CertificateCode::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("unknown certificate code `{s}`"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn codes_round_trip_through_strings_and_serde() {
        for c in CertificateCode::ALL {
            assert_eq!(c.as_str().parse::<CertificateCode>().unwrap(), c);
            let js = serde_json::to_string(&c).unwrap();
            assert_eq!(js, format!("\"{}\"", c.as_str()));
        }
        assert_eq!(
            CertificateCode::ALL.iter().filter(|c| c.is_impossible()).count(),
            11
        );
        assert!("RESOLVED_LINEAR".parse::<CertificateCode>().is_err());
    }
}
