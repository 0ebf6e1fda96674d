//! The source catalog: every census, survey-derived or administrative
//! dataset the databank accepts, with its coverage metadata.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geography::GeoLevel;

#[derive(Debug, Error)]
#[error("unknown source id `{0}`")]
pub struct UnknownSource(pub String);

/// What a source measures.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Measure {
    Stock,
    Flow,
}

/// Coverage metadata for one source.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SourceMeta {
    /// Finest geography the source publishes at.
    pub finest_level: GeoLevel,
    /// Stock and/or flow measures available. Never empty.
    pub measures: &'static [Measure],
    /// Population the source covers.
    pub population: &'static str,
    /// Whether the source records emigration as well as immigration.
    pub captures_emigration: bool,
    /// Known interpretation caveat, if any.
    pub caveat: Option<&'static str>,
}

/// Identifiers for the datasets the databank harmonizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SourceId {
    TimOfficial,
    GpReg,
    NinoAll,
    NinoNonAccession,
    HesaStudent,
    CensusFlow,
    Wrs,
    HomeOfficeAsylum,
}

impl SourceId {
    pub const ALL: [SourceId; 8] = [
        SourceId::TimOfficial,
        SourceId::GpReg,
        SourceId::NinoAll,
        SourceId::NinoNonAccession,
        SourceId::HesaStudent,
        SourceId::CensusFlow,
        SourceId::Wrs,
        SourceId::HomeOfficeAsylum,
    ];

    pub fn key(self) -> &'static str {
        match self {
            SourceId::TimOfficial => "TIM_OFFICIAL",
            SourceId::GpReg => "GP_REG",
            SourceId::NinoAll => "NINO_ALL",
            SourceId::NinoNonAccession => "NINO_NON_ACCESSION",
            SourceId::HesaStudent => "HESA_STUDENT",
            SourceId::CensusFlow => "CENSUS_FLOW",
            SourceId::Wrs => "WRS",
            SourceId::HomeOfficeAsylum => "HOME_OFFICE_ASYLUM",
        }
    }

    /// Catalog metadata for this source.
    pub fn meta(self) -> &'static SourceMeta {
        use GeoLevel::Lad;
        use Measure::{Flow, Stock};
        match self {
            SourceId::TimOfficial => &SourceMeta {
                finest_level: Lad,
                measures: &[Flow],
                population: "all long-term migrants",
                captures_emigration: true,
                caveat: None,
            },
            SourceId::GpReg => &SourceMeta {
                finest_level: Lad,
                measures: &[Flow],
                population: "all migrants registering with a doctor",
                captures_emigration: false,
                caveat: Some("includes some stays shorter than twelve months; registration lags arrival"),
            },
            SourceId::NinoAll => &SourceMeta {
                finest_level: Lad,
                measures: &[Flow],
                population: "migrant workers",
                captures_emigration: false,
                caveat: Some("excludes non-working dependants and most students; no de-registration"),
            },
            SourceId::NinoNonAccession => &SourceMeta {
                finest_level: Lad,
                measures: &[Flow],
                population: "migrant workers from non-Accession countries",
                captures_emigration: false,
                caveat: Some("excludes non-working dependants and most students; no de-registration"),
            },
            SourceId::HesaStudent => &SourceMeta {
                finest_level: Lad,
                measures: &[Stock, Flow],
                population: "international students",
                captures_emigration: false,
                caveat: Some("located by institution, not residence"),
            },
            SourceId::CensusFlow => &SourceMeta {
                finest_level: Lad,
                measures: &[Stock, Flow],
                population: "all migrants",
                captures_emigration: false,
                caveat: Some("decennial; ages quickly between enumerations"),
            },
            SourceId::Wrs => &SourceMeta {
                finest_level: Lad,
                measures: &[Flow],
                population: "A8 workers excluding self-employed",
                captures_emigration: false,
                caveat: Some("records employer location, not residence; scheme closed April 2009"),
            },
            SourceId::HomeOfficeAsylum => &SourceMeta {
                finest_level: Lad,
                measures: &[Flow],
                population: "asylum seekers",
                captures_emigration: false,
                caveat: None,
            },
        }
    }
}

impl fmt::Display for SourceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.key())
    }
}

impl FromStr for SourceId {
    type Err = UnknownSource;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let wanted = s.trim().to_ascii_uppercase();
        SourceId::ALL
            .iter()
            .find(|id| id.key() == wanted)
            .copied()
            .ok_or_else(|| UnknownSource(s.to_string()))
    }
}
