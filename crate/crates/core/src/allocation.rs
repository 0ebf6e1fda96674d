//! The estimation engine: distributes a national immigration total down to
//! local authority districts using proportional distributions drawn from
//! administrative sources.
//!
//! Two models are provided. Model A allocates the national total directly
//! by each district's share of national GP registrations. Model B first
//! splits the total by reason for migration (study / work / other), spreads
//! each slice across regions using the distribution of a reason-appropriate
//! source (student records, worker registrations, GP registrations), then
//! distributes every regional subtotal to districts by GP-registration
//! shares. Student-record shares are used at regional level only — their
//! location is the institution, not the residence — so all sub-regional
//! distribution rides on GP shares.
//!
//! Estimates are real-valued throughout; display rounding happens at the
//! reporting boundary, never in here.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::databank::{Databank, DatabankError};
use crate::geography::{GeoLevel, GeographyHierarchy};
use crate::period::ObservationPeriod;
use crate::sources::SourceId;

/// Tolerance on share-group and profile sums.
pub const SHARE_SUM_TOLERANCE: f64 = 1e-12;
/// Relative tolerance on conservation of the national total.
pub const CONSERVATION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum AllocationError {
    #[error("reason counts sum to zero")]
    ZeroTotal,
    #[error("unknown migration reason label `{0}`")]
    UnknownReasonLabel(String),
    #[error("zero national total for {category} shares (source {src})", src = match source_id { Some(s) => s.key(), None => "unspecified" })]
    ZeroNationalTotal {
        category: ReasonCategory,
        source_id: Option<SourceId>,
    },
    #[error("region `{0}` has a zero GP-registration total and cannot receive a distribution")]
    ZeroRegionTotal(String),
    #[error("share structures cover different geographies: {0}")]
    GeographyMismatch(String),
    #[error("invalid shares: {0}")]
    InvalidShares(String),
    #[error("national total must be non-negative, got {0}")]
    NegativeTotal(f64),
    #[error(transparent)]
    Databank(#[from] DatabankError),
    #[error(transparent)]
    Geography(#[from] crate::geography::GeographyError),
}

/// Reason for migration, collapsed to the three allocation categories.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ReasonCategory {
    Study,
    Work,
    Other,
}

impl ReasonCategory {
    pub const ALL: [ReasonCategory; 3] =
        [ReasonCategory::Study, ReasonCategory::Work, ReasonCategory::Other];
}

impl fmt::Display for ReasonCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let label = match self {
            ReasonCategory::Study => "STUDY",
            ReasonCategory::Work => "WORK",
            ReasonCategory::Other => "OTHER",
        };
        write!(f, "{label}")
    }
}

impl FromStr for ReasonCategory {
    type Err = AllocationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "STUDY" => Ok(ReasonCategory::Study),
            "WORK" => Ok(ReasonCategory::Work),
            "OTHER" => Ok(ReasonCategory::Other),
            _ => Err(AllocationError::UnknownReasonLabel(s.to_string())),
        }
    }
}

/// Maps a raw reason label from the survey tables onto its category.
///
/// Work covers "definite job" and "looking for work"; other covers
/// "accompany/join", "other" and "not stated". Matching is
/// case-insensitive on the trimmed label.
pub fn reason_category_for_label(label: &str) -> Option<ReasonCategory> {
    match label.trim().to_ascii_lowercase().as_str() {
        "formal study" | "study" => Some(ReasonCategory::Study),
        "definite job" | "looking for work" => Some(ReasonCategory::Work),
        "accompany/join" | "accompany or join" | "other" | "not stated" => {
            Some(ReasonCategory::Other)
        }
        _ => None,
    }
}

/// National split of immigration by reason: non-negative proportions
/// summing to one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ReasonProfile {
    proportions: BTreeMap<ReasonCategory, f64>,
}

impl ReasonProfile {
    pub fn new(study: f64, work: f64, other: f64) -> Result<Self, AllocationError> {
        let proportions: BTreeMap<ReasonCategory, f64> = [
            (ReasonCategory::Study, study),
            (ReasonCategory::Work, work),
            (ReasonCategory::Other, other),
        ]
        .into_iter()
        .collect();
        if proportions.values().any(|p| *p < 0.0 || p.is_nan()) {
            return Err(AllocationError::InvalidShares(
                "reason proportions must be non-negative".to_string(),
            ));
        }
        let sum: f64 = proportions.values().sum();
        if (sum - 1.0).abs() > SHARE_SUM_TOLERANCE {
            return Err(AllocationError::InvalidShares(format!(
                "reason proportions sum to {sum}, expected 1"
            )));
        }
        Ok(ReasonProfile { proportions })
    }

    /// Builds the profile from raw reason-labelled counts.
    pub fn from_reason_counts(
        counts: &BTreeMap<String, f64>,
    ) -> Result<Self, AllocationError> {
        let mut by_category: BTreeMap<ReasonCategory, f64> =
            ReasonCategory::ALL.iter().map(|k| (*k, 0.0)).collect();
        for (label, count) in counts {
            if *count < 0.0 || count.is_nan() {
                return Err(AllocationError::InvalidShares(format!(
                    "negative count for reason `{label}`"
                )));
            }
            let category = reason_category_for_label(label)
                .ok_or_else(|| AllocationError::UnknownReasonLabel(label.clone()))?;
            *by_category.get_mut(&category).expect("category present") += count;
        }
        let total: f64 = by_category.values().sum();
        if total <= 0.0 {
            return Err(AllocationError::ZeroTotal);
        }
        ReasonProfile::new(
            by_category[&ReasonCategory::Study] / total,
            by_category[&ReasonCategory::Work] / total,
            by_category[&ReasonCategory::Other] / total,
        )
    }

    pub fn proportion(&self, category: ReasonCategory) -> f64 {
        self.proportions[&category]
    }
}

/// Per-reason regional distributions: for each category, each region's
/// share of that category's national source total.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegionalShares {
    shares: BTreeMap<ReasonCategory, BTreeMap<String, f64>>,
    source_map: BTreeMap<ReasonCategory, SourceId>,
    periods: BTreeMap<ReasonCategory, BTreeSet<ObservationPeriod>>,
}

/// Default source per category: student records for study, all worker
/// registrations for work, GP registrations for the remainder.
pub fn default_source_map() -> BTreeMap<ReasonCategory, SourceId> {
    [
        (ReasonCategory::Study, SourceId::HesaStudent),
        (ReasonCategory::Work, SourceId::NinoAll),
        (ReasonCategory::Other, SourceId::GpReg),
    ]
    .into_iter()
    .collect()
}

impl RegionalShares {
    /// Computes regional shares from databank aggregates: for each category
    /// the per-region aggregate of its source divided by that source's
    /// national aggregate over the same periods.
    pub fn compute(
        db: &Databank,
        source_map: &BTreeMap<ReasonCategory, SourceId>,
        periods: &BTreeMap<ReasonCategory, BTreeSet<ObservationPeriod>>,
    ) -> Result<Self, AllocationError> {
        let mut shares = BTreeMap::new();
        for category in ReasonCategory::ALL {
            let source = *source_map.get(&category).ok_or_else(|| {
                AllocationError::InvalidShares(format!("no source mapped for {category}"))
            })?;
            let period_set = periods.get(&category).ok_or_else(|| {
                AllocationError::InvalidShares(format!("no periods given for {category}"))
            })?;
            let aggregate = match db.aggregate(source, period_set, GeoLevel::Gor) {
                Ok(agg) => agg,
                Err(DatabankError::EmptySelection) => {
                    return Err(AllocationError::ZeroNationalTotal {
                        category,
                        source_id: Some(source),
                    })
                }
                Err(err) => return Err(err.into()),
            };
            let national = aggregate.total();
            if national <= 0.0 {
                return Err(AllocationError::ZeroNationalTotal {
                    category,
                    source_id: Some(source),
                });
            }
            let column: BTreeMap<String, f64> = aggregate
                .values
                .into_iter()
                .map(|(gor, count)| (gor, count / national))
                .collect();
            shares.insert(category, column);
        }
        let built = RegionalShares {
            shares,
            source_map: source_map.clone(),
            periods: periods.clone(),
        };
        built.validate()?;
        Ok(built)
    }

    /// Builds shares directly from given proportions (used by tests and
    /// hand-specified runs). Each column must sum to one.
    pub fn from_columns(
        shares: BTreeMap<ReasonCategory, BTreeMap<String, f64>>,
        source_map: BTreeMap<ReasonCategory, SourceId>,
        periods: BTreeMap<ReasonCategory, BTreeSet<ObservationPeriod>>,
    ) -> Result<Self, AllocationError> {
        let built = RegionalShares {
            shares,
            source_map,
            periods,
        };
        built.validate()?;
        Ok(built)
    }

    fn validate(&self) -> Result<(), AllocationError> {
        let mut regions: Option<BTreeSet<&String>> = None;
        for category in ReasonCategory::ALL {
            let column = self.shares.get(&category).ok_or_else(|| {
                AllocationError::InvalidShares(format!("missing share column for {category}"))
            })?;
            if column.values().any(|q| *q < 0.0 || q.is_nan()) {
                return Err(AllocationError::InvalidShares(format!(
                    "negative share in {category} column"
                )));
            }
            let sum: f64 = column.values().sum();
            if (sum - 1.0).abs() > SHARE_SUM_TOLERANCE {
                return Err(AllocationError::InvalidShares(format!(
                    "{category} regional shares sum to {sum}, expected 1"
                )));
            }
            let keys: BTreeSet<&String> = column.keys().collect();
            match &regions {
                None => regions = Some(keys),
                Some(existing) if *existing != keys => {
                    return Err(AllocationError::GeographyMismatch(
                        "share columns cover different region sets".to_string(),
                    ));
                }
                Some(_) => {}
            }
        }
        Ok(())
    }

    pub fn regions(&self) -> BTreeSet<&str> {
        self.shares[&ReasonCategory::Other]
            .keys()
            .map(String::as_str)
            .collect()
    }

    pub fn share(&self, category: ReasonCategory, gor_code: &str) -> f64 {
        self.shares[&category]
            .get(gor_code)
            .copied()
            .unwrap_or(0.0)
    }

    pub fn source_map(&self) -> &BTreeMap<ReasonCategory, SourceId> {
        &self.source_map
    }

    pub fn periods(&self) -> &BTreeMap<ReasonCategory, BTreeSet<ObservationPeriod>> {
        &self.periods
    }

    pub fn columns(&self) -> &BTreeMap<ReasonCategory, BTreeMap<String, f64>> {
        &self.shares
    }
}

/// GP-registration shares of each district within its region.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WithinRegionShares {
    /// region code → (district code → share); each group sums to one.
    groups: BTreeMap<String, BTreeMap<String, f64>>,
    source: SourceId,
    periods: BTreeSet<ObservationPeriod>,
}

impl WithinRegionShares {
    /// Computes each district's share of its region's GP registrations over
    /// the given periods. A region whose GP total is zero is fatal — there
    /// is no defensible way to split its subtotal.
    pub fn compute(
        db: &Databank,
        periods: &BTreeSet<ObservationPeriod>,
    ) -> Result<Self, AllocationError> {
        let source = SourceId::GpReg;
        let lad_counts = match db.aggregate(source, periods, GeoLevel::Lad) {
            Ok(agg) => agg,
            Err(DatabankError::EmptySelection) => {
                return Err(AllocationError::ZeroNationalTotal {
                    category: ReasonCategory::Other,
                    source_id: Some(source),
                })
            }
            Err(err) => return Err(err.into()),
        };
        let hierarchy = db.hierarchy();

        let mut group_counts: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
        for (lad, count) in &lad_counts.values {
            let gor = hierarchy.region_of(lad)?;
            group_counts
                .entry(gor.code.clone())
                .or_default()
                .insert(lad.clone(), *count);
        }

        let mut groups = BTreeMap::new();
        for (gor, counts) in group_counts {
            let total: f64 = counts.values().sum();
            if total <= 0.0 {
                return Err(AllocationError::ZeroRegionTotal(gor));
            }
            let shares: BTreeMap<String, f64> = counts
                .into_iter()
                .map(|(lad, count)| (lad, count / total))
                .collect();
            groups.insert(gor, shares);
        }

        let built = WithinRegionShares {
            groups,
            source,
            periods: periods.clone(),
        };
        built.validate()?;
        Ok(built)
    }

    /// Builds shares from explicit per-region groups.
    pub fn from_groups(
        groups: BTreeMap<String, BTreeMap<String, f64>>,
        periods: BTreeSet<ObservationPeriod>,
    ) -> Result<Self, AllocationError> {
        let built = WithinRegionShares {
            groups,
            source: SourceId::GpReg,
            periods,
        };
        built.validate()?;
        Ok(built)
    }

    fn validate(&self) -> Result<(), AllocationError> {
        for (gor, shares) in &self.groups {
            if shares.values().any(|s| *s < 0.0 || s.is_nan()) {
                return Err(AllocationError::InvalidShares(format!(
                    "negative share within region {gor}"
                )));
            }
            let sum: f64 = shares.values().sum();
            if (sum - 1.0).abs() > SHARE_SUM_TOLERANCE {
                return Err(AllocationError::InvalidShares(format!(
                    "within-region shares for {gor} sum to {sum}, expected 1"
                )));
            }
        }
        Ok(())
    }

    pub fn regions(&self) -> BTreeSet<&str> {
        self.groups.keys().map(String::as_str).collect()
    }

    pub fn groups(&self) -> &BTreeMap<String, BTreeMap<String, f64>> {
        &self.groups
    }

    pub fn source(&self) -> SourceId {
        self.source
    }

    pub fn periods(&self) -> &BTreeSet<ObservationPeriod> {
        &self.periods
    }
}

/// Allocation model selector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Model {
    A,
    B,
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Model::A => write!(f, "A"),
            Model::B => write!(f, "B"),
        }
    }
}

impl FromStr for Model {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "a" => Ok(Model::A),
            "b" => Ok(Model::B),
            other => Err(format!("unknown model `{other}`, expected `a` or `b`")),
        }
    }
}

/// Everything that went into an allocation, for auditable output.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Provenance {
    pub model: Model,
    pub national_total: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub profile: Option<ReasonProfile>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub source_map: Option<BTreeMap<ReasonCategory, SourceId>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub regional_periods: Option<BTreeMap<ReasonCategory, BTreeSet<ObservationPeriod>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub regional_shares: Option<BTreeMap<ReasonCategory, BTreeMap<String, f64>>>,
    pub within_source: SourceId,
    pub within_periods: BTreeSet<ObservationPeriod>,
    pub within_shares: BTreeMap<String, BTreeMap<String, f64>>,
}

/// Per-district estimates with conservation guaranteed at construction.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AllocationResult {
    national_total: f64,
    lad_estimates: BTreeMap<String, f64>,
    model: Model,
    provenance: Provenance,
}

/// Levels an [`AllocationResult`] can be rolled up to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RollupLevel {
    Nmgi,
    Gor,
}

impl AllocationResult {
    fn new(
        national_total: f64,
        lad_estimates: BTreeMap<String, f64>,
        model: Model,
        provenance: Provenance,
    ) -> Result<Self, AllocationError> {
        if lad_estimates.values().any(|v| *v < 0.0 || v.is_nan()) {
            return Err(AllocationError::InvalidShares(
                "allocation produced a negative estimate".to_string(),
            ));
        }
        let sum: f64 = lad_estimates.values().sum();
        let drift = (sum - national_total).abs();
        let bound = CONSERVATION_TOLERANCE * national_total.max(1.0);
        if drift > bound {
            return Err(AllocationError::InvalidShares(format!(
                "estimates sum to {sum}, national total is {national_total}"
            )));
        }
        Ok(AllocationResult {
            national_total,
            lad_estimates,
            model,
            provenance,
        })
    }

    pub fn national_total(&self) -> f64 {
        self.national_total
    }

    pub fn model(&self) -> Model {
        self.model
    }

    pub fn lad_estimates(&self) -> &BTreeMap<String, f64> {
        &self.lad_estimates
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// Rolls district estimates up to zone or region level.
    pub fn rollup(
        &self,
        hierarchy: &GeographyHierarchy,
        level: RollupLevel,
    ) -> Result<BTreeMap<String, f64>, AllocationError> {
        let mut out: BTreeMap<String, f64> = BTreeMap::new();
        for (lad, estimate) in &self.lad_estimates {
            let parent = match level {
                RollupLevel::Nmgi => hierarchy.zone_of(lad),
                RollupLevel::Gor => hierarchy.region_of(lad),
            }
            .map_err(|_| {
                AllocationError::GeographyMismatch(format!(
                    "district `{lad}` is not in the hierarchy"
                ))
            })?;
            *out.entry(parent.code.clone()).or_insert(0.0) += estimate;
        }
        Ok(out)
    }
}

/// Reason-split allocation: regional subtotals from the per-reason share
/// columns, then district estimates from within-region GP shares.
pub fn model_b(
    national_total: f64,
    profile: &ReasonProfile,
    regional: &RegionalShares,
    within: &WithinRegionShares,
) -> Result<AllocationResult, AllocationError> {
    if national_total < 0.0 || national_total.is_nan() {
        return Err(AllocationError::NegativeTotal(national_total));
    }
    let q_regions = regional.regions();
    let s_regions = within.regions();
    if q_regions != s_regions {
        let only_q: Vec<&str> = q_regions.difference(&s_regions).copied().collect();
        let only_s: Vec<&str> = s_regions.difference(&q_regions).copied().collect();
        return Err(AllocationError::GeographyMismatch(format!(
            "regions only in regional shares: [{}]; only in within-region shares: [{}]",
            only_q.join(", "),
            only_s.join(", ")
        )));
    }

    let mut lad_estimates = BTreeMap::new();
    for (gor, group) in within.groups() {
        let regional_subtotal: f64 = ReasonCategory::ALL
            .iter()
            .map(|k| national_total * profile.proportion(*k) * regional.share(*k, gor))
            .sum();
        for (lad, share) in group {
            lad_estimates.insert(lad.clone(), regional_subtotal * share);
        }
    }

    let provenance = Provenance {
        model: Model::B,
        national_total,
        profile: Some(profile.clone()),
        source_map: Some(regional.source_map().clone()),
        regional_periods: Some(regional.periods().clone()),
        regional_shares: Some(regional.columns().clone()),
        within_source: within.source(),
        within_periods: within.periods().clone(),
        within_shares: within.groups().clone(),
    };
    AllocationResult::new(national_total, lad_estimates, Model::B, provenance)
}

/// Direct allocation: each district receives the national total times its
/// share of national GP registrations.
pub fn model_a(
    national_total: f64,
    db: &Databank,
    periods: &BTreeSet<ObservationPeriod>,
) -> Result<AllocationResult, AllocationError> {
    if national_total < 0.0 || national_total.is_nan() {
        return Err(AllocationError::NegativeTotal(national_total));
    }
    let source = SourceId::GpReg;
    let lad_counts = match db.aggregate(source, periods, GeoLevel::Lad) {
        Ok(agg) => agg,
        Err(DatabankError::EmptySelection) => {
            return Err(AllocationError::ZeroNationalTotal {
                category: ReasonCategory::Other,
                source_id: Some(source),
            })
        }
        Err(err) => return Err(err.into()),
    };
    let total: f64 = lad_counts.total();
    if total <= 0.0 {
        return Err(AllocationError::ZeroNationalTotal {
            category: ReasonCategory::Other,
            source_id: Some(source),
        });
    }

    let mut lad_estimates = BTreeMap::new();
    let mut within_shares: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
    let hierarchy = db.hierarchy();
    for (lad, count) in &lad_counts.values {
        lad_estimates.insert(lad.clone(), national_total * count / total);
        let gor = hierarchy.region_of(lad)?;
        within_shares
            .entry(gor.code.clone())
            .or_default()
            .insert(lad.clone(), count / total);
    }

    let provenance = Provenance {
        model: Model::A,
        national_total,
        profile: None,
        source_map: None,
        regional_periods: None,
        regional_shares: None,
        within_source: source,
        within_periods: periods.clone(),
        within_shares,
    };
    AllocationResult::new(national_total, lad_estimates, Model::A, provenance)
}
