//! Seeded synthetic geographies and databanks with known ground truth, and
//! the brute-force allocation oracle the property suites check the engine
//! against.
//!
//! Generation algorithm (v1, frozen): a ChaCha8 stream keyed by the spec
//! seed, consumed in a fixed documented order — zone counts per region,
//! then per-source district counts in catalog order, then reason counts.
//! Identical specs therefore produce byte-identical datasets on every
//! platform.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::allocation::{AllocationError, ReasonCategory, ReasonProfile};
use crate::databank::{Databank, IngestRow};
use crate::geography::{GeographyHierarchy, LookupRow};
use crate::period::ObservationPeriod;
use crate::sources::SourceId;

pub const MAX_REGIONS: u32 = 10;
pub const MAX_LADS_PER_REGION: u32 = 20;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Allocation(#[from] AllocationError),
}

/// Parameters of one synthetic dataset.
#[derive(Clone, Debug, PartialEq)]
pub struct SynthSpec {
    pub seed: u64,
    pub n_regions: u32,
    pub lads_per_region: u32,
    pub count_range: (f64, f64),
    /// Probability that any generated district count is zero.
    pub zero_fraction: f64,
}

impl SynthSpec {
    pub fn new(seed: u64, n_regions: u32, lads_per_region: u32) -> Self {
        SynthSpec {
            seed,
            n_regions,
            lads_per_region,
            count_range: (0.0, 10_000.0),
            zero_fraction: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        if !(1..=MAX_REGIONS).contains(&self.n_regions) {
            return Err(SynthError::InvalidSpec(format!(
                "n_regions {} outside 1..={MAX_REGIONS}",
                self.n_regions
            )));
        }
        if !(1..=MAX_LADS_PER_REGION).contains(&self.lads_per_region) {
            return Err(SynthError::InvalidSpec(format!(
                "lads_per_region {} outside 1..={MAX_LADS_PER_REGION}",
                self.lads_per_region
            )));
        }
        let (lo, hi) = self.count_range;
        if !(lo.is_finite() && hi.is_finite()) || lo < 0.0 || lo > hi {
            return Err(SynthError::InvalidSpec(format!(
                "count_range ({lo}, {hi}) must satisfy 0 <= min <= max"
            )));
        }
        if !(0.0..1.0).contains(&self.zero_fraction) {
            return Err(SynthError::InvalidSpec(format!(
                "zero_fraction {} outside [0, 1)",
                self.zero_fraction
            )));
        }
        Ok(())
    }
}

/// Raw generated counts and totals, kept for oracle checks.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruth {
    /// Per-source total district counts (summed over the source's periods).
    pub lad_counts: BTreeMap<SourceId, BTreeMap<String, f64>>,
    pub national_totals: BTreeMap<SourceId, f64>,
    pub periods: BTreeMap<SourceId, BTreeSet<ObservationPeriod>>,
    pub reason_counts: BTreeMap<String, f64>,
}

#[derive(Clone, Debug)]
pub struct SynthOutput {
    pub hierarchy: GeographyHierarchy,
    pub databank: Databank,
    pub truth: GroundTruth,
}

/// Sources the generator populates, in draw order.
pub const SYNTH_SOURCES: [SourceId; 4] = [
    SourceId::GpReg,
    SourceId::NinoAll,
    SourceId::HesaStudent,
    SourceId::TimOfficial,
];

const REASON_LABELS: [&str; 6] = [
    "formal study",
    "definite job",
    "looking for work",
    "accompany/join",
    "other",
    "not stated",
];

fn synth_periods(source: SourceId) -> BTreeSet<ObservationPeriod> {
    match source {
        // Student records arrive as a three-year aggregate.
        SourceId::HesaStudent => (2005..=2007)
            .map(|y| ObservationPeriod::calendar(y).expect("year in range"))
            .collect(),
        SourceId::GpReg => [ObservationPeriod::calendar(2006).expect("year in range")]
            .into_iter()
            .collect(),
        _ => [ObservationPeriod::mid_year(2006).expect("year in range")]
            .into_iter()
            .collect(),
    }
}

/// Generates a validated hierarchy and databank. Deterministic per spec.
pub fn generate(spec: &SynthSpec) -> Result<SynthOutput, SynthError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    // Geography: regions G01.., zones N<g><z>, districts L<g><i>.
    let mut rows = Vec::new();
    for g in 1..=spec.n_regions {
        let gor = format!("G{g:02}");
        let max_zones = spec.lads_per_region.min(3);
        let n_zones = rng.gen_range(1..=max_zones);
        for i in 1..=spec.lads_per_region {
            let zone = 1 + (i - 1) % n_zones;
            let lad = format!("L{g:02}{i:02}");
            rows.push(LookupRow::new(
                &lad,
                &format!("District {lad}"),
                &format!("N{g:02}{zone:02}"),
                &gor,
            ));
        }
    }
    let hierarchy = GeographyHierarchy::from_rows(&rows)
        .expect("generated layout is a valid partition");

    let mut databank = Databank::new(hierarchy.clone());
    let mut lad_counts: BTreeMap<SourceId, BTreeMap<String, f64>> = BTreeMap::new();
    let mut national_totals = BTreeMap::new();
    let mut periods = BTreeMap::new();

    let (lo, hi) = spec.count_range;
    let lad_codes: Vec<String> = hierarchy.lads().map(|l| l.code.clone()).collect();
    for source in SYNTH_SOURCES {
        let source_periods = synth_periods(source);
        let mut ingest_rows = Vec::new();
        let mut totals: BTreeMap<String, f64> = BTreeMap::new();
        for lad in &lad_codes {
            for period in &source_periods {
                let zeroed = spec.zero_fraction > 0.0 && rng.gen::<f64>() < spec.zero_fraction;
                let count = if zeroed {
                    0.0
                } else if lo == hi {
                    lo
                } else {
                    rng.gen_range(lo..hi)
                };
                ingest_rows.push(IngestRow::new(lad, *period, count));
                *totals.entry(lad.clone()).or_insert(0.0) += count;
            }
        }
        let report = databank
            .ingest(source, &ingest_rows)
            .expect("generated rows are valid");
        debug_assert_eq!(report.accepted, ingest_rows.len());
        national_totals.insert(source, totals.values().sum::<f64>());
        lad_counts.insert(source, totals);
        periods.insert(source, source_periods);
    }

    let reason_counts: BTreeMap<String, f64> = REASON_LABELS
        .iter()
        .map(|label| (label.to_string(), rng.gen_range(1.0..1000.0)))
        .collect();

    Ok(SynthOutput {
        hierarchy,
        databank,
        truth: GroundTruth {
            lad_counts,
            national_totals,
            periods,
            reason_counts,
        },
    })
}

/// Inputs to the brute-force oracle: raw district counts only, no
/// precomputed share structures.
#[derive(Clone, Debug)]
pub struct OracleInputs<'a> {
    pub national_total: f64,
    pub profile: &'a ReasonProfile,
    pub hierarchy: &'a GeographyHierarchy,
    /// Raw district counts of the source backing each reason category.
    pub category_counts: &'a BTreeMap<ReasonCategory, BTreeMap<String, f64>>,
    /// Raw GP district counts for the within-region stage.
    pub gp_counts: &'a BTreeMap<String, f64>,
}

/// Term-by-term expansion of the reason-split allocation, recomputing every
/// share from raw counts on each use. Kept deliberately independent of the
/// engine: no share structure is built or reused.
pub fn oracle_model_b(
    inputs: &OracleInputs<'_>,
) -> Result<BTreeMap<String, f64>, AllocationError> {
    let OracleInputs {
        national_total,
        profile,
        hierarchy,
        category_counts,
        gp_counts,
    } = inputs;

    if *national_total < 0.0 || national_total.is_nan() {
        return Err(AllocationError::NegativeTotal(*national_total));
    }

    // Preconditions, in the same order the engine discovers them: national
    // totals per category first, then per-region GP totals.
    for category in ReasonCategory::ALL {
        let counts = category_counts.get(&category).ok_or_else(|| {
            AllocationError::InvalidShares(format!("no counts for {category}"))
        })?;
        let national: f64 = counts.values().sum();
        if national <= 0.0 {
            return Err(AllocationError::ZeroNationalTotal {
                category,
                source_id: None,
            });
        }
    }
    for gor in hierarchy.gors() {
        let mut region_total = 0.0;
        for lad in hierarchy.lads_in_region(&gor.code)? {
            region_total += gp_counts.get(&lad.code).copied().unwrap_or(0.0);
        }
        if region_total <= 0.0 {
            return Err(AllocationError::ZeroRegionTotal(gor.code.clone()));
        }
    }

    let mut estimates = BTreeMap::new();
    for lad in hierarchy.lads() {
        let gor = hierarchy.region_of(&lad.code)?;
        let mut estimate = 0.0;
        for category in ReasonCategory::ALL {
            let counts = &category_counts[&category];
            let national: f64 = counts.values().sum();
            let mut regional = 0.0;
            for member in hierarchy.lads_in_region(&gor.code)? {
                regional += counts.get(&member.code).copied().unwrap_or(0.0);
            }
            let mut gp_region = 0.0;
            for member in hierarchy.lads_in_region(&gor.code)? {
                gp_region += gp_counts.get(&member.code).copied().unwrap_or(0.0);
            }
            let gp_here = gp_counts.get(&lad.code).copied().unwrap_or(0.0);
            estimate += national_total
                * profile.proportion(category)
                * (regional / national)
                * (gp_here / gp_region);
        }
        estimates.insert(lad.code.clone(), estimate);
    }
    Ok(estimates)
}
