//! Core library for harmonizing multi-source migration counts into a
//! geographically hierarchical databank and estimating local-area
//! immigration by proportional allocation of a national total.
//!
//! The crate is organised around the flow of a batch run:
//!
//! 1. [`geography`] defines and validates the LAD → NMGI → GOR → country
//!    hierarchy that every count is keyed to.
//! 2. [`databank`] ingests, validates and aggregates per-source flow
//!    observations (see [`sources`] for the source catalog and [`period`]
//!    for calendar-year vs mid-year-interval handling).
//! 3. [`allocation`] computes reason profiles and share structures and runs
//!    the two allocation models (direct GP-share allocation, and the
//!    three-source reason-split allocation).
//! 4. [`analytics`] produces rate, ratio, difference, ranking and trend
//!    tables from databank contents and allocation results.
//! 5. [`synth`] generates seeded synthetic datasets and provides the
//!    brute-force allocation oracle used by the property suites.
//! 6. [`store`] persists a databank as a self-describing archive.
//!
//! All query and estimation operations are pure functions over frozen
//! inputs; every container is ordered so identical inputs produce
//! byte-identical serialized outputs.

pub mod allocation;
pub mod analytics;
pub mod databank;
pub mod display;
pub mod geography;
pub mod period;
pub mod sources;
pub mod store;
pub mod synth;

pub use allocation::{
    model_a, model_b, AllocationError, AllocationResult, Model, ReasonCategory, ReasonProfile,
    RegionalShares, RollupLevel, WithinRegionShares,
};
pub use analytics::{
    compare, rank, rate_ratio, rates, trend_table, AnalyticsError, CompareRow, ComparisonTable,
    RankList, RateTable, TrendTable,
};
pub use databank::{Databank, DatabankError, DuplicatePolicy, IngestReport, IngestRow};
pub use geography::{AreaCode, GeoLevel, GeographyError, GeographyHierarchy, LookupRow};
pub use period::{ObservationPeriod, PeriodError, PeriodKind};
pub use sources::{Measure, SourceId, SourceMeta};
pub use synth::{oracle_model_b, OracleInputs, SynthError, SynthOutput, SynthSpec};
