//! The harmonized databank: per-source flow observations keyed by
//! (source, area, period), validated against the geography hierarchy.
//!
//! A databank is mutable while a single writer ingests rows, then treated
//! as frozen: every query (`aggregate`, `series`, `observation`) is a pure
//! function over `&self`.
//!
//! Aggregation semantics: an observation stored at some level contributes
//! to totals at its own level and every coarser level, rolled up through
//! its parents. It never contributes to finer levels — a region-level count
//! says nothing about how its districts split. Consequently the
//! `LAD = GOR = COUNTRY` totals identity holds exactly for databanks whose
//! observations are stored at LAD level, the harmonization target.

use std::collections::{BTreeMap, BTreeSet};
use std::ops::RangeInclusive;

use serde::Serialize;
use thiserror::Error;

use crate::geography::{GeoLevel, GeographyError, GeographyHierarchy};
use crate::period::{ObservationPeriod, PeriodKind};
use crate::sources::SourceId;

#[derive(Debug, Error)]
pub enum DatabankError {
    #[error("row {row}: negative count {count}")]
    NegativeCount { row: usize, count: f64 },
    #[error("source {source_id} uses {expected} periods but row {row} carries a {found} period")]
    PeriodKindMismatch {
        source_id: SourceId,
        expected: PeriodKind,
        found: PeriodKind,
        row: usize,
    },
    #[error("no observation matches the requested source and periods")]
    EmptySelection,
    #[error("requested periods mix calendar-year and mid-year kinds")]
    MixedPeriodKinds,
    #[error("unknown area `{0}`")]
    UnknownArea(String),
    #[error(transparent)]
    Geography(#[from] GeographyError),
}

/// One parsed input row for ingestion.
#[derive(Clone, Debug, PartialEq)]
pub struct IngestRow {
    pub area_code: String,
    pub period: ObservationPeriod,
    pub count: f64,
}

impl IngestRow {
    pub fn new(area_code: &str, period: ObservationPeriod, count: f64) -> Self {
        IngestRow {
            area_code: area_code.to_string(),
            period,
            count,
        }
    }
}

/// How to treat a row whose (source, area, period) key is already stored.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum DuplicatePolicy {
    /// Keep the stored value, warn about the new row.
    #[default]
    KeepFirst,
    /// Overwrite the stored value, warn about the replacement.
    Replace,
}

/// Reason a row was skipped (or, for duplicates, how it was resolved).
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum IngestWarning {
    /// The area code is not in the hierarchy; the row was skipped.
    UnknownArea { row: usize, code: String },
    /// The row sits below the source's published resolution; skipped.
    BelowSourceResolution { row: usize, code: String },
    /// A duplicate key whose first-seen value was kept.
    DuplicateKept { row: usize, code: String, period: ObservationPeriod },
    /// A duplicate key whose value was overwritten under `Replace`.
    DuplicateReplaced { row: usize, code: String, period: ObservationPeriod },
}

/// Outcome of one ingestion call.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IngestReport {
    pub source: SourceId,
    pub accepted: usize,
    pub warnings: Vec<IngestWarning>,
}

/// Result of an aggregation: one value per area at the requested level.
/// Areas with no contributing observation carry 0 and are listed in
/// `uncovered` so coverage gaps stay visible.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Aggregate {
    pub level: GeoLevel,
    pub values: BTreeMap<String, f64>,
    pub uncovered: Vec<String>,
}

impl Aggregate {
    pub fn total(&self) -> f64 {
        self.values.values().sum()
    }
}

type ObsKey = (SourceId, String, ObservationPeriod);

/// Harmonized store of flow observations over one geography hierarchy.
#[derive(Clone, Debug, PartialEq)]
pub struct Databank {
    hierarchy: GeographyHierarchy,
    observations: BTreeMap<ObsKey, f64>,
    period_kinds: BTreeMap<SourceId, PeriodKind>,
}

impl Databank {
    pub fn new(hierarchy: GeographyHierarchy) -> Self {
        Databank {
            hierarchy,
            observations: BTreeMap::new(),
            period_kinds: BTreeMap::new(),
        }
    }

    pub fn hierarchy(&self) -> &GeographyHierarchy {
        &self.hierarchy
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn observation_count(&self) -> usize {
        self.observations.len()
    }

    /// The period kind a source was ingested with, if any data exists.
    pub fn period_kind(&self, source: SourceId) -> Option<PeriodKind> {
        self.period_kinds.get(&source).copied()
    }

    /// Sources with at least one stored observation, sorted.
    pub fn sources(&self) -> Vec<SourceId> {
        self.period_kinds.keys().copied().collect()
    }

    pub fn observation(
        &self,
        source: SourceId,
        area_code: &str,
        period: ObservationPeriod,
    ) -> Option<f64> {
        self.observations
            .get(&(source, area_code.to_string(), period))
            .copied()
    }

    /// All stored observations of one source, sorted by (area, period).
    pub fn observations_for(
        &self,
        source: SourceId,
    ) -> impl Iterator<Item = (&str, ObservationPeriod, f64)> {
        self.observations
            .iter()
            .filter(move |((s, _, _), _)| *s == source)
            .map(|((_, code, period), count)| (code.as_str(), *period, *count))
    }

    /// Ingests rows under the default keep-first duplicate policy.
    pub fn ingest(
        &mut self,
        source: SourceId,
        rows: &[IngestRow],
    ) -> Result<IngestReport, DatabankError> {
        self.ingest_with_policy(source, rows, DuplicatePolicy::KeepFirst)
    }

    /// Ingests rows. Fatal problems (negative counts, period-kind mixing)
    /// fail the whole call before anything is stored; per-row geography
    /// problems are collected as warnings and the row skipped.
    pub fn ingest_with_policy(
        &mut self,
        source: SourceId,
        rows: &[IngestRow],
        policy: DuplicatePolicy,
    ) -> Result<IngestReport, DatabankError> {
        // Fatal checks first so a failed ingest leaves the bank untouched.
        let mut kind = self.period_kinds.get(&source).copied();
        for (idx, row) in rows.iter().enumerate() {
            if row.count < 0.0 || row.count.is_nan() {
                return Err(DatabankError::NegativeCount {
                    row: idx,
                    count: row.count,
                });
            }
            match kind {
                None => kind = Some(row.period.kind()),
                Some(expected) if expected != row.period.kind() => {
                    return Err(DatabankError::PeriodKindMismatch {
                        source_id: source,
                        expected,
                        found: row.period.kind(),
                        row: idx,
                    });
                }
                Some(_) => {}
            }
        }

        let finest = source.meta().finest_level;
        let mut accepted = 0usize;
        let mut warnings = Vec::new();
        for (idx, row) in rows.iter().enumerate() {
            let area = match self.hierarchy.resolve(&row.area_code) {
                Ok(area) => area,
                Err(_) => {
                    warnings.push(IngestWarning::UnknownArea {
                        row: idx,
                        code: row.area_code.clone(),
                    });
                    continue;
                }
            };
            if !area.level.is_at_or_above(finest) {
                warnings.push(IngestWarning::BelowSourceResolution {
                    row: idx,
                    code: row.area_code.clone(),
                });
                continue;
            }
            let key = (source, area.code.clone(), row.period);
            if self.observations.contains_key(&key) {
                match policy {
                    DuplicatePolicy::KeepFirst => {
                        warnings.push(IngestWarning::DuplicateKept {
                            row: idx,
                            code: row.area_code.clone(),
                            period: row.period,
                        });
                    }
                    DuplicatePolicy::Replace => {
                        self.observations.insert(key, row.count);
                        warnings.push(IngestWarning::DuplicateReplaced {
                            row: idx,
                            code: row.area_code.clone(),
                            period: row.period,
                        });
                        accepted += 1;
                    }
                }
                continue;
            }
            self.observations.insert(key, row.count);
            accepted += 1;
        }

        if accepted > 0 {
            if let Some(kind) = kind {
                self.period_kinds.entry(source).or_insert(kind);
            }
        }

        Ok(IngestReport {
            source,
            accepted,
            warnings,
        })
    }

    /// Sums a source over a period set at the requested level.
    ///
    /// Every area at `level` appears in the result; those with no
    /// contributing observation carry 0 and are listed as uncovered.
    pub fn aggregate(
        &self,
        source: SourceId,
        periods: &BTreeSet<ObservationPeriod>,
        level: GeoLevel,
    ) -> Result<Aggregate, DatabankError> {
        if periods.is_empty() {
            return Err(DatabankError::EmptySelection);
        }
        let kinds: BTreeSet<PeriodKind> = periods.iter().map(|p| p.kind()).collect();
        if kinds.len() > 1 {
            return Err(DatabankError::MixedPeriodKinds);
        }

        let mut values: BTreeMap<String, f64> = self
            .hierarchy
            .codes_at(level)
            .into_iter()
            .map(|code| (code.to_string(), 0.0))
            .collect();
        let mut covered: BTreeSet<String> = BTreeSet::new();
        let mut matched = false;

        for (code, period, count) in self.observations_for(source) {
            if !periods.contains(&period) {
                continue;
            }
            matched = true;
            if let Some(ancestor) = self.hierarchy.ancestor_at(code, level)? {
                *values.get_mut(&ancestor.code).expect("target present") += count;
                covered.insert(ancestor.code.clone());
            }
        }

        if !matched {
            return Err(DatabankError::EmptySelection);
        }
        let uncovered = values
            .keys()
            .filter(|code| !covered.contains(*code))
            .cloned()
            .collect();
        Ok(Aggregate {
            level,
            values,
            uncovered,
        })
    }

    /// The stored per-year series of one source at one area: one entry per
    /// year in the range, `None` where no observation is stored. Values are
    /// read directly at the area's own level — never rolled up or
    /// interpolated.
    pub fn series(
        &self,
        source: SourceId,
        area_code: &str,
        years: RangeInclusive<i32>,
    ) -> Result<Vec<(ObservationPeriod, Option<f64>)>, DatabankError> {
        let area = self
            .hierarchy
            .resolve(area_code)
            .map_err(|_| DatabankError::UnknownArea(area_code.to_string()))?;
        let kind = self
            .period_kind(source)
            .unwrap_or(PeriodKind::CalendarYear);
        let mut out = Vec::new();
        for year in years {
            let period = ObservationPeriod::new(kind, year)
                .map_err(|_| DatabankError::EmptySelection)?;
            out.push((period, self.observation(source, &area.code, period)));
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geography::LookupRow;

    fn two_region_bank() -> Databank {
        let rows = vec![
            LookupRow::new("X1", "Xton", "Z1", "R1"),
            LookupRow::new("X2", "Xby", "Z1", "R1"),
            LookupRow::new("Y1", "Yton", "Z2", "R2"),
        ];
        Databank::new(GeographyHierarchy::from_rows(&rows).unwrap())
    }

    fn cal(year: i32) -> ObservationPeriod {
        ObservationPeriod::calendar(year).unwrap()
    }

    #[test]
    fn ingests_country_level_totals() {
        let mut db = two_region_bank();
        let report = db
            .ingest(
                SourceId::GpReg,
                &[IngestRow::new("ENGLAND", cal(2001), 389_000.0)],
            )
            .unwrap();
        assert_eq!(report.accepted, 1);
        assert!(report.warnings.is_empty());
        assert_eq!(
            db.observation(SourceId::GpReg, "ENGLAND", cal(2001)),
            Some(389_000.0)
        );
    }

    #[test]
    fn ingests_mid_year_registrations() {
        let mut db = two_region_bank();
        let period = ObservationPeriod::mid_year(2007).unwrap();
        let report = db
            .ingest(
                SourceId::NinoAll,
                &[IngestRow::new("ENGLAND", period, 617_000.0)],
            )
            .unwrap();
        assert_eq!(report.accepted, 1);
        assert_eq!(db.period_kind(SourceId::NinoAll), Some(PeriodKind::MidYearInterval));
    }

    #[test]
    fn negative_count_is_fatal_and_stores_nothing() {
        let mut db = two_region_bank();
        let rows = vec![
            IngestRow::new("X1", cal(2006), 10.0),
            IngestRow::new("X1", cal(2006), -5.0),
        ];
        assert!(matches!(
            db.ingest(SourceId::GpReg, &rows),
            Err(DatabankError::NegativeCount { row: 1, .. })
        ));
        assert!(db.is_empty());
    }

    #[test]
    fn period_kind_mixing_is_fatal() {
        let mut db = two_region_bank();
        let rows = vec![
            IngestRow::new("X1", cal(2006), 10.0),
            IngestRow::new("X2", ObservationPeriod::mid_year(2006).unwrap(), 10.0),
        ];
        assert!(matches!(
            db.ingest(SourceId::GpReg, &rows),
            Err(DatabankError::PeriodKindMismatch { row: 1, .. })
        ));

        db.ingest(SourceId::GpReg, &[IngestRow::new("X1", cal(2006), 10.0)])
            .unwrap();
        assert!(matches!(
            db.ingest(
                SourceId::GpReg,
                &[IngestRow::new("X2", ObservationPeriod::mid_year(2006).unwrap(), 1.0)]
            ),
            Err(DatabankError::PeriodKindMismatch { .. })
        ));
    }

    #[test]
    fn unknown_area_is_a_warning_not_an_error() {
        let mut db = two_region_bank();
        let report = db
            .ingest(
                SourceId::GpReg,
                &[
                    IngestRow::new("X1", cal(2006), 10.0),
                    IngestRow::new("QQ", cal(2006), 10.0),
                ],
            )
            .unwrap();
        assert_eq!(report.accepted, 1);
        assert_eq!(
            report.warnings,
            vec![IngestWarning::UnknownArea {
                row: 1,
                code: "QQ".to_string()
            }]
        );
    }

    #[test]
    fn first_occurrence_wins_unless_replace() {
        let mut db = two_region_bank();
        let rows = vec![
            IngestRow::new("X1", cal(2006), 10.0),
            IngestRow::new("X1", cal(2006), 99.0),
        ];
        let report = db.ingest(SourceId::GpReg, &rows).unwrap();
        assert_eq!(report.accepted, 1);
        assert!(matches!(report.warnings[0], IngestWarning::DuplicateKept { row: 1, .. }));
        assert_eq!(db.observation(SourceId::GpReg, "X1", cal(2006)), Some(10.0));

        let report = db
            .ingest_with_policy(
                SourceId::GpReg,
                &[IngestRow::new("X1", cal(2006), 42.0)],
                DuplicatePolicy::Replace,
            )
            .unwrap();
        assert!(matches!(report.warnings[0], IngestWarning::DuplicateReplaced { .. }));
        assert_eq!(db.observation(SourceId::GpReg, "X1", cal(2006)), Some(42.0));
    }

    #[test]
    fn ingest_is_deterministic() {
        let rows = vec![
            IngestRow::new("X1", cal(2006), 10.0),
            IngestRow::new("X1", cal(2006), 11.0),
            IngestRow::new("QQ", cal(2006), 3.0),
        ];
        let mut a = two_region_bank();
        let mut b = two_region_bank();
        let ra = a.ingest(SourceId::GpReg, &rows).unwrap();
        let rb = b.ingest(SourceId::GpReg, &rows).unwrap();
        assert_eq!(ra, rb);
        assert_eq!(a, b);
    }

    #[test]
    fn aggregate_sums_years_and_rolls_up() {
        let mut db = two_region_bank();
        db.ingest(
            SourceId::GpReg,
            &[
                IngestRow::new("X1", cal(2005), 10.0),
                IngestRow::new("X1", cal(2006), 20.0),
            ],
        )
        .unwrap();
        let periods: BTreeSet<_> = [cal(2005), cal(2006)].into_iter().collect();
        let agg = db.aggregate(SourceId::GpReg, &periods, GeoLevel::Gor).unwrap();
        assert_eq!(agg.values["R1"], 30.0);
        assert_eq!(agg.values["R2"], 0.0);
        assert_eq!(agg.uncovered, vec!["R2".to_string()]);
        let country = db
            .aggregate(SourceId::GpReg, &periods, GeoLevel::Country)
            .unwrap();
        assert_eq!(country.values["ENGLAND"], 30.0);
    }

    #[test]
    fn aggregate_rejects_empty_and_mixed_selections() {
        let db = two_region_bank();
        let empty: BTreeSet<ObservationPeriod> = BTreeSet::new();
        assert!(matches!(
            db.aggregate(SourceId::GpReg, &empty, GeoLevel::Gor),
            Err(DatabankError::EmptySelection)
        ));
        let mixed: BTreeSet<_> = [cal(2006), ObservationPeriod::mid_year(2006).unwrap()]
            .into_iter()
            .collect();
        assert!(matches!(
            db.aggregate(SourceId::GpReg, &mixed, GeoLevel::Gor),
            Err(DatabankError::MixedPeriodKinds)
        ));
        let some: BTreeSet<_> = [cal(2006)].into_iter().collect();
        assert!(matches!(
            db.aggregate(SourceId::GpReg, &some, GeoLevel::Gor),
            Err(DatabankError::EmptySelection)
        ));
    }

    #[test]
    fn coarse_observations_do_not_leak_to_finer_levels() {
        let mut db = two_region_bank();
        db.ingest(SourceId::NinoAll, &[IngestRow::new("R1", ObservationPeriod::mid_year(2006).unwrap(), 100.0)])
            .unwrap();
        let periods: BTreeSet<_> = [ObservationPeriod::mid_year(2006).unwrap()].into_iter().collect();
        let gor = db.aggregate(SourceId::NinoAll, &periods, GeoLevel::Gor).unwrap();
        assert_eq!(gor.values["R1"], 100.0);
        let lad = db.aggregate(SourceId::NinoAll, &periods, GeoLevel::Lad).unwrap();
        assert!(lad.values.values().all(|v| *v == 0.0));
        assert_eq!(lad.uncovered.len(), 3);
    }

    #[test]
    fn series_reads_stored_values_without_interpolation() {
        let mut db = two_region_bank();
        db.ingest(
            SourceId::GpReg,
            &[
                IngestRow::new("ENGLAND", cal(2001), 389_000.0),
                IngestRow::new("ENGLAND", cal(2007), 581_000.0),
            ],
        )
        .unwrap();
        let series = db.series(SourceId::GpReg, "ENGLAND", 2001..=2007).unwrap();
        assert_eq!(series.len(), 7);
        assert_eq!(series[0], (cal(2001), Some(389_000.0)));
        assert_eq!(series[6], (cal(2007), Some(581_000.0)));
        assert!(series[1..6].iter().all(|(_, v)| v.is_none()));
    }

    #[test]
    fn series_on_empty_bank_is_all_missing() {
        let db = two_region_bank();
        let series = db.series(SourceId::TimOfficial, "X1", 2001..=2003).unwrap();
        assert!(series.iter().all(|(_, v)| v.is_none()));
        assert!(matches!(
            db.series(SourceId::TimOfficial, "QQ", 2001..=2003),
            Err(DatabankError::UnknownArea(_))
        ));
    }
}
