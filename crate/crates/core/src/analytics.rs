//! Comparative analytics: immigration rates per thousand population,
//! cross-source rate ratios, baseline-vs-alternative difference tables,
//! gainer/loser rankings, and trend tables for plotting.
//!
//! Everything here is a pure function over frozen inputs and keeps values
//! unrounded; callers apply display rounding when printing.

use std::collections::{BTreeMap, BTreeSet};
use std::ops::RangeInclusive;

use serde::Serialize;
use thiserror::Error;

use crate::databank::{Databank, DatabankError};
use crate::period::PeriodKind;
use crate::sources::SourceId;

/// Ordering rule applied by [`rank`], recorded in its output.
///
/// Gainers and losers are taken from the two ends of a single total order
/// (difference descending, ties by area code ascending), so an area can
/// appear on both sides only when `n` exceeds half the table.
pub const TIE_RULE: &str =
    "diff descending, ties by area code ascending; losers from the tail of the same order, presented diff ascending";

#[derive(Debug, Error)]
pub enum AnalyticsError {
    #[error("inputs cover different areas: only in first: [{}]; only in second: [{}]", left_only.join(", "), right_only.join(", "))]
    KeyMismatch {
        left_only: Vec<String>,
        right_only: Vec<String>,
    },
    #[error("population for `{0}` must be positive")]
    NonpositivePopulation(String),
    #[error("denominator rate for `{0}` is zero")]
    ZeroDenominatorRate(String),
    #[error("no (source, area) series requested")]
    EmptySpecs,
    #[error(transparent)]
    Databank(#[from] DatabankError),
}

fn check_same_keys<A, B>(
    left: &BTreeMap<String, A>,
    right: &BTreeMap<String, B>,
) -> Result<(), AnalyticsError> {
    if left.len() == right.len() && left.keys().eq(right.keys()) {
        return Ok(());
    }
    let left_keys: BTreeSet<&String> = left.keys().collect();
    let right_keys: BTreeSet<&String> = right.keys().collect();
    Err(AnalyticsError::KeyMismatch {
        left_only: left_keys
            .difference(&right_keys)
            .map(|k| (*k).clone())
            .collect(),
        right_only: right_keys
            .difference(&left_keys)
            .map(|k| (*k).clone())
            .collect(),
    })
}

/// One row of a rate table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateRow {
    pub area: String,
    pub population: f64,
    pub flow: f64,
    /// Migrants per 1000 population: `flow / population * 1000`.
    pub rate: f64,
}

/// Per-area immigration rates, stored in area order, sortable by rate.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateTable {
    rows: Vec<RateRow>,
}

impl RateTable {
    pub fn rows(&self) -> &[RateRow] {
        &self.rows
    }

    pub fn rate_of(&self, area: &str) -> Option<f64> {
        self.rows.iter().find(|r| r.area == area).map(|r| r.rate)
    }

    /// Rows sorted by rate descending, ties by area code ascending.
    pub fn sorted_by_rate(&self) -> Vec<&RateRow> {
        let mut rows: Vec<&RateRow> = self.rows.iter().collect();
        rows.sort_by(|a, b| {
            b.rate
                .partial_cmp(&a.rate)
                .expect("rates are finite")
                .then_with(|| a.area.cmp(&b.area))
        });
        rows
    }
}

/// Computes per-area rates per 1000 population.
pub fn rates(
    flows: &BTreeMap<String, f64>,
    populations: &BTreeMap<String, f64>,
) -> Result<RateTable, AnalyticsError> {
    check_same_keys(flows, populations)?;
    let mut rows = Vec::with_capacity(flows.len());
    for (area, flow) in flows {
        let population = populations[area];
        if population <= 0.0 || population.is_nan() {
            return Err(AnalyticsError::NonpositivePopulation(area.clone()));
        }
        rows.push(RateRow {
            area: area.clone(),
            population,
            flow: *flow,
            rate: flow / population * 1000.0,
        });
    }
    Ok(RateTable { rows })
}

/// Per-area percentage ratio of two rate tables: `100 * a.rate / b.rate`.
pub fn rate_ratio(
    a: &RateTable,
    b: &RateTable,
) -> Result<BTreeMap<String, f64>, AnalyticsError> {
    let a_map: BTreeMap<String, f64> = a.rows.iter().map(|r| (r.area.clone(), r.rate)).collect();
    let b_map: BTreeMap<String, f64> = b.rows.iter().map(|r| (r.area.clone(), r.rate)).collect();
    check_same_keys(&a_map, &b_map)?;
    let mut out = BTreeMap::new();
    for (area, a_rate) in &a_map {
        let b_rate = b_map[area];
        if b_rate == 0.0 {
            return Err(AnalyticsError::ZeroDenominatorRate(area.clone()));
        }
        out.insert(area.clone(), 100.0 * a_rate / b_rate);
    }
    Ok(out)
}

/// One row of a baseline-vs-alternative comparison.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompareRow {
    pub area: String,
    pub baseline: f64,
    pub alternative: f64,
    /// `alternative - baseline`.
    pub diff: f64,
    /// `100 * diff / baseline`, undefined when the baseline is not positive.
    pub pct: Option<f64>,
}

/// Difference table over a common area set, stored in area order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComparisonTable {
    rows: Vec<CompareRow>,
}

impl ComparisonTable {
    pub fn rows(&self) -> &[CompareRow] {
        &self.rows
    }

    pub fn row(&self, area: &str) -> Option<&CompareRow> {
        self.rows.iter().find(|r| r.area == area)
    }
}

/// Builds the per-area difference table. Percentages are taken against the
/// baseline; rows with a zero baseline carry an undefined flag instead of a
/// number.
pub fn compare(
    baseline: &BTreeMap<String, f64>,
    alternative: &BTreeMap<String, f64>,
) -> Result<ComparisonTable, AnalyticsError> {
    check_same_keys(baseline, alternative)?;
    let rows = baseline
        .iter()
        .map(|(area, base)| {
            let alt = alternative[area];
            let diff = alt - base;
            let pct = if *base > 0.0 {
                Some(100.0 * diff / base)
            } else {
                None
            };
            CompareRow {
                area: area.clone(),
                baseline: *base,
                alternative: alt,
                diff,
                pct,
            }
        })
        .collect();
    Ok(ComparisonTable { rows })
}

/// Top gainers and losers of a comparison table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RankList {
    pub gainers: Vec<CompareRow>,
    pub losers: Vec<CompareRow>,
    pub tie_rule: &'static str,
}

/// Ranks a comparison table: the `n` largest differences (gainers, diff
/// descending) and the `n` smallest (losers, diff ascending). `n` larger
/// than the table truncates.
pub fn rank(table: &ComparisonTable, n: usize) -> RankList {
    let mut ordered: Vec<&CompareRow> = table.rows.iter().collect();
    ordered.sort_by(|a, b| {
        b.diff
            .partial_cmp(&a.diff)
            .expect("diffs are finite")
            .then_with(|| a.area.cmp(&b.area))
    });

    let take = n.min(ordered.len());
    let gainers: Vec<CompareRow> = ordered[..take].iter().map(|r| (*r).clone()).collect();
    let mut losers: Vec<CompareRow> = ordered[ordered.len() - take..]
        .iter()
        .map(|r| (*r).clone())
        .collect();
    losers.sort_by(|a, b| {
        a.diff
            .partial_cmp(&b.diff)
            .expect("diffs are finite")
            .then_with(|| a.area.cmp(&b.area))
    });
    RankList {
        gainers,
        losers,
        tie_rule: TIE_RULE,
    }
}

/// One series of a trend table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrendColumn {
    pub source: SourceId,
    pub area: String,
    /// Period kind of the stored series, absent when the source holds no
    /// data at all.
    pub kind: Option<PeriodKind>,
    /// One value per year of the table's range; `None` marks missing years.
    pub values: Vec<Option<f64>>,
}

impl TrendColumn {
    /// Column label carrying the period kind, e.g.
    /// `GP_REG ENGLAND (calendar years)`.
    pub fn label(&self) -> String {
        match self.kind {
            Some(kind) => format!("{} {} ({})", self.source, self.area, kind.label()),
            None => format!("{} {} (no data)", self.source, self.area),
        }
    }
}

/// Year-by-series table backing the trend plots.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrendTable {
    pub years: Vec<i32>,
    pub columns: Vec<TrendColumn>,
}

/// Extracts one column per (source, area) pair over a year range. Missing
/// years stay missing — no interpolation.
pub fn trend_table(
    db: &Databank,
    specs: &[(SourceId, String)],
    years: RangeInclusive<i32>,
) -> Result<TrendTable, AnalyticsError> {
    if specs.is_empty() {
        return Err(AnalyticsError::EmptySpecs);
    }
    let year_list: Vec<i32> = years.clone().collect();
    let mut columns = Vec::with_capacity(specs.len());
    for (source, area) in specs {
        let series = db.series(*source, area, years.clone())?;
        columns.push(TrendColumn {
            source: *source,
            area: area.clone(),
            kind: db.period_kind(*source),
            values: series.into_iter().map(|(_, value)| value).collect(),
        });
    }
    Ok(TrendTable {
        years: year_list,
        columns,
    })
}
