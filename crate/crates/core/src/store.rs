//! Databank persistence: a self-describing directory archive holding a JSON
//! manifest, the geography lookup, and one plain CSV per source.
//!
//! Nothing in the archive is opaque — every file is independently readable
//! and re-loadable through the normal ingestion path. Saving the same bank
//! twice produces byte-identical files.

use std::collections::BTreeSet;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::databank::{Databank, DatabankError, IngestRow};
use crate::display::fmt_raw;
use crate::geography::{self, GeographyError, GeographyHierarchy};
use crate::period::{ObservationPeriod, PeriodKind};
use crate::sources::SourceId;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const HIERARCHY_FILE: &str = "hierarchy.csv";
pub const SOURCE_DIR: &str = "sources";
pub const FORMAT_VERSION: u32 = 1;

/// Header of per-source observation CSV files.
pub const SOURCE_HEADER: [&str; 3] = ["area_code", "period", "count"];

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("archive problem in `{path}`: {message}")]
    Format { path: PathBuf, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Geography(#[from] GeographyError),
    #[error(transparent)]
    Databank(#[from] DatabankError),
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    format_version: u32,
    country: String,
    hierarchy: String,
    sources: Vec<ManifestSource>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ManifestSource {
    id: SourceId,
    period_kind: PeriodKind,
    file: String,
    rows: usize,
}

/// Reads rows of a source observation CSV (`area_code,period,count`).
pub fn read_source_csv(path: &Path) -> Result<Vec<IngestRow>, StoreError> {
    let mut reader = csv::Reader::from_path(path)?;
    {
        let headers = reader.headers()?;
        let got: Vec<&str> = headers.iter().collect();
        if got != SOURCE_HEADER {
            return Err(StoreError::Format {
                path: path.to_path_buf(),
                message: format!("expected header `{}`", SOURCE_HEADER.join(",")),
            });
        }
    }
    let mut rows = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record?;
        let area_code = record.get(0).unwrap_or_default().to_string();
        let period: ObservationPeriod = record
            .get(1)
            .unwrap_or_default()
            .parse()
            .map_err(|e| StoreError::Format {
                path: path.to_path_buf(),
                message: format!("row {}: {e}", idx + 2),
            })?;
        let count: f64 = record
            .get(2)
            .unwrap_or_default()
            .trim()
            .parse()
            .map_err(|_| StoreError::Format {
                path: path.to_path_buf(),
                message: format!("row {}: unparseable count `{}`", idx + 2, record.get(2).unwrap_or_default()),
            })?;
        rows.push(IngestRow {
            area_code,
            period,
            count,
        });
    }
    Ok(rows)
}

/// Writes a source observation CSV sorted by (area, period).
pub fn write_source_csv(path: &Path, rows: &[IngestRow]) -> Result<(), StoreError> {
    let mut sorted: Vec<&IngestRow> = rows.iter().collect();
    sorted.sort_by(|a, b| a.area_code.cmp(&b.area_code).then(a.period.cmp(&b.period)));
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(SOURCE_HEADER)?;
    for row in sorted {
        writer.write_record([
            row.area_code.as_str(),
            &row.period.to_string(),
            &fmt_raw(row.count),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

/// Saves a databank as an archive directory, creating it if needed.
pub fn save(db: &Databank, dir: &Path) -> Result<(), StoreError> {
    fs::create_dir_all(dir.join(SOURCE_DIR))?;
    geography::write_lookup_csv(&dir.join(HIERARCHY_FILE), db.hierarchy())?;

    let mut sources = Vec::new();
    for source in db.sources() {
        let rows: Vec<IngestRow> = db
            .observations_for(source)
            .map(|(code, period, count)| IngestRow::new(code, period, count))
            .collect();
        let file = format!("{}/{}.csv", SOURCE_DIR, source.key().to_ascii_lowercase());
        write_source_csv(&dir.join(&file), &rows)?;
        sources.push(ManifestSource {
            id: source,
            period_kind: db.period_kind(source).expect("source has data"),
            file,
            rows: rows.len(),
        });
    }

    let manifest = Manifest {
        format_version: FORMAT_VERSION,
        country: db.hierarchy().country().code.clone(),
        hierarchy: HIERARCHY_FILE.to_string(),
        sources,
    };
    let mut json = serde_json::to_string_pretty(&manifest)?;
    json.push('\n');
    fs::write(dir.join(MANIFEST_FILE), json)?;
    Ok(())
}

/// Loads an archive back through the normal ingestion path. A well-formed
/// archive ingests without warnings; any warning means the archive is
/// inconsistent and the load fails.
pub fn load(dir: &Path) -> Result<Databank, StoreError> {
    let manifest_path = dir.join(MANIFEST_FILE);
    let manifest: Manifest = serde_json::from_str(&fs::read_to_string(&manifest_path)?)?;
    if manifest.format_version != FORMAT_VERSION {
        return Err(StoreError::Format {
            path: manifest_path,
            message: format!(
                "format version {} unsupported (expected {FORMAT_VERSION})",
                manifest.format_version
            ),
        });
    }

    let lookup = geography::read_lookup_csv(&dir.join(&manifest.hierarchy))?;
    let hierarchy = GeographyHierarchy::from_rows_with_country(&lookup, &manifest.country)?;
    let mut db = Databank::new(hierarchy);

    for entry in &manifest.sources {
        let path = dir.join(&entry.file);
        let rows = read_source_csv(&path)?;
        let report = db.ingest(entry.id, &rows)?;
        if !report.warnings.is_empty() {
            return Err(StoreError::Format {
                path,
                message: format!(
                    "archive is inconsistent: {} ingestion warnings (first: {:?})",
                    report.warnings.len(),
                    report.warnings[0]
                ),
            });
        }
        if report.accepted != entry.rows {
            return Err(StoreError::Format {
                path,
                message: format!(
                    "manifest says {} rows, file held {}",
                    entry.rows, report.accepted
                ),
            });
        }
        let declared = entry.period_kind;
        if db.period_kind(entry.id) != Some(declared) {
            return Err(StoreError::Format {
                path,
                message: format!("declared period kind {declared} does not match data"),
            });
        }
    }
    Ok(db)
}

/// Checks an archive exists at `dir`.
pub fn exists(dir: &Path) -> bool {
    dir.join(MANIFEST_FILE).is_file()
}

/// Flat export of every observation, sorted, for external analysis.
pub fn export_rows(db: &Databank) -> Vec<ExportRow> {
    let mut out = Vec::with_capacity(db.observation_count());
    for source in db.sources() {
        for (code, period, count) in db.observations_for(source) {
            let area = db.hierarchy().resolve(code).expect("stored areas resolve");
            out.push(ExportRow {
                source,
                level: area.level.to_string(),
                area_code: code.to_string(),
                period: period.to_string(),
                period_kind: period.kind().to_string(),
                count,
            });
        }
    }
    out
}

#[derive(Debug, Serialize)]
pub struct ExportRow {
    pub source: SourceId,
    pub level: String,
    pub area_code: String,
    pub period: String,
    pub period_kind: String,
    pub count: f64,
}

/// Convenience: the set of periods present for a source in the bank.
pub fn stored_periods(db: &Databank, source: SourceId) -> BTreeSet<ObservationPeriod> {
    db.observations_for(source).map(|(_, p, _)| p).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geography::LookupRow;

    fn sample_bank() -> Databank {
        let rows = vec![
            LookupRow::new("X1", "Xton", "Z1", "R1"),
            LookupRow::new("Y1", "Yton", "Z2", "R2"),
        ];
        let mut db = Databank::new(GeographyHierarchy::from_rows(&rows).unwrap());
        db.ingest(
            SourceId::GpReg,
            &[
                IngestRow::new("X1", ObservationPeriod::calendar(2006).unwrap(), 10.5),
                IngestRow::new("Y1", ObservationPeriod::calendar(2006).unwrap(), 20.0),
                IngestRow::new("ENGLAND", ObservationPeriod::calendar(2001).unwrap(), 389_000.0),
            ],
        )
        .unwrap();
        db.ingest(
            SourceId::TimOfficial,
            &[IngestRow::new("ENGLAND", ObservationPeriod::mid_year(2006).unwrap(), 533_000.0)],
        )
        .unwrap();
        db
    }

    #[test]
    fn archive_round_trips_and_is_byte_stable() {
        let db = sample_bank();
        let dir = tempfile::tempdir().unwrap();
        let first = dir.path().join("a");
        let second = dir.path().join("b");
        save(&db, &first).unwrap();
        let reloaded = load(&first).unwrap();
        assert_eq!(reloaded, db);

        save(&reloaded, &second).unwrap();
        for file in [
            MANIFEST_FILE.to_string(),
            HIERARCHY_FILE.to_string(),
            format!("{SOURCE_DIR}/gp_reg.csv"),
            format!("{SOURCE_DIR}/tim_official.csv"),
        ] {
            let a = fs::read(first.join(&file)).unwrap();
            let b = fs::read(second.join(&file)).unwrap();
            assert_eq!(a, b, "{file} differs");
        }
    }

    #[test]
    fn corrupt_archives_are_refused() {
        let db = sample_bank();
        let dir = tempfile::tempdir().unwrap();
        save(&db, dir.path()).unwrap();

        // Unknown area in a source file → inconsistent archive.
        let gp = dir.path().join(SOURCE_DIR).join("gp_reg.csv");
        let mut text = fs::read_to_string(&gp).unwrap();
        text.push_str("NOWHERE,2006,1\n");
        fs::write(&gp, text).unwrap();
        assert!(matches!(load(dir.path()), Err(StoreError::Format { .. })));
    }

    #[test]
    fn export_lists_every_observation_with_levels() {
        let db = sample_bank();
        let rows = export_rows(&db);
        assert_eq!(rows.len(), 4);
        assert!(rows
            .iter()
            .any(|r| r.area_code == "ENGLAND" && r.level == "COUNTRY"));
        assert!(rows.iter().any(|r| r.period == "2006/07"));
    }
}
