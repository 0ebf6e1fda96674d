//! The three-level geographic hierarchy: local authority district (LAD) →
//! intermediate migrant-geography zone (NMGI) → region (GOR), under a single
//! country root.
//!
//! Zone membership is always supplied as data via a lookup file — it is an
//! official definition, never inferred here. Once constructed a
//! [`GeographyHierarchy`] is immutable and safe to share across threads.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Country code used when a lookup file carries no explicit country.
pub const DEFAULT_COUNTRY_CODE: &str = "ENGLAND";

/// Header required on hierarchy lookup files.
pub const LOOKUP_HEADER: [&str; 4] = ["lad_code", "lad_name", "nmgi_code", "gor_code"];

#[derive(Debug, Error)]
pub enum GeographyError {
    #[error("hierarchy lookup contains no rows")]
    EmptyInput,
    #[error("local authority `{0}` appears more than once in the lookup")]
    DuplicateLad(String),
    #[error("zone `{0}` is mapped to more than one region")]
    InconsistentParent(String),
    #[error("invalid area code `{0}`: codes must be non-empty and free of commas and line breaks")]
    InvalidCode(String),
    #[error("code `{0}` is used at more than one geography level")]
    DuplicateCode(String),
    #[error("unknown area `{0}`")]
    UnknownArea(String),
    #[error("lookup file must start with header `{}`", LOOKUP_HEADER.join(","))]
    MissingHeader,
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Geography levels, finest first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum GeoLevel {
    Lad,
    Nmgi,
    Gor,
    Country,
}

impl GeoLevel {
    /// True when `self` is the same level as `other` or a coarser one.
    pub fn is_at_or_above(self, other: GeoLevel) -> bool {
        self >= other
    }
}

impl fmt::Display for GeoLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let label = match self {
            GeoLevel::Lad => "LAD",
            GeoLevel::Nmgi => "NMGI",
            GeoLevel::Gor => "GOR",
            GeoLevel::Country => "COUNTRY",
        };
        write!(f, "{label}")
    }
}

impl FromStr for GeoLevel {
    type Err = GeographyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "LAD" => Ok(GeoLevel::Lad),
            "NMGI" => Ok(GeoLevel::Nmgi),
            "GOR" => Ok(GeoLevel::Gor),
            "COUNTRY" => Ok(GeoLevel::Country),
            _ => Err(GeographyError::UnknownArea(format!("level `{s}`"))),
        }
    }
}

/// An identified area: opaque code, display name, and the level it sits at.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AreaCode {
    pub code: String,
    pub name: String,
    pub level: GeoLevel,
}

impl AreaCode {
    fn new(code: &str, name: &str, level: GeoLevel) -> Self {
        AreaCode {
            code: code.to_string(),
            name: name.to_string(),
            level,
        }
    }
}

/// One row of the hierarchy lookup file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LookupRow {
    pub lad_code: String,
    pub lad_name: String,
    pub nmgi_code: String,
    pub gor_code: String,
}

impl LookupRow {
    pub fn new(lad_code: &str, lad_name: &str, nmgi_code: &str, gor_code: &str) -> Self {
        LookupRow {
            lad_code: lad_code.to_string(),
            lad_name: lad_name.to_string(),
            nmgi_code: nmgi_code.to_string(),
            gor_code: gor_code.to_string(),
        }
    }
}

/// Validated partition of local authorities into zones, zones into regions,
/// with one implicit country root.
///
/// Construction consumes lookup rows in any order and yields the same
/// hierarchy regardless of row order. Codes are compared byte-exactly and
/// case-sensitively, and must be unique across all levels so a bare code in
/// a data file resolves to exactly one area.
#[derive(Clone, Debug, PartialEq)]
pub struct GeographyHierarchy {
    country: AreaCode,
    lads: BTreeMap<String, AreaCode>,
    nmgis: BTreeMap<String, AreaCode>,
    gors: BTreeMap<String, AreaCode>,
    parent_nmgi: BTreeMap<String, String>,
    parent_gor: BTreeMap<String, String>,
}

fn validate_code(code: &str) -> Result<(), GeographyError> {
    if code.is_empty() || code.contains(',') || code.contains('\n') || code.contains('\r') {
        return Err(GeographyError::InvalidCode(code.to_string()));
    }
    Ok(())
}

impl GeographyHierarchy {
    /// Builds a hierarchy with the default country root.
    pub fn from_rows(rows: &[LookupRow]) -> Result<Self, GeographyError> {
        Self::from_rows_with_country(rows, DEFAULT_COUNTRY_CODE)
    }

    pub fn from_rows_with_country(
        rows: &[LookupRow],
        country_code: &str,
    ) -> Result<Self, GeographyError> {
        if rows.is_empty() {
            return Err(GeographyError::EmptyInput);
        }
        validate_code(country_code)?;

        let mut lads = BTreeMap::new();
        let mut nmgis = BTreeMap::new();
        let mut gors = BTreeMap::new();
        let mut parent_nmgi = BTreeMap::new();
        let mut parent_gor: BTreeMap<String, String> = BTreeMap::new();

        for row in rows {
            validate_code(&row.lad_code)?;
            validate_code(&row.nmgi_code)?;
            validate_code(&row.gor_code)?;

            if lads.contains_key(&row.lad_code) {
                return Err(GeographyError::DuplicateLad(row.lad_code.clone()));
            }
            lads.insert(
                row.lad_code.clone(),
                AreaCode::new(&row.lad_code, &row.lad_name, GeoLevel::Lad),
            );
            nmgis
                .entry(row.nmgi_code.clone())
                .or_insert_with(|| AreaCode::new(&row.nmgi_code, &row.nmgi_code, GeoLevel::Nmgi));
            gors.entry(row.gor_code.clone())
                .or_insert_with(|| AreaCode::new(&row.gor_code, &row.gor_code, GeoLevel::Gor));

            parent_nmgi.insert(row.lad_code.clone(), row.nmgi_code.clone());
            match parent_gor.get(&row.nmgi_code) {
                Some(existing) if existing != &row.gor_code => {
                    return Err(GeographyError::InconsistentParent(row.nmgi_code.clone()));
                }
                _ => {
                    parent_gor.insert(row.nmgi_code.clone(), row.gor_code.clone());
                }
            }
        }

        // Codes must resolve unambiguously across levels.
        let mut seen: BTreeSet<&str> = BTreeSet::new();
        for code in lads
            .keys()
            .chain(nmgis.keys())
            .chain(gors.keys())
            .map(String::as_str)
            .chain(std::iter::once(country_code))
        {
            if !seen.insert(code) {
                return Err(GeographyError::DuplicateCode(code.to_string()));
            }
        }

        Ok(GeographyHierarchy {
            country: AreaCode::new(country_code, country_code, GeoLevel::Country),
            lads,
            nmgis,
            gors,
            parent_nmgi,
            parent_gor,
        })
    }

    /// The lookup rows this hierarchy serializes to, sorted by LAD code.
    pub fn to_rows(&self) -> Vec<LookupRow> {
        self.lads
            .values()
            .map(|lad| {
                let nmgi = &self.parent_nmgi[&lad.code];
                let gor = &self.parent_gor[nmgi];
                LookupRow::new(&lad.code, &lad.name, nmgi, gor)
            })
            .collect()
    }

    pub fn country(&self) -> &AreaCode {
        &self.country
    }

    pub fn lads(&self) -> impl Iterator<Item = &AreaCode> {
        self.lads.values()
    }

    pub fn nmgis(&self) -> impl Iterator<Item = &AreaCode> {
        self.nmgis.values()
    }

    pub fn gors(&self) -> impl Iterator<Item = &AreaCode> {
        self.gors.values()
    }

    pub fn lad_count(&self) -> usize {
        self.lads.len()
    }

    /// Resolves a bare code to its area, whatever level it sits at.
    pub fn resolve(&self, code: &str) -> Result<&AreaCode, GeographyError> {
        if code == self.country.code {
            return Ok(&self.country);
        }
        self.lads
            .get(code)
            .or_else(|| self.nmgis.get(code))
            .or_else(|| self.gors.get(code))
            .ok_or_else(|| GeographyError::UnknownArea(code.to_string()))
    }

    /// The zone containing a local authority.
    pub fn zone_of(&self, lad_code: &str) -> Result<&AreaCode, GeographyError> {
        let nmgi = self
            .parent_nmgi
            .get(lad_code)
            .ok_or_else(|| GeographyError::UnknownArea(lad_code.to_string()))?;
        Ok(&self.nmgis[nmgi])
    }

    /// The region containing a local authority.
    pub fn region_of(&self, lad_code: &str) -> Result<&AreaCode, GeographyError> {
        let nmgi = self
            .parent_nmgi
            .get(lad_code)
            .ok_or_else(|| GeographyError::UnknownArea(lad_code.to_string()))?;
        Ok(&self.gors[&self.parent_gor[nmgi]])
    }

    /// The region containing a zone.
    pub fn region_of_zone(&self, nmgi_code: &str) -> Result<&AreaCode, GeographyError> {
        let gor = self
            .parent_gor
            .get(nmgi_code)
            .ok_or_else(|| GeographyError::UnknownArea(nmgi_code.to_string()))?;
        Ok(&self.gors[gor])
    }

    /// All local authorities whose region is `gor_code`.
    pub fn lads_in_region(&self, gor_code: &str) -> Result<BTreeSet<&AreaCode>, GeographyError> {
        if !self.gors.contains_key(gor_code) {
            return Err(GeographyError::UnknownArea(gor_code.to_string()));
        }
        Ok(self
            .lads
            .values()
            .filter(|lad| self.parent_gor[&self.parent_nmgi[&lad.code]] == gor_code)
            .collect())
    }

    /// All local authorities whose zone is `nmgi_code`.
    pub fn lads_in_zone(&self, nmgi_code: &str) -> Result<BTreeSet<&AreaCode>, GeographyError> {
        if !self.nmgis.contains_key(nmgi_code) {
            return Err(GeographyError::UnknownArea(nmgi_code.to_string()));
        }
        Ok(self
            .lads
            .values()
            .filter(|lad| self.parent_nmgi[&lad.code] == nmgi_code)
            .collect())
    }

    /// The ancestor of `code` at `level`, or `None` when `level` is finer
    /// than the area's own level.
    pub fn ancestor_at(
        &self,
        code: &str,
        level: GeoLevel,
    ) -> Result<Option<&AreaCode>, GeographyError> {
        let area = self.resolve(code)?;
        if !level.is_at_or_above(area.level) {
            return Ok(None);
        }
        let ancestor = match level {
            GeoLevel::Country => &self.country,
            GeoLevel::Lad => area,
            GeoLevel::Nmgi => match area.level {
                GeoLevel::Lad => self.zone_of(&area.code)?,
                _ => area,
            },
            GeoLevel::Gor => match area.level {
                GeoLevel::Lad => self.region_of(&area.code)?,
                GeoLevel::Nmgi => self.region_of_zone(&area.code)?,
                _ => area,
            },
        };
        Ok(Some(ancestor))
    }

    /// Area codes present at a given level, sorted.
    pub fn codes_at(&self, level: GeoLevel) -> Vec<&str> {
        match level {
            GeoLevel::Lad => self.lads.keys().map(String::as_str).collect(),
            GeoLevel::Nmgi => self.nmgis.keys().map(String::as_str).collect(),
            GeoLevel::Gor => self.gors.keys().map(String::as_str).collect(),
            GeoLevel::Country => vec![self.country.code.as_str()],
        }
    }
}

/// Reads a hierarchy lookup CSV (`lad_code,lad_name,nmgi_code,gor_code`).
pub fn read_lookup_csv(path: &Path) -> Result<Vec<LookupRow>, GeographyError> {
    let mut reader = csv::Reader::from_path(path)?;
    {
        let headers = reader.headers()?;
        let got: Vec<&str> = headers.iter().collect();
        if got != LOOKUP_HEADER {
            return Err(GeographyError::MissingHeader);
        }
    }
    let mut rows = Vec::new();
    for record in reader.deserialize() {
        rows.push(record?);
    }
    Ok(rows)
}

/// Writes the lookup CSV form of a hierarchy.
pub fn write_lookup_csv(path: &Path, hierarchy: &GeographyHierarchy) -> Result<(), GeographyError> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(LOOKUP_HEADER)?;
    for row in hierarchy.to_rows() {
        writer.write_record([&row.lad_code, &row.lad_name, &row.nmgi_code, &row.gor_code])?;
    }
    writer.flush()?;
    Ok(())
}
