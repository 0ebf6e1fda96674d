//! Integration tests over the bundled fixture datasets, checking the
//! library reproduces the published regional and national figures the
//! fixtures encode.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use migest_core::allocation::{default_source_map, RollupLevel};
use migest_core::databank::Databank;
use migest_core::geography::{self, GeoLevel, GeographyHierarchy};
use migest_core::period::ObservationPeriod;
use migest_core::store;
use migest_core::{
    model_b, rate_ratio, rates, AllocationResult, ReasonCategory, ReasonProfile, RegionalShares,
    SourceId, WithinRegionShares,
};

fn fixture(path: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(path)
}

fn load_source(db: &mut Databank, source: SourceId, path: &str) {
    let rows = store::read_source_csv(&fixture(path)).unwrap();
    let report = db.ingest(source, &rows).unwrap();
    assert!(report.warnings.is_empty(), "{path}: {:?}", report.warnings);
}

fn calendar(years: &[i32]) -> BTreeSet<ObservationPeriod> {
    years
        .iter()
        .map(|y| ObservationPeriod::calendar(*y).unwrap())
        .collect()
}

fn mid_year(years: &[i32]) -> BTreeSet<ObservationPeriod> {
    years
        .iter()
        .map(|y| ObservationPeriod::mid_year(*y).unwrap())
        .collect()
}

fn regional_databank() -> Databank {
    let rows = geography::read_lookup_csv(&fixture("paper2006/hierarchy.csv")).unwrap();
    let hierarchy = GeographyHierarchy::from_rows(&rows).unwrap();
    let mut db = Databank::new(hierarchy);
    load_source(&mut db, SourceId::TimOfficial, "paper2006/tim_gor_2006_07.csv");
    load_source(&mut db, SourceId::NinoAll, "paper2006/nino_gor_2006_07.csv");
    load_source(&mut db, SourceId::HesaStudent, "paper2006/hesa_gor_2005_2007.csv");
    load_source(&mut db, SourceId::GpReg, "paper2006/gp_lad_2006.csv");
    db
}

fn run_model_b(db: &Databank) -> AllocationResult {
    let reason_rows = store_reason_counts();
    let profile = ReasonProfile::from_reason_counts(&reason_rows).unwrap();
    let source_map = default_source_map();
    let periods: BTreeMap<ReasonCategory, BTreeSet<ObservationPeriod>> = [
        (ReasonCategory::Study, calendar(&[2005, 2006, 2007])),
        (ReasonCategory::Work, mid_year(&[2006])),
        (ReasonCategory::Other, calendar(&[2006])),
    ]
    .into_iter()
    .collect();
    let regional = RegionalShares::compute(db, &source_map, &periods).unwrap();
    let within = WithinRegionShares::compute(db, &calendar(&[2006])).unwrap();
    let total = db
        .aggregate(SourceId::TimOfficial, &mid_year(&[2006]), GeoLevel::Country)
        .unwrap()
        .total();
    model_b(total, &profile, &regional, &within).unwrap()
}

fn store_reason_counts() -> BTreeMap<String, f64> {
    let mut reader = csv::Reader::from_path(fixture("paper2006/reasons_2004_06.csv")).unwrap();
    reader
        .records()
        .map(|record| {
            let record = record.unwrap();
            (
                record.get(0).unwrap().to_string(),
                record.get(1).unwrap().parse::<f64>().unwrap(),
            )
        })
        .collect()
}

#[test]
fn reason_profile_reproduces_the_published_split() {
    let profile = ReasonProfile::from_reason_counts(&store_reason_counts()).unwrap();
    assert!((profile.proportion(ReasonCategory::Study) - 0.26).abs() < 1e-12);
    assert!((profile.proportion(ReasonCategory::Work) - 0.40).abs() < 1e-12);
    assert!((profile.proportion(ReasonCategory::Other) - 0.34).abs() < 1e-12);
}

#[test]
fn regional_estimates_match_published_differences() {
    let db = regional_databank();
    let result = run_model_b(&db);
    let by_gor = result.rollup(db.hierarchy(), RollupLevel::Gor).unwrap();
    let baseline = db
        .aggregate(SourceId::TimOfficial, &mid_year(&[2006]), GeoLevel::Gor)
        .unwrap()
        .values;

    let delta =
        |gor: &str| -> f64 { by_gor[gor] - baseline[gor] };

    // The two headline absolute changes.
    assert!((delta("London") - 20_334.0).abs() < 1.0, "London {}", delta("London"));
    assert!((delta("East of England") + 13_584.0).abs() < 1.0);

    // Percentage changes.
    let pct = |gor: &str| 100.0 * delta(gor) / baseline[gor];
    assert!((pct("West Midlands") - 33.0).abs() < 0.1, "WM {}", pct("West Midlands"));
    assert!((pct("South West") + 19.0).abs() < 0.1);
    assert!((pct("Yorkshire and the Humber") + 21.0).abs() < 0.15);

    // Sign pattern: gains balanced by reductions.
    for gor in ["North East", "North West"] {
        assert!(delta(gor) > 0.0, "{gor} should gain");
    }
    for gor in ["South East", "East Midlands"] {
        assert!(delta(gor) < 0.0, "{gor} should lose");
    }
    let net: f64 = baseline.keys().map(|g| delta(g)).sum();
    assert!(net.abs() < 1e-6 * result.national_total());
}

#[test]
fn zone_rollup_matches_published_yorkshire_changes() {
    let db = regional_databank();
    let result = run_model_b(&db);
    let by_nmgi = result.rollup(db.hierarchy(), RollupLevel::Nmgi).unwrap();

    // Official zone baselines sum to the regional baseline.
    let nmgi_baseline: BTreeMap<&str, f64> = [
        ("Leeds/Bradford/Harrogate+", 25_480.0),
        ("Sheffield/Kirklees+", 15_593.0),
        ("Hull/York+", 7_776.0),
    ]
    .into_iter()
    .collect();
    let delta = by_nmgi["Leeds/Bradford/Harrogate+"] - nmgi_baseline["Leeds/Bradford/Harrogate+"];
    assert!((delta + 7_644.0).abs() < 1.0, "Leeds/Bradford/Harrogate+ {delta}");
    let pct = 100.0 * delta / nmgi_baseline["Leeds/Bradford/Harrogate+"];
    assert!((pct + 30.0).abs() < 0.1);

    let delta = by_nmgi["Sheffield/Kirklees+"] - nmgi_baseline["Sheffield/Kirklees+"];
    assert!((delta + 2_339.0).abs() < 1.0);
    let delta = by_nmgi["Hull/York+"] - nmgi_baseline["Hull/York+"];
    assert!((delta + 309.0).abs() < 1.0);
}

#[test]
fn leeds_and_coventry_resolve_to_their_regions() {
    let db = regional_databank();
    let h = db.hierarchy();
    assert_eq!(h.region_of("Leeds").unwrap().code, "Yorkshire and the Humber");
    assert_eq!(h.zone_of("Leeds").unwrap().code, "Leeds/Bradford/Harrogate+");
    assert_eq!(h.region_of("Coventry").unwrap().code, "West Midlands");
}

#[test]
fn three_year_aggregates_reproduce_the_regional_gaps() {
    let rows = geography::read_lookup_csv(&fixture("paper2006/hierarchy.csv")).unwrap();
    let mut db = Databank::new(GeographyHierarchy::from_rows(&rows).unwrap());
    load_source(&mut db, SourceId::GpReg, "fig5/gp_gor_2005_2007.csv");
    load_source(&mut db, SourceId::TimOfficial, "fig5/tim_gor_2005_2007.csv");

    let gp = db
        .aggregate(SourceId::GpReg, &calendar(&[2005, 2006, 2007]), GeoLevel::Gor)
        .unwrap()
        .values;
    let tim = db
        .aggregate(SourceId::TimOfficial, &mid_year(&[2005, 2006, 2007]), GeoLevel::Gor)
        .unwrap()
        .values;

    // Official estimates sit >16% above GP totals in Yorkshire and the
    // South West, and 34% below in the West Midlands.
    let ratio = |gor: &str| tim[gor] / gp[gor];
    assert!(ratio("Yorkshire and the Humber") > 1.16);
    assert!(ratio("South West") > 1.16);
    assert!((ratio("West Midlands") - 0.66).abs() < 0.005);
}

#[test]
fn national_series_hit_the_published_endpoints() {
    let rows = geography::read_lookup_csv(&fixture("paper2006/hierarchy.csv")).unwrap();
    let mut db = Databank::new(GeographyHierarchy::from_rows(&rows).unwrap());
    load_source(&mut db, SourceId::GpReg, "trends/gp_england.csv");
    load_source(&mut db, SourceId::TimOfficial, "trends/tim_england.csv");
    load_source(&mut db, SourceId::NinoAll, "trends/nino_all_england.csv");
    load_source(&mut db, SourceId::NinoNonAccession, "trends/nino_nonacc_england.csv");

    let gp = db.series(SourceId::GpReg, "ENGLAND", 2001..=2007).unwrap();
    assert_eq!(gp.first().unwrap().1, Some(389_000.0));
    assert_eq!(gp.last().unwrap().1, Some(581_000.0));

    let tim = db.series(SourceId::TimOfficial, "ENGLAND", 2001..=2006).unwrap();
    assert_eq!(tim.first().unwrap().1, Some(450_000.0));
    assert_eq!(tim.first().unwrap().0.to_string(), "2001/02");
    assert_eq!(tim.last().unwrap().1, Some(533_000.0));
    assert_eq!(tim.last().unwrap().0.to_string(), "2006/07");

    let nino = db.series(SourceId::NinoAll, "ENGLAND", 2002..=2007).unwrap();
    assert_eq!(nino.last().unwrap().1, Some(617_000.0));
    let non_acc = db
        .series(SourceId::NinoNonAccession, "ENGLAND", 2002..=2007)
        .unwrap();
    assert_eq!(non_acc.first().unwrap().1, Some(294_000.0));
    assert_eq!(non_acc.last().unwrap().1, Some(341_000.0));
}

#[test]
fn rate_table_reproduces_all_published_ratios() {
    let read_values = |path: &str| -> BTreeMap<String, f64> {
        let mut reader = csv::Reader::from_path(fixture(path)).unwrap();
        reader
            .records()
            .map(|record| {
                let record = record.unwrap();
                (
                    record.get(0).unwrap().to_string(),
                    record.get(1).unwrap().parse::<f64>().unwrap(),
                )
            })
            .collect()
    };
    let populations = read_values("table2/populations.csv");
    let tim = rates(&read_values("table2/tim_flows_2006.csv"), &populations).unwrap();
    let gp = rates(&read_values("table2/gp_flows_2006.csv"), &populations).unwrap();

    let published_rates: &[(&str, f64, f64)] = &[
        ("East", 10.7, 9.7),
        ("South West", 8.4, 7.7),
        ("Yorkshire and the Humber", 9.5, 9.0),
        ("North East", 5.7, 6.1),
        ("ENGLAND", 10.5, 11.5),
        ("East Midlands", 8.4, 9.2),
        ("South East", 9.8, 11.0),
        ("London", 22.9, 25.7),
        ("North West", 6.3, 8.0),
        ("West Midlands", 6.2, 8.8),
    ];
    for (area, tim_rate, gp_rate) in published_rates {
        assert_eq!(
            migest_core::display::fmt_rate(tim.rate_of(area).unwrap()),
            format!("{tim_rate:.1}"),
            "{area} official rate"
        );
        assert_eq!(
            migest_core::display::fmt_rate(gp.rate_of(area).unwrap()),
            format!("{gp_rate:.1}"),
            "{area} GP rate"
        );
    }

    let ratio = rate_ratio(&tim, &gp).unwrap();
    let published_ratios: &[(&str, f64)] = &[
        ("East", 110.0),
        ("South West", 108.0),
        ("Yorkshire and the Humber", 106.0),
        ("North East", 93.0),
        ("ENGLAND", 92.0),
        ("East Midlands", 91.0),
        ("South East", 89.0),
        ("London", 89.0),
        ("North West", 79.0),
        ("West Midlands", 70.0),
    ];
    for (area, expected) in published_ratios {
        let got = ratio[*area];
        assert!(
            (got - expected).abs() <= 0.5,
            "{area}: got {got}, published {expected}"
        );
    }
}
