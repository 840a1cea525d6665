use std::collections::BTreeMap;

use pme_lab::battery::{battery, BatteryOptions};

fn files(dir: &std::path::Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect()
}

#[test]
fn same_seed_gives_byte_identical_csvs() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for dir in [&a, &b] {
        let opts = BatteryOptions { seed: 7, filter: Some("invariants".into()), out: Some(dir.path().into()), ..Default::default() };
        battery(&opts).unwrap();
    }
    let (fa, fb) = (files(a.path()), files(b.path()));
    assert!(fa.contains_key("report.csv") && fa.contains_key("invariants.csv"));
    assert_eq!(fa, fb);
}

#[test]
fn different_seeds_draw_different_data() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for (seed, dir) in [(3, &a), (4, &b)] {
        let opts = BatteryOptions { seed, filter: Some("10".into()), out: Some(dir.path().into()), ..Default::default() };
        battery(&opts).unwrap();
    }
    assert_ne!(files(a.path())["invariants.csv"], files(b.path())["invariants.csv"]);
}

#[test]
fn tampered_tolerance_fails_only_its_criterion() {
    let pick = |c: &pme_lab::battery::CriterionResult| (c.id, c.passed());
    let base = battery(&BatteryOptions { seed: 1, filter: Some("eigen".into()), ..Default::default() }).unwrap();
    let mut overrides = BTreeMap::new();
    overrides.insert("2.mu_1".to_string(), 1e-12);
    let tampered = battery(&BatteryOptions { seed: 1, filter: Some("eigen".into()), overrides, ..Default::default() }).unwrap();
    let ids: Vec<usize> = base.criteria.iter().map(|c| c.id).collect();
    assert_eq!(ids, vec![2, 3]);
    assert!(base.criterion(2).unwrap().passed());
    assert!(!tampered.criterion(2).unwrap().passed());
    let failing: Vec<String> = tampered.checks().into_iter().filter(|c| !c.pass).map(|c| c.criterion).collect();
    assert!(failing.iter().all(|c| c.starts_with("2.mu_1")), "{failing:?}");
    assert_eq!(pick(base.criterion(3).unwrap()), pick(tampered.criterion(3).unwrap()));
}

#[test]
fn filter_by_number_and_name() {
    let by_number = battery(&BatteryOptions { filter: Some("4".into()), ..Default::default() }).unwrap();
    assert_eq!(by_number.criteria.len(), 1);
    assert_eq!(by_number.criteria[0].name, "separable-solution");
    assert!(by_number.passed());
    let none = battery(&BatteryOptions { filter: Some("no-such".into()), ..Default::default() }).unwrap();
    assert!(none.criteria.is_empty());
}
