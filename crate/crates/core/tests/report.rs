use spinweil_core::report::{check_names, run_all, run_preset, Status};
use spinweil_core::weil::{preset, PRESETS};

#[test]
fn fourfold_suite_passes() {
    let r = run_preset("fourfold-rm2", 0, None).unwrap();
    for c in &r.checks {
        assert_eq!(c.status, Status::Pass, "{}: {}", c.name, c.witness);
    }
    // the sheaf pipeline needs a threefold over Q
    assert!(r.check("rank.g_variant").is_none());
    assert_eq!(r.summary.pass, r.checks.len());
    let names: Vec<&str> = r.checks.iter().map(|c| c.name.as_str()).collect();
    let order: Vec<&str> = check_names().into_iter().filter(|n| names.contains(n)).collect();
    assert_eq!(names, order);
}

#[test]
fn filter_and_unknown_preset() {
    let r = run_preset("sixfold-q5", 1, Some("rank.")).unwrap();
    assert_eq!(r.checks.len(), 2);
    assert_eq!(r.check("rank.g_variant").unwrap().witness["abs"], "40");
    assert!(run_preset("sixfold-q4", 0, None).is_err());
}

#[test]
fn datum_json_round_trip() {
    for p in PRESETS {
        let d = preset(p).unwrap();
        let s = serde_json::to_string(&d).unwrap();
        let back: spinweil_core::weil::WeilDatum = serde_json::from_str(&s).unwrap();
        assert_eq!(back, d);
        let r = run_all(&back, None, 0, Some("tower")).unwrap();
        assert!(r.all_pass());
    }
}
