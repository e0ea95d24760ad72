use std::collections::BTreeMap;

use sparse_rank::harness::{
    emit_report, parse_report_csv, run_all, run_core, run_field_invariance, run_pin, run_verify, CheckKind,
    ExperimentConfig, PinOptions, ReportFormat, HYPOTHESIS_VIOLATED,
};
use sparse_rank::{EntryMap, FieldSpec};

fn cfg(spec: &str, n: usize, trials: usize, seed: u64) -> ExperimentConfig {
    ExperimentConfig::new(spec.parse().unwrap(), n, trials, seed)
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let mut c = cfg("po:2;point:3", 400, 4, 17);
    c.checks = vec![CheckKind::Verify, CheckKind::Core];
    let a = emit_report(&run_all(&c).unwrap(), ReportFormat::Csv).unwrap();
    let b = emit_report(&run_all(&c).unwrap(), ReportFormat::Csv).unwrap();
    assert_eq!(a, b);
    let single = cfg("po:2;point:3", 400, 1, 3);
    assert_eq!(run_verify(&single).unwrap(), run_verify(&single).unwrap());
}

#[test]
fn aggregates_match_their_rows() {
    let mut c = cfg("po:2.5;po:2.5", 300, 6, 5);
    c.fields = vec![FieldSpec::Prime(2), FieldSpec::Prime(5)];
    let reports = vec![run_verify(&c).unwrap(), run_field_invariance(&c).unwrap()];
    let text = emit_report(&reports, ReportFormat::Csv).unwrap();
    for r in parse_report_csv(&text).unwrap() {
        let mut by_variant: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
        for t in &r.records {
            by_variant.entry(&t.variant).or_default().push(t.rank.unwrap() as f64 / t.n as f64);
        }
        for a in r.aggregates.iter().filter(|a| a.metric == "rank_fraction") {
            let xs = &by_variant[a.variant.as_str()];
            let mean = xs.iter().sum::<f64>() / xs.len() as f64;
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
            assert_eq!(a.value, mean);
            assert_eq!(a.std_error, (var / xs.len() as f64).sqrt());
        }
    }
}

#[test]
fn records_round_trip_through_csv() {
    let mut c = cfg("po:2;point:3", 200, 3, 8);
    c.checks = vec![CheckKind::Verify, CheckKind::Core];
    let reports = run_all(&c).unwrap();
    let back = parse_report_csv(&emit_report(&reports, ReportFormat::Csv).unwrap()).unwrap();
    assert_eq!(back.len(), reports.len());
    for (a, b) in reports.iter().zip(&back) {
        assert_eq!(a.kind, b.kind);
        assert_eq!(a.records, b.records);
        assert_eq!(a.aggregates, b.aggregates);
        assert_eq!(a.flags, b.flags);
    }
}

#[test]
fn standard_error_shrinks_with_trials() {
    let se = |trials| run_verify(&cfg("po:2;point:3", 100, trials, 21)).unwrap().aggregates[0].std_error;
    let ratio = se(200) / se(400);
    assert!((ratio / 2f64.sqrt() - 1.0).abs() <= 0.2, "ratio {ratio}");
}

#[test]
fn ones_and_uniform_agree_over_gf2() {
    let mut c = cfg("po:2;point:3", 300, 5, 4);
    c.entries = vec![EntryMap::AllOnes, EntryMap::UniformNonzero];
    let r = run_field_invariance(&c).unwrap();
    let (ones, uniform): (Vec<_>, Vec<_>) = r.records.iter().partition(|t| t.variant == "2/ones");
    assert_eq!(ones.len(), 5);
    for (a, b) in ones.iter().zip(&uniform) {
        assert_eq!(a.rank, b.rank);
    }
}

#[test]
fn core_report_flags_unstable_core() {
    let r = run_core(&cfg("pmf:2=0.88,11=0.12;point:3", 2001, 2, 1)).unwrap();
    assert!(r.has_flag(HYPOTHESIS_VIOLATED));
    assert!(r.aggregates.iter().all(|a| a.pass.is_none()));
    assert!(r.all_pass());
}

#[test]
fn sparse_core_is_empty_and_predicted_empty() {
    let r = run_core(&cfg("po:1.2;point:3", 20_000, 3, 2)).unwrap();
    let v = r.aggregate("graph", "core_var_fraction").unwrap();
    assert_eq!(v.expected, Some(0.0));
    assert!(v.value < 1e-3);
    assert_eq!(v.pass, Some(true));
    assert!(!r.has_flag(HYPOTHESIS_VIOLATED));
}

#[test]
fn pin_campaign_writes_one_row_per_trial() {
    let mut c = cfg("po:2;point:3", 20, 12, 6);
    c.entries = vec![EntryMap::UniformNonzero];
    let r = run_pin(&c, PinOptions::new(0.5, 2)).unwrap();
    assert_eq!(r.options.horizon, 513);
    let csv = r.to_csv();
    assert_eq!(csv.lines().count(), 13);
    assert!(csv.starts_with("trial,seed,theta,frozen,proper_relations,tv_sum,violations"));
    assert!(r.records.iter().all(|x| x.violations == 0 && (1..=513).contains(&x.theta)));
}
