mod common;

use common::*;
use proptest::prelude::*;
use sparse_rank::formula::{
    core_fixed_point, core_residual, full_row_rank_threshold, maximize_potential, potential, potential_derivative,
};
use sparse_rank::{bethe_two_point, rank_prediction, DegreeDistribution, EnsembleSpec};

fn pmf_strategy(min: u32, max: u32) -> impl Strategy<Value = DegreeDistribution> {
    // roughly a third of the atoms are exactly zero, so sparse supports show up
    prop::collection::vec(prop_oneof![Just(0.0), 0.0f64..1.0, 0.0f64..1.0], (max - min + 1) as usize)
        .prop_filter_map("needs mass", move |w| {
            let total: f64 = w.iter().sum();
            if total < 1e-3 {
                return None;
            }
            let atoms: Vec<(u32, f64)> = w.iter().enumerate().map(|(i, &p)| (min + i as u32, p / total)).collect();
            DegreeDistribution::from_pmf(&atoms).ok()
        })
}

fn finite_ensemble() -> impl Strategy<Value = EnsembleSpec> {
    (pmf_strategy(0, 6), pmf_strategy(1, 6))
        .prop_filter_map("positive means", |(v, c)| EnsembleSpec::new(v, c).ok())
}

#[test]
fn poisson_pair_matches_closed_form() {
    for delta in [0.5, 1.0, 1.5, 2.5, 3.5, 5.0] {
        let ens: EnsembleSpec = format!("po:{delta};po:{delta}").parse().unwrap();
        let p = rank_prediction(&ens).unwrap();
        let want = poisson_pair_rank(delta);
        assert!((p.rank_fraction - want).abs() < 1e-8, "delta={delta}: {} vs {want}", p.rank_fraction);
    }
}

#[test]
fn three_check_potential_matches_hand_form() {
    for d in [1.0, 2.0, 2.75, 3.5] {
        let ens: EnsembleSpec = format!("po:{d};point:3").parse().unwrap();
        for i in 0..=100 {
            let a = i as f64 / 100.0;
            assert!((potential(&ens, a) - xorsat3_potential(d, a)).abs() < 1e-12);
        }
    }
}

#[test]
fn three_check_threshold_matches_oracle() {
    let want = xorsat3_threshold();
    let got = full_row_rank_threshold(|d| format!("po:{d};point:3").parse(), 2.0, 3.0, 1e-9).unwrap();
    assert!((got - want).abs() < 1e-6, "{got} vs {want}");
}

#[test]
fn library_maximum_matches_grid_oracle() {
    for spec in ["po:2;point:3", "pmf:2=0.88,11=0.12;point:3", "po:2.5;po:2.5", "pmf:1=0.3,3=0.7;pmf:2=0.5,4=0.5"] {
        let ens: EnsembleSpec = spec.parse().unwrap();
        let (_, best) = maximize_on_unit(|a| potential(&ens, a));
        assert!((maximize_potential(&ens).value - best).abs() < 1e-9, "{spec}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn potential_at_one_is_isolated_mass(ens in finite_ensemble()) {
        prop_assert!((potential(&ens, 1.0) - ens.var().pmf(0)).abs() < 1e-12);
    }

    #[test]
    fn derivative_matches_difference_quotient(ens in finite_ensemble(), a in 0.01f64..0.99) {
        let h = 1e-6;
        let fd = (potential(&ens, a + h) - potential(&ens, a - h)) / (2.0 * h);
        prop_assert!((potential_derivative(&ens, a) - fd).abs() < 1e-5);
    }

    #[test]
    fn prediction_is_consistent(ens in finite_ensemble()) {
        let p = rank_prediction(&ens).unwrap();
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&p.rank_fraction));
        prop_assert!(p.rank_fraction <= p.two_core_bound + 1e-12);
        prop_assert!(p.phi_max >= p.phi_zero - 1e-12);
        prop_assert!(p.core_var_fraction >= 0.0 && p.core_var_fraction <= 1.0 + 1e-12);
    }

    #[test]
    fn residual_has_no_root_above_fixed_point(ens in finite_ensemble()) {
        let rho = core_fixed_point(&ens).unwrap();
        prop_assert!(core_residual(&ens, rho).abs() < 1e-7);
        for i in 1..=200 {
            let a = rho + (1.0 - rho) * i as f64 / 200.0;
            if a < 1.0 {
                prop_assert!(core_residual(&ens, a) < 1e-9, "residual {} at {}", core_residual(&ens, a), a);
            }
        }
    }

    #[test]
    fn bethe_value_matches_potential(ens in finite_ensemble(), q in prop::sample::select(vec![2u64, 3, 5]), a in 0.0f64..=1.0) {
        let b = bethe_two_point(&ens, q, a).unwrap();
        prop_assert!((b - potential(&ens, a)).abs() <= 1e-9, "{} vs {}", b, potential(&ens, a));
    }
}
