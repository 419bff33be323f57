mod common;

use common::*;
use stratorder::cli::{random_instance, GeneratorParams, RefinementShape};
use stratorder::estimators::replicate_rng;
use stratorder::exact_dist::{cdf_sup_censored, dist_integral, dist_integral_censored, dist_sup, variance_integral_noisy};
use stratorder::orders::{dominates_cx, dominates_st};
use stratorder::Rational;

fn small() -> GeneratorParams {
    GeneratorParams { n_max: 4, values: 4, cells_per_axis: 5, max_splits: 3, ..GeneratorParams::default() }
}

#[test]
fn exact_laws_match_enumeration() {
    for shape in [RefinementShape::Grouped, RefinementShape::SplitChain] {
        for trial in 0..25 {
            let inst = random_instance(&mut replicate_rng(41, trial), &small(), shape, false).unwrap();
            for p in [&inst.coarse, &inst.fine] {
                assert_eq!(as_map(&dist_sup(&inst.f, p).unwrap()), sup_law(&inst.f, p), "sup, trial {trial}");
                assert_eq!(as_map(&dist_integral(&inst.f, p).unwrap()), integral_law(&inst.f, p), "integral, trial {trial}");
                assert_eq!(as_map(&dist_integral_censored(&inst.f, p).unwrap()), censored_integral_law(&inst.f, p), "censored, trial {trial}");
            }
        }
    }
}

#[test]
fn two_dimensional_laws_match_enumeration() {
    let params = GeneratorParams { d: 2, n_max: 4, values: 3, cells_per_axis: 3, max_splits: 3, ..GeneratorParams::default() };
    for trial in 0..15 {
        let inst = random_instance(&mut replicate_rng(43, trial), &params, RefinementShape::SplitChain, true).unwrap();
        for p in [&inst.coarse, &inst.fine] {
            assert_eq!(as_map(&dist_integral(&inst.f, p).unwrap()), integral_law(&inst.f, p));
            assert_eq!(as_map(&dist_sup(&inst.f, p).unwrap()), sup_law(&inst.f, p));
        }
    }
}

#[test]
fn censored_sup_cdf_matches_enumeration() {
    let probes: Vec<Rational> = (0..=40).map(|i| q(i, 40)).collect();
    for trial in 0..20 {
        let inst = random_instance(&mut replicate_rng(47, trial), &small(), RefinementShape::Grouped, false).unwrap();
        for p in [&inst.coarse, &inst.fine] {
            let cdf = cdf_sup_censored(&inst.f, p).unwrap();
            let outcomes = joint_outcomes(&all_draws(&inst.f, p));
            for t in probes.iter().chain(cdf.breakpoints()) {
                assert_eq!(cdf.eval(t), censored_sup_cdf(&outcomes, t), "trial {trial}, t = {t}");
            }
        }
    }
}

#[test]
fn order_verdicts_match_definitions() {
    for trial in 0..30 {
        let inst = random_instance(&mut replicate_rng(53, trial), &small(), RefinementShape::Grouped, false).unwrap();
        let (c, b) = (&inst.coarse, &inst.fine);
        let (ic, ib) = (dist_integral(&inst.f, c).unwrap(), dist_integral(&inst.f, b).unwrap());
        assert_eq!(dominates_cx(&ib, &ic), cx_by_stop_loss(&as_map(&ib), &as_map(&ic)));
        assert_eq!(dominates_cx(&ic, &ib), cx_by_stop_loss(&as_map(&ic), &as_map(&ib)));
        let (sc, sb) = (dist_sup(&inst.f, c).unwrap(), dist_sup(&inst.f, b).unwrap());
        assert_eq!(dominates_st(&sc, &sb), st_by_survival(&as_map(&sc), &as_map(&sb)));
        assert_eq!(dominates_st(&sb, &sc), st_by_survival(&as_map(&sb), &as_map(&sc)));
    }
}

#[test]
fn noiseless_variance_matches_enumeration() {
    let zero = q(0, 1);
    for trial in 0..20 {
        let inst = random_instance(&mut replicate_rng(59, trial), &small(), RefinementShape::Grouped, false).unwrap();
        for p in [&inst.coarse, &inst.fine] {
            assert_eq!(variance_integral_noisy(&inst.f, p, &zero).unwrap(), variance(&integral_law(&inst.f, p)));
            let noisy = variance_integral_noisy(&inst.f, p, &q(1, 4)).unwrap();
            let n = q(p.n() as i64, 1);
            assert_eq!(noisy, variance(&integral_law(&inst.f, p)) + q(1, 4) / n);
        }
    }
}
