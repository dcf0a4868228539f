mod support;

use papyrodate::agreement::{fleiss_kappa, pearson, spearman};
use papyrodate::metrics::{etw_accuracy, mae, mse};
use papyrodate::CenturyFloat;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::brute;

const INSTANCES: usize = 200;
const TOL: f64 = 1e-9;

fn cf(v: &[f64]) -> Vec<CenturyFloat> {
    v.iter().map(|x| CenturyFloat::new(*x).unwrap()).collect()
}

#[test]
fn point_metrics_match_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..INSTANCES {
        let n = rng.random_range(2..=50);
        let p = brute::random_dates(&mut rng, n);
        let t = brute::random_dates(&mut rng, n);
        assert!((mae(&cf(&p), &cf(&t)).unwrap() - brute::mae(&p, &t)).abs() <= TOL);
        assert!((mse(&cf(&p), &cf(&t)).unwrap() - brute::mse(&p, &t)).abs() <= TOL);
        for _ in 0..5 {
            let alpha = rng.random_range(0.0..6.0);
            let got = etw_accuracy(&cf(&p), &cf(&t), alpha).unwrap().accuracy;
            assert!((got - brute::etw_accuracy(&p, &t, alpha)).abs() <= TOL);
        }
    }
}

#[test]
fn correlations_match_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut checked = 0;
    while checked < INSTANCES {
        let n = rng.random_range(2..=50);
        let x = brute::random_dates(&mut rng, n);
        let y: Vec<f64> = if rng.random_bool(0.5) {
            x.iter().map(|v| v * 0.7 + rng.random_range(-1.0..1.0)).collect()
        } else {
            brute::random_dates(&mut rng, n)
        };
        if !brute::has_variance(&x) || !brute::has_variance(&y) {
            assert!(pearson(&x, &y).is_err());
            continue;
        }
        assert!((pearson(&x, &y).unwrap() - brute::pearson(&x, &y)).abs() <= TOL);
        assert!((spearman(&x, &y).unwrap() - brute::spearman(&x, &y)).abs() <= TOL);
        checked += 1;
    }
}

#[test]
fn kappa_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut checked = 0;
    while checked < INSTANCES {
        let items = rng.random_range(2..=50);
        let raters = rng.random_range(2..=8);
        let bias: f64 = rng.random_range(0.05..0.95);
        let labels: Vec<Vec<bool>> = (0..items)
            .map(|_| (0..raters).map(|_| rng.random_bool(bias)).collect())
            .collect();
        let ones = labels.iter().flatten().filter(|b| **b).count();
        if ones == 0 || ones == items * raters {
            assert!(fleiss_kappa(&labels).is_err());
            continue;
        }
        assert!((fleiss_kappa(&labels).unwrap() - brute::fleiss_kappa(&labels)).abs() <= TOL);
        checked += 1;
    }
}

#[test]
fn kappa_hand_fixture() {
    // 4 items, 3 raters; P = [1, 1/3, 1, 1/3] so P_bar = 2/3; six of twelve
    // labels are 1 so Pe = 1/2 and kappa = (2/3 - 1/2) / (1/2) = 1/3
    let labels = vec![
        vec![true, true, true],
        vec![true, true, false],
        vec![false, false, false],
        vec![true, false, false],
    ];
    let want = 1.0 / 3.0;
    assert!((fleiss_kappa(&labels).unwrap() - want).abs() <= 1e-12);
    assert!((brute::fleiss_kappa(&labels) - want).abs() <= 1e-12);
}
