//! Naive reference implementations used to cross-check the library.
//!
//! Each follows the textbook definition as literally as possible, trading
//! speed for obviousness: two-pass moments, O(n^2) ranking, and kappa via
//! explicit rater-pair agreement counts.

#![allow(dead_code)]

use rand::{Rng, RngExt};

/// Inclusive-boundary tolerance shared with the library.
pub const SLACK: f64 = 1e-9;

pub fn mae(p: &[f64], t: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..p.len() {
        s += (p[i] - t[i]).abs();
    }
    s / p.len() as f64
}

pub fn mse(p: &[f64], t: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..p.len() {
        s += (p[i] - t[i]) * (p[i] - t[i]);
    }
    s / p.len() as f64
}

pub fn etw_accuracy(p: &[f64], t: &[f64], alpha: f64) -> f64 {
    let mut hits = 0;
    for i in 0..p.len() {
        let lo = t[i] - alpha;
        let hi = t[i] + alpha;
        if p[i] >= lo - SLACK && p[i] <= hi + SLACK {
            hits += 1;
        }
    }
    hits as f64 / p.len() as f64
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let (mx, my) = (mean(x), mean(y));
    let n = x.len() as f64;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for i in 0..x.len() {
        cov += (x[i] - mx) * (y[i] - my) / n;
        vx += (x[i] - mx) * (x[i] - mx) / n;
        vy += (y[i] - my) * (y[i] - my) / n;
    }
    cov / (vx.sqrt() * vy.sqrt())
}

/// Rank = 1 + values strictly below + half of the other equal values.
pub fn ranks(v: &[f64]) -> Vec<f64> {
    v.iter()
        .map(|a| {
            let below = v.iter().filter(|b| *b < a).count() as f64;
            let equal = v.iter().filter(|b| *b == a).count() as f64;
            1.0 + below + (equal - 1.0) / 2.0
        })
        .collect()
}

pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    pearson(&ranks(x), &ranks(y))
}

/// `labels[item][rater]`, binary categories.
pub fn fleiss_kappa(labels: &[Vec<bool>]) -> f64 {
    let n_items = labels.len();
    let n = labels[0].len();
    let mut p_sum = 0.0;
    for row in labels {
        let mut agree = 0;
        for a in 0..n {
            for b in 0..n {
                if a != b && row[a] == row[b] {
                    agree += 1;
                }
            }
        }
        p_sum += agree as f64 / (n * (n - 1)) as f64;
    }
    let p_bar = p_sum / n_items as f64;
    let ones = labels.iter().flatten().filter(|b| **b).count() as f64;
    let p1 = ones / (n_items * n) as f64;
    let p0 = 1.0 - p1;
    let pe = p0 * p0 + p1 * p1;
    (p_bar - pe) / (1.0 - pe)
}

/// Values in centuries, sometimes rounded so that ties occur.
pub fn random_dates(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let coarse = rng.random_bool(0.3);
    (0..n)
        .map(|_| {
            let v: f64 = rng.random_range(-8.0..8.0);
            if coarse {
                (v * 2.0).round() / 2.0
            } else {
                v
            }
        })
        .collect()
}

pub fn has_variance(v: &[f64]) -> bool {
    v.iter().any(|x| *x != v[0])
}
