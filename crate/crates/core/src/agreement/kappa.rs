//! Fleiss' kappa for a fixed number of raters per item.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KappaError {
    #[error("no items to rate")]
    NoItems,
    #[error("need at least 2 raters per item, got {0}")]
    TooFewRaters(usize),
    #[error("item {item} has {got} ratings, expected {expected}")]
    UnequalRaters {
        item: usize,
        got: usize,
        expected: usize,
    },
    #[error("expected agreement is 1 (every rating falls in one category); kappa undefined")]
    Degenerate,
}

/// Kappa from per-item category counts: `counts[i][j]` raters put item `i`
/// in category `j`. Every row must sum to the same rater count `n >= 2`.
pub fn fleiss_kappa_counts(counts: &[Vec<usize>]) -> Result<f64, KappaError> {
    let first = counts.first().ok_or(KappaError::NoItems)?;
    let n: usize = first.iter().sum();
    if n < 2 {
        return Err(KappaError::TooFewRaters(n));
    }
    let n_categories = counts.iter().map(Vec::len).max().unwrap_or(0);
    let mut totals = vec![0usize; n_categories];
    let mut p_bar = 0.0;
    for (item, row) in counts.iter().enumerate() {
        let got: usize = row.iter().sum();
        if got != n {
            return Err(KappaError::UnequalRaters {
                item,
                got,
                expected: n,
            });
        }
        let sq: usize = row.iter().map(|c| c * c).sum();
        p_bar += (sq - n) as f64 / (n * (n - 1)) as f64;
        for (j, c) in row.iter().enumerate() {
            totals[j] += c;
        }
    }
    let n_items = counts.len() as f64;
    p_bar /= n_items;
    let all = n_items * n as f64;
    let p_e: f64 = totals.iter().map(|&t| (t as f64 / all).powi(2)).sum();
    if p_e >= 1.0 {
        return Err(KappaError::Degenerate);
    }
    Ok((p_bar - p_e) / (1.0 - p_e))
}

/// Kappa for binary labels; `labels[i][r]` is rater `r`'s label for item `i`.
pub fn fleiss_kappa(labels: &[Vec<bool>]) -> Result<f64, KappaError> {
    let counts: Vec<Vec<usize>> = labels
        .iter()
        .map(|row| {
            let ones = row.iter().filter(|b| **b).count();
            vec![row.len() - ones, ones]
        })
        .collect();
    fleiss_kappa_counts(&counts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows(v: &[&[u8]]) -> Vec<Vec<bool>> {
        v.iter().map(|r| r.iter().map(|b| *b == 1).collect()).collect()
    }

    #[test]
    fn identical_raters_is_one() {
        let l = rows(&[&[1, 1, 1], &[0, 0, 0], &[1, 1, 1], &[0, 0, 0], &[0, 0, 0]]);
        assert_eq!(fleiss_kappa(&l).unwrap(), 1.0);
    }

    #[test]
    fn hand_fixture_four_items_three_raters() {
        // P_i = 1, 1/3, 1, 1/3 -> P = 2/3 ; p1 = p0 = 1/2 -> Pe = 1/2 ; kappa = 1/3
        let l = rows(&[&[1, 1, 1], &[1, 1, 0], &[0, 0, 0], &[1, 0, 0]]);
        assert!((fleiss_kappa(&l).unwrap() - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn single_category_is_degenerate() {
        let l = rows(&[&[1, 1], &[1, 1]]);
        assert_eq!(fleiss_kappa(&l), Err(KappaError::Degenerate));
    }

    #[test]
    fn shape_errors() {
        assert_eq!(fleiss_kappa(&[]), Err(KappaError::NoItems));
        assert_eq!(fleiss_kappa(&rows(&[&[1]])), Err(KappaError::TooFewRaters(1)));
        assert_eq!(
            fleiss_kappa(&rows(&[&[1, 0], &[1, 0, 1]])),
            Err(KappaError::UnequalRaters {
                item: 1,
                got: 3,
                expected: 2
            })
        );
    }

    #[test]
    fn multi_category_counts() {
        // classic textbook layout, 3 categories, 4 raters
        let counts = vec![vec![4, 0, 0], vec![0, 4, 0], vec![2, 2, 0], vec![0, 0, 4]];
        // P_i: 1, 1, (4+4-4)/12 = 1/3, 1 -> P = 10/12
        // totals 6, 6, 4 of 16 -> Pe = (36 + 36 + 16) / 256 = 88/256
        let p = 10.0 / 12.0;
        let pe = 88.0 / 256.0;
        let expected = (p - pe) / (1.0 - pe);
        assert!((fleiss_kappa_counts(&counts).unwrap() - expected).abs() < 1e-12);
    }
}
