//! Time-axis discretisation of interval answers.
//!
//! Bin `b` spans the closed year range `[origin + b*step, origin + (b+1)*step]`.
//! A bin is set when the answer overlaps it over a positive length. A point
//! answer (`lo == hi`) sets every bin whose closed span contains it, so a
//! point on a shared boundary sets both neighbours.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::DateInterval;

pub const DEFAULT_STEP_YEARS: i64 = 25;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("grid step must be > 0, got {0}")]
    BadStep(i64),
    #[error("grid needs at least one bin")]
    NoBins,
    #[error("answer [{lo}, {hi}] (years) lies outside grid [{start}, {end}]")]
    OutsideGrid { lo: f64, hi: f64, start: i64, end: i64 },
    #[error("no dates to cover")]
    NothingToCover,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    pub origin: i64,
    pub step: i64,
    pub n_bins: usize,
}

/// Years rounded to 1e-6 so `-1.3 * 100` compares as `-130`.
fn snap_years(centuries: f64) -> f64 {
    (centuries * 100.0 * 1e6).round() / 1e6
}

impl TimeGrid {
    pub fn new(origin: i64, step: i64, n_bins: usize) -> Result<Self, GridError> {
        if step <= 0 {
            return Err(GridError::BadStep(step));
        }
        if n_bins == 0 {
            return Err(GridError::NoBins);
        }
        Ok(Self {
            origin,
            step,
            n_bins,
        })
    }

    /// Tightest multiple-of-step range covering every given year.
    pub fn covering(years: impl IntoIterator<Item = f64>, step: i64) -> Result<Self, GridError> {
        if step <= 0 {
            return Err(GridError::BadStep(step));
        }
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for y in years {
            lo = lo.min(y);
            hi = hi.max(y);
        }
        if !lo.is_finite() || !hi.is_finite() {
            return Err(GridError::NothingToCover);
        }
        let s = step as f64;
        let origin = (lo / s).floor() as i64 * step;
        let end = (hi / s).ceil() as i64 * step;
        let n_bins = (((end - origin) / step) as usize).max(1);
        Self::new(origin, step, n_bins)
    }

    pub fn end(&self) -> i64 {
        self.origin + self.step * self.n_bins as i64
    }

    pub fn bin_span(&self, b: usize) -> (f64, f64) {
        let lo = self.origin + self.step * b as i64;
        (lo as f64, (lo + self.step) as f64)
    }
}

/// One flag per bin; see the module docs for the overlap rule.
pub fn discretize_answer(answer: &DateInterval, grid: &TimeGrid) -> Result<Vec<bool>, GridError> {
    let lo = snap_years(answer.lo().value());
    let hi = snap_years(answer.hi().value());
    if lo < grid.origin as f64 || hi > grid.end() as f64 {
        return Err(GridError::OutsideGrid {
            lo,
            hi,
            start: grid.origin,
            end: grid.end(),
        });
    }
    Ok((0..grid.n_bins)
        .map(|b| {
            let (bl, bh) = grid.bin_span(b);
            if lo == hi {
                bl <= lo && lo <= bh
            } else {
                lo < bh && hi > bl
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iv(lo: i64, hi: i64) -> DateInterval {
        DateInterval::from_years(lo, hi).unwrap()
    }

    fn ones(v: &[bool]) -> Vec<usize> {
        v.iter().enumerate().filter(|(_, b)| **b).map(|(i, _)| i).collect()
    }

    #[test]
    fn exact_bin_span_sets_one_bin() {
        let g = TimeGrid::new(-300, 25, 8).unwrap();
        let bits = discretize_answer(&iv(-250, -225), &g).unwrap();
        assert_eq!(ones(&bits), vec![2]);
    }

    #[test]
    fn two_and_a_half_bins_sets_three() {
        let g = TimeGrid::new(-300, 25, 8).unwrap();
        let bits = discretize_answer(&iv(-250, -188), &g).unwrap();
        assert_eq!(ones(&bits), vec![2, 3, 4]);
    }

    #[test]
    fn point_on_boundary_sets_both_neighbours() {
        let g = TimeGrid::new(-300, 25, 8).unwrap();
        let bits = discretize_answer(&iv(-200, -200), &g).unwrap();
        assert_eq!(ones(&bits), vec![3, 4]);
        let bits = discretize_answer(&iv(-210, -210), &g).unwrap();
        assert_eq!(ones(&bits), vec![3]);
    }

    #[test]
    fn grid_edges() {
        let g = TimeGrid::new(-300, 25, 8).unwrap();
        assert_eq!(ones(&discretize_answer(&iv(-300, -300), &g).unwrap()), vec![0]);
        assert_eq!(ones(&discretize_answer(&iv(-101, -100), &g).unwrap()), vec![7]);
        assert!(matches!(
            discretize_answer(&iv(-301, -250), &g),
            Err(GridError::OutsideGrid { .. })
        ));
        assert!(discretize_answer(&iv(-150, -99), &g).is_err());
    }

    #[test]
    fn non_multiple_step_boundaries() {
        let g = TimeGrid::new(-140, 10, 4).unwrap();
        assert_eq!(ones(&discretize_answer(&iv(-130, -120), &g).unwrap()), vec![1]);
    }

    #[test]
    fn covering_grid() {
        let g = TimeGrid::covering([-262.0, -110.0, -130.0], 25).unwrap();
        assert_eq!((g.origin, g.end(), g.n_bins), (-275, -100, 7));
        let g = TimeGrid::covering([-150.0], 25).unwrap();
        assert_eq!((g.origin, g.n_bins), (-150, 1));
        assert_eq!(TimeGrid::covering(std::iter::empty(), 25), Err(GridError::NothingToCover));
        assert_eq!(TimeGrid::new(0, 0, 1), Err(GridError::BadStep(0)));
    }
}
