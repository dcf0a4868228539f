//! Evaluation toolkit for computational dating of historical manuscripts.
//!
//! Dates are century floats (`1.50` is the year 150, BCE negative). The crate
//! scores point predictions (MAE, MSE, Error Time Window accuracy, per-document
//! distributions), evaluates interval answers from human experts with their
//! agreement indices, and runs seeded training protocols over pluggable
//! reference predictors.

pub mod agreement;
pub mod harness;
pub mod metrics;
pub mod model;

pub use model::{
    century_to_year, interval_midpoint, year_to_century, CenturyFloat, DateInterval, LineKey,
    PointRule,
};
pub mod io;
pub mod predictors;
pub mod report;
