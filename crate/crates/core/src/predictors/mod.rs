//! Pluggable date predictors.
//!
//! A [`Predictor`] is fitted on feature vectors with century-float targets and
//! then predicts one date per line. `continue_fit` extends a fitted predictor
//! with more data, which is how the transfer protocol "further trains" a
//! pretrained model. The reference implementations are memory based, so
//! continuing means appending to what was seen before.

pub mod features;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::CenturyFloat;

pub use features::{extract_features, otsu_threshold, FeatureVector, GrayImage, FEATURE_DIMS};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PredictorError {
    #[error("predict called before fit")]
    NotFitted,
    #[error("empty training set")]
    EmptyTrainingSet,
    #[error("{features} feature vectors but {targets} targets")]
    LengthMismatch { features: usize, targets: usize },
    #[error("feature dimension {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("k = {k} exceeds training size {n}")]
    KTooLarge { k: usize, n: usize },
    #[error("k must be >= 1")]
    ZeroK,
}

pub trait Predictor {
    /// Discards any previous state and trains on the given data.
    fn fit(&mut self, x: &[FeatureVector], y: &[CenturyFloat]) -> Result<(), PredictorError>;

    /// Adds data to an already fitted predictor (or fits from scratch).
    fn continue_fit(&mut self, x: &[FeatureVector], y: &[CenturyFloat])
        -> Result<(), PredictorError>;

    fn predict(&self, x: &FeatureVector) -> Result<CenturyFloat, PredictorError>;

    fn predict_all(&self, xs: &[FeatureVector]) -> Result<Vec<CenturyFloat>, PredictorError> {
        xs.iter().map(|x| self.predict(x)).collect()
    }
}

fn check_xy(x: &[FeatureVector], y: &[CenturyFloat]) -> Result<(), PredictorError> {
    if x.len() != y.len() {
        return Err(PredictorError::LengthMismatch {
            features: x.len(),
            targets: y.len(),
        });
    }
    Ok(())
}

/// Predicts the mean training date for every input.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MeanPredictor {
    sum: f64,
    count: usize,
}

impl MeanPredictor {
    pub fn new() -> Self {
        Self::default()
    }
}

impl Predictor for MeanPredictor {
    fn fit(&mut self, x: &[FeatureVector], y: &[CenturyFloat]) -> Result<(), PredictorError> {
        check_xy(x, y)?;
        if y.is_empty() {
            return Err(PredictorError::EmptyTrainingSet);
        }
        *self = Self::default();
        self.continue_fit(x, y)
    }

    fn continue_fit(
        &mut self,
        x: &[FeatureVector],
        y: &[CenturyFloat],
    ) -> Result<(), PredictorError> {
        check_xy(x, y)?;
        if self.count == 0 && y.is_empty() {
            return Err(PredictorError::EmptyTrainingSet);
        }
        self.sum += y.iter().map(|c| c.value()).sum::<f64>();
        self.count += y.len();
        Ok(())
    }

    fn predict(&self, _x: &FeatureVector) -> Result<CenturyFloat, PredictorError> {
        if self.count == 0 {
            return Err(PredictorError::NotFitted);
        }
        Ok(CenturyFloat::new(self.sum / self.count as f64).expect("mean of finite values"))
    }
}

/// k-nearest-neighbour regression: the mean date of the `k` training vectors
/// closest in Euclidean distance. Equal distances favour earlier insertion.
#[derive(Debug, Clone, PartialEq)]
pub struct KnnRegressor {
    k: usize,
    x: Vec<FeatureVector>,
    y: Vec<f64>,
}

impl KnnRegressor {
    pub fn new(k: usize) -> Result<Self, PredictorError> {
        if k == 0 {
            return Err(PredictorError::ZeroK);
        }
        Ok(Self {
            k,
            x: Vec::new(),
            y: Vec::new(),
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    fn dims(&self) -> Option<usize> {
        self.x.first().map(FeatureVector::len)
    }
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum()
}

impl Predictor for KnnRegressor {
    fn fit(&mut self, x: &[FeatureVector], y: &[CenturyFloat]) -> Result<(), PredictorError> {
        check_xy(x, y)?;
        if x.is_empty() {
            return Err(PredictorError::EmptyTrainingSet);
        }
        self.x.clear();
        self.y.clear();
        self.continue_fit(x, y)
    }

    fn continue_fit(
        &mut self,
        x: &[FeatureVector],
        y: &[CenturyFloat],
    ) -> Result<(), PredictorError> {
        check_xy(x, y)?;
        if self.x.is_empty() && x.is_empty() {
            return Err(PredictorError::EmptyTrainingSet);
        }
        let expected = self.dims().unwrap_or_else(|| x[0].len());
        if let Some(bad) = x.iter().find(|f| f.len() != expected) {
            return Err(PredictorError::DimensionMismatch {
                expected,
                got: bad.len(),
            });
        }
        self.x.extend_from_slice(x);
        self.y.extend(y.iter().map(|c| c.value()));
        Ok(())
    }

    fn predict(&self, query: &FeatureVector) -> Result<CenturyFloat, PredictorError> {
        let dims = self.dims().ok_or(PredictorError::NotFitted)?;
        if query.len() != dims {
            return Err(PredictorError::DimensionMismatch {
                expected: dims,
                got: query.len(),
            });
        }
        if self.k > self.x.len() {
            return Err(PredictorError::KTooLarge {
                k: self.k,
                n: self.x.len(),
            });
        }
        let mut order: Vec<(f64, usize)> = self
            .x
            .iter()
            .enumerate()
            .map(|(i, f)| (squared_distance(f.values(), query.values()), i))
            .collect();
        // (distance, index) ordering is total, so the selection is unique
        order.select_nth_unstable_by(self.k - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut nearest: Vec<usize> = order[..self.k].iter().map(|&(_, i)| i).collect();
        nearest.sort_unstable();
        let sum: f64 = nearest.iter().map(|&i| self.y[i]).sum();
        Ok(CenturyFloat::new(sum / self.k as f64).expect("mean of finite values"))
    }
}

/// Predictor choice as written in experiment configs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum PredictorConfig {
    Mean,
    Knn { k: usize },
}

impl PredictorConfig {
    pub fn build(&self) -> Result<ReferencePredictor, PredictorError> {
        Ok(match *self {
            PredictorConfig::Mean => ReferencePredictor::Mean(MeanPredictor::new()),
            PredictorConfig::Knn { k } => ReferencePredictor::Knn(KnnRegressor::new(k)?),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ReferencePredictor {
    Mean(MeanPredictor),
    Knn(KnnRegressor),
}

impl Predictor for ReferencePredictor {
    fn fit(&mut self, x: &[FeatureVector], y: &[CenturyFloat]) -> Result<(), PredictorError> {
        match self {
            ReferencePredictor::Mean(p) => p.fit(x, y),
            ReferencePredictor::Knn(p) => p.fit(x, y),
        }
    }

    fn continue_fit(
        &mut self,
        x: &[FeatureVector],
        y: &[CenturyFloat],
    ) -> Result<(), PredictorError> {
        match self {
            ReferencePredictor::Mean(p) => p.continue_fit(x, y),
            ReferencePredictor::Knn(p) => p.continue_fit(x, y),
        }
    }

    fn predict(&self, x: &FeatureVector) -> Result<CenturyFloat, PredictorError> {
        match self {
            ReferencePredictor::Mean(p) => p.predict(x),
            ReferencePredictor::Knn(p) => p.predict(x),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::year_to_century;

    fn fv(v: &[f64]) -> FeatureVector {
        FeatureVector::new(v.to_vec()).unwrap()
    }

    fn cf(v: f64) -> CenturyFloat {
        CenturyFloat::new(v).unwrap()
    }

    #[test]
    fn mean_predictor_examples() {
        let mut p = MeanPredictor::new();
        let x = [fv(&[0.0]), fv(&[1.0])];
        p.fit(&x, &[year_to_century(-200).unwrap(), year_to_century(-100).unwrap()])
            .unwrap();
        assert_eq!(p.predict(&x[0]).unwrap().value(), -1.5);

        p.fit(&x[..1], &[year_to_century(-130).unwrap()]).unwrap();
        assert_eq!(p.predict(&x[0]).unwrap().value(), -1.3);

        p.continue_fit(&x, &[cf(-2.0), cf(-1.0)]).unwrap();
        assert!((p.predict(&x[0]).unwrap().value() - (-1.3 - 2.0 - 1.0) / 3.0).abs() < 1e-12);
    }

    #[test]
    fn predict_before_fit_fails() {
        assert_eq!(MeanPredictor::new().predict(&fv(&[0.0])), Err(PredictorError::NotFitted));
        assert_eq!(
            KnnRegressor::new(1).unwrap().predict(&fv(&[0.0])),
            Err(PredictorError::NotFitted)
        );
        assert_eq!(MeanPredictor::new().fit(&[], &[]), Err(PredictorError::EmptyTrainingSet));
    }

    #[test]
    fn knn_examples() {
        let x = [fv(&[0.0, 0.0]), fv(&[1.0, 0.0]), fv(&[5.0, 5.0])];
        let y = [cf(-2.0), cf(-1.0), cf(0.5)];
        let mut k1 = KnnRegressor::new(1).unwrap();
        k1.fit(&x, &y).unwrap();
        assert_eq!(k1.predict(&x[2]).unwrap().value(), 0.5);

        let mut k2 = KnnRegressor::new(2).unwrap();
        k2.fit(&x, &y).unwrap();
        assert_eq!(k2.predict(&fv(&[0.4, 0.0])).unwrap().value(), -1.5);

        let mut k4 = KnnRegressor::new(4).unwrap();
        k4.fit(&x, &y).unwrap();
        assert_eq!(k4.predict(&x[0]), Err(PredictorError::KTooLarge { k: 4, n: 3 }));
        assert_eq!(KnnRegressor::new(0), Err(PredictorError::ZeroK));
    }

    #[test]
    fn knn_ties_prefer_earlier_items() {
        let x = [fv(&[1.0]), fv(&[-1.0]), fv(&[1.0])];
        let y = [cf(-3.0), cf(-2.0), cf(-1.0)];
        let mut k = KnnRegressor::new(1).unwrap();
        k.fit(&x, &y).unwrap();
        assert_eq!(k.predict(&fv(&[0.0])).unwrap().value(), -3.0);
        let mut k = KnnRegressor::new(2).unwrap();
        k.fit(&x, &y).unwrap();
        assert_eq!(k.predict(&fv(&[1.0])).unwrap().value(), -2.0);
    }

    #[test]
    fn knn_dimension_checks() {
        let mut k = KnnRegressor::new(1).unwrap();
        k.fit(&[fv(&[0.0, 1.0])], &[cf(-1.0)]).unwrap();
        assert!(matches!(
            k.continue_fit(&[fv(&[0.0])], &[cf(-1.0)]),
            Err(PredictorError::DimensionMismatch { .. })
        ));
        assert!(matches!(
            k.predict(&fv(&[0.0])),
            Err(PredictorError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn knn_full_k_is_training_mean() {
        let x: Vec<FeatureVector> = (0..7).map(|i| fv(&[i as f64, (i * i) as f64])).collect();
        let y: Vec<CenturyFloat> = (0..7).map(|i| cf(-3.0 + 0.3 * i as f64)).collect();
        let mut knn = KnnRegressor::new(7).unwrap();
        knn.fit(&x, &y).unwrap();
        let mut mean = MeanPredictor::new();
        mean.fit(&x, &y).unwrap();
        let a = knn.predict(&fv(&[2.5, 1.0])).unwrap().value();
        let b = mean.predict(&fv(&[2.5, 1.0])).unwrap().value();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn config_builds_predictors() {
        let c: PredictorConfig = serde_json::from_str(r#"{"kind":"knn","k":3}"#).unwrap();
        assert_eq!(c, PredictorConfig::Knn { k: 3 });
        assert!(matches!(c.build().unwrap(), ReferencePredictor::Knn(_)));
        let c: PredictorConfig = serde_json::from_str(r#"{"kind":"mean"}"#).unwrap();
        assert!(matches!(c.build().unwrap(), ReferencePredictor::Mean(_)));
        assert!(serde_json::from_str::<PredictorConfig>(r#"{"kind":"knn","k":0}"#)
            .unwrap()
            .build()
            .is_err());
    }
}
