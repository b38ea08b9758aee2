//! Point regressors behind one contract, residual extraction and point metrics.

pub mod gbt;
mod metrics;
pub mod ols;

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::data::{DayVector, FeatureMatrix, INTERVALS_PER_DAY};
use crate::error::{Error, Result};

pub use gbt::{BoostedTrees, TreeParams};
pub use metrics::{point_metrics, PointMetrics};
pub use ols::LinearModel;

/// Which regressor to fit and with what hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RegressorSpec {
    LeastSquares {
        #[serde(default = "default_true")]
        fit_intercept: bool,
    },
    BoostedTrees(TreeParams),
}

fn default_true() -> bool {
    true
}

impl RegressorSpec {
    pub fn least_squares() -> Self {
        RegressorSpec::LeastSquares { fit_intercept: true }
    }

    pub fn boosted_trees() -> Self {
        RegressorSpec::BoostedTrees(TreeParams::default())
    }

    /// Short label used in reports (`ols` / `gbt`).
    pub fn label(&self) -> &'static str {
        match self {
            RegressorSpec::LeastSquares { .. } => "ols",
            RegressorSpec::BoostedTrees(_) => "gbt",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            RegressorSpec::LeastSquares { .. } => Ok(()),
            RegressorSpec::BoostedTrees(p) => p.validate(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Learned {
    LeastSquares(LinearModel),
    BoostedTrees(BoostedTrees),
}

/// A fitted regressor; immutable and deterministic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub spec: RegressorSpec,
    pub arity: usize,
    pub learned: Learned,
}

fn check_finite(rows: &FeatureMatrix, what: &str) -> Result<()> {
    if rows.rows().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("{what} features")));
    }
    Ok(())
}

pub fn fit(spec: &RegressorSpec, rows: &FeatureMatrix) -> Result<FittedModel> {
    spec.validate()?;
    if rows.len() < 2 {
        return Err(Error::Empty(format!(
            "need at least 2 training rows, got {}",
            rows.len()
        )));
    }
    check_finite(rows, "training")?;
    if rows.targets().iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("training targets".into()));
    }
    let learned = match spec {
        RegressorSpec::LeastSquares { fit_intercept } => {
            Learned::LeastSquares(ols::fit(rows, *fit_intercept)?)
        }
        RegressorSpec::BoostedTrees(params) => Learned::BoostedTrees(gbt::fit(rows, params)?),
    };
    Ok(FittedModel {
        spec: *spec,
        arity: rows.arity(),
        learned,
    })
}

impl FittedModel {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        match &self.learned {
            Learned::LeastSquares(m) => m.predict_row(row),
            Learned::BoostedTrees(m) => m.predict_row(row),
        }
    }

    pub fn predict(&self, rows: &FeatureMatrix) -> Result<Vec<f64>> {
        if rows.arity() != self.arity {
            return Err(Error::ArityMismatch {
                expected: self.arity,
                found: rows.arity(),
            });
        }
        check_finite(rows, "prediction")?;
        Ok(rows.rows().map(|r| self.predict_row(r)).collect())
    }

    pub fn save_json<W: Write>(&self, writer: W) -> Result<()> {
        serde_json::to_writer_pretty(
            writer,
            &ModelDocument {
                format_version: MODEL_FORMAT_VERSION,
                model: self.clone(),
            },
        )?;
        Ok(())
    }

    pub fn load_json<R: Read>(reader: R) -> Result<Self> {
        let doc: ModelDocument = serde_json::from_reader(reader)?;
        if doc.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Version {
                expected: MODEL_FORMAT_VERSION,
                found: doc.format_version,
            });
        }
        let learned_arity = match &doc.model.learned {
            Learned::LeastSquares(m) => Some(m.coefficients.len()),
            Learned::BoostedTrees(_) => None,
        };
        if learned_arity.is_some_and(|a| a != doc.model.arity) {
            return Err(Error::ArityMismatch {
                expected: doc.model.arity,
                found: learned_arity.unwrap_or_default(),
            });
        }
        Ok(doc.model)
    }
}

const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelDocument {
    format_version: u32,
    model: FittedModel,
}

/// Per-day residual vectors `z = y - ŷ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualMatrix {
    pub days: Vec<DayVector>,
}

/// Residuals of `model` on rows grouped into whole days in slot order.
pub fn residual_matrix(model: &FittedModel, rows: &FeatureMatrix) -> Result<ResidualMatrix> {
    let predicted = model.predict(rows)?;
    residuals_from_predictions(rows, &predicted)
}

/// Split `y - ŷ` into day vectors, checking that rows form whole days.
pub fn residuals_from_predictions(rows: &FeatureMatrix, predicted: &[f64]) -> Result<ResidualMatrix> {
    if !rows.len().is_multiple_of(INTERVALS_PER_DAY) {
        return Err(Error::PartialDay(format!(
            "{} rows do not form whole days",
            rows.len()
        )));
    }
    let mut days = Vec::with_capacity(rows.len() / INTERVALS_PER_DAY);
    let chunks = rows
        .labels()
        .chunks_exact(INTERVALS_PER_DAY)
        .zip(rows.targets().chunks_exact(INTERVALS_PER_DAY))
        .zip(predicted.chunks_exact(INTERVALS_PER_DAY));
    for ((labels, y), yhat) in chunks {
        let day = labels[0].0;
        if labels.iter().enumerate().any(|(s, &(d, slot))| d != day || slot != s) {
            return Err(Error::PartialDay(format!("day {day} rows are not a full ordered day")));
        }
        let values: Vec<f64> = y.iter().zip(yhat).map(|(a, b)| a - b).collect();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("residuals of day {day}")));
        }
        days.push(DayVector { day, values });
    }
    Ok(ResidualMatrix { days })
}
