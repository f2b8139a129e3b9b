//! The two static forecasters: last-value naive and the feedforward regressor.

mod features;
mod mlp;
mod retrain;

use std::fs;
use std::path::Path;

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use features::{
    build_features, cyclical_features, feature_dim, lag_offset, FeatureVector, FIXED_FEATURES,
    HOURLY_LAGS, HOURS_PER_WEEK, REQUIRED_HISTORY, WEEKLY_LAGS,
};
pub use mlp::{
    loss_gradient, mlp_forward, mlp_train, MlpGradient, MlpParameters, OutputInit, Standardizer,
    TargetScaling, TrainingConfig, DEFAULT_DROPOUT, DEFAULT_HIDDEN,
};
pub use retrain::{yearly_retrain_plan, RetrainStep};

/// Naive forecast: the most recent observed demand.
pub fn naive_predict(history: &[f64]) -> Result<f64> {
    history
        .last()
        .copied()
        .ok_or_else(|| Error::contract("naive forecast needs a non-empty history"))
}

const MODEL_FORMAT: &str = "eia-mlp";
const MODEL_VERSION: u32 = 1;

/// Trained feedforward demand model over [`FeatureVector`] inputs.
///
/// Parameters act on raw (unscaled) features and predict raw demand; any
/// scaling used during training is folded into the weights.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexModel {
    pub params: MlpParameters,
    pub num_zones: usize,
    pub seed: u64,
}

#[derive(Serialize, Deserialize)]
struct ModelDocument {
    format: String,
    version: u32,
    input_dim: usize,
    hidden_dim: usize,
    num_zones: usize,
    seed: u64,
    dropout_rate: f64,
    params: MlpParameters,
}

impl ComplexModel {
    /// Fits the model on flattened feature vectors and their targets.
    ///
    /// The demand-valued lag columns are standardized with the statistics of
    /// the training targets before gradient descent.
    pub fn fit(samples: &[(Vec<f64>, f64)], num_zones: usize, config: &TrainingConfig) -> Result<Self> {
        let dim = feature_dim(num_zones);
        if let Some((x, _)) = samples.iter().find(|(x, _)| x.len() != dim) {
            return Err(Error::contract(format!(
                "feature vector has {} entries, expected {dim}",
                x.len()
            )));
        }
        let lags = lag_offset(num_zones)..lag_offset(num_zones) + HOURLY_LAGS + WEEKLY_LAGS;
        let scaler = Standardizer::fit(samples.iter().map(|(_, t)| *t));
        let scaled: Vec<(Vec<f64>, f64)> = samples
            .iter()
            .map(|(x, t)| {
                let mut x = x.clone();
                for v in &mut x[lags.clone()] {
                    *v = scaler.apply(*v);
                }
                (x, *t)
            })
            .collect();
        let mut params = mlp_train(&scaled, config)?;

        // w * (x - m) / s  ==  (w / s) * x - w * m / s
        for j in 0..params.hidden_dim {
            let row = j * params.input_dim;
            let mut shift = 0.0;
            for c in lags.clone() {
                let w = params.weights_in[row + c];
                shift += w * scaler.mean / scaler.std;
                params.weights_in[row + c] = w / scaler.std;
            }
            params.bias_in[j] -= shift;
        }
        params.validate()?;
        Ok(Self {
            params,
            num_zones,
            seed: config.seed,
        })
    }

    /// Forecast from an already flattened feature vector, floored at zero.
    pub fn predict_features(&self, x: &[f64]) -> Result<f64> {
        Ok(mlp_forward(&self.params, x)?.max(0.0))
    }

    /// Forecast for hour `timestamp` given the zone's prior demand.
    pub fn predict(&self, history: &[f64], timestamp: NaiveDateTime, zone_index: usize) -> Result<f64> {
        let f = build_features(history, timestamp, zone_index, self.num_zones)?;
        self.predict_features(&f.to_vec())
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = ModelDocument {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            input_dim: self.params.input_dim,
            hidden_dim: self.params.hidden_dim,
            num_zones: self.num_zones,
            seed: self.seed,
            dropout_rate: self.params.dropout_rate,
            params: self.params.clone(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ModelDocument = serde_json::from_str(text)?;
        if doc.format != MODEL_FORMAT || doc.version != MODEL_VERSION {
            return Err(Error::Parse {
                location: "model document".into(),
                message: format!("unsupported format {} v{}", doc.format, doc.version),
            });
        }
        if doc.input_dim != doc.params.input_dim
            || doc.hidden_dim != doc.params.hidden_dim
            || doc.input_dim != feature_dim(doc.num_zones)
            || doc.dropout_rate != doc.params.dropout_rate
        {
            return Err(Error::Parse {
                location: "model document".into(),
                message: "header dimensions disagree with parameters".into(),
            });
        }
        doc.params.validate()?;
        Ok(Self {
            params: doc.params,
            num_zones: doc.num_zones,
            seed: doc.seed,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;
    use proptest::prelude::*;

    #[test]
    fn naive_examples() {
        assert_eq!(naive_predict(&[1.0, 5.0, 42.0]).unwrap(), 42.0);
        assert_eq!(naive_predict(&[7.0]).unwrap(), 7.0);
        assert_eq!(naive_predict(&[3.0, 0.0]).unwrap(), 0.0);
        assert!(naive_predict(&[]).is_err());
    }

    proptest! {
        #[test]
        fn naive_is_shifted_stream(stream in prop::collection::vec(0.0f64..1e4, 2..100)) {
            for t in 1..stream.len() {
                prop_assert_eq!(naive_predict(&stream[..t]).unwrap(), stream[t - 1]);
            }
        }
    }

    fn tiny_model() -> ComplexModel {
        let start = NaiveDate::from_ymd_opt(2013, 1, 1).unwrap().and_hms_opt(0, 0, 0).unwrap();
        let demand: Vec<f64> = (0..REQUIRED_HISTORY + 200)
            .map(|t| 50.0 + 20.0 * ((t % 24) as f64 * 0.26).sin())
            .collect();
        let samples: Vec<(Vec<f64>, f64)> = (REQUIRED_HISTORY..demand.len())
            .map(|t| {
                let ts = start + chrono::Duration::hours(t as i64);
                let f = build_features(&demand[..t], ts, 0, 1).unwrap();
                (f.to_vec(), demand[t])
            })
            .collect();
        let cfg = TrainingConfig {
            hidden_dim: 8,
            epochs: 2,
            batch_size: 32,
            learning_rate: 0.01,
            seed: 5,
            ..TrainingConfig::default()
        };
        ComplexModel::fit(&samples, 1, &cfg).unwrap()
    }

    #[test]
    fn model_json_round_trip_is_lossless() {
        let m = tiny_model();
        let back = ComplexModel::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn model_json_rejects_inconsistent_header() {
        let m = tiny_model();
        let json = m.to_json().unwrap().replacen("\"num_zones\": 1", "\"num_zones\": 2", 1);
        assert!(ComplexModel::from_json(&json).is_err());
    }

    #[test]
    fn prediction_is_deterministic_and_non_negative() {
        let m = tiny_model();
        let ts = NaiveDate::from_ymd_opt(2014, 6, 3).unwrap().and_hms_opt(9, 0, 0).unwrap();
        let h = vec![0.0; REQUIRED_HISTORY];
        let a = m.predict(&h, ts, 0).unwrap();
        let b = m.predict(&h, ts, 0).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
        assert!(a >= 0.0);
    }
}
