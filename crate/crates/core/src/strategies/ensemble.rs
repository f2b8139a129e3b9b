use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

use super::{abs_errors, ErrorTrace, Strategy, SwitchEvent, TraceConfig};
use crate::error::{Error, Result};
use crate::types::ModelKind;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleWeights {
    pub simple: f64,
    pub complex: f64,
}

impl EnsembleWeights {
    pub fn dominant(&self) -> ModelKind {
        if self.simple > self.complex {
            ModelKind::Simple
        } else {
            ModelKind::Complex
        }
    }
}

/// Weights each model by `1 - share`, where `share` is its part of the summed EWMA errors.
///
/// Two zero EWMAs give equal weights.
pub fn ensemble_weights(trace_simple: &ErrorTrace, trace_complex: &ErrorTrace) -> Result<EnsembleWeights> {
    let e_s = trace_simple.require_ewma("simple")?;
    let e_c = trace_complex.require_ewma("complex")?;
    let total = e_s + e_c;
    if total == 0.0 {
        return Ok(EnsembleWeights { simple: 0.5, complex: 0.5 });
    }
    // 1 - e_s / total == e_c / total
    Ok(EnsembleWeights {
        simple: e_c / total,
        complex: e_s / total,
    })
}

pub fn ensemble_predict(weights: EnsembleWeights, pred_simple: f64, pred_complex: f64) -> Result<f64> {
    let EnsembleWeights { simple, complex } = weights;
    if !(0.0..=1.0).contains(&simple) || !(0.0..=1.0).contains(&complex) {
        return Err(Error::contract(format!("weights ({simple}, {complex}) outside [0, 1]")));
    }
    if (simple + complex - 1.0).abs() > 1e-9 {
        return Err(Error::contract(format!(
            "weights ({simple}, {complex}) do not sum to 1"
        )));
    }
    Ok(simple * pred_simple + complex * pred_complex)
}

/// EWMA-weighted blend of both forecasts.
///
/// Before both traces hold an error, all weight sits on the complex model.
#[derive(Debug, Clone)]
pub struct EwmaEnsemble {
    simple: ErrorTrace,
    complex: ErrorTrace,
}

impl EwmaEnsemble {
    pub fn new(config: &TraceConfig) -> Result<Self> {
        Ok(Self {
            simple: ErrorTrace::from_config(config)?,
            complex: ErrorTrace::from_config(config)?,
        })
    }

    pub fn weights(&self) -> Result<EnsembleWeights> {
        if self.simple.is_empty() || self.complex.is_empty() {
            return Ok(EnsembleWeights { simple: 0.0, complex: 1.0 });
        }
        ensemble_weights(&self.simple, &self.complex)
    }
}

impl Strategy for EwmaEnsemble {
    fn emit(&self, pred_simple: f64, pred_complex: f64) -> Result<(f64, ModelKind)> {
        let w = self.weights()?;
        Ok((ensemble_predict(w, pred_simple, pred_complex)?, w.dominant()))
    }

    fn observe(
        &mut self,
        _timestamp: NaiveDateTime,
        actual: f64,
        pred_simple: f64,
        pred_complex: f64,
    ) -> Result<Option<SwitchEvent>> {
        let (err_simple, err_complex) = abs_errors(actual, pred_simple, pred_complex)?;
        self.simple.update(err_simple)?;
        self.complex.update(err_complex)?;
        Ok(None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{prop, prop_assert, proptest};

    fn trace_with(errors: &[f64]) -> ErrorTrace {
        let mut t = ErrorTrace::default();
        for e in errors {
            t.update(*e).unwrap();
        }
        t
    }

    #[test]
    fn worked_example_one_third_share() {
        // complex carries 1/3 of the summed error
        let w = ensemble_weights(&trace_with(&[2.0]), &trace_with(&[1.0])).unwrap();
        assert_eq!(w.complex, 2.0 / 3.0);
        assert_eq!(w.simple + w.complex, 1.0);
    }

    #[test]
    fn symmetric_and_degenerate() {
        let w = ensemble_weights(&trace_with(&[4.0]), &trace_with(&[4.0])).unwrap();
        assert_eq!((w.simple, w.complex), (0.5, 0.5));
        let w = ensemble_weights(&trace_with(&[0.0]), &trace_with(&[0.0])).unwrap();
        assert_eq!((w.simple, w.complex), (0.5, 0.5));
        assert!(ensemble_weights(&ErrorTrace::default(), &trace_with(&[1.0])).is_err());
    }

    #[test]
    fn predict_examples() {
        let w = |s, c| EnsembleWeights { simple: s, complex: c };
        assert_eq!(ensemble_predict(w(1.0, 0.0), 3.0, 9.0).unwrap(), 3.0);
        assert_eq!(ensemble_predict(w(0.5, 0.5), 10.0, 20.0).unwrap(), 15.0);
        assert_eq!(ensemble_predict(w(0.3, 0.7), 8.0, 8.0).unwrap(), 8.0);
        assert!(ensemble_predict(w(0.6, 0.6), 1.0, 1.0).is_err());
        assert!(ensemble_predict(w(1.5, -0.5), 1.0, 1.0).is_err());
    }

    #[test]
    fn warm_up_uses_complex_only() {
        let e = EwmaEnsemble::new(&TraceConfig::default()).unwrap();
        assert_eq!(e.emit(1.0, 7.0).unwrap(), (7.0, ModelKind::Complex));
    }

    proptest! {
        #[test]
        fn blend_is_convex_and_favours_smaller_error(
            es in prop::collection::vec(0.0f64..100.0, 1..10),
            ec in prop::collection::vec(0.0f64..100.0, 1..10),
            ps in 0.0f64..500.0,
            pc in 0.0f64..500.0,
        ) {
            let (ts, tc) = (trace_with(&es), trace_with(&ec));
            let w = ensemble_weights(&ts, &tc).unwrap();
            prop_assert!((w.simple + w.complex - 1.0).abs() < 1e-12);
            let y = ensemble_predict(w, ps, pc).unwrap();
            let tol = 1e-9 * ps.max(pc).max(1.0);
            prop_assert!(y >= ps.min(pc) - tol && y <= ps.max(pc) + tol);
            let (e_s, e_c) = (ts.ewma().unwrap(), tc.ewma().unwrap());
            if e_s > e_c {
                prop_assert!(w.simple < w.complex);
            } else if e_c > e_s {
                prop_assert!(w.complex < w.simple);
            }
        }
    }
}
