use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_WINDOW: usize = 6;

/// Window length and smoothing factor for an [`ErrorTrace`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TraceConfig {
    pub window: usize,
    /// Smoothing factor; `None` selects the span form `2 / (window + 1)`.
    pub alpha: Option<f64>,
}

impl Default for TraceConfig {
    fn default() -> Self {
        Self {
            window: DEFAULT_WINDOW,
            alpha: None,
        }
    }
}

impl TraceConfig {
    pub fn resolved_alpha(&self) -> f64 {
        self.alpha.unwrap_or(2.0 / (self.window as f64 + 1.0))
    }
}

/// Ring buffer of the most recent absolute errors with a cached EWMA.
///
/// The EWMA is normalized over the finite window:
/// `sum_i w_i e_i / sum_i w_i` with `w_i = (1 - alpha)^age_i`, where the
/// newest error has age 0.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorTrace {
    window: VecDeque<f64>,
    capacity: usize,
    alpha: f64,
    ewma: Option<f64>,
}

impl Default for ErrorTrace {
    fn default() -> Self {
        Self::from_config(&TraceConfig::default()).expect("default trace config is valid")
    }
}

impl ErrorTrace {
    pub fn new(capacity: usize, alpha: f64) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::contract("error trace window must hold at least one error"));
        }
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::contract(format!("smoothing factor {alpha} outside (0, 1]")));
        }
        Ok(Self {
            window: VecDeque::with_capacity(capacity),
            capacity,
            alpha,
            ewma: None,
        })
    }

    pub fn from_config(config: &TraceConfig) -> Result<Self> {
        Self::new(config.window, config.resolved_alpha())
    }

    /// Appends one absolute error, evicting the oldest when the window is full.
    pub fn update(&mut self, abs_error: f64) -> Result<()> {
        if !(abs_error.is_finite() && abs_error >= 0.0) {
            return Err(Error::contract(format!(
                "trace errors must be finite and non-negative, got {abs_error}"
            )));
        }
        if self.window.len() == self.capacity {
            self.window.pop_front();
        }
        self.window.push_back(abs_error);
        self.ewma = Some(self.recompute());
        Ok(())
    }

    fn recompute(&self) -> f64 {
        let decay = 1.0 - self.alpha;
        let newest = self.window.len() - 1;
        let (num, den) = self
            .window
            .iter()
            .enumerate()
            .fold((0.0, 0.0), |(num, den), (i, e)| {
                let w = decay.powi((newest - i) as i32);
                (num + w * e, den + w)
            });
        num / den
    }

    /// Current EWMA, `None` before the first error.
    pub fn ewma(&self) -> Option<f64> {
        self.ewma
    }

    /// Errors oldest first.
    pub fn errors(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        self.window.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.window.len()
    }

    pub fn is_empty(&self) -> bool {
        self.window.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub(crate) fn require_ewma(&self, what: &str) -> Result<f64> {
        self.ewma
            .ok_or_else(|| Error::contract(format!("{what} error trace is empty")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn oracle(errors: &[f64], alpha: f64) -> f64 {
        let n = errors.len();
        let mut num = 0.0;
        let mut den = 0.0;
        for (i, e) in errors.iter().enumerate() {
            let age = (n - 1 - i) as f64;
            let w = (1.0 - alpha).powf(age);
            num += w * e;
            den += w;
        }
        num / den
    }

    #[test]
    fn constant_window() {
        let mut t = ErrorTrace::default();
        for _ in 0..10 {
            t.update(4.5).unwrap();
        }
        assert!((t.ewma().unwrap() - 4.5).abs() < 1e-12);
        assert_eq!(t.len(), 6);
    }

    #[test]
    fn singleton() {
        let mut t = ErrorTrace::default();
        assert_eq!(t.ewma(), None);
        t.update(3.25).unwrap();
        assert_eq!(t.ewma(), Some(3.25));
    }

    #[test]
    fn full_window_matches_weighted_average() {
        let mut t = ErrorTrace::default();
        for e in 1..=6 {
            t.update(f64::from(e)).unwrap();
        }
        let alpha = 2.0 / 7.0;
        // weights (5/7)^5 .. (5/7)^0 oldest to newest
        let expected = oracle(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0], alpha);
        assert!((t.ewma().unwrap() - expected).abs() < 1e-12);
        assert!((expected - 4.418_901_434_956_481).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_errors() {
        let mut t = ErrorTrace::default();
        assert!(t.update(-1.0).is_err());
        assert!(t.update(f64::NAN).is_err());
        assert!(t.update(f64::INFINITY).is_err());
        assert!(t.is_empty());
        assert!(ErrorTrace::new(0, 0.5).is_err());
        assert!(ErrorTrace::new(3, 0.0).is_err());
        assert!(ErrorTrace::new(3, 1.5).is_err());
    }

    proptest! {
        #[test]
        fn cache_matches_recomputation(
            errors in prop::collection::vec(0.0f64..1e3, 1..60),
            window in 1usize..12,
        ) {
            let cfg = TraceConfig { window, alpha: None };
            let mut t = ErrorTrace::from_config(&cfg).unwrap();
            for (k, e) in errors.iter().enumerate() {
                t.update(*e).unwrap();
                prop_assert!(t.len() <= window);
                let start = (k + 1).saturating_sub(window);
                let expected = oracle(&errors[start..=k], cfg.resolved_alpha());
                prop_assert!((t.ewma().unwrap() - expected).abs() <= 1e-12 * expected.max(1.0));
            }
        }
    }
}
