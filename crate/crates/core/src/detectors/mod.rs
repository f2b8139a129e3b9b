//! Classical drift detectors used as switch triggers between the two models.

mod adwin;
mod binarizer;
mod eddm;
mod page_hinkley;
mod switching;

use serde::{Deserialize, Serialize};

pub use adwin::{adwin_epsilon, AdwinParams, AdwinWindow};
pub use binarizer::{nearest_rank_quantile, RegressionErrorBinarizer, DEFAULT_QUANTILE};
pub use eddm::{Eddm, EddmLevel, EddmParams};
pub use page_hinkley::{PageHinkley, PageHinkleyParams};
pub use switching::{detector_switch_policy, AdwinMonitor, DetectorSwitch, EddmMonitor, ErrorMonitor};

/// Hyperparameters for every detector-driven strategy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectorConfig {
    pub page_hinkley: PageHinkleyParams,
    pub adwin: AdwinParams,
    /// Divisor mapping absolute errors into ADWIN's `[0, 1]` domain;
    /// `None` uses the maximum training demand.
    pub adwin_error_cap: Option<f64>,
    pub eddm: EddmParams,
    /// Quantile of training-period errors used as the EDDM miss threshold.
    pub eddm_quantile: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            page_hinkley: PageHinkleyParams::default(),
            adwin: AdwinParams::default(),
            adwin_error_cap: None,
            eddm: EddmParams::default(),
            eddm_quantile: DEFAULT_QUANTILE,
        }
    }
}
