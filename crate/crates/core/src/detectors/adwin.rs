use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdwinParams {
    /// Confidence parameter of the cut test.
    pub delta: f64,
    /// Buckets kept per level before the two oldest are merged.
    pub max_buckets: usize,
    /// Smallest sub-window on either side of a tested split.
    pub min_subwindow: u64,
}

impl Default for AdwinParams {
    fn default() -> Self {
        Self {
            delta: 0.002,
            max_buckets: 5,
            min_subwindow: 5,
        }
    }
}

impl AdwinParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::contract(format!("ADWIN delta {} outside (0, 1)", self.delta)));
        }
        if self.max_buckets < 2 {
            return Err(Error::contract("ADWIN needs at least 2 buckets per level"));
        }
        if self.min_subwindow == 0 {
            return Err(Error::contract("ADWIN sub-windows must hold at least one value"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Bucket {
    sum: f64,
    /// Sum of squared deviations from the bucket mean.
    m2: f64,
    count: u64,
}

/// Cut threshold for sub-windows of sizes `n0` and `n1` out of `n` values
/// with window variance `variance`:
///
/// ```text
/// eps = sqrt(2 * (1/n0 + 1/n1) * variance * ln(2 ln n / delta))
///     + 2/3 * (1/n0 + 1/n1) * ln(2 ln n / delta)
/// ```
pub fn adwin_epsilon(delta: f64, n0: u64, n1: u64, variance: f64) -> f64 {
    let n = (n0 + n1) as f64;
    let inv_m = 1.0 / n0 as f64 + 1.0 / n1 as f64;
    let log_term = (2.0 * n.ln() / delta).ln();
    (2.0 * inv_m * variance * log_term).sqrt() + 2.0 / 3.0 * inv_m * log_term
}

/// ADWIN adaptive window over values in `[0, 1]`, stored as an exponential
/// histogram: level `i` holds buckets summarizing exactly `2^i` values.
#[derive(Debug, Clone)]
pub struct AdwinWindow {
    params: AdwinParams,
    /// `levels[i]` front is the newest bucket of that level.
    levels: Vec<VecDeque<Bucket>>,
    total_sum: f64,
    total_count: u64,
    /// Sum of squared deviations from the window mean.
    total_m2: f64,
}

impl AdwinWindow {
    pub fn new(params: AdwinParams) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            params,
            levels: Vec::new(),
            total_sum: 0.0,
            total_count: 0,
            total_m2: 0.0,
        })
    }

    pub fn params(&self) -> &AdwinParams {
        &self.params
    }

    pub fn width(&self) -> u64 {
        self.total_count
    }

    pub fn total(&self) -> f64 {
        self.total_sum
    }

    pub fn mean(&self) -> f64 {
        if self.total_count == 0 {
            0.0
        } else {
            self.total_sum / self.total_count as f64
        }
    }

    /// Population variance of the retained values.
    pub fn variance(&self) -> f64 {
        if self.total_count == 0 {
            0.0
        } else {
            (self.total_m2 / self.total_count as f64).max(0.0)
        }
    }

    pub fn bucket_count(&self) -> usize {
        self.levels.iter().map(VecDeque::len).sum()
    }

    /// `(level, sum, count)` of every bucket, oldest first.
    pub fn buckets(&self) -> Vec<(usize, f64, u64)> {
        self.levels
            .iter()
            .enumerate()
            .rev()
            .flat_map(|(lvl, row)| row.iter().rev().map(move |b| (lvl, b.sum, b.count)))
            .collect()
    }

    pub fn reset(&mut self) {
        self.levels.clear();
        self.total_sum = 0.0;
        self.total_count = 0;
        self.total_m2 = 0.0;
    }

    /// Inserts a value and drops the oldest buckets while any admissible split
    /// shows a significant change of mean. Returns whether anything was dropped.
    pub fn insert(&mut self, value: f64) -> Result<bool> {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::contract(format!("ADWIN input {value} outside [0, 1]")));
        }
        self.push(value);
        let mut drift = false;
        while self.detect_cut() {
            self.drop_oldest();
            drift = true;
        }
        Ok(drift)
    }

    fn push(&mut self, value: f64) {
        let n = self.total_count + 1;
        if self.total_count > 0 {
            let prev_mean = self.total_sum / self.total_count as f64;
            let d = value - prev_mean;
            self.total_m2 += d * d * self.total_count as f64 / n as f64;
        }
        self.total_sum += value;
        self.total_count = n;

        if self.levels.is_empty() {
            self.levels.push(VecDeque::new());
        }
        self.levels[0].push_front(Bucket {
            sum: value,
            m2: 0.0,
            count: 1,
        });
        self.compress();
    }

    fn compress(&mut self) {
        let mut lvl = 0;
        while lvl < self.levels.len() {
            if self.levels[lvl].len() <= self.params.max_buckets {
                break;
            }
            let older = self.levels[lvl].pop_back().expect("level over capacity");
            let newer = self.levels[lvl].pop_back().expect("level over capacity");
            let c = older.count as f64;
            let d = older.sum / c - newer.sum / c;
            let merged = Bucket {
                sum: older.sum + newer.sum,
                m2: older.m2 + newer.m2 + d * d * c / 2.0,
                count: older.count + newer.count,
            };
            if lvl + 1 == self.levels.len() {
                self.levels.push(VecDeque::new());
            }
            self.levels[lvl + 1].push_front(merged);
            lvl += 1;
        }
    }

    fn drop_oldest(&mut self) {
        let Some(lvl) = self.levels.iter().rposition(|row| !row.is_empty()) else {
            return;
        };
        let bucket = self.levels[lvl].pop_back().expect("non-empty level");
        let n = self.total_count as f64;
        let n_b = bucket.count as f64;
        if self.total_count > bucket.count {
            let d = bucket.sum / n_b - self.total_sum / n;
            self.total_m2 -= bucket.m2 + n_b * n * d * d / (n - n_b);
            self.total_sum -= bucket.sum;
        } else {
            self.total_m2 = 0.0;
            self.total_sum = 0.0;
        }
        self.total_m2 = self.total_m2.max(0.0);
        self.total_count -= bucket.count;
        while self.levels.last().is_some_and(VecDeque::is_empty) {
            self.levels.pop();
        }
    }

    fn detect_cut(&self) -> bool {
        let min = self.params.min_subwindow;
        let n = self.total_count;
        if n < 2 * min || n < 2 {
            return false;
        }
        let variance = self.variance();
        let mut n0 = 0u64;
        let mut s0 = 0.0;
        for row in self.levels.iter().rev() {
            for b in row.iter().rev() {
                n0 += b.count;
                s0 += b.sum;
                let n1 = n - n0;
                if n1 < min {
                    return false;
                }
                if n0 < min {
                    continue;
                }
                let mean0 = s0 / n0 as f64;
                let mean1 = (self.total_sum - s0) / n1 as f64;
                if (mean0 - mean1).abs() >= adwin_epsilon(self.params.delta, n0, n1, variance) {
                    return true;
                }
            }
        }
        false
    }
}
