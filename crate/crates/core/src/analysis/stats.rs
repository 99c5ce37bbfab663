//! Summaries over repeated runs.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// Two-sided 95% normal quantile.
pub const Z_95: f64 = 1.96;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CiMethod {
    /// `mean ± 1.96 · SEM`.
    #[default]
    Normal,
    /// `mean ± t_{0.975, n-1} · SEM`.
    StudentT,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub values: Vec<f64>,
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation (`n - 1` denominator).
    pub std: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub method: CiMethod,
    /// Set when there was a single value, so the interval carries no information.
    pub degenerate: bool,
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

pub fn sample_std(values: &[f64]) -> f64 {
    let m = mean(values);
    (values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (values.len() - 1) as f64).sqrt()
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Mean and 95% confidence interval of per-seed results. Needs `n >= 2`.
pub fn summarize_runs(values: &[f64], method: CiMethod) -> Result<RunSummary> {
    if values.len() < 2 {
        return Err(Error::InvalidParameter(format!("a confidence interval needs 2 or more runs, got {}", values.len())));
    }
    let n = values.len();
    let mean = mean(values);
    let std = sample_std(values);
    let sem = std / (n as f64).sqrt();
    let q = match method {
        CiMethod::Normal => Z_95,
        CiMethod::StudentT => StudentsT::new(0.0, 1.0, (n - 1) as f64)
            .map_err(|e| Error::InvalidParameter(e.to_string()))?
            .inverse_cdf(0.975),
    };
    Ok(RunSummary {
        values: values.to_vec(),
        n,
        mean,
        std,
        ci_low: mean - q * sem,
        ci_high: mean + q * sem,
        method,
        degenerate: false,
    })
}

impl RunSummary {
    /// A single run: the mean is the value and the interval collapses onto it.
    pub fn single(value: f64) -> Self {
        Self {
            values: vec![value],
            n: 1,
            mean: value,
            std: 0.0,
            ci_low: value,
            ci_high: value,
            method: CiMethod::Normal,
            degenerate: true,
        }
    }

    /// [`summarize_runs`] for two or more values, [`RunSummary::single`] for one.
    pub fn from_values(values: &[f64], method: CiMethod) -> Result<Self> {
        match values {
            [] => Err(Error::InvalidParameter("no runs to summarize".into())),
            [v] => Ok(Self::single(*v)),
            _ => summarize_runs(values, method),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_values_have_zero_width() {
        let s = summarize_runs(&[0.3; 5], CiMethod::Normal).unwrap();
        assert_eq!((s.mean, s.ci_low, s.ci_high), (0.3, 0.3, 0.3));
    }

    #[test]
    fn one_two_three() {
        let s = summarize_runs(&[1.0, 2.0, 3.0], CiMethod::Normal).unwrap();
        assert_eq!(s.mean, 2.0);
        assert_eq!(s.std, 1.0);
        assert!((s.ci_low - (2.0 - 1.96 / 3f64.sqrt())).abs() < 1e-12);
        assert!((s.ci_low - 0.8683).abs() < 1e-4 && (s.ci_high - 3.1317).abs() < 1e-4);
    }

    #[test]
    fn student_t_is_wider_for_small_samples() {
        let v = [1.0, 2.0, 3.0];
        let t = summarize_runs(&v, CiMethod::StudentT).unwrap();
        // t_{0.975, 2} = 4.302652...
        assert!((t.ci_high - (2.0 + 4.302652729911275 / 3f64.sqrt())).abs() < 1e-9);
    }

    #[test]
    fn needs_two_runs() {
        assert!(summarize_runs(&[1.0], CiMethod::Normal).is_err());
        let s = RunSummary::from_values(&[0.7], CiMethod::Normal).unwrap();
        assert!(s.degenerate);
        assert_eq!((s.ci_low, s.ci_high), (0.7, 0.7));
    }

    #[test]
    fn median_examples() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
