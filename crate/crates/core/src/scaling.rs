//! Rows of measured-versus-predicted scaling experiments and log-log fits.

use crate::error::{Error, Result};

/// One measured quantity at one value of the independent variable.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalingRow {
    /// `N` or `n`.
    pub x: f64,
    pub measured: f64,
    pub rate: f64,
    /// `measured / rate`.
    pub ratio: f64,
    pub witness: String,
    pub grid: String,
    pub tolerance: f64,
    pub seed: u64,
}

impl ScalingRow {
    pub fn new(x: f64, measured: f64, rate: f64, witness: impl Into<String>, grid: impl Into<String>) -> Self {
        Self { x, measured, rate, ratio: measured / rate, witness: witness.into(), grid: grid.into(), tolerance: 0.0, seed: 0 }
    }

    pub fn with_meta(mut self, tolerance: f64, seed: u64) -> Self {
        self.tolerance = tolerance;
        self.seed = seed;
        self
    }
}

/// Least-squares line through `(log2 x, log2 y)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual in `log2` units.
    pub residual: f64,
}

pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Result<SlopeFit> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch(xs.len(), ys.len()));
    }
    if xs.len() < 2 || xs.iter().chain(ys).any(|&v| !(v > 0.0)) {
        return Err(Error::InvalidParameter("log-log fit needs at least two positive points".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.log2()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.log2()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("log-log fit needs distinct abscissae".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = lx.iter().zip(&ly).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    Ok(SlopeFit { slope, intercept, residual: (rss / n).sqrt() })
}

/// `max / min` of a positive sequence.
pub fn spread(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(f64::MIN, f64::max);
    let min = values.iter().cloned().fold(f64::MAX, f64::min);
    max / min
}
