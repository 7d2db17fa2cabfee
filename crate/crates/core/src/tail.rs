//! Least-squares decay fits and the tail models used to close infinite sums that a
//! finite grid cannot see.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Ordinary least squares `y = slope * x + intercept`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    if x.len() != y.len() || x.len() < 2 {
        return invalid("linear fit needs at least two paired points");
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return invalid("linear fit with degenerate abscissae");
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

/// Slope of `ln y` against `ln x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.iter().chain(y).any(|v| *v <= 0.0 || !v.is_finite()) {
        return invalid("log-log fit needs positive finite data");
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    Ok(linear_fit(&lx, &ly)?.0)
}

/// Asymptotic shape of a positive sequence `u_n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum TailModel {
    /// `u_n = 0` beyond the data.
    Vanishing,
    /// `scale * ratio^n`, `0 < ratio < 1` for a decaying tail.
    Geometric { ratio: f64, scale: f64 },
    /// `scale * n^{-exponent}`.
    Power { exponent: f64, scale: f64 },
    /// `scale * n^{-exponent} (ln n)^{-log_exponent}`.
    PowerLog { exponent: f64, log_exponent: f64, scale: f64 },
}

/// Family to fit when the tail is not declared outright.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum TailFamily {
    Geometric,
    Power,
    /// Power exponent held fixed, log exponent and scale fitted.
    PowerLog {
        exponent: f64,
    },
}

/// How the tail of a criterion is obtained.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "tail", rename_all = "snake_case")]
pub enum TailSpec {
    Fit(TailFamily),
    /// Shape fixed; only the scale is anchored to the data by least squares.
    Declared(TailModel),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    pub model: TailModel,
    /// Largest `|ln u_n - ln model(n)|` over the fitted points.
    pub max_log_residual: f64,
    pub rms_log_residual: f64,
    pub points: usize,
}

impl TailModel {
    pub fn value(&self, n: f64) -> f64 {
        match *self {
            TailModel::Vanishing => 0.0,
            TailModel::Geometric { ratio, scale } => scale * ratio.powf(n),
            TailModel::Power { exponent, scale } => scale * n.powf(-exponent),
            TailModel::PowerLog { exponent, log_exponent, scale } => {
                scale * n.powf(-exponent) * n.ln().powf(-log_exponent)
            }
        }
    }

    fn with_scale(&self, scale: f64) -> TailModel {
        match *self {
            TailModel::Vanishing => TailModel::Vanishing,
            TailModel::Geometric { ratio, .. } => TailModel::Geometric { ratio, scale },
            TailModel::Power { exponent, .. } => TailModel::Power { exponent, scale },
            TailModel::PowerLog { exponent, log_exponent, .. } => TailModel::PowerLog { exponent, log_exponent, scale },
        }
    }

    /// Whether `sum_n model(n) n^{-weight}` is finite.
    pub fn converges_weighted(&self, weight: f64) -> bool {
        match *self {
            TailModel::Vanishing => true,
            TailModel::Geometric { ratio, scale } => scale == 0.0 || ratio < 1.0,
            TailModel::Power { exponent, scale } => scale == 0.0 || exponent + weight > 1.0,
            TailModel::PowerLog { exponent, log_exponent, scale } => {
                let s = exponent + weight;
                scale == 0.0 || s > 1.0 || (s == 1.0 && log_exponent > 1.0)
            }
        }
    }

    /// `sum_{n > last} model(n) n^{-weight}`: exact geometric bound or integral estimate.
    pub fn tail_sum(&self, last: usize, weight: f64) -> f64 {
        if !self.converges_weighted(weight) {
            return f64::INFINITY;
        }
        let big_n = (last.max(2)) as f64;
        match *self {
            TailModel::Vanishing => 0.0,
            TailModel::Geometric { ratio, scale } => {
                if scale == 0.0 {
                    return 0.0;
                }
                let first = big_n + 1.0;
                scale * ratio.powf(first) * first.powf(-weight.max(0.0)) / (1.0 - ratio)
            }
            TailModel::Power { exponent, scale } => {
                if scale == 0.0 {
                    return 0.0;
                }
                let s = exponent + weight;
                scale * big_n.powf(1.0 - s) / (s - 1.0)
            }
            TailModel::PowerLog { exponent, log_exponent, scale } => {
                if scale == 0.0 {
                    return 0.0;
                }
                let s = exponent + weight;
                let ln_n = big_n.ln();
                if s == 1.0 {
                    scale * ln_n.powf(1.0 - log_exponent) / (log_exponent - 1.0)
                } else {
                    scale * big_n.powf(1.0 - s) * ln_n.powf(-log_exponent) / (s - 1.0)
                }
            }
        }
    }
}

/// Fits on the points `(ns[i], values[i])`; zero values are skipped. All remaining
/// values zero yields [`TailModel::Vanishing`].
pub fn fit(spec: TailSpec, ns: &[f64], values: &[f64]) -> Result<TailFit> {
    if ns.len() != values.len() {
        return invalid("tail fit needs paired data");
    }
    let pts: Vec<(f64, f64)> = ns.iter().zip(values).filter(|(_, v)| **v > 0.0).map(|(n, v)| (*n, *v)).collect();
    if values.iter().any(|v| *v < 0.0 || !v.is_finite()) {
        return invalid("tail fit needs nonnegative finite values");
    }
    if pts.is_empty() {
        return Ok(TailFit { model: TailModel::Vanishing, max_log_residual: 0.0, rms_log_residual: 0.0, points: 0 });
    }
    let model = match spec {
        TailSpec::Declared(shape) => {
            if shape == TailModel::Vanishing {
                return invalid("declared vanishing tail cannot describe nonzero data");
            }
            let unit = shape.with_scale(1.0);
            let ln_c = pts.iter().map(|(n, v)| v.ln() - unit.value(*n).ln()).sum::<f64>() / pts.len() as f64;
            shape.with_scale(ln_c.exp())
        }
        TailSpec::Fit(family) => {
            if pts.len() < 2 {
                return invalid("tail fit needs at least two nonzero points");
            }
            match family {
                TailFamily::Geometric => {
                    let x: Vec<f64> = pts.iter().map(|p| p.0).collect();
                    let y: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
                    let (slope, icpt) = linear_fit(&x, &y)?;
                    TailModel::Geometric { ratio: slope.exp(), scale: icpt.exp() }
                }
                TailFamily::Power => {
                    let x: Vec<f64> = pts.iter().map(|p| p.0.ln()).collect();
                    let y: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
                    let (slope, icpt) = linear_fit(&x, &y)?;
                    TailModel::Power { exponent: -slope, scale: icpt.exp() }
                }
                TailFamily::PowerLog { exponent } => {
                    if pts.iter().any(|p| p.0 <= 1.0) {
                        return invalid("power-log fit needs n > 1");
                    }
                    let x: Vec<f64> = pts.iter().map(|p| p.0.ln().ln()).collect();
                    let y: Vec<f64> = pts.iter().map(|p| p.1.ln() + exponent * p.0.ln()).collect();
                    let (slope, icpt) = linear_fit(&x, &y)?;
                    TailModel::PowerLog { exponent, log_exponent: -slope, scale: icpt.exp() }
                }
            }
        }
    };
    let res: Vec<f64> = pts.iter().map(|(n, v)| v.ln() - model.value(*n).ln()).collect();
    let max_log_residual = res.iter().map(|r| r.abs()).fold(0.0, f64::max);
    let rms_log_residual = (res.iter().map(|r| r * r).sum::<f64>() / res.len() as f64).sqrt();
    Ok(TailFit { model, max_log_residual, rms_log_residual, points: pts.len() })
}

/// Fits on the indices `n` of the last `octaves` octaves of `1..=values.len()`,
/// where `values[i]` is `u_{i+1}`.
pub fn fit_last_octaves(spec: TailSpec, values: &[f64], octaves: u32) -> Result<TailFit> {
    let last = values.len();
    let first = (last >> octaves).max(1) + 1;
    let first = if last >= 2 && first > last - 1 { last - 1 } else { first };
    let ns: Vec<f64> = (first..=last).map(|n| n as f64).collect();
    fit(spec, &ns, &values[first - 1..])
}
