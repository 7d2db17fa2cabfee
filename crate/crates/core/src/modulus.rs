//! L^p modulus of continuity over grid shifts, the dyadic approximation bound and the
//! `sum omega_p(2^-n) / n^{1/p}` criterion.

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::dyadic_martingale::{cond_exp, FiltrationLevel};
use crate::error::{Error, Result};
use crate::par::{map_range, Exec};
use crate::report::{csv_string, fmt_num, AuditReport};
use crate::tail::{fit_last_octaves, TailModel, TailSpec};
use crate::torus_fn::{lp_norm_real, lp_norm_slice, render, FourierFunction, GridFunction};

/// `values[n] = omega_p(2^-n, f)` for `n = 0..=J`, sup over grid shifts. Values are
/// lower bounds for the continuum modulus and converge to it as `J` grows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModulusProfile {
    #[serde(with = "crate::report::extended")]
    pub p: f64,
    pub values: Vec<f64>,
    pub source_resolution: u32,
}

impl ModulusProfile {
    pub fn omega(&self, n: usize) -> f64 {
        self.values[n]
    }

    pub fn to_csv(&self) -> Result<String> {
        let rows = self
            .values
            .iter()
            .enumerate()
            .map(|(n, w)| vec![n.to_string(), fmt_num(0.5f64.powi(n as i32)), fmt_num(*w)]);
        csv_string(&["n", "delta", "omega_p"], rows)
    }
}

fn check_p(p: f64) -> Result<()> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::Exponent(p));
    }
    Ok(())
}

/// `d(t) = ||tau_t f - f||_p` for `t = 0..=min(max_shift, N/2)`.
fn shift_increments(f: &GridFunction, p: f64, max_shift: usize, exec: Exec) -> Vec<f64> {
    let n = f.len();
    let top = max_shift.min(n / 2);
    if p == 2.0 && n > 1 {
        // |tau_t f - f|_2^2 = 2 (r(0) - Re r(t)) with the circular autocorrelation r.
        let mut buf = f.samples().to_vec();
        let mut planner = FftPlanner::new();
        planner.plan_fft_forward(n).process(&mut buf);
        for z in buf.iter_mut() {
            *z = Complex64::new(z.norm_sqr(), 0.0);
        }
        planner.plan_fft_inverse(n).process(&mut buf);
        let scale = 1.0 / (n as f64 * n as f64);
        let r0 = buf[0].re * scale;
        return (0..=top).map(|t| (2.0 * (r0 - buf[t].re * scale)).max(0.0).sqrt()).collect();
    }
    if f.is_real() {
        let v = f.real_parts();
        map_range(exec, top + 1, |t| {
            let diff: Vec<f64> = (0..n).map(|k| v[(k + t) & (n - 1)] - v[k]).collect();
            lp_norm_real(&diff, p)
        })
    } else {
        let v = f.samples();
        map_range(exec, top + 1, |t| {
            let diff: Vec<Complex64> = (0..n).map(|k| v[(k + t) & (n - 1)] - v[k]).collect();
            lp_norm_slice(&diff, p)
        })
    }
}

fn profile_from_increments(d: &[f64], j: u32) -> Vec<f64> {
    let mut prefix = Vec::with_capacity(d.len());
    let mut best = 0.0f64;
    for v in d {
        best = best.max(*v);
        prefix.push(best);
    }
    (0..=j).map(|n| prefix[(1usize << (j - n)).min(d.len() - 1)]).collect()
}

pub fn modulus_profile(f: &GridFunction, p: f64) -> Result<ModulusProfile> {
    modulus_profile_with(f, p, Exec::default())
}

pub fn modulus_profile_with(f: &GridFunction, p: f64, exec: Exec) -> Result<ModulusProfile> {
    check_p(p)?;
    let j = f.resolution_log2();
    let d = shift_increments(f, p, f.len(), exec);
    Ok(ModulusProfile { p, values: profile_from_increments(&d, j), source_resolution: j })
}

/// `||f - E(f|F_n)||_p <= 2 omega_p(2^-n, f)`.
pub fn dyadic_approx_audit(f: &GridFunction, p: f64, n: FiltrationLevel) -> Result<AuditReport> {
    check_p(p)?;
    let j = f.resolution_log2();
    if n > j {
        return Err(Error::Level { level: n, resolution: j });
    }
    let d = shift_increments(f, p, 1usize << (j - n), Exec::default());
    let omega = d.iter().copied().fold(0.0, f64::max);
    approx_report(f, p, n, omega)
}

fn approx_report(f: &GridFunction, p: f64, n: u32, omega: f64) -> Result<AuditReport> {
    let lhs = f.sub(&cond_exp(f, n)?)?.lp_norm(p)?;
    Ok(AuditReport::upper_bound(lhs, 2.0 * omega, 2.0, format!("lemme-dyadic p={p} n={n}")))
}

/// [`dyadic_approx_audit`] at every level `0..=J`, sharing one shift scan.
pub fn dyadic_approx_audits(f: &GridFunction, p: f64, exec: Exec) -> Result<Vec<AuditReport>> {
    let prof = modulus_profile_with(f, p, exec)?;
    (0..=prof.source_resolution).map(|n| approx_report(f, p, n, prof.values[n as usize])).collect()
}

/// Largest relative gap between the profiles of `f` rendered at two resolutions,
/// over the levels both share.
pub fn profile_refinement(f: &FourierFunction, p: f64, j_coarse: u32, j_fine: u32) -> Result<f64> {
    let a = modulus_profile(&render(f, j_coarse)?, p)?;
    let b = modulus_profile(&render(f, j_fine)?, p)?;
    Ok(a.values.iter().zip(&b.values).filter(|(_, w)| **w > 0.0).map(|(v, w)| (v - w).abs() / w).fold(0.0, f64::max))
}

/// Partial sum, modeled tail and total of a criterion series.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionValue {
    pub partial: f64,
    #[serde(with = "crate::report::extended")]
    pub tail: f64,
    #[serde(with = "crate::report::extended")]
    pub total: f64,
    pub model: TailModel,
}

impl CriterionValue {
    pub fn is_finite(&self) -> bool {
        self.total.is_finite()
    }
}

/// Sums `u_n n^{-weight}` over the data (`u[i] = u_{i+1}`) and closes the series
/// with the tail model fitted on the last four octaves.
pub fn weighted_series(u: &[f64], weight: f64, tail: TailSpec) -> Result<CriterionValue> {
    let partial: f64 = u.iter().enumerate().map(|(i, v)| v * ((i + 1) as f64).powf(-weight)).sum();
    let model = if u.len() < 2 { TailModel::Vanishing } else { fit_last_octaves(tail, u, 4)?.model };
    let tail_sum = model.tail_sum(u.len(), weight);
    Ok(CriterionValue { partial, tail: tail_sum, total: partial + tail_sum, model })
}

/// `sum_{n>=1} omega_p(2^-n, f) / n^{1/p}` with a modeled tail beyond the grid.
pub fn criterion_sqrt_n(profile: &ModulusProfile, p: f64, tail: TailSpec) -> Result<CriterionValue> {
    check_p(p)?;
    let weight = if p.is_infinite() { 0.0 } else { 1.0 / p };
    weighted_series(&profile.values[1..], weight, tail)
}
