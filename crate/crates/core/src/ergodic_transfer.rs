//! Transfer operator of the doubling map `Tx = 2x mod 1`, decay of `L^n f`, the
//! decreasing-filtration criteria and ergodic series `sum a_k f(T^k x)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dilated_series::{oscillation_diagnostic, Freq, OscillationDiagnostic, SeriesSpec};
use crate::dyadic_martingale::p_prime;
use crate::error::{invalid, Error, Result};
use crate::modulus::{modulus_profile, weighted_series, CriterionValue};
use crate::par::{map_range, Exec};
use crate::report::{csv_string, fmt_num};
use crate::tail::TailSpec;
use crate::torus_fn::{render_strict, FourierFunction, GridFunction};

/// Pre-adjoint of `f -> f o T` for a Lebesgue-preserving map of the circle.
pub trait TransferOperator {
    /// `L f` in Fourier form.
    fn apply(&self, f: &FourierFunction) -> FourierFunction;
    /// `L f` from grid samples; the output grid may be coarser than the input.
    fn apply_pointwise(&self, f: &GridFunction) -> Result<GridFunction>;
    /// `f o T` in Fourier form.
    fn compose(&self, f: &FourierFunction) -> Result<FourierFunction>;
}

/// `Tx = 2x mod 1`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct DoublingMap;

impl TransferOperator for DoublingMap {
    /// `(L f)^(m) = f^(2m)`.
    fn apply(&self, f: &FourierFunction) -> FourierFunction {
        transfer_power(f, 1)
    }

    /// `L f(x) = (f(x/2) + f((x+1)/2)) / 2` on the `2^{J-1}` grid.
    fn apply_pointwise(&self, f: &GridFunction) -> Result<GridFunction> {
        let j = f.resolution_log2();
        if j == 0 {
            return invalid("need at least two grid points");
        }
        let half = f.len() / 2;
        let s = f.samples();
        let out: Vec<Complex64> = (0..half).map(|k| (s[k] + s[k + half]) / 2.0).collect();
        GridFunction::new(j - 1, out, f.kind())
    }

    fn compose(&self, f: &FourierFunction) -> Result<FourierFunction> {
        crate::torus_fn::dilate(f, 2)
    }
}

/// `L f` for the doubling map (coefficient form).
pub fn transfer_apply(f: &FourierFunction) -> FourierFunction {
    DoublingMap.apply(f)
}

/// `L f` for the doubling map from samples (pointwise form).
pub fn transfer_apply_pointwise(f: &GridFunction) -> Result<GridFunction> {
    DoublingMap.apply_pointwise(f)
}

/// `(L^n f)^(m) = f^(2^n m)`.
pub fn transfer_power(f: &FourierFunction, n: u32) -> FourierFunction {
    if n >= 63 {
        return FourierFunction::from_coeffs([(0, f.mean())]).expect("finite");
    }
    let step = 1i64 << n;
    FourierFunction::from_coeffs(f.iter().filter(|(m, _)| m % step == 0).map(|(m, c)| (m / step, c)))
        .expect("finite amplitudes")
}

/// `E(f | T^{-m} B) = (L^m f) o T^m`: the frequencies divisible by `2^m`.
pub fn cond_exp_decreasing(f: &FourierFunction, m: u32) -> FourierFunction {
    if m >= 63 {
        return f.filter(|k| k == 0);
    }
    let step = 1i64 << m;
    f.filter(|k| k % step == 0)
}

/// `||L^n f||_2`, exact.
pub fn transfer_norm(f: &FourierFunction, n: u32) -> f64 {
    cond_exp_decreasing(f, n).l2_norm()
}

fn check_mean_zero(f: &FourierFunction) -> Result<()> {
    if f.mean() != Complex64::new(0.0, 0.0) {
        return Err(Error::NotCentered(f.mean().norm()));
    }
    Ok(())
}

/// `||L^n f||_2` for `n = 0..=N` and the series `sum_{n>=1} ||L^n f||_2 / sqrt(n)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransferDecay {
    pub f: FourierFunction,
    pub norms: Vec<f64>,
    pub criterion: CriterionValue,
    /// `sum_{2^l <= N} 2^{l/2} ||L^{2^l} f||_2`.
    pub condensed: f64,
}

impl TransferDecay {
    pub fn to_csv(&self) -> Result<String> {
        let mut partial = 0.0;
        let rows = self.norms.iter().enumerate().map(|(n, v)| {
            if n > 0 {
                partial += v / (n as f64).sqrt();
            }
            vec![n.to_string(), fmt_num(*v), fmt_num(partial)]
        });
        csv_string(&["n", "norm", "criterion_partial"], rows.collect::<Vec<_>>())
    }
}

pub fn transfer_decay(f: &FourierFunction, n: u32, tail: TailSpec) -> Result<TransferDecay> {
    check_mean_zero(f)?;
    let norms = map_range(Exec::default(), n as usize + 1, |k| transfer_norm(f, k as u32));
    let criterion = weighted_series(&norms[1..], 0.5, tail)?;
    let condensed =
        (0..).map(|l| 1usize << l).take_while(|s| *s <= n as usize).map(|s| (s as f64).sqrt() * norms[s]).sum();
    Ok(TransferDecay { f: f.clone(), norms, criterion, condensed })
}

/// `||L^n f||_2 / omega_2(2^-n, f)` for `n = 1..=N`, with the grid modulus at `2^J`.
pub fn lnorm_vs_modulus(f: &FourierFunction, n: u32, j: u32) -> Result<Vec<f64>> {
    check_mean_zero(f)?;
    if j < n + 2 {
        return invalid(format!("resolution 2^{j} too coarse for n = {n}"));
    }
    let profile = modulus_profile(&render_strict(f, j)?, 2.0)?;
    (1..=n)
        .map(|k| {
            let w = profile.values[k as usize];
            if w == 0.0 {
                Err(Error::Hypothesis(format!("omega_2(2^-{k}) vanishes")))
            } else {
                Ok(transfer_norm(f, k) / w)
            }
        })
        .collect()
}

/// Oscillation diagnostic of `sum a_k f(2^k x)` with the decay criterion of `f`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErgodicRun {
    pub diagnostic: OscillationDiagnostic,
    pub decay: TransferDecay,
}

pub fn ergodic_spec(f: &FourierFunction, coeffs: &[Complex64]) -> Result<SeriesSpec> {
    SeriesSpec::new(coeffs.to_vec(), (0..coeffs.len() as u32).map(Freq::pow2).collect(), f.clone())
}

pub fn ergodic_series_run(
    f: &FourierFunction,
    coeffs: &[Complex64],
    checkpoints: &[usize],
    sample_size: usize,
    seed: u64,
    tail: TailSpec,
) -> Result<ErgodicRun> {
    let spec = ergodic_spec(f, coeffs)?;
    let diagnostic = oscillation_diagnostic(&spec, checkpoints, sample_size, seed)?;
    let depth = (f.max_abs_freq().max(2).ilog2() + 2).min(62);
    let decay = transfer_decay(f, depth, tail)?;
    Ok(ErgodicRun { diagnostic, decay })
}

/// The two sufficient conditions for a decreasing filtration `B_n = T^{-n} B`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecreasingCriteria {
    /// `sum_l 2^{l(1-1/p)} (sum_{n>=2^l} ||Z_n - E_{n-2^l+1} Z_n||_p^{p'})^{1/p'}`; 0 for adapted families.
    #[serde(with = "crate::report::extended")]
    pub higher: f64,
    /// `sum_l 2^{l(1-1/p)} (sum_n ||E_{n+2^l-1} Z_n||_p^{p'})^{1/p'}` with a modeled tail in `l`.
    pub lower: CriterionValue,
    pub lower_terms: Vec<f64>,
}

fn fourier_norm(f: &FourierFunction, p: f64, j: u32) -> Result<f64> {
    if f.is_empty() {
        return Ok(0.0);
    }
    if p == 2.0 {
        return Ok(f.l2_norm());
    }
    render_strict(f, j)?.lp_norm(p)
}

/// Evaluates both conditions with `E_m Z = (L^m Z) o T^m` realized exactly on
/// coefficients. Norms other than `p = 2` are taken on the `2^J` grid.
pub fn decreasing_criteria(z: &[FourierFunction], p: f64, j: u32, tail: TailSpec) -> Result<DecreasingCriteria> {
    if !(p > 1.0) {
        return Err(Error::Exponent(p));
    }
    for zn in z {
        check_mean_zero(zn)?;
    }
    let pp = p_prime(p);
    let e = if p.is_infinite() { 1.0 } else { 1.0 - 1.0 / p };
    let mut higher = 0.0;
    let mut l = 0u32;
    while (1usize << l) < z.len() {
        let s = 1usize << l;
        let mut acc = 0.0;
        for (n, zn) in z.iter().enumerate().skip(s) {
            let level = (n - s + 1) as u32;
            let rest = zn.filter(|k| level < 63 && k % (1i64 << level) != 0 || level >= 63 && k != 0);
            acc += fourier_norm(&rest, p, j)?.powf(pp);
        }
        higher += 2f64.powf(l as f64 * e) * acc.powf(1.0 / pp);
        l += 1;
    }
    let mut lower_terms = Vec::new();
    for l in 0..7u32 {
        let shift = (1u32 << l) - 1;
        let mut acc = 0.0;
        for (n, zn) in z.iter().enumerate() {
            let level = n as u32 + shift;
            acc += fourier_norm(&cond_exp_decreasing(zn, level), p, j)?.powf(pp);
        }
        lower_terms.push(2f64.powf(l as f64 * e) * acc.powf(1.0 / pp));
    }
    while lower_terms.len() > 1 && *lower_terms.last().unwrap() == 0.0 {
        lower_terms.pop();
    }
    let lower = weighted_series(&lower_terms, 0.0, tail)?;
    Ok(DecreasingCriteria { higher, lower, lower_terms })
}
