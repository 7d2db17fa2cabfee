//! Functions on the torus R/Z: dyadic grid samples and finite Fourier sums.
//!
//! Sine convention used everywhere: `sin(2 pi m x)` is stored as `-i/2` at `+m`
//! and `+i/2` at `-m`.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValueKind {
    Real,
    Complex,
}

/// Samples `f(k / 2^J)`, `k = 0..2^J`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    resolution_log2: u32,
    samples: Vec<Complex64>,
    kind: ValueKind,
}

const MAX_RESOLUTION: u32 = 30;

fn check_finite(samples: &[Complex64]) -> Result<()> {
    match samples.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
        Some(k) => Err(Error::NonFinite(format!("sample {k}"))),
        None => Ok(()),
    }
}

impl GridFunction {
    pub fn new(resolution_log2: u32, samples: Vec<Complex64>, kind: ValueKind) -> Result<Self> {
        if resolution_log2 > MAX_RESOLUTION {
            return invalid(format!("resolution 2^{resolution_log2} is too large"));
        }
        if samples.len() != 1usize << resolution_log2 {
            return invalid(format!("expected {} samples, got {}", 1usize << resolution_log2, samples.len()));
        }
        check_finite(&samples)?;
        let samples = match kind {
            ValueKind::Real => samples.into_iter().map(|z| Complex64::new(z.re, 0.0)).collect(),
            ValueKind::Complex => samples,
        };
        Ok(GridFunction { resolution_log2, samples, kind })
    }

    pub fn from_real(resolution_log2: u32, values: Vec<f64>) -> Result<Self> {
        let samples = values.into_iter().map(|v| Complex64::new(v, 0.0)).collect();
        Self::new(resolution_log2, samples, ValueKind::Real)
    }

    /// Samples a real function at the grid points `k / 2^J`.
    pub fn sample_real(resolution_log2: u32, f: impl Fn(f64) -> f64) -> Result<Self> {
        let n = 1usize << resolution_log2;
        let h = 1.0 / n as f64;
        Self::from_real(resolution_log2, (0..n).map(|k| f(k as f64 * h)).collect())
    }

    pub fn zeros(resolution_log2: u32) -> Self {
        Self::constant(resolution_log2, 0.0)
    }

    pub fn constant(resolution_log2: u32, value: f64) -> Self {
        GridFunction {
            resolution_log2,
            samples: vec![Complex64::new(value, 0.0); 1usize << resolution_log2],
            kind: ValueKind::Real,
        }
    }

    pub fn resolution_log2(&self) -> u32 {
        self.resolution_log2
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn kind(&self) -> ValueKind {
        self.kind
    }

    pub fn is_real(&self) -> bool {
        self.kind == ValueKind::Real
    }

    pub fn real_parts(&self) -> Vec<f64> {
        self.samples.iter().map(|z| z.re).collect()
    }

    pub fn mean(&self) -> Complex64 {
        self.samples.iter().sum::<Complex64>() / self.len() as f64
    }

    /// `2^{-J} sum f conj(g)`.
    pub fn inner(&self, other: &GridFunction) -> Result<Complex64> {
        self.same_grid(other)?;
        let s: Complex64 = self.samples.iter().zip(&other.samples).map(|(a, b)| a * b.conj()).sum();
        Ok(s / self.len() as f64)
    }

    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        lp_norm(self, p)
    }

    pub fn sup_norm(&self) -> f64 {
        self.samples.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub(crate) fn same_grid(&self, other: &GridFunction) -> Result<()> {
        if self.resolution_log2 != other.resolution_log2 {
            return Err(Error::Resolution(self.resolution_log2, other.resolution_log2));
        }
        Ok(())
    }

    fn combine(&self, other: &GridFunction, op: impl Fn(Complex64, Complex64) -> Complex64) -> Result<Self> {
        self.same_grid(other)?;
        let samples = self.samples.iter().zip(&other.samples).map(|(a, b)| op(*a, *b)).collect();
        let kind = if self.is_real() && other.is_real() { ValueKind::Real } else { ValueKind::Complex };
        GridFunction::new(self.resolution_log2, samples, kind)
    }

    pub fn add(&self, other: &GridFunction) -> Result<Self> {
        self.combine(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &GridFunction) -> Result<Self> {
        self.combine(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &GridFunction) -> Result<Self> {
        self.combine(other, |a, b| a * b)
    }

    pub fn scale(&self, c: f64) -> Self {
        GridFunction {
            resolution_log2: self.resolution_log2,
            samples: self.samples.iter().map(|z| z * c).collect(),
            kind: self.kind,
        }
    }

    pub fn scale_complex(&self, c: Complex64) -> Self {
        let kind = if c.im == 0.0 { self.kind } else { ValueKind::Complex };
        GridFunction {
            resolution_log2: self.resolution_log2,
            samples: self.samples.iter().map(|z| z * c).collect(),
            kind,
        }
    }

    /// Pointwise modulus `|f|` as a real grid function.
    pub fn abs(&self) -> Self {
        GridFunction {
            resolution_log2: self.resolution_log2,
            samples: self.samples.iter().map(|z| Complex64::new(z.norm(), 0.0)).collect(),
            kind: ValueKind::Real,
        }
    }

    /// `x -> f(m x mod 1)` read off the grid itself: `g[k] = f[(m k) mod 2^J]`.
    pub fn dilate_grid(&self, m: u64) -> Self {
        let mask = (self.len() - 1) as u64;
        let samples = (0..self.len() as u64).map(|k| self.samples[(m.wrapping_mul(k) & mask) as usize]).collect();
        GridFunction { resolution_log2: self.resolution_log2, samples, kind: self.kind }
    }

    /// Sum of squared moduli, `2^{-J} sum |f|^2`.
    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|z| z.norm_sqr()).sum::<f64>() / self.len() as f64
    }
}

/// `(2^{-J} sum |f_k|^p)^{1/p}`, or the max modulus for `p = inf`.
pub fn lp_norm(f: &GridFunction, p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::Exponent(p));
    }
    Ok(lp_norm_slice(&f.samples, p))
}

pub(crate) fn lp_norm_slice(samples: &[Complex64], p: f64) -> f64 {
    let n = samples.len() as f64;
    if p == f64::INFINITY {
        return samples.iter().map(|z| z.norm()).fold(0.0, f64::max);
    }
    if p == 2.0 {
        return (samples.iter().map(|z| z.norm_sqr()).sum::<f64>() / n).sqrt();
    }
    if p == 1.0 {
        return samples.iter().map(|z| z.norm()).sum::<f64>() / n;
    }
    if p == 4.0 {
        return (samples.iter().map(|z| z.norm_sqr().powi(2)).sum::<f64>() / n).powf(0.25);
    }
    (samples.iter().map(|z| z.norm().powf(p)).sum::<f64>() / n).powf(1.0 / p)
}

pub(crate) fn lp_norm_real(values: &[f64], p: f64) -> f64 {
    let n = values.len() as f64;
    if p == f64::INFINITY {
        return values.iter().map(|v| v.abs()).fold(0.0, f64::max);
    }
    if p == 2.0 {
        return (values.iter().map(|v| v * v).sum::<f64>() / n).sqrt();
    }
    if p == 1.0 {
        return values.iter().map(|v| v.abs()).sum::<f64>() / n;
    }
    if p == 1.5 {
        return (values
            .iter()
            .map(|v| {
                let a = v.abs();
                a * a.sqrt()
            })
            .sum::<f64>()
            / n)
            .powf(1.0 / 1.5);
    }
    if p == 4.0 {
        return (values.iter().map(|v| (v * v) * (v * v)).sum::<f64>() / n).powf(0.25);
    }
    (values.iter().map(|v| v.abs().powf(p)).sum::<f64>() / n).powf(1.0 / p)
}

/// Cyclic rotation: the result samples `x -> f(x + shift_ticks / 2^J)`.
pub fn translate(f: &GridFunction, shift_ticks: i64) -> GridFunction {
    let n = f.len() as i64;
    let s = shift_ticks.rem_euclid(n) as usize;
    let mut samples = f.samples.clone();
    samples.rotate_left(s);
    GridFunction { resolution_log2: f.resolution_log2, samples, kind: f.kind }
}

/// Finitely supported Fourier series; zero amplitudes are never stored.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FourierFunction {
    coeffs: BTreeMap<i64, Complex64>,
}

impl FourierFunction {
    pub fn new() -> Self {
        Self::default()
    }

    /// Sums duplicate frequencies; rejects non-finite amplitudes.
    pub fn from_coeffs(items: impl IntoIterator<Item = (i64, Complex64)>) -> Result<Self> {
        let mut f = FourierFunction::new();
        for (m, c) in items {
            f.add_term(m, c)?;
        }
        Ok(f)
    }

    /// `amp * sin(2 pi m x)`.
    pub fn sine(m: i64, amp: f64) -> Result<Self> {
        let mut f = FourierFunction::new();
        f.add_sine(m, amp)?;
        Ok(f)
    }

    /// `amp * cos(2 pi m x)`.
    pub fn cosine(m: i64, amp: f64) -> Result<Self> {
        let mut f = FourierFunction::new();
        f.add_term(m, Complex64::new(amp / 2.0, 0.0))?;
        f.add_term(-m, Complex64::new(amp / 2.0, 0.0))?;
        Ok(f)
    }

    /// `amp * e^{2 pi i m x}`.
    pub fn exponential(m: i64, amp: Complex64) -> Result<Self> {
        FourierFunction::from_coeffs([(m, amp)])
    }

    pub fn add_term(&mut self, m: i64, c: Complex64) -> Result<()> {
        if !c.re.is_finite() || !c.im.is_finite() {
            return Err(Error::NonFinite(format!("amplitude at frequency {m}")));
        }
        let entry = self.coeffs.entry(m).or_insert(Complex64::new(0.0, 0.0));
        *entry += c;
        if *entry == Complex64::new(0.0, 0.0) {
            self.coeffs.remove(&m);
        }
        Ok(())
    }

    pub fn add_sine(&mut self, m: i64, amp: f64) -> Result<()> {
        self.add_term(m, Complex64::new(0.0, -amp / 2.0))?;
        self.add_term(-m, Complex64::new(0.0, amp / 2.0))
    }

    pub fn coeff(&self, m: i64) -> Complex64 {
        self.coeffs.get(&m).copied().unwrap_or_default()
    }

    pub fn coeffs(&self) -> &BTreeMap<i64, Complex64> {
        &self.coeffs
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        self.coeffs.iter().map(|(m, c)| (*m, *c))
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn mean(&self) -> Complex64 {
        self.coeff(0)
    }

    pub fn max_abs_freq(&self) -> u64 {
        self.coeffs.keys().map(|m| m.unsigned_abs()).max().unwrap_or(0)
    }

    /// `f(-m) = conj(f(m))` for all m, up to rounding in the amplitudes.
    pub fn is_conjugate_symmetric(&self) -> bool {
        self.coeffs.iter().all(|(m, c)| {
            let d = self.coeff(-m) - c.conj();
            d.norm() <= 1e-15 * c.norm()
        })
    }

    /// `(sum |c_m|^2)^{1/2}`, the exact L^2 norm.
    pub fn l2_norm(&self) -> f64 {
        self.coeffs.values().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Direct summation at a point.
    pub fn eval(&self, x: f64) -> Complex64 {
        self.coeffs
            .iter()
            .map(|(m, c)| {
                let phase = TAU * ((*m as f64) * x).rem_euclid(1.0);
                c * Complex64::from_polar(1.0, phase)
            })
            .sum()
    }

    pub fn scale(&self, a: Complex64) -> Self {
        if a == Complex64::new(0.0, 0.0) {
            return FourierFunction::new();
        }
        FourierFunction { coeffs: self.coeffs.iter().map(|(m, c)| (*m, c * a)).collect() }
    }

    pub fn add(&self, other: &FourierFunction) -> Self {
        let mut out = self.clone();
        for (m, c) in other.iter() {
            out.add_term(m, c).expect("finite amplitudes stay finite");
        }
        out
    }

    pub fn conj(&self) -> Self {
        FourierFunction { coeffs: self.coeffs.iter().map(|(m, c)| (-*m, c.conj())).collect() }
    }

    /// Removes the frequency-0 term.
    pub fn centered(&self) -> Self {
        let mut out = self.clone();
        out.coeffs.remove(&0);
        out
    }

    /// Keeps frequencies with `keep(m)` true.
    pub fn filter(&self, keep: impl Fn(i64) -> bool) -> Self {
        FourierFunction { coeffs: self.coeffs.iter().filter(|(m, _)| keep(**m)).map(|(m, c)| (*m, *c)).collect() }
    }

    /// Frequencies that do not satisfy `|m| < 2^{J-1}`.
    pub fn aliases_at(&self, resolution_log2: u32) -> Vec<i64> {
        let limit = if resolution_log2 == 0 { 1 } else { 1u64 << (resolution_log2 - 1) };
        self.coeffs.keys().filter(|m| **m != 0 && m.unsigned_abs() >= limit).copied().collect()
    }
}

/// Coefficients of `x -> f(m x)`: frequency `j` moves to `j m`.
pub fn dilate(f: &FourierFunction, m: i64) -> Result<FourierFunction> {
    if m < 1 {
        return invalid(format!("dilation factor must be >= 1, got {m}"));
    }
    let mut coeffs = BTreeMap::new();
    for (j, c) in f.iter() {
        let jm = j.checked_mul(m).ok_or_else(|| Error::Invalid(format!("frequency {j} * {m} overflows")))?;
        coeffs.insert(jm, c);
    }
    Ok(FourierFunction { coeffs })
}

/// Samples `sum_m c_m e^{2 pi i m k / 2^J}` by inverse FFT. Frequencies are folded
/// modulo `2^J`, so the grid values are exact even when aliasing occurs; use
/// [`FourierFunction::aliases_at`] or [`render_strict`] to detect that case.
pub fn render(f: &FourierFunction, resolution_log2: u32) -> Result<GridFunction> {
    if resolution_log2 > MAX_RESOLUTION {
        return invalid(format!("resolution 2^{resolution_log2} is too large"));
    }
    let n = 1usize << resolution_log2;
    let mut bins = vec![Complex64::new(0.0, 0.0); n];
    for (m, c) in f.iter() {
        bins[m.rem_euclid(n as i64) as usize] += c;
    }
    if n > 1 {
        FftPlanner::new().plan_fft_inverse(n).process(&mut bins);
    }
    let kind = if f.is_conjugate_symmetric() { ValueKind::Real } else { ValueKind::Complex };
    GridFunction::new(resolution_log2, bins, kind)
}

/// [`render`] that refuses aliased frequencies.
pub fn render_strict(f: &FourierFunction, resolution_log2: u32) -> Result<GridFunction> {
    if let Some(m) = f.aliases_at(resolution_log2).first() {
        return Err(Error::Aliasing { freq: m.to_string(), resolution: resolution_log2 });
    }
    render(f, resolution_log2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sin1() -> FourierFunction {
        FourierFunction::sine(1, 1.0).unwrap()
    }

    #[test]
    fn sine_at_quarter_points() {
        let g = render(&sin1(), 2).unwrap();
        let want = [0.0, 1.0, 0.0, -1.0];
        assert!(g.is_real());
        for (z, w) in g.samples().iter().zip(want) {
            assert!((z.re - w).abs() < 1e-15 && z.im == 0.0);
        }
    }

    #[test]
    fn empty_renders_to_zero() {
        let g = render(&FourierFunction::new(), 3).unwrap();
        assert_eq!(g.len(), 8);
        assert!(g.samples().iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn render_matches_direct_summation() {
        let mut f = FourierFunction::new();
        for m in 1..=64 {
            f.add_sine(m, 1.0 / m as f64).unwrap();
        }
        let g = render(&f, 10).unwrap();
        let err = (0..1024)
            .map(|k| {
                let x = k as f64 / 1024.0;
                let direct: f64 = (1..=64).map(|m| (TAU * m as f64 * x).sin() / m as f64).sum();
                (g.samples()[k].re - direct).abs()
            })
            .fold(0.0, f64::max);
        assert!(err < 1e-12, "{err}");
    }

    #[test]
    fn norms_of_sine() {
        let g = render(&sin1(), 12).unwrap();
        assert!((g.lp_norm(2.0).unwrap() - 0.5f64.sqrt()).abs() < 1e-9);
        assert!((g.lp_norm(f64::INFINITY).unwrap() - 1.0).abs() < 1e-6);
        assert!(matches!(g.lp_norm(0.5), Err(Error::Exponent(_))));
        let one = GridFunction::constant(5, 1.0);
        for p in [1.0, 1.5, 2.0, 3.0, 4.0, f64::INFINITY] {
            assert!((one.lp_norm(p).unwrap() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn quarter_shift_turns_sine_into_cosine() {
        let j = 10;
        let s = translate(&render(&sin1(), j).unwrap(), 1 << (j - 2));
        let c = render(&FourierFunction::cosine(1, 1.0).unwrap(), j).unwrap();
        let err = s.sub(&c).unwrap().sup_norm();
        assert!(err < 1e-14, "{err}");
        let g = render(&sin1(), j).unwrap();
        assert_eq!(translate(&g, 0), g);
        assert_eq!(translate(&g, 1 << j), g);
    }

    #[test]
    fn dilation_moves_frequencies() {
        let f = FourierFunction::exponential(1, Complex64::new(0.3, 0.1)).unwrap();
        let d = dilate(&f, 3).unwrap();
        assert_eq!(d.coeff(3), Complex64::new(0.3, 0.1));
        assert_eq!(d.len(), 1);
        assert_eq!(dilate(&f, 1).unwrap(), f);
        assert!(dilate(&f, 0).is_err());
    }

    #[test]
    fn rendered_dilation_matches_pointwise() {
        let mut f = FourierFunction::new();
        for m in 1..=20 {
            f.add_sine(m, 1.0 / (m * m) as f64).unwrap();
        }
        let g = render(&dilate(&f, 5).unwrap(), 10).unwrap();
        let err = (0..1024)
            .map(|k| {
                let x = (5.0 * k as f64 / 1024.0).rem_euclid(1.0);
                (g.samples()[k] - f.eval(x)).norm()
            })
            .fold(0.0, f64::max);
        assert!(err < 1e-12, "{err}");
        let grid = render(&f, 10).unwrap().dilate_grid(5);
        assert!(grid.sub(&g).unwrap().sup_norm() < 1e-12);
    }

    #[test]
    fn aliasing_is_detected() {
        let f = FourierFunction::sine(8, 1.0).unwrap();
        assert_eq!(f.aliases_at(4), vec![-8, 8]);
        assert!(f.aliases_at(5).is_empty());
        assert!(matches!(render_strict(&f, 4), Err(Error::Aliasing { .. })));
        assert!(render(&f, 4).is_ok());
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(FourierFunction::exponential(1, Complex64::new(f64::NAN, 0.0)).is_err());
        assert!(GridFunction::from_real(2, vec![0.0; 3]).is_err());
        assert!(GridFunction::from_real(1, vec![0.0, f64::INFINITY]).is_err());
        let mut f = sin1();
        f.add_sine(1, -1.0).unwrap();
        assert!(f.is_empty());
    }

    proptest! {
        #[test]
        fn norms_are_monotone_in_p(vals in prop::collection::vec(-5.0f64..5.0, 64)) {
            let g = GridFunction::from_real(6, vals).unwrap();
            let ps = [1.0, 1.5, 2.0, 3.0, 4.0, 8.0, f64::INFINITY];
            for w in ps.windows(2) {
                let (a, b) = (g.lp_norm(w[0]).unwrap(), g.lp_norm(w[1]).unwrap());
                prop_assert!(a <= b * (1.0 + 1e-12) + 1e-300);
            }
        }

        #[test]
        fn translation_preserves_norms(vals in prop::collection::vec(-5.0f64..5.0, 32), s in -100i64..100) {
            let g = GridFunction::from_real(5, vals).unwrap();
            let t = translate(&g, s);
            for p in [1.0, 2.0, 3.0, f64::INFINITY] {
                prop_assert!((g.lp_norm(p).unwrap() - t.lp_norm(p).unwrap()).abs() <= 1e-12 * g.lp_norm(p).unwrap() + 1e-300);
            }
        }
    }
}
