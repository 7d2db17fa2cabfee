//! Dilated series `sum_k a_k f(n_k x)`: grid partial sums, sampled oscillation
//! diagnostics, the contraction bound, the lacunary criteria and the Gaposhkin
//! construction.
//!
//! Frequencies are stored as `odd * 2^shift` so that `2^k` stays exact far beyond
//! 64 bits. Sample points are random binary expansions ([`BitPoint`]), which makes
//! `frac(n x)` exact for every such frequency.

use std::cmp::Ordering;
use std::f64::consts::TAU;
use std::fmt;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dyadic_martingale::p_prime;
use crate::error::{invalid, Error, Result};
use crate::modulus::{modulus_profile, ModulusProfile};
use crate::par::{map_range, Exec};
use crate::report::{csv_string, fmt_num, AuditReport};
use crate::tail::{fit_last_octaves, loglog_slope, TailFamily, TailModel, TailSpec};
use crate::torus_fn::{lp_norm_slice, render, render_strict, FourierFunction, GridFunction};

/// Positive integer `odd * 2^shift`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Freq {
    pub odd: u64,
    pub shift: u32,
}

impl Freq {
    pub fn new(n: u64) -> Result<Self> {
        if n == 0 {
            return invalid("frequencies must be positive");
        }
        Ok(Freq { odd: n >> n.trailing_zeros(), shift: n.trailing_zeros() })
    }

    pub fn pow2(k: u32) -> Self {
        Freq { odd: 1, shift: k }
    }

    pub fn to_u64(self) -> Option<u64> {
        if self.shift >= 64 || self.odd.leading_zeros() < self.shift {
            return None;
        }
        Some(self.odd << self.shift)
    }

    pub fn log2(self) -> f64 {
        (self.odd as f64).log2() + self.shift as f64
    }

    /// `floor(log2 n)`.
    pub fn floor_log2(self) -> u32 {
        63 - self.odd.leading_zeros() + self.shift
    }

    pub fn as_f64(self) -> f64 {
        self.odd as f64 * 2f64.powi(self.shift as i32)
    }

    pub fn checked_mul(self, m: u64) -> Option<Freq> {
        let f = Freq::new(m).ok()?;
        Some(Freq { odd: self.odd.checked_mul(f.odd)?, shift: self.shift.checked_add(f.shift)? })
    }

    /// `n mod 2^j`.
    pub fn mod_pow2(self, j: u32) -> u64 {
        if self.shift >= j {
            return 0;
        }
        let mask = if j >= 64 { u64::MAX } else { (1u64 << j) - 1 };
        (self.odd.wrapping_shl(self.shift)) & mask
    }

    /// `self / other` as a float.
    pub fn ratio(self, other: Freq) -> f64 {
        (self.odd as f64 / other.odd as f64) * 2f64.powi(self.shift as i32 - other.shift as i32)
    }
}

impl Ord for Freq {
    fn cmp(&self, other: &Self) -> Ordering {
        let s = self.shift.min(other.shift);
        let (da, db) = (self.shift - s, other.shift - s);
        if da >= 64 {
            return Ordering::Greater;
        }
        if db >= 64 {
            return Ordering::Less;
        }
        ((self.odd as u128) << da).cmp(&((other.odd as u128) << db))
    }
}

impl PartialOrd for Freq {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Freq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.to_u64() {
            Some(n) => write!(f, "{n}"),
            None => write!(f, "{}*2^{}", self.odd, self.shift),
        }
    }
}

/// A point of [0,1) given by its binary expansion (bit 1 first).
#[derive(Clone, Debug)]
pub struct BitPoint {
    words: Vec<u64>,
}

impl BitPoint {
    /// Enough random bits to read `frac(n x)` for every `n` with shift `<= max_shift`.
    pub fn random<R: Rng>(rng: &mut R, max_shift: u32) -> Self {
        let len = max_shift as usize / 64 + 3;
        BitPoint { words: (0..len).map(|_| rng.random()).collect() }
    }

    /// Dyadic truncation of `x` to 64 bits followed by zeros.
    pub fn from_f64(x: f64, max_shift: u32) -> Self {
        let frac = x.rem_euclid(1.0);
        let mut words = vec![0u64; max_shift as usize / 64 + 3];
        words[0] = (frac * 2f64.powi(64)) as u64;
        BitPoint { words }
    }

    pub fn to_f64(&self) -> f64 {
        self.words[0] as f64 * 2f64.powi(-64)
    }

    /// Bits `e+1 .. e+128` as an integer, i.e. `floor(2^128 frac(2^e x))`.
    fn window(&self, e: u32) -> u128 {
        let w = e as usize / 64;
        let o = e % 64;
        let hi = ((self.words[w] as u128) << 64) | self.words[w + 1] as u128;
        if o == 0 {
            hi
        } else {
            (hi << o) | (self.words[w + 2] >> (64 - o)) as u128
        }
    }

    /// `frac(n x)` to 53 bits.
    pub fn frac_mul(&self, n: Freq) -> f64 {
        let prod = (n.odd as u128).wrapping_mul(self.window(n.shift));
        (prod >> 75) as f64 * 2f64.powi(-53)
    }
}

/// `sum_k coeffs[k] generator(freqs[k] x)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesSpec {
    pub coeffs: Vec<Complex64>,
    pub freqs: Vec<Freq>,
    pub generator: FourierFunction,
}

impl SeriesSpec {
    pub fn new(coeffs: Vec<Complex64>, freqs: Vec<Freq>, generator: FourierFunction) -> Result<Self> {
        let s = SeriesSpec { coeffs, freqs, generator };
        s.validate()?;
        Ok(s)
    }

    pub fn real(coeffs: &[f64], freqs: Vec<Freq>, generator: FourierFunction) -> Result<Self> {
        Self::new(coeffs.iter().map(|a| Complex64::new(*a, 0.0)).collect(), freqs, generator)
    }

    pub fn validate(&self) -> Result<()> {
        if self.coeffs.len() != self.freqs.len() {
            return invalid("one coefficient per frequency required");
        }
        if self.freqs.windows(2).any(|w| w[0] >= w[1]) {
            return invalid("frequencies must be strictly increasing");
        }
        if self.generator.mean() != Complex64::new(0.0, 0.0) {
            return Err(Error::NotCentered(self.generator.mean().norm()));
        }
        if self.coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::NonFinite("series coefficient".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Keeps the terms with index `k % r == i`.
    pub fn interleaved(&self, r: usize, i: usize) -> SeriesSpec {
        let keep = |k: &usize| k % r == i;
        SeriesSpec {
            coeffs: (0..self.len()).filter(keep).map(|k| self.coeffs[k]).collect(),
            freqs: (0..self.len()).filter(keep).map(|k| self.freqs[k]).collect(),
            generator: self.generator.clone(),
        }
    }

    /// Number of terms whose dilated generator reaches `|m n_k| >= 2^{J-1}`.
    pub fn aliased_terms(&self, j: u32) -> usize {
        let top = self.generator.max_abs_freq();
        self.freqs
            .iter()
            .filter(|n| match n.checked_mul(top.max(1)) {
                Some(f) => f.log2() >= j as f64 - 1.0,
                None => true,
            })
            .count()
    }
}

/// `inf_k n_{k+1} / n_k`.
pub fn lacunarity_ratio(freqs: &[Freq]) -> Result<f64> {
    if freqs.len() < 2 {
        return invalid("need at least two frequencies");
    }
    Ok(freqs.windows(2).map(|w| w[1].ratio(w[0])).fold(f64::INFINITY, f64::min))
}

fn generator_grid(spec: &SeriesSpec, j: u32) -> Result<GridFunction> {
    spec.validate()?;
    render_strict(&spec.generator, j)
}

/// `S_0, ..., S_N` on the `2^J` grid; term `k` samples `f` at `(n_k j mod 2^J) / 2^J`,
/// which is exact whenever the generator itself renders without aliasing.
pub fn partial_sums(spec: &SeriesSpec, n: usize, j: u32) -> Result<Vec<GridFunction>> {
    if n >= spec.len() {
        return invalid(format!("N = {n} needs at least {} terms", n + 1));
    }
    let g = generator_grid(spec, j)?;
    let mut acc = GridFunction::new(j, vec![Complex64::new(0.0, 0.0); 1 << j], g.kind())?;
    let mut out = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let term = g.dilate_grid(spec.freqs[k].mod_pow2(j)).scale_complex(spec.coeffs[k]);
        acc = acc.add(&term)?;
        out.push(acc.clone());
    }
    Ok(out)
}

/// [`partial_sums`] that also refuses terms whose dilated spectrum aliases.
pub fn partial_sums_strict(spec: &SeriesSpec, n: usize, j: u32) -> Result<Vec<GridFunction>> {
    let head = SeriesSpec {
        coeffs: spec.coeffs[..=n.min(spec.len().saturating_sub(1))].to_vec(),
        freqs: spec.freqs[..=n.min(spec.len().saturating_sub(1))].to_vec(),
        generator: spec.generator.clone(),
    };
    if head.aliased_terms(j) > 0 {
        return Err(Error::Aliasing { freq: "dilated generator".into(), resolution: j });
    }
    partial_sums(spec, n, j)
}

/// `S*_N = max_{n<=N} |S_n|` on the grid.
pub fn maximal_function(spec: &SeriesSpec, n: usize, j: u32) -> Result<GridFunction> {
    let sums = partial_sums(spec, n, j)?;
    let mut best = vec![0.0f64; 1 << j];
    for s in &sums {
        for (b, v) in best.iter_mut().zip(s.samples()) {
            *b = b.max(v.norm());
        }
    }
    GridFunction::from_real(j, best)
}

/// Evaluates partial sums of a spec at [`BitPoint`]s.
pub(crate) struct PointEvaluator<'a> {
    spec: &'a SeriesSpec,
    terms: Vec<(i64, Complex64)>,
    pub(crate) max_shift: u32,
}

impl<'a> PointEvaluator<'a> {
    pub(crate) fn new(spec: &'a SeriesSpec, upto: usize) -> Result<Self> {
        spec.validate()?;
        let real = spec.generator.is_conjugate_symmetric();
        let terms: Vec<(i64, Complex64)> = if real {
            spec.generator.iter().filter(|(m, _)| *m > 0).map(|(m, c)| (m, c * 2.0)).collect()
        } else {
            spec.generator.iter().collect()
        };
        let mut max_shift = 0;
        for n in &spec.freqs[..upto] {
            for (m, _) in &terms {
                let f = n
                    .checked_mul(m.unsigned_abs())
                    .ok_or_else(|| Error::Invalid(format!("frequency {n} * {m} exceeds the 64-bit odd part")))?;
                max_shift = max_shift.max(f.shift);
            }
        }
        Ok(PointEvaluator { spec, terms, max_shift })
    }

    fn is_real(&self) -> bool {
        self.spec.generator.is_conjugate_symmetric()
    }

    /// `f(n x)` for the generator.
    pub(crate) fn term(&self, x: &BitPoint, n: Freq) -> Complex64 {
        let mut s = Complex64::new(0.0, 0.0);
        for (m, c) in &self.terms {
            let t = x.frac_mul(n.checked_mul(m.unsigned_abs()).expect("checked at construction"));
            let phase = if *m < 0 { -TAU * t } else { TAU * t };
            s += c * Complex64::from_polar(1.0, phase);
        }
        if self.is_real() {
            Complex64::new(s.re, 0.0)
        } else {
            s
        }
    }

    /// `S_0(x), ..., S_{upto-1}(x)`.
    pub(crate) fn partial_sums(&self, x: &BitPoint, upto: usize) -> Vec<Complex64> {
        let mut acc = Complex64::new(0.0, 0.0);
        (0..upto)
            .map(|k| {
                let a = self.spec.coeffs[k];
                if a != Complex64::new(0.0, 0.0) {
                    acc += a * self.term(x, self.spec.freqs[k]);
                }
                acc
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Converging,
    Diverging,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Converging => "converging",
            Verdict::Diverging => "diverging",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

/// Oscillation `diam{S_p : N' <= p <= min(2N', K-1)}` per checkpoint, aggregated over
/// sample points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OscillationDiagnostic {
    pub checkpoints: Vec<usize>,
    pub median: Vec<f64>,
    pub q90: Vec<f64>,
    pub verdict: Verdict,
    /// Log-log slope of the median against the checkpoint (absent when a median is 0).
    pub trend_slope: Option<f64>,
    pub sample_size: usize,
    pub seed: u64,
}

impl OscillationDiagnostic {
    pub fn to_csv(&self) -> Result<String> {
        let rows = (0..self.checkpoints.len())
            .map(|i| vec![self.checkpoints[i].to_string(), fmt_num(self.median[i]), fmt_num(self.q90[i])]);
        csv_string(&["checkpoint", "median_osc", "q90_osc"], rows)
    }
}

/// Type-7 sample quantile.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    if v.is_empty() {
        return f64::NAN;
    }
    let h = (v.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(v.len() - 1);
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

fn cross(o: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// Diameter of a planar point set (convex hull, then all hull pairs).
pub fn diameter(points: &[Complex64]) -> f64 {
    if points.iter().all(|z| z.im == 0.0) {
        let (lo, hi) = points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), z| (a.min(z.re), b.max(z.re)));
        return if points.is_empty() { 0.0 } else { hi - lo };
    }
    let mut pts: Vec<(f64, f64)> = points.iter().map(|z| (z.re, z.im)).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    pts.dedup();
    if pts.len() < 3 {
        return match pts.len() {
            2 => ((pts[0].0 - pts[1].0).powi(2) + (pts[0].1 - pts[1].1).powi(2)).sqrt(),
            _ => 0.0,
        };
    }
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &(f64, f64)>> =
            if pass == 0 { Box::new(pts.iter()) } else { Box::new(pts.iter().rev()) };
        for p in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], *p) <= 0.0 {
                hull.pop();
            }
            hull.push(*p);
        }
        hull.pop();
    }
    let mut best = 0.0f64;
    for (i, a) in hull.iter().enumerate() {
        for b in &hull[i + 1..] {
            best = best.max((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2));
        }
    }
    best.sqrt()
}

fn check_checkpoints(checkpoints: &[usize], k: usize) -> Result<()> {
    if checkpoints.is_empty() || checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        return invalid("checkpoints must be nonempty and increasing");
    }
    if *checkpoints.last().unwrap() >= k {
        return invalid(format!("checkpoint {} is beyond the {k} available terms", checkpoints.last().unwrap()));
    }
    Ok(())
}

/// Oscillations per checkpoint for one point's partial sums.
pub(crate) fn oscillations(sums: &[Complex64], checkpoints: &[usize]) -> Vec<f64> {
    checkpoints
        .iter()
        .map(|&c| {
            let hi = (2 * c).min(sums.len() - 1);
            diameter(&sums[c..=hi])
        })
        .collect()
}

/// Aggregates per-point oscillations (`osc[point][checkpoint]`) and applies the
/// verdict rules: converging when the last median is at most half the median at
/// the largest checkpoint `<= last/100` (or the first one); diverging when medians
/// strictly increase; inconclusive otherwise.
pub(crate) fn aggregate(osc: &[Vec<f64>], checkpoints: &[usize], seed: u64) -> OscillationDiagnostic {
    let nc = checkpoints.len();
    let column = |i: usize| osc.iter().map(|row| row[i]).collect::<Vec<f64>>();
    let median: Vec<f64> = (0..nc).map(|i| quantile(&column(i), 0.5)).collect();
    let q90: Vec<f64> = (0..nc).map(|i| quantile(&column(i), 0.9)).collect();
    let last = checkpoints[nc - 1];
    let reference = (0..nc).rev().find(|i| checkpoints[*i] * 100 <= last).unwrap_or(0);
    let verdict = if median[nc - 1] <= median[reference] / 2.0 {
        Verdict::Converging
    } else if nc >= 2 && median.windows(2).all(|w| w[1] > w[0]) {
        Verdict::Diverging
    } else {
        Verdict::Inconclusive
    };
    let trend_slope = if nc >= 2 && median.iter().all(|m| *m > 0.0) {
        let xs: Vec<f64> = checkpoints.iter().map(|c| (*c).max(1) as f64).collect();
        loglog_slope(&xs, &median).ok()
    } else {
        None
    };
    OscillationDiagnostic {
        checkpoints: checkpoints.to_vec(),
        median,
        q90,
        verdict,
        trend_slope,
        sample_size: osc.len(),
        seed,
    }
}

pub(crate) fn point_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Sampled oscillation diagnostic at random binary expansions `x`.
pub fn oscillation_diagnostic(
    spec: &SeriesSpec,
    checkpoints: &[usize],
    sample_size: usize,
    seed: u64,
) -> Result<OscillationDiagnostic> {
    oscillation_diagnostic_with(spec, checkpoints, sample_size, seed, Exec::default())
}

pub fn oscillation_diagnostic_with(
    spec: &SeriesSpec,
    checkpoints: &[usize],
    sample_size: usize,
    seed: u64,
    exec: Exec,
) -> Result<OscillationDiagnostic> {
    if sample_size < 100 {
        return invalid("sample size must be at least 100");
    }
    check_checkpoints(checkpoints, spec.len())?;
    let upto = (2 * checkpoints.last().unwrap()).min(spec.len() - 1) + 1;
    let eval = PointEvaluator::new(spec, upto)?;
    let osc = map_range(exec, sample_size, |i| {
        let x = BitPoint::random(&mut point_rng(seed, i), eval.max_shift);
        oscillations(&eval.partial_sums(&x, upto), checkpoints)
    });
    Ok(aggregate(&osc, checkpoints, seed))
}

/// Block average of `e^{2 pi i F x}` on `[k/2^n, (k+1)/2^n)`, for all `k`.
fn exp_block_means(freq: i64, n: u32) -> Vec<Complex64> {
    let blocks = 1usize << n;
    if freq == 0 {
        return vec![Complex64::new(1.0, 0.0); blocks];
    }
    let r = freq.rem_euclid(blocks as i64);
    if r == 0 {
        return vec![Complex64::new(0.0, 0.0); blocks];
    }
    let theta = TAU * freq as f64 / blocks as f64;
    let factor = (Complex64::from_polar(1.0, theta) - 1.0) / Complex64::new(0.0, theta);
    (0..blocks)
        .map(|k| factor * Complex64::from_polar(1.0, TAU * ((r * k as i64) % blocks as i64) as f64 / blocks as f64))
        .collect()
}

/// `||E(f(m.) | F_n)||_p <= (2^n / m) ||f||_p`, and at `p = 2` also the refined
/// `sqrt(l 2^n) / m ||f||_2` with `l = m mod 2^n`. The conditional expectation is
/// exact (Fourier form); `||f||_p` is taken on the `2^J` grid.
pub fn contraction_audit(f: &FourierFunction, m: u64, n: u32, p: f64, j: u32) -> Result<Vec<AuditReport>> {
    if f.mean() != Complex64::new(0.0, 0.0) {
        return Err(Error::NotCentered(f.mean().norm()));
    }
    if m == 0 {
        return invalid("m must be >= 1");
    }
    if p.is_nan() || p < 1.0 {
        return Err(Error::Exponent(p));
    }
    if n > 24 {
        return invalid("level too deep for exact block enumeration");
    }
    let blocks = 1usize << n;
    let mut ce = vec![Complex64::new(0.0, 0.0); blocks];
    for (freq, c) in f.iter() {
        let big = freq.checked_mul(m as i64).ok_or_else(|| Error::Invalid("dilated frequency overflows".into()))?;
        for (acc, v) in ce.iter_mut().zip(exp_block_means(big, n)) {
            *acc += c * v;
        }
    }
    let lhs = lp_norm_slice(&ce, p);
    let norm = render(f, j)?.lp_norm(p)?;
    let c = blocks as f64 / m as f64;
    let mut out = vec![AuditReport::upper_bound(lhs, c * norm, c, format!("contraction m={m} n={n} p={p}"))];
    if p == 2.0 {
        let l = m % blocks as u64;
        let c2 = ((l as f64) * blocks as f64).sqrt() / m as f64;
        out.push(AuditReport::upper_bound(lhs, c2 * norm, c2, format!("contraction-remark m={m} n={n} l={l}")));
    }
    Ok(out)
}

/// Result of [`theo_dilated_criteria`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TheoDilated {
    #[serde(with = "crate::report::extended")]
    pub p: f64,
    /// Number of interleaved sub-series (at most one term per octave each).
    pub r: usize,
    /// `sum_l 2^{l(1-1/p)} sup_k omega_p(n_k / 2^{m_{k+2^l}}, f)`.
    #[serde(with = "crate::report::extended")]
    pub sum1: f64,
    /// `sum_l 2^{l(1-1/p)} sup_{k >= 2^l} 2^{m_{k+1-2^l}} / n_k`.
    #[serde(with = "crate::report::extended")]
    pub sum2: f64,
    pub finite: bool,
    pub tail: TailModel,
    pub claim: String,
    /// Coefficient-weighted sums of the data `<=` `||a||_{p'}` times the sup forms.
    pub report: AuditReport,
}

struct OmegaLookup<'a> {
    profile: &'a ModulusProfile,
    tail: TailModel,
}

impl OmegaLookup<'_> {
    /// `omega_p(delta)` with `delta` rounded up to a dyadic; model beyond the grid.
    fn at(&self, delta: f64) -> f64 {
        let n = (-delta.log2()).floor();
        if n <= 0.0 {
            return self.profile.values[0];
        }
        let j = self.profile.source_resolution as f64;
        if n <= j {
            self.profile.values[n as usize]
        } else {
            self.tail.value(n).min(self.profile.values[self.profile.source_resolution as usize])
        }
    }
}

const MAX_OCTAVES: i32 = 400;

fn sup_sums(spec: &SeriesSpec, q: f64, p: f64, omega: &OmegaLookup, weight_tail: f64) -> (f64, f64, f64, f64) {
    let kk = spec.len();
    let m: Vec<u32> = spec.freqs.iter().map(|f| f.floor_log2()).collect();
    let e = 1.0 - 1.0 / p;
    let pp = p_prime(p);
    let abs: Vec<f64> = spec.coeffs.iter().map(|a| a.norm()).collect();
    let (mut s1, mut s2, mut w1, mut w2) = (0.0, 0.0, 0.0, 0.0);
    let tail_converges = omega.tail.converges_weighted(weight_tail);
    for l in 0..MAX_OCTAVES {
        let step = 2f64.powi(l);
        let scale = 2f64.powf(l as f64 * e);
        let bound = 2.0 / q.powf(step);
        let (mut sup1, mut acc1) = (0.0f64, 0.0f64);
        if step < kk as f64 {
            let st = step as usize;
            for k in 0..kk - st {
                let delta = spec.freqs[k].as_f64() / 2f64.powi(m[k + st] as i32);
                let w = omega.at(delta);
                sup1 = sup1.max(w);
                acc1 += (abs[k] * w).powf(pp);
            }
        } else {
            sup1 = omega.at(bound);
        }
        let (mut sup2, mut acc2) = (0.0f64, 0.0f64);
        if step < kk as f64 {
            let st = step as usize;
            for k in st..kk {
                let v = 2f64.powi(m[k + 1 - st] as i32) / spec.freqs[k].as_f64();
                sup2 = sup2.max(v);
                acc2 += (abs[k] * v).powf(pp);
            }
        } else {
            sup2 = q.powf(1.0 - step);
        }
        s1 += scale * sup1;
        s2 += scale * sup2;
        w1 += scale * acc1.powf(1.0 / pp);
        w2 += scale * acc2.powf(1.0 / pp);
        if step >= kk as f64 && scale * (sup1 + sup2) < 1e-18 * (s1 + s2).max(1e-300) {
            break;
        }
    }
    if !tail_converges {
        s1 = f64::INFINITY;
    }
    (s1, s2, w1, w2)
}

/// Sup-form criteria for `sum a_k f(n_k x)` along `A_k = F_{m_k}`, `m_k = floor(log2 n_k)`.
/// Series with more than one term per octave are split into `r` interleaved pieces.
pub fn theo_dilated_criteria(spec: &SeriesSpec, p: f64, j: u32, tail: TailSpec) -> Result<TheoDilated> {
    let profile = modulus_profile(&generator_grid(spec, j)?, p)?;
    theo_dilated_criteria_with_profile(spec, &profile, tail)
}

pub fn theo_dilated_criteria_with_profile(
    spec: &SeriesSpec,
    profile: &ModulusProfile,
    tail: TailSpec,
) -> Result<TheoDilated> {
    spec.validate()?;
    let p = profile.p;
    if !(p > 1.0) {
        return Err(Error::Exponent(p));
    }
    let q = lacunarity_ratio(&spec.freqs)?;
    if q <= 1.0 {
        return invalid(format!("frequencies are not lacunary (ratio {q})"));
    }
    let model = if profile.values[1..].iter().all(|v| *v == 0.0) {
        TailModel::Vanishing
    } else {
        fit_last_octaves(tail, &profile.values[1..], 4)?.model
    };
    let weight = if p.is_infinite() { 0.0 } else { 1.0 / p };
    let omega = OmegaLookup { profile, tail: model };
    let r = if q >= 2.0 { 1 } else { (2f64.ln() / q.ln()).ceil() as usize };
    let pp = p_prime(p);
    let (mut s1, mut s2, mut lhs, mut rhs) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..r {
        let sub = spec.interleaved(r, i);
        if sub.is_empty() {
            continue;
        }
        let qs = if sub.len() >= 2 { lacunarity_ratio(&sub.freqs)? } else { q.powi(r as i32) };
        let (a, b, w1, w2) = sup_sums(&sub, qs, p, &omega, weight);
        let norm = sub.coeffs.iter().map(|c| c.norm().powf(pp)).sum::<f64>().powf(1.0 / pp);
        s1 += a;
        s2 += b;
        lhs += w1 + w2;
        rhs += norm * (a + b);
    }
    let finite = s1.is_finite() && s2.is_finite();
    let claim = if finite {
        format!("both sums finite: every l^{pp} coefficient sequence gives a.e. and L^{p} convergence")
    } else {
        "criterion not met: no conclusion for l^p' coefficients".to_string()
    };
    let report = AuditReport::upper_bound(lhs, rhs, 1.0, format!("theo-dilated p={p} r={r}"));
    Ok(TheoDilated { p, r, sum1: s1, sum2: s2, finite, tail: model, claim, report })
}

/// `L_0 = 1`, `L_1(x) = max(1, ln x)`, `L_i = L_1 o L_{i-1}`.
pub fn iterated_log(i: u32, x: f64) -> f64 {
    if i == 0 {
        return 1.0;
    }
    let mut v = x;
    for _ in 0..i {
        v = v.ln().max(1.0);
    }
    v
}

/// Largest generator frequency exponent representable as a signed 64-bit frequency.
pub const GAPOSHKIN_MAX_GENERATOR_TERMS: u32 = 60;

/// Generator `sum_{k=1}^{min(K,60)} sin(2^k 2 pi x) / (k prod_{i<=m} L_i(k))`,
/// coefficients `a_n = 1/(sqrt(n prod_{i<m} L_i(n)) L_m(n))` for `n = 1..=K`,
/// frequencies `n_k = 2^n`.
pub fn gaposhkin_example(m: u32, k: usize) -> Result<SeriesSpec> {
    if k < 2 {
        return invalid("K must be >= 2");
    }
    let mut generator = FourierFunction::new();
    for kk in 1..=(k as u32).min(GAPOSHKIN_MAX_GENERATOR_TERMS) {
        let x = kk as f64;
        let denom = x * (0..=m).map(|i| iterated_log(i, x)).product::<f64>();
        generator.add_sine(1i64 << kk, 1.0 / denom)?;
    }
    let coeffs: Vec<f64> = (1..=k)
        .map(|n| {
            let x = n as f64;
            1.0 / ((x * (0..m).map(|i| iterated_log(i, x)).product::<f64>()).sqrt() * iterated_log(m, x))
        })
        .collect();
    let freqs = (1..=k as u32).map(Freq::pow2).collect();
    SeriesSpec::real(&coeffs, freqs, generator)
}

/// One row per checkpoint of [`nsc_divergence_probe`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeRow {
    pub checkpoint: usize,
    /// Sampled `P((S*_N)^2 >= lambda D sum_{k<=N} |a_k|^2)`.
    pub probability: f64,
    /// `((1 - lambda) D sum|a|^2 / ||(S*_N)^2||_q)^{q/(q-1)}`, `q = p/2`.
    pub floor: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DivergenceProbe {
    pub rows: Vec<ProbeRow>,
    pub lambda: f64,
    pub riesz_lower: f64,
    /// Every sampled probability at or above its positive floor.
    pub floor_maintained: bool,
    pub seed: u64,
}

impl DivergenceProbe {
    pub fn to_csv(&self) -> Result<String> {
        let rows = self.rows.iter().map(|r| vec![r.checkpoint.to_string(), fmt_num(r.probability), fmt_num(r.floor)]);
        csv_string(&["checkpoint", "probability", "pz_floor"], rows)
    }
}

/// Anti-concentration evidence of non-convergence for coefficients outside l^2.
pub fn nsc_divergence_probe(
    spec: &SeriesSpec,
    p: f64,
    riesz_lower: f64,
    checkpoints: &[usize],
    sample_size: usize,
    seed: u64,
) -> Result<DivergenceProbe> {
    nsc_divergence_probe_at(spec, p, riesz_lower, 0.5, checkpoints, sample_size, seed)
}

pub fn nsc_divergence_probe_at(
    spec: &SeriesSpec,
    p: f64,
    riesz_lower: f64,
    lambda: f64,
    checkpoints: &[usize],
    sample_size: usize,
    seed: u64,
) -> Result<DivergenceProbe> {
    if !(p > 2.0) {
        return Err(Error::Exponent(p));
    }
    if !(riesz_lower > 0.0) {
        return invalid("riesz_lower must be positive");
    }
    if !(lambda > 0.0 && lambda < 1.0) {
        return invalid("lambda must lie in (0,1)");
    }
    check_checkpoints(checkpoints, spec.len())?;
    let sq: Vec<f64> = spec.coeffs.iter().map(|a| a.norm_sqr()).collect();
    if sq.len() >= 8 {
        if let TailModel::Power { exponent, .. } = fit_last_octaves(TailSpec::Fit(TailFamily::Power), &sq, 4)?.model {
            if exponent > 1.0 + 1e-6 {
                return Err(Error::Hypothesis(format!("|a_k|^2 decays like k^-{exponent}: coefficients are in l^2")));
            }
        }
    }
    let upto = checkpoints.last().unwrap() + 1;
    let eval = PointEvaluator::new(spec, upto)?;
    let maxima: Vec<Vec<f64>> = map_range(Exec::default(), sample_size, |i| {
        let x = BitPoint::random(&mut point_rng(seed, i), eval.max_shift);
        let sums = eval.partial_sums(&x, upto);
        let mut best = 0.0f64;
        let mut run = Vec::with_capacity(upto);
        for s in sums {
            best = best.max(s.norm());
            run.push(best);
        }
        checkpoints.iter().map(|c| run[*c]).collect()
    });
    let d = riesz_lower * riesz_lower;
    let q = p / 2.0;
    let mut rows = Vec::new();
    for (ci, &c) in checkpoints.iter().enumerate() {
        let energy: f64 = sq[..=c].iter().sum();
        let z: Vec<f64> = maxima.iter().map(|row| row[ci] * row[ci]).collect();
        let prob = z.iter().filter(|v| **v >= lambda * d * energy).count() as f64 / z.len() as f64;
        let zq = (z.iter().map(|v| v.powf(q)).sum::<f64>() / z.len() as f64).powf(1.0 / q);
        let floor = if zq > 0.0 { ((1.0 - lambda) * d * energy / zq).min(1.0).powf(q / (q - 1.0)) } else { 0.0 };
        rows.push(ProbeRow { checkpoint: c, probability: prob, floor });
    }
    let floor_maintained = rows.iter().all(|r| r.floor > 0.0 && r.probability >= r.floor);
    Ok(DivergenceProbe { rows, lambda, riesz_lower, floor_maintained, seed })
}

/// Coefficient rule of a [`SeriesDescriptor`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CoeffRule {
    List(Vec<f64>),
    /// `"power:s"` (`(k+1)^{-s}`), `"geometric:r"` (`r^k`) or `"gaposhkin:m"`.
    Formula(String),
}

/// Frequency rule: explicit list or `"pow:q"` (`q^k`, k from 0).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FreqRule {
    List(Vec<u64>),
    Rule(String),
}

/// Generator: `"sine"`, `"davenport:lambda:M"`, `"gaposhkin:m"` or `[m, re, im]` triples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GeneratorRule {
    Named(String),
    Coeffs(Vec<(i64, f64, f64)>),
}

/// JSON form of a [`SeriesSpec`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesDescriptor {
    pub terms: usize,
    pub coeffs: CoeffRule,
    pub freqs: FreqRule,
    pub generator: GeneratorRule,
}

fn parse_f64(s: &str, what: &str) -> Result<f64> {
    s.parse::<f64>().map_err(|_| Error::Config(format!("bad number {s:?} in {what}")))
}

impl CoeffRule {
    /// The first `k` coefficients.
    pub fn build(&self, k: usize) -> Result<Vec<f64>> {
        Ok(match self {
            CoeffRule::List(v) => v.clone(),
            CoeffRule::Formula(s) => {
                let parts: Vec<&str> = s.split(':').collect();
                match parts.as_slice() {
                    ["power", e] => {
                        let e = parse_f64(e, s)?;
                        (0..k).map(|i| ((i + 1) as f64).powf(-e)).collect()
                    }
                    ["geometric", r] => {
                        let r = parse_f64(r, s)?;
                        (0..k).map(|i| r.powi(i as i32)).collect()
                    }
                    ["gaposhkin", m] => {
                        let m = parse_f64(m, s)? as u32;
                        gaposhkin_example(m, k.max(2))?.coeffs.iter().take(k).map(|c| c.re).collect()
                    }
                    _ => return Err(Error::Config(format!("unknown coefficient rule {s:?}"))),
                }
            }
        })
    }
}

impl GeneratorRule {
    pub fn build(&self) -> Result<FourierFunction> {
        Ok(match self {
            GeneratorRule::Coeffs(v) => {
                FourierFunction::from_coeffs(v.iter().map(|(m, re, im)| (*m, Complex64::new(*re, *im))))?
            }
            GeneratorRule::Named(s) => {
                let parts: Vec<&str> = s.split(':').collect();
                match parts.as_slice() {
                    ["sine"] => FourierFunction::sine(1, 1.0)?,
                    ["davenport", l, m] => {
                        let l = parse_f64(l, s)?;
                        let m = parse_f64(m, s)? as i64;
                        let mut f = FourierFunction::new();
                        for j in 1..=m {
                            f.add_sine(j, (j as f64).powf(-l))?;
                        }
                        f
                    }
                    ["gaposhkin", m] => {
                        gaposhkin_example(parse_f64(m, s)? as u32, GAPOSHKIN_MAX_GENERATOR_TERMS as usize)?.generator
                    }
                    _ => return Err(Error::Config(format!("unknown generator {s:?}"))),
                }
            }
        })
    }
}

impl SeriesDescriptor {
    pub fn build(&self) -> Result<SeriesSpec> {
        let k = self.terms;
        if k == 0 {
            return Err(Error::Config("terms must be positive".into()));
        }
        let coeffs = self.coeffs.build(k)?;
        if coeffs.len() != k {
            return Err(Error::Config(format!("{} coefficients for {k} terms", coeffs.len())));
        }
        let freqs: Vec<Freq> = match &self.freqs {
            FreqRule::List(v) => v.iter().map(|n| Freq::new(*n)).collect::<Result<_>>()?,
            FreqRule::Rule(s) => {
                let q = s
                    .strip_prefix("pow:")
                    .ok_or_else(|| Error::Config(format!("unknown frequency rule {s:?}")))?
                    .parse::<u64>()
                    .map_err(|_| Error::Config(format!("bad base in {s:?}")))?;
                if q < 2 {
                    return Err(Error::Config("pow base must be >= 2".into()));
                }
                let base = Freq::new(q)?;
                let mut out = vec![Freq::pow2(0)];
                for _ in 1..k {
                    let last = *out.last().unwrap();
                    let next = Freq {
                        odd: last
                            .odd
                            .checked_mul(base.odd)
                            .ok_or_else(|| Error::Config(format!("{s} overflows at {k} terms")))?,
                        shift: last.shift + base.shift,
                    };
                    out.push(next);
                }
                out
            }
        };
        if freqs.len() != k {
            return Err(Error::Config(format!("{} frequencies for {k} terms", freqs.len())));
        }
        let generator = self.generator.build()?;
        SeriesSpec::real(&coeffs, freqs, generator)
    }
}
