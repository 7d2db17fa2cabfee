//! Davenport functions `f_lambda(x) = sum_{m>=1} sin(2 pi m x) / m^lambda`, their
//! Gram matrices along dilations, and frame bounds.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::modulus::modulus_profile;
use crate::par::{map_range, Exec};
use crate::report::{csv_string, fmt_num};
use crate::tail::loglog_slope;
use crate::torus_fn::{render_strict, FourierFunction, GridFunction};

/// Truncated Davenport function.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DavenportSpec {
    pub lambda: f64,
    pub truncation: u64,
}

impl DavenportSpec {
    pub fn new(lambda: f64, truncation: u64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return invalid(format!("lambda must be positive, got {lambda}"));
        }
        if truncation == 0 {
            return invalid("truncation must be >= 1");
        }
        Ok(DavenportSpec { lambda, truncation })
    }

    /// Largest truncation that renders without aliasing on `2^J` points.
    pub fn for_resolution(lambda: f64, j: u32) -> Result<Self> {
        Self::new(lambda, (1u64 << (j - 1)) - 1)
    }

    pub fn fourier(&self) -> Result<FourierFunction> {
        let mut f = FourierFunction::new();
        for m in 1..=self.truncation {
            f.add_sine(m as i64, (m as f64).powf(-self.lambda))?;
        }
        Ok(f)
    }

    /// `(sum_{m>M} m^{-2 lambda} / 2)^{1/2}`, the L^2 distance to the full function.
    pub fn l2_tail(&self) -> Result<f64> {
        if self.lambda <= 0.5 {
            return Err(Error::Hypothesis(format!(
                "lambda = {} <= 1/2: coefficients not square summable",
                self.lambda
            )));
        }
        Ok((hurwitz_zeta(2.0 * self.lambda, self.truncation as f64 + 1.0)? / 2.0).sqrt())
    }
}

const BERNOULLI: [f64; 10] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
];

/// `sum_{k>=0} (k + a)^{-s}` for `s > 1`, `a > 0` (Euler-Maclaurin).
pub fn hurwitz_zeta(s: f64, a: f64) -> Result<f64> {
    if !(s > 1.0) || !(a > 0.0) {
        return invalid(format!("hurwitz zeta needs s > 1 and a > 0, got s={s} a={a}"));
    }
    let n = 24usize;
    let head: f64 = (0..n).map(|k| (k as f64 + a).powf(-s)).sum();
    let x = n as f64 + a;
    let mut tail = x.powf(1.0 - s) / (s - 1.0) + 0.5 * x.powf(-s);
    // rising factorial s (s+1) ... (s+2j-2) / (2j)!
    let mut fact = s / 2.0;
    let mut pow = x.powf(-s - 1.0);
    for (j, b) in BERNOULLI.iter().enumerate() {
        tail += b * fact * pow;
        let k = 2.0 * j as f64;
        fact *= (s + k + 1.0) * (s + k + 2.0) / ((k + 3.0) * (k + 4.0));
        pow /= x * x;
    }
    Ok(head + tail)
}

pub fn zeta(s: f64) -> Result<f64> {
    hurwitz_zeta(s, 1.0)
}

/// Renders `f_lambda` truncated at `M` on `2^J` points.
pub fn eval_davenport(spec: &DavenportSpec, j: u32) -> Result<GridFunction> {
    if j == 0 || spec.truncation >= 1u64 << (j - 1) {
        return Err(Error::Aliasing { freq: spec.truncation.to_string(), resolution: j });
    }
    render_strict(&spec.fourier()?, j)
}

/// Fitted exponent `a` in `omega_p(2^-n) ~ 2^{-a n}` over octaves `n = 4..=10`.
pub fn smoothness_estimate(spec: &DavenportSpec, p: f64, j: u32) -> Result<f64> {
    if j < 12 {
        return invalid(format!("resolution 2^{j} too short to fit octaves 4..10"));
    }
    let profile = modulus_profile(&eval_davenport(spec, j)?, p)?;
    let deltas: Vec<f64> = (4..=10).map(|n| 2f64.powi(-n)).collect();
    let omegas: Vec<f64> = (4..=10).map(|n| profile.values[n]).collect();
    loglog_slope(&deltas, &omegas)
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    if a == 0 || b == 0 {
        return a | b;
    }
    let shift = (a | b).trailing_zeros();
    a >>= a.trailing_zeros();
    loop {
        b >>= b.trailing_zeros();
        if a > b {
            std::mem::swap(&mut a, &mut b);
        }
        b -= a;
        if b == 0 {
            return a << shift;
        }
    }
}

/// Inner products `<f_lambda(n_j .), f_lambda(n_k .)>`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GramMatrix {
    pub freqs: Vec<u64>,
    pub lambda: f64,
    pub entries: Vec<Vec<f64>>,
    pub eigen_bounds: (f64, f64),
}

impl GramMatrix {
    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }

    pub fn to_csv(&self) -> Result<String> {
        let k = self.len();
        let rows = (0..k).flat_map(|a| {
            (0..k).map(move |b| {
                vec![
                    a.to_string(),
                    b.to_string(),
                    self.freqs[a].to_string(),
                    self.freqs[b].to_string(),
                    fmt_num(self.entries[a][b]),
                ]
            })
        });
        csv_string(&["row", "col", "n_row", "n_col", "entry"], rows)
    }
}

fn check_freqs(freqs: &[u64]) -> Result<()> {
    if freqs.is_empty() {
        return invalid("need at least one frequency");
    }
    if freqs.iter().any(|n| *n == 0 || *n > i64::MAX as u64) {
        return invalid("frequencies must lie in 1..2^63");
    }
    let mut sorted = freqs.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return invalid("frequencies must be distinct");
    }
    Ok(())
}

fn eigen_bounds(entries: &[Vec<f64>]) -> (f64, f64) {
    let k = entries.len();
    let m = DMatrix::from_fn(k, k, |a, b| entries[a][b]);
    let ev = SymmetricEigen::new(m).eigenvalues;
    (ev.min(), ev.max())
}

/// `entries[j][k] = (zeta(2 lambda)/2) (gcd(n_j,n_k)^2 / (n_j n_k))^lambda`.
pub fn gram_matrix(freqs: &[u64], lambda: f64) -> Result<GramMatrix> {
    if !(lambda > 0.5) {
        return Err(Error::Hypothesis(format!("lambda = {lambda} <= 1/2: Gram entries are infinite")));
    }
    check_freqs(freqs)?;
    let k = freqs.len();
    let z = zeta(2.0 * lambda)? / 2.0;
    let flat = map_range(Exec::default(), k * k, |idx| {
        let (a, b) = (idx / k, idx % k);
        let (na, nb) = (freqs[a.min(b)], freqs[a.max(b)]);
        let g = gcd(na, nb) as f64;
        z * ((g / na as f64) * (g / nb as f64)).powf(lambda)
    });
    let entries: Vec<Vec<f64>> = flat.chunks(k).map(|r| r.to_vec()).collect();
    let eigen_bounds = eigen_bounds(&entries);
    Ok(GramMatrix { freqs: freqs.to_vec(), lambda, entries, eigen_bounds })
}

/// Gram matrix by grid quadrature of the truncation at `M` on `2^J` points, plus the
/// exact contribution of the omitted common multiples
/// (`(g^2/(ab))^lambda zeta(2 lambda, T+1) / 2` with `T = floor(M g / max(a,b))`).
pub fn gram_quadrature(freqs: &[u64], lambda: f64, truncation: u64, j: u32) -> Result<GramMatrix> {
    if !(lambda > 0.5) {
        return Err(Error::Hypothesis(format!("lambda = {lambda} <= 1/2: Gram entries are infinite")));
    }
    check_freqs(freqs)?;
    let top = *freqs.iter().max().unwrap();
    if (truncation as u128) * (top as u128) >= 1u128 << (j - 1) {
        return Err(Error::Aliasing { freq: format!("{truncation}*{top}"), resolution: j });
    }
    let f = eval_davenport(&DavenportSpec::new(lambda, truncation)?, j)?.real_parts();
    let mask = (1usize << j) - 1;
    let k = freqs.len();
    let pairs: Vec<(usize, usize)> = (0..k).flat_map(|a| (a..k).map(move |b| (a, b))).collect();
    let values = map_range(Exec::default(), pairs.len(), |i| {
        let (a, b) = pairs[i];
        let (na, nb) = (freqs[a] as usize, freqs[b] as usize);
        let (mut ia, mut ib) = (0usize, 0usize);
        let mut acc = 0.0;
        for _ in 0..=mask {
            acc += f[ia] * f[ib];
            ia = (ia + na) & mask;
            ib = (ib + nb) & mask;
        }
        let quad = acc / (mask + 1) as f64;
        let g = gcd(freqs[a], freqs[b]);
        let t = (truncation as u128 * g as u128 / freqs[a].max(freqs[b]) as u128) as f64;
        let w = ((g as f64 / na as f64) * (g as f64 / nb as f64)).powf(lambda);
        hurwitz_zeta(2.0 * lambda, t + 1.0).map(|h| quad + w * h / 2.0)
    });
    let mut entries = vec![vec![0.0; k]; k];
    for (&(a, b), v) in pairs.iter().zip(values) {
        let v = v?;
        entries[a][b] = v;
        entries[b][a] = v;
    }
    let eigen_bounds = eigen_bounds(&entries);
    Ok(GramMatrix { freqs: freqs.to_vec(), lambda, entries, eigen_bounds })
}

/// `(sqrt(eig_min), sqrt(eig_max))`: finite-section frame bounds.
pub fn riesz_constants(gram: &GramMatrix) -> Result<(f64, f64)> {
    let (lo, hi) = gram.eigen_bounds;
    if !(lo > 1e-10) {
        return Err(Error::Hypothesis(format!("Gram matrix numerically singular (min eigenvalue {lo:e})")));
    }
    Ok((lo.sqrt(), hi.sqrt()))
}

/// Comma-separated list or `"pow:q:K"` (`q^0, ..., q^{K-1}`).
pub fn parse_freqs(s: &str) -> Result<Vec<u64>> {
    let s = s.trim();
    if let Some(rest) = s.strip_prefix("pow:") {
        let (q, k) = rest.split_once(':').ok_or_else(|| Error::Config(format!("expected pow:q:K, got {s:?}")))?;
        let q: u64 = q.parse().map_err(|_| Error::Config(format!("bad base in {s:?}")))?;
        let k: u32 = k.parse().map_err(|_| Error::Config(format!("bad length in {s:?}")))?;
        if q < 2 || k == 0 {
            return Err(Error::Config(format!("{s:?}: need q >= 2 and K >= 1")));
        }
        return (0..k)
            .map(|i| {
                q.checked_pow(i)
                    .filter(|v| *v <= i64::MAX as u64)
                    .ok_or_else(|| Error::Config(format!("{s:?} overflows")))
            })
            .collect();
    }
    s.split(',').map(|t| t.trim().parse::<u64>().map_err(|_| Error::Config(format!("bad frequency {t:?}")))).collect()
}
