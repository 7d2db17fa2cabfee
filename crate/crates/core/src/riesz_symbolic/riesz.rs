//! Riesz products `prod_n (1 + Re c_n e^{2 pi i lambda_n x})` on the circle.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dilated_series::{aggregate, oscillations, point_rng, OscillationDiagnostic};
use crate::error::{invalid, Error, Result};
use crate::modulus::modulus_profile;
use crate::par::{map_range, Exec};
use crate::tail::loglog_slope;
use crate::torus_fn::{render_strict, FourierFunction, GridFunction};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RieszProductSpec {
    pub lambdas: Vec<u64>,
    pub cs: Vec<Complex64>,
    /// Requires `sup |c_n| < 1`.
    #[serde(default)]
    pub strict: bool,
}

impl RieszProductSpec {
    pub fn new(lambdas: Vec<u64>, cs: Vec<Complex64>, strict: bool) -> Result<Self> {
        let s = RieszProductSpec { lambdas, cs, strict };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.lambdas.is_empty() || self.lambdas.len() != self.cs.len() {
            return invalid("need one c_n per lambda_n and at least one term");
        }
        if self.lambdas[0] == 0 {
            return invalid("lambda_0 must be positive");
        }
        for w in self.lambdas.windows(2) {
            if w[1] % w[0] != 0 || w[1] / w[0] < 3 {
                return invalid(format!("lambda ratio {} / {} must be an integer >= 3", w[1], w[0]));
            }
        }
        for c in &self.cs {
            if !c.re.is_finite() || !c.im.is_finite() {
                return Err(Error::NonFinite("Riesz coefficient".into()));
            }
            if c.norm() > 1.0 {
                return invalid(format!("|c_n| = {} exceeds 1", c.norm()));
            }
        }
        if self.strict && self.sup_c() >= 1.0 {
            return invalid("strict spec needs sup |c_n| < 1");
        }
        Ok(())
    }

    pub fn sup_c(&self) -> f64 {
        self.cs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    fn check_depth(&self, n: usize) -> Result<()> {
        if n >= self.lambdas.len() {
            return invalid(format!("depth {n} needs {} terms, spec has {}", n + 1, self.lambdas.len()));
        }
        Ok(())
    }

    /// `prod_{n<=N} (1 - |c_n|)`.
    pub fn min_density_bound(&self, n: usize) -> f64 {
        self.cs[..=n.min(self.cs.len() - 1)].iter().map(|c| 1.0 - c.norm()).product()
    }
}

fn factor(c: Complex64, lambda: u64, num: u64, den_log2: u32) -> f64 {
    let phase = ((lambda as u128 * num as u128) % (1u128 << den_log2)) as f64 / 2f64.powi(den_log2 as i32);
    1.0 + (c * Complex64::from_polar(1.0, TAU * phase)).re
}

/// `P_N = prod_{n=0}^{N} (1 + Re c_n e^{2 pi i lambda_n x})` on `2^J` points; needs
/// `sum_{n<=N} lambda_n < 2^{J-1}` so that the grid resolves every frequency.
pub fn riesz_partial_density(spec: &RieszProductSpec, n: usize, j: u32) -> Result<GridFunction> {
    spec.validate()?;
    spec.check_depth(n)?;
    let top: u128 = spec.lambdas[..=n].iter().map(|l| *l as u128).sum();
    if j == 0 || top >= 1u128 << (j - 1) {
        return Err(Error::Aliasing { freq: top.to_string(), resolution: j });
    }
    let size = 1usize << j;
    let vals = map_range(Exec::default(), size, |k| {
        (0..=n).map(|i| factor(spec.cs[i], spec.lambdas[i], k as u64, j)).product::<f64>()
    });
    GridFunction::from_real(j, vals)
}

/// Unique `eps in {-1,0,1}^{N+1}` with `sum eps_n lambda_n = k`, if any.
fn representation(lambdas: &[u64], k: i128) -> Option<Vec<i8>> {
    let mut eps = vec![0i8; lambdas.len()];
    let mut r = k;
    for i in (0..lambdas.len()).rev() {
        let below: i128 = lambdas[..i].iter().map(|l| *l as i128).sum();
        let l = lambdas[i] as i128;
        for e in [-1i8, 0, 1] {
            if (r - e as i128 * l).abs() <= below {
                eps[i] = e;
                r -= e as i128 * l;
                break;
            }
        }
    }
    (r == 0).then_some(eps)
}

/// Exact coefficient of `P_N` at frequency `k`: `c_n / 2` for `eps_n = 1`,
/// `conj(c_n) / 2` for `eps_n = -1`.
pub fn riesz_fourier_coeff(spec: &RieszProductSpec, n: usize, k: i64) -> Result<Complex64> {
    spec.validate()?;
    spec.check_depth(n)?;
    let Some(eps) = representation(&spec.lambdas[..=n], k as i128) else {
        return Ok(Complex64::new(0.0, 0.0));
    };
    Ok(eps.iter().zip(&spec.cs).fold(Complex64::new(1.0, 0.0), |acc, (e, c)| match e {
        1 => acc * c / 2.0,
        -1 => acc * c.conj() / 2.0,
        _ => acc,
    }))
}

/// `P_N` as a [`FourierFunction`] (all `3^{N+1}` products).
pub fn riesz_fourier(spec: &RieszProductSpec, n: usize) -> Result<FourierFunction> {
    spec.validate()?;
    spec.check_depth(n)?;
    let mut f = FourierFunction::exponential(0, Complex64::new(1.0, 0.0))?;
    for i in 0..=n {
        let mut factor = FourierFunction::exponential(0, Complex64::new(1.0, 0.0))?;
        factor.add_term(spec.lambdas[i] as i64, spec.cs[i] / 2.0)?;
        factor.add_term(-(spec.lambdas[i] as i64), spec.cs[i].conj() / 2.0)?;
        let mut next = FourierFunction::new();
        for (a, ca) in f.iter() {
            for (b, cb) in factor.iter() {
                next.add_term(a + b, ca * cb)?;
            }
        }
        f = next;
    }
    Ok(f)
}

/// `max_k |P_N^(k) - P_{N+2}^(k)|` over the given frequencies.
pub fn depth_stability(spec: &RieszProductSpec, n: usize, freqs: &[i64]) -> Result<f64> {
    let mut worst = 0.0f64;
    for k in freqs {
        worst = worst.max((riesz_fourier_coeff(spec, n, *k)? - riesz_fourier_coeff(spec, n + 2, *k)?).norm());
    }
    Ok(worst)
}

/// `int_{[p/lambda_n, (p+1)/lambda_n)} P_N(x) dx` for every `p < lambda_n`, from the
/// exact Fourier expansion of `P_N`.
pub fn torus_cylinder_weights(spec: &RieszProductSpec, depth: usize, n: usize) -> Result<Vec<f64>> {
    spec.check_depth(n.max(depth))?;
    let f = riesz_fourier(spec, depth)?;
    let cells = spec.lambdas[n];
    if cells > 1 << 24 {
        return invalid("too many cylinders");
    }
    Ok(map_range(Exec::default(), cells as usize, |p| {
        let (a, b) = (p as f64 / cells as f64, (p + 1) as f64 / cells as f64);
        f.iter()
            .map(|(k, c)| {
                if k == 0 {
                    return c.re * (b - a);
                }
                let w = TAU * k as f64;
                let ea = Complex64::from_polar(1.0, w * a);
                let eb = Complex64::from_polar(1.0, w * b);
                (c * (eb - ea) / Complex64::new(0.0, w)).re
            })
            .sum()
    }))
}

/// Points drawn from the piecewise-constant density `P_N` on the `2^J` grid.
pub fn sample_mu(spec: &RieszProductSpec, n: usize, j: u32, count: usize, seed: u64) -> Result<Vec<f64>> {
    let density = riesz_partial_density(spec, n, j)?;
    sample_density(&density, count, seed)
}

pub(crate) fn sample_density(density: &GridFunction, count: usize, seed: u64) -> Result<Vec<f64>> {
    let vals = density.real_parts();
    if let Some(v) = vals.iter().find(|v| **v < 0.0) {
        return Err(Error::Hypothesis(format!("negative density value {v}")));
    }
    let mut cdf = Vec::with_capacity(vals.len());
    let mut acc = 0.0;
    for v in &vals {
        acc += v;
        cdf.push(acc);
    }
    let total = acc;
    if !(total > 0.0) {
        return invalid("density has zero mass");
    }
    let cells = vals.len() as f64;
    Ok(map_range(Exec::default(), count, |i| {
        let mut rng = point_rng(seed, i);
        let u: f64 = rng.random::<f64>() * total;
        let k = cdf.partition_point(|c| *c <= u).min(vals.len() - 1);
        let v: f64 = rng.random();
        (k as f64 + v) / cells
    }))
}

/// Grid check of `sup_n omega_inf(t, f_n) |log t|^{1/2 + eps}` staying bounded.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModulusHypothesis {
    /// `(k, sup_n omega_inf(2^-k, f_n) (k ln 2)^{1/2+eps})`.
    pub values: Vec<(u32, f64)>,
    pub slope: f64,
    pub satisfied: bool,
}

/// Scales `2^-k` for `k` from 2 up to two octaves past the top frequency (at most `J`),
/// on a grid two levels finer than the last scale;
/// satisfied when the weighted modulus has nonpositive log-log trend in `k`.
pub fn modulus_hypothesis(fs: &[FourierFunction], eps: f64, j: u32) -> Result<ModulusHypothesis> {
    if fs.is_empty() {
        return invalid("no functions");
    }
    let top = fs.iter().map(|f| f.max_abs_freq()).max().unwrap_or(1).max(1);
    let kmax = (top.ilog2() + 3).max(6).min(j);
    let res = (kmax + 2).min(j);
    let profiles = fs
        .iter()
        .map(|f| modulus_profile(&render_strict(&f.centered(), res)?, f64::INFINITY))
        .collect::<Result<Vec<_>>>()?;
    let values: Vec<(u32, f64)> = (2..=kmax)
        .map(|k| {
            let w = profiles.iter().map(|p| p.values[k as usize]).fold(0.0, f64::max);
            (k, w * (k as f64 * 2f64.ln()).powf(0.5 + eps))
        })
        .collect();
    let ks: Vec<f64> = values.iter().map(|v| v.0 as f64).collect();
    let ws: Vec<f64> = values.iter().map(|v| v.1).collect();
    let slope = if ws.iter().all(|w| *w > 0.0) { loglog_slope(&ks, &ws)? } else { f64::NEG_INFINITY };
    Ok(ModulusHypothesis { values, slope, satisfied: slope <= 0.0 })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RieszRun {
    pub diagnostic: OscillationDiagnostic,
    /// `E_mu f_n(lambda_n .)`, exact at depth `N`.
    pub means: Vec<Complex64>,
    pub hypothesis: ModulusHypothesis,
    pub in_hypothesis: bool,
}

/// `sum a_n (f_n(lambda_n x) - E_mu f_n(lambda_n .))` at points drawn from `P_N`.
#[allow(clippy::too_many_arguments)]
pub fn riesz_series_run(
    spec: &RieszProductSpec,
    depth: usize,
    j: u32,
    fs: &[FourierFunction],
    coeffs: &[Complex64],
    checkpoints: &[usize],
    sample_count: usize,
    seed: u64,
) -> Result<RieszRun> {
    if fs.len() != coeffs.len() {
        return invalid("one function per coefficient");
    }
    if coeffs.len() > spec.lambdas.len() {
        return invalid("more terms than lambdas");
    }
    if sample_count < 100 {
        return invalid("sample size must be at least 100");
    }
    if checkpoints.is_empty()
        || checkpoints.windows(2).any(|w| w[0] >= w[1])
        || *checkpoints.last().unwrap() >= coeffs.len()
    {
        return invalid("checkpoints must be increasing and below the number of terms");
    }
    let means = fs
        .iter()
        .zip(&spec.lambdas)
        .map(|(f, l)| {
            f.iter().try_fold(Complex64::new(0.0, 0.0), |acc, (m, c)| {
                let k = m.checked_mul(*l as i64).ok_or_else(|| Error::Invalid("frequency overflow".into()))?;
                Ok::<_, Error>(acc + c * riesz_fourier_coeff(spec, depth, -k)?)
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let xs = sample_mu(spec, depth, j, sample_count, seed)?;
    let upto = (2 * checkpoints.last().unwrap()).min(coeffs.len() - 1) + 1;
    let osc = map_range(Exec::default(), xs.len(), |i| {
        let x = xs[i];
        let mut acc = Complex64::new(0.0, 0.0);
        let sums: Vec<Complex64> = (0..upto)
            .map(|n| {
                if coeffs[n] != Complex64::new(0.0, 0.0) {
                    let t = (x * spec.lambdas[n] as f64).rem_euclid(1.0);
                    acc += coeffs[n] * (fs[n].eval(t) - means[n]);
                }
                acc
            })
            .collect();
        oscillations(&sums, checkpoints)
    });
    let hypothesis = modulus_hypothesis(fs, 0.05, j)?;
    let in_hypothesis = hypothesis.satisfied && spec.sup_c() < 1.0;
    Ok(RieszRun { diagnostic: aggregate(&osc, checkpoints, seed), means, hypothesis, in_hypothesis })
}
