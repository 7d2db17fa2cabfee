//! Dyadic filtration `F_n` (intervals `[k/2^n, (k+1)/2^n)`): conditional expectations,
//! detail operators `D_n = E^{n+1} - E^n`, decompositions, maximal functions and the
//! inequality auditors built on them.

use std::f64::consts::E;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::report::AuditReport;
use crate::tail::{fit_last_octaves, TailModel, TailSpec};
use crate::torus_fn::{lp_norm_slice, GridFunction};

/// Index `n` of the dyadic sigma-algebra `F_n`; `n <= J` on a `2^J` grid.
pub type FiltrationLevel = u32;

/// Tolerance for "mean zero" checks.
pub const CENTERING_TOL: f64 = 1e-12;

fn check_p(p: f64) -> Result<()> {
    if p.is_nan() || p <= 1.0 {
        return Err(Error::Exponent(p));
    }
    Ok(())
}

/// `p' = min(2, p)`.
pub fn p_prime(p: f64) -> f64 {
    p.min(2.0)
}

/// `max(1, sqrt(p - 1))`.
pub fn rio_constant(p: f64) -> f64 {
    (p - 1.0).sqrt().max(1.0)
}

/// `K_p = p/(p-1) * max(1, sqrt(p-1))`.
pub fn k_p(p: f64) -> f64 {
    p / (p - 1.0) * rio_constant(p)
}

pub(crate) fn check_centered(f: &GridFunction) -> Result<()> {
    let m = f.mean();
    if m.norm() > CENTERING_TOL {
        return Err(Error::NotCentered(m.norm()));
    }
    Ok(())
}

/// Block means of `f` at every level `0..=J`.
#[derive(Clone, Debug)]
pub(crate) struct Pyramid {
    levels: Vec<Vec<Complex64>>,
}

impl Pyramid {
    pub(crate) fn new(f: &GridFunction) -> Self {
        let j = f.resolution_log2() as usize;
        let mut levels = vec![Vec::new(); j + 1];
        levels[j] = f.samples().to_vec();
        for n in (0..j).rev() {
            let finer = &levels[n + 1];
            levels[n] = finer.chunks_exact(2).map(|c| (c[0] + c[1]) * 0.5).collect();
        }
        Pyramid { levels }
    }

    fn top(&self) -> u32 {
        (self.levels.len() - 1) as u32
    }

    pub(crate) fn means(&self, n: u32) -> &[Complex64] {
        &self.levels[n as usize]
    }

    /// `E^b f - E^a f` sampled on the level-`b` cells.
    fn diff(&self, a: u32, b: u32) -> Vec<Complex64> {
        let shift = b - a;
        let coarse = &self.levels[a as usize];
        self.levels[b as usize].iter().enumerate().map(|(i, v)| v - coarse[i >> shift]).collect()
    }

    /// `||E^b f - E^a f||_p` for `a <= b`.
    pub(crate) fn diff_norm(&self, a: u32, b: u32, p: f64) -> f64 {
        if a >= b {
            return 0.0;
        }
        lp_norm_slice(&self.diff(a, b), p)
    }

    /// `||f - E^a f||_p`.
    pub(crate) fn residual_norm(&self, a: u32, p: f64) -> f64 {
        self.diff_norm(a.min(self.top()), self.top(), p)
    }

    /// `||E^a f||_p`.
    pub(crate) fn cond_norm(&self, a: u32, p: f64) -> f64 {
        lp_norm_slice(self.means(a.min(self.top())), p)
    }
}

fn broadcast(means: &[Complex64], j: u32) -> Vec<Complex64> {
    let block = (1usize << j) / means.len();
    means.iter().flat_map(|m| std::iter::repeat_n(*m, block)).collect()
}

/// `E(f | F_n)`: block average over each `I_{n,k}`.
pub fn cond_exp(f: &GridFunction, n: FiltrationLevel) -> Result<GridFunction> {
    let j = f.resolution_log2();
    if n > j {
        return Err(Error::Level { level: n, resolution: j });
    }
    let block = 1usize << (j - n);
    let means: Vec<Complex64> =
        f.samples().chunks_exact(block).map(|c| c.iter().sum::<Complex64>() / block as f64).collect();
    GridFunction::new(j, broadcast(&means, j), f.kind())
}

/// `D_n f = E^{n+1} f - E^n f`.
pub fn detail(f: &GridFunction, n: FiltrationLevel) -> Result<GridFunction> {
    let j = f.resolution_log2();
    if n >= j {
        return Err(Error::Level { level: n + 1, resolution: j });
    }
    cond_exp(f, n + 1)?.sub(&cond_exp(f, n)?)
}

/// `f = sum_n details[n]` for centered `f`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DetailSequence {
    pub base: GridFunction,
    pub details: Vec<GridFunction>,
}

impl DetailSequence {
    pub fn reconstruct(&self) -> Result<GridFunction> {
        let j = self.base.resolution_log2();
        let mut acc = GridFunction::new(j, vec![self.base.mean(); 1 << j], self.base.kind())?;
        for d in &self.details {
            acc = acc.add(d)?;
        }
        Ok(acc)
    }

    /// `sum_n ||D_n f||_2^2`.
    pub fn energy(&self) -> f64 {
        self.details.iter().map(|d| d.energy()).sum()
    }
}

/// Martingale decomposition of a centered grid function.
pub fn decompose(f: &GridFunction) -> Result<DetailSequence> {
    check_centered(f)?;
    let j = f.resolution_log2();
    let pyr = Pyramid::new(f);
    let details = (0..j)
        .map(|n| {
            let d = pyr.diff(n, n + 1);
            let block = 1usize << (j - n - 1);
            let samples = d.iter().flat_map(|v| std::iter::repeat_n(*v, block)).collect();
            GridFunction::new(j, samples, f.kind())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DetailSequence { base: f.clone(), details })
}

/// `sum_{n=N1}^{N2} ||D_n f||_2^2 = ||E^{N2+1} f - E^{N1} f||_2^2`.
pub fn telescope_check(f: &GridFunction, n1: u32, n2: u32) -> Result<AuditReport> {
    let j = f.resolution_log2();
    if n1 > n2 || n2 + 1 > j {
        return invalid(format!("need 0 <= N1 <= N2 <= J-1, got ({n1}, {n2}) with J = {j}"));
    }
    let pyr = Pyramid::new(f);
    let lhs: f64 = (n1..=n2).map(|n| pyr.diff_norm(n, n + 1, 2.0).powi(2)).sum();
    let rhs = pyr.diff_norm(n1, n2 + 1, 2.0).powi(2);
    let scale = f.energy();
    Ok(AuditReport::identity(lhs, rhs, 1e-10, 1e-14 * scale, format!("telescope N1={n1} N2={n2}")))
}

/// `||f||_p <= max(1, sqrt(p-1)) (sum_n ||D_n f||_p^{p'})^{1/p'}`.
pub fn rio_audit(f: &GridFunction, p: f64) -> Result<AuditReport> {
    check_p(p)?;
    check_centered(f)?;
    let j = f.resolution_log2();
    let pyr = Pyramid::new(f);
    let pp = p_prime(p);
    let sum: f64 = (0..j).map(|n| pyr.diff_norm(n, n + 1, p).powf(pp)).sum();
    let c = rio_constant(p);
    let lhs = f.lp_norm(p)?;
    Ok(AuditReport::upper_bound(lhs, c * sum.powf(1.0 / pp), c, format!("rio p={p}")))
}

/// Pointwise `max_m |sum_{i<=m} x_i|` over a sequence of grid functions.
pub fn running_maximum(terms: &[GridFunction]) -> Result<(GridFunction, GridFunction)> {
    let first = terms.first().ok_or_else(|| Error::Invalid("empty sequence".into()))?;
    let j = first.resolution_log2();
    let mut acc = vec![Complex64::new(0.0, 0.0); 1 << j];
    let mut best = vec![0.0f64; 1 << j];
    for t in terms {
        first.same_grid(t)?;
        for ((a, b), v) in acc.iter_mut().zip(best.iter_mut()).zip(t.samples()) {
            *a += v;
            *b = b.max(a.norm());
        }
    }
    let kind = if terms.iter().all(|t| t.is_real()) { first.kind() } else { crate::torus_fn::ValueKind::Complex };
    Ok((GridFunction::from_real(j, best)?, GridFunction::new(j, acc, kind)?))
}

/// Doob: `||max_m |M_m| ||_p <= p/(p-1) ||M_last||_p`. `levels[m]` is the level at
/// which increment `m` is centered; it must be measurable at `levels[m+1]` (or at
/// `J` for the last one).
pub fn doob_maximal_audit(increments: &[GridFunction], levels: &[FiltrationLevel], p: f64) -> Result<AuditReport> {
    check_p(p)?;
    if increments.is_empty() {
        return invalid("no increments");
    }
    if levels.len() != increments.len() {
        return invalid("one level per increment required");
    }
    let j = increments[0].resolution_log2();
    for (m, inc) in increments.iter().enumerate() {
        let lo = levels[m];
        let hi = levels.get(m + 1).copied().unwrap_or(j);
        if lo > hi || hi > j {
            return invalid(format!("levels must be nondecreasing and <= {j}"));
        }
        let pyr = Pyramid::new(inc);
        let tol = 1e-12 * inc.sup_norm().max(1.0);
        let centered = pyr.means(lo).iter().map(|v| v.norm()).fold(0.0, f64::max);
        if centered > tol {
            return Err(Error::Hypothesis(format!("increment {m} has E(.|F_{lo}) of size {centered:e}")));
        }
        let rough = pyr.residual_norm(hi, f64::INFINITY);
        if rough > tol {
            return Err(Error::Hypothesis(format!("increment {m} is not F_{hi}-measurable ({rough:e})")));
        }
    }
    let (max_fn, last) = running_maximum(increments)?;
    let c = p / (p - 1.0);
    Ok(AuditReport::upper_bound(max_fn.lp_norm(p)?, c * last.lp_norm(p)?, c, format!("doob p={p}")))
}

/// Increments `D_0 f, ..., D_{J-1} f` with their levels, ready for [`doob_maximal_audit`].
pub fn martingale_increments(f: &GridFunction) -> Result<(Vec<GridFunction>, Vec<FiltrationLevel>)> {
    let seq = decompose(f)?;
    let levels = (0..seq.details.len() as u32).collect();
    Ok((seq.details, levels))
}

/// Output of [`theo_gen_criteria`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TheoGen {
    /// Higher-order details `sum_k (sum_n ||D_{n+k} Z_n||_p^{p'})^{1/p'}`.
    #[serde(with = "crate::report::extended")]
    pub s1: f64,
    /// Lower-order details `sum_{k>=1} (sum_n ||D_n Z_{n+k}||_p^{p'})^{1/p'}`.
    #[serde(with = "crate::report::extended")]
    pub s2: f64,
    pub k_p: f64,
    /// `||S*_N||_p <= K_p (s1 + s2)`.
    pub maximal: AuditReport,
}

fn level_map(levels: &[FiltrationLevel], j: u32) -> Result<impl Fn(usize) -> u32 + '_> {
    if levels.first().copied() != Some(0) {
        return invalid("the filtration must start at the trivial level 0");
    }
    if levels.windows(2).any(|w| w[0] > w[1]) || levels.iter().any(|l| *l > j) {
        return invalid(format!("levels must be nondecreasing and <= {j}"));
    }
    Ok(move |i: usize| levels.get(i).copied().unwrap_or(j))
}

fn check_family(z: &[GridFunction]) -> Result<u32> {
    let first = z.first().ok_or_else(|| Error::Invalid("empty family".into()))?;
    for zn in z {
        first.same_grid(zn)?;
        check_centered(zn)?;
    }
    Ok(first.resolution_log2())
}

/// Detail sums for the series `sum Z_n` along the filtration `A_i = F_{levels[i]}`
/// (levels past the end of the list are `J`, where `E` is the identity).
pub fn theo_gen_criteria(z: &[GridFunction], levels: &[FiltrationLevel], p: f64) -> Result<TheoGen> {
    check_p(p)?;
    let j = check_family(z)?;
    let lev = level_map(levels, j)?;
    let pp = p_prime(p);
    let pyrs: Vec<Pyramid> = z.iter().map(Pyramid::new).collect();
    let n = z.len();
    let jmax = (0..).find(|i| lev(*i) >= j).unwrap_or(0);
    let d = |l: usize, i: usize| pyrs[l].diff_norm(lev(i), lev(i + 1), p);
    let s1: f64 =
        (0..jmax).map(|k| (0..n.min(jmax - k)).map(|l| d(l, l + k).powf(pp)).sum::<f64>().powf(1.0 / pp)).sum();
    let s2: f64 = (1..n).map(|k| (k..n).map(|l| d(l, l - k).powf(pp)).sum::<f64>().powf(1.0 / pp)).sum();
    let kp = k_p(p);
    let (smax, _) = running_maximum(z)?;
    let maximal = AuditReport::upper_bound(smax.lp_norm(p)?, kp * (s1 + s2), kp, format!("theo-gen maximal p={p}"));
    Ok(TheoGen { s1, s2, k_p: kp, maximal })
}

/// `(Delta_1, Delta_2)` with sup-norms on the grid, along `A_i = F_{levels[i]}`.
pub fn bounded_deltas(z: &[GridFunction], levels: &[FiltrationLevel]) -> Result<(f64, f64)> {
    let j = check_family(z)?;
    let lev = level_map(levels, j)?;
    let pyrs: Vec<Pyramid> = z.iter().map(Pyramid::new).collect();
    let n = z.len();
    let jmax = (0..).find(|i| lev(*i) >= j).unwrap_or(0);
    let inf = f64::INFINITY;
    let d1: f64 =
        (0..jmax).map(|l| (0..n).map(|k| pyrs[k].residual_norm(lev(l + k), inf).powi(2)).sum::<f64>().sqrt()).sum();
    let d2: f64 =
        (0..n).map(|l| (l..n).map(|k| pyrs[k].cond_norm(lev(k + 1 - l), inf).powi(2)).sum::<f64>().sqrt()).sum();
    Ok((d1, d2))
}

/// `beta` below which `E exp(beta (S*)^2)` is finite: `1 / (4 e (Delta_1 + Delta_2)^2)`.
pub fn beta_threshold(delta1: f64, delta2: f64) -> f64 {
    1.0 / (4.0 * E * (delta1 + delta2).powi(2))
}

/// For each `p >= 2`: `||S*||_p <= 2 K_p (Delta_1 + Delta_2)`.
pub fn theo_bounded_moments(z: &[GridFunction], delta1: f64, delta2: f64, p_list: &[f64]) -> Result<Vec<AuditReport>> {
    if z.is_empty() {
        return invalid("empty family");
    }
    let (smax, _) = running_maximum(z)?;
    p_list
        .iter()
        .map(|&p| {
            if p.is_nan() || p < 2.0 {
                return Err(Error::Exponent(p));
            }
            let c = 2.0 * k_p(p);
            Ok(AuditReport::upper_bound(smax.lp_norm(p)?, c * (delta1 + delta2), c, format!("theo-bounded p={p}")))
        })
        .collect()
}

/// Grid average of `exp(beta (S*)^2)`; recorded, never thresholded.
pub fn exponential_moment(z: &[GridFunction], beta: f64) -> Result<f64> {
    let (smax, _) = running_maximum(z)?;
    let v = smax.samples().iter().map(|s| (beta * s.re * s.re).exp()).sum::<f64>();
    Ok(v / smax.len() as f64)
}

/// `||(sum_n |D_n f|^2)^{1/2}||_p / ||f||_p`.
pub fn square_function_ratio(f: &GridFunction, p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::Exponent(p));
    }
    let j = f.resolution_log2();
    let pyr = Pyramid::new(f);
    let mut sq = vec![0.0f64; 1 << j];
    for n in 0..j {
        let d = pyr.diff(n, n + 1);
        let shift = j - n - 1;
        for (k, s) in sq.iter_mut().enumerate() {
            *s += d[k >> shift].norm_sqr();
        }
    }
    let sqf = GridFunction::from_real(j, sq.into_iter().map(f64::sqrt).collect())?;
    let denom = f.lp_norm(p)?;
    if denom == 0.0 {
        return invalid("zero function");
    }
    Ok(sqf.lp_norm(p)? / denom)
}

/// Decides `(sum u_n < inf, sum 2^l u_{2^l} < inf)` from the tail of `u_1, u_2, ...`,
/// after checking `u_{n+m} <= K u_n` on the given prefix.
pub fn condensation_equivalent(u: &[f64], k: f64, tail: TailSpec) -> Result<(bool, bool)> {
    if u.len() < 4 {
        return invalid("need at least four terms");
    }
    if u.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
        return invalid("terms must be positive and finite");
    }
    let mut suffix_max = 0.0f64;
    for (i, v) in u.iter().enumerate().rev() {
        if suffix_max > k * v * (1.0 + 1e-12) {
            return Err(Error::Hypothesis(format!("u_(n+m) <= K u_n fails at n = {}", i + 1)));
        }
        suffix_max = suffix_max.max(*v);
    }
    let model = fit_last_octaves(tail, u, 4)?.model;
    let direct = model.converges_weighted(0.0);
    let condensed = match model {
        TailModel::Vanishing => true,
        TailModel::Geometric { ratio, .. } => ratio < 1.0,
        TailModel::Power { exponent, .. } => 2f64.powf(1.0 - exponent) < 1.0,
        TailModel::PowerLog { exponent, log_exponent, .. } => {
            let r = 2f64.powf(1.0 - exponent);
            r < 1.0 || (r == 1.0 && log_exponent > 1.0)
        }
    };
    Ok((direct, condensed))
}

/// Paley-Zygmund for a finite distribution `(value, probability)`. Oriented as an
/// upper-bound audit: `lhs = ((1 - lambda) E Z / ||Z||_q)^{q/(q-1)}`,
/// `rhs = P(Z >= lambda E Z)`.
pub fn paley_zygmund_audit(dist: &[(f64, f64)], lambda: f64, q: f64) -> Result<AuditReport> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return invalid(format!("lambda must lie in (0,1), got {lambda}"));
    }
    if !(q > 1.0) {
        return Err(Error::Exponent(q));
    }
    if dist.iter().any(|(v, pr)| *v < 0.0 || *pr < 0.0 || !v.is_finite() || !pr.is_finite()) {
        return invalid("values and probabilities must be nonnegative and finite");
    }
    let total: f64 = dist.iter().map(|d| d.1).sum();
    if (total - 1.0).abs() > 1e-12 {
        return invalid(format!("probabilities sum to {total}"));
    }
    let mean: f64 = dist.iter().map(|(v, pr)| v * pr).sum();
    let qnorm = dist.iter().map(|(v, pr)| pr * v.powf(q)).sum::<f64>().powf(1.0 / q);
    let prob: f64 = dist.iter().filter(|(v, _)| *v >= lambda * mean).map(|d| d.1).sum();
    let bound = if mean == 0.0 { 0.0 } else { ((1.0 - lambda) * mean / qnorm).powf(q / (q - 1.0)) };
    Ok(AuditReport::upper_bound(bound, prob, q / (q - 1.0), format!("paley-zygmund lambda={lambda} q={q}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tail::TailFamily;
    use proptest::prelude::*;

    fn ramp(j: u32) -> GridFunction {
        GridFunction::sample_real(j, |x| x).unwrap()
    }

    fn sin(j: u32) -> GridFunction {
        GridFunction::sample_real(j, |x| (std::f64::consts::TAU * x).sin()).unwrap()
    }

    #[test]
    fn block_averages() {
        let c = cond_exp(&ramp(2), 1).unwrap();
        assert_eq!(c.real_parts(), vec![0.125, 0.125, 0.625, 0.625]);
        let d = detail(&ramp(2), 0).unwrap();
        assert_eq!(d.real_parts(), vec![-0.25, -0.25, 0.25, 0.25]);
        let f = ramp(5);
        assert_eq!(cond_exp(&f, 5).unwrap(), f);
        assert!(cond_exp(&f, 0).unwrap().real_parts().iter().all(|v| (v - f.mean().re).abs() < 1e-15));
        assert!(cond_exp(&f, 6).is_err());
        assert!(detail(&f, 5).is_err());
    }

    #[test]
    fn decomposition_reconstructs_and_is_parseval() {
        let f = sin(10);
        let seq = decompose(&f).unwrap();
        assert!(seq.reconstruct().unwrap().sub(&f).unwrap().sup_norm() < 1e-12);
        assert!((seq.energy() - f.energy()).abs() < 1e-12 * f.energy());
        assert!(matches!(decompose(&ramp(4)), Err(Error::NotCentered(_))));
        let z = decompose(&GridFunction::zeros(6)).unwrap();
        assert!(z.details.iter().all(|d| d.sup_norm() == 0.0));
    }

    #[test]
    fn telescoping() {
        let f = ramp(8);
        for (a, b) in [(0, 7), (2, 2), (1, 5)] {
            assert!(telescope_check(&f, a, b).unwrap().passed);
        }
        let full = telescope_check(&f, 0, 7).unwrap();
        let centered = f.sub(&GridFunction::constant(8, f.mean().re)).unwrap();
        assert!((full.rhs - centered.energy()).abs() < 1e-14);
        let c = telescope_check(&GridFunction::constant(4, 3.0), 0, 3).unwrap();
        assert!(c.passed && c.lhs == 0.0);
        assert!(telescope_check(&f, 3, 8).is_err());
    }

    #[test]
    fn rio_examples() {
        let r = rio_audit(&sin(12), 4.0).unwrap();
        assert!(r.passed && r.margin > 0.0);
        assert!(rio_audit(&sin(8), 1.0).is_err());
        let single = detail(&ramp(6), 0).unwrap();
        assert!(rio_audit(&single, 3.0).unwrap().passed);
    }

    #[test]
    fn doob_on_decomposition() {
        let (inc, lev) = martingale_increments(&sin(10)).unwrap();
        let r = doob_maximal_audit(&inc, &lev, 2.0).unwrap();
        assert!(r.passed);
        assert_eq!(r.constant, 2.0);
        let z = vec![GridFunction::zeros(4); 3];
        let r0 = doob_maximal_audit(&z, &[0, 1, 2], 3.0).unwrap();
        assert!(r0.passed && r0.lhs == 0.0);
        let bad = doob_maximal_audit(&inc[1..3], &[0, 1], 2.0);
        assert!(matches!(bad, Err(Error::Hypothesis(_))));
    }

    #[test]
    fn kp_at_two() {
        assert_eq!(k_p(2.0), 2.0);
    }

    #[test]
    fn theo_gen_adapted_family_has_no_higher_details() {
        let seq = decompose(&sin(8)).unwrap();
        let levels: Vec<u32> = (0..8).collect();
        let g = theo_gen_criteria(&seq.details, &levels, 2.0).unwrap();
        assert!(g.maximal.passed);
        assert!(g.s2 < 1e-14, "{}", g.s2);
        let k0: f64 = seq.details.iter().map(|d| d.energy()).sum::<f64>().sqrt();
        assert!((g.s1 - k0).abs() < 1e-12);
        let single = theo_gen_criteria(&[sin(10)], &[0], 3.0).unwrap();
        assert!(single.maximal.passed);
        assert!(theo_gen_criteria(&[ramp(4)], &[0], 2.0).is_err());
        assert!(theo_gen_criteria(&[sin(4)], &[1], 2.0).is_err());
    }

    #[test]
    fn bounded_moments_chain() {
        let j = 10;
        let z: Vec<GridFunction> = (0..8)
            .map(|n| {
                let d = detail(
                    &GridFunction::sample_real(
                        j,
                        |x| if (x * (1 << (n + 1)) as f64) as u64 % 2 == 0 { 1.0 } else { -1.0 },
                    )
                    .unwrap(),
                    n,
                )
                .unwrap();
                d.scale(0.5f64.powi(n as i32))
            })
            .collect();
        let levels: Vec<u32> = (0..8).collect();
        let (d1, d2) = bounded_deltas(&z, &levels).unwrap();
        assert!(d1 > 0.0);
        let reps = theo_bounded_moments(&z, d1, d2, &[2.0, 4.0, 8.0]).unwrap();
        assert!(reps.iter().all(|r| r.passed));
        let beta = 0.5 * beta_threshold(d1, d2);
        assert!(exponential_moment(&z, beta).unwrap().is_finite());
        let zero = vec![GridFunction::zeros(4); 3];
        let r = theo_bounded_moments(&zero, 0.0, 0.0, &[2.0]).unwrap();
        assert!(r[0].passed && r[0].lhs == 0.0);
        assert!(theo_bounded_moments(&[], 0.0, 0.0, &[2.0]).is_err());
    }

    #[test]
    fn burkholder_ratio_is_recorded() {
        let r = square_function_ratio(&sin(10), 4.0).unwrap();
        assert!(r.is_finite() && r > 0.0);
        assert!((square_function_ratio(&sin(10), 2.0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn condensation() {
        let n = 1 << 12;
        let inv_sq: Vec<f64> = (1..=n).map(|k| 1.0 / (k as f64).powi(2)).collect();
        assert_eq!(condensation_equivalent(&inv_sq, 1.0, TailSpec::Fit(TailFamily::Power)).unwrap(), (true, true));
        let nl = |b: f64| -> Vec<f64> {
            (1..=n)
                .map(|k| {
                    let x = (k + 2) as f64;
                    1.0 / (x * x.ln().powf(b))
                })
                .collect()
        };
        let declared = |b| TailSpec::Declared(TailModel::PowerLog { exponent: 1.0, log_exponent: b, scale: 1.0 });
        assert_eq!(condensation_equivalent(&nl(2.0), 1.0, declared(2.0)).unwrap(), (true, true));
        assert_eq!(condensation_equivalent(&nl(1.0), 1.0, declared(1.0)).unwrap(), (false, false));
        let bumpy = [1.0, 0.1, 0.5, 0.01];
        assert!(matches!(
            condensation_equivalent(&bumpy, 2.0, TailSpec::Fit(TailFamily::Power)),
            Err(Error::Hypothesis(_))
        ));
    }

    #[test]
    fn paley_zygmund_examples() {
        let r = paley_zygmund_audit(&[(1.0, 1.0)], 0.5, 2.0).unwrap();
        assert!(r.passed && (r.lhs - 0.25).abs() < 1e-15 && r.rhs == 1.0);
        let r = paley_zygmund_audit(&[(0.0, 0.5), (2.0, 0.5)], 0.5, 2.0).unwrap();
        assert!(r.passed && (r.lhs - 0.125).abs() < 1e-15 && r.rhs == 0.5);
        let r = paley_zygmund_audit(&[(0.0, 0.5), (2.0, 0.5)], 1.0 - 1e-9, 2.0).unwrap();
        assert!(r.passed && r.lhs < 1e-15);
        assert!(paley_zygmund_audit(&[(-1.0, 1.0)], 0.5, 2.0).is_err());
        assert!(paley_zygmund_audit(&[(1.0, 0.7)], 0.5, 2.0).is_err());
    }

    proptest! {
        #[test]
        fn projection_and_orthogonality(vals in prop::collection::vec(-1.0f64..1.0, 64), a in 0u32..=6, b in 0u32..=6) {
            let f = GridFunction::from_real(6, vals).unwrap();
            let lhs = cond_exp(&cond_exp(&f, a).unwrap(), b).unwrap();
            let rhs = cond_exp(&f, a.min(b)).unwrap();
            prop_assert!(lhs.sub(&rhs).unwrap().sup_norm() < 1e-14);
            if a < 6 && b < 6 && a != b {
                let ip = detail(&f, a).unwrap().inner(&detail(&f, b).unwrap()).unwrap().norm();
                prop_assert!(ip <= 1e-12 * f.energy());
            }
            let d = detail(&f, a.min(5)).unwrap();
            prop_assert!(cond_exp(&d, a.min(5)).unwrap().sup_norm() < 1e-14);
        }
    }
}
