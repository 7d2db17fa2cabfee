//! Non-homogeneous symbolic spaces truncated at a finite depth `D`, normalized
//! potentials, the averaging operators `P_n` and equilibrium states.
//!
//! A word `x_1 .. x_D` is stored as the mixed-radix index with `x_1` most
//! significant, so the suffix `x_j .. x_D` is `idx mod (l_j ... l_D)`.

use serde::{Deserialize, Serialize};

use super::riesz::RieszProductSpec;
use crate::error::{invalid, Error, Result};
use crate::report::AuditReport;
use crate::tail::loglog_slope;

/// Cap on the number of words.
pub const MAX_WORDS: usize = 1 << 24;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymbolicSpace {
    pub alphabet_sizes: Vec<usize>,
    /// `A_1 .. A_{D-1}`, `A_n[a][b] = 1` when `x_n = a` may precede `x_{n+1} = b`.
    pub incidence: Vec<Vec<Vec<u8>>>,
    /// Transitivity window `M`: `A_n ... A_{n+M} > 0`.
    pub window: usize,
    #[serde(skip)]
    suffix: Vec<usize>,
}

fn bool_product(a: &[Vec<bool>], b: &[Vec<u8>]) -> Vec<Vec<bool>> {
    a.iter()
        .map(|row| (0..b[0].len()).map(|c| row.iter().enumerate().any(|(k, v)| *v && b[k][c] == 1)).collect())
        .collect()
}

impl SymbolicSpace {
    pub fn new(alphabet_sizes: Vec<usize>, incidence: Vec<Vec<Vec<u8>>>, window: usize) -> Result<Self> {
        let mut s = SymbolicSpace { alphabet_sizes, incidence, window, suffix: Vec::new() };
        s.init()?;
        Ok(s)
    }

    pub fn full(alphabet_sizes: Vec<usize>) -> Result<Self> {
        let incidence = alphabet_sizes.windows(2).map(|w| vec![vec![1u8; w[1]]; w[0]]).collect();
        Self::new(alphabet_sizes, incidence, 0)
    }

    /// Validates and builds the index tables (also needed after deserializing).
    pub fn init(&mut self) -> Result<()> {
        let d = self.alphabet_sizes.len();
        if d == 0 {
            return invalid("depth must be >= 1");
        }
        if self.alphabet_sizes.iter().any(|l| *l < 2) {
            return invalid("alphabet sizes must be >= 2");
        }
        let mut suffix = vec![1usize; d + 1];
        for i in (0..d).rev() {
            suffix[i] = suffix[i + 1]
                .checked_mul(self.alphabet_sizes[i])
                .filter(|v| *v <= MAX_WORDS)
                .ok_or_else(|| Error::Invalid(format!("more than {MAX_WORDS} words")))?;
        }
        if self.incidence.len() != d - 1 {
            return invalid(format!("need {} incidence matrices", d - 1));
        }
        for (i, a) in self.incidence.iter().enumerate() {
            let (r, c) = (self.alphabet_sizes[i], self.alphabet_sizes[i + 1]);
            if a.len() != r || a.iter().any(|row| row.len() != c || row.iter().any(|v| *v > 1)) {
                return invalid(format!("A_{} must be a {r}x{c} 0/1 matrix", i + 1));
            }
            if a.iter().any(|row| row.iter().all(|v| *v == 0)) {
                return invalid(format!("A_{} has a zero row", i + 1));
            }
        }
        for start in 0..d.saturating_sub(1) {
            let end = start + self.window;
            if end >= d - 1 {
                break;
            }
            let mut prod: Vec<Vec<bool>> =
                self.incidence[start].iter().map(|r| r.iter().map(|v| *v == 1).collect()).collect();
            for a in &self.incidence[start + 1..=end] {
                prod = bool_product(&prod, a);
            }
            if prod.iter().any(|r| r.iter().any(|v| !v)) {
                return invalid(format!("not transitive with window {} at n = {}", self.window, start + 1));
            }
        }
        self.suffix = suffix;
        Ok(())
    }

    pub fn depth(&self) -> usize {
        self.alphabet_sizes.len()
    }

    pub fn words(&self) -> usize {
        self.suffix[0]
    }

    /// `l_{i+1} ... l_D` for 0-based coordinate `i`.
    pub fn suffix_size(&self, i: usize) -> usize {
        self.suffix[i]
    }

    /// 0-based coordinate `i` of a word.
    pub fn digit(&self, idx: usize, i: usize) -> usize {
        (idx / self.suffix[i + 1]) % self.alphabet_sizes[i]
    }

    pub fn digits(&self, idx: usize) -> Vec<usize> {
        (0..self.depth()).map(|i| self.digit(idx, i)).collect()
    }

    /// Whether the suffix starting at 0-based coordinate `i` is admissible.
    pub fn suffix_admissible(&self, i: usize, s: usize) -> bool {
        (i..self.depth().saturating_sub(1)).all(|k| self.incidence[k][self.digit(s, k)][self.digit(s, k + 1)] == 1)
    }

    pub fn admissible(&self, idx: usize) -> bool {
        self.suffix_admissible(0, idx)
    }

    fn allowed(&self, i: usize, a: usize, s_next: usize) -> bool {
        i + 1 >= self.depth() || self.incidence[i][a][self.digit(s_next, i + 1)] == 1
    }
}

/// `g_1 .. g_D`; `levels[i]` holds `g_{i+1}` indexed by the suffix `x_{i+1} .. x_D`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialSeq {
    pub levels: Vec<Vec<f64>>,
}

impl PotentialSeq {
    pub fn validate(&self, space: &SymbolicSpace) -> Result<()> {
        if self.levels.len() != space.depth() {
            return invalid(format!("need {} potentials", space.depth()));
        }
        for (i, g) in self.levels.iter().enumerate() {
            if g.len() != space.suffix_size(i) {
                return invalid(format!("g_{} must have {} values", i + 1, space.suffix_size(i)));
            }
            if g.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return invalid(format!("g_{} must be finite and nonnegative", i + 1));
            }
        }
        Ok(())
    }

    /// `g_n` (1-based) at a full word.
    pub fn at(&self, space: &SymbolicSpace, n: usize, idx: usize) -> f64 {
        self.levels[n - 1][idx % space.suffix_size(n - 1)]
    }

    /// `G_n(x) = prod_{j<=n} g_j(x)`.
    pub fn cumulative(&self, space: &SymbolicSpace, n: usize, idx: usize) -> f64 {
        (1..=n).map(|j| self.at(space, j, idx)).product()
    }

    /// `max |sum_{y: A_n(y, x_{n+1})=1} g_n(y, x_{n+1}, ...) - 1|` over admissible tails.
    pub fn normalization_error(&self, space: &SymbolicSpace) -> Result<f64> {
        self.validate(space)?;
        let mut worst = 0.0f64;
        for (i, g) in self.levels.iter().enumerate() {
            let next = space.suffix_size(i + 1);
            for s in 0..next {
                if i + 1 < space.depth() && !space.suffix_admissible(i + 1, s) {
                    continue;
                }
                let total: f64 =
                    (0..space.alphabet_sizes[i]).filter(|a| space.allowed(i, *a, s)).map(|a| g[a * next + s]).sum();
                worst = worst.max((total - 1.0).abs());
            }
        }
        Ok(worst)
    }

    pub fn uniform(space: &SymbolicSpace) -> Self {
        let levels = (0..space.depth())
            .map(|i| {
                let next = space.suffix_size(i + 1);
                (0..space.suffix_size(i))
                    .map(|idx| {
                        let s = idx % next;
                        let count = (0..space.alphabet_sizes[i]).filter(|a| space.allowed(i, *a, s)).count();
                        1.0 / count as f64
                    })
                    .collect()
            })
            .collect();
        PotentialSeq { levels }
    }
}

/// Potentials of the Riesz product under `(x_n) -> sum x_n / (l_1 ... l_n)` with
/// `l_1 ... l_n = lambda_n`: `g_{n+1} = (1 + Re c_n e^{2 pi i lambda_n x}) / l_{n+1}`,
/// evaluated at the midpoint of each depth-`D` cylinder.
pub fn riesz_potentials(spec: &RieszProductSpec, depth: usize) -> Result<(SymbolicSpace, PotentialSeq)> {
    spec.validate()?;
    if depth == 0 || spec.lambdas.len() <= depth {
        return invalid(format!("depth {depth} needs lambda_0 .. lambda_{depth}"));
    }
    let mut sizes = vec![spec.lambdas[1] as usize];
    sizes.extend(spec.lambdas[1..=depth].windows(2).map(|w| (w[1] / w[0]) as usize));
    let space = SymbolicSpace::full(sizes)?;
    let top = 2 * spec.lambdas[depth] as u128;
    let levels = (0..depth)
        .map(|i| {
            let lam = spec.lambdas[i] as u128;
            let c = spec.cs[i];
            let l = space.alphabet_sizes[i] as f64;
            (0..space.suffix_size(i))
                .map(|s| {
                    let phase = ((lam * (2 * s as u128 + 1)) % top) as f64 / top as f64;
                    (1.0 + (c * num_complex::Complex64::from_polar(1.0, std::f64::consts::TAU * phase)).re) / l
                })
                .collect()
        })
        .collect();
    Ok((space, PotentialSeq { levels }))
}

fn check_fn(space: &SymbolicSpace, f: &[f64]) -> Result<()> {
    if f.len() != space.words() {
        return invalid(format!("cylinder function needs {} values", space.words()));
    }
    Ok(())
}

/// Largest normalization defect accepted by [`pn_apply`].
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// `P_n f(x) = sum_{y_1..y_n} G_n(y, x_{>n}) f(y, x_{>n})` over admissible prefixes.
/// Each level divides by its fiber's weight sum (1 up to rounding), so `P_n 1 = 1`
/// holds exactly in floating point.
pub fn pn_apply(space: &SymbolicSpace, pot: &PotentialSeq, f: &[f64], n: usize) -> Result<Vec<f64>> {
    let defect = pot.normalization_error(space)?;
    if defect > NORMALIZATION_TOL {
        return Err(Error::Hypothesis(format!("potentials are not normalized (defect {defect:e})")));
    }
    check_fn(space, f)?;
    if n > space.depth() {
        return Err(Error::Level { level: n as u32, resolution: space.depth() as u32 });
    }
    let mut h = f.to_vec();
    for i in 0..n {
        let next = space.suffix_size(i + 1);
        let g = &pot.levels[i];
        let mut out = vec![0.0; next];
        for (s, o) in out.iter_mut().enumerate() {
            let (mut acc, mut mass) = (0.0, 0.0);
            for a in (0..space.alphabet_sizes[i]).filter(|a| space.allowed(i, *a, s)) {
                acc += g[a * next + s] * h[a * next + s];
                mass += g[a * next + s];
            }
            *o = if mass > 0.0 { acc / mass } else { 0.0 };
        }
        h = out;
    }
    let tail = space.suffix_size(n);
    Ok((0..space.words()).map(|idx| if space.admissible(idx) { h[idx % tail] } else { 0.0 }).collect())
}

/// `sup{|f(x) - f(y)| : x_1 = y_1, ..., x_m = y_m}` over admissible words.
pub fn var_m(space: &SymbolicSpace, f: &[f64], m: usize) -> Result<f64> {
    Ok(var_with_witness(space, f, m)?.0)
}

fn var_with_witness(space: &SymbolicSpace, f: &[f64], m: usize) -> Result<(f64, usize, usize)> {
    check_fn(space, f)?;
    if m > space.depth() {
        return Err(Error::Level { level: m as u32, resolution: space.depth() as u32 });
    }
    let block = space.suffix_size(m);
    let mut best = (0.0, 0, 0);
    for start in (0..space.words()).step_by(block) {
        let (mut lo, mut hi) = ((f64::INFINITY, 0), (f64::NEG_INFINITY, 0));
        for (idx, &v) in f.iter().enumerate().skip(start).take(block) {
            if !space.admissible(idx) {
                continue;
            }
            if v < lo.0 {
                lo = (v, idx);
            }
            if v > hi.0 {
                hi = (v, idx);
            }
        }
        if hi.0 - lo.0 > best.0 {
            best = (hi.0 - lo.0, hi.1, lo.1);
        }
    }
    Ok(best)
}

/// Equilibrium state on depth-`D` words: iterates `mu <- P_n^* mu` for `n = D, ..., 1`
/// until successive sweeps differ by less than `1e-12`.
pub fn equilibrium_state(space: &SymbolicSpace, pot: &PotentialSeq) -> Result<Vec<f64>> {
    pot.validate(space)?;
    let adm: Vec<bool> = (0..space.words()).map(|i| space.admissible(i)).collect();
    let count = adm.iter().filter(|a| **a).count() as f64;
    let mut mu: Vec<f64> = adm.iter().map(|a| if *a { 1.0 / count } else { 0.0 }).collect();
    for _ in 0..100 {
        let prev = mu.clone();
        for n in (1..=space.depth()).rev() {
            let tail = space.suffix_size(n);
            let mut marginal = vec![0.0; tail];
            for (idx, m) in mu.iter().enumerate() {
                marginal[idx % tail] += m;
            }
            for (idx, m) in mu.iter_mut().enumerate() {
                *m = if adm[idx] { pot.cumulative(space, n, idx) * marginal[idx % tail] } else { 0.0 };
            }
        }
        let change = mu.iter().zip(&prev).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if change < 1e-12 {
            return Ok(mu);
        }
    }
    Err(Error::Hypothesis("equilibrium iteration did not settle".into()))
}

/// `mu(I_n(p))` for every prefix `p` of length `n`.
pub fn cylinder_weights(space: &SymbolicSpace, mu: &[f64], n: usize) -> Result<Vec<f64>> {
    check_fn(space, mu)?;
    if n > space.depth() {
        return Err(Error::Level { level: n as u32, resolution: space.depth() as u32 });
    }
    Ok(mu.chunks(space.suffix_size(n)).map(|c| c.iter().sum()).collect())
}

/// `(min, max)` of `mu(I_n(x)) / G_n(x)` over admissible `x` and `1 <= n <= D`.
pub fn cylinder_sandwich(space: &SymbolicSpace, pot: &PotentialSeq, mu: &[f64]) -> Result<(f64, f64)> {
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for n in 1..=space.depth() {
        let w = cylinder_weights(space, mu, n)?;
        let block = space.suffix_size(n);
        for idx in (0..space.words()).filter(|i| space.admissible(*i)) {
            let g = pot.cumulative(space, n, idx);
            if g > 0.0 {
                let r = w[idx / block] / g;
                lo = lo.min(r);
                hi = hi.max(r);
            }
        }
    }
    Ok((lo, hi))
}

/// Largest violation of `var_m(log g_n) <= A / (m - n)^alpha`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub n: usize,
    pub m: usize,
    pub x: Vec<usize>,
    pub y: Vec<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CondGn {
    /// `max_{1<n<m<=D} var_m(log g_n) (m-n)^alpha`.
    pub smallest_a: f64,
    pub witness: Option<Witness>,
    pub report: AuditReport,
}

pub fn cond_gn_check(space: &SymbolicSpace, pot: &PotentialSeq, alpha: f64, a: f64) -> Result<CondGn> {
    pot.validate(space)?;
    if !(alpha > 0.0) {
        return invalid("alpha must be positive");
    }
    let d = space.depth();
    let mut smallest = 0.0f64;
    let mut witness = None;
    for n in 2..=d {
        let logs = (0..space.words())
            .map(|idx| {
                let g = pot.at(space, n, idx);
                if space.admissible(idx) && g <= 0.0 {
                    Err(Error::Hypothesis(format!("g_{n} vanishes on {:?}", space.digits(idx))))
                } else {
                    Ok(if g > 0.0 { g.ln() } else { 0.0 })
                }
            })
            .collect::<Result<Vec<f64>>>()?;
        for m in n + 1..=d {
            let (v, x, y) = var_with_witness(space, &logs, m)?;
            let need = v * ((m - n) as f64).powf(alpha);
            if need > smallest {
                smallest = need;
                witness = Some(Witness { n, m, x: space.digits(x), y: space.digits(y) });
            }
        }
    }
    let report = AuditReport::upper_bound(smallest, a, a, format!("cond-gn alpha={alpha}"));
    Ok(CondGn { smallest_a: smallest, witness, report })
}

/// `||P_m f_n||_inf` for `1 < n < m <= D` and its decay in `m - n`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EstPn {
    pub alpha: f64,
    /// `(n, m, ||P_m f_n||_inf)`.
    pub rows: Vec<(usize, usize, f64)>,
    /// `(m - n, sup_n ||P_m f_n||_inf)`.
    pub by_gap: Vec<(usize, f64)>,
    /// Log-log slope of `by_gap` over gaps `>= 2`; `-inf` when those values vanish.
    #[serde(with = "crate::report::extended")]
    pub slope: f64,
    /// `max ||P_m f_n|| (m-n)^alpha / log(1+m-n)^{1+alpha}`.
    pub fitted_c: f64,
    pub report: AuditReport,
}

/// Checks the hypotheses `||f_n|| <= B`, `var_m(f_n) <= B/(m-n)^alpha` and that `f_n`
/// ignores `x_1..x_n`, then computes every `P_m f_n` exactly.
pub fn est_pn_audit(
    space: &SymbolicSpace,
    pot: &PotentialSeq,
    fs: &[(usize, Vec<f64>)],
    alpha: f64,
    b: f64,
) -> Result<EstPn> {
    pot.validate(space)?;
    if !(alpha > 0.0) || !(b > 0.0) {
        return invalid("alpha and B must be positive");
    }
    let d = space.depth();
    let zero = 1e-12 * b;
    for (n, f) in fs {
        check_fn(space, f)?;
        let sup = f.iter().map(|v| v.abs()).fold(0.0, f64::max);
        if sup > b {
            return Err(Error::Hypothesis(format!("||f_{n}||_inf = {sup} > B")));
        }
        if *n < d && var_m(space, f, 0).is_ok() {
            let tail = space.suffix_size(*n);
            for idx in 0..space.words() {
                if (f[idx] - f[idx % tail]).abs() > zero && space.admissible(idx % tail) && space.admissible(idx) {
                    return Err(Error::Hypothesis(format!("f_{n} depends on the first {n} coordinates")));
                }
            }
        }
        for m in n + 1..=d {
            let v = var_m(space, f, m)?;
            if *n > 1 && v > b / ((m - n) as f64).powf(alpha) * (1.0 + 1e-12) {
                return Err(Error::Hypothesis(format!("var_{m}(f_{n}) = {v} exceeds B/(m-n)^alpha")));
            }
        }
    }
    let mut rows = Vec::new();
    for (n, f) in fs.iter().filter(|(n, _)| *n > 1) {
        for m in n + 1..=d {
            let pm = pn_apply(space, pot, f, m)?;
            rows.push((*n, m, pm.iter().map(|v| v.abs()).fold(0.0, f64::max)));
        }
    }
    let mut by_gap: Vec<(usize, f64)> = Vec::new();
    for &(n, m, v) in &rows {
        let gap = m - n;
        match by_gap.iter_mut().find(|(g, _)| *g == gap) {
            Some(e) => e.1 = e.1.max(v),
            None => by_gap.push((gap, v)),
        }
    }
    by_gap.sort_by_key(|e| e.0);
    let fit: Vec<(f64, f64)> =
        by_gap.iter().filter(|(g, v)| *g >= 2 && *v > zero).map(|(g, v)| (*g as f64, *v)).collect();
    let slope = if fit.len() >= 2 {
        loglog_slope(&fit.iter().map(|p| p.0).collect::<Vec<_>>(), &fit.iter().map(|p| p.1).collect::<Vec<_>>())?
    } else if by_gap.iter().any(|(g, v)| *g >= 2 && *v > zero) {
        return Err(Error::Hypothesis("too few gaps to fit a decay slope".into()));
    } else {
        f64::NEG_INFINITY
    };
    let fitted_c = rows
        .iter()
        .map(|&(n, m, v)| {
            let g = (m - n) as f64;
            v * g.powf(alpha) / (1.0 + g).ln().powf(1.0 + alpha)
        })
        .fold(0.0, f64::max);
    let rhs = -alpha + 0.2;
    let report = AuditReport {
        lhs: slope,
        rhs,
        constant: alpha,
        margin: rhs - slope,
        passed: slope <= rhs,
        context: format!("est-Pn slope alpha={alpha} depth={d}"),
        seed: None,
    };
    Ok(EstPn { alpha, rows, by_gap, slope, fitted_c, report })
}

/// `f_n = Re e^{2 pi i lambda_n x} - E_mu(.)` at cylinder midpoints, `n = 2..D-1`.
pub fn riesz_cosine_family(
    spec: &RieszProductSpec,
    space: &SymbolicSpace,
    mu: &[f64],
) -> Result<Vec<(usize, Vec<f64>)>> {
    check_fn(space, mu)?;
    let d = space.depth();
    if spec.lambdas.len() <= d {
        return invalid(format!("need lambda_0 .. lambda_{d}"));
    }
    let top = 2 * spec.lambdas[d] as u128;
    Ok((2..d)
        .map(|n| {
            let lam = spec.lambdas[n] as u128;
            let raw: Vec<f64> = (0..space.words())
                .map(|i| (std::f64::consts::TAU * ((lam * (2 * i as u128 + 1)) % top) as f64 / top as f64).cos())
                .collect();
            let mean: f64 = raw.iter().zip(mu).map(|(a, b)| a * b).sum();
            (n, raw.iter().map(|v| v - mean).collect())
        })
        .collect())
}

/// `C sum_l l^{1+alpha} / 2^{l(alpha - 1/2)} (sum |a_n|^2)^{1/2}`; infinite for `alpha <= 1/2`.
pub fn decreasing_criterion_symbolic(fitted_c: f64, a: &[f64], alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return invalid("alpha must be positive");
    }
    let norm = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Ok(0.0);
    }
    if alpha <= 0.5 {
        return Ok(f64::INFINITY);
    }
    let mut total = 0.0;
    for l in 1..100_000u32 {
        let x = l as f64;
        let t = x.powf(1.0 + alpha) * 2f64.powf(-x * (alpha - 0.5));
        total += t;
        if x > 4.0 / (alpha - 0.5) && t < 1e-17 * total {
            break;
        }
    }
    Ok(fitted_c * total * norm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn riesz(depth: usize, ncoef: usize) -> RieszProductSpec {
        let lambdas: Vec<u64> = (0..=depth as u32).map(|n| 3u64.pow(n)).collect();
        let cs = (0..=depth)
            .map(|n| if n < ncoef { Complex64::from_polar(0.8, 0.9 * n as f64) } else { Complex64::new(0.0, 0.0) })
            .collect();
        RieszProductSpec::new(lambdas, cs, true).unwrap()
    }

    #[test]
    fn space_validation() {
        let s = SymbolicSpace::full(vec![2, 3, 2]).unwrap();
        assert_eq!(s.words(), 12);
        assert_eq!(s.digits(7), vec![1, 0, 1]);
        assert!(SymbolicSpace::full(vec![1, 2]).is_err());
        let zero_row = vec![vec![vec![1, 0], vec![0, 0]]];
        assert!(SymbolicSpace::new(vec![2, 2], zero_row, 0).is_err());
        let shift = vec![vec![vec![0, 1], vec![1, 1]]; 3];
        assert!(SymbolicSpace::new(vec![2; 4], shift.clone(), 0).is_err());
        let golden = SymbolicSpace::new(vec![2; 4], shift, 1).unwrap();
        assert!(!golden.admissible(0) && golden.admissible(0b0101));
    }

    #[test]
    fn pn_identities() {
        let shift = vec![vec![vec![0, 1], vec![1, 1]]; 4];
        for space in
            [SymbolicSpace::full(vec![3, 2, 4, 2, 3]).unwrap(), SymbolicSpace::new(vec![2; 5], shift, 1).unwrap()]
        {
            let pot = PotentialSeq::uniform(&space);
            assert!(pot.normalization_error(&space).unwrap() < 1e-15);
            let one = vec![1.0; space.words()];
            for n in 0..=5 {
                let p1 = pn_apply(&space, &pot, &one, n).unwrap();
                assert!((0..space.words()).filter(|i| space.admissible(*i)).all(|i| p1[i] == 1.0));
            }
            let f: Vec<f64> = (0..space.words()).map(|i| ((i * 7919) % 13) as f64).collect();
            for m in 1..=5 {
                let pm = pn_apply(&space, &pot, &f, m).unwrap();
                assert!(pm.iter().all(|v| *v >= 0.0));
                for n in 1..=m {
                    let pnm = pn_apply(&space, &pot, &pm, n).unwrap();
                    assert!(pnm.iter().zip(&pm).all(|(a, b)| (a - b).abs() < 1e-12));
                }
            }
        }
    }

    #[test]
    fn uniform_first_level_averages() {
        let space = SymbolicSpace::full(vec![3, 2]).unwrap();
        let pot = PotentialSeq::uniform(&space);
        let f: Vec<f64> = (0..6).map(|i| i as f64).collect();
        let p = pn_apply(&space, &pot, &f, 1).unwrap();
        assert_eq!(p, vec![2.0, 3.0, 2.0, 3.0, 2.0, 3.0]);
    }

    #[test]
    fn variations() {
        let space = SymbolicSpace::full(vec![2, 3, 2, 2]).unwrap();
        let dep2: Vec<f64> = (0..space.words()).map(|i| (space.digit(i, 0) * 3 + space.digit(i, 1)) as f64).collect();
        assert_eq!(var_m(&space, &dep2, 2).unwrap(), 0.0);
        let ind: Vec<f64> = (0..space.words()).map(|i| if i / space.suffix_size(3) == 5 { 1.0 } else { 0.0 }).collect();
        assert_eq!(var_m(&space, &ind, 2).unwrap(), 1.0);
        let (sp, pot) = riesz_potentials(&riesz(6, 6), 6).unwrap();
        let x: Vec<f64> = (0..sp.words()).map(|i| (i as f64 + 0.5) / sp.words() as f64).collect();
        let lip: Vec<f64> = x.iter().map(|t| (std::f64::consts::TAU * t).sin()).collect();
        for m in 1..=6 {
            let width: f64 = sp.alphabet_sizes[..m].iter().map(|l| *l as f64).product();
            assert!(var_m(&sp, &lip, m).unwrap() <= std::f64::consts::TAU / width + 1e-12);
        }
        assert!(pot.normalization_error(&sp).unwrap() < 1e-12);
    }

    #[test]
    fn cond_gn_examples() {
        let space = SymbolicSpace::full(vec![2; 6]).unwrap();
        let local = PotentialSeq {
            levels: (0..6)
                .map(|i| {
                    (0..space.suffix_size(i))
                        .map(|s| if s / space.suffix_size(i + 1) == 0 { 0.3 } else { 0.7 })
                        .collect()
                })
                .collect(),
        };
        let c = cond_gn_check(&space, &local, 1.0, 1e-9).unwrap();
        assert_eq!(c.smallest_a, 0.0);
        assert!(c.report.passed);
        let (sp, pot) = riesz_potentials(&riesz(7, 7), 7).unwrap();
        let r = cond_gn_check(&sp, &pot, 3.0, 100.0).unwrap();
        assert!(r.report.passed && r.smallest_a > 0.0);
        let mut bad = PotentialSeq::uniform(&space);
        let next = space.suffix_size(2);
        for s in 0..space.suffix_size(1) {
            let x4 = (s / space.suffix_size(4)) % 2;
            let y = s / next;
            let w = if x4 == 1 { 0.9 } else { 0.5 };
            bad.levels[1][s] = if y == 0 { w } else { 1.0 - w };
        }
        let v = cond_gn_check(&space, &bad, 1.0, 0.5).unwrap();
        assert!(!v.report.passed);
        let w = v.witness.unwrap();
        assert_eq!((w.n, w.m), (2, 3));
        assert!(bad.normalization_error(&space).unwrap() < 1e-15);
    }

    #[test]
    fn riesz_cross_representation() {
        let spec = riesz(12, 6);
        let (space, pot) = riesz_potentials(&spec, 12).unwrap();
        let mu = equilibrium_state(&space, &pot).unwrap();
        for n in 1..=6 {
            let sym = cylinder_weights(&space, &mu, n).unwrap();
            let tor = crate::riesz_symbolic::riesz::torus_cylinder_weights(&spec, 5, n).unwrap();
            let err = sym.iter().zip(&tor).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(err < 1e-6, "n={n} err={err}");
        }
        let (d1, d2) = cylinder_sandwich(&space, &pot, &mu).unwrap();
        assert!(d1 > 0.0 && d2.is_finite() && d1 <= 1.0 && d2 >= 1.0);
    }

    #[test]
    fn est_pn_and_criterion() {
        let depth = 8;
        let spec = riesz(depth, depth);
        let (space, pot) = riesz_potentials(&spec, depth).unwrap();
        let mu = equilibrium_state(&space, &pot).unwrap();
        let fs = riesz_cosine_family(&spec, &space, &mu).unwrap();
        let est = est_pn_audit(&space, &pot, &fs, 1.0, 10.0).unwrap();
        assert!(est.report.passed, "{:?}", est.by_gap);
        assert!(decreasing_criterion_symbolic(est.fitted_c, &[1.0, 0.5], 1.0).unwrap().is_finite());
        assert_eq!(decreasing_criterion_symbolic(1.0, &[1.0, 0.5], 0.4).unwrap(), f64::INFINITY);
        assert_eq!(decreasing_criterion_symbolic(1.0, &[0.0], 1.0).unwrap(), 0.0);
        assert!(decreasing_criterion_symbolic(1.0, &[1.0], 0.0).is_err());
        let want: f64 = (1..2000).map(|l| (l as f64).powi(2) * 2f64.powf(-(l as f64) / 2.0)).sum();
        assert!((decreasing_criterion_symbolic(1.0, &[1.0], 1.0).unwrap() - want).abs() < 1e-9 * want);
        let not_adapted = vec![(3usize, (0..space.words()).map(|i| space.digit(i, 0) as f64).collect::<Vec<f64>>())];
        assert!(est_pn_audit(&space, &pot, &not_adapted, 1.0, 10.0).is_err());
    }
}
