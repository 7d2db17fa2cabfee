//! Seeded batches of random inputs for the universal inequalities. Case `i` of a batch
//! draws from its own ChaCha stream `(seed, i)`, so results do not depend on the
//! execution strategy or on the number of workers.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::dilated_series::{contraction_audit, point_rng, theo_dilated_criteria, Freq, SeriesSpec};
use crate::dyadic_martingale::{
    cond_exp, doob_maximal_audit, rio_audit, telescope_check, theo_gen_criteria, FiltrationLevel,
};
use crate::ergodic_transfer::{transfer_apply, transfer_apply_pointwise, DoublingMap, TransferOperator};
use crate::error::{invalid, Error, Result};
use crate::modulus::dyadic_approx_audits;
use crate::par::{map_range, Exec};
use crate::report::AuditReport;
use crate::tail::{TailFamily, TailSpec};
use crate::torus_fn::{render, render_strict, FourierFunction, GridFunction};

/// Seed used when a batch is run without one.
pub const DEFAULT_SEED: u64 = 20_240_917;

/// Generator for case `i` of a batch.
pub fn case_rng(seed: u64, i: usize) -> ChaCha8Rng {
    point_rng(seed, i)
}

/// Random mean-zero real function on the `2^J` grid. Mixes white noise, sparse spikes,
/// dyadic step functions, smooth trigonometric shapes and one-level Haar details.
pub fn random_centered_grid(rng: &mut impl Rng, j: u32) -> Result<GridFunction> {
    let n = 1usize << j;
    let scale = 10f64.powf(rng.random_range(-2.0..2.0));
    let mut v: Vec<f64> = match rng.random_range(0..5u8) {
        0 => (0..n).map(|_| rng.random_range(-1.0..1.0)).collect(),
        1 => {
            let mut v = vec![0.0; n];
            for _ in 0..rng.random_range(1..=8) {
                v[rng.random_range(0..n)] += rng.random_range(-10.0..10.0);
            }
            v
        }
        2 => {
            let level = rng.random_range(1..=j);
            let vals: Vec<f64> = (0..1usize << level).map(|_| rng.random_range(-1.0..1.0)).collect();
            (0..n).map(|k| vals[k >> (j - level)]).collect()
        }
        3 => {
            let f = random_trig_poly(rng, (n / 2 - 1).clamp(1, 64) as i64, 8)?;
            render(&f, j)?.real_parts()
        }
        _ => {
            let level = rng.random_range(0..j);
            let signs: Vec<f64> = (0..1usize << level).map(|_| rng.random_range(-1.0..1.0)).collect();
            let half = 1usize << (j - level - 1);
            (0..n).map(|k| if (k / half) % 2 == 0 { signs[k / (2 * half)] } else { -signs[k / (2 * half)] }).collect()
        }
    };
    let mean = v.iter().sum::<f64>() / n as f64;
    for x in v.iter_mut() {
        *x = (*x - mean) * scale;
    }
    let f = GridFunction::from_real(j, v)?;
    let m = f.mean().re;
    if m != 0.0 {
        // one more pass removes the rounding left by the first subtraction
        return GridFunction::from_real(j, f.real_parts().iter().map(|x| x - m).collect());
    }
    Ok(f)
}

/// Random real trigonometric polynomial without constant term, at most `terms`
/// frequencies in `1..=max_freq`.
pub fn random_trig_poly(rng: &mut impl Rng, max_freq: i64, terms: usize) -> Result<FourierFunction> {
    let mut f = FourierFunction::new();
    let count = rng.random_range(1..=terms.max(1));
    for _ in 0..count {
        let m = rng.random_range(1..=max_freq.max(1));
        let c = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) / m as f64;
        f.add_term(m, c)?;
        f.add_term(-m, c.conj())?;
    }
    Ok(f)
}

fn tag(r: AuditReport, seed: u64, i: usize) -> AuditReport {
    let context = format!("{} case={i}", r.context);
    AuditReport { context, ..r.with_seed(seed) }
}

/// Runs `case` for `i = 0..cases`; a case that errors becomes one failed report
/// carrying the message, so the rest of the batch is still reported.
pub fn run_batch<F>(cases: usize, seed: u64, exec: Exec, case: F) -> Vec<AuditReport>
where
    F: Fn(&mut ChaCha8Rng, usize) -> Result<Vec<AuditReport>> + Sync + Send,
{
    let nested = map_range(exec, cases, |i| match case(&mut case_rng(seed, i), i) {
        Ok(rs) => rs.into_iter().map(|r| tag(r, seed, i)).collect(),
        Err(e) => vec![AuditReport {
            lhs: f64::NAN,
            rhs: f64::NAN,
            constant: f64::NAN,
            margin: f64::NAN,
            passed: false,
            context: format!("error case={i}: {e}"),
            seed: Some(seed),
        }],
    });
    nested.into_iter().flatten().collect()
}

fn check_ps(ps: &[f64]) -> Result<()> {
    if ps.is_empty() {
        return invalid("no exponents");
    }
    Ok(())
}

/// `sum_{n<J} ||D_n f||_2^2 = ||f - mean||_2^2` on random grid functions.
pub fn parseval_batch(cases: usize, j: u32, seed: u64, exec: Exec) -> Result<Vec<AuditReport>> {
    if j == 0 {
        return invalid("need J >= 1");
    }
    Ok(run_batch(cases, seed, exec, |rng, _| Ok(vec![telescope_check(&random_centered_grid(rng, j)?, 0, j - 1)?])))
}

/// Rio's inequality; case `i` uses `ps[i % ps.len()]`.
pub fn rio_batch(cases: usize, ps: &[f64], j: u32, seed: u64, exec: Exec) -> Result<Vec<AuditReport>> {
    check_ps(ps)?;
    Ok(run_batch(cases, seed, exec, |rng, i| Ok(vec![rio_audit(&random_centered_grid(rng, j)?, ps[i % ps.len()])?])))
}

/// Random martingale along a random subsequence `0 = l_0 < l_1 < ... < J` of levels.
pub fn random_martingale(rng: &mut impl Rng, j: u32) -> Result<(Vec<GridFunction>, Vec<FiltrationLevel>)> {
    let f = random_centered_grid(rng, j)?;
    let mut levels = vec![0];
    for l in 1..j {
        if rng.random_bool(0.5) {
            levels.push(l);
        }
    }
    let mut increments = Vec::with_capacity(levels.len());
    for (k, lo) in levels.iter().enumerate() {
        let hi = levels.get(k + 1).copied().unwrap_or(j);
        increments.push(cond_exp(&f, hi)?.sub(&cond_exp(&f, *lo)?)?);
    }
    Ok((increments, levels))
}

/// Doob's maximal inequality on random martingales.
pub fn doob_batch(cases: usize, ps: &[f64], j: u32, seed: u64, exec: Exec) -> Result<Vec<AuditReport>> {
    check_ps(ps)?;
    Ok(run_batch(cases, seed, exec, |rng, i| {
        let (inc, levels) = random_martingale(rng, j)?;
        Ok(vec![doob_maximal_audit(&inc, &levels, ps[i % ps.len()])?])
    }))
}

/// Factor-2 dyadic approximation bound at every level, for each random trigonometric
/// polynomial and each exponent.
pub fn dyadic_approx_batch(cases: usize, ps: &[f64], j: u32, seed: u64, exec: Exec) -> Result<Vec<AuditReport>> {
    check_ps(ps)?;
    if j < 2 {
        return invalid("need J >= 2");
    }
    let top = ((1i64 << (j - 1)) - 1).min(64);
    Ok(run_batch(cases, seed, exec, |rng, _| {
        let g = render_strict(&random_trig_poly(rng, top, 6)?, j)?;
        let mut out = Vec::new();
        for p in ps {
            out.extend(dyadic_approx_audits(&g, *p, Exec::Sequential)?);
        }
        Ok(out)
    }))
}

/// Contraction bound `2^n/m` (and the `p = 2` refinement) for random `(f, m, n)`.
/// Exponents cycle through `ps`; a quarter of the cases take `m` a multiple of `2^n`.
pub fn contraction_batch(cases: usize, ps: &[f64], j: u32, seed: u64, exec: Exec) -> Result<Vec<AuditReport>> {
    check_ps(ps)?;
    if j < 2 {
        return invalid("need J >= 2");
    }
    let top = ((1i64 << (j - 1)) - 1).min(32);
    Ok(run_batch(cases, seed, exec, |rng, i| {
        let f = random_trig_poly(rng, top, 6)?;
        let n = rng.random_range(0..=10u32);
        let mut m = rng.random_range(1..=4096u64);
        if i % 4 == 3 {
            m = (m % 64 + 1) << n;
        }
        contraction_audit(&f, m, n, ps[i % ps.len()], j)
    }))
}

/// Random family `Z_0..Z_{N-1}`: `Z_n` is a random function smoothed to `F_{n+s}` plus a
/// small rough part, so that both detail sums are exercised.
pub fn random_family(rng: &mut impl Rng, j: u32) -> Result<Vec<GridFunction>> {
    let count = rng.random_range(1..=j as usize);
    (0..count)
        .map(|n| {
            let base = random_centered_grid(rng, j)?;
            let level = (n as u32 + rng.random_range(0..4)).min(j);
            let smooth = cond_exp(&base, level)?;
            let rough = random_centered_grid(rng, j)?;
            let w = 10f64.powf(rng.random_range(-6.0..0.0)) * smooth.sup_norm() / rough.sup_norm().max(1e-300);
            let z: Vec<f64> = smooth.real_parts().iter().zip(rough.real_parts()).map(|(a, b)| a + w * b).collect();
            let mean = z.iter().sum::<f64>() / z.len() as f64;
            GridFunction::from_real(j, z.iter().map(|v| v - mean).collect())
        })
        .collect()
}

/// Maximal inequality `||S*||_p <= K_p (S_1 + S_2)` on random families along the
/// full dyadic filtration.
pub fn theo_gen_batch(cases: usize, ps: &[f64], j: u32, seed: u64, exec: Exec) -> Result<Vec<AuditReport>> {
    check_ps(ps)?;
    let levels: Vec<FiltrationLevel> = (0..=j).collect();
    Ok(run_batch(cases, seed, exec, |rng, i| {
        let z = random_family(rng, j)?;
        Ok(vec![theo_gen_criteria(&z, &levels, ps[i % ps.len()])?.maximal])
    }))
}

/// Dilated-series majorant on random lacunary series with random smooth generators.
pub fn theo_dilated_batch(cases: usize, ps: &[f64], j: u32, seed: u64, exec: Exec) -> Result<Vec<AuditReport>> {
    check_ps(ps)?;
    Ok(run_batch(cases, seed, exec, |rng, i| {
        let generator = random_trig_poly(rng, 8, 4)?;
        let q = rng.random_range(2..=4u64);
        let k = rng.random_range(4..=20usize);
        let mut freqs = vec![Freq::new(rng.random_range(1..=3))?];
        for _ in 1..k {
            let last = *freqs.last().unwrap();
            freqs.push(last.checked_mul(q).ok_or_else(|| Error::Invalid("frequency overflow".into()))?);
        }
        let coeffs: Vec<f64> = (0..k).map(|_| rng.random_range(-1.0..1.0)).collect();
        let spec = SeriesSpec::real(&coeffs, freqs, generator)?;
        Ok(vec![theo_dilated_criteria(&spec, ps[i % ps.len()], j, TailSpec::Fit(TailFamily::Geometric))?.report])
    }))
}

/// Transfer-operator checks on random trigonometric polynomials: coefficient form
/// against pointwise form, and `<L f, g> = <f, g o T>`.
pub fn transfer_batch(cases: usize, j: u32, seed: u64, exec: Exec) -> Result<Vec<AuditReport>> {
    if j < 4 {
        return invalid("need J >= 4");
    }
    let top = (1i64 << (j - 3)) - 1;
    Ok(run_batch(cases, seed, exec, |rng, _| {
        let f = random_trig_poly(rng, top.min(64), 8)?;
        let g = random_trig_poly(rng, top.min(32), 8)?;
        let coef = render(&transfer_apply(&f), j - 1)?;
        let point = transfer_apply_pointwise(&render(&f, j)?)?;
        let forms =
            AuditReport::identity(coef.sub(&point)?.sup_norm(), 0.0, 0.0, 1e-12, format!("transfer forms J={j}"));
        let lhs = render(&transfer_apply(&f), j)?.inner(&render(&g, j)?)?;
        let rhs = render(&f, j)?.inner(&render(&DoublingMap.compose(&g)?, j)?)?;
        let duality = AuditReport::identity((lhs - rhs).norm(), 0.0, 0.0, 1e-10, "transfer duality");
        Ok(vec![forms, duality])
    }))
}

/// Number of failed reports.
pub fn failures(reports: &[AuditReport]) -> usize {
    reports.iter().filter(|r| !r.passed).count()
}
