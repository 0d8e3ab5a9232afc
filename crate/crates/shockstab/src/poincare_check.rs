//! Falsification harness for the nonlinear weighted Poincaré-type inequality
//! on [0,1] and for the localized sharp estimate R_δ.
//!
//! Test profiles W are polynomials in the shifted Legendre basis
//! P̃_n(y) = P_n(2y − 1). These diagonalize both quadratic forms in the
//! inequality: ∫P̃_n P̃_m = δ_nm/(2n+1) and −(y(1−y)P̃_n')' = n(n+1)P̃_n.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::entropy_functionals::Localized;
use crate::error::{Error, Result};
use crate::quadrature::CompositeGauss;

/// Working bound on ∫W² when none is given.
pub const DEFAULT_C1: f64 = 5.0;
/// Cap on finite-difference ascent iterations.
pub const POLISH_ITERS: usize = 50;
/// Smallest ∫W² the sampler draws; W ≡ 0 gives LHS = 0 exactly.
pub const MIN_L2_SQ: f64 = 1e-3;

/// W = Σ c_n P̃_n on [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct TestProfileW {
    pub coeffs: Vec<f64>,
}

impl TestProfileW {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Self { coeffs }
    }

    pub fn constant(c: f64) -> Self {
        Self { coeffs: vec![c] }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    /// (W(y), W'(y)) by the three-term recurrence.
    pub fn eval(&self, y: f64) -> (f64, f64) {
        let x = 2.0 * y - 1.0;
        let (mut p0, mut p1) = (1.0, x);
        let (mut d0, mut d1) = (0.0, 1.0);
        let mut w = 0.0;
        let mut dw = 0.0;
        for (n, &c) in self.coeffs.iter().enumerate() {
            let (p, d) = match n {
                0 => (p0, d0),
                1 => (p1, d1),
                _ => {
                    let k = n as f64;
                    let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                    let d2 = d0 + (2.0 * k - 1.0) * p1;
                    p0 = p1;
                    p1 = p2;
                    d0 = d1;
                    d1 = d2;
                    (p2, d2)
                }
            };
            w += c * p;
            // d/dy = 2 d/dx
            dw += 2.0 * c * d;
        }
        (w, dw)
    }

    /// ∫₀¹ W² in closed form.
    pub fn l2_sq(&self) -> f64 {
        self.coeffs.iter().enumerate().map(|(n, c)| c * c / (2 * n + 1) as f64).sum()
    }

    /// ∫₀¹ W in closed form.
    pub fn mean(&self) -> f64 {
        self.coeffs.first().copied().unwrap_or(0.0)
    }

    /// ∫₀¹ y(1−y)|W'|² in closed form.
    pub fn dirichlet(&self) -> f64 {
        self.coeffs.iter().enumerate().map(|(n, c)| c * c * (n * (n + 1)) as f64 / (2 * n + 1) as f64).sum()
    }

    fn scaled(&self, s: f64) -> Self {
        Self { coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }
}

/// Gauss panels with 8 nodes each, none at the endpoints.
fn rule(quad_n: usize) -> CompositeGauss {
    CompositeGauss::new(0.0, 1.0, quad_n.max(1), 8)
}

fn lhs_with(w: &TestProfileW, delta: f64, q: &CompositeGauss) -> f64 {
    let (mut i1, mut i2, mut i3, mut ia3, mut id) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (&y, &wt) in q.nodes.iter().zip(&q.weights) {
        let (f, df) = w.eval(y);
        i1 += wt * f;
        i2 += wt * f * f;
        i3 += wt * f * f * f;
        ia3 += wt * (f * f * f).abs();
        id += wt * y * (1.0 - y) * df * df;
    }
    let s = i2 + 2.0 * i1;
    -s * s / delta + (1.0 + delta) * i2 + 2.0 / 3.0 * i3 + delta * ia3 - (1.0 - delta) * id
}

/// Left-hand side of the inequality by composite Gauss quadrature with
/// `quad_n` panels. It is claimed non-positive for small δ.
pub fn winst_lhs(w: &TestProfileW, delta: f64, quad_n: usize) -> f64 {
    lhs_with(w, delta, &rule(quad_n))
}

/// Closed form for constant W ≡ c.
pub fn winst_lhs_constant(c: f64, delta: f64) -> f64 {
    let s = c * c + 2.0 * c;
    -s * s / delta + (1.0 + delta) * c * c + 2.0 / 3.0 * c * c * c + delta * c.abs().powi(3)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplerConfig {
    pub seed: u64,
    /// Highest Legendre degree.
    pub degree: usize,
    pub n_samples: usize,
    pub polish_iters: usize,
    pub quad_n: usize,
    /// Fraction of samples that are constant profiles.
    pub constant_fraction: f64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self { seed: 0, degree: 6, n_samples: 10_000, polish_iters: POLISH_ITERS, quad_n: 16, constant_fraction: 0.25 }
    }
}

/// One evaluated (and polished) sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleRecord {
    pub index: usize,
    pub lhs: f64,
    pub w: TestProfileW,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub delta: f64,
    pub c1: f64,
    /// Largest LHS found; positive means a violation.
    pub worst_margin: f64,
    pub argmax: TestProfileW,
    pub violations: usize,
    pub records: Vec<SampleRecord>,
}

/// Rescales W into the shell MIN_L2_SQ ≤ ∫W² ≤ C₁.
fn project(w: TestProfileW, c1: f64) -> TestProfileW {
    let n = w.l2_sq();
    if n > c1 {
        w.scaled((c1 / n).sqrt())
    } else if n < MIN_L2_SQ && n > 0.0 {
        w.scaled((MIN_L2_SQ / n).sqrt())
    } else {
        w
    }
}

fn draw(rng: &mut ChaCha8Rng, cfg: &SamplerConfig, c1: f64) -> TestProfileW {
    let target = rng.gen_range(MIN_L2_SQ..=c1);
    if rng.gen::<f64>() < cfg.constant_fraction {
        let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
        return TestProfileW::constant(sign * target.sqrt());
    }
    let mut coeffs: Vec<f64> = (0..=cfg.degree).map(|_| rng.gen_range(-1.0..1.0)).collect();
    // Bias towards low modes, where the negative Dirichlet term is weakest.
    for (n, c) in coeffs.iter_mut().enumerate() {
        *c /= 1.0 + n as f64;
    }
    let w = TestProfileW::new(coeffs);
    let n = w.l2_sq();
    if n == 0.0 {
        return TestProfileW::constant(target.sqrt());
    }
    w.scaled((target / n).sqrt())
}

/// Finite-difference ascent on the coefficients with backtracking.
fn polish(mut w: TestProfileW, delta: f64, c1: f64, iters: usize, q: &CompositeGauss) -> (TestProfileW, f64) {
    let mut f = lhs_with(&w, delta, q);
    let mut step = 1e-2;
    let h = 1e-6;
    for _ in 0..iters {
        let grad: Vec<f64> = (0..w.coeffs.len())
            .map(|k| {
                let mut a = w.clone();
                let mut b = w.clone();
                a.coeffs[k] += h;
                b.coeffs[k] -= h;
                (lhs_with(&a, delta, q) - lhs_with(&b, delta, q)) / (2.0 * h)
            })
            .collect();
        let gn = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if !(gn > 0.0) || !gn.is_finite() {
            break;
        }
        let mut improved = false;
        while step > 1e-12 {
            let cand = TestProfileW::new(w.coeffs.iter().zip(&grad).map(|(c, g)| c + step * g / gn).collect());
            let cand = project(cand, c1);
            let fc = lhs_with(&cand, delta, q);
            if fc > f {
                w = cand;
                f = fc;
                step *= 2.0;
                improved = true;
                break;
            }
            step *= 0.5;
        }
        if !improved {
            break;
        }
    }
    (w, f)
}

/// Random search plus ascent polish for positive LHS with ∫W² ≤ C₁.
/// Each sample owns an independent ChaCha stream, so the result does not
/// depend on the thread count.
pub fn search_violations(cfg: &SamplerConfig, delta: f64, c1: f64) -> Result<SearchResult> {
    if cfg.n_samples == 0 {
        return Err(Error::Validation("n_samples must be at least 1".into()));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Validation(format!("delta must lie in (0,1), got {delta}")));
    }
    if !(c1 > MIN_L2_SQ) {
        return Err(Error::Validation(format!("C1 must exceed {MIN_L2_SQ}, got {c1}")));
    }
    let q = rule(cfg.quad_n);
    let records: Vec<SampleRecord> = (0..cfg.n_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(i as u64);
            let w = draw(&mut rng, cfg, c1);
            let (w, lhs) = polish(w, delta, c1, cfg.polish_iters, &q);
            SampleRecord { index: i, lhs, w }
        })
        .collect();
    let mut best = 0;
    for (i, r) in records.iter().enumerate() {
        if r.lhs > records[best].lhs {
            best = i;
        }
    }
    Ok(SearchResult {
        delta,
        c1,
        worst_margin: records[best].lhs,
        argmax: records[best].w.clone(),
        violations: records.iter().filter(|r| r.lhs > 0.0).count(),
        records,
    })
}

/// Worst margin per δ and the smallest δ at which a violation was found.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaScan {
    pub rows: Vec<(f64, f64, usize)>,
    pub threshold: Option<f64>,
}

pub fn scan_delta(cfg: &SamplerConfig, deltas: &[f64], c1: f64) -> Result<DeltaScan> {
    let mut ds: Vec<f64> = deltas.to_vec();
    ds.sort_by(f64::total_cmp);
    let mut rows = Vec::with_capacity(ds.len());
    for &d in &ds {
        let r = search_violations(cfg, d, c1)?;
        rows.push((d, r.worst_margin, r.violations));
    }
    let threshold = rows.iter().find(|r| r.2 > 0).map(|r| r.0);
    Ok(DeltaScan { rows, threshold })
}

/// R_δ for one wave family from its localized functionals.
pub fn rdelta_margin(l: &Localized, eps: f64, lambda: f64, delta: f64) -> Result<f64> {
    if !(eps > 0.0 && lambda > 0.0 && delta > 0.0) {
        return Err(Error::Validation(format!("eps, lambda, delta must be positive: {eps}, {lambda}, {delta}")));
    }
    let r = eps / lambda;
    Ok(-l.yg * l.yg / (eps * delta) + l.i1 + delta * l.i1.abs() + l.i2 + delta * r * l.i2.abs()
        - (1.0 - delta * r) * l.g2
        - (1.0 - delta) * l.d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_eval_matches_explicit() {
        // P̃_2(y) = 6y² − 6y + 1, P̃_3(y) = 20y³ − 30y² + 12y − 1.
        let w = TestProfileW::new(vec![0.0, 0.0, 1.0, 2.0]);
        for &y in &[0.0, 0.2, 0.5, 0.93, 1.0] {
            let f = 6.0 * y * y - 6.0 * y + 1.0 + 2.0 * (20.0 * y * y * y - 30.0 * y * y + 12.0 * y - 1.0);
            let df = 12.0 * y - 6.0 + 2.0 * (60.0 * y * y - 60.0 * y + 12.0);
            let (a, b) = w.eval(y);
            assert!((a - f).abs() < 1e-12 && (b - df).abs() < 1e-11, "{y}");
        }
    }

    #[test]
    fn closed_forms_match_quadrature() {
        let w = TestProfileW::new(vec![0.3, -0.7, 0.2, 0.5, -0.1, 0.05, 0.3]);
        let q = rule(8);
        let l2 = q.integrate(|y| w.eval(y).0.powi(2));
        let m = q.integrate(|y| w.eval(y).0);
        let d = q.integrate(|y| y * (1.0 - y) * w.eval(y).1.powi(2));
        assert!((l2 - w.l2_sq()).abs() < 1e-13);
        assert!((m - w.mean()).abs() < 1e-14);
        assert!((d - w.dirichlet()).abs() < 1e-12);
    }

    #[test]
    fn zero_and_constant() {
        assert_eq!(winst_lhs(&TestProfileW::new(vec![]), 0.1, 4), 0.0);
        for &c in &[-2.5, -2.0, -0.3, 0.0, 0.7, 1.9] {
            for &d in &[0.005, 0.1, 0.5] {
                let a = winst_lhs(&TestProfileW::constant(c), d, 4);
                assert!((a - winst_lhs_constant(c, d)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn rdelta_zero_inputs() {
        assert_eq!(rdelta_margin(&Localized::default(), 0.1, 0.1, 0.01).unwrap(), 0.0);
    }
}
