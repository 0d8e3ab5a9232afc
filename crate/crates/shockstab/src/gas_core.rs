//! Pressure law, entropy, viscosity closures and relative functionals.
//!
//! The gas obeys p(v) = v^{-γ} with viscosity μ(v) = b v^{-α}. The physical
//! entropy is Q(v) = v^{1-γ}/(γ-1) so that Q' = -p. Relative quantities
//! F(v|w) = F(v) - F(w) - F'(w)(v-w) are evaluated in a cancellation-free form,
//! which matters when checking inequalities whose margins are of fourth order.

use crate::error::{Error, Result};

/// Positivity floor used by the domain guards unless overridden.
pub const DEFAULT_V_MIN: f64 = 1e-10;

/// Constants of the barotropic model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GasModel {
    pub gamma: f64,
    pub alpha: f64,
    /// Viscosity amplitude in μ(v) = b v^{-α}.
    pub b: f64,
    /// Viscosity strength; 1 in the contraction setting.
    pub nu: f64,
    beta: f64,
    /// Floor below which v counts as blow-up.
    pub v_min: f64,
}

/// A state in (v, u) variables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct State {
    pub v: f64,
    pub u: f64,
}

/// A state in (v, h) variables, h the BD-modulated velocity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BDState {
    pub v: f64,
    pub h: f64,
}

impl State {
    pub fn new(v: f64, u: f64) -> Result<Self> {
        check_volume(v, 0.0)?;
        Ok(Self { v, u })
    }
}

impl BDState {
    pub fn new(v: f64, h: f64) -> Result<Self> {
        check_volume(v, 0.0)?;
        Ok(Self { v, h })
    }
}

fn check_volume(v: f64, floor: f64) -> Result<()> {
    if v.is_finite() && v > floor {
        Ok(())
    } else {
        Err(Error::Domain(format!("volume must exceed {floor:e}, got {v}")))
    }
}

impl GasModel {
    /// Model with b = γ and ν = 1, the normalization under which the
    /// BD-transformed system has unit diffusion.
    pub fn new(gamma: f64, alpha: f64) -> Result<Self> {
        Self::with_params(gamma, alpha, gamma, 1.0)
    }

    pub fn with_params(gamma: f64, alpha: f64, b: f64, nu: f64) -> Result<Self> {
        let finite = [gamma, alpha, b, nu].iter().all(|x| x.is_finite());
        if !finite {
            return Err(Error::Validation("non-finite gas constant".into()));
        }
        if gamma <= 1.0 {
            return Err(Error::Validation(format!("gamma must exceed 1, got {gamma}")));
        }
        if alpha <= 0.0 {
            return Err(Error::Validation(format!("alpha must be positive, got {alpha}")));
        }
        if !(alpha <= gamma && gamma <= alpha + 1.0) {
            return Err(Error::Validation(format!(
                "need alpha <= gamma <= alpha + 1, got gamma={gamma}, alpha={alpha}"
            )));
        }
        if b <= 0.0 {
            return Err(Error::Validation(format!("b must be positive, got {b}")));
        }
        if nu < 0.0 {
            return Err(Error::Validation(format!("nu must be non-negative, got {nu}")));
        }
        Ok(Self { gamma, alpha, b, nu, beta: gamma - alpha, v_min: DEFAULT_V_MIN })
    }

    /// Viscous shallow water: γ = 2, α = 1.
    pub fn shallow_water() -> Self {
        Self::new(2.0, 1.0).expect("valid constants")
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn with_nu(mut self, nu: f64) -> Result<Self> {
        if !(nu >= 0.0 && nu.is_finite()) {
            return Err(Error::Validation(format!("nu must be non-negative, got {nu}")));
        }
        self.nu = nu;
        Ok(self)
    }

    pub fn with_v_min(mut self, v_min: f64) -> Self {
        self.v_min = v_min;
        self
    }

    /// Coefficient κ in h = u + νκ (p(v)^{α/γ})_x. Equal to b/α: this is the
    /// value for which h_t + p(v)_x = 0 holds exactly.
    pub fn bd_kappa(&self) -> f64 {
        self.b / self.alpha
    }

    /// Diffusion coefficient of the (v,h) system, v_t - h_x = -c (v^β p_x)_x.
    pub fn bd_diffusion(&self) -> f64 {
        self.nu * self.b / self.gamma
    }

    // Unchecked kernels used in inner loops; callers guarantee v > 0.

    #[inline]
    pub fn p(&self, v: f64) -> f64 {
        v.powf(-self.gamma)
    }

    #[inline]
    pub fn dp(&self, v: f64) -> f64 {
        -self.gamma * v.powf(-self.gamma - 1.0)
    }

    #[inline]
    pub fn d2p(&self, v: f64) -> f64 {
        self.gamma * (self.gamma + 1.0) * v.powf(-self.gamma - 2.0)
    }

    #[inline]
    pub fn p_inv(&self, p: f64) -> f64 {
        p.powf(-1.0 / self.gamma)
    }

    #[inline]
    pub fn q(&self, v: f64) -> f64 {
        v.powf(1.0 - self.gamma) / (self.gamma - 1.0)
    }

    /// v^β, the degenerate diffusion weight.
    #[inline]
    pub fn v_beta(&self, v: f64) -> f64 {
        if self.beta == 0.0 {
            1.0
        } else {
            v.powf(self.beta)
        }
    }

    /// p(v)^{α/γ} = v^{-α}.
    #[inline]
    pub fn p_alpha(&self, v: f64) -> f64 {
        v.powf(-self.alpha)
    }

    /// Viscosity μ(v) = b v^{-α}.
    #[inline]
    pub fn mu(&self, v: f64) -> f64 {
        self.b * v.powf(-self.alpha)
    }

    /// Characteristic speed sqrt(-p'(v)).
    #[inline]
    pub fn sound_speed(&self, v: f64) -> f64 {
        (-self.dp(v)).sqrt()
    }

    // Checked operations.

    pub fn pressure(&self, v: f64) -> Result<f64> {
        check_volume(v, 0.0)?;
        Ok(self.p(v))
    }

    pub fn pressure_inverse(&self, p: f64) -> Result<f64> {
        if !(p.is_finite() && p > 0.0) {
            return Err(Error::Domain(format!("pressure must be positive, got {p}")));
        }
        Ok(self.p_inv(p))
    }

    pub fn entropy_q(&self, v: f64) -> Result<f64> {
        check_volume(v, 0.0)?;
        Ok(self.q(v))
    }

    /// Q(v|w) without the guard.
    #[inline]
    pub fn q_rel(&self, v: f64, w: f64) -> f64 {
        let g = self.gamma;
        let s = ((v - w) / w).ln_1p();
        w.powf(1.0 - g) / (g - 1.0) * (exp_rem((1.0 - g) * s) + (g - 1.0) * exp_rem(s))
    }

    /// p(v|w) without the guard.
    #[inline]
    pub fn p_rel(&self, v: f64, w: f64) -> f64 {
        let g = self.gamma;
        let s = ((v - w) / w).ln_1p();
        w.powf(-g) * (exp_rem(-g * s) + g * exp_rem(s))
    }

    /// p(v) - p(w) without catastrophic cancellation.
    #[inline]
    pub fn p_diff(&self, v: f64, w: f64) -> f64 {
        let s = ((v - w) / w).ln_1p();
        self.p(w) * (-self.gamma * s).exp_m1()
    }

    /// Power-law quantities at v from one logarithm and two exponentials.
    #[inline]
    pub fn kernels(&self, v: f64) -> Kernels {
        let l = v.ln();
        let p = (-self.gamma * l).exp();
        let vb = if self.beta == 0.0 { 1.0 } else { (self.beta * l).exp() };
        let k = -self.gamma * vb * p / v;
        Kernels { p, dp: -self.gamma * p / v, vb, k, dk: -(self.alpha + 1.0) * k / v }
    }

    /// p(v) − p(w), Q(v|w) and p(v|w) sharing one logarithm, given p(w).
    #[inline]
    pub fn rel_triple(&self, v: f64, w: f64, pw: f64) -> (f64, f64, f64) {
        let g = self.gamma;
        let s = ((v - w) / w).ln_1p();
        let e = exp_rem(s);
        let eg = exp_rem(-g * s);
        let pd = pw * (eg - g * s);
        let q = w * pw / (g - 1.0) * (exp_rem((1.0 - g) * s) + (g - 1.0) * e);
        (pd, q, pw * (eg + g * e))
    }

    pub fn relative_fn(&self, f: RelFn, v: f64, w: f64) -> Result<f64> {
        check_volume(v, 0.0)?;
        check_volume(w, 0.0)?;
        Ok(match f {
            RelFn::Q => self.q_rel(v, w),
            RelFn::P => self.p_rel(v, w),
        })
    }

    /// η(U1|U2) = ½|h1-h2|² + Q(v1|v2).
    pub fn rel_entropy_eta(&self, a: BDState, b: BDState) -> Result<f64> {
        check_volume(a.v, 0.0)?;
        check_volume(b.v, 0.0)?;
        Ok(self.eta_rel(a.v, a.h, b.v, b.h))
    }

    #[inline]
    pub fn eta_rel(&self, v: f64, h: f64, vt: f64, ht: f64) -> f64 {
        0.5 * (h - ht) * (h - ht) + self.q_rel(v, vt)
    }

    /// E((v1,u1)|(v2,u2)) given the spatial derivatives of p(v_i)^{α/γ}.
    /// Equals η of the BD-transformed pair when the derivatives are exact.
    pub fn rel_e_functional(&self, a: State, da: f64, b: State, db: f64) -> Result<f64> {
        check_volume(a.v, 0.0)?;
        check_volume(b.v, 0.0)?;
        let c = self.nu * self.bd_kappa();
        let dh = a.u + c * da - b.u - c * db;
        Ok(0.5 * dh * dh + self.q_rel(a.v, b.v))
    }
}

/// p, p', v^β, k = v^β p' and k' at one volume.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Kernels {
    pub p: f64,
    pub dp: f64,
    pub vb: f64,
    pub k: f64,
    pub dk: f64,
}

/// Which convex function a relative quantity is taken of.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RelFn {
    Q,
    P,
}

/// e^x - 1 - x, accurate for small |x|.
#[inline]
pub fn exp_rem(x: f64) -> f64 {
    if x.abs() < 0.2 {
        // Horner form of x²(1/2! + x/3! + ...); 15 terms reach 1e-17 at |x|=0.2.
        let mut acc = 0.0;
        let mut k = 16.0_f64;
        while k >= 2.0 {
            acc = (1.0 + acc * x) / k;
            k -= 1.0;
        }
        acc * x * x
    } else {
        x.exp_m1() - x
    }
}

/// Rigorous-ish floating point slack for comparing two quantities of the
/// given magnitudes computed with a few dozen roundings.
pub fn rounding_slack(a: f64, b: f64) -> f64 {
    64.0 * f64::EPSILON * (a.abs() + b.abs())
}

/// Right-hand side of the local lower bound for Q(v|w) in terms of pressure
/// differences.
pub fn q_local_lower_bound(g: &GasModel, v: f64, w: f64) -> f64 {
    let pw = g.p(w);
    let z = g.p_diff(v, w);
    let gm = g.gamma;
    pw.powf(-1.0 / gm - 1.0) / (2.0 * gm) * z * z - (1.0 + gm) / (3.0 * gm * gm) * pw.powf(-1.0 / gm - 2.0) * z * z * z
}

/// Outcome of the inequality suite.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct InequalityReport {
    /// Smallest Q(v|w)/|v-w|² over the near regime v ≤ 3v*.
    pub c1: Option<f64>,
    /// Smallest Q(v|w)/|v-w| over the far regime v ≥ 3v*.
    pub c2: Option<f64>,
    /// Largest p(v|w)/|v-w|² over v ≥ v*/2.
    pub c_pressure: Option<f64>,
    /// Samples that fell in the local regime of the Q lower bound.
    pub local_count: usize,
    pub local_violations: usize,
    /// Smallest (most negative) margin Q - bound / scale in the local regime.
    pub local_worst_margin: Option<f64>,
    /// Smallest |p(v)-p(w)| among local violations, if any.
    pub local_delta_boundary: Option<f64>,
    /// Samples with v = w, counted as passes.
    pub diagonal: usize,
}

/// Fits the constants of the global inequalities and counts violations of the
/// constant-free local bound. Samples with |p(v)-p(w)| < `delta_local` and
/// |p(w)-p(v*)| < `delta_local` form the local regime.
pub fn check_inequality_suite(
    samples: &[(f64, f64)],
    g: &GasModel,
    v_star: f64,
    delta_local: f64,
) -> Result<InequalityReport> {
    if samples.is_empty() {
        return Err(Error::Validation("empty sample set".into()));
    }
    check_volume(v_star, 0.0)?;
    let mut rep = InequalityReport::default();
    let pstar = g.p(v_star);
    let min_opt = |o: Option<f64>, x: f64| Some(o.map_or(x, |y: f64| y.min(x)));
    let max_opt = |o: Option<f64>, x: f64| Some(o.map_or(x, |y: f64| y.max(x)));
    for &(v, w) in samples {
        check_volume(v, 0.0)?;
        check_volume(w, 0.0)?;
        if v == w {
            rep.diagonal += 1;
            continue;
        }
        let q = g.q_rel(v, w);
        let d = (v - w).abs();
        if w < 2.0 * v_star {
            if v <= 3.0 * v_star {
                rep.c1 = min_opt(rep.c1, q / (d * d));
            } else {
                rep.c2 = min_opt(rep.c2, q / d);
            }
        }
        if v >= 0.5 * v_star && w > 0.5 * v_star {
            rep.c_pressure = max_opt(rep.c_pressure, g.p_rel(v, w) / (d * d));
        }
        let z = g.p_diff(v, w).abs();
        if z < delta_local && (g.p(w) - pstar).abs() < delta_local {
            rep.local_count += 1;
            let rhs = q_local_lower_bound(g, v, w);
            let margin = q - rhs;
            let scale = q.abs().max(f64::MIN_POSITIVE);
            rep.local_worst_margin = min_opt(rep.local_worst_margin, margin / scale);
            if margin < -rounding_slack(q, rhs) {
                rep.local_violations += 1;
                rep.local_delta_boundary = min_opt(rep.local_delta_boundary, z);
            }
        }
    }
    Ok(rep)
}
