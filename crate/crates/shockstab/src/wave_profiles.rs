//! Viscous shock profiles, composite waves and the BD transform.
//!
//! In (v,h) variables a traveling wave ṽ(ξ), ξ = x − σt, of
//! v_t − h_x = −(v^β p(v)_x)_x, h_t + p(v)_x = 0 integrates once to
//!
//! ```text
//! ṽ^β ∂ξ p(ṽ) = σ(ṽ − v_l) + (p(ṽ) − p(v_l))/σ,      h̃ = h_l + (p(ṽ) − p(v_l))/σ,
//! ```
//!
//! a scalar autonomous ODE whose end states are equilibria. Profiles are
//! integrated outward from the midpoint normalization with RK4 and carry their
//! closed-form slope so that derivatives never come from noisy differences.

use crate::error::{Error, Result};
use crate::gas_core::{BDState, GasModel, Kernels, State};
use crate::riemann::WaveFan;

/// Shock family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    One,
    Two,
}

impl Family {
    pub fn index(self) -> usize {
        match self {
            Family::One => 1,
            Family::Two => 2,
        }
    }
}

/// Default cap on the outward integration length, in units of 1/ε. The
/// integration normally stops much earlier, once the end state is reached.
pub const DEFAULT_HALF_WIDTH_FACTOR: f64 = 200.0;

/// Relative closeness (in units of ε) at which a tail counts as converged.
pub const END_TOLERANCE: f64 = 1e-10;

/// Values and derivatives of one profile at a point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ProfilePoint {
    pub v: f64,
    pub dv: f64,
    pub d2v: f64,
    pub h: f64,
    pub dh: f64,
    pub u: f64,
    /// Power-law quantities at v.
    pub kern: Kernels,
}

/// A sampled monotone viscous shock profile with Hermite interpolation.
#[derive(Debug, Clone, PartialEq)]
pub struct ShockProfile {
    pub family: Family,
    pub left: State,
    pub right: State,
    pub sigma: f64,
    pub eps: f64,
    /// ξ of the first sample.
    pub xi_start: f64,
    pub dxi: f64,
    pub v: Vec<f64>,
    pub h: Vec<f64>,
    pub u: Vec<f64>,
    slope: Vec<f64>,
    gas: GasModel,
    ends: [Kernels; 2],
}

/// Right-hand side of the integrated traveling-wave ODE.
#[derive(Debug, Clone, Copy)]
struct ProfileOde {
    sigma: f64,
    vl: f64,
    gas: GasModel,
}

impl ProfileOde {
    fn numerator(&self, v: f64) -> f64 {
        self.sigma * (v - self.vl) + self.gas.p_diff(v, self.vl) / self.sigma
    }

    /// v^β p'(v) = −γ v^{−α−1}.
    fn denominator(&self, v: f64) -> f64 {
        -self.gas.gamma * v.powf(-self.gas.alpha - 1.0)
    }

    fn f(&self, v: f64) -> f64 {
        self.numerator(v) / self.denominator(v)
    }

    fn rk4(&self, v: f64, h: f64) -> f64 {
        let k1 = self.f(v);
        let k2 = self.f(v + 0.5 * h * k1);
        let k3 = self.f(v + 0.5 * h * k2);
        let k4 = self.f(v + h * k3);
        v + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    }
}

/// Integrates from `v0` with step `h` until within `tol` of `target`.
/// Returns the samples after v0.
fn integrate_tail(ode: &ProfileOde, v0: f64, target: f64, h: f64, tol: f64, max_steps: usize) -> Result<Vec<f64>> {
    let dir = (target - v0).signum();
    let mut out = Vec::new();
    let mut v = v0;
    while (v - target).abs() >= tol {
        if out.len() >= max_steps {
            return Err(Error::Domain(format!(
                "profile did not reach end state {target} within the half width (last v={v})"
            )));
        }
        let next = ode.rk4(v, h);
        if !next.is_finite() || (next - v) * dir <= 0.0 || (target - next) * dir < 0.0 {
            return Err(Error::Resolution(format!("non-monotone profile step from v={v} to {next}; reduce dxi")));
        }
        v = next;
        out.push(v);
    }
    Ok(out)
}

impl ShockProfile {
    /// Solves the profile of the given family with ν = 1.
    pub fn solve(family: Family, fan: &WaveFan, xi_half_width: f64, dxi: f64) -> Result<Self> {
        let g = fan.gas;
        let (left, right, sigma, eps) = match family {
            Family::One => (fan.u_minus, fan.u_m, fan.sigma1, fan.eps1),
            Family::Two => (fan.u_m, fan.u_plus, fan.sigma2, fan.eps2),
        };
        if !(dxi > 0.0 && xi_half_width > 0.0) {
            return Err(Error::Validation("dxi and half width must be positive".into()));
        }
        if eps > 0.0 && dxi > 0.1 / eps {
            return Err(Error::Resolution(format!("dxi={dxi} exceeds 0.1/eps={}", 0.1 / eps)));
        }
        let ode = ProfileOde { sigma, vl: left.v, gas: g };
        let (v, n_back) = if eps == 0.0 {
            (vec![left.v; 3], 1)
        } else {
            let v0 = 0.5 * (left.v + right.v);
            let tol = END_TOLERANCE * eps;
            let max_steps = (xi_half_width / dxi).ceil() as usize;
            let fwd = integrate_tail(&ode, v0, right.v, dxi, tol, max_steps)?;
            let bwd = integrate_tail(&ode, v0, left.v, -dxi, tol, max_steps)?;
            let mut v = Vec::with_capacity(fwd.len() + bwd.len() + 1);
            v.extend(bwd.iter().rev());
            v.push(v0);
            v.extend(fwd);
            (v, bwd.len())
        };
        let slope: Vec<f64> = if eps == 0.0 { vec![0.0; v.len()] } else { v.iter().map(|&x| ode.f(x)).collect() };
        let mut p = Self {
            family,
            left,
            right,
            sigma,
            eps,
            xi_start: -(n_back as f64) * dxi,
            dxi,
            h: Vec::new(),
            u: Vec::new(),
            v,
            slope,
            gas: g,
            ends: [g.kernels(left.v), g.kernels(right.v)],
        };
        p.h = p.v.iter().map(|&x| p.h_of(x)).collect();
        p.u = (0..p.v.len()).map(|i| p.u_of(p.v[i], p.slope[i])).collect();
        Ok(p)
    }

    /// Profile with the default half-width cap.
    pub fn solve_default(family: Family, fan: &WaveFan, dxi: f64) -> Result<Self> {
        let eps = match family {
            Family::One => fan.eps1,
            Family::Two => fan.eps2,
        };
        let width = if eps > 0.0 { DEFAULT_HALF_WIDTH_FACTOR / eps } else { 1.0 };
        Self::solve(family, fan, width, dxi)
    }

    pub fn gas(&self) -> &GasModel {
        &self.gas
    }

    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }

    pub fn xi(&self, i: usize) -> f64 {
        self.xi_start + i as f64 * self.dxi
    }

    pub fn xi_end(&self) -> f64 {
        self.xi(self.v.len() - 1)
    }

    /// Closed-form slope dṽ/dξ at the samples.
    pub fn slopes(&self) -> &[f64] {
        &self.slope
    }

    fn h_of(&self, v: f64) -> f64 {
        if self.eps == 0.0 {
            return self.left.u;
        }
        self.left.u + self.gas.p_diff(v, self.left.v) / self.sigma
    }

    /// ũ = h̃ − κ ∂ξ p(ṽ)^{α/γ} = h̃ + b ṽ^{−α−1} ṽ'.
    fn u_of(&self, v: f64, dv: f64) -> f64 {
        self.h_of(v) + self.gas.b * v.powf(-self.gas.alpha - 1.0) * dv
    }

    /// Hermite-interpolated ṽ(ξ); end states outside the sampled window.
    pub fn v_at(&self, xi: f64) -> f64 {
        let s = (xi - self.xi_start) / self.dxi;
        let n = self.v.len();
        if s <= 0.0 {
            return if s < 0.0 { self.left.v } else { self.v[0] };
        }
        if s >= (n - 1) as f64 {
            return if s > (n - 1) as f64 { self.right.v } else { self.v[n - 1] };
        }
        let i = (s.floor() as usize).min(n - 2);
        let t = s - i as f64;
        let (y0, y1) = (self.v[i], self.v[i + 1]);
        let (m0, m1) = (self.slope[i] * self.dxi, self.slope[i + 1] * self.dxi);
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * y0 + (t3 - 2.0 * t2 + t) * m0 + (-2.0 * t3 + 3.0 * t2) * y1 + (t3 - t2) * m1
    }

    /// Value and closed-form derivatives at ξ.
    pub fn eval(&self, xi: f64) -> ProfilePoint {
        let inside = xi >= self.xi_start && xi <= self.xi_end();
        if !inside || self.eps == 0.0 {
            let (s, kern) = if xi < self.xi_start || self.eps == 0.0 {
                (self.left, self.ends[0])
            } else {
                (self.right, self.ends[1])
            };
            return ProfilePoint { v: s.v, dv: 0.0, d2v: 0.0, h: s.u, dh: 0.0, u: s.u, kern };
        }
        let v = self.v_at(xi);
        let kern = self.gas.kernels(v);
        let sg = self.sigma;
        let pdl = kern.p - self.ends[0].p;
        // f = N/k with N = σ(v − v_l) + (p − p_l)/σ.
        let num = sg * (v - self.left.v) + pdl / sg;
        let dv = num / kern.k;
        let dnum = sg + kern.dp / sg;
        let d2v = (dnum * kern.k - num * kern.dk) / (kern.k * kern.k) * dv;
        let h = self.left.u + pdl / sg;
        // ũ = h̃ + b v^{−α−1} ṽ' and v^{−α−1} = −k/γ.
        let u = h - self.gas.b * kern.k / self.gas.gamma * dv;
        ProfilePoint { v, dv, d2v, h, dh: kern.dp / sg * dv, u, kern }
    }

    /// Rows (ξ, v, h, u) for export.
    pub fn rows(&self) -> impl Iterator<Item = [f64; 4]> + '_ {
        (0..self.v.len()).map(move |i| [self.xi(i), self.v[i], self.h[i], self.u[i]])
    }

    /// Whether samples are strictly monotone in the family's direction.
    pub fn is_strictly_monotone(&self) -> bool {
        if self.eps == 0.0 {
            return true;
        }
        self.v.windows(2).all(|w| match self.family {
            Family::One => w[1] < w[0],
            Family::Two => w[1] > w[0],
        })
    }
}

/// Max-norm residuals of the non-integrated traveling-wave system, evaluated
/// with centered differences on the samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileResidual {
    /// −σ v' − h' + (v^β p(v)')'.
    pub momentum: f64,
    /// −σ h' + p(v)'.
    pub h_eq: f64,
}

impl ProfileResidual {
    pub fn max(&self) -> f64 {
        self.momentum.max(self.h_eq)
    }
}

pub fn profile_residual(p: &ShockProfile) -> ProfileResidual {
    let n = p.v.len();
    let g = p.gas;
    let d = p.dxi;
    if n < 5 {
        return ProfileResidual { momentum: 0.0, h_eq: 0.0 };
    }
    let pr: Vec<f64> = p.v.iter().map(|&v| g.p(v)).collect();
    let flux: Vec<f64> = (1..n - 1).map(|i| g.v_beta(p.v[i]) * (pr[i + 1] - pr[i - 1]) / (2.0 * d)).collect();
    let (mut r1, mut r2) = (0.0_f64, 0.0_f64);
    for i in 2..n - 2 {
        let dv = (p.v[i + 1] - p.v[i - 1]) / (2.0 * d);
        let dh = (p.h[i + 1] - p.h[i - 1]) / (2.0 * d);
        let dp = (pr[i + 1] - pr[i - 1]) / (2.0 * d);
        // flux index k corresponds to node k+1.
        let dflux = (flux[i] - flux[i - 2]) / (2.0 * d);
        r1 = r1.max((-p.sigma * dv - dh + dflux).abs());
        r2 = r2.max((-p.sigma * dh + dp).abs());
    }
    ProfileResidual { momentum: r1, h_eq: r2 }
}

/// Least-squares exponential rate of |ṽ − v_end| over ξ ∈ [a, b], using the
/// right end state for a, b > 0 and the left one for a, b < 0.
pub fn fit_tail_rate(p: &ShockProfile, a: f64, b: f64) -> Option<f64> {
    let end = if a >= 0.0 { p.right.v } else { p.left.v };
    let (mut sx, mut sy, mut sxx, mut sxy, mut m) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..p.v.len() {
        let xi = p.xi(i);
        if xi < a.min(b) || xi > a.max(b) {
            continue;
        }
        let dev = (p.v[i] - end).abs();
        if dev <= 0.0 {
            continue;
        }
        let y = dev.ln();
        sx += xi;
        sy += y;
        sxx += xi * xi;
        sxy += xi * y;
        m += 1.0;
    }
    if m < 3.0 {
        return None;
    }
    let slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    Some(slope.abs())
}

/// Largest |ṽ''| / (ε |ṽ'|) over the samples, with ṽ'' from discrete second
/// differences of the samples.
pub fn second_derivative_ratio(p: &ShockProfile) -> f64 {
    let d = p.dxi;
    let mut worst = 0.0_f64;
    for i in 1..p.v.len().saturating_sub(1) {
        let dv = p.slope[i];
        if dv.abs() < 1e-3 * p.eps * p.eps * (p.left.v - p.right.v).abs() {
            continue;
        }
        let d2 = (p.v[i + 1] - 2.0 * p.v[i] + p.v[i - 1]) / (d * d);
        worst = worst.max(d2.abs() / (p.eps * dv.abs()));
    }
    worst
}

/// Composite wave data at one point: the superposition and both components.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CompositePoint {
    pub v: f64,
    pub h: f64,
    pub u: f64,
    pub w1: ProfilePoint,
    pub w2: ProfilePoint,
}

impl CompositePoint {
    pub fn dv(&self) -> f64 {
        self.w1.dv + self.w2.dv
    }

    pub fn d2v(&self) -> f64 {
        self.w1.d2v + self.w2.d2v
    }

    pub fn dh(&self) -> f64 {
        self.w1.dh + self.w2.dh
    }

    pub fn component(&self, i: usize) -> &ProfilePoint {
        if i == 1 {
            &self.w1
        } else {
            &self.w2
        }
    }
}

/// ṽ₁(x − σ₁t − X₁) + ṽ₂(x − σ₂t − X₂) − v_m, and likewise for h̃, ũ.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositeWave {
    pub p1: ShockProfile,
    pub p2: ShockProfile,
    pub u_m: State,
}

impl CompositeWave {
    pub fn new(p1: ShockProfile, p2: ShockProfile) -> Result<Self> {
        if p1.family != Family::One || p2.family != Family::Two {
            return Err(Error::Validation("composite needs a 1-profile and a 2-profile".into()));
        }
        if p1.right != p2.left {
            return Err(Error::Validation("profiles do not share the middle state".into()));
        }
        let u_m = p1.right;
        Ok(Self { p1, p2, u_m })
    }

    /// Solves both profiles of `fan` with step dξ = `dxi_factor`/ε_i.
    pub fn from_fan(fan: &WaveFan, dxi_factor: f64) -> Result<Self> {
        let dxi = |e: f64| if e > 0.0 { dxi_factor / e } else { 0.1 };
        let p1 = ShockProfile::solve_default(Family::One, fan, dxi(fan.eps1))?;
        let p2 = ShockProfile::solve_default(Family::Two, fan, dxi(fan.eps2))?;
        Self::new(p1, p2)
    }

    pub fn gas(&self) -> &GasModel {
        self.p1.gas()
    }

    pub fn profile(&self, i: usize) -> &ShockProfile {
        if i == 1 {
            &self.p1
        } else {
            &self.p2
        }
    }

    pub fn point(&self, t: f64, x: f64, x1: f64, x2: f64) -> CompositePoint {
        let w1 = self.p1.eval(x - self.p1.sigma * t - x1);
        let w2 = self.p2.eval(x - self.p2.sigma * t - x2);
        CompositePoint { v: w1.v + w2.v - self.u_m.v, h: w1.h + w2.h - self.u_m.u, u: w1.u + w2.u - self.u_m.u, w1, w2 }
    }

    pub fn eval(&self, t: f64, x: f64, x1: f64, x2: f64) -> (BDState, State) {
        let c = self.point(t, x, x1, x2);
        (BDState { v: c.v, h: c.h }, State { v: c.v, u: c.u })
    }
}

/// Second-order gradient on a uniform grid: centered inside, one-sided
/// three-point stencils at the ends.
pub fn gradient(f: &[f64], dx: f64) -> Vec<f64> {
    let n = f.len();
    let mut g = vec![0.0; n];
    if n < 3 {
        if n == 2 {
            let d = (f[1] - f[0]) / dx;
            g[0] = d;
            g[1] = d;
        }
        return g;
    }
    for i in 1..n - 1 {
        g[i] = (f[i + 1] - f[i - 1]) / (2.0 * dx);
    }
    g[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * dx);
    g[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * dx);
    g
}

fn bd_correction(v: &[f64], dx: f64, g: &GasModel, nu: f64) -> Result<Vec<f64>> {
    if let Some(i) = v.iter().position(|&x| !(x > 0.0 && x.is_finite())) {
        return Err(Error::Domain(format!("v={} at node {i}", v[i])));
    }
    let pa: Vec<f64> = v.iter().map(|&x| g.p_alpha(x)).collect();
    let c = nu * g.bd_kappa();
    Ok(gradient(&pa, dx).into_iter().map(|d| c * d).collect())
}

/// h = u + νκ (p(v)^{α/γ})_x with κ = b/α.
pub fn bd_transform(v: &[f64], u: &[f64], dx: f64, g: &GasModel, nu: f64) -> Result<Vec<f64>> {
    if v.len() != u.len() {
        return Err(Error::Validation("v and u lengths differ".into()));
    }
    let c = bd_correction(v, dx, g, nu)?;
    Ok(u.iter().zip(c).map(|(a, b)| a + b).collect())
}

/// u = h − νκ (p(v)^{α/γ})_x on the same stencil.
pub fn bd_inverse(v: &[f64], h: &[f64], dx: f64, g: &GasModel, nu: f64) -> Result<Vec<f64>> {
    if v.len() != h.len() {
        return Err(Error::Validation("v and h lengths differ".into()));
    }
    let c = bd_correction(v, dx, g, nu)?;
    Ok(h.iter().zip(c).map(|(a, b)| a - b).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fan(e: f64) -> WaveFan {
        WaveFan::build(State { v: 1.0, u: 0.0 }, e, e, &GasModel::shallow_water()).unwrap()
    }

    #[test]
    fn family_one_profile_monotone_and_normalized() {
        let f = fan(0.1);
        let p = ShockProfile::solve_default(Family::One, &f, 0.01 / 0.1).unwrap();
        assert!(p.is_strictly_monotone());
        assert!((p.v_at(0.0) - 0.5 * (f.u_minus.v + f.u_m.v)).abs() < 1e-15);
        assert!((p.v[0] - f.u_minus.v).abs() < 1e-8 * f.eps1);
        assert!((p.v[p.len() - 1] - f.u_m.v).abs() < 1e-8 * f.eps1);
        assert!(profile_residual(&p).max() < 1e-6);
    }

    #[test]
    fn family_two_increasing() {
        let f = fan(0.1);
        let p = ShockProfile::solve_default(Family::Two, &f, 0.5).unwrap();
        assert!(p.is_strictly_monotone());
        assert!(p.v[0] < p.v[p.len() - 1]);
    }

    #[test]
    fn zero_strength_profile_is_constant() {
        let f = fan(0.0);
        let p = ShockProfile::solve(Family::One, &f, 10.0, 0.1).unwrap();
        assert!(p.v.iter().all(|&v| v == 1.0));
        assert_eq!(profile_residual(&p).max(), 0.0);
        assert_eq!(p.eval(3.0).v, 1.0);
    }

    #[test]
    fn rejects_coarse_step() {
        let f = fan(0.1);
        assert!(matches!(ShockProfile::solve(Family::One, &f, 100.0, 2.0), Err(Error::Resolution(_))));
    }

    #[test]
    fn short_window_reports_width_error() {
        let f = fan(0.1);
        assert!(matches!(ShockProfile::solve(Family::One, &f, 5.0, 0.1), Err(Error::Domain(_))));
    }

    #[test]
    fn h_derivative_proportional_to_v_derivative() {
        let f = fan(0.1);
        let p = ShockProfile::solve_default(Family::One, &f, 0.1).unwrap();
        for &xi in &[-20.0, -3.3, 0.0, 7.1, 40.0] {
            let q = p.eval(xi);
            let d = 1e-4;
            let fd = (p.eval(xi + d).h - p.eval(xi - d).h) / (2.0 * d);
            assert!((fd - q.dh).abs() < 1e-8, "xi={xi}: {fd} vs {}", q.dh);
            let fdv = (p.eval(xi + d).v - p.eval(xi - d).v) / (2.0 * d);
            assert!((fdv - q.dv).abs() < 1e-8);
        }
    }

    #[test]
    fn composite_superposition() {
        let f = fan(0.1);
        let w = CompositeWave::from_fan(&f, 0.01).unwrap();
        let c = w.point(0.0, -1e4, 0.0, 0.0);
        assert!((c.v - f.u_minus.v).abs() < 1e-15 && (c.h - f.u_minus.u).abs() < 1e-15);
        let x = w.p1.xi(100);
        let c = w.point(0.0, x, 0.0, 0.0);
        let s = w.p1.v[100] + w.p2.v_at(x) - f.u_m.v;
        assert!((c.v - s).abs() < 1e-15);
    }

    #[test]
    fn bd_transform_constant_and_roundtrip() {
        let g = GasModel::shallow_water();
        let v = vec![1.3; 10];
        let u: Vec<f64> = (0..10).map(|i| i as f64 * 0.1).collect();
        assert_eq!(bd_transform(&v, &u, 0.1, &g, 1.0).unwrap(), u);
        let v: Vec<f64> = (0..50).map(|i| 1.0 + 0.1 * (i as f64 * 0.2).sin()).collect();
        let h = bd_transform(&v, &u.iter().cycle().take(50).copied().collect::<Vec<_>>(), 0.2, &g, 1.0).unwrap();
        let back = bd_inverse(&v, &h, 0.2, &g, 1.0).unwrap();
        for (i, b) in back.iter().enumerate() {
            assert!((b - u[i % 10]).abs() < 1e-14);
        }
        let mut bad = v.clone();
        bad[3] = 0.0;
        assert!(bd_transform(&bad, &vec![0.0; 50], 0.2, &g, 1.0).is_err());
    }
}
