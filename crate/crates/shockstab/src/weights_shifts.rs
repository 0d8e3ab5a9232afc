//! Weight functions a₁, a₂, a and the shift ODE.
//!
//! The weights follow the pressure of each profile:
//! a_i = 1 − λ (p(ṽ_i) − p(v_{end,i}))/ε_i, so a₁ decreases from 1 to 1−λ and
//! a₂ increases from 1−λ to 1. The shifts solve
//!
//! ```text
//! Ẋ₁ =  Φ_ε₁( Y₁)(2|J^bad|+1) − (σ₁/2) Ψ_ε₁( Y₁)
//! Ẋ₂ = −Φ_ε₂(−Y₂)(2|J^bad|+1) − (σ₂/2) Ψ_ε₂(−Y₂)
//! ```
//!
//! Shifts are stored through the excesses Z_i = X_i + σ_i t/2. The rate of
//! Z₁ is a sum of non-positive terms and that of Z₂ a sum of non-negative
//! terms, so the separation bounds X₁ ≤ −σ₁t/2 and X₂ ≥ −σ₂t/2 survive
//! floating point exactly.

use crate::error::{Error, Result};
use crate::riemann::WaveFan;
use crate::wave_profiles::{CompositePoint, CompositeWave};

/// Default total variation of each weight.
pub const DEFAULT_LAMBDA: f64 = 0.1;

/// Weight values and derivatives at one point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct WeightValues {
    pub a1: f64,
    pub a2: f64,
    pub a: f64,
    pub da1: f64,
    pub da2: f64,
}

impl WeightValues {
    pub fn da(&self, i: usize) -> f64 {
        if i == 1 {
            self.da1
        } else {
            self.da2
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightPair {
    pub lambda: f64,
    pub eps1: f64,
    pub eps2: f64,
    p_minus: f64,
    p_plus: f64,
}

impl WeightPair {
    pub fn new(fan: &WaveFan, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(Error::Validation(format!("lambda must lie in (0,1), got {lambda}")));
        }
        if !(fan.eps1 > 0.0 && fan.eps2 > 0.0) {
            return Err(Error::Validation("weights need positive strengths".into()));
        }
        let g = &fan.gas;
        Ok(Self {
            lambda,
            eps1: fan.eps1,
            eps2: fan.eps2,
            p_minus: g.kernels(fan.u_minus.v).p,
            p_plus: g.kernels(fan.u_plus.v).p,
        })
    }

    /// Weights from an already evaluated composite point.
    pub fn at_point(&self, c: &CompositePoint) -> WeightValues {
        let l = self.lambda;
        let (k1, k2) = (&c.w1.kern, &c.w2.kern);
        let a1 = 1.0 - l * (k1.p - self.p_minus) / self.eps1;
        let a2 = 1.0 - l * (k2.p - self.p_plus) / self.eps2;
        let da1 = -l / self.eps1 * k1.dp * c.w1.dv;
        let da2 = -l / self.eps2 * k2.dp * c.w2.dv;
        WeightValues { a1, a2, a: a1 + a2 - 1.0, da1, da2 }
    }

    pub fn eval(&self, wave: &CompositeWave, t: f64, x: f64, x1: f64, x2: f64) -> WeightValues {
        let c = wave.point(t, x, x1, x2);
        self.at_point(&c)
    }
}

/// Φ_ε: 0 for y ≤ 0, −y/ε⁴ on [0, ε²], −1/ε² beyond.
pub fn phi_eps(y: f64, eps: f64) -> f64 {
    let e2 = eps * eps;
    if y <= 0.0 {
        0.0
    } else if y <= e2 {
        -y / (e2 * e2)
    } else {
        -1.0 / e2
    }
}

/// Ψ_ε: 1 for y ≤ −ε², −y/ε² on [−ε², 0], 0 beyond.
pub fn psi_eps(y: f64, eps: f64) -> f64 {
    let e2 = eps * eps;
    if y <= -e2 {
        1.0
    } else if y <= 0.0 {
        -y / e2
    } else {
        0.0
    }
}

/// Which piece of the shift law is active, for the signed argument
/// (−1)^{i−1} Y_i.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// Signed Y ≥ ε²: rate saturated at ∓(2|J|+1)/ε².
    Saturated = 0,
    /// Signed Y ∈ [0, ε²).
    Linear = 1,
    /// Signed Y ∈ [−ε², 0).
    Small = 2,
    /// Signed Y < −ε²: rate −σ_i/2.
    Extremal = 3,
}

impl Branch {
    fn of(y: f64, eps: f64) -> Self {
        let e2 = eps * eps;
        if y >= e2 {
            Branch::Saturated
        } else if y >= 0.0 {
            Branch::Linear
        } else if y >= -e2 {
            Branch::Small
        } else {
            Branch::Extremal
        }
    }
}

/// Shift rates and their excess form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftRates {
    pub dx1: f64,
    pub dx2: f64,
    /// dZ₁/dt = Ẋ₁ + σ₁/2 ≤ 0.
    pub dz1: f64,
    /// dZ₂/dt = Ẋ₂ + σ₂/2 ≥ 0.
    pub dz2: f64,
    pub branch1: Branch,
    pub branch2: Branch,
}

/// Shift law in its composed form.
pub fn shift_rhs(y1: f64, y2: f64, jbad: f64, fan: &WaveFan) -> ShiftRates {
    let k = 2.0 * jbad.abs() + 1.0;
    let (s1, s2) = (fan.sigma1, fan.sigma2);
    let (e1, e2) = (fan.eps1, fan.eps2);
    let (f1, q1) = (phi_eps(y1, e1), psi_eps(y1, e1));
    let (f2, q2) = (phi_eps(-y2, e2), psi_eps(-y2, e2));
    ShiftRates {
        dx1: f1 * k - 0.5 * s1 * q1,
        dx2: -f2 * k - 0.5 * s2 * q2,
        // Each term carries a fixed sign: f1 ≤ 0, s1 < 0, 1 − q1 ≥ 0.
        dz1: f1 * k + 0.5 * s1 * (1.0 - q1),
        dz2: -f2 * k + 0.5 * s2 * (1.0 - q2),
        branch1: Branch::of(y1, e1),
        branch2: Branch::of(-y2, e2),
    }
}

/// Shift law written branch by branch for family `i`.
pub fn shift_rhs_explicit(i: usize, y: f64, jbad: f64, sigma: f64, eps: f64) -> f64 {
    let k = 2.0 * jbad.abs() + 1.0;
    let sgn = if i == 1 { 1.0 } else { -1.0 };
    let e2 = eps * eps;
    let sy = sgn * y;
    if sy >= e2 {
        -sgn * k / e2
    } else if sy >= 0.0 {
        -y * k / (e2 * e2)
    } else if sy >= -e2 {
        sgn * 0.5 * sigma * y / e2
    } else {
        -0.5 * sigma
    }
}

/// Shift positions through their excesses over the extremal trajectories.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftState {
    pub t: f64,
    /// Z₁ = X₁ + σ₁t/2 ≤ 0.
    pub z1: f64,
    /// Z₂ = X₂ + σ₂t/2 ≥ 0.
    pub z2: f64,
    pub sigma1: f64,
    pub sigma2: f64,
}

impl ShiftState {
    /// X₁(0) = X₂(0) = 0.
    pub fn new(fan: &WaveFan) -> Self {
        Self { t: 0.0, z1: 0.0, z2: 0.0, sigma1: fan.sigma1, sigma2: fan.sigma2 }
    }

    pub fn x1(&self) -> f64 {
        self.z1 - 0.5 * self.sigma1 * self.t
    }

    pub fn x2(&self) -> f64 {
        self.z2 - 0.5 * self.sigma2 * self.t
    }

    /// Shifted wave locations σ_i t + X_i.
    pub fn fronts(&self) -> (f64, f64) {
        (0.5 * self.sigma1 * self.t + self.z1, 0.5 * self.sigma2 * self.t + self.z2)
    }

    /// X₁ ≤ −σ₁t/2, X₂ ≥ −σ₂t/2 and the gap bound, with no tolerance.
    pub fn invariants_hold(&self) -> bool {
        let (f1, f2) = self.fronts();
        let (b1, b2) = (0.5 * self.sigma1 * self.t, 0.5 * self.sigma2 * self.t);
        self.z1 <= 0.0
            && self.z2 >= 0.0
            && self.x1() <= -b1
            && self.x2() >= -b2
            && f1 <= b1
            && b1 <= 0.0
            && 0.0 <= b2
            && b2 <= f2
            && f2 - f1 >= b2 - b1
    }

    /// Advances by `dt` with stage rates combined by `weights` (which sum to
    /// one). Heun uses two stages with weights ½, ½.
    pub fn advance(&self, rates: &[ShiftRates], weights: &[f64], dt: f64) -> Result<Self> {
        if !(dt > 0.0) || rates.len() != weights.len() || rates.is_empty() {
            return Err(Error::Validation("advance needs dt > 0 and matching stages".into()));
        }
        let dz1: f64 = rates.iter().zip(weights).map(|(r, w)| w * r.dz1).sum();
        let dz2: f64 = rates.iter().zip(weights).map(|(r, w)| w * r.dz2).sum();
        let next = Self { t: self.t + dt, z1: self.z1 + dt * dz1, z2: self.z2 + dt * dz2, ..*self };
        if !next.invariants_hold() {
            return Err(Error::Internal(format!("shift invariants violated at t={}: {next:?}", next.t)));
        }
        Ok(next)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gas_core::{GasModel, State};

    fn fan() -> WaveFan {
        WaveFan::build(State { v: 1.0, u: 0.0 }, 0.1, 0.1, &GasModel::shallow_water()).unwrap()
    }

    #[test]
    fn phi_psi_examples() {
        let e = 0.1;
        assert_eq!(phi_eps(0.0, e), 0.0);
        assert!((phi_eps(e * e, e) + 1.0 / (e * e)).abs() < 1e-9);
        assert!((phi_eps(e * e / 2.0, e) + 0.5 / (e * e)).abs() < 1e-9);
        assert_eq!(psi_eps(0.0, e), 0.0);
        assert_eq!(psi_eps(-e * e, e), 1.0);
        assert!((psi_eps(-e * e / 2.0, e) - 0.5).abs() < 1e-15);
        assert_eq!(psi_eps(-10.0 * e * e, e), 1.0);
    }

    #[test]
    fn shift_rhs_examples() {
        let f = fan();
        let r = shift_rhs(0.0, 0.0, 3.0, &f);
        assert_eq!((r.dx1, r.dx2), (0.0, 0.0));
        let j = 0.7;
        let r = shift_rhs(2.0 * f.eps1 * f.eps1, 0.0, j, &f);
        assert!((r.dx1 + (2.0 * j + 1.0) / (f.eps1 * f.eps1)).abs() < 1e-9);
        assert_eq!(r.branch1, Branch::Saturated);
        let r = shift_rhs(-2.0 * f.eps1 * f.eps1, 0.0, j, &f);
        assert_eq!(r.dx1, -f.sigma1 / 2.0);
        assert_eq!(r.branch1, Branch::Extremal);
    }

    #[test]
    fn extremal_trajectory() {
        let f = fan();
        let mut s = ShiftState::new(&f);
        let r = shift_rhs(-1.0, 1.0, 0.0, &f);
        for _ in 0..100 {
            s = s.advance(&[r, r], &[0.5, 0.5], 0.01).unwrap();
        }
        assert!((s.x1() + f.sigma1 * s.t / 2.0).abs() < 1e-14);
        assert!((s.x2() + f.sigma2 * s.t / 2.0).abs() < 1e-14);
    }

    #[test]
    fn weights_limits() {
        let f = fan();
        let w = crate::wave_profiles::CompositeWave::from_fan(&f, 0.05).unwrap();
        let wp = WeightPair::new(&f, 0.1).unwrap();
        let far_left = wp.eval(&w, 0.0, -1e5, 0.0, 0.0);
        assert!((far_left.a1 - 1.0).abs() < 1e-12);
        assert!((far_left.a2 - 0.9).abs() < 1e-12);
        assert!((far_left.a - 0.9).abs() < 1e-12);
        assert!(WeightPair::new(&f, 1.5).is_err());
    }
}
