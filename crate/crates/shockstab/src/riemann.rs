//! Two-shock Riemann fans: a 1-shock U₋ → U_m followed by a 2-shock U_m → U₊.
//!
//! Fans are parametrized by pressure jumps ε₁ = p(v_m) - p(v₋) and
//! ε₂ = p(v_m) - p(v₊), both positive for admissible (Lax) shocks. The
//! Rankine–Hugoniot relations −σ[v] − [u] = 0 and −σ[u] + [p] = 0 are then
//! solved in closed form.

use crate::error::{Error, Result};
use crate::gas_core::{GasModel, State};
use crate::ns_solver::Field;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveFan {
    pub u_minus: State,
    pub u_m: State,
    pub u_plus: State,
    pub sigma1: f64,
    pub sigma2: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub gas: GasModel,
}

/// Shock speed through the secant slope of p, with the sign of the family.
fn secant_speed(g: &GasModel, vl: f64, vr: f64, sign: f64) -> f64 {
    if vl == vr {
        sign * g.sound_speed(vl)
    } else {
        sign * (-g.p_diff(vr, vl) / (vr - vl)).sqrt()
    }
}

impl WaveFan {
    /// Builds the fan from the left state and the two pressure jumps.
    pub fn build(u_minus: State, eps1: f64, eps2: f64, g: &GasModel) -> Result<Self> {
        if !(u_minus.v > 0.0 && u_minus.v.is_finite() && u_minus.u.is_finite()) {
            return Err(Error::Domain(format!("left state must have v > 0, got {:?}", u_minus)));
        }
        if !(eps1 >= 0.0 && eps2 >= 0.0 && eps1.is_finite() && eps2.is_finite()) {
            return Err(Error::Validation(format!("strengths must be non-negative, got eps1={eps1}, eps2={eps2}")));
        }
        let p_minus = g.p(u_minus.v);
        let p_m = p_minus + eps1;
        let p_plus = p_m - eps2;
        if p_plus <= 0.0 {
            return Err(Error::Domain(format!(
                "eps2={eps2} exceeds the middle pressure {p_m}; v+ would be non-positive"
            )));
        }
        let v_m = g.p_inv(p_m);
        let v_plus = g.p_inv(p_plus);
        let sigma1 = secant_speed(g, u_minus.v, v_m, -1.0);
        let sigma2 = secant_speed(g, v_m, v_plus, 1.0);
        // −σ[v] − [u] = 0 across each shock.
        let u_m = u_minus.u - sigma1 * (v_m - u_minus.v);
        let u_plus = u_m - sigma2 * (v_plus - v_m);
        Ok(Self {
            u_minus,
            u_m: State { v: v_m, u: u_m },
            u_plus: State { v: v_plus, u: u_plus },
            sigma1,
            sigma2,
            eps1,
            eps2,
            gas: *g,
        })
    }

    /// Largest absolute Rankine–Hugoniot residual over both shocks and both
    /// jump relations.
    pub fn rh_residual(&self) -> f64 {
        let g = &self.gas;
        let jumps = [(self.u_minus, self.u_m, self.sigma1), (self.u_m, self.u_plus, self.sigma2)];
        jumps
            .iter()
            .flat_map(|&(l, r, s)| {
                let r1 = -s * (r.v - l.v) - (r.u - l.u);
                let r2 = -s * (r.u - l.u) + g.p_diff(r.v, l.v);
                [r1.abs(), r2.abs()]
            })
            .fold(0.0, f64::max)
    }

    /// Lax orderings v₋ > v_m, u₋ > u_m, v_m < v₊, u_m > u₊ and σ₁ < 0 < σ₂.
    pub fn lax_holds(&self) -> bool {
        self.u_minus.v > self.u_m.v
            && self.u_minus.u > self.u_m.u
            && self.u_m.v < self.u_plus.v
            && self.u_m.u > self.u_plus.u
            && self.sigma1 < 0.0
            && self.sigma2 > 0.0
    }

    /// Pressure jumps read back from the states.
    pub fn recovered_strengths(&self) -> (f64, f64) {
        let g = &self.gas;
        (g.p_diff(self.u_m.v, self.u_minus.v), g.p_diff(self.u_m.v, self.u_plus.v))
    }

    /// Discontinuity positions σ_i t + X_i.
    pub fn fronts(&self, t: f64, x1: f64, x2: f64) -> (f64, f64) {
        (self.sigma1 * t + x1, self.sigma2 * t + x2)
    }

    /// State of the shifted fan at (t, x). A point on a discontinuity belongs
    /// to the region on its left.
    pub fn eval(&self, t: f64, x: f64, x1: f64, x2: f64) -> Result<State> {
        if t < 0.0 {
            return Err(Error::Validation(format!("negative time {t}")));
        }
        let (s1, s2) = self.fronts(t, x1, x2);
        if s1 > s2 {
            return Err(Error::Structural(format!("crossed discontinuities: {s1} > {s2}")));
        }
        Ok(if x <= s1 {
            self.u_minus
        } else if x <= s2 {
            self.u_m
        } else {
            self.u_plus
        })
    }
}

/// Distances between a discrete field and a shifted fan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FanDistance {
    /// ∫|v - v̄| dx.
    pub l1_v: f64,
    /// (∫|h - ū|² dx)^{1/2}.
    pub l2_h: f64,
    /// ∫η((v,h)|(v̄,ū)) dx.
    pub rel_entropy: f64,
}

/// Trapezoid quadrature of pointwise distances between `field` and the fan.
pub fn fan_distance(field: &Field, fan: &WaveFan, t: f64, x1: f64, x2: f64) -> Result<FanDistance> {
    let g = &fan.gas;
    let n = field.v.len();
    let dx = field.grid.dx;
    let (mut l1, mut l2, mut re) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let x = field.grid.x(i);
        let s = fan.eval(t, x, x1, x2)?;
        let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
        let dv = (field.v[i] - s.v).abs();
        let dh = field.h[i] - s.u;
        l1 += w * dv;
        l2 += w * dh * dh;
        re += w * g.eta_rel(field.v[i], field.h[i], s.v, s.u);
    }
    Ok(FanDistance { l1_v: l1 * dx, l2_h: (l2 * dx).sqrt(), rel_entropy: re * dx })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sw_fan(e1: f64, e2: f64) -> WaveFan {
        WaveFan::build(State { v: 1.0, u: 0.0 }, e1, e2, &GasModel::shallow_water()).unwrap()
    }

    #[test]
    fn shallow_water_fan_satisfies_rh_and_lax() {
        let f = sw_fan(0.1, 0.1);
        assert!(f.rh_residual() < 1e-12);
        assert!(f.lax_holds());
        // p(v_m) = 1.1, p(v+) = 1.0 for γ=2.
        assert!((f.u_m.v - 1.1_f64.powf(-0.5)).abs() < 1e-15);
        assert!((f.u_plus.v - 1.0).abs() < 1e-15);
        let (e1, e2) = f.recovered_strengths();
        assert!((e1 - 0.1).abs() < 1e-12 && (e2 - 0.1).abs() < 1e-12);
    }

    #[test]
    fn degenerate_fan() {
        let f = sw_fan(0.0, 0.0);
        assert_eq!(f.u_minus, f.u_m);
        assert_eq!(f.u_m, f.u_plus);
        let c = 2.0_f64.sqrt();
        assert!((f.sigma1 + c).abs() < 1e-15 && (f.sigma2 - c).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_strengths() {
        let g = GasModel::shallow_water();
        let s = State { v: 1.0, u: 0.0 };
        assert!(matches!(WaveFan::build(s, 0.1, 1.5, &g), Err(Error::Domain(_))));
        assert!(matches!(WaveFan::build(s, -0.1, 0.1, &g), Err(Error::Validation(_))));
    }

    #[test]
    fn eval_examples() {
        let f = sw_fan(0.1, 0.1);
        assert_eq!(f.eval(0.0, -0.5, 0.0, 0.0).unwrap(), f.u_minus);
        assert_eq!(f.eval(0.0, 0.5, 0.0, 0.0).unwrap(), f.u_plus);
        assert_eq!(f.eval(1.0, 0.0, 0.0, 0.0).unwrap(), f.u_m);
        let (x1, x2) = (-f.sigma1 / 2.0, -f.sigma2 / 2.0);
        let (a, b) = f.fronts(1.0, x1, x2);
        assert!((a - f.sigma1 / 2.0).abs() < 1e-15 && (b - f.sigma2 / 2.0).abs() < 1e-15);
        assert_eq!(f.eval(1.0, a + 1e-9, x1, x2).unwrap(), f.u_m);
        assert_eq!(f.eval(1.0, a - 1e-9, x1, x2).unwrap(), f.u_minus);
        assert_eq!(f.eval(1.0, b + 1e-9, x1, x2).unwrap(), f.u_plus);
        assert!(matches!(f.eval(1.0, 0.0, 5.0, -5.0), Err(Error::Structural(_))));
    }
}
