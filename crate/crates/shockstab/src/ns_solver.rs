//! Explicit finite-difference solver for the BD-transformed system
//!
//! ```text
//! v_t − h_x = −c (v^β p(v)_x)_x,     h_t + p(v)_x = 0,      c = ν b/γ,
//! ```
//!
//! and for the raw system v_t = u_x, u_t + p(v)_x = ν (μ(v)/v u_x)_x used to
//! cross-validate the transform. Convective terms use centered differences,
//! diffusion is in conservative flux form with face-averaged coefficients, and
//! time stepping is Heun's two-stage method. Boundary nodes stay pinned.

use crate::error::{Error, Result};
use crate::gas_core::GasModel;

/// Default advective CFL number.
pub const DEFAULT_C_CFL: f64 = 0.4;
/// Default diffusive stability number.
pub const DEFAULT_C_DIFF: f64 = 0.25;

/// Uniform grid with `n` cells and `n + 1` nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub x_min: f64,
    pub x_max: f64,
    pub n: usize,
    pub dx: f64,
}

impl Grid {
    pub fn new(x_min: f64, x_max: f64, n: usize) -> Result<Self> {
        if !(x_max > x_min) || n < 4 {
            return Err(Error::Validation(format!("bad grid [{x_min}, {x_max}] with n={n}")));
        }
        Ok(Self { x_min, x_max, n, dx: (x_max - x_min) / n as f64 })
    }

    pub fn nodes(&self) -> usize {
        self.n + 1
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.nodes()).map(|i| self.x(i)).collect()
    }
}

/// Which variable the second component holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variables {
    /// (v, h): BD-transformed.
    Bd,
    /// (v, u): raw.
    Raw,
}

/// Discrete solution. `h` holds the BD velocity for [`Variables::Bd`] and
/// the fluid velocity for [`Variables::Raw`].
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub grid: Grid,
    pub v: Vec<f64>,
    pub h: Vec<f64>,
    pub t: f64,
    pub vars: Variables,
}

impl Field {
    pub fn new(grid: Grid, v: Vec<f64>, h: Vec<f64>, t: f64, vars: Variables) -> Result<Self> {
        if v.len() != grid.nodes() || h.len() != grid.nodes() {
            return Err(Error::Validation("field length does not match grid".into()));
        }
        let f = Self { grid, v, h, t, vars };
        f.check(0.0)?;
        Ok(f)
    }

    /// Samples `init(x) -> (v, second)` on the grid.
    pub fn from_fn<F: Fn(f64) -> (f64, f64)>(grid: Grid, vars: Variables, init: F) -> Result<Self> {
        let (v, h) = grid.xs().into_iter().map(init).unzip();
        Self::new(grid, v, h, 0.0, vars)
    }

    fn check(&self, v_min: f64) -> Result<()> {
        for i in 0..self.v.len() {
            if !self.v[i].is_finite() || !self.h[i].is_finite() {
                return Err(Error::NonFinite { t: self.t, node: i });
            }
            if self.v[i] <= v_min {
                return Err(Error::BlowUp { t: self.t, x: self.grid.x(i), v: self.v[i] });
            }
        }
        Ok(())
    }

    /// Rows (x, v, h, u) given the companion velocity.
    pub fn rows<'a>(&'a self, u: &'a [f64]) -> impl Iterator<Item = [f64; 4]> + 'a {
        (0..self.v.len()).map(move |i| [self.grid.x(i), self.v[i], self.h[i], u[i]])
    }
}

/// Largest stable time step for the given field.
pub fn stable_dt(field: &Field, g: &GasModel, c_cfl: f64, c_diff: f64) -> f64 {
    let mut c_max = 0.0_f64;
    let mut d_max = 0.0_f64;
    for &v in &field.v {
        c_max = c_max.max(g.sound_speed(v));
        let d = match field.vars {
            Variables::Bd => g.bd_diffusion() * g.v_beta(v) * (-g.dp(v)),
            Variables::Raw => g.nu * g.mu(v) / v,
        };
        d_max = d_max.max(d);
    }
    let dx = field.grid.dx;
    let dt_adv = if c_max > 0.0 { c_cfl * dx / c_max } else { f64::INFINITY };
    let dt_diff = if d_max > 0.0 { c_diff * dx * dx / d_max } else { f64::INFINITY };
    dt_adv.min(dt_diff)
}

/// Semi-discrete right-hand side at interior nodes; boundary rates are zero.
fn rhs(field: &Field, g: &GasModel, dv: &mut [f64], dh: &mut [f64], scratch: &mut Scratch) {
    let n = field.v.len();
    let dx = field.grid.dx;
    let (v, h) = (&field.v, &field.h);
    let p = &mut scratch.p;
    let face = &mut scratch.face;
    for i in 0..n {
        p[i] = g.p(v[i]);
    }
    dv[0] = 0.0;
    dh[0] = 0.0;
    dv[n - 1] = 0.0;
    dh[n - 1] = 0.0;
    match field.vars {
        Variables::Bd => {
            let c = g.bd_diffusion();
            for i in 0..n - 1 {
                let vb = 0.5 * (g.v_beta(v[i]) + g.v_beta(v[i + 1]));
                face[i] = c * vb * (p[i + 1] - p[i]) / dx;
            }
            for i in 1..n - 1 {
                dv[i] = (h[i + 1] - h[i - 1]) / (2.0 * dx) - (face[i] - face[i - 1]) / dx;
                dh[i] = -(p[i + 1] - p[i - 1]) / (2.0 * dx);
            }
        }
        Variables::Raw => {
            let nu = g.nu;
            for i in 0..n - 1 {
                let m = 0.5 * (g.mu(v[i]) / v[i] + g.mu(v[i + 1]) / v[i + 1]);
                face[i] = nu * m * (h[i + 1] - h[i]) / dx;
            }
            for i in 1..n - 1 {
                dv[i] = (h[i + 1] - h[i - 1]) / (2.0 * dx);
                dh[i] = -(p[i + 1] - p[i - 1]) / (2.0 * dx) + (face[i] - face[i - 1]) / dx;
            }
        }
    }
}

#[derive(Debug, Clone)]
struct Scratch {
    p: Vec<f64>,
    face: Vec<f64>,
    k1v: Vec<f64>,
    k1h: Vec<f64>,
    k2v: Vec<f64>,
    k2h: Vec<f64>,
}

impl Scratch {
    fn new(n: usize) -> Self {
        Self {
            p: vec![0.0; n],
            face: vec![0.0; n],
            k1v: vec![0.0; n],
            k1h: vec![0.0; n],
            k2v: vec![0.0; n],
            k2h: vec![0.0; n],
        }
    }
}

/// Reusable stepper holding work arrays.
#[derive(Debug, Clone)]
pub struct Stepper {
    scratch: Scratch,
    stage: Option<Field>,
}

impl Stepper {
    pub fn new(nodes: usize) -> Self {
        Self { scratch: Scratch::new(nodes), stage: None }
    }

    /// One Heun step. `on_stage` sees the first-stage state (the input) and
    /// the predictor state at t + dt; it may fail to abort the step.
    pub fn step_observed<F>(&mut self, field: &Field, dt: f64, g: &GasModel, mut on_stage: F) -> Result<Field>
    where
        F: FnMut(&Field) -> Result<()>,
    {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Validation(format!("dt must be positive, got {dt}")));
        }
        let n = field.v.len();
        if self.scratch.p.len() != n {
            self.scratch = Scratch::new(n);
        }
        on_stage(field)?;
        let mut s = std::mem::take(&mut self.scratch.k1v);
        let mut sh = std::mem::take(&mut self.scratch.k1h);
        rhs(field, g, &mut s, &mut sh, &mut self.scratch);
        let mut pred = self.stage.take().unwrap_or_else(|| field.clone());
        pred.grid = field.grid;
        pred.vars = field.vars;
        pred.t = field.t + dt;
        pred.v.resize(n, 0.0);
        pred.h.resize(n, 0.0);
        for i in 0..n {
            pred.v[i] = field.v[i] + dt * s[i];
            pred.h[i] = field.h[i] + dt * sh[i];
        }
        pred.check(g.v_min)?;
        on_stage(&pred)?;
        let mut s2 = std::mem::take(&mut self.scratch.k2v);
        let mut sh2 = std::mem::take(&mut self.scratch.k2h);
        rhs(&pred, g, &mut s2, &mut sh2, &mut self.scratch);
        let mut out = field.clone();
        out.t = field.t + dt;
        for i in 0..n {
            out.v[i] = field.v[i] + 0.5 * dt * (s[i] + s2[i]);
            out.h[i] = field.h[i] + 0.5 * dt * (sh[i] + sh2[i]);
        }
        self.scratch.k1v = s;
        self.scratch.k1h = sh;
        self.scratch.k2v = s2;
        self.scratch.k2h = sh2;
        self.stage = Some(pred);
        out.check(g.v_min)?;
        Ok(out)
    }

    pub fn step(&mut self, field: &Field, dt: f64, g: &GasModel) -> Result<Field> {
        self.step_observed(field, dt, g, |_| Ok(()))
    }
}

/// One step of the (v,h) system.
pub fn step(field: &Field, dt: f64, g: &GasModel) -> Result<Field> {
    if field.vars != Variables::Bd {
        return Err(Error::Validation("step expects (v,h) variables".into()));
    }
    Stepper::new(field.v.len()).step(field, dt, g)
}

/// One step of the raw (v,u) system with viscosity `nu`.
pub fn raw_step(field: &Field, dt: f64, g: &GasModel, nu: f64) -> Result<Field> {
    if field.vars != Variables::Raw {
        return Err(Error::Validation("raw_step expects (v,u) variables".into()));
    }
    let g = g.with_nu(nu)?;
    Stepper::new(field.v.len()).step(field, dt, &g)
}

/// Time-step policy for [`evolve`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepPolicy {
    pub c_cfl: f64,
    pub c_diff: f64,
    /// Optional fixed step, used instead of the adaptive one when smaller.
    pub dt_max: Option<f64>,
}

impl Default for StepPolicy {
    fn default() -> Self {
        Self { c_cfl: DEFAULT_C_CFL, c_diff: DEFAULT_C_DIFF, dt_max: None }
    }
}

impl StepPolicy {
    pub fn dt(&self, field: &Field, g: &GasModel) -> f64 {
        let dt = stable_dt(field, g, self.c_cfl, self.c_diff);
        self.dt_max.map_or(dt, |m| dt.min(m))
    }
}

/// Evolves to time `t_end`, calling `observer` on the initial field and
/// after every `cadence`-th step (and at the end). The last step is
/// shortened to land on `t_end`.
pub fn evolve<F>(
    field: &Field,
    t_end: f64,
    g: &GasModel,
    policy: StepPolicy,
    cadence: usize,
    mut observer: F,
) -> Result<Field>
where
    F: FnMut(&Field) -> Result<()>,
{
    let mut stepper = Stepper::new(field.v.len());
    let mut cur = field.clone();
    observer(&cur)?;
    let mut k = 0usize;
    while cur.t < t_end {
        let dt = policy.dt(&cur, g).min(t_end - cur.t);
        if dt <= 1e-14 * t_end.max(1.0) {
            break;
        }
        cur = stepper.step(&cur, dt, g)?;
        k += 1;
        if cadence > 0 && (k.is_multiple_of(cadence) || cur.t >= t_end) {
            observer(&cur)?;
        }
    }
    Ok(cur)
}

/// Σ (v_i − w_i) dx over interior nodes, for mass-drift checks.
pub fn interior_mass(field: &Field, reference: &[f64]) -> f64 {
    let n = field.v.len();
    (1..n - 1).map(|i| field.v[i] - reference[i]).sum::<f64>() * field.grid.dx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_state_is_fixed_point() {
        let g = GasModel::shallow_water();
        let grid = Grid::new(-5.0, 5.0, 100).unwrap();
        let f = Field::from_fn(grid, Variables::Bd, |_| (1.3, -0.4)).unwrap();
        let dt = stable_dt(&f, &g, 0.4, 0.25);
        let out = step(&f, dt, &g).unwrap();
        assert_eq!(out.v, f.v);
        assert_eq!(out.h, f.h);
        let r = Field::from_fn(grid, Variables::Raw, |_| (0.8, 0.2)).unwrap();
        let out = raw_step(&r, dt, &g, 1.0).unwrap();
        assert_eq!(out.v, r.v);
        assert_eq!(out.h, r.h);
    }

    #[test]
    fn evolve_zero_horizon_is_identity() {
        let g = GasModel::shallow_water();
        let grid = Grid::new(0.0, 1.0, 10).unwrap();
        let f = Field::from_fn(grid, Variables::Bd, |x| (1.0 + 0.1 * x, 0.0)).unwrap();
        let out = evolve(&f, 0.0, &g, StepPolicy::default(), 1, |_| Ok(())).unwrap();
        assert_eq!(out, f);
    }

    #[test]
    fn blow_up_is_reported() {
        let g = GasModel::shallow_water();
        let grid = Grid::new(0.0, 1.0, 10).unwrap();
        let mut f = Field::from_fn(grid, Variables::Bd, |_| (1.0, 0.0)).unwrap();
        f.h[5] = 1e6;
        let err = step(&f, 0.1, &g).unwrap_err();
        assert!(matches!(err, Error::BlowUp { .. } | Error::NonFinite { .. }), "{err:?}");
        assert!(Field::from_fn(grid, Variables::Bd, |_| (-1.0, 0.0)).is_err());
    }

    #[test]
    fn wrong_variables_rejected() {
        let g = GasModel::shallow_water();
        let grid = Grid::new(0.0, 1.0, 10).unwrap();
        let f = Field::from_fn(grid, Variables::Raw, |_| (1.0, 0.0)).unwrap();
        assert!(step(&f, 0.01, &g).is_err());
    }
}
