//! The (v,h) solver coupled to the shift ODE.
//!
//! Each Heun step evaluates the budget twice: at (Uⁿ, Xⁿ) and at the
//! predictor (U*, X*), where X* is the forward-Euler shift predictor. The
//! shifts then advance with the averaged rates, mirroring the field update.

use crate::entropy_functionals::{compute_budget, compute_budget_unchecked, EntropyReport, Snapshot};
use crate::error::{Error, Result};
use crate::gas_core::GasModel;
use crate::ns_solver::{stable_dt, Field, Grid, StepPolicy, Stepper, Variables, DEFAULT_C_CFL, DEFAULT_C_DIFF};
use crate::riemann::WaveFan;
use crate::wave_profiles::{bd_transform, CompositeWave};
use crate::weights_shifts::{shift_rhs, Branch, ShiftRates, ShiftState, WeightPair};

/// Smooth localized perturbation added to the composite wave at t = 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bump {
    pub center: f64,
    pub width: f64,
    pub amp_v: f64,
    pub amp_h: f64,
}

impl Bump {
    /// (δv, δh) at x: Gaussian envelopes.
    pub fn at(&self, x: f64) -> (f64, f64) {
        let s = (x - self.center) / self.width;
        let e = (-0.5 * s * s).exp();
        (self.amp_v * e, self.amp_h * e)
    }

    /// (∫(δv² + δh²))^{1/2} in closed form.
    pub fn l2(&self) -> f64 {
        ((self.amp_v * self.amp_v + self.amp_h * self.amp_h) * self.width * std::f64::consts::PI.sqrt()).sqrt()
    }

    /// Rescales both amplitudes so that `l2()` equals `target`.
    pub fn with_l2(mut self, target: f64) -> Self {
        let n = self.l2();
        if n > 0.0 {
            self.amp_v *= target / n;
            self.amp_h *= target / n;
        }
        self
    }
}

/// Composite wave at t = 0 plus bumps, in (v,h) variables.
pub fn perturbed_composite(grid: Grid, wave: &CompositeWave, bumps: &[Bump]) -> Result<Field> {
    Field::from_fn(grid, Variables::Bd, |x| {
        let c = wave.point(0.0, x, 0.0, 0.0);
        bumps.iter().fold((c.v, c.h), |(v, h), b| {
            let (dv, dh) = b.at(x);
            (v + dv, h + dh)
        })
    })
    .map_err(|e| match e {
        Error::BlowUp { x, v, .. } => Error::Validation(format!("perturbation makes v={v} <= 0 at x={x}")),
        other => other,
    })
}

/// Composite wave plus bumps in (v,u), with h from the discrete BD transform
/// at viscosity `nu`. This is the well-prepared initialization.
pub fn well_prepared(grid: Grid, wave: &CompositeWave, bumps: &[Bump], nu: f64) -> Result<(Field, Field)> {
    let raw = Field::from_fn(grid, Variables::Raw, |x| {
        let c = wave.point(0.0, x, 0.0, 0.0);
        bumps.iter().fold((c.v, c.u), |(v, u), b| {
            let (dv, du) = b.at(x);
            (v + dv, u + du)
        })
    })?;
    let g = wave.gas();
    let h = bd_transform(&raw.v, &raw.h, grid.dx, g, nu)?;
    let bd = Field::new(grid, raw.v.clone(), h, 0.0, Variables::Bd)?;
    Ok((raw, bd))
}

/// What the coupled run records per step, taken at the first Heun stage.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub report: EntropyReport,
    pub rates: ShiftRates,
    pub dt: f64,
}

impl StepRecord {
    pub fn branches(&self) -> (Branch, Branch) {
        (self.rates.branch1, self.rates.branch2)
    }
}

/// Coupled evolution state.
#[derive(Debug, Clone)]
pub struct CoupledRun {
    pub fan: WaveFan,
    pub wave: CompositeWave,
    pub weights: WeightPair,
    pub field: Field,
    pub shifts: ShiftState,
    pub delta1: f64,
    /// Check the decomposition identity at every evaluation.
    pub strict: bool,
    stepper: Stepper,
}

impl CoupledRun {
    pub fn new(fan: WaveFan, wave: CompositeWave, field: Field, lambda: f64, delta1: f64) -> Result<Self> {
        if field.vars != Variables::Bd {
            return Err(Error::Validation("coupled runs use (v,h) variables".into()));
        }
        if field.t != 0.0 {
            return Err(Error::Validation("coupled runs start at t = 0".into()));
        }
        if fan.gas.nu != 1.0 {
            return Err(Error::Validation("coupled runs are posed at unit viscosity".into()));
        }
        let weights = WeightPair::new(&fan, lambda)?;
        let shifts = ShiftState::new(&fan);
        let n = field.v.len();
        Ok(Self { fan, wave, weights, field, shifts, delta1, strict: false, stepper: Stepper::new(n) })
    }

    pub fn gas(&self) -> &GasModel {
        &self.fan.gas
    }

    fn evaluate(&self, field: &Field, shifts: &ShiftState) -> Result<(EntropyReport, ShiftRates)> {
        let snap = Snapshot::new(field, &self.wave, &self.weights, shifts);
        let r = if self.strict {
            compute_budget(&snap, self.delta1)?
        } else {
            compute_budget_unchecked(&snap, self.delta1)?
        };
        let rates = shift_rhs(r.y1, r.y2, r.jbad, &self.fan);
        Ok((r, rates))
    }

    /// Budget at the current state.
    pub fn report(&self) -> Result<EntropyReport> {
        Ok(self.evaluate(&self.field, &self.shifts)?.0)
    }

    /// Advances field and shifts by `dt`. On error the state is unchanged.
    pub fn step(&mut self, dt: f64) -> Result<StepRecord> {
        let g = self.fan.gas;
        let s0 = self.shifts;
        let mut first: Option<(EntropyReport, ShiftRates)> = None;
        let mut second: Option<ShiftRates> = None;
        let mut pred_shift = s0;
        let mut stepper = std::mem::replace(&mut self.stepper, Stepper::new(0));
        let out = stepper.step_observed(&self.field, dt, &g, |f| {
            if first.is_none() {
                let (r, k1) = self.evaluate(f, &s0)?;
                pred_shift = s0.advance(&[k1], &[1.0], dt)?;
                first = Some((r, k1));
            } else {
                second = Some(self.evaluate(f, &pred_shift)?.1);
            }
            Ok(())
        });
        self.stepper = stepper;
        let field = out?;
        let (report, k1) = first.ok_or_else(|| Error::Internal("first stage missing".into()))?;
        let k2 = second.ok_or_else(|| Error::Internal("second stage missing".into()))?;
        let shifts = s0.advance(&[k1, k2], &[0.5, 0.5], dt)?;
        self.field = field;
        self.shifts = shifts;
        Ok(StepRecord { report, rates: k1, dt })
    }

    /// Runs `steps` equal steps of size t_end/steps. The step must respect the
    /// Heun stability limits of the current field.
    pub fn run_fixed<F>(&mut self, t_end: f64, steps: usize, mut observer: F) -> Result<()>
    where
        F: FnMut(&StepRecord, &CoupledRun) -> Result<()>,
    {
        if steps == 0 || !(t_end > self.field.t) {
            return Err(Error::Validation(format!("need steps > 0 and t_end > {}", self.field.t)));
        }
        let g = self.fan.gas;
        let t0 = self.field.t;
        let dt = (t_end - t0) / steps as f64;
        for k in 0..steps {
            let limit = stable_dt(&self.field, &g, 2.0 * DEFAULT_C_CFL, 2.0 * DEFAULT_C_DIFF);
            if dt > limit {
                return Err(Error::Validation(format!("fixed step {dt:e} exceeds the stability limit {limit:e}")));
            }
            let rec = self.step(dt)?;
            // Land exactly on the grid of step times.
            self.field.t = t0 + (k + 1) as f64 * dt;
            self.shifts.t = self.field.t;
            observer(&rec, self)?;
        }
        Ok(())
    }

    /// Runs to `t_end`, passing each record and the post-step state to
    /// `observer`. The final step lands on `t_end`.
    pub fn run<F>(&mut self, t_end: f64, policy: StepPolicy, mut observer: F) -> Result<()>
    where
        F: FnMut(&StepRecord, &CoupledRun) -> Result<()>,
    {
        let g = self.fan.gas;
        while self.field.t < t_end {
            let dt = policy.dt(&self.field, &g).min(t_end - self.field.t);
            if dt <= 1e-14 * t_end.max(1.0) {
                break;
            }
            let rec = self.step(dt)?;
            observer(&rec, self)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gas_core::State;

    #[test]
    fn bump_l2_matches_quadrature() {
        let b = Bump { center: 1.0, width: 2.0, amp_v: 0.3, amp_h: -0.1 };
        let dx = 1e-3;
        let s: f64 = (-30000..30000)
            .map(|i| {
                let (a, c) = b.at(i as f64 * dx);
                a * a + c * c
            })
            .sum::<f64>()
            * dx;
        assert!((s.sqrt() - b.l2()).abs() < 1e-10);
        assert!((b.with_l2(0.1).l2() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn coupled_steps_keep_separation() {
        let g = GasModel::shallow_water();
        let fan = WaveFan::build(State { v: 1.0, u: 0.0 }, 0.3, 0.3, &g).unwrap();
        let wave = CompositeWave::from_fan(&fan, 0.01).unwrap();
        let grid = Grid::new(-150.0, 150.0, 600).unwrap();
        let bump = Bump { center: -2.0, width: 3.0, amp_v: 0.05, amp_h: 0.05 };
        let field = perturbed_composite(grid, &wave, &[bump]).unwrap();
        let mut run = CoupledRun::new(fan, wave, field, 0.1, 0.05).unwrap();
        run.strict = true;
        run.run(0.5, StepPolicy::default(), |_, r| {
            assert!(r.shifts.invariants_hold());
            Ok(())
        })
        .unwrap();
        assert!((run.field.t - 0.5).abs() < 1e-12);
        assert_eq!(run.shifts.t, run.field.t);
    }
}
