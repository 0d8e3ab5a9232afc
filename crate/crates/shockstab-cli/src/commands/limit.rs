//! Inviscid-limit study.
//!
//! The ν-problem is solved in the stretched frame y = x/ν, s = t/ν, where it
//! becomes the ν = 1 problem; this keeps the shift coupling at unit viscosity
//! and resolves every ν with the same cells per layer width. Results are
//! mapped back with U^ν(t,x) = U(t/ν, x/ν) and X^ν(t) = νX(t/ν).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use shockstab::ns_solver::{evolve, Field, Grid, StepPolicy, Variables};
use shockstab::riemann::fan_distance;
use shockstab::simulation::{well_prepared, Bump, CoupledRun};
use shockstab::wave_profiles::CompositeWave;

use super::RunSummary;
use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::output::{num, OutputDir};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitRow {
    pub nu: f64,
    /// Empty on success, otherwise the failure message.
    pub error: String,
    pub cells: usize,
    pub steps: usize,
    pub l1_v: f64,
    pub l2_h: f64,
    pub rel_entropy: f64,
    /// Physical shifts X_i^ν(T).
    pub x1: f64,
    pub x2: f64,
    /// Steps at which a separation bound failed.
    pub separation_violations: usize,
}

impl LimitRow {
    pub fn ok(&self) -> bool {
        self.error.is_empty()
    }
}

/// Cells of the stretched grid at viscosity `nu`: the configured count belongs
/// to the first (largest) viscosity and grows like 1/ν.
fn scaled_cells(cfg: &ExperimentConfig, nu: f64) -> usize {
    let nu0 = cfg.nus.first().copied().unwrap_or(nu);
    (cfg.grid.n as f64 * nu0 / nu).round() as usize
}

fn stretch(bumps: &[Bump], nu: f64) -> Vec<Bump> {
    bumps.iter().map(|b| Bump { center: b.center / nu, width: b.width / nu, ..*b }).collect()
}

fn scaled_initial(cfg: &ExperimentConfig, wave: &CompositeWave, nu: f64, cells: usize) -> CliResult<(Field, Field)> {
    let grid = Grid::new(cfg.grid.x_min / nu, cfg.grid.x_max / nu, cells)?;
    Ok(well_prepared(grid, wave, &stretch(&cfg.perturbation.bumps(), nu), 1.0)?)
}

/// Evolves the ν-problem to `cfg.t_end` with shift coupling and measures the
/// distance to the fan shifted by the run's own shifts.
pub fn limit_run(cfg: &ExperimentConfig, nu: f64) -> CliResult<LimitRow> {
    let fan = cfg.build_fan()?;
    let wave = CompositeWave::from_fan(&fan, cfg.dxi_factor)?;
    let cells = scaled_cells(cfg, nu);
    let (_, bd) = scaled_initial(cfg, &wave, nu, cells)?;
    let mut run = CoupledRun::new(fan, wave, bd, cfg.lambda, cfg.delta1)?;
    let (mut steps, mut bad) = (0usize, 0usize);
    run.run(cfg.t_end / nu, StepPolicy::default(), |_, r| {
        steps += 1;
        if !r.shifts.invariants_hold() {
            bad += 1;
        }
        Ok(())
    })?;
    let grid = Grid::new(cfg.grid.x_min, cfg.grid.x_max, cells)?;
    let phys = Field::new(grid, run.field.v.clone(), run.field.h.clone(), cfg.t_end, Variables::Bd)?;
    let (x1, x2) = (nu * run.shifts.x1(), nu * run.shifts.x2());
    let d = fan_distance(&phys, &fan, cfg.t_end, x1, x2)?;
    Ok(LimitRow {
        nu,
        error: String::new(),
        cells,
        steps,
        l1_v: d.l1_v,
        l2_h: d.l2_h,
        rel_entropy: d.rel_entropy,
        x1,
        x2,
        separation_violations: bad,
    })
}

/// Raw (v,u) evolution at viscosity ν on the physical grid against the
/// stretched (v,h) run at ν = 1, at two resolutions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingTest {
    pub nu: f64,
    pub cells: [usize; 2],
    /// ∫|v_raw − v_scaled| dx at time T for each resolution.
    pub l1_diff: [f64; 2],
    pub ratio: f64,
}

impl ScalingTest {
    /// The mismatch is discretization error when it shrinks at second order.
    pub fn passes(&self) -> bool {
        (3.4..=4.6).contains(&self.ratio)
    }
}

fn scaling_diff(cfg: &ExperimentConfig, wave: &CompositeWave, nu: f64, cells: usize) -> CliResult<f64> {
    let g1 = *wave.gas();
    let g_nu = g1.with_nu(nu)?;
    let (raw_s, bd) = scaled_initial(cfg, wave, nu, cells)?;
    let grid = Grid::new(cfg.grid.x_min, cfg.grid.x_max, cells)?;
    // In the stretched frame u keeps its values; only x and t rescale.
    let raw = Field::new(grid, raw_s.v, raw_s.h, 0.0, Variables::Raw)?;
    let raw_end = evolve(&raw, cfg.t_end, &g_nu, StepPolicy::default(), 0, |_| Ok(()))?;
    let bd_end = evolve(&bd, cfg.t_end / nu, &g1, StepPolicy::default(), 0, |_| Ok(()))?;
    let n = raw_end.v.len();
    let s: f64 = (0..n)
        .map(|i| {
            let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
            w * (raw_end.v[i] - bd_end.v[i]).abs()
        })
        .sum();
    Ok(s * grid.dx)
}

pub fn scaling_self_test(cfg: &ExperimentConfig, nu: f64, cells: usize) -> CliResult<ScalingTest> {
    let fan = cfg.build_fan()?;
    let wave = CompositeWave::from_fan(&fan, cfg.dxi_factor)?;
    let d0 = scaling_diff(cfg, &wave, nu, cells)?;
    let d1 = scaling_diff(cfg, &wave, nu, 2 * cells)?;
    Ok(ScalingTest { nu, cells: [cells, 2 * cells], l1_diff: [d0, d1], ratio: d0 / d1 })
}

/// Whether the fan distance decreases strictly along the ν list.
pub fn monotone(rows: &[LimitRow]) -> bool {
    rows.iter().all(LimitRow::ok) && rows.windows(2).all(|w| w[1].l1_v < w[0].l1_v)
}

pub fn cmd_limit(cfg: &ExperimentConfig, out: &mut OutputDir) -> CliResult<RunSummary> {
    let mut summary = RunSummary::new("limit", cfg);
    if cfg.nus.is_empty() {
        return summary.fail(out, CliError::Validation("limit needs a viscosity list".into()));
    }
    // Per-ν failures are recorded in the table rather than aborting the sweep.
    let rows: Vec<LimitRow> = cfg
        .nus
        .par_iter()
        .map(|&nu| {
            limit_run(cfg, nu).unwrap_or_else(|e| LimitRow {
                nu,
                error: e.to_string(),
                cells: scaled_cells(cfg, nu),
                steps: 0,
                l1_v: f64::NAN,
                l2_h: f64::NAN,
                rel_entropy: f64::NAN,
                x1: f64::NAN,
                x2: f64::NAN,
                separation_violations: 0,
            })
        })
        .collect();
    out.write_csv(
        "limit.csv",
        &[
            "nu",
            "status",
            "cells",
            "steps",
            "l1_v",
            "l2_h",
            "rel_entropy",
            "X1",
            "X2",
            "X1_over_T",
            "X2_over_T",
            "separation_violations",
        ],
        rows.iter().map(|r| {
            vec![
                num(r.nu),
                if r.ok() { "ok".to_string() } else { r.error.clone() },
                r.cells.to_string(),
                r.steps.to_string(),
                num(r.l1_v),
                num(r.l2_h),
                num(r.rel_entropy),
                num(r.x1),
                num(r.x2),
                num(r.x1 / cfg.t_end),
                num(r.x2 / cfg.t_end),
                r.separation_violations.to_string(),
            ]
        }),
    )?;
    let st = scaling_self_test(cfg, cfg.nus[0], cfg.grid.n);
    match &st {
        Ok(s) => {
            out.write_csv(
                "scaling_self_test.csv",
                &["nu", "cells", "l1_diff"],
                (0..2).map(|k| vec![num(s.nu), s.cells[k].to_string(), num(s.l1_diff[k])]),
            )?;
            summary.metrics.insert("scaling_ratio".into(), s.ratio);
        }
        Err(e) => summary.messages.push(format!("scaling self-test failed: {e}")),
    }
    let mono = monotone(&rows);
    summary.metrics.insert("monotone".into(), if mono { 1.0 } else { 0.0 });
    for r in rows.iter().filter(|r| r.ok()) {
        summary.metrics.insert(format!("l1_v_nu{}", r.nu), r.l1_v);
        summary.metrics.insert(format!("X1_nu{}", r.nu), r.x1);
        summary.metrics.insert(format!("X2_nu{}", r.nu), r.x2);
    }
    summary.final_fan_distance = rows.last().filter(|r| r.ok()).map(|r| r.l1_v);
    let failed = rows.iter().filter(|r| !r.ok()).count();
    let seps: usize = rows.iter().map(|r| r.separation_violations).sum();
    if failed > 0 || seps > 0 || st.is_err() {
        summary.status = "failed".into();
        summary.messages.push(format!("{failed} viscosities failed, {seps} separation violations"));
    }
    summary.finish(out)
}
