use shockstab::entropy_functionals::{branch_histogram, interaction_functionals, ContractionMonitor};
use shockstab::ns_solver::{Field, StepPolicy};
use shockstab::riemann::fan_distance;
use shockstab::simulation::{perturbed_composite, CoupledRun, StepRecord};
use shockstab::wave_profiles::{bd_inverse, CompositeWave};
use shockstab::weights_shifts::Branch;

use super::RunSummary;
use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::output::{num, nums, OutputDir};

/// Everything a coupled run produced, whether or not it finished.
#[derive(Debug)]
pub struct ContractionOutcome {
    pub header: Vec<String>,
    /// One row per reporting step.
    pub rows: Vec<Vec<f64>>,
    pub monitor: ContractionMonitor,
    pub branches: [Vec<Branch>; 2],
    pub steps: usize,
    /// Steps after which a separation invariant failed.
    pub separation_violations: usize,
    /// Saturated-branch steps per family and the largest relative mismatch of
    /// the logged rate against −(2|J^bad|+1)/ε₁² (resp. + for family 2).
    pub saturated_steps: [usize; 2],
    pub saturated_rate_error: f64,
    pub entropy0: f64,
    /// (t, ∫|ṽ₁'||ṽ−ṽ₁|, ∫|ṽ₁'||ṽ₂'|) at the report cadence.
    pub interactions: Vec<[f64; 3]>,
    /// Smallest C with entropy(t) ≤ entropy(0) + C ∫₀ᵗ ∫|ṽ₁'||ṽ₂'|.
    pub interaction_constant: f64,
    pub trajectory: Vec<[f64; 3]>,
    pub final_distance: Option<f64>,
    /// Last state reached; equals the failing step's input on error.
    pub last: Field,
    pub error: Option<CliError>,
}

fn record_row(rec: &StepRecord, inter: [f64; 2]) -> Vec<f64> {
    let mut row: Vec<f64> = rec.report.columns().into_iter().map(|c| c.1).collect();
    row.extend([rec.rates.dx1, rec.rates.dx2, rec.rates.branch1 as usize as f64, rec.rates.branch2 as usize as f64]);
    row.extend(inter);
    row
}

/// Runs the shift-coupled evolution described by `cfg` at ν = 1.
pub fn run_contraction(cfg: &ExperimentConfig) -> CliResult<ContractionOutcome> {
    let fan = cfg.build_fan()?;
    let wave = CompositeWave::from_fan(&fan, cfg.dxi_factor)?;
    let grid = cfg.grid_model()?;
    let xs = grid.xs();
    let field = perturbed_composite(grid, &wave, &cfg.perturbation.bumps())?;
    let mut run = CoupledRun::new(fan, wave, field, cfg.lambda, cfg.delta1)?;
    run.strict = true;
    let mut header: Vec<String> = run.report()?.columns().into_iter().map(|c| c.0.to_string()).collect();
    header.extend(["dX1", "dX2", "branch1", "branch2", "I_v", "I_vv"].map(String::from));
    let mut o = ContractionOutcome {
        header,
        rows: Vec::new(),
        monitor: ContractionMonitor::new(),
        branches: [Vec::new(), Vec::new()],
        steps: 0,
        separation_violations: 0,
        saturated_steps: [0, 0],
        saturated_rate_error: 0.0,
        entropy0: 0.0,
        interactions: Vec::new(),
        interaction_constant: 0.0,
        trajectory: Vec::new(),
        final_distance: None,
        last: run.field.clone(),
        error: None,
    };
    let (e1, e2) = (fan.eps1, fan.eps2);
    let cadence = cfg.cadence.max(1);
    let mut acc_inter = 0.0;
    let mut observer = |rec: &StepRecord, r: &CoupledRun| -> shockstab::error::Result<()> {
        let rep = &rec.report;
        if o.steps == 0 {
            o.entropy0 = rep.entropy;
        }
        o.monitor.push(rep, rec.rates.dx1, rec.rates.dx2);
        o.branches[0].push(rec.rates.branch1);
        o.branches[1].push(rec.rates.branch2);
        let k = 2.0 * rep.jbad.abs() + 1.0;
        if rec.rates.branch1 == Branch::Saturated {
            o.saturated_steps[0] += 1;
            let want = -k / (e1 * e1);
            o.saturated_rate_error = o.saturated_rate_error.max((rec.rates.dx1 - want).abs() / want.abs());
        }
        if rec.rates.branch2 == Branch::Saturated {
            o.saturated_steps[1] += 1;
            let want = k / (e2 * e2);
            o.saturated_rate_error = o.saturated_rate_error.max((rec.rates.dx2 - want).abs() / want.abs());
        }
        if !r.shifts.invariants_hold() {
            o.separation_violations += 1;
        }
        if o.steps.is_multiple_of(cadence) {
            let (iv, ivv) = interaction_functionals(&r.wave, rep.t, rep.x1, rep.x2, &xs);
            if let Some(prev) = o.interactions.last() {
                acc_inter += 0.5 * (rep.t - prev[0]) * (ivv + prev[2]);
                if acc_inter > 0.0 {
                    o.interaction_constant = o.interaction_constant.max((rep.entropy - o.entropy0) / acc_inter);
                }
            }
            o.interactions.push([rep.t, iv, ivv]);
            o.trajectory.push([rep.t, rep.x1, rep.x2]);
            o.rows.push(record_row(rec, [iv, ivv]));
        }
        o.steps += 1;
        Ok(())
    };
    let res = match cfg.dt {
        Some(dt) => {
            let steps = ((cfg.t_end / dt).round() as usize).max(1);
            run.run_fixed(cfg.t_end, steps, &mut observer)
        }
        None => run.run(cfg.t_end, StepPolicy::default(), &mut observer),
    };
    o.last = run.field.clone();
    match res {
        Ok(()) => {
            let (x1, x2) = (run.shifts.x1(), run.shifts.x2());
            o.final_distance = Some(fan_distance(&run.field, &fan, run.field.t, x1, x2)?.l1_v);
            // Close the ledger with the final state.
            let fin = run.report()?;
            o.monitor.push(&fin, 0.0, 0.0);
            o.trajectory.push([fin.t, fin.x1, fin.x2]);
        }
        Err(e) => o.error = Some(e.into()),
    }
    Ok(o)
}

pub fn cmd_contract(cfg: &ExperimentConfig, out: &mut OutputDir) -> CliResult<RunSummary> {
    let mut summary = RunSummary::new("contract", cfg);
    let mut o = match run_contraction(cfg) {
        Ok(o) => o,
        Err(e) => return summary.fail(out, e),
    };
    let header: Vec<&str> = o.header.iter().map(String::as_str).collect();
    out.write_csv("timeseries.csv", &header, o.rows.iter().map(|r| nums(r.iter().copied())))?;
    let h1 = branch_histogram(&o.branches[0]);
    let h2 = branch_histogram(&o.branches[1]);
    let names = ["saturated", "linear", "small", "extremal"];
    out.write_csv(
        "branches.csv",
        &["branch", "family1", "family2"],
        (0..4).map(|k| vec![names[k].to_string(), h1[k].to_string(), h2[k].to_string()]),
    )?;
    // The last ledger entry closes the run and carries no residual.
    summary.max_budget_residual = Some(o.monitor.max_residual());
    summary.ledger_constant = Some(o.monitor.ledger_constant());
    summary.final_fan_distance = o.final_distance;
    summary.shift_trajectory = o.trajectory.clone();
    let m = &mut summary.metrics;
    m.insert("steps".into(), o.steps as f64);
    m.insert("mean_budget_residual".into(), o.monitor.mean_residual());
    m.insert("separation_violations".into(), o.separation_violations as f64);
    m.insert("saturated_steps_1".into(), o.saturated_steps[0] as f64);
    m.insert("saturated_steps_2".into(), o.saturated_steps[1] as f64);
    m.insert("saturated_rate_error".into(), o.saturated_rate_error);
    m.insert("interaction_constant".into(), o.interaction_constant);
    m.insert("entropy0".into(), o.entropy0);
    for k in 0..4 {
        m.insert(format!("branch1_{}", names[k]), h1[k] as f64);
        m.insert(format!("branch2_{}", names[k]), h2[k] as f64);
    }
    if let Some(e) = o.error.take() {
        let g = cfg.gas_model()?;
        let f = &o.last;
        let u = bd_inverse(&f.v, &f.h, f.grid.dx, &g, 1.0)?;
        out.write_csv("last_good.csv", &["x", "v", "h", "u"], f.rows(&u).map(nums))?;
        summary.messages.push(format!("last good snapshot at t={}", num(f.t)));
        return summary.fail(out, e);
    }
    if o.separation_violations > 0 {
        let e = CliError::Numerical(shockstab::error::Error::Structural(format!(
            "{} steps violated shift separation",
            o.separation_violations
        )));
        return summary.fail(out, e);
    }
    summary.finish(out)
}
