use shockstab::ns_solver::{evolve, StepPolicy};
use shockstab::riemann::fan_distance;
use shockstab::simulation::perturbed_composite;
use shockstab::wave_profiles::{bd_inverse, CompositeWave};

use super::RunSummary;
use crate::config::ExperimentConfig;
use crate::error::CliResult;
use crate::output::{nums, OutputDir};

/// Plain (v,h) evolution of the perturbed composite wave at ν = 1, compared
/// with the unshifted fan.
pub fn cmd_simulate(cfg: &ExperimentConfig, out: &mut OutputDir) -> CliResult<RunSummary> {
    let mut summary = RunSummary::new("simulate", cfg);
    let fan = cfg.build_fan()?;
    let g = fan.gas;
    let wave = CompositeWave::from_fan(&fan, cfg.dxi_factor)?;
    let grid = cfg.grid_model()?;
    let field = perturbed_composite(grid, &wave, &cfg.perturbation.bumps())?;
    let policy = StepPolicy { dt_max: cfg.dt, ..StepPolicy::default() };
    let mut series = Vec::new();
    let mut last = field.clone();
    let res = evolve(&field, cfg.t_end, &g, policy, cfg.cadence, |f| {
        let d = fan_distance(f, &fan, f.t, 0.0, 0.0)?;
        series.push([f.t, d.l1_v, d.l2_h, d.rel_entropy]);
        last = f.clone();
        Ok(())
    });
    out.write_csv("distance.csv", &["t", "l1_v", "l2_h", "rel_entropy"], series.iter().map(|r| nums(*r)))?;
    let fin = match res {
        Ok(f) => f,
        Err(e) => {
            let u = bd_inverse(&last.v, &last.h, last.grid.dx, &g, g.nu)?;
            out.write_csv("last_good.csv", &["x", "v", "h", "u"], last.rows(&u).map(nums))?;
            return summary.fail(out, e.into());
        }
    };
    let u = bd_inverse(&fin.v, &fin.h, fin.grid.dx, &g, g.nu)?;
    out.write_csv("final_field.csv", &["x", "v", "h", "u"], fin.rows(&u).map(nums))?;
    summary.final_fan_distance = series.last().map(|r| r[1]);
    summary.finish(out)
}
