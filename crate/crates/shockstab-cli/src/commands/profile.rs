use serde::{Deserialize, Serialize};
use shockstab::error::Error;
use shockstab::gas_core::State;
use shockstab::riemann::WaveFan;
use shockstab::wave_profiles::{fit_tail_rate, profile_residual, Family, ShockProfile};

use super::RunSummary;
use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::output::{num, nums, OutputDir};

/// Largest accepted max-norm residual of the traveling-wave system.
pub const RESIDUAL_LIMIT: f64 = 1e-6;

/// One row of the decay-fit report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub eps: f64,
    pub sigma: f64,
    pub samples: usize,
    pub residual: f64,
    pub residual_half_step: f64,
    /// log2 of the residual ratio under dξ halving.
    pub residual_order: f64,
    /// Exponential rate of ṽ₁ − v_m on the right tail.
    pub tail_rate: f64,
    pub rate_over_eps: f64,
}

/// Solves the 1-profile of the symmetric fan of strength `eps` at dξ and dξ/2
/// and fits its tail.
pub fn profile_row(cfg: &ExperimentConfig, eps: f64) -> CliResult<(ProfileRow, ShockProfile)> {
    let g = cfg.gas_model()?;
    let fan = WaveFan::build(State::new(cfg.fan.v_minus, cfg.fan.u_minus)?, eps, eps, &g)?;
    let dxi = cfg.dxi_factor / eps;
    let p = ShockProfile::solve_default(Family::One, &fan, dxi)?;
    let fine = ShockProfile::solve_default(Family::One, &fan, 0.5 * dxi)?;
    let r = profile_residual(&p).max();
    let rf = profile_residual(&fine).max();
    let end = p.xi_end();
    let rate = fit_tail_rate(&p, 0.3 * end, 0.8 * end)
        .ok_or_else(|| Error::Resolution(format!("too few tail samples at eps={eps}")))?;
    let row = ProfileRow {
        eps,
        sigma: p.sigma,
        samples: p.len(),
        residual: r,
        residual_half_step: rf,
        residual_order: (r / rf).log2(),
        tail_rate: rate,
        rate_over_eps: rate / eps,
    };
    Ok((row, p))
}

pub fn cmd_profile(cfg: &ExperimentConfig, out: &mut OutputDir) -> CliResult<RunSummary> {
    let mut summary = RunSummary::new("profile", cfg);
    let eps_list: Vec<f64> = if cfg.eps_sweep.is_empty() {
        let mut e = vec![cfg.fan.eps1, cfg.fan.eps2];
        e.retain(|&x| x > 0.0);
        e.dedup();
        e
    } else {
        cfg.eps_sweep.clone()
    };
    let mut rows = Vec::new();
    for &eps in &eps_list {
        let (row, p) = match profile_row(cfg, eps) {
            Ok(x) => x,
            Err(e) => return summary.fail(out, e),
        };
        out.write_csv(&format!("profile_eps{eps}.csv"), &["xi", "v", "h", "u"], p.rows().map(nums))?;
        rows.push(row);
    }
    out.write_csv(
        "decay_fit.csv",
        &["eps", "sigma", "samples", "residual", "residual_half_step", "residual_order", "tail_rate", "rate_over_eps"],
        rows.iter().map(|r| {
            vec![
                num(r.eps),
                num(r.sigma),
                r.samples.to_string(),
                num(r.residual),
                num(r.residual_half_step),
                num(r.residual_order),
                num(r.tail_rate),
                num(r.rate_over_eps),
            ]
        }),
    )?;
    let worst = rows.iter().map(|r| r.residual).fold(0.0, f64::max);
    for r in &rows {
        summary.decay_rates.insert(format!("tail_eps{}", r.eps), r.tail_rate);
    }
    summary.metrics.insert("max_residual".into(), worst);
    let ratios: Vec<f64> = rows.iter().map(|r| r.rate_over_eps).collect();
    if let (Some(lo), Some(hi)) = (ratios.iter().copied().reduce(f64::min), ratios.iter().copied().reduce(f64::max)) {
        summary.metrics.insert("rate_over_eps_min".into(), lo);
        summary.metrics.insert("rate_over_eps_max".into(), hi);
    }
    if !(worst < RESIDUAL_LIMIT) {
        let e =
            CliError::Numerical(Error::Resolution(format!("profile residual {worst:e} exceeds {RESIDUAL_LIMIT:e}")));
        return summary.fail(out, e);
    }
    summary.finish(out)
}
