use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use shockstab::entropy_functionals::{check_decomposition, compute_budget_unchecked, Snapshot};
use shockstab::error::Error;
use shockstab::gas_core::{check_inequality_suite, GasModel, State};
use shockstab::ns_solver::StepPolicy;
use shockstab::poincare_check::{search_violations, SamplerConfig};
use shockstab::riemann::WaveFan;
use shockstab::simulation::{perturbed_composite, Bump, CoupledRun};
use shockstab::wave_profiles::{bd_inverse, bd_transform, profile_residual, CompositeWave};
use shockstab::weights_shifts::{shift_rhs, shift_rhs_explicit, ShiftState, WeightPair};

use super::profile::RESIDUAL_LIMIT;
use super::RunSummary;
use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::output::OutputDir;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckVerdict {
    pub passed: bool,
    pub suites: Vec<SuiteResult>,
}

fn suite(name: &str, f: impl FnOnce() -> CliResult<(bool, String)>) -> SuiteResult {
    let (passed, detail) = f().unwrap_or_else(|e| (false, e.to_string()));
    SuiteResult { name: name.to_string(), passed, detail }
}

fn fans(rng: &mut ChaCha8Rng) -> CliResult<(bool, String)> {
    let gases = [(1.4, 1.0), (2.0, 1.0), (3.0, 2.0)];
    let mut worst = 0.0_f64;
    let mut lax_fail = 0;
    for k in 0..1000 {
        let (gm, al) = gases[k % 3];
        let g = GasModel::new(gm, al)?;
        let s = State::new(rng.gen_range(0.5..1.2), rng.gen_range(-1.0..1.0))?;
        let f = WaveFan::build(s, rng.gen_range(0.0..0.3), rng.gen_range(0.0..0.3), &g)?;
        worst = worst.max(f.rh_residual());
        if !f.lax_holds() {
            lax_fail += 1;
        }
    }
    Ok((worst < 1e-10 && lax_fail == 0, format!("max RH residual {worst:e}, Lax failures {lax_fail}")))
}

fn profiles(wave: &CompositeWave) -> CliResult<(bool, String)> {
    let mut worst = 0.0_f64;
    let mut mono = true;
    for i in 1..=2 {
        let p = wave.profile(i);
        if p.eps > 0.0 {
            worst = worst.max(profile_residual(p).max());
            mono &= p.is_strictly_monotone();
        }
    }
    Ok((worst < RESIDUAL_LIMIT && mono, format!("max residual {worst:e}, monotone {mono}")))
}

fn decomposition(
    cfg: &ExperimentConfig,
    fan: &WaveFan,
    wave: &CompositeWave,
    rng: &mut ChaCha8Rng,
) -> CliResult<(bool, String)> {
    let grid = cfg.grid_model()?;
    let weights = WeightPair::new(fan, cfg.lambda)?;
    let (lo, hi) = (grid.x_min, grid.x_max);
    let mut worst = 0.0_f64;
    let mut failures = 0;
    let trials = 6;
    for _ in 0..trials {
        let bumps: Vec<Bump> = (0..3)
            .map(|_| Bump {
                center: rng.gen_range(0.2 * lo..0.2 * hi),
                width: rng.gen_range(0.5..5.0),
                amp_v: rng.gen_range(-0.1..0.1),
                amp_h: rng.gen_range(-0.1..0.1),
            })
            .collect();
        let field = perturbed_composite(grid, wave, &bumps)?;
        let shifts = ShiftState { z1: -rng.gen_range(0.0..2.0), z2: rng.gen_range(0.0..2.0), ..ShiftState::new(fan) };
        let snap = Snapshot::new(&field, wave, &weights, &shifts);
        let mut r = compute_budget_unchecked(&snap, cfg.delta1)?;
        if cfg.check.inject_g_sign_flip {
            r.g_total -= 2.0 * r.g2[0];
            r.g2[0] = -r.g2[0];
        }
        worst = worst.max(r.decomposition_error());
        if check_decomposition(&r).is_err() {
            failures += 1;
        }
    }
    Ok((failures == 0, format!("{failures}/{trials} fields failed, worst relative mismatch {worst:e}")))
}

fn branches(fan: &WaveFan, rng: &mut ChaCha8Rng) -> CliResult<(bool, String)> {
    let mut worst = 0.0_f64;
    let (e1, e2) = (fan.eps1.max(1e-3), fan.eps2.max(1e-3));
    let f = WaveFan::build(fan.u_minus, e1, e2, &fan.gas)?;
    for _ in 0..10_000 {
        let scale = 3.0 * e1.max(e2).powi(2);
        let (y1, y2) = (rng.gen_range(-scale..scale), rng.gen_range(-scale..scale));
        let j = rng.gen_range(-5.0..5.0);
        let r = shift_rhs(y1, y2, j, &f);
        let a = shift_rhs_explicit(1, y1, j, f.sigma1, e1);
        let b = shift_rhs_explicit(2, y2, j, f.sigma2, e2);
        let err = |x: f64, y: f64| (x - y).abs() / x.abs().max(y.abs()).max(1e-300);
        worst = worst.max(err(r.dx1, a)).max(err(r.dx2, b));
    }
    Ok((worst < 1e-10, format!("max relative mismatch {worst:e} over 10000 inputs")))
}

fn inequalities(cfg: &ExperimentConfig, rng: &mut ChaCha8Rng) -> CliResult<(bool, String)> {
    let g = cfg.gas_model()?;
    let v_star = cfg.fan.v_minus;
    let samples: Vec<(f64, f64)> = (0..10_000)
        .map(|_| {
            let w = v_star * rng.gen_range(0.8..1.25);
            (w * rng.gen_range(0.7..1.4), w)
        })
        .collect();
    let rep = check_inequality_suite(&samples, &g, v_star, 0.1)?;
    Ok((
        rep.local_violations == 0 && rep.local_count > 0,
        format!("{} local samples, {} violations", rep.local_count, rep.local_violations),
    ))
}

fn poincare(cfg: &ExperimentConfig) -> CliResult<(bool, String)> {
    let s = SamplerConfig { seed: cfg.seed, n_samples: 300, ..SamplerConfig::default() };
    let r = search_violations(&s, 0.005, 5.0)?;
    Ok((r.violations == 0, format!("worst margin {:e} at delta 0.005", r.worst_margin)))
}

fn bd_round_trip(cfg: &ExperimentConfig, wave: &CompositeWave) -> CliResult<(bool, String)> {
    let grid = cfg.grid_model()?;
    let xs = grid.xs();
    let v: Vec<f64> = xs.iter().map(|&x| wave.point(0.0, x, 0.0, 0.0).v).collect();
    let u: Vec<f64> = xs.iter().map(|&x| wave.point(0.0, x, 0.0, 0.0).u).collect();
    let g = wave.gas();
    let h = bd_transform(&v, &u, grid.dx, g, 1.0)?;
    let back = bd_inverse(&v, &h, grid.dx, g, 1.0)?;
    let err = u.iter().zip(&back).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok((err < 1e-12, format!("max round-trip error {err:e}")))
}

fn separation(cfg: &ExperimentConfig, fan: &WaveFan, wave: &CompositeWave) -> CliResult<(bool, String)> {
    let field = perturbed_composite(cfg.grid_model()?, wave, &cfg.perturbation.bumps())?;
    let mut run = CoupledRun::new(*fan, wave.clone(), field, cfg.lambda, cfg.delta1)?;
    run.strict = true;
    let mut bad = 0;
    let mut steps = 0;
    run.run(cfg.t_end.min(0.25), StepPolicy::default(), |_, r| {
        steps += 1;
        if !r.shifts.invariants_hold() {
            bad += 1;
        }
        Ok(())
    })?;
    Ok((bad == 0, format!("{steps} coupled steps, {bad} separation violations")))
}

/// Runs every invariant suite against the configured model.
pub fn cmd_check(cfg: &ExperimentConfig, out: &mut OutputDir) -> CliResult<RunSummary> {
    let mut summary = RunSummary::new("check", cfg);
    let fan = cfg.build_fan()?;
    let wave = CompositeWave::from_fan(&fan, cfg.dxi_factor)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let suites = vec![
        suite("fan_rankine_hugoniot_lax", || fans(&mut rng)),
        suite("profile_residual", || profiles(&wave)),
        suite("decomposition_identity", || decomposition(cfg, &fan, &wave, &mut rng)),
        suite("shift_branch_equivalence", || branches(&fan, &mut rng)),
        suite("local_relative_entropy_bound", || inequalities(cfg, &mut rng)),
        suite("poincare_small_delta", || poincare(cfg)),
        suite("bd_round_trip", || bd_round_trip(cfg, &wave)),
        suite("shift_separation", || separation(cfg, &fan, &wave)),
    ];
    let verdict = CheckVerdict { passed: suites.iter().all(|s| s.passed), suites };
    out.write_json("check.json", &verdict)?;
    for s in &verdict.suites {
        summary.metrics.insert(s.name.clone(), if s.passed { 1.0 } else { 0.0 });
    }
    if !verdict.passed {
        let names: Vec<&str> = verdict.suites.iter().filter(|s| !s.passed).map(|s| s.name.as_str()).collect();
        let e = CliError::Numerical(Error::Internal(format!("failed suites: {}", names.join(", "))));
        return summary.fail(out, e);
    }
    summary.finish(out)
}
