use shockstab::poincare_check::{search_violations, SamplerConfig};

use super::RunSummary;
use crate::config::ExperimentConfig;
use crate::error::CliResult;
use crate::output::{num, OutputDir};

/// Violation map over the (δ, C₁) grid. A reporting tool: violations do not
/// make it fail.
pub fn cmd_poincare(cfg: &ExperimentConfig, out: &mut OutputDir) -> CliResult<RunSummary> {
    let mut summary = RunSummary::new("poincare", cfg);
    let p = &cfg.poincare;
    let sampler = SamplerConfig {
        seed: cfg.seed,
        degree: p.degree,
        n_samples: p.n_samples,
        polish_iters: p.polish_iters,
        ..SamplerConfig::default()
    };
    let mut deltas = p.deltas.clone();
    deltas.sort_by(f64::total_cmp);
    let mut rows = Vec::new();
    for &c1 in &p.c1s {
        let mut threshold = None;
        for &d in &deltas {
            let r = search_violations(&sampler, d, c1)?;
            if r.violations > 0 && threshold.is_none() {
                threshold = Some(d);
            }
            let coeffs: Vec<String> = r.argmax.coeffs.iter().map(|&c| num(c)).collect();
            rows.push(vec![num(d), num(c1), num(r.worst_margin), r.violations.to_string(), coeffs.join(" ")]);
        }
        match threshold {
            Some(t) => {
                summary.metrics.insert(format!("threshold_c1_{c1}"), t);
            }
            None => summary.messages.push(format!("no violations found for C1={c1}")),
        }
    }
    out.write_csv("poincare.csv", &["delta", "c1", "worst_margin", "violations", "argmax_coeffs"], rows)?;
    summary.finish(out)
}
