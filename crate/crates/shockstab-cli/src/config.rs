//! Experiment configuration, validation and named presets.

use serde::{Deserialize, Serialize};
use shockstab::gas_core::{GasModel, State};
use shockstab::ns_solver::Grid;
use shockstab::riemann::WaveFan;
use shockstab::simulation::Bump;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GasSpec {
    pub gamma: f64,
    pub alpha: f64,
    /// Viscosity amplitude; defaults to γ.
    #[serde(default)]
    pub b: Option<f64>,
}

/// Fan input: left state, strengths and the gas exponents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FanSpec {
    pub v_minus: f64,
    pub u_minus: f64,
    pub eps1: f64,
    pub eps2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpSpec {
    pub center: f64,
    pub width: f64,
    pub amp_v: f64,
    pub amp_h: f64,
}

impl From<BumpSpec> for Bump {
    fn from(b: BumpSpec) -> Self {
        Bump { center: b.center, width: b.width, amp_v: b.amp_v, amp_h: b.amp_h }
    }
}

/// Perturbation added to the composite wave at t = 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct PerturbationSpec {
    #[serde(default)]
    pub bumps: Vec<BumpSpec>,
    /// If set, the bumps are rescaled together to this L² size.
    #[serde(default)]
    pub l2: Option<f64>,
}

impl PerturbationSpec {
    pub fn bumps(&self) -> Vec<Bump> {
        let raw: Vec<Bump> = self.bumps.iter().map(|&b| b.into()).collect();
        match self.l2 {
            Some(target) if !raw.is_empty() => {
                let total = raw.iter().map(|b| b.l2().powi(2)).sum::<f64>().sqrt();
                if total == 0.0 {
                    return raw;
                }
                let s = target / total;
                raw.into_iter().map(|b| Bump { amp_v: b.amp_v * s, amp_h: b.amp_h * s, ..b }).collect()
            }
            _ => raw,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoincareSpec {
    pub deltas: Vec<f64>,
    pub c1s: Vec<f64>,
    pub n_samples: usize,
    #[serde(default = "default_degree")]
    pub degree: usize,
    #[serde(default = "default_polish")]
    pub polish_iters: usize,
}

fn default_degree() -> usize {
    6
}

fn default_polish() -> usize {
    shockstab::poincare_check::POLISH_ITERS
}

impl Default for PoincareSpec {
    fn default() -> Self {
        Self {
            deltas: vec![0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.5],
            c1s: vec![1.0, 5.0, 10.0],
            n_samples: 1000,
            degree: default_degree(),
            polish_iters: default_polish(),
        }
    }
}

/// Switches for `check`; the injection exists for mutation tests.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct CheckSpec {
    #[serde(default)]
    pub inject_g_sign_flip: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub gas: GasSpec,
    pub fan: FanSpec,
    #[serde(default)]
    pub perturbation: PerturbationSpec,
    pub grid: GridSpec,
    pub t_end: f64,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default = "default_delta1")]
    pub delta1: f64,
    /// Viscosities for `limit`, strictly decreasing.
    #[serde(default)]
    pub nus: Vec<f64>,
    /// Strength sweep for `profile`; empty means the fan strengths.
    #[serde(default)]
    pub eps_sweep: Vec<f64>,
    /// Profile sample spacing is this factor over ε.
    #[serde(default = "default_dxi_factor")]
    pub dxi_factor: f64,
    #[serde(default)]
    pub seed: u64,
    /// Write a time-series row every this many steps.
    #[serde(default = "default_cadence")]
    pub cadence: usize,
    /// Fixed time step; adaptive when absent.
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default)]
    pub poincare: PoincareSpec,
    #[serde(default)]
    pub check: CheckSpec,
}

fn default_lambda() -> f64 {
    shockstab::weights_shifts::DEFAULT_LAMBDA
}

fn default_delta1() -> f64 {
    shockstab::entropy_functionals::DEFAULT_DELTA1
}

fn default_dxi_factor() -> f64 {
    0.01
}

fn default_cadence() -> usize {
    10
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

impl ExperimentConfig {
    pub fn gas_model(&self) -> Result<GasModel, CliError> {
        let b = self.gas.b.unwrap_or(self.gas.gamma);
        Ok(GasModel::with_params(self.gas.gamma, self.gas.alpha, b, 1.0)?)
    }

    pub fn build_fan(&self) -> Result<WaveFan, CliError> {
        let g = self.gas_model()?;
        let s = State::new(self.fan.v_minus, self.fan.u_minus)?;
        Ok(WaveFan::build(s, self.fan.eps1, self.fan.eps2, &g)?)
    }

    pub fn grid_model(&self) -> Result<Grid, CliError> {
        Ok(Grid::new(self.grid.x_min, self.grid.x_max, self.grid.n)?)
    }

    /// Checks every invariant that can be checked without running anything.
    pub fn validate(&self) -> Result<(), CliError> {
        self.gas_model()?;
        let fan = self.build_fan()?;
        if !fan.lax_holds() && (self.fan.eps1 > 0.0 && self.fan.eps2 > 0.0) {
            return Err(invalid("fan violates the Lax ordering"));
        }
        if !(self.lambda > 0.0 && self.lambda < 1.0) {
            return Err(invalid(format!("lambda must lie in (0,1), got {}", self.lambda)));
        }
        for &e in self.eps_sweep.iter().chain([self.fan.eps1, self.fan.eps2].iter()) {
            if !(e >= 0.0 && e.is_finite()) {
                return Err(invalid(format!("strength {e} must be non-negative")));
            }
            if e / self.lambda > 1.0 {
                return Err(invalid(format!("strength ratio eps/lambda = {} exceeds 1", e / self.lambda)));
            }
        }
        self.grid_model()?;
        let g = self.grid;
        for b in &self.perturbation.bumps {
            if !(b.width > 0.0) {
                return Err(invalid("bump widths must be positive"));
            }
            if b.center < g.x_min || b.center > g.x_max {
                return Err(invalid(format!("bump center {} lies outside the grid", b.center)));
            }
        }
        if let Some(l2) = self.perturbation.l2 {
            if !(l2 >= 0.0) {
                return Err(invalid("perturbation l2 must be non-negative"));
            }
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(invalid(format!("t_end must be positive, got {}", self.t_end)));
        }
        if !(self.delta1 > 0.0) {
            return Err(invalid("delta1 must be positive"));
        }
        if !(self.dxi_factor > 0.0 && self.dxi_factor <= 0.1) {
            return Err(invalid("dxi_factor must lie in (0, 0.1]"));
        }
        if self.nus.iter().any(|&n| !(n > 0.0 && n <= 1.0)) {
            return Err(invalid("viscosities must lie in (0, 1]"));
        }
        if self.nus.windows(2).any(|w| w[1] >= w[0]) {
            return Err(invalid("viscosity list must be strictly decreasing"));
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0) {
                return Err(invalid("dt must be positive"));
            }
        }
        let p = &self.poincare;
        if p.deltas.iter().any(|&d| !(d > 0.0 && d < 1.0)) {
            return Err(invalid("poincare deltas must lie in (0,1)"));
        }
        if p.c1s.iter().any(|&c| !(c > shockstab::poincare_check::MIN_L2_SQ)) {
            return Err(invalid("poincare C1 values are too small"));
        }
        if p.n_samples == 0 || p.degree > 12 {
            return Err(invalid("poincare needs n_samples >= 1 and degree <= 12"));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| invalid(format!("config: {e}")))
    }

    /// Named preset, or `None` for an unknown name.
    pub fn preset(name: &str) -> Option<Self> {
        let eps = |e: f64| FanSpec { v_minus: 1.0, u_minus: 0.0, eps1: e, eps2: e };
        let base = |name: &str, e: f64| ExperimentConfig {
            name: name.to_string(),
            gas: GasSpec { gamma: 2.0, alpha: 1.0, b: None },
            fan: eps(e),
            perturbation: PerturbationSpec::default(),
            grid: GridSpec { x_min: -150.0, x_max: 150.0, n: 2000 },
            t_end: 2.0,
            // Smallest weight amplitude with eps/lambda <= 1.
            lambda: e.max(default_lambda()),
            delta1: default_delta1(),
            nus: Vec::new(),
            eps_sweep: Vec::new(),
            dxi_factor: default_dxi_factor(),
            seed: 0,
            cadence: default_cadence(),
            dt: None,
            poincare: PoincareSpec::default(),
            check: CheckSpec::default(),
        };
        let bump = |c: f64, w: f64, a: f64| BumpSpec { center: c, width: w, amp_v: a, amp_h: a };
        Some(match name {
            "shallow-water-0.1" => {
                let mut c = base(name, 0.1);
                c.eps_sweep = vec![0.05, 0.1, 0.2];
                c.lambda = 0.2;
                c
            }
            "zero" => base(name, 0.2),
            "moderate" => {
                let mut c = base(name, 0.2);
                c.perturbation = PerturbationSpec { bumps: vec![bump(0.0, 3.0, 0.05)], l2: Some(0.1) };
                c
            }
            "large" => {
                // A weak 1-shock lowers the saturation level ε₁² below what
                // a wide rarefying bump produces in Y₁.
                let mut c = base(name, 0.2);
                c.fan.eps1 = 0.05;
                c.perturbation = PerturbationSpec { bumps: vec![bump(0.0, 5.0, -0.3)], l2: None };
                c
            }
            "limit" => {
                let mut c = base(name, 0.2);
                c.grid = GridSpec { x_min: -20.0, x_max: 20.0, n: 800 };
                c.t_end = 1.0;
                c.nus = vec![0.1, 0.05, 0.025];
                c.perturbation = PerturbationSpec { bumps: vec![bump(0.0, 0.5, 0.002)], l2: None };
                c
            }
            "poincare" => {
                let mut c = base(name, 0.1);
                c.poincare = PoincareSpec::default();
                c
            }
            _ => return None,
        })
    }

    pub fn preset_names() -> &'static [&'static str] {
        &["shallow-water-0.1", "zero", "moderate", "large", "limit", "poincare"]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        for name in ExperimentConfig::preset_names() {
            ExperimentConfig::preset(name).unwrap().validate().unwrap();
        }
    }

    #[test]
    fn json_round_trip() {
        let c = ExperimentConfig::preset("moderate").unwrap();
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(ExperimentConfig::from_json(&text).unwrap(), c);
    }

    #[test]
    fn strength_ratio_guard() {
        let mut c = ExperimentConfig::preset("zero").unwrap();
        c.lambda = 0.1;
        c.fan.eps1 = 0.15;
        assert!(matches!(c.validate(), Err(CliError::Validation(_))));
    }

    #[test]
    fn l2_rescaling() {
        let c = ExperimentConfig::preset("moderate").unwrap();
        let b = c.perturbation.bumps();
        assert!((b[0].l2() - 0.1).abs() < 1e-14);
    }
}
