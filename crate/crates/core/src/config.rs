//! TOML run configuration.
//!
//! Every subcommand accepts an optional config file; command-line flags
//! override file values, which override the built-in defaults. Unknown keys
//! are rejected so typos fail loudly instead of silently using a default.

use crate::error::{Error, Result};
use crate::sweep::Scenario;
use crate::timeline::Mode;
use serde::{Deserialize, Serialize};
use std::path::Path;

fn default_mu_l() -> f64 {
    3.0
}
fn default_mu_c() -> f64 {
    2.0
}
fn default_sigma() -> f64 {
    0.5
}
fn default_r0() -> f64 {
    2.0
}
fn default_alpha() -> f64 {
    0.6
}
fn default_mu_t() -> f64 {
    2.0
}
fn default_mode() -> Mode {
    Mode::NormalApprox
}
fn default_population() -> u64 {
    100_000
}
fn default_t_end() -> f64 {
    200.0
}
fn default_dt() -> f64 {
    crate::seir::DEFAULT_DT
}
fn default_output_dt() -> f64 {
    1.0
}
fn default_runs() -> usize {
    100
}
fn default_seed() -> u64 {
    42
}
fn default_draws() -> usize {
    10_000
}
fn default_delay_range() -> [f64; 3] {
    [0.0, 6.0, 0.05]
}
fn default_alpha_range() -> [f64; 3] {
    [0.0, 1.0, 0.005]
}

/// Disease timeline and transmissibility shared by all subcommands.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    /// Mean latent period, days.
    pub mu_l: f64,
    /// Mean contagious window, days.
    pub mu_c: f64,
    pub sigma_l: f64,
    pub sigma_c: f64,
    /// Mean testing delay, days.
    pub mu_t: f64,
    pub sigma_t: f64,
    pub r0: f64,
    /// App uptake fraction.
    pub alpha: f64,
    pub mode: Mode,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            mu_l: default_mu_l(),
            mu_c: default_mu_c(),
            sigma_l: default_sigma(),
            sigma_c: default_sigma(),
            mu_t: default_mu_t(),
            sigma_t: default_sigma(),
            r0: default_r0(),
            alpha: default_alpha(),
            mode: default_mode(),
        }
    }
}

impl ScenarioConfig {
    pub fn scenario(&self, id: impl Into<String>) -> Result<Scenario> {
        Scenario::new(
            id,
            self.mu_l,
            self.mu_c,
            Some(self.r0),
            None,
            (self.sigma_l, self.sigma_c, self.sigma_t),
            self.mode,
        )
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateConfig {
    pub population: u64,
    pub t_end: f64,
    /// Integrator step, days.
    pub dt: f64,
    /// Spacing of rows in the output trajectory, days.
    pub output_dt: f64,
    /// Stochastic replicates; 0 runs the deterministic model only.
    pub runs: usize,
    pub seed: u64,
    pub stochastic: bool,
    /// Index cases at t = 0, persons.
    pub initial_exposed: u64,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            population: default_population(),
            t_end: default_t_end(),
            dt: default_dt(),
            output_dt: default_output_dt(),
            runs: default_runs(),
            seed: default_seed(),
            stochastic: false,
            initial_exposed: 100,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    /// `[lo, hi, step]` over the mean testing delay.
    pub mu_t_range: [f64; 3],
    /// `[lo, hi, step]` over uptake.
    pub alpha_range: [f64; 3],
    /// One of `fig3`, `fig4`, `fig5`, or `single` (use `[scenario]`).
    pub family: String,
    /// Emit the full 0/1 grid in addition to the boundary curve.
    pub emit_grid: bool,
    /// Emit the alert-probability curve.
    pub emit_curve: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            mu_t_range: default_delay_range(),
            alpha_range: default_alpha_range(),
            family: "single".into(),
            emit_grid: false,
            emit_curve: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ValidateConfig {
    /// Random parameter draws per property.
    pub draws: usize,
    pub seed: u64,
    /// Fault injection: negate the constant coefficient before the
    /// consistency checks, proving the harness can fail.
    pub inject_k0_sign_flip: bool,
}

impl Default for ValidateConfig {
    fn default() -> Self {
        Self {
            draws: default_draws(),
            seed: default_seed(),
            inject_k0_sign_flip: false,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub scenario: ScenarioConfig,
    pub simulate: SimulateConfig,
    pub sweep: SweepConfig,
    pub validate: ValidateConfig,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        // keep the message single-line for machine-parsable CLI errors
        toml::from_str(text).map_err(|e| {
            let span = e
                .span()
                .map(|s| format!(" at byte {}", s.start))
                .unwrap_or_default();
            Error::Config(format!("bad config{span}: {}", e.message()))
        })
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }
}
