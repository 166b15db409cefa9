//! Parameter sweeps over testing delay and app uptake.
//!
//! Produces the alert-probability curves and the controllability regions /
//! boundary curves for families of epidemic scenarios. The alert
//! probabilities depend on the delay only, so they are computed once per
//! delay value and reused across the uptake axis; grid cells are independent
//! work items evaluated in parallel with results keyed by grid index.

use crate::error::{Error, Result};
use crate::stability::condition_c1;
use crate::timeline::{alert_probabilities, AlertProbabilities, Mode, TimelineSpec};
use crate::dist::DurationDistribution;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

/// One epidemic scenario: characteristic durations plus transmissibility.
///
/// Exactly one of `r0`/`beta` is given at construction; the other follows
/// from `beta = r0 * gamma`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scenario {
    pub id: String,
    /// Mean latent period, days (1/epsilon).
    pub epsilon_inv: f64,
    /// Mean infectious-but-asymptomatic period, days (1/gamma).
    pub gamma_inv: f64,
    pub r0: f64,
    pub beta: f64,
    pub sigma_l: f64,
    pub sigma_c: f64,
    pub sigma_t: f64,
    pub mode: Mode,
}

impl Scenario {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        id: impl Into<String>,
        epsilon_inv: f64,
        gamma_inv: f64,
        r0: Option<f64>,
        beta: Option<f64>,
        sigmas: (f64, f64, f64),
        mode: Mode,
    ) -> Result<Self> {
        if !(epsilon_inv > 0.0 && gamma_inv > 0.0) {
            return Err(Error::Config(
                "epsilon_inv and gamma_inv must be positive".into(),
            ));
        }
        let gamma = 1.0 / gamma_inv;
        let (r0, beta) = match (r0, beta) {
            (Some(r), None) => (r, r * gamma),
            (None, Some(b)) => (b / gamma, b),
            _ => {
                return Err(Error::Config(
                    "give exactly one of r0 or beta".into(),
                ))
            }
        };
        if !(beta > 0.0) {
            return Err(Error::Config(format!("derived beta = {beta} must be positive")));
        }
        if ((beta / gamma) - r0).abs() > 1e-12 * r0.max(1.0) {
            return Err(Error::Config("r0 and beta are inconsistent".into()));
        }
        let (sigma_l, sigma_c, sigma_t) = sigmas;
        if sigma_l < 0.0 || sigma_c < 0.0 || sigma_t < 0.0 {
            return Err(Error::Config("sigmas must be nonnegative".into()));
        }
        Ok(Self {
            id: id.into(),
            epsilon_inv,
            gamma_inv,
            r0,
            beta,
            sigma_l,
            sigma_c,
            sigma_t,
            mode,
        })
    }

    /// COVID-19-calibrated scenario: sigmas 0.5 days, exact (grid) mode.
    ///
    /// Exact mode matters for the region figures: the sigma_T floor of the
    /// normal-approximation mode distorts the boundary for short delays
    /// enough to break the set-inclusion ordering of the gamma_inv family.
    pub fn preset(id: impl Into<String>, epsilon_inv: f64, gamma_inv: f64, r0: f64) -> Self {
        Self::new(
            id,
            epsilon_inv,
            gamma_inv,
            Some(r0),
            None,
            (0.5, 0.5, 0.5),
            Mode::Exact,
        )
        .expect("preset parameters are valid")
    }

    pub fn gamma(&self) -> f64 {
        1.0 / self.gamma_inv
    }

    pub fn epsilon(&self) -> f64 {
        1.0 / self.epsilon_inv
    }

    /// Timeline for a given mean testing delay.
    ///
    /// In exact mode a zero-sigma delay is represented as a point mass
    /// (`mu_t -> 0` becomes an instantaneous test). Normal-approximation
    /// mode keeps a floored sigma since it needs closed-form normals.
    pub fn timeline(&self, mu_t: f64) -> Result<TimelineSpec> {
        let duration = |mu: f64, sigma: f64| -> Result<DurationDistribution> {
            if sigma == 0.0 {
                DurationDistribution::point_mass(mu)
            } else {
                DurationDistribution::normal(mu, sigma)
            }
        };
        let sigma_t = match self.mode {
            Mode::Exact => self.sigma_t,
            Mode::NormalApprox => self.sigma_t.max(0.5),
        };
        TimelineSpec::new(
            duration(self.epsilon_inv, self.sigma_l)?,
            duration(self.gamma_inv, self.sigma_c)?,
            duration(mu_t, sigma_t)?,
            self.mode,
        )
    }

    pub fn probabilities(&self, mu_t: f64) -> Result<AlertProbabilities> {
        alert_probabilities(&self.timeline(mu_t)?)
    }

    /// C1 margin at uptake `alpha`, with `theta`, `psi` scaled from the
    /// cached alert probabilities.
    pub fn margin(&self, probs: &AlertProbabilities, alpha: f64) -> Result<f64> {
        let theta = probs.p_e * alpha * self.beta;
        let psi = probs.p_i * alpha * self.beta;
        condition_c1(alpha, self.beta, self.gamma(), theta, psi)
    }
}

/// Scenario family varying the latent period (`epsilon_inv` in 1, 3, 5 days).
pub fn fig3_presets() -> Vec<Scenario> {
    [1.0, 3.0, 5.0]
        .iter()
        .map(|e| Scenario::preset(format!("eps_inv_{e}"), *e, 2.0, 2.0))
        .collect()
}

/// Scenario family varying the contagious window at fixed transmissibility
/// (`gamma_inv` in 2, 5, 8 days, R0 = 2).
pub fn fig4_presets() -> Vec<Scenario> {
    [2.0, 5.0, 8.0]
        .iter()
        .map(|g| Scenario::preset(format!("gamma_inv_{g}"), 3.0, *g, 2.0))
        .collect()
}

/// Scenario family varying transmissibility (R0 in 2..6).
pub fn fig5_presets() -> Vec<Scenario> {
    [2.0, 3.0, 4.0, 5.0, 6.0]
        .iter()
        .map(|r| Scenario::preset(format!("r0_{r}"), 3.0, 2.0, *r))
        .collect()
}

/// Uniform grid helper (inclusive of both ends, within rounding).
pub fn grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).round() as usize;
    (0..=n).map(|i| lo + step * i as f64).collect()
}

/// Default testing-delay grid: 0 to 6 days, step 0.05.
pub fn default_delay_grid() -> Vec<f64> {
    grid(0.0, 6.0, 0.05)
}

/// Default uptake grid: 0 to 1, step 0.005.
pub fn default_alpha_grid() -> Vec<f64> {
    grid(0.0, 1.0, 0.005)
}

/// Bisection tolerance for boundary curves.
pub const ALPHA_TOLERANCE: f64 = 1e-4;

/// Smallest app uptake controlling the epidemic at the given delay, or
/// `None` when even full uptake cannot control it.
///
/// The margin is monotone nondecreasing in `alpha` (checked on a probe grid
/// before bisecting).
pub fn min_alpha_for_control(scenario: &Scenario, mu_t: f64) -> Result<Option<f64>> {
    let probs = scenario.probabilities(mu_t)?;
    min_alpha_with_probs(scenario, &probs)
}

pub fn min_alpha_with_probs(
    scenario: &Scenario,
    probs: &AlertProbabilities,
) -> Result<Option<f64>> {
    let controlled = |alpha: f64| -> Result<bool> {
        Ok(scenario.margin(probs, alpha)? > 0.0)
    };
    // guard against a non-monotone margin (sign pattern +,-,+)
    let mut seen_controlled = false;
    for i in 0..=20 {
        let ok = controlled(i as f64 / 20.0)?;
        if seen_controlled && !ok {
            return Err(Error::Inconsistency(format!(
                "margin not monotone in alpha for scenario {} at mu_t = {}",
                scenario.id, 0.05 * i as f64
            )));
        }
        seen_controlled |= ok;
    }
    if controlled(0.0)? {
        return Ok(Some(0.0));
    }
    if !controlled(1.0)? {
        return Ok(None);
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi - lo > ALPHA_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if controlled(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}

/// Minimal uptake when `theta + psi` is held fixed instead of scaling with
/// `alpha`; used for the instantaneous-tracing limit.
pub fn min_alpha_fixed_rates(
    beta: f64,
    gamma: f64,
    theta: f64,
    psi: f64,
) -> Result<Option<f64>> {
    let controlled = |alpha: f64| -> Result<bool> {
        Ok(condition_c1(alpha, beta, gamma, theta, psi)? > 0.0)
    };
    if controlled(0.0)? {
        return Ok(Some(0.0));
    }
    if !controlled(1.0)? {
        return Ok(None);
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi - lo > ALPHA_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if controlled(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}

/// Boundary of the controlled region: minimal uptake per testing delay.
#[derive(Debug, Clone)]
pub struct BoundaryCurve {
    pub scenario_id: String,
    pub points: Vec<(f64, Option<f64>)>,
}

pub fn boundary_curve(scenario: &Scenario, delay_grid: &[f64]) -> Result<BoundaryCurve> {
    if delay_grid.is_empty() {
        return Err(Error::Config("empty delay grid".into()));
    }
    let points: Result<Vec<(f64, Option<f64>)>> = delay_grid
        .par_iter()
        .map(|mu_t| Ok((*mu_t, min_alpha_for_control(scenario, *mu_t)?)))
        .collect();
    Ok(BoundaryCurve {
        scenario_id: scenario.id.clone(),
        points: points?,
    })
}

/// Controlled/uncontrolled verdicts over a (delay, uptake) grid, row-major
/// by delay.
#[derive(Debug, Clone)]
pub struct ControllabilityGrid {
    pub scenario_id: String,
    pub delays: Vec<f64>,
    pub alphas: Vec<f64>,
    /// `controlled[i][j]` for delay `i`, alpha `j`.
    pub controlled: Vec<Vec<bool>>,
}

pub fn controllability_grid(
    scenario: &Scenario,
    alpha_grid: &[f64],
    delay_grid: &[f64],
) -> Result<ControllabilityGrid> {
    if alpha_grid.is_empty() || delay_grid.is_empty() {
        return Err(Error::Config("grids must be nonempty and sorted".into()));
    }
    if alpha_grid.windows(2).any(|w| w[1] <= w[0])
        || delay_grid.windows(2).any(|w| w[1] <= w[0])
    {
        return Err(Error::Config("grids must be strictly increasing".into()));
    }
    let controlled: Result<Vec<Vec<bool>>> = delay_grid
        .par_iter()
        .map(|mu_t| {
            let probs = scenario.probabilities(*mu_t)?;
            alpha_grid
                .iter()
                .map(|alpha| Ok(scenario.margin(&probs, *alpha)? > 0.0))
                .collect()
        })
        .collect();
    Ok(ControllabilityGrid {
        scenario_id: scenario.id.clone(),
        delays: delay_grid.to_vec(),
        alphas: alpha_grid.to_vec(),
        controlled: controlled?,
    })
}

/// Alert probabilities tabulated along a delay grid.
pub fn alert_probability_curve(
    scenario: &Scenario,
    delay_grid: &[f64],
) -> Result<Vec<(f64, AlertProbabilities)>> {
    if delay_grid.is_empty() {
        return Err(Error::Config("empty delay grid".into()));
    }
    delay_grid
        .par_iter()
        .map(|mu_t| Ok((*mu_t, scenario.probabilities(*mu_t)?)))
        .collect()
}

/// CSV serializers. `fmt` renders floats (9 significant digits in the CLI).
pub fn boundary_csv(curves: &[BoundaryCurve], fmt: impl Fn(f64) -> String) -> String {
    let mut out = String::from("scenario_id,mu_T,alpha_min\n");
    for curve in curves {
        for (mu_t, alpha) in &curve.points {
            let a = alpha.map(&fmt).unwrap_or_default();
            let _ = writeln!(out, "{},{},{}", curve.scenario_id, fmt(*mu_t), a);
        }
    }
    out
}

pub fn grid_csv(grids: &[ControllabilityGrid], fmt: impl Fn(f64) -> String) -> String {
    let mut out = String::from("scenario_id,mu_T,alpha,controlled\n");
    for g in grids {
        for (i, mu_t) in g.delays.iter().enumerate() {
            for (j, alpha) in g.alphas.iter().enumerate() {
                let _ = writeln!(
                    out,
                    "{},{},{},{}",
                    g.scenario_id,
                    fmt(*mu_t),
                    fmt(*alpha),
                    u8::from(g.controlled[i][j])
                );
            }
        }
    }
    out
}

pub fn curve_csv(
    rows: &[(f64, AlertProbabilities)],
    fmt: impl Fn(f64) -> String,
) -> String {
    let mut out = String::from("mu_T,p_E,p_I,p_R\n");
    for (mu_t, p) in rows {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            fmt(*mu_t),
            fmt(p.p_e),
            fmt(p.p_i),
            fmt(p.p_r)
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Closed-form root of the quadratic `alpha^2 - (1 - 1/R0) alpha -
    /// gamma (1 - gamma/beta) / ((p_E + p_I) beta) = 0`; the independent
    /// algebraic route to the bisection result.
    fn quadratic_alpha_oracle(scenario: &Scenario, probs: &AlertProbabilities) -> f64 {
        let beta = scenario.beta;
        let gamma = scenario.gamma();
        let p = probs.p_e + probs.p_i;
        let b = 1.0 - 1.0 / scenario.r0;
        let c = gamma * (1.0 - gamma / beta) / (p * beta);
        0.5 * (b + (b * b + 4.0 * c).sqrt())
    }

    fn exact_preset(id: &str, eps_inv: f64, gamma_inv: f64, r0: f64) -> Scenario {
        Scenario::new(
            id,
            eps_inv,
            gamma_inv,
            Some(r0),
            None,
            (0.5, 0.5, 0.0),
            Mode::Exact,
        )
        .unwrap()
    }

    #[test]
    fn uptake_thresholds_at_instant_testing() {
        let s = exact_preset("r0_2", 3.0, 2.0, 2.0);
        let probs = s.probabilities(0.0).unwrap();
        let alpha = min_alpha_with_probs(&s, &probs).unwrap().unwrap();
        assert!((0.78..=0.84).contains(&alpha), "alpha_min = {alpha}");
        let oracle = quadratic_alpha_oracle(&s, &probs);
        assert!((alpha - oracle).abs() < 1e-4, "{alpha} vs oracle {oracle}");

        let s = exact_preset("r0_4", 3.0, 2.0, 4.0);
        let probs = s.probabilities(0.0).unwrap();
        let alpha = min_alpha_with_probs(&s, &probs).unwrap().unwrap();
        assert!((0.93..=0.97).contains(&alpha), "alpha_min = {alpha}");
        let oracle = quadratic_alpha_oracle(&s, &probs);
        assert!((alpha - oracle).abs() < 1e-4, "{alpha} vs oracle {oracle}");
    }

    #[test]
    fn subcritical_needs_no_tracing() {
        let s = Scenario::preset("r0_half", 3.0, 2.0, 0.5);
        assert_eq!(min_alpha_for_control(&s, 1.0).unwrap(), Some(0.0));
    }

    #[test]
    fn alpha_min_nondecreasing_in_delay() {
        for s in fig5_presets() {
            let mut last = Some(0.0);
            for mu_t in grid(0.0, 5.0, 0.5) {
                let cur = min_alpha_for_control(&s, mu_t).unwrap();
                match (last, cur) {
                    (Some(a), Some(b)) => assert!(
                        b >= a - ALPHA_TOLERANCE,
                        "{}: alpha_min dropped {a} -> {b} at mu_t {mu_t}",
                        s.id
                    ),
                    (None, Some(_)) => panic!("{}: regained control at mu_t {mu_t}", s.id),
                    _ => {}
                }
                last = cur;
            }
        }
    }

    #[test]
    fn margin_monotone_in_alpha() {
        for s in fig3_presets().into_iter().chain(fig4_presets()) {
            let probs = s.probabilities(1.5).unwrap();
            let mut last = f64::NEG_INFINITY;
            for alpha in grid(0.0, 1.0, 0.01) {
                let m = s.margin(&probs, alpha).unwrap();
                assert!(m >= last, "{}: margin decreased at alpha {alpha}", s.id);
                last = m;
            }
        }
    }

    #[test]
    fn region_nesting_fig3() {
        let alphas = grid(0.0, 1.0, 0.02);
        let delays = grid(0.0, 6.0, 0.25);
        let grids: Vec<_> = fig3_presets()
            .iter()
            .map(|s| controllability_grid(s, &alphas, &delays).unwrap())
            .collect();
        // region grows with the latent period
        for pair in grids.windows(2) {
            for (row_a, row_b) in pair[0].controlled.iter().zip(pair[1].controlled.iter()) {
                for (a, b) in row_a.iter().zip(row_b.iter()) {
                    assert!(!a || *b, "nesting violated");
                }
            }
        }
    }

    #[test]
    fn epsilon_does_not_move_the_boundary() {
        // k0's sign does not involve epsilon: at fixed theta, psi the verdict
        // is unchanged when epsilon varies
        for eps in [0.2, 0.5, 1.0] {
            let p = crate::stability::linear_params(0.6, 1.0, 0.5, eps, 0.3, 0.2);
            let k = crate::stability::char_poly_coeffs(&p);
            let margin = condition_c1(0.6, 1.0, 0.5, 0.3, 0.2).unwrap();
            assert_eq!(k[4] > 0.0, margin > 0.0);
        }
    }

    #[test]
    fn curve_rows_partition() {
        let s = Scenario::preset("covid", 3.0, 2.0, 2.0);
        let rows = alert_probability_curve(&s, &grid(0.0, 6.0, 0.5)).unwrap();
        for (mu_t, p) in rows {
            p.validate().unwrap();
            if mu_t < 2.0 {
                assert!(p.p_e >= p.p_i.max(p.p_r), "mu_t {mu_t}");
            }
        }
    }

    #[test]
    fn csv_schemas() {
        let s = Scenario::preset("x", 3.0, 2.0, 2.0);
        let delays = grid(0.0, 1.0, 0.5);
        let alphas = grid(0.0, 1.0, 0.5);
        let f = |v: f64| format!("{v}");
        let b = boundary_csv(&[boundary_curve(&s, &delays).unwrap()], f);
        assert!(b.starts_with("scenario_id,mu_T,alpha_min\n"));
        let g = grid_csv(&[controllability_grid(&s, &alphas, &delays).unwrap()], f);
        assert!(g.starts_with("scenario_id,mu_T,alpha,controlled\n"));
        assert_eq!(g.lines().count(), 1 + 3 * 3);
        let c = curve_csv(&alert_probability_curve(&s, &delays).unwrap(), f);
        assert!(c.starts_with("mu_T,p_E,p_I,p_R\n"));
        // uncontrollable cells serialize as an empty alpha_min
        let hopeless = Scenario::preset("r0_9", 1.0, 2.0, 9.0);
        let b = boundary_csv(&[boundary_curve(&hopeless, &[6.0]).unwrap()], f);
        assert!(b.lines().nth(1).unwrap().ends_with(','));
    }
}
