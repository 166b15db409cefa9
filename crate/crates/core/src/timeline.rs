//! Notification-timeline analysis.
//!
//! Given the latent period `L`, the infectious-but-asymptomatic period `C`
//! and the testing delay `T`, derives the distribution of the notification
//! lag `A = C' + T` (with `C'` the residual of `C`), the alert probabilities
//! `p_E`, `p_I`, `p_R`, and the removal rates `theta = p_E * alpha * beta`,
//! `psi = p_I * alpha * beta`.

use crate::dist::{simpson, std_normal_cdf, DurationDistribution};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Computation mode for the timeline quantities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    /// Grid-based distribution algebra; works for any duration specs.
    #[serde(rename = "exact")]
    Exact,
    /// Closed-form normal algebra: `A` is approximated as a normal with the
    /// residual's exact mean and variance. Requires all three durations to
    /// be closed-form normal.
    #[serde(rename = "normal-approx")]
    NormalApprox,
}

/// The three durations driving the notification timeline.
#[derive(Debug, Clone)]
pub struct TimelineSpec {
    pub latent: DurationDistribution,
    pub contagious: DurationDistribution,
    pub testing_delay: DurationDistribution,
    pub mode: Mode,
}

impl TimelineSpec {
    pub fn new(
        latent: DurationDistribution,
        contagious: DurationDistribution,
        testing_delay: DurationDistribution,
        mode: Mode,
    ) -> Result<Self> {
        latent.validate()?;
        contagious.validate()?;
        testing_delay.validate()?;
        if mode == Mode::NormalApprox {
            for (name, d) in [
                ("latent", &latent),
                ("contagious", &contagious),
                ("testing_delay", &testing_delay),
            ] {
                if !matches!(d, DurationDistribution::Normal { .. }) {
                    return Err(Error::Config(format!(
                        "normal-approximation mode requires closed-form normal durations; {name} is not"
                    )));
                }
            }
        }
        Ok(Self {
            latent,
            contagious,
            testing_delay,
            mode,
        })
    }
}

/// Probabilities that an alerted contact is still exposed, already
/// infectious, or already removed when the notification arrives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlertProbabilities {
    pub p_e: f64,
    pub p_i: f64,
    pub p_r: f64,
}

impl AlertProbabilities {
    pub fn validate(&self) -> Result<()> {
        for (name, p) in [("p_E", self.p_e), ("p_I", self.p_i), ("p_R", self.p_r)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Numerical(format!("{name} = {p} outside [0, 1]")));
            }
        }
        let sum = self.p_e + self.p_i + self.p_r;
        if (sum - 1.0).abs() > 1e-6 {
            return Err(Error::Numerical(format!(
                "alert probabilities sum to {sum}, expected 1 +/- 1e-6"
            )));
        }
        Ok(())
    }
}

/// Removal rates for tracked exposed (`theta`) and tracked infectious
/// (`psi`), in 1/days.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivedRates {
    pub theta: f64,
    pub psi: f64,
}

/// Mean and variance of the residual contagious window `C'`.
///
/// Uses the nonnegative-variable moment identities `E[C'] = E[C^2]/(2 E[C])`
/// and `E[C'^2] = E[C^3]/(3 E[C])`, exact in closed form for a normal `C`
/// with negligible sub-zero mass.
pub fn residual_moments_normal(mu: f64, sigma: f64) -> (f64, f64) {
    let m2 = mu * mu + sigma * sigma;
    let m3 = mu * mu * mu + 3.0 * mu * sigma * sigma;
    let mean = m2 / (2.0 * mu);
    let var = m3 / (3.0 * mu) - mean * mean;
    (mean, var)
}

/// Distribution of the notification lag `A = C' + T`.
pub fn notification_time(spec: &TimelineSpec) -> Result<DurationDistribution> {
    match spec.mode {
        Mode::Exact => spec.contagious.residual()?.sum_of(&spec.testing_delay),
        Mode::NormalApprox => {
            let DurationDistribution::Normal { mu, sigma } = spec.contagious else {
                return Err(Error::Config("contagious period must be normal".into()));
            };
            let DurationDistribution::Normal {
                mu: mu_t,
                sigma: sigma_t,
            } = spec.testing_delay
            else {
                return Err(Error::Config("testing delay must be normal".into()));
            };
            let (m, v) = residual_moments_normal(mu, sigma);
            DurationDistribution::normal(m + mu_t, (v + sigma_t * sigma_t).sqrt())
        }
    }
}

/// Alert probabilities for the given timeline.
///
/// `p_E = P(W < 0)` and `p_I = integral_0^inf f_W(w) P(C > w) dw`, where
/// `W = A - L` and `C` is the contact's own contagious window, independent
/// of the residual inside `A`. `p_R` completes the partition to 1 (its
/// direct form `P(W - C > 0)` is available via
/// [`removed_probability_direct`] as a cross-check).
pub fn alert_probabilities(spec: &TimelineSpec) -> Result<AlertProbabilities> {
    let a = notification_time(spec)?;
    let w = a.diff_of(&spec.latent)?;
    let (p_e, p_i) = match &w {
        DurationDistribution::Grid(g) => {
            let p_e = g.cdf_at(0.0) / g.mass();
            let c = spec.contagious.clone();
            let p_i = g.weighted_integral_from(0.0, |t| c.ccdf(t));
            (p_e, p_i)
        }
        DurationDistribution::Normal { mu, sigma } => {
            let p_e = std_normal_cdf(-mu / sigma);
            let p_i = normal_weighted_tail(*mu, *sigma, |t| spec.contagious.ccdf(t));
            (p_e, p_i)
        }
        other => {
            return Err(Error::Numerical(format!(
                "unexpected distribution for W: {other:?}"
            )))
        }
    };
    let probs = AlertProbabilities {
        p_e: p_e.clamp(0.0, 1.0),
        p_i: p_i.clamp(0.0, 1.0),
        p_r: (1.0 - p_e - p_i).clamp(0.0, 1.0),
    };
    probs.validate()?;
    Ok(probs)
}

/// Direct evaluation of `P(W - C > 0)`; used as an independent check of the
/// complement-based `p_R`.
pub fn removed_probability_direct(spec: &TimelineSpec) -> Result<f64> {
    let a = notification_time(spec)?;
    let w = a.diff_of(&spec.latent)?;
    match (&w, &spec.contagious) {
        (
            DurationDistribution::Normal { mu, sigma },
            DurationDistribution::Normal {
                mu: mu_c,
                sigma: sigma_c,
            },
        ) => Ok(std_normal_cdf(
            (mu - mu_c) / (sigma * sigma + sigma_c * sigma_c).sqrt(),
        )),
        _ => {
            let v = w.diff_of(&spec.contagious)?;
            Ok(v.ccdf(0.0))
        }
    }
}

/// `integral_0^inf phi_{mu,sigma}(w) * weight(w) dw` by fine fixed-step
/// Simpson over the normal's effective support.
fn normal_weighted_tail(mu: f64, sigma: f64, weight: impl Fn(f64) -> f64) -> f64 {
    let lo: f64 = 0.0;
    let hi = (mu + 10.0 * sigma).max(lo + sigma);
    let n = 4000;
    let h = (hi - lo) / n as f64;
    let norm = 1.0 / (sigma * (2.0 * std::f64::consts::PI).sqrt());
    let vals: Vec<f64> = (0..=n)
        .map(|i| {
            let t = lo + h * i as f64;
            let z = (t - mu) / sigma;
            norm * (-0.5 * z * z).exp() * weight(t)
        })
        .collect();
    simpson(&vals, h)
}

/// Removal rates from alert probabilities, app uptake and contact rate.
pub fn removal_rates(probs: &AlertProbabilities, alpha: f64, beta: f64) -> Result<DerivedRates> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Config(format!("alpha = {alpha} outside [0, 1]")));
    }
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::Config(format!("beta must be positive, got {beta}")));
    }
    probs.validate()?;
    Ok(DerivedRates {
        theta: probs.p_e * alpha * beta,
        psi: probs.p_i * alpha * beta,
    })
}

/// The reference COVID-19 timeline: `L ~ N(3, 0.5)`, `C ~ N(2, 0.5)`
/// and `T ~ N(mu_t, sigma_t)` (point mass when `sigma_t == 0`).
pub fn covid_timeline(mu_t: f64, sigma_t: f64, mode: Mode) -> Result<TimelineSpec> {
    let t = if sigma_t == 0.0 {
        DurationDistribution::point_mass(mu_t)?
    } else {
        DurationDistribution::normal(mu_t, sigma_t)?
    };
    TimelineSpec::new(
        DurationDistribution::normal(3.0, 0.5)?,
        DurationDistribution::normal(2.0, 0.5)?,
        t,
        mode,
    )
}
