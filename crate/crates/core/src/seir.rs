//! Deterministic 7-compartment SEIR dynamics with digital contact tracing.
//!
//! Compartments: untracked susceptible/exposed/infectious (`S_U`, `E_U`,
//! `I_U`), their tracked counterparts (`S_T`, `E_T`, `I_T`) and a shared
//! removed pool `R`. Tracked exposed and infectious are additionally removed
//! through notifications at rates `theta` and `psi` per tracked infectious
//! person.
//!
//! Compartments are stored as fractions of the population internally; `N`
//! enters only at the interface, so `beta` keeps its 1/days units. The
//! infection flux uses the current susceptible fractions; at `t = 0` with
//! `s_u = 1 - alpha`, `s_t = alpha` it reduces to the linearized system
//! analyzed in [`crate::stability`].

use crate::error::{Error, Result};
use std::fmt::Write as _;

/// Model rates plus the population size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpidemicParams {
    /// Effective contact rate, 1/days.
    pub beta: f64,
    /// Rate from contagious to removed (1/E[C]), 1/days.
    pub gamma: f64,
    /// Rate from exposed to contagious (1/E[L]), 1/days.
    pub epsilon: f64,
    /// Fraction of the population running the tracing app.
    pub alpha: f64,
    /// Notification removal rate for tracked exposed, 1/days.
    pub theta: f64,
    /// Notification removal rate for tracked infectious, 1/days.
    pub psi: f64,
    /// Population size, persons.
    pub population: f64,
}

impl EpidemicParams {
    pub fn new(
        beta: f64,
        gamma: f64,
        epsilon: f64,
        alpha: f64,
        theta: f64,
        psi: f64,
        population: f64,
    ) -> Result<Self> {
        for (name, v) in [("beta", beta), ("gamma", gamma), ("epsilon", epsilon)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [("theta", theta), ("psi", psi)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!(
                    "{name} must be nonnegative, got {v}"
                )));
            }
        }
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::Config(format!("alpha = {alpha} outside [0, 1]")));
        }
        if !(population > 0.0 && population.is_finite()) {
            return Err(Error::Config(format!(
                "population must be positive, got {population}"
            )));
        }
        Ok(Self {
            beta,
            gamma,
            epsilon,
            alpha,
            theta,
            psi,
            population,
        })
    }

    /// Rates derived from a timeline: `gamma = 1/E[C]`, `epsilon = 1/E[L]`,
    /// `theta`/`psi` from the alert probabilities.
    pub fn from_timeline(
        spec: &crate::timeline::TimelineSpec,
        beta: f64,
        alpha: f64,
        population: f64,
    ) -> Result<Self> {
        let gamma = 1.0 / spec.contagious.mean();
        let epsilon = 1.0 / spec.latent.mean();
        // consistency of the rate/duration correspondence
        if (gamma * spec.contagious.mean() - 1.0).abs() > 1e-9
            || (epsilon * spec.latent.mean() - 1.0).abs() > 1e-9
        {
            return Err(Error::Config(
                "rate/duration consistency check failed".into(),
            ));
        }
        let probs = crate::timeline::alert_probabilities(spec)?;
        let rates = crate::timeline::removal_rates(&probs, alpha, beta)?;
        Self::new(
            beta,
            gamma,
            epsilon,
            alpha,
            rates.theta,
            rates.psi,
            population,
        )
    }

    pub fn r0(&self) -> f64 {
        self.beta / self.gamma
    }
}

/// Population split across the seven compartments, in persons.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompartmentState {
    pub s_u: f64,
    pub e_u: f64,
    pub i_u: f64,
    pub s_t: f64,
    pub e_t: f64,
    pub i_t: f64,
    pub r: f64,
}

pub const COMPARTMENT_NAMES: [&str; 7] = ["S_U", "E_U", "I_U", "S_T", "E_T", "I_T", "R"];

impl CompartmentState {
    pub fn as_array(&self) -> [f64; 7] {
        [
            self.s_u, self.e_u, self.i_u, self.s_t, self.e_t, self.i_t, self.r,
        ]
    }

    pub fn from_array(a: [f64; 7]) -> Self {
        Self {
            s_u: a[0],
            e_u: a[1],
            i_u: a[2],
            s_t: a[3],
            e_t: a[4],
            i_t: a[5],
            r: a[6],
        }
    }

    pub fn total(&self) -> f64 {
        self.as_array().iter().sum()
    }

    pub fn infectious(&self) -> f64 {
        self.i_u + self.i_t
    }

    pub fn validate(&self, population: f64) -> Result<()> {
        if self.as_array().iter().any(|v| *v < 0.0 || !v.is_finite()) {
            return Err(Error::Config(format!(
                "compartments must be nonnegative and finite: {self:?}"
            )));
        }
        if (self.total() - population).abs() > 1e-6 * population {
            return Err(Error::Config(format!(
                "compartments sum to {}, expected {population}",
                self.total()
            )));
        }
        Ok(())
    }
}

/// Initial condition: susceptibles split `alpha : 1 - alpha` between tracked
/// and untracked, with `seed_exposed` persons split the same way between
/// `E_T` and `E_U`.
pub fn initial_state(population: f64, alpha: f64, seed_exposed: f64) -> Result<CompartmentState> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Config(format!("alpha = {alpha} outside [0, 1]")));
    }
    if !(seed_exposed >= 0.0) || seed_exposed > population {
        return Err(Error::Config(format!(
            "seed_exposed = {seed_exposed} outside [0, N = {population}]"
        )));
    }
    let sus = population - seed_exposed;
    Ok(CompartmentState {
        s_u: (1.0 - alpha) * sus,
        e_u: (1.0 - alpha) * seed_exposed,
        i_u: 0.0,
        s_t: alpha * sus,
        e_t: alpha * seed_exposed,
        i_t: 0.0,
        r: 0.0,
    })
}

/// Time derivative of the state, persons per day. The component-wise sum of
/// the returned rates is zero by construction.
pub fn derivative(state: &CompartmentState, params: &EpidemicParams) -> CompartmentState {
    let n = params.population;
    let x = state.as_array().map(|v| v / n);
    let rates = fraction_derivative(&x, params);
    CompartmentState::from_array(rates.map(|v| v * n))
}

fn fraction_derivative(x: &[f64; 7], p: &EpidemicParams) -> [f64; 7] {
    let [s_u, e_u, i_u, s_t, e_t, i_t, _r] = *x;
    let infectious = i_u + i_t;
    let inf_u = p.beta * s_u * infectious;
    let inf_t = p.beta * s_t * infectious;
    // notification removals are driven by tracked infectious cases
    let notif_e = p.theta * i_t;
    let notif_i = p.psi * i_t;
    [
        -inf_u,
        inf_u - p.epsilon * e_u,
        p.epsilon * e_u - p.gamma * i_u,
        -inf_t,
        inf_t - p.epsilon * e_t - notif_e,
        p.epsilon * e_t - p.gamma * i_t - notif_i,
        p.gamma * i_u + (p.gamma) * i_t + notif_e + notif_i,
    ]
}

/// A solved trajectory on a strictly increasing time grid.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<CompartmentState>,
}

impl Trajectory {
    pub fn peak_infectious_fraction(&self, population: f64) -> f64 {
        self.states
            .iter()
            .map(|s| s.infectious() / population)
            .fold(0.0, f64::max)
    }

    pub fn final_state(&self) -> &CompartmentState {
        self.states.last().expect("trajectory is never empty")
    }

    /// CSV with columns `t,S_U,E_U,I_U,S_T,E_T,I_T,R`.
    pub fn to_csv(&self, fmt: impl Fn(f64) -> String) -> String {
        let mut out = String::new();
        out.push_str("t,S_U,E_U,I_U,S_T,E_T,I_T,R\n");
        for (t, s) in self.times.iter().zip(self.states.iter()) {
            let row = s.as_array();
            let _ = write!(out, "{}", fmt(*t));
            for v in row {
                let _ = write!(out, ",{}", fmt(v));
            }
            out.push('\n');
        }
        out
    }
}

/// Default integrator step, days.
pub const DEFAULT_DT: f64 = 0.01;

/// Classical fixed-step 4th-order integration of the tracked SEIR system.
///
/// `output_every` thins the stored trajectory (1 = every step). Conservation
/// is checked at every step; undershoots beyond `-1e-9 * N` abort with an
/// integration error, smaller ones are clamped to zero.
pub fn integrate(
    params: &EpidemicParams,
    init: &CompartmentState,
    t_end: f64,
    dt: f64,
    output_every: usize,
) -> Result<Trajectory> {
    if !(dt > 0.0 && t_end > 0.0) {
        return Err(Error::Config(format!(
            "need positive dt and t_end, got dt={dt}, t_end={t_end}"
        )));
    }
    init.validate(params.population)?;
    let thin = output_every.max(1);
    let n_steps = (t_end / dt).ceil() as usize;
    let mut x = init.as_array().map(|v| v / params.population);
    let mut times = Vec::with_capacity(n_steps / thin + 2);
    let mut states = Vec::with_capacity(n_steps / thin + 2);
    times.push(0.0);
    states.push(*init);

    for step in 1..=n_steps {
        let h = dt.min(t_end - dt * (step - 1) as f64);
        let k1 = fraction_derivative(&x, params);
        let k2 = fraction_derivative(&add_scaled(&x, &k1, 0.5 * h), params);
        let k3 = fraction_derivative(&add_scaled(&x, &k2, 0.5 * h), params);
        let k4 = fraction_derivative(&add_scaled(&x, &k3, h), params);
        for i in 0..7 {
            x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        for v in &mut x {
            if *v < 0.0 {
                if *v < -1e-9 {
                    return Err(Error::Integration(format!(
                        "compartment undershoot {v} at t = {}; try a smaller dt",
                        dt * step as f64
                    )));
                }
                *v = 0.0;
            }
        }
        let total: f64 = x.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Integration(format!(
                "conservation violated (sum = {total}) at t = {}; try a smaller dt",
                dt * step as f64
            )));
        }
        if step % thin == 0 || step == n_steps {
            times.push((dt * step as f64).min(t_end));
            states.push(CompartmentState::from_array(
                x.map(|v| v * params.population),
            ));
        }
    }
    Ok(Trajectory { times, states })
}

fn add_scaled(x: &[f64; 7], k: &[f64; 7], h: f64) -> [f64; 7] {
    let mut out = *x;
    for i in 0..7 {
        out[i] += h * k[i];
    }
    out
}
