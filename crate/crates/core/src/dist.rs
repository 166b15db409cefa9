//! Algebra of random durations.
//!
//! Durations (latent period, contagious window, testing delay, notification
//! lag) are represented either in closed form (normal, exponential, point
//! mass) or as a density sampled on a uniform grid. The module provides the
//! three operations the timeline analysis needs: the residual-lifetime
//! transform, sums and differences of independent durations.
//!
//! Values are immutable after construction; every operation returns a fresh
//! distribution. Differences may have negative support (signed durations),
//! which is why grids carry an arbitrary lower bound.

use crate::error::{Error, Result};
use rand::Rng;
use rand_distr::Distribution as _;
use statrs::distribution::ContinuousCDF;

/// Default grid step in days.
pub const DEFAULT_GRID_STEP: f64 = 0.005;

/// Normal supports are truncated at `mu ± NORMAL_SUPPORT_SIGMAS * sigma`.
pub const NORMAL_SUPPORT_SIGMAS: f64 = 8.0;

/// One-sided supports are truncated at the `1 - ONE_SIDED_TAIL` quantile.
pub const ONE_SIDED_TAIL: f64 = 1e-8;

/// Standard normal CDF.
pub fn std_normal_cdf(z: f64) -> f64 {
    // statrs panics on non-finite input; the callers never produce NaN but
    // +/-inf can appear through sentinel arithmetic.
    if z == f64::INFINITY {
        return 1.0;
    }
    if z == f64::NEG_INFINITY {
        return 0.0;
    }
    statrs::distribution::Normal::new(0.0, 1.0).unwrap().cdf(z)
}

/// Composite Simpson integral of uniformly sampled values.
///
/// Handles an odd number of intervals by closing the last one with a
/// trapezoid; constructors keep interval counts even so this path is rare.
pub fn simpson(values: &[f64], step: f64) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let mut pairs_end = n;
    let mut tail = 0.0;
    if (n - 1) % 2 == 1 {
        tail = 0.5 * step * (values[n - 2] + values[n - 1]);
        pairs_end = n - 1;
    }
    let mut acc = 0.0;
    let mut i = 0;
    while i + 2 < pairs_end {
        acc += values[i] + 4.0 * values[i + 1] + values[i + 2];
        i += 2;
    }
    acc * step / 3.0 + tail
}

/// Probability density sampled on a uniform grid.
#[derive(Debug, Clone)]
pub struct GridDensity {
    lo: f64,
    step: f64,
    pdf: Vec<f64>,
    /// Cumulative trapezoid integral of `pdf`, same length.
    cdf: Vec<f64>,
}

impl GridDensity {
    pub fn new(lo: f64, step: f64, pdf: Vec<f64>) -> Result<Self> {
        if pdf.len() < 2 {
            return Err(Error::InvalidDistribution(
                "grid needs at least two points".into(),
            ));
        }
        if !(step > 0.0 && step.is_finite() && lo.is_finite()) {
            return Err(Error::InvalidDistribution(
                "grid step and origin must be finite, step > 0".into(),
            ));
        }
        if pdf.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidDistribution(
                "density must be finite and nonnegative".into(),
            ));
        }
        let mut cdf = Vec::with_capacity(pdf.len());
        let mut acc = 0.0;
        cdf.push(0.0);
        for w in pdf.windows(2) {
            acc += 0.5 * step * (w[0] + w[1]);
            cdf.push(acc);
        }
        Ok(Self { lo, step, pdf, cdf })
    }

    /// Simpson mass of the density over its support.
    pub fn mass(&self) -> f64 {
        simpson(&self.pdf, self.step)
    }

    /// Rescale so that `mass() == 1`.
    pub fn normalized(mut self) -> Result<Self> {
        let m = self.mass();
        if !(m.is_finite() && m > 0.0) {
            return Err(Error::InvalidDistribution(format!(
                "cannot normalize grid with mass {m}"
            )));
        }
        for v in &mut self.pdf {
            *v /= m;
        }
        for v in &mut self.cdf {
            *v /= m;
        }
        Ok(self)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.lo + self.step * (self.pdf.len() - 1) as f64
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn len(&self) -> usize {
        self.pdf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pdf.is_empty()
    }

    pub fn x(&self, i: usize) -> f64 {
        self.lo + self.step * i as f64
    }

    pub fn pdf(&self) -> &[f64] {
        &self.pdf
    }

    /// Density linearly interpolated at `t` (0 outside the support).
    pub fn pdf_at(&self, t: f64) -> f64 {
        if t < self.lo || t > self.hi() {
            return 0.0;
        }
        let u = (t - self.lo) / self.step;
        let i = (u.floor() as usize).min(self.pdf.len() - 2);
        let frac = u - i as f64;
        self.pdf[i] * (1.0 - frac) + self.pdf[i + 1] * frac
    }

    /// Trapezoid CDF linearly interpolated at `t`.
    pub fn cdf_at(&self, t: f64) -> f64 {
        if t <= self.lo {
            return 0.0;
        }
        if t >= self.hi() {
            return *self.cdf.last().unwrap();
        }
        let u = (t - self.lo) / self.step;
        let i = (u.floor() as usize).min(self.pdf.len() - 2);
        let frac = u - i as f64;
        // exact integral of the linear density segment up to t
        let f0 = self.pdf[i];
        let f1 = self.pdf[i + 1];
        let ft = f0 * (1.0 - frac) + f1 * frac;
        self.cdf[i] + 0.5 * self.step * frac * (f0 + ft)
    }

    /// First raw moment (Simpson).
    pub fn mean(&self) -> f64 {
        let vals: Vec<f64> = (0..self.pdf.len())
            .map(|i| self.x(i) * self.pdf[i])
            .collect();
        simpson(&vals, self.step) / self.mass()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        let vals: Vec<f64> = (0..self.pdf.len())
            .map(|i| (self.x(i) - m).powi(2) * self.pdf[i])
            .collect();
        simpson(&vals, self.step) / self.mass()
    }

    /// Integral of `pdf(t) * weight(t)` over `t >= t0`.
    ///
    /// Trapezoid with Richardson extrapolation on the full cells plus an
    /// exact split of the cell containing `t0`.
    pub fn weighted_integral_from(&self, t0: f64, weight: impl Fn(f64) -> f64) -> f64 {
        if t0 >= self.hi() {
            return 0.0;
        }
        let start = if t0 <= self.lo {
            0
        } else {
            ((t0 - self.lo) / self.step).ceil() as usize
        };
        let g: Vec<f64> = (start..self.pdf.len())
            .map(|i| self.pdf[i] * weight(self.x(i)))
            .collect();
        let fine = trapezoid(&g, self.step);
        let coarse: Vec<f64> = g.iter().step_by(2).copied().collect();
        let full = if coarse.len() >= 2 && g.len() % 2 == 1 {
            let t2 = trapezoid(&coarse, 2.0 * self.step);
            (4.0 * fine - t2) / 3.0
        } else {
            fine
        };
        // partial cell [t0, x(start))
        let mut partial = 0.0;
        if start > 0 && t0 > self.lo {
            let a = t0;
            let b = self.x(start);
            if b > a {
                let fa = self.pdf_at(a) * weight(a);
                let fb = self.pdf[start] * weight(b);
                partial = 0.5 * (b - a) * (fa + fb);
            }
        }
        full + partial
    }

    /// Inverse-CDF sampling with linear interpolation inside a cell.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let total = *self.cdf.last().unwrap();
        let u: f64 = rng.gen_range(0.0..total);
        let idx = match self
            .cdf
            .binary_search_by(|v| v.partial_cmp(&u).unwrap())
        {
            Ok(i) => i,
            Err(i) => i.saturating_sub(1),
        };
        let i = idx.min(self.pdf.len() - 2);
        let seg = self.cdf[i + 1] - self.cdf[i];
        let frac = if seg > 0.0 { (u - self.cdf[i]) / seg } else { 0.5 };
        self.x(i) + frac * self.step
    }

    /// Discrete convolution of two densities on grids with equal steps.
    pub fn convolve(&self, other: &GridDensity) -> Result<GridDensity> {
        if (self.step - other.step).abs() > 1e-12 * self.step {
            return Err(Error::InvalidDistribution(
                "convolution requires matching grid steps".into(),
            ));
        }
        let (n, m) = (self.pdf.len(), other.pdf.len());
        let n_out = n + m - 1;
        let mut out = vec![0.0; n_out];
        // trapezoid weights at the ends of each bin's effective range keep
        // the rule second-order even when a density is nonzero at a support
        // edge (e.g. a residual-lifetime density at zero)
        for (k, v) in out.iter_mut().enumerate() {
            let i_lo = k.saturating_sub(m - 1);
            let i_hi = (n - 1).min(k);
            let mut acc = 0.0;
            for i in i_lo..=i_hi {
                acc += self.pdf[i] * other.pdf[k - i];
            }
            if i_hi > i_lo {
                acc -= 0.5
                    * (self.pdf[i_lo] * other.pdf[k - i_lo]
                        + self.pdf[i_hi] * other.pdf[k - i_hi]);
            }
            *v = acc * self.step;
        }
        GridDensity::new(self.lo + other.lo, self.step, out)?.normalized()
    }

    /// Density of the negated variable.
    pub fn negated(&self) -> GridDensity {
        let mut pdf = self.pdf.clone();
        pdf.reverse();
        GridDensity::new(-self.hi(), self.step, pdf).expect("negation preserves validity")
    }

    pub fn shifted(&self, c: f64) -> GridDensity {
        let mut g = self.clone();
        g.lo += c;
        g
    }
}

fn trapezoid(values: &[f64], step: f64) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let inner: f64 = values[1..values.len() - 1].iter().sum();
    step * (0.5 * values[0] + inner + 0.5 * values[values.len() - 1])
}

/// Parameters of a normally distributed duration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalSpec {
    pub mu: f64,
    pub sigma: f64,
}

impl NormalSpec {
    pub fn new(mu: f64, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite() && mu.is_finite()) {
            return Err(Error::InvalidDistribution(format!(
                "normal spec requires finite mu and sigma > 0, got mu={mu}, sigma={sigma}"
            )));
        }
        Ok(Self { mu, sigma })
    }

    /// Probability mass below zero. A duration role requires this to be
    /// negligible (< 1e-3); the check is left to the caller as a diagnostic.
    pub fn sub_zero_mass(&self) -> f64 {
        std_normal_cdf(-self.mu / self.sigma)
    }

    pub fn dist(&self) -> DurationDistribution {
        DurationDistribution::Normal {
            mu: self.mu,
            sigma: self.sigma,
        }
    }
}

/// A random duration, in days.
#[derive(Debug, Clone)]
pub enum DurationDistribution {
    Normal { mu: f64, sigma: f64 },
    Exponential { rate: f64 },
    PointMass { value: f64 },
    Grid(GridDensity),
}

impl DurationDistribution {
    pub fn normal(mu: f64, sigma: f64) -> Result<Self> {
        Ok(NormalSpec::new(mu, sigma)?.dist())
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::InvalidDistribution(format!(
                "exponential rate must be positive, got {rate}"
            )));
        }
        Ok(Self::Exponential { rate })
    }

    pub fn point_mass(value: f64) -> Result<Self> {
        if !value.is_finite() {
            return Err(Error::InvalidDistribution(
                "point mass must be finite".into(),
            ));
        }
        Ok(Self::PointMass { value })
    }

    /// Uniform density on `[lo, hi]`, represented on a grid.
    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        if !(hi > lo) {
            return Err(Error::InvalidDistribution(format!(
                "uniform needs hi > lo, got [{lo}, {hi}]"
            )));
        }
        let n_intervals = ((hi - lo) / DEFAULT_GRID_STEP).ceil().max(2.0) as usize;
        let n_intervals = n_intervals + n_intervals % 2;
        let step = (hi - lo) / n_intervals as f64;
        let pdf = vec![1.0 / (hi - lo); n_intervals + 1];
        Ok(Self::Grid(GridDensity::new(lo, step, pdf)?))
    }

    pub fn mean(&self) -> f64 {
        match self {
            Self::Normal { mu, .. } => *mu,
            Self::Exponential { rate } => 1.0 / rate,
            Self::PointMass { value } => *value,
            Self::Grid(g) => g.mean(),
        }
    }

    pub fn variance(&self) -> f64 {
        match self {
            Self::Normal { sigma, .. } => sigma * sigma,
            Self::Exponential { rate } => 1.0 / (rate * rate),
            Self::PointMass { .. } => 0.0,
            Self::Grid(g) => g.variance(),
        }
    }

    pub fn cdf(&self, t: f64) -> f64 {
        match self {
            Self::Normal { mu, sigma } => std_normal_cdf((t - mu) / sigma),
            Self::Exponential { rate } => {
                if t <= 0.0 {
                    0.0
                } else {
                    1.0 - (-rate * t).exp()
                }
            }
            Self::PointMass { value } => {
                if t >= *value {
                    1.0
                } else {
                    0.0
                }
            }
            // the tabulated CDF can overshoot 1 by rounding in the last cell
            Self::Grid(g) => g.cdf_at(t).min(1.0),
        }
    }

    pub fn ccdf(&self, t: f64) -> f64 {
        1.0 - self.cdf(t)
    }

    /// Support bounds used for grid truncation.
    pub fn support(&self) -> (f64, f64) {
        match self {
            Self::Normal { mu, sigma } => (
                mu - NORMAL_SUPPORT_SIGMAS * sigma,
                mu + NORMAL_SUPPORT_SIGMAS * sigma,
            ),
            Self::Exponential { rate } => (0.0, -(ONE_SIDED_TAIL).ln() / rate),
            Self::PointMass { value } => (*value, *value),
            Self::Grid(g) => (g.lo(), g.hi()),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Self::Normal { mu, sigma } => {
                rand_distr::Normal::new(*mu, *sigma).unwrap().sample(rng)
            }
            Self::Exponential { rate } => rand_distr::Exp::new(*rate).unwrap().sample(rng),
            Self::PointMass { value } => *value,
            Self::Grid(g) => g.sample(rng),
        }
    }

    /// Sample `n` draws with a dedicated seeded generator.
    pub fn sample_n(&self, n: usize, seed: u64) -> Vec<f64> {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
        (0..n).map(|_| self.sample(&mut rng)).collect()
    }

    /// Project onto a uniform grid with the given step.
    pub fn to_grid(&self, step: f64) -> Result<GridDensity> {
        match self {
            Self::Grid(g) => {
                if (g.step() - step).abs() <= 1e-12 * step {
                    Ok(g.clone())
                } else {
                    resample(g, step)
                }
            }
            Self::PointMass { .. } => Err(Error::InvalidDistribution(
                "a point mass has no density; handle it as a shift".into(),
            )),
            Self::Normal { mu, sigma } => {
                let (lo, hi) = self.support();
                let n = even_intervals(lo, hi, step);
                let norm = 1.0 / (sigma * (2.0 * std::f64::consts::PI).sqrt());
                let pdf: Vec<f64> = (0..=n)
                    .map(|i| {
                        let t = lo + step * i as f64;
                        let z = (t - mu) / sigma;
                        norm * (-0.5 * z * z).exp()
                    })
                    .collect();
                GridDensity::new(lo, step, pdf)?.normalized()
            }
            Self::Exponential { rate } => {
                let (lo, hi) = self.support();
                let n = even_intervals(lo, hi, step);
                let pdf: Vec<f64> = (0..=n)
                    .map(|i| {
                        let t = lo + step * i as f64;
                        rate * (-rate * t).exp()
                    })
                    .collect();
                GridDensity::new(lo, step, pdf)?.normalized()
            }
        }
    }

    /// Mass below zero; a diagnostic for distributions used as durations.
    pub fn mass_below_zero(&self) -> f64 {
        self.cdf(0.0)
    }

    /// Residual-lifetime (equilibrium) transform: the remaining duration of
    /// an in-progress interval observed at a uniformly random time. Its CCDF
    /// is `(1/E[X]) * integral_t^inf CCDF_X(u) du`; the density is therefore
    /// proportional to the CCDF of the source.
    pub fn residual(&self) -> Result<Self> {
        let m = self.mean();
        if !(m.is_finite() && m > 0.0) {
            return Err(Error::InvalidDistribution(format!(
                "residual requires a finite positive mean, got {m}"
            )));
        }
        match self {
            // memoryless: the residual of an exponential is itself
            Self::Exponential { .. } => Ok(self.clone()),
            // the residual of a fixed duration is uniform over it
            Self::PointMass { value } => Self::uniform(0.0, *value),
            _ => {
                let (_, hi) = self.support();
                if !(hi > 0.0) {
                    return Err(Error::InvalidDistribution(
                        "residual requires support on positive durations".into(),
                    ));
                }
                let step = DEFAULT_GRID_STEP.min(hi / 16.0);
                let n = even_intervals(0.0, hi, step);
                let pdf: Vec<f64> = (0..=n).map(|i| self.ccdf(step * i as f64)).collect();
                Ok(Self::Grid(GridDensity::new(0.0, step, pdf)?.normalized()?))
            }
        }
    }

    /// Distribution of the sum of two independent durations.
    pub fn sum_of(&self, other: &Self) -> Result<Self> {
        use DurationDistribution::*;
        match (self, other) {
            (Normal { mu: m1, sigma: s1 }, Normal { mu: m2, sigma: s2 }) => Self::normal(
                m1 + m2,
                (s1 * s1 + s2 * s2).sqrt(),
            ),
            (PointMass { value: a }, PointMass { value: b }) => Self::point_mass(a + b),
            (PointMass { value }, d) | (d, PointMass { value }) => Ok(d.shift(*value)),
            (a, b) => {
                let step = grid_step_for(a).min(grid_step_for(b));
                let ga = a.to_grid(step)?;
                let gb = b.to_grid(step)?;
                Ok(Self::Grid(ga.convolve(&gb)?))
            }
        }
    }

    /// Distribution of the difference `self - other`. The result is a signed
    /// duration: its support may extend below zero.
    pub fn diff_of(&self, other: &Self) -> Result<Self> {
        self.sum_of(&other.negated()?)
    }

    pub fn negated(&self) -> Result<Self> {
        match self {
            Self::Normal { mu, sigma } => Self::normal(-mu, *sigma),
            Self::PointMass { value } => Self::point_mass(-value),
            Self::Exponential { .. } => {
                Ok(Self::Grid(self.to_grid(DEFAULT_GRID_STEP)?.negated()))
            }
            Self::Grid(g) => Ok(Self::Grid(g.negated())),
        }
    }

    fn shift(&self, c: f64) -> Self {
        match self {
            Self::Normal { mu, sigma } => Self::Normal {
                mu: mu + c,
                sigma: *sigma,
            },
            Self::PointMass { value } => Self::PointMass { value: value + c },
            Self::Exponential { .. } => {
                let g = self.to_grid(DEFAULT_GRID_STEP).expect("exp grids");
                Self::Grid(g.shifted(c))
            }
            Self::Grid(g) => Self::Grid(g.shifted(c)),
        }
    }

    /// Check the representation invariants; returns a description of the
    /// first violation.
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Normal { mu, sigma } => {
                NormalSpec::new(*mu, *sigma)?;
            }
            Self::Exponential { rate } => {
                Self::exponential(*rate)?;
            }
            Self::PointMass { value } => {
                Self::point_mass(*value)?;
            }
            Self::Grid(g) => {
                let m = g.mass();
                if (m - 1.0).abs() > 1e-6 {
                    return Err(Error::InvalidDistribution(format!(
                        "grid mass {m} outside 1 +/- 1e-6"
                    )));
                }
                if g.cdf.windows(2).any(|w| w[1] < w[0]) {
                    return Err(Error::InvalidDistribution("CDF not nondecreasing".into()));
                }
            }
        }
        if !self.mean().is_finite() || !self.variance().is_finite() {
            return Err(Error::InvalidDistribution(
                "mean and variance must be finite".into(),
            ));
        }
        Ok(())
    }
}

fn grid_step_for(d: &DurationDistribution) -> f64 {
    match d {
        DurationDistribution::Grid(g) => g.step(),
        _ => DEFAULT_GRID_STEP,
    }
}

fn even_intervals(lo: f64, hi: f64, step: f64) -> usize {
    let n = ((hi - lo) / step).ceil().max(2.0) as usize;
    n + n % 2
}

fn resample(g: &GridDensity, step: f64) -> Result<GridDensity> {
    let n = even_intervals(g.lo(), g.hi(), step);
    let pdf: Vec<f64> = (0..=n)
        .map(|i| g.pdf_at(g.lo() + step * i as f64))
        .collect();
    GridDensity::new(g.lo(), step, pdf)?.normalized()
}
