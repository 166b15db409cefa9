//! Controllability condition C1 and the linearized stability analysis.
//!
//! The infected subsystem `y = [E_U, I_U, E_T, I_T]` evolves as `y' = A y`
//! near the disease-free state. This module builds `A`, its characteristic
//! quartic, the Descartes sign analysis of the coefficients, and a numerical
//! eigenvalue solve used as an independent oracle for the closed-form
//! condition
//!
//! ```text
//! C1:  alpha - (1 + gamma / (theta + psi)) * (1 - gamma / beta) > 0
//! ```

use crate::error::{Error, Result};
use crate::seir::EpidemicParams;
use nalgebra::{Complex, Matrix4};

/// Margin of condition C1 (the left-hand side of the inequality).
///
/// When `theta + psi == 0` the condition degenerates: the epidemic is
/// controlled without tracing iff `beta <= gamma`, reported through infinity
/// sentinels so that sweep code can treat `alpha = 0` grid points uniformly.
pub fn condition_c1(alpha: f64, beta: f64, gamma: f64, theta: f64, psi: f64) -> Result<f64> {
    if !(beta > 0.0 && beta.is_finite()) || !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::Config(format!(
            "beta and gamma must be positive, got beta={beta}, gamma={gamma}"
        )));
    }
    if theta < 0.0 || psi < 0.0 {
        return Err(Error::Config("theta and psi must be nonnegative".into()));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Config(format!("alpha = {alpha} outside [0, 1]")));
    }
    let s = theta + psi;
    if s == 0.0 {
        return Ok(if beta <= gamma {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        });
    }
    Ok(alpha - (1.0 + gamma / s) * (1.0 - gamma / beta))
}

/// Jacobian of the infected subsystem at the disease-free state.
pub fn jacobian_matrix(p: &EpidemicParams) -> Matrix4<f64> {
    let (b, g, e, a, th, ps) = (p.beta, p.gamma, p.epsilon, p.alpha, p.theta, p.psi);
    Matrix4::new(
        -e,
        b * (1.0 - a),
        0.0,
        b * (1.0 - a),
        e,
        -g,
        0.0,
        0.0,
        0.0,
        b * a,
        -e,
        b * a - th,
        0.0,
        0.0,
        e,
        -g - ps,
    )
}

/// Coefficients `[k4, k3, k2, k1, k0]` of the monic characteristic quartic
/// of the Jacobian, in closed form.
///
/// `k2` matches the determinant expansion directly; the compact closed forms
/// for `k1` and `k0` carry overall positive factors `epsilon` and
/// `epsilon^2` relative to their shortest printed shapes (sign analysis is
/// unaffected). `k0` equals `det(A)`.
pub fn char_poly_coeffs(p: &EpidemicParams) -> [f64; 5] {
    let (b, g, e, a, th, ps) = (p.beta, p.gamma, p.epsilon, p.alpha, p.theta, p.psi);
    let k3 = 2.0 * e + 2.0 * g + ps;
    let k2 = -b * e + e * e + g * (g + ps) + e * (4.0 * g + 2.0 * ps + th);
    let k1 = e * (e * (2.0 * g + ps + th) + g * (2.0 * (g + ps) + th)
        - b * (e + g + ps - ps * a));
    let k0 = e * e * (-((b - g) * (g + ps + th)) + b * (ps + th) * a);
    [1.0, k3, k2, k1, k0]
}

/// Characteristic coefficients extracted from the matrix itself
/// (Faddeev-LeVerrier); the independent route used to cross-check
/// [`char_poly_coeffs`].
pub fn char_poly_from_matrix(m: &Matrix4<f64>) -> [f64; 5] {
    // p(x) = x^4 + c3 x^3 + c2 x^2 + c1 x + c0
    let mut mk = *m;
    let c3 = -mk.trace();
    mk = m * (mk + Matrix4::identity() * c3);
    let c2 = -mk.trace() / 2.0;
    mk = m * (mk + Matrix4::identity() * c2);
    let c1 = -mk.trace() / 3.0;
    mk = m * (mk + Matrix4::identity() * c1);
    let c0 = -mk.trace() / 4.0;
    [1.0, c3, c2, c1, c0]
}

/// Number of sign changes in a coefficient sequence, skipping zeros.
pub fn sign_changes(coeffs: &[f64]) -> usize {
    let mut changes = 0;
    let mut last = 0.0f64;
    for &c in coeffs {
        if c == 0.0 {
            continue;
        }
        if last != 0.0 && c.signum() != last.signum() {
            changes += 1;
        }
        last = c;
    }
    changes
}

/// Whether the coefficient signs satisfy the chain
/// `k0 > 0 => k1 > 0 => k2 > 0` (the feasible rows of the sign table; the
/// shaded rows are exactly its violations).
pub fn sign_pattern_feasible(coeffs: &[f64; 5]) -> bool {
    let [_, _, k2, k1, k0] = *coeffs;
    if k0 > 0.0 && (k1 <= 0.0 || k2 <= 0.0) {
        return false;
    }
    if k1 > 0.0 && k2 <= 0.0 {
        return false;
    }
    true
}

/// Eigenvalues of the infected-subsystem Jacobian and the largest real part.
pub fn eigen_stability(p: &EpidemicParams) -> Result<([Complex<f64>; 4], f64)> {
    let m = jacobian_matrix(p);
    let eig = m.complex_eigenvalues();
    let mut vals = [Complex::new(0.0, 0.0); 4];
    for (i, v) in eig.iter().enumerate() {
        if !v.re.is_finite() || !v.im.is_finite() {
            return Err(Error::Numerical(format!(
                "eigenvalue solve failed for params {p:?}"
            )));
        }
        vals[i] = *v;
    }
    vals.sort_by(|a, b| b.re.partial_cmp(&a.re).unwrap());
    let max_real = vals[0].re;
    Ok((vals, max_real))
}

/// Aggregated linearized-stability verdict.
#[derive(Debug, Clone)]
pub struct StabilityReport {
    pub c1_margin: f64,
    pub controlled: bool,
    pub k_coeffs: [f64; 5],
    pub eigenvalues: [Complex<f64>; 4],
    pub max_real_part: f64,
    pub sign_changes: usize,
}

/// Composes the closed-form condition, the coefficient analysis and the
/// numerical eigenvalues, asserting their mutual consistency.
pub fn stability_report(p: &EpidemicParams) -> Result<StabilityReport> {
    let margin = condition_c1(p.alpha, p.beta, p.gamma, p.theta, p.psi)?;
    let k = char_poly_coeffs(p);
    let (eigenvalues, max_real_part) = eigen_stability(p)?;
    let controlled = margin > 0.0;

    let k_det = char_poly_from_matrix(&jacobian_matrix(p));
    let scale = p.beta.max(p.gamma).max(p.epsilon).max(1.0).powi(4);
    for (a, b) in k.iter().zip(k_det.iter()) {
        if (a - b).abs() > 1e-9 * a.abs().max(b.abs()).max(scale * 1e-6) {
            return Err(Error::Inconsistency(format!(
                "closed-form coefficients {k:?} disagree with determinant route {k_det:?}"
            )));
        }
    }
    // sign agreement between the three routes, outside the boundary band
    let k0_compact = k[4] / (p.epsilon * p.epsilon);
    if margin.is_finite() && k0_compact.abs() > 1e-9 {
        if (margin > 0.0) != (k0_compact > 0.0) {
            return Err(Error::Inconsistency(format!(
                "C1 margin {margin} disagrees with k0 {k0_compact}"
            )));
        }
        if max_real_part.abs() > 1e-7 && (margin > 0.0) != (max_real_part < 0.0) {
            return Err(Error::Inconsistency(format!(
                "C1 margin {margin} disagrees with max eigenvalue real part {max_real_part}"
            )));
        }
    }
    Ok(StabilityReport {
        c1_margin: margin,
        controlled,
        k_coeffs: k,
        eigenvalues,
        max_real_part,
        sign_changes: sign_changes(&k),
    })
}

/// Convenience constructor for draws that only exercise the linear analysis.
pub fn linear_params(
    alpha: f64,
    beta: f64,
    gamma: f64,
    epsilon: f64,
    theta: f64,
    psi: f64,
) -> EpidemicParams {
    EpidemicParams {
        beta,
        gamma,
        epsilon,
        alpha,
        theta,
        psi,
        population: 1.0,
    }
}
