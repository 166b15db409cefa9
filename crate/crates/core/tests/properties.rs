//! Property-based invariants across the distribution algebra, the
//! controllability analysis and the integrators.

use proptest::prelude::*;
use seirct::config::RunConfig;
use seirct::dist::DurationDistribution;
use seirct::seir::{initial_state, integrate, EpidemicParams};
use seirct::stability::{
    char_poly_coeffs, char_poly_from_matrix, condition_c1, eigen_stability, jacobian_matrix,
    linear_params,
};
use seirct::timeline::{alert_probabilities, covid_timeline, Mode};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// E[residual] = E[X^2] / (2 E[X]) for positive normal durations; the
    /// identity needs negligible sub-zero mass, hence sigma << mu.
    #[test]
    fn residual_mean_identity(mu in 1.0f64..5.0, sigma in 0.05f64..0.2) {
        let d = DurationDistribution::normal(mu, sigma).unwrap();
        let r = d.residual().unwrap();
        let expected = (sigma * sigma + mu * mu) / (2.0 * mu);
        prop_assert!((r.mean() - expected).abs() < 1e-4 * expected);
    }

    /// Means are additive under sum_of, subtractive under diff_of.
    #[test]
    fn sum_and_diff_means(
        mu_a in 1.0f64..4.0,
        mu_b in 1.0f64..4.0,
        sa in 0.2f64..0.6,
        sb in 0.2f64..0.6,
    ) {
        let a = DurationDistribution::normal(mu_a, sa).unwrap();
        let b = DurationDistribution::normal(mu_b, sb).unwrap();
        let s = a.sum_of(&b).unwrap();
        prop_assert!((s.mean() - (mu_a + mu_b)).abs() < 1e-6);
        let d = a.diff_of(&b).unwrap();
        prop_assert!((d.mean() - (mu_a - mu_b)).abs() < 1e-3);
        prop_assert!((d.variance() - (sa * sa + sb * sb)).abs() < 1e-3);
    }

    /// Alert probabilities stay a probability vector across delays/modes.
    #[test]
    fn alert_probabilities_are_a_partition(
        mu_t in 0.0f64..6.0,
        exact in proptest::bool::ANY,
    ) {
        let mode = if exact { Mode::Exact } else { Mode::NormalApprox };
        let spec = covid_timeline(mu_t, 0.5, mode).unwrap();
        let p = alert_probabilities(&spec).unwrap();
        p.validate().unwrap();
    }

    /// Faster testing can only help: p_E never increases with the delay.
    #[test]
    fn p_e_monotone_in_delay(mu_t in 0.0f64..5.0, gap in 0.2f64..1.0) {
        let early = alert_probabilities(
            &covid_timeline(mu_t, 0.5, Mode::NormalApprox).unwrap()).unwrap();
        let late = alert_probabilities(
            &covid_timeline(mu_t + gap, 0.5, Mode::NormalApprox).unwrap()).unwrap();
        prop_assert!(late.p_e <= early.p_e + 1e-9);
    }

    /// The controllability margin grows with uptake and with the combined
    /// removal rate (for supercritical epidemics).
    #[test]
    fn margin_monotonicity(
        alpha in 0.0f64..0.95,
        beta in 0.6f64..3.0,
        gamma in 0.1f64..0.5,
        rates in 0.05f64..2.0,
        bump in 0.01f64..0.5,
    ) {
        let m = condition_c1(alpha, beta, gamma, rates / 2.0, rates / 2.0).unwrap();
        let m_alpha = condition_c1(alpha + 0.05, beta, gamma, rates / 2.0, rates / 2.0).unwrap();
        prop_assert!(m_alpha >= m);
        let m_rates = condition_c1(alpha, beta, gamma, (rates + bump) / 2.0, rates / 2.0).unwrap();
        prop_assert!(m_rates >= m);
    }

    /// Closed-form characteristic coefficients match the determinant route,
    /// and the margin agrees with the dominant eigenvalue off the boundary.
    #[test]
    fn characteristic_polynomial_consistency(
        alpha in 0.0f64..1.0,
        beta in 0.1f64..3.0,
        gamma in 0.1f64..2.0,
        epsilon in 0.1f64..2.0,
        p_e in 0.0f64..1.0,
        frac in 0.0f64..1.0,
    ) {
        let theta = p_e * alpha * beta;
        let psi = (1.0 - p_e) * frac * alpha * beta;
        let p = linear_params(alpha, beta, gamma, epsilon, theta, psi);
        let k = char_poly_coeffs(&p);
        let k_det = char_poly_from_matrix(&jacobian_matrix(&p));
        let scale = beta.max(gamma).max(epsilon).max(1.0).powi(4);
        for (a, b) in k.iter().zip(k_det.iter()) {
            prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(scale));
        }
        let margin = condition_c1(alpha, beta, gamma, theta, psi).unwrap();
        let (_, max_real) = eigen_stability(&p).unwrap();
        if k[4].abs() / (epsilon * epsilon) > 1e-6 && max_real.abs() > 1e-7 {
            prop_assert_eq!(margin > 0.0, max_real < 0.0);
        }
    }

    /// Trajectories conserve the population and stay in the simplex.
    #[test]
    fn integrator_conserves(
        r0 in 0.5f64..4.0,
        alpha in 0.0f64..1.0,
        p_e in 0.0f64..0.7,
    ) {
        let gamma = 0.5;
        let beta = r0 * gamma;
        let theta = p_e * alpha * beta;
        let psi = 0.2 * alpha * beta;
        let n = 1e6;
        let params = EpidemicParams::new(beta, gamma, 1.0 / 3.0, alpha, theta, psi, n).unwrap();
        let init = initial_state(n, alpha, 50.0).unwrap();
        let traj = integrate(&params, &init, 60.0, 0.02, 50).unwrap();
        for s in &traj.states {
            prop_assert!((s.total() - n).abs() <= 1e-9 * n);
            for v in s.as_array() {
                prop_assert!(v >= 0.0);
            }
        }
    }

    /// Config round-trips through TOML.
    #[test]
    fn config_roundtrip(
        r0 in 0.5f64..6.0,
        mu_t in 0.0f64..6.0,
        runs in 1usize..500,
        // TOML integers are i64, which caps representable seeds
        seed in 0u64..=(i64::MAX as u64),
    ) {
        let mut cfg = RunConfig::default();
        cfg.scenario.r0 = r0;
        cfg.scenario.mu_t = mu_t;
        cfg.simulate.runs = runs;
        cfg.validate.seed = seed;
        let text = toml::to_string(&cfg).unwrap();
        let back = RunConfig::from_toml(&text).unwrap();
        prop_assert_eq!(back.scenario.r0, r0);
        prop_assert_eq!(back.scenario.mu_t, mu_t);
        prop_assert_eq!(back.simulate.runs, runs);
        prop_assert_eq!(back.validate.seed, seed);
    }
}
