//! Model parameters and the exact scalar quantities known in closed form.

use crate::error::CoreError;
use serde::{Deserialize, Serialize};

/// Rates of the tandem network and the capacity share `p` of station 1.
///
/// While both stations are busy in operating mode, station 1 is served at
/// rate `p * nu1` and station 2 at `(1 - p) * nu2`; a lone busy station
/// receives the full capacity. The capacity shares are implied by `p` and
/// never stored separately.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    /// Arrival rate in operating mode (> 0).
    pub lambda0: f64,
    /// Arrival rate in setup mode (>= 0).
    pub lambda1: f64,
    /// Station-1 service rate (> 0).
    pub nu1: f64,
    /// Station-2 service rate (> 0).
    pub nu2: f64,
    /// Breakdown rate (> 0).
    pub gamma: f64,
    /// Repair / setup-completion rate (> 0).
    pub tau: f64,
    /// Station-1 capacity share in [0, 1].
    pub p: f64,
}

/// Dimensionless partial loads and the stability slack.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoadProfile {
    pub rho01: f64,
    pub rho02: f64,
    pub rho11: f64,
    pub rho12: f64,
    /// Total load in operating mode: `rho01 + rho02`.
    pub rho0: f64,
    /// Total load in setup mode: `rho11 + rho12`.
    pub rho1: f64,
    /// Stability slack `tau - (rho0 * tau + rho1 * gamma)`.
    pub margin: f64,
}

impl ModelParams {
    pub fn new(
        lambda0: f64,
        lambda1: f64,
        nu1: f64,
        nu2: f64,
        gamma: f64,
        tau: f64,
        p: f64,
    ) -> Result<Self, CoreError> {
        let params = Self {
            lambda0,
            lambda1,
            nu1,
            nu2,
            gamma,
            tau,
            p,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<(), CoreError> {
        let mut issues = Vec::new();
        for (name, v, strictly_positive) in [
            ("lambda0", self.lambda0, true),
            ("lambda1", self.lambda1, false),
            ("nu1", self.nu1, true),
            ("nu2", self.nu2, true),
            ("gamma", self.gamma, true),
            ("tau", self.tau, true),
        ] {
            if !v.is_finite() || v < 0.0 || (strictly_positive && v <= 0.0) {
                issues.push(format!("{name} = {v}"));
            }
        }
        if !self.p.is_finite() || !(0.0..=1.0).contains(&self.p) {
            issues.push(format!("p = {}", self.p));
        }
        if issues.is_empty() {
            Ok(())
        } else {
            Err(CoreError::InvalidParams(issues.join(", ")))
        }
    }

    /// Capacity share of station 1 while both stations are busy.
    pub fn phi1(&self) -> f64 {
        self.p
    }

    /// Capacity share of station 2 while both stations are busy.
    pub fn phi2(&self) -> f64 {
        1.0 - self.p
    }

    pub fn with_p(&self, p: f64) -> Self {
        Self { p, ..*self }
    }
}

/// Partial loads `rho_kj = lambda_k / nu_j` and the stability slack.
pub fn load_profile(params: &ModelParams) -> LoadProfile {
    let rho01 = params.lambda0 / params.nu1;
    let rho02 = params.lambda0 / params.nu2;
    let rho11 = params.lambda1 / params.nu1;
    let rho12 = params.lambda1 / params.nu2;
    let rho0 = rho01 + rho02;
    let rho1 = rho11 + rho12;
    let margin = params.tau - (rho0 * params.tau + rho1 * params.gamma);
    LoadProfile {
        rho01,
        rho02,
        rho11,
        rho12,
        rho0,
        rho1,
        margin,
    }
}

/// Stability verdict plus the relative slack `margin / tau`.
///
/// The network is stable iff the work arriving per unit time is strictly
/// less than the work the operating mode can remove; equality is unstable.
pub fn stability_check(params: &ModelParams) -> (bool, f64) {
    let lp = load_profile(params);
    (lp.margin > 0.0, lp.margin / params.tau)
}

/// Probability of an empty network in operating mode.
pub fn empty_probability(params: &ModelParams) -> Result<f64, CoreError> {
    let lp = load_profile(params);
    if lp.margin <= 0.0 {
        return Err(CoreError::Unstable { margin: lp.margin });
    }
    let mode0 = params.tau / (params.tau + params.gamma);
    Ok(mode0 * (1.0 - (lp.rho0 * params.tau + lp.rho1 * params.gamma) / params.tau))
}

/// Stationary probabilities of (operating, setup) mode.
///
/// The mode chain is autonomous, so these depend only on `tau` and `gamma`.
pub fn mode_probabilities(params: &ModelParams) -> (f64, f64) {
    let total = params.tau + params.gamma;
    (params.tau / total, params.gamma / total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    /// Reference parameter set used throughout the test suite.
    pub(crate) fn reference_params() -> ModelParams {
        ModelParams::new(1.0, 0.5, 4.0, 5.0, 2.0, 4.0, 0.5).unwrap()
    }

    #[test]
    fn loads_for_reference_params() {
        let lp = load_profile(&reference_params());
        assert_abs_diff_eq!(lp.rho0, 0.45, epsilon = 1e-15);
        assert_abs_diff_eq!(lp.rho1, 0.225, epsilon = 1e-15);
        assert_abs_diff_eq!(lp.margin, 1.75, epsilon = 1e-15);
    }

    #[test]
    fn loads_zero_arrivals() {
        let mut params = reference_params();
        params.lambda0 = 1e-300; // effectively zero while staying valid
        params.lambda1 = 0.0;
        let lp = load_profile(&params);
        assert!(lp.rho0 < 1e-200);
        assert_abs_diff_eq!(lp.margin, params.tau, epsilon = 1e-12);
    }

    #[test]
    fn loads_unstable_example() {
        let params = ModelParams::new(2.0, 2.0, 2.0, 2.0, 1.0, 1.0, 0.5).unwrap();
        let lp = load_profile(&params);
        assert_abs_diff_eq!(lp.rho0, 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(lp.rho1, 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(lp.margin, -3.0, epsilon = 1e-15);
        assert!(!stability_check(&params).0);
    }

    #[test]
    fn stability_reference_slack() {
        let (stable, slack) = stability_check(&reference_params());
        assert!(stable);
        assert_abs_diff_eq!(slack, 0.4375, epsilon = 1e-15);
    }

    #[test]
    fn stability_boundary_is_unstable() {
        // rho0 * tau + rho1 * gamma == tau exactly (rho0 = 1, lambda1 = 0).
        let params = ModelParams::new(2.0, 0.0, 4.0, 4.0, 1.0, 1.0, 0.5).unwrap();
        let lp = load_profile(&params);
        assert_abs_diff_eq!(lp.margin, 0.0, epsilon = 0.0);
        assert!(!stability_check(&params).0);
    }

    #[test]
    fn empty_probability_reference() {
        let p00 = empty_probability(&reference_params()).unwrap();
        assert_abs_diff_eq!(p00, 7.0 / 24.0, epsilon = 1e-15);
    }

    #[test]
    fn empty_probability_zero_load_limit() {
        let mut params = reference_params();
        params.lambda0 = 1e-300;
        params.lambda1 = 0.0;
        let p00 = empty_probability(&params).unwrap();
        assert_abs_diff_eq!(p00, params.tau / (params.tau + params.gamma), epsilon = 1e-12);
    }

    #[test]
    fn empty_probability_rejects_unstable() {
        let params = ModelParams::new(2.0, 2.0, 2.0, 2.0, 1.0, 1.0, 0.5).unwrap();
        assert!(empty_probability(&params).is_err());
    }

    #[test]
    fn mode_probabilities_reference_and_symmetric() {
        let (m0, m1) = mode_probabilities(&reference_params());
        assert_abs_diff_eq!(m0, 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(m1, 1.0 / 3.0, epsilon = 1e-15);

        let params = ModelParams::new(1.0, 0.5, 4.0, 5.0, 3.0, 3.0, 0.5).unwrap();
        let (m0, m1) = mode_probabilities(&params);
        assert_abs_diff_eq!(m0, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(m1, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn mode_probabilities_sum_to_one_on_grid() {
        for gamma in [0.1, 1.0, 2.5, 7.0] {
            for tau in [0.2, 1.0, 4.0, 9.0] {
                let params = ModelParams::new(1.0, 0.5, 4.0, 5.0, gamma, tau, 0.5).unwrap();
                let (m0, m1) = mode_probabilities(&params);
                assert_abs_diff_eq!(m0 + m1, 1.0, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn empty_probability_decreasing_in_arrival_rates() {
        let base = reference_params();
        let mut prev = f64::INFINITY;
        for l0 in [0.2, 0.6, 1.0, 1.4] {
            let p00 = empty_probability(&ModelParams { lambda0: l0, ..base }).unwrap();
            assert!(p00 < prev);
            prev = p00;
        }
        let mut prev = f64::INFINITY;
        for l1 in [0.0, 0.5, 1.0, 2.0] {
            let p00 = empty_probability(&ModelParams { lambda1: l1, ..base }).unwrap();
            assert!(p00 < prev);
            prev = p00;
        }
    }

    #[test]
    fn stability_agrees_with_margin_sign() {
        for l0 in [0.3, 0.9, 1.8, 3.0] {
            for l1 in [0.0, 0.7, 2.2] {
                for tau in [0.5, 4.0] {
                    let params = ModelParams::new(l0, l1, 4.0, 5.0, 2.0, tau, 0.3).unwrap();
                    let lp = load_profile(&params);
                    assert_eq!(stability_check(&params).0, lp.margin > 0.0);
                }
            }
        }
    }

    #[test]
    fn params_json_round_trip() {
        let params = reference_params();
        let json = serde_json::to_string(&params).unwrap();
        for key in ["lambda0", "lambda1", "nu1", "nu2", "gamma", "tau", "p"] {
            assert!(json.contains(key));
        }
        let back: ModelParams = serde_json::from_str(&json).unwrap();
        assert_eq!(params, back);
        // Unknown keys are rejected.
        assert!(serde_json::from_str::<ModelParams>(
            r#"{"lambda0":1,"lambda1":0.5,"nu1":4,"nu2":5,"gamma":2,"tau":4,"p":0.5,"bogus":1}"#
        )
        .is_err());
    }
}
