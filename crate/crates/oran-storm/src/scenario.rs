//! Arrival-rate profiles for signaling-storm scenarios.
//!
//! A storm is a three-phase excursion above the normal attachment rate:
//! a linear ramp up, a steady plateau, and a linear ramp down. Ramps are
//! sampled so their last step already equals the next plateau, which keeps
//! the profile continuous across phase boundaries; zero-length ramps
//! degenerate to a step change.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ScenarioError {
    #[error("arrival rates must be finite with storm >= normal >= 0, got normal {normal}, storm {storm}")]
    BadRates { normal: f64, storm: f64 },
    #[error("steady phase must last at least one step")]
    EmptySteady,
    #[error("storm phases end at step {end} but the horizon is {horizon} steps")]
    PhasesPastHorizon { end: u64, horizon: u64 },
    #[error("horizon must be at least one step")]
    EmptyHorizon,
    #[error("step {t} is outside the {horizon}-step horizon")]
    OutOfHorizon { t: u64, horizon: u64 },
}

/// Piecewise-linear arrival-rate schedule over a finite horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StormProfile {
    /// Baseline attachment arrivals per second.
    pub lambda_normal: f64,
    /// Plateau arrivals per second during the storm.
    pub lambda_storm: f64,
    /// First step of the ramp up.
    pub t_start_step: u64,
    pub ramp_up_steps: u64,
    pub steady_steps: u64,
    pub ramp_down_steps: u64,
    /// Total simulated steps.
    pub horizon_steps: u64,
}

impl StormProfile {
    /// Validated storm profile. `lambda_storm == lambda_normal` is allowed
    /// and yields a constant profile.
    pub fn new(
        lambda_normal: f64,
        lambda_storm: f64,
        t_start_step: u64,
        ramp_up_steps: u64,
        steady_steps: u64,
        ramp_down_steps: u64,
        horizon_steps: u64,
    ) -> Result<Self, ScenarioError> {
        let profile = Self {
            lambda_normal,
            lambda_storm,
            t_start_step,
            ramp_up_steps,
            steady_steps,
            ramp_down_steps,
            horizon_steps,
        };
        profile.validate()?;
        Ok(profile)
    }

    /// Constant arrivals with no disturbance.
    pub fn constant(lambda: f64, horizon_steps: u64) -> Result<Self, ScenarioError> {
        Self::new(lambda, lambda, 0, 0, horizon_steps.max(1), 0, horizon_steps)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let finite = self.lambda_normal.is_finite() && self.lambda_storm.is_finite();
        if !finite || self.lambda_normal < 0.0 || self.lambda_storm < self.lambda_normal {
            return Err(ScenarioError::BadRates {
                normal: self.lambda_normal,
                storm: self.lambda_storm,
            });
        }
        if self.steady_steps == 0 {
            return Err(ScenarioError::EmptySteady);
        }
        if self.horizon_steps == 0 {
            return Err(ScenarioError::EmptyHorizon);
        }
        let end = self.disturbance_end_step();
        if end > self.horizon_steps {
            return Err(ScenarioError::PhasesPastHorizon {
                end,
                horizon: self.horizon_steps,
            });
        }
        Ok(())
    }

    /// First step at which the ramp up begins.
    pub fn disturbance_start_step(&self) -> u64 {
        self.t_start_step
    }

    /// First step back at the normal rate after the ramp down.
    pub fn disturbance_end_step(&self) -> u64 {
        self.t_start_step + self.ramp_up_steps + self.steady_steps + self.ramp_down_steps
    }

    /// Whether the profile ever leaves the baseline rate.
    pub fn has_storm(&self) -> bool {
        self.lambda_storm > self.lambda_normal
    }

    /// Sum of the arrival rate over every step of the horizon.
    pub fn total_offered_load(&self) -> f64 {
        (0..self.horizon_steps)
            .map(|t| arrival_rate(self, t).expect("t is within horizon"))
            .sum()
    }
}

impl Default for StormProfile {
    fn default() -> Self {
        Self {
            lambda_normal: 20.0,
            lambda_storm: 200.0,
            t_start_step: 30,
            ramp_up_steps: 10,
            steady_steps: 60,
            ramp_down_steps: 10,
            horizon_steps: 600,
        }
    }
}

/// Arrival rate at step `t`. Steps at or past the horizon are an error.
pub fn arrival_rate(profile: &StormProfile, t: u64) -> Result<f64, ScenarioError> {
    if t >= profile.horizon_steps {
        return Err(ScenarioError::OutOfHorizon {
            t,
            horizon: profile.horizon_steps,
        });
    }
    let surge = profile.lambda_storm - profile.lambda_normal;
    let up_end = profile.t_start_step + profile.ramp_up_steps;
    let steady_end = up_end + profile.steady_steps;
    let down_end = steady_end + profile.ramp_down_steps;

    let rate = if t < profile.t_start_step {
        profile.lambda_normal
    } else if t < up_end {
        // k runs 1..=ramp_up_steps; the last ramp step reaches the plateau.
        let k = (t - profile.t_start_step + 1) as f64;
        profile.lambda_normal + surge * k / profile.ramp_up_steps as f64
    } else if t < steady_end {
        profile.lambda_storm
    } else if t < down_end {
        let k = (t - steady_end + 1) as f64;
        profile.lambda_storm - surge * k / profile.ramp_down_steps as f64
    } else {
        profile.lambda_normal
    };
    Ok(rate)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn phases_sample_expected_rates() {
        let p = StormProfile::default();
        assert_eq!(arrival_rate(&p, 0).unwrap(), 20.0);
        assert_eq!(arrival_rate(&p, 29).unwrap(), 20.0);
        assert!(close(arrival_rate(&p, 30).unwrap(), 38.0, 1e-12));
        assert!(close(arrival_rate(&p, 39).unwrap(), 200.0, 1e-12));
        assert_eq!(arrival_rate(&p, 40).unwrap(), 200.0);
        assert_eq!(arrival_rate(&p, 99).unwrap(), 200.0);
        assert!(close(arrival_rate(&p, 100).unwrap(), 182.0, 1e-12));
        assert!(close(arrival_rate(&p, 109).unwrap(), 20.0, 1e-12));
        assert_eq!(arrival_rate(&p, 110).unwrap(), 20.0);
        assert_eq!(arrival_rate(&p, 599).unwrap(), 20.0);
    }

    #[test]
    fn ramp_ends_meet_their_plateaus() {
        let p = StormProfile::new(5.0, 105.0, 10, 7, 4, 13, 100).unwrap();
        let last_up = arrival_rate(&p, 10 + 7 - 1).unwrap();
        assert!(close(last_up, 105.0, 1e-12));
        let last_down = arrival_rate(&p, 10 + 7 + 4 + 13 - 1).unwrap();
        assert!(close(last_down, 5.0, 1e-12));
        for t in 1..100 {
            let prev = arrival_rate(&p, t - 1).unwrap();
            let cur = arrival_rate(&p, t).unwrap();
            assert!((cur - prev).abs() <= 100.0 / 7.0 + 1e-9);
        }
    }

    #[test]
    fn zero_length_ramp_is_a_step_change() {
        let p = StormProfile::new(20.0, 200.0, 30, 0, 60, 0, 600).unwrap();
        assert_eq!(arrival_rate(&p, 29).unwrap(), 20.0);
        assert_eq!(arrival_rate(&p, 30).unwrap(), 200.0);
        assert_eq!(arrival_rate(&p, 89).unwrap(), 200.0);
        assert_eq!(arrival_rate(&p, 90).unwrap(), 20.0);
    }

    #[test]
    fn out_of_horizon_is_an_error() {
        let p = StormProfile::default();
        assert_eq!(
            arrival_rate(&p, 600),
            Err(ScenarioError::OutOfHorizon {
                t: 600,
                horizon: 600
            })
        );
    }

    #[test]
    fn offered_load_matches_trapezoid_closed_form() {
        let p = StormProfile::default();
        let surge = p.lambda_storm - p.lambda_normal;
        let ramp_up_extra = surge * (p.ramp_up_steps + 1) as f64 / 2.0;
        let ramp_down_extra = surge * (p.ramp_down_steps - 1) as f64 / 2.0;
        let expect = p.lambda_normal * p.horizon_steps as f64
            + ramp_up_extra
            + surge * p.steady_steps as f64
            + ramp_down_extra;
        let got = p.total_offered_load();
        assert!((got - expect).abs() / expect < 1e-9);
    }

    #[test]
    fn constant_profile_never_deviates() {
        let p = StormProfile::constant(20.0, 50).unwrap();
        assert!(!p.has_storm());
        for t in 0..50 {
            assert_eq!(arrival_rate(&p, t).unwrap(), 20.0);
        }
    }

    #[test]
    fn invalid_profiles_are_rejected() {
        assert!(StormProfile::new(200.0, 20.0, 30, 10, 60, 10, 600).is_err());
        assert!(StormProfile::new(-1.0, 20.0, 30, 10, 60, 10, 600).is_err());
        assert!(StormProfile::new(20.0, 200.0, 30, 10, 0, 10, 600).is_err());
        assert!(StormProfile::new(20.0, 200.0, 30, 10, 60, 10, 100).is_err());
        assert!(StormProfile::new(20.0, 200.0, 0, 0, 1, 0, 0).is_err());
    }
}
