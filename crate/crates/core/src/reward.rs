//! Scaled-Gaussian reward around a target stress level, and the success band
//! used for termination and accuracy.

use serde::{Deserialize, Serialize};

use crate::error::RewardError;

pub const MIN_STRESS: f64 = 0.0;
pub const MAX_STRESS: f64 = 10.0;
pub const MIN_TARGET: u8 = 1;
pub const MAX_TARGET: u8 = 9;
/// Half-width of the success band around an integer target.
pub const SUCCESS_HALF_WIDTH: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardSpec {
    pub target: u8,
    pub min_stress: f64,
    pub max_stress: f64,
    /// Half the stress range.
    pub sigma: f64,
    /// The stress extreme farther from the target; it scores exactly -1.
    pub alpha: f64,
    /// Gaussian kernel at `alpha`, cached.
    far_kernel: f64,
}

impl RewardSpec {
    pub fn new(target: u8) -> Result<Self, RewardError> {
        if !(MIN_TARGET..=MAX_TARGET).contains(&target) {
            return Err(RewardError::InvalidTarget(target as i64));
        }
        let sigma = (MAX_STRESS - MIN_STRESS) / 2.0;
        let mu = f64::from(target);
        let alpha = if mu < sigma { MAX_STRESS } else { MIN_STRESS };
        Ok(RewardSpec {
            target,
            min_stress: MIN_STRESS,
            max_stress: MAX_STRESS,
            sigma,
            alpha,
            far_kernel: kernel(alpha, mu, sigma),
        })
    }

    pub fn mu(&self) -> f64 {
        f64::from(self.target)
    }

    /// Reward in [-1, 1]: 1 at the target, -1 at `alpha`.
    pub fn reward(&self, x: f64) -> Result<f64, RewardError> {
        if !(self.min_stress..=self.max_stress).contains(&x) {
            return Err(RewardError::StressOutOfBounds {
                x,
                min: self.min_stress,
                max: self.max_stress,
            });
        }
        Ok(self.reward_unchecked(x))
    }

    pub(crate) fn reward_unchecked(&self, x: f64) -> f64 {
        let e = self.far_kernel;
        (2.0 * kernel(x, self.mu(), self.sigma) - e - 1.0) / (1.0 - e)
    }

    pub fn is_success(&self, x: f64) -> bool {
        is_success(x, self.target)
    }
}

fn kernel(x: f64, mu: f64, sigma: f64) -> f64 {
    let z = (x - mu) / sigma;
    (-0.5 * z * z).exp()
}

pub fn reward(x: f64, spec: &RewardSpec) -> Result<f64, RewardError> {
    spec.reward(x)
}

/// True iff `x` lies in the half-open band `[target - 0.5, target + 0.5)`.
pub fn is_success(x: f64, target: u8) -> bool {
    let t = f64::from(target);
    x >= t - SUCCESS_HALF_WIDTH && x < t + SUCCESS_HALF_WIDTH
}

/// Which stress value feeds the reward. Termination always uses the
/// continuous value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardInput {
    #[default]
    Continuous,
    /// Stress rounded half-up to the nearest integer, matching the success bands.
    Rounded,
}

impl RewardInput {
    pub fn apply(self, stress: f64) -> f64 {
        match self {
            RewardInput::Continuous => stress,
            RewardInput::Rounded => (stress + 0.5).floor().min(MAX_STRESS),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn alpha_switches_at_sigma() {
        for t in 1..=4 {
            assert_eq!(RewardSpec::new(t).unwrap().alpha, 10.0);
        }
        for t in 5..=9 {
            assert_eq!(RewardSpec::new(t).unwrap().alpha, 0.0);
        }
        assert_eq!(RewardSpec::new(3).unwrap().sigma, 5.0);
    }

    #[test]
    fn rejects_bad_targets_and_stress() {
        assert!(RewardSpec::new(0).is_err());
        assert!(RewardSpec::new(10).is_err());
        let spec = RewardSpec::new(5).unwrap();
        assert!(spec.reward(-0.01).is_err());
        assert!(spec.reward(10.01).is_err());
        assert!(spec.reward(f64::NAN).is_err());
    }

    #[test]
    fn identities() {
        for t in 1..=9 {
            let spec = RewardSpec::new(t).unwrap();
            assert_abs_diff_eq!(spec.reward(f64::from(t)).unwrap(), 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(spec.reward(spec.alpha).unwrap(), -1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn target_two_at_zero_stress() {
        // Frozen from an mpmath evaluation at 30 digits: (2e^{-0.08} - e^{-1.28} - 1) / (1 - e^{-1.28})
        let spec = RewardSpec::new(2).unwrap();
        assert_abs_diff_eq!(spec.reward(0.0).unwrap(), 0.787_014_886_886_466_5, epsilon = 1e-12);
    }

    #[test]
    fn success_band_edges() {
        assert!(is_success(1.3289, 1));
        assert!(!is_success(4.5, 4));
        assert!(is_success(4.5, 5));
        assert!(!is_success(10.0, 9));
        assert!(is_success(8.5, 9));
    }

    #[test]
    fn rounded_input() {
        assert_eq!(RewardInput::Rounded.apply(4.49), 4.0);
        assert_eq!(RewardInput::Rounded.apply(4.5), 5.0);
        assert_eq!(RewardInput::Rounded.apply(10.0), 10.0);
        assert_eq!(RewardInput::Continuous.apply(4.49), 4.49);
    }
}
