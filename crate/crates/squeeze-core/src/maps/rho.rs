//! Radial profiles ρ for the twist map (z, t) ↦ ρ(|z|)·e^{it}·z.
//!
//! A valid profile has ρ(0) = 1, ρ'(0) = 0, ρ(r) < 1 for r > 0, and
//! ρ''(0) > −1/4 so that the 2-Jacobian of the twist stays ≥ 1 near the axis.
//! The Cartesian Jacobian of the twist needs ρ'(r)/r, whose r → 0 limit is
//! ρ''(0); profiles provide that quotient as an explicit even extension so the
//! axis is not a special case.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A smooth radial profile with first and second derivatives and the even
/// extension of ρ'(r)/r.
#[derive(Clone)]
pub struct RhoSpec {
    rho: RealFn,
    rho_prime: RealFn,
    rho_second: RealFn,
    rho_prime_over_r: RealFn,
}

impl fmt::Debug for RhoSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "RhoSpec(ρ(0)={}, ρ''(0)={})",
            (self.rho)(0.0),
            (self.rho_second)(0.0)
        )
    }
}

impl RhoSpec {
    /// Wraps user-supplied closures after validating the profile constraints
    /// on a sample grid.
    pub fn new(
        rho: impl Fn(f64) -> f64 + Send + Sync + 'static,
        rho_prime: impl Fn(f64) -> f64 + Send + Sync + 'static,
        rho_second: impl Fn(f64) -> f64 + Send + Sync + 'static,
        rho_prime_over_r: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        let spec = Self {
            rho: Arc::new(rho),
            rho_prime: Arc::new(rho_prime),
            rho_second: Arc::new(rho_second),
            rho_prime_over_r: Arc::new(rho_prime_over_r),
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Gaussian profile ρ(r) = exp(−r²/width); needs width > 8 so that
    /// ρ''(0) = −2/width > −1/4. All derivatives are closed-form.
    pub fn gaussian(width: f64) -> Result<Self> {
        if !(width > 8.0) {
            return Err(Error::InvalidParameter(format!(
                "gaussian width must exceed 8 (ρ''(0) > −1/4), got {width}"
            )));
        }
        Self::new(
            move |r| (-r * r / width).exp(),
            move |r| -(2.0 * r / width) * (-r * r / width).exp(),
            move |r| (-2.0 / width + 4.0 * r * r / (width * width)) * (-r * r / width).exp(),
            move |r| -(2.0 / width) * (-r * r / width).exp(),
        )
    }

    /// The default profile ρ(r) = exp(−r²/16), with ρ''(0) = −1/8.
    pub fn default_gaussian() -> Self {
        Self::gaussian(16.0).expect("16 > 8")
    }

    fn validate(&self) -> Result<()> {
        let at0 = self.rho(0.0);
        if (at0 - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!("ρ(0) = {at0}, must be 1")));
        }
        let d0 = self.rho_prime(0.0);
        if d0.abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!("ρ'(0) = {d0}, must be 0")));
        }
        let dd0 = self.rho_second(0.0);
        if dd0 <= -0.25 {
            return Err(Error::InvalidParameter(format!(
                "ρ''(0) = {dd0}, must exceed −1/4"
            )));
        }
        for i in 1..=64 {
            let r = 4.0 * i as f64 / 64.0;
            let v = self.rho(r);
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "ρ({r}) = {v}, must lie in (0, 1) for r > 0"
                )));
            }
            // Quotient consistency: g(r)·r = ρ'(r).
            let g = self.rho_prime_over_r(r);
            if (g * r - self.rho_prime(r)).abs() > 1e-9 * (1.0 + g.abs()) {
                return Err(Error::InvalidParameter(format!(
                    "ρ'(r)/r extension inconsistent at r = {r}"
                )));
            }
        }
        if (self.rho_prime_over_r(0.0) - dd0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(
                "ρ'(r)/r extension must equal ρ''(0) at r = 0".into(),
            ));
        }
        Ok(())
    }

    pub fn rho(&self, r: f64) -> f64 {
        (self.rho)(r)
    }

    pub fn rho_prime(&self, r: f64) -> f64 {
        (self.rho_prime)(r)
    }

    pub fn rho_second(&self, r: f64) -> f64 {
        (self.rho_second)(r)
    }

    /// The even analytic extension of ρ'(r)/r (equal to ρ''(0) at r = 0).
    pub fn rho_prime_over_r(&self, r: f64) -> f64 {
        (self.rho_prime_over_r)(r)
    }
}

/// Closed-form 2-Jacobian of the twist: J₂(r) = ρ(r)·(ρ(r) + r·ρ'(r))·√(1+r²).
pub fn twist_j2_closed_form(spec: &RhoSpec, r: f64) -> f64 {
    let rho = spec.rho(r);
    rho * (rho + r * spec.rho_prime(r)) * (1.0 + r * r).sqrt()
}

/// First r > 0 on a dense grid where J₂ drops below 1, bracketed by bisection.
/// Returns `None` if no crossing is found in (0, r_max].
pub fn twist_j2_crossing(spec: &RhoSpec, r_max: f64, grid: usize) -> Option<f64> {
    let mut prev_r = 0.0;
    for i in 1..=grid {
        let r = r_max * i as f64 / grid as f64;
        if twist_j2_closed_form(spec, r) < 1.0 {
            let (mut lo, mut hi) = (prev_r, r);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if twist_j2_closed_form(spec, mid) < 1.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return Some(0.5 * (lo + hi));
        }
        prev_r = r;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn default_gaussian_satisfies_constraints() {
        let spec = RhoSpec::default_gaussian();
        assert_eq!(spec.rho(0.0), 1.0);
        assert_eq!(spec.rho_prime(0.0), 0.0);
        assert_relative_eq!(spec.rho_second(0.0), -0.125);
        assert!(spec.rho(1.0) < 1.0);
    }

    #[test]
    fn narrow_gaussian_rejected() {
        assert!(RhoSpec::gaussian(8.0).is_err());
        assert!(RhoSpec::gaussian(7.0).is_err());
    }

    #[test]
    fn j2_at_zero_is_one_and_grows_quadratically() {
        let spec = RhoSpec::default_gaussian();
        assert_eq!(twist_j2_closed_form(&spec, 0.0), 1.0);
        // J₂ = 1 + (1/2 + 2ρ''(0))r² + O(r³) = 1 + r²/4 + O(r³) here.
        for r in [1e-3, 1e-2] {
            let expansion = 1.0 + (0.5 + 2.0 * spec.rho_second(0.0)) * r * r;
            assert_relative_eq!(
                twist_j2_closed_form(&spec, r),
                expansion,
                epsilon = 10.0 * r * r * r
            );
        }
    }

    #[test]
    fn crossing_is_detected_beyond_half() {
        let spec = RhoSpec::default_gaussian();
        let r_star = twist_j2_crossing(&spec, 2.0, 2000).expect("crossing exists");
        assert!(r_star > 0.5, "crossing {r_star} should be past 0.5");
        assert!(r_star < 2.0);
        assert!(twist_j2_closed_form(&spec, r_star - 1e-6) >= 1.0 - 1e-9);
        assert!(twist_j2_closed_form(&spec, r_star + 1e-6) <= 1.0 + 1e-9);
    }

    #[test]
    fn j2_stays_above_one_up_to_half() {
        let spec = RhoSpec::default_gaussian();
        for i in 0..=500 {
            let r = 0.5 * i as f64 / 500.0;
            assert!(twist_j2_closed_form(&spec, r) >= 1.0 - 1e-12);
        }
    }
}
