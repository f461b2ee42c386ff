//! The bump function χ behind the shear: smooth, even, supported in
//! [−2R+ε, 2R−ε], identically 2R on [−ε, ε], with a certified bound
//! ‖χ'‖∞ ≤ 3/2.
//!
//! χ' is a mollified trapezoid on each ramp: quintic-smoothstep shoulders of
//! width w and a flat core of height h = 2R/(L − w), L = 2R − 2ε being the
//! ramp length. The plateau value and the support are exact by construction,
//! and |χ'| ≤ h everywhere because the smoothstep is monotone, so h < 3/2 is
//! a certified sup bound rather than a sampled one.

use crate::error::{Error, Result};

/// Quintic smoothstep s(u) = 6u⁵ − 15u⁴ + 10u³ on [0, 1].
fn smoothstep(u: f64) -> f64 {
    ((6.0 * u - 15.0) * u + 10.0) * u * u * u
}

/// s'(u) = 30u²(u − 1)².
fn smoothstep_deriv(u: f64) -> f64 {
    30.0 * u * u * (u - 1.0) * (u - 1.0)
}

/// ∫₀ᵘ s = u⁶ − 3u⁵ + 2.5u⁴; equals 1/2 at u = 1.
fn smoothstep_integral(u: f64) -> f64 {
    ((u - 3.0) * u + 2.5) * u * u * u * u
}

/// The profile χ with its first two derivatives in closed form.
#[derive(Debug, Clone, Copy)]
pub struct BumpProfile {
    radius: f64,
    eps: f64,
    shoulder: f64,
    ramp_len: f64,
    core_height: f64,
}

impl BumpProfile {
    /// Builds the profile for ball radius `radius`, plateau half-width `eps`
    /// and shoulder width `shoulder`. Requires 0 < eps < R/3 and
    /// 0 < shoulder < R/3 − eps; the latter guarantees the core slope
    /// h = 2R/(L − shoulder) stays strictly below 3/2.
    pub fn new(radius: f64, eps: f64, shoulder: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "bump radius must be positive, got {radius}"
            )));
        }
        if !(eps > 0.0) || eps >= radius / 3.0 {
            return Err(Error::InvalidParameter(format!(
                "bump plateau eps must satisfy 0 < eps < R/3 = {}, got {eps}",
                radius / 3.0
            )));
        }
        let ramp_len = 2.0 * radius - 2.0 * eps;
        let shoulder_max = radius / 3.0 - eps;
        if !(shoulder > 0.0) || shoulder >= shoulder_max {
            let h = 2.0 * radius / (ramp_len - shoulder);
            return Err(Error::InvalidParameter(format!(
                "shoulder {shoulder} forces core slope h = {h:.6} ≥ 3/2; \
                 ‖χ'‖∞ ≤ 3/2 needs shoulder in (0, R/3 − eps) = (0, {shoulder_max})"
            )));
        }
        let core_height = 2.0 * radius / (ramp_len - shoulder);
        debug_assert!(core_height < 1.5);
        Ok(Self {
            radius,
            eps,
            shoulder,
            ramp_len,
            core_height,
        })
    }

    /// Profile with the shoulder at 0.9 of its admissible maximum. Wider
    /// shoulders cost a little core slope but tame the higher derivatives of
    /// χ, which otherwise scale like shoulder⁻².
    pub fn with_default_shoulder(radius: f64, eps: f64) -> Result<Self> {
        if !(eps > 0.0) || eps >= radius / 3.0 {
            return Err(Error::InvalidParameter(format!(
                "bump plateau eps must satisfy 0 < eps < R/3 = {}, got {eps}",
                radius / 3.0
            )));
        }
        Self::new(radius, eps, 0.9 * (radius / 3.0 - eps))
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn shoulder(&self) -> f64 {
        self.shoulder
    }

    /// Certified sup-norm bound on χ': the core height h, with |χ'| ≤ h
    /// pointwise and h < 3/2.
    pub fn sup_chi_prime(&self) -> f64 {
        self.core_height
    }

    /// The support interval [−2R+ε, 2R−ε]; χ vanishes identically outside.
    pub fn support(&self) -> (f64, f64) {
        (-2.0 * self.radius + self.eps, 2.0 * self.radius - self.eps)
    }

    /// Position within the left ramp: u ∈ [0, L] for t ∈ [−2R+ε, −ε].
    fn ramp_coord(&self, t: f64) -> f64 {
        t - (-2.0 * self.radius + self.eps)
    }

    pub fn chi(&self, t: f64) -> f64 {
        let t_abs = -t.abs();
        // t_abs ∈ (−∞, 0]; left half by even symmetry.
        if t_abs <= -2.0 * self.radius + self.eps {
            return 0.0;
        }
        if t_abs >= -self.eps {
            return 2.0 * self.radius;
        }
        let u = self.ramp_coord(t_abs);
        let (h, w, l) = (self.core_height, self.shoulder, self.ramp_len);
        if u < w {
            h * w * smoothstep_integral(u / w)
        } else if u <= l - w {
            h * (u - 0.5 * w)
        } else {
            2.0 * self.radius - h * w * smoothstep_integral((l - u) / w)
        }
    }

    pub fn chi_prime(&self, t: f64) -> f64 {
        let sign = if t > 0.0 { -1.0 } else { 1.0 };
        let t_abs = -t.abs();
        if t_abs <= -2.0 * self.radius + self.eps || t_abs >= -self.eps {
            return 0.0;
        }
        let u = self.ramp_coord(t_abs);
        let (h, w, l) = (self.core_height, self.shoulder, self.ramp_len);
        let v = if u < w {
            h * smoothstep(u / w)
        } else if u <= l - w {
            h
        } else {
            h * smoothstep((l - u) / w)
        };
        sign * v
    }

    pub fn chi_second(&self, t: f64) -> f64 {
        let t_abs = -t.abs();
        if t_abs <= -2.0 * self.radius + self.eps || t_abs >= -self.eps {
            return 0.0;
        }
        let u = self.ramp_coord(t_abs);
        let (h, w, l) = (self.core_height, self.shoulder, self.ramp_len);
        if u < w {
            h / w * smoothstep_deriv(u / w)
        } else if u <= l - w {
            0.0
        } else {
            -h / w * smoothstep_deriv((l - u) / w)
        }
    }
}
