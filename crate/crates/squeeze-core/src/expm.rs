//! Dense matrix exponential by scaling and squaring with a degree-13 Padé
//! approximant.
//!
//! The input is scaled by 2^-s until its 1-norm is below θ₁₃, the [13/13]
//! approximant is evaluated, and the result is squared s times. At the sizes
//! used here (2n ≤ 16) this is accurate to close to machine precision; the
//! callers accept the result solely through their own residual checks.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

const THETA_13: f64 = 5.371_920_351_148_152;

// Padé-13 coefficients b₀..b₁₃ of p(x) = Σ bᵢ xⁱ with q(x) = p(−x).
const B: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16_380.0,
    182.0,
    1.0,
];

fn one_norm(m: &DMatrix<f64>) -> f64 {
    (0..m.ncols())
        .map(|c| m.column(c).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// exp(A) for a square matrix.
pub fn expm(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            got: a.ncols(),
        });
    }
    let dim = a.nrows();
    let norm = one_norm(a);
    if !norm.is_finite() {
        return Err(Error::Numerical("matrix exponential of non-finite input".into()));
    }
    let s = if norm > THETA_13 {
        (norm / THETA_13).log2().ceil() as u32
    } else {
        0
    };
    let scaled = a / 2f64.powi(s as i32);

    let id = DMatrix::identity(dim, dim);
    let a2 = &scaled * &scaled;
    let a4 = &a2 * &a2;
    let a6 = &a2 * &a4;

    let u_inner = &a6 * (B[13] * &a6 + B[11] * &a4 + B[9] * &a2)
        + B[7] * &a6
        + B[5] * &a4
        + B[3] * &a2
        + B[1] * &id;
    let u = &scaled * u_inner;
    let v = &a6 * (B[12] * &a6 + B[10] * &a4 + B[8] * &a2)
        + B[6] * &a6
        + B[4] * &a4
        + B[2] * &a2
        + B[0] * &id;

    let denom = &v - &u;
    let numer = &v + &u;
    let mut exp = denom
        .lu()
        .solve(&numer)
        .ok_or_else(|| Error::Numerical("Padé denominator is singular".into()))?;
    for _ in 0..s {
        exp = &exp * &exp;
    }
    if exp.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("matrix exponential diverged".into()));
    }
    Ok(exp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::Rng;

    use crate::rng::seeded_rng;

    /// Plain Taylor series; independent oracle for moderate norms.
    fn expm_taylor(a: &DMatrix<f64>, terms: usize) -> DMatrix<f64> {
        let dim = a.nrows();
        let mut sum = DMatrix::identity(dim, dim);
        let mut term = DMatrix::identity(dim, dim);
        for k in 1..=terms {
            term = (&term * a) / k as f64;
            sum += &term;
        }
        sum
    }

    #[test]
    fn exp_of_zero_is_identity() {
        let z = DMatrix::zeros(6, 6);
        assert_eq!(expm(&z).unwrap(), DMatrix::identity(6, 6));
    }

    #[test]
    fn exp_of_diagonal() {
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, -2.0, 0.5]));
        let e = expm(&d).unwrap();
        for (i, lam) in [1.0f64, -2.0, 0.5].iter().enumerate() {
            assert_relative_eq!(e[(i, i)], lam.exp(), max_relative = 1e-14);
        }
    }

    #[test]
    fn exp_of_rotation_generator() {
        let theta = 0.7f64;
        let g = DMatrix::from_row_slice(2, 2, &[0.0, -theta, theta, 0.0]);
        let e = expm(&g).unwrap();
        assert_relative_eq!(e[(0, 0)], theta.cos(), max_relative = 1e-14);
        assert_relative_eq!(e[(1, 0)], theta.sin(), max_relative = 1e-14);
    }

    #[test]
    fn matches_taylor_series_oracle() {
        let mut rng = seeded_rng(99);
        for dim in [4usize, 8] {
            for _ in 0..20 {
                let a = DMatrix::from_fn(dim, dim, |_, _| rng.random_range(-0.4..0.4));
                let fast = expm(&a).unwrap();
                let slow = expm_taylor(&a, 40);
                assert!((&fast - &slow).norm() / slow.norm() < 1e-12);
            }
        }
    }

    #[test]
    fn large_norm_triggers_squaring_and_stays_accurate() {
        // exp(α I) is known exactly.
        let a = DMatrix::identity(4, 4) * 12.0;
        let e = expm(&a).unwrap();
        assert_relative_eq!(e[(0, 0)], 12f64.exp(), max_relative = 1e-12);
        assert!(e[(0, 1)].abs() < 1e-6);
    }
}
