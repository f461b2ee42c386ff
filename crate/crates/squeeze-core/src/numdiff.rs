//! Central finite differences, used as the production path for derivative-free
//! vector fields and as the independent oracle for every exact Jacobian.

use nalgebra::{DMatrix, DVector};

/// Step for Jacobian verification: h = 1e−6·(1 + ‖x‖).
pub fn jacobian_step(x: &DVector<f64>) -> f64 {
    1e-6 * (1.0 + x.norm())
}

/// Step for Lie-bracket differentiation: h = 1e−5·(1 + ‖x‖).
pub fn bracket_step(x: &DVector<f64>) -> f64 {
    1e-5 * (1.0 + x.norm())
}

/// Central-difference Jacobian of `f` at `x` with step `h`:
/// column j is (f(x + h·eⱼ) − f(x − h·eⱼ)) / 2h.
pub fn central_jacobian<F>(f: F, x: &DVector<f64>, h: f64) -> DMatrix<f64>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    let n = x.len();
    let mut columns: Vec<DVector<f64>> = Vec::with_capacity(n);
    for j in 0..n {
        let mut plus = x.clone();
        let mut minus = x.clone();
        plus[j] += h;
        minus[j] -= h;
        columns.push((f(&plus) - f(&minus)) / (2.0 * h));
    }
    let m = columns[0].len();
    DMatrix::from_fn(m, n, |r, c| columns[c][r])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn differentiates_a_quadratic_exactly_enough() {
        let f = |x: &DVector<f64>| {
            DVector::from_vec(vec![x[0] * x[0] + x[1], 3.0 * x[0] * x[1]])
        };
        let x = DVector::from_vec(vec![1.5, -0.5]);
        let jac = central_jacobian(f, &x, jacobian_step(&x));
        let exact = DMatrix::from_row_slice(2, 2, &[3.0, 1.0, -1.5, 4.5]);
        assert!((jac - exact).norm() < 1e-8);
    }
}
