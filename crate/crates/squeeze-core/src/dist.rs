//! Distributions attached to a projected symplectic map ψ = P∘φ: the maximal
//! expanding selection Ŵ(x) = Dφ(x)ᵀV, membership tests for the multi-valued
//! distribution 𝒲(x) = {W : |det Dψ(x)|_W| ≥ 1}, Lie brackets of vector
//! fields, and Frobenius involutivity residuals.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geom::{is_complex_subspace, Point, Subspace};
use crate::linear::{restricted_determinant, singular_value_product};
use crate::maps::SmoothMap;
use crate::numdiff::{bracket_step, central_jacobian};

/// A smooth vector field, optionally with an exact Jacobian.
#[derive(Clone)]
pub struct VectorField {
    eval: Arc<dyn Fn(&Point) -> Point + Send + Sync>,
    jacobian: Option<Arc<dyn Fn(&Point) -> DMatrix<f64> + Send + Sync>>,
}

impl std::fmt::Debug for VectorField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "VectorField(exact_jacobian: {})",
            self.jacobian.is_some()
        )
    }
}

impl VectorField {
    pub fn new(eval: impl Fn(&Point) -> Point + Send + Sync + 'static) -> Self {
        Self {
            eval: Arc::new(eval),
            jacobian: None,
        }
    }

    pub fn with_jacobian(
        eval: impl Fn(&Point) -> Point + Send + Sync + 'static,
        jacobian: impl Fn(&Point) -> DMatrix<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            eval: Arc::new(eval),
            jacobian: Some(Arc::new(jacobian)),
        }
    }

    pub fn constant(value: Point) -> Self {
        let dim = value.len();
        Self::with_jacobian(move |_| value.clone(), move |_| DMatrix::zeros(dim, dim))
    }

    pub fn eval(&self, x: &Point) -> Point {
        (self.eval)(x)
    }

    pub fn has_exact_jacobian(&self) -> bool {
        self.jacobian.is_some()
    }

    fn jacobian_at(&self, x: &Point, mode: BracketMode) -> Result<DMatrix<f64>> {
        match mode {
            BracketMode::Exact => match &self.jacobian {
                Some(j) => Ok(j(x)),
                None => Err(Error::InvalidParameter(
                    "exact bracket mode requires fields with exact Jacobians".into(),
                )),
            },
            BracketMode::FiniteDifference => {
                let f = self.eval.clone();
                Ok(central_jacobian(move |y| f(y), x, bracket_step(x)))
            }
        }
    }
}

/// Differentiation mode for [`lie_bracket`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BracketMode {
    Exact,
    FiniteDifference,
}

/// [X, Y](x) = DY(x)·X(x) − DX(x)·Y(x).
pub fn lie_bracket(
    x_field: &VectorField,
    y_field: &VectorField,
    at: &Point,
    mode: BracketMode,
) -> Result<Point> {
    let jx = x_field.jacobian_at(at, mode)?;
    let jy = y_field.jacobian_at(at, mode)?;
    Ok(jy * x_field.eval(at) - jx * y_field.eval(at))
}

/// The gradient fields ∇Q₁ and ∇P₁ of the generating-shear components
/// Q₁ = q₁ and P₁ = p₁ − p₂q₁, with exact Jacobians. Their bracket is the
/// constant field −∂/∂p₂.
pub fn generating_shear_gradient_fields() -> (VectorField, VectorField) {
    let grad_q1 = VectorField::constant(DVector::from_vec(vec![1.0, 0.0, 0.0, 0.0]));
    let grad_p1 = VectorField::with_jacobian(
        |x: &Point| DVector::from_vec(vec![-x[3], 1.0, 0.0, -x[0]]),
        |_| {
            let mut j = DMatrix::zeros(4, 4);
            j[(0, 3)] = -1.0;
            j[(3, 0)] = -1.0;
            j
        },
    );
    (grad_q1, grad_p1)
}

/// Max over field pairs of the component of [Xᵢ, Xⱼ](x) orthogonal to
/// span{X₁(x), …, X_m(x)}; zero iff the fields are involutive at x.
///
/// Brackets use exact Jacobians when every field carries one, otherwise
/// central differences.
pub fn frobenius_residual(fields: &[VectorField], at: &Point) -> Result<f64> {
    if fields.len() < 2 {
        return Err(Error::InvalidParameter(
            "frobenius_residual needs at least two fields".into(),
        ));
    }
    let values: Vec<Point> = fields.iter().map(|f| f.eval(at)).collect();
    let span = Subspace::from_span_vectors(&values)?;
    if span.dim() < fields.len() {
        return Err(Error::Precondition(format!(
            "fields are dependent at the base point (span dimension {} < {})",
            span.dim(),
            fields.len()
        )));
    }
    let mode = if fields.iter().all(|f| f.has_exact_jacobian()) {
        BracketMode::Exact
    } else {
        BracketMode::FiniteDifference
    };
    let mut worst: f64 = 0.0;
    for i in 0..fields.len() {
        for j in (i + 1)..fields.len() {
            let br = lie_bracket(&fields[i], &fields[j], at, mode)?;
            let orth = &br - span.project(&br);
            worst = worst.max(orth.norm());
        }
    }
    Ok(worst)
}

/// One evaluation of the maximal expanding distribution.
#[derive(Debug, Clone)]
pub struct DistributionSample {
    pub point: Point,
    /// Ŵ(x) = Dφ(x)ᵀ·V, orthonormalized.
    pub w_hat: Subspace,
    /// |det Dψ(x)|_Ŵ| = Πσᵢ(BᵀDφ(x)), the middle Jacobian of ψ = P∘φ.
    pub jacobian_on_w_hat: f64,
    /// Complexity residual of Ŵ(x); zero exactly in the rigid case.
    pub complexity_residual: f64,
}

/// Evaluates Ŵ(x) = Dφ(x)ᵀV together with the Jacobian of ψ = P∘φ restricted
/// to it. Requires a symplectic map variant and a complex target V.
pub fn maximal_distribution(
    map: &SmoothMap,
    v: &Subspace,
    x: &Point,
) -> Result<DistributionSample> {
    if !map.is_symplectic_family() {
        return Err(Error::Precondition(
            "maximal_distribution requires a symplectic map variant".into(),
        ));
    }
    let check = is_complex_subspace(v, 1e-8);
    if !check.complex {
        return Err(Error::Precondition(format!(
            "target subspace is not complex (residual {:.3e})",
            check.residual
        )));
    }
    if v.ambient_dim() != map.codomain_dim() {
        return Err(Error::DimensionMismatch {
            expected: map.codomain_dim(),
            got: v.ambient_dim(),
        });
    }
    let d = map.jacobian(x)?;
    let candidate = d.transpose() * v.basis();
    let w_hat = Subspace::from_span(&candidate)?;
    if w_hat.dim() < v.dim() {
        // Dφ(x)ᵀ cannot lose rank for a symplectic map; this guards against a
        // broken Jacobian implementation.
        return Err(Error::RankDeficient { sigma_min: 0.0 });
    }
    let a = v.basis().transpose() * &d;
    let svals = a.svd(false, false).singular_values;
    let jacobian_on_w_hat = singular_value_product(svals.as_slice());
    let complexity_residual = w_hat.complexity_residual()?;
    Ok(DistributionSample {
        point: x.clone(),
        w_hat,
        jacobian_on_w_hat,
        complexity_residual,
    })
}

/// Membership verdict for a subspace in 𝒲(x).
#[derive(Debug, Clone, Copy)]
pub struct MembershipResult {
    /// |det Dψ(x)|_W|, via the Gram route.
    pub value: f64,
    /// value ≥ 1 − tol.
    pub member: bool,
}

/// Tests whether W belongs to 𝒲(x) = {W : |det Dψ(x)|_W| ≥ 1} for ψ = P∘φ.
pub fn membership_w(
    map: &SmoothMap,
    v: &Subspace,
    x: &Point,
    w: &Subspace,
    tol: f64,
) -> Result<MembershipResult> {
    if w.dim() != v.dim() {
        return Err(Error::DimensionMismatch {
            expected: v.dim(),
            got: w.dim(),
        });
    }
    let d = map.jacobian(x)?;
    let a = v.basis().transpose() * d;
    let value = restricted_determinant(&a, w)?;
    Ok(MembershipResult {
        value,
        member: value >= 1.0 - tol,
    })
}

/// Per-point outcome of the rigid-case diagnosis.
#[derive(Debug, Clone)]
pub struct RigidPointReport {
    pub point: Point,
    pub w_hat_residual: f64,
    /// Ŵ(x) is complex at this point (residual ≤ 1e−8).
    pub rigid: bool,
    /// Principal-angle distance between Ŵ(x) and Dφ(x)⁻¹V; only evaluated at
    /// rigid points, where the two must coincide.
    pub subspace_distance: Option<f64>,
    pub equality_ok: Option<bool>,
}

/// At each sampled point, tests the rigid-case identity: where Ŵ(x) is
/// complex, it must equal Dφ(x)⁻¹V within principal-angle distance 1e−6.
pub fn rigid_case_check(
    map: &SmoothMap,
    v: &Subspace,
    points: &[Point],
) -> Result<Vec<RigidPointReport>> {
    let mut reports = Vec::with_capacity(points.len());
    for x in points {
        let sample = maximal_distribution(map, v, x)?;
        let rigid = sample.complexity_residual <= 1e-8;
        let (subspace_distance, equality_ok) = if rigid {
            let d = map.jacobian(x)?;
            let pullback = d
                .lu()
                .solve(v.basis())
                .ok_or_else(|| Error::Numerical("Dφ(x) is singular".into()))?;
            let target = Subspace::from_span(&pullback)?;
            let dist = sample.w_hat.principal_angle_distance(&target)?;
            (Some(dist), Some(dist <= 1e-6))
        } else {
            (None, None)
        };
        reports.push(RigidPointReport {
            point: x.clone(),
            w_hat_residual: sample.complexity_residual,
            rigid,
            subspace_distance,
            equality_ok,
        });
    }
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    use crate::linear::{random_complex_subspace, random_unitary_symplectic};
    use crate::maps::{generating_shear, SmoothMap};
    use crate::rng::{gaussian_vector, seeded_rng};

    fn v_plane() -> Subspace {
        Subspace::coordinate_plane(4, &[0, 1]).unwrap()
    }

    #[test]
    fn identity_map_gives_back_v() {
        let map = SmoothMap::Identity(4);
        let v = v_plane();
        let s = maximal_distribution(&map, &v, &DVector::zeros(4)).unwrap();
        assert!(s.w_hat.principal_angle_distance(&v).unwrap() < 1e-12);
        assert_relative_eq!(s.jacobian_on_w_hat, 1.0, epsilon = 1e-12);
        assert!(s.complexity_residual < 1e-12);
    }

    #[test]
    fn generating_shear_w_hat_is_gradient_span() {
        let map = generating_shear();
        let v = v_plane();
        let mut rng = seeded_rng(3);
        let (gq, gp) = generating_shear_gradient_fields();
        for _ in 0..100 {
            let x = gaussian_vector(&mut rng, 4);
            let s = maximal_distribution(&map, &v, &x).unwrap();
            let span =
                Subspace::from_span_vectors(&[gq.eval(&x), gp.eval(&x)]).unwrap();
            assert!(s.w_hat.principal_angle_distance(&span).unwrap() < 1e-10);
            // (lincon): the middle Jacobian never drops below 1 for
            // symplectic maps.
            assert!(s.jacobian_on_w_hat >= 1.0 - 1e-9);
        }
    }

    #[test]
    fn unitary_maps_give_unit_jacobian() {
        let phi = random_unitary_symplectic(6, 11).unwrap();
        let map = SmoothMap::Linear(phi.matrix().clone());
        let v = random_complex_subspace(6, 1, 12).unwrap();
        let mut rng = seeded_rng(13);
        for _ in 0..100 {
            let x = gaussian_vector(&mut rng, 6);
            let s = maximal_distribution(&map, &v, &x).unwrap();
            assert!((s.jacobian_on_w_hat - 1.0).abs() <= 1e-8);
        }
    }

    #[test]
    fn rejects_nonsymplectic_or_noncomplex_inputs() {
        let twist = crate::maps::rho_twist(crate::maps::RhoSpec::default_gaussian());
        let v2 = Subspace::coordinate_plane(2, &[0, 1]).unwrap();
        assert!(matches!(
            maximal_distribution(&twist, &v2, &DVector::zeros(3)),
            Err(Error::Precondition(_))
        ));
        let lagrangian = Subspace::coordinate_plane(4, &[0, 2]).unwrap();
        assert!(matches!(
            maximal_distribution(&SmoothMap::Identity(4), &lagrangian, &DVector::zeros(4)),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn membership_at_w_hat_is_maximal() {
        let map = generating_shear();
        let v = v_plane();
        let mut rng = seeded_rng(17);
        for _ in 0..20 {
            let x = gaussian_vector(&mut rng, 4);
            let s = maximal_distribution(&map, &v, &x).unwrap();
            let at_w_hat = membership_w(&map, &v, &x, &s.w_hat, 1e-9).unwrap();
            assert!(at_w_hat.member);
            assert_relative_eq!(at_w_hat.value, s.jacobian_on_w_hat, epsilon = 1e-10);
            for _ in 0..100 {
                let w = Subspace::from_span_vectors(&[
                    gaussian_vector(&mut rng, 4),
                    gaussian_vector(&mut rng, 4),
                ])
                .unwrap();
                let m = membership_w(&map, &v, &x, &w, 1e-9).unwrap();
                assert!(m.value <= s.jacobian_on_w_hat + 1e-10);
            }
        }
    }

    #[test]
    fn membership_of_v_under_identity_and_tilted_lagrangian() {
        let map = SmoothMap::Identity(4);
        let v = v_plane();
        let x = DVector::zeros(4);
        let at_v = membership_w(&map, &v, &x, &v, 1e-9).unwrap();
        assert_eq!(at_v.value, 1.0);
        assert!(at_v.member);

        // Rotate the second basis vector of V toward a Lagrangian direction.
        let alpha = 0.7f64;
        let tilted = Subspace::from_span_vectors(&[
            DVector::from_vec(vec![1.0, 0.0, 0.0, 0.0]),
            DVector::from_vec(vec![0.0, alpha.cos(), alpha.sin(), 0.0]),
        ])
        .unwrap();
        let m = membership_w(&map, &v, &x, &tilted, 1e-9).unwrap();
        assert_relative_eq!(m.value, alpha.cos(), epsilon = 1e-12);
        assert!(!m.member);
    }

    #[test]
    fn bracket_of_constant_fields_vanishes() {
        let a = VectorField::constant(DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0]));
        let b = VectorField::constant(DVector::from_vec(vec![-1.0, 0.5, 0.0, 1.0]));
        let x = DVector::zeros(4);
        let br = lie_bracket(&a, &b, &x, BracketMode::Exact).unwrap();
        assert_eq!(br.norm(), 0.0);
        let br_fd = lie_bracket(&a, &b, &x, BracketMode::FiniteDifference).unwrap();
        assert!(br_fd.norm() < 1e-9);
    }

    #[test]
    fn generating_shear_bracket_is_minus_dp2() {
        let (gq, gp) = generating_shear_gradient_fields();
        let expected = DVector::from_vec(vec![0.0, 0.0, 0.0, -1.0]);
        let mut rng = seeded_rng(23);
        for _ in 0..1000 {
            let x = gaussian_vector(&mut rng, 4) * 2.0;
            let exact = lie_bracket(&gq, &gp, &x, BracketMode::Exact).unwrap();
            assert!((&exact - &expected).norm() == 0.0);
            let fd = lie_bracket(&gq, &gp, &x, BracketMode::FiniteDifference).unwrap();
            assert!((&fd - &expected).norm() <= 1e-5);
        }
    }

    #[test]
    fn bracket_antisymmetry() {
        let (gq, gp) = generating_shear_gradient_fields();
        let mut rng = seeded_rng(29);
        for _ in 0..100 {
            let x = gaussian_vector(&mut rng, 4);
            let ab = lie_bracket(&gq, &gp, &x, BracketMode::Exact).unwrap();
            let ba = lie_bracket(&gp, &gq, &x, BracketMode::Exact).unwrap();
            assert!((&ab + &ba).norm() <= 1e-10);
            let ab_fd = lie_bracket(&gq, &gp, &x, BracketMode::FiniteDifference).unwrap();
            let ba_fd = lie_bracket(&gp, &gq, &x, BracketMode::FiniteDifference).unwrap();
            assert!((&ab_fd + &ba_fd).norm() <= 1e-5);
        }
    }

    #[test]
    fn coordinate_fields_are_involutive() {
        let e1 = VectorField::constant(DVector::from_vec(vec![1.0, 0.0, 0.0, 0.0]));
        let e2 = VectorField::constant(DVector::from_vec(vec![0.0, 1.0, 0.0, 0.0]));
        let r = frobenius_residual(&[e1, e2], &DVector::zeros(4)).unwrap();
        assert_eq!(r, 0.0);
    }

    #[test]
    fn generating_shear_distribution_is_nowhere_involutive() {
        // At the origin the span is the coordinate (q₁,p₁)-plane and the
        // bracket −∂/∂p₂ is entirely orthogonal to it: residual exactly 1.
        let (gq, gp) = generating_shear_gradient_fields();
        let r0 = frobenius_residual(
            &[gq.clone(), gp.clone()],
            &DVector::zeros(4),
        )
        .unwrap();
        assert_relative_eq!(r0, 1.0, epsilon = 1e-12);
        assert!(r0 > 0.5);

        // Analytic residual: ‖(I − P)e₄‖ = √((1+p₂²)/(1+p₂²+q₁²)) > 0.
        let grid = 6;
        for a in 0..grid {
            for b in 0..grid {
                for c in 0..grid {
                    for d in 0..grid {
                        let t = |i: usize| -1.0 + 2.0 * i as f64 / (grid - 1) as f64;
                        let x = DVector::from_vec(vec![t(a), t(b), t(c), t(d)]);
                        let r = frobenius_residual(&[gq.clone(), gp.clone()], &x).unwrap();
                        let (q1, p2) = (x[0], x[3]);
                        let analytic =
                            ((1.0 + p2 * p2) / (1.0 + p2 * p2 + q1 * q1)).sqrt();
                        assert!(r > 0.0);
                        assert_relative_eq!(r, analytic, epsilon = 1e-10);
                    }
                }
            }
        }
    }

    #[test]
    fn constant_plane_stays_in_multivalued_distribution() {
        // The constant foliation parallel to span(e_{q₁}, e_{p₁}) is tangent
        // to 𝒲 for the generating shear: membership value is exactly 1.
        let map = generating_shear();
        let v = v_plane();
        let mut rng = seeded_rng(31);
        for _ in 0..200 {
            let x = gaussian_vector(&mut rng, 4) * 1.5;
            let m = membership_w(&map, &v, &x, &v, 1e-9).unwrap();
            assert!(m.member, "value {} at {x:?}", m.value);
            assert_relative_eq!(m.value, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn rigid_case_for_unitary_and_identity() {
        let phi = random_unitary_symplectic(6, 41).unwrap();
        let map = SmoothMap::Linear(phi.matrix().clone());
        let v = random_complex_subspace(6, 1, 42).unwrap();
        let mut rng = seeded_rng(43);
        let points: Vec<Point> = (0..20).map(|_| gaussian_vector(&mut rng, 6)).collect();
        for rep in rigid_case_check(&map, &v, &points).unwrap() {
            assert!(rep.rigid);
            assert!(rep.equality_ok.unwrap());
        }

        let id = SmoothMap::Identity(4);
        let v4 = v_plane();
        let pts = vec![DVector::zeros(4)];
        let reps = rigid_case_check(&id, &v4, &pts).unwrap();
        assert!(reps[0].rigid && reps[0].equality_ok.unwrap());
    }

    #[test]
    fn generating_shear_is_generically_nonrigid() {
        let map = generating_shear();
        let v = v_plane();
        let mut rng = seeded_rng(47);
        let points: Vec<Point> = (0..50)
            .map(|_| {
                let mut x = gaussian_vector(&mut rng, 4);
                // Keep away from the measure-zero rigid locus q₁ = p₂ = 0.
                if x[0].abs() < 0.1 {
                    x[0] = 0.5;
                }
                x
            })
            .collect();
        for rep in rigid_case_check(&map, &v, &points).unwrap() {
            assert!(!rep.rigid);
            assert!(rep.w_hat_residual > 1e-3);
            assert!(rep.subspace_distance.is_none());
        }
    }
}
