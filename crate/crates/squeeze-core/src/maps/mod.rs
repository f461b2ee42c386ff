//! Nonlinear map zoo: the shear built from a bump profile, the generating-
//! function shear, the radial twist, and closed constructions (rescaling,
//! composition, products) — all with exact Jacobians.

mod bump;
mod rho;

pub use bump::BumpProfile;
pub use rho::{twist_j2_closed_form, twist_j2_crossing, RhoSpec};

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::geom::{Point, StdSymplectic};
use crate::linear::symplectic_residual as matrix_symplectic_residual;
use crate::rng::seeded_rng;

/// Residual accepted for symplectic map variants at sampled points.
pub const MAP_SYMPLECTIC_TOL: f64 = 1e-9;

/// An analytic map with exact evaluation and exact Jacobian.
#[derive(Debug, Clone)]
pub enum SmoothMap {
    /// Identity on ℝ^d.
    Identity(usize),
    /// x ↦ Mx for a (possibly rectangular) matrix.
    Linear(DMatrix<f64>),
    /// (q₁,p₁,q₂,p₂) ↦ (q₁, p₁+χ(q₂), q₂, p₂+χ'(q₂)q₁): the time-one map of
    /// the Hamiltonian flow of H = −χ(q₂)q₁.
    GuthShear(BumpProfile),
    /// The map generated by S(Q,p) = ½p₂Q₁² through Q = q + ∂S/∂p,
    /// P = p − ∂S/∂Q: (q₁, p₁−p₂q₁, q₂+½q₁², p₂).
    GeneratingShear,
    /// (z, t) ∈ ℝ²×ℝ ↦ ρ(|z|)·e^{it}·z ∈ ℝ².
    RhoTwist(RhoSpec),
    /// z ↦ inner(Rz)/R.
    Rescaled { inner: Box<SmoothMap>, radius: f64 },
    /// Left-to-right composition.
    Composite(Vec<SmoothMap>),
    /// Block product acting on ℝ^{da+db} = ℝ^da × ℝ^db.
    Product(Box<SmoothMap>, Box<SmoothMap>),
}

/// The shear associated with a bump profile.
pub fn guth_shear(profile: BumpProfile) -> SmoothMap {
    SmoothMap::GuthShear(profile)
}

/// The generating-function shear on ℝ⁴.
pub fn generating_shear() -> SmoothMap {
    SmoothMap::GeneratingShear
}

/// The radial twist ℝ³ → ℝ² for a profile.
pub fn rho_twist(spec: RhoSpec) -> SmoothMap {
    SmoothMap::RhoTwist(spec)
}

/// z ↦ map(Rz)/R; symplectic whenever `map` is.
pub fn rescale_map(map: SmoothMap, radius: f64) -> Result<SmoothMap> {
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "rescale radius must be positive, got {radius}"
        )));
    }
    Ok(SmoothMap::Rescaled {
        inner: Box::new(map),
        radius,
    })
}

/// Composition applied left to right; validates the dimension chain.
pub fn compose(maps: Vec<SmoothMap>) -> Result<SmoothMap> {
    if maps.is_empty() {
        return Err(Error::InvalidParameter("empty composition".into()));
    }
    for pair in maps.windows(2) {
        if pair[0].codomain_dim() != pair[1].domain_dim() {
            return Err(Error::DimensionMismatch {
                expected: pair[0].codomain_dim(),
                got: pair[1].domain_dim(),
            });
        }
    }
    Ok(SmoothMap::Composite(maps))
}

/// Block product a × b.
pub fn product(a: SmoothMap, b: SmoothMap) -> SmoothMap {
    SmoothMap::Product(Box::new(a), Box::new(b))
}

impl SmoothMap {
    pub fn domain_dim(&self) -> usize {
        match self {
            SmoothMap::Identity(d) => *d,
            SmoothMap::Linear(m) => m.ncols(),
            SmoothMap::GuthShear(_) | SmoothMap::GeneratingShear => 4,
            SmoothMap::RhoTwist(_) => 3,
            SmoothMap::Rescaled { inner, .. } => inner.domain_dim(),
            SmoothMap::Composite(maps) => maps[0].domain_dim(),
            SmoothMap::Product(a, b) => a.domain_dim() + b.domain_dim(),
        }
    }

    pub fn codomain_dim(&self) -> usize {
        match self {
            SmoothMap::Identity(d) => *d,
            SmoothMap::Linear(m) => m.nrows(),
            SmoothMap::GuthShear(_) | SmoothMap::GeneratingShear => 4,
            SmoothMap::RhoTwist(_) => 2,
            SmoothMap::Rescaled { inner, .. } => inner.codomain_dim(),
            SmoothMap::Composite(maps) => maps.last().unwrap().codomain_dim(),
            SmoothMap::Product(a, b) => a.codomain_dim() + b.codomain_dim(),
        }
    }

    fn check_domain(&self, x: &Point) -> Result<()> {
        if x.len() != self.domain_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.domain_dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    pub fn eval(&self, x: &Point) -> Result<Point> {
        self.check_domain(x)?;
        Ok(match self {
            SmoothMap::Identity(_) => x.clone(),
            SmoothMap::Linear(m) => m * x,
            SmoothMap::GuthShear(p) => {
                let (q1, p1, q2, p2) = (x[0], x[1], x[2], x[3]);
                DVector::from_vec(vec![
                    q1,
                    p1 + p.chi(q2),
                    q2,
                    p2 + p.chi_prime(q2) * q1,
                ])
            }
            SmoothMap::GeneratingShear => {
                let (q1, p1, q2, p2) = (x[0], x[1], x[2], x[3]);
                DVector::from_vec(vec![q1, p1 - p2 * q1, q2 + 0.5 * q1 * q1, p2])
            }
            SmoothMap::RhoTwist(spec) => {
                let (zx, zy, t) = (x[0], x[1], x[2]);
                let r = (zx * zx + zy * zy).sqrt();
                let rho = spec.rho(r);
                let (s, c) = t.sin_cos();
                DVector::from_vec(vec![rho * (c * zx - s * zy), rho * (s * zx + c * zy)])
            }
            SmoothMap::Rescaled { inner, radius } => {
                inner.eval(&(x * *radius))? / *radius
            }
            SmoothMap::Composite(maps) => {
                let mut y = x.clone();
                for m in maps {
                    y = m.eval(&y)?;
                }
                y
            }
            SmoothMap::Product(a, b) => {
                let da = a.domain_dim();
                let xa = x.rows(0, da).into_owned();
                let xb = x.rows(da, b.domain_dim()).into_owned();
                let ya = a.eval(&xa)?;
                let yb = b.eval(&xb)?;
                let mut out = DVector::zeros(ya.len() + yb.len());
                out.rows_mut(0, ya.len()).copy_from(&ya);
                out.rows_mut(ya.len(), yb.len()).copy_from(&yb);
                out
            }
        })
    }

    pub fn jacobian(&self, x: &Point) -> Result<DMatrix<f64>> {
        self.check_domain(x)?;
        Ok(match self {
            SmoothMap::Identity(d) => DMatrix::identity(*d, *d),
            SmoothMap::Linear(m) => m.clone(),
            SmoothMap::GuthShear(p) => {
                let (q1, q2) = (x[0], x[2]);
                let cp = p.chi_prime(q2);
                let cs = p.chi_second(q2);
                DMatrix::from_row_slice(
                    4,
                    4,
                    &[
                        1.0, 0.0, 0.0, 0.0, //
                        0.0, 1.0, cp, 0.0, //
                        0.0, 0.0, 1.0, 0.0, //
                        cp, 0.0, cs * q1, 1.0,
                    ],
                )
            }
            SmoothMap::GeneratingShear => {
                let (q1, p2) = (x[0], x[3]);
                DMatrix::from_row_slice(
                    4,
                    4,
                    &[
                        1.0, 0.0, 0.0, 0.0, //
                        -p2, 1.0, 0.0, -q1, //
                        q1, 0.0, 1.0, 0.0, //
                        0.0, 0.0, 0.0, 1.0,
                    ],
                )
            }
            SmoothMap::RhoTwist(spec) => {
                // Dφ = [R(t)·(ρI + (ρ'/r)·zzᵀ) | ρ·R(t)·J₂z] in Cartesian form;
                // ρ'/r enters through its even extension, so r = 0 is regular.
                let (zx, zy, t) = (x[0], x[1], x[2]);
                let r = (zx * zx + zy * zy).sqrt();
                let rho = spec.rho(r);
                let g = spec.rho_prime_over_r(r);
                let (s, c) = t.sin_cos();
                let m11 = rho + g * zx * zx;
                let m12 = g * zx * zy;
                let m22 = rho + g * zy * zy;
                // Rotation applied to the 2×2 block and to ρ·J₂z = ρ·(−zy, zx).
                let col_t = (-rho * zy, rho * zx);
                DMatrix::from_row_slice(
                    2,
                    3,
                    &[
                        c * m11 - s * m12,
                        c * m12 - s * m22,
                        c * col_t.0 - s * col_t.1,
                        s * m11 + c * m12,
                        s * m12 + c * m22,
                        s * col_t.0 + c * col_t.1,
                    ],
                )
            }
            SmoothMap::Rescaled { inner, radius } => inner.jacobian(&(x * *radius))?,
            SmoothMap::Composite(maps) => {
                let mut y = x.clone();
                let mut jac: Option<DMatrix<f64>> = None;
                for m in maps {
                    let step = m.jacobian(&y)?;
                    jac = Some(match jac {
                        None => step.clone(),
                        Some(prev) => &step * prev,
                    });
                    y = m.eval(&y)?;
                }
                jac.unwrap()
            }
            SmoothMap::Product(a, b) => {
                let da = a.domain_dim();
                let xa = x.rows(0, da).into_owned();
                let xb = x.rows(da, b.domain_dim()).into_owned();
                let ja = a.jacobian(&xa)?;
                let jb = b.jacobian(&xb)?;
                let mut out = DMatrix::zeros(ja.nrows() + jb.nrows(), ja.ncols() + jb.ncols());
                out.view_mut((0, 0), (ja.nrows(), ja.ncols())).copy_from(&ja);
                out.view_mut((ja.nrows(), ja.ncols()), (jb.nrows(), jb.ncols()))
                    .copy_from(&jb);
                out
            }
        })
    }

    /// Whether this variant belongs to the symplectic family: linear maps with
    /// symplectic matrix, the two shears, and rescalings / compositions /
    /// products thereof.
    pub fn is_symplectic_family(&self) -> bool {
        match self {
            SmoothMap::Identity(d) => d % 2 == 0,
            SmoothMap::Linear(m) => {
                m.nrows() == m.ncols()
                    && matrix_symplectic_residual(m)
                        .map(|r| r <= MAP_SYMPLECTIC_TOL)
                        .unwrap_or(false)
            }
            SmoothMap::GuthShear(_) | SmoothMap::GeneratingShear => true,
            SmoothMap::RhoTwist(_) => false,
            SmoothMap::Rescaled { inner, .. } => inner.is_symplectic_family(),
            SmoothMap::Composite(maps) => maps.iter().all(|m| m.is_symplectic_family()),
            SmoothMap::Product(a, b) => a.is_symplectic_family() && b.is_symplectic_family(),
        }
    }

    /// ‖Dφ(x)ᵀ·J·Dφ(x) − J‖_F at a point; defined for square even-dimensional
    /// maps.
    pub fn symplectic_residual_at(&self, x: &Point) -> Result<f64> {
        if self.domain_dim() != self.codomain_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.domain_dim(),
                got: self.codomain_dim(),
            });
        }
        let sym = StdSymplectic::new(self.domain_dim())?;
        let d = self.jacobian(x)?;
        Ok((d.transpose() * sym.matrix() * &d - sym.matrix()).norm())
    }
}

/// The 2k-Jacobian at a point: product of all codomain-many singular values of
/// Dψ(x), which equals max over 2k-dimensional subspaces W of |det Dψ(x)|_W|.
#[derive(Debug, Clone, Copy)]
pub struct MiddleJacobian {
    pub value: f64,
    /// Dψ(x) lost rank (σ_min ≤ 1e−12·σ_max); the value is reported as 0.
    pub rank_deficient: bool,
}

/// Computes the middle Jacobian of a map whose codomain dimension plays the
/// role of 2k; requires codomain ≤ domain.
pub fn middle_jacobian(map: &SmoothMap, x: &Point) -> Result<MiddleJacobian> {
    if map.codomain_dim() > map.domain_dim() {
        return Err(Error::DimensionMismatch {
            expected: map.domain_dim(),
            got: map.codomain_dim(),
        });
    }
    let jac = map.jacobian(x)?;
    let svals = jac.svd(false, false).singular_values;
    let sigma_max = svals.max();
    if !(sigma_max > 0.0) || svals.min() <= 1e-12 * sigma_max {
        return Ok(MiddleJacobian {
            value: 0.0,
            rank_deficient: true,
        });
    }
    Ok(MiddleJacobian {
        value: crate::linear::singular_value_product(svals.as_slice()),
        rank_deficient: false,
    })
}

/// Independent evaluation of the generating-function map by solving
/// Q = q + ∂S/∂p(Q, p), P = p − ∂S/∂Q(Q, p) with fixed-point iteration,
/// S(Q, p) = ½p₂Q₁². Cross-checks the closed form.
pub fn generating_shear_implicit(x: &Point) -> Result<Point> {
    if x.len() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            got: x.len(),
        });
    }
    let (q1, p1, q2, p2) = (x[0], x[1], x[2], x[3]);
    let mut big_q = [q1, q2];
    let mut converged = false;
    for _ in 0..200 {
        // ∂S/∂p = (0, ½Q₁²)
        let next = [q1, q2 + 0.5 * big_q[0] * big_q[0]];
        let delta = (next[0] - big_q[0]).abs() + (next[1] - big_q[1]).abs();
        big_q = next;
        if delta <= 1e-15 * (1.0 + big_q[0].abs() + big_q[1].abs()) {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Numerical(
            "implicit generating-shear solve did not converge".into(),
        ));
    }
    // ∂S/∂Q = (p₂Q₁, 0)
    let big_p = [p1 - p2 * big_q[0], p2];
    Ok(DVector::from_vec(vec![big_q[0], big_p[0], big_q[1], big_p[1]]))
}

/// Sampled verification of the disjointness bounds used by the embedding
/// argument: for (q₁,p₁) ∈ B²(R) and (q₂,p₂) ∈ [−2R,2R]×(−ε,ε),
/// (a) |p₂ + χ'(q₂)q₁| < 2R always, and
/// (b) p₁ + χ(q₂) ≥ R whenever |q₂| < ε.
#[derive(Debug, Clone)]
pub struct DisjointnessReport {
    pub samples: u64,
    pub violations: u64,
    /// min over samples of 2R − |p₂ + χ'(q₂)q₁|; positive iff (a) held.
    pub worst_margin_a: f64,
    /// min over plateau samples of p₁ + χ(q₂) − R; `None` if no sample had
    /// |q₂| < ε.
    pub worst_margin_b: Option<f64>,
    /// First violating sample (q₁,p₁,q₂,p₂), if any.
    pub witness: Option<[f64; 4]>,
}

pub fn disjointness_bounds_verify(
    profile: &BumpProfile,
    samples: u64,
    seed: u64,
) -> Result<DisjointnessReport> {
    if samples == 0 {
        return Err(Error::InvalidParameter("samples must be ≥ 1".into()));
    }
    let r = profile.radius();
    let eps = profile.eps();
    let mut rng = seeded_rng(seed);
    let mut violations = 0u64;
    let mut worst_a = f64::INFINITY;
    let mut worst_b: Option<f64> = None;
    let mut witness = None;
    for _ in 0..samples {
        let theta: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let rad = r * rng.random::<f64>().sqrt();
        let (q1, p1) = (rad * theta.cos(), rad * theta.sin());
        let q2: f64 = rng.random_range(-2.0 * r..2.0 * r);
        let p2: f64 = rng.random_range(-eps..eps);

        let fourth = p2 + profile.chi_prime(q2) * q1;
        let margin_a = 2.0 * r - fourth.abs();
        worst_a = worst_a.min(margin_a);
        let mut violated = margin_a <= 0.0;

        if q2.abs() < eps {
            let margin_b = p1 + profile.chi(q2) - r;
            worst_b = Some(worst_b.map_or(margin_b, |w: f64| w.min(margin_b)));
            violated |= margin_b < 0.0;
        }
        if violated {
            violations += 1;
            if witness.is_none() {
                witness = Some([q1, p1, q2, p2]);
            }
        }
    }
    Ok(DisjointnessReport {
        samples,
        violations,
        worst_margin_a: worst_a,
        worst_margin_b: worst_b,
        witness,
    })
}
