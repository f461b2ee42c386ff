//! Geometry kernel: the standard symplectic form Ω = Σ dpⱼ ∧ dqⱼ on ℝ²ⁿ,
//! the compatible complex structure J, Pfaffians, wedge norms, and linear
//! subspaces with complexity diagnostics.
//!
//! Coordinates are interleaved as (q₁, p₁, …, qₙ, pₙ), so the matrix of Ω is
//! block-diagonal with 2×2 blocks [[0, −1], [1, 0]] and doubles as the complex
//! structure under (qⱼ, pⱼ) ≡ qⱼ + i pⱼ. The sign pin is Ω(e_{q₁}, e_{p₁}) = −1.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Vector in ℝ²ⁿ with interleaved (q, p) coordinates.
pub type Point = DVector<f64>;

/// Orthonormality tolerance for subspace bases (BᵀB = I within this, Frobenius).
pub const ORTHONORMALITY_TOL: f64 = 1e-12;

/// Relative rank threshold for orthonormalization, against the largest
/// singular value.
pub const RANK_TOL: f64 = 1e-10;

/// Skew-symmetry tolerance accepted by [`pfaffian`] (Frobenius norm of M + Mᵀ).
pub const SKEW_TOL: f64 = 1e-10;

/// Largest matrix size accepted by the recursive Pfaffian.
pub const PFAFFIAN_MAX_DIM: usize = 12;

/// The standard symplectic structure on ℝ²ⁿ: holds n and the matrix J with
/// J² = −I, JᵀJ = I, and Ω(u, v) = uᵀJv.
#[derive(Debug, Clone)]
pub struct StdSymplectic {
    half_dim: usize,
    j: DMatrix<f64>,
}

impl StdSymplectic {
    /// Structure on ℝ^dim; `dim` must be even and positive.
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 || dim % 2 != 0 {
            return Err(Error::OddDimension {
                context: "symplectic structure",
                dim,
            });
        }
        let mut j = DMatrix::zeros(dim, dim);
        for b in 0..dim / 2 {
            j[(2 * b, 2 * b + 1)] = -1.0;
            j[(2 * b + 1, 2 * b)] = 1.0;
        }
        Ok(Self { half_dim: dim / 2, j })
    }

    pub fn dim(&self) -> usize {
        2 * self.half_dim
    }

    pub fn half_dim(&self) -> usize {
        self.half_dim
    }

    /// The matrix of Ω (equal to the complex structure).
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.j
    }

    /// J·v without forming a product: (q, p) ↦ (−p, q) per conjugate pair.
    pub fn apply(&self, v: &Point) -> Point {
        let mut out = Point::zeros(v.len());
        for b in 0..v.len() / 2 {
            out[2 * b] = -v[2 * b + 1];
            out[2 * b + 1] = v[2 * b];
        }
        out
    }
}

/// Ω(u, v) = uᵀJv. Antisymmetric; Ω(e_{q₁}, e_{p₁}) = −1.
pub fn omega_eval(u: &Point, v: &Point) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: u.len(),
            got: v.len(),
        });
    }
    if u.len() % 2 != 0 {
        return Err(Error::OddDimension {
            context: "omega_eval",
            dim: u.len(),
        });
    }
    // uᵀJv = Σ_b (u_{p_b} v_{q_b} − u_{q_b} v_{p_b})
    let mut acc = 0.0;
    for b in 0..u.len() / 2 {
        acc += u[2 * b + 1] * v[2 * b] - u[2 * b] * v[2 * b + 1];
    }
    Ok(acc)
}

/// Pfaffian of a skew-symmetric 2k×2k matrix by recursive first-row expansion.
///
/// Exact up to rounding for the sizes accepted here (2k ≤ 12); satisfies
/// Pf(M)² = det(M).
pub fn pfaffian(m: &DMatrix<f64>) -> Result<f64> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            got: m.ncols(),
        });
    }
    let dim = m.nrows();
    if dim % 2 != 0 {
        return Err(Error::OddDimension {
            context: "pfaffian",
            dim,
        });
    }
    if dim > PFAFFIAN_MAX_DIM {
        return Err(Error::InvalidParameter(format!(
            "pfaffian accepts matrices up to {PFAFFIAN_MAX_DIM}×{PFAFFIAN_MAX_DIM}, got {dim}"
        )));
    }
    let asymmetry = (m + m.transpose()).norm();
    if asymmetry > SKEW_TOL {
        return Err(Error::NotSkewSymmetric { asymmetry });
    }
    let idx: Vec<usize> = (0..dim).collect();
    Ok(pfaffian_rec(m, &idx))
}

fn pfaffian_rec(m: &DMatrix<f64>, idx: &[usize]) -> f64 {
    match idx.len() {
        0 => 1.0,
        2 => m[(idx[0], idx[1])],
        _ => {
            let mut acc = 0.0;
            let mut sign = 1.0;
            for j in 1..idx.len() {
                let entry = m[(idx[0], idx[j])];
                if entry != 0.0 {
                    let rest: Vec<usize> = idx[1..]
                        .iter()
                        .enumerate()
                        .filter(|&(i, _)| i != j - 1)
                        .map(|(_, &v)| v)
                        .collect();
                    acc += sign * entry * pfaffian_rec(m, &rest);
                }
                sign = -sign;
            }
            acc
        }
    }
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// Ω-Gram matrix G with G_{ij} = Ω(uᵢ, uⱼ).
fn omega_gram(vectors: &[Point]) -> Result<DMatrix<f64>> {
    let m = vectors.len();
    let mut g = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in (i + 1)..m {
            let v = omega_eval(&vectors[i], &vectors[j])?;
            g[(i, j)] = v;
            g[(j, i)] = -v;
        }
    }
    Ok(g)
}

/// Ω^k evaluated on a tuple of 2k vectors, computed as k!·Pf(G) with
/// G_{ij} = Ω(uᵢ, uⱼ). Vanishes on tuples with a repeated vector.
pub fn omega_power_eval(vectors: &[Point]) -> Result<f64> {
    if vectors.is_empty() || vectors.len() % 2 != 0 {
        return Err(Error::InvalidParameter(format!(
            "omega_power_eval needs a nonempty tuple of even length, got {}",
            vectors.len()
        )));
    }
    let dim = vectors[0].len();
    for v in vectors {
        if v.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: v.len(),
            });
        }
    }
    if dim % 2 != 0 {
        return Err(Error::OddDimension {
            context: "omega_power_eval",
            dim,
        });
    }
    let k = vectors.len() / 2;
    if k > dim / 2 {
        return Err(Error::InvalidParameter(format!(
            "Ω^{k} vanishes identically on ℝ^{dim}: k exceeds n = {}",
            dim / 2
        )));
    }
    let g = omega_gram(vectors)?;
    Ok(factorial(k) * pfaffian(&g)?)
}

/// |u₁ ∧ ⋯ ∧ u_m| = √det(Gram), the m-volume of the prism spanned by the
/// tuple; 0 iff linearly dependent.
pub fn wedge_norm(vectors: &[Point]) -> Result<f64> {
    if vectors.is_empty() {
        return Ok(1.0);
    }
    let dim = vectors[0].len();
    for v in vectors {
        if v.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: v.len(),
            });
        }
    }
    let m = vectors.len();
    let mut gram = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in i..m {
            let d = vectors[i].dot(&vectors[j]);
            gram[(i, j)] = d;
            gram[(j, i)] = d;
        }
    }
    Ok(gram.determinant().max(0.0).sqrt())
}

/// Two-sided record for the comass inequality |Ω^k[u]| ≤ k!·|u₁ ∧ ⋯ ∧ u_{2k}|.
#[derive(Debug, Clone)]
pub struct WirtingerReport {
    /// |Ω^k[u₁,…,u_{2k}]|
    pub lhs: f64,
    /// k!·|u₁ ∧ ⋯ ∧ u_{2k}|
    pub rhs: f64,
    /// rhs − lhs; nonnegative up to rounding.
    pub gap: f64,
    /// Complexity residual of span{u₁,…,u_{2k}}; 0 iff the span is complex,
    /// which is exactly the equality case.
    pub span_complexity_residual: f64,
    /// True when the tuple is linearly dependent (wedge norm ≤ 1e−10); both
    /// sides are then reported as zero.
    pub degenerate: bool,
}

/// Evaluates both sides of the comass inequality on a 2k-tuple.
///
/// Degenerate tuples are reported, not rejected: lhs = rhs = gap = 0.
pub fn wirtinger_check(vectors: &[Point]) -> Result<WirtingerReport> {
    if vectors.is_empty() || vectors.len() % 2 != 0 {
        return Err(Error::InvalidParameter(format!(
            "wirtinger_check needs a nonempty tuple of even length, got {}",
            vectors.len()
        )));
    }
    let k = vectors.len() / 2;
    let wedge = wedge_norm(vectors)?;
    let span = Subspace::from_span_vectors(vectors)?;
    let residual = span.complexity_residual().unwrap_or(f64::INFINITY);
    if wedge <= 1e-10 {
        return Ok(WirtingerReport {
            lhs: 0.0,
            rhs: 0.0,
            gap: 0.0,
            span_complexity_residual: residual,
            degenerate: true,
        });
    }
    let lhs = omega_power_eval(vectors)?.abs();
    let rhs = factorial(k) * wedge;
    Ok(WirtingerReport {
        lhs,
        rhs,
        gap: rhs - lhs,
        span_complexity_residual: residual,
        degenerate: false,
    })
}

/// Linear subspace of ℝ^d held as a matrix with orthonormal columns.
#[derive(Debug, Clone)]
pub struct Subspace {
    basis: DMatrix<f64>,
}

impl Subspace {
    /// Wraps an already-orthonormal basis; rejects bases with
    /// ‖BᵀB − I‖_F > 1e−12.
    pub fn from_orthonormal(basis: DMatrix<f64>) -> Result<Self> {
        if basis.ncols() == 0 || basis.ncols() > basis.nrows() {
            return Err(Error::InvalidParameter(format!(
                "subspace dimension {} invalid for ambient {}",
                basis.ncols(),
                basis.nrows()
            )));
        }
        let gram = basis.transpose() * &basis;
        let defect = (&gram - DMatrix::identity(gram.nrows(), gram.ncols())).norm();
        if defect > ORTHONORMALITY_TOL {
            return Err(Error::InvalidParameter(format!(
                "basis is not orthonormal: ‖BᵀB − I‖_F = {defect:.3e}"
            )));
        }
        Ok(Self { basis })
    }

    /// Orthonormal basis of the column span of `spanning`, via SVD with rank
    /// cut at 1e−10 relative to the largest singular value.
    pub fn from_span(spanning: &DMatrix<f64>) -> Result<Self> {
        let svd = spanning.clone().svd(true, false);
        let u = svd
            .u
            .as_ref()
            .ok_or_else(|| Error::Numerical("SVD failed to produce U".into()))?;
        let sigma_max = svd.singular_values.max();
        if !(sigma_max > 0.0) || !sigma_max.is_finite() {
            return Err(Error::RankDeficient { sigma_min: 0.0 });
        }
        let rank = svd
            .singular_values
            .iter()
            .filter(|&&s| s > RANK_TOL * sigma_max)
            .count();
        if rank == 0 {
            return Err(Error::RankDeficient {
                sigma_min: svd.singular_values.min(),
            });
        }
        Ok(Self {
            basis: u.columns(0, rank).into_owned(),
        })
    }

    /// [`Subspace::from_span`] on a slice of vectors.
    pub fn from_span_vectors(vectors: &[Point]) -> Result<Self> {
        if vectors.is_empty() {
            return Err(Error::InvalidParameter("empty spanning set".into()));
        }
        let dim = vectors[0].len();
        for v in vectors {
            if v.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: v.len(),
                });
            }
        }
        let m = DMatrix::from_fn(dim, vectors.len(), |r, c| vectors[c][r]);
        Self::from_span(&m)
    }

    /// Coordinate plane spanned by the given axes of ℝ^ambient.
    pub fn coordinate_plane(ambient: usize, axes: &[usize]) -> Result<Self> {
        let mut basis = DMatrix::zeros(ambient, axes.len());
        for (c, &a) in axes.iter().enumerate() {
            if a >= ambient {
                return Err(Error::InvalidParameter(format!(
                    "axis {a} out of range for ambient {ambient}"
                )));
            }
            basis[(a, c)] = 1.0;
        }
        Self::from_orthonormal(basis)
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    /// Coordinates of `v` in the subspace basis: Bᵀv.
    pub fn project_coords(&self, v: &Point) -> Point {
        self.basis.tr_mul(v)
    }

    /// Orthogonal projection of `v` onto the subspace: BBᵀv.
    pub fn project(&self, v: &Point) -> Point {
        &self.basis * self.basis.tr_mul(v)
    }

    /// ‖(I − BBᵀ)JB‖_F; basis-independent, zero exactly when JW = W.
    ///
    /// Requires an even ambient dimension (J must exist there).
    pub fn complexity_residual(&self) -> Result<f64> {
        if self.ambient_dim() % 2 != 0 {
            return Err(Error::OddDimension {
                context: "complexity residual",
                dim: self.ambient_dim(),
            });
        }
        let sym = StdSymplectic::new(self.ambient_dim())?;
        let jb = sym.matrix() * &self.basis;
        let proj = &self.basis * self.basis.tr_mul(&jb);
        Ok((jb - proj).norm())
    }

    /// Largest principal angle to another subspace of the same dimension,
    /// from the singular values of BᵀB′.
    pub fn principal_angle_distance(&self, other: &Subspace) -> Result<f64> {
        if self.ambient_dim() != other.ambient_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.ambient_dim(),
                got: other.ambient_dim(),
            });
        }
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        let product = self.basis.tr_mul(&other.basis);
        let svd = product.svd(false, false);
        let sigma_min = svd.singular_values.min();
        Ok(sigma_min.clamp(-1.0, 1.0).acos())
    }
}

/// Outcome of a complexity test: the residual and the thresholded verdict.
#[derive(Debug, Clone, Copy)]
pub struct ComplexityCheck {
    pub complex: bool,
    pub residual: f64,
}

/// Tests JW = W within `tol` on the residual. Odd-dimensional subspaces (and
/// odd ambient spaces) can never be complex and report an infinite residual.
pub fn is_complex_subspace(w: &Subspace, tol: f64) -> ComplexityCheck {
    if w.dim() % 2 != 0 || w.ambient_dim() % 2 != 0 {
        return ComplexityCheck {
            complex: false,
            residual: f64::INFINITY,
        };
    }
    match w.complexity_residual() {
        Ok(residual) => ComplexityCheck {
            complex: residual <= tol,
            residual,
        },
        Err(_) => ComplexityCheck {
            complex: false,
            residual: f64::INFINITY,
        },
    }
}
