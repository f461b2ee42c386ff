//! Linear symplectic analysis: random symplectic and unitary-symplectic
//! matrices, exact volumes of linear images of balls, and the nonsqueezing
//! verifier with its equality characterization.
//!
//! For a surjection A: ℝ²ⁿ → ℝ^m the image of the unit ball is an ellipsoid
//! with vol_m(A(B²ⁿ)) = ω_m·Πσᵢ(A), and W ↦ |det A|_W| attains its unique
//! maximum on the Grassmannian at ran Aᵀ. Both facts drive the verifier: for
//! A = BᵀΦ the pullback ran Aᵀ = ΦᵀV decides the equality case.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::exec::{map_blocks, Execution};
use crate::expm::expm;
use crate::geom::{is_complex_subspace, StdSymplectic, Subspace};
use crate::rng::{derive_seed, seeded_rng};

/// Symplectic residual accepted at construction: ‖ΦᵀJΦ − J‖_F.
pub const SYMPLECTIC_TOL: f64 = 1e-9;

/// Slack for the volume inequality (ratio ≥ 1 − slack).
pub const INEQUALITY_SLACK: f64 = 1e-9;

/// Default tolerance for equality detection (|ratio − 1| ≤ tol).
pub const EQUALITY_TOL: f64 = 1e-8;

/// Default entry scale for random generator sampling.
pub const DEFAULT_SCALE: f64 = 0.5;

/// Smallest singular value below which a linear map is treated as
/// rank-deficient (its image has measure zero).
pub const SURJECTIVITY_TOL: f64 = 1e-10;

/// A linear symplectic automorphism, validated at construction.
#[derive(Debug, Clone)]
pub struct SymplecticMatrix {
    entries: DMatrix<f64>,
    residual: f64,
}

impl SymplecticMatrix {
    /// Accepts Φ with ‖ΦᵀJΦ − J‖_F ≤ 1e−9.
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        let residual = symplectic_residual(&entries)?;
        if residual > SYMPLECTIC_TOL {
            return Err(Error::NotSymplectic {
                residual,
                tol: SYMPLECTIC_TOL,
            });
        }
        Ok(Self { entries, residual })
    }

    pub fn identity(dim: usize) -> Result<Self> {
        Self::new(DMatrix::identity(dim, dim))
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// ‖ΦJ − JΦ‖_F; zero for unitary (complex-linear) matrices.
    pub fn commutator_with_j(&self) -> Result<f64> {
        let j = StdSymplectic::new(self.dim())?;
        Ok((&self.entries * j.matrix() - j.matrix() * &self.entries).norm())
    }
}

/// ‖MᵀJM − J‖_F for a square even-dimensional matrix.
pub fn symplectic_residual(m: &DMatrix<f64>) -> Result<f64> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            got: m.ncols(),
        });
    }
    let sym = StdSymplectic::new(m.nrows())?;
    let j = sym.matrix();
    Ok((m.transpose() * j * m - j).norm())
}

fn check_generator_dim(dim: usize) -> Result<()> {
    if dim % 2 != 0 || !(4..=16).contains(&dim) {
        return Err(Error::InvalidParameter(format!(
            "random symplectic generators accept even dims in 4..=16, got {dim}"
        )));
    }
    Ok(())
}

/// Random symplectic matrix exp(JS), S symmetric with i.i.d. uniform entries
/// in [−scale, scale]. Deterministic in the seed; scale 0 gives the identity.
pub fn random_symplectic(dim: usize, scale: f64, seed: u64) -> Result<SymplecticMatrix> {
    check_generator_dim(dim)?;
    if scale < 0.0 || !scale.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "scale must be a finite nonnegative number, got {scale}"
        )));
    }
    let mut rng = seeded_rng(seed);
    let mut s = DMatrix::zeros(dim, dim);
    for i in 0..dim {
        for j in i..dim {
            let v: f64 = if scale > 0.0 {
                rand::Rng::random_range(&mut rng, -scale..scale)
            } else {
                0.0
            };
            s[(i, j)] = v;
            s[(j, i)] = v;
        }
    }
    let j = StdSymplectic::new(dim)?;
    let phi = expm(&(j.matrix() * s))?;
    SymplecticMatrix::new(phi)
}

/// Random unitary-symplectic matrix: exp(JS) with S the real representation
/// of a Hermitian matrix, so that S is symmetric and commutes with J. The
/// result is symplectic, orthogonal, and commutes with J.
pub fn random_unitary_symplectic(dim: usize, seed: u64) -> Result<SymplecticMatrix> {
    check_generator_dim(dim)?;
    let n = dim / 2;
    let scale = DEFAULT_SCALE;
    let mut rng = seeded_rng(seed);
    let mut draw = |lo: f64, hi: f64| rand::Rng::random_range(&mut rng, lo..hi);
    // Hermitian H = A + iB: A symmetric, B skew.
    let mut a = DMatrix::zeros(n, n);
    let mut b = DMatrix::zeros(n, n);
    for i in 0..n {
        a[(i, i)] = draw(-scale, scale);
        for j in (i + 1)..n {
            let re = draw(-scale, scale);
            let im = draw(-scale, scale);
            a[(i, j)] = re;
            a[(j, i)] = re;
            b[(i, j)] = im;
            b[(j, i)] = -im;
        }
    }
    // Interleaved real representation: block (j,k) = [[a, −b], [b, a]].
    let mut s = DMatrix::zeros(dim, dim);
    for i in 0..n {
        for j in 0..n {
            s[(2 * i, 2 * j)] = a[(i, j)];
            s[(2 * i, 2 * j + 1)] = -b[(i, j)];
            s[(2 * i + 1, 2 * j)] = b[(i, j)];
            s[(2 * i + 1, 2 * j + 1)] = a[(i, j)];
        }
    }
    let j = StdSymplectic::new(dim)?;
    let phi = expm(&(j.matrix() * s))?;
    SymplecticMatrix::new(phi)
}

/// Orthonormal basis of span{w₁, Jw₁, …, w_k, Jw_k} for given seed vectors.
pub fn complex_span(vectors: &[crate::geom::Point]) -> Result<Subspace> {
    if vectors.is_empty() {
        return Err(Error::InvalidParameter("complex_span of empty set".into()));
    }
    let dim = vectors[0].len();
    let sym = StdSymplectic::new(dim)?;
    let mut cols = Vec::with_capacity(2 * vectors.len());
    for w in vectors {
        if w.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: w.len(),
            });
        }
        cols.push(w.clone());
        cols.push(sym.apply(w));
    }
    Subspace::from_span_vectors(&cols)
}

/// Random complex subspace of real dimension 2k in ℝ^dim, drawn as the
/// complex span of k Gaussian vectors (resampled on degenerate draws).
pub fn random_complex_subspace(dim: usize, k: usize, seed: u64) -> Result<Subspace> {
    if dim % 2 != 0 {
        return Err(Error::OddDimension {
            context: "random_complex_subspace",
            dim,
        });
    }
    if k == 0 || k > dim / 2 {
        return Err(Error::InvalidParameter(format!(
            "k = {k} out of range 1..={}",
            dim / 2
        )));
    }
    let mut rng = seeded_rng(seed);
    for _attempt in 0..10 {
        let ws: Vec<_> = (0..k)
            .map(|_| crate::rng::gaussian_vector(&mut rng, dim))
            .collect();
        let span = complex_span(&ws)?;
        if span.dim() == 2 * k {
            return Ok(span);
        }
    }
    Err(Error::Numerical(
        "random_complex_subspace: 10 degenerate draws in a row".into(),
    ))
}

/// Volume of the unit m-ball: ω₀ = 1, ω₁ = 2, ω_m = ω_{m−2}·2π/m.
pub fn unit_ball_volume(m: usize) -> f64 {
    match m {
        0 => 1.0,
        1 => 2.0,
        _ => unit_ball_volume(m - 2) * 2.0 * std::f64::consts::PI / m as f64,
    }
}

/// Product of all singular values, accumulated in log space.
pub(crate) fn singular_value_product(svals: &[f64]) -> f64 {
    if svals.iter().any(|&s| s <= 0.0) {
        return 0.0;
    }
    svals.iter().map(|s| s.ln()).sum::<f64>().exp()
}

/// Exact volume of a linear image of the unit ball.
#[derive(Debug, Clone, Copy)]
pub struct ProjectedVolume {
    /// vol_m(A(B²ⁿ)) = ω_m·Πσᵢ(A); zero when degenerate.
    pub value: f64,
    /// Set when A is not onto (smallest singular value ≤ 1e−10): the image
    /// has measure zero.
    pub degenerate: bool,
}

/// vol_m(A(Bⁿ)) for an m×n matrix A, m ≤ n, via the singular value product.
pub fn projected_ball_volume(a: &DMatrix<f64>) -> Result<ProjectedVolume> {
    if a.nrows() > a.ncols() {
        return Err(Error::DimensionMismatch {
            expected: a.ncols(),
            got: a.nrows(),
        });
    }
    let svals = a.clone().svd(false, false).singular_values;
    let degenerate = svals.min() <= SURJECTIVITY_TOL;
    let value = if degenerate {
        0.0
    } else {
        unit_ball_volume(a.nrows()) * singular_value_product(svals.as_slice())
    };
    Ok(ProjectedVolume { value, degenerate })
}

/// Orthonormal basis of ran Aᵀ = (ker A)^⊥, the unique maximizer of
/// W ↦ |det A|_W| over the Grassmannian.
pub fn maximal_expanding_subspace(a: &DMatrix<f64>) -> Result<Subspace> {
    if a.nrows() > a.ncols() {
        return Err(Error::DimensionMismatch {
            expected: a.ncols(),
            got: a.nrows(),
        });
    }
    let svd = a.clone().svd(false, true);
    let sigma_min = svd.singular_values.min();
    if sigma_min <= SURJECTIVITY_TOL {
        return Err(Error::RankDeficient { sigma_min });
    }
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::Numerical("SVD failed to produce Vᵀ".into()))?;
    Subspace::from_orthonormal(v_t.transpose())
}

/// |det A|_W| for an m×n matrix and an m-dimensional subspace W ⊆ ℝⁿ,
/// computed through the Gram determinant of A·B_W.
pub fn restricted_determinant(a: &DMatrix<f64>, w: &Subspace) -> Result<f64> {
    if w.ambient_dim() != a.ncols() {
        return Err(Error::DimensionMismatch {
            expected: a.ncols(),
            got: w.ambient_dim(),
        });
    }
    if w.dim() != a.nrows() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            got: w.dim(),
        });
    }
    let c = a * w.basis();
    let gram = c.transpose() * &c;
    Ok(gram.determinant().max(0.0).sqrt())
}

/// Result of one nonsqueezing verification.
#[derive(Debug, Clone)]
pub struct ProjectedVolumeReport {
    /// vol_{2k}(PΦ(B²ⁿ)) / ω_{2k} = Πσᵢ(BᵀΦ).
    pub volume_ratio: f64,
    /// The pullback ΦᵀV = ran (BᵀΦ)ᵀ.
    pub pullback: Subspace,
    /// Complexity residual of the pullback; 0 exactly in the equality case.
    pub pullback_complexity_residual: f64,
    /// volume_ratio ≤ 1 + tol.
    pub equality_flag: bool,
}

/// Verifies vol_{2k}(PΦ(B²ⁿ)) ≥ ω_{2k} for the orthogonal projection P onto a
/// complex subspace V, reporting the ratio, the pullback ΦᵀV, and the equality
/// diagnosis. Fails if V is not complex or if the inequality is violated
/// beyond `tol`.
pub fn linear_nonsqueezing_verify(
    phi: &SymplecticMatrix,
    v: &Subspace,
    tol: f64,
) -> Result<ProjectedVolumeReport> {
    if tol < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be nonnegative, got {tol}"
        )));
    }
    if v.ambient_dim() != phi.dim() {
        return Err(Error::DimensionMismatch {
            expected: phi.dim(),
            got: v.ambient_dim(),
        });
    }
    let check = is_complex_subspace(v, EQUALITY_TOL);
    if !check.complex {
        return Err(Error::Precondition(format!(
            "target subspace is not complex (residual {:.3e})",
            check.residual
        )));
    }
    let a = v.basis().transpose() * phi.matrix();
    let svals = a.clone().svd(false, false).singular_values;
    let sigma_min = svals.min();
    if sigma_min <= SURJECTIVITY_TOL {
        return Err(Error::RankDeficient { sigma_min });
    }
    let volume_ratio = singular_value_product(svals.as_slice());
    if volume_ratio < 1.0 - tol {
        return Err(Error::NonsqueezingViolation {
            ratio: volume_ratio,
            tol,
        });
    }
    let pullback = maximal_expanding_subspace(&a)?;
    let pullback_complexity_residual = pullback.complexity_residual()?;
    Ok(ProjectedVolumeReport {
        volume_ratio,
        pullback,
        pullback_complexity_residual,
        equality_flag: volume_ratio <= 1.0 + tol,
    })
}

/// One row of a batch verification run.
#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub trial: u64,
    pub phi_seed: u64,
    pub subspace_seed: u64,
    pub dim: usize,
    pub k: usize,
    pub volume_ratio: f64,
    pub pullback_residual: f64,
    pub equality: bool,
}

/// Runs `trials` random (Φ, V) verifications for every k in `ks`, with
/// per-trial seeds split from `root_seed`. Trials run in parallel; the output
/// order is by (trial, k) regardless of scheduling.
pub fn nonsqueezing_trials(
    dim: usize,
    ks: &[usize],
    trials: u64,
    scale: f64,
    root_seed: u64,
    tol: f64,
    exec: Execution,
) -> Result<Vec<TrialOutcome>> {
    let per_trial: Vec<Result<Vec<TrialOutcome>>> = map_blocks(exec, trials, |t| {
        let phi_seed = derive_seed(root_seed, 2 * t);
        let phi = random_symplectic(dim, scale, phi_seed)?;
        let mut rows = Vec::with_capacity(ks.len());
        for (i, &k) in ks.iter().enumerate() {
            let subspace_seed = derive_seed(root_seed, 2 * t + 1).wrapping_add(i as u64);
            let v = random_complex_subspace(dim, k, subspace_seed)?;
            let report = linear_nonsqueezing_verify(&phi, &v, tol)?;
            rows.push(TrialOutcome {
                trial: t,
                phi_seed,
                subspace_seed,
                dim,
                k,
                volume_ratio: report.volume_ratio,
                pullback_residual: report.pullback_complexity_residual,
                equality: report.equality_flag,
            });
        }
        Ok(rows)
    });
    let mut out = Vec::with_capacity(trials as usize * ks.len());
    for rows in per_trial {
        out.extend(rows?);
    }
    Ok(out)
}
