//! Projected-volume estimation for images of balls under smooth maps.
//!
//! The estimator pushes uniform ball samples through the map, projects them
//! orthogonally onto a 2k-dimensional subspace of the codomain, and marks the
//! cells of a uniform grid over the projected cloud. The occupied-cell volume
//! is the estimate; cells whose full neighborhood is occupied give a lower
//! bracket and the occupied set plus its boundary shell an upper bracket.
//!
//! Samples are drawn in fixed-size blocks with one RNG stream per block, so
//! the result is bit-identical across thread counts and the sequential build.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::exec::{fold_blocks, Execution};
use crate::geom::Subspace;
use crate::maps::SmoothMap;
use crate::rng::{derive_seed, stream_rng};

/// Samples per RNG block; part of the determinism contract.
const BLOCK_SAMPLES: u64 = 65_536;

/// Hard cap on total grid cells across both resolutions (memory guard;
/// two bytes per cell per worker).
const MAX_TOTAL_CELLS: u128 = 1 << 27;

/// Default grid resolution per axis for a 2k-dimensional projection.
///
/// Paired with [`default_samples`] so that every image cell sees enough hits
/// to calibrate the crossing-layer weights; both were tuned against the
/// exact linear volume formula across dims 4–6 and k = 1, 2.
pub fn default_cells_per_axis(two_k: usize) -> usize {
    match two_k {
        2 => 128,
        _ => 32,
    }
}

/// Default sample count for a 2k-dimensional projection; see
/// [`default_cells_per_axis`].
pub fn default_samples(two_k: usize) -> u64 {
    match two_k {
        2 => 2_000_000,
        _ => 4_000_000,
    }
}

/// Cell-count estimate of a projected volume with brackets and resolution
/// metadata.
#[derive(Debug, Clone)]
pub struct VolumeEstimate {
    /// Cell-count estimate at the base resolution: interior cells at full
    /// weight plus boundary-crossing cells weighted by their estimated
    /// inside fraction.
    pub value: f64,
    /// Volume of occupied cells whose entire neighborhood is occupied;
    /// a conservative bracket that grows toward the volume under refinement.
    pub lower: f64,
    /// Volume of the occupied set plus its boundary shell.
    pub upper: f64,
    pub cells_per_axis: usize,
    pub samples: u64,
    /// True when doubling `cells_per_axis` moves `value` by less than 2%.
    pub converged: bool,
    /// Occupied cells at the base resolution.
    pub occupied_cells: u64,
    /// Per-axis bounds of the projected sample cloud (before padding).
    pub bounds: Vec<(f64, f64)>,
}

/// Dense hit-count grid over a 2k-dimensional box. Counts saturate at
/// u16::MAX, far above the per-cell intensities used here.
struct CountGrid {
    counts: Vec<u16>,
    dims: Vec<usize>,
    strides: Vec<usize>,
}

impl CountGrid {
    fn new(dims: &[usize]) -> Self {
        let mut strides = vec![0usize; dims.len()];
        let mut acc = 1usize;
        for (i, &d) in dims.iter().enumerate() {
            strides[i] = acc;
            acc *= d;
        }
        CountGrid {
            counts: vec![0u16; acc],
            dims: dims.to_vec(),
            strides,
        }
    }

    #[inline]
    fn hit(&mut self, idx: usize) {
        self.counts[idx] = self.counts[idx].saturating_add(1);
    }

    /// Saturating elementwise sum; commutative and associative, so merged
    /// results do not depend on the block decomposition.
    fn merge_in_place(&mut self, other: &CountGrid) {
        for (a, &b) in self.counts.iter_mut().zip(other.counts.iter()) {
            *a = a.saturating_add(b);
        }
    }
}

/// Uniform grid geometry over a padded bounding box.
struct GridGeometry {
    lo: Vec<f64>,
    delta: Vec<f64>,
    dims: Vec<usize>,
}

impl GridGeometry {
    /// Box from the sample cloud, padded by two cells on each side.
    fn new(bounds: &[(f64, f64)], cells_per_axis: usize) -> Self {
        let d = bounds.len();
        let mut lo = Vec::with_capacity(d);
        let mut delta = Vec::with_capacity(d);
        let mut dims = Vec::with_capacity(d);
        for &(mn, mx) in bounds {
            let width = (mx - mn).max(f64::MIN_POSITIVE);
            let step = width / cells_per_axis as f64;
            lo.push(mn - 2.0 * step);
            delta.push(step);
            dims.push(cells_per_axis + 4);
        }
        GridGeometry { lo, delta, dims }
    }

    #[inline]
    fn cell_index(&self, p: &[f64]) -> usize {
        let mut idx = 0usize;
        let mut stride = 1usize;
        for a in 0..p.len() {
            let c = ((p[a] - self.lo[a]) / self.delta[a]) as isize;
            let c = c.clamp(0, self.dims[a] as isize - 1) as usize;
            idx += c * stride;
            stride *= self.dims[a];
        }
        idx
    }

    fn cell_volume(&self) -> f64 {
        self.delta.iter().product()
    }

    fn total_cells(&self) -> u128 {
        self.dims.iter().map(|&d| d as u128).product()
    }
}

/// Fraction of samples drawn on the boundary sphere rather than inside the
/// ball, by projection codimension.
///
/// The covering being marked is the same either way: for the maps estimated
/// here, the projected images of the boundary sphere and of the closed ball
/// coincide (every projection fiber of the bounded image meets its boundary).
/// What differs is coverage. The ball pushforward through a codimension-c
/// projection has density ∝ (1 − s²)^{c/2}, which starves the outer cells for
/// c ≥ 2, while the sphere pushforward carries exponent (c − 2)/2 — exactly
/// uniform at c = 2. At c = 0 the map is a bijection onto its image, the ball
/// pushforward is already uniform, and sphere samples would only mark the
/// boundary shell.
fn sphere_fraction(codim: usize) -> f64 {
    if codim == 0 {
        0.0
    } else {
        0.75
    }
}

/// Draws block `block` of the sample stream, pushes each point through the
/// map, projects, and hands the projected coordinates to `visit`.
fn visit_projected_block(
    map: &SmoothMap,
    radius: f64,
    basis: &DMatrix<f64>,
    sphere_frac: f64,
    seed: u64,
    block: u64,
    count: u64,
    mut visit: impl FnMut(&[f64]),
) -> Result<()> {
    let dim = map.domain_dim();
    let mut rng = stream_rng(seed, block);
    let mut x = DVector::<f64>::zeros(dim);
    let mut proj = DVector::<f64>::zeros(basis.ncols());
    for _ in 0..count {
        loop {
            for i in 0..dim {
                x[i] = rng.sample(StandardNormal);
            }
            let norm = x.norm();
            if norm > 1e-300 {
                let on_sphere = sphere_frac > 0.0 && rng.random::<f64>() < sphere_frac;
                let r = if on_sphere {
                    radius
                } else {
                    let u: f64 = rng.random();
                    radius * u.powf(1.0 / dim as f64)
                };
                x *= r / norm;
                break;
            }
        }
        let y = map.eval(&x)?;
        proj.gemv_tr(1.0, basis, &y, 0.0);
        if proj.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical(
                "map produced a non-finite projected sample".into(),
            ));
        }
        visit(proj.as_slice());
    }
    Ok(())
}

fn block_count(samples: u64) -> u64 {
    samples.div_ceil(BLOCK_SAMPLES)
}

fn samples_in_block(samples: u64, block: u64) -> u64 {
    let start = block * BLOCK_SAMPLES;
    BLOCK_SAMPLES.min(samples - start)
}

/// Estimates vol_{2k}(P·map(B^{2n}(radius))) for the orthogonal projection P
/// onto `v`, by cell marking at `cells_per_axis` (and at double resolution
/// for the convergence flag).
pub fn estimate_projected_volume(
    map: &SmoothMap,
    radius: f64,
    v: &Subspace,
    cells_per_axis: usize,
    samples: u64,
    seed: u64,
) -> Result<VolumeEstimate> {
    estimate_projected_volume_with(Execution::Auto, map, radius, v, cells_per_axis, samples, seed)
}

/// [`estimate_projected_volume`] with an explicit execution policy.
pub fn estimate_projected_volume_with(
    exec: Execution,
    map: &SmoothMap,
    radius: f64,
    v: &Subspace,
    cells_per_axis: usize,
    samples: u64,
    seed: u64,
) -> Result<VolumeEstimate> {
    let two_k = v.dim();
    if two_k != 2 && two_k != 4 {
        return Err(Error::InvalidParameter(format!(
            "estimator supports projections of dimension 2 or 4, got {two_k}"
        )));
    }
    if v.ambient_dim() != map.codomain_dim() {
        return Err(Error::DimensionMismatch {
            expected: map.codomain_dim(),
            got: v.ambient_dim(),
        });
    }
    if map.domain_dim() % 2 != 0 {
        return Err(Error::OddDimension {
            context: "estimator domain",
            dim: map.domain_dim(),
        });
    }
    if samples < 10_000 {
        return Err(Error::InvalidParameter(format!(
            "samples must be ≥ 10⁴, got {samples}"
        )));
    }
    if cells_per_axis < 4 {
        return Err(Error::InvalidParameter(format!(
            "cells_per_axis must be ≥ 4, got {cells_per_axis}"
        )));
    }
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "radius must be positive, got {radius}"
        )));
    }

    let basis = v.basis().clone();
    let blocks = block_count(samples);
    let sphere_frac = sphere_fraction(map.domain_dim() - two_k);

    // Pass 1: bounding box of the projected cloud.
    type BoxAcc = Result<(Vec<f64>, Vec<f64>)>;
    let init_box = || -> BoxAcc {
        Ok((vec![f64::INFINITY; two_k], vec![f64::NEG_INFINITY; two_k]))
    };
    let folded: BoxAcc = fold_blocks(
        exec,
        blocks,
        init_box,
        |acc: BoxAcc, block| {
            let (mut lo, mut hi) = acc?;
            visit_projected_block(
                map,
                radius,
                &basis,
                sphere_frac,
                seed,
                block,
                samples_in_block(samples, block),
                |p| {
                    for a in 0..two_k {
                        lo[a] = lo[a].min(p[a]);
                        hi[a] = hi[a].max(p[a]);
                    }
                },
            )?;
            Ok((lo, hi))
        },
        |a: BoxAcc, b: BoxAcc| {
            let (mut lo, mut hi) = a?;
            let (lo2, hi2) = b?;
            for i in 0..lo.len() {
                lo[i] = lo[i].min(lo2[i]);
                hi[i] = hi[i].max(hi2[i]);
            }
            Ok((lo, hi))
        },
    );
    let (lo, hi) = folded?;
    let bounds: Vec<(f64, f64)> = lo.iter().copied().zip(hi.iter().copied()).collect();
    for &(mn, mx) in &bounds {
        if !mn.is_finite() || !mx.is_finite() || (mx - mn).abs() > 1e6 * radius {
            return Err(Error::Numerical(format!(
                "projected image looks unbounded: axis extent [{mn}, {mx}]"
            )));
        }
    }

    let coarse_geom = GridGeometry::new(&bounds, cells_per_axis);
    let fine_geom = GridGeometry::new(&bounds, 2 * cells_per_axis);
    if coarse_geom.total_cells() + fine_geom.total_cells() > MAX_TOTAL_CELLS {
        return Err(Error::InvalidParameter(format!(
            "grid of {} + {} cells exceeds the memory guard",
            coarse_geom.total_cells(),
            fine_geom.total_cells()
        )));
    }

    // Pass 2: mark both grids.
    type MarkAcc = Result<(CountGrid, CountGrid)>;
    let marked: MarkAcc = fold_blocks(
        exec,
        blocks,
        || Ok((CountGrid::new(&coarse_geom.dims), CountGrid::new(&fine_geom.dims))),
        |acc: MarkAcc, block| {
            let (mut coarse, mut fine) = acc?;
            visit_projected_block(
                map,
                radius,
                &basis,
                sphere_frac,
                seed,
                block,
                samples_in_block(samples, block),
                |p| {
                    coarse.hit(coarse_geom.cell_index(p));
                    fine.hit(fine_geom.cell_index(p));
                },
            )?;
            Ok((coarse, fine))
        },
        |a: MarkAcc, b: MarkAcc| {
            let (mut c1, mut f1) = a?;
            let (c2, f2) = b?;
            c1.merge_in_place(&c2);
            f1.merge_in_place(&f2);
            Ok((c1, f1))
        },
    );
    let (coarse, fine) = marked?;

    let weighting = if map.domain_dim() - two_k >= 4 {
        LayerWeighting::Half
    } else {
        LayerWeighting::Density
    };
    let cell_vol = coarse_geom.cell_volume();
    let stats = grid_stats(&coarse, weighting);
    let value = stats.weighted_cells * cell_vol;

    let fine_stats = grid_stats(&fine, weighting);
    let fine_value = fine_stats.weighted_cells * fine_geom.cell_volume();
    let converged = (fine_value - value).abs() < 0.02 * value.max(fine_value).max(f64::MIN_POSITIVE);

    Ok(VolumeEstimate {
        value,
        lower: stats.interior as f64 * cell_vol,
        upper: stats.with_shell as f64 * cell_vol,
        cells_per_axis,
        samples,
        converged,
        occupied_cells: stats.occupied,
        bounds,
    })
}

/// Cell statistics extracted from a hit-count grid.
///
/// Occupied cells split into the interior (both axis neighbors occupied along
/// every axis; fully inside the image once coverage saturates) and the
/// crossing layer. Interior cells calibrate the hit intensity per unit
/// volume, and each crossing cell is weighted by its estimated inside
/// fraction min(N_c/λ̂, 1). Cells on the padded border of the grid count as
/// unoccupied neighbors.
struct GridStats {
    occupied: u64,
    interior: u64,
    /// occupied + unoccupied axis neighbors of occupied cells.
    with_shell: u64,
    /// interior + Σ_crossing min(N_c/λ̂, 1); equals the cell-count estimate.
    weighted_cells: f64,
}

/// How crossing-layer cells are weighted in the cell-count estimate.
#[derive(Clone, Copy, PartialEq)]
enum LayerWeighting {
    /// min(N_c/λ̂, 1), with λ̂ calibrated on interior cells. Exact in
    /// expectation when the projected sampling density is uniform, which the
    /// sampler guarantees at projection codimension 0 and 2.
    Density,
    /// Flat ½ per crossing cell. Used at codimension ≥ 4, where the projected
    /// density vanishes toward the image boundary and would bias the density
    /// weights low.
    Half,
}

fn grid_stats(grid: &CountGrid, weighting: LayerWeighting) -> GridStats {
    let d = grid.dims.len();
    let mut shell_marks = vec![0u64; grid.counts.len().div_ceil(64)];
    let mut shell_extra = 0u64;
    let mut interior = 0u64;
    let mut occupied = 0u64;
    let mut interior_hits: u64 = 0;
    let mut crossing = Vec::new();

    let mut coords = vec![0usize; d];
    for (idx, &n) in grid.counts.iter().enumerate() {
        if n == 0 {
            continue;
        }
        occupied += 1;
        let mut rem = idx;
        for (i, &dim) in grid.dims.iter().enumerate() {
            coords[i] = rem % dim;
            rem /= dim;
        }
        let mut is_interior = true;
        for a in 0..d {
            for s in [-1isize, 1] {
                let c = coords[a] as isize + s;
                if c < 0 || c >= grid.dims[a] as isize {
                    // Outside the padded box: unoccupied by construction.
                    is_interior = false;
                    continue;
                }
                let nidx = (idx as isize + s * grid.strides[a] as isize) as usize;
                if grid.counts[nidx] == 0 {
                    is_interior = false;
                    let (w, b) = (nidx >> 6, nidx & 63);
                    if shell_marks[w] & (1u64 << b) == 0 {
                        shell_marks[w] |= 1u64 << b;
                        shell_extra += 1;
                    }
                }
            }
        }
        if is_interior {
            interior += 1;
            interior_hits += n as u64;
        } else {
            crossing.push(n);
        }
    }

    // Hit intensity per cell, calibrated on interior cells. With too little
    // interior to calibrate, fall back to half-weighting the crossing layer.
    let use_density = weighting == LayerWeighting::Density
        && interior >= 64
        && interior_hits >= 4 * interior;
    let weighted_cells = if use_density {
        let lambda = interior_hits as f64 / interior as f64;
        let layer: f64 = crossing
            .iter()
            .map(|&n| (n as f64 / lambda).min(1.0))
            .sum();
        interior as f64 + layer
    } else {
        interior as f64 + 0.5 * crossing.len() as f64
    };

    GridStats {
        occupied,
        interior,
        with_shell: occupied + shell_extra,
        weighted_cells,
    }
}

/// Report of the rescaling identity vol(P·map(B(R)))/R^{2k} =
/// vol(P·map_R(B(1))) for map_R(z) = map(Rz)/R.
#[derive(Debug, Clone)]
pub struct ScalingReport {
    pub estimate_unit: VolumeEstimate,
    pub estimate_scaled: VolumeEstimate,
    /// estimate at radius 1 of the rescaled map.
    pub lhs: f64,
    /// estimate at radius R of the original map, divided by R^{2k}.
    pub rhs: f64,
    pub rel_gap: f64,
    pub pass: bool,
}

/// Runs the estimator on both sides of the rescaling identity and compares
/// them within `tol` (relative to the larger side).
pub fn scaling_consistency(
    map: &SmoothMap,
    radius: f64,
    v: &Subspace,
    cells_per_axis: usize,
    samples: u64,
    seed: u64,
    tol: f64,
) -> Result<ScalingReport> {
    let two_k = v.dim() as i32;
    let rescaled = crate::maps::rescale_map(map.clone(), radius)?;
    let estimate_unit =
        estimate_projected_volume(&rescaled, 1.0, v, cells_per_axis, samples, seed)?;
    let estimate_scaled = estimate_projected_volume(
        map,
        radius,
        v,
        cells_per_axis,
        samples,
        derive_seed(seed, 1),
    )?;
    let lhs = estimate_unit.value;
    let rhs = estimate_scaled.value / radius.powi(two_k);
    let rel_gap = (lhs - rhs).abs() / lhs.max(rhs).max(f64::MIN_POSITIVE);
    Ok(ScalingReport {
        estimate_unit,
        estimate_scaled,
        lhs,
        rhs,
        rel_gap,
        pass: rel_gap <= tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Subspace;
    use crate::linear::{projected_ball_volume, random_complex_subspace, random_symplectic};
    use crate::maps::SmoothMap;

    fn identity_disk_estimate(samples: u64, cells: usize, seed: u64) -> VolumeEstimate {
        let map = SmoothMap::Identity(4);
        let v = Subspace::coordinate_plane(4, &[0, 1]).unwrap();
        estimate_projected_volume(&map, 1.0, &v, cells, samples, seed).unwrap()
    }

    #[test]
    fn disk_volume_within_three_percent() {
        let est = identity_disk_estimate(1_000_000, 256, 9);
        let pi = std::f64::consts::PI;
        assert!(
            (est.value - pi).abs() / pi < 0.03,
            "estimate {} vs π",
            est.value
        );
        assert!(est.lower <= est.value && est.value <= est.upper);
        assert!(est.converged);
    }

    #[test]
    fn brackets_are_ordered_and_lower_grows_with_refinement() {
        let coarse = identity_disk_estimate(250_000, 64, 4);
        let fine = identity_disk_estimate(1_000_000, 256, 4);
        assert!(coarse.lower <= coarse.value && coarse.value <= coarse.upper);
        assert!(fine.lower >= coarse.lower * 0.98);
    }

    #[test]
    fn deterministic_across_runs_and_block_scheduling() {
        let a = identity_disk_estimate(200_000, 128, 33);
        let b = identity_disk_estimate(200_000, 128, 33);
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.occupied_cells, b.occupied_cells);

        let map = SmoothMap::Identity(4);
        let v = Subspace::coordinate_plane(4, &[0, 1]).unwrap();
        let seq = estimate_projected_volume_with(
            Execution::Sequential,
            &map,
            1.0,
            &v,
            128,
            200_000,
            33,
        )
        .unwrap();
        assert_eq!(a.value.to_bits(), seq.value.to_bits());
        assert_eq!(a.upper.to_bits(), seq.upper.to_bits());
    }

    #[test]
    fn linear_map_matches_exact_formula() {
        let phi = random_symplectic(4, 0.5, 71).unwrap();
        let v = random_complex_subspace(4, 1, 72).unwrap();
        let a = v.basis().transpose() * phi.matrix();
        let exact = projected_ball_volume(&a).unwrap().value;
        let map = SmoothMap::Linear(phi.matrix().clone());
        let est = estimate_projected_volume(&map, 1.0, &v, 256, 1_000_000, 73).unwrap();
        assert!(
            (est.value - exact).abs() / exact < 0.03,
            "estimate {} vs exact {exact}",
            est.value
        );
    }

    #[test]
    fn identity_scaling_at_radius_two() {
        let map = SmoothMap::Identity(4);
        let v = Subspace::coordinate_plane(4, &[0, 1]).unwrap();
        let report = scaling_consistency(&map, 2.0, &v, 128, 200_000, 5, 0.05).unwrap();
        assert!(report.pass, "gap {}", report.rel_gap);
        // π vs 4π/4.
        assert!((report.lhs - std::f64::consts::PI).abs() / std::f64::consts::PI < 0.05);
    }

    #[test]
    fn rejects_bad_parameters() {
        let map = SmoothMap::Identity(4);
        let v = Subspace::coordinate_plane(4, &[0, 1]).unwrap();
        assert!(estimate_projected_volume(&map, 1.0, &v, 64, 5_000, 1).is_err());
        assert!(estimate_projected_volume(&map, -1.0, &v, 64, 20_000, 1).is_err());
        let v6 = Subspace::coordinate_plane(4, &[0, 1, 2, 3]).unwrap();
        let map3 = SmoothMap::Identity(3);
        assert!(estimate_projected_volume(&map3, 1.0, &v, 64, 20_000, 1).is_err());
        let _ = (v6, ());
    }

    #[test]
    fn unsupported_projection_dimension_errors() {
        let map = SmoothMap::Identity(8);
        let v = random_complex_subspace(8, 3, 2).unwrap();
        assert!(matches!(
            estimate_projected_volume(&map, 1.0, &v, 16, 20_000, 1),
            Err(Error::InvalidParameter(_))
        ));
    }
}
