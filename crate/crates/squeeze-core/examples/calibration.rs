//! Scratch calibration sweep for the cell-marking estimator (dev tool).

use squeeze_core::geom::Subspace;
use squeeze_core::linear::{projected_ball_volume, random_complex_subspace, random_symplectic};
use squeeze_core::maps::SmoothMap;
use squeeze_core::rng::derive_seed;
use squeeze_core::volume::estimate_projected_volume;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let two_k: usize = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(4);
    let dim: usize = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(6);
    let cells: usize = args.get(3).map(|s| s.parse().unwrap()).unwrap_or(48);
    let samples: u64 = args.get(4).map(|s| s.parse().unwrap()).unwrap_or(1_000_000);
    let maps: u64 = args.get(5).map(|s| s.parse().unwrap()).unwrap_or(5);
    let k = two_k / 2;

    println!("2k={two_k} dim={dim} cells={cells} samples={samples}");
    let t0 = std::time::Instant::now();
    let mut worst: f64 = 0.0;
    let mut sum = 0.0;
    for i in 0..maps {
        let phi = random_symplectic(dim, 0.5, derive_seed(1000, i)).unwrap();
        let v = if k * 2 == dim {
            Subspace::coordinate_plane(dim, &(0..dim).collect::<Vec<_>>()).unwrap()
        } else {
            random_complex_subspace(dim, k, derive_seed(2000, i)).unwrap()
        };
        let a = v.basis().transpose() * phi.matrix();
        let exact = projected_ball_volume(&a).unwrap().value;
        let map = SmoothMap::Linear(phi.matrix().clone());
        let est =
            estimate_projected_volume(&map, 1.0, &v, cells, samples, derive_seed(3000, i)).unwrap();
        let rel = (est.value - exact) / exact;
        let rel_lo = (est.lower - exact) / exact;
        let rel_hi = (est.upper - exact) / exact;
        worst = worst.max(rel.abs());
        sum += rel.abs();
        println!(
            "map {i}: exact {exact:.5} est {:.5} rel {rel:+.4} [lo {rel_lo:+.4} hi {rel_hi:+.4}] occ {} conv {}",
            est.value, est.occupied_cells, est.converged
        );
    }
    println!(
        "worst |rel| = {worst:.4}, mean |rel| = {:.4}, elapsed {:.1?}",
        sum / maps as f64,
        t0.elapsed()
    );
}
