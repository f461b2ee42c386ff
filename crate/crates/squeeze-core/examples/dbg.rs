use nalgebra::DVector;
use squeeze_core::dist::*;
use squeeze_core::geom::Subspace;
use squeeze_core::maps::generating_shear;

fn main() {
    let map = generating_shear();
    let v = Subspace::coordinate_plane(4, &[0, 1]).unwrap();
    let x = DVector::from_vec(vec![0.3, -0.2, 1.1, 0.8]);
    let s = maximal_distribution(&map, &v, &x).unwrap();
    let (gq, gp) = generating_shear_gradient_fields();
    let span = Subspace::from_span_vectors(&[gq.eval(&x), gp.eval(&x)]).unwrap();
    println!("w_hat basis:\n{}", s.w_hat.basis());
    println!("span basis:\n{}", span.basis());
    println!("dist = {:e}", s.w_hat.principal_angle_distance(&span).unwrap());
    println!("jacobian:\n{}", map.jacobian(&x).unwrap());
}
