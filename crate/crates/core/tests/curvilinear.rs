use std::f64::consts::PI;

use mimetic_core::curvilinear::{check_spd, rotated_tensor, CurvilinearOps, IDENTITY};
use mimetic_core::grid::{compute_metrics, make_mapping, Location, MappingKind, MetricSource, StaggeredGrid};
use mimetic_core::poisson::observed_order;
use mimetic_core::sparse::SparseOperator;

fn ops(kind: MappingKind, k: usize, m: usize) -> CurvilinearOps {
    let map = make_mapping(kind).unwrap();
    let grid = StaggeredGrid::unit(&vec![m; map.dim()]).unwrap();
    CurvilinearOps::new(k, &grid, &map, MetricSource::Analytic).unwrap()
}

#[test]
fn semi_annulus_jacobian_is_radial() {
    let (a, b) = (2.0, 5.0);
    let c = ops(MappingKind::SemiAnnulus { a, b }, 4, 12);
    for (x, j) in c.metrics.scalar.physical.iter().zip(&c.metrics.scalar.det) {
        let r = x[0].hypot(x[1]);
        assert!((j - (b - a) * PI * r).abs() < 1e-12 * r);
    }
}

#[test]
fn numeric_metrics_converge_to_analytic() {
    let map = make_mapping(MappingKind::Sinusoidal2d { eps: 0.06 }).unwrap();
    let cells = [16usize, 32, 64];
    let errs: Vec<f64> = cells
        .iter()
        .map(|&m| {
            let grid = StaggeredGrid::unit(&[m, m]).unwrap();
            let an = compute_metrics(&map, &grid, MetricSource::Analytic).unwrap();
            let nu = compute_metrics(&map, &grid, MetricSource::Numeric { k: 4 }).unwrap();
            an.scalar.det.iter().zip(&nu.scalar.det).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
        })
        .collect();
    let orders = observed_order(&errs, &cells).unwrap();
    assert!(orders.iter().all(|&o| o > 3.5), "{orders:?}");
}

#[test]
fn gradient_converges_on_mapped_grid() {
    let cells = [16usize, 32, 64];
    let errs: Vec<f64> = cells
        .iter()
        .map(|&m| {
            let c = ops(MappingKind::SemiAnnulus { a: 2.0, b: 3.0 }, 4, m);
            let u = c.sample(Location::Scalar, |x| (0.5 * x[0]).sin() * x[1]);
            let want = c.sample_faces(|a, x| if a == 0 { 0.5 * (0.5 * x[0]).cos() * x[1] } else { (0.5 * x[0]).sin() });
            // j_g yields Cartesian components of ∇u on face set a, for each a
            let gu = c.grad.apply(&u);
            gu.iter().zip(&want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
        })
        .collect();
    let orders = observed_order(&errs, &cells).unwrap();
    assert!(orders.iter().all(|&o| o > 3.0), "{errs:?} {orders:?}");
}

#[test]
fn orthogonal_map_laplacian_symmetry() {
    // For an orthogonal map W has no cross terms, so Q_cc·L̃ − B·W·G = −Gᵀ(PW)G is symmetric.
    let c = ops(MappingKind::SemiAnnulus { a: 1.0, b: 2.0 }, 4, 10);
    let l = c.laplacian(&IDENTITY).unwrap();
    let w = c.metric_tensor(&IDENTITY);
    let s = SparseOperator::diag(&c.q_cc.values)
        .matmul(&l)
        .sub(&c.nd.boundary.matmul(&w).matmul(&c.nd.gradient));
    let asym = s.sub(&s.transpose()).max_abs();
    assert!(asym <= 1e-10 * s.max_abs(), "{asym:e}");
}

#[test]
fn identity_map_3d_degenerates() {
    let c = ops(MappingKind::Identity { dim: 3 }, 4, 8);
    assert!(c.div.sub(&c.nd.divergence).max_abs() <= 1e-13);
    assert!(c.grad.sub(&c.nd.gradient).max_abs() <= 1e-13);
    assert!(c.laplacian(&IDENTITY).unwrap().sub(&c.nd.laplacian()).max_abs() <= 1e-13);
}

#[test]
fn tensor_checks() {
    assert!(check_spd(&rotated_tensor(1.0, 10.0, PI / 4.0), 2).is_ok());
    assert!(check_spd(&rotated_tensor(1.0, -1.0, 0.3), 2).is_err());
    let t = rotated_tensor(1.0, 10.0, PI / 4.0);
    assert!((t[0][1] - t[1][0]).abs() < 1e-15);
    assert!((t[0][0] + t[1][1] - 11.0).abs() < 1e-13);
}

#[test]
fn folded_mappings_rejected() {
    assert!(make_mapping(MappingKind::SemiAnnulus { a: 3.0, b: 2.0 }).is_err());
    assert!(make_mapping(MappingKind::Sinusoidal2d { eps: 0.2 }).is_err());
    assert!(make_mapping(MappingKind::Sinusoidal3d { eps: 0.1 }).is_err());
    assert!(make_mapping(MappingKind::Sinusoidal3d { eps: 0.09 }).is_ok());
}
