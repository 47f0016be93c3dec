use proptest::prelude::*;

use mimetic_core::conservation::gauss_residual;
use mimetic_core::grid::{compute_metrics, make_mapping, MappingKind, MetricSource, StaggeredGrid};
use mimetic_core::harness::sci;
use mimetic_core::mimetic1d::{build_boundary, build_divergence, build_gradient, build_weights};
use mimetic_core::mimeticnd::FieldLayout;
use mimetic_core::sparse::SparseOperator;

fn dense(rows: usize, cols: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(prop_oneof![Just(0.0), -2.0..2.0f64], cols), rows)
}

fn dense_mul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    (0..a.len())
        .map(|i| (0..b[0].len()).map(|j| (0..b.len()).map(|k| a[i][k] * b[k][j]).sum()).collect())
        .collect()
}

fn close(a: &[Vec<f64>], b: &[Vec<f64>]) -> bool {
    a.iter().flatten().zip(b.iter().flatten()).all(|(x, y)| (x - y).abs() < 1e-12)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn gauss_identity_1d(k in prop::sample::select(vec![2usize, 4]), m in 8usize..40,
                         seed in prop::collection::vec(-1.0..1.0f64, 100)) {
        let dx = 1.0 / m as f64;
        let d = build_divergence(k, m, dx).unwrap();
        let g = build_gradient(k, m, dx).unwrap();
        let (p, q) = build_weights(&d, &g, k, m, dx).unwrap();
        let b = build_boundary(&d, &g, &p, &q, dx).unwrap();
        let v: Vec<f64> = (0..=m).map(|i| seed[i % 100] + 0.1 * i as f64).collect();
        let f: Vec<f64> = (0..m + 2).map(|i| seed[(7 * i + 3) % 100]).collect();
        let r = gauss_residual(&d, &g, &p, &q, &b, &v, &f, dx).unwrap();
        let scale = p.inner(&v, &v, dx).sqrt() * q.inner(&f, &f, dx).sqrt();
        prop_assert!(r.abs() <= 1e-12 * scale);
    }

    #[test]
    fn matmul_matches_dense(a in dense(4, 5), b in dense(5, 3)) {
        let s = SparseOperator::from_dense(&a).matmul(&SparseOperator::from_dense(&b));
        prop_assert!(close(&s.to_dense(), &dense_mul(&a, &b)));
        let t = SparseOperator::from_dense(&a).transpose().transpose();
        prop_assert!(close(&t.to_dense(), &a));
    }

    #[test]
    fn kron_mixed_product(a in dense(2, 3), b in dense(3, 2), c in dense(3, 2), d in dense(2, 2)) {
        let (sa, sb, sc, sd) = (
            SparseOperator::from_dense(&a),
            SparseOperator::from_dense(&b),
            SparseOperator::from_dense(&c),
            SparseOperator::from_dense(&d),
        );
        let lhs = sa.kron(&sb).matmul(&sc.kron(&sd));
        let rhs = sa.matmul(&sc).kron(&sb.matmul(&sd));
        prop_assert!(close(&lhs.to_dense(), &rhs.to_dense()));
    }

    #[test]
    fn layout_roundtrip(nx in 1usize..7, ny in 1usize..7, nz in 1usize..5, flat in 0usize..10_000) {
        let shape = FieldLayout::new(&[nx, ny, nz]).scalar_shape();
        let n: usize = shape.iter().product();
        let i = flat % n;
        prop_assert_eq!(FieldLayout::flatten(&shape, &FieldLayout::unflatten(&shape, i)), i);
    }

    #[test]
    fn admissible_sinusoidal_maps_stay_positive(eps in -0.15..0.15f64) {
        let map = make_mapping(MappingKind::Sinusoidal2d { eps }).unwrap();
        let grid = StaggeredGrid::unit(&[12, 12]).unwrap();
        let metrics = compute_metrics(&map, &grid, MetricSource::Analytic).unwrap();
        prop_assert!(metrics.min_det() > 0.0);
    }

    #[test]
    fn sci_roundtrips(x in -1e30..1e30f64) {
        let y: f64 = sci(x).parse().unwrap();
        prop_assert!((x - y).abs() <= 5e-6 * x.abs());
    }
}
