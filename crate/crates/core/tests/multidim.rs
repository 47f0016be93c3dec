use mimetic_core::conservation::gauss_residual;
use mimetic_core::grid::{Location, StaggeredGrid};
use mimetic_core::mimeticnd::MimeticNd;

fn sample(grid: &StaggeredGrid, loc: Location, f: impl Fn(&[f64; 3]) -> f64) -> Vec<f64> {
    grid.location_points(loc).iter().map(f).collect()
}

#[test]
fn gradient_and_divergence_exact_on_polynomials_2d() {
    let grid = StaggeredGrid::unit(&[10, 9]).unwrap();
    let nd = MimeticNd::new(4, &grid).unwrap();
    let u = sample(&grid, Location::Scalar, |x| x[0].powi(4) - 2.0 * x[0] * x[1].powi(3) + x[1]);
    let gu = nd.gradient.apply(&u);
    let parts = nd.split_faces(&gu);
    let gx = sample(&grid, Location::Face(0), |x| 4.0 * x[0].powi(3) - 2.0 * x[1].powi(3));
    let gy = sample(&grid, Location::Face(1), |x| -6.0 * x[0] * x[1].powi(2) + 1.0);
    for (a, b) in parts[0].iter().zip(&gx).chain(parts[1].iter().zip(&gy)) {
        assert!((a - b).abs() < 1e-10, "{a} vs {b}");
    }

    let mut v = sample(&grid, Location::Face(0), |x| x[0].powi(3) * x[1]);
    v.extend(sample(&grid, Location::Face(1), |x| x[1].powi(2)));
    let dv = nd.divergence.apply(&v);
    let want = sample(&grid, Location::Scalar, |x| 3.0 * x[0].powi(2) * x[1] + 2.0 * x[1]);
    let bd = grid.scalar_boundary_mask();
    for i in 0..dv.len() {
        if bd[i] {
            assert_eq!(dv[i], 0.0);
        } else {
            assert!((dv[i] - want[i]).abs() < 1e-10);
        }
    }
}

#[test]
fn laplacian_of_quadratic_3d() {
    let grid = StaggeredGrid::unit(&[8, 9, 10]).unwrap();
    let nd = MimeticNd::new(4, &grid).unwrap();
    let u = sample(&grid, Location::Scalar, |x| x[0] * x[0] + 2.0 * x[1] * x[1] - x[2] * x[2] + x[0] * x[2]);
    let lu = nd.laplacian().apply(&u);
    let bd = grid.scalar_boundary_mask();
    for (l, b) in lu.iter().zip(&bd) {
        if !b {
            assert!((l - 4.0).abs() < 1e-9, "{l}");
        }
    }
}

#[test]
fn gauss_identity_3d_random() {
    let grid = StaggeredGrid::unit(&[8, 10, 9]).unwrap();
    let nd = MimeticNd::new(4, &grid).unwrap();
    let h = grid.cell_volume();
    // fixed pseudo-random fields
    let mut s = 12345u64;
    let mut next = || {
        s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    let v: Vec<f64> = (0..nd.layout.faces_len()).map(|_| next()).collect();
    let f: Vec<f64> = (0..nd.layout.scalar_len()).map(|_| next()).collect();
    let r = gauss_residual(&nd.divergence, &nd.gradient, &nd.p, &nd.q, &nd.boundary, &v, &f, h).unwrap();
    let scale = nd.p.inner(&v, &v, h).sqrt() * nd.q.inner(&f, &f, h).sqrt();
    assert!(r.abs() <= 1e-12 * scale, "{r:e}");
}

#[test]
fn boundary_flux_of_linear_field() {
    // ⟨B v, 1⟩ equals the net outward flux ∮ v·n of v = (x, 0): one unit through x = 1
    let grid = StaggeredGrid::unit(&[12, 12]).unwrap();
    let nd = MimeticNd::new(2, &grid).unwrap();
    let mut v = sample(&grid, Location::Face(0), |x| x[0]);
    v.extend(vec![0.0; nd.layout.face_len(1)]);
    let bv = nd.boundary.apply(&v);
    let flux: f64 = bv.iter().sum::<f64>() * nd.measure();
    assert!((flux - 1.0).abs() < 1e-12, "{flux}");
}
