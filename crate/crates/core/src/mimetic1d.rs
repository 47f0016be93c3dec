use faer::prelude::*;
use faer::Mat;

use crate::error::{MimeticError, Result};
use crate::sparse::{SparseOperator, Space};

// Stencils as exact fractions (numerator, denominator), scaled by 1/Δx at build time.
const D4_BOUNDARY: [(i64, i64); 5] = [(-11, 12), (17, 24), (3, 8), (-5, 24), (1, 24)];
const G4_ROW0: [(i64, i64); 5] = [(-352, 105), (35, 8), (-35, 24), (21, 40), (-5, 56)];
const G4_ROW1: [(i64, i64); 5] = [(16, 105), (-31, 24), (29, 24), (-3, 40), (1, 168)];
const INTERIOR4: [(i64, i64); 4] = [(1, 24), (-9, 8), (9, 8), (-1, 24)];
const G2_ROW0: [(i64, i64); 3] = [(-8, 3), (3, 1), (-1, 3)];
const INTERIOR2: [(i64, i64); 2] = [(-1, 1), (1, 1)];

pub fn check_order(k: usize) -> Result<()> {
    match k {
        2 | 4 => Ok(()),
        _ => Err(MimeticError::UnsupportedOrder(k)),
    }
}

/// Smallest cell count for which the two boundary closures stay disjoint.
pub fn min_cells(k: usize) -> usize {
    if k == 2 {
        3
    } else {
        2 * k
    }
}

pub fn check_cells(k: usize, m: usize) -> Result<()> {
    check_order(k)?;
    let min = min_cells(k);
    if m < min {
        return Err(MimeticError::TooFewCells { k, m, min });
    }
    Ok(())
}

fn entry((n, d): (i64, i64), inv_dx: f64) -> f64 {
    (n as f64 / d as f64) * inv_dx
}

/// Mimetic divergence, faces (m+1) → scalar points (m+2). Rows 0 and m+1 vanish.
pub fn build_divergence(k: usize, m: usize, dx: f64) -> Result<SparseOperator> {
    check_cells(k, m)?;
    if !(dx > 0.0) {
        return Err(MimeticError::InvalidGrid(format!("spacing {dx} must be positive")));
    }
    let inv = 1.0 / dx;
    let mut t = Vec::new();
    if k == 2 {
        for i in 1..=m {
            t.push((i, i - 1, entry(INTERIOR2[0], inv)));
            t.push((i, i, entry(INTERIOR2[1], inv)));
        }
    } else {
        for (j, &c) in D4_BOUNDARY.iter().enumerate() {
            t.push((1, j, entry(c, inv)));
            t.push((m, m - j, -entry(c, inv)));
        }
        for i in 2..m {
            for (s, &c) in INTERIOR4.iter().enumerate() {
                t.push((i, i - 2 + s, entry(c, inv)));
            }
        }
    }
    Ok(SparseOperator::from_triplets(m + 2, m + 1, t)
        .tagged(Space::Face { cells: vec![m], axis: 0 }, Space::Scalar(vec![m])))
}

/// Mimetic gradient, scalar points (m+2) → faces (m+1).
pub fn build_gradient(k: usize, m: usize, dx: f64) -> Result<SparseOperator> {
    check_cells(k, m)?;
    if !(dx > 0.0) {
        return Err(MimeticError::InvalidGrid(format!("spacing {dx} must be positive")));
    }
    let inv = 1.0 / dx;
    let mut t = Vec::new();
    if k == 2 {
        for (j, &c) in G2_ROW0.iter().enumerate() {
            t.push((0, j, entry(c, inv)));
            t.push((m, m + 1 - j, -entry(c, inv)));
        }
        for r in 1..m {
            t.push((r, r, entry(INTERIOR2[0], inv)));
            t.push((r, r + 1, entry(INTERIOR2[1], inv)));
        }
    } else {
        for j in 0..5 {
            t.push((0, j, entry(G4_ROW0[j], inv)));
            t.push((1, j, entry(G4_ROW1[j], inv)));
            t.push((m, m + 1 - j, -entry(G4_ROW0[j], inv)));
            t.push((m - 1, m + 1 - j, -entry(G4_ROW1[j], inv)));
        }
        for r in 2..m - 1 {
            for (s, &c) in INTERIOR4.iter().enumerate() {
                t.push((r, r - 1 + s, entry(c, inv)));
            }
        }
    }
    Ok(SparseOperator::from_triplets(m + 1, m + 2, t)
        .tagged(Space::Scalar(vec![m]), Space::Face { cells: vec![m], axis: 0 }))
}

/// Positive diagonal quadrature weights on a staggered space.
#[derive(Clone, Debug)]
pub struct DiagonalWeight {
    pub values: Vec<f64>,
    pub space: Space,
}

impl DiagonalWeight {
    pub fn new(values: Vec<f64>, space: Space) -> Result<Self> {
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
            return Err(MimeticError::NonPositiveWeight { index, value });
        }
        debug_assert_eq!(values.len(), space.len());
        Ok(DiagonalWeight { values, space })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// ⟨a, b⟩ = measure · Σ wᵢ aᵢ bᵢ
    pub fn inner(&self, a: &[f64], b: &[f64], measure: f64) -> f64 {
        assert_eq!(a.len(), self.len());
        assert_eq!(b.len(), self.len());
        measure * self.values.iter().zip(a).zip(b).map(|((w, x), y)| w * x * y).sum::<f64>()
    }

    pub fn as_operator(&self) -> SparseOperator {
        SparseOperator::diag(&self.values).tagged(self.space.clone(), self.space.clone())
    }

    pub fn kron(&self, other: &DiagonalWeight, space: Space) -> DiagonalWeight {
        let mut v = Vec::with_capacity(self.len() * other.len());
        for a in &self.values {
            for b in &other.values {
                v.push(a * b);
            }
        }
        DiagonalWeight { values: v, space }
    }
}

fn lstsq(a: Mat<f64>, rhs: &[f64]) -> Result<Vec<f64>> {
    let n = a.ncols();
    let b = Mat::from_fn(rhs.len(), 1, |i, _| rhs[i]);
    let x = a.qr().solve_lstsq(&b);
    let sol: Vec<f64> = (0..n).map(|i| x[(i, 0)]).collect();
    let mut res = 0.0f64;
    for i in 0..a.nrows() {
        let mut s = -rhs[i];
        for (j, xj) in sol.iter().enumerate() {
            s += a[(i, j)] * xj;
        }
        res = res.max(s.abs());
    }
    if res > 1e-12 {
        return Err(MimeticError::WeightSolve(format!("exactness residual {res:.3e}")));
    }
    Ok(sol)
}

/// Weights P (faces) and Q (scalar points) from the exactness conditions
/// Δx·1ᵀQD = (−1, 0, …, 0, 1) and Δx·1ᵀPG = (−1, 0, …, 0, 1).
pub fn build_weights(
    d: &SparseOperator,
    g: &SparseOperator,
    k: usize,
    m: usize,
    dx: f64,
) -> Result<(DiagonalWeight, DiagonalWeight)> {
    check_cells(k, m)?;
    if d.shape() != (m + 2, m + 1) || g.shape() != (m + 1, m + 2) {
        return Err(MimeticError::ShapeMismatch { expected: m + 2, found: d.rows(), what: "weight operators" });
    }
    // Q: Dᵀ restricted to the interior rows of D, unknowns q_1..q_m
    let a = Mat::from_fn(m + 1, m, |j, i| d.get(i + 1, j) * dx);
    let mut c = vec![0.0; m + 1];
    c[0] = -1.0;
    c[m] = 1.0;
    let qi = lstsq(a, &c)?;
    let mut q = vec![1.0; m + 2];
    q[1..=m].copy_from_slice(&qi);

    let a = Mat::from_fn(m + 2, m + 1, |i, j| g.get(j, i) * dx);
    let mut c = vec![0.0; m + 2];
    c[0] = -1.0;
    c[m + 1] = 1.0;
    let p = lstsq(a, &c)?;

    let p = DiagonalWeight::new(p, Space::Face { cells: vec![m], axis: 0 })?;
    let q = DiagonalWeight::new(q, Space::Scalar(vec![m]))?;
    Ok((p, q))
}

/// Boundary operator B = Q·D + Gᵀ·P, with entries below 1e−12/Δx dropped.
pub fn build_boundary(
    d: &SparseOperator,
    g: &SparseOperator,
    p: &DiagonalWeight,
    q: &DiagonalWeight,
    dx: f64,
) -> Result<SparseOperator> {
    let b = d
        .scale_rows(&q.values)
        .add(&g.transpose().scale_cols(&p.values))
        .pruned(1e-12 / dx);
    let (rows, cols) = b.shape();
    let tol = 1e-11;
    // Δx·1ᵀB and Δx·B·1 both reduce to the two boundary point values
    let col_sums = b.transpose().apply(&vec![dx; rows]);
    let row_sums = b.apply(&vec![dx; cols]);
    for (j, s) in col_sums.iter().enumerate() {
        let want = if j == 0 { -1.0 } else if j == cols - 1 { 1.0 } else { 0.0 };
        if (s - want).abs() > tol {
            return Err(MimeticError::BoundaryOperator(format!("column {j} sums to {s:.3e}")));
        }
    }
    for (i, s) in row_sums.iter().enumerate() {
        let want = if i == 0 { -1.0 } else if i == rows - 1 { 1.0 } else { 0.0 };
        if (s - want).abs() > tol {
            return Err(MimeticError::BoundaryOperator(format!("row {i} sums to {s:.3e}")));
        }
    }
    Ok(b.tagged(d.domain.clone(), d.codomain.clone()))
}

fn lagrange_row(src: &[f64], x: f64, lo: usize, k: usize) -> Vec<(usize, f64)> {
    (lo..lo + k)
        .map(|i| {
            let mut w = 1.0;
            for j in lo..lo + k {
                if j != i {
                    w *= (x - src[j]) / (src[i] - src[j]);
                }
            }
            (i, w)
        })
        .collect()
}

/// Local Lagrange interpolation from `src` points to `dst` points using the
/// `k` nearest consecutive source points (one-sided near the ends).
pub fn lagrange_interpolator(src: &[f64], dst: &[f64], k: usize) -> SparseOperator {
    assert!(k >= 1 && k <= src.len(), "stencil of {k} points on {} sources", src.len());
    let mut t = Vec::with_capacity(dst.len() * k);
    for (r, &x) in dst.iter().enumerate() {
        let c = src.partition_point(|&s| s < x);
        let lo = c.saturating_sub(k / 2).min(src.len() - k);
        for (i, w) in lagrange_row(src, x, lo, k) {
            t.push((r, i, w));
        }
    }
    SparseOperator::from_triplets(dst.len(), src.len(), t)
}

pub fn scalar_points(m: usize) -> Vec<f64> {
    let h = 1.0 / m as f64;
    let mut x = Vec::with_capacity(m + 2);
    x.push(0.0);
    x.extend((0..m).map(|i| (i as f64 + 0.5) * h));
    x.push(1.0);
    x
}

pub fn face_points(m: usize) -> Vec<f64> {
    let h = 1.0 / m as f64;
    (0..=m).map(|i| i as f64 * h).collect()
}

pub fn center_points(m: usize) -> Vec<f64> {
    let h = 1.0 / m as f64;
    (0..m).map(|i| (i as f64 + 0.5) * h).collect()
}

/// Scalar-to-face and face-to-scalar interpolators of order k.
pub fn build_interpolators(k: usize, m: usize) -> Result<(SparseOperator, SparseOperator)> {
    check_cells(k, m)?;
    let (s, f) = (scalar_points(m), face_points(m));
    let face = Space::Face { cells: vec![m], axis: 0 };
    let scalar = Space::Scalar(vec![m]);
    let c2f = lagrange_interpolator(&s, &f, k).tagged(scalar.clone(), face.clone());
    let f2c = lagrange_interpolator(&f, &s, k).tagged(face, scalar);
    Ok((c2f, f2c))
}

/// Interior centers (m) → faces (m+1), using `points` source points per row.
pub fn centers_to_faces(m: usize, points: usize) -> SparseOperator {
    lagrange_interpolator(&center_points(m), &face_points(m), points)
        .tagged(Space::Centers(vec![m]), Space::Face { cells: vec![m], axis: 0 })
}

/// Faces (m+1) → interior centers (m).
pub fn faces_to_centers(m: usize, points: usize) -> SparseOperator {
    lagrange_interpolator(&face_points(m), &center_points(m), points)
        .tagged(Space::Face { cells: vec![m], axis: 0 }, Space::Centers(vec![m]))
}

/// All 1D operators for one axis.
#[derive(Clone, Debug)]
pub struct Operators1d {
    pub k: usize,
    pub m: usize,
    pub dx: f64,
    pub d: SparseOperator,
    pub g: SparseOperator,
    pub p: DiagonalWeight,
    pub q: DiagonalWeight,
    pub b: SparseOperator,
}

impl Operators1d {
    pub fn new(k: usize, m: usize, dx: f64) -> Result<Self> {
        let d = build_divergence(k, m, dx)?;
        let g = build_gradient(k, m, dx)?;
        let (p, q) = build_weights(&d, &g, k, m, dx)?;
        let b = build_boundary(&d, &g, &p, &q, dx)?;
        Ok(Operators1d { k, m, dx, d, g, p, q, b })
    }

    /// Q restricted to the m interior centers.
    pub fn q_interior(&self) -> Vec<f64> {
        self.q.values[1..=self.m].to_vec()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k4_entries() {
        let d = build_divergence(4, 10, 1.0).unwrap();
        assert_eq!(d.get(1, 0), -11.0 / 12.0);
        assert_eq!(d.get(2, 1), -9.0 / 8.0);
        assert_eq!(d.get(10, 10), 11.0 / 12.0);
        let g = build_gradient(4, 10, 1.0).unwrap();
        assert_eq!(g.get(0, 0), -352.0 / 105.0);
        assert_eq!(g.get(10, 11), 352.0 / 105.0);
        assert_eq!(g.get(9, 8), 3.0 / 40.0);
        assert_eq!(g.get(9, 7), -1.0 / 168.0);
    }

    #[test]
    fn k2_boundary_row_is_exact_for_quadratics() {
        let g = build_gradient(2, 4, 1.0).unwrap();
        // points 0, 1/2, 3/2 with f = x²
        let v = g.get(0, 0) * 0.0 + g.get(0, 1) * 0.25 + g.get(0, 2) * 2.25;
        assert!(v.abs() < 1e-15);
    }

    #[test]
    fn divergence_rows_zero_at_boundary() {
        for k in [2, 4] {
            let d = build_divergence(k, 12, 0.1).unwrap();
            assert_eq!(d.row(0).count(), 0);
            assert_eq!(d.row(13).count(), 0);
        }
    }

    #[test]
    fn weights_k2_closed_form() {
        let ops = Operators1d::new(2, 10, 0.1).unwrap();
        for v in ops.q.values.iter() {
            assert!((v - 1.0).abs() < 1e-13);
        }
        let p = &ops.p.values;
        assert!((p[0] - 3.0 / 8.0).abs() < 1e-13);
        assert!((p[1] - 9.0 / 8.0).abs() < 1e-13);
        assert!((p[5] - 1.0).abs() < 1e-13);
        assert!((p[10] - 3.0 / 8.0).abs() < 1e-13);
    }

    #[test]
    fn weights_k4_positive_and_tend_to_one() {
        let ops = Operators1d::new(4, 64, 1.0 / 64.0).unwrap();
        assert!(ops.p.values.iter().chain(&ops.q.values).all(|&v| v > 0.0));
        assert!((ops.q.values[32] - 1.0).abs() < 1e-13);
        assert!((ops.p.values[32] - 1.0).abs() < 1e-13);
    }

    #[test]
    fn too_few_cells_rejected() {
        assert!(matches!(build_divergence(4, 7, 1.0), Err(MimeticError::TooFewCells { .. })));
        assert!(matches!(build_gradient(3, 8, 1.0), Err(MimeticError::UnsupportedOrder(3))));
        assert!(build_gradient(2, 3, 1.0).is_ok());
    }

    #[test]
    fn interpolator_rows() {
        let (c2f, f2c) = build_interpolators(2, 6).unwrap();
        assert!((c2f.get(3, 3) - 0.5).abs() < 1e-15 && (c2f.get(3, 4) - 0.5).abs() < 1e-15);
        // boundary scalar points coincide with end faces
        assert_eq!(f2c.get(0, 0), 1.0);
        assert_eq!(f2c.get(7, 6), 1.0);
    }
}
