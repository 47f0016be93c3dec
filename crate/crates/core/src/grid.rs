use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{MimeticError, Result};
use crate::mimetic1d::{build_gradient, lagrange_interpolator};
use crate::sparse::SparseOperator;

/// Logical staggered grid in 1, 2 or 3 dimensions.
#[derive(Clone, Debug, PartialEq)]
pub struct StaggeredGrid {
    pub dim: usize,
    pub cells: Vec<usize>,
    pub bounds: Vec<(f64, f64)>,
    pub spacing: Vec<f64>,
}

pub fn make_grid(dim: usize, cells: &[usize], bounds: &[(f64, f64)]) -> Result<StaggeredGrid> {
    if !(1..=3).contains(&dim) {
        return Err(MimeticError::InvalidGrid(format!("dimension {dim} not in 1..=3")));
    }
    if cells.len() != dim || bounds.len() != dim {
        return Err(MimeticError::InvalidGrid(format!(
            "{dim}D grid needs {dim} cell counts and bounds, got {} and {}",
            cells.len(),
            bounds.len()
        )));
    }
    if let Some(&m) = cells.iter().find(|&&m| m == 0) {
        return Err(MimeticError::InvalidGrid(format!("cell count {m} must be at least 1")));
    }
    if let Some(b) = bounds.iter().find(|(lo, hi)| !(hi > lo) || !lo.is_finite() || !hi.is_finite()) {
        return Err(MimeticError::InvalidGrid(format!("degenerate interval [{}, {}]", b.0, b.1)));
    }
    let spacing = cells.iter().zip(bounds).map(|(&m, (lo, hi))| (hi - lo) / m as f64).collect();
    Ok(StaggeredGrid { dim, cells: cells.to_vec(), bounds: bounds.to_vec(), spacing })
}

impl StaggeredGrid {
    /// Unit square/cube grid.
    pub fn unit(cells: &[usize]) -> Result<Self> {
        make_grid(cells.len(), cells, &vec![(0.0, 1.0); cells.len()])
    }

    /// lo, lo+Δ/2, …, hi−Δ/2, hi
    pub fn scalar_points(&self, axis: usize) -> Vec<f64> {
        let (lo, hi) = self.bounds[axis];
        let h = self.spacing[axis];
        let mut x = vec![lo];
        x.extend((0..self.cells[axis]).map(|i| lo + (i as f64 + 0.5) * h));
        x.push(hi);
        x
    }

    pub fn face_points(&self, axis: usize) -> Vec<f64> {
        let (lo, hi) = self.bounds[axis];
        let m = self.cells[axis];
        (0..=m).map(|i| if i == m { hi } else { lo + i as f64 * self.spacing[axis] }).collect()
    }

    pub fn center_points(&self, axis: usize) -> Vec<f64> {
        let p = self.scalar_points(axis);
        p[1..p.len() - 1].to_vec()
    }

    pub fn scalar_len(&self) -> usize {
        self.cells.iter().map(|m| m + 2).product()
    }

    pub fn face_len(&self, axis: usize) -> usize {
        self.cells.iter().enumerate().map(|(a, &m)| if a == axis { m + 1 } else { m }).product()
    }

    /// Logical cell volume Δξ₁·Δξ₂·…
    pub fn cell_volume(&self) -> f64 {
        self.spacing.iter().product()
    }

    /// Per-axis 1D coordinates of a location set.
    pub fn axis_points(&self, loc: Location, axis: usize) -> Vec<f64> {
        match loc {
            Location::Scalar => self.scalar_points(axis),
            Location::Face(a) if a == axis => self.face_points(axis),
            Location::Face(_) => self.center_points(axis),
        }
    }

    /// Logical points of a location set, flattened x-fastest.
    pub fn location_points(&self, loc: Location) -> Vec<[f64; 3]> {
        let axes: Vec<Vec<f64>> = (0..self.dim).map(|a| self.axis_points(loc, a)).collect();
        let shape: Vec<usize> = axes.iter().map(|v| v.len()).collect();
        let n: usize = shape.iter().product();
        (0..n)
            .map(|flat| {
                let mut p = [0.0; 3];
                let mut rest = flat;
                for a in 0..self.dim {
                    p[a] = axes[a][rest % shape[a]];
                    rest /= shape[a];
                }
                p
            })
            .collect()
    }

    /// Boolean mask of boundary points in the scalar space.
    pub fn scalar_boundary_mask(&self) -> Vec<bool> {
        let shape: Vec<usize> = self.cells.iter().map(|m| m + 2).collect();
        let n: usize = shape.iter().product();
        (0..n)
            .map(|flat| {
                let mut rest = flat;
                (0..self.dim).any(|a| {
                    let i = rest % shape[a];
                    rest /= shape[a];
                    i == 0 || i == shape[a] - 1
                })
            })
            .collect()
    }

    /// Boolean mask of faces on the boundary normal to their own axis.
    pub fn face_boundary_mask(&self, axis: usize) -> Vec<bool> {
        let shape: Vec<usize> =
            (0..self.dim).map(|a| if a == axis { self.cells[a] + 1 } else { self.cells[a] }).collect();
        let stride: usize = shape[..axis].iter().product();
        (0..self.face_len(axis))
            .map(|flat| {
                let i = (flat / stride) % shape[axis];
                i == 0 || i == self.cells[axis]
            })
            .collect()
    }
}

/// Staggered location sets where fields and metrics live.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Location {
    Scalar,
    Face(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MappingKind {
    Identity { dim: usize },
    SemiAnnulus { a: f64, b: f64 },
    Sinusoidal2d { eps: f64 },
    Sinusoidal3d { eps: f64 },
}

/// Logical-to-physical coordinate map on the unit square or cube.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mapping {
    pub kind: MappingKind,
}

pub fn make_mapping(kind: MappingKind) -> Result<Mapping> {
    match kind {
        MappingKind::Identity { dim } if !(1..=3).contains(&dim) => {
            return Err(MimeticError::InvalidMapping(format!("identity dimension {dim}")));
        }
        MappingKind::SemiAnnulus { a, b } if !(a > 0.0 && b > a) => {
            return Err(MimeticError::InvalidMapping(format!("semi-annulus needs 0 < a < b, got a={a}, b={b}")));
        }
        MappingKind::Sinusoidal2d { eps } if !(eps.abs() < 1.0 / (2.0 * PI)) => {
            return Err(MimeticError::InvalidMapping(format!("|eps| = {} exceeds 1/(2π)", eps.abs())));
        }
        MappingKind::Sinusoidal3d { eps } if !(eps.abs() < 1.0 / (2.0 * PI * 3f64.sqrt())) => {
            return Err(MimeticError::InvalidMapping(format!("|eps| = {} exceeds 1/(2π√3)", eps.abs())));
        }
        _ => {}
    }
    Ok(Mapping { kind })
}

impl Mapping {
    pub fn identity(dim: usize) -> Self {
        Mapping { kind: MappingKind::Identity { dim } }
    }

    pub fn dim(&self) -> usize {
        match self.kind {
            MappingKind::Identity { dim } => dim,
            MappingKind::SemiAnnulus { .. } | MappingKind::Sinusoidal2d { .. } => 2,
            MappingKind::Sinusoidal3d { .. } => 3,
        }
    }

    pub fn point(&self, xi: &[f64; 3]) -> [f64; 3] {
        match self.kind {
            MappingKind::Identity { .. } => *xi,
            MappingKind::SemiAnnulus { a, b } => {
                let r = a + (b - a) * xi[0];
                let th = PI * xi[1];
                [r * th.cos(), r * th.sin(), 0.0]
            }
            MappingKind::Sinusoidal2d { eps } => {
                let s = eps * (2.0 * PI * xi[0]).sin() * (2.0 * PI * xi[1]).sin();
                [xi[0] + s, xi[1] + s, 0.0]
            }
            MappingKind::Sinusoidal3d { eps } => {
                let s = eps * (2.0 * PI * xi[0]).sin() * (2.0 * PI * xi[1]).sin() * (2.0 * PI * xi[2]).sin();
                [xi[0] + s, xi[1] + s, xi[2] + s]
            }
        }
    }

    /// Analytic Jacobian matrix T[r][c] = ∂x_r/∂ξ_c. Unused trailing rows and
    /// columns hold the identity, so the 3×3 determinant equals the 2D one.
    pub fn jacobian(&self, xi: &[f64; 3]) -> [[f64; 3]; 3] {
        let mut t = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let tp = 2.0 * PI;
        match self.kind {
            MappingKind::Identity { .. } => {}
            MappingKind::SemiAnnulus { a, b } => {
                let r = a + (b - a) * xi[0];
                let th = PI * xi[1];
                t[0][0] = (b - a) * th.cos();
                t[0][1] = -PI * r * th.sin();
                t[1][0] = (b - a) * th.sin();
                t[1][1] = PI * r * th.cos();
            }
            MappingKind::Sinusoidal2d { eps } => {
                let (s0, c0) = (tp * xi[0]).sin_cos();
                let (s1, c1) = (tp * xi[1]).sin_cos();
                let ds = [eps * tp * c0 * s1, eps * tp * s0 * c1];
                for r in 0..2 {
                    for c in 0..2 {
                        t[r][c] += ds[c];
                    }
                }
            }
            MappingKind::Sinusoidal3d { eps } => {
                let (s0, c0) = (tp * xi[0]).sin_cos();
                let (s1, c1) = (tp * xi[1]).sin_cos();
                let (s2, c2) = (tp * xi[2]).sin_cos();
                let ds = [eps * tp * c0 * s1 * s2, eps * tp * s0 * c1 * s2, eps * tp * s0 * s1 * c2];
                for r in 0..3 {
                    for c in 0..3 {
                        t[r][c] += ds[c];
                    }
                }
            }
        }
        t
    }
}

pub fn det3(t: &[[f64; 3]; 3]) -> f64 {
    t[0][0] * (t[1][1] * t[2][2] - t[1][2] * t[2][1]) - t[0][1] * (t[1][0] * t[2][2] - t[1][2] * t[2][0])
        + t[0][2] * (t[1][0] * t[2][1] - t[1][1] * t[2][0])
}

pub fn inv3(t: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let d = det3(t);
    let mut inv = [[0.0; 3]; 3];
    for r in 0..3 {
        for c in 0..3 {
            // cofactor of (c, r)
            let (r1, r2) = ((c + 1) % 3, (c + 2) % 3);
            let (c1, c2) = ((r + 1) % 3, (r + 2) % 3);
            inv[r][c] = (t[r1][c1] * t[r2][c2] - t[r1][c2] * t[r2][c1]) / d;
        }
    }
    inv
}

/// Metric samples at one location set.
#[derive(Clone, Debug)]
pub struct LocationMetrics {
    pub location: Location,
    pub logical: Vec<[f64; 3]>,
    pub physical: Vec<[f64; 3]>,
    pub jacobian: Vec<[[f64; 3]; 3]>,
    pub det: Vec<f64>,
}

impl LocationMetrics {
    pub fn len(&self) -> usize {
        self.det.len()
    }

    pub fn is_empty(&self) -> bool {
        self.det.is_empty()
    }

    /// Sampled partial ∂x_r/∂ξ_c at every point.
    pub fn partial(&self, r: usize, c: usize) -> Vec<f64> {
        self.jacobian.iter().map(|t| t[r][c]).collect()
    }
}

#[derive(Clone, Debug)]
pub struct Metrics {
    pub dim: usize,
    pub scalar: LocationMetrics,
    pub faces: Vec<LocationMetrics>,
}

impl Metrics {
    pub fn at(&self, loc: Location) -> &LocationMetrics {
        match loc {
            Location::Scalar => &self.scalar,
            Location::Face(a) => &self.faces[a],
        }
    }

    pub fn min_det(&self) -> f64 {
        std::iter::once(&self.scalar)
            .chain(&self.faces)
            .flat_map(|l| l.det.iter().copied())
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MetricSource {
    Analytic,
    /// Mimetic gradient plus interpolation of order k applied to sampled coordinates.
    Numeric { k: usize },
}

/// Apply a 1D operator along `axis` of a flattened x-fastest array.
pub(crate) fn apply_along(op: &SparseOperator, data: &[f64], shape: &[usize], axis: usize) -> (Vec<f64>, Vec<usize>) {
    assert_eq!(op.cols(), shape[axis]);
    let inner: usize = shape[..axis].iter().product();
    let outer: usize = shape[axis + 1..].iter().product();
    let mut new_shape = shape.to_vec();
    new_shape[axis] = op.rows();
    let mut out = vec![0.0; inner * op.rows() * outer];
    for o in 0..outer {
        for r in 0..op.rows() {
            for (c, v) in op.row(r) {
                let src = (o * shape[axis] + c) * inner;
                let dst = (o * op.rows() + r) * inner;
                for i in 0..inner {
                    out[dst + i] += v * data[src + i];
                }
            }
        }
    }
    (out, new_shape)
}

fn numeric_location(mapping: &Mapping, grid: &StaggeredGrid, loc: Location, k: usize) -> Result<Vec<[[f64; 3]; 3]>> {
    let dim = grid.dim;
    let n = grid.location_points(loc).len();
    let mut jac = vec![[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]; n];
    for a in 0..dim {
        let m = grid.cells[a];
        // sample coordinates with axis a on full scalar points
        let axes: Vec<Vec<f64>> =
            (0..dim).map(|b| if b == a { grid.scalar_points(b) } else { grid.axis_points(loc, b) }).collect();
        let shape: Vec<usize> = axes.iter().map(|v| v.len()).collect();
        let total: usize = shape.iter().product();
        let samples: Vec<[f64; 3]> = (0..total)
            .map(|flat| {
                let mut p = [0.0; 3];
                let mut rest = flat;
                for b in 0..dim {
                    p[b] = axes[b][rest % shape[b]];
                    rest /= shape[b];
                }
                mapping.point(&p)
            })
            .collect();
        let g = build_gradient(k, m, grid.spacing[a])?;
        let op = match loc {
            Location::Face(f) if f == a => g,
            _ => {
                let i = lagrange_interpolator(&grid.face_points(a), &grid.scalar_points(a), k).matmul(&g);
                if loc == Location::Scalar {
                    i
                } else {
                    i.select_rows(&(1..=m).collect::<Vec<_>>())
                }
            }
        };
        for r in 0..dim {
            let comp: Vec<f64> = samples.iter().map(|x| x[r]).collect();
            let (d, _) = apply_along(&op, &comp, &shape, a);
            for (t, v) in jac.iter_mut().zip(d) {
                t[r][a] = v;
            }
        }
    }
    Ok(jac)
}

pub fn compute_metrics(mapping: &Mapping, grid: &StaggeredGrid, source: MetricSource) -> Result<Metrics> {
    if mapping.dim() != grid.dim {
        return Err(MimeticError::InvalidMapping(format!(
            "{}D mapping on a {}D grid",
            mapping.dim(),
            grid.dim
        )));
    }
    let build = |loc: Location| -> Result<LocationMetrics> {
        let logical = grid.location_points(loc);
        let physical: Vec<[f64; 3]> = logical.iter().map(|p| mapping.point(p)).collect();
        let jacobian = match source {
            MetricSource::Analytic => logical.iter().map(|p| mapping.jacobian(p)).collect(),
            MetricSource::Numeric { k } => numeric_location(mapping, grid, loc, k)?,
        };
        let det: Vec<f64> = jacobian.iter().map(det3).collect();
        if let Some((i, &j)) = det.iter().enumerate().find(|(_, j)| !(**j > 0.0)) {
            return Err(MimeticError::SingularMapping {
                location: format!("{loc:?} point {i}"),
                point: logical[i][..grid.dim].to_vec(),
                j,
            });
        }
        Ok(LocationMetrics { location: loc, logical, physical, jacobian, det })
    };
    let scalar = build(Location::Scalar)?;
    let faces = (0..grid.dim).map(|a| build(Location::Face(a))).collect::<Result<Vec<_>>>()?;
    Ok(Metrics { dim: grid.dim, scalar, faces })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn staggered_point_counts() {
        let g = StaggeredGrid::unit(&[5, 3]).unwrap();
        assert_eq!(g.face_len(0), 18);
        assert_eq!(g.face_len(1), 20);
        assert_eq!(g.scalar_len(), 35);
    }

    #[test]
    fn one_d_points() {
        let g = StaggeredGrid::unit(&[5]).unwrap();
        let f = g.face_points(0);
        let s = g.scalar_points(0);
        let fe = [0.0, 0.2, 0.4, 0.6, 0.8, 1.0];
        let se = [0.0, 0.1, 0.3, 0.5, 0.7, 0.9, 1.0];
        assert!(f.iter().zip(fe).all(|(a, b)| (a - b).abs() < 1e-15));
        assert!(s.iter().zip(se).all(|(a, b)| (a - b).abs() < 1e-15));
    }

    #[test]
    fn empty_grid_rejected() {
        assert!(make_grid(1, &[0], &[(0.0, 1.0)]).is_err());
        assert!(make_grid(1, &[4], &[(1.0, 1.0)]).is_err());
    }

    #[test]
    fn mapping_points() {
        let sa = make_mapping(MappingKind::SemiAnnulus { a: 2.0 * PI, b: 3.0 * PI }).unwrap();
        let p = sa.point(&[0.0, 0.0, 0.0]);
        assert!((p[0] - 2.0 * PI).abs() < 1e-15 && p[1].abs() < 1e-15);
        let s = make_mapping(MappingKind::Sinusoidal2d { eps: 0.06 }).unwrap();
        assert!((s.point(&[0.25, 0.25, 0.0])[0] - 0.31).abs() < 1e-15);
        assert!(make_mapping(MappingKind::SemiAnnulus { a: 2.0, b: 1.0 }).is_err());
        assert!(make_mapping(MappingKind::Sinusoidal2d { eps: 0.2 }).is_err());
    }

    #[test]
    fn annulus_jacobian_closed_form() {
        let (a, b) = (2.0 * PI, 3.0 * PI);
        let map = make_mapping(MappingKind::SemiAnnulus { a, b }).unwrap();
        let grid = StaggeredGrid::unit(&[8, 8]).unwrap();
        let met = compute_metrics(&map, &grid, MetricSource::Analytic).unwrap();
        for (xi, j) in met.scalar.logical.iter().zip(&met.scalar.det) {
            let want = PI * PI * (2.0 * PI + PI * xi[0]);
            assert!((j - want).abs() < 1e-12 * want);
        }
    }

    #[test]
    fn folded_map_is_singular() {
        // bypass the constructor bound to get a folding map
        let map = Mapping { kind: MappingKind::Sinusoidal2d { eps: 0.3 } };
        let grid = StaggeredGrid::unit(&[16, 16]).unwrap();
        assert!(matches!(
            compute_metrics(&map, &grid, MetricSource::Analytic),
            Err(MimeticError::SingularMapping { .. })
        ));
    }

    #[test]
    fn boundary_masks() {
        let g = StaggeredGrid::unit(&[3, 2]).unwrap();
        assert_eq!(g.scalar_boundary_mask().iter().filter(|&&b| b).count(), 5 * 4 - 3 * 2);
        let fm = g.face_boundary_mask(0);
        assert_eq!(fm.iter().filter(|&&b| b).count(), 4);
        assert!(fm[0] && fm[3] && !fm[1]);
        assert_eq!(g.face_boundary_mask(1).iter().filter(|&&b| b).count(), 6);
    }
}
