use crate::error::{MimeticError, Result};
use crate::grid::StaggeredGrid;
use crate::mimetic1d::{
    centers_to_faces, check_cells, faces_to_centers, lagrange_interpolator, DiagonalWeight, Operators1d,
};
use crate::sparse::{kron_axes, SparseOperator, Space};

/// Flattening of scalar and face unknowns (x index fastest).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FieldLayout {
    pub cells: Vec<usize>,
}

impl FieldLayout {
    pub fn new(cells: &[usize]) -> Self {
        FieldLayout { cells: cells.to_vec() }
    }

    pub fn dim(&self) -> usize {
        self.cells.len()
    }

    pub fn scalar_shape(&self) -> Vec<usize> {
        self.cells.iter().map(|m| m + 2).collect()
    }

    pub fn face_shape(&self, axis: usize) -> Vec<usize> {
        self.cells.iter().enumerate().map(|(a, &m)| if a == axis { m + 1 } else { m }).collect()
    }

    pub fn scalar_len(&self) -> usize {
        self.scalar_shape().iter().product()
    }

    pub fn face_len(&self, axis: usize) -> usize {
        self.face_shape(axis).iter().product()
    }

    pub fn faces_len(&self) -> usize {
        (0..self.dim()).map(|a| self.face_len(a)).sum()
    }

    /// Offset of face set `axis` inside the stacked face vector.
    pub fn face_offset(&self, axis: usize) -> usize {
        (0..axis).map(|a| self.face_len(a)).sum()
    }

    pub fn flatten(shape: &[usize], idx: &[usize]) -> usize {
        let mut flat = 0;
        for a in (0..shape.len()).rev() {
            debug_assert!(idx[a] < shape[a]);
            flat = flat * shape[a] + idx[a];
        }
        flat
    }

    pub fn unflatten(shape: &[usize], mut flat: usize) -> Vec<usize> {
        shape
            .iter()
            .map(|&s| {
                let i = flat % s;
                flat /= s;
                i
            })
            .collect()
    }
}

/// Outer product of per-axis vectors, x fastest.
pub fn outer_product(vecs: &[Vec<f64>]) -> Vec<f64> {
    let mut out = vec![1.0];
    for v in vecs {
        let mut next = Vec::with_capacity(out.len() * v.len());
        for &a in v {
            for &b in &out {
                next.push(a * b);
            }
        }
        out = next;
    }
    out
}

fn axis_ops(k: usize, grid: &StaggeredGrid) -> Result<Vec<Operators1d>> {
    if !(1..=3).contains(&grid.dim) {
        return Err(MimeticError::InvalidGrid(format!("dimension {}", grid.dim)));
    }
    for &m in &grid.cells {
        check_cells(k, m)?;
    }
    (0..grid.dim).map(|a| Operators1d::new(k, grid.cells[a], grid.spacing[a])).collect()
}

fn gradient_axis(ops: &[Operators1d], a: usize) -> SparseOperator {
    let factors: Vec<SparseOperator> = ops
        .iter()
        .enumerate()
        .map(|(b, o)| if b == a { o.g.clone() } else { SparseOperator::interior_selector(o.m) })
        .collect();
    let cells: Vec<usize> = ops.iter().map(|o| o.m).collect();
    kron_axes(&factors).tagged(Space::Scalar(cells.clone()), Space::Face { cells, axis: a })
}

fn divergence_axis(ops: &[Operators1d], a: usize) -> SparseOperator {
    let factors: Vec<SparseOperator> = ops
        .iter()
        .enumerate()
        .map(|(b, o)| if b == a { o.d.clone() } else { SparseOperator::interior_selector(o.m).transpose() })
        .collect();
    let cells: Vec<usize> = ops.iter().map(|o| o.m).collect();
    kron_axes(&factors).tagged(Space::Face { cells: cells.clone(), axis: a }, Space::Scalar(cells))
}

/// Stacked gradient [G_x; G_y; (G_z)].
pub fn build_gradient_nd(k: usize, grid: &StaggeredGrid) -> Result<SparseOperator> {
    let ops = axis_ops(k, grid)?;
    let parts: Vec<SparseOperator> = (0..grid.dim).map(|a| gradient_axis(&ops, a)).collect();
    let refs: Vec<&SparseOperator> = parts.iter().collect();
    Ok(SparseOperator::vstack(&refs).tagged(Space::Scalar(grid.cells.clone()), Space::Faces(grid.cells.clone())))
}

/// Stacked divergence [D_x | D_y | (D_z)].
pub fn build_divergence_nd(k: usize, grid: &StaggeredGrid) -> Result<SparseOperator> {
    let ops = axis_ops(k, grid)?;
    let parts: Vec<SparseOperator> = (0..grid.dim).map(|a| divergence_axis(&ops, a)).collect();
    let refs: Vec<&SparseOperator> = parts.iter().collect();
    Ok(SparseOperator::hstack(&refs).tagged(Space::Faces(grid.cells.clone()), Space::Scalar(grid.cells.clone())))
}

pub fn build_laplacian_nd(k: usize, grid: &StaggeredGrid) -> Result<SparseOperator> {
    Ok(build_divergence_nd(k, grid)?.matmul(&build_gradient_nd(k, grid)?))
}

fn weights_from(ops: &[Operators1d]) -> (Vec<DiagonalWeight>, DiagonalWeight) {
    let cells: Vec<usize> = ops.iter().map(|o| o.m).collect();
    let q = outer_product(&ops.iter().map(|o| o.q.values.clone()).collect::<Vec<_>>());
    let p_axes = (0..ops.len())
        .map(|a| {
            let vecs: Vec<Vec<f64>> = ops
                .iter()
                .enumerate()
                .map(|(b, o)| if b == a { o.p.values.clone() } else { o.q_interior() })
                .collect();
            DiagonalWeight { values: outer_product(&vecs), space: Space::Face { cells: cells.clone(), axis: a } }
        })
        .collect();
    (p_axes, DiagonalWeight { values: q, space: Space::Scalar(cells) })
}

/// Stacked face weights P_nd and scalar weights Q_nd.
pub fn build_weights_nd(k: usize, grid: &StaggeredGrid) -> Result<(DiagonalWeight, DiagonalWeight)> {
    let ops = axis_ops(k, grid)?;
    let (p_axes, q) = weights_from(&ops);
    let p = DiagonalWeight {
        values: p_axes.iter().flat_map(|w| w.values.iter().copied()).collect(),
        space: Space::Faces(grid.cells.clone()),
    };
    Ok((p, q))
}

/// Interpolator from face set `from` to face set `to`, using `points`-point
/// Lagrange stencils along the two axes involved.
pub fn face_to_face(cells: &[usize], from: usize, to: usize, points: usize) -> SparseOperator {
    let factors: Vec<SparseOperator> = cells
        .iter()
        .enumerate()
        .map(|(c, &m)| {
            if from == to {
                SparseOperator::identity(if c == to { m + 1 } else { m })
            } else if c == to {
                centers_to_faces(m, points)
            } else if c == from {
                faces_to_centers(m, points)
            } else {
                SparseOperator::identity(m)
            }
        })
        .collect();
    kron_axes(&factors).tagged(
        Space::Face { cells: cells.to_vec(), axis: from },
        Space::Face { cells: cells.to_vec(), axis: to },
    )
}

/// Interpolator from the full scalar space to face set `axis`.
pub fn scalar_to_face(cells: &[usize], axis: usize, points: usize) -> SparseOperator {
    let factors: Vec<SparseOperator> = cells
        .iter()
        .enumerate()
        .map(|(c, &m)| {
            if c == axis {
                lagrange_interpolator(
                    &crate::mimetic1d::scalar_points(m),
                    &crate::mimetic1d::face_points(m),
                    points,
                )
            } else {
                SparseOperator::interior_selector(m)
            }
        })
        .collect();
    kron_axes(&factors)
        .tagged(Space::Scalar(cells.to_vec()), Space::Face { cells: cells.to_vec(), axis })
}

/// All logical ND operators for one grid and order.
#[derive(Clone, Debug)]
pub struct MimeticNd {
    pub k: usize,
    pub grid: StaggeredGrid,
    pub layout: FieldLayout,
    pub axes: Vec<Operators1d>,
    pub grads: Vec<SparseOperator>,
    pub divs: Vec<SparseOperator>,
    pub gradient: SparseOperator,
    pub divergence: SparseOperator,
    pub q: DiagonalWeight,
    pub p_axes: Vec<DiagonalWeight>,
    pub p: DiagonalWeight,
    pub boundary: SparseOperator,
}

impl MimeticNd {
    pub fn new(k: usize, grid: &StaggeredGrid) -> Result<Self> {
        let axes = axis_ops(k, grid)?;
        let cells = grid.cells.clone();
        let grads: Vec<SparseOperator> = (0..grid.dim).map(|a| gradient_axis(&axes, a)).collect();
        let divs: Vec<SparseOperator> = (0..grid.dim).map(|a| divergence_axis(&axes, a)).collect();
        let gradient = SparseOperator::vstack(&grads.iter().collect::<Vec<_>>())
            .tagged(Space::Scalar(cells.clone()), Space::Faces(cells.clone()));
        let divergence = SparseOperator::hstack(&divs.iter().collect::<Vec<_>>())
            .tagged(Space::Faces(cells.clone()), Space::Scalar(cells.clone()));
        let (p_axes, q) = weights_from(&axes);
        let p = DiagonalWeight {
            values: p_axes.iter().flat_map(|w| w.values.iter().copied()).collect(),
            space: Space::Faces(cells.clone()),
        };
        let boundary = divergence
            .scale_rows(&q.values)
            .add(&gradient.transpose().scale_cols(&p.values))
            .pruned(1e-12 / grid.spacing.iter().cloned().fold(f64::INFINITY, f64::min))
            .tagged(Space::Faces(cells.clone()), Space::Scalar(cells.clone()));
        Ok(MimeticNd {
            k,
            grid: grid.clone(),
            layout: FieldLayout::new(&cells),
            axes,
            grads,
            divs,
            gradient,
            divergence,
            q,
            p_axes,
            p,
            boundary,
        })
    }

    pub fn laplacian(&self) -> SparseOperator {
        self.divergence.matmul(&self.gradient)
    }

    pub fn measure(&self) -> f64 {
        self.grid.cell_volume()
    }

    /// Split a stacked face vector into its per-axis parts.
    pub fn split_faces<'a>(&self, v: &'a [f64]) -> Vec<&'a [f64]> {
        let mut out = Vec::new();
        let mut off = 0;
        for a in 0..self.grid.dim {
            let n = self.layout.face_len(a);
            out.push(&v[off..off + n]);
            off += n;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn staggered_shapes() {
        let grid = StaggeredGrid::unit(&[5, 3]).unwrap();
        let nd = MimeticNd::new(2, &grid).unwrap();
        assert_eq!(nd.grads[0].shape(), (18, 35));
        assert_eq!(nd.divergence.shape(), (35, 38));
    }

    #[test]
    fn layout_roundtrip() {
        let l = FieldLayout::new(&[4, 3, 2]);
        let shape = l.scalar_shape();
        for flat in 0..l.scalar_len() {
            assert_eq!(FieldLayout::flatten(&shape, &FieldLayout::unflatten(&shape, flat)), flat);
        }
        assert_eq!(l.faces_len(), 5 * 3 * 2 + 4 * 4 * 2 + 4 * 3 * 3);
    }

    #[test]
    fn k2_interior_weights_are_one() {
        let grid = StaggeredGrid::unit(&[6, 6]).unwrap();
        let (p, q) = build_weights_nd(2, &grid).unwrap();
        assert!(q.values.iter().all(|&v| (v - 1.0).abs() < 1e-13));
        assert!(p.values.iter().all(|&v| v > 0.0));
    }

    #[test]
    fn gradient_of_constant_vanishes() {
        let grid = StaggeredGrid::unit(&[8, 9]).unwrap();
        let g = build_gradient_nd(4, &grid).unwrap();
        let out = g.apply(&vec![3.0; grid.scalar_len()]);
        assert!(out.iter().all(|v| v.abs() < 1e-11));
    }
}
