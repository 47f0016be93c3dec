use crate::error::{MimeticError, Result};
use crate::grid::{compute_metrics, inv3, Location, Mapping, MetricSource, Metrics, StaggeredGrid};
use crate::mimetic1d::DiagonalWeight;
use crate::mimeticnd::{face_to_face, MimeticNd};
use crate::sparse::{SparseOperator, Space};

pub type Tensor = [[f64; 3]; 3];

pub const IDENTITY: Tensor = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

/// Metric operators for one grid, order and mapping.
#[derive(Clone, Debug)]
pub struct JacobianOps {
    /// 1/J at centers, 1 on boundary scalar rows.
    pub j_d: SparseOperator,
    /// Logical face gradients → Cartesian gradient components on each face set.
    pub j_g: SparseOperator,
    /// Cartesian face components → contravariant face fluxes J·T⁻¹·V.
    pub flux: SparseOperator,
    /// J at every scalar point.
    pub j_center: DiagonalWeight,
    /// J on the stacked face sets.
    pub j_faces: Vec<f64>,
}

/// Block face operator whose (a, b) block is diag(coef(a, b) at face set a) · I_{b→a}.
fn face_blocks(
    metrics: &Metrics,
    cells: &[usize],
    points: usize,
    coef: impl Fn(usize, usize, &Tensor, f64) -> f64,
) -> SparseOperator {
    let dim = cells.len();
    let sizes: Vec<usize> = (0..dim).map(|a| metrics.faces[a].len()).collect();
    let mut blocks: Vec<Vec<Option<SparseOperator>>> = Vec::with_capacity(dim);
    for a in 0..dim {
        let lm = &metrics.faces[a];
        let mut coefs: Vec<Vec<f64>> = (0..dim)
            .map(|b| lm.jacobian.iter().zip(&lm.det).map(|(t, &j)| coef(a, b, t, j)).collect())
            .collect();
        let scale = coefs.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        // analytic zeros of orthogonal maps come out as rounding noise
        for c in coefs.iter_mut() {
            for v in c.iter_mut() {
                if v.abs() <= 1e-14 * scale {
                    *v = 0.0;
                }
            }
        }
        let row = (0..dim)
            .map(|b| {
                if coefs[b].iter().all(|&v| v == 0.0) {
                    None
                } else if a == b {
                    Some(SparseOperator::diag(&coefs[b]))
                } else {
                    Some(face_to_face(cells, b, a, points).scale_rows(&coefs[b]))
                }
            })
            .collect();
        blocks.push(row);
    }
    let grid: Vec<Vec<Option<&SparseOperator>>> =
        blocks.iter().map(|r| r.iter().map(|b| b.as_ref()).collect()).collect();
    SparseOperator::block(&grid, &sizes, &sizes)
        .tagged(Space::Faces(cells.to_vec()), Space::Faces(cells.to_vec()))
}

pub fn build_jacobian_ops(metrics: &Metrics, nd: &MimeticNd) -> Result<JacobianOps> {
    let cells = &nd.grid.cells;
    if metrics.dim != nd.grid.dim || metrics.scalar.len() != nd.layout.scalar_len() {
        return Err(MimeticError::ShapeMismatch {
            expected: nd.layout.scalar_len(),
            found: metrics.scalar.len(),
            what: "metric samples",
        });
    }
    let boundary = nd.grid.scalar_boundary_mask();
    let jd: Vec<f64> =
        metrics.scalar.det.iter().zip(&boundary).map(|(&j, &b)| if b { 1.0 } else { 1.0 / j }).collect();
    let j_d = SparseOperator::diag(&jd).tagged(Space::Scalar(cells.clone()), Space::Scalar(cells.clone()));
    let j_g = face_blocks(metrics, cells, nd.k, |a, b, t, _| inv3(t)[b][a]);
    let flux = face_blocks(metrics, cells, nd.k, |a, c, t, j| j * inv3(t)[a][c]);
    let j_center = DiagonalWeight::new(metrics.scalar.det.clone(), Space::Scalar(cells.clone()))?;
    let j_faces = metrics.faces.iter().flat_map(|l| l.det.iter().copied()).collect();
    Ok(JacobianOps { j_d, j_g, flux, j_center, j_faces })
}

/// Contravariant coefficient operator W = J·T⁻¹·K·T⁻ᵀ on the stacked faces.
pub fn metric_tensor(metrics: &Metrics, nd: &MimeticNd, kt: &Tensor) -> SparseOperator {
    face_blocks(metrics, &nd.grid.cells, nd.k, |a, b, t, j| {
        let ti = inv3(t);
        let mut s = 0.0;
        for p in 0..3 {
            for q in 0..3 {
                s += ti[a][p] * kt[p][q] * ti[b][q];
            }
        }
        j * s
    })
}

pub fn check_spd(kt: &Tensor, dim: usize) -> Result<()> {
    for r in 0..dim {
        for c in 0..dim {
            if (kt[r][c] - kt[c][r]).abs() > 1e-14 * (kt[r][c].abs() + kt[c][r].abs()) {
                return Err(MimeticError::NotSpd);
            }
        }
    }
    // Cholesky on the leading dim×dim block
    let mut l = [[0.0f64; 3]; 3];
    for i in 0..dim {
        for j in 0..=i {
            let s: f64 = (0..j).map(|p| l[i][p] * l[j][p]).sum();
            if i == j {
                let d = kt[i][i] - s;
                if !(d > 0.0) {
                    return Err(MimeticError::NotSpd);
                }
                l[i][i] = d.sqrt();
            } else {
                l[i][j] = (kt[i][j] - s) / l[j][j];
            }
        }
    }
    Ok(())
}

/// 2D anisotropy tensor R(θ)·diag(d1, d2)·R(θ)ᵀ.
pub fn rotated_tensor(d1: f64, d2: f64, theta: f64) -> Tensor {
    let (s, c) = theta.sin_cos();
    [
        [c * c * d1 + s * s * d2, c * s * (d1 - d2), 0.0],
        [c * s * (d1 - d2), s * s * d1 + c * c * d2, 0.0],
        [0.0, 0.0, 1.0],
    ]
}

/// D̃ = J_D·D·(flux map): Cartesian face components → physical divergence.
pub fn curvilinear_divergence(nd: &MimeticNd, jops: &JacobianOps) -> SparseOperator {
    jops.j_d.matmul(&nd.divergence).matmul(&jops.flux)
}

/// G̃ = J_G·G: scalar → Cartesian gradient components on each face set.
pub fn curvilinear_gradient(nd: &MimeticNd, jops: &JacobianOps) -> SparseOperator {
    jops.j_g.matmul(&nd.gradient)
}

/// L̃ = J_D·D·W·G, approximating ∇·(K∇u).
pub fn curvilinear_laplacian(nd: &MimeticNd, metrics: &Metrics, jops: &JacobianOps, kt: &Tensor) -> Result<SparseOperator> {
    check_spd(kt, nd.grid.dim)?;
    let w = metric_tensor(metrics, nd, kt);
    Ok(jops.j_d.matmul(&nd.divergence).matmul(&w).matmul(&nd.gradient))
}

/// Q_cc = J_D⁻¹·Q and P_cc = J·P (Cartesian-component form).
pub fn curvilinear_weights(
    p: &DiagonalWeight,
    q: &DiagonalWeight,
    jops: &JacobianOps,
) -> Result<(DiagonalWeight, DiagonalWeight)> {
    let jd = jops.j_d.diagonal();
    let qcc = q.values.iter().zip(&jd).map(|(q, d)| q / d).collect();
    let pcc = p.values.iter().zip(&jops.j_faces).map(|(p, j)| p * j).collect();
    Ok((DiagonalWeight::new(pcc, p.space.clone())?, DiagonalWeight::new(qcc, q.space.clone())?))
}

/// Face weights P/diag(W) for the contravariant form, where the gradient is W·G.
pub fn contravariant_face_weights(p: &DiagonalWeight, w: &SparseOperator) -> Result<DiagonalWeight> {
    let d = w.diagonal();
    DiagonalWeight::new(p.values.iter().zip(&d).map(|(p, w)| p / w).collect(), p.space.clone())
}

/// Everything needed to work on one mapped grid.
#[derive(Clone, Debug)]
pub struct CurvilinearOps {
    pub nd: MimeticNd,
    pub mapping: Mapping,
    pub metrics: Metrics,
    pub jops: JacobianOps,
    pub div: SparseOperator,
    pub grad: SparseOperator,
    pub p_cc: DiagonalWeight,
    pub q_cc: DiagonalWeight,
}

impl CurvilinearOps {
    pub fn new(k: usize, grid: &StaggeredGrid, mapping: &Mapping, source: MetricSource) -> Result<Self> {
        let nd = MimeticNd::new(k, grid)?;
        let metrics = compute_metrics(mapping, grid, source)?;
        let jops = build_jacobian_ops(&metrics, &nd)?;
        let div = curvilinear_divergence(&nd, &jops);
        let grad = curvilinear_gradient(&nd, &jops);
        let (p_cc, q_cc) = curvilinear_weights(&nd.p, &nd.q, &jops)?;
        Ok(CurvilinearOps { nd, mapping: *mapping, metrics, jops, div, grad, p_cc, q_cc })
    }

    pub fn laplacian(&self, kt: &Tensor) -> Result<SparseOperator> {
        curvilinear_laplacian(&self.nd, &self.metrics, &self.jops, kt)
    }

    pub fn metric_tensor(&self, kt: &Tensor) -> SparseOperator {
        metric_tensor(&self.metrics, &self.nd, kt)
    }

    /// Physical coordinates at a location set, one component.
    pub fn coords(&self, loc: Location, comp: usize) -> Vec<f64> {
        self.metrics.at(loc).physical.iter().map(|x| x[comp]).collect()
    }

    /// Sample a physical-coordinate function on a location set.
    pub fn sample(&self, loc: Location, f: impl Fn(&[f64; 3]) -> f64) -> Vec<f64> {
        self.metrics.at(loc).physical.iter().map(f).collect()
    }

    /// Sample a Cartesian vector field: component a on face set a, stacked.
    pub fn sample_faces(&self, f: impl Fn(usize, &[f64; 3]) -> f64) -> Vec<f64> {
        (0..self.nd.grid.dim)
            .flat_map(|a| self.metrics.faces[a].physical.iter().map(|x| f(a, x)).collect::<Vec<_>>())
            .collect()
    }
}
