use std::f64::consts::PI;
use std::sync::Arc;

use faer::prelude::*;
use faer::sparse::{SparseColMat, Triplet};
use serde::{Deserialize, Serialize};

use crate::curvilinear::{check_spd, rotated_tensor, CurvilinearOps, Tensor, IDENTITY};
use crate::error::{MimeticError, Result};
use crate::grid::{make_mapping, Location, Mapping, MappingKind, MetricSource, StaggeredGrid};
use crate::mimetic1d::DiagonalWeight;
use crate::sparse::{norm2, SparseOperator};

pub type FieldFn = Arc<dyn Fn(&[f64; 3]) -> f64 + Send + Sync>;

/// Steady problem −∇·(K∇u) = f with Dirichlet data g.
#[derive(Clone)]
pub struct PoissonProblem {
    pub grid: StaggeredGrid,
    pub mapping: Mapping,
    pub k: usize,
    pub tensor: Tensor,
    pub forcing: FieldFn,
    pub boundary: FieldFn,
    pub exact: Option<FieldFn>,
    pub metrics: MetricSource,
}

impl PoissonProblem {
    /// u = sin r on the semi-annulus a ≤ r ≤ b.
    pub fn semi_annulus(k: usize, m: usize, a: f64, b: f64) -> Result<Self> {
        let u: FieldFn = Arc::new(|x: &[f64; 3]| x[0].hypot(x[1]).sin());
        Ok(PoissonProblem {
            grid: StaggeredGrid::unit(&[m, m])?,
            mapping: make_mapping(MappingKind::SemiAnnulus { a, b })?,
            k,
            tensor: IDENTITY,
            forcing: Arc::new(|x: &[f64; 3]| {
                let r = x[0].hypot(x[1]);
                r.sin() - r.cos() / r
            }),
            boundary: u.clone(),
            exact: Some(u),
            metrics: MetricSource::Analytic,
        })
    }

    /// u = sin(πx)sin(πy) with a rotated anisotropic tensor on the sinusoidal map.
    pub fn sinusoidal(k: usize, m: usize, eps: f64, d1: f64, d2: f64, theta: f64) -> Result<Self> {
        let kt = rotated_tensor(d1, d2, theta);
        check_spd(&kt, 2)?;
        let u: FieldFn = Arc::new(|x: &[f64; 3]| (PI * x[0]).sin() * (PI * x[1]).sin());
        let (k11, k12, k22) = (kt[0][0], kt[0][1], kt[1][1]);
        Ok(PoissonProblem {
            grid: StaggeredGrid::unit(&[m, m])?,
            mapping: make_mapping(MappingKind::Sinusoidal2d { eps })?,
            k,
            tensor: kt,
            forcing: Arc::new(move |x: &[f64; 3]| {
                let (sx, cx) = (PI * x[0]).sin_cos();
                let (sy, cy) = (PI * x[1]).sin_cos();
                PI * PI * ((k11 + k22) * sx * sy - 2.0 * k12 * cx * cy)
            }),
            boundary: u.clone(),
            exact: Some(u),
            metrics: MetricSource::Analytic,
        })
    }

    /// u = x² + y² + z² on the sinusoidal volume, so −∇²u = −6.
    pub fn sinusoidal_3d(k: usize, m: usize, eps: f64) -> Result<Self> {
        let u: FieldFn = Arc::new(|x: &[f64; 3]| x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
        Ok(PoissonProblem {
            grid: StaggeredGrid::unit(&[m, m, m])?,
            mapping: make_mapping(MappingKind::Sinusoidal3d { eps })?,
            k,
            tensor: IDENTITY,
            forcing: Arc::new(|_: &[f64; 3]| -6.0),
            boundary: u.clone(),
            exact: Some(u),
            metrics: MetricSource::Analytic,
        })
    }
}

pub struct Assembled {
    pub a: SparseOperator,
    pub b: Vec<f64>,
    pub ops: CurvilinearOps,
}

/// A = −L̃ with boundary rows replaced by identity rows; b = f inside, g on the boundary.
pub fn assemble(problem: &PoissonProblem) -> Result<Assembled> {
    let ops = CurvilinearOps::new(problem.k, &problem.grid, &problem.mapping, problem.metrics)?;
    let lap = ops.laplacian(&problem.tensor)?;
    let mask = problem.grid.scalar_boundary_mask();
    let a = lap.scale(-1.0).with_identity_rows(&mask);
    let b = ops
        .metrics
        .scalar
        .physical
        .iter()
        .zip(&mask)
        .map(|(x, &bd)| if bd { (problem.boundary)(x) } else { (problem.forcing)(x) })
        .collect();
    Ok(Assembled { a, b, ops })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    #[default]
    Direct,
    Bicgstab,
}

fn relative_residual(a: &SparseOperator, x: &[f64], b: &[f64]) -> f64 {
    let ax = a.apply(x);
    let r: Vec<f64> = ax.iter().zip(b).map(|(p, q)| p - q).collect();
    let nb = norm2(b);
    if nb == 0.0 {
        norm2(&r)
    } else {
        norm2(&r) / nb
    }
}

fn direct(a: &SparseOperator, b: &[f64]) -> Result<Vec<f64>> {
    let n = a.rows();
    let trips: Vec<Triplet<usize, usize, f64>> = a.triplets().map(|(r, c, v)| Triplet::new(r, c, v)).collect();
    let fail = || MimeticError::Solver { method: "sparse LU", residual: f64::NAN };
    let mat = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &trips).map_err(|_| fail())?;
    let lu = mat.sp_lu().map_err(|_| fail())?;
    let solve = |rhs: &[f64]| -> Vec<f64> {
        let col = Col::from_fn(n, |i| rhs[i]);
        let x = lu.solve(&col);
        (0..n).map(|i| x[i]).collect()
    };
    let mut x = solve(b);
    // one step of iterative refinement is cheap with the factors in hand
    let ax = a.apply(&x);
    let r: Vec<f64> = b.iter().zip(&ax).map(|(p, q)| p - q).collect();
    let dx = solve(&r);
    x.iter_mut().zip(dx).for_each(|(x, d)| *x += d);
    Ok(x)
}

/// Jacobi-preconditioned BiCGStab.
pub fn bicgstab(a: &SparseOperator, b: &[f64], tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    let n = b.len();
    let dinv: Vec<f64> = a.diagonal().iter().map(|&d| if d != 0.0 { 1.0 / d } else { 1.0 }).collect();
    let precond = |v: &[f64]| -> Vec<f64> { v.iter().zip(&dinv).map(|(v, d)| v * d).collect() };
    let nb = norm2(b).max(f64::MIN_POSITIVE);
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let r0 = r.clone();
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    for _ in 0..max_iter {
        let rho_new = crate::sparse::dot(&r0, &r);
        if rho_new == 0.0 {
            break;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        let ph = precond(&p);
        v = a.apply(&ph);
        alpha = rho / crate::sparse::dot(&r0, &v);
        let s: Vec<f64> = r.iter().zip(&v).map(|(r, v)| r - alpha * v).collect();
        if norm2(&s) / nb < tol {
            x.iter_mut().zip(&ph).for_each(|(x, p)| *x += alpha * p);
            return Ok(x);
        }
        let sh = precond(&s);
        let t = a.apply(&sh);
        omega = crate::sparse::dot(&t, &s) / crate::sparse::dot(&t, &t);
        for i in 0..n {
            x[i] += alpha * ph[i] + omega * sh[i];
            r[i] = s[i] - omega * t[i];
        }
        if norm2(&r) / nb < tol {
            return Ok(x);
        }
    }
    Err(MimeticError::Solver { method: "bicgstab", residual: relative_residual(a, &x, b) })
}

/// Solve A·u = b; the relative residual must end below 1e−11.
pub fn solve(a: &SparseOperator, b: &[f64], kind: SolverKind) -> Result<Vec<f64>> {
    if a.rows() != a.cols() || b.len() != a.rows() {
        return Err(MimeticError::ShapeMismatch { expected: a.rows(), found: b.len(), what: "linear system" });
    }
    let (x, method) = match kind {
        SolverKind::Direct => (direct(a, b)?, "sparse LU"),
        SolverKind::Bicgstab => (bicgstab(a, b, 1e-13, 20 * b.len().max(100))?, "bicgstab"),
    };
    let residual = relative_residual(a, &x, b);
    if !(residual <= 1e-11) {
        return Err(MimeticError::Solver { method, residual });
    }
    Ok(x)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    /// Σ Q e² ΔξΔη
    #[default]
    Logical,
    /// Σ Q e² J ΔξΔη
    Physical,
}

/// (l2, max): l2 = sqrt(measure·Σ w e²); max over points where `interior` holds.
pub fn error_norms(
    computed: &[f64],
    exact: &[f64],
    weights: &DiagonalWeight,
    measure: f64,
    interior: &[bool],
) -> Result<(f64, f64)> {
    if computed.len() != exact.len() || computed.len() != weights.len() || interior.len() != computed.len() {
        return Err(MimeticError::ShapeMismatch { expected: exact.len(), found: computed.len(), what: "error fields" });
    }
    let mut sum = 0.0;
    let mut max = 0.0f64;
    for i in 0..computed.len() {
        let e = computed[i] - exact[i];
        sum += weights.values[i] * e * e;
        if interior[i] {
            max = max.max(e.abs());
        }
    }
    Ok(((measure * sum).sqrt(), max))
}

/// order_j = log(e_{j−1}/e_j) / log(m_j/m_{j−1})
pub fn observed_order(errors: &[f64], cells: &[usize]) -> Result<Vec<f64>> {
    if errors.len() != cells.len() || errors.len() < 2 {
        return Err(MimeticError::Config("observed order needs at least two matching entries".into()));
    }
    if let Some(e) = errors.iter().find(|e| !(**e > 0.0)) {
        return Err(MimeticError::Config(format!("nonpositive error value {e}")));
    }
    if cells.windows(2).any(|w| w[1] <= w[0]) {
        return Err(MimeticError::Config("cell counts must increase".into()));
    }
    Ok((1..errors.len())
        .map(|j| (errors[j - 1] / errors[j]).ln() / (cells[j] as f64 / cells[j - 1] as f64).ln())
        .collect())
}

#[derive(Clone, Debug)]
pub struct PoissonSolution {
    pub u: Vec<f64>,
    pub exact: Option<Vec<f64>>,
    pub l2: f64,
    pub max: f64,
    pub coords: Vec<[f64; 3]>,
}

pub fn run(problem: &PoissonProblem, solver: SolverKind, measure: Measure) -> Result<PoissonSolution> {
    let asm = assemble(problem)?;
    let u = solve(&asm.a, &asm.b, solver)?;
    let coords = asm.ops.metrics.scalar.physical.clone();
    let (exact, l2, max) = match &problem.exact {
        Some(ex) => {
            let e = asm.ops.sample(Location::Scalar, |x| ex(x));
            let w = match measure {
                Measure::Logical => asm.ops.nd.q.clone(),
                Measure::Physical => asm.ops.q_cc.clone(),
            };
            let interior: Vec<bool> = problem.grid.scalar_boundary_mask().iter().map(|b| !b).collect();
            let (l2, max) = error_norms(&u, &e, &w, problem.grid.cell_volume(), &interior)?;
            (Some(e), l2, max)
        }
        None => (None, f64::NAN, f64::NAN),
    };
    Ok(PoissonSolution { u, exact, l2, max, coords })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_system() {
        let a = SparseOperator::identity(5);
        let b = vec![1.0, -2.0, 3.0, 0.5, 7.0];
        assert_eq!(solve(&a, &b, SolverKind::Direct).unwrap(), b);
        let x = solve(&a, &b, SolverKind::Bicgstab).unwrap();
        assert!(x.iter().zip(&b).all(|(x, b)| (x - b).abs() < 1e-13));
    }

    #[test]
    fn order_examples() {
        let o = observed_order(&[1.1987e-5, 8.3285e-7], &[20, 40]).unwrap();
        assert!((o[0] - 3.8473).abs() < 5e-5);
        let o = observed_order(&[3.7483e-3, 3.4178e-4], &[16, 32]).unwrap();
        assert!((o[0] - 3.455).abs() < 1e-3);
        assert!(observed_order(&[1.0, 0.0], &[1, 2]).is_err());
        let o = observed_order(&[1.0, 1.0 / 16.0], &[10, 20]).unwrap();
        assert!((o[0] - 4.0).abs() < 1e-14);
    }

    #[test]
    fn constant_error_norms() {
        let w = DiagonalWeight::new(vec![1.0; 4], crate::sparse::Space::Plain(4)).unwrap();
        let (l2, max) = error_norms(&[1.5; 4], &[1.0; 4], &w, 0.25, &[true; 4]).unwrap();
        assert!((l2 - 0.5).abs() < 1e-15 && (max - 0.5).abs() < 1e-15);
    }
}
