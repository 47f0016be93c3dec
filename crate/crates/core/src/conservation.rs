use serde::Serialize;

use crate::error::{MimeticError, Result};
use crate::mimetic1d::DiagonalWeight;
use crate::mimeticnd::FieldLayout;
use crate::sparse::{dot, SparseOperator};

/// One diagnostics sample.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct ConservationReport {
    pub t: f64,
    pub energy: f64,
    pub energy_rate: f64,
    pub mass: f64,
    pub gauss_residual: f64,
}

fn check_len(found: usize, expected: usize, what: &'static str) -> Result<()> {
    if found != expected {
        return Err(MimeticError::ShapeMismatch { expected, found, what });
    }
    Ok(())
}

/// ⟨Dv, f⟩_Q + ⟨v, Gf⟩_P − ⟨Bv, f⟩, all with the cell measure.
#[allow(clippy::too_many_arguments)]
pub fn gauss_residual(
    d: &SparseOperator,
    g: &SparseOperator,
    p: &DiagonalWeight,
    q: &DiagonalWeight,
    b: &SparseOperator,
    v: &[f64],
    f: &[f64],
    measure: f64,
) -> Result<f64> {
    check_len(v.len(), d.cols(), "vector field")?;
    check_len(f.len(), g.cols(), "scalar field")?;
    check_len(b.cols(), v.len(), "boundary operator columns")?;
    let dv = d.apply(v);
    let gf = g.apply(f);
    let bv = b.apply(v);
    Ok(q.inner(&dv, f, measure) + p.inner(v, &gf, measure) - measure * dot(&bv, f))
}

/// E = Σ M_i (p_i² + ½|V_i|²) J_i · measure over interior cells. The kinetic
/// term averages squared face values of the two faces bounding each cell.
pub fn energy(
    layout: &FieldLayout,
    p: &[f64],
    v: &[f64],
    m: &DiagonalWeight,
    j: &[f64],
    measure: f64,
) -> Result<f64> {
    check_len(p.len(), layout.scalar_len(), "pressure")?;
    check_len(v.len(), layout.faces_len(), "velocity")?;
    check_len(m.len(), layout.scalar_len(), "weights")?;
    check_len(j.len(), layout.scalar_len(), "jacobian")?;
    let shape = layout.scalar_shape();
    let dim = layout.dim();
    let mut e = 0.0;
    for flat in 0..p.len() {
        let idx = FieldLayout::unflatten(&shape, flat);
        if idx.iter().zip(&shape).any(|(&i, &s)| i == 0 || i == s - 1) {
            continue;
        }
        let mut kin = 0.0;
        for a in 0..dim {
            let fshape = layout.face_shape(a);
            let off = layout.face_offset(a);
            let mut fi: Vec<usize> = idx.iter().map(|i| i - 1).collect();
            let lo = v[off + FieldLayout::flatten(&fshape, &fi)];
            fi[a] += 1;
            let hi = v[off + FieldLayout::flatten(&fshape, &fi)];
            kin += 0.5 * (lo * lo + hi * hi);
        }
        e += m.values[flat] * (p[flat] * p[flat] + 0.5 * kin) * j[flat];
    }
    Ok(e * measure)
}

/// Quadratic form conserved by the contravariant acoustic system:
/// measure · (Σ QJ p²/(2κ) + ρ₀/2 Σ (P/W) U²).
pub fn acoustic_energy(p: &[f64], u: &[f64], qj: &[f64], pw: &[f64], bulk: f64, rho0: f64, measure: f64) -> f64 {
    let pot: f64 = p.iter().zip(qj).map(|(p, w)| w * p * p).sum();
    let kin: f64 = u.iter().zip(pw).map(|(u, w)| w * u * u).sum();
    measure * (pot / (2.0 * bulk) + 0.5 * rho0 * kin)
}

/// dE/dt of `acoustic_energy` by the chain rule, given the state and its RHS.
#[allow(clippy::too_many_arguments)]
pub fn energy_rate(
    p: &[f64],
    u: &[f64],
    pdot: &[f64],
    udot: &[f64],
    qj: &[f64],
    pw: &[f64],
    bulk: f64,
    rho0: f64,
    measure: f64,
) -> f64 {
    let pot: f64 = p.iter().zip(pdot).zip(qj).map(|((p, d), w)| w * p * d).sum();
    let kin: f64 = u.iter().zip(udot).zip(pw).map(|((u, d), w)| w * u * d).sum();
    measure * (pot / bulk + rho0 * kin)
}

/// Flux form −measure · Σ Q·D(p̂U), with p̂ the pressure interpolated to faces.
pub fn flux_energy_rate(
    d: &SparseOperator,
    q: &DiagonalWeight,
    p_faces: &[f64],
    u: &[f64],
    measure: f64,
) -> f64 {
    let pu: Vec<f64> = p_faces.iter().zip(u).map(|(a, b)| a * b).collect();
    let dpu = d.apply(&pu);
    -measure * dot(&q.values, &dpu)
}

/// Σ M_i p_i · measure
pub fn mass(p: &[f64], m: &DiagonalWeight, measure: f64) -> Result<f64> {
    check_len(p.len(), m.len(), "pressure")?;
    Ok(measure * dot(&m.values, p))
}

/// Σ M_i ṗ_i · measure
pub fn mass_rate(pdot: &[f64], m: &DiagonalWeight, measure: f64) -> Result<f64> {
    mass(pdot, m, measure)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::StaggeredGrid;
    use crate::mimeticnd::MimeticNd;

    #[test]
    fn zero_fields_give_zero() {
        let grid = StaggeredGrid::unit(&[8, 8]).unwrap();
        let nd = MimeticNd::new(4, &grid).unwrap();
        let v = vec![0.0; nd.layout.faces_len()];
        let f: Vec<f64> = (0..nd.layout.scalar_len()).map(|i| (i as f64).sin()).collect();
        let r = gauss_residual(&nd.divergence, &nd.gradient, &nd.p, &nd.q, &nd.boundary, &v, &f, nd.measure()).unwrap();
        assert_eq!(r, 0.0);
    }

    #[test]
    fn unit_pressure_energy_is_domain_measure() {
        let grid = StaggeredGrid::unit(&[10, 7]).unwrap();
        let nd = MimeticNd::new(2, &grid).unwrap();
        let p = vec![1.0; nd.layout.scalar_len()];
        let v = vec![0.0; nd.layout.faces_len()];
        let j = vec![1.0; p.len()];
        let e = energy(&nd.layout, &p, &v, &nd.q, &j, nd.measure()).unwrap();
        assert!((e - 1.0).abs() < 1e-12);
        let p2: Vec<f64> = p.iter().map(|x| 2.0 * x).collect();
        let e2 = energy(&nd.layout, &p2, &v, &nd.q, &j, nd.measure()).unwrap();
        assert!((e2 - 4.0 * e).abs() < 1e-12);
    }

    #[test]
    fn mass_is_linear() {
        let grid = StaggeredGrid::unit(&[9, 9]).unwrap();
        let nd = MimeticNd::new(4, &grid).unwrap();
        let c = 2.5;
        let p = vec![c; nd.layout.scalar_len()];
        let total: f64 = nd.q.values.iter().sum::<f64>() * nd.measure();
        assert!((mass(&p, &nd.q, nd.measure()).unwrap() - c * total).abs() < 1e-13);
        assert!(mass(&[1.0], &nd.q, 1.0).is_err());
    }
}
