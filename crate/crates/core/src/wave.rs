use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::conservation::{acoustic_energy, energy_rate, gauss_residual, ConservationReport};
use crate::curvilinear::{contravariant_face_weights, CurvilinearOps, IDENTITY};
use crate::error::{MimeticError, Result};
use crate::grid::{make_mapping, Location, MappingKind, MetricSource, StaggeredGrid};
use crate::mimeticnd::face_to_face;
use crate::sparse::{dot, SparseOperator};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WaveBoundary {
    /// Boundary pressure taken from the exact solution at every stage.
    #[default]
    DirichletExact,
    /// Zero normal velocity on every boundary face.
    ClosedWall,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialCondition {
    /// p = sin x sin y, V = 0
    Exact,
    /// Smooth compactly supported bump exp(1 − 1/(1 − d²)), d = |x − c|/radius.
    Pulse { center: [f64; 2], radius: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WaveConfig {
    pub k: usize,
    pub cells: usize,
    pub mapping: MappingKind,
    pub bulk_modulus: f64,
    pub rho0: f64,
    pub dt: f64,
    pub t_end: f64,
    pub bc: WaveBoundary,
    pub initial: InitialCondition,
    /// Diagnostics every `stride` steps.
    pub stride: usize,
    pub cfl: f64,
    /// Stencil width of the cross-face interpolation used to recover
    /// Cartesian velocities for error measurement.
    pub recovery_points: usize,
}

impl Default for WaveConfig {
    fn default() -> Self {
        WaveConfig {
            k: 4,
            cells: 32,
            mapping: MappingKind::SemiAnnulus { a: PI, b: 2.0 * PI },
            bulk_modulus: 0.5,
            rho0: 1.0,
            dt: 1e-3,
            t_end: 1.0,
            bc: WaveBoundary::DirichletExact,
            initial: InitialCondition::Exact,
            stride: 50,
            cfl: 0.5,
            recovery_points: 6,
        }
    }
}

/// Pressure on the scalar space, contravariant fluxes on the stacked faces.
#[derive(Clone, Debug, PartialEq)]
pub struct WaveState {
    pub p: Vec<f64>,
    pub u: Vec<f64>,
    pub t: f64,
    pub step: usize,
}

/// Classical four-stage Runge–Kutta step for (ṗ, U̇) = rhs(t, p, U).
pub fn rk4_step(
    state: &WaveState,
    dt: f64,
    rhs: impl Fn(f64, &[f64], &[f64]) -> (Vec<f64>, Vec<f64>),
) -> Result<WaveState> {
    let axpy = |x: &[f64], a: f64, y: &[f64]| -> Vec<f64> { x.iter().zip(y).map(|(x, y)| x + a * y).collect() };
    let (p, u, t) = (&state.p, &state.u, state.t);
    let (k1p, k1u) = rhs(t, p, u);
    let (k2p, k2u) = rhs(t + 0.5 * dt, &axpy(p, 0.5 * dt, &k1p), &axpy(u, 0.5 * dt, &k1u));
    let (k3p, k3u) = rhs(t + 0.5 * dt, &axpy(p, 0.5 * dt, &k2p), &axpy(u, 0.5 * dt, &k2u));
    let (k4p, k4u) = rhs(t + dt, &axpy(p, dt, &k3p), &axpy(u, dt, &k3u));
    let c = dt / 6.0;
    let p: Vec<f64> = (0..p.len()).map(|i| p[i] + c * (k1p[i] + 2.0 * k2p[i] + 2.0 * k3p[i] + k4p[i])).collect();
    let u: Vec<f64> = (0..u.len()).map(|i| u[i] + c * (k1u[i] + 2.0 * k2u[i] + 2.0 * k3u[i] + k4u[i])).collect();
    let step = state.step + 1;
    if p.iter().chain(&u).any(|v| !v.is_finite()) {
        return Err(MimeticError::Instability { step });
    }
    Ok(WaveState { p, u, t: t + dt, step })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WaveErrors {
    pub p: f64,
    pub u: f64,
    pub v: f64,
}

#[derive(Clone, Debug)]
pub struct SimulationResult {
    pub state: WaveState,
    pub reports: Vec<ConservationReport>,
    pub errors: Option<WaveErrors>,
    /// max over diagnostic steps of |dE/dt| / E
    pub max_energy_rate: f64,
    /// max over diagnostic steps of |d(mass)/dt| / ‖p‖
    pub max_mass_rate: f64,
    pub warnings: Vec<String>,
}

/// Semi-discrete acoustic system ṗ = −κ J⁻¹ D U, U̇ = −W G p / ρ₀.
pub struct WaveSolver {
    pub config: WaveConfig,
    pub ops: CurvilinearOps,
    pub w: SparseOperator,
    inv_j: Vec<f64>,
    scalar_bd: Vec<bool>,
    face_bd: Vec<bool>,
    /// Q·J on the scalar space
    pub qj: Vec<f64>,
    /// P/diag(W) on the stacked faces
    pub pw: Vec<f64>,
    omega: f64,
}

impl WaveSolver {
    pub fn new(config: &WaveConfig) -> Result<Self> {
        if !(config.dt > 0.0) || !(config.t_end >= 0.0) {
            return Err(MimeticError::Config(format!("dt = {} and t_end = {} must be positive", config.dt, config.t_end)));
        }
        if !(config.bulk_modulus > 0.0 && config.rho0 > 0.0) {
            return Err(MimeticError::Config("bulk modulus and density must be positive".into()));
        }
        if config.stride == 0 {
            return Err(MimeticError::Config("diagnostic stride must be at least 1".into()));
        }
        let mapping = make_mapping(config.mapping)?;
        if mapping.dim() != 2 {
            return Err(MimeticError::Config("wave runs are two-dimensional".into()));
        }
        let grid = StaggeredGrid::unit(&[config.cells, config.cells])?;
        let ops = CurvilinearOps::new(config.k, &grid, &mapping, MetricSource::Analytic)?;
        let w = ops.metric_tensor(&IDENTITY);
        let inv_j = ops.metrics.scalar.det.iter().map(|j| 1.0 / j).collect();
        let scalar_bd = grid.scalar_boundary_mask();
        let face_bd = (0..2).flat_map(|a| grid.face_boundary_mask(a)).collect();
        let qj = ops.q_cc.values.clone();
        let pw = contravariant_face_weights(&ops.nd.p, &w)?.values;
        let omega = (2.0 * config.bulk_modulus / config.rho0).sqrt();
        Ok(WaveSolver { config: config.clone(), ops, w, inv_j, scalar_bd, face_bd, qj, pw, omega })
    }

    /// Exact pressure sin x sin y cos ωt, ω = √(2κ/ρ₀).
    pub fn exact_pressure(&self, x: &[f64; 3], t: f64) -> f64 {
        x[0].sin() * x[1].sin() * (self.omega * t).cos()
    }

    /// Exact Cartesian velocity component `comp`.
    pub fn exact_velocity(&self, comp: usize, x: &[f64; 3], t: f64) -> f64 {
        let amp = -self.omega / (2.0 * self.config.bulk_modulus) * (self.omega * t).sin();
        if comp == 0 {
            amp * x[0].cos() * x[1].sin()
        } else {
            amp * x[0].sin() * x[1].cos()
        }
    }

    pub fn initial_state(&self) -> WaveState {
        let p = match self.config.initial {
            InitialCondition::Exact => self.ops.sample(Location::Scalar, |x| self.exact_pressure(x, 0.0)),
            InitialCondition::Pulse { center, radius } => self.ops.sample(Location::Scalar, |x| {
                let d = (x[0] - center[0]).hypot(x[1] - center[1]) / radius;
                if d < 1.0 {
                    (1.0 - 1.0 / (1.0 - d * d)).exp()
                } else {
                    0.0
                }
            }),
        };
        WaveState { p, u: vec![0.0; self.ops.nd.layout.faces_len()], t: 0.0, step: 0 }
    }

    fn with_boundary(&self, p: &[f64], t: f64) -> Vec<f64> {
        let mut p = p.to_vec();
        let xs = &self.ops.metrics.scalar.physical;
        for i in 0..p.len() {
            if self.scalar_bd[i] {
                p[i] = self.exact_pressure(&xs[i], t);
            }
        }
        p
    }

    pub fn acoustic_rhs(&self, t: f64, p: &[f64], u: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let nd = &self.ops.nd;
        let kappa = self.config.bulk_modulus;
        let du = nd.divergence.apply(u);
        let mut pdot: Vec<f64> = du.iter().zip(&self.inv_j).map(|(d, ij)| -kappa * d * ij).collect();
        let gp = match self.config.bc {
            WaveBoundary::DirichletExact => nd.gradient.apply(&self.with_boundary(p, t)),
            WaveBoundary::ClosedWall => nd.gradient.apply(p),
        };
        let mut udot = self.w.apply(&gp);
        udot.iter_mut().for_each(|v| *v *= -1.0 / self.config.rho0);
        for (i, bd) in self.scalar_bd.iter().enumerate() {
            if *bd {
                pdot[i] = 0.0;
            }
        }
        if self.config.bc == WaveBoundary::ClosedWall {
            for (i, bd) in self.face_bd.iter().enumerate() {
                if *bd {
                    udot[i] = 0.0;
                }
            }
        }
        (pdot, udot)
    }

    pub fn step(&self, state: &WaveState) -> Result<WaveState> {
        rk4_step(state, self.config.dt, |t, p, u| self.acoustic_rhs(t, p, u))
    }

    pub fn report(&self, state: &WaveState) -> (ConservationReport, f64) {
        let nd = &self.ops.nd;
        let h2 = nd.measure();
        let (kappa, rho0) = (self.config.bulk_modulus, self.config.rho0);
        let (pdot, udot) = self.acoustic_rhs(state.t, &state.p, &state.u);
        let energy = acoustic_energy(&state.p, &state.u, &self.qj, &self.pw, kappa, rho0, h2);
        let rate = energy_rate(&state.p, &state.u, &pdot, &udot, &self.qj, &self.pw, kappa, rho0, h2);
        let mass = h2 * dot(&self.qj, &state.p);
        let mass_rate = h2 * dot(&self.qj, &pdot);
        let gauss = gauss_residual(&nd.divergence, &nd.gradient, &nd.p, &nd.q, &nd.boundary, &state.u, &state.p, h2)
            .unwrap_or(f64::NAN);
        (ConservationReport { t: state.t, energy, energy_rate: rate, mass, gauss_residual: gauss }, mass_rate)
    }

    /// Cartesian velocity V = T·U/J, component a on face set a.
    pub fn cartesian_velocity(&self, u: &[f64]) -> Vec<f64> {
        let nd = &self.ops.nd;
        let cells = &nd.grid.cells;
        let parts = nd.split_faces(u);
        let mut out = Vec::with_capacity(u.len());
        for a in 0..2 {
            let lm = &self.ops.metrics.faces[a];
            let on_a: Vec<Vec<f64>> = (0..2)
                .map(|c| {
                    if c == a {
                        parts[c].to_vec()
                    } else {
                        face_to_face(cells, c, a, self.config.recovery_points).apply(parts[c])
                    }
                })
                .collect();
            for i in 0..lm.len() {
                let t = &lm.jacobian[i];
                out.push((t[a][0] * on_a[0][i] + t[a][1] * on_a[1][i]) / lm.det[i]);
            }
        }
        out
    }

    /// Weighted L2 errors of p, u, v against the exact solution.
    pub fn errors(&self, state: &WaveState) -> WaveErrors {
        let nd = &self.ops.nd;
        let h2 = nd.measure();
        let pe = self.ops.sample(Location::Scalar, |x| self.exact_pressure(x, state.t));
        let ep: Vec<f64> = state.p.iter().zip(&pe).map(|(a, b)| a - b).collect();
        let v = self.cartesian_velocity(&state.u);
        let vparts = nd.split_faces(&v);
        let mut ev = [0.0; 2];
        for a in 0..2 {
            let ex = self.ops.sample(Location::Face(a), |x| self.exact_velocity(a, x, state.t));
            let e: Vec<f64> = vparts[a].iter().zip(&ex).map(|(a, b)| a - b).collect();
            ev[a] = nd.p_axes[a].inner(&e, &e, h2).sqrt();
        }
        WaveErrors { p: nd.q.inner(&ep, &ep, h2).sqrt(), u: ev[0], v: ev[1] }
    }

    /// Smallest logical cell edge mapped to physical length.
    pub fn min_cell_size(&self) -> f64 {
        let h = &self.ops.nd.grid.spacing;
        self.ops
            .metrics
            .scalar
            .jacobian
            .iter()
            .map(|t| (0..2).map(|c| h[c] * t[0][c].hypot(t[1][c])).fold(f64::INFINITY, f64::min))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn run(&self) -> Result<SimulationResult> {
        let mut warnings = Vec::new();
        let speed = (self.config.bulk_modulus / self.config.rho0).sqrt();
        let limit = self.config.cfl * self.min_cell_size() / speed;
        if self.config.dt > limit {
            warnings.push(format!("dt = {:.3e} exceeds the CFL guard {:.3e}", self.config.dt, limit));
        }
        let steps = (self.config.t_end / self.config.dt).round() as usize;
        let mut state = self.initial_state();
        let mut reports = Vec::new();
        let (mut max_e, mut max_m) = (0.0f64, 0.0f64);
        let mut sample = |s: &WaveState, reports: &mut Vec<ConservationReport>| {
            let (r, mrate) = self.report(s);
            let pnorm = self.ops.nd.measure().sqrt() * s.p.iter().zip(&self.qj).map(|(p, w)| w * p * p).sum::<f64>().sqrt();
            if r.energy > 0.0 {
                max_e = max_e.max(r.energy_rate.abs() / r.energy);
            }
            if pnorm > 0.0 {
                max_m = max_m.max(mrate.abs() / pnorm);
            }
            reports.push(r);
        };
        sample(&state, &mut reports);
        for s in 0..steps {
            state = self.step(&state)?;
            if (s + 1) % self.config.stride == 0 || s + 1 == steps {
                sample(&state, &mut reports);
            }
        }
        let errors = match (self.config.bc, self.config.initial) {
            (WaveBoundary::DirichletExact, InitialCondition::Exact) => {
                state.p = self.with_boundary(&state.p, state.t);
                Some(self.errors(&state))
            }
            _ => None,
        };
        Ok(SimulationResult { state, reports, errors, max_energy_rate: max_e, max_mass_rate: max_m, warnings })
    }
}

pub fn run_simulation(config: &WaveConfig) -> Result<SimulationResult> {
    WaveSolver::new(config)?.run()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rk4_linear_growth_factor() {
        let s = WaveState { p: vec![1.0], u: vec![], t: 0.0, step: 0 };
        let next = rk4_step(&s, 0.1, |_, p, _| (vec![-p[0]], vec![])).unwrap();
        assert!((next.p[0] - 0.9048375).abs() < 1e-12);
        assert_eq!(next.step, 1);
    }

    #[test]
    fn nonfinite_aborts() {
        let s = WaveState { p: vec![1.0], u: vec![], t: 0.0, step: 4 };
        let r = rk4_step(&s, 1.0, |_, _, _| (vec![f64::NAN], vec![]));
        assert!(matches!(r, Err(MimeticError::Instability { step: 5 })));
    }

    #[test]
    fn zero_state_stays_zero() {
        let cfg = WaveConfig { cells: 8, bc: WaveBoundary::ClosedWall, ..Default::default() };
        let solver = WaveSolver::new(&cfg).unwrap();
        let mut s = solver.initial_state();
        s.p.iter_mut().for_each(|v| *v = 0.0);
        let n = solver.step(&s).unwrap();
        assert!(n.p.iter().chain(&n.u).all(|&v| v == 0.0));
    }

    #[test]
    fn constant_pressure_is_steady_with_walls() {
        let cfg = WaveConfig { cells: 8, bc: WaveBoundary::ClosedWall, ..Default::default() };
        let solver = WaveSolver::new(&cfg).unwrap();
        let p = vec![2.0; solver.ops.nd.layout.scalar_len()];
        let u = vec![0.0; solver.ops.nd.layout.faces_len()];
        let (pdot, udot) = solver.acoustic_rhs(0.0, &p, &u);
        assert!(pdot.iter().all(|v| v.abs() < 1e-13));
        assert!(udot.iter().all(|v| v.abs() < 1e-11));
    }
}
