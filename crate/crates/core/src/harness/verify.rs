use std::f64::consts::PI;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::conservation::gauss_residual;
use crate::curvilinear::{CurvilinearOps, IDENTITY};
use crate::error::Result;
use crate::grid::{make_mapping, MappingKind, MetricSource, StaggeredGrid};
use crate::harness::gauss::{gauss_study, mapping_label, Regime};
use crate::harness::output::sci;
use crate::harness::{run_convergence, Experiment, ExperimentConfig};
use crate::mimetic1d::{
    build_divergence, build_gradient, build_interpolators, face_points, scalar_points, Operators1d,
};
use crate::mimeticnd::MimeticNd;
use crate::sparse::SparseOperator;
use crate::wave::{InitialCondition, WaveBoundary, WaveConfig, WaveSolver};

pub const SEED: u64 = 20240521;

/// Reference errors: annulus Poisson L2 at m = 20..160, wave p/u/v at m = 64.
pub const ANNULUS_L2: [f64; 4] = [4.9121e-06, 2.6965e-07, 1.5696e-08, 9.4721e-10];
pub const WAVE_M64: [f64; 3] = [2.3358e-05, 1.2072e-05, 7.3432e-06];

#[derive(Clone, Debug)]
pub struct Criterion {
    pub id: usize,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl Criterion {
    pub fn line(&self) -> String {
        format!(
            "[{}] {} {} ({:.1}s): {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.seconds,
            self.detail
        )
    }
}

fn timed(id: usize, title: &'static str, f: impl FnOnce() -> Result<(bool, String)>) -> Criterion {
    let t0 = Instant::now();
    let (passed, detail) = match f() {
        Ok(r) => r,
        Err(e) => (false, format!("error: {e}")),
    };
    Criterion { id, title, passed, detail, seconds: t0.elapsed().as_secs_f64() }
}

fn fmt_orders(o: &[f64]) -> String {
    format!("[{}]", o.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(", "))
}

fn bits_eq(a: f64, b: f64) -> bool {
    a.to_bits() == b.to_bits()
}

/// Fourth-order stencil entries equal the printed fractions bit for bit.
pub fn operator_entries() -> Criterion {
    timed(1, "fourth-order D and G entries", || {
        let d1 = [-11.0 / 12.0, 17.0 / 24.0, 3.0 / 8.0, -5.0 / 24.0, 1.0 / 24.0];
        let g0 = [-352.0 / 105.0, 35.0 / 8.0, -35.0 / 24.0, 21.0 / 40.0, -5.0 / 56.0];
        let g1 = [16.0 / 105.0, -31.0 / 24.0, 29.0 / 24.0, -3.0 / 40.0, 1.0 / 168.0];
        let c = [1.0 / 24.0, -9.0 / 8.0, 9.0 / 8.0, -1.0 / 24.0];
        let mut checked = 0;
        let mut bad = Vec::new();
        for &m in &[8usize, 12, 20, 64] {
            for &dx in &[1.0, 1.0 / m as f64] {
                let inv = 1.0 / dx;
                let d = build_divergence(4, m, dx)?;
                let g = build_gradient(4, m, dx)?;
                let mut check = |what: &str, got: f64, want: f64| {
                    checked += 1;
                    if !bits_eq(got, want) {
                        bad.push(format!("{what} m={m}: {got:e} vs {want:e}"));
                    }
                };
                for j in 0..5 {
                    check("D[1]", d.get(1, j), d1[j] * inv);
                    check("D[m]", d.get(m, m - j), -(d1[j] * inv));
                    check("G[0]", g.get(0, j), g0[j] * inv);
                    check("G[1]", g.get(1, j), g1[j] * inv);
                    check("G[m]", g.get(m, m + 1 - j), -(g0[j] * inv));
                    check("G[m-1]", g.get(m - 1, m + 1 - j), -(g1[j] * inv));
                }
                for s in 0..4 {
                    check("D[2]", d.get(2, s), c[s] * inv);
                    check("G[2]", g.get(2, 1 + s), c[s] * inv);
                }
            }
        }
        let ok = bad.is_empty();
        Ok((ok, if ok { format!("{checked} entries bitwise equal") } else { bad.join("; ") }))
    })
}

/// Logical Gauss identity for random pairs on rectangular grids.
pub fn logical_gauss() -> Criterion {
    timed(2, "logical discrete Gauss identity", || {
        let mut worst = 0.0f64;
        let mut cases = 0;
        for k in [2usize, 4] {
            for m in [8usize, 16, 32] {
                for n in [8usize, 16, 32] {
                    let grid = StaggeredGrid::unit(&[m, n])?;
                    let nd = MimeticNd::new(k, &grid)?;
                    let h = grid.cell_volume();
                    let mut rng = ChaCha8Rng::seed_from_u64(SEED + (100 * k + 10 * m + n) as u64);
                    for _ in 0..100 {
                        let v: Vec<f64> = (0..nd.layout.faces_len()).map(|_| rng.random_range(-1.0..1.0)).collect();
                        let f: Vec<f64> = (0..nd.layout.scalar_len()).map(|_| rng.random_range(-1.0..1.0)).collect();
                        let r = gauss_residual(&nd.divergence, &nd.gradient, &nd.p, &nd.q, &nd.boundary, &v, &f, h)?;
                        let scale = nd.p.inner(&v, &v, h).sqrt() * nd.q.inner(&f, &f, h).sqrt();
                        worst = worst.max(r.abs() / scale);
                        cases += 1;
                    }
                }
            }
        }
        Ok((worst <= 1e-12, format!("{cases} pairs, max |residual|/(‖v‖‖f‖) = {}", sci(worst))))
    })
}

/// Curvilinear Gauss identity: machine or truncation regime per map.
pub fn curvilinear_gauss() -> Criterion {
    timed(3, "curvilinear discrete Gauss identity", || {
        let maps = [MappingKind::SemiAnnulus { a: 2.0 * PI, b: 3.0 * PI }, MappingKind::Sinusoidal2d { eps: 0.06 }];
        let mut ok = true;
        let mut parts = Vec::new();
        for map in maps {
            for k in [2usize, 4] {
                let cells: &[usize] = if k == 2 { &[32, 64, 128] } else { &[64, 128, 256, 512] };
                let st = gauss_study(map, k, cells, 100, SEED)?;
                ok &= st.passed;
                parts.push(match st.regime {
                    Regime::Machine => format!("{} k={k}: machine", mapping_label(&map)),
                    Regime::Truncation => format!(
                        "{} k={k}: truncation, orders {}",
                        mapping_label(&map),
                        fmt_orders(&st.orders)
                    ),
                });
            }
        }
        Ok((ok, parts.join("; ")))
    })
}

/// Semi-annulus Poisson sweep against the reference L2 errors.
pub fn annulus_poisson() -> Criterion {
    timed(4, "semi-annulus Poisson", || {
        let cfg = ExperimentConfig { cells: vec![20, 40, 80, 160], ..ExperimentConfig::for_experiment(Experiment::PoissonAnnulus) };
        let t = run_convergence(&cfg)?;
        let e = t.errors(0);
        let o = t.orders(0);
        let ratios: Vec<f64> = e.iter().zip(ANNULUS_L2).map(|(a, b)| a / b).collect();
        let ok = o.iter().all(|&x| x >= 3.8) && ratios.iter().all(|&r| (0.5..=2.0).contains(&r));
        Ok((
            ok,
            format!(
                "L2 = [{}], orders {}, ratio to reference {}",
                e.iter().map(|x| sci(*x)).collect::<Vec<_>>().join(", "),
                fmt_orders(&o),
                fmt_orders(&ratios)
            ),
        ))
    })
}

/// Anisotropic Poisson on the sinusoidal map.
pub fn sinusoidal_poisson() -> Criterion {
    timed(5, "anisotropic sinusoidal Poisson", || {
        let cfg = ExperimentConfig { cells: vec![20, 40, 80, 160], ..ExperimentConfig::for_experiment(Experiment::PoissonSinusoidal) };
        let t = run_convergence(&cfg)?;
        let o = t.orders(0);
        let ok = o.iter().all(|&x| x >= 3.7);
        let e = t.errors(0);
        Ok((
            ok,
            format!("L2 = [{}], orders {}", e.iter().map(|x| sci(*x)).collect::<Vec<_>>().join(", "), fmt_orders(&o)),
        ))
    })
}

/// Poisson on the 3D sinusoidal volume.
pub fn poisson3d() -> Criterion {
    timed(6, "3D sinusoidal Poisson", || {
        let cfg = ExperimentConfig { cells: vec![8, 16, 32], ..ExperimentConfig::for_experiment(Experiment::Poisson3d) };
        let t = run_convergence(&cfg)?;
        let o = t.orders(0);
        let e = t.errors(0);
        Ok((
            o.iter().all(|&x| x >= 3.5),
            format!("L2 = [{}], orders {}", e.iter().map(|x| sci(*x)).collect::<Vec<_>>().join(", "), fmt_orders(&o)),
        ))
    })
}

/// Acoustic wave on the semi-annulus.
pub fn annulus_wave() -> Criterion {
    timed(7, "semi-annulus acoustic wave", || {
        let cfg = ExperimentConfig { cells: vec![16, 32, 64, 128], ..ExperimentConfig::for_experiment(Experiment::WaveAnnulus) };
        let t = run_convergence(&cfg)?;
        let mut ok = true;
        let mut parts = Vec::new();
        for (q, name) in ["p", "u", "v"].iter().enumerate() {
            let o = t.orders(q);
            let e = t.errors(q);
            let ratio = e[2] / WAVE_M64[q];
            ok &= o.iter().all(|&x| x >= 3.0) && (1.0 / 3.0..=3.0).contains(&ratio);
            parts.push(format!(
                "{name}: [{}] orders {} m=64 ratio {ratio:.3}",
                e.iter().map(|x| sci(*x)).collect::<Vec<_>>().join(", "),
                fmt_orders(&o)
            ));
        }
        Ok((ok, parts.join("; ")))
    })
}

/// Closed-wall conservation: semi-discrete rates and fully discrete drift.
pub fn conservation() -> Criterion {
    timed(8, "closed-wall energy and mass conservation", || {
        let dts = [4e-3, 2e-3, 1e-3];
        let mut e_drift = Vec::new();
        let mut m_drift = Vec::new();
        let (mut worst_e, mut worst_m) = (0.0f64, 0.0f64);
        for dt in dts {
            let cfg = WaveConfig {
                cells: 64,
                mapping: MappingKind::SemiAnnulus { a: PI, b: 2.0 * PI },
                dt,
                bc: WaveBoundary::ClosedWall,
                initial: InitialCondition::Pulse { center: [0.0, 1.5 * PI], radius: 0.3 },
                stride: 10,
                ..Default::default()
            };
            let r = WaveSolver::new(&cfg)?.run()?;
            let (first, last) = (r.reports.first().unwrap(), r.reports.last().unwrap());
            e_drift.push(((last.energy - first.energy) / first.energy).abs());
            m_drift.push(((last.mass - first.mass) / first.mass).abs());
            worst_e = worst_e.max(r.max_energy_rate);
            worst_m = worst_m.max(r.max_mass_rate);
        }
        let e_orders = observed_order_dt(&e_drift, &dts);
        // RK4 keeps linear invariants exactly, so mass drift sits at rounding level
        let mass_ok = m_drift.iter().all(|&d| d <= 1e-13)
            || observed_order_dt(&m_drift, &dts).iter().all(|&o| o >= 3.8);
        let ok = worst_e <= 1e-10 && worst_m <= 1e-11 && e_orders.iter().all(|&o| o >= 3.8) && mass_ok;
        Ok((
            ok,
            format!(
                "max |dE/dt|/E = {}, max |dM/dt|/‖p‖ = {}, energy drift [{}] orders {}, mass drift [{}]",
                sci(worst_e),
                sci(worst_m),
                e_drift.iter().map(|x| sci(*x)).collect::<Vec<_>>().join(", "),
                fmt_orders(&e_orders),
                m_drift.iter().map(|x| sci(*x)).collect::<Vec<_>>().join(", ")
            ),
        ))
    })
}

fn observed_order_dt(drift: &[f64], dts: &[f64]) -> Vec<f64> {
    drift
        .windows(2)
        .zip(dts.windows(2))
        .map(|(e, d)| (e[0] / e[1]).ln() / (d[0] / d[1]).ln())
        .collect()
}

fn max_diff(a: &SparseOperator, b: &SparseOperator) -> f64 {
    a.sub(b).max_abs()
}

/// Polynomial exactness, nullspaces, weight positivity, identity degeneracy.
pub fn properties() -> Criterion {
    timed(9, "operator property suite", || {
        let mut worst_poly = 0.0f64;
        let mut worst_null = 0.0f64;
        let mut min_weight = f64::INFINITY;
        for k in [2usize, 4] {
            for m in [8usize, 16, 32] {
                let dx = 1.0 / m as f64;
                let ops = Operators1d::new(k, m, dx)?;
                let (xs, xf) = (scalar_points(m), face_points(m));
                for j in 0..=k as i32 {
                    let pow = |x: f64, p: i32| if p < 0 { 0.0 } else { x.powi(p) };
                    let df = ops.d.apply(&xf.iter().map(|&x| pow(x, j)).collect::<Vec<_>>());
                    for i in 1..=m {
                        worst_poly = worst_poly.max((df[i] - j as f64 * pow(xs[i], j - 1)).abs());
                    }
                    let gf = ops.g.apply(&xs.iter().map(|&x| pow(x, j)).collect::<Vec<_>>());
                    for (i, &x) in xf.iter().enumerate() {
                        worst_poly = worst_poly.max((gf[i] - j as f64 * pow(x, j - 1)).abs());
                    }
                }
                let (c2f, f2c) = build_interpolators(k, m)?;
                for j in 0..k as i32 {
                    let a = c2f.apply(&xs.iter().map(|&x| x.powi(j)).collect::<Vec<_>>());
                    let b = f2c.apply(&xf.iter().map(|&x| x.powi(j)).collect::<Vec<_>>());
                    worst_poly = worst_poly.max(a.iter().zip(&xf).map(|(a, x)| (a - x.powi(j)).abs()).fold(0.0, f64::max));
                    worst_poly = worst_poly.max(b.iter().zip(&xs).map(|(b, x)| (b - x.powi(j)).abs()).fold(0.0, f64::max));
                }
                worst_null = worst_null.max(ops.d.apply(&vec![1.0; m + 1]).iter().fold(0.0, |a, b| a.max(b.abs())));
                worst_null = worst_null.max(ops.g.apply(&vec![1.0; m + 2]).iter().fold(0.0, |a, b| a.max(b.abs())));
                min_weight = ops.p.values.iter().chain(&ops.q.values).fold(min_weight, |a, &b| a.min(b));
            }
        }
        let mut worst_id = 0.0f64;
        for (k, cells) in [(2usize, vec![9usize, 7]), (4, vec![12, 10]), (4, vec![8, 9, 10])] {
            let grid = StaggeredGrid::unit(&cells)?;
            let map = make_mapping(MappingKind::Identity { dim: cells.len() })?;
            let c = CurvilinearOps::new(k, &grid, &map, MetricSource::Analytic)?;
            let nd = &c.nd;
            worst_id = worst_id
                .max(max_diff(&c.div, &nd.divergence))
                .max(max_diff(&c.grad, &nd.gradient))
                .max(max_diff(&c.laplacian(&IDENTITY)?, &nd.laplacian()))
                .max(max_diff(&c.jops.j_d, &SparseOperator::identity(grid.scalar_len())))
                .max(max_diff(&c.jops.j_g, &SparseOperator::identity(nd.layout.faces_len())))
                .max(max_diff(&c.jops.flux, &SparseOperator::identity(nd.layout.faces_len())));
            for (a, b) in c.q_cc.values.iter().zip(&nd.q.values).chain(c.p_cc.values.iter().zip(&nd.p.values)) {
                worst_id = worst_id.max((a - b).abs());
            }
        }
        let ok = worst_poly <= 1e-10 && worst_null <= 1e-11 && min_weight > 0.0 && worst_id <= 1e-13;
        Ok((
            ok,
            format!(
                "polynomial error {}, nullspace {}, min weight {:.4}, identity-map deviation {}",
                sci(worst_poly),
                sci(worst_null),
                min_weight,
                sci(worst_id)
            ),
        ))
    })
}

pub const CHECKS: [fn() -> Criterion; 9] = [
    operator_entries,
    logical_gauss,
    curvilinear_gauss,
    annulus_poisson,
    sinusoidal_poisson,
    poisson3d,
    annulus_wave,
    conservation,
    properties,
];

/// Runs the selected checks (all when `only` is empty), in order.
pub fn run_selected(only: &[usize]) -> Vec<Criterion> {
    CHECKS
        .iter()
        .enumerate()
        .filter(|(i, _)| only.is_empty() || only.contains(&(i + 1)))
        .map(|(_, c)| c())
        .collect()
}
