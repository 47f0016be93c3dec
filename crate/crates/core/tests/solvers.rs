use std::f64::consts::PI;
use std::sync::Arc;

use mimetic_core::curvilinear::IDENTITY;
use mimetic_core::grid::{make_mapping, MappingKind, MetricSource, StaggeredGrid};
use mimetic_core::poisson::{assemble, run, solve, Measure, PoissonProblem, SolverKind};
use mimetic_core::wave::{InitialCondition, WaveBoundary, WaveConfig, WaveSolver};
use mimetic_core::MimeticError;

#[test]
fn quadratic_solved_exactly_on_unit_square() {
    let problem = PoissonProblem {
        grid: StaggeredGrid::unit(&[10, 12]).unwrap(),
        mapping: make_mapping(MappingKind::Identity { dim: 2 }).unwrap(),
        k: 4,
        tensor: IDENTITY,
        forcing: Arc::new(|_| -4.0),
        boundary: Arc::new(|x| x[0] * x[0] + x[1] * x[1]),
        exact: Some(Arc::new(|x| x[0] * x[0] + x[1] * x[1])),
        metrics: MetricSource::Analytic,
    };
    let sol = run(&problem, SolverKind::Direct, Measure::Logical).unwrap();
    assert!(sol.max < 1e-11, "{}", sol.max);
}

#[test]
fn annulus_coarse_error_near_reference() {
    // reference L2 error at m = 20 is 4.9121E-06
    let sol = run(&PoissonProblem::semi_annulus(4, 20, 2.0 * PI, 3.0 * PI).unwrap(), SolverKind::Direct, Measure::Logical)
        .unwrap();
    let ratio = sol.l2 / 4.9121e-6;
    assert!((0.5..2.0).contains(&ratio), "{}", sol.l2);
}

#[test]
fn direct_and_iterative_agree() {
    let asm = assemble(&PoissonProblem::sinusoidal(4, 16, 0.06, 1.0, 10.0, PI / 4.0).unwrap()).unwrap();
    let x1 = solve(&asm.a, &asm.b, SolverKind::Direct).unwrap();
    let x2 = solve(&asm.a, &asm.b, SolverKind::Bicgstab).unwrap();
    let diff = x1.iter().zip(&x2).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let scale = x1.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    assert!(diff <= 1e-9 * scale, "{diff:e}");
}

#[test]
fn second_order_poisson_converges() {
    let e: Vec<f64> = [16, 32]
        .iter()
        .map(|&m| run(&PoissonProblem::semi_annulus(2, m, 2.0 * PI, 3.0 * PI).unwrap(), SolverKind::Direct, Measure::Logical).unwrap().l2)
        .collect();
    let order = (e[0] / e[1]).log2();
    assert!(order > 1.8, "{order}");
}

#[test]
fn three_d_runs() {
    let sol = run(&PoissonProblem::sinusoidal_3d(4, 8, 0.06).unwrap(), SolverKind::Direct, Measure::Logical).unwrap();
    assert!(sol.l2.is_finite() && sol.l2 < 1e-2);
}

#[test]
fn wave_error_drops_with_refinement() {
    let err = |m| {
        let cfg = WaveConfig { cells: m, t_end: 0.25, ..Default::default() };
        WaveSolver::new(&cfg).unwrap().run().unwrap().errors.unwrap()
    };
    let (a, b) = (err(16), err(32));
    assert!(a.p / b.p > 8.0 && a.u / b.u > 8.0 && a.v / b.v > 8.0, "{a:?} {b:?}");
}

#[test]
fn closed_wall_conserves() {
    let cfg = WaveConfig {
        cells: 32,
        dt: 2e-3,
        t_end: 0.2,
        bc: WaveBoundary::ClosedWall,
        initial: InitialCondition::Pulse { center: [0.0, 1.5 * PI], radius: 0.3 },
        stride: 5,
        ..Default::default()
    };
    let r = WaveSolver::new(&cfg).unwrap().run().unwrap();
    assert!(r.max_energy_rate < 1e-10 && r.max_mass_rate < 1e-11, "{:e} {:e}", r.max_energy_rate, r.max_mass_rate);
    let (e0, e1) = (r.reports[0].energy, r.reports.last().unwrap().energy);
    assert!(((e1 - e0) / e0).abs() < 1e-6);
    assert!(r.errors.is_none());
}

#[test]
fn oversized_step_blows_up_with_warning() {
    let cfg = WaveConfig { cells: 32, dt: 0.5, t_end: 200.0, ..Default::default() };
    let solver = WaveSolver::new(&cfg).unwrap();
    match solver.run() {
        Err(MimeticError::Instability { .. }) => {}
        other => panic!("expected instability, got {:?}", other.map(|r| r.warnings)),
    }
}
