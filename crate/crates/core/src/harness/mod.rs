pub mod gauss;
pub mod output;
pub mod verify;

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{MimeticError, Result};
use crate::grid::MappingKind;
use crate::poisson::{observed_order, run as run_poisson, Measure, PoissonProblem, SolverKind};
use crate::wave::{run_simulation, InitialCondition, WaveBoundary, WaveConfig};

pub use gauss::{gauss_study, GaussRow, GaussStudy, Regime};
pub use output::{sci, write_structured_grid};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Experiment {
    #[serde(rename = "poisson_annulus")]
    PoissonAnnulus,
    #[serde(rename = "poisson_sinusoidal")]
    PoissonSinusoidal,
    #[serde(rename = "poisson_3d")]
    Poisson3d,
    #[serde(rename = "wave_annulus")]
    WaveAnnulus,
    #[serde(rename = "gauss_check")]
    GaussCheck,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::PoissonAnnulus => "poisson_annulus",
            Experiment::PoissonSinusoidal => "poisson_sinusoidal",
            Experiment::Poisson3d => "poisson_3d",
            Experiment::WaveAnnulus => "wave_annulus",
            Experiment::GaussCheck => "gauss_check",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| MimeticError::Config(format!("unknown experiment '{s}'")))
    }

    pub fn default_cells(&self) -> Vec<usize> {
        match self {
            Experiment::PoissonAnnulus | Experiment::PoissonSinusoidal => vec![20, 40, 80, 160],
            Experiment::Poisson3d => vec![8, 16, 32],
            Experiment::WaveAnnulus => vec![16, 32, 64, 128],
            Experiment::GaussCheck => vec![16, 32, 64],
        }
    }

    /// Default annulus radii (a, b).
    pub fn default_radii(&self) -> (f64, f64) {
        match self {
            Experiment::WaveAnnulus => (PI, 2.0 * PI),
            _ => (2.0 * PI, 3.0 * PI),
        }
    }
}

/// Flat experiment description; every field has a default.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub order: usize,
    /// Empty means the experiment's default sweep.
    pub cells: Vec<usize>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub eps: f64,
    pub eps_3d: f64,
    pub d1: f64,
    pub d2: f64,
    pub theta: f64,
    pub dt: f64,
    pub t_end: f64,
    pub bc: WaveBoundary,
    pub stride: usize,
    pub solver: SolverKind,
    pub measure: Measure,
    pub seed: u64,
    pub samples: usize,
    pub out: PathBuf,
    pub emit_fields: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            experiment: Experiment::PoissonAnnulus,
            order: 4,
            cells: Vec::new(),
            a: None,
            b: None,
            eps: 0.06,
            eps_3d: 0.06,
            d1: 1.0,
            d2: 10.0,
            theta: PI / 4.0,
            dt: 1e-3,
            t_end: 1.0,
            bc: WaveBoundary::DirichletExact,
            stride: 50,
            solver: SolverKind::Direct,
            measure: Measure::Logical,
            seed: 20240521,
            samples: 100,
            out: PathBuf::from("out"),
            emit_fields: false,
        }
    }
}

impl ExperimentConfig {
    pub fn for_experiment(experiment: Experiment) -> Self {
        ExperimentConfig { experiment, ..Default::default() }
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn cells(&self) -> Vec<usize> {
        if self.cells.is_empty() {
            self.experiment.default_cells()
        } else {
            self.cells.clone()
        }
    }

    pub fn radii(&self) -> (f64, f64) {
        let (a, b) = self.experiment.default_radii();
        (self.a.unwrap_or(a), self.b.unwrap_or(b))
    }

    pub fn validate(&self) -> Result<()> {
        crate::mimetic1d::check_order(self.order)?;
        let cells = self.cells();
        if cells.is_empty() || cells.windows(2).any(|w| w[1] <= w[0]) {
            return Err(MimeticError::Config(format!("cell list {cells:?} must be nonempty and strictly increasing")));
        }
        if !(self.dt > 0.0) || !(self.t_end >= 0.0) {
            return Err(MimeticError::Config("dt must be positive and t_end nonnegative".into()));
        }
        if self.samples == 0 {
            return Err(MimeticError::Config("samples must be at least 1".into()));
        }
        Ok(())
    }

    pub fn wave_config(&self, m: usize) -> WaveConfig {
        let (a, b) = self.radii();
        WaveConfig {
            k: self.order,
            cells: m,
            mapping: MappingKind::SemiAnnulus { a, b },
            dt: self.dt,
            t_end: self.t_end,
            bc: self.bc,
            initial: match self.bc {
                WaveBoundary::DirichletExact => InitialCondition::Exact,
                WaveBoundary::ClosedWall => InitialCondition::Pulse { center: [0.0, 0.5 * (a + b)], radius: 0.3 },
            },
            stride: self.stride,
            ..Default::default()
        }
    }

    pub fn poisson_problem(&self, m: usize) -> Result<PoissonProblem> {
        match self.experiment {
            Experiment::PoissonAnnulus => {
                let (a, b) = self.radii();
                PoissonProblem::semi_annulus(self.order, m, a, b)
            }
            Experiment::PoissonSinusoidal => {
                PoissonProblem::sinusoidal(self.order, m, self.eps, self.d1, self.d2, self.theta)
            }
            Experiment::Poisson3d => PoissonProblem::sinusoidal_3d(self.order, m, self.eps_3d),
            _ => Err(MimeticError::Config(format!("{} is not a Poisson experiment", self.experiment.name()))),
        }
    }
}

/// One row of a convergence table; `values` holds one error per measured quantity.
#[derive(Clone, Debug, PartialEq)]
pub struct TableRow {
    pub m: usize,
    pub values: Vec<f64>,
    pub failure: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceTable {
    pub experiment: Experiment,
    pub order: usize,
    /// Quantity names, e.g. ["l2", "max"] or ["p", "u", "v"].
    pub quantities: Vec<&'static str>,
    pub rows: Vec<TableRow>,
}

impl ConvergenceTable {
    pub fn errors(&self, q: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r.values.get(q).copied().unwrap_or(f64::NAN)).collect()
    }

    /// Observed orders between consecutive successful rows (NaN across failures).
    pub fn orders(&self, q: usize) -> Vec<f64> {
        self.rows
            .windows(2)
            .map(|w| {
                if w[0].failure.is_some() || w[1].failure.is_some() {
                    return f64::NAN;
                }
                observed_order(&[w[0].values[q], w[1].values[q]], &[w[0].m, w[1].m])
                    .map(|o| o[0])
                    .unwrap_or(f64::NAN)
            })
            .collect()
    }

    pub fn column_header(&self) -> String {
        let mut cols = vec!["m".to_string()];
        for q in &self.quantities {
            cols.push(format!("err_{q}"));
            cols.push(format!("order_{q}"));
        }
        cols.join(",")
    }

    pub fn to_csv(&self, comments: &[String]) -> String {
        let mut s = String::new();
        for c in comments {
            s.push_str(&format!("# {c}\n"));
        }
        for r in &self.rows {
            if let Some(f) = &r.failure {
                s.push_str(&format!("# m={} failed: {f}\n", r.m));
            }
        }
        s.push_str(&self.column_header());
        s.push('\n');
        let orders: Vec<Vec<f64>> = (0..self.quantities.len()).map(|q| self.orders(q)).collect();
        for (i, r) in self.rows.iter().enumerate() {
            let mut cells = vec![r.m.to_string()];
            for q in 0..self.quantities.len() {
                cells.push(if r.failure.is_some() { "NaN".into() } else { sci(r.values[q]) });
                cells.push(if i == 0 { String::new() } else { format_order(orders[q][i - 1]) });
            }
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }
}

fn format_order(o: f64) -> String {
    if o.is_finite() {
        format!("{o:.4}")
    } else {
        "NaN".into()
    }
}

/// Run a Poisson or wave sweep; resolutions are computed in parallel and
/// collected in cell order.
pub fn run_convergence(config: &ExperimentConfig) -> Result<ConvergenceTable> {
    config.validate()?;
    let cells = config.cells();
    let quantities: Vec<&'static str> = match config.experiment {
        Experiment::WaveAnnulus => vec!["p", "u", "v"],
        Experiment::GaussCheck => {
            return Err(MimeticError::Config("gauss_check is not a convergence experiment".into()));
        }
        _ => vec!["l2", "max"],
    };
    let rows: Vec<TableRow> = cells
        .par_iter()
        .map(|&m| {
            let res: Result<Vec<f64>> = match config.experiment {
                Experiment::WaveAnnulus => run_simulation(&config.wave_config(m)).and_then(|r| {
                    r.errors
                        .map(|e| vec![e.p, e.u, e.v])
                        .ok_or_else(|| MimeticError::Config("errors need dirichlet_exact boundaries".into()))
                }),
                _ => config
                    .poisson_problem(m)
                    .and_then(|p| run_poisson(&p, config.solver, config.measure))
                    .map(|s| vec![s.l2, s.max]),
            };
            match res {
                Ok(values) => TableRow { m, values, failure: None },
                Err(e) => TableRow { m, values: vec![f64::NAN; quantities.len()], failure: Some(e.to_string()) },
            }
        })
        .collect();
    Ok(ConvergenceTable { experiment: config.experiment, order: config.order, quantities, rows })
}

/// Header comments shared by every CSV.
pub fn csv_comments(config: &ExperimentConfig) -> Vec<String> {
    let (a, b) = config.radii();
    let mut c = vec![format!("experiment={} order={}", config.experiment.name(), config.order)];
    match config.experiment {
        Experiment::PoissonAnnulus | Experiment::WaveAnnulus | Experiment::GaussCheck => {
            c.push(format!("semi_annulus a={a:.17} b={b:.17}"))
        }
        _ => {}
    }
    match config.experiment {
        Experiment::PoissonSinusoidal => {
            c.push(format!("eps={} d1={} d2={} theta={:.17}", config.eps, config.d1, config.d2, config.theta))
        }
        Experiment::Poisson3d => c.push(format!("eps={}", config.eps_3d)),
        Experiment::WaveAnnulus => c.push(format!("dt={} t_end={} bc={:?}", config.dt, config.t_end, config.bc)),
        Experiment::GaussCheck => {
            c.push(format!("generator=ChaCha8Rng seed={} samples={}", config.seed, config.samples))
        }
        _ => {}
    }
    if matches!(config.experiment, Experiment::PoissonAnnulus | Experiment::PoissonSinusoidal | Experiment::Poisson3d) {
        c.push(format!("measure={:?} solver={:?}", config.measure, config.solver));
    }
    c
}

/// Outcome of `run_experiment`: files written plus a short summary.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub files: Vec<PathBuf>,
    pub summary: String,
    pub ok: bool,
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<RunOutput> {
    config.validate()?;
    std::fs::create_dir_all(&config.out)?;
    let name = config.experiment.name();
    let mut files = Vec::new();
    let comments = csv_comments(config);
    match config.experiment {
        Experiment::GaussCheck => {
            let map = match config.a.zip(config.b) {
                Some((a, b)) => MappingKind::SemiAnnulus { a, b },
                None => MappingKind::SemiAnnulus { a: 2.0 * PI, b: 3.0 * PI },
            };
            let maps = [
                MappingKind::Identity { dim: 2 },
                map,
                MappingKind::Sinusoidal2d { eps: config.eps },
            ];
            let studies = maps
                .iter()
                .map(|mk| gauss_study(*mk, config.order, &config.cells(), config.samples, config.seed))
                .collect::<Result<Vec<_>>>()?;
            let csv = gauss::to_csv(&studies, &comments);
            let path = config.out.join(format!("{name}_k{}.csv", config.order));
            std::fs::write(&path, &csv)?;
            files.push(path);
            let ok = studies.iter().all(|s| s.passed);
            let summary = studies.iter().map(|s| s.summary()).collect::<Vec<_>>().join("\n");
            Ok(RunOutput { files, summary, ok })
        }
        _ => {
            let table = run_convergence(config)?;
            let path = config.out.join(format!("{name}_k{}.csv", config.order));
            let csv = table.to_csv(&comments);
            std::fs::write(&path, &csv)?;
            files.push(path);
            if config.experiment == Experiment::WaveAnnulus || config.emit_fields {
                files.extend(emit_extras(config)?);
            }
            let ok = table.rows.iter().all(|r| r.failure.is_none());
            Ok(RunOutput { files, summary: csv, ok })
        }
    }
}

/// Diagnostics CSV for the finest wave run and optional field snapshots.
fn emit_extras(config: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let m = *config.cells().last().unwrap();
    let name = config.experiment.name();
    let mut files = Vec::new();
    if config.experiment == Experiment::WaveAnnulus {
        let solver = crate::wave::WaveSolver::new(&config.wave_config(m))?;
        let result = solver.run()?;
        let path = config.out.join(format!("{name}_diagnostics_m{m}.csv"));
        std::fs::write(&path, output::diagnostics_csv(&result.reports, &csv_comments(config)))?;
        files.push(path);
        if config.emit_fields {
            let path = config.out.join(format!("{name}_p_m{m}.vtk"));
            let v = solver.cartesian_velocity(&result.state.u);
            let parts = solver.ops.nd.split_faces(&v);
            write_structured_grid(
                &path,
                &[m + 2, m + 2, 1],
                &solver.ops.metrics.scalar.physical,
                &[("p", &result.state.p)],
            )?;
            files.push(path);
            let path = config.out.join(format!("{name}_u_m{m}.vtk"));
            write_structured_grid(&path, &[m + 1, m, 1], &solver.ops.metrics.faces[0].physical, &[("u", parts[0])])?;
            files.push(path);
            let path = config.out.join(format!("{name}_v_m{m}.vtk"));
            write_structured_grid(&path, &[m, m + 1, 1], &solver.ops.metrics.faces[1].physical, &[("v", parts[1])])?;
            files.push(path);
        }
    } else {
        let problem = config.poisson_problem(m)?;
        let sol = run_poisson(&problem, config.solver, config.measure)?;
        let mut dims: Vec<usize> = problem.grid.cells.iter().map(|c| c + 2).collect();
        dims.resize(3, 1);
        let err: Vec<f64> = match &sol.exact {
            Some(e) => sol.u.iter().zip(e).map(|(a, b)| a - b).collect(),
            None => vec![0.0; sol.u.len()],
        };
        let path = config.out.join(format!("{name}_m{m}.vtk"));
        write_structured_grid(&path, &dims, &sol.coords, &[("u", &sol.u), ("error", &err)])?;
        files.push(path);
    }
    Ok(files)
}

/// Regenerate every table CSV into `out`.
pub fn run_tables(out: &Path) -> Result<Vec<RunOutput>> {
    let specs = [
        (Experiment::PoissonAnnulus, vec![20, 40, 80, 160, 320]),
        (Experiment::PoissonSinusoidal, vec![20, 40, 80, 160, 320]),
        (Experiment::Poisson3d, vec![8, 16, 32]),
        (Experiment::WaveAnnulus, vec![16, 32, 64, 128, 256]),
    ];
    specs
        .iter()
        .map(|(e, cells)| {
            let cfg = ExperimentConfig { cells: cells.clone(), out: out.to_path_buf(), ..ExperimentConfig::for_experiment(*e) };
            run_experiment(&cfg)
        })
        .collect()
}
