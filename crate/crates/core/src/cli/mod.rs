//! Command line front end: configuration, `simulate` and `convergence`.

pub mod config;
pub mod vtk;

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

pub use config::{parse_config, PhasePreset, RunConfig, VelocityPreset};

use crate::diagnostics::{ErrorTable, NestedErrorAccumulator};
use crate::error::{CliError, ConfigError, DiagnosticsError, SchemeError};
use crate::fem::{FeFunction, FeSpace, VectorFeFunction};
use crate::mesh::PeriodicTriMesh;
use crate::scheme::{run, time_grid, Simulation, State, StepReport};

pub const TIMESERIES_HEADER: &str = "step,t,mass,energy,dissipation_integral,newton_iters,energy_residual";
pub const TIMESERIES_FILE: &str = "timeseries.csv";
pub const TABLE_FILE: &str = "table1.csv";

fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(io_error(path))
}

pub fn read_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = fs::read_to_string(path).map_err(io_error(path))?;
    Ok(parse_config(&text)?)
}

/// Files written by [`simulate`].
#[derive(Debug)]
pub struct SimulationOutput {
    pub timeseries: PathBuf,
    pub snapshots: Vec<PathBuf>,
    pub reports: Vec<StepReport>,
}

fn write_fields(path: &Path, sim: &Simulation) -> Result<(), CliError> {
    let s = sim.state();
    let v = sim.velocity_space().clone();
    let phi = FeFunction::new(v.clone(), s.phi.clone()).map_err(SchemeError::Fem)?;
    let mu = FeFunction::new(v.clone(), s.mu.clone()).map_err(SchemeError::Fem)?;
    let p = FeFunction::new(sim.pressure_space().clone(), s.p.clone()).map_err(SchemeError::Fem)?;
    let u = VectorFeFunction::new(v, s.u.clone()).map_err(SchemeError::Fem)?;
    let mut w = create(path)?;
    vtk::write_snapshot(&mut w, &format!("step {} t {}", s.step, s.t), &phi, &mu, &p, &u)
        .and_then(|_| w.flush())
        .map_err(io_error(path))
}

/// Run one simulation on level 0, writing the time series and snapshots
/// into `config.output_dir`.
pub fn simulate(config: &RunConfig) -> Result<SimulationOutput, CliError> {
    let dir = &config.output_dir;
    fs::create_dir_all(dir).map_err(io_error(dir))?;
    let setup = config.setup(0)?;
    let (steps, tau) = time_grid(setup.t_final, setup.tau)?;
    let mesh = Arc::new(
        PeriodicTriMesh::build_uniform(setup.mesh_n)
            .map_err(|e| SchemeError::InvalidSettings(e.to_string()))?,
    );
    let mut sim = Simulation::initialize(mesh, setup.params, setup.settings, tau, &setup.initial)?;

    let ts_path = dir.join(TIMESERIES_FILE);
    let mut ts = create(&ts_path)?;
    let mut snapshots = Vec::new();
    let snapshot = |sim: &Simulation, snapshots: &mut Vec<PathBuf>| -> Result<(), CliError> {
        let step = sim.state().step;
        if config.snapshot_every > 0 && step.is_multiple_of(config.snapshot_every) {
            let path = dir.join(format!("fields_{step}.vtk"));
            write_fields(&path, sim)?;
            snapshots.push(path);
        }
        Ok(())
    };

    writeln!(ts, "{TIMESERIES_HEADER}").map_err(io_error(&ts_path))?;
    writeln!(ts, "0,0,{},{},0,0,0", sim.initial_mass(), sim.initial_energy()).map_err(io_error(&ts_path))?;
    snapshot(&sim, &mut snapshots)?;
    let mut dissipated = 0.0;
    let mut reports = Vec::with_capacity(steps);
    for _ in 0..steps {
        let r = sim.step()?;
        dissipated += r.dissipation;
        writeln!(
            ts,
            "{},{},{},{},{},{},{}",
            r.step, r.t, r.mass, r.energy, dissipated, r.newton_iters, r.energy_residual
        )
        .map_err(io_error(&ts_path))?;
        snapshot(&sim, &mut snapshots)?;
        reports.push(r);
    }
    ts.flush().map_err(io_error(&ts_path))?;
    Ok(SimulationOutput {
        timeseries: ts_path,
        snapshots,
        reports,
    })
}

/// Feeds a fine run into the error accumulator node by node.
fn accumulate(acc: &mut NestedErrorAccumulator, prev: &State, next: &State) -> Result<(), DiagnosticsError> {
    if prev.step == 0 {
        acc.add_node(0, &prev.phi, [&prev.u[0], &prev.u[1]])?;
    }
    acc.add_node(next.step, &next.phi, [&next.u[0], &next.u[1]])?;
    let ubar = [0, 1].map(|k| prev.u[k].iter().zip(&next.u[k]).map(|(a, b)| 0.5 * (a + b)).collect::<Vec<f64>>());
    acc.add_interval(next.step, &next.mu, [&ubar[0], &ubar[1]], &next.p)
}

/// Run levels `0..levels`, compare each level with the next, and write
/// `table1.csv` into `config.output_dir`. `progress(level)` is called when a
/// level finishes.
pub fn convergence(config: &RunConfig, mut progress: impl FnMut(usize)) -> Result<ErrorTable, CliError> {
    if config.levels < 2 {
        return Err(ConfigError::Invalid {
            field: "levels",
            message: format!("convergence needs at least 2 levels, got {}", config.levels),
        }
        .into());
    }
    let at_level = |level: usize| move |e: CliError| CliError::Level { level, source: Box::new(e) };

    let first = run(&config.setup(0)?, true, |_, _, _| {}).map_err(|e| at_level(0)(e.into()))?;
    progress(0);
    let mut coarse = first.solution.expect("recorded");
    let mut errors = Vec::with_capacity(config.levels - 1);
    for level in 1..config.levels {
        let setup = config.setup(level)?;
        let (_, tau) = time_grid(setup.t_final, setup.tau).map_err(|e| at_level(level)(e.into()))?;
        let mesh = Arc::new(coarse.velocity_space().mesh().refine());
        let fine_v = Arc::new(FeSpace::p2(mesh.clone()));
        let fine_p = Arc::new(FeSpace::p1(mesh));
        let mut acc = NestedErrorAccumulator::new(&coarse, &fine_v, &fine_p, tau).map_err(|e| at_level(level)(e.into()))?;
        let mut failure = None;
        let record = level + 1 < config.levels;
        let out = run(&setup, record, |prev, next, _| {
            if failure.is_none() {
                failure = accumulate(&mut acc, prev, next).err();
            }
        })
        .map_err(|e| at_level(level)(e.into()))?;
        if let Some(e) = failure {
            return Err(at_level(level)(e.into()));
        }
        errors.push(acc.finish().map_err(|e| at_level(level)(e.into()))?);
        progress(level);
        if let Some(s) = out.solution {
            coarse = s;
        }
    }
    let table = ErrorTable::from_errors(&errors)?;
    let dir = &config.output_dir;
    fs::create_dir_all(dir).map_err(io_error(dir))?;
    let path = dir.join(TABLE_FILE);
    fs::write(&path, table.to_csv()).map_err(io_error(&path))?;
    Ok(table)
}
