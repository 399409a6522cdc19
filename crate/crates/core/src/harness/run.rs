use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::diagnostics::{BkmMonitor, Diagnostics, DiagnosticsRecord};
use crate::elliptic::{Preconditioner, SolverSettings};
use crate::error::{Result, TqgError};
use crate::fem::FemSpaces;
use crate::timestepper::{StepStats, TqgModel};
use crate::transport::SimState;

use super::config::SimConfig;
use super::presets::initial_fields;
use super::snapshot::{write_sidecar, Snapshot, SnapshotMeta};

pub fn solver_settings(config: &SimConfig) -> SolverSettings {
    SolverSettings {
        tolerance: config.elliptic_tol,
        max_iterations: config.elliptic_max_iter,
        preconditioner: Preconditioner::Jacobi,
    }
}

/// Model and initial state of the configured preset, with the initial
/// elliptic solve done.
pub fn canonical_initial_state(config: &SimConfig) -> Result<(TqgModel, SimState)> {
    config.validate()?;
    let space = FemSpaces::new(config.n, config.degree)?;
    let init = initial_fields(&space, &config.preset)?;
    let model = TqgModel::new(&space, config.alpha, solver_settings(config))?;
    let state = model.initial_state(init.b, init.omega, init.h, init.f, 0.0)?;
    Ok((model, state))
}

/// A model, its state and the running diagnostics.
#[derive(Debug)]
pub struct Simulation {
    model: TqgModel,
    state: SimState,
    diagnostics: Diagnostics,
    dt: f64,
    step: usize,
}

impl Simulation {
    pub fn new(config: &SimConfig) -> Result<Self> {
        let (model, state) = canonical_initial_state(config)?;
        let diagnostics = Diagnostics::new(model.space(), config.blowup_threshold)?;
        Ok(Self { model, state, diagnostics, dt: config.dt, step: 0 })
    }

    pub fn state(&self) -> &SimState {
        &self.state
    }

    pub fn model(&self) -> &TqgModel {
        &self.model
    }

    pub fn step_index(&self) -> usize {
        self.step
    }

    pub fn monitor(&self) -> &BkmMonitor {
        self.diagnostics.monitor()
    }

    /// One time step; elliptic failures carry the step index.
    pub fn advance(&mut self) -> Result<StepStats> {
        let next = self.step + 1;
        let stats = self
            .model
            .step(&mut self.state, self.dt)
            .map_err(|e| TqgError::StepFailed { step: next, source: Box::new(e) })?;
        self.step = next;
        // keep t an exact multiple of Δt so checkpoints line up across runs
        self.state.t = self.step as f64 * self.dt;
        Ok(stats)
    }

    pub fn record(&mut self, reference: Option<&SimState>) -> Result<DiagnosticsRecord> {
        self.diagnostics.record(&self.state, reference)
    }

    /// Snapshots of `b`, `ω`, `ψ̃` and `ψ^α` at the current step.
    pub fn snapshots(&self) -> Vec<Snapshot> {
        let space = self.state.space();
        let make = |name: &str, coeffs: &[f64]| Snapshot {
            n: space.mesh().n() as u32,
            degree: space.degree() as u32,
            alpha: self.state.alpha,
            t: self.state.t,
            name: name.to_string(),
            coeffs: coeffs.to_vec(),
        };
        vec![
            make("b", &self.state.b.coeffs),
            make("omega", &self.state.omega.coeffs),
            make("psi_tilde", &self.state.psi_tilde.coeffs),
            make("psi", &self.state.psi.coeffs),
        ]
    }
}

/// Files and records produced by [`run`].
#[derive(Debug)]
pub struct RunSummary {
    pub out_dir: PathBuf,
    pub steps: usize,
    pub records: Vec<DiagnosticsRecord>,
    pub snapshots: Vec<PathBuf>,
    pub final_state: SimState,
    pub monitor: BkmMonitor,
}

pub fn snapshot_file(dir: &Path, step: usize, field: &str) -> PathBuf {
    dir.join("snapshots").join(format!("step{step:07}_{field}.bin"))
}

fn write_snapshots(sim: &Simulation, dir: &Path, hash: &str, out: &mut Vec<PathBuf>) -> Result<()> {
    for snap in sim.snapshots() {
        let path = snapshot_file(dir, sim.step_index(), &snap.name);
        snap.write(&path)?;
        write_sidecar(&path, &SnapshotMeta { config_hash: hash.to_string(), step: sim.step_index() as u64 })?;
        out.push(path);
    }
    Ok(())
}

/// Runs the configured simulation, writing `config.toml`,
/// `diagnostics.csv` and `snapshots/` under `config.out`.
pub fn run(config: &SimConfig) -> Result<RunSummary> {
    let dir = config.out.clone();
    fs::create_dir_all(dir.join("snapshots"))?;
    fs::write(dir.join("config.toml"), config.to_toml()?)?;
    let hash = config.hash()?;

    let mut sim = Simulation::new(config)?;
    let mut csv = BufWriter::new(fs::File::create(dir.join("diagnostics.csv"))?);
    writeln!(csv, "{}", DiagnosticsRecord::CSV_HEADER)?;
    let mut records = Vec::new();
    let mut snapshots = Vec::new();

    let first = sim.record(None)?;
    writeln!(csv, "{}", first.csv_row())?;
    records.push(first);
    write_snapshots(&sim, &dir, &hash, &mut snapshots)?;

    for i in 1..=config.steps {
        sim.advance()?;
        let last = i == config.steps;
        if i % config.diagnostics_every == 0 || last {
            let r = sim.record(None)?;
            writeln!(csv, "{}", r.csv_row())?;
            records.push(r);
        }
        if (config.snapshot_every > 0 && i % config.snapshot_every == 0) || last {
            write_snapshots(&sim, &dir, &hash, &mut snapshots)?;
        }
    }
    csv.flush()?;
    let monitor = sim.monitor().clone();
    Ok(RunSummary { out_dir: dir, steps: config.steps, records, snapshots, final_state: sim.state, monitor })
}
