//! Scenario execution: build the initial state, dispatch to the requested
//! dynamical formulation, and collect the tracked observables into a
//! `TimeSeriesTable` whose header embeds the normalized scenario.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::generator::{GeneratorConfigRep, GeneratorWignerRep};
use crate::hamiltonian::build_hamiltonian;
use crate::meanfield::{
    ehrenfest_evolve_observed, evolve_distribution_meanfield, EhrenfestState, MeanFieldState,
};
use crate::propagate::{
    dense_exponential, ConfigDiagnostics, EvolutionRecord, IntegratorConfig, Scheme,
};
use crate::scenario::{Method, PsiSpec, Scenario};
use crate::snapshot::{load_wavefunction, save_wavefunction};
use crate::state::{uncorrelated_pure_state, ClassicalPhasePoint, WaveFunction};
use crate::table::{TimeSeriesTable, FORMAT_VERSION};
use crate::wigner::{hamiltonian_symbol, wigner_of_pure_state, WignerAxes};

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Resolve an output path against an optional override directory (the CLI
/// maps an environment variable onto `out_dir`).
pub fn resolve_output_path(name: &str, out_dir: Option<&Path>) -> PathBuf {
    let p = Path::new(name);
    match out_dir {
        Some(dir) if p.is_relative() => dir.join(p),
        _ => p.to_path_buf(),
    }
}

pub fn build_wavefunction(s: &Scenario) -> Result<WaveFunction> {
    let qgrid = s.quantum_grid()?;
    match &s.psi {
        PsiSpec::Gaussian { center, width, momentum } => {
            WaveFunction::gaussian(&qgrid, *center, *width, *momentum, s.hbar)
        }
        PsiSpec::Samples { re, im } => {
            let amps = ndarray::Array1::from_iter(
                re.iter().zip(im.iter()).map(|(r, i)| num_complex::Complex64::new(*r, *i)),
            );
            WaveFunction::from_samples(qgrid, amps)
        }
        PsiSpec::File { path } => {
            let wf = load_wavefunction(Path::new(path))?;
            wf.grid.assert_same(&qgrid, "wavefunction snapshot grid")?;
            // snapshots are bit-exact; renormalize only if drifted beyond the
            // state invariant
            if (wf.norm() - 1.0).abs() > 1e-10 {
                return Err(Error::Validation {
                    key: "initial.psi_file".into(),
                    msg: format!("snapshot norm {} is not unit", wf.norm()),
                });
            }
            Ok(wf)
        }
    }
}

fn integrator_config(s: &Scenario) -> IntegratorConfig {
    IntegratorConfig {
        dt: s.dt,
        t_final: s.t_final,
        scheme: if s.method == Method::OracleDense { Scheme::ExactDense } else { Scheme::Rk4 },
        stride: s.stride,
        safety: s.safety,
        rescale_norm: s.rescale_norm,
    }
}

fn metadata_block(s: &Scenario) -> Vec<String> {
    let mut meta = vec![
        format!("qcdyn-version: {ARTIFACT_VERSION}"),
        format!("format-version: {FORMAT_VERSION}"),
        format!("scenario-hash: {:016x}", s.hash()),
    ];
    for line in s.dump().lines() {
        meta.push(format!("scenario: {line}"));
    }
    meta
}

/// Reconstruct the scenario embedded in a table's metadata.
pub fn scenario_from_table(table: &TimeSeriesTable) -> Result<Scenario> {
    let mut text = String::new();
    for line in &table.metadata {
        if let Some(rest) = line.strip_prefix("scenario: ") {
            text.push_str(rest);
            text.push('\n');
        } else if line == "scenario:" {
            text.push('\n');
        }
    }
    if text.is_empty() {
        return Err(Error::Config("table carries no embedded scenario".into()));
    }
    crate::scenario::parse_scenario(&text)
}

/// Execute a scenario. Snapshot files, if requested, are written next to the
/// CSV (honoring `out_dir`).
pub fn run(s: &Scenario, out_dir: Option<&Path>) -> Result<TimeSeriesTable> {
    s.validate()?;
    let cfg = integrator_config(s);
    let record = match s.method {
        Method::Ehrenfest => run_ehrenfest(s, &cfg, out_dir)?,
        Method::MeanField => run_meanfield(s, &cfg)?,
        Method::FullConfig => run_full_config(s, &cfg)?,
        Method::FullWigner => run_full_wigner(s, &cfg)?,
        Method::Symbols => run_symbols(s, &cfg)?,
        Method::OracleDense => run_oracle_dense(s, &cfg)?,
    };
    let mut table = TimeSeriesTable::from_record(&record, &s.track)?;
    table.metadata = metadata_block(s);
    Ok(table)
}

fn snapshot_requested(s: &Scenario, t: f64) -> bool {
    s.snapshot_times.iter().any(|&ts| (ts - t).abs() < 1e-9)
}

fn run_ehrenfest(s: &Scenario, cfg: &IntegratorConfig, out_dir: Option<&Path>) -> Result<EvolutionRecord> {
    let psi = build_wavefunction(s)?;
    let s0 = EhrenfestState::new(ClassicalPhasePoint { q: s.q0, p: s.p0 }, psi)?;
    let prefix = s.snapshot_prefix.clone();
    let mut snap_err = None;
    let record = ehrenfest_evolve_observed(&s0, &s.potential, s.hbar, cfg, |t, state| {
        if snapshot_requested(s, t) && snap_err.is_none() {
            let name = format!("{prefix}_t{t:.6}.bin");
            let path = resolve_output_path(&name, out_dir);
            if let Err(e) = save_wavefunction(&state.psi, &path) {
                snap_err = Some(e);
            }
        }
    })?;
    match snap_err {
        Some(e) => Err(e),
        None => Ok(record),
    }
}

fn run_meanfield(s: &Scenario, cfg: &IntegratorConfig) -> Result<EvolutionRecord> {
    if !s.snapshot_times.is_empty() {
        return Err(Error::Validation {
            key: "output.snapshot_times".into(),
            msg: "state snapshots are supported for the trajectory method only".into(),
        });
    }
    let pgrid = s.classical_grid()?;
    let qgrid = s.quantum_grid()?;
    let psi = build_wavefunction(s)?;
    let h = build_hamiltonian(&pgrid, &qgrid, &s.potential, s.hbar, s.kinetic_scheme)?;
    let s0 = MeanFieldState::from_pure(
        &pgrid,
        ClassicalPhasePoint { q: s.q0, p: s.p0 },
        s.sigma(&pgrid),
        &psi,
    )?;
    evolve_distribution_meanfield(&s0, &h, s.classical_derivatives, cfg)
}

fn run_full_config(s: &Scenario, cfg: &IntegratorConfig) -> Result<EvolutionRecord> {
    if !s.snapshot_times.is_empty() {
        return Err(Error::Validation {
            key: "output.snapshot_times".into(),
            msg: "state snapshots are supported for the trajectory method only".into(),
        });
    }
    let pgrid = s.classical_grid()?;
    let qgrid = s.quantum_grid()?;
    let psi = build_wavefunction(s)?;
    let h = build_hamiltonian(&pgrid, &qgrid, &s.potential, s.hbar, s.kinetic_scheme)?;
    let gen = GeneratorConfigRep::new(h, s.classical_derivatives)?;
    let d0 = uncorrelated_pure_state(
        &pgrid,
        ClassicalPhasePoint { q: s.q0, p: s.p0 },
        &psi,
        s.sigma(&pgrid),
    )?;
    crate::propagate::propagate_state(&d0, &gen, cfg)
}

fn run_full_wigner(s: &Scenario, cfg: &IntegratorConfig) -> Result<EvolutionRecord> {
    if !s.snapshot_times.is_empty() {
        return Err(Error::Validation {
            key: "output.snapshot_times".into(),
            msg: "state snapshots are supported for the trajectory method only".into(),
        });
    }
    let pgrid = s.classical_grid()?;
    let qgrid = s.quantum_grid()?;
    let psi = build_wavefunction(s)?;
    let h = build_hamiltonian(&pgrid, &qgrid, &s.potential, s.hbar, s.kinetic_scheme)?;
    let axes = WignerAxes::for_quantum_grid(&pgrid, &qgrid, s.hbar)?;
    let gen = GeneratorWignerRep::new(&h, &axes, s.classical_derivatives)?;
    let h_sym = hamiltonian_symbol(&h)?;
    let w0 = wigner_of_pure_state(
        &pgrid,
        ClassicalPhasePoint { q: s.q0, p: s.p0 },
        &psi,
        s.sigma(&pgrid),
        s.hbar,
    )?;
    crate::propagate::propagate_state_wigner(&w0, &gen, h_sym, cfg)
}

fn run_symbols(s: &Scenario, cfg: &IntegratorConfig) -> Result<EvolutionRecord> {
    if !s.snapshot_times.is_empty() {
        return Err(Error::Validation {
            key: "output.snapshot_times".into(),
            msg: "state snapshots are supported for the trajectory method only".into(),
        });
    }
    let pgrid = s.classical_grid()?;
    let psi = build_wavefunction(s)?;
    let w0 = wigner_of_pure_state(
        &pgrid,
        ClassicalPhasePoint { q: s.q0, p: s.p0 },
        &psi,
        s.sigma(&pgrid),
        s.hbar,
    )?;
    let traj =
        crate::canonical::evolve_wigner_symbols(&w0, &s.potential, cfg, s.support_threshold)?;
    let phi = s.potential.clone();
    let mut record = EvolutionRecord::new(&ConfigDiagnostics::NAMES);
    for (k, &t) in traj.times.iter().enumerate() {
        let snap = &traj.snapshots[k];
        let mut norm = 0.0;
        let mut energy = 0.0;
        let mut q_c = 0.0;
        let mut p_c = 0.0;
        let mut q_q = 0.0;
        let mut p_q = 0.0;
        for (pt, w) in snap.iter().zip(traj.weights.iter()) {
            norm += w;
            energy += w * crate::canonical::symbol_energy(pt, &phi)?;
            q_c += w * pt.q1;
            p_c += w * pt.p1;
            q_q += w * pt.q2;
            p_q += w * pt.p2;
        }
        record.push_row(t, &[norm, energy, q_c, p_c, q_q, p_q, 0.0, 0.0]);
    }
    Ok(record)
}

fn run_oracle_dense(s: &Scenario, cfg: &IntegratorConfig) -> Result<EvolutionRecord> {
    if !s.snapshot_times.is_empty() {
        return Err(Error::Validation {
            key: "output.snapshot_times".into(),
            msg: "state snapshots are supported for the trajectory method only".into(),
        });
    }
    let pgrid = s.classical_grid()?;
    let qgrid = s.quantum_grid()?;
    let psi = build_wavefunction(s)?;
    let h = build_hamiltonian(&pgrid, &qgrid, &s.potential, s.hbar, s.kinetic_scheme)?;
    let gen = GeneratorConfigRep::new(h, s.classical_derivatives)?;
    let dense = gen.assemble_dense(s.oracle_cap)?;
    let d0 = uncorrelated_pure_state(
        &pgrid,
        ClassicalPhasePoint { q: s.q0, p: s.p0 },
        &psi,
        s.sigma(&pgrid),
    )?;
    let diags = ConfigDiagnostics::new(&gen)?;
    let mut record = EvolutionRecord::new(&ConfigDiagnostics::NAMES);
    record.push_row(0.0, &diags.row(&d0, 0.0)?);
    // exact propagator over one output stride, applied repeatedly
    let stride_dt = cfg.dt * cfg.stride as f64;
    let steps = cfg.n_steps();
    let n_rows = steps / cfg.stride;
    let e_stride = dense_exponential(&dense, stride_dt, -1.0)?;
    let mut v = dense.flatten(&d0);
    let dim = dense.dim();
    for row in 1..=n_rows {
        let mut next = vec![num_complex::Complex64::ZERO; dim];
        for i in 0..dim {
            let mut acc = num_complex::Complex64::ZERO;
            for j in 0..dim {
                acc += e_stride[[i, j]] * v[j];
            }
            next[i] = acc;
        }
        v = next;
        let d_t = dense.unflatten(&v, &d0);
        record.push_row(row as f64 * stride_dt, &diags.row(&d_t, 0.0)?);
    }
    Ok(record)
}
