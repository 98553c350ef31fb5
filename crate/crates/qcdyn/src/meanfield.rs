//! Uncorrelated (self-consistent field) approximations.
//!
//! Setting the correlation operator to zero turns the hybrid Liouville
//! equation into a coupled pair for the marginals: a classical Liouville
//! equation driven by the quantum-averaged interaction and a von Neumann
//! equation driven by the classically-averaged interaction
//! (`evolve_distribution_meanfield`). For pure initial data this pair is
//! equivalent to trajectory form: Newton's equation under the mean force
//! coupled to a Schroedinger equation with the instantaneous classical
//! position (`ehrenfest_evolve`).
//!
//! This is a finitely-many-particles closure, not a thermodynamic-limit
//! mean-field statement; `compare_with_full` quantifies how fast it degrades
//! by tracking the full run's correlation norm next to the observable
//! discrepancies.

use ndarray::{Array1, Array2};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::generator::DerivScheme;
use crate::fourier::FftPair;
use crate::grid::SpatialGrid;
use crate::hamiltonian::{kinetic_matrix, HybridHamiltonian, KineticScheme};
use crate::linalg::{hermitian_eigenvalues, CMat};
use crate::potential::Potential;
use crate::propagate::{EvolutionRecord, IntegratorConfig};
use crate::state::{ClassicalDistribution, ClassicalPhasePoint, WaveFunction};

/// Marginal pair evolved by the self-consistent Liouville / von Neumann set.
#[derive(Debug, Clone)]
pub struct MeanFieldState {
    pub classical: ClassicalDistribution,
    pub qgrid: SpatialGrid,
    /// Density operator in kernel values; `Tr rho dxi = 1`.
    pub quantum: CMat,
}

impl MeanFieldState {
    pub fn new(classical: ClassicalDistribution, qgrid: SpatialGrid, quantum: CMat) -> Result<Self> {
        let s = MeanFieldState { classical, qgrid, quantum };
        let nc = s.classical.normalization();
        if (nc - 1.0).abs() > 1e-8 {
            return Err(Error::Config(format!("classical marginal normalization {nc}")));
        }
        let nq = s.trace_quantum();
        if (nq - 1.0).abs() > 1e-8 {
            return Err(Error::Config(format!("quantum marginal trace {nq}")));
        }
        Ok(s)
    }

    pub fn from_pure(
        grid: &crate::grid::PhaseSpaceGrid,
        x0: ClassicalPhasePoint,
        sigma: (f64, f64),
        psi0: &WaveFunction,
    ) -> Result<Self> {
        let classical = ClassicalDistribution::gaussian(grid, x0, sigma)?;
        Self::new(classical, psi0.grid.clone(), psi0.projector())
    }

    pub fn trace_quantum(&self) -> f64 {
        let n = self.quantum.nrows();
        (0..n).map(|i| self.quantum[[i, i]].re).sum::<f64>() * self.qgrid.spacing()
    }

    /// Smallest eigenvalue of the (Hermitian) density operator; monitored,
    /// never enforced.
    pub fn min_quantum_eigenvalue(&self) -> f64 {
        hermitian_eigenvalues(&self.quantum)[0]
    }
}

/// Pure-data trajectory form: one phase point and one wavefunction.
#[derive(Debug, Clone)]
pub struct EhrenfestState {
    pub x: ClassicalPhasePoint,
    pub psi: WaveFunction,
}

impl EhrenfestState {
    pub fn new(x: ClassicalPhasePoint, psi: WaveFunction) -> Result<Self> {
        let norm = psi.norm();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::Config(format!("wavefunction norm {norm}")));
        }
        Ok(EhrenfestState { x, psi })
    }
}

/// Mean force on the classical coordinate: `-d/dQ int V(Q, xi) |psi|^2 dxi`.
pub fn mean_force(phi: &Potential, q: f64, psi: &WaveFunction) -> Result<f64> {
    let mut acc = 0.0;
    for (j, xi) in psi.grid.iter().enumerate() {
        acc += phi.d_dq(q, xi)? * psi.amps[j].norm_sqr();
    }
    Ok(-acc * psi.grid.spacing())
}

/// Ehrenfest total energy `P^2/2 + <psi|h_q|psi> + int V(Q, xi)|psi|^2 dxi`.
pub fn ehrenfest_energy(
    s: &EhrenfestState,
    phi: &Potential,
    h_q: &CMat,
) -> Result<f64> {
    let n = s.psi.grid.len();
    let dxi = s.psi.grid.spacing();
    let mut e_q = 0.0;
    for i in 0..n {
        let mut row = Complex64::ZERO;
        for j in 0..n {
            row += h_q[[i, j]] * s.psi.amps[j];
        }
        e_q += (s.psi.amps[i].conj() * row).re;
    }
    e_q *= dxi;
    let mut e_int = 0.0;
    for (j, xi) in s.psi.grid.iter().enumerate() {
        e_int += phi.eval(s.x.q, xi)? * s.psi.amps[j].norm_sqr();
    }
    e_int *= dxi;
    Ok(0.5 * s.x.p * s.x.p + e_q + e_int)
}

/// One unitary quantum step under the frozen classical position, by the
/// symmetric split-operator factorization on periodic grids or a
/// Crank-Nicolson solve otherwise. Either way the norm is exact.
#[derive(Debug, Clone)]
pub enum QuantumStepper {
    SplitOperator { fft: FftPair, kinetic_phase: Vec<Complex64> },
    CrankNicolson { h_q: CMat },
}

impl QuantumStepper {
    pub fn new(grid: &SpatialGrid, hbar: f64, dt: f64) -> Result<Self> {
        if grid.is_periodic() {
            let fft = FftPair::new(grid.len());
            let kinetic_phase = grid
                .fft_momenta(hbar)
                .iter()
                .map(|p| Complex64::from_polar(1.0, -p * p / 2.0 * dt / hbar))
                .collect();
            Ok(QuantumStepper::SplitOperator { fft, kinetic_phase })
        } else {
            let h_q = kinetic_matrix(grid, KineticScheme::FiniteDifference, hbar)?;
            Ok(QuantumStepper::CrankNicolson { h_q })
        }
    }

    /// Advance `psi` by `dt` under `h_q + diag(V(q, xi))`.
    pub fn step(
        &self,
        psi: &mut Array1<Complex64>,
        grid: &SpatialGrid,
        phi: &Potential,
        q: f64,
        hbar: f64,
        dt: f64,
    ) -> Result<()> {
        match self {
            QuantumStepper::SplitOperator { fft, kinetic_phase } => {
                let half: Vec<Complex64> = grid
                    .iter()
                    .map(|xi| {
                        Ok(Complex64::from_polar(1.0, -phi.eval(q, xi)? * dt / (2.0 * hbar)))
                    })
                    .collect::<Result<_>>()?;
                for (z, ph) in psi.iter_mut().zip(half.iter()) {
                    *z *= ph;
                }
                let mut buf: Vec<Complex64> = psi.iter().copied().collect();
                fft.forward(&mut buf);
                for (z, ph) in buf.iter_mut().zip(kinetic_phase.iter()) {
                    *z *= ph;
                }
                fft.inverse(&mut buf);
                for ((z, src), ph) in psi.iter_mut().zip(buf.iter()).zip(half.iter()) {
                    *z = src * ph;
                }
                Ok(())
            }
            QuantumStepper::CrankNicolson { h_q } => {
                // (1 + i dt/(2 hbar) H) psi' = (1 - i dt/(2 hbar) H) psi
                let n = grid.len();
                let mut h = h_q.clone();
                for (j, xi) in grid.iter().enumerate() {
                    h[[j, j]] += Complex64::new(phi.eval(q, xi)?, 0.0);
                }
                let c = Complex64::new(0.0, dt / (2.0 * hbar));
                let mut plus = h.mapv(|z| z * c);
                let mut minus = h.mapv(|z| -z * c);
                for j in 0..n {
                    plus[[j, j]] += 1.0;
                    minus[[j, j]] += 1.0;
                }
                let rhs_vec = minus.dot(&psi.view().insert_axis(ndarray::Axis(1)));
                let sol = crate::linalg::solve(&plus, &rhs_vec)?;
                for j in 0..n {
                    psi[j] = sol[[j, 0]];
                }
                Ok(())
            }
        }
    }
}

/// Self-consistent trajectory evolution: velocity-Verlet for `(Q, P)` under
/// the mean force, interleaved symmetrically with the unitary quantum step at
/// the midpoint position.
pub fn ehrenfest_evolve(
    s0: &EhrenfestState,
    phi: &Potential,
    hbar: f64,
    cfg: &IntegratorConfig,
) -> Result<EvolutionRecord> {
    ehrenfest_evolve_observed(s0, phi, hbar, cfg, |_, _| {})
}

pub fn ehrenfest_evolve_observed(
    s0: &EhrenfestState,
    phi: &Potential,
    hbar: f64,
    cfg: &IntegratorConfig,
    mut observer: impl FnMut(f64, &EhrenfestState),
) -> Result<EvolutionRecord> {
    cfg.validate()?;
    let grid = s0.psi.grid.clone();
    let h_q = kinetic_matrix(
        &grid,
        if grid.is_periodic() { KineticScheme::Spectral } else { KineticScheme::FiniteDifference },
        hbar,
    )?;
    let stepper = QuantumStepper::new(&grid, hbar, cfg.dt)?;
    let mut s = s0.clone();
    let mut record =
        EvolutionRecord::new(&["norm", "energy", "q_c", "p_c", "q_q", "p_q", "corr_norm", "resym"]);
    let kin_scheme =
        if grid.is_periodic() { KineticScheme::Spectral } else { KineticScheme::FiniteDifference };
    let mut push = |record: &mut EvolutionRecord, t: f64, s: &EhrenfestState| -> Result<()> {
        record.push_row(
            t,
            &[
                s.psi.norm(),
                ehrenfest_energy(s, phi, &h_q)?,
                s.x.q,
                s.x.p,
                s.psi.mean_position(),
                s.psi.mean_momentum(kin_scheme, hbar)?,
                0.0,
                0.0,
            ],
        );
        Ok(())
    };
    push(&mut record, 0.0, &s)?;
    observer(0.0, &s);
    let steps = cfg.n_steps();
    let dt = cfg.dt;
    for step in 1..=steps {
        // kick - drift - quantum step at midpoint - drift - kick
        s.x.p += 0.5 * dt * mean_force(phi, s.x.q, &s.psi)?;
        s.x.q += 0.5 * dt * s.x.p;
        stepper.step(&mut s.psi.amps, &grid, phi, s.x.q, hbar, dt)?;
        s.x.q += 0.5 * dt * s.x.p;
        s.x.p += 0.5 * dt * mean_force(phi, s.x.q, &s.psi)?;
        let t = step as f64 * dt;
        if step % cfg.stride == 0 || step == steps {
            push(&mut record, t, &s)?;
            observer(t, &s);
        }
    }
    Ok(record)
}

/// Coupled RK4 on the marginal pair; the effective potentials are recomputed
/// at every stage so the coupling is fully self-consistent within each step.
pub fn evolve_distribution_meanfield(
    s0: &MeanFieldState,
    h: &HybridHamiltonian,
    scheme: DerivScheme,
    cfg: &IntegratorConfig,
) -> Result<EvolutionRecord> {
    evolve_distribution_meanfield_observed(s0, h, scheme, cfg, |_, _, _| {})
}

pub fn evolve_distribution_meanfield_observed(
    s0: &MeanFieldState,
    h: &HybridHamiltonian,
    scheme: DerivScheme,
    cfg: &IntegratorConfig,
    mut observer: impl FnMut(f64, &Array2<f64>, &CMat),
) -> Result<EvolutionRecord> {
    cfg.validate()?;
    let pgrid = s0.classical.grid.clone();
    pgrid.assert_same(h.pgrid(), "meanfield evolution")?;
    let qgrid = h.qgrid().clone();
    let n = qgrid.len();
    if s0.quantum.nrows() != n {
        return Err(Error::GridMismatch("quantum marginal size vs hamiltonian".into()));
    }
    let (nq, np) = (pgrid.q().len(), pgrid.p().len());
    let dxi = qgrid.spacing();
    let w = pgrid.weight();
    let hbar = h.hbar();

    // rhs of the coupled pair
    let rhs = |d: &Array2<f64>, rho: &CMat| -> Result<(Array2<f64>, CMat)> {
        // effective classical force: -d/dq Tr(h_int(q) rho) dxi
        let mut force = vec![0.0; nq];
        for (iq, q) in pgrid.q().iter().enumerate() {
            let mut acc = 0.0;
            for (j, xi) in qgrid.iter().enumerate() {
                acc += h.potential().d_dq(q, xi)? * rho[[j, j]].re;
            }
            force[iq] = -acc * dxi;
        }
        // classical Liouville: dD/dt = dH/dq dD/dp - p dD/dq with
        // dH/dq = -force
        let ddq_all = diff_axis(d, 0, pgrid.q(), scheme);
        let ddp_all = diff_axis(d, 1, pgrid.p(), scheme);
        let mut d_dot = Array2::zeros((nq, np));
        for iq in 0..nq {
            for ip in 0..np {
                let p = pgrid.p().point(ip);
                d_dot[[iq, ip]] = -force[iq] * ddp_all[[iq, ip]] - p * ddq_all[[iq, ip]];
            }
        }
        // effective quantum potential: sum_X w V(q, xi) D(X)
        let mut v_eff = vec![0.0; n];
        for (iq, q) in pgrid.q().iter().enumerate() {
            let mut mass = 0.0;
            for ip in 0..np {
                mass += d[[iq, ip]];
            }
            for (j, xi) in qgrid.iter().enumerate() {
                v_eff[j] += h.potential().eval(q, xi)? * mass;
            }
        }
        for v in v_eff.iter_mut() {
            *v *= w;
        }
        // von Neumann: i hbar d rho/dt = [h_q + diag(v_eff), rho]
        let mut h_eff = h.h_q().clone();
        for j in 0..n {
            h_eff[[j, j]] += Complex64::new(v_eff[j], 0.0);
        }
        let comm = h_eff.dot(rho) - rho.dot(&h_eff);
        let rho_dot = comm.mapv(|z| z * Complex64::new(0.0, -1.0 / hbar));
        Ok((d_dot, rho_dot))
    };

    let mut d = s0.classical.data.clone();
    let mut rho = s0.quantum.clone();
    let mut record =
        EvolutionRecord::new(&["norm", "energy", "q_c", "p_c", "q_q", "p_q", "corr_norm", "resym", "norm_q", "rho_min_eig"]);
    let q_op = crate::hamiltonian::position_operator(&qgrid);
    let p_op = crate::hamiltonian::momentum_operator(&qgrid, h.kinetic_scheme(), hbar)?;
    let diag_row = |d: &Array2<f64>, rho: &CMat, resym: f64| -> Result<[f64; 10]> {
        let dist = ClassicalDistribution { grid: pgrid.clone(), data: d.clone() };
        let tr = (0..n).map(|i| rho[[i, i]].re).sum::<f64>() * dxi;
        let mean_of = |m: &CMat| -> f64 {
            let mut acc = Complex64::ZERO;
            for a in 0..n {
                for b in 0..n {
                    acc += m[[a, b]] * rho[[b, a]];
                }
            }
            acc.re * dxi
        };
        // total mean energy of the pair (double-counts nothing: classical
        // kinetic + quantum kinetic + interaction with both marginals)
        let mut e = 0.0;
        for iq in 0..nq {
            for (ip, p) in pgrid.p().iter().enumerate() {
                e += 0.5 * p * p * d[[iq, ip]];
            }
        }
        e *= w;
        e += mean_of(h.h_q());
        let mut e_int = 0.0;
        for (iq, q) in pgrid.q().iter().enumerate() {
            let mut mass = 0.0;
            for ip in 0..np {
                mass += d[[iq, ip]];
            }
            let mut vq = 0.0;
            for (j, xi) in qgrid.iter().enumerate() {
                vq += h.potential().eval(q, xi)? * rho[[j, j]].re;
            }
            e_int += mass * vq;
        }
        e += e_int * w * dxi;
        Ok([
            dist.normalization(),
            e,
            dist.mean_q(),
            dist.mean_p(),
            mean_of(&q_op),
            mean_of(&p_op),
            0.0,
            resym,
            tr,
            hermitian_eigenvalues(rho)[0],
        ])
    };
    record.push_row(0.0, &diag_row(&d, &rho, 0.0)?);
    let steps = cfg.n_steps();
    let dt = cfg.dt;
    for step in 1..=steps {
        // RK4 on the pair
        let (k1d, k1r) = rhs(&d, &rho)?;
        let (k2d, k2r) = rhs(&(&d + &(&k1d * (dt / 2.0))), &(&rho + &k1r.mapv(|z| z * (dt / 2.0))))?;
        let (k3d, k3r) = rhs(&(&d + &(&k2d * (dt / 2.0))), &(&rho + &k2r.mapv(|z| z * (dt / 2.0))))?;
        let (k4d, k4r) = rhs(&(&d + &(&k3d * dt)), &(&rho + &k3r.mapv(|z| z * dt)))?;
        d = &d + &((&k1d + &(&k2d * 2.0) + &(&k3d * 2.0) + &k4d) * (dt / 6.0));
        rho = &rho
            + &(k1r + k2r.mapv(|z| z * 2.0) + k3r.mapv(|z| z * 2.0) + k4r)
                .mapv(|z| z * Complex64::new(dt / 6.0, 0.0));
        let resym = {
            let herm = crate::linalg::hermitize(&rho);
            let mut corr = 0.0_f64;
            for (a, b) in rho.iter().zip(herm.iter()) {
                corr += (a - b).norm_sqr();
            }
            rho = herm;
            corr.sqrt()
        };
        let t = step as f64 * dt;
        let nc = d.sum() * w;
        let nq_tr = (0..n).map(|i| rho[[i, i]].re).sum::<f64>() * dxi;
        for (label, val) in [("classical", nc), ("quantum", nq_tr)] {
            let drift = (val - 1.0).abs();
            if drift > 1e-4 {
                let _ = label;
                return Err(Error::NormDrift { drift, budget: 1e-4, t });
            }
        }
        if step % cfg.stride == 0 || step == steps {
            record.push_row(t, &diag_row(&d, &rho, resym)?);
            observer(t, &d, &rho);
        }
    }
    Ok(record)
}

/// Central or spectral derivative along one axis of a real 2D field,
/// periodic wrap.
fn diff_axis(
    data: &Array2<f64>,
    axis: usize,
    grid: &SpatialGrid,
    scheme: DerivScheme,
) -> Array2<f64> {
    let (nq, np) = data.dim();
    let len = if axis == 0 { nq } else { np };
    debug_assert_eq!(len, grid.len());
    let mut out = Array2::zeros((nq, np));
    match scheme {
        DerivScheme::Central2 => {
            let inv = 1.0 / (2.0 * grid.spacing());
            for i in 0..nq {
                for j in 0..np {
                    let (hi, lo) = if axis == 0 {
                        (data[[(i + 1) % nq, j]], data[[(i + nq - 1) % nq, j]])
                    } else {
                        (data[[i, (j + 1) % np]], data[[i, (j + np - 1) % np]])
                    };
                    out[[i, j]] = (hi - lo) * inv;
                }
            }
        }
        DerivScheme::Spectral => {
            let fft = FftPair::new(len);
            let wavenumbers = grid.fft_momenta(1.0);
            let mut buf = vec![Complex64::ZERO; len];
            let other = if axis == 0 { np } else { nq };
            for o in 0..other {
                for i in 0..len {
                    let v = if axis == 0 { data[[i, o]] } else { data[[o, i]] };
                    buf[i] = Complex64::new(v, 0.0);
                }
                fft.forward(&mut buf);
                for (i, z) in buf.iter_mut().enumerate() {
                    *z *= Complex64::new(0.0, wavenumbers[i]);
                }
                fft.inverse(&mut buf);
                for i in 0..len {
                    if axis == 0 {
                        out[[i, o]] = buf[i].re;
                    } else {
                        out[[o, i]] = buf[i].re;
                    }
                }
            }
        }
    }
    out
}

/// Per-column discrepancy report between a full-dynamics record and an
/// uncorrelated-approximation record, with the full run's correlation norm
/// alongside. The uncorrelated pair is exact only while correlations stay
/// negligible; with finitely many particles this is a closure, not a
/// controlled limit.
#[derive(Debug, Clone)]
pub struct ComparisonReport {
    pub times: Vec<f64>,
    pub columns: Vec<String>,
    /// `|full - approx|` per column per time.
    pub discrepancy: Vec<Vec<f64>>,
    /// Correlation norm of the full run at the same times.
    pub correlation_norm: Vec<f64>,
}

pub fn compare_with_full(
    full: &EvolutionRecord,
    approx: &EvolutionRecord,
    columns: &[&str],
) -> Result<ComparisonReport> {
    if full.times.len() != approx.times.len() {
        return Err(Error::Alignment(format!(
            "row counts differ: {} vs {}",
            full.times.len(),
            approx.times.len()
        )));
    }
    for (a, b) in full.times.iter().zip(approx.times.iter()) {
        if (a - b).abs() > 1e-12 {
            return Err(Error::Alignment(format!("times {a} vs {b}")));
        }
    }
    let mut discrepancy = Vec::new();
    for name in columns {
        let f = full.column(name)?;
        let g = approx.column(name)?;
        discrepancy.push(f.iter().zip(g.iter()).map(|(x, y)| (x - y).abs()).collect());
    }
    Ok(ComparisonReport {
        times: full.times.clone(),
        columns: columns.iter().map(|s| s.to_string()).collect(),
        discrepancy,
        correlation_norm: full.column("corr_norm")?.to_vec(),
    })
}
