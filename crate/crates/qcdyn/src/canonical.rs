//! Observable-picture form of the uncorrelated approximation: the canonical
//! pair of the classical particle (as scalars times the identity) and the
//! canonical operators of the quantum particle evolve under coupled
//! Heisenberg equations. Because the classical pair becomes operator-valued
//! through the force, evaluating a general potential of the matrix argument
//! `Qc - Qq` would require a spectral calculus, and for t > 0 the two
//! positions need not commute; the matrix route therefore supports only
//! polynomial couplings of degree <= 2, where every matrix function is an
//! unambiguous polynomial.
//!
//! In the Wigner representation the same equations become classical two-body
//! trajectories of the canonical symbols. Mean values evaluate the evolved
//! observable symbol along the trajectories against the frozen initial
//! Wigner function — general potentials are fine on this route.

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hamiltonian::{momentum_operator, position_operator, KineticScheme};
use crate::linalg::{max_abs, CMat};
use crate::potential::Potential;
use crate::propagate::{EvolutionRecord, IntegratorConfig};
use crate::state::Role;
use crate::wigner::WignerField;

/// The four canonical operators on the quantum grid. The classical pair
/// starts as scalars times the identity and picks up operator character
/// through the coupling.
#[derive(Debug, Clone)]
pub struct CanonicalOperatorState {
    pub q_c: CMat,
    pub p_c: CMat,
    pub q_q: CMat,
    pub p_q: CMat,
    pub hbar: f64,
}

impl CanonicalOperatorState {
    /// Canonical initial data: `(q, p)` times the identity for the classical
    /// pair, position and momentum operators for the quantum pair.
    pub fn canonical(
        grid: &crate::grid::SpatialGrid,
        q: f64,
        p: f64,
        kinetic: KineticScheme,
        hbar: f64,
    ) -> Result<Self> {
        let n = grid.len();
        let eye = crate::linalg::identity(n);
        Ok(CanonicalOperatorState {
            q_c: eye.mapv(|z| z * q),
            p_c: eye.mapv(|z| z * p),
            q_q: position_operator(grid),
            p_q: momentum_operator(grid, kinetic, hbar)?,
            hbar,
        })
    }

    /// Max-entry deviation of `[Qq, Pq]` from its initial value; linear and
    /// quadratic couplings preserve the commutator, so drift flags integrator
    /// error. Note the discrete `[q, p]` is not `i hbar` times the identity —
    /// preservation, not the continuum value, is the invariant.
    pub fn commutator_drift(&self, initial: &CMat) -> f64 {
        let c = crate::linalg::commutator(&self.q_q, &self.p_q);
        max_abs(&(&c - initial))
    }

    pub fn hermiticity_defect(&self) -> f64 {
        crate::linalg::hermiticity_defect(&self.q_c)
            .max(crate::linalg::hermiticity_defect(&self.p_c))
            .max(crate::linalg::hermiticity_defect(&self.q_q))
            .max(crate::linalg::hermiticity_defect(&self.p_q))
    }
}

/// Forces as matrix polynomials in the positions. Degree <= 2 only.
fn forces(
    phi: &Potential,
    q_c: &CMat,
    q_q: &CMat,
) -> Result<(CMat, CMat)> {
    let n = q_c.nrows();
    let eye = crate::linalg::identity(n);
    match phi {
        Potential::Zero => Ok((CMat::zeros((n, n)), CMat::zeros((n, n)))),
        // V = k/2 (xi - q)^2: dPc/dt = -dV/dq = k (Qq - Qc), dPq/dt = -k (Qq - Qc)
        Potential::Harmonic { k } => {
            let rel = q_q - q_c;
            Ok((rel.mapv(|z| z * *k), rel.mapv(|z| z * -*k)))
        }
        // V = c q xi: dPc/dt = -c Qq, dPq/dt = -c Qc
        Potential::Bilinear { c } => {
            Ok((q_q.mapv(|z| z * -*c), q_c.mapv(|z| z * -*c)))
        }
        _ => {
            let _ = eye;
            Err(Error::Unsupported(
                "canonical-operator evolution supports polynomial couplings of degree <= 2".into(),
            ))
        }
    }
}

/// RK4 on the four matrices. The commutator invariant and Hermiticity are
/// recorded each stride.
pub fn evolve_canonical_operators(
    s0: &CanonicalOperatorState,
    phi: &Potential,
    cfg: &IntegratorConfig,
) -> Result<(EvolutionRecord, CanonicalOperatorState)> {
    if !phi.is_quadratic() {
        return Err(Error::Unsupported(
            "canonical-operator evolution supports polynomial couplings of degree <= 2".into(),
        ));
    }
    cfg.validate()?;
    let c0 = crate::linalg::commutator(&s0.q_q, &s0.p_q);
    let mut s = s0.clone();
    let mut record = EvolutionRecord::new(&["comm_drift", "herm_defect"]);
    record.push_row(0.0, &[0.0, s.hermiticity_defect()]);
    let dt = cfg.dt;
    let steps = cfg.n_steps();
    type Four = (CMat, CMat, CMat, CMat);
    let rhs = |y: &Four| -> Result<Four> {
        let (f_c, f_q) = forces(phi, &y.0, &y.2)?;
        Ok((y.1.clone(), f_c, y.3.clone(), f_q))
    };
    let add = |y: &Four, k: &Four, w: f64| -> Four {
        (
            &y.0 + &k.0.mapv(|z| z * w),
            &y.1 + &k.1.mapv(|z| z * w),
            &y.2 + &k.2.mapv(|z| z * w),
            &y.3 + &k.3.mapv(|z| z * w),
        )
    };
    for step in 1..=steps {
        let y = (s.q_c.clone(), s.p_c.clone(), s.q_q.clone(), s.p_q.clone());
        let k1 = rhs(&y)?;
        let k2 = rhs(&add(&y, &k1, dt / 2.0))?;
        let k3 = rhs(&add(&y, &k2, dt / 2.0))?;
        let k4 = rhs(&add(&y, &k3, dt))?;
        let mut next = add(&y, &k1, dt / 6.0);
        next = add(&next, &k2, dt / 3.0);
        next = add(&next, &k3, dt / 3.0);
        next = add(&next, &k4, dt / 6.0);
        s = CanonicalOperatorState {
            q_c: next.0,
            p_c: next.1,
            q_q: next.2,
            p_q: next.3,
            hbar: s.hbar,
        };
        if step % cfg.stride == 0 || step == steps {
            record.push_row(
                step as f64 * dt,
                &[s.commutator_drift(&c0), s.hermiticity_defect()],
            );
        }
    }
    Ok((record, s))
}

/// One classical two-body trajectory of the canonical symbols.
#[derive(Debug, Clone, Copy)]
pub struct SymbolPoint {
    pub q1: f64,
    pub p1: f64,
    pub q2: f64,
    pub p2: f64,
}

/// Trajectory ensemble seeded on the support of an initial Wigner function,
/// with quadrature weights. Snapshots are stored at the recorded times.
#[derive(Debug, Clone)]
pub struct SymbolTrajectorySet {
    pub times: Vec<f64>,
    /// `snapshots[k][traj]` at `times[k]`.
    pub snapshots: Vec<Vec<SymbolPoint>>,
    /// Signed quadrature weights `(2 pi hbar)^-1 w4 D0(node)`; they sum to the
    /// normalization of `D0`.
    pub weights: Vec<f64>,
    /// Fraction of |D0| mass discarded by the support threshold.
    pub discarded_mass: f64,
    pub hbar: f64,
}

impl SymbolTrajectorySet {
    pub fn weight_sum(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Velocity-Verlet trajectories from every 4D grid node where `|D0|` exceeds
/// `support_threshold * max |D0|`. Works for any differentiable coupling.
pub fn evolve_wigner_symbols(
    d0: &WignerField,
    phi: &Potential,
    cfg: &IntegratorConfig,
    support_threshold: f64,
) -> Result<SymbolTrajectorySet> {
    d0.require_role(Role::State)?;
    cfg.validate()?;
    let axes = d0.axes();
    let hbar_norm = 2.0 * std::f64::consts::PI;
    let _ = hbar_norm;
    let (nq1, np1, n2, np2) =
        (axes.classical.q().len(), axes.classical.p().len(), axes.q2.len(), axes.p2.len());
    let max_abs = d0.max_abs().max(1e-300);
    let mut points = Vec::new();
    let mut weights = Vec::new();
    let mut kept = 0.0;
    let mut total = 0.0;
    // weight measure per node
    let hbar = {
        // p2 lattice spacing is pi hbar / L
        axes.p2.spacing() * axes.q2.extent() / std::f64::consts::PI
    };
    let w_node = axes.weight4() / (2.0 * std::f64::consts::PI * hbar);
    for i1 in 0..nq1 {
        for i2 in 0..np1 {
            for m in 0..n2 {
                for j in 0..np2 {
                    let v = d0.data[[i1, i2, m, j]];
                    total += v.abs();
                    if v.abs() > support_threshold * max_abs {
                        kept += v.abs();
                        points.push(SymbolPoint {
                            q1: axes.classical.q().point(i1),
                            p1: axes.classical.p().point(i2),
                            q2: axes.q2.point(m),
                            p2: axes.p2.point(j),
                        });
                        weights.push(v * w_node);
                    }
                }
            }
        }
    }
    let discarded_mass = if total > 0.0 { 1.0 - kept / total } else { 0.0 };

    let steps = cfg.n_steps();
    let dt = cfg.dt;
    let mut times = vec![0.0];
    let mut snapshots = vec![points.clone()];
    let mut current = points;
    for step in 1..=steps {
        for pt in current.iter_mut() {
            // velocity Verlet on the two-body system
            let f1 = -phi.d_dq(pt.q1, pt.q2)?;
            let f2 = -phi.d_dxi(pt.q1, pt.q2)?;
            let p1_half = pt.p1 + 0.5 * dt * f1;
            let p2_half = pt.p2 + 0.5 * dt * f2;
            pt.q1 += dt * p1_half;
            pt.q2 += dt * p2_half;
            let f1n = -phi.d_dq(pt.q1, pt.q2)?;
            let f2n = -phi.d_dxi(pt.q1, pt.q2)?;
            pt.p1 = p1_half + 0.5 * dt * f1n;
            pt.p2 = p2_half + 0.5 * dt * f2n;
        }
        if step % cfg.stride == 0 || step == steps {
            times.push(step as f64 * dt);
            snapshots.push(current.clone());
        }
    }
    Ok(SymbolTrajectorySet { times, snapshots, weights, discarded_mass, hbar })
}

/// Mean value of an observable symbol along the trajectories at a recorded
/// time: the evolved symbol is evaluated against the frozen initial Wigner
/// weights.
pub fn mean_from_symbols(
    traj: &SymbolTrajectorySet,
    observable: impl Fn(f64, f64, f64, f64) -> f64,
    t: f64,
) -> Result<f64> {
    let horizon = *traj.times.last().unwrap_or(&0.0);
    let idx = traj
        .times
        .iter()
        .position(|&tk| (tk - t).abs() < 1e-9)
        .ok_or(Error::Horizon { requested: t, horizon })?;
    let snap = &traj.snapshots[idx];
    let mut acc = 0.0;
    for (pt, w) in snap.iter().zip(traj.weights.iter()) {
        acc += w * observable(pt.q1, pt.p1, pt.q2, pt.p2);
    }
    Ok(acc)
}

/// Two-body energy of one symbol trajectory.
pub fn symbol_energy(pt: &SymbolPoint, phi: &Potential) -> Result<f64> {
    Ok(0.5 * pt.p1 * pt.p1 + 0.5 * pt.p2 * pt.p2 + phi.eval(pt.q1, pt.q2)?)
}
