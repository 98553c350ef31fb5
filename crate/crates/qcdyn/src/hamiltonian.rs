//! The hybrid Hamiltonian `H = H_c I + H_q + H_int` for one classical and one
//! quantum particle in 1D with unit masses: `H_c = p^2/2`, `H_q = phat^2/2`
//! discretized on the quantum grid, and `H_int` diagonal in the position
//! representation with entries `V(q, xi_j)`.

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fourier::circulant_from_symbol;
use crate::grid::{Boundary, PhaseSpaceGrid, SpatialGrid};
use crate::linalg::{hermiticity_defect, one_norm, CMat};
use crate::potential::Potential;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KineticScheme {
    /// Central 3-point finite difference. Works on periodic and bounded grids.
    FiniteDifference,
    /// Exact grid dispersion via FFT. Periodic grids only.
    Spectral,
}

#[derive(Debug, Clone)]
pub struct HybridHamiltonian {
    pgrid: PhaseSpaceGrid,
    qgrid: SpatialGrid,
    hbar: f64,
    kinetic: KineticScheme,
    potential: Potential,
    /// Kinetic-plus-nothing quantum part, n x n.
    h_q: CMat,
    /// Classical kinetic energy p^2/2 sampled on the p axis.
    h_c_p: Vec<f64>,
    /// Interaction diagonal: `h_int[iq][j] = V(q_iq, xi_j)`.
    h_int: Array2<f64>,
}

/// Position operator `diag(xi_j)`.
pub fn position_operator(grid: &SpatialGrid) -> CMat {
    Array2::from_shape_fn((grid.len(), grid.len()), |(i, j)| {
        if i == j { Complex64::new(grid.point(i), 0.0) } else { Complex64::ZERO }
    })
}

/// Momentum operator `-i hbar d/dxi` in the chosen scheme.
pub fn momentum_operator(grid: &SpatialGrid, scheme: KineticScheme, hbar: f64) -> Result<CMat> {
    let n = grid.len();
    let dx = grid.spacing();
    match scheme {
        KineticScheme::FiniteDifference => {
            let mut m = CMat::zeros((n, n));
            let c = Complex64::new(0.0, -hbar / (2.0 * dx));
            for i in 0..n {
                match grid.boundary() {
                    Boundary::Periodic => {
                        m[[i, (i + 1) % n]] += c;
                        m[[i, (i + n - 1) % n]] -= c;
                    }
                    Boundary::Bounded => {
                        if i + 1 < n {
                            m[[i, i + 1]] += c;
                        }
                        if i >= 1 {
                            m[[i, i - 1]] -= c;
                        }
                    }
                }
            }
            Ok(m)
        }
        KineticScheme::Spectral => {
            if !grid.is_periodic() {
                return Err(Error::Unsupported("spectral momentum needs a periodic grid".into()));
            }
            let momenta = grid.fft_momenta(hbar);
            let n_len = grid.len();
            let mut m = circulant_from_symbol(n_len, |k| Complex64::new(momenta[k], 0.0));
            // Circulant of a real odd-ish symbol; clean up roundoff asymmetry.
            m = crate::linalg::hermitize(&m);
            Ok(m)
        }
    }
}

/// Kinetic matrix `-(hbar^2/2) Lap_xi` in the chosen scheme.
pub fn kinetic_matrix(grid: &SpatialGrid, scheme: KineticScheme, hbar: f64) -> Result<CMat> {
    let n = grid.len();
    let dx = grid.spacing();
    match scheme {
        KineticScheme::FiniteDifference => {
            let mut m = CMat::zeros((n, n));
            let c = hbar * hbar / (2.0 * dx * dx);
            for i in 0..n {
                m[[i, i]] = Complex64::new(2.0 * c, 0.0);
                match grid.boundary() {
                    Boundary::Periodic => {
                        m[[i, (i + 1) % n]] = Complex64::new(-c, 0.0);
                        m[[i, (i + n - 1) % n]] = Complex64::new(-c, 0.0);
                    }
                    Boundary::Bounded => {
                        if i + 1 < n {
                            m[[i, i + 1]] = Complex64::new(-c, 0.0);
                        }
                        if i >= 1 {
                            m[[i, i - 1]] = Complex64::new(-c, 0.0);
                        }
                    }
                }
            }
            Ok(m)
        }
        KineticScheme::Spectral => {
            if !grid.is_periodic() {
                return Err(Error::Unsupported("spectral kinetic needs a periodic grid".into()));
            }
            let momenta = grid.fft_momenta(hbar);
            let m = circulant_from_symbol(grid.len(), |k| {
                Complex64::new(momenta[k] * momenta[k] / 2.0, 0.0)
            });
            Ok(crate::linalg::hermitize(&m))
        }
    }
}

pub fn build_hamiltonian(
    pgrid: &PhaseSpaceGrid,
    qgrid: &SpatialGrid,
    phi: &Potential,
    hbar: f64,
    kinetic: KineticScheme,
) -> Result<HybridHamiltonian> {
    if !(hbar > 0.0) {
        return Err(Error::Config(format!("hbar must be positive, got {hbar}")));
    }
    let h_q = kinetic_matrix(qgrid, kinetic, hbar)?;
    let defect = hermiticity_defect(&h_q);
    if defect > 1e-12 * one_norm(&h_q).max(1.0) {
        return Err(Error::NumericalConsistency(format!(
            "kinetic matrix not Hermitian, defect {defect:.3e}"
        )));
    }
    // Tabulated potentials must cover every reachable separation.
    if let Potential::Tabulated(t) = phi {
        let (r_lo, r_hi) = t.range();
        let reach_lo = qgrid.min() - pgrid.q().max();
        let reach_hi = qgrid.max() - pgrid.q().min();
        if reach_lo < r_lo || reach_hi > r_hi {
            return Err(Error::Range(format!(
                "tabulated range [{r_lo}, {r_hi}] does not cover reachable separations [{reach_lo}, {reach_hi}]"
            )));
        }
    }
    let nq_cl = pgrid.q().len();
    let n = qgrid.len();
    let mut h_int = Array2::zeros((nq_cl, n));
    for iq in 0..nq_cl {
        let q = pgrid.q().point(iq);
        for j in 0..n {
            h_int[[iq, j]] = phi.eval(q, qgrid.point(j))?;
        }
    }
    let h_c_p: Vec<f64> = pgrid.p().iter().map(|p| 0.5 * p * p).collect();
    Ok(HybridHamiltonian {
        pgrid: pgrid.clone(),
        qgrid: qgrid.clone(),
        hbar,
        kinetic,
        potential: phi.clone(),
        h_q,
        h_c_p,
        h_int,
    })
}

impl HybridHamiltonian {
    pub fn pgrid(&self) -> &PhaseSpaceGrid {
        &self.pgrid
    }

    pub fn qgrid(&self) -> &SpatialGrid {
        &self.qgrid
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn kinetic_scheme(&self) -> KineticScheme {
        self.kinetic
    }

    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    pub fn h_q(&self) -> &CMat {
        &self.h_q
    }

    /// `H_c(p) = p^2/2` at momentum index `ip`.
    pub fn h_c(&self, ip: usize) -> f64 {
        self.h_c_p[ip]
    }

    /// Interaction diagonal at classical position index `iq`.
    pub fn h_int_diag(&self, iq: usize) -> ndarray::ArrayView1<'_, f64> {
        self.h_int.row(iq)
    }

    /// Full quantum-side matrix at phase point `(iq, ip)`:
    /// `H_c(p) I + h_q + diag(V(q, xi))`.
    pub fn matrix_at(&self, iq: usize, ip: usize) -> CMat {
        let n = self.qgrid.len();
        let mut m = self.h_q.clone();
        let hc = self.h_c_p[ip];
        for j in 0..n {
            m[[j, j]] += Complex64::new(hc + self.h_int[[iq, j]], 0.0);
        }
        m
    }

    /// Upper bound estimate of the quantum-side energy scale, used by the
    /// stability guard.
    pub fn energy_scale(&self) -> f64 {
        let kinetic_max = match self.kinetic {
            KineticScheme::FiniteDifference => {
                2.0 * self.hbar * self.hbar / self.qgrid.spacing().powi(2)
            }
            KineticScheme::Spectral => {
                let p_max = std::f64::consts::PI * self.hbar / self.qgrid.spacing();
                p_max * p_max / 2.0
            }
        };
        let v_max = self.h_int.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        kinetic_max + v_max
    }
}
