//! Hybrid states and observables, marginals, the correlation operator, and
//! the dual mean-value functional.
//!
//! A `HybridDensityField` attaches an `n x n` complex matrix to every point of
//! the classical phase-space grid. State-role matrices hold the kernel values
//! of the density operator (trace pairing carries one factor of `dxi`);
//! observable-role matrices are plain operators on the quantum grid. The mean
//! value pairs the two: `<A> = sum_X w Tr(A(X) D(X)) dxi`.

use ndarray::{Array1, Array2, Array4};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{PhaseSpaceGrid, SpatialGrid};
use crate::hamiltonian::{momentum_operator, HybridHamiltonian, KineticScheme};
use crate::linalg::CMat;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    State,
    Observable,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassicalPhasePoint {
    pub q: f64,
    pub p: f64,
}

/// Nonnegative distribution on the classical phase-space grid.
#[derive(Debug, Clone)]
pub struct ClassicalDistribution {
    pub grid: PhaseSpaceGrid,
    pub data: Array2<f64>,
}

impl ClassicalDistribution {
    pub fn normalization(&self) -> f64 {
        self.data.sum() * self.grid.weight()
    }

    pub fn mean_q(&self) -> f64 {
        let mut acc = 0.0;
        for (iq, q) in self.grid.q().iter().enumerate() {
            for ip in 0..self.grid.p().len() {
                acc += q * self.data[[iq, ip]];
            }
        }
        acc * self.grid.weight()
    }

    pub fn mean_p(&self) -> f64 {
        let mut acc = 0.0;
        for iq in 0..self.grid.q().len() {
            for (ip, p) in self.grid.p().iter().enumerate() {
                acc += p * self.data[[iq, ip]];
            }
        }
        acc * self.grid.weight()
    }

    /// Normalized Gaussian blob centered at `x0` with widths `(sigma_q, sigma_p)`.
    pub fn gaussian(
        grid: &PhaseSpaceGrid,
        x0: ClassicalPhasePoint,
        sigma: (f64, f64),
    ) -> Result<Self> {
        let (sq, sp) = sigma;
        if sq < 2.0 * grid.q().spacing() || sp < 2.0 * grid.p().spacing() {
            return Err(Error::Resolution(format!(
                "smearing ({sq}, {sp}) narrower than two grid cells ({}, {})",
                2.0 * grid.q().spacing(),
                2.0 * grid.p().spacing()
            )));
        }
        let mut data = Array2::zeros((grid.q().len(), grid.p().len()));
        for (iq, q) in grid.q().iter().enumerate() {
            let gq = (-(q - x0.q).powi(2) / (2.0 * sq * sq)).exp();
            for (ip, p) in grid.p().iter().enumerate() {
                data[[iq, ip]] = gq * (-(p - x0.p).powi(2) / (2.0 * sp * sp)).exp();
            }
        }
        let total = data.sum() * grid.weight();
        data.mapv_inplace(|v| v / total);
        Ok(ClassicalDistribution { grid: grid.clone(), data })
    }
}

/// Complex amplitudes on the quantum grid, unit norm under `sum |psi|^2 dxi`.
#[derive(Debug, Clone)]
pub struct WaveFunction {
    pub grid: SpatialGrid,
    pub amps: Array1<Complex64>,
}

impl WaveFunction {
    pub fn from_samples(grid: SpatialGrid, amps: Array1<Complex64>) -> Result<Self> {
        if amps.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "wavefunction samples ({}) do not match grid ({})",
                amps.len(),
                grid.len()
            )));
        }
        let mut wf = WaveFunction { grid, amps };
        let n = wf.norm();
        if n == 0.0 {
            return Err(Error::Config("wavefunction samples are all zero".into()));
        }
        wf.amps.mapv_inplace(|z| z / n);
        Ok(wf)
    }

    /// Gaussian wavepacket with position spread `width` and mean momentum
    /// `momentum`, normalized on the grid.
    pub fn gaussian(grid: &SpatialGrid, center: f64, width: f64, momentum: f64, hbar: f64) -> Result<Self> {
        if !(width > 0.0) {
            return Err(Error::Config(format!("wavepacket width must be positive, got {width}")));
        }
        let amps = Array1::from_iter(grid.iter().map(|x| {
            let envelope = (-(x - center).powi(2) / (4.0 * width * width)).exp();
            Complex64::from_polar(envelope, momentum * x / hbar)
        }));
        Self::from_samples(grid.clone(), amps)
    }

    /// `sqrt(sum |psi|^2 dxi)`.
    pub fn norm(&self) -> f64 {
        (self.amps.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.spacing()).sqrt()
    }

    pub fn mean_position(&self) -> f64 {
        self.grid
            .iter()
            .zip(self.amps.iter())
            .map(|(x, z)| x * z.norm_sqr())
            .sum::<f64>()
            * self.grid.spacing()
    }

    pub fn mean_momentum(&self, scheme: KineticScheme, hbar: f64) -> Result<f64> {
        let p = momentum_operator(&self.grid, scheme, hbar)?;
        let mut acc = Complex64::ZERO;
        for i in 0..self.grid.len() {
            let mut row = Complex64::ZERO;
            for j in 0..self.grid.len() {
                row += p[[i, j]] * self.amps[j];
            }
            acc += self.amps[i].conj() * row;
        }
        Ok(acc.re * self.grid.spacing())
    }

    /// Rank-one projector with kernel values `psi_i conj(psi_j)`.
    pub fn projector(&self) -> CMat {
        let n = self.grid.len();
        Array2::from_shape_fn((n, n), |(i, j)| self.amps[i] * self.amps[j].conj())
    }
}

#[derive(Debug, Clone)]
pub struct HybridDensityField {
    pgrid: PhaseSpaceGrid,
    qgrid: SpatialGrid,
    role: Role,
    /// Indexed `[iq][ip][a][b]`.
    pub data: Array4<Complex64>,
}

impl HybridDensityField {
    pub fn zeros(pgrid: &PhaseSpaceGrid, qgrid: &SpatialGrid, role: Role) -> Self {
        let data = Array4::zeros((pgrid.q().len(), pgrid.p().len(), qgrid.len(), qgrid.len()));
        HybridDensityField { pgrid: pgrid.clone(), qgrid: qgrid.clone(), role, data }
    }

    pub fn pgrid(&self) -> &PhaseSpaceGrid {
        &self.pgrid
    }

    pub fn qgrid(&self) -> &SpatialGrid {
        &self.qgrid
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn with_role(mut self, role: Role) -> Self {
        self.role = role;
        self
    }

    pub fn require_role(&self, expected: Role) -> Result<()> {
        if self.role == expected {
            Ok(())
        } else {
            Err(Error::RoleError { expected, got: self.role })
        }
    }

    pub fn assert_same_grids(&self, other: &Self, what: &str) -> Result<()> {
        self.pgrid.assert_same(&other.pgrid, what)?;
        self.qgrid.assert_same(&other.qgrid, what)
    }

    pub fn matrix_at(&self, iq: usize, ip: usize) -> ndarray::ArrayView2<'_, Complex64> {
        self.data.slice(ndarray::s![iq, ip, .., ..])
    }

    /// `sum_X w Re Tr(D(X)) dxi`.
    pub fn normalization(&self) -> f64 {
        let n = self.qgrid.len();
        let mut acc = 0.0;
        for iq in 0..self.pgrid.q().len() {
            for ip in 0..self.pgrid.p().len() {
                for a in 0..n {
                    acc += self.data[[iq, ip, a, a]].re;
                }
            }
        }
        acc * self.pgrid.weight() * self.qgrid.spacing()
    }

    /// Max over phase points of the max-entry deviation from Hermiticity.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.qgrid.len();
        let mut d = 0.0_f64;
        for iq in 0..self.pgrid.q().len() {
            for ip in 0..self.pgrid.p().len() {
                for a in 0..n {
                    for b in a..n {
                        d = d.max(
                            (self.data[[iq, ip, a, b]] - self.data[[iq, ip, b, a]].conj()).norm(),
                        );
                    }
                }
            }
        }
        d
    }

    /// Replace every matrix by its Hermitian part, returning the size of the
    /// correction in the field norm.
    pub fn resymmetrize(&mut self) -> f64 {
        let n = self.qgrid.len();
        let mut correction_sq = 0.0;
        for iq in 0..self.pgrid.q().len() {
            for ip in 0..self.pgrid.p().len() {
                for a in 0..n {
                    for b in a..n {
                        let za = self.data[[iq, ip, a, b]];
                        let zb = self.data[[iq, ip, b, a]];
                        let sym = 0.5 * (za + zb.conj());
                        let delta = za - sym;
                        correction_sq +=
                            if a == b { delta.norm_sqr() } else { 2.0 * delta.norm_sqr() };
                        self.data[[iq, ip, a, b]] = sym;
                        self.data[[iq, ip, b, a]] = sym.conj();
                    }
                }
            }
        }
        (correction_sq * self.pgrid.weight() * self.qgrid.spacing()).sqrt()
    }

    /// Weighted Frobenius norm `sqrt(sum_X w Tr(A^dagger A) dxi)`.
    pub fn field_norm(&self) -> f64 {
        let s: f64 = self.data.iter().map(|z| z.norm_sqr()).sum();
        (s * self.pgrid.weight() * self.qgrid.spacing()).sqrt()
    }

    pub fn max_entry(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, z| m.max(z.norm()))
    }

    /// Classical marginal `Tr D(X) dxi`.
    pub fn marginal_classical(&self) -> Result<ClassicalDistribution> {
        self.require_role(Role::State)?;
        let n = self.qgrid.len();
        let dxi = self.qgrid.spacing();
        let mut data = Array2::zeros((self.pgrid.q().len(), self.pgrid.p().len()));
        for iq in 0..self.pgrid.q().len() {
            for ip in 0..self.pgrid.p().len() {
                let mut tr = 0.0;
                for a in 0..n {
                    tr += self.data[[iq, ip, a, a]].re;
                }
                data[[iq, ip]] = tr * dxi;
            }
        }
        Ok(ClassicalDistribution { grid: self.pgrid.clone(), data })
    }

    /// Quantum marginal `sum_X w D(X)`.
    pub fn marginal_quantum(&self) -> Result<CMat> {
        self.require_role(Role::State)?;
        let n = self.qgrid.len();
        let w = self.pgrid.weight();
        let mut rho = CMat::zeros((n, n));
        for iq in 0..self.pgrid.q().len() {
            for ip in 0..self.pgrid.p().len() {
                for a in 0..n {
                    for b in 0..n {
                        rho[[a, b]] += self.data[[iq, ip, a, b]];
                    }
                }
            }
        }
        rho.mapv_inplace(|z| z * w);
        Ok(rho)
    }

    /// Correlation operator `g(X) = D(X) - D_c(X) rho`. Both marginals of the
    /// result vanish identically at the quadrature level.
    pub fn correlation(&self) -> Result<HybridDensityField> {
        self.require_role(Role::State)?;
        let dc = self.marginal_classical()?;
        let rho = self.marginal_quantum()?;
        let n = self.qgrid.len();
        let mut g = self.clone().with_role(Role::Observable);
        for iq in 0..self.pgrid.q().len() {
            for ip in 0..self.pgrid.p().len() {
                let c = dc.data[[iq, ip]];
                for a in 0..n {
                    for b in 0..n {
                        g.data[[iq, ip, a, b]] -= rho[[a, b]] * c;
                    }
                }
            }
        }
        Ok(g)
    }

    /// Norm of the correlation operator, `field_norm(correlation(D))`.
    pub fn correlation_norm(&self) -> Result<f64> {
        Ok(self.correlation()?.field_norm())
    }
}

/// Uncorrelated pure state: a normalized phase-space Gaussian (the grid
/// surrogate for a Dirac measure) times the projector onto `psi0`.
pub fn uncorrelated_pure_state(
    pgrid: &PhaseSpaceGrid,
    x0: ClassicalPhasePoint,
    psi0: &WaveFunction,
    sigma: (f64, f64),
) -> Result<HybridDensityField> {
    let blob = ClassicalDistribution::gaussian(pgrid, x0, sigma)?;
    let proj = psi0.projector();
    let n = psi0.grid.len();
    let mut field = HybridDensityField::zeros(pgrid, &psi0.grid, Role::State);
    for iq in 0..pgrid.q().len() {
        for ip in 0..pgrid.p().len() {
            let g = Complex64::new(blob.data[[iq, ip]], 0.0);
            for a in 0..n {
                for b in 0..n {
                    field.data[[iq, ip, a, b]] = g * proj[[a, b]];
                }
            }
        }
    }
    Ok(field)
}

/// `<A> = sum_X w Tr(A(X) D(X)) dxi`. The imaginary residue must stay below
/// `1e-9 * max(1, |result|)`; it is discarded after the check.
pub fn mean_value(a: &HybridDensityField, d: &HybridDensityField) -> Result<f64> {
    a.assert_same_grids(d, "mean_value")?;
    a.require_role(Role::Observable)?;
    d.require_role(Role::State)?;
    let n = a.qgrid.len();
    let mut acc = Complex64::ZERO;
    for iq in 0..a.pgrid.q().len() {
        for ip in 0..a.pgrid.p().len() {
            for i in 0..n {
                for j in 0..n {
                    acc += a.data[[iq, ip, i, j]] * d.data[[iq, ip, j, i]];
                }
            }
        }
    }
    acc *= a.pgrid.weight() * a.qgrid.spacing();
    let tol = 1e-9 * acc.re.abs().max(1.0);
    if acc.im.abs() > tol {
        return Err(Error::NumericalConsistency(format!(
            "mean value has imaginary residue {:.3e} (re = {:.6e})",
            acc.im, acc.re
        )));
    }
    Ok(acc.re)
}

/// The Hamiltonian as an observable field: `H_c(X) I + h_q + diag(V(q, xi))`
/// at every phase point.
pub fn hamiltonian_observable(h: &HybridHamiltonian) -> HybridDensityField {
    let pgrid = h.pgrid();
    let qgrid = h.qgrid();
    let n = qgrid.len();
    let mut field = HybridDensityField::zeros(pgrid, qgrid, Role::Observable);
    for iq in 0..pgrid.q().len() {
        let diag = h.h_int_diag(iq);
        for ip in 0..pgrid.p().len() {
            let hc = h.h_c(ip);
            for a in 0..n {
                for b in 0..n {
                    field.data[[iq, ip, a, b]] = h.h_q()[[a, b]];
                }
                field.data[[iq, ip, a, a]] += Complex64::new(hc + diag[a], 0.0);
            }
        }
    }
    field
}

/// Identity observable at every phase point.
pub fn identity_observable(pgrid: &PhaseSpaceGrid, qgrid: &SpatialGrid) -> HybridDensityField {
    let mut field = HybridDensityField::zeros(pgrid, qgrid, Role::Observable);
    for iq in 0..pgrid.q().len() {
        for ip in 0..pgrid.p().len() {
            for a in 0..qgrid.len() {
                field.data[[iq, ip, a, a]] = Complex64::new(1.0, 0.0);
            }
        }
    }
    field
}

/// Classical observable `f(q, p) I`.
pub fn classical_observable(
    pgrid: &PhaseSpaceGrid,
    qgrid: &SpatialGrid,
    f: impl Fn(f64, f64) -> f64,
) -> HybridDensityField {
    let mut field = HybridDensityField::zeros(pgrid, qgrid, Role::Observable);
    for (iq, q) in pgrid.q().iter().enumerate() {
        for (ip, p) in pgrid.p().iter().enumerate() {
            let v = Complex64::new(f(q, p), 0.0);
            for a in 0..qgrid.len() {
                field.data[[iq, ip, a, a]] = v;
            }
        }
    }
    field
}

/// Quantum observable `M` (independent of the phase point).
pub fn quantum_observable(
    pgrid: &PhaseSpaceGrid,
    qgrid: &SpatialGrid,
    m: &CMat,
) -> HybridDensityField {
    let n = qgrid.len();
    assert_eq!(m.nrows(), n);
    let mut field = HybridDensityField::zeros(pgrid, qgrid, Role::Observable);
    for iq in 0..pgrid.q().len() {
        for ip in 0..pgrid.p().len() {
            for a in 0..n {
                for b in 0..n {
                    field.data[[iq, ip, a, b]] = m[[a, b]];
                }
            }
        }
    }
    field
}

/// Mean total energy, `mean_value(H as observable, D)`.
pub fn total_energy(d: &HybridDensityField, h: &HybridHamiltonian) -> Result<f64> {
    mean_value(&hamiltonian_observable(h), d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::SpatialGrid;
    use crate::hamiltonian::build_hamiltonian;
    use crate::potential::Potential;

    fn setup() -> (PhaseSpaceGrid, SpatialGrid, WaveFunction, HybridDensityField) {
        let q = SpatialGrid::periodic(-6.0, 6.0, 12).unwrap();
        let p = SpatialGrid::periodic(-6.0, 6.0, 12).unwrap();
        let pgrid = PhaseSpaceGrid::new(q, p).unwrap();
        let xi = SpatialGrid::periodic(-8.0, 8.0, 24).unwrap();
        let psi = WaveFunction::gaussian(&xi, 0.5, 1.0, 0.3, 1.0).unwrap();
        let d = uncorrelated_pure_state(
            &pgrid,
            ClassicalPhasePoint { q: 1.0, p: -1.0 },
            &psi,
            (2.5, 2.5),
        )
        .unwrap();
        (pgrid, xi, psi, d)
    }

    #[test]
    fn product_state_invariants() {
        let (_, _, psi, d) = setup();
        assert!((d.normalization() - 1.0).abs() < 1e-12);
        assert!(d.hermiticity_defect() < 1e-14);

        // classical marginal recovers the blob, quantum marginal the projector
        let dc = d.marginal_classical().unwrap();
        assert!((dc.normalization() - 1.0).abs() < 1e-12);
        let rho = d.marginal_quantum().unwrap();
        let proj = psi.projector();
        let mut err = 0.0_f64;
        for i in 0..proj.nrows() {
            for j in 0..proj.ncols() {
                err = err.max((rho[[i, j]] - proj[[i, j]]).norm());
            }
        }
        assert!(err < 1e-12);

        // trace of quantum marginal is 1 (times dxi)
        let tr: f64 = (0..rho.nrows()).map(|i| rho[[i, i]].re).sum();
        assert!((tr * d.qgrid().spacing() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn correlation_of_product_vanishes() {
        let (_, _, _, d) = setup();
        let g = d.correlation().unwrap();
        assert!(g.max_entry() < 1e-12);
    }

    #[test]
    fn correlation_marginals_vanish_for_any_state() {
        // Deform the product state and verify both marginals of g vanish
        // identically (algebraic identity, not a smallness statement).
        let (_, _, _, mut d) = setup();
        let nq = d.pgrid().q().len();
        let np = d.pgrid().p().len();
        let n = d.qgrid().len();
        for iq in 0..nq {
            let ip = iq % np;
            for a in 0..n {
                for b in 0..n {
                    let bump = 0.01
                        * ((iq * 7 + a * 3 + b) % 5) as f64
                        * Complex64::new(1.0, if a == b { 0.0 } else { 0.3 });
                    d.data[[iq, ip, a, b]] += bump;
                    d.data[[iq, ip, b, a]] += bump.conj();
                }
            }
        }
        let total = d.normalization();
        d.data.mapv_inplace(|z| z / total);
        let g = d.correlation().unwrap();
        let g_as_state = g.clone().with_role(Role::State);
        let gc = g_as_state.marginal_classical().unwrap();
        assert!(gc.data.iter().fold(0.0_f64, |m, v| m.max(v.abs())) < 1e-12);
        let gq = g_as_state.marginal_quantum().unwrap();
        assert!(crate::linalg::max_abs(&gq) < 1e-12);
    }

    #[test]
    fn traceless_quantum_deformation_keeps_classical_marginal() {
        let (_, _, _, d0) = setup();
        let mut d = d0.clone();
        let n = d.qgrid().len();
        // g_test: traceless Hermitian in the quantum factor at every X
        for iq in 0..d.pgrid().q().len() {
            for ip in 0..d.pgrid().p().len() {
                d.data[[iq, ip, 0, 0]] += Complex64::new(1e-3, 0.0);
                d.data[[iq, ip, n - 1, n - 1]] -= Complex64::new(1e-3, 0.0);
            }
        }
        let m0 = d0.marginal_classical().unwrap();
        let m1 = d.marginal_classical().unwrap();
        let mut err = 0.0_f64;
        for (a, b) in m0.data.iter().zip(m1.data.iter()) {
            err = err.max((a - b).abs());
        }
        assert!(err < 1e-14);
    }

    #[test]
    fn role_checks() {
        let (_, _, _, d) = setup();
        let obs = d.clone().with_role(Role::Observable);
        assert!(obs.marginal_classical().is_err());
        assert!(mean_value(&obs, &obs).is_err());
    }

    #[test]
    fn identity_mean_is_one() {
        let (pgrid, xi, _, d) = setup();
        let one = identity_observable(&pgrid, &xi);
        assert!((mean_value(&one, &d).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn classical_position_mean_matches_center() {
        let (pgrid, xi, _, d) = setup();
        let q_obs = classical_observable(&pgrid, &xi, |q, _| q);
        let v = mean_value(&q_obs, &d).unwrap();
        // blob centered at q0 = 1.0; asymmetric domain truncation keeps the
        // sampled mean within one cell of the center
        assert!((v - 1.0).abs() < d.pgrid().q().spacing());
    }

    #[test]
    fn total_energy_matches_independent_quadrature() {
        // Independent oracle: direct quadrature of the three energy pieces
        // using the analytic forms and the same discrete operators.
        let (pgrid, xi, psi, d) = setup();
        let phi = Potential::harmonic(0.7).unwrap();
        let h = build_hamiltonian(&pgrid, &xi, &phi, 1.0, KineticScheme::Spectral).unwrap();
        let e = total_energy(&d, &h).unwrap();

        let blob = d.marginal_classical().unwrap();
        let mut e_cl = 0.0;
        for iq in 0..pgrid.q().len() {
            for (ip, p) in pgrid.p().iter().enumerate() {
                e_cl += 0.5 * p * p * blob.data[[iq, ip]];
            }
        }
        e_cl *= pgrid.weight();

        let mut e_q = 0.0;
        for i in 0..xi.len() {
            let mut row = Complex64::ZERO;
            for j in 0..xi.len() {
                row += h.h_q()[[i, j]] * psi.amps[j];
            }
            e_q += (psi.amps[i].conj() * row).re;
        }
        e_q *= xi.spacing();

        let mut e_int = 0.0;
        for (iq, q) in pgrid.q().iter().enumerate() {
            let mut pq = 0.0;
            for ip in 0..pgrid.p().len() {
                pq += blob.data[[iq, ip]];
            }
            let mut v = 0.0;
            for (j, x) in xi.iter().enumerate() {
                v += phi.eval(q, x).unwrap() * psi.amps[j].norm_sqr();
            }
            e_int += pq * v * xi.spacing();
        }
        e_int *= pgrid.weight();

        assert!((e - (e_cl + e_q + e_int)).abs() < 1e-10, "{e} vs {}", e_cl + e_q + e_int);
    }

    #[test]
    fn zero_coupling_energy_separates() {
        let (pgrid, xi, _, d) = setup();
        let h0 = build_hamiltonian(&pgrid, &xi, &Potential::Zero, 1.0, KineticScheme::Spectral)
            .unwrap();
        let e_total = total_energy(&d, &h0).unwrap();
        // classical part + quantum part computed separately
        let h_cl = classical_observable(&pgrid, &xi, |_, p| 0.5 * p * p);
        let hq_obs = quantum_observable(&pgrid, &xi, h0.h_q());
        let e_cl = mean_value(&h_cl, &d).unwrap();
        let e_q = mean_value(&hq_obs, &d).unwrap();
        assert!((e_total - e_cl - e_q).abs() < 1e-10);
    }

    #[test]
    fn narrow_smearing_rejected() {
        let (pgrid, _, psi, _) = setup();
        let r = uncorrelated_pure_state(
            &pgrid,
            ClassicalPhasePoint { q: 0.0, p: 0.0 },
            &psi,
            (0.5, 2.5),
        );
        assert!(matches!(r, Err(Error::Resolution(_))));
    }

    #[test]
    fn smearing_mean_converges_to_center() {
        let (pgrid, _, psi, _) = setup();
        let x0 = ClassicalPhasePoint { q: 1.0, p: -1.0 };
        let dq = pgrid.q().spacing();
        let mut prev = f64::INFINITY;
        for cells in [4.0, 3.0, 2.0] {
            let d = uncorrelated_pure_state(
                &pgrid,
                x0,
                &psi,
                (cells * dq, cells * pgrid.p().spacing()),
            )
            .unwrap();
            let blob = d.marginal_classical().unwrap();
            let err = (blob.mean_q() - x0.q).abs();
            assert!(err <= dq, "sigma = {cells} cells: mean error {err}");
            assert!(err <= prev + 1e-12);
            prev = err;
        }
    }

    #[test]
    fn wavefunction_moments() {
        let xi = SpatialGrid::periodic(-10.0, 10.0, 64).unwrap();
        let psi = WaveFunction::gaussian(&xi, 0.8, 1.1, 0.45, 1.0).unwrap();
        assert!((psi.norm() - 1.0).abs() < 1e-12);
        assert!((psi.mean_position() - 0.8).abs() < 1e-8);
        let p = psi.mean_momentum(KineticScheme::Spectral, 1.0).unwrap();
        assert!((p - 0.45).abs() < 1e-8);
    }
}
