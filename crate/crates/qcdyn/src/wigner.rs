//! Wigner (Weyl-symbol) representation on the grid.
//!
//! The quantum factor of a `WignerField` lives on `q2 x p2` where `q2` is the
//! periodic quantum grid itself (odd number of points `n`) and `p2` is the
//! half-step momentum lattice `pi hbar j / L`, `j = -n .. n-1` (2n bins
//! spanning the full grid momentum band). Two constructions fill it:
//!
//! * `wigner_transform` maps kernels/operators to symbols by a phase sum over
//!   the wrapped antidiagonals `(m+k, m-k)` using the minimum-image
//!   separation. For odd `n` the antidiagonal gather is a bijection, so the
//!   transform inverts exactly on arbitrary kernels. The symbol of the
//!   identity operator is exactly 1 on every bin, and the symbol of the
//!   finite-difference kinetic matrix is exactly its stencil dispersion
//!   `(hbar^2/dx^2)(1 - cos(p dx/hbar)) = p^2/2 + O(dx^2 p^4)`.
//!
//! * `wigner_of_pure_state` builds the phase-space portrait of a wavepacket
//!   directly: the wavefunction is spectrally upsampled to half-grid points
//!   and the offset products `psi(q+y/2) psi*(q-y/2)` are Fourier transformed
//!   over `y` without periodic wrapping. This is the faithful (alias-free)
//!   Wigner function: a Gaussian wavepacket gives a positive Gaussian.
//!
//! State-role inputs (kernel values) are scaled by `dx`, observable-role
//! inputs (operator entries) by 1, mirroring the kernel-vs-operator
//! convention of the configuration representation. With those scales the
//! normalization `(2 pi hbar)^-1 sum w4 D = 1` and the pairing identity
//! `(2 pi hbar)^-1 sum w4 A D = mean_value(A, D)` hold exactly for
//! transformed fields (term-by-term algebra, no quadrature error), and to
//! interpolation accuracy for constructor-built states.
//!
//! Fields must keep their momentum content inside the band: size `dx` so that
//! the state's momenta stay well below `pi hbar / dx`.

use ndarray::Array4;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fourier::FftPair;
use crate::grid::{PhaseSpaceGrid, SpatialGrid};
use crate::hamiltonian::HybridHamiltonian;
use crate::state::{
    hamiltonian_observable, ClassicalDistribution, ClassicalPhasePoint, HybridDensityField, Role,
    WaveFunction,
};

/// Axes of a 4D Wigner field: classical phase space times the quantum lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct WignerAxes {
    pub classical: PhaseSpaceGrid,
    pub q2: SpatialGrid,
    pub p2: SpatialGrid,
}

impl WignerAxes {
    pub fn weight4(&self) -> f64 {
        self.classical.weight() * self.q2.spacing() * self.p2.spacing()
    }

    pub fn assert_same(&self, other: &WignerAxes, what: &str) -> Result<()> {
        self.classical.assert_same(&other.classical, what)?;
        self.q2.assert_same(&other.q2, what)?;
        self.p2.assert_same(&other.p2, what)
    }

    pub fn for_quantum_grid(
        classical: &PhaseSpaceGrid,
        q2: &SpatialGrid,
        hbar: f64,
    ) -> Result<Self> {
        Ok(WignerAxes {
            classical: classical.clone(),
            q2: q2.clone(),
            p2: conjugate_momentum_grid(q2, hbar)?,
        })
    }
}

/// The momentum lattice conjugate to a periodic quantum grid with odd length:
/// half-step spacing `pi hbar / L`, `2n` bins covering the full band.
pub fn conjugate_momentum_grid(qgrid: &SpatialGrid, hbar: f64) -> Result<SpatialGrid> {
    if !qgrid.is_periodic() {
        return Err(Error::Unsupported("Wigner lattice needs a periodic quantum grid".into()));
    }
    let n = qgrid.len();
    if n % 2 == 0 {
        return Err(Error::Unsupported(format!(
            "Wigner lattice needs an odd number of quantum grid points, got {n}"
        )));
    }
    let dp = std::f64::consts::PI * hbar / qgrid.extent();
    let min = -dp * n as f64;
    SpatialGrid::periodic(min, min + dp * (2 * n) as f64, 2 * n)
}

fn check_p2(axes_p2: &SpatialGrid, qgrid: &SpatialGrid, hbar: f64) -> Result<()> {
    let lattice = conjugate_momentum_grid(qgrid, hbar)?;
    if (axes_p2.min() - lattice.min()).abs() > 1e-10 * lattice.spacing()
        || (axes_p2.max() - lattice.max()).abs() > 1e-10 * lattice.spacing()
        || axes_p2.len() != lattice.len()
    {
        return Err(Error::GridMismatch(
            "p2 axis is not the momentum lattice conjugate to the quantum grid".into(),
        ));
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct WignerField {
    axes: WignerAxes,
    role: Role,
    /// Indexed `[iq1][ip1][m][j]` with `m` on `q2` (n points) and `j` on `p2`
    /// (2n bins).
    pub data: Array4<f64>,
}

impl WignerField {
    pub fn zeros(axes: WignerAxes, role: Role) -> Self {
        let shape =
            (axes.classical.q().len(), axes.classical.p().len(), axes.q2.len(), axes.p2.len());
        WignerField { axes, role, data: Array4::zeros(shape) }
    }

    pub fn axes(&self) -> &WignerAxes {
        &self.axes
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

    /// `(2 pi hbar)^-1 sum w4 D` — unity for a normalized state.
    pub fn normalization(&self, hbar: f64) -> f64 {
        self.data.sum() * self.axes.weight4() / (2.0 * std::f64::consts::PI * hbar)
    }

    /// L2 norm with the `(2 pi hbar)^-1 w4` measure.
    pub fn field_norm(&self, hbar: f64) -> f64 {
        (self.data.iter().map(|v| v * v).sum::<f64>() * self.axes.weight4()
            / (2.0 * std::f64::consts::PI * hbar))
            .sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn min_value(&self) -> f64 {
        self.data.iter().fold(f64::INFINITY, |m, &v| m.min(v))
    }
}

/// Build a symbol field from a function of the four phase-space coordinates.
pub fn symbol_observable(axes: &WignerAxes, f: impl Fn(f64, f64, f64, f64) -> f64) -> WignerField {
    let mut w = WignerField::zeros(axes.clone(), Role::Observable);
    for (i1, q1) in axes.classical.q().iter().enumerate() {
        for (i2, p1) in axes.classical.p().iter().enumerate() {
            for (m, q2) in axes.q2.iter().enumerate() {
                for (j, p2) in axes.p2.iter().enumerate() {
                    w.data[[i1, i2, m, j]] = f(q1, p1, q2, p2);
                }
            }
        }
    }
    w
}

/// `<A>(t) = (2 pi hbar)^-1 sum w4 A D`.
pub fn mean_value_wigner(a: &WignerField, d: &WignerField, hbar: f64) -> Result<f64> {
    a.axes.assert_same(&d.axes, "mean_value_wigner")?;
    a.require_role(Role::Observable)?;
    d.require_role(Role::State)?;
    let mut acc = 0.0;
    for (x, y) in a.data.iter().zip(d.data.iter()) {
        acc += x * y;
    }
    Ok(acc * a.axes.weight4() / (2.0 * std::f64::consts::PI * hbar))
}

/// Minimum-image separation (in grid steps) of the antidiagonal pair
/// `(m+k, m-k)`: the symmetric representative of `2k mod n`.
fn pair_separation(k: usize, n: usize) -> i64 {
    let s = ((2 * k) % n) as i64;
    if s <= (n as i64 - 1) / 2 { s } else { s - n as i64 }
}

/// FFT bin (length 2n) of a separation or momentum index.
fn wrap_bin(sep: i64, two_n: usize) -> usize {
    sep.rem_euclid(two_n as i64) as usize
}

fn role_scale(role: Role, qgrid: &SpatialGrid) -> f64 {
    match role {
        Role::State => qgrid.spacing(),
        Role::Observable => 1.0,
    }
}

/// Weyl symbol of a kernel/operator field, classical point by classical point.
///
/// Exact inverse pair with `inverse_wigner_transform` for any field; the
/// pairing against another transformed field reproduces the configuration
/// mean value identically.
pub fn wigner_transform(field: &HybridDensityField, hbar: f64) -> Result<WignerField> {
    let qgrid = field.qgrid();
    let axes = WignerAxes::for_quantum_grid(field.pgrid(), qgrid, hbar)?;
    let n = qgrid.len();
    let two_n = 2 * n;
    let scale = role_scale(field.role(), qgrid);
    let mut out = WignerField::zeros(axes, field.role());
    let fft = FftPair::new(two_n);
    let mut buf = vec![Complex64::ZERO; two_n];
    let max_in = field.max_entry().max(1e-300);
    for iq in 0..field.pgrid().q().len() {
        for ip in 0..field.pgrid().p().len() {
            for m in 0..n {
                buf.iter_mut().for_each(|z| *z = Complex64::ZERO);
                for k in 0..n {
                    let slot = wrap_bin(pair_separation(k, n), two_n);
                    buf[slot] = field.data[[iq, ip, (m + k) % n, (m + n - k) % n]];
                }
                fft.forward(&mut buf);
                for j in 0..two_n {
                    let z = buf[wrap_bin(j as i64 - n as i64, two_n)] * scale;
                    if z.im.abs() > 1e-9 * (max_in * scale).max(1.0) {
                        return Err(Error::NumericalConsistency(format!(
                            "Wigner symbol has imaginary residue {:.3e}; input not Hermitian?",
                            z.im
                        )));
                    }
                    out.data[[iq, ip, m, j]] = z.re;
                }
            }
        }
    }
    Ok(out)
}

/// Exact inverse of `wigner_transform` on the conjugate lattice.
pub fn inverse_wigner_transform(w: &WignerField, hbar: f64) -> Result<HybridDensityField> {
    let qgrid = &w.axes.q2;
    check_p2(&w.axes.p2, qgrid, hbar)?;
    let n = qgrid.len();
    let two_n = 2 * n;
    let scale = role_scale(w.role(), qgrid);
    let mut out = HybridDensityField::zeros(&w.axes.classical, qgrid, w.role());
    let fft = FftPair::new(two_n);
    let mut buf = vec![Complex64::ZERO; two_n];
    for iq in 0..w.axes.classical.q().len() {
        for ip in 0..w.axes.classical.p().len() {
            for m in 0..n {
                for j in 0..two_n {
                    buf[wrap_bin(j as i64 - n as i64, two_n)] =
                        Complex64::new(w.data[[iq, ip, m, j]] / scale, 0.0);
                }
                fft.inverse(&mut buf);
                for k in 0..n {
                    let slot = wrap_bin(pair_separation(k, n), two_n);
                    out.data[[iq, ip, (m + k) % n, (m + n - k) % n]] = buf[slot];
                }
            }
        }
    }
    Ok(out)
}

/// Spectral upsampling of the wavefunction onto the half-step grid
/// (2n points, spacing dx/2). Values at the original nodes are unchanged.
fn upsample_wavefunction(psi: &WaveFunction) -> Vec<Complex64> {
    let n = psi.grid.len();
    let fft_n = FftPair::new(n);
    let fft_2n = FftPair::new(2 * n);
    let mut spec: Vec<Complex64> = psi.amps.iter().copied().collect();
    fft_n.forward(&mut spec);
    let mut padded = vec![Complex64::ZERO; 2 * n];
    for f in 0..n {
        let f_sym = if f <= n / 2 { f as i64 } else { f as i64 - n as i64 };
        padded[f_sym.rem_euclid(2 * n as i64) as usize] = spec[f] * 2.0;
    }
    fft_2n.inverse(&mut padded);
    padded
}

/// Wigner function of an uncorrelated pure state: normalized classical
/// Gaussian times the alias-free lattice Wigner function of `psi0`.
pub fn wigner_of_pure_state(
    pgrid: &PhaseSpaceGrid,
    x0: ClassicalPhasePoint,
    psi0: &WaveFunction,
    sigma: (f64, f64),
    hbar: f64,
) -> Result<WignerField> {
    let p2 = conjugate_momentum_grid(&psi0.grid, hbar)?;
    wigner_of_pure_state_on(pgrid, x0, psi0, sigma, hbar, &p2)
}

/// Same, but on a caller-supplied `p2` axis, which must be the conjugate
/// momentum lattice of the wavefunction grid.
pub fn wigner_of_pure_state_on(
    pgrid: &PhaseSpaceGrid,
    x0: ClassicalPhasePoint,
    psi0: &WaveFunction,
    sigma: (f64, f64),
    hbar: f64,
    p2: &SpatialGrid,
) -> Result<WignerField> {
    check_p2(p2, &psi0.grid, hbar)?;
    let blob = ClassicalDistribution::gaussian(pgrid, x0, sigma)?;
    let n = psi0.grid.len();
    let two_n = 2 * n;
    let dx = psi0.grid.spacing();
    let up = upsample_wavefunction(psi0);
    let fft = FftPair::new(two_n);
    // Offset products without periodic wrap: the wavepacket is treated as
    // compactly supported inside the domain.
    let mut wq = ndarray::Array2::<f64>::zeros((n, two_n));
    let mut buf = vec![Complex64::ZERO; two_n];
    for m in 0..n {
        buf.iter_mut().for_each(|z| *z = Complex64::ZERO);
        for r in -(n as i64)..n as i64 {
            let a = 2 * m as i64 + r;
            let b = 2 * m as i64 - r;
            if a < 0 || b < 0 || a >= two_n as i64 || b >= two_n as i64 {
                continue;
            }
            buf[wrap_bin(r, two_n)] = up[a as usize] * up[b as usize].conj();
        }
        fft.forward(&mut buf);
        for j in 0..two_n {
            wq[[m, j]] = buf[wrap_bin(j as i64 - n as i64, two_n)].re * dx;
        }
    }
    let axes = WignerAxes { classical: pgrid.clone(), q2: psi0.grid.clone(), p2: p2.clone() };
    let mut out = WignerField::zeros(axes, Role::State);
    for iq in 0..pgrid.q().len() {
        for ip in 0..pgrid.p().len() {
            let g = blob.data[[iq, ip]];
            for m in 0..n {
                for j in 0..two_n {
                    out.data[[iq, ip, m, j]] = g * wq[[m, j]];
                }
            }
        }
    }
    Ok(out)
}

/// Symbol of the hybrid Hamiltonian (transform of the observable field).
pub fn hamiltonian_symbol(h: &HybridHamiltonian) -> Result<WignerField> {
    wigner_transform(&hamiltonian_observable(h), h.hbar())
}

/// Spectral 2D upsampling of a kernel onto the half-step grid (2n x 2n).
/// Values at the original nodes are unchanged.
fn upsample_kernel(k: &ndarray::ArrayView2<'_, Complex64>) -> ndarray::Array2<Complex64> {
    let n = k.nrows();
    let two_n = 2 * n;
    let fft_n = FftPair::new(n);
    let fft_2n = FftPair::new(two_n);
    // forward 2D FFT (rows then columns)
    let mut spec = k.to_owned();
    let mut buf = vec![Complex64::ZERO; n];
    for i in 0..n {
        for j in 0..n {
            buf[j] = spec[[i, j]];
        }
        fft_n.forward(&mut buf);
        for j in 0..n {
            spec[[i, j]] = buf[j];
        }
    }
    for j in 0..n {
        for i in 0..n {
            buf[i] = spec[[i, j]];
        }
        fft_n.forward(&mut buf);
        for i in 0..n {
            spec[[i, j]] = buf[i];
        }
    }
    // symmetric zero-padding, factor 4 compensates the doubled inverse sizes
    let mut padded = ndarray::Array2::<Complex64>::zeros((two_n, two_n));
    let sym = |f: usize| -> usize {
        let fs = if f <= n / 2 { f as i64 } else { f as i64 - n as i64 };
        fs.rem_euclid(two_n as i64) as usize
    };
    for i in 0..n {
        for j in 0..n {
            padded[[sym(i), sym(j)]] = spec[[i, j]] * 4.0;
        }
    }
    // inverse 2D FFT
    let mut buf2 = vec![Complex64::ZERO; two_n];
    for i in 0..two_n {
        for j in 0..two_n {
            buf2[j] = padded[[i, j]];
        }
        fft_2n.inverse(&mut buf2);
        for j in 0..two_n {
            padded[[i, j]] = buf2[j];
        }
    }
    for j in 0..two_n {
        for i in 0..two_n {
            buf2[i] = padded[[i, j]];
        }
        fft_2n.inverse(&mut buf2);
        for i in 0..two_n {
            padded[[i, j]] = buf2[i];
        }
    }
    padded
}

/// Alias-free phase-space portrait of a state field: the kernel at each
/// classical point is spectrally interpolated to half-grid points and the
/// offset products are transformed over `y` without periodic wrapping. This
/// is the pointwise-faithful Wigner function of a localized state (the one a
/// plot should show); `wigner_transform` is its algebraically exact sibling.
/// Both produce identical mean values against banded observables.
pub fn wigner_portrait(field: &HybridDensityField, hbar: f64) -> Result<WignerField> {
    field.require_role(Role::State)?;
    let qgrid = field.qgrid();
    let axes = WignerAxes::for_quantum_grid(field.pgrid(), qgrid, hbar)?;
    let n = qgrid.len();
    let two_n = 2 * n;
    let dx = qgrid.spacing();
    let fft = FftPair::new(two_n);
    let mut out = WignerField::zeros(axes, Role::State);
    let mut buf = vec![Complex64::ZERO; two_n];
    for iq in 0..field.pgrid().q().len() {
        for ip in 0..field.pgrid().p().len() {
            let up = upsample_kernel(&field.matrix_at(iq, ip));
            for m in 0..n {
                buf.iter_mut().for_each(|z| *z = Complex64::ZERO);
                for r in -(n as i64)..n as i64 {
                    let a = 2 * m as i64 + r;
                    let b = 2 * m as i64 - r;
                    if a < 0 || b < 0 || a >= two_n as i64 || b >= two_n as i64 {
                        continue;
                    }
                    buf[wrap_bin(r, two_n)] = up[[a as usize, b as usize]];
                }
                fft.forward(&mut buf);
                for j in 0..two_n {
                    out.data[[iq, ip, m, j]] = buf[wrap_bin(j as i64 - n as i64, two_n)].re * dx;
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{build_hamiltonian, KineticScheme};
    use crate::potential::Potential;
    use crate::state::{identity_observable, mean_value, uncorrelated_pure_state};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn axes_setup(n: usize) -> (PhaseSpaceGrid, SpatialGrid) {
        let q = SpatialGrid::periodic(-5.0, 5.0, 6).unwrap();
        let p = SpatialGrid::periodic(-5.0, 5.0, 6).unwrap();
        (PhaseSpaceGrid::new(q, p).unwrap(), SpatialGrid::periodic(-8.0, 8.0, n).unwrap())
    }

    fn random_hermitian_field(
        pgrid: &PhaseSpaceGrid,
        qgrid: &SpatialGrid,
        role: Role,
        seed: u64,
    ) -> HybridDensityField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = qgrid.len();
        let mut f = HybridDensityField::zeros(pgrid, qgrid, role);
        for iq in 0..pgrid.q().len() {
            for ip in 0..pgrid.p().len() {
                for a in 0..n {
                    for b in a..n {
                        let z = Complex64::new(
                            rng.random::<f64>() - 0.5,
                            if a == b { 0.0 } else { rng.random::<f64>() - 0.5 },
                        );
                        f.data[[iq, ip, a, b]] = z;
                        f.data[[iq, ip, b, a]] = z.conj();
                    }
                }
            }
        }
        f
    }

    #[test]
    fn needs_odd_periodic_grid() {
        let (pgrid, _) = axes_setup(17);
        let even = SpatialGrid::periodic(-8.0, 8.0, 16).unwrap();
        let f = random_hermitian_field(&pgrid, &even, Role::Observable, 0);
        assert!(wigner_transform(&f, 1.0).is_err());
        let bounded = SpatialGrid::bounded(-8.0, 8.0, 17).unwrap();
        let f = random_hermitian_field(&pgrid, &bounded, Role::Observable, 0);
        assert!(wigner_transform(&f, 1.0).is_err());
    }

    #[test]
    fn identity_symbol_is_one() {
        let (pgrid, qgrid) = axes_setup(17);
        let one = identity_observable(&pgrid, &qgrid);
        let w = wigner_transform(&one, 1.0).unwrap();
        for v in w.data.iter() {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn roundtrip_on_random_hermitian_kernels() {
        let (pgrid, qgrid) = axes_setup(15);
        for (role, seed) in [(Role::State, 1), (Role::Observable, 2)] {
            let f = random_hermitian_field(&pgrid, &qgrid, role, seed);
            let w = wigner_transform(&f, 0.7).unwrap();
            let back = inverse_wigner_transform(&w, 0.7).unwrap();
            let mut err = 0.0_f64;
            for (a, b) in f.data.iter().zip(back.data.iter()) {
                err = err.max((a - b).norm());
            }
            assert!(err < 1e-9, "roundtrip error {err}");
        }
    }

    #[test]
    fn kinetic_symbol_matches_lattice_dispersion() {
        // Brute-force oracle at every bin: direct minimum-image phase sum over
        // the antidiagonal pairs, no FFT.
        let (pgrid, qgrid) = axes_setup(33);
        let n = qgrid.len();
        let hbar = 1.0;
        let h = build_hamiltonian(
            &pgrid,
            &qgrid,
            &Potential::Zero,
            hbar,
            KineticScheme::FiniteDifference,
        )
        .unwrap();
        let hq = crate::state::quantum_observable(&pgrid, &qgrid, h.h_q());
        let w = wigner_transform(&hq, hbar).unwrap();
        let m = 8;
        let dx = qgrid.spacing();
        for (j, p) in w.axes().p2.iter().enumerate() {
            let mut direct = Complex64::ZERO;
            for k in 0..n {
                let sep = pair_separation(k, n);
                let phase = Complex64::from_polar(1.0, -p * sep as f64 * dx / hbar);
                direct += h.h_q()[[(m + k) % n, (m + n - k) % n]] * phase;
            }
            assert!((w.data[[0, 0, m, j]] - direct.re).abs() < 1e-10);

            // dispersion of the 3-point stencil at every lattice momentum
            let exact_fd = hbar * hbar / (dx * dx) * (1.0 - (p * dx / hbar).cos());
            assert!((w.data[[0, 0, m, j]] - exact_fd).abs() < 1e-10);
            // which is p^2/2 up to O(dx^2 p^4)
            assert!((exact_fd - 0.5 * p * p).abs() <= dx * dx * p.powi(4) / 12.0 + 1e-12);
        }
    }

    #[test]
    fn pure_state_gaussian_is_positive_and_normalized() {
        let (pgrid, qgrid) = axes_setup(33);
        let hbar = 1.0;
        let psi = WaveFunction::gaussian(&qgrid, 0.4, 0.8, 0.3, hbar).unwrap();
        let w = wigner_of_pure_state(
            &pgrid,
            ClassicalPhasePoint { q: 0.0, p: 0.0 },
            &psi,
            (2.0 * pgrid.q().spacing(), 2.0 * pgrid.p().spacing()),
            hbar,
        )
        .unwrap();
        // positive to numerical precision (Hudson case)
        assert!(w.min_value() > -1e-10 * w.max_abs(), "min {:.3e}", w.min_value());
        // normalization via the mean-value functional with A = 1
        let one = symbol_observable(w.axes(), |_, _, _, _| 1.0);
        let norm = mean_value_wigner(&one, &w, hbar).unwrap();
        assert!((norm - 1.0).abs() < 1e-6, "norm {norm}");
        // q2 mean is the wavepacket center
        let q2 = symbol_observable(w.axes(), |_, _, q2, _| q2);
        let m = mean_value_wigner(&q2, &w, hbar).unwrap();
        assert!((m - 0.4).abs() < qgrid.spacing());
        // p2 mean is the wavepacket momentum
        let p2 = symbol_observable(w.axes(), |_, _, _, p2| p2);
        let mp = mean_value_wigner(&p2, &w, hbar).unwrap();
        assert!((mp - 0.3).abs() < 1e-3, "momentum mean {mp}");
    }

    #[test]
    fn odd_state_is_negative_at_origin() {
        let pgrid = axes_setup(33).0;
        let qgrid = SpatialGrid::periodic_centered(8.0, 33).unwrap();
        let hbar = 1.0;
        // first-excited-like odd wavefunction xi * gaussian
        let amps = ndarray::Array1::from_iter(
            qgrid.iter().map(|x| Complex64::new(x * (-x * x / 2.0).exp(), 0.0)),
        );
        let psi = WaveFunction::from_samples(qgrid.clone(), amps).unwrap();
        let w = wigner_of_pure_state(
            &pgrid,
            ClassicalPhasePoint { q: 0.0, p: 0.0 },
            &psi,
            (2.0 * pgrid.q().spacing(), 2.0 * pgrid.p().spacing()),
            hbar,
        )
        .unwrap();
        // independent oracle: direct quadrature of the transform at (0, 0)
        // with the analytic wavefunction; the continuum value is exactly -2
        // for any odd normalized psi.
        let norm_sq: f64 =
            qgrid.iter().map(|x| (x * (-x * x / 2.0).exp()).powi(2)).sum::<f64>()
                * qgrid.spacing();
        let mut direct = 0.0;
        let de = qgrid.spacing() / 2.0;
        let mut eta = -qgrid.extent() / 2.0;
        while eta < qgrid.extent() / 2.0 {
            let a = (eta / 2.0) * (-eta * eta / 8.0).exp() / norm_sq.sqrt();
            let b = (-eta / 2.0) * (-eta * eta / 8.0).exp() / norm_sq.sqrt();
            direct += a * b * de;
            eta += de;
        }
        assert!((direct + 2.0).abs() < 1e-3, "direct quadrature {direct} should be near -2");
        // lattice value at the phase-space origin
        let n = qgrid.len();
        let m0 = n / 2;
        assert!(qgrid.point(m0).abs() < 1e-12);
        let quantum_origin = w.data[[pgrid.q().len() / 2, pgrid.p().len() / 2, m0, n]];
        assert!(quantum_origin < 0.0, "origin value {quantum_origin}");
        // sits at the negative blob-center value g0 * (-2)
        let g0 = w.max_abs() / 2.0;
        assert!((quantum_origin + 2.0 * g0).abs() < 0.05 * g0, "{quantum_origin} vs {}", -2.0 * g0);
    }

    #[test]
    fn pairing_matches_configuration_mean_value_exactly() {
        let (pgrid, qgrid) = axes_setup(15);
        let hbar = 0.8;
        let a = random_hermitian_field(&pgrid, &qgrid, Role::Observable, 11);
        let psi = WaveFunction::gaussian(&qgrid, 0.0, 1.0, 0.0, hbar).unwrap();
        let d = uncorrelated_pure_state(
            &pgrid,
            ClassicalPhasePoint { q: 0.0, p: 0.0 },
            &psi,
            (2.0 * pgrid.q().spacing(), 2.0 * pgrid.p().spacing()),
        )
        .unwrap();
        let lhs = mean_value(&a, &d).unwrap();
        let wa = wigner_transform(&a, hbar).unwrap();
        let wd = wigner_transform(&d, hbar).unwrap();
        let rhs = mean_value_wigner(&wa, &wd, hbar).unwrap();
        assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1.0), "config {lhs} vs wigner {rhs}");

        // The constructor-built portrait pairs with physical (smooth or
        // banded) observables to interpolation accuracy; the transform and
        // the portrait agree under such pairings even though they organize
        // the off-diagonal information differently.
        let wd2 = wigner_of_pure_state(
            &pgrid,
            ClassicalPhasePoint { q: 0.0, p: 0.0 },
            &psi,
            (2.0 * pgrid.q().spacing(), 2.0 * pgrid.p().spacing()),
            hbar,
        )
        .unwrap();
        let phi = Potential::harmonic(0.9).unwrap();
        let h = build_hamiltonian(&pgrid, &qgrid, &phi, hbar, KineticScheme::FiniteDifference)
            .unwrap();
        let h_obs = crate::state::hamiltonian_observable(&h);
        let e_config = mean_value(&h_obs, &d).unwrap();
        let wh = wigner_transform(&h_obs, hbar).unwrap();
        let e_wigner = mean_value_wigner(&wh, &wd2, hbar).unwrap();
        assert!(
            (e_config - e_wigner).abs() <= 1e-6 * e_config.abs().max(1.0),
            "energy: config {e_config} vs portrait {e_wigner}"
        );
    }

    #[test]
    fn incommensurate_p2_rejected() {
        let (pgrid, qgrid) = axes_setup(17);
        let psi = WaveFunction::gaussian(&qgrid, 0.0, 1.0, 0.0, 1.0).unwrap();
        let bad_p2 = SpatialGrid::periodic(-3.0, 3.0, 34).unwrap();
        let r = wigner_of_pure_state_on(
            &pgrid,
            ClassicalPhasePoint { q: 0.0, p: 0.0 },
            &psi,
            (2.0 * pgrid.q().spacing(), 2.0 * pgrid.p().spacing()),
            1.0,
            &bad_p2,
        );
        assert!(r.is_err());
    }

    #[test]
    fn transform_is_linear() {
        let (pgrid, qgrid) = axes_setup(15);
        let f1 = random_hermitian_field(&pgrid, &qgrid, Role::Observable, 5);
        let f2 = random_hermitian_field(&pgrid, &qgrid, Role::Observable, 6);
        let mut combo = f1.clone();
        for (c, (a, b)) in combo.data.iter_mut().zip(f1.data.iter().zip(f2.data.iter())) {
            *c = 0.3 * a + 0.7 * b;
        }
        let w1 = wigner_transform(&f1, 1.0).unwrap();
        let w2 = wigner_transform(&f2, 1.0).unwrap();
        let wc = wigner_transform(&combo, 1.0).unwrap();
        let mut err = 0.0_f64;
        for ((c, a), b) in wc.data.iter().zip(w1.data.iter()).zip(w2.data.iter()) {
            err = err.max((c - (0.3 * a + 0.7 * b)).abs());
        }
        assert!(err < 1e-11);
    }

    #[test]
    fn upsampling_preserves_node_values() {
        let qgrid = SpatialGrid::periodic(-8.0, 8.0, 21).unwrap();
        let psi = WaveFunction::gaussian(&qgrid, 0.3, 1.2, -0.4, 1.0).unwrap();
        let up = upsample_wavefunction(&psi);
        for i in 0..21 {
            assert!((up[2 * i] - psi.amps[i]).norm() < 1e-12);
        }
    }
}
