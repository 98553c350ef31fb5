//! Thin wrappers around rustfft: cached plans for one transform length plus
//! helpers used by the spectral kinetic matrix and the Wigner machinery.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Forward/inverse plan pair for a fixed length. The inverse is normalized.
#[derive(Clone)]
pub struct FftPair {
    pub n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for FftPair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "FftPair(n = {})", self.n)
    }
}

impl FftPair {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        FftPair { n, fwd: planner.plan_fft_forward(n), inv: planner.plan_fft_inverse(n) }
    }

    /// In-place forward DFT, `X[f] = sum_k x[k] exp(-2 pi i f k / n)`.
    pub fn forward(&self, buf: &mut [Complex64]) {
        debug_assert_eq!(buf.len(), self.n);
        self.fwd.process(buf);
    }

    /// In-place inverse DFT including the `1/n` factor.
    pub fn inverse(&self, buf: &mut [Complex64]) {
        debug_assert_eq!(buf.len(), self.n);
        self.inv.process(buf);
        let scale = 1.0 / self.n as f64;
        for z in buf.iter_mut() {
            *z *= scale;
        }
    }
}

/// Builds the Hermitian circulant matrix `F^dagger diag(f(k)) F` for a periodic
/// grid of length `n`, where `f` is a real function of the FFT frequency index.
/// Used for the spectral kinetic matrix and the spectral momentum operator.
pub fn circulant_from_symbol(
    n: usize,
    symbol: impl Fn(usize) -> Complex64,
) -> ndarray::Array2<Complex64> {
    let fft = FftPair::new(n);
    // First column: inverse DFT of the symbol; the matrix is circulant with
    // entries depending on (row - col) mod n.
    let mut col: Vec<Complex64> = (0..n).map(&symbol).collect();
    fft.inverse(&mut col);
    ndarray::Array2::from_shape_fn((n, n), |(i, j)| col[(i + n - j) % n])
}
