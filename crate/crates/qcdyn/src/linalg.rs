//! Dense complex linear algebra: matrix exponential, LU solve, and a Jacobi
//! eigensolver for Hermitian matrices. Sized for the oracle grids (dimension
//! up to a few thousand), not for large-scale work.

use ndarray::{Array1, Array2};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMat = Array2<Complex64>;
pub type CVec = Array1<Complex64>;

pub fn identity(n: usize) -> CMat {
    Array2::from_diag_elem(n, Complex64::new(1.0, 0.0))
}

/// Max column absolute sum.
pub fn one_norm(a: &CMat) -> f64 {
    let (rows, cols) = a.dim();
    let mut best = 0.0_f64;
    for j in 0..cols {
        let mut s = 0.0;
        for i in 0..rows {
            s += a[[i, j]].norm();
        }
        best = best.max(s);
    }
    best
}

pub fn max_abs(a: &CMat) -> f64 {
    a.iter().fold(0.0_f64, |m, z| m.max(z.norm()))
}

/// `(A + A^dagger) / 2`.
pub fn hermitize(a: &CMat) -> CMat {
    let n = a.nrows();
    let mut out = a.clone();
    for i in 0..n {
        for j in 0..n {
            out[[i, j]] = 0.5 * (a[[i, j]] + a[[j, i]].conj());
        }
    }
    out
}

pub fn hermiticity_defect(a: &CMat) -> f64 {
    let n = a.nrows();
    let mut d = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            d = d.max((a[[i, j]] - a[[j, i]].conj()).norm());
        }
    }
    d
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a.dot(b) - b.dot(a)
}

/// LU decomposition with partial pivoting on flat row-major storage; the
/// elimination and substitution loops run over contiguous row slices.
struct Lu {
    n: usize,
    data: Vec<Complex64>,
    piv: Vec<usize>,
}

fn lu_decompose(a: &CMat) -> Result<Lu> {
    let n = a.nrows();
    let mut data: Vec<Complex64> = a.iter().copied().collect();
    let mut piv: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let mut p = k;
        let mut best = data[k * n + k].norm();
        for i in k + 1..n {
            let v = data[i * n + k].norm();
            if v > best {
                best = v;
                p = i;
            }
        }
        if best == 0.0 {
            return Err(Error::NumericalConsistency("singular matrix in LU solve".into()));
        }
        if p != k {
            piv.swap(p, k);
            for j in 0..n {
                data.swap(k * n + j, p * n + j);
            }
        }
        let pivot = data[k * n + k];
        let (above, below) = data.split_at_mut((k + 1) * n);
        let row_k = &above[k * n..];
        for i in 0..n - k - 1 {
            let row_i = &mut below[i * n..(i + 1) * n];
            let factor = row_i[k] / pivot;
            row_i[k] = factor;
            for j in k + 1..n {
                row_i[j] -= factor * row_k[j];
            }
        }
    }
    Ok(Lu { n, data, piv })
}

impl Lu {
    /// Solve `A X = B` for all columns of `B` at once, by row operations.
    fn solve_mat(&self, b: &CMat) -> CMat {
        let n = self.n;
        let m = b.ncols();
        let mut x: Vec<Complex64> = vec![Complex64::ZERO; n * m];
        for i in 0..n {
            for j in 0..m {
                x[i * m + j] = b[[self.piv[i], j]];
            }
        }
        // Forward substitution (unit lower-triangular).
        for k in 0..n {
            let (above, below) = x.split_at_mut((k + 1) * m);
            let row_k = &above[k * m..];
            for i in 0..n - k - 1 {
                let f = self.data[(k + 1 + i) * n + k];
                if f != Complex64::ZERO {
                    let row_i = &mut below[i * m..(i + 1) * m];
                    for j in 0..m {
                        row_i[j] -= f * row_k[j];
                    }
                }
            }
        }
        // Back substitution.
        for k in (0..n).rev() {
            let d = self.data[k * n + k];
            let (above, from_k) = x.split_at_mut(k * m);
            let row_k = &mut from_k[..m];
            for v in row_k.iter_mut() {
                *v /= d;
            }
            for i in 0..k {
                let f = self.data[i * n + k];
                if f != Complex64::ZERO {
                    let row_i = &mut above[i * m..(i + 1) * m];
                    for j in 0..m {
                        row_i[j] -= f * row_k[j];
                    }
                }
            }
        }
        CMat::from_shape_vec((n, m), x).unwrap()
    }
}

pub fn solve(a: &CMat, b: &CMat) -> Result<CMat> {
    Ok(lu_decompose(a)?.solve_mat(b))
}

/// Pade(13) coefficients for the matrix exponential.
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

/// Matrix exponential by scaling and squaring with a degree-13 Pade approximant.
pub fn expm(a: &CMat) -> Result<CMat> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm needs a square matrix");
    let norm = one_norm(a);
    let s = if norm > THETA13 { (norm / THETA13).log2().ceil() as i32 } else { 0 };
    let scale = Complex64::new(0.5f64.powi(s), 0.0);
    let b = a.mapv(|z| z * scale);

    let b2 = b.dot(&b);
    let b4 = b2.dot(&b2);
    let b6 = b2.dot(&b4);
    let eye = identity(n);

    let c = |k: usize| Complex64::new(PADE13[k], 0.0);
    let u_inner = &b6.mapv(|z| z * c(13)) + &b4.mapv(|z| z * c(11)) + &b2.mapv(|z| z * c(9));
    let u_poly = b6.dot(&u_inner)
        + &b6.mapv(|z| z * c(7))
        + &b4.mapv(|z| z * c(5))
        + &b2.mapv(|z| z * c(3))
        + &eye.mapv(|z| z * c(1));
    let u = b.dot(&u_poly);
    let v_inner = &b6.mapv(|z| z * c(12)) + &b4.mapv(|z| z * c(10)) + &b2.mapv(|z| z * c(8));
    let v = b6.dot(&v_inner)
        + &b6.mapv(|z| z * c(6))
        + &b4.mapv(|z| z * c(4))
        + &b2.mapv(|z| z * c(2))
        + &eye.mapv(|z| z * c(0));

    let num = &v + &u;
    let den = &v - &u;
    let mut r = solve(&den, &num)?;
    for _ in 0..s {
        r = r.dot(&r);
    }
    Ok(r)
}

/// Eigenvalues of a Hermitian matrix by the cyclic Jacobi method, ascending.
pub fn hermitian_eigenvalues(a: &CMat) -> Vec<f64> {
    let n = a.nrows();
    let mut m = a.clone();
    let off = |m: &CMat| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += m[[i, j]].norm_sqr();
                }
            }
        }
        s.sqrt()
    };
    let scale = one_norm(&m).max(1e-300);
    for _sweep in 0..50 {
        if off(&m) <= 1e-13 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[[p, q]];
                if apq.norm() <= 1e-300 {
                    continue;
                }
                // Unitary 2x2 rotation U = [[c, s], [-conj(s), c]] chosen so
                // that (U^dagger A U)[p][q] = 0.
                let app = m[[p, p]].re;
                let aqq = m[[q, q]].re;
                let phase = apq / apq.norm();
                let tau = (aqq - app) / (2.0 * apq.norm());
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = phase * (t * c);
                for k in 0..n {
                    let mkp = m[[k, p]];
                    let mkq = m[[k, q]];
                    m[[k, p]] = mkp * c - mkq * s.conj();
                    m[[k, q]] = mkp * s + mkq * c;
                }
                for k in 0..n {
                    let mpk = m[[p, k]];
                    let mqk = m[[q, k]];
                    m[[p, k]] = mpk * c - mqk * s;
                    m[[q, k]] = mpk * s.conj() + mqk * c;
                }
            }
        }
    }
    let mut eigs: Vec<f64> = (0..n).map(|i| m[[i, i]].re).collect();
    eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    eigs
}
