//! Interaction potentials between the classical coordinate `q` and the
//! quantum coordinate `xi`.
//!
//! All variants except `Bilinear` are functions of the separation `r = xi - q`.
//! `Bilinear` is the cross term `c*q*xi`; it is provided because it makes the
//! first-moment dynamics closed, and it is exactly the cross term contained in
//! the harmonic coupling `k/2 (xi - q)^2 = k/2 (q^2 + xi^2) - k q xi`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Potential {
    Zero,
    /// `k/2 (xi - q)^2`, k > 0.
    Harmonic { k: f64 },
    /// `c * q * xi`.
    Bilinear { c: f64 },
    /// `v0 * exp(-(xi - q)^2 / (2 w^2))`, w > 0.
    GaussianBump { v0: f64, width: f64 },
    /// Samples of `phi(r)` on a uniform radial grid, cubic spline interpolation.
    Tabulated(TabulatedPotential),
}

impl Potential {
    pub fn harmonic(k: f64) -> Result<Self> {
        if k > 0.0 {
            Ok(Potential::Harmonic { k })
        } else {
            Err(Error::Config(format!("harmonic stiffness must be positive, got {k}")))
        }
    }

    pub fn gaussian_bump(v0: f64, width: f64) -> Result<Self> {
        if width > 0.0 {
            Ok(Potential::GaussianBump { v0, width })
        } else {
            Err(Error::Config(format!("bump width must be positive, got {width}")))
        }
    }

    /// V(q, xi).
    pub fn eval(&self, q: f64, xi: f64) -> Result<f64> {
        match self {
            Potential::Zero => Ok(0.0),
            Potential::Harmonic { k } => {
                let r = xi - q;
                Ok(0.5 * k * r * r)
            }
            Potential::Bilinear { c } => Ok(c * q * xi),
            Potential::GaussianBump { v0, width } => {
                let r = xi - q;
                Ok(v0 * (-r * r / (2.0 * width * width)).exp())
            }
            Potential::Tabulated(t) => t.eval(xi - q),
        }
    }

    /// dV/dq.
    pub fn d_dq(&self, q: f64, xi: f64) -> Result<f64> {
        match self {
            Potential::Zero => Ok(0.0),
            Potential::Harmonic { k } => Ok(-k * (xi - q)),
            Potential::Bilinear { c } => Ok(c * xi),
            Potential::GaussianBump { v0, width } => {
                let r = xi - q;
                let w2 = width * width;
                Ok(v0 * (-r * r / (2.0 * w2)).exp() * r / w2)
            }
            Potential::Tabulated(t) => Ok(-t.derivative(xi - q)?),
        }
    }

    /// dV/dxi.
    pub fn d_dxi(&self, q: f64, xi: f64) -> Result<f64> {
        match self {
            Potential::Zero => Ok(0.0),
            Potential::Harmonic { k } => Ok(k * (xi - q)),
            Potential::Bilinear { c } => Ok(c * q),
            Potential::GaussianBump { v0, width } => {
                let r = xi - q;
                let w2 = width * width;
                Ok(-v0 * (-r * r / (2.0 * w2)).exp() * r / w2)
            }
            Potential::Tabulated(t) => t.derivative(xi - q),
        }
    }

    /// True for polynomial potentials of degree <= 2 in the coordinates, the
    /// class supported by the canonical-operator integrator.
    pub fn is_quadratic(&self) -> bool {
        matches!(self, Potential::Zero | Potential::Harmonic { .. } | Potential::Bilinear { .. })
    }
}

/// Natural cubic spline over uniformly spaced samples of `phi(r)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedPotential {
    r_min: f64,
    r_max: f64,
    values: Vec<f64>,
    /// Second derivatives at the knots (natural boundary conditions).
    second: Vec<f64>,
}

impl TabulatedPotential {
    pub fn new(r_min: f64, r_max: f64, values: Vec<f64>) -> Result<Self> {
        if !(r_max > r_min) {
            return Err(Error::Config("tabulated potential needs r_max > r_min".into()));
        }
        let n = values.len();
        if n < 4 {
            return Err(Error::Config(format!("tabulated potential needs >= 4 samples, got {n}")));
        }
        let h = (r_max - r_min) / (n - 1) as f64;

        // Tridiagonal solve for natural-spline second derivatives.
        let mut second = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        diag[0] = 1.0;
        for i in 1..n - 1 {
            rhs[i] = 6.0 * (values[i + 1] - 2.0 * values[i] + values[i - 1]) / (h * h);
        }
        for i in 1..n - 1 {
            diag[i] = 4.0 - 1.0 / diag[i - 1];
            rhs[i] -= rhs[i - 1] / diag[i - 1];
        }
        for i in (1..n - 1).rev() {
            second[i] = (rhs[i] - second[i + 1]) / diag[i];
        }
        Ok(TabulatedPotential { r_min, r_max, values, second })
    }

    pub fn range(&self) -> (f64, f64) {
        (self.r_min, self.r_max)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn locate(&self, r: f64) -> Result<(usize, f64, f64)> {
        if r < self.r_min || r > self.r_max {
            return Err(Error::Range(format!(
                "r = {r} outside tabulated range [{}, {}]",
                self.r_min, self.r_max
            )));
        }
        let n = self.values.len();
        let h = (self.r_max - self.r_min) / (n - 1) as f64;
        let i = (((r - self.r_min) / h) as usize).min(n - 2);
        let t = (r - (self.r_min + i as f64 * h)) / h;
        Ok((i, t, h))
    }

    pub fn eval(&self, r: f64) -> Result<f64> {
        let (i, t, h) = self.locate(r)?;
        let (ya, yb) = (self.values[i], self.values[i + 1]);
        let (sa, sb) = (self.second[i], self.second[i + 1]);
        let u = 1.0 - t;
        Ok(u * ya + t * yb + h * h / 6.0 * ((u * u * u - u) * sa + (t * t * t - t) * sb))
    }

    pub fn derivative(&self, r: f64) -> Result<f64> {
        let (i, t, h) = self.locate(r)?;
        let (ya, yb) = (self.values[i], self.values[i + 1]);
        let (sa, sb) = (self.second[i], self.second[i + 1]);
        let u = 1.0 - t;
        Ok((yb - ya) / h + h / 6.0 * ((3.0 * t * t - 1.0) * sb - (3.0 * u * u - 1.0) * sa))
    }
}
