//! Time integration: fixed-step RK4 for the observable picture (`dA/dt = +L A`)
//! and the state picture (`dD/dt = -L D`), plus the exact dense propagator
//! `exp(t L)` for oracle comparisons on small grids.
//!
//! The periodic-wrap generator conserves the trace integral identically and
//! RK4 steps are linear combinations of generator applications, so the state
//! normalization is conserved to roundoff; it is still monitored and a drift
//! beyond the hard budget aborts the run. Hermiticity is restored each step
//! by symmetrization with the correction size logged — the correction must
//! stay at roundoff level, it is a diagnostic, not a repair of a broken
//! scheme.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::generator::{DenseGenerator, GeneratorConfigRep, GeneratorWignerRep};
use crate::linalg::{expm, CMat};
use crate::hamiltonian::position_operator;
use crate::state::{
    classical_observable, hamiltonian_observable, mean_value, quantum_observable,
    HybridDensityField, Role,
};
use crate::wigner::{mean_value_wigner, symbol_observable, WignerField};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scheme {
    Rk4,
    ExactDense,
}

#[derive(Debug, Clone)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub t_final: f64,
    pub scheme: Scheme,
    /// Steps between recorded diagnostics rows.
    pub stride: usize,
    /// Safety factor of the step-size guard.
    pub safety: f64,
    /// Opt-in: rescale the state normalization each step instead of only
    /// logging its drift.
    pub rescale_norm: bool,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            dt: 1e-3,
            t_final: 1.0,
            scheme: Scheme::Rk4,
            stride: 10,
            safety: 0.5,
            rescale_norm: false,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if self.t_final < 0.0 {
            return Err(Error::Config(format!("t_final must be >= 0, got {}", self.t_final)));
        }
        if self.stride == 0 {
            return Err(Error::Config("stride must be >= 1".into()));
        }
        Ok(())
    }

    /// Step-size guard: `dt <= safety * min(dq / |p|_max, hbar / E_max)`.
    /// A violation is a configuration error, never a silent clamp.
    pub fn check_guard(&self, gen: &GeneratorConfigRep) -> Result<()> {
        let h = gen.hamiltonian();
        let p_max = h.pgrid().p().abs_max().max(1e-12);
        let dq = h.pgrid().q().spacing();
        let t_transport = dq / p_max;
        let t_quantum = h.hbar() / h.energy_scale().max(1e-12);
        let limit = self.safety * t_transport.min(t_quantum);
        if self.dt > limit {
            return Err(Error::CflViolation { dt: self.dt, limit });
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }
}

/// Time series of diagnostics (and optional snapshots) produced by a run.
#[derive(Debug, Clone, Default)]
pub struct EvolutionRecord {
    pub times: Vec<f64>,
    pub columns: Vec<(String, Vec<f64>)>,
}

impl EvolutionRecord {
    pub fn new(names: &[&str]) -> Self {
        EvolutionRecord {
            times: Vec::new(),
            columns: names.iter().map(|n| (n.to_string(), Vec::new())).collect(),
        }
    }

    pub fn push_row(&mut self, t: f64, values: &[f64]) {
        assert_eq!(values.len(), self.columns.len());
        self.times.push(t);
        for (col, v) in self.columns.iter_mut().zip(values.iter()) {
            col.1.push(*v);
        }
    }

    pub fn column(&self, name: &str) -> Result<&[f64]> {
        self.columns
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    }

    pub fn last(&self, name: &str) -> Result<f64> {
        let c = self.column(name)?;
        c.last().copied().ok_or_else(|| Error::Config("empty record".into()))
    }
}

/// Standard diagnostics computed on configuration-representation states.
pub struct ConfigDiagnostics {
    h_obs: HybridDensityField,
    q_c: HybridDensityField,
    p_c: HybridDensityField,
    q_q: HybridDensityField,
    p_q: HybridDensityField,
}

impl ConfigDiagnostics {
    pub fn new(gen: &GeneratorConfigRep) -> Result<Self> {
        let h = gen.hamiltonian();
        let pg = h.pgrid();
        let qg = h.qgrid();
        let p_op = crate::hamiltonian::momentum_operator(qg, h.kinetic_scheme(), h.hbar())?;
        Ok(ConfigDiagnostics {
            h_obs: hamiltonian_observable(h),
            q_c: classical_observable(pg, qg, |q, _| q),
            p_c: classical_observable(pg, qg, |_, p| p),
            q_q: quantum_observable(pg, qg, &position_operator(qg)),
            p_q: quantum_observable(pg, qg, &p_op),
        })
    }

    pub const NAMES: [&'static str; 8] =
        ["norm", "energy", "q_c", "p_c", "q_q", "p_q", "corr_norm", "resym"];

    pub fn row(&self, d: &HybridDensityField, resym: f64) -> Result<[f64; 8]> {
        Ok([
            d.normalization(),
            mean_value(&self.h_obs, d)?,
            mean_value(&self.q_c, d)?,
            mean_value(&self.p_c, d)?,
            mean_value(&self.q_q, d)?,
            mean_value(&self.p_q, d)?,
            d.correlation_norm()?,
            resym,
        ])
    }
}

fn rk4_step<F>(y: &HybridDensityField, dt: f64, rhs: F) -> Result<HybridDensityField>
where
    F: Fn(&HybridDensityField) -> Result<HybridDensityField>,
{
    let k1 = rhs(y)?;
    let mut y2 = y.clone();
    axpy(&mut y2, 0.5 * dt, &k1);
    let k2 = rhs(&y2)?;
    let mut y3 = y.clone();
    axpy(&mut y3, 0.5 * dt, &k2);
    let k3 = rhs(&y3)?;
    let mut y4 = y.clone();
    axpy(&mut y4, dt, &k3);
    let k4 = rhs(&y4)?;
    let mut out = y.clone();
    axpy(&mut out, dt / 6.0, &k1);
    axpy(&mut out, dt / 3.0, &k2);
    axpy(&mut out, dt / 3.0, &k3);
    axpy(&mut out, dt / 6.0, &k4);
    Ok(out)
}

fn axpy(y: &mut HybridDensityField, a: f64, x: &HybridDensityField) {
    for (dst, src) in y.data.iter_mut().zip(x.data.iter()) {
        *dst += *src * a;
    }
}

/// Observable-picture evolution `dA/dt = +L A`.
pub fn propagate_observable(
    a0: &HybridDensityField,
    gen: &GeneratorConfigRep,
    cfg: &IntegratorConfig,
) -> Result<EvolutionRecord> {
    a0.require_role(Role::Observable)?;
    cfg.validate()?;
    cfg.check_guard(gen)?;
    let mut record = EvolutionRecord::new(&["field_norm", "herm_defect"]);
    let mut a = a0.clone();
    record.push_row(0.0, &[a.field_norm(), a.hermiticity_defect()]);
    let steps = cfg.n_steps();
    for step in 1..=steps {
        a = rk4_step(&a, cfg.dt, |y| gen.apply(y))?;
        if step % cfg.stride == 0 || step == steps {
            record.push_row(step as f64 * cfg.dt, &[a.field_norm(), a.hermiticity_defect()]);
        }
    }
    Ok(record)
}

/// Observable-picture evolution returning the final field.
pub fn evolve_observable(
    a0: &HybridDensityField,
    gen: &GeneratorConfigRep,
    cfg: &IntegratorConfig,
) -> Result<HybridDensityField> {
    a0.require_role(Role::Observable)?;
    cfg.validate()?;
    cfg.check_guard(gen)?;
    let mut a = a0.clone();
    for _ in 0..cfg.n_steps() {
        a = rk4_step(&a, cfg.dt, |y| gen.apply(y))?;
    }
    Ok(a)
}

/// State-picture evolution `dD/dt = -L D` with per-stride diagnostics. The
/// optional `observer` callback sees every recorded state.
pub fn propagate_state(
    d0: &HybridDensityField,
    gen: &GeneratorConfigRep,
    cfg: &IntegratorConfig,
) -> Result<EvolutionRecord> {
    propagate_state_observed(d0, gen, cfg, |_, _| {})
}

pub fn propagate_state_observed(
    d0: &HybridDensityField,
    gen: &GeneratorConfigRep,
    cfg: &IntegratorConfig,
    mut observer: impl FnMut(f64, &HybridDensityField),
) -> Result<EvolutionRecord> {
    d0.require_role(Role::State)?;
    cfg.validate()?;
    cfg.check_guard(gen)?;
    let diags = ConfigDiagnostics::new(gen)?;
    let mut record = EvolutionRecord::new(&ConfigDiagnostics::NAMES);
    let norm0 = d0.normalization();
    let mut d = d0.clone();
    record.push_row(0.0, &diags.row(&d, 0.0)?);
    observer(0.0, &d);
    let steps = cfg.n_steps();
    for step in 1..=steps {
        d = rk4_step(&d, cfg.dt, |y| {
            let mut out = gen.apply(y)?;
            for v in out.data.iter_mut() {
                *v = -*v;
            }
            Ok(out)
        })?;
        let resym = d.resymmetrize();
        let t = step as f64 * cfg.dt;
        let drift = (d.normalization() - norm0).abs();
        if drift > 1e-4 {
            return Err(Error::NormDrift { drift, budget: 1e-4, t });
        }
        if cfg.rescale_norm {
            let current = d.normalization();
            let factor = norm0 / current;
            for v in d.data.iter_mut() {
                *v *= factor;
            }
        }
        if step % cfg.stride == 0 || step == steps {
            record.push_row(t, &diags.row(&d, resym)?);
            observer(t, &d);
        }
    }
    Ok(record)
}

/// Wigner-representation diagnostics: mean values of the coordinate symbols,
/// the energy symbol, and the symbol-space correlation norm
/// `|| W - D_c(X) w_rho(x2) ||` built from the two marginals of `W`.
pub struct WignerDiagnostics {
    h_sym: WignerField,
    q1: WignerField,
    p1: WignerField,
    q2: WignerField,
    p2: WignerField,
    hbar: f64,
}

impl WignerDiagnostics {
    pub fn new(gen: &GeneratorWignerRep, h_sym: WignerField) -> Self {
        let axes = gen.axes();
        WignerDiagnostics {
            h_sym,
            q1: symbol_observable(axes, |q1, _, _, _| q1),
            p1: symbol_observable(axes, |_, p1, _, _| p1),
            q2: symbol_observable(axes, |_, _, q2, _| q2),
            p2: symbol_observable(axes, |_, _, _, p2| p2),
            hbar: gen.hbar(),
        }
    }

    pub const NAMES: [&'static str; 8] =
        ["norm", "energy", "q_c", "p_c", "q_q", "p_q", "corr_norm", "resym"];

    pub fn row(&self, w: &WignerField) -> Result<[f64; 8]> {
        let hbar = self.hbar;
        Ok([
            w.normalization(hbar),
            mean_value_wigner(&self.h_sym, w, hbar)?,
            mean_value_wigner(&self.q1, w, hbar)?,
            mean_value_wigner(&self.p1, w, hbar)?,
            mean_value_wigner(&self.q2, w, hbar)?,
            mean_value_wigner(&self.p2, w, hbar)?,
            correlation_norm_wigner(w, hbar),
            0.0,
        ])
    }
}

/// Correlation functional in symbol space: deviation of `W` from the product
/// of its classical marginal and its quantum-symbol marginal.
pub fn correlation_norm_wigner(w: &WignerField, hbar: f64) -> f64 {
    let axes = w.axes();
    let (nq1, np1, n, two_n) =
        (axes.classical.q().len(), axes.classical.p().len(), axes.q2.len(), axes.p2.len());
    let dq2dp2 = axes.q2.spacing() * axes.p2.spacing();
    let two_pi_h = 2.0 * std::f64::consts::PI * hbar;
    // classical marginal (unit total mass for a normalized state)
    let mut d_c = ndarray::Array2::<f64>::zeros((nq1, np1));
    for i1 in 0..nq1 {
        for i2 in 0..np1 {
            let mut acc = 0.0;
            for m in 0..n {
                for j in 0..two_n {
                    acc += w.data[[i1, i2, m, j]];
                }
            }
            d_c[[i1, i2]] = acc * dq2dp2 / two_pi_h;
        }
    }
    // quantum symbol marginal
    let wcl = axes.classical.weight();
    let mut w_rho = ndarray::Array2::<f64>::zeros((n, two_n));
    for m in 0..n {
        for j in 0..two_n {
            let mut acc = 0.0;
            for i1 in 0..nq1 {
                for i2 in 0..np1 {
                    acc += w.data[[i1, i2, m, j]];
                }
            }
            w_rho[[m, j]] = acc * wcl;
        }
    }
    let mut g_sq = 0.0;
    for i1 in 0..nq1 {
        for i2 in 0..np1 {
            for m in 0..n {
                for j in 0..two_n {
                    let g = w.data[[i1, i2, m, j]] - d_c[[i1, i2]] * w_rho[[m, j]];
                    g_sq += g * g;
                }
            }
        }
    }
    (g_sq * wcl * dq2dp2 / two_pi_h).sqrt()
}

/// State-picture evolution of a Wigner symbol field.
pub fn propagate_state_wigner(
    w0: &WignerField,
    gen: &GeneratorWignerRep,
    h_sym: WignerField,
    cfg: &IntegratorConfig,
) -> Result<EvolutionRecord> {
    w0.require_role(Role::State)?;
    cfg.validate()?;
    let diags = WignerDiagnostics::new(gen, h_sym);
    let mut record = EvolutionRecord::new(&WignerDiagnostics::NAMES);
    let norm0 = w0.normalization(gen.hbar());
    let mut w = w0.clone();
    record.push_row(0.0, &diags.row(&w)?);
    let steps = cfg.n_steps();
    for step in 1..=steps {
        w = rk4_step_wigner(&w, cfg.dt, |y| {
            let mut out = gen.apply(y)?;
            for v in out.data.iter_mut() {
                *v = -*v;
            }
            Ok(out)
        })?;
        let t = step as f64 * cfg.dt;
        let drift = (w.normalization(gen.hbar()) - norm0).abs();
        if drift > 1e-4 {
            return Err(Error::NormDrift { drift, budget: 1e-4, t });
        }
        if step % cfg.stride == 0 || step == steps {
            record.push_row(t, &diags.row(&w)?);
        }
    }
    Ok(record)
}

fn rk4_step_wigner<F>(y: &WignerField, dt: f64, rhs: F) -> Result<WignerField>
where
    F: Fn(&WignerField) -> Result<WignerField>,
{
    let k1 = rhs(y)?;
    let mut y2 = y.clone();
    axpy_w(&mut y2, 0.5 * dt, &k1);
    let k2 = rhs(&y2)?;
    let mut y3 = y.clone();
    axpy_w(&mut y3, 0.5 * dt, &k2);
    let k3 = rhs(&y3)?;
    let mut y4 = y.clone();
    axpy_w(&mut y4, dt, &k3);
    let k4 = rhs(&y4)?;
    let mut out = y.clone();
    axpy_w(&mut out, dt / 6.0, &k1);
    axpy_w(&mut out, dt / 3.0, &k2);
    axpy_w(&mut out, dt / 3.0, &k3);
    axpy_w(&mut out, dt / 6.0, &k4);
    Ok(out)
}

fn axpy_w(y: &mut WignerField, a: f64, x: &WignerField) {
    for (dst, src) in y.data.iter_mut().zip(x.data.iter()) {
        *dst += *src * a;
    }
}

/// `exp(sign t G) v0` through the dense matrix exponential.
pub fn exact_dense_propagate(
    v0: &[Complex64],
    g: &DenseGenerator,
    t: f64,
    sign: f64,
) -> Result<Vec<Complex64>> {
    let e = dense_exponential(g, t, sign)?;
    let dim = g.dim();
    let mut out = vec![Complex64::ZERO; dim];
    for i in 0..dim {
        let mut acc = Complex64::ZERO;
        for j in 0..dim {
            acc += e[[i, j]] * v0[j];
        }
        out[i] = acc;
    }
    Ok(out)
}

/// The dense propagator matrix `exp(sign t G)`. Callers reuse it across many
/// vectors; powers of a base step follow from the semigroup property.
pub fn dense_exponential(g: &DenseGenerator, t: f64, sign: f64) -> Result<CMat> {
    let scaled = g.matrix.mapv(|z| z * Complex64::new(sign * t, 0.0));
    expm(&scaled)
}

/// Residual of the exponential flow: `|| (v(t+dt) - v(t-dt))/(2 dt) - sign G v(t) ||_max`
/// with the derivative taken through the semigroup itself.
pub fn dense_flow_residual(g: &DenseGenerator, t: f64, sign: f64, v0: &[Complex64]) -> Result<f64> {
    let delta = 1e-5;
    let v_t = exact_dense_propagate(v0, g, t, sign)?;
    let plus = exact_dense_propagate(&v_t, g, delta, sign)?;
    let minus = exact_dense_propagate(&v_t, g, -delta, sign)?;
    let gv = g.apply_flat(&v_t);
    let mut err = 0.0_f64;
    for i in 0..v0.len() {
        let fd = (plus[i] - minus[i]) / (2.0 * delta);
        err = err.max((fd - gv[i] * sign).norm());
    }
    Ok(err)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::DerivScheme;
    use crate::grid::{PhaseSpaceGrid, SpatialGrid};
    use crate::hamiltonian::{build_hamiltonian, KineticScheme};
    use crate::potential::Potential;
    use crate::state::{uncorrelated_pure_state, ClassicalPhasePoint, WaveFunction};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn oracle_gen(phi: Potential) -> GeneratorConfigRep {
        let q = SpatialGrid::periodic(-4.0, 4.0, 6).unwrap();
        let p = SpatialGrid::periodic(-4.0, 4.0, 6).unwrap();
        let pgrid = PhaseSpaceGrid::new(q, p).unwrap();
        let qgrid = SpatialGrid::periodic(-6.0, 6.0, 5).unwrap();
        let h = build_hamiltonian(&pgrid, &qgrid, &phi, 1.0, KineticScheme::FiniteDifference)
            .unwrap();
        GeneratorConfigRep::new(h, DerivScheme::Central2).unwrap()
    }

    fn random_hermitian(gen: &GeneratorConfigRep, role: Role, seed: u64) -> HybridDensityField {
        let pg = gen.hamiltonian().pgrid();
        let qg = gen.hamiltonian().qgrid();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut f = HybridDensityField::zeros(pg, qg, role);
        for v in f.data.iter_mut() {
            *v = Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
        }
        f.resymmetrize();
        f
    }

    fn smooth_state(gen: &GeneratorConfigRep) -> HybridDensityField {
        let pg = gen.hamiltonian().pgrid();
        let qg = gen.hamiltonian().qgrid();
        let psi = WaveFunction::gaussian(qg, 0.0, 1.2, 0.2, 1.0).unwrap();
        uncorrelated_pure_state(
            pg,
            ClassicalPhasePoint { q: 0.0, p: 0.5 },
            &psi,
            (2.5 * pg.q().spacing(), 2.5 * pg.p().spacing()),
        )
        .unwrap()
    }

    #[test]
    fn guard_rejects_large_steps() {
        let gen = oracle_gen(Potential::Zero);
        let cfg = IntegratorConfig { dt: 10.0, t_final: 10.0, ..Default::default() };
        let d = smooth_state(&gen);
        assert!(matches!(propagate_state(&d, &gen, &cfg), Err(Error::CflViolation { .. })));
    }

    #[test]
    fn hamiltonian_observable_is_stationary() {
        // Observable-picture flow leaves H fixed up to the truncation
        // residual of the classical stencils; measured away from the seam
        // rows and before seam garbage can be transported in.
        let q = SpatialGrid::periodic(-4.0, 4.0, 16).unwrap();
        let p = SpatialGrid::periodic(-4.0, 4.0, 16).unwrap();
        let pgrid = PhaseSpaceGrid::new(q, p).unwrap();
        let qgrid = SpatialGrid::periodic(-6.0, 6.0, 8).unwrap();
        let phi = Potential::gaussian_bump(1.0, 0.8).unwrap();
        let h = build_hamiltonian(&pgrid, &qgrid, &phi, 1.0, KineticScheme::FiniteDifference)
            .unwrap();
        let gen = GeneratorConfigRep::new(h, DerivScheme::Central2).unwrap();
        let h_field = hamiltonian_observable(gen.hamiltonian());
        let tol_disc = crate::generator::interior_max_abs(&gen.apply(&h_field).unwrap());
        let t = 0.4;
        let cfg = IntegratorConfig { dt: 2e-3, t_final: t, stride: 1000, ..Default::default() };
        let a_t = evolve_observable(&h_field, &gen, &cfg).unwrap();
        let mut dev = 0.0_f64;
        for iq in 3..13 {
            for ip in 3..13 {
                for a in 0..8 {
                    for b in 0..8 {
                        dev = dev.max((a_t.data[[iq, ip, a, b]] - h_field.data[[iq, ip, a, b]]).norm());
                    }
                }
            }
        }
        assert!(dev <= 2.0 * tol_disc * t, "deviation {dev} vs tol_disc*t {}", tol_disc * t);
    }

    #[test]
    fn free_position_observable_moves_linearly() {
        // On a bounded quantum grid the free flow is exactly A(t) = q + t p.
        let q = SpatialGrid::periodic(-4.0, 4.0, 4).unwrap();
        let p = SpatialGrid::periodic(-4.0, 4.0, 4).unwrap();
        let pgrid = PhaseSpaceGrid::new(q, p).unwrap();
        let qgrid = SpatialGrid::bounded(-6.0, 6.0, 16).unwrap();
        let h = build_hamiltonian(&pgrid, &qgrid, &Potential::Zero, 1.0, KineticScheme::FiniteDifference)
            .unwrap();
        let gen = GeneratorConfigRep::new(h, DerivScheme::Central2).unwrap();
        let q_obs = quantum_observable(&pgrid, &qgrid, &position_operator(&qgrid));
        let p_op =
            crate::hamiltonian::momentum_operator(&qgrid, KineticScheme::FiniteDifference, 1.0)
                .unwrap();
        let t_final = 0.1;
        let cfg = IntegratorConfig { dt: 1e-3, t_final, stride: 50, ..Default::default() };
        let a_t = evolve_observable(&q_obs, &gen, &cfg).unwrap();
        // away from the grid ends, where the truncated stencils of p and h_q
        // fail to commute
        let mut err = 0.0_f64;
        for iq in 0..4 {
            for ip in 0..4 {
                for a in 4..12 {
                    for b in 4..12 {
                        let expected = q_obs.data[[iq, ip, a, b]] + p_op[[a, b]] * t_final;
                        err = err.max((a_t.data[[iq, ip, a, b]] - expected).norm());
                    }
                }
            }
        }
        assert!(err < 1e-12, "free motion error {err}");
    }

    #[test]
    fn rk4_matches_dense_exponential_at_fourth_order() {
        let gen = oracle_gen(Potential::harmonic(1.0).unwrap());
        let dense = gen.assemble_dense(4096).unwrap();
        let t = 0.2;
        let e_mat = dense_exponential(&dense, t, 1.0).unwrap();
        let error_at = |dt: f64, seed: u64| -> f64 {
            let a0 = random_hermitian(&gen, Role::Observable, seed);
            let cfg = IntegratorConfig { dt, t_final: t, stride: 1000, ..Default::default() };
            let a_rk = evolve_observable(&a0, &gen, &cfg).unwrap();
            let v0 = dense.flatten(&a0);
            let dim = dense.dim();
            let mut err = 0.0_f64;
            for (i, x) in a_rk.data.iter().enumerate() {
                let mut exact = Complex64::ZERO;
                for j in 0..dim {
                    exact += e_mat[[i, j]] * v0[j];
                }
                err = err.max((x - exact).norm());
            }
            err
        };
        for seed in 0..3 {
            let e1 = error_at(0.005, seed);
            let e2 = error_at(0.0025, seed);
            let ratio = e1 / e2;
            assert!(
                (12.0..=20.0).contains(&ratio),
                "seed {seed}: RK4 order ratio {ratio} (e1 {e1:.3e}, e2 {e2:.3e})"
            );
        }
    }

    #[test]
    fn dense_propagator_identity_and_semigroup() {
        let q = SpatialGrid::periodic(-4.0, 4.0, 4).unwrap();
        let p = SpatialGrid::periodic(-4.0, 4.0, 4).unwrap();
        let pgrid = PhaseSpaceGrid::new(q, p).unwrap();
        let qgrid = SpatialGrid::periodic(-6.0, 6.0, 4).unwrap();
        let h = build_hamiltonian(
            &pgrid,
            &qgrid,
            &Potential::harmonic(0.7).unwrap(),
            1.0,
            KineticScheme::FiniteDifference,
        )
        .unwrap();
        let gen = GeneratorConfigRep::new(h, DerivScheme::Central2).unwrap();
        let dense = gen.assemble_dense(4096).unwrap();
        let a0 = random_hermitian(&gen, Role::State, 3);
        let v0 = dense.flatten(&a0);
        // t = 0 is the identity
        let same = exact_dense_propagate(&v0, &dense, 0.0, -1.0).unwrap();
        let mut err = 0.0_f64;
        for (x, y) in v0.iter().zip(same.iter()) {
            err = err.max((x - y).norm());
        }
        assert!(err < 1e-12);
        // semigroup: prop(t1 + t2) = prop(t2) o prop(t1)
        let one_shot = exact_dense_propagate(&v0, &dense, 0.7, -1.0).unwrap();
        let first = exact_dense_propagate(&v0, &dense, 0.3, -1.0).unwrap();
        let two_shot = exact_dense_propagate(&first, &dense, 0.4, -1.0).unwrap();
        let mut err = 0.0_f64;
        let mut scale = 0.0_f64;
        for (x, y) in one_shot.iter().zip(two_shot.iter()) {
            err = err.max((x - y).norm());
            scale = scale.max(x.norm());
        }
        assert!(err <= 1e-10 * scale.max(1.0), "semigroup error {err}");
        // flow residual sampled at t
        let r = dense_flow_residual(&dense, 0.5, -1.0, &v0).unwrap();
        assert!(r < 1e-5, "flow residual {r}");
    }

    #[test]
    fn zero_coupling_product_state_stays_uncorrelated() {
        let gen = oracle_gen(Potential::Zero);
        let d0 = smooth_state(&gen);
        let cfg = IntegratorConfig { dt: 5e-3, t_final: 5.0, stride: 100, ..Default::default() };
        let record = propagate_state(&d0, &gen, &cfg).unwrap();
        let corr = record.column("corr_norm").unwrap();
        let max_corr = corr.iter().fold(0.0_f64, |m, v| m.max(*v));
        assert!(max_corr <= 1e-9, "correlation grew to {max_corr}");
        // normalization conserved to roundoff
        let norms = record.column("norm").unwrap();
        for v in norms {
            assert!((v - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn energy_conserved_under_state_propagation() {
        // Bounded coupling and a resolved, contained state: the mean energy
        // oscillates within the stencil truncation budget and never drifts
        // secularly. Unbounded couplings twist the kernel coherences at the
        // potential-difference rate and eventually outrun any fixed grid, so
        // the long-horizon energy statement belongs to bounded potentials.
        let q = SpatialGrid::periodic(-6.0, 6.0, 24).unwrap();
        let p = SpatialGrid::periodic(-6.0, 6.0, 24).unwrap();
        let pgrid = PhaseSpaceGrid::new(q, p).unwrap();
        let qgrid = SpatialGrid::periodic(-6.0, 6.0, 7).unwrap();
        let phi = Potential::gaussian_bump(1.0, 0.8).unwrap();
        let h = build_hamiltonian(&pgrid, &qgrid, &phi, 1.0, KineticScheme::FiniteDifference)
            .unwrap();
        let gen = GeneratorConfigRep::new(h, DerivScheme::Central2).unwrap();
        let psi = WaveFunction::gaussian(&qgrid, 0.0, 1.0, -0.2, 1.0).unwrap();
        let d0 = uncorrelated_pure_state(
            &pgrid,
            ClassicalPhasePoint { q: 0.0, p: 0.2 },
            &psi,
            (4.0 * pgrid.q().spacing(), 4.0 * pgrid.p().spacing()),
        )
        .unwrap();
        let cfg = IntegratorConfig { dt: 4e-3, t_final: 2.0, stride: 100, ..Default::default() };
        let record = propagate_state(&d0, &gen, &cfg).unwrap();
        let energy = record.column("energy").unwrap();
        let e0 = energy[0];
        let max_drift =
            energy.iter().fold(0.0_f64, |m, v| m.max((v - e0).abs() / e0.abs().max(1.0)));
        assert!(max_drift < 5e-3, "energy drift {max_drift}");
        let resym = record.column("resym").unwrap();
        assert!(resym.iter().all(|v| *v <= 1e-10 * d0.field_norm().max(1.0)));
    }

    #[test]
    fn rk4_energy_matches_dense_oracle() {
        // Residual integrator error in the energy column, measured against
        // the exact propagator of the same discrete generator.
        let gen = oracle_gen(Potential::harmonic(0.8).unwrap());
        let dense = gen.assemble_dense(4096).unwrap();
        let d0 = smooth_state(&gen);
        let h_obs = hamiltonian_observable(gen.hamiltonian());
        let vh = dense.flatten(&h_obs);
        let t_final = 1.0;
        let cfg = IntegratorConfig { dt: 2e-3, t_final, stride: 250, ..Default::default() };
        let record = propagate_state(&d0, &gen, &cfg).unwrap();
        let e_rk: Vec<f64> = record.column("energy").unwrap().to_vec();
        for (k, &t) in record.times.iter().enumerate() {
            let d_t = exact_dense_propagate(&dense.flatten(&d0), &dense, t, -1.0).unwrap();
            let e_exact = dense.pairing(&vh, &d_t).re;
            assert!(
                (e_rk[k] - e_exact).abs() <= 1e-6 * e_exact.abs().max(1.0),
                "t = {t}: rk4 energy {} vs dense {e_exact}",
                e_rk[k]
            );
        }
    }

    #[test]
    fn picture_duality_via_dense_and_rk4() {
        let q = SpatialGrid::periodic(-4.0, 4.0, 4).unwrap();
        let p = SpatialGrid::periodic(-4.0, 4.0, 4).unwrap();
        let pgrid = PhaseSpaceGrid::new(q, p).unwrap();
        let qgrid = SpatialGrid::periodic(-6.0, 6.0, 4).unwrap();
        let h = build_hamiltonian(
            &pgrid,
            &qgrid,
            &Potential::gaussian_bump(0.9, 0.8).unwrap(),
            1.0,
            KineticScheme::FiniteDifference,
        )
        .unwrap();
        let gen = GeneratorConfigRep::new(h, DerivScheme::Central2).unwrap();
        let dense = gen.assemble_dense(4096).unwrap();
        let ts = [0.1, 0.5, 1.0];
        let e_obs: Vec<CMat> =
            ts.iter().map(|&t| dense_exponential(&dense, t, 1.0).unwrap()).collect();
        let e_state: Vec<CMat> =
            ts.iter().map(|&t| dense_exponential(&dense, t, -1.0).unwrap()).collect();
        let matvec = |m: &CMat, v: &[Complex64]| -> Vec<Complex64> {
            (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[[i, j]] * v[j]).sum()).collect()
        };
        for seed in 0..10 {
            let a0 = random_hermitian(&gen, Role::Observable, 40 + seed);
            let d0 = random_hermitian(&gen, Role::State, 80 + seed);
            let va = dense.flatten(&a0);
            let vd = dense.flatten(&d0);
            for (k, &t) in ts.iter().enumerate() {
                let a_t = matvec(&e_obs[k], &va);
                let d_t = matvec(&e_state[k], &vd);
                let lhs = dense.pairing(&a_t, &vd);
                let rhs = dense.pairing(&va, &d_t);
                let tol = 1e-7 * lhs.norm().max(1.0);
                assert!((lhs - rhs).norm() <= tol, "dense duality at t={t}: {lhs} vs {rhs}");
            }
            // RK4 route
            let cfg = IntegratorConfig { dt: 0.01, t_final: 0.5, stride: 50, ..Default::default() };
            let a_rk = evolve_observable(&a0, &gen, &cfg).unwrap();
            let mut d_rk = d0.clone();
            for _ in 0..cfg.n_steps() {
                d_rk = rk4_step(&d_rk, cfg.dt, |y| {
                    let mut out = gen.apply(y)?;
                    for v in out.data.iter_mut() {
                        *v = -*v;
                    }
                    Ok(out)
                })
                .unwrap();
            }
            let lhs = dense.pairing(&dense.flatten(&a_rk), &vd);
            let rhs = dense.pairing(&va, &dense.flatten(&d_rk));
            assert!(
                (lhs - rhs).norm() <= 1e-5 * lhs.norm().max(1.0),
                "rk4 duality: {lhs} vs {rhs}"
            );
        }
    }

    #[test]
    fn marginal_after_free_evolution_matches_single_particle_flow() {
        // Zero coupling: the quantum marginal after hybrid evolution equals
        // the independently propagated von Neumann flow of the projector.
        let q = SpatialGrid::periodic(-4.0, 4.0, 4).unwrap();
        let p = SpatialGrid::periodic(-4.0, 4.0, 4).unwrap();
        let pgrid = PhaseSpaceGrid::new(q, p).unwrap();
        let qgrid = SpatialGrid::periodic(-8.0, 8.0, 16).unwrap();
        let hbar = 1.0;
        let h = build_hamiltonian(&pgrid, &qgrid, &Potential::Zero, hbar, KineticScheme::Spectral)
            .unwrap();
        let gen = GeneratorConfigRep::new(h.clone(), DerivScheme::Central2).unwrap();
        let psi = WaveFunction::gaussian(&qgrid, 0.0, 1.0, 0.4, hbar).unwrap();
        let d0 = uncorrelated_pure_state(
            &pgrid,
            ClassicalPhasePoint { q: 0.0, p: 0.0 },
            &psi,
            (2.0 * pgrid.q().spacing(), 2.0 * pgrid.p().spacing()),
        )
        .unwrap();
        let t_final = 1.0;
        let cfg = IntegratorConfig { dt: 2e-3, t_final, stride: 100, ..Default::default() };
        let mut final_state: Option<HybridDensityField> = None;
        propagate_state_observed(&d0, &gen, &cfg, |t, d| {
            if (t - t_final).abs() < 1e-12 {
                final_state = Some(d.clone());
            }
        })
        .unwrap();
        let rho_t = final_state.unwrap().marginal_quantum().unwrap();

        // independent single-particle route: exact spectral evolution of psi
        let mut spec: Vec<Complex64> = psi.amps.iter().copied().collect();
        let fft = crate::fourier::FftPair::new(16);
        fft.forward(&mut spec);
        for (f, z) in spec.iter_mut().enumerate() {
            let k = qgrid.fft_momenta(hbar)[f] / hbar;
            let e = hbar * hbar * k * k / 2.0;
            *z *= Complex64::from_polar(1.0, -e * t_final / hbar);
        }
        fft.inverse(&mut spec);
        let mut err = 0.0_f64;
        for a in 0..16 {
            for b in 0..16 {
                let expected = spec[a] * spec[b].conj();
                err = err.max((rho_t[[a, b]] - expected).norm());
            }
        }
        assert!(err < 1e-7, "marginal vs single-particle flow: {err}");
    }

    #[test]
    fn correlations_develop_under_coupling() {
        let gen = oracle_gen(Potential::gaussian_bump(1.0, 0.5).unwrap());
        let d0 = smooth_state(&gen);
        let cfg = IntegratorConfig { dt: 5e-3, t_final: 1.0, stride: 50, ..Default::default() };
        let record = propagate_state(&d0, &gen, &cfg).unwrap();
        let corr = record.column("corr_norm").unwrap();
        assert!(corr[0] < 1e-12);
        assert!(*corr.last().unwrap() > 1e-8 * 10.0, "correlations stayed at {}", corr.last().unwrap());
    }
}
