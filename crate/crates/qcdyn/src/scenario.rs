//! Scenario files: a line-oriented `key = value` grammar with `[section]`
//! headers. Unknown keys and sections fail loudly. Parsing materializes every
//! default, and `dump` emits the normalized form in canonical order, so
//! `parse(dump(parse(text)))` is the identity on the parsed value.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::generator::DerivScheme;
use crate::grid::{Boundary, PhaseSpaceGrid, SpatialGrid};
use crate::hamiltonian::KineticScheme;
use crate::potential::{Potential, TabulatedPotential};

#[derive(Debug, Clone, PartialEq)]
pub enum Method {
    FullConfig,
    FullWigner,
    MeanField,
    Ehrenfest,
    Symbols,
    OracleDense,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::FullConfig => "full_config",
            Method::FullWigner => "full_wigner",
            Method::MeanField => "meanfield",
            Method::Ehrenfest => "ehrenfest",
            Method::Symbols => "symbols",
            Method::OracleDense => "oracle_dense",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PsiSpec {
    Gaussian { center: f64, width: f64, momentum: f64 },
    Samples { re: Vec<f64>, im: Vec<f64> },
    File { path: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    // [grids]
    pub q_min: f64,
    pub q_max: f64,
    pub q_n: usize,
    pub p_min: f64,
    pub p_max: f64,
    pub p_n: usize,
    pub xi_min: f64,
    pub xi_max: f64,
    pub xi_n: usize,
    pub boundary: Boundary,
    // [model]
    pub hbar: f64,
    pub kinetic_scheme: KineticScheme,
    pub classical_derivatives: DerivScheme,
    // [potential]
    pub potential: Potential,
    // [initial]
    pub q0: f64,
    pub p0: f64,
    /// None means the documented default of 3 grid cells per axis.
    pub sigma_q: Option<f64>,
    pub sigma_p: Option<f64>,
    pub psi: PsiSpec,
    // [method]
    pub method: Method,
    pub oracle_cap: usize,
    pub support_threshold: f64,
    // [integrator]
    pub dt: f64,
    pub t_final: f64,
    pub stride: usize,
    pub safety: f64,
    pub rescale_norm: bool,
    // [observables]
    pub track: Vec<String>,
    // [output]
    pub csv: String,
    pub snapshot_times: Vec<f64>,
    pub snapshot_prefix: String,
    pub seed: u64,
}

pub const DEFAULT_TRACK: [&str; 7] = ["norm", "energy", "q_c", "p_c", "q_q", "p_q", "corr_norm"];

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            q_min: -6.0,
            q_max: 6.0,
            q_n: 24,
            p_min: -6.0,
            p_max: 6.0,
            p_n: 24,
            xi_min: -8.0,
            xi_max: 8.0,
            xi_n: 32,
            boundary: Boundary::Periodic,
            hbar: 1.0,
            kinetic_scheme: KineticScheme::Spectral,
            classical_derivatives: DerivScheme::Central2,
            potential: Potential::Zero,
            q0: 0.0,
            p0: 0.0,
            sigma_q: None,
            sigma_p: None,
            psi: PsiSpec::Gaussian { center: 0.0, width: 1.0, momentum: 0.0 },
            method: Method::Ehrenfest,
            oracle_cap: 4096,
            support_threshold: 1e-12,
            dt: 1e-3,
            t_final: 1.0,
            stride: 10,
            safety: 0.5,
            rescale_norm: false,
            track: DEFAULT_TRACK.iter().map(|s| s.to_string()).collect(),
            csv: "out.csv".to_string(),
            snapshot_times: Vec::new(),
            snapshot_prefix: "snapshot".to_string(),
            seed: 0,
        }
    }
}

impl Scenario {
    pub fn sigma(&self, pgrid: &PhaseSpaceGrid) -> (f64, f64) {
        (
            self.sigma_q.unwrap_or(3.0 * pgrid.q().spacing()),
            self.sigma_p.unwrap_or(3.0 * pgrid.p().spacing()),
        )
    }

    pub fn classical_grid(&self) -> Result<PhaseSpaceGrid> {
        PhaseSpaceGrid::new(
            SpatialGrid::periodic(self.q_min, self.q_max, self.q_n)?,
            SpatialGrid::periodic(self.p_min, self.p_max, self.p_n)?,
        )
    }

    pub fn quantum_grid(&self) -> Result<SpatialGrid> {
        SpatialGrid::new(self.xi_min, self.xi_max, self.xi_n, self.boundary)
    }

    /// Up-front validation of method-specific constraints.
    pub fn validate(&self) -> Result<()> {
        let pgrid = self.classical_grid().map_err(|e| Error::Validation {
            key: "grids".into(),
            msg: e.to_string(),
        })?;
        let qgrid = self.quantum_grid().map_err(|e| Error::Validation {
            key: "grids.xi".into(),
            msg: e.to_string(),
        })?;
        if !(self.hbar > 0.0) {
            return Err(Error::Validation {
                key: "model.hbar".into(),
                msg: format!("must be positive, got {}", self.hbar),
            });
        }
        if self.kinetic_scheme == KineticScheme::Spectral && !qgrid.is_periodic() {
            return Err(Error::Validation {
                key: "model.kinetic_scheme".into(),
                msg: "spectral kinetic scheme needs boundary = periodic".into(),
            });
        }
        match self.method {
            Method::FullWigner | Method::Symbols => {
                if !qgrid.is_periodic() || qgrid.len() % 2 == 0 {
                    return Err(Error::Validation {
                        key: "method.kind".into(),
                        msg: "Wigner-representation methods need a periodic quantum grid with an odd number of points".into(),
                    });
                }
            }
            Method::OracleDense => {
                let dim = self.q_n * self.p_n * self.xi_n * self.xi_n;
                if dim > self.oracle_cap {
                    return Err(Error::Validation {
                        key: "method.oracle_cap".into(),
                        msg: format!("flattened dimension {dim} exceeds cap {}", self.oracle_cap),
                    });
                }
            }
            _ => {}
        }
        let (sq, sp) = self.sigma(&pgrid);
        if sq < 2.0 * pgrid.q().spacing() || sp < 2.0 * pgrid.p().spacing() {
            return Err(Error::Validation {
                key: "initial.sigma".into(),
                msg: format!("smearing ({sq}, {sp}) narrower than two grid cells"),
            });
        }
        if let PsiSpec::Samples { re, im } = &self.psi {
            if re.len() != self.xi_n || im.len() != self.xi_n {
                return Err(Error::Validation {
                    key: "initial.psi_re".into(),
                    msg: format!(
                        "sample count ({}, {}) does not match xi_n = {}",
                        re.len(),
                        im.len(),
                        self.xi_n
                    ),
                });
            }
        }
        if !(self.dt > 0.0) || self.t_final < 0.0 || self.stride == 0 {
            return Err(Error::Validation {
                key: "integrator".into(),
                msg: "need dt > 0, t_final >= 0, stride >= 1".into(),
            });
        }
        let known = ["norm", "energy", "q_c", "p_c", "q_q", "p_q", "corr_norm", "resym"];
        for name in &self.track {
            if !known.contains(&name.as_str()) {
                return Err(Error::Validation {
                    key: "observables.track".into(),
                    msg: format!("unknown observable `{name}`"),
                });
            }
        }
        Ok(())
    }

    /// Normalized dump: every key explicit, canonical order, shortest
    /// round-trip float formatting.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let f = |v: f64| format!("{v:?}");
        out.push_str("[grids]\n");
        out.push_str(&format!("q_min = {}\n", f(self.q_min)));
        out.push_str(&format!("q_max = {}\n", f(self.q_max)));
        out.push_str(&format!("q_n = {}\n", self.q_n));
        out.push_str(&format!("p_min = {}\n", f(self.p_min)));
        out.push_str(&format!("p_max = {}\n", f(self.p_max)));
        out.push_str(&format!("p_n = {}\n", self.p_n));
        out.push_str(&format!("xi_min = {}\n", f(self.xi_min)));
        out.push_str(&format!("xi_max = {}\n", f(self.xi_max)));
        out.push_str(&format!("xi_n = {}\n", self.xi_n));
        out.push_str(&format!(
            "boundary = {}\n",
            match self.boundary {
                Boundary::Periodic => "periodic",
                Boundary::Bounded => "bounded",
            }
        ));
        out.push_str("\n[model]\n");
        out.push_str(&format!("hbar = {}\n", f(self.hbar)));
        out.push_str(&format!(
            "kinetic_scheme = {}\n",
            match self.kinetic_scheme {
                KineticScheme::FiniteDifference => "fd",
                KineticScheme::Spectral => "spectral",
            }
        ));
        out.push_str(&format!(
            "classical_derivatives = {}\n",
            match self.classical_derivatives {
                DerivScheme::Central2 => "fd2",
                DerivScheme::Spectral => "spectral",
            }
        ));
        out.push_str("\n[potential]\n");
        match &self.potential {
            Potential::Zero => out.push_str("kind = zero\n"),
            Potential::Harmonic { k } => {
                out.push_str("kind = harmonic\n");
                out.push_str(&format!("k = {}\n", f(*k)));
            }
            Potential::Bilinear { c } => {
                out.push_str("kind = bilinear\n");
                out.push_str(&format!("c = {}\n", f(*c)));
            }
            Potential::GaussianBump { v0, width } => {
                out.push_str("kind = gaussian_bump\n");
                out.push_str(&format!("v0 = {}\n", f(*v0)));
                out.push_str(&format!("width = {}\n", f(*width)));
            }
            Potential::Tabulated(t) => {
                out.push_str("kind = tabulated\n");
                let (r_min, r_max) = t.range();
                out.push_str(&format!("r_min = {}\n", f(r_min)));
                out.push_str(&format!("r_max = {}\n", f(r_max)));
                let vals: Vec<String> = t.values().iter().map(|v| f(*v)).collect();
                out.push_str(&format!("values = {}\n", vals.join(" ")));
            }
        }
        out.push_str("\n[initial]\n");
        out.push_str(&format!("q0 = {}\n", f(self.q0)));
        out.push_str(&format!("p0 = {}\n", f(self.p0)));
        match self.sigma_q {
            Some(v) => out.push_str(&format!("sigma_q = {}\n", f(v))),
            None => out.push_str("sigma_q = auto\n"),
        }
        match self.sigma_p {
            Some(v) => out.push_str(&format!("sigma_p = {}\n", f(v))),
            None => out.push_str("sigma_p = auto\n"),
        }
        match &self.psi {
            PsiSpec::Gaussian { center, width, momentum } => {
                out.push_str("psi = gaussian\n");
                out.push_str(&format!("psi_center = {}\n", f(*center)));
                out.push_str(&format!("psi_width = {}\n", f(*width)));
                out.push_str(&format!("psi_momentum = {}\n", f(*momentum)));
            }
            PsiSpec::Samples { re, im } => {
                out.push_str("psi = samples\n");
                let rs: Vec<String> = re.iter().map(|v| f(*v)).collect();
                let is: Vec<String> = im.iter().map(|v| f(*v)).collect();
                out.push_str(&format!("psi_re = {}\n", rs.join(" ")));
                out.push_str(&format!("psi_im = {}\n", is.join(" ")));
            }
            PsiSpec::File { path } => {
                out.push_str("psi = file\n");
                out.push_str(&format!("psi_file = {path}\n"));
            }
        }
        out.push_str("\n[method]\n");
        out.push_str(&format!("kind = {}\n", self.method.as_str()));
        out.push_str(&format!("oracle_cap = {}\n", self.oracle_cap));
        out.push_str(&format!("support_threshold = {}\n", f(self.support_threshold)));
        out.push_str("\n[integrator]\n");
        out.push_str(&format!("dt = {}\n", f(self.dt)));
        out.push_str(&format!("t_final = {}\n", f(self.t_final)));
        out.push_str(&format!("stride = {}\n", self.stride));
        out.push_str(&format!("safety = {}\n", f(self.safety)));
        out.push_str(&format!("rescale_norm = {}\n", self.rescale_norm));
        out.push_str("\n[observables]\n");
        out.push_str(&format!("track = {}\n", self.track.join(", ")));
        out.push_str("\n[output]\n");
        out.push_str(&format!("csv = {}\n", self.csv));
        if self.snapshot_times.is_empty() {
            out.push_str("snapshot_times = none\n");
        } else {
            let ts: Vec<String> = self.snapshot_times.iter().map(|v| f(*v)).collect();
            out.push_str(&format!("snapshot_times = {}\n", ts.join(" ")));
        }
        out.push_str(&format!("snapshot_prefix = {}\n", self.snapshot_prefix));
        out.push_str(&format!("seed = {}\n", self.seed));
        out
    }

    /// FNV-1a hash of the normalized dump; embedded in outputs so a table can
    /// be traced back to its exact configuration.
    pub fn hash(&self) -> u64 {
        let mut h: u64 = 0xcbf29ce484222325;
        for b in self.dump().as_bytes() {
            h ^= *b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
        h
    }
}

fn parse_f64(key: &str, line: usize, v: &str) -> Result<f64> {
    v.parse::<f64>().map_err(|_| Error::Parse {
        line,
        msg: format!("value for `{key}` is not a number: `{v}`"),
    })
}

fn parse_usize(key: &str, line: usize, v: &str) -> Result<usize> {
    v.parse::<usize>().map_err(|_| Error::Parse {
        line,
        msg: format!("value for `{key}` is not a count: `{v}`"),
    })
}

fn parse_list(key: &str, line: usize, v: &str) -> Result<Vec<f64>> {
    v.split_whitespace().map(|tok| parse_f64(key, line, tok)).collect()
}

/// Parse scenario text. Unknown keys are errors, never silently ignored.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    // collect raw key/value pairs first
    let mut section = String::new();
    let mut raw: BTreeMap<String, (usize, String)> = BTreeMap::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw_line.find('#') {
            Some(pos) => &raw_line[..pos],
            None => raw_line,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            section = name.trim().to_string();
            let known = ["grids", "model", "potential", "initial", "method", "integrator", "observables", "output"];
            if !known.contains(&section.as_str()) {
                return Err(Error::Parse { line: line_no, msg: format!("unknown section `[{section}]`") });
            }
            continue;
        }
        let Some(eq) = line.find('=') else {
            return Err(Error::Parse { line: line_no, msg: format!("expected `key = value`, got `{line}`") });
        };
        let key = line[..eq].trim();
        let value = line[eq + 1..].trim();
        if section.is_empty() {
            return Err(Error::Parse { line: line_no, msg: format!("key `{key}` before any [section]") });
        }
        let full = format!("{section}.{key}");
        if raw.insert(full.clone(), (line_no, value.to_string())).is_some() {
            return Err(Error::Parse { line: line_no, msg: format!("duplicate key `{full}`") });
        }
    }

    let mut s = Scenario::default();
    let mut take = |key: &str| raw.remove(key);

    if let Some((l, v)) = take("grids.q_min") {
        s.q_min = parse_f64("grids.q_min", l, &v)?;
    }
    if let Some((l, v)) = take("grids.q_max") {
        s.q_max = parse_f64("grids.q_max", l, &v)?;
    }
    if let Some((l, v)) = take("grids.q_n") {
        s.q_n = parse_usize("grids.q_n", l, &v)?;
    }
    if let Some((l, v)) = take("grids.p_min") {
        s.p_min = parse_f64("grids.p_min", l, &v)?;
    }
    if let Some((l, v)) = take("grids.p_max") {
        s.p_max = parse_f64("grids.p_max", l, &v)?;
    }
    if let Some((l, v)) = take("grids.p_n") {
        s.p_n = parse_usize("grids.p_n", l, &v)?;
    }
    if let Some((l, v)) = take("grids.xi_min") {
        s.xi_min = parse_f64("grids.xi_min", l, &v)?;
    }
    if let Some((l, v)) = take("grids.xi_max") {
        s.xi_max = parse_f64("grids.xi_max", l, &v)?;
    }
    if let Some((l, v)) = take("grids.xi_n") {
        s.xi_n = parse_usize("grids.xi_n", l, &v)?;
    }
    if let Some((l, v)) = take("grids.boundary") {
        s.boundary = match v.as_str() {
            "periodic" => Boundary::Periodic,
            "bounded" => Boundary::Bounded,
            other => {
                return Err(Error::Parse { line: l, msg: format!("boundary must be periodic|bounded, got `{other}`") })
            }
        };
    }
    if let Some((l, v)) = take("model.hbar") {
        s.hbar = parse_f64("model.hbar", l, &v)?;
    }
    if let Some((l, v)) = take("model.kinetic_scheme") {
        s.kinetic_scheme = match v.as_str() {
            "fd" => KineticScheme::FiniteDifference,
            "spectral" => KineticScheme::Spectral,
            other => {
                return Err(Error::Parse { line: l, msg: format!("kinetic_scheme must be fd|spectral, got `{other}`") })
            }
        };
    }
    if let Some((l, v)) = take("model.classical_derivatives") {
        s.classical_derivatives = match v.as_str() {
            "fd2" => DerivScheme::Central2,
            "spectral" => DerivScheme::Spectral,
            other => {
                return Err(Error::Parse {
                    line: l,
                    msg: format!("classical_derivatives must be fd2|spectral, got `{other}`"),
                })
            }
        };
    }

    let kind = take("potential.kind");
    let k = take("potential.k");
    let c = take("potential.c");
    let v0 = take("potential.v0");
    let width = take("potential.width");
    let r_min = take("potential.r_min");
    let r_max = take("potential.r_max");
    let values = take("potential.values");
    if let Some((l, v)) = kind {
        s.potential = match v.as_str() {
            "zero" => Potential::Zero,
            "harmonic" => {
                let (lk, vk) = k.clone().ok_or(Error::Parse { line: l, msg: "harmonic needs `k`".into() })?;
                Potential::harmonic(parse_f64("potential.k", lk, &vk)?)
                    .map_err(|e| Error::Parse { line: lk, msg: e.to_string() })?
            }
            "bilinear" => {
                let (lc, vc) = c.clone().ok_or(Error::Parse { line: l, msg: "bilinear needs `c`".into() })?;
                Potential::Bilinear { c: parse_f64("potential.c", lc, &vc)? }
            }
            "gaussian_bump" => {
                let (l0, v0s) = v0.clone().ok_or(Error::Parse { line: l, msg: "gaussian_bump needs `v0`".into() })?;
                let (lw, vw) = width.clone().ok_or(Error::Parse { line: l, msg: "gaussian_bump needs `width`".into() })?;
                Potential::gaussian_bump(
                    parse_f64("potential.v0", l0, &v0s)?,
                    parse_f64("potential.width", lw, &vw)?,
                )
                .map_err(|e| Error::Parse { line: lw, msg: e.to_string() })?
            }
            "tabulated" => {
                let (la, va) = r_min.clone().ok_or(Error::Parse { line: l, msg: "tabulated needs `r_min`".into() })?;
                let (lb, vb) = r_max.clone().ok_or(Error::Parse { line: l, msg: "tabulated needs `r_max`".into() })?;
                let (lv, vv) = values.clone().ok_or(Error::Parse { line: l, msg: "tabulated needs `values`".into() })?;
                Potential::Tabulated(
                    TabulatedPotential::new(
                        parse_f64("potential.r_min", la, &va)?,
                        parse_f64("potential.r_max", lb, &vb)?,
                        parse_list("potential.values", lv, &vv)?,
                    )
                    .map_err(|e| Error::Parse { line: lv, msg: e.to_string() })?,
                )
            }
            other => return Err(Error::Parse { line: l, msg: format!("unknown potential kind `{other}`") }),
        };
        // reject leftovers that do not belong to the chosen kind
        let allowed: &[&str] = match &s.potential {
            Potential::Zero => &[],
            Potential::Harmonic { .. } => &["potential.k"],
            Potential::Bilinear { .. } => &["potential.c"],
            Potential::GaussianBump { .. } => &["potential.v0", "potential.width"],
            Potential::Tabulated(_) => &["potential.r_min", "potential.r_max", "potential.values"],
        };
        for (name, opt) in [
            ("potential.k", &k),
            ("potential.c", &c),
            ("potential.v0", &v0),
            ("potential.width", &width),
            ("potential.r_min", &r_min),
            ("potential.r_max", &r_max),
            ("potential.values", &values),
        ] {
            if let Some((l, _)) = opt {
                if !allowed.contains(&name) {
                    return Err(Error::Parse {
                        line: *l,
                        msg: format!("key `{name}` does not apply to this potential kind"),
                    });
                }
            }
        }
    } else {
        for (name, opt) in [("potential.k", &k), ("potential.c", &c), ("potential.v0", &v0), ("potential.width", &width), ("potential.r_min", &r_min), ("potential.r_max", &r_max), ("potential.values", &values)] {
            if let Some((l, _)) = opt {
                return Err(Error::Parse { line: *l, msg: format!("`{name}` given without `potential.kind`") });
            }
        }
    }

    if let Some((l, v)) = take("initial.q0") {
        s.q0 = parse_f64("initial.q0", l, &v)?;
    }
    if let Some((l, v)) = take("initial.p0") {
        s.p0 = parse_f64("initial.p0", l, &v)?;
    }
    if let Some((l, v)) = take("initial.sigma_q") {
        s.sigma_q = if v == "auto" { None } else { Some(parse_f64("initial.sigma_q", l, &v)?) };
    }
    if let Some((l, v)) = take("initial.sigma_p") {
        s.sigma_p = if v == "auto" { None } else { Some(parse_f64("initial.sigma_p", l, &v)?) };
    }
    let psi_kind = take("initial.psi");
    let psi_center = take("initial.psi_center");
    let psi_width = take("initial.psi_width");
    let psi_momentum = take("initial.psi_momentum");
    let psi_re = take("initial.psi_re");
    let psi_im = take("initial.psi_im");
    let psi_file = take("initial.psi_file");
    match psi_kind {
        None => {
            for (name, opt) in [("initial.psi_center", &psi_center), ("initial.psi_width", &psi_width), ("initial.psi_momentum", &psi_momentum), ("initial.psi_re", &psi_re), ("initial.psi_im", &psi_im), ("initial.psi_file", &psi_file)] {
                if let Some((l, _)) = opt {
                    return Err(Error::Parse { line: *l, msg: format!("`{name}` given without `initial.psi`") });
                }
            }
        }
        Some((l, v)) => match v.as_str() {
            "gaussian" => {
                let mut center = 0.0;
                let mut width = 1.0;
                let mut momentum = 0.0;
                if let Some((lc, vc)) = psi_center {
                    center = parse_f64("initial.psi_center", lc, &vc)?;
                }
                if let Some((lw, vw)) = psi_width {
                    width = parse_f64("initial.psi_width", lw, &vw)?;
                }
                if let Some((lm, vm)) = psi_momentum {
                    momentum = parse_f64("initial.psi_momentum", lm, &vm)?;
                }
                for (name, opt) in [("initial.psi_re", &psi_re), ("initial.psi_im", &psi_im), ("initial.psi_file", &psi_file)] {
                    if let Some((lx, _)) = opt {
                        return Err(Error::Parse { line: *lx, msg: format!("`{name}` does not apply to psi = gaussian") });
                    }
                }
                s.psi = PsiSpec::Gaussian { center, width, momentum };
            }
            "samples" => {
                let (lr, vr) = psi_re.ok_or(Error::Parse { line: l, msg: "psi = samples needs `psi_re`".into() })?;
                let (li, vi) = psi_im.ok_or(Error::Parse { line: l, msg: "psi = samples needs `psi_im`".into() })?;
                for (name, opt) in [("initial.psi_center", &psi_center), ("initial.psi_width", &psi_width), ("initial.psi_momentum", &psi_momentum), ("initial.psi_file", &psi_file)] {
                    if let Some((lx, _)) = opt {
                        return Err(Error::Parse { line: *lx, msg: format!("`{name}` does not apply to psi = samples") });
                    }
                }
                s.psi = PsiSpec::Samples {
                    re: parse_list("initial.psi_re", lr, &vr)?,
                    im: parse_list("initial.psi_im", li, &vi)?,
                };
            }
            "file" => {
                let (_, vf) = psi_file.ok_or(Error::Parse { line: l, msg: "psi = file needs `psi_file`".into() })?;
                for (name, opt) in [("initial.psi_center", &psi_center), ("initial.psi_width", &psi_width), ("initial.psi_momentum", &psi_momentum), ("initial.psi_re", &psi_re), ("initial.psi_im", &psi_im)] {
                    if let Some((lx, _)) = opt {
                        return Err(Error::Parse { line: *lx, msg: format!("`{name}` does not apply to psi = file") });
                    }
                }
                s.psi = PsiSpec::File { path: vf };
            }
            other => return Err(Error::Parse { line: l, msg: format!("psi must be gaussian|samples|file, got `{other}`") }),
        },
    }

    if let Some((l, v)) = take("method.kind") {
        s.method = match v.as_str() {
            "full_config" => Method::FullConfig,
            "full_wigner" => Method::FullWigner,
            "meanfield" => Method::MeanField,
            "ehrenfest" => Method::Ehrenfest,
            "symbols" => Method::Symbols,
            "oracle_dense" => Method::OracleDense,
            other => return Err(Error::Parse { line: l, msg: format!("unknown method kind `{other}`") }),
        };
    }
    if let Some((l, v)) = take("method.oracle_cap") {
        s.oracle_cap = parse_usize("method.oracle_cap", l, &v)?;
    }
    if let Some((l, v)) = take("method.support_threshold") {
        s.support_threshold = parse_f64("method.support_threshold", l, &v)?;
    }
    if let Some((l, v)) = take("integrator.dt") {
        s.dt = parse_f64("integrator.dt", l, &v)?;
    }
    if let Some((l, v)) = take("integrator.t_final") {
        s.t_final = parse_f64("integrator.t_final", l, &v)?;
    }
    if let Some((l, v)) = take("integrator.stride") {
        s.stride = parse_usize("integrator.stride", l, &v)?;
    }
    if let Some((l, v)) = take("integrator.safety") {
        s.safety = parse_f64("integrator.safety", l, &v)?;
    }
    if let Some((l, v)) = take("integrator.rescale_norm") {
        s.rescale_norm = match v.as_str() {
            "true" => true,
            "false" => false,
            other => return Err(Error::Parse { line: l, msg: format!("rescale_norm must be true|false, got `{other}`") }),
        };
    }
    if let Some((_, v)) = take("observables.track") {
        s.track = v.split(',').map(|t| t.trim().to_string()).filter(|t| !t.is_empty()).collect();
    }
    if let Some((_, v)) = take("output.csv") {
        s.csv = v;
    }
    if let Some((l, v)) = take("output.snapshot_times") {
        s.snapshot_times = if v == "none" { Vec::new() } else { parse_list("output.snapshot_times", l, &v)? };
    }
    if let Some((_, v)) = take("output.snapshot_prefix") {
        s.snapshot_prefix = v;
    }
    if let Some((l, v)) = take("output.seed") {
        s.seed = v.parse::<u64>().map_err(|_| Error::Parse { line: l, msg: format!("seed must be an integer, got `{v}`") })?;
    }

    if let Some((key, (line, _))) = raw.into_iter().next() {
        return Err(Error::Parse { line, msg: format!("unknown key `{key}`") });
    }
    s.validate()?;
    Ok(s)
}
