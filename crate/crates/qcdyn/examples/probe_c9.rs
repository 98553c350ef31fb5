use qcdyn::run::run;
use qcdyn::scenario::{parse_scenario, Method};
use qcdyn::potential::Potential;

const BASE: &str = "
[grids]
q_min = -7.5
q_max = 7.5
q_n = 30
p_min = -2.4
p_max = 2.4
p_n = 24
xi_min = -9.0
xi_max = 9.0
xi_n = 20

[model]
kinetic_scheme = spectral
classical_derivatives = spectral

[potential]
kind = gaussian_bump
v0 = 1.0
width = 0.5

[initial]
q0 = -1.0
p0 = 0.5
sigma_q = 1.0
sigma_p = 0.4
psi = gaussian
psi_center = 0.5
psi_width = 0.9
psi_momentum = 0.0

[integrator]
dt = 0.002
t_final = 2.0
stride = 100

[method]
kind = full_config
";

fn main() {
    let mut s = parse_scenario(BASE).unwrap();
    s.potential = Potential::Zero;
    let full = run(&s, None).unwrap();
    let mut s_e = s.clone();
    s_e.method = Method::Ehrenfest;
    let ehr = run(&s_e, None).unwrap();
    let t = full.times();
    let qf = full.column("q_c").unwrap();
    let qe = ehr.column("q_c").unwrap();
    let pf = full.column("p_c").unwrap();
    for k in (0..t.len()).step_by(2) {
        println!("t={:.1}  full q_c={:.6}  ehr q_c={:.6}  diff={:.3e}  full p_c={:.6}", t[k], qf[k], qe[k], (qf[k]-qe[k]).abs(), pf[k]);
    }
}
