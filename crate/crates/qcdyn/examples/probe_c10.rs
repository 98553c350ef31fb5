use qcdyn::run::run;
use qcdyn::scenario::{parse_scenario, Method};

const BASE: &str = "
[grids]
q_min = -7.0
q_max = 7.0
q_n = 16
p_min = -7.0
p_max = 7.0
p_n = 16
xi_min = -10.5
xi_max = 10.5
xi_n = 35

[model]
kinetic_scheme = spectral

[potential]
kind = harmonic
k = 0.5

[initial]
q0 = -0.5
p0 = 0.5
sigma_q = 1.75
sigma_p = 1.75
psi = gaussian
psi_center = 0.5
psi_width = 1.0
psi_momentum = 0.3

[integrator]
dt = 0.002
t_final = 1.0
stride = 50

[method]
kind = full_config
";

fn main() {
    let s_config = parse_scenario(BASE).unwrap();
    let mut s_wigner = s_config.clone();
    s_wigner.method = Method::FullWigner;
    let t_config = run(&s_config, None).unwrap();
    let t_wigner = run(&s_wigner, None).unwrap();
    let times = t_config.times();
    for col in ["norm", "energy", "q_c", "p_c", "q_q", "p_q"] {
        let a = t_config.column(col).unwrap();
        let b = t_wigner.column(col).unwrap();
        let series: Vec<String> = times.iter().zip(a.iter().zip(b.iter()))
            .step_by(2)
            .map(|(t, (x, y))| format!("{t:.1}:{:.1e}", (x - y).abs()))
            .collect();
        println!("{col}: {}", series.join(" "));
    }
}
