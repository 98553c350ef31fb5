use qcdyn::generator::{DerivScheme, GeneratorConfigRep, GeneratorWignerRep};
use qcdyn::grid::{PhaseSpaceGrid, SpatialGrid};
use qcdyn::hamiltonian::{build_hamiltonian, KineticScheme};
use qcdyn::potential::Potential;
use qcdyn::state::{uncorrelated_pure_state, ClassicalPhasePoint, WaveFunction, Role};
use qcdyn::wigner::{mean_value_wigner, symbol_observable, wigner_portrait, WignerAxes};

fn main() {
    let q = SpatialGrid::periodic(-9.0, 9.0, 28).unwrap();
    let p = SpatialGrid::periodic(-9.0, 9.0, 28).unwrap();
    let pgrid = PhaseSpaceGrid::new(q, p).unwrap();
    let qgrid = SpatialGrid::periodic(-10.5, 10.5, 27).unwrap();
    let hbar = 1.0;
    let phi = Potential::harmonic(0.5).unwrap();
    let h = build_hamiltonian(&pgrid, &qgrid, &phi, hbar, KineticScheme::Spectral).unwrap();
    let gen_c = GeneratorConfigRep::new(h.clone(), DerivScheme::Central2).unwrap();
    let axes = WignerAxes::for_quantum_grid(&pgrid, &qgrid, hbar).unwrap();
    let gen_w = GeneratorWignerRep::new(&h, &axes, DerivScheme::Central2).unwrap();
    let psi = WaveFunction::gaussian(&qgrid, 0.5, 1.0, 0.3, hbar).unwrap();
    let d0 = uncorrelated_pure_state(&pgrid, ClassicalPhasePoint { q: -0.5, p: 0.5 }, &psi, (1.3, 1.3)).unwrap();

    let lhs = wigner_portrait(&gen_c.apply(&d0).unwrap(), hbar).unwrap();
    let rhs = gen_w.apply(&wigner_portrait(&d0, hbar).unwrap()).unwrap();
    let mut max_err = 0.0_f64;
    let mut scale = 0.0_f64;
    let mut diff = lhs.clone();
    for ((d, a), b) in diff.data.iter_mut().zip(lhs.data.iter()).zip(rhs.data.iter()) {
        *d = a - b;
        max_err = max_err.max((a - b).abs());
        scale = scale.max(a.abs());
    }
    println!("pointwise: max_err {max_err:.3e}, scale {scale:.3e}, rel {:.3e}", max_err / scale);
    // mean-level rates: pair the difference with coordinate symbols
    let diff_state = diff.with_role(Role::State);
    for (name, f) in [
        ("q_q", (|_: f64, _: f64, q2: f64, _: f64| q2) as fn(f64, f64, f64, f64) -> f64),
        ("p_q", |_, _, _, p2| p2),
        ("q_c", |q1, _, _, _| q1),
        ("p_c", |_, p1, _, _| p1),
        ("norm", |_, _, _, _| 1.0),
    ] {
        let sym = symbol_observable(&axes, f);
        let rate = mean_value_wigner(&sym, &diff_state, hbar).unwrap();
        println!("d<{name}>/dt mismatch rate: {rate:.3e}");
    }
}
