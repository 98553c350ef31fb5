//! qcdyn simulates the dynamics of a one-dimensional pair of interacting
//! particles, one classical and one quantum. The exact hybrid evolution is
//! integrated in two representations (configuration-space kernels and Wigner
//! symbols), in both the state picture and the observable picture, alongside
//! the uncorrelated approximations: the self-consistent Liouville/von Neumann
//! pair, Ehrenfest trajectories, and classical trajectories of the canonical
//! Wigner symbols. A dense matrix-exponential oracle on small grids backs the
//! structural claims (picture duality, conservation, factorization limits).

pub mod canonical;
pub mod error;
pub mod fourier;
pub mod grid;
pub mod hamiltonian;
pub mod linalg;
pub mod meanfield;
pub mod plot;
pub mod potential;
pub mod propagate;
pub mod run;
pub mod scenario;
pub mod snapshot;
pub mod table;
pub mod generator;
pub mod state;
pub mod wigner;

pub use error::{Error, Result};
pub use grid::{Boundary, PhaseSpaceGrid, SpatialGrid};
pub use hamiltonian::{build_hamiltonian, HybridHamiltonian, KineticScheme};
pub use potential::Potential;
pub use state::{
    mean_value, total_energy, uncorrelated_pure_state, ClassicalDistribution, ClassicalPhasePoint,
    HybridDensityField, Role, WaveFunction,
};
