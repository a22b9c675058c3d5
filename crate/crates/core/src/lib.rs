//! Lattice gas with reservoir coupling.
//!
//! A one-dimensional exclusion process lives on the sites `-N..=2N`. On the
//! middle third (`0..=N`) particles interact through nearest-neighbour
//! couplings with an energy `q` per occupied bond; the outer thirds are
//! simple symmetric exclusion reservoirs. The crate provides
//!
//! * [`model`] — configurations, the bond Hamiltonian, and all exchange rates;
//! * [`ensembles`] — transfer-matrix thermodynamics: pressures, densities,
//!   chemical potentials, free energies, and the bulk flux `Φ`;
//! * [`gibbs`] — exact (forward-filter / backward-sample) Gibbs samplers and
//!   enumeration oracles;
//! * [`kmc`] — event-driven simulation of the diffusively rescaled dynamics;
//! * [`observables`] — empirical density pairings, block densities, and
//!   interface diagnostics;
//! * [`pde`] — a conservative finite-volume solver for the macroscopic
//!   limit, with flux and chemical-potential matching at the interfaces.

pub mod ensembles;
mod fenwick;
pub mod gibbs;
pub mod kmc;
pub mod model;
pub mod observables;
pub mod pde;
pub mod stats;

/// Errors shared across the crate.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),
    #[error("site {site} outside [{min}, {max}]")]
    SiteOutOfRange { site: i64, min: i64, max: i64 },
    #[error("density {value} outside the open unit interval")]
    DensityOutOfRange { value: f64 },
    #[error("particle number {n} outside [0, {max}]")]
    CountOutOfRange { n: usize, max: usize },
    #[error("block B_{l}({center}) not contained in the lattice")]
    BlockOutOfLattice { center: i64, l: usize },
    #[error("window parameter k={k} invalid for N={n}: {reason}")]
    InvalidWindow { k: usize, n: usize, reason: &'static str },
    #[error("mismatched grids: {0}")]
    GridMismatch(String),
    #[error("time step {dt} exceeds the stable limit {max}")]
    CflViolation { dt: f64, max: f64 },
    #[error("total mass {value} outside the admissible range (0, 3)")]
    MassOutOfRange { value: f64 },
    #[error("test function does not vanish at u={at} (value {value})")]
    AnchorViolation { at: f64, value: f64 },
    #[error("snapshot times invalid: {0}")]
    BadSnapshots(String),
}

pub type Result<T> = std::result::Result<T, Error>;
